"""Parameter search: sweep one parameter, re-optimizing K at each point.

Tuning any damping parameter shifts where the best K sits, so a fair
error-vs-parameter curve re-optimizes K for every grid value.  The
error-vs-K curve is empirically close to unimodal; K is therefore found
by golden-section search, with a five-point probe up front that falls
back to a plain grid scan whenever the three-point bracket shape is
violated.  Every evaluation is a full, independent replay from a fresh
engine, so results do not depend on evaluation order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Sequence

from .errors import InputError, InternalError
from .rating import PROFILES, RatingParams, RoundInput
from .replay import replay

# Sweepable RatingParams fields (anything but the starting rating).
SWEEP_TARGETS = ("k_factor", "weight_exponent", "variance_weight",
                 "perf_cap", "bonus", "inflation")

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

Objective = Callable[[RatingParams], float]


@dataclass(frozen=True)
class SweepSpec:
    target: str
    grid: tuple[float, ...]
    base: RatingParams = PROFILES["elo"]
    k_range: tuple[float, float] = (25.0, 1500.0)
    k_step: float = 5.0

    def __post_init__(self):
        if self.target not in SWEEP_TARGETS:
            raise InputError(f"unknown sweep target {self.target!r}; "
                             f"choose one of {', '.join(SWEEP_TARGETS)}")
        if not self.grid:
            raise InputError("sweep grid is empty")
        if any(b < a for a, b in zip(self.grid, self.grid[1:])):
            raise InputError("sweep grid must be sorted ascending")
        k_min, k_max = self.k_range
        if not (0.0 < k_min <= k_max and math.isfinite(k_max)):
            raise InputError("k_range must satisfy 0 < min <= max")
        if not (self.k_step > 0.0 and math.isfinite(self.k_step)):
            raise InputError("k_step must be positive")


@dataclass(frozen=True)
class SweepPoint:
    value: float
    best_k: float
    mean_error: float


@dataclass(frozen=True)
class SweepResult:
    target: str
    points: tuple[SweepPoint, ...]
    best: SweepPoint


def _replay_objective(rounds: Sequence[RoundInput]) -> Objective:
    def objective(params: RatingParams) -> float:
        error = replay(rounds, params, keep_observations=False).mean_error
        if error is None:
            raise InputError("history contains no rated entries")
        return error
    return objective


class _Cached:
    """Memoize an error curve and remember the best point seen."""

    __slots__ = ("f", "seen", "best_x", "best_y")

    def __init__(self, f: Callable[[float], float]):
        self.f = f
        self.seen: dict[float, float] = {}
        self.best_x: float | None = None
        self.best_y = math.inf

    def __call__(self, x: float) -> float:
        if x not in self.seen:
            y = self.f(x)
            self.seen[x] = y
            # Ties go to the smaller argument for determinism.
            if y < self.best_y or (y == self.best_y and
                                   (self.best_x is None or x < self.best_x)):
                self.best_x, self.best_y = x, y
        return self.seen[x]


def _grid_scan(f: _Cached, lo: float, hi: float, step: float) -> None:
    # i*step, not accumulation, so the grid does not drift.
    for i in range(int(math.floor((hi - lo) / step + 1e-9)) + 1):
        f(min(lo + i * step, hi))
    f(hi)


def _optimize_k(f: Callable[[float], float], k_min: float, k_max: float,
                k_step: float) -> tuple[float, float]:
    """Minimize an error-vs-K curve; returns (best K, its error).

    Golden-section on the probe-bracketed interval when the five-point
    probe looks unimodal, otherwise an exhaustive scan at ``k_step``.
    The reported optimum is always an actually evaluated point.
    """
    cached = _Cached(f)
    if k_max - k_min <= k_step:
        cached(k_min)
        cached(k_max)
        return cached.best_x, cached.best_y

    probes = [k_min + (k_max - k_min) * i / 4.0 for i in range(5)]
    values = [cached(x) for x in probes]
    low = min(range(5), key=lambda i: (values[i], probes[i]))
    unimodal = all(values[i] >= values[i + 1] for i in range(low)) and \
        all(values[i] <= values[i + 1] for i in range(low, 4))
    if not unimodal:
        _grid_scan(cached, k_min, k_max, k_step)
        return cached.best_x, cached.best_y

    a = probes[max(low - 1, 0)]
    b = probes[min(low + 1, 4)]
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    while b - a > k_step:
        if cached(c) <= cached(d):
            b, d = d, c
            c = b - _GOLDEN * (b - a)
        else:
            a, c = c, d
            d = a + _GOLDEN * (b - a)
    return cached.best_x, cached.best_y


def _sweep_point(spec: SweepSpec, value: float, objective: Objective) -> SweepPoint:
    if spec.target == "k_factor":
        params = replace(spec.base, k_factor=value)
        return SweepPoint(value=value, best_k=value,
                          mean_error=objective(params))
    base = replace(spec.base, **{spec.target: value})
    k_min, k_max = spec.k_range
    best_k, error = _optimize_k(
        lambda k: objective(replace(base, k_factor=k)), k_min, k_max,
        spec.k_step)
    return SweepPoint(value=value, best_k=best_k, mean_error=error)


def run_sweep(spec: SweepSpec, rounds: Sequence[RoundInput],
              objective: Objective | None = None,
              workers: int = 1) -> SweepResult:
    """Evaluate the sweep grid; each point re-optimizes K independently."""
    rounds = list(rounds)
    if objective is None:
        if not rounds:
            raise InputError("history is empty")
        objective = _replay_objective(rounds)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(
                lambda v: _sweep_point(spec, v, objective), spec.grid))
    else:
        points = [_sweep_point(spec, value, objective) for value in spec.grid]

    best = min(points, key=lambda p: (p.mean_error, p.value))
    return SweepResult(target=spec.target, points=tuple(points), best=best)


@dataclass(frozen=True)
class JointResult:
    inflation: float
    bonus: float
    mean_error: float
    evaluations: int


def joint_search(inflation_grid: Sequence[float], bonus_grid: Sequence[float],
                 rounds: Sequence[RoundInput],
                 base: RatingParams = PROFILES["elo"],
                 objective: Objective | None = None) -> JointResult:
    """Tune the new-player inflation and performance bonus together.

    Coordinate descent over the two grids: scan one axis holding the
    other fixed, move to the axis minimum, and alternate until neither
    single-coordinate move improves.  Ties break toward the smaller
    value, so the walk terminates.  K stays at the base profile's value.
    """
    inflation_grid = tuple(inflation_grid)
    bonus_grid = tuple(bonus_grid)
    for name, grid in (("inflation", inflation_grid), ("bonus", bonus_grid)):
        if not grid:
            raise InputError(f"{name} grid is empty")
        if any(b < a for a, b in zip(grid, grid[1:])):
            raise InputError(f"{name} grid must be sorted ascending")
    rounds = list(rounds)
    if objective is None:
        if not rounds:
            raise InputError("history is empty")
        objective = _replay_objective(rounds)

    cache: dict[tuple[float, float], float] = {}

    def err(n: float, b: float) -> float:
        key = (n, b)
        if key not in cache:
            cache[key] = objective(replace(base, inflation=n, bonus=b))
        return cache[key]

    n, b = inflation_grid[0], bonus_grid[0]
    current = err(n, b)
    for _ in range(2 * len(inflation_grid) * len(bonus_grid) + 2):
        moved = False
        best_n = min(inflation_grid, key=lambda v: (err(v, b), v))
        if (err(best_n, b), best_n) < (current, n):
            n, current, moved = best_n, err(best_n, b), True
        best_b = min(bonus_grid, key=lambda v: (err(n, v), v))
        if (err(n, best_b), best_b) < (current, b):
            b, current, moved = best_b, err(n, best_b), True
        if not moved:
            return JointResult(inflation=n, bonus=b, mean_error=current,
                               evaluations=len(cache))
    raise InternalError("coordinate descent failed to terminate")
