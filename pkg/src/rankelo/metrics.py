"""Prediction accuracy, rank correlations, and report aggregation.

The primary accuracy metric is the mean absolute log-rank error
``|log2(expected_rank) - log2(actual_rank)|`` over every participant of
every rated round.  Rank correlations are the tie-corrected Kendall tau-b
and the mid-rank (average-rank) Spearman rho; scores tie often enough in
contest data that the untied variants degenerate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import stats

from .errors import DomainError, InputError
from .rating import RoundInput, division_ranks
from .replay import Observation, ReplayResult

_LOG2E = 1.0 / math.log(2.0)

# Experience rows: (label, lowest round number, highest round number).
EXPERIENCE_BUCKETS: tuple[tuple[str, int, int | None], ...] = (
    ("First round", 1, 1),
    ("2-7 rounds", 2, 7),
    ("8-24 rounds", 8, 24),
    ("25-74 rounds", 25, 74),
    ("75-199 rounds", 75, 199),
    ("200+ rounds", 200, None),
)

# Division-size rows for system comparisons.
SIZE_BUCKETS: tuple[tuple[str, int, int | None], ...] = (
    ("2-16 players", 0, 16),
    ("17-99 players", 17, 99),
    ("100-199 players", 100, 199),
    ("200-399 players", 200, 399),
    ("400-599 players", 400, 599),
    ("600-799 players", 600, 799),
    ("800+ players", 800, None),
)


def prediction_error(expected_rank: float, actual_rank: float) -> float:
    """Absolute log-rank error in bits: ``|log2(expected / actual)|``."""
    if expected_rank < 1 or actual_rank < 1:
        raise DomainError("ranks must be >= 1")
    return abs(math.log(expected_rank / actual_rank) * _LOG2E)


def _degenerate(values: np.ndarray) -> bool:
    return values.size < 2 or bool((values == values[0]).all())


def kendall_tau(predicted: Sequence[float], actual: Sequence[float]) -> float | None:
    """Tie-corrected Kendall tau-b between two outcome orderings.

    Both arguments are aligned per-player values where higher means
    better (pre-round ratings against scores, typically).  Returns None
    when undefined: fewer than two players, or one side entirely tied.
    """
    x = np.asarray(predicted, dtype=np.float64)
    y = np.asarray(actual, dtype=np.float64)
    if x.shape != y.shape:
        raise InputError("rankings must be the same length")
    if _degenerate(x) or _degenerate(y):
        return None
    tau = stats.kendalltau(x, y, variant="b").statistic
    return None if math.isnan(tau) else float(tau)


def spearman_rho(predicted: Sequence[float], actual: Sequence[float]) -> float | None:
    """Spearman rho with average ranks for ties; None when undefined."""
    x = np.asarray(predicted, dtype=np.float64)
    y = np.asarray(actual, dtype=np.float64)
    if x.shape != y.shape:
        raise InputError("rankings must be the same length")
    if _degenerate(x) or _degenerate(y):
        return None
    rho = stats.spearmanr(x, y).statistic
    return None if math.isnan(rho) else float(rho)


@dataclass(frozen=True)
class RoundMetrics:
    """Accuracy statistics for one division of one round."""

    round_id: str
    division: int
    n: int
    mean_error: float
    kendall: float | None
    spearman: float | None


def division_metrics(round_id: str, division: int, scores: Sequence[float],
                     ratings: Sequence[float]) -> RoundMetrics:
    """Evaluate one division given pre-round ratings (from any system)."""
    scores_arr = np.asarray(scores, dtype=np.float64)
    ratings_arr = np.asarray(ratings, dtype=np.float64)
    if scores_arr.size == 0:
        raise InputError("division is empty")
    if scores_arr.shape != ratings_arr.shape:
        raise InputError("ratings are not aligned with scores")
    actual, expected, _, _ = division_ranks(scores_arr, ratings_arr)
    errors = np.abs(np.log(expected / actual) * _LOG2E)
    return RoundMetrics(
        round_id=round_id,
        division=division,
        n=int(scores_arr.size),
        mean_error=float(errors.mean()),
        kendall=kendall_tau(ratings_arr, scores_arr),
        spearman=spearman_rho(ratings_arr, scores_arr),
    )


def evaluate_replay(result: ReplayResult) -> list[RoundMetrics]:
    """Per-division metrics for a replay run with ``keep_divisions=True``.

    Deliberately re-evaluates through ``division_metrics`` rather than
    reusing the replay's own error sums: the engine computes in canonical
    score order, which differs from entry order by an ulp here and there,
    and system comparisons need both sides on one deterministic route.
    """
    if result.count and not result.divisions:
        raise InputError("replay was run without keep_divisions=True")
    return [division_metrics(division.round_id, division.division,
                             division.scores, division.ratings_before)
            for division in result.divisions]


def evaluate_timeline(rounds: Iterable[RoundInput],
                      timeline: Mapping[tuple[str, str], float]) -> list[RoundMetrics]:
    """Per-division metrics for an externally supplied rating timeline."""
    out = []
    for round_input in rounds:
        for division in round_input.divisions:
            if not division.entries:
                continue
            ratings = []
            for player_id, _ in division.entries:
                key = (round_input.round_id, player_id)
                if key not in timeline:
                    raise InputError(
                        f"timeline has no rating for player {player_id!r} "
                        f"in round {round_input.round_id!r}")
                ratings.append(timeline[key])
            scores = [score for _, score in division.entries]
            out.append(division_metrics(round_input.round_id, division.division,
                                        scores, ratings))
    return out


@dataclass(frozen=True)
class BucketRow:
    label: str
    count: int
    mean_delta_r: float
    mean_perf: float
    mean_error: float


@dataclass(frozen=True)
class BucketedReport:
    """Mean rating change, performance, and error per player bucket."""

    rows: tuple[BucketRow, ...]

    def row(self, label: str) -> BucketRow:
        for row in self.rows:
            if row.label == label:
                return row
        raise KeyError(label)

    def labels(self) -> list[str]:
        return [row.label for row in self.rows]


class _Accumulator:
    __slots__ = ("count", "delta", "perf", "error")

    def __init__(self):
        self.count = 0
        self.delta = 0.0
        self.perf = 0.0
        self.error = 0.0

    def add(self, obs: Observation) -> None:
        self.count += 1
        self.delta += obs.breakdown.delta_r
        self.perf += obs.breakdown.perf
        self.error += abs(obs.breakdown.perf)

    def row(self, label: str) -> BucketRow:
        return BucketRow(label=label, count=self.count,
                         mean_delta_r=self.delta / self.count,
                         mean_perf=self.perf / self.count,
                         mean_error=self.error / self.count)


def aggregate_error(observations: Iterable[Observation],
                    experience_buckets=EXPERIENCE_BUCKETS) -> BucketedReport:
    """Bucketed means over a stream of observations.

    Row layout: an ``All`` row; experience buckets that partition it by
    the player's round number; an ``Existing`` row (second round onward);
    per-division rows and their top/bottom half-rank splits, both covering
    existing players only.  Top half is actual rank <= n/2; a rank exactly
    at the (n+1)/2 midpoint lands in the bottom half.
    """
    every = _Accumulator()
    experience = {label: _Accumulator() for label, _, _ in experience_buckets}
    existing = _Accumulator()
    divisions: dict[int, _Accumulator] = {}
    halves: dict[tuple[int, int], _Accumulator] = {}

    for obs in observations:
        every.add(obs)
        for label, lo, hi in experience_buckets:
            if obs.nr >= lo and (hi is None or obs.nr <= hi):
                experience[label].add(obs)
                break
        if obs.nr < 2:
            continue
        existing.add(obs)
        divisions.setdefault(obs.division, _Accumulator()).add(obs)
        half = 1 if obs.breakdown.actual_rank <= obs.n / 2 else 2
        halves.setdefault((obs.division, half), _Accumulator()).add(obs)

    if not every.count:
        return BucketedReport(rows=())
    rows = [every.row("All")]
    rows += [experience[label].row(label) for label, _, _ in experience_buckets
             if experience[label].count]
    if existing.count:
        rows.append(existing.row("Existing"))
    for division in sorted(divisions):
        rows.append(divisions[division].row(f"Division {division}"))
        for half in (1, 2):
            acc = halves.get((division, half))
            if acc is not None:
                rows.append(acc.row(f"D{division} H{half}"))
    return BucketedReport(rows=tuple(rows))


@dataclass(frozen=True)
class ComparisonRow:
    label: str
    rounds: int
    kendall: float | None   # fraction of rounds system A predicted better
    spearman: float | None
    error: float | None


@dataclass(frozen=True)
class ComparisonReport:
    rows: tuple[ComparisonRow, ...]

    def row(self, label: str) -> ComparisonRow:
        for row in self.rows:
            if row.label == label:
                return row
        raise KeyError(label)


class _WinCounter:
    __slots__ = ("rounds", "wins", "counts")

    def __init__(self):
        self.rounds = 0
        self.wins = [0.0, 0.0, 0.0]    # kendall, spearman, error
        self.counts = [0, 0, 0]

    def add(self, a: RoundMetrics, b: RoundMetrics) -> None:
        self.rounds += 1
        pairs = ((a.kendall, b.kendall, True), (a.spearman, b.spearman, True),
                 (a.mean_error, b.mean_error, False))
        for slot, (va, vb, higher_better) in enumerate(pairs):
            if va is None or vb is None:
                continue
            if va == vb:
                score = 0.5
            elif (va > vb) == higher_better:
                score = 1.0
            else:
                score = 0.0
            self.wins[slot] += score
            self.counts[slot] += 1

    def row(self, label: str) -> ComparisonRow:
        fractions = [self.wins[i] / self.counts[i] if self.counts[i] else None
                     for i in range(3)]
        return ComparisonRow(label=label, rounds=self.rounds,
                             kendall=fractions[0], spearman=fractions[1],
                             error=fractions[2])


def compare_systems(metrics_a: Sequence[RoundMetrics],
                    metrics_b: Sequence[RoundMetrics]) -> ComparisonReport:
    """Fraction of rounds where system A predicted better than system B.

    Win = 1, tie = 0.5, loss = 0 per round and metric (higher tau/rho is
    better, lower error is better), averaged per bucket.  Each division of
    each round counts as one round.  Rounds where a correlation is
    undefined for either system are left out of that metric's average.
    Both systems must have been evaluated on the same rounds.
    """
    by_key_b = {(m.round_id, m.division): m for m in metrics_b}
    if len(by_key_b) != len(metrics_b):
        raise InputError("duplicate (round, division) in system B metrics")
    keys_a = {(m.round_id, m.division) for m in metrics_a}
    if len(keys_a) != len(metrics_a):
        raise InputError("duplicate (round, division) in system A metrics")
    if keys_a != set(by_key_b):
        raise InputError("the two systems were evaluated on different round sets")

    every = _WinCounter()
    divisions: dict[int, _WinCounter] = {}
    sizes = {label: _WinCounter() for label, _, _ in SIZE_BUCKETS}
    for a in metrics_a:
        b = by_key_b[(a.round_id, a.division)]
        if a.n != b.n:
            raise InputError(
                f"round {a.round_id!r} division {a.division} has different "
                f"player counts in the two systems")
        every.add(a, b)
        divisions.setdefault(a.division, _WinCounter()).add(a, b)
        for label, lo, hi in SIZE_BUCKETS:
            if a.n >= lo and (hi is None or a.n <= hi):
                sizes[label].add(a, b)
                break

    rows = [every.row("All")]
    rows += [divisions[d].row(f"Division {d}") for d in sorted(divisions)]
    rows += [sizes[label].row(label) for label, _, _ in SIZE_BUCKETS
             if sizes[label].rounds]
    return ComparisonReport(rows=tuple(rows))


@dataclass(frozen=True)
class RatingStats:
    """Whole-history summary: error, rating-change moments, final ratings."""

    count: int
    mean_error: float | None
    delta_mean: float | None
    delta_std: float | None
    delta_max: float | None
    initial_rating: float | None   # inflation-adjusted new-player rating at end
    rating_median: float | None
    rating_max: float | None


def rating_stats(result: ReplayResult) -> RatingStats:
    """Summarize a full replay; empty history yields an all-None summary."""
    if not result.count and not result.state.players:
        return RatingStats(count=0, mean_error=None, delta_mean=None,
                           delta_std=None, delta_max=None, initial_rating=None,
                           rating_median=None, rating_max=None)
    ratings = [player.rating for player in result.state.players.values()]
    return RatingStats(
        count=result.count,
        mean_error=result.mean_error,
        delta_mean=result.delta_mean,
        delta_std=result.delta_std,
        delta_max=result.delta_max,
        initial_rating=result.state.r1,
        rating_median=float(np.median(ratings)) if ratings else None,
        rating_max=max(ratings) if ratings else None,
    )
