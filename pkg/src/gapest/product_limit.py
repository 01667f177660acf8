"""Product-limit estimators of the gap-time survival function.

The workhorse is a Kaplan-Meier routine with optional delayed entry (left
truncation). On equilibrium pairs, running it on the covering gaps
q = r + s with entry times r gives the delayed-entry estimator for
length-biased point sampling; on window data it uses the complete and
censored gaps; on line segments it implements the forward-backward
combination that enters every fully observed lifetime twice, every singly
censored one once, and drops the doubly censored ones.

Pointwise uncertainty comes from the Greenwood formula or from a
nonparametric bootstrap over observation units.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .errors import EstimationError
from .sampling import (
    EquilibriumPair,
    Segment,
    SegmentKind,
    WindowKind,
    WindowObservation,
)
from .seeding import derived_rng

BOOTSTRAP_MAX_RETRIES = 100
BOOTSTRAP_MAX_GRID = 4096


@dataclass
class StepSurvival:
    """Right-continuous step estimate of a survival function.

    The value is 1 before the first jump time and ``survival_values[i]``
    on [jump_times[i], jump_times[i+1]). ``tail_censored`` flags that the
    largest observation was censored, so the terminal level is not a real
    zero of the survival function.
    """

    jump_times: np.ndarray
    survival_values: np.ndarray
    n_input: int
    variance_values: np.ndarray | None = None
    event_counts: np.ndarray | None = None
    risk_counts: np.ndarray | None = None
    tail_censored: bool = False

    def __post_init__(self):
        self.jump_times = np.asarray(self.jump_times, dtype=float)
        self.survival_values = np.asarray(self.survival_values, dtype=float)
        if self.variance_values is not None:
            self.variance_values = np.asarray(self.variance_values, dtype=float)

    def survival_at(self, t):
        """Evaluate the step function right-continuously (vectorized)."""
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.jump_times, t, side="right") - 1
        values = np.concatenate(([1.0], self.survival_values))
        out = values[idx + 1]
        return out if out.ndim else float(out)

    def cdf_at(self, t):
        return 1.0 - self.survival_at(t)


@dataclass(frozen=True)
class RiskSet:
    """Counts at risk Y(t) on an evaluation grid of times."""

    times: np.ndarray
    counts: np.ndarray

    @classmethod
    def from_pairs(cls, pairs: list[EquilibriumPair], times=None) -> "RiskSet":
        """Risk counts over the covering gaps, by default at the q-values."""
        r = np.array([p.r for p in pairs], dtype=float)
        q = np.array([p.q for p in pairs], dtype=float)
        if times is None:
            times = np.unique(q)
        times = np.asarray(times, dtype=float)
        counts = np.array([np.sum((r < t) & (t <= q)) for t in times], dtype=int)
        return cls(times=times, counts=counts)


def risk_set(pairs: list[EquilibriumPair], t: float) -> int:
    """Number of pairs with r < t <= r + s (censored pairs use the observed s)."""
    if t <= 0:
        raise ValueError(f"t must be positive, got {t}")
    return int(sum(1 for p in pairs if p.r < t <= p.q))


def kaplan_meier(times, censored=None, entry_times=None) -> StepSurvival:
    """Product-limit estimator with optional right censoring and delayed entry.

    Parameters
    ----------
    times : observation exit times, positive.
    censored : boolean flags, True where the exit is a censoring time.
        Defaults to all events.
    entry_times : left-truncation entry times; a subject is at risk on
        (entry, exit]. Defaults to zero (classical estimator).

    Ties: events at the same time form a single factor 1 - d/Y; a censoring
    tied with an event is processed after it (the censored subject still
    counts as at risk there).
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise EstimationError("need at least one observation time")
    if censored is None:
        censored = np.zeros(times.shape, dtype=bool)
    censored = np.asarray(censored, dtype=bool)
    if censored.shape != times.shape:
        raise EstimationError("censored flags must match times")
    if entry_times is None:
        entry_times = np.zeros(times.shape, dtype=float)
    entry_times = np.asarray(entry_times, dtype=float)
    if entry_times.shape != times.shape:
        raise EstimationError("entry times must match times")
    if np.any(times <= 0):
        raise ValueError("observation times must be positive")
    if np.any(entry_times < 0):
        raise ValueError("entry times must be nonnegative")
    bad = np.nonzero(times <= entry_times)[0]
    if bad.size:
        raise ValueError(f"time <= entry time at index {bad[0]}")

    events = ~censored
    if not events.any():
        raise EstimationError("all observations are censored")

    event_times, d = np.unique(times[events], return_counts=True)
    sorted_entries = np.sort(entry_times)
    sorted_times = np.sort(times)
    # Y(q) = #{entry < q} - #{exit < q} = #{entry < q <= exit}
    y = np.searchsorted(sorted_entries, event_times, side="left") - np.searchsorted(
        sorted_times, event_times, side="left"
    )
    survival = np.cumprod(1.0 - d / y)

    t_max = times.max()
    tail_censored = bool(np.any(censored & (times == t_max))) and not bool(
        np.any(events & (times == t_max))
    )
    return StepSurvival(
        jump_times=event_times,
        survival_values=survival,
        n_input=int(times.size),
        event_counts=d.astype(int),
        risk_counts=y.astype(int),
        tail_censored=tail_censored,
    )


def winter_foldes(pairs: list[EquilibriumPair]) -> StepSurvival:
    """Delayed-entry product-limit estimator from equilibrium pairs.

    Treats the covering gaps q = r + s as survival times left-truncated at
    the backward times r; censored pairs feed the risk sets but contribute
    no factor. Identical by construction to ``kaplan_meier(q, censored, r)``.
    """
    if not pairs:
        raise EstimationError("need at least one pair")
    q = np.array([p.q for p in pairs], dtype=float)
    censored = np.array([p.s_censored for p in pairs], dtype=bool)
    r = np.array([p.r for p in pairs], dtype=float)
    if censored.all():
        raise EstimationError("all pairs are censored")
    return kaplan_meier(q, censored, r)


def window_product_limit(obs: list[WindowObservation]) -> StepSurvival:
    """Product-limit estimator from the gap records of window data.

    Uses complete gaps as events and the trailing censored gaps as censored
    observations; forward-recurrence and empty-window records are ignored.
    """
    events = [o.value for o in obs if o.kind is WindowKind.COMPLETE]
    cens = [o.value for o in obs if o.kind is WindowKind.CENSORED and o.value > 0]
    if not events:
        raise EstimationError("no complete gaps among the observations")
    times = np.array(events + cens, dtype=float)
    censored = np.array([False] * len(events) + [True] * len(cens), dtype=bool)
    return kaplan_meier(times, censored)


def palmer_cox(segments: list[Segment], window_length: float) -> StepSurvival:
    """Forward-backward combined product-limit estimator for segment data.

    Builds one pooled sample: every proper complete length enters twice as
    an event, every singly censored length once as a censored observation,
    and residual censored segments are dropped. A proper censored segment
    is right-censored in forward time (birth seen, death not). A residual
    complete segment is the mirror image: reversing the time axis swaps
    births with deaths and maps it to a segment whose "birth" (the death)
    is seen and whose end is cut off at the window edge, so its observed
    length enters as right-censored too. The combined sample is therefore
    invariant under time reversal, which just swaps the two singly
    censored kinds.

    Proper complete lengths cannot exceed the window under the observation
    geometry; longer ones are rejected as malformed input.
    """
    if window_length <= 0:
        raise ValueError(f"window_length must be positive, got {window_length}")
    times: list[float] = []
    censored: list[bool] = []
    for seg in segments:
        if seg.kind is SegmentKind.PROPER_COMPLETE:
            if seg.length > window_length:
                raise EstimationError(
                    f"proper complete length {seg.length} exceeds the window {window_length}"
                )
            times.extend([seg.length, seg.length])
            censored.extend([False, False])
        elif seg.kind in (SegmentKind.PROPER_CENSORED, SegmentKind.RESIDUAL_COMPLETE):
            times.append(seg.length)
            censored.append(True)
    if not times:
        raise EstimationError("no usable segments after discarding doubly censored ones")
    return kaplan_meier(np.array(times), np.array(censored))


def greenwood_variance(
    est: StepSurvival, event_counts=None, risk_counts=None
) -> StepSurvival:
    """Attach the Greenwood pointwise variance to a product-limit estimate.

    variance(t) = S(t)^2 * sum_{q <= t} d / (Y (Y - d)). At a jump where
    Y == d the survival hits zero and the variance is reported as NaN from
    there on.
    """
    d = est.event_counts if event_counts is None else np.asarray(event_counts)
    y = est.risk_counts if risk_counts is None else np.asarray(risk_counts)
    if d is None or y is None:
        raise EstimationError("event and risk counts are required")
    d = np.asarray(d, dtype=float)
    y = np.asarray(y, dtype=float)
    if d.shape != est.jump_times.shape or y.shape != est.jump_times.shape:
        raise EstimationError("counts do not align with the jump times")
    exhausted = y <= d
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(exhausted, np.nan, d / (y * (y - d)))
    variance = est.survival_values**2 * np.cumsum(terms)
    return dataclasses.replace(est, variance_values=variance)


@dataclass
class BootstrapBand:
    """Pointwise bootstrap quantile band for a survival estimate."""

    times: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    level: float
    n_resamples: int
    failures: int = 0

    def lower_at(self, t):
        return _step_eval(self.times, self.lower, t)

    def upper_at(self, t):
        return _step_eval(self.times, self.upper, t)


def _step_eval(times, values, t):
    t = np.asarray(t, dtype=float)
    idx = np.searchsorted(times, t, side="right") - 1
    padded = np.concatenate(([1.0], values))
    out = padded[idx + 1]
    return out if out.ndim else float(out)


def _survival_curve(data, estimator: str, window_length):
    if estimator == "winter_foldes":
        est = winter_foldes(data)
        return est.jump_times, est.survival_values
    if estimator == "window_pl":
        est = window_product_limit(data)
        return est.jump_times, est.survival_values
    if estimator == "palmer_cox":
        if window_length is None:
            raise EstimationError("palmer_cox bootstrap needs window_length")
        est = palmer_cox(data, window_length)
        return est.jump_times, est.survival_values
    if estimator == "cox_vardi":
        from .npmle import cox_vardi_from_pairs

        dist = cox_vardi_from_pairs(data)
        return dist.atoms, 1.0 - np.cumsum(dist.masses)
    raise EstimationError(f"unknown bootstrap estimator {estimator!r}")


def bootstrap_band(
    data,
    estimator: str,
    B: int,
    seed: int,
    level: float = 0.95,
    grid=None,
    window_length: float | None = None,
    threads: int = 1,
) -> BootstrapBand:
    """Pointwise bootstrap quantile bands for one of the survival estimators.

    Observation units (pairs, window records, or segments) are resampled
    with replacement B times and the estimator is rerun on each resample;
    for palmer_cox the doubling of complete lifetimes happens after
    resampling. A resample the estimator rejects (for example an
    all-censored draw) is redrawn from a fresh substream, up to
    BOOTSTRAP_MAX_RETRIES times. Replicate b always uses the streams
    derived from (seed, b, retry), so the result does not depend on
    ``threads``.

    The band is evaluated on ``grid`` if given, otherwise on the pooled
    jump times of all replicates (subsampled to BOOTSTRAP_MAX_GRID
    quantile-spaced points when larger).
    """
    if B < 1:
        raise ValueError(f"B must be >= 1, got {B}")
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must be in (0, 1), got {level}")
    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")
    if not data:
        raise EstimationError("no data to resample")
    n = len(data)

    def one_replicate(b: int):
        for retry in range(BOOTSTRAP_MAX_RETRIES):
            rng = derived_rng(seed, b, retry)
            idx = rng.integers(0, n, size=n)
            resample = [data[i] for i in idx]
            try:
                return _survival_curve(resample, estimator, window_length), retry
            except EstimationError:
                continue
        raise EstimationError(
            f"estimator failed on {BOOTSTRAP_MAX_RETRIES} consecutive resamples"
        )

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one_replicate, range(B)))
    else:
        results = [one_replicate(b) for b in range(B)]
    curves = [curve for curve, _ in results]
    failures = sum(retries for _, retries in results)

    if grid is None:
        pooled = np.unique(np.concatenate([jumps for jumps, _ in curves]))
        if pooled.size > BOOTSTRAP_MAX_GRID:
            qs = np.linspace(0.0, 1.0, BOOTSTRAP_MAX_GRID)
            pooled = np.unique(np.quantile(pooled, qs))
        grid = pooled
    grid = np.asarray(grid, dtype=float)

    values = np.empty((B, grid.size), dtype=float)
    for i, (jumps, surv) in enumerate(curves):
        values[i] = _step_eval(jumps, surv, grid)
    alpha = 1.0 - level
    lower = np.quantile(values, alpha / 2.0, axis=0)
    upper = np.quantile(values, 1.0 - alpha / 2.0, axis=0)
    return BootstrapBand(
        times=grid, lower=lower, upper=upper, level=level, n_resamples=B, failures=failures
    )
