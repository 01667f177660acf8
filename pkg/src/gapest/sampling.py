"""Synthetic data generators for the three observation frames.

Three ways of observing a stationary renewal process are supported:

* equilibrium point sampling: the backward and forward recurrence times
  (R, S) around a fixed time point, with optional right censoring of S;
* window observation: a single realization watched on an interval
  [t1, t2], reported as forward recurrence / complete gaps / one censored
  gap, or an empty-window record;
* line segments: individuals born at Poisson times with iid lifetimes,
  of which only the intersections with [t1, t2] are seen, classified as
  proper/residual x complete/censored.

All generators are pure functions of (inputs, seed); replicate k of a
multi-window run uses the derived stream ``derived_rng(seed, k)``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .distributions import GapDistribution
from .errors import EstimationError
from .seeding import derived_rng

# Births earlier than this quantile of the lifetime law cannot reach the
# window except with probability below the Monte Carlo test tolerances.
SEGMENT_TRUNCATION_QUANTILE = 1.0 - 1e-9

_GAP_CHUNK = 8  # gaps drawn per batch while filling a window


@dataclass(frozen=True, slots=True)
class EquilibriumPair:
    """One (backward, forward) recurrence observation around a fixed point."""

    r: float
    s: float
    s_censored: bool = False

    @property
    def q(self) -> float:
        """Total covering gap r + s (the exact gap only when uncensored)."""
        return self.r + self.s


class WindowKind(Enum):
    COMPLETE = "complete"
    CENSORED = "censored"
    FORWARD = "forward"
    EMPTY = "empty"


@dataclass(frozen=True, slots=True)
class WindowObservation:
    """One elementary record from watching a renewal process in a window."""

    kind: WindowKind
    value: float


class SegmentKind(Enum):
    PROPER_COMPLETE = "pc"
    PROPER_CENSORED = "px"
    RESIDUAL_COMPLETE = "rc"
    RESIDUAL_CENSORED = "rx"


@dataclass(frozen=True, slots=True)
class Segment:
    """Observed intersection of one lifetime with the window."""

    kind: SegmentKind
    length: float


def sample_equilibrium(dist: GapDistribution, n: int, seed: int) -> list[EquilibriumPair]:
    """Draw n equilibrium pairs (R, S) for the given gap distribution.

    The covering gap Q is drawn from the size-biased law q f(q) / mu and the
    observation point is uniform inside it: R ~ U(0, Q), S = Q - R.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = derived_rng(seed)
    q = dist.sample_length_biased(rng, n)
    r = rng.uniform(size=n) * q
    s = q - r
    return [EquilibriumPair(float(ri), float(si)) for ri, si in zip(r, s)]


def apply_right_censoring(
    pairs: list[EquilibriumPair], cens_dist: GapDistribution, seed: int
) -> list[EquilibriumPair]:
    """Censor each forward time at an independent draw from cens_dist.

    s becomes min(s, c) and the flag records whether the draw cut it short.
    Input pairs must be uncensored.
    """
    if any(p.s_censored for p in pairs):
        raise EstimationError("input pairs must be uncensored")
    rng = derived_rng(seed)
    cuts = cens_dist.sample(rng, len(pairs))
    out = []
    for pair, c in zip(pairs, cuts):
        c = float(c)
        if c < pair.s:
            out.append(replace(pair, s=c, s_censored=True))
        else:
            out.append(pair)
    return out


def sample_renewal_path(
    dist: GapDistribution, window_length: float, seed=None, rng=None
) -> tuple[float, list[float]]:
    """One stationary realization on a window of the given length.

    Returns (v, gaps): v is the offset of the first renewal past the window
    start (equilibrium recurrence draw), gaps the subsequent interarrival
    times, generated until they carry the path past the window end. gaps is
    empty when v alone overshoots the window.
    """
    if window_length <= 0:
        raise ValueError(f"window_length must be positive, got {window_length}")
    if rng is None:
        rng = derived_rng(seed)
    v = float(dist.sample_equilibrium_recurrence(rng, 1)[0])
    gaps: list[float] = []
    if v > window_length:
        return v, gaps
    pos = v
    while True:
        for x in dist.sample(rng, _GAP_CHUNK):
            gaps.append(float(x))
            pos += float(x)
            if pos > window_length:
                return v, gaps


def _classify_path(v: float, gaps: list[float], w: float) -> list[WindowObservation]:
    if v > w:
        return [WindowObservation(WindowKind.EMPTY, w)]
    obs = [WindowObservation(WindowKind.FORWARD, v)]
    pos = v
    for x in gaps:
        if pos + x <= w:
            obs.append(WindowObservation(WindowKind.COMPLETE, x))
            pos += x
        else:
            obs.append(WindowObservation(WindowKind.CENSORED, w - pos))
            break
    return obs


def sample_window(dist: GapDistribution, t1: float, t2: float, seed: int) -> list[WindowObservation]:
    """Observe one stationary realization on [t1, t2].

    Emits a forward-recurrence record when a renewal lands in the window
    (followed by the complete gaps and one trailing censored gap), or a
    single empty-window record. Only the length t2 - t1 matters.
    """
    if t1 >= t2:
        raise ValueError(f"need t1 < t2, got {t1} >= {t2}")
    w = t2 - t1
    v, gaps = sample_renewal_path(dist, w, seed=seed)
    return _classify_path(v, gaps, w)


def sample_window_replicates(
    dist: GapDistribution, t1: float, t2: float, n_windows: int, seed: int
) -> list[list[WindowObservation]]:
    """Independent window realizations; window k uses derived_rng(seed, k)."""
    if t1 >= t2:
        raise ValueError(f"need t1 < t2, got {t1} >= {t2}")
    if n_windows < 1:
        raise ValueError(f"n_windows must be >= 1, got {n_windows}")
    w = t2 - t1
    out = []
    for k in range(n_windows):
        v, gaps = sample_renewal_path(dist, w, rng=derived_rng(seed, k))
        out.append(_classify_path(v, gaps, w))
    return out


def sample_segments(
    birth_rate: float, dist: GapDistribution, t1: float, t2: float, seed: int
) -> list[Segment]:
    """Observed lifetime intersections with [t1, t2] for one window.

    Births form a Poisson process of the given rate; the simulation covers
    births back to t1 - L where L is the SEGMENT_TRUNCATION_QUANTILE point
    of the lifetime law, so earlier births are observable only with
    negligible probability. Segments are returned in birth order.
    """
    if t1 >= t2:
        raise ValueError(f"need t1 < t2, got {t1} >= {t2}")
    if birth_rate <= 0:
        raise ValueError(f"birth_rate must be positive, got {birth_rate}")
    rng = derived_rng(seed)
    return _segments_one_window(birth_rate, dist, t2 - t1, rng)


def sample_segment_replicates(
    birth_rate: float, dist: GapDistribution, t1: float, t2: float, n_windows: int, seed: int
) -> list[list[Segment]]:
    """Independent segment windows; window k uses derived_rng(seed, k)."""
    if t1 >= t2:
        raise ValueError(f"need t1 < t2, got {t1} >= {t2}")
    if birth_rate <= 0:
        raise ValueError(f"birth_rate must be positive, got {birth_rate}")
    if n_windows < 1:
        raise ValueError(f"n_windows must be >= 1, got {n_windows}")
    w = t2 - t1
    return [
        _segments_one_window(birth_rate, dist, w, derived_rng(seed, k))
        for k in range(n_windows)
    ]


def _segments_one_window(
    birth_rate: float, dist: GapDistribution, w: float, rng: np.random.Generator
) -> list[Segment]:
    lmax = float(dist.ppf(SEGMENT_TRUNCATION_QUANTILE))
    span = w + lmax
    count = rng.poisson(birth_rate * span)
    births = np.sort(rng.uniform(-lmax, w, size=count))
    lifetimes = dist.sample(rng, count)
    deaths = births + lifetimes
    out = []
    for b, d, x in zip(births, deaths, lifetimes):
        if d <= 0.0 or b >= w:
            continue
        if b >= 0.0:
            if d <= w:
                out.append(Segment(SegmentKind.PROPER_COMPLETE, float(x)))
            else:
                out.append(Segment(SegmentKind.PROPER_CENSORED, float(w - b)))
        else:
            if d <= w:
                out.append(Segment(SegmentKind.RESIDUAL_COMPLETE, float(d)))
            else:
                out.append(Segment(SegmentKind.RESIDUAL_CENSORED, float(w)))
    return [seg for seg in out if seg.length > 0.0]
