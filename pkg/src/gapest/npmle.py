"""Nonparametric maximum likelihood estimators.

Two NPMLEs live here. For equilibrium point sampling the covering gaps
q = r + s are size-biased draws from the gap law, and the NPMLE puts mass
proportional to 1/q on each observed q (``cox_vardi``). For line-segment
data the NPMLE over a fixed atom grid is computed by an EM iteration in
the window-biased parameterization q_j ~ p_j (w + a_j), under which an
observed segment is an iid draw: pick an atom with probability q_j, then a
birth position uniform over its w + a_j observable placements
(``laslett_em``).

Likelihood evaluators: ``segment_loglik`` scores a discrete distribution
with the per-kind factors mass(x), S(c+), S(x+)/mu and E(X-w)+/mu plus an
optional Poisson factor for the observed count;
``segment_marginal_loglik`` is the count-conditional log likelihood
obtained by profiling the birth intensity out of the full segment
likelihood, which is the objective the EM ascends and the brute-force
``npmle_oracle`` maximizes.

Binning segment lengths onto a midpoint grid before running the EM
regularizes the estimator (``bin_segments``, ``default_grid``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .distributions import DiscreteDistribution
from .errors import EstimationError
from .product_limit import StepSurvival
from .sampling import EquilibriumPair, Segment, SegmentKind

EM_DEFAULT_TOL = 1e-8
EM_DEFAULT_MAX_ITER = 100_000

ORACLE_MAX_ATOMS = 6
ORACLE_COARSE_CAP = 600_000  # candidate budget for the dense simplex scan
ORACLE_REFINE_STEP = 1e-7


@dataclass
class EmResult:
    """Output of the segment EM: the fitted distribution plus diagnostics."""

    distribution: DiscreteDistribution
    birth_rate: float
    loglik_trace: np.ndarray
    iterations: int
    converged: bool

    def to_json_dict(self) -> dict:
        return {
            "atoms": [float(a) for a in self.distribution.atoms],
            "masses": [float(m) for m in self.distribution.masses],
            "birth_rate": float(self.birth_rate),
            "loglik": float(self.loglik_trace[-1]),
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
        }


def cox_vardi(q_values) -> DiscreteDistribution:
    """NPMLE of the gap law from size-biased draws q.

    Atoms at the distinct observed values, mass proportional to
    multiplicity / q.
    """
    q = np.asarray(q_values, dtype=float)
    if q.ndim != 1 or q.size == 0:
        raise EstimationError("need at least one observation")
    if np.any(q <= 0):
        raise EstimationError("observations must be positive")
    atoms, counts = np.unique(q, return_counts=True)
    return DiscreteDistribution.from_weights(atoms, counts / atoms)


def cox_vardi_from_pairs(pairs: list[EquilibriumPair]) -> DiscreteDistribution:
    """NPMLE from uncensored equilibrium pairs, via the sums r + s.

    The pair (r, s) carries no information about the gap law beyond its
    sum. Censored pairs are rejected; use ``winter_foldes`` for those.
    """
    if any(p.s_censored for p in pairs):
        raise EstimationError(
            "censored pairs are not supported here; use winter_foldes for censored data"
        )
    return cox_vardi([p.q for p in pairs])


def _match_atoms(lengths: np.ndarray, atoms: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(atoms, lengths)
    idx_c = np.minimum(idx, atoms.size - 1)
    bad = atoms[idx_c] != lengths
    if bad.any():
        missing = lengths[bad][0]
        raise EstimationError(
            f"atom grid does not cover the complete length {missing}; bin the data first"
        )
    return idx_c


def segment_loglik(
    dist: DiscreteDistribution,
    birth_rate: float | None,
    segments: list[Segment],
    window_length: float,
    include_poisson_factor: bool = False,
) -> float:
    """Sum of per-segment log factors, optionally with the count factor.

    Per kind, with masses p over atoms a and mu = sum(a p):
    proper complete x contributes log p(x); proper censored c contributes
    log sum_{a > c} p; residual complete x contributes
    log(sum_{a > x} p / mu); residual censored contributes
    log(sum p (a - w)+ / mu). A zero factor yields -inf rather than an
    exception. With ``include_poisson_factor`` the Poisson log probability
    of the observed segment count, with mean birth_rate * (w + mu), is
    added.

    Atoms must cover every proper complete length exactly.
    """
    if window_length <= 0:
        raise ValueError(f"window_length must be positive, got {window_length}")
    atoms = dist.atoms
    p = dist.masses
    mu = dist.mean()
    total = 0.0
    for seg in segments:
        if seg.kind is SegmentKind.PROPER_COMPLETE:
            j = _match_atoms(np.array([seg.length]), atoms)[0]
            factor = p[j]
        elif seg.kind is SegmentKind.PROPER_CENSORED:
            factor = float(p[atoms > seg.length].sum())
        elif seg.kind is SegmentKind.RESIDUAL_COMPLETE:
            factor = float(p[atoms > seg.length].sum()) / mu
        else:
            factor = float(np.dot(p, np.maximum(atoms - window_length, 0.0))) / mu
        if factor <= 0.0:
            return -math.inf
        total += math.log(factor)
    if include_poisson_factor:
        if birth_rate is None or birth_rate <= 0:
            raise ValueError("a positive birth_rate is required for the Poisson factor")
        n = len(segments)
        mean = birth_rate * (window_length + mu)
        total += n * math.log(mean) - mean - float(gammaln(n + 1))
    return total


def _atom_weights(segments: list[Segment], atoms: np.ndarray, w: float) -> np.ndarray:
    """Per-observation weight vectors over atoms.

    Row i is the vector whose inner product with the masses gives the
    likelihood numerator of observation i: an indicator of the matching
    atom for complete proper lifetimes, indicators of exceeding the
    observed length for the singly censored kinds, and (a - w)+ for the
    doubly censored kind.
    """
    rows = np.zeros((len(segments), atoms.size), dtype=float)
    for i, seg in enumerate(segments):
        if seg.kind is SegmentKind.PROPER_COMPLETE:
            j = _match_atoms(np.array([seg.length]), atoms)[0]
            rows[i, j] = 1.0
        elif seg.kind in (SegmentKind.PROPER_CENSORED, SegmentKind.RESIDUAL_COMPLETE):
            rows[i] = (atoms > seg.length).astype(float)
        else:
            rows[i] = np.maximum(atoms - w, 0.0)
    dead = ~rows.any(axis=1)
    if dead.any():
        k = int(np.nonzero(dead)[0][0])
        raise EstimationError(
            f"observation {k} ({segments[k].kind.value} {segments[k].length}) has zero "
            "probability under every distribution on this grid"
        )
    return rows


def segment_marginal_loglik(
    dist: DiscreteDistribution, segments: list[Segment], window_length: float
) -> float:
    """Log likelihood of the segments conditional on how many were seen.

    Profiling the Poisson birth intensity out of the full segment
    likelihood leaves, up to data-only constants, the sum of the per-kind
    numerators minus n log(w + mu). This is the objective the EM ascends.
    """
    if window_length <= 0:
        raise ValueError(f"window_length must be positive, got {window_length}")
    weights = _atom_weights(segments, dist.atoms, window_length)
    numer = weights @ dist.masses
    if np.any(numer <= 0.0):
        return -math.inf
    return float(np.sum(np.log(numer)) - len(segments) * math.log(window_length + dist.mean()))


def bin_segments(segments: list[Segment], bin_width: float) -> list[Segment]:
    """Map every length onto the midpoint of its bin ((k h, (k+1) h] -> (k+0.5) h).

    Bins are left-open, so a length exactly at k h falls in the bin below.
    Kinds are unchanged.
    """
    if bin_width <= 0:
        raise ValueError(f"bin_width must be positive, got {bin_width}")
    out = []
    for seg in segments:
        k = math.ceil(seg.length / bin_width) - 1
        out.append(Segment(seg.kind, (k + 0.5) * bin_width))
    return out


def default_grid(segments: list[Segment], window_length: float, bin_width: float) -> np.ndarray:
    """Bin midpoints spanning (0, max observed length + window length].

    Extending the atoms one window length past the data leaves room for the
    lifetimes that are longer than anything observable in full.
    """
    if not segments:
        raise EstimationError("need at least one segment")
    top = max(seg.length for seg in segments) + window_length
    n_bins = max(1, math.ceil(top / bin_width))
    return (np.arange(n_bins) + 0.5) * bin_width


def laslett_em(
    segments: list[Segment],
    window_length: float,
    grid,
    max_iter: int = EM_DEFAULT_MAX_ITER,
    tol: float = EM_DEFAULT_TOL,
) -> EmResult:
    """EM for the segment NPMLE on a fixed atom grid.

    Iterates in the window-biased parameterization q_j ~ p_j (w + a_j),
    under which the observations are iid and the E-step posterior over
    atoms has closed form (see ``_atom_weights``). The M-step averages the
    posteriors into q and maps back to p. The trace records the marginal
    log likelihood after each iteration and is nondecreasing up to float
    slack; iteration stops when one step improves it by less than ``tol``.

    The fitted birth intensity is n / (w + mu_hat), the value that matches
    the expected number of observable lifetimes to the observed count.
    """
    if max_iter < 1:
        raise ValueError(f"max_iter must be >= 1, got {max_iter}")
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if window_length <= 0:
        raise ValueError(f"window_length must be positive, got {window_length}")
    if not segments:
        raise EstimationError("need at least one segment")
    atoms = np.unique(np.asarray(grid, dtype=float))
    if atoms.size == 0 or np.any(atoms <= 0):
        raise EstimationError("grid atoms must be positive")

    weights = _atom_weights(segments, atoms, window_length)
    n = len(segments)
    w = float(window_length)
    p = np.full(atoms.size, 1.0 / atoms.size)

    trace = []
    converged = False
    iterations = 0
    prev = -math.inf
    for _ in range(max_iter):
        post = weights * p
        post /= post.sum(axis=1, keepdims=True)
        q = post.sum(axis=0) / n
        p = q / (w + atoms)
        p /= p.sum()
        iterations += 1
        numer = weights @ p
        ll = float(np.sum(np.log(numer)) - n * math.log(w + float(np.dot(atoms, p))))
        trace.append(ll)
        if ll - prev < tol:
            converged = True
            break
        prev = ll

    fitted = DiscreteDistribution(atoms, p / p.sum())
    return EmResult(
        distribution=fitted,
        birth_rate=n / (w + fitted.mean()),
        loglik_trace=np.asarray(trace),
        iterations=iterations,
        converged=converged,
    )


def _simplex_lattice(d: int, divisions: int) -> np.ndarray:
    """All mass vectors with entries k/divisions summing to 1, in a fixed order."""
    if d == 1:
        return np.ones((1, 1))
    if d == 2:
        i = np.arange(divisions + 1)
        return np.column_stack([i, divisions - i]) / divisions
    if d == 3:
        i = np.arange(divisions + 1)
        reps = divisions + 1 - i
        first = np.repeat(i, reps)
        second = np.concatenate([np.arange(r) for r in reps])
        return np.column_stack([first, second, divisions - first - second]) / divisions
    import itertools

    cuts = itertools.combinations(range(divisions + d - 1), d - 1)
    rows = []
    for c in cuts:
        parts = np.diff(np.concatenate(([-1], np.array(c), [divisions + d - 1]))) - 1
        rows.append(parts)
    return np.asarray(rows, dtype=float) / divisions


def _score_candidates(P: np.ndarray, weights: np.ndarray, atoms: np.ndarray, w: float, n: int):
    numer = P @ weights.T
    with np.errstate(divide="ignore", invalid="ignore"):
        ll = np.sum(np.log(numer), axis=1) - n * np.log(w + P @ atoms)
    ll[np.any(numer <= 0.0, axis=1)] = -np.inf
    return ll


def npmle_oracle(segments: list[Segment], window_length: float, grid) -> DiscreteDistribution:
    """Brute-force maximizer of the marginal segment log likelihood.

    Dense scan of the probability simplex over the grid atoms (resolution
    1e-3 up to three atoms, coarser above to stay within the candidate
    budget) followed by shrinking-box refinement down to steps of 1e-7.
    Exists purely to cross-check ``laslett_em``; exponential in the number
    of atoms, hence the cap at ORACLE_MAX_ATOMS. Ties are broken by the
    first maximum in lattice order.
    """
    atoms = np.unique(np.asarray(grid, dtype=float))
    d = atoms.size
    if d > ORACLE_MAX_ATOMS:
        raise EstimationError(f"oracle supports at most {ORACLE_MAX_ATOMS} atoms, got {d}")
    if d == 0 or np.any(atoms <= 0):
        raise EstimationError("grid atoms must be positive")
    if window_length <= 0:
        raise ValueError(f"window_length must be positive, got {window_length}")
    if not segments:
        raise EstimationError("need at least one segment")
    weights = _atom_weights(segments, atoms, window_length)
    n = len(segments)
    w = float(window_length)
    if d == 1:
        return DiscreteDistribution(atoms, np.ones(1))

    divisions = 1000
    while divisions > 2 and math.comb(divisions + d - 1, d - 1) > ORACLE_COARSE_CAP:
        divisions -= 1
    P = _simplex_lattice(d, divisions)
    ll = _score_candidates(P, weights, atoms, w, n)
    best = P[int(np.argmax(ll))]

    step = 1.0 / divisions
    while step > ORACLE_REFINE_STEP:
        step /= 5.0
        offsets = np.arange(-5, 6) * step
        grids = np.meshgrid(*[best[j] + offsets for j in range(d - 1)], indexing="ij")
        free = np.column_stack([g.ravel() for g in grids])
        free = free[np.all(free >= 0.0, axis=1)]
        last = 1.0 - free.sum(axis=1)
        keep = last >= 0.0
        cand = np.column_stack([free[keep], last[keep]])
        if cand.size == 0:
            continue
        ll = _score_candidates(cand, weights, atoms, w, n)
        best = cand[int(np.argmax(ll))]

    return DiscreteDistribution(atoms, best / best.sum())


def _as_cdf_steps(obj):
    if isinstance(obj, DiscreteDistribution):
        return obj.atoms, np.cumsum(obj.masses)
    if isinstance(obj, StepSurvival):
        return obj.jump_times, 1.0 - obj.survival_values
    raise TypeError(f"unsupported estimate type {type(obj).__name__}")


def gof_discrepancy(a, b) -> float:
    """Sup distance between two estimated cdfs over their pooled jump points.

    Accepts StepSurvival or DiscreteDistribution on either side. A purely
    descriptive statistic for comparing estimators fitted to the same data.
    """
    times_a, cdf_a = _as_cdf_steps(a)
    times_b, cdf_b = _as_cdf_steps(b)
    if times_a.size == 0 or times_b.size == 0:
        raise EstimationError("empty estimate")
    points = np.union1d(times_a, times_b)
    fa = np.concatenate(([0.0], cdf_a))[np.searchsorted(times_a, points, side="right")]
    fb = np.concatenate(([0.0], cdf_b))[np.searchsorted(times_b, points, side="right")]
    return float(np.max(np.abs(fa - fb)))
