"""Monte Carlo harness comparing the estimators against the truth.

``mc_compare`` runs seeded replicates of one sampling scheme, applies the
requested estimators, and aggregates pointwise bias, variance and MSE of
the estimated cdf on a grid, with pass/fail verdicts (MSE decomposition,
and the variance ordering between the size-biased NPMLE and the
delayed-entry product-limit estimator when both are present).

``tail_failure_demo`` contrasts a gap law with infinite inverse moment
against one with a finite inverse moment: it tabulates sqrt(n) times the
sup error near zero across growing n for both estimators, the regime where
root-n convergence needs E(1/X) to be finite. It demonstrates rather than
tests.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .distributions import GapDistribution, parse_distribution
from .errors import EstimationError
from .npmle import bin_segments, cox_vardi_from_pairs, default_grid, laslett_em
from .product_limit import palmer_cox, window_product_limit, winter_foldes
from .sampling import (
    sample_equilibrium,
    sample_segment_replicates,
    sample_window_replicates,
)
from .seeding import child_seed

SCHEME_ESTIMATORS = {
    "equilibrium": ("wf", "cv"),
    "window": ("wpl",),
    "segments": ("palmer_cox", "em"),
}

MSE_IDENTITY_TOL = 1e-10


@dataclass
class McConfig:
    """Configuration for one Monte Carlo comparison run."""

    dist_spec: str
    scheme: str
    n: int
    replicates: int
    seed: int
    estimators: tuple[str, ...] = ()
    window_length: float | None = None
    birth_rate: float | None = None
    bin_width: float = 0.1
    grid_size: int = 40
    check_time: float = 1.0
    threads: int = 1

    def __post_init__(self):
        if self.scheme not in SCHEME_ESTIMATORS:
            raise EstimationError(f"unknown scheme {self.scheme!r}")
        if not self.estimators:
            self.estimators = SCHEME_ESTIMATORS[self.scheme]
        allowed = set(SCHEME_ESTIMATORS[self.scheme])
        bad = [e for e in self.estimators if e not in allowed]
        if bad:
            raise EstimationError(
                f"estimator {bad[0]!r} does not apply to scheme {self.scheme!r}"
            )
        if self.scheme in ("window", "segments") and not self.window_length:
            raise EstimationError(f"scheme {self.scheme!r} needs window_length")
        if self.scheme == "segments" and not self.birth_rate:
            raise EstimationError("scheme 'segments' needs birth_rate")
        if self.n < 1 or self.replicates < 1:
            raise EstimationError("n and replicates must be >= 1")
        if self.threads < 1:
            raise EstimationError("threads must be >= 1")

    def echo(self) -> dict:
        return {
            "dist": self.dist_spec,
            "scheme": self.scheme,
            "n": self.n,
            "replicates": self.replicates,
            "seed": self.seed,
            "estimators": list(self.estimators),
            "window_length": self.window_length,
            "birth_rate": self.birth_rate,
            "bin_width": self.bin_width,
            "grid_size": self.grid_size,
            "check_time": self.check_time,
        }


@dataclass
class EstimatorSummary:
    """Pointwise accuracy of one estimator across the replicates."""

    name: str
    bias: np.ndarray
    variance: np.ndarray
    mse: np.ndarray
    beyond_tail: int


@dataclass
class McReport:
    config: dict
    grid: np.ndarray
    true_cdf: np.ndarray
    summaries: dict[str, EstimatorSummary]
    verdicts: dict[str, bool] = field(default_factory=dict)

    @property
    def all_pass(self) -> bool:
        return all(self.verdicts.values())

    def to_json_dict(self) -> dict:
        return {
            "config": self.config,
            "grid": self.grid.tolist(),
            "true_cdf": self.true_cdf.tolist(),
            "estimators": {
                name: {
                    "bias": s.bias.tolist(),
                    "variance": s.variance.tolist(),
                    "mse": s.mse.tolist(),
                    "beyond_tail": s.beyond_tail,
                }
                for name, s in self.summaries.items()
            },
            "verdicts": self.verdicts,
        }

    def csv_rows(self) -> list[tuple]:
        rows = []
        for name, s in self.summaries.items():
            for t, b, v, m in zip(self.grid, s.bias, s.variance, s.mse):
                rows.append((name, float(t), float(b), float(v), float(m)))
        return rows


def _estimate_curve(tag: str, data, config: McConfig):
    """Fit one estimator and return (jump_times, cdf_values)."""
    if tag == "wf":
        est = winter_foldes(data)
        return est.jump_times, 1.0 - est.survival_values
    if tag == "cv":
        dist = cox_vardi_from_pairs(data)
        return dist.atoms, np.cumsum(dist.masses)
    if tag == "wpl":
        est = window_product_limit(data)
        return est.jump_times, 1.0 - est.survival_values
    if tag == "palmer_cox":
        est = palmer_cox(data, config.window_length)
        return est.jump_times, 1.0 - est.survival_values
    if tag == "em":
        binned = bin_segments(data, config.bin_width)
        grid = default_grid(binned, config.window_length, config.bin_width)
        result = laslett_em(binned, config.window_length, grid)
        return result.distribution.atoms, np.cumsum(result.distribution.masses)
    raise EstimationError(f"unknown estimator {tag!r}")


def _simulate(config: McConfig, dist: GapDistribution, rep: int):
    seed = child_seed(config.seed, rep)
    if config.scheme == "equilibrium":
        return sample_equilibrium(dist, config.n, seed)
    if config.scheme == "window":
        reps = sample_window_replicates(dist, 0.0, config.window_length, config.n, seed)
        return [o for window in reps for o in window]
    reps = sample_segment_replicates(
        config.birth_rate, dist, 0.0, config.window_length, config.n, seed
    )
    return [s for window in reps for s in window]


def _step_cdf_at(times, cdf, grid):
    idx = np.searchsorted(times, grid, side="right")
    return np.concatenate(([0.0], cdf))[idx]


def mc_compare(config: McConfig) -> McReport:
    """Run the replicated comparison described by ``config``."""
    dist = parse_distribution(config.dist_spec)
    base = np.linspace(dist.ppf(0.05), dist.ppf(0.95), config.grid_size)
    grid = np.unique(np.append(base, config.check_time))
    true_cdf = np.asarray(dist.cdf(grid), dtype=float)

    def one_replicate(rep: int):
        data = _simulate(config, dist, rep)
        curves = {}
        tails = {}
        for tag in config.estimators:
            times, cdf = _estimate_curve(tag, data, config)
            curves[tag] = _step_cdf_at(times, cdf, grid)
            tails[tag] = int(np.sum(grid > times[-1]))
        return curves, tails

    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            results = list(pool.map(one_replicate, range(config.replicates)))
    else:
        results = [one_replicate(rep) for rep in range(config.replicates)]

    summaries = {}
    for tag in config.estimators:
        stack = np.vstack([curves[tag] for curves, _ in results])
        mean_hat = stack.mean(axis=0)
        bias = mean_hat - true_cdf
        variance = np.mean((stack - mean_hat) ** 2, axis=0)
        mse = np.mean((stack - true_cdf) ** 2, axis=0)
        summaries[tag] = EstimatorSummary(
            name=tag,
            bias=bias,
            variance=variance,
            mse=mse,
            beyond_tail=int(sum(tails[tag] for _, tails in results)),
        )

    verdicts = {
        "mse_identity": bool(
            all(
                np.max(np.abs(s.mse - (s.bias**2 + s.variance))) <= MSE_IDENTITY_TOL
                for s in summaries.values()
            )
        )
    }
    if "wf" in summaries and "cv" in summaries:
        k = int(np.argmin(np.abs(grid - config.check_time)))
        verdicts["efficiency_ordering"] = bool(
            summaries["cv"].variance[k] <= summaries["wf"].variance[k]
        )
    return McReport(
        config=config.echo(),
        grid=grid,
        true_cdf=true_cdf,
        summaries=summaries,
        verdicts=verdicts,
    )


@dataclass
class TailRow:
    dist: str
    estimator: str
    n: int
    sqrt_n_sup_error: float


@dataclass
class TailReport:
    eps: float
    replicates: int
    seed: int
    rows: list[TailRow]

    def to_json_dict(self) -> dict:
        return {
            "eps": self.eps,
            "replicates": self.replicates,
            "seed": self.seed,
            "rows": [
                {
                    "dist": r.dist,
                    "estimator": r.estimator,
                    "n": r.n,
                    "sqrt_n_sup_error": r.sqrt_n_sup_error,
                }
                for r in self.rows
            ],
        }

    def csv_rows(self) -> list[tuple]:
        return [(r.dist, r.estimator, r.n, r.sqrt_n_sup_error) for r in self.rows]


def sup_cdf_error(times, cdf, dist: GapDistribution, eps: float) -> float:
    """Exact sup over [0, eps] of |step cdf - true cdf|.

    The step function is constant between jumps and the truth is monotone,
    so the sup is attained at a jump (from either side) or at eps.
    """
    times = np.asarray(times, dtype=float)
    cdf = np.asarray(cdf, dtype=float)
    inside = times <= eps
    pts = times[inside]
    truth = np.asarray(dist.cdf(pts), dtype=float)
    right = cdf[inside]
    left = np.concatenate(([0.0], cdf))[:-1][inside]
    worst = 0.0
    if pts.size:
        worst = max(np.max(np.abs(right - truth)), np.max(np.abs(left - truth)))
    at_eps = abs(_step_cdf_at(times, cdf, np.array([eps]))[0] - float(dist.cdf(eps)))
    return float(max(worst, at_eps))


def tail_failure_demo(
    dist_infinite: GapDistribution,
    dist_finite: GapDistribution,
    n: int,
    replicates: int,
    eps: float,
    seed: int = 0,
    doublings: int = 3,
) -> TailReport:
    """Tabulate sqrt(n) * sup_{t <= eps} |F_hat - F| across doubling n.

    Requires the inverse-moment diagnostic to disagree between the two
    distributions (that disagreement is what the table illustrates).
    """
    diag_inf = dist_infinite.integrability_diagnostic()
    diag_fin = dist_finite.integrability_diagnostic()
    if diag_inf.finite == diag_fin.finite:
        raise EstimationError(
            "the two distributions must disagree on the inverse-moment diagnostic"
        )
    ns = [n * 2**k for k in range(doublings + 1)]
    rows = []
    for di, dist in enumerate((dist_infinite, dist_finite)):
        label = dist.spec()
        for nn in ns:
            sups = {"wf": [], "cv": []}
            for rep in range(replicates):
                pairs = sample_equilibrium(dist, nn, child_seed(seed, di, nn, rep))
                est = winter_foldes(pairs)
                sups["wf"].append(
                    sup_cdf_error(est.jump_times, 1.0 - est.survival_values, dist, eps)
                )
                cv = cox_vardi_from_pairs(pairs)
                sups["cv"].append(sup_cdf_error(cv.atoms, np.cumsum(cv.masses), dist, eps))
            for tag in ("wf", "cv"):
                rows.append(
                    TailRow(
                        dist=label,
                        estimator=tag,
                        n=nn,
                        sqrt_n_sup_error=float(np.sqrt(nn) * np.mean(sups[tag])),
                    )
                )
    return TailReport(eps=eps, replicates=replicates, seed=seed, rows=rows)
