"""Gap-time distributions and the equilibrium renewal functionals built on them.

A gap distribution F describes the interarrival time X of a renewal process
with finite mean mu. Besides the usual cdf/density/hazard surface, each
distribution exposes the quantities that drive the stationary (equilibrium)
process: the integrated survival function, the marginal hazard ``alpha`` of
the backward recurrence time, the occupation probabilities of the
before/astride/after phase at a fixed time point, the backward intensity
``alpha * p0 / p1`` (which collapses to 1/t for every F), and a diagnostic
for finiteness of the inverse moment E(1/X).

Built-in families: exponential, Weibull, uniform on an interval, and
discrete distributions given by atoms and masses. Spec strings of the form
``exp:<rate>``, ``weibull:<shape>:<scale>``, ``uniform:<a>:<b>`` and
``atoms:<a1>=<p1>,...`` round-trip through :func:`parse_distribution`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import integrate, special

from .errors import DistributionSpecError, EstimationError

# Adaptive quadrature settings: relative tolerance, and the survival mass
# allowed beyond the upper truncation point of improper integrals.
QUAD_RTOL = 1e-9
TAIL_MASS = 1e-12

# Inverse-moment divergence test: keep halving the lower integration limit
# until the added increment drops below _INCREMENT_TOL twice in a row, or
# give up after _HALVING_LIMIT halvings (lower limit ~ eps * 5e-20) with the
# last three increments all still above the threshold.
_INCREMENT_TOL = 1e-9
_HALVING_LIMIT = 64

_GRID_POINTS = 200_001  # dense grid for numeric inverse-cdf samplers


@dataclass(frozen=True)
class PointEvaluation:
    """F, density, survival, hazard and cumulative hazard at one time point.

    ``beta`` is NaN where survival is zero (hazard undefined there), and
    ``cum_hazard`` is +inf past the end of the support.
    """

    F: float
    f: float
    survival: float
    beta: float
    cum_hazard: float


@dataclass(frozen=True)
class OccupationProbabilities:
    """P{still before entry}, P{astride t}, P{already past} for the phase process."""

    p0: float
    p1: float
    p2: float


@dataclass(frozen=True)
class IntegrabilityReport:
    """Outcome of the E(1/X) diagnostic. ``value`` is +inf when divergent."""

    finite: bool
    value: float


class GapDistribution:
    """Base class for gap-time distributions with finite mean.

    Subclasses implement the family surface (``cdf``, ``pdf``, ``mean``,
    ``ppf``, ``sample``, ``spec``); everything else is derived here, with
    analytic overrides in the families where closed forms exist.
    ``cdf``/``pdf`` accept scalars or arrays.
    """

    support_lower: float = 0.0

    # -- family surface -------------------------------------------------

    def cdf(self, t):
        raise NotImplementedError

    def pdf(self, t):
        raise NotImplementedError

    def mean(self) -> float:
        """E(X); families override with closed forms, the fallback integrates 1 - F."""
        return self.integrated_survival(0.0)

    def ppf(self, u):
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """n iid draws from F."""
        raise NotImplementedError

    def spec(self) -> str:
        """Spec string accepted by :func:`parse_distribution`."""
        raise NotImplementedError

    # -- derived quantities ---------------------------------------------

    def survival(self, t):
        return 1.0 - self.cdf(t)

    def support_upper(self) -> float:
        """Truncation point leaving survival mass below TAIL_MASS."""
        return float(self.ppf(1.0 - TAIL_MASS))

    def integrated_survival(self, t: float) -> float:
        """Integral of 1 - F over (t, infinity), by adaptive quadrature."""
        hi = self.support_upper()
        if t >= hi:
            return 0.0
        val, _ = integrate.quad(self.survival, t, hi, epsrel=QUAD_RTOL, limit=200)
        return float(val)

    def hazard(self, t: float) -> float:
        """f / (1 - F); NaN where survival is zero."""
        s = float(self.survival(t))
        if s <= 0.0:
            return math.nan
        return float(self.pdf(t)) / s

    def cumulative_hazard(self, t: float) -> float:
        """Integral of the hazard over (0, t]; equals -log survival here."""
        s = float(self.survival(t))
        if s <= 0.0:
            return math.inf
        return -math.log(s)

    def evaluate(self, t: float) -> PointEvaluation:
        """cdf, density, survival, hazard and cumulative hazard at t >= 0."""
        if t < 0:
            raise ValueError(f"t must be nonnegative, got {t}")
        return PointEvaluation(
            F=float(self.cdf(t)),
            f=float(self.pdf(t)),
            survival=float(self.survival(t)),
            beta=self.hazard(t),
            cum_hazard=self.cumulative_hazard(t),
        )

    def alpha(self, t: float) -> float:
        """Marginal hazard of the backward recurrence time at t.

        alpha(t) = (1 - F(t)) / integral_t^inf (1 - F). NaN once the
        integrated survival has been exhausted.
        """
        if t < 0:
            raise ValueError(f"t must be nonnegative, got {t}")
        tail = self.integrated_survival(t)
        if tail <= 0.0:
            return math.nan
        return float(self.survival(t)) / tail

    def occupation(self, t: float) -> OccupationProbabilities:
        """Phase probabilities of the equilibrium pair (R, S) at time t.

        p0 = P{R > t}, p1 = P{R <= t < R + S} = t (1 - F(t)) / mu,
        p2 = 1 - p0 - p1.
        """
        if t < 0:
            raise ValueError(f"t must be nonnegative, got {t}")
        mu = self.mean()
        p0 = self.integrated_survival(t) / mu
        p1 = t * float(self.survival(t)) / mu
        p2 = min(max(1.0 - p0 - p1, 0.0), 1.0)
        return OccupationProbabilities(p0=p0, p1=p1, p2=p2)

    def backward_alpha(self, t: float) -> float:
        """Backward intensity alpha(t) * p0(t) / p1(t).

        Computed from its ingredients rather than simplified, so tests can
        confirm the identity backward_alpha(t) == 1/t. NaN where p1 is zero.
        """
        if t <= 0:
            raise ValueError(f"t must be positive, got {t}")
        occ = self.occupation(t)
        if occ.p1 <= 0.0:
            return math.nan
        return self.alpha(t) * occ.p0 / occ.p1

    def integrability_diagnostic(self, eps: float = 0.1) -> IntegrabilityReport:
        """Decide whether E(1/X) is finite and return its value if so.

        The tail integral over (eps, inf) always converges; near zero the
        lower limit is halved repeatedly and divergence is declared when the
        increments refuse to die out (see module constants).
        """
        if eps <= 0:
            raise ValueError(f"eps must be positive, got {eps}")

        def g(x):
            return self.pdf(x) / x

        hi = self.support_upper()
        eps_eff = min(eps, hi)
        total, _ = integrate.quad(g, eps_eff, hi, epsrel=QUAD_RTOL, limit=200)

        lo = max(self.support_lower, 0.0)
        if lo > 0.0:
            # Support bounded away from zero: the integrand is bounded by
            # pdf/lo, so the inverse moment is finite outright.
            if lo < eps_eff:
                head, _ = integrate.quad(g, lo, eps_eff, epsrel=QUAD_RTOL, limit=200)
                total += head
            return IntegrabilityReport(finite=True, value=float(total))

        upper = eps_eff
        small_in_a_row = 0
        recent = []
        for k in range(1, _HALVING_LIMIT + 1):
            lower = eps_eff * 2.0 ** (-k)
            inc, _ = integrate.quad(g, lower, upper, epsrel=QUAD_RTOL, limit=200)
            total += inc
            recent = (recent + [inc])[-3:]
            upper = lower
            if inc < _INCREMENT_TOL:
                small_in_a_row += 1
                if small_in_a_row >= 2:
                    return IntegrabilityReport(finite=True, value=float(total))
            else:
                small_in_a_row = 0
        if len(recent) == 3 and all(r >= _INCREMENT_TOL for r in recent):
            return IntegrabilityReport(finite=False, value=math.inf)
        return IntegrabilityReport(finite=True, value=float(total))

    # -- sampling helpers used by the observation-frame generators -------

    @cached_property
    def _length_biased_grid(self):
        lo = max(self.support_lower, 0.0)
        hi = self.support_upper()
        grid = np.linspace(lo, hi, _GRID_POINTS)
        with np.errstate(invalid="ignore"):
            weight = grid * np.asarray(self.pdf(grid), dtype=float)
        # t f(t) -> 0 as t -> 0 whenever the mean is finite; clear 0 * inf
        weight = np.nan_to_num(weight, nan=0.0)
        cdf = integrate.cumulative_trapezoid(weight, grid, initial=0.0)
        if cdf[-1] <= 0.0:
            raise EstimationError(
                f"length-biased grid for {self.spec()} carries no mass"
            )
        return cdf / cdf[-1], grid

    def sample_length_biased(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """n iid draws from the size-biased density t f(t) / mu.

        Default path inverts the size-biased cdf on a dense grid; families
        with an exact transform override it.
        """
        cdf, grid = self._length_biased_grid
        return np.interp(rng.uniform(size=n), cdf, grid)

    @cached_property
    def _equilibrium_grid(self):
        hi = self.support_upper()
        grid = np.linspace(0.0, hi, _GRID_POINTS)
        weight = np.asarray(self.survival(grid), dtype=float)
        cdf = integrate.cumulative_trapezoid(weight, grid, initial=0.0)
        if cdf[-1] <= 0.0:
            raise EstimationError(
                f"equilibrium grid for {self.spec()} carries no mass"
            )
        return cdf / cdf[-1], grid

    def sample_equilibrium_recurrence(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """n iid draws from the equilibrium recurrence density (1 - F) / mu."""
        cdf, grid = self._equilibrium_grid
        return np.interp(rng.uniform(size=n), cdf, grid)

    def __repr__(self):
        return f"{type(self).__name__}({self.spec()!r})"


class Exponential(GapDistribution):
    """Exponential gaps with the given rate.

    Memoryless, so the gap hazard and the backward-recurrence hazard are
    both constant and the equilibrium recurrence law is the gap law itself.
    """

    def __init__(self, rate: float):
        rate = float(rate)
        if not (rate > 0 and math.isfinite(rate)):
            raise DistributionSpecError(f"rate must be > 0, got {rate}")
        self.rate = rate

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t > 0, -np.expm1(-self.rate * np.maximum(t, 0.0)), 0.0)

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t >= 0, self.rate * np.exp(-self.rate * np.maximum(t, 0.0)), 0.0)

    def mean(self):
        return 1.0 / self.rate

    def ppf(self, u):
        return -np.log1p(-np.asarray(u, dtype=float)) / self.rate

    def integrated_survival(self, t):
        return math.exp(-self.rate * t) / self.rate

    def sample(self, rng, n):
        return rng.exponential(1.0 / self.rate, size=n)

    def sample_length_biased(self, rng, n):
        # Size-biasing an exponential gives a shape-2 gamma.
        return rng.gamma(2.0, 1.0 / self.rate, size=n)

    def sample_equilibrium_recurrence(self, rng, n):
        return rng.exponential(1.0 / self.rate, size=n)

    def spec(self):
        return f"exp:{self.rate:g}"


class Weibull(GapDistribution):
    """Weibull gaps with shape k and scale lam: F(t) = 1 - exp(-(t/lam)^k)."""

    def __init__(self, shape: float, scale: float):
        shape, scale = float(shape), float(scale)
        if not (shape > 0 and math.isfinite(shape)):
            raise DistributionSpecError(f"shape must be > 0, got {shape}")
        if not (scale > 0 and math.isfinite(scale)):
            raise DistributionSpecError(f"scale must be > 0, got {scale}")
        self.shape = shape
        self.scale = scale

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        z = (np.maximum(t, 0.0) / self.scale) ** self.shape
        return np.where(t > 0, -np.expm1(-z), 0.0)

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        tt = np.maximum(t, 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            z = (tt / self.scale) ** self.shape
            dens = (self.shape / self.scale) * (tt / self.scale) ** (self.shape - 1.0) * np.exp(-z)
        if self.shape >= 1.0:
            dens = np.where(t > 0, dens, self.shape / self.scale if self.shape == 1.0 else 0.0)
        else:
            dens = np.where(t > 0, dens, np.inf)
        return np.where(t < 0, 0.0, dens)

    def mean(self):
        return self.scale * math.gamma(1.0 + 1.0 / self.shape)

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        return self.scale * (-np.log1p(-u)) ** (1.0 / self.shape)

    def integrated_survival(self, t):
        # Substituting v = (u/scale)^shape turns the tail integral into an
        # upper incomplete gamma with parameter 1/shape.
        k = self.shape
        z = (max(t, 0.0) / self.scale) ** k
        return (self.scale / k) * math.gamma(1.0 / k) * float(special.gammaincc(1.0 / k, z))

    def sample(self, rng, n):
        return self.scale * rng.weibull(self.shape, size=n)

    def sample_length_biased(self, rng, n):
        # Size-biased cdf is the regularized lower incomplete gamma of
        # (q/scale)^shape with parameter 1 + 1/shape; invert it exactly.
        u = rng.uniform(size=n)
        z = special.gammaincinv(1.0 + 1.0 / self.shape, u)
        return self.scale * z ** (1.0 / self.shape)

    def spec(self):
        return f"weibull:{self.shape:g}:{self.scale:g}"


class UniformInterval(GapDistribution):
    """Uniform gaps on [a, b] with 0 <= a < b.

    The support is bounded, so survival reaches zero at b: hazard-type
    quantities (beta, alpha, backward_alpha) are NaN from b on and the
    cumulative hazard is +inf there.
    """

    def __init__(self, a: float, b: float):
        a, b = float(a), float(b)
        if not (0.0 <= a < b and math.isfinite(b)):
            raise DistributionSpecError(f"need 0 <= a < b, got a={a}, b={b}")
        self.a = a
        self.b = b
        self.support_lower = a

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        return np.clip((t - self.a) / (self.b - self.a), 0.0, 1.0)

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        inside = (t >= self.a) & (t <= self.b)
        return np.where(inside, 1.0 / (self.b - self.a), 0.0)

    def mean(self):
        return 0.5 * (self.a + self.b)

    def ppf(self, u):
        return self.a + (self.b - self.a) * np.asarray(u, dtype=float)

    def support_upper(self):
        return self.b

    def integrated_survival(self, t):
        if t >= self.b:
            return 0.0
        if t <= self.a:
            return (self.a - t) + 0.5 * (self.b - self.a)
        return 0.5 * (self.b - t) ** 2 / (self.b - self.a)

    def sample(self, rng, n):
        return rng.uniform(self.a, self.b, size=n)

    def spec(self):
        return f"uniform:{self.a:g}:{self.b:g}"


class DiscreteDistribution(GapDistribution):
    """Distribution with point masses at strictly increasing positive atoms.

    The cdf is a right-continuous step function; hazard-type quantities use
    sums over atoms (``beta`` at an atom is its mass over the survival just
    before it) and the inverse-moment diagnostic is the finite sum of
    mass/atom.
    """

    def __init__(self, atoms, masses):
        atoms = np.asarray(atoms, dtype=float)
        masses = np.asarray(masses, dtype=float)
        if atoms.ndim != 1 or atoms.size == 0 or atoms.shape != masses.shape:
            raise DistributionSpecError("atoms and masses must be matching nonempty 1-d sequences")
        if not np.all(atoms > 0):
            raise DistributionSpecError("atoms must be positive")
        if not np.all(np.diff(atoms) > 0):
            raise DistributionSpecError("atoms must be strictly increasing")
        if np.any(masses < 0):
            raise DistributionSpecError("masses must be nonnegative")
        total = float(masses.sum())
        if abs(total - 1.0) > 1e-9:
            raise DistributionSpecError(f"masses must sum to 1, got {total!r}")
        self.atoms = atoms
        self.masses = masses / total
        self._cum = np.cumsum(self.masses)
        self._cum[-1] = 1.0
        self.support_lower = float(atoms[0])

    @classmethod
    def from_weights(cls, atoms, weights) -> "DiscreteDistribution":
        """Build from nonnegative weights, normalizing them to masses."""
        weights = np.asarray(weights, dtype=float)
        total = weights.sum()
        if total <= 0:
            raise DistributionSpecError("weights must have positive total")
        return cls(atoms, weights / total)

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.atoms, t, side="right")
        out = np.where(idx > 0, np.concatenate(([0.0], self._cum))[idx], 0.0)
        return out if out.ndim else float(out)

    def cdf_left(self, t: float) -> float:
        """F(t-), the left limit of the step cdf."""
        idx = int(np.searchsorted(self.atoms, t, side="left"))
        return float(self._cum[idx - 1]) if idx > 0 else 0.0

    def pdf(self, t):
        """Mass at t (zero except exactly at atoms)."""
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.atoms, t, side="left")
        idx_c = np.minimum(idx, self.atoms.size - 1)
        hit = self.atoms[idx_c] == t
        out = np.where(hit, self.masses[idx_c], 0.0)
        return out if out.ndim else float(out)

    def mean(self):
        return float(np.dot(self.atoms, self.masses))

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        idx = np.searchsorted(self._cum, u, side="left")
        idx = np.minimum(idx, self.atoms.size - 1)
        out = self.atoms[idx]
        return out if out.ndim else float(out)

    def support_upper(self):
        return float(self.atoms[-1])

    def integrated_survival(self, t):
        return float(np.dot(self.masses, np.maximum(self.atoms - t, 0.0)))

    def hazard(self, t):
        s_left = 1.0 - self.cdf_left(t)
        if s_left <= 0.0:
            return math.nan
        return float(self.pdf(t)) / s_left

    def cumulative_hazard(self, t):
        live = self.atoms <= t
        if not live.any():
            return 0.0
        s_left = 1.0 - np.concatenate(([0.0], self._cum))[:-1]
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(s_left > 0, self.masses / s_left, np.inf)
        return float(np.sum(terms[live]))

    def integrability_diagnostic(self, eps: float = 0.1) -> IntegrabilityReport:
        if eps <= 0:
            raise ValueError(f"eps must be positive, got {eps}")
        return IntegrabilityReport(finite=True, value=float(np.dot(self.masses, 1.0 / self.atoms)))

    def sample(self, rng, n):
        return rng.choice(self.atoms, size=n, p=self.masses)

    def sample_length_biased(self, rng, n):
        weights = self.atoms * self.masses
        return rng.choice(self.atoms, size=n, p=weights / weights.sum())

    def sample_equilibrium_recurrence(self, rng, n):
        # The equilibrium density is piecewise constant between atoms, so
        # its cdf is piecewise linear and invertible exactly on the knots.
        knots = np.concatenate(([0.0], self.atoms))
        mu = self.mean()
        g = (mu - np.array([self.integrated_survival(v) for v in knots])) / mu
        g[-1] = 1.0
        return np.interp(rng.uniform(size=n), g, knots)

    def spec(self):
        parts = ",".join(f"{a:g}={m:.12g}" for a, m in zip(self.atoms, self.masses))
        return f"atoms:{parts}"


def parse_distribution(spec: str) -> GapDistribution:
    """Parse a distribution spec string.

    Accepted forms: ``exp:<rate>``, ``weibull:<shape>:<scale>``,
    ``uniform:<a>:<b>``, ``atoms:<a1>=<p1>,<a2>=<p2>,...``.
    """
    text = spec.strip()
    try:
        head, _, rest = text.partition(":")
        if not rest:
            raise DistributionSpecError("missing parameters")
        if head == "exp":
            return Exponential(_number(rest))
        if head == "weibull":
            shape, scale = rest.split(":")
            return Weibull(_number(shape), _number(scale))
        if head == "uniform":
            a, b = rest.split(":")
            return UniformInterval(_number(a), _number(b))
        if head == "atoms":
            atoms, masses = [], []
            for item in rest.split(","):
                a, _, p = item.partition("=")
                if not p:
                    raise DistributionSpecError(f"bad atom entry {item!r}")
                atoms.append(_number(a))
                masses.append(_number(p))
            return DiscreteDistribution(atoms, masses)
        raise DistributionSpecError(f"unknown family {head!r}")
    except DistributionSpecError as exc:
        raise DistributionSpecError(f"invalid distribution spec {spec!r}: {exc}") from None
    except ValueError as exc:
        raise DistributionSpecError(f"invalid distribution spec {spec!r}: {exc}") from None


def _number(token: str) -> float:
    value = float(token)
    if not math.isfinite(value):
        raise DistributionSpecError(f"non-finite number {token!r}")
    return value
