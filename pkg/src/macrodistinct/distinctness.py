"""Distinguishability of two states under a limited-resolution measurement.

An ideal projective measurement of an observable ``X`` is followed by
additive Gaussian noise of standard deviation ``sigma``. The smeared outcome
density of a state is therefore a Gaussian mixture centred on the spectrum
of ``X`` with the Born weights as mixture weights. The single-shot guessing
probability between two states is ``(1 + D) / 2`` with ``D`` the total
variation distance of their outcome distributions, and the largest noise
still allowing a target guessing probability is found by bisection.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Optional

import numpy as np
from scipy import optimize, special

from . import config
from .qcore import LayoutError, State, as_density, partial_trace

SQRT2 = math.sqrt(2.0)


class GridError(ValueError):
    """Raised when an outcome grid cannot resolve the smeared distribution."""


@dataclasses.dataclass(frozen=True, eq=False)
class Observable:
    """Hermitian operator on factor ``label`` with its merged spectral decomposition."""

    matrix: np.ndarray
    label: str = "M"

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("observable must be a square matrix")
        if np.max(np.abs(m - m.conj().T)) > config.current().hermitian * max(1.0, np.abs(m).max()):
            raise ValueError("observable is not Hermitian")
        m = 0.5 * (m + m.conj().T)
        m.flags.writeable = False
        lam, vec = np.linalg.eigh(m)
        # merge (near-)degenerate eigenvalues: only the spectral measure matters
        tol = config.current().degeneracy
        groups = np.concatenate([[0], np.cumsum(np.diff(lam) > tol)])
        spectrum = np.array([lam[groups == g].mean() for g in range(groups[-1] + 1)])
        vec.flags.writeable = False
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "eigenvectors", vec)
        object.__setattr__(self, "groups", groups)
        object.__setattr__(self, "spectrum", spectrum)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def projectors(self) -> list:
        out = []
        for g in range(len(self.spectrum)):
            v = self.eigenvectors[:, self.groups == g]
            out.append(v @ v.conj().T)
        return out

    @property
    def spectral_range(self) -> float:
        return float(self.spectrum[-1] - self.spectrum[0])

    @property
    def spectral_gap(self) -> float:
        if len(self.spectrum) < 2:
            return math.inf
        return float(np.diff(self.spectrum).min())

    def eigenvalue_per_vector(self) -> np.ndarray:
        return self.spectrum[self.groups]

    def function(self, f) -> np.ndarray:
        """Matrix ``f(X)``."""
        vals = np.asarray(f(self.eigenvalue_per_vector()), dtype=complex)
        v = self.eigenvectors
        return (v * vals) @ v.conj().T


@dataclasses.dataclass(frozen=True)
class NoiseKernel:
    """Zero-mean Gaussian outcome noise; ``sigma == 0`` is the ideal measurement."""

    sigma: float

    def __post_init__(self):
        if not (self.sigma >= 0) or math.isnan(self.sigma):
            raise ValueError(f"noise standard deviation must be >= 0, got {self.sigma}")

    def density(self, x) -> np.ndarray:
        s = self.sigma
        return np.exp(-0.5 * (np.asarray(x) / s) ** 2) / (s * math.sqrt(2 * math.pi))


def _standard_mass(a, b):
    """Standard normal probability of ``[a, b]``, accurate in the tails and near zero."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ea = special.erf(a / SQRT2)
    eb = special.erf(b / SQRT2)
    central = 0.5 * (eb - ea)
    right = 0.5 * (special.erfc(a / SQRT2) - special.erfc(b / SQRT2))
    left = 0.5 * (special.erfc(-b / SQRT2) - special.erfc(-a / SQRT2))
    small = np.maximum(np.abs(a), np.abs(b)) < 1.0
    return np.where(small | ((a < 0) & (b > 0)), central, np.where(a >= 0, right, left))


@dataclasses.dataclass(frozen=True, eq=False)
class OutcomeDistribution:
    """Outcome statistics, either a discrete pmf or a density sampled on a uniform grid.

    Gridded distributions produced by :func:`coarse_distribution` also keep
    the Gaussian-mixture description (``centers``, ``center_weights``,
    ``sigma``) they were sampled from.
    """

    kind: str
    support: np.ndarray
    weights: np.ndarray
    centers: Optional[np.ndarray] = None
    center_weights: Optional[np.ndarray] = None
    sigma: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("discrete", "gridded"):
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        support = np.asarray(self.support, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if support.shape != weights.shape or support.ndim != 1:
            raise ValueError("support and weights must be 1-d arrays of equal length")
        if np.any(weights < -config.current().distribution_norm):
            raise ValueError("negative probability weight")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "weights", weights)
        total = self.total_mass()
        if abs(total - 1.0) > config.current().distribution_norm:
            raise ValueError(f"distribution does not normalize (total mass {total:.12g})")

    @property
    def spacing(self) -> float:
        if self.kind != "gridded":
            raise ValueError("only gridded distributions have a spacing")
        return float(self.support[1] - self.support[0])

    def total_mass(self) -> float:
        if self.kind == "discrete":
            return float(self.weights.sum())
        return float(np.trapezoid(self.weights, self.support))

    @property
    def has_mixture(self) -> bool:
        return self.centers is not None and self.sigma is not None and self.sigma > 0


def _weights_by_eigenvalue(state: State, X: Observable) -> np.ndarray:
    rho = as_density(state)
    if X.label not in rho.layout.labels:
        raise LayoutError(f"observable acts on {X.label!r}, state has {rho.layout.labels}")
    sub = partial_trace(rho, [X.label]) if len(rho.layout.labels) > 1 else rho
    if sub.layout.total != X.dim:
        raise LayoutError(f"observable dimension {X.dim} != subsystem dimension {sub.layout.total}")
    v = X.eigenvectors
    diag = np.real(np.sum(v.conj() * (sub.matrix @ v), axis=0))
    w = np.bincount(X.groups, weights=diag, minlength=len(X.spectrum))
    return np.clip(w, 0.0, None)


def ideal_distribution(state: State, X: Observable) -> OutcomeDistribution:
    """Born-rule distribution over the distinct eigenvalues of ``X``."""
    return OutcomeDistribution("discrete", X.spectrum.copy(), _weights_by_eigenvalue(state, X))


def default_grid(X: Observable, sigma: float) -> np.ndarray:
    """Uniform grid covering the spectrum plus six standard deviations on each side.

    Spacing is ``min(sigma/8, gap/4)``, except that the gap term never
    drives the spacing below ``sigma/64``: for gaps smaller than sigma the
    mixture is already smooth on the scale of sigma.
    """
    if sigma <= 0:
        raise GridError("gridded outcome densities need sigma > 0")
    h = min(sigma / 8.0, max(X.spectral_gap / 4.0, sigma / 64.0))
    lo = X.spectrum[0] - 6.0 * sigma
    hi = X.spectrum[-1] + 6.0 * sigma
    n = int(math.ceil((hi - lo) / h)) + 1
    if n > config.current().max_grid_points:
        raise GridError(f"default grid would need {n} points")
    return lo + h * np.arange(n)


def _mixture_density(x, centers, weights, sigma):
    z = (np.asarray(x)[..., None] - centers) / sigma
    return (np.exp(-0.5 * z * z) @ weights) / (sigma * math.sqrt(2 * math.pi))


def coarse_distribution(state: State, X: Observable, kernel: NoiseKernel, grid=None) -> OutcomeDistribution:
    """Outcome density of ``X`` blurred by ``kernel``, sampled on ``grid``."""
    sigma = kernel.sigma
    if sigma <= 0:
        raise GridError("coarse_distribution needs sigma > 0; use ideal_distribution for sigma = 0")
    if grid is None:
        grid = default_grid(X, sigma)
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 3:
        raise GridError("grid must be a 1-d array with at least three points")
    h = grid[1] - grid[0]
    if not np.allclose(np.diff(grid), h, rtol=1e-9, atol=0):
        raise GridError("grid must be uniform")
    if h > sigma / 4.0:
        raise GridError(f"grid spacing {h:.4g} exceeds sigma/4 = {sigma / 4:.4g}")
    slack = 1e-9 * max(1.0, abs(grid[0]), abs(grid[-1]))
    if grid[0] > X.spectrum[0] - 6 * sigma + slack or grid[-1] < X.spectrum[-1] + 6 * sigma - slack:
        raise GridError("grid must span the spectrum plus 6 sigma on both sides")
    w = _weights_by_eigenvalue(state, X)
    dens = _mixture_density(grid, X.spectrum, w, sigma)
    return OutcomeDistribution("gridded", grid, dens, X.spectrum.copy(), w, float(sigma))


def _mixture_distance(centers, diff, sigma, h) -> float:
    """Exact ``(1/2) int |sum_i diff_i g_sigma(x - c_i)| dx``.

    Sign changes are bracketed on a grid of spacing ``h`` reaching twelve
    standard deviations past the outermost centres, refined with Brent's
    method, and the integral is assembled from Gaussian CDF differences.
    """
    active = np.abs(diff) > 0
    if not active.any():
        return 0.0
    c, w = centers[active], diff[active]
    lo, hi = c.min() - 12 * sigma, c.max() + 12 * sigma
    n = min(int(math.ceil((hi - lo) / h)) + 1, config.current().max_grid_points)
    x = np.linspace(lo, hi, n)

    def f(t):
        return float(_mixture_density(t, c, w, sigma))

    fx = _mixture_density(x, c, w, sigma)
    # rounding-level values carry no sign; misplacing a split there costs < 1e-13
    sign = np.where(np.abs(fx) > 1e-15 * np.abs(fx).max(), np.sign(fx), 0.0)
    roots = []
    last = None
    for i in range(n):
        if sign[i] == 0:
            continue
        if last is not None and sign[i] != sign[last]:
            a, b = x[last], x[i]
            if f(a) * f(b) < 0:
                roots.append(optimize.brentq(f, a, b, xtol=1e-15 * max(1.0, sigma)))
            else:
                roots.append(0.5 * (a + b))
        last = i
    edges = np.concatenate([[-np.inf], roots, [np.inf]])
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        mass = _standard_mass((a - c) / sigma, (b - c) / sigma)
        total += abs(float(mass @ w))
    return min(1.0, 0.5 * total)


def _linear_abs_integral(x, f) -> float:
    """Integral of ``|f|`` for the piecewise-linear interpolant of samples ``f``."""
    a, b = f[:-1], f[1:]
    h = np.diff(x)
    same = a * b >= 0
    out = np.where(same, 0.5 * h * np.abs(a + b), 0.0)
    cross = ~same
    denom = np.abs(a[cross]) + np.abs(b[cross])
    out[cross] = 0.5 * h[cross] * (a[cross] ** 2 + b[cross] ** 2) / denom
    return float(out.sum())


def classical_trace_distance(p, q) -> float:
    """Total variation distance between two outcome distributions.

    Plain arrays are treated as discrete distributions over a shared index
    set. Gridded densities that carry their Gaussian-mixture description
    are compared exactly; other gridded densities use the trapezoid rule on
    ``|p - q|`` with linearly located crossings.
    """
    if not isinstance(p, OutcomeDistribution) or not isinstance(q, OutcomeDistribution):
        pa = np.asarray(getattr(p, "weights", p), dtype=float)
        qa = np.asarray(getattr(q, "weights", q), dtype=float)
        if pa.shape != qa.shape:
            raise LayoutError(f"outcome sets differ: {pa.shape} vs {qa.shape}")
        return float(min(1.0, 0.5 * np.abs(pa - qa).sum()))
    if p.kind != q.kind or p.support.shape != q.support.shape or not np.allclose(p.support, q.support, rtol=1e-12, atol=1e-12):
        raise LayoutError("distributions are defined on different supports")
    if p.kind == "discrete":
        return float(min(1.0, 0.5 * np.abs(p.weights - q.weights).sum()))
    if (
        p.has_mixture and q.has_mixture and p.sigma == q.sigma
        and np.array_equal(p.centers, q.centers)
    ):
        return _mixture_distance(p.centers, p.center_weights - q.center_weights, p.sigma, p.spacing)
    return float(min(1.0, 0.5 * _linear_abs_integral(p.support, p.weights - q.weights)))


def guessing_probability(p, q) -> float:
    """Single-shot probability of identifying which of two distributions was sampled."""
    return 0.5 * (1.0 + classical_trace_distance(p, q))


def noisy_guessing_probability(A: State, D: State, X: Observable, sigma: float) -> float:
    """Guessing probability between ``A`` and ``D`` from an ``X`` measurement with noise ``sigma``."""
    if math.isinf(sigma):
        return 0.5
    if sigma == 0:
        return guessing_probability(ideal_distribution(A, X), ideal_distribution(D, X))
    kernel = NoiseKernel(sigma)
    grid = default_grid(X, sigma)
    return guessing_probability(
        coarse_distribution(A, X, kernel, grid), coarse_distribution(D, X, kernel, grid)
    )


@dataclasses.dataclass(frozen=True)
class NoiseToleranceResult:
    """Outcome of the largest-tolerable-noise search.

    ``status`` is ``"ok"`` (``sigma`` brackets the threshold), ``"cap"`` (the
    target is still met at the largest noise tried; ``sigma`` is that cap)
    or ``"unreachable"`` (even the ideal measurement misses the target;
    ``sigma`` is ``nan``).
    """

    sigma: float
    status: str
    target: float
    probability_at_sigma: float
    upper: float = math.nan
    probability_at_upper: float = math.nan


def max_tolerable_noise(A: State, D: State, X: Observable, P_g: float) -> NoiseToleranceResult:
    """Largest noise ``sigma`` at which an ``X`` measurement still guesses with probability ``P_g``."""
    if not 0.5 < P_g < 1.0:
        raise ValueError(f"target guessing probability must lie in (1/2, 1), got {P_g}")
    tol = config.current()

    def P(s):
        return noisy_guessing_probability(A, D, X, s)

    p0 = P(0.0)
    if p0 < P_g:
        return NoiseToleranceResult(math.nan, "unreachable", P_g, p0)
    scale = X.spectral_range if X.spectral_range > 0 else 1.0
    lo, p_lo = 0.0, p0
    hi = scale
    for k in range(tol.bisection_cap + 1):
        hi = scale * 2.0 ** k
        p_hi = P(hi)
        if p_hi < P_g:
            break
        lo, p_lo = hi, p_hi
    else:
        return NoiseToleranceResult(lo, "cap", P_g, p_lo)
    for _ in range(400):
        if lo > 0.0 and hi - lo <= tol.bisection_rtol * lo:
            break
        mid = 0.5 * (lo + hi)
        p_mid = P(mid)
        if p_mid >= P_g:
            lo, p_lo = mid, p_mid
        else:
            hi, p_hi = mid, p_mid
        if hi - lo <= 2 * np.finfo(float).eps * hi:
            break
    return NoiseToleranceResult(lo, "ok", P_g, p_lo, hi, p_hi)
