"""Deterministic quadrature and seeded Monte Carlo engines.

Integrands are vectorized callables: ``f(x)`` for 1-D rules and
``f(theta, gamma_x, gamma_y)`` (broadcastable arrays) for the 3-D engines.
The 3-D engines return *averages* over the box (integral divided by the box
measure), which is the form every hidden-variable model uses.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConfigError, NumericError

PI_INTERVAL = (0.0, math.pi)

RULES = ("gauss_legendre", "simpson")

# Samples per Monte Carlo stripe. Every stripe owns a child seed spawned from
# the run seed, so results do not depend on how stripes are scheduled.
STRIPE_SAMPLES = 1 << 16

MIN_MC_SAMPLES = 1000


@dataclass(frozen=True)
class QuadratureSpec:
    rule: str = "gauss_legendre"
    points_per_axis: int = 64
    domain: tuple[tuple[float, float], ...] = (PI_INTERVAL,)

    def __post_init__(self):
        if self.rule not in RULES:
            raise ConfigError(f"unknown quadrature rule {self.rule!r}; expected one of {RULES}")
        if self.points_per_axis < 3:
            raise ConfigError("points_per_axis must be >= 3")
        if self.rule == "simpson" and self.points_per_axis % 2 == 0:
            raise ConfigError("simpson requires an odd number of points per axis")
        dom = tuple((float(lo), float(hi)) for lo, hi in self.domain)
        for lo, hi in dom:
            if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
                raise ConfigError(f"invalid interval [{lo}, {hi}]")
        object.__setattr__(self, "domain", dom)

    def refined(self) -> "QuadratureSpec":
        """The next refinement level used for the residual estimate."""
        n = self.points_per_axis
        n_fine = 2 * n if self.rule == "gauss_legendre" else 2 * n - 1
        return QuadratureSpec(self.rule, n_fine, self.domain)

    def axis(self, i: int) -> tuple[float, float]:
        # A single interval is shared by every axis.
        return self.domain[i] if len(self.domain) > i else self.domain[0]


@dataclass(frozen=True)
class MCConfig:
    seed: int
    samples: int

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if int(self.samples) < MIN_MC_SAMPLES:
            raise ConfigError(f"Monte Carlo needs at least {MIN_MC_SAMPLES} samples, got {self.samples}")


@dataclass(frozen=True)
class Estimate:
    """A numeric result with its error estimate.

    ``std_error`` is the Monte Carlo standard error of ``value`` or, for
    quadrature, the residual between two refinement levels. ``bias`` is the
    estimated finite-group bias of the squared-inner-mean MC estimator (zero
    elsewhere); ``debiased`` subtracts it.
    """

    value: float
    std_error: float
    method: str
    bias: float = 0.0
    debiased_std_error: Optional[float] = field(default=None)

    @property
    def debiased(self) -> float:
        return self.value - self.bias

    @property
    def debiased_error(self) -> float:
        return self.std_error if self.debiased_std_error is None else self.debiased_std_error

    def scaled(self, factor: float) -> "Estimate":
        f = abs(factor)
        return Estimate(
            self.value * factor,
            self.std_error * f,
            self.method,
            self.bias * factor,
            None if self.debiased_std_error is None else self.debiased_std_error * f,
        )


@lru_cache(maxsize=64)
def _nodes(rule: str, n: int, lo: float, hi: float) -> tuple[np.ndarray, np.ndarray]:
    if rule == "gauss_legendre":
        x, w = np.polynomial.legendre.leggauss(n)
        half = 0.5 * (hi - lo)
        x = lo + half * (x + 1.0)
        w = half * w
    else:
        x = np.linspace(lo, hi, n)
        h = (hi - lo) / (n - 1)
        w = np.full(n, 2.0)
        w[1::2] = 4.0
        w[0] = w[-1] = 1.0
        w *= h / 3.0
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def nodes(spec: QuadratureSpec, axis: int = 0) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = spec.axis(axis)
    return _nodes(spec.rule, spec.points_per_axis, lo, hi)


def _check_finite(values: np.ndarray, *coords: np.ndarray) -> None:
    bad = ~np.isfinite(values)
    if bad.any():
        idx = np.unravel_index(int(np.flatnonzero(bad)[0]), values.shape)
        where = tuple(float(np.broadcast_to(c, values.shape)[idx]) for c in coords)
        raise NumericError(f"integrand is not finite at {where}", abscissa=where)


def _check_tol(residual: float, tol: Optional[float]) -> None:
    if tol is not None and residual > tol:
        raise NumericError(
            f"quadrature residual {residual:.3e} exceeds tolerance {tol:.3e}", residual=residual
        )


def _quad_1d(f: Callable, spec: QuadratureSpec) -> float:
    x, w = nodes(spec)
    y = np.broadcast_to(np.asarray(f(x), dtype=float), x.shape)
    _check_finite(y, x)
    return float(np.dot(w, y))


def integrate_1d(f: Callable, spec: QuadratureSpec = QuadratureSpec(), tol: Optional[float] = None) -> Estimate:
    """Integrate ``f`` over ``spec.domain[0]``; the residual compares two refinement levels."""
    value = _quad_1d(f, spec)
    residual = abs(value - _quad_1d(f, spec.refined()))
    _check_tol(residual, tol)
    return Estimate(value, residual, "quadrature")


def _nested_average(f: Callable, inner_square: bool, spec: QuadratureSpec) -> float:
    t, wt = nodes(spec, 0)
    gx, wx = nodes(spec, 1)
    gy, wy = nodes(spec, 2)
    lt = spec.axis(0)[1] - spec.axis(0)[0]
    lx = spec.axis(1)[1] - spec.axis(1)[0]
    ly = spec.axis(2)[1] - spec.axis(2)[0]
    w_inner = np.outer(wx, wy) / (lx * ly)
    gxx = gx[None, :, None]
    gyy = gy[None, None, :]
    # Chunk over theta to bound memory at fine refinement levels.
    chunk = max(1, (1 << 18) // (gx.size * gy.size))
    inner = np.empty(t.size)
    for start in range(0, t.size, chunk):
        tt = t[start:start + chunk, None, None]
        vals = np.broadcast_to(np.asarray(f(tt, gxx, gyy), dtype=float), (tt.shape[0], gx.size, gy.size))
        _check_finite(vals, tt, gxx, gyy)
        inner[start:start + chunk] = np.einsum("ijk,jk->i", vals, w_inner)
    outer = inner * inner if inner_square else inner
    return float(np.dot(wt, outer) / lt)


def integrate_3d_nested(
    f: Callable,
    inner_square: bool = True,
    spec: QuadratureSpec = QuadratureSpec(),
    tol: Optional[float] = None,
) -> Estimate:
    """Average of ``f(theta, gx, gy)`` over a 3-D box, nesting the gamma average inside.

    With ``inner_square`` the (gx, gy) average is squared before averaging over
    theta: mean_theta[ mean_gamma[f]^2 ]. Otherwise this is the plain triple
    average.
    """
    value = _nested_average(f, inner_square, spec)
    residual = abs(value - _nested_average(f, inner_square, spec.refined()))
    _check_tol(residual, tol)
    return Estimate(value, residual, "quadrature")


def _average_2d(f: Callable, spec: QuadratureSpec) -> float:
    x, wx = nodes(spec, 0)
    y, wy = nodes(spec, 1)
    area = (spec.axis(0)[1] - spec.axis(0)[0]) * (spec.axis(1)[1] - spec.axis(1)[0])
    xx, yy = x[:, None], y[None, :]
    vals = np.broadcast_to(np.asarray(f(xx, yy), dtype=float), (x.size, y.size))
    _check_finite(vals, xx, yy)
    return float(wx @ vals @ wy / area)


def average_2d(f: Callable, spec: QuadratureSpec = QuadratureSpec(), tol: Optional[float] = None) -> Estimate:
    """Average of ``f(x, y)`` over the box ``spec.axis(0) x spec.axis(1)``."""
    value = _average_2d(f, spec)
    residual = abs(value - _average_2d(f, spec.refined()))
    _check_tol(residual, tol)
    return Estimate(value, residual, "quadrature")


def _stripe_rngs(seed: int, n_stripes: int) -> list[np.random.Generator]:
    children = np.random.SeedSequence(int(seed)).spawn(n_stripes)
    return [np.random.Generator(np.random.PCG64(c)) for c in children]


def _draw(rng: np.random.Generator, domain: Sequence[tuple[float, float]], shapes) -> list[np.ndarray]:
    return [rng.uniform(lo, hi, size=shape) for (lo, hi), shape in zip(domain, shapes)]


def mc_estimate(
    f: Callable,
    mc: MCConfig,
    inner_square_groups: Optional[int] = None,
    domain: Sequence[tuple[float, float]] = (PI_INTERVAL,) * 3,
    workers: int = 1,
) -> Estimate:
    """Seeded Monte Carlo average of ``f(theta, gx, gy)`` with uniform hidden variables.

    Without grouping each sample draws its own (theta, gx, gy). With
    ``inner_square_groups=g`` every group shares one theta and averages ``f``
    over ``g`` fresh (gx, gy) draws; the group mean is squared. That estimator
    is biased upward by Var_gamma(f)/g, which is estimated from the
    within-group variances and returned as ``bias``.
    """
    if len(domain) != 3:
        raise ConfigError("mc_estimate expects a 3-axis domain")
    samples = int(mc.samples)
    if inner_square_groups is None:
        n_stripes = -(-samples // STRIPE_SAMPLES)
        sizes = [min(STRIPE_SAMPLES, samples - i * STRIPE_SAMPLES) for i in range(n_stripes)]

        def run(args):
            rng, k = args
            t, gx, gy = _draw(rng, domain, [(k,)] * 3)
            return np.broadcast_to(np.asarray(f(t, gx, gy), dtype=float), (k,))

        terms = _gather(run, list(zip(_stripe_rngs(mc.seed, n_stripes), sizes)), workers)
        return Estimate(float(terms.mean()), _sem(terms), "monte_carlo")

    g = int(inner_square_groups)
    if g < 2:
        raise ConfigError("group size must be at least 2")
    if g > samples:
        raise ConfigError(f"group size {g} larger than sample count {samples}")
    n_groups = samples // g
    per_stripe = max(1, STRIPE_SAMPLES // g)
    n_stripes = -(-n_groups // per_stripe)
    sizes = [min(per_stripe, n_groups - i * per_stripe) for i in range(n_stripes)]

    def run_grouped(args):
        rng, k = args
        t, gx, gy = _draw(rng, domain, [(k, 1), (k, g), (k, g)])
        vals = np.broadcast_to(np.asarray(f(t, gx, gy), dtype=float), (k, g))
        m = vals.mean(axis=1)
        s2 = vals.var(axis=1, ddof=1)
        return np.stack([m * m, s2 / g])

    parts = _gather(run_grouped, list(zip(_stripe_rngs(mc.seed, n_stripes), sizes)), workers, axis=1)
    raw, bias_terms = parts
    corrected = raw - bias_terms
    return Estimate(
        float(raw.mean()),
        _sem(raw),
        "monte_carlo",
        bias=float(bias_terms.mean()),
        debiased_std_error=_sem(corrected),
    )


def _sem(terms: np.ndarray) -> float:
    if terms.size < 2:
        return 0.0
    return float(terms.std(ddof=1) / math.sqrt(terms.size))


def _gather(run, jobs, workers: int, axis: int = 0) -> np.ndarray:
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, jobs))
    else:
        parts = [run(j) for j in jobs]
    return np.concatenate(parts, axis=axis)
