"""EPR correlation models behind one four-channel interface.

Every model answers two questions at a pair of analyzer angles (a, b):
the joint channel probabilities P(+,+), P(+,-), P(-,+), P(-,-) and, as a
single number, its coincidence probability at relative angle phi = b - a.

Models:

``qm``           singlet-state prediction (closed form).
``naive``        semiclassical Malus-law model, detection ~ cos^2 of the
                 angle between signal polarization and analyzer.
``unpolarized``  two-component model: each source contributes an x and a y
                 field component with independent random phases; the
                 coincidence rate is the theta-average of the squared
                 phase-averaged product of the two detector amplitudes.
``sign``         dichotomic A(a, lambda) = sign cos 2(a - lambda) with the
                 perfectly anti-correlated partner B = -A.

The orthogonal output port of an analyzer is modelled by rotating that
analyzer by pi/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .errors import ConfigError, DataError, DomainError
from .numerics import (
    Estimate,
    MCConfig,
    QuadratureSpec,
    average_2d,
    integrate_1d,
    integrate_3d_nested,
    mc_estimate,
)
from .qm import singlet_prediction

SQRT2 = math.sqrt(2.0)
HALF_PI = 0.5 * math.pi

# Ideal pair-production rate in the models' intensity units; coincidence
# intensities are divided by it to become probabilities.
PAIR_RATE = 0.5

DEFAULT_GROUP_SIZE = 256
QUAD_TOL = 1e-9
TIE_TOL = 1e-12

PROVENANCES = ("closed_form", "quadrature", "monte_carlo")
CHANNELS = (("+", "+"), ("+", "-"), ("-", "+"), ("-", "-"))


@dataclass(frozen=True)
class HiddenVars:
    theta: float
    gamma_x: float
    gamma_y: float

    def canonical(self) -> "HiddenVars":
        """Reduce every field to [0, pi)."""
        return HiddenVars(*(float(np.mod(v, math.pi)) for v in (self.theta, self.gamma_x, self.gamma_y)))


@dataclass(frozen=True)
class AmplitudePair:
    a_signal: float
    b_signal: float


def _amplitude(angle, gamma_x, gamma_y):
    return np.cos(angle) * np.cos(gamma_x) + np.sin(angle) * np.cos(gamma_y)


def amplitude_a(hv: HiddenVars) -> float:
    return float(_amplitude(hv.theta, hv.gamma_x, hv.gamma_y))


def amplitude_b(hv: HiddenVars, phi: float) -> float:
    return float(_amplitude(hv.theta + phi, hv.gamma_x, hv.gamma_y))


def amplitudes(hv: HiddenVars, phi: float) -> AmplitudePair:
    return AmplitudePair(amplitude_a(hv), amplitude_b(hv, phi))


def naive_coincidence_intensity(theta, phi):
    """cos^2(theta) cos^2(theta - phi); accepts scalars or arrays."""
    return np.cos(theta) ** 2 * np.cos(theta - phi) ** 2


def naive_model_probability(phi: float) -> float:
    """Normalized coincidence probability of the Malus-law model: 1/2 + cos(2 phi)/4."""
    phi = _finite(phi)
    return (0.25 + 0.125 * math.cos(2.0 * phi)) / PAIR_RATE


def _product_integrand(phi):
    def f(theta, gx, gy):
        return _amplitude(theta, gx, gy) * _amplitude(theta + phi, gx, gy)

    return f


def unpolarized_inner_average(theta: float, phi: float, spec: Optional[QuadratureSpec] = None,
                              tol: float = QUAD_TOL) -> float:
    """Phase average (1/pi^2) int int A B d(gamma_x) d(gamma_y) at fixed theta."""
    theta, phi = _finite(theta), _finite(phi)
    spec = spec or QuadratureSpec()
    f = _product_integrand(phi)
    return average_2d(lambda gx, gy: f(theta, gx, gy), spec, tol=tol).value


def unpolarized_model_probability(
    phi: float,
    method: str = "quadrature",
    mc: Optional[MCConfig] = None,
    spec: Optional[QuadratureSpec] = None,
    group_size: int = DEFAULT_GROUP_SIZE,
) -> Estimate:
    """Coincidence probability of the two-component model, with an error estimate.

    theta-average of the squared phase average of A*B, divided by the pair
    rate. The Monte Carlo path uses the grouped squared-inner-mean estimator;
    its finite-group bias is reported in ``Estimate.bias``.
    """
    phi = _finite(phi)
    f = _product_integrand(phi)
    if method == "quadrature":
        if mc is not None:
            raise ConfigError("MC config given for quadrature method")
        est = integrate_3d_nested(f, inner_square=True, spec=spec or QuadratureSpec(), tol=QUAD_TOL)
    elif method == "monte_carlo":
        if mc is None:
            raise ConfigError("monte_carlo method requires an MCConfig")
        est = mc_estimate(f, mc, inner_square_groups=group_size)
    else:
        raise ConfigError(f"unknown method {method!r}")
    return est.scaled(1.0 / PAIR_RATE)


def sign_model_outcome(analyzer, lam):
    """+1/-1 outcome sign(cos 2(analyzer - lambda)); the tie cos = 0 goes to +1."""
    c = np.cos(2.0 * (np.asarray(analyzer, dtype=float) - lam))
    out = np.where(c >= -TIE_TOL, 1, -1)
    return int(out) if out.ndim == 0 else out


def _finite(x) -> float:
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"angle must be finite, got {x!r}")
    return x


@dataclass(frozen=True)
class Channels:
    """Joint port probabilities; ``error`` bounds the correlation built from them."""

    p_pp: float
    p_pm: float
    p_mp: float
    p_mm: float
    error: float = 0.0

    def __iter__(self):
        return iter((self.p_pp, self.p_pm, self.p_mp, self.p_mm))

    def get(self, sa: str, sb: str) -> float:
        return dict(zip(CHANNELS, self))[(sa, sb)]

    def check_normalized(self, tol: Optional[float] = None) -> None:
        tol = max(1e-9, 4.0 * self.error) if tol is None else tol
        probs = tuple(self)
        if min(probs) < -tol or abs(sum(probs) - 1.0) > tol:
            raise DataError(f"channel probabilities not normalized: {probs} (tol {tol:.2e})")


class CorrelationModel:
    """Four-channel joint probabilities as a function of the analyzer angles."""

    id: str = ""
    provenance: str = "closed_form"

    def channel_probabilities(self, a: float, b: float) -> Channels:
        return self._relative_channels(_finite(b) - _finite(a))

    def channel_probability(self, sa: str, sb: str, phi: float) -> float:
        return self.channel_probabilities(0.0, phi).get(sa, sb)

    def coincidence(self, phi: float) -> Estimate:
        """The model's coincidence probability for both "+" ports at relative angle phi."""
        ch = self.channel_probabilities(0.0, phi)
        return Estimate(ch.p_pp, ch.error, self.provenance)

    def _relative_channels(self, phi: float) -> Channels:
        raise NotImplementedError

    def __repr__(self):
        return f"<{type(self).__name__} id={self.id!r} provenance={self.provenance!r}>"


class QMModel(CorrelationModel):
    id = "qm"

    def _relative_channels(self, phi):
        s = singlet_prediction(phi)
        return Channels(s.p_pp, s.p_pm, s.p_mp, s.p_mm)


def _port_shifts(phi: float):
    """Relative angle seen by each channel pair when "-" rotates an analyzer by pi/2."""
    for sa, sb in CHANNELS:
        yield phi + (HALF_PI if sb == "-" else 0.0) - (HALF_PI if sa == "-" else 0.0)


class NaiveModel(CorrelationModel):
    """Malus-law model.

    The four channel intensities average cos^2/sin^2 products and sum to 1 for
    every phi, so they are already probabilities. ``coincidence`` instead
    returns the single-channel value divided by the pair rate.
    """

    id = "naive"

    def __init__(self, method: str = "closed_form", spec: Optional[QuadratureSpec] = None):
        if method not in ("closed_form", "quadrature"):
            raise ConfigError(f"naive model supports closed_form or quadrature, not {method!r}")
        self.provenance = method
        self.spec = spec or QuadratureSpec()

    def intensity(self, phi: float) -> Estimate:
        """(1/pi) int_0^pi cos^2(theta) cos^2(theta - phi) d theta."""
        if self.provenance == "closed_form":
            return Estimate(0.25 + 0.125 * math.cos(2.0 * phi), 0.0, "closed_form")
        return integrate_1d(lambda t: naive_coincidence_intensity(t, phi), self.spec, tol=QUAD_TOL).scaled(1.0 / math.pi)

    def _relative_channels(self, phi):
        parts = [self.intensity(p) for p in _port_shifts(phi)]
        return Channels(*(e.value for e in parts), error=sum(e.std_error for e in parts))

    def coincidence(self, phi):
        return self.intensity(_finite(phi)).scaled(1.0 / PAIR_RATE)


class UnpolarizedModel(CorrelationModel):
    """Two-component model; four channel intensities sum to the pair rate."""

    id = "unpolarized"

    def __init__(self, method: str = "quadrature", mc: Optional[MCConfig] = None,
                 spec: Optional[QuadratureSpec] = None, group_size: int = DEFAULT_GROUP_SIZE):
        if method not in ("quadrature", "monte_carlo"):
            raise ConfigError(f"unpolarized model supports quadrature or monte_carlo, not {method!r}")
        if (method == "monte_carlo") != (mc is not None):
            raise ConfigError("an MCConfig is required for, and only for, the monte_carlo method")
        self.provenance = method
        self.mc = mc
        self.spec = spec or QuadratureSpec()
        self.group_size = group_size
        self._cached = lru_cache(maxsize=4096)(self._probability)

    def _probability(self, phi: float) -> Estimate:
        return unpolarized_model_probability(phi, self.provenance, self.mc, self.spec, self.group_size)

    def probability(self, phi: float) -> Estimate:
        # The integrand is pi-periodic and even in phi.
        reduced = abs(math.remainder(_finite(phi), math.pi))
        return self._cached(round(reduced, 13))

    def _relative_channels(self, phi):
        parts = [self.probability(p) for p in _port_shifts(phi)]
        if self.provenance == "monte_carlo":
            return Channels(*(e.debiased for e in parts), error=sum(e.debiased_error for e in parts))
        return Channels(*(e.value for e in parts), error=sum(e.std_error for e in parts))

    def coincidence(self, phi):
        return self.probability(phi)


class SignModel(CorrelationModel):
    """Dichotomic local model evaluated on one shared ensemble of lambda draws.

    Every setting pair reuses the same seeded lambda sample, so each emitted
    pair carries one lambda that both stations read.
    """

    id = "sign"
    provenance = "monte_carlo"

    def __init__(self, mc: MCConfig = MCConfig(seed=0, samples=100_000)):
        self.mc = mc
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(mc.seed))))
        self.lambdas = rng.uniform(0.0, math.pi, size=int(mc.samples))
        self.lambdas.setflags(write=False)
        self._station = lru_cache(maxsize=1024)(self._station_outcomes)

    def _station_outcomes(self, angle: float) -> np.ndarray:
        out = sign_model_outcome(angle, self.lambdas).astype(np.int8)
        out.setflags(write=False)
        return out

    def outcomes(self, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
        """Per-pair outcomes (A, B) with B = -A evaluated at b."""
        return self._station(_finite(a)), -self._station(_finite(b))

    def channel_probabilities(self, a, b):
        out_a, out_b = self.outcomes(a, b)
        n = out_a.size
        pa, pb = out_a > 0, out_b > 0
        prod = (out_a * out_b).astype(float)
        return Channels(
            float(np.count_nonzero(pa & pb) / n),
            float(np.count_nonzero(pa & ~pb) / n),
            float(np.count_nonzero(~pa & pb) / n),
            float(np.count_nonzero(~pa & ~pb) / n),
            error=float(prod.std(ddof=1) / math.sqrt(n)),
        )


MODEL_IDS = ("qm", "naive", "unpolarized", "sign")


def get_model(model_id: str, method: Optional[str] = None, mc: Optional[MCConfig] = None,
              spec: Optional[QuadratureSpec] = None) -> CorrelationModel:
    """Build a model by id; ``method`` picks the numeric route where there is a choice."""
    if model_id == "qm":
        return QMModel()
    if model_id == "naive":
        return NaiveModel(method or "closed_form", spec)
    if model_id == "unpolarized":
        method = method or "quadrature"
        return UnpolarizedModel(method, mc if method == "monte_carlo" else None, spec)
    if model_id == "sign":
        return SignModel(mc or MCConfig(seed=0, samples=100_000))
    raise ConfigError(f"unknown model {model_id!r}; expected one of {MODEL_IDS}")
