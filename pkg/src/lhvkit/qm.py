"""Quantum-mechanical reference predictions.

Units: hbar = 1 and the spin operator is S = sigma / 2, so transverse spin
expectations oscillate with amplitude 1/2.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, PreconditionError

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def _finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise DomainError(f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class Spinor:
    up: complex
    down: complex

    @property
    def norm_sq(self) -> float:
        return abs(self.up) ** 2 + abs(self.down) ** 2

    def as_array(self) -> np.ndarray:
        return np.array([self.up, self.down], dtype=complex)


@dataclass(frozen=True)
class PrecessionParams:
    """Larmor angular frequency; the sign carries the field orientation."""

    omega: float

    def __post_init__(self):
        _finite("omega", self.omega)


@dataclass(frozen=True)
class SingletPrediction:
    phi: float
    p_pp: float
    p_pm: float
    p_mp: float
    p_mm: float
    correlation: float


def evolve_spinor(t: float, params: PrecessionParams) -> Spinor:
    """Spin state in a static z field: (exp(-i w t/2), exp(+i w t/2)) / sqrt(2)."""
    t = _finite("t", t)
    half = 0.5 * params.omega * t
    r = 1.0 / math.sqrt(2.0)
    return Spinor(r * cmath.exp(-1j * half), r * cmath.exp(1j * half))


def transverse_expectations(psi: Spinor) -> tuple[float, float]:
    """Return (<S_x>, <S_y>) for a normalized spinor, with S = sigma / 2."""
    if abs(psi.norm_sq - 1.0) > 1e-9:
        raise PreconditionError(f"spinor not normalized: |psi|^2 = {psi.norm_sq!r}")
    v = psi.as_array()
    sx = 0.5 * float(np.real(np.vdot(v, SIGMA_X @ v)))
    sy = 0.5 * float(np.real(np.vdot(v, SIGMA_Y @ v)))
    return sx, sy


def singlet_prediction(phi: float) -> SingletPrediction:
    """Joint channel probabilities of the polarization singlet at relative angle phi.

    Channel "+" is the x' exit port of each analyzer and "-" the y' port.
    """
    phi = _finite("phi", phi)
    reduced = math.fmod(phi, math.pi)
    s2 = math.sin(reduced) ** 2
    c2 = math.cos(reduced) ** 2
    p_same = 0.5 * s2
    p_diff = 0.5 * c2
    return SingletPrediction(
        phi=phi,
        p_pp=p_same,
        p_pm=p_diff,
        p_mp=p_diff,
        p_mm=p_same,
        correlation=-math.cos(2.0 * reduced),
    )
