"""Correlation functional, Bell's original inequality and CHSH for any CorrelationModel."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .models import CorrelationModel

TOL_FLOOR = 1e-9
CHSH_BOUND = 2.0


def _tolerance(*errors: float) -> float:
    return max(TOL_FLOOR, 4.0 * max(errors, default=0.0))


@dataclass(frozen=True)
class CorrelationCurve:
    settings: list[tuple[float, float]]
    values: list[float]
    model_id: str
    method: str
    errors: list[float] = field(default_factory=list)

    def __post_init__(self):
        if len(self.values) != len(self.settings):
            raise ValueError("values and settings differ in length")


@dataclass(frozen=True)
class InequalityReport:
    """Evaluated Bell-type constraint.

    ``margin`` is the signed slack: positive when the inequality holds.
    """

    name: str
    lhs: float
    rhs: float
    margin: float
    satisfied: bool
    settings: tuple[float, ...]
    tolerance: float
    model_id: str = ""
    station_b_relabeled: bool = False
    violation_factor: Optional[float] = None

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "model_id": self.model_id,
            "settings_deg": [math.degrees(s) for s in self.settings],
            "lhs": self.lhs,
            "rhs": self.rhs,
            "margin": self.margin,
            "satisfied": self.satisfied,
            "tolerance": self.tolerance,
            "station_b_relabeled": self.station_b_relabeled,
            "violation_factor": self.violation_factor,
        }


def correlation_with_error(model: CorrelationModel, a: float, b: float) -> tuple[float, float]:
    ch = model.channel_probabilities(a, b)
    ch.check_normalized()
    return (ch.p_pp + ch.p_mm) - (ch.p_pm + ch.p_mp), ch.error


def correlation_from_channels(model: CorrelationModel, a: float, b: float) -> float:
    """E(a, b) = P(++) + P(--) - P(+-) - P(-+)."""
    return correlation_with_error(model, a, b)[0]


def correlation_curve(model: CorrelationModel, settings) -> CorrelationCurve:
    pairs = [correlation_with_error(model, a, b) for a, b in settings]
    return CorrelationCurve(
        settings=[(float(a), float(b)) for a, b in settings],
        values=[e for e, _ in pairs],
        model_id=model.id,
        method=model.provenance,
        errors=[err for _, err in pairs],
    )


def bell_original_check(model: CorrelationModel, a: float, b: float, c: float,
                        relabel_station_b: Optional[bool] = None) -> InequalityReport:
    """1 + P(b, c) >= |P(a, b) - P(a, c)|.

    The inequality presumes perfect anti-correlation at equal settings. For a
    model whose equal-setting correlation is positive, station B's ports are
    relabeled (+ <-> -), which negates every P; pass ``relabel_station_b`` to
    force either choice.
    """
    if relabel_station_b is None:
        e_same, err_same = correlation_with_error(model, a, a)
        relabel_station_b = e_same > _tolerance(err_same)
    sign = -1.0 if relabel_station_b else 1.0
    e_bc, s_bc = correlation_with_error(model, b, c)
    e_ab, s_ab = correlation_with_error(model, a, b)
    e_ac, s_ac = correlation_with_error(model, a, c)
    lhs = 1.0 + sign * e_bc
    rhs = abs(sign * e_ab - sign * e_ac)
    tol = _tolerance(s_bc, s_ab, s_ac)
    return InequalityReport(
        name="bell_original",
        lhs=lhs,
        rhs=rhs,
        margin=lhs - rhs,
        satisfied=lhs >= rhs - tol,
        settings=(float(a), float(b), float(c)),
        tolerance=tol,
        model_id=model.id,
        station_b_relabeled=bool(relabel_station_b),
    )


def _chsh_report(model_id, settings, lhs, tol) -> InequalityReport:
    return InequalityReport(
        name="chsh",
        lhs=lhs,
        rhs=CHSH_BOUND,
        margin=CHSH_BOUND - lhs,
        satisfied=lhs <= CHSH_BOUND + tol,
        settings=tuple(float(s) for s in settings),
        tolerance=tol,
        model_id=model_id,
        violation_factor=lhs / CHSH_BOUND,
    )


def chsh_value(model: CorrelationModel, a: float, a2: float, b: float, b2: float) -> InequalityReport:
    """S = |E(a,b) - E(a,b2) + E(a2,b) + E(a2,b2)| against the local bound 2."""
    terms = [correlation_with_error(model, x, y) for x, y in ((a, b), (a, b2), (a2, b), (a2, b2))]
    (e1, _), (e2, _), (e3, _), (e4, _) = terms
    lhs = abs(e1 - e2 + e3 + e4)
    return _chsh_report(model.id, (a, a2, b, b2), lhs, _tolerance(*(s for _, s in terms)))


def scan_for_max_violation(model: CorrelationModel, grid_density: int) -> InequalityReport:
    """Exhaustive CHSH search over angles k*pi/grid_density for all four settings.

    Ties in S (to 12 decimals) go to the lexicographically first (a, a2, b, b2).
    """
    n = int(grid_density)
    if n < 4:
        raise ValueError("grid_density must be >= 4")
    angles = np.arange(n) * (math.pi / n)
    E = np.empty((n, n))
    S_err = np.empty((n, n))
    for i, x in enumerate(angles):
        for j, y in enumerate(angles):
            E[i, j], S_err[i, j] = correlation_with_error(model, x, y)
    # Axes: (a, a2, b, b2).
    S = np.abs(
        E[:, None, :, None] - E[:, None, None, :] + E[None, :, :, None] + E[None, :, None, :]
    )
    best = np.unravel_index(int(np.argmax(np.round(S, 12))), S.shape)
    ia, ia2, ib, ib2 = best
    tol = _tolerance(S_err[ia, ib], S_err[ia, ib2], S_err[ia2, ib], S_err[ia2, ib2])
    settings = tuple(angles[k] for k in best)
    return _chsh_report(model.id, settings, float(S[best]), tol)
