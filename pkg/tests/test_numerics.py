import math

import numpy as np
import pytest

from lhvkit.errors import ConfigError, NumericError
from lhvkit.models import naive_coincidence_intensity
from lhvkit.numerics import (
    Estimate,
    MCConfig,
    QuadratureSpec,
    integrate_1d,
    integrate_3d_nested,
    mc_estimate,
)

import oracles

GL = QuadratureSpec()
SIMPSON = QuadratureSpec("simpson", 129)


def product_integrand(phi):
    return lambda t, gx, gy: oracles.amplitude(t, gx, gy) * oracles.amplitude(t + phi, gx, gy)


@pytest.mark.parametrize("spec", [GL, SIMPSON])
def test_constant(spec):
    assert integrate_1d(lambda x: np.ones_like(x), spec).value == pytest.approx(math.pi, abs=1e-13)


@pytest.mark.parametrize("spec", [GL, SIMPSON])
def test_cos_squared(spec):
    oracle = oracles.riemann_1d(lambda x: np.cos(x) ** 2)
    assert oracle == pytest.approx(math.pi / 2, abs=1e-12)
    assert integrate_1d(lambda x: np.cos(x) ** 2, spec).value == pytest.approx(math.pi / 2, abs=1e-12)


def test_naive_integrand_at_right_angle():
    est = integrate_1d(lambda t: naive_coincidence_intensity(t, math.pi / 2), GL)
    assert est.value / math.pi == pytest.approx(1 / 8, abs=1e-12)


def test_non_finite_integrand_reports_abscissa():
    with pytest.raises(NumericError) as info:
        integrate_1d(lambda x: np.where(x == x[3], np.inf, x), QuadratureSpec(points_per_axis=8))
    assert info.value.abscissa is not None


def test_tolerance_violation_raises():
    rough = lambda x: np.abs(np.sin(7 * x)) ** 0.5
    with pytest.raises(NumericError) as info:
        integrate_1d(rough, QuadratureSpec(points_per_axis=5), tol=1e-12)
    assert info.value.residual > 1e-12


@pytest.mark.parametrize("bad", [dict(points_per_axis=2), dict(rule="simpson", points_per_axis=64),
                                 dict(rule="trapezoid"), dict(domain=((1.0, 0.0),))])
def test_quadrature_spec_validation(bad):
    with pytest.raises(ConfigError):
        QuadratureSpec(**bad)


@pytest.mark.parametrize("rule, sizes", [("gauss_legendre", (3, 6, 12)), ("simpson", (5, 9, 17))])
@pytest.mark.parametrize("f", [
    lambda x: np.cos(x) ** 2,
    lambda x: naive_coincidence_intensity(x, 0.3),
    lambda x: np.exp(np.sin(x)),
])
def test_residual_shrinks_on_refinement(rule, sizes, f):
    residuals = [integrate_1d(f, QuadratureSpec(rule, n)).std_error for n in sizes]
    for coarse, fine in zip(residuals, residuals[1:]):
        assert fine <= coarse or fine < 1e-14


def test_nested_product_at_quarter_pi():
    f = product_integrand(math.pi / 4)
    oracle = oracles.nested_square_average(f)
    assert oracle == pytest.approx(1 / 8, abs=1e-12)
    assert integrate_3d_nested(f, True, GL).value == pytest.approx(1 / 8, abs=1e-12)


def test_nested_constant():
    est = integrate_3d_nested(lambda t, gx, gy: np.ones(np.broadcast(t, gx, gy).shape), True, GL)
    assert est.value == pytest.approx(1.0, abs=1e-13)


def test_nested_cos_gamma_vanishes():
    est = integrate_3d_nested(lambda t, gx, gy: np.cos(gx) + 0 * t * gy, True, GL)
    assert abs(est.value) <= max(est.std_error, 1e-15)


def test_nested_order_matters():
    # mean(cos gx)^2 = 0 but mean(cos^2 gx) = 1/2: the squaring must sit inside.
    f = lambda t, gx, gy: np.cos(gx) + 0 * t * gy
    assert integrate_3d_nested(lambda t, gx, gy: f(t, gx, gy) ** 2, False, GL).value == pytest.approx(0.5)
    assert abs(integrate_3d_nested(f, True, GL).value) < 1e-14


def test_nested_simpson_agrees_with_gauss_legendre():
    f = product_integrand(0.7)
    a = integrate_3d_nested(f, True, GL).value
    b = integrate_3d_nested(f, True, QuadratureSpec("simpson", 65)).value
    assert a == pytest.approx(b, abs=1e-12)


def test_mc_constant():
    est = mc_estimate(lambda t, gx, gy: np.full(np.shape(t), 2.5), MCConfig(1, 5000))
    assert est.value == 2.5 and est.std_error == 0.0


def test_mc_deterministic_bits():
    f = product_integrand(0.4)
    runs = [mc_estimate(f, MCConfig(11, 200_000), 64) for _ in range(2)]
    assert runs[0].value.hex() == runs[1].value.hex()
    assert runs[0] == runs[1]


def test_mc_independent_of_worker_count():
    f = lambda t, gx, gy: np.cos(t) ** 2 * np.cos(gx) ** 2
    serial = mc_estimate(f, MCConfig(5, 300_000))
    threaded = mc_estimate(f, MCConfig(5, 300_000), workers=4)
    assert serial.value.hex() == threaded.value.hex()


def test_mc_seed_changes_stream():
    f = lambda t, gx, gy: np.cos(t) ** 2
    assert mc_estimate(f, MCConfig(1, 5000)).value != mc_estimate(f, MCConfig(2, 5000)).value


@pytest.mark.slow
def test_mc_grouped_product_at_quarter_pi():
    est = mc_estimate(product_integrand(math.pi / 4), MCConfig(3, 1_000_000), 256)
    assert abs(est.debiased - 1 / 8) <= 4 * est.debiased_error


def test_mc_config_errors():
    with pytest.raises(ConfigError):
        MCConfig(0, 999)
    with pytest.raises(ConfigError):
        MCConfig(-1, 10_000)
    with pytest.raises(ConfigError):
        mc_estimate(lambda t, gx, gy: t, MCConfig(0, 1000), inner_square_groups=2000)


def test_group_bias_shrinks_monotonically():
    """Raw grouped estimates approach the quadrature value as the group grows."""
    phi = math.pi / 3
    f = product_integrand(phi)
    exact = integrate_3d_nested(f, True, GL).value
    gaps = []
    for g in (16, 64, 256):
        est = mc_estimate(f, MCConfig(9, 1_000_000), g)
        gaps.append(est.value - exact)
        # The reported bias accounts for the gap.
        assert abs(est.value - est.bias - exact) <= 4 * est.debiased_error
    assert gaps[0] > gaps[1] > gaps[2] > 0


@pytest.mark.parametrize("phi", np.linspace(0, math.pi, 25))
def test_mc_matches_quadrature_naive_integrand(phi):
    f = lambda t, gx, gy: naive_coincidence_intensity(t, phi)
    quad = integrate_1d(lambda t: naive_coincidence_intensity(t, phi), GL).value / math.pi
    est = mc_estimate(f, MCConfig(21, 100_000))
    assert abs(est.value - quad) <= 4 * est.std_error


@pytest.mark.slow
@pytest.mark.parametrize("phi", np.linspace(0, math.pi, 25))
def test_mc_matches_quadrature_unpolarized_integrand(phi):
    f = product_integrand(phi)
    quad = integrate_3d_nested(f, True, GL).value
    est = mc_estimate(f, MCConfig(22, 250_000), 256)
    assert abs(est.debiased - quad) <= 4 * est.debiased_error


def test_estimate_scaling():
    e = Estimate(1.0, 0.1, "monte_carlo", bias=0.01, debiased_std_error=0.09).scaled(-2.0)
    assert (e.value, e.std_error, e.bias, e.debiased_std_error) == (-2.0, 0.2, -0.02, 0.18)
