import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ehglue.quadrature import (KahanAccumulator, kahan_sum, line_fit,
                               radial_quadrature, s3_quadrature)


def test_sphere_total_weight():
    for order, rho in ((4, 1.0), (8, 0.5), (16, 2.0)):
        rule = s3_quadrature(order, rho)
        assert rule.total_weight() == pytest.approx(2 * np.pi ** 2 * rho ** 3,
                                                    rel=1e-13)


def test_sphere_coordinate_square():
    rule = s3_quadrature(8, 1.0)
    # symmetry oracle: the four coordinate squares sum to the full measure,
    # so each one integrates to 2π²/4
    vals = [float(np.sum(rule.weights * rule.nodes[:, i] ** 2))
            for i in range(4)]
    assert sum(vals) == pytest.approx(2 * np.pi ** 2, rel=1e-13)
    for v in vals:
        assert v == pytest.approx(np.pi ** 2 / 2, rel=1e-12)


def test_sphere_odd_moment_vanishes():
    rule = s3_quadrature(8, 1.0)
    val = float(np.sum(rule.weights * rule.nodes[:, 0] * rule.nodes[:, 1]))
    assert abs(val) < 1e-14


def test_sphere_polynomial_exactness_matches_halton_free_oracle():
    # quartic moment on the unit 3-sphere: E[x1^4] = 3/(4·6) · 2π²
    rule = s3_quadrature(8, 1.0)
    val = float(np.sum(rule.weights * rule.nodes[:, 0] ** 4))
    assert val == pytest.approx(2 * np.pi ** 2 * (1.0 / 8.0), rel=1e-12)
    mixed = float(np.sum(rule.weights * rule.nodes[:, 0] ** 2
                         * rule.nodes[:, 1] ** 2))
    assert mixed == pytest.approx(2 * np.pi ** 2 / 24.0, rel=1e-12)


def test_sphere_order_doubling_within_estimate():
    rng = np.random.default_rng(5)
    a = rng.normal(size=4)

    def f(nodes):
        return np.exp(nodes @ a * 0.3)

    lo = s3_quadrature(12, 1.0)
    hi = s3_quadrature(24, 1.0)
    v_lo = float(np.sum(lo.weights * f(lo.nodes)))
    v_hi = float(np.sum(hi.weights * f(hi.nodes)))
    assert abs(v_lo - v_hi) < 1e-10


def test_sphere_preconditions():
    with pytest.raises(ValueError):
        s3_quadrature(3, 1.0)
    with pytest.raises(ValueError):
        s3_quadrature(8, -1.0)


def test_radial_unit_cube_moment():
    rule = radial_quadrature(0.0, 1.0)
    val, est = rule.integrate(lambda r: r ** 3)
    assert val == pytest.approx(0.25, abs=1e-14)


def test_radial_power_tail():
    rule = radial_quadrature(1.0, np.inf, decay_power=5.0)
    val, est = rule.integrate(lambda r: r ** -2.0)
    assert val == pytest.approx(1.0, rel=1e-12)
    assert est < 1e-10


def test_radial_kernel_norm_case():
    rule = radial_quadrature(0.0, np.inf, decay_power=16.0)
    val, est = rule.integrate(
        lambda r: 4.0 * (1.0 / (1.0 + r ** 4)) ** 2 * 2 * np.pi ** 2 * r ** 3)
    assert val == pytest.approx(2 * np.pi ** 2, rel=1e-9)
    assert abs(val - 2 * np.pi ** 2) <= max(est, 1e-9)


def test_radial_rejects_nonintegrable_tail():
    with pytest.raises(ValueError):
        radial_quadrature(1.0, np.inf, decay_power=4.0)


def test_kahan_recovers_lost_bits():
    vals = np.array([1.0] + [1e-17] * 100000)
    assert kahan_sum(vals, 0) == pytest.approx(1.0 + 1e-12, rel=1e-15)


@given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=40))
@settings(max_examples=100, deadline=None)
def test_kahan_matches_exact_sum(values):
    import math
    acc = KahanAccumulator()
    for v in values:
        acc.add(v)
    assert acc.result() == pytest.approx(math.fsum(values), abs=1e-9)


def test_line_fit_recovers_slope():
    x = np.array([1.0, 2.0, 3.0, 4.0])
    slope, intercept = line_fit(x, -2.5 * x + 0.75)
    assert slope == pytest.approx(-2.5, abs=1e-13)
    assert intercept == pytest.approx(0.75, abs=1e-13)
