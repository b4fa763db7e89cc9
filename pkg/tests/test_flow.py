import numpy as np
import pytest

from ehglue.flow import (FlowState, ProxyPolicy, WeightSpec, assumption_check,
                         blowup_prediction, curvature_peak,
                         epsilon_derivative, epsilon_of_t,
                         modulation_residual, ode_integrate,
                         ricci_decay_proxy, weighted_norm_sample)

OMEGA = 7.7036


def test_closed_form_value():
    eps = epsilon_of_t(-1e6, omega=7.70)
    assert eps == pytest.approx((32 * 7.70 * 1e6) ** -0.25, rel=1e-14)
    assert eps == pytest.approx(7.98e-3, rel=1e-3)
    assert (1000 * 1e6) ** -0.25 <= eps <= (1e6) ** -0.25


def test_closed_form_monotone_increasing():
    ts = -np.logspace(3.1, 7, 40)[::-1]        # increasing toward -Λ
    eps = np.array([epsilon_of_t(t, omega=OMEGA) for t in ts])
    assert np.all(np.diff(eps) > 0.0)


def test_closed_form_with_forcing():
    eta = lambda s: (-s) ** (-1.0 / 1000.0) * 0.5
    e0 = epsilon_of_t(-1e5, eta=None, omega=OMEGA)
    e1 = epsilon_of_t(-1e5, eta=eta, omega=OMEGA)
    # positive forcing increases the radicand, decreasing the scale
    assert e1 < e0
    d = epsilon_derivative(-1e5, eta=eta, omega=OMEGA)
    h = 1.0
    fd = (epsilon_of_t(-1e5 + h, eta=eta, omega=OMEGA)
          - epsilon_of_t(-1e5 - h, eta=eta, omega=OMEGA)) / (2 * h)
    assert d == pytest.approx(fd, rel=1e-6)


def test_state_and_weight_validation():
    FlowState(-1e4, 0.01)
    with pytest.raises(ValueError):
        FlowState(1.0, 0.01)
    with pytest.raises(ValueError):
        WeightSpec(gamma=-1.0, sigma=0.5, alpha=0.1, lam=10.0)
    with pytest.raises(ValueError):
        epsilon_of_t(-10.0, lam=1000.0)


def test_modulation_residual_closed_form_is_zero():
    for t in (-1e4, -1e6):
        eps = epsilon_of_t(t, omega=OMEGA)
        resid = modulation_residual(t, eps,
                                    epsilon_derivative(t, omega=OMEGA),
                                    OMEGA)
        term = 32 * np.pi ** 2 * OMEGA * eps ** 8
        assert abs(resid) <= 1e-14 * term


def test_modulation_residual_of_free_scale():
    # eps = (-t)^{-1/4}: residual = π²(1 - 32ω)(-t)^{-2} exactly
    ts = -np.logspace(4, 7, 8)
    resid = np.array([modulation_residual(
        t, (-t) ** -0.25, 0.25 * (-t) ** -1.25, OMEGA) for t in ts])
    expected = np.pi ** 2 * (1 - 32 * OMEGA) * (-ts) ** -2.0
    assert np.max(np.abs(resid / expected - 1.0)) < 1e-12
    slope = np.polyfit(np.log(-ts), np.log(-resid), 1)[0]
    assert slope == pytest.approx(-2.0, abs=1e-3)


def test_residual_vanishes_on_ode_solutions():
    eps = 0.01
    resid = modulation_residual(-1e5, eps, 8 * OMEGA * eps ** 5, OMEGA)
    assert abs(resid) <= 1e-14 * 32 * np.pi ** 2 * OMEGA * eps ** 8


def test_rk4_matches_closed_form():
    eps0 = epsilon_of_t(-1e6, omega=OMEGA)
    ts, es = ode_integrate(eps0, -1e6, -1e3, 100000, OMEGA)
    idx = np.linspace(0, len(ts) - 1, 50).astype(int)
    exact = np.array([epsilon_of_t(t, omega=OMEGA) for t in ts[idx]])
    assert np.max(np.abs(es[idx] / exact - 1.0)) < 1e-9


def test_rk4_zero_rate_constant_trajectory():
    ts, es = ode_integrate(0.01, -1e5, -1e3, 100, omega=0.0)
    assert np.all(es == 0.01)


def test_rk4_derivative_within_assumption():
    d = epsilon_derivative(-1e6, omega=OMEGA)
    assert d == pytest.approx(8 * OMEGA * epsilon_of_t(-1e6, omega=OMEGA) ** 5,
                              rel=1e-13)
    assert abs(d) <= (1e6) ** -1.25


def test_assumption_holds_on_dense_grid():
    rep = assumption_check(-np.logspace(3, 8, 60), omega=OMEGA)
    assert rep.all_ok
    assert rep.margins["upper"] <= 1.0
    assert rep.margins["lower"] >= 1.0


def test_assumption_flags_bad_scale():
    # a tiny lattice constant puts the scale above the admissible ceiling
    rep = assumption_check(-np.logspace(3, 5, 10), omega=0.02)
    assert not rep.upper_ok


def test_curvature_peak_extrapolation():
    peak = curvature_peak()
    assert peak ** 2 == pytest.approx(384.0, abs=1e-6)
    # eps-scaling: peak of the eps-family is peak/eps²  (pointwise law
    # already covered in curvature tests)


def test_blowup_prediction_ratio_constant():
    peak = curvature_peak()
    ts = -np.logspace(4, 8, 9)
    ratios = np.array([blowup_prediction(t, peak, omega=OMEGA)[0]
                       / np.sqrt(-t) for t in ts])
    assert np.max(ratios) / np.min(ratios) - 1.0 < 1e-12
    _, c = blowup_prediction(-1e6, peak, omega=OMEGA)
    assert c == pytest.approx(peak * np.sqrt(32 * OMEGA), rel=1e-14)


def test_ricci_proxy_decay(background8):
    policy = ProxyPolicy(lattice_cutoff=8, s3_order=4,
                         radial_fractions=(0.75, 0.8, 1.05), omega=OMEGA)
    proxy = ricci_decay_proxy((-1e4, -1e5, -1e6), policy,
                              background=background8)
    assert proxy.exponent <= -0.9
    assert np.all(np.diff(proxy.sup_ric) > 0.0)     # decays toward -inf
    scaled = proxy.sup_ric * (-proxy.times) ** 0.49
    assert np.all(np.diff(scaled) > 0.0)
    assert np.all(proxy.deltas <= 0.45)


def test_weighted_norm_lower_bound():
    w = WeightSpec(gamma=0.9, sigma=0.01, alpha=1e-4, lam=1000.0)
    rng = np.random.default_rng(2)
    pts = rng.normal(size=(30, 4))
    pts = pts / np.linalg.norm(pts, axis=1, keepdims=True) \
        * rng.uniform(0.05, 5.0, size=(30, 1))
    times = (-2e3, -1e4, -1e5)

    def h_matched(x, t):
        r = np.linalg.norm(x, axis=-1)
        weight = (-t) ** -w.gamma * ((-t) ** -0.25 + r) ** -w.sigma
        return weight[..., None, None] * np.eye(4) / 2.0

    res = weighted_norm_sample(h_matched, w, pts, times)
    assert 0.9 <= res.sup_part <= 1.0 + 1e-12
    assert res.estimate >= res.sup_part

    res0 = weighted_norm_sample(lambda x, t: np.zeros(x.shape[:-1] + (4, 4)),
                                w, pts, times)
    assert res0.estimate == 0.0


def test_weighted_norm_gamma_homogeneity():
    rng = np.random.default_rng(4)
    pts = rng.normal(size=(10, 4))
    pts = pts / np.linalg.norm(pts, axis=1, keepdims=True) * 0.8
    times = (-2e3, -5e3)
    base = WeightSpec(gamma=0.5, sigma=0.01, alpha=1e-4, lam=1000.0)
    double = WeightSpec(gamma=1.0, sigma=0.01, alpha=1e-4, lam=1000.0)

    def h(x, t):
        return np.broadcast_to(np.eye(4), x.shape[:-1] + (4, 4)).copy()

    r1 = weighted_norm_sample(h, base, pts, times)
    r2 = weighted_norm_sample(h, double, pts, times)
    # the sup part scales by sup (-t)^gamma over the window, exactly
    assert r2.sup_part == pytest.approx(r1.sup_part * 5e3 ** 0.5, rel=1e-12)


def test_weighted_norm_skips_inadmissible():
    w = WeightSpec(gamma=0.5, sigma=0.01, alpha=1e-4, lam=1000.0)
    pts = np.array([[20.0, 0.0, 0.0, 0.0], [0.5, 0.0, 0.0, 0.0]])

    def h(x, t):
        return np.broadcast_to(np.eye(4), x.shape[:-1] + (4, 4)).copy()

    res = weighted_norm_sample(h, w, pts, (-2e3,))
    assert res.skipped >= 1
