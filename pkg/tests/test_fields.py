import numpy as np
import pytest

from ehglue.fields import (alpha_forms, eh_metric, eh_hat_metric,
                           farfield_jets, farfield_tensor, kernel_mode,
                           map_collection, point_generators,
                           symmetry_check, vector_fields, REFLECTION)
from ehglue.jets import DomainError
from ehglue.sym2 import inner_product


SQ2 = np.sqrt(2.0)


def test_metric_at_unit_axis_point():
    g = eh_metric(1.0).values(np.array([[1.0, 0, 0, 0]]))[0]
    assert np.allclose(np.diag(g), [1 / SQ2, 1 / SQ2, SQ2, SQ2], rtol=1e-14)
    assert np.allclose(g - np.diag(np.diag(g)), 0.0, atol=1e-15)


def test_flat_limit_is_identity(points):
    g = eh_metric(0.0).values(points)
    assert np.allclose(g, np.eye(4), atol=0.0)


def test_unit_volume_form(points):
    g = eh_metric(1.0).values(points)
    assert np.max(np.abs(np.linalg.det(g) - 1.0)) < 1e-12


def test_scaling_family(points):
    # components of the eps family are the unit family at rescaled points
    eps = 1.7
    lhs = eh_metric(eps).values(points)
    rhs = eh_metric(1.0).values(points / eps)
    assert np.max(np.abs(lhs - rhs)) < 1e-13


def test_reflected_metric_is_reflection_pullback(points):
    ghat = eh_hat_metric(1.0).values(points)
    g = eh_metric(1.0).values(points @ REFLECTION.T)
    pulled = np.einsum("ai,pab,bj->pij", REFLECTION, g, REFLECTION)
    assert np.max(np.abs(ghat - pulled)) < 1e-15


def test_one_forms_at_axis_points():
    a = alpha_forms(np.array([[1.0, 0, 0, 0]]))
    # first form = dx2, second = dx3, third = dx4
    comps = np.array([[f.value[0] for f in form] for form in a])
    assert np.allclose(comps, np.eye(4)[1:], atol=1e-15)
    b = alpha_forms(np.array([[0.0, 2.0, 0, 0]]))
    assert b[0][0].value[0] == pytest.approx(-0.5, abs=1e-15)


def test_one_form_norms_and_radial_contraction(points):
    forms = alpha_forms(points)
    r2 = np.einsum("pi,pi->p", points, points)
    for form in forms:
        comps = np.stack([f.value for f in form], axis=-1)
        norm2 = np.einsum("pi,pi->p", comps, comps)
        assert np.max(np.abs(norm2 * r2 - 1.0)) < 1e-14
        radial = np.einsum("pi,pi->p", comps, points)
        assert np.max(np.abs(radial)) < 1e-14


def test_frame_duality_and_commutators(points):
    forms = alpha_forms(points)
    vees = vector_fields(points)
    for i in range(3):
        for j in range(3):
            val = sum(forms[i][k].value * vees[j][k].value for k in range(4))
            assert np.max(np.abs(val - (1.0 if i == j else 0.0))) < 1e-14
    # cyclic commutators close onto -2 times the third field
    for a, b, c in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        for i in range(4):
            lhs = sum(vees[a][k].value * vees[b][i].grad[:, k]
                      - vees[b][k].value * vees[a][i].grad[:, k]
                      for k in range(4))
            assert np.max(np.abs(lhs + 2 * vees[c][i].value)) < 1e-12


def test_farfield_at_axis_point():
    t = farfield_tensor().values(np.array([[1.0, 0, 0, 0]]))[0]
    assert np.allclose(t, np.diag([-1.0, -1.0, 1.0, 1.0]), atol=1e-15)


def test_farfield_tracefree(points):
    for reflected in (False, True):
        t = farfield_tensor(reflected).values(points)
        tr = np.einsum("pii->p", t)
        assert np.max(np.abs(tr)) == 0.0


def test_farfield_is_reflection_of_plain(points):
    that = farfield_tensor(True).values(points)
    t = farfield_tensor(False).values(points @ REFLECTION.T)
    pulled = np.einsum("ai,pab,bj->pij", REFLECTION, t, REFLECTION)
    assert np.max(np.abs(that - pulled)) < 1e-14


def test_farfield_frame_form_equals_cartesian(points):
    # frame expression -(x⊗x + A1⊗A1 - A2⊗A2 - A3⊗A3)/r^6 against the
    # quadratic-numerator components used by the lattice code
    from ehglue.fields import FRAME
    r2 = np.einsum("pi,pi->p", points, points)
    frames = [points] + [points @ J.T for J in FRAME]
    signs = [1.0, 1.0, -1.0, -1.0]
    frame_form = sum(s * np.einsum("pi,pj->pij", v, v)
                     for s, v in zip(signs, frames))
    frame_form = -frame_form / r2[:, None, None] ** 3
    t = farfield_tensor().values(points)
    assert np.max(np.abs(frame_form - t)) < 1e-13


def test_farfield_jets_match_finite_differences(rng):
    y = rng.normal(size=(6, 4)) + 2.0
    jets = farfield_jets(y, reflected=True, order=2)
    h = 1e-5
    for k in range(4):
        e = np.zeros(4)
        e[k] = h
        fd = (farfield_jets(y + e, True, 0).val
              - farfield_jets(y - e, True, 0).val) / (2 * h)
        assert np.max(np.abs(fd - jets.d1[..., k])) < 1e-7


def test_kernel_mode_closed_form_at_axis():
    o1 = kernel_mode(1, 1.0).values(np.array([[1.0, 0, 0, 0]]))[0]
    expected = np.diag([-1 / (2 * SQ2), -1 / (2 * SQ2), 1 / SQ2, 1 / SQ2])
    assert np.allclose(o1, expected, atol=1e-15)


def test_kernel_mode_pointwise_norm(points):
    g = eh_metric(1.0).jets(points, order=0)
    ginv = np.linalg.inv(g.val)
    r2 = np.einsum("pi,pi->p", points, points)
    expected = 4.0 * (1.0 / (1.0 + r2 ** 2)) ** 2
    for i in (1, 2, 3):
        o = kernel_mode(i, 1.0).values(points)
        sq = np.einsum("pik,pjl,pij,pkl->p", ginv, ginv, o, o)
        assert np.max(np.abs(sq - expected)) < 1e-12


def test_kernel_mode_equals_scale_derivative(points):
    # mode 1 = (eps/2) ∂_eps of the family, by central differences in eps
    eps, h = 1.0, 1e-6
    d_eps = (eh_metric(eps + h).values(points)
             - eh_metric(eps - h).values(points)) / (2 * h)
    o1 = kernel_mode(1, eps).values(points)
    assert np.max(np.abs(0.5 * eps * d_eps - o1)) < 1e-9


def test_farfield_is_mode1_asymptote():
    # mode1 - eps^4 T decays like r^-8: fitted slope on the axis
    radii = np.array([10.0, 15.0, 25.0, 40.0])
    pts = np.zeros((4, 4))
    pts[:, 0] = radii
    dev = np.abs(kernel_mode(1, 1.0).values(pts)
                 - farfield_tensor().values(pts))
    sup = dev.reshape(4, -1).max(axis=1)
    slope = np.polyfit(np.log(radii), np.log(sup), 1)[0]
    assert abs(slope + 8.0) < 0.3


def test_symmetry_maps_fix_fields(rng):
    from tests.conftest import sample_offorigin
    pts = sample_offorigin(rng, 30, 0.5, 2.0)
    fields = [eh_metric(1.0), eh_hat_metric(1.0),
              farfield_tensor(), farfield_tensor(True)]
    for field in fields:
        for sym in point_generators():
            assert symmetry_check(field, sym, pts) < 1e-13


def test_euclidean_fixed_by_all_maps(rng):
    from ehglue.fields import euclidean_metric
    from tests.conftest import sample_offorigin
    pts = sample_offorigin(rng, 10, 0.5, 2.0)
    for sym in map_collection():
        assert symmetry_check(euclidean_metric(), sym, pts) == 0.0


def test_inner_product_cases():
    eye = np.eye(4)
    assert inner_product(eye, eye, eye) == pytest.approx(4.0)
    h = np.diag([-1.0, -1.0, 1.0, 1.0])
    assert inner_product(eye, h, eye) == pytest.approx(0.0, abs=1e-15)
    assert inner_product(2 * eye, eye, eye) == pytest.approx(1.0)


def test_inner_product_positivity(rng):
    g = np.eye(4) + 0.1 * np.eye(4) * rng.random()
    for _ in range(50):
        h = rng.normal(size=(4, 4))
        h = h + h.T
        val = inner_product(g, h, h)
        assert val >= 0.0
        if np.max(np.abs(h)) > 1e-12:
            assert val > 0.0


def test_singular_metric_raises():
    from ehglue.sym2 import SingularMetricError, inverse_metric
    g = np.zeros((4, 4))
    with pytest.raises(SingularMetricError):
        inverse_metric(g)


def test_origin_rejected():
    with pytest.raises(DomainError):
        eh_metric(1.0).values(np.zeros((1, 4)))
    with pytest.raises(DomainError):
        alpha_forms(np.zeros((1, 4)))
