"""The glued metric: instanton caps on a checkerboard lattice background.

On the fundamental cube the metric is the instanton metric inside radius
δ/2, the flat metric plus half eps^4 times the background sum outside
radius δ, and a smooth cutoff blend in between.  Extended over all of R^4
minus the lattice, the cap at an odd site is the reflected instanton; the
evaluation below dispatches on the nearest lattice site, so fields can be
sampled anywhere the background expansion is valid.

The obstruction tensor is the trace-free part (with respect to the glued
metric) of half the eps-logarithmic derivative of the glued family; inside
radius δ/2 it coincides with the first kernel mode.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .curvature import curvature_at, inverse_d1, inverse_d2, lichnerowicz
from .fields import eh_metric, kernel_mode
from .jets import DIM, DomainError, Jet2, jet_radius
from .lattice import BackgroundField
from .quadrature import line_fit, s3_quadrature
from .sym2 import Sym2Jet, inverse_metric


@dataclass(frozen=True)
class GlueParams:
    """Scales of the gluing: cap scale eps, neck radius delta, lattice cutoff.

    Geometric well-definedness is always enforced: the caps must sit well
    inside their necks (eps ≤ delta/2) and the neck must stay inside the
    unit cell (delta ≤ 0.45).  The quantitative separation of the asymptotic
    regime, eps ≤ delta²/10 and delta ≤ 1/10, is enforced only in
    mode="asymptotic" — the desk-scale verification runs (eps ~ 0.1,
    delta ~ 0.3) deliberately sit outside it — and is always reported
    through :attr:`asymptotic_regime`.
    """

    eps: float
    delta: float
    lattice_cutoff: int = 32
    mode: str = "desk"

    def __post_init__(self):
        if self.eps <= 0.0 or self.delta <= 0.0:
            raise ValueError("eps and delta must be positive")
        if self.eps > 0.5 * self.delta:
            raise ValueError("cap does not fit its neck: need eps <= delta/2")
        if self.delta > 0.45:
            raise ValueError("neck leaves the unit cell: need delta <= 0.45")
        if self.mode == "asymptotic" and not self.asymptotic_regime:
            raise ValueError("asymptotic separation violated: "
                             "need eps <= delta^2/10 and delta <= 1/10")
        if self.mode not in ("desk", "asymptotic"):
            raise ValueError("mode must be 'desk' or 'asymptotic'")

    @property
    def asymptotic_regime(self) -> bool:
        return self.eps <= self.delta ** 2 / 10.0 and self.delta <= 0.1


def region_tag(x: np.ndarray, params: GlueParams) -> np.ndarray:
    """0 = inner (r ≤ δ/2), 1 = annulus, 2 = outer (r ≥ δ), per point,
    measured from the nearest lattice site."""
    x = np.asarray(x, dtype=float)
    site = np.rint(x)
    r = np.sqrt(np.einsum("...i,...i->...", x - site, x - site))
    return np.where(r <= 0.5 * params.delta, 0,
                    np.where(r >= params.delta, 2, 1))


# ---------------------------------------------------------------------------
# cutoff function
# ---------------------------------------------------------------------------

def _bump(u: np.ndarray):
    """exp(-1/u) for u > 0 (else 0), with first and second derivatives.

    Below u = 1e-8 the value underflows to an exact double-precision zero,
    so flooring the denominator there changes nothing but avoids overflow
    warnings.
    """
    pos = u > 0.0
    safe = np.where(pos, np.maximum(u, 1e-8), 1.0)
    v = np.where(pos, np.exp(-1.0 / safe), 0.0)
    d1 = np.where(pos, v / safe ** 2, 0.0)
    d2 = np.where(pos, v * (1.0 - 2.0 * safe) / safe ** 4, 0.0)
    return v, d1, d2


def cutoff_scalar(s) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Smooth monotone step: exactly 0 for s ≤ 2/3, exactly 1 for s ≥ 5/6.

    Built from the standard two-sided bump B(u)/(B(u)+B(1-u)) with
    u = 6(s - 2/3); returns (value, d/ds, d²/ds²).
    """
    s = np.asarray(s, dtype=float)
    u = 6.0 * (s - 2.0 / 3.0)
    b, db, ddb = _bump(u)
    c, dc, ddc = _bump(1.0 - u)
    den = b + c
    den = np.where(den > 0.0, den, 1.0)
    val = np.where(u >= 1.0, 1.0, np.where(u <= 0.0, 0.0, b / den))
    num_d = db * c + b * dc
    d1 = np.where((u > 0.0) & (u < 1.0), num_d / den ** 2, 0.0) * 6.0
    dd = (ddb * c - b * ddc) / den ** 2 - 2.0 * num_d * (db - dc) / den ** 3
    d2 = np.where((u > 0.0) & (u < 1.0), dd, 0.0) * 36.0
    return val, d1, d2


def cutoff_jet(x: np.ndarray, delta: float, center: np.ndarray) -> Jet2:
    """χ(|x - center|/δ) as a 4-variable jet."""
    y = np.asarray(x, dtype=float) - center
    r = jet_radius(y)
    val, d1, d2 = cutoff_scalar(r.value / delta)
    grad = (d1 / delta)[..., None] * r.grad
    hess = ((d1 / delta)[..., None, None] * r.hess
            + (d2 / delta ** 2)[..., None, None]
            * r.grad[..., :, None] * r.grad[..., None, :])
    return Jet2(val, grad, hess)


# ---------------------------------------------------------------------------
# glued metric and obstruction tensor
# ---------------------------------------------------------------------------

class GluedMetric:
    """Piecewise field with exact jets, valid on the background's domain."""

    def __init__(self, params: GlueParams,
                 background: BackgroundField | None = None):
        self.params = params
        self.background = background or BackgroundField(params.lattice_cutoff)
        self._cap = {False: eh_metric(params.eps),
                     True: eh_metric(params.eps, reflected=True)}
        self._mode1 = {False: kernel_mode(1, params.eps),
                       True: kernel_mode(1, params.eps, reflected=True)}

    # -- helpers -----------------------------------------------------------

    def _split(self, x: np.ndarray):
        x = np.asarray(x, dtype=float)
        site = np.rint(x)
        y = x - site
        r = np.sqrt(np.einsum("...i,...i->...", y, y))
        if np.any(r < 1e-6 * self.params.eps):
            raise DomainError("glued metric evaluated at a lattice point")
        odd = (np.abs(site).sum(axis=-1).astype(np.int64) & 1).astype(bool)
        return x, site, y, r, odd

    def _outer_jets(self, x: np.ndarray, order: int,
                    bg: Sym2Jet | None = None) -> Sym2Jet:
        if bg is None:
            bg = self.background.jets(x, order=order, which="combined")
        out = bg.scaled(0.5 * self.params.eps ** 4)
        out.val = out.val + np.eye(DIM)
        return out

    def _cap_jets(self, y: np.ndarray, odd: np.ndarray, order: int) -> Sym2Jet:
        out = Sym2Jet.zeros(y.shape[:-1], order)
        for is_odd in (False, True):
            m = odd == is_odd
            if not np.any(m):
                continue
            jets = self._cap[is_odd].jets(y[m], order)
            out.val[m] = jets.val
            if order >= 1:
                out.d1[m] = jets.d1
            if order >= 2:
                out.d2[m] = jets.d2
        return out

    def _mode1_jets(self, y: np.ndarray, odd: np.ndarray, order: int) -> Sym2Jet:
        out = Sym2Jet.zeros(y.shape[:-1], order)
        for is_odd in (False, True):
            m = odd == is_odd
            if not np.any(m):
                continue
            jets = self._mode1[is_odd].jets(y[m], order)
            out.val[m] = jets.val
            if order >= 1:
                out.d1[m] = jets.d1
            if order >= 2:
                out.d2[m] = jets.d2
        return out

    def _blend(self, inner: Sym2Jet, outer: Sym2Jet, chi: Jet2) -> Sym2Jet:
        one_minus = Jet2(1.0 - chi.value, -chi.grad, -chi.hess)
        return inner.scaled_by_jet(one_minus) + outer.scaled_by_jet(chi)

    # -- public -------------------------------------------------------------

    def jets(self, x: np.ndarray, order: int = 2,
             bg: Sym2Jet | None = None) -> Sym2Jet:
        x, site, y, r, odd = self._split(x)
        delta = self.params.delta
        out = Sym2Jet.zeros(x.shape[:-1], order)
        inner_m = r <= 0.5 * delta
        outer_m = r >= delta
        ann_m = ~inner_m & ~outer_m

        def put(mask, jets):
            out.val[mask] = jets.val
            if order >= 1:
                out.d1[mask] = jets.d1
            if order >= 2:
                out.d2[mask] = jets.d2

        def bg_slice(mask):
            if bg is None:
                return None
            return Sym2Jet(bg.val[mask],
                           bg.d1[mask] if order >= 1 else None,
                           bg.d2[mask] if order >= 2 else None)

        if np.any(inner_m):
            put(inner_m, self._cap_jets(y[inner_m], odd[inner_m], order))
        if np.any(outer_m):
            put(outer_m, self._outer_jets(x[outer_m], order, bg_slice(outer_m)))
        if np.any(ann_m):
            cap = self._cap_jets(y[ann_m], odd[ann_m], order)
            far = self._outer_jets(x[ann_m], order, bg_slice(ann_m))
            chi = cutoff_jet(x[ann_m], delta, site[ann_m])
            put(ann_m, self._blend(cap, far, chi))
        return out

    def values(self, x: np.ndarray) -> np.ndarray:
        return self.jets(x, order=0).val

    def obstruction_jets(self, x: np.ndarray, order: int = 2,
                         bg: Sym2Jet | None = None,
                         g: Sym2Jet | None = None) -> Sym2Jet:
        """Trace-free part w.r.t. the glued metric of ½ eps ∂_eps(glued)."""
        x, site, y, r, odd = self._split(x)
        delta = self.params.delta
        shape = x.shape[:-1]
        u = Sym2Jet.zeros(shape, order)
        inner_m = r <= 0.5 * delta
        outer_m = r >= delta
        ann_m = ~inner_m & ~outer_m

        def put(mask, jets):
            u.val[mask] = jets.val
            if order >= 1:
                u.d1[mask] = jets.d1
            if order >= 2:
                u.d2[mask] = jets.d2

        def bg_at(mask):
            if bg is None:
                return self.background.jets(x[mask], order=order)
            return Sym2Jet(bg.val[mask],
                           bg.d1[mask] if order >= 1 else None,
                           bg.d2[mask] if order >= 2 else None)

        if np.any(inner_m):
            put(inner_m, self._mode1_jets(y[inner_m], odd[inner_m], order))
        if np.any(outer_m):
            put(outer_m, bg_at(outer_m).scaled(self.params.eps ** 4))
        if np.any(ann_m):
            mode = self._mode1_jets(y[ann_m], odd[ann_m], order)
            far = bg_at(ann_m).scaled(self.params.eps ** 4)
            chi = cutoff_jet(x[ann_m], delta, site[ann_m])
            put(ann_m, self._blend(mode, far, chi))

        if g is None:
            g = self.jets(x, order=order, bg=bg)
        return remove_trace(u, g)

    def obstruction_values(self, x: np.ndarray) -> np.ndarray:
        return self.obstruction_jets(x, order=0).val


def remove_trace(u: Sym2Jet, g: Sym2Jet) -> Sym2Jet:
    """u - ¼ (tr_g u) g with jets (order limited by the inputs)."""
    order = min(u.order, g.order)
    ginv = inverse_metric(g.val)
    tr = np.einsum("...ij,...ij->...", ginv, u.val, optimize=False)
    trj = Jet2(tr, None, None)
    if order >= 1:
        dginv = inverse_d1(g, ginv)
        dtr = (np.einsum("...ijk,...ij->...k", dginv, u.val, optimize=False)
               + np.einsum("...ij,...ijk->...k", ginv, u.d1, optimize=False))
        trj.grad = dtr
    if order >= 2:
        ddginv = inverse_d2(g, ginv, dginv)
        ddtr = (np.einsum("...ijkl,...ij->...kl", ddginv, u.val, optimize=False)
                + np.einsum("...ijk,...ijl->...kl", dginv, u.d1, optimize=False)
                + np.einsum("...ijl,...ijk->...kl", dginv, u.d1, optimize=False)
                + np.einsum("...ij,...ijkl->...kl", ginv, u.d2, optimize=False))
        trj.hess = ddtr
    if order == 0:
        return Sym2Jet(u.val - 0.25 * tr[..., None, None] * g.val)
    quarter = Jet2(0.25 * trj.value, 0.25 * trj.grad,
                   0.25 * trj.hess if order >= 2 else None)
    if order == 1:
        scaled = Sym2Jet(
            quarter.value[..., None, None] * g.val,
            quarter.value[..., None, None, None] * g.d1
            + quarter.grad[..., None, None, :] * g.val[..., :, :, None])
        return u - scaled
    return u - g.scaled_by_jet(quarter)


# ---------------------------------------------------------------------------
# decay scans
# ---------------------------------------------------------------------------

@dataclass
class DecayScan:
    radii: np.ndarray
    sup_values: np.ndarray
    fitted_exponent: float
    fitted_prefactor: float


def _sup_norm_on_sphere(values: np.ndarray, metric_vals: np.ndarray) -> float:
    ginv = inverse_metric(metric_vals)
    sq = np.einsum("...ik,...jl,...ij,...kl->...", ginv, ginv, values, values,
                   optimize=False)
    return float(np.sqrt(np.max(sq)))


def decay_scan(glued: GluedMetric, field: str, radii, s3_order: int = 8) -> DecayScan:
    """Sup over spheres of |Ric| or |Δ_L obstruction|, with a log-log fit.

    field: "ricci" or "lichnerowicz".  Needs at least two radii for a fit.
    """
    radii = np.asarray(radii, dtype=float)
    if radii.size < 2:
        raise ValueError("decay scan needs at least two radii")
    sups = []
    for rho in radii:
        nodes = s3_quadrature(s3_order, rho).nodes
        g = glued.jets(nodes, order=2)
        curv = curvature_at(g)
        if field == "ricci":
            vals = curv.ricci
        elif field == "lichnerowicz":
            ob = glued.obstruction_jets(nodes, order=2)
            vals = lichnerowicz(g, ob, curv)
        else:
            raise ValueError("field must be 'ricci' or 'lichnerowicz'")
        sups.append(_sup_norm_on_sphere(vals, g.val))
    sups = np.asarray(sups)
    slope, intercept = line_fit(np.log(radii), np.log(np.maximum(sups, 1e-300)))
    return DecayScan(radii, sups, slope, float(np.exp(intercept)))


def inner_max_residual(glued: GluedMetric, field: str, rho: float,
                       s3_order: int = 6) -> float:
    scan_nodes = s3_quadrature(s3_order, rho).nodes
    g = glued.jets(scan_nodes, order=2)
    curv = curvature_at(g)
    if field == "ricci":
        vals = curv.ricci
    else:
        ob = glued.obstruction_jets(scan_nodes, order=2)
        vals = lichnerowicz(g, ob, curv)
    return _sup_norm_on_sphere(vals, g.val)
