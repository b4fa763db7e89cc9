"""Closed-form geometric fields on R^4 \\ {0}.

Everything here is expressed in Cartesian components through three linear
frame vectors A^1, A^2, A^3 (the values of the standard contact vector
fields) and the radius:

    A^1 = (-x2,  x1, -x4,  x3)
    A^2 = (-x3,  x4,  x1, -x2)
    A^3 = (-x4, -x3,  x2,  x1)

together with x itself they form an orthogonal frame of common norm r, and
the associated one-forms A^k / r^2 each have Euclidean norm 1/r.  The
gravitational instanton metric with scale parameter eps is

    g = (x⊗x + A1⊗A1) / W + (A2⊗A2 + A3⊗A3) · W / r^4,   W = sqrt(eps^4 + r^4),

whose Cartesian component matrix has determinant one.  The reflected copy is
the pull-back under x1 ↦ -x1.  The far-field tensor is the leading r^-4
deviation of the eps-family from the flat metric, and the three kernel modes
are the decaying solutions of the linearized Einstein operator around g.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .jets import DIM, DomainError, Jet2, coordinate_jets, radius2_jet
from .sym2 import Sym2Jet, pullback_jet

# frame matrices: A^k = J_k x
J1 = np.array([[0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0]], dtype=float)
J2 = np.array([[0, 0, -1, 0], [0, 0, 0, 1], [1, 0, 0, 0], [0, -1, 0, 0]], dtype=float)
J3 = np.array([[0, 0, 0, -1], [0, 0, -1, 0], [0, 1, 0, 0], [1, 0, 0, 0]], dtype=float)
FRAME = (J1, J2, J3)

REFLECTION = np.diag([-1.0, 1.0, 1.0, 1.0])


def _check_off_origin(x: np.ndarray, r_min: float) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    r2 = np.einsum("...i,...i->...", x, x)
    if np.any(r2 <= r_min * r_min):
        raise DomainError("field evaluated at (or too close to) a singular point")
    return x


def _frame_jets(x: np.ndarray) -> tuple[list[Jet2], list[list[Jet2]]]:
    xj = coordinate_jets(x)
    ajs = []
    for J in FRAME:
        ajs.append([Jet2.linear(x, J[i]) for i in range(DIM)])
    return xj, ajs


def _sym_pair(u: list[Jet2], v: list[Jet2]) -> dict[tuple[int, int], Jet2]:
    """Components of u ⊗ v + v ⊗ u (upper triangle)."""
    return {(i, j): u[i] * v[j] + v[i] * u[j] for i in range(DIM) for j in range(i, DIM)}


def _outer(u: list[Jet2]) -> dict[tuple[int, int], Jet2]:
    return {(i, j): u[i] * u[j] for i in range(DIM) for j in range(i, DIM)}


def _comb(*terms) -> dict[tuple[int, int], Jet2]:
    """Linear combination of component dicts given as (coeff_jet_or_float, dict)."""
    out: dict[tuple[int, int], Jet2] = {}
    for coeff, comps in terms:
        for key, jet in comps.items():
            term = jet * coeff if not isinstance(coeff, Jet2) else coeff * jet
            out[key] = out.get(key) + term if key in out else term
    return out


@dataclass
class TensorField:
    """A pure map point ↦ symmetric 2-tensor with exact jets (Sym2Field).

    ``fn(x, order)`` returns a :class:`Sym2Jet`; ``r_min`` guards the
    coordinate singularity at the origin.
    """

    name: str
    fn: object
    r_min: float = 0.0

    def jets(self, x: np.ndarray, order: int = 2) -> Sym2Jet:
        x = _check_off_origin(x, self.r_min) if self.r_min >= 0.0 else np.asarray(x, float)
        return self.fn(x, order)

    def values(self, x: np.ndarray) -> np.ndarray:
        return self.jets(x, order=0).val


def euclidean_metric() -> TensorField:
    def fn(x, order):
        shape = np.asarray(x).shape[:-1]
        out = Sym2Jet.zeros(shape, order)
        out.val[...] = np.eye(DIM)
        return out
    return TensorField("euclidean", fn, r_min=-1.0)


# ---------------------------------------------------------------------------
# instanton metric family
# ---------------------------------------------------------------------------

def eh_metric(eps: float, reflected: bool = False) -> TensorField:
    """The Ricci-flat instanton metric with scale eps (eps = 0: flat).

    Cartesian components carry exact second-order jets.  ``reflected`` gives
    the pull-back under x1 ↦ -x1 (the opposite orientation copy).
    """
    if eps < 0.0:
        raise ValueError("eps must be >= 0")
    if eps == 0.0:
        return euclidean_metric()
    e4 = eps ** 4

    def fn(x, order):
        xj, ajs = _frame_jets(x)
        r2 = radius2_jet(x)
        w2 = r2 * r2 + e4
        w = w2.sqrt()
        inv_w = w.reciprocal()
        w_over_r4 = w / (r2 * r2)
        comps = _comb((inv_w, _comb((1.0, _outer(xj)), (1.0, _outer(ajs[0])))),
                      (w_over_r4, _comb((1.0, _outer(ajs[1])), (1.0, _outer(ajs[2])))))
        return Sym2Jet.from_components(comps, np.asarray(x).shape[:-1], order)

    base = TensorField(f"eh(eps={eps})", fn, r_min=1e-6 * eps)
    if not reflected:
        return base
    return pullback_field(base, REFLECTION, name=f"eh_hat(eps={eps})")


def eh_hat_metric(eps: float) -> TensorField:
    return eh_metric(eps, reflected=True)


def pullback_field(field: TensorField, lin: np.ndarray, shift=None,
                   name: str | None = None) -> TensorField:
    """The field φ*h for the affine map φ(x) = lin·x + shift."""
    lin = np.asarray(lin, dtype=float)
    shift = np.zeros(DIM) if shift is None else np.asarray(shift, dtype=float)

    def fn(x, order):
        y = np.asarray(x, dtype=float) @ lin.T + shift
        return pullback_jet(field.fn(y, order), lin)

    return TensorField(name or f"pullback({field.name})", fn, field.r_min)


# ---------------------------------------------------------------------------
# far-field tensors (leading large-r deviation from flat, both orientations)
# ---------------------------------------------------------------------------

def farfield_scalars(reflected: bool) -> list[np.ndarray]:
    """Quadratic-form matrices of the three numerators s, p, q.

    The far-field tensor components are  ±n(y)/|y|^6  with n drawn from
    s = y1²+y2²-y3²-y4², p = 2(y1 y3 ± y2 y4), q = 2(y1 y4 ∓ y2 y3).
    """
    s = np.diag([1.0, 1.0, -1.0, -1.0])
    p = np.zeros((4, 4))
    q = np.zeros((4, 4))
    sgn = -1.0 if reflected else 1.0
    p[0, 2] = p[2, 0] = 1.0
    p[1, 3] = p[3, 1] = sgn
    q[0, 3] = q[3, 0] = 1.0
    q[1, 2] = q[2, 1] = -sgn
    return [s, p, q]


def farfield_pattern(reflected: bool) -> np.ndarray:
    """pattern[n, i, j]: the far-field tensor is Σ_n pattern[n]·(-n-th scalar/r^6)."""
    pat = np.zeros((3, 4, 4))
    pat[0] = np.diag([1.0, 1.0, -1.0, -1.0])
    sgn = -1.0 if reflected else 1.0
    pat[1, 0, 2] = pat[1, 2, 0] = 1.0
    pat[1, 1, 3] = pat[1, 3, 1] = sgn
    pat[2, 0, 3] = pat[2, 3, 0] = 1.0
    pat[2, 1, 2] = pat[2, 2, 1] = -sgn
    return pat


def farfield_jets(y: np.ndarray, reflected: bool = False, order: int = 2) -> Sym2Jet:
    """Far-field tensor at points y (vectorized closed-form derivatives).

    Components are -n_c(y)/ρ^6 arranged by :func:`farfield_pattern`; first
    and second derivatives are assembled from the explicit product rule, so
    this is cheap enough to run over (points × lattice sites) batches.
    """
    y = np.asarray(y, dtype=float)
    shape = y.shape[:-1]
    rho2 = np.einsum("...i,...i->...", y, y)
    inv2 = 1.0 / rho2
    inv6 = inv2 * inv2 * inv2
    inv8 = inv6 * inv2

    scal = farfield_scalars(reflected)
    pat = farfield_pattern(reflected)

    n_vals = np.stack([np.einsum("...i,ij,...j->...", y, M, y) for M in scal], axis=-1)
    out = Sym2Jet.zeros(shape, order)
    out.val = -np.einsum("...n,nij->...ij", n_vals * inv6[..., None], pat,
                         optimize=False)
    if order == 0:
        return out

    # ∂_k (n/ρ^6) = (∂_k n)/ρ^6 - 6 n y_k / ρ^8
    n_grads = np.stack([2.0 * np.einsum("ij,...j->...i", M, y) for M in scal], axis=-2)
    g_scal = (n_grads * inv6[..., None, None]
              - 6.0 * n_vals[..., :, None] * y[..., None, :] * inv8[..., None, None])
    out.d1 = -np.einsum("...nk,nij->...ijk", g_scal, pat, optimize=False)
    if order == 1:
        return out

    # ∂_l ∂_k (n/ρ^6) = (∂²n)_{kl}/ρ^6 - 6[(∂_k n) y_l + (∂_l n) y_k + n δ_{kl}]/ρ^8
    #                   + 48 n y_k y_l / ρ^10
    inv10 = inv8 * inv2
    eye = np.eye(DIM)
    h_scal = np.empty(shape + (3, DIM, DIM))
    for c, M in enumerate(scal):
        cross = (n_grads[..., c, :, None] * y[..., None, :]
                 + y[..., :, None] * n_grads[..., c, None, :])
        h_scal[..., c, :, :] = (2.0 * M * inv6[..., None, None]
                                - 6.0 * (cross + n_vals[..., c, None, None] * eye)
                                * inv8[..., None, None]
                                + 48.0 * n_vals[..., c, None, None]
                                * y[..., :, None] * y[..., None, :]
                                * inv10[..., None, None])
    out.d2 = -np.einsum("...nkl,nij->...ijkl", h_scal, pat, optimize=False)
    return out


def farfield_tensor(reflected: bool = False) -> TensorField:
    def fn(x, order):
        return farfield_jets(x, reflected=reflected, order=order)
    return TensorField("farfield_hat" if reflected else "farfield", fn, r_min=0.0)


# ---------------------------------------------------------------------------
# kernel modes of the linearized operator
# ---------------------------------------------------------------------------

def kernel_mode(i: int, eps: float, reflected: bool = False) -> TensorField:
    """The i-th decaying kernel tensor (i in {1, 2, 3}) at scale eps.

    Mode 1 equals half the eps-logarithmic derivative of the metric family;
    all three are trace-free, divergence-free, and annihilated by the
    Lichnerowicz operator of the matching metric (verified in tests, not
    assumed).
    """
    if i not in (1, 2, 3):
        raise ValueError("mode index must be 1, 2, or 3")
    if eps <= 0.0:
        raise ValueError("eps must be > 0")
    e4 = eps ** 4

    def fn(x, order):
        xj, ajs = _frame_jets(x)
        r2 = radius2_jet(x)
        w2 = r2 * r2 + e4
        if i == 1:
            inv_w3 = w2.sqrt().reciprocal() ** 3
            m1 = _comb((1.0, _outer(xj)), (1.0, _outer(ajs[0])))
            m2 = _comb((1.0, _outer(ajs[1])), (1.0, _outer(ajs[2])))
            w_term = (w2 * r2 * r2).reciprocal() * w2.sqrt()
            comps = _comb((inv_w3 * (-e4), m1), (w_term * e4, m2))
        else:
            pref = (w2 * r2).reciprocal() * e4
            if i == 2:
                mix = _comb((1.0, _sym_pair(xj, ajs[1])), (-1.0, _sym_pair(ajs[0], ajs[2])))
            else:
                mix = _comb((1.0, _sym_pair(xj, ajs[2])), (1.0, _sym_pair(ajs[0], ajs[1])))
            comps = _comb((pref, mix))
        return Sym2Jet.from_components(comps, np.asarray(x).shape[:-1], order)

    base = TensorField(f"mode{i}(eps={eps})", fn, r_min=1e-6 * eps)
    if not reflected:
        return base
    return pullback_field(base, REFLECTION, name=f"mode{i}_hat(eps={eps})")


# ---------------------------------------------------------------------------
# one-forms and frame vector fields
# ---------------------------------------------------------------------------

def alpha_forms(x: np.ndarray) -> list[list[Jet2]]:
    """The three contact one-forms; each has Euclidean norm 1/r.

    Returns three covectors with Jet2 components (A^k / r^2).
    """
    x = _check_off_origin(x, 0.0)
    inv_r2 = radius2_jet(x).reciprocal()
    _, ajs = _frame_jets(x)
    return [[a * inv_r2 for a in ak] for ak in ajs]


def vector_fields(x: np.ndarray) -> list[list[Jet2]]:
    """Frame vector fields V_1, V_2, V_3 (components A^k with jets)."""
    x = np.asarray(x, dtype=float)
    _, ajs = _frame_jets(x)
    return ajs


def radial_vector(x: np.ndarray) -> list[Jet2]:
    """The Euler field r ∂/∂r, components x_i."""
    return coordinate_jets(np.asarray(x, dtype=float))


# ---------------------------------------------------------------------------
# symmetry maps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SymmetryMap:
    """Affine map x ↦ lin·x + shift with signed-permutation linear part."""

    lin: tuple
    shift: tuple
    label: str = ""

    def linear(self) -> np.ndarray:
        return np.asarray(self.lin, dtype=float)

    def offset(self) -> np.ndarray:
        return np.asarray(self.shift, dtype=float)

    def apply(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=float) @ self.linear().T + self.offset()


def _lin_map(rows, label) -> SymmetryMap:
    return SymmetryMap(tuple(map(tuple, rows)), (0.0,) * 4, label)


def point_generators() -> list[SymmetryMap]:
    """The four linear generators fixing the instanton fields."""
    return [
        _lin_map([[0, 1, 0, 0], [-1, 0, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]], "rot12"),
        _lin_map([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, -1, 0]], "rot34"),
        _lin_map([[0, 0, 1, 0], [0, 0, 0, 1], [1, 0, 0, 0], [0, 1, 0, 0]], "swap"),
        _lin_map([[0, 0, -1, 0], [0, 0, 0, 1], [-1, 0, 0, 0], [0, 1, 0, 0]], "swapneg"),
    ]


def torus_generators() -> list[SymmetryMap]:
    """The eight affine generators of the periodic/reflection group."""
    maps = []
    eye = np.eye(4)
    for i in range(4):
        lin = eye.copy()
        lin[i, i] = -1.0
        shift = np.zeros(4)
        shift[i] = 1.0
        maps.append(SymmetryMap(tuple(map(tuple, lin)), tuple(shift), f"flip{i+1}"))
    for i in range(4):
        shift = np.zeros(4)
        shift[i] = 2.0
        maps.append(SymmetryMap(tuple(map(tuple, eye)), tuple(shift), f"shift{i+1}"))
    return maps


def map_collection() -> list[SymmetryMap]:
    return point_generators() + torus_generators()


def symmetry_check(field: TensorField, sym: SymmetryMap,
                   sample: np.ndarray) -> float:
    """max over the sample of |φ*h - h| in Euclidean component norm."""
    x = np.asarray(sample, dtype=float)
    lin = sym.linear()
    here = field.jets(x, order=0).val
    there = field.jets(sym.apply(x), order=0).val
    pulled = np.einsum("ai,...ab,bj->...ij", lin, there, lin, optimize=False)
    return float(np.max(np.sqrt(np.einsum("...ij,...ij->...",
                                          pulled - here, pulled - here))))
