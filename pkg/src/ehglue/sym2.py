"""Symmetric (0,2)-tensor values and their coordinate jets.

``Sym2Jet`` stores a batch of symmetric tensors with first and second
coordinate derivatives:

    val[..., i, j]          h_ij
    d1[..., i, j, k]        ∂_k h_ij
    d2[..., i, j, k, l]     ∂_k ∂_l h_ij

``d1``/``d2`` may be ``None`` when a caller only needs lower jet depth (the
background lattice sums are much cheaper at value+gradient level).  The
packed layout used by the on-disk cache keeps the 10 independent components
(i ≤ j) with 15 jet scalars each.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .jets import DIM, Jet2

# (i, j) pairs with i <= j, in row-major order of the upper triangle
PAIRS = [(i, j) for i in range(DIM) for j in range(i, DIM)]
# Hessian pairs (k, l) with k <= l, same convention
HPAIRS = PAIRS


@dataclass
class Sym2Jet:
    val: np.ndarray
    d1: np.ndarray | None = None
    d2: np.ndarray | None = None

    @property
    def order(self) -> int:
        return 0 if self.d1 is None else (1 if self.d2 is None else 2)

    @staticmethod
    def zeros(shape, order: int = 2) -> "Sym2Jet":
        return Sym2Jet(
            np.zeros(shape + (DIM, DIM)),
            np.zeros(shape + (DIM, DIM, DIM)) if order >= 1 else None,
            np.zeros(shape + (DIM, DIM, DIM, DIM)) if order >= 2 else None,
        )

    @staticmethod
    def from_components(comps: dict[tuple[int, int], Jet2], shape,
                        order: int = 2) -> "Sym2Jet":
        """Assemble from per-(i ≤ j) component jets."""
        out = Sym2Jet.zeros(shape, order)
        for (i, j), jet in comps.items():
            out.val[..., i, j] = jet.value
            out.val[..., j, i] = jet.value
            if order >= 1:
                out.d1[..., i, j, :] = jet.grad
                out.d1[..., j, i, :] = jet.grad
            if order >= 2:
                out.d2[..., i, j, :, :] = jet.hess
                out.d2[..., j, i, :, :] = jet.hess
        return out

    def __add__(self, other: "Sym2Jet") -> "Sym2Jet":
        order = min(self.order, other.order)
        return Sym2Jet(
            self.val + other.val,
            self.d1 + other.d1 if order >= 1 else None,
            self.d2 + other.d2 if order >= 2 else None,
        )

    def __sub__(self, other: "Sym2Jet") -> "Sym2Jet":
        order = min(self.order, other.order)
        return Sym2Jet(
            self.val - other.val,
            self.d1 - other.d1 if order >= 1 else None,
            self.d2 - other.d2 if order >= 2 else None,
        )

    def scaled(self, c: float) -> "Sym2Jet":
        return Sym2Jet(
            c * self.val,
            c * self.d1 if self.d1 is not None else None,
            c * self.d2 if self.d2 is not None else None,
        )

    def scaled_by_jet(self, s: Jet2) -> "Sym2Jet":
        """Product s(x) · h(x) with exact jets (s a scalar jet)."""
        v = s.value
        val = v[..., None, None] * self.val
        d1 = d2 = None
        if self.order >= 1:
            d1 = (v[..., None, None, None] * self.d1
                  + s.grad[..., None, None, :] * self.val[..., :, :, None])
        if self.order >= 2:
            cross = (s.grad[..., None, None, :, None]
                     * self.d1[..., :, :, None, :])
            d2 = (v[..., None, None, None, None] * self.d2
                  + cross + np.swapaxes(cross, -1, -2)
                  + s.hess[..., None, None, :, :] * self.val[..., :, :, None, None])
        return Sym2Jet(val, d1, d2)

    def translated(self) -> "Sym2Jet":
        """Jets are translation covariant; reuse arrays under x ↦ x - a."""
        return self

    # -- packed layout for the on-disk cache ------------------------------

    def packed(self) -> np.ndarray:
        """(..., 10, 15) array: per pair (i ≤ j) a row [val, 4 grads, 10 hess]."""
        shape = self.val.shape[:-2]
        out = np.zeros(shape + (10, 15))
        for c, (i, j) in enumerate(PAIRS):
            out[..., c, 0] = self.val[..., i, j]
            if self.d1 is not None:
                out[..., c, 1:5] = self.d1[..., i, j, :]
            if self.d2 is not None:
                for h, (k, l) in enumerate(HPAIRS):
                    out[..., c, 5 + h] = self.d2[..., i, j, k, l]
        return out

    @staticmethod
    def from_packed(packed: np.ndarray, order: int = 2) -> "Sym2Jet":
        shape = packed.shape[:-2]
        out = Sym2Jet.zeros(shape, order)
        for c, (i, j) in enumerate(PAIRS):
            for tgt in ((i, j), (j, i)):
                out.val[..., tgt[0], tgt[1]] = packed[..., c, 0]
                if order >= 1:
                    out.d1[..., tgt[0], tgt[1], :] = packed[..., c, 1:5]
                if order >= 2:
                    for h, (k, l) in enumerate(HPAIRS):
                        out.d2[..., tgt[0], tgt[1], k, l] = packed[..., c, 5 + h]
                        out.d2[..., tgt[0], tgt[1], l, k] = packed[..., c, 5 + h]
        return out


def inner_product(g: np.ndarray, h: np.ndarray, k: np.ndarray) -> np.ndarray:
    """Metric pairing ⟨h, k⟩_g = g^{ik} g^{jl} h_ij k_kl (batched).

    g, h, k are (..., 4, 4) symmetric component arrays; g must be positive
    definite.  Raises on a singular metric with a condition-number
    diagnostic.
    """
    ginv = inverse_metric(g)
    return np.einsum("...ik,...jl,...ij,...kl->...", ginv, ginv, h, k,
                     optimize=False)


class SingularMetricError(np.linalg.LinAlgError):
    pass


def inverse_metric(g: np.ndarray) -> np.ndarray:
    try:
        ginv = np.linalg.inv(g)
    except np.linalg.LinAlgError as exc:
        cond = np.linalg.cond(g)
        raise SingularMetricError(
            f"metric inversion failed (condition number {np.max(cond):.3e})"
        ) from exc
    if not np.all(np.isfinite(ginv)):
        cond = np.linalg.cond(g)
        raise SingularMetricError(
            f"metric inverse not finite (condition number {np.max(cond):.3e})")
    return ginv


def pullback_values(val: np.ndarray, lin: np.ndarray) -> np.ndarray:
    """(φ*h)(x) = Dφ^T h(φx) Dφ for values h already evaluated at φx."""
    return np.einsum("ai,...ab,bj->...ij", lin, val, lin, optimize=False)


def pullback_jet(h: Sym2Jet, lin: np.ndarray) -> Sym2Jet:
    """Pull back a full jet under the affine map x ↦ lin·x + shift.

    The input jet must already be evaluated at the image points; derivative
    indices transform with one factor of ``lin`` each.
    """
    val = pullback_values(h.val, lin)
    d1 = d2 = None
    if h.d1 is not None:
        d1 = np.einsum("ai,...abc->...ibc", lin, h.d1, optimize=False)
        d1 = np.einsum("bj,...ibc->...ijc", lin, d1, optimize=False)
        d1 = np.einsum("ck,...ijc->...ijk", lin, d1, optimize=False)
    if h.d2 is not None:
        d2 = np.einsum("ai,...abcd->...ibcd", lin, h.d2, optimize=False)
        d2 = np.einsum("bj,...ibcd->...ijcd", lin, d2, optimize=False)
        d2 = np.einsum("ck,...ijcd->...ijkd", lin, d2, optimize=False)
        d2 = np.einsum("dl,...ijkd->...ijkl", lin, d2, optimize=False)
    return Sym2Jet(val, d1, d2)
