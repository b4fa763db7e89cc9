"""Quadrature rules for S^3 surface integrals and radial integrals.

The S^3 rule is a hyperspherical product rule: Gauss rules in the cosines of
the two polar angles (with the sin^2 ψ and sin θ measure factors folded into
the weights, i.e. Gauss-Gegenbauer and Gauss-Legendre) and a uniform periodic
rule in the azimuth.  This integrates every polynomial of degree ≤ order
exactly up to roundoff, and the total weight is the exact surface measure
2π²ρ³.

Radial rules are composite Gauss panels plus an analytic power-law tail
estimate, for integrands that decay like r^(3-p) (a field decaying like
r^(-p) against the r^3 volume factor).

All reductions go through compensated (Kahan) accumulation in a fixed
deterministic order, so results are independent of chunking and threading.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


# ---------------------------------------------------------------------------
# compensated summation
# ---------------------------------------------------------------------------

class KahanAccumulator:
    """Streaming compensated sum; works elementwise on arrays."""

    def __init__(self, shape=()):
        self.total = np.zeros(shape)
        self._comp = np.zeros(shape)

    def add(self, term):
        term = np.asarray(term, dtype=float)
        y = term - self._comp
        t = self.total + y
        self._comp = (t - self.total) - y
        self.total = t
        return self

    def result(self):
        return self.total if self.total.ndim else float(self.total)


def kahan_sum(values: np.ndarray, axis: int = -1) -> np.ndarray:
    """Compensated sum along one axis, iterating in index order."""
    values = np.asarray(values, dtype=float)
    values = np.moveaxis(values, axis, 0)
    acc = KahanAccumulator(values.shape[1:])
    for row in values:
        acc.add(row)
    return acc.total


def chunked_kahan_dot(a: np.ndarray, b: np.ndarray, chunk: int = 1 << 18) -> float:
    """Deterministic Σ a_i b_i: pairwise np.sum per chunk, Kahan across chunks."""
    acc = KahanAccumulator()
    for lo in range(0, a.shape[0], chunk):
        acc.add(np.sum(a[lo:lo + chunk] * b[lo:lo + chunk]))
    return acc.result()


# ---------------------------------------------------------------------------
# rules
# ---------------------------------------------------------------------------

@dataclass
class QuadratureRule:
    """Nodes and positive weights for one of the integral kinds used here.

    kind "surface": nodes are points on the sphere |x| = radius in R^4 and
    weights approximate the Euclidean surface measure.  kind "radial": nodes
    are radii with panel-Gauss weights, plus an optional analytic tail.
    """

    kind: str
    nodes: np.ndarray
    weights: np.ndarray
    radius: float = 0.0
    tail_node: float = 0.0
    tail_power: float = 0.0
    coarse_weights: np.ndarray | None = field(default=None, repr=False)

    def total_weight(self) -> float:
        return float(kahan_sum(self.weights, axis=0))

    def integrate(self, f) -> tuple[float, float]:
        """Apply the rule to a callable; returns (value, error estimate)."""
        fx = np.asarray(f(self.nodes), dtype=float)
        val = chunked_kahan_dot(self.weights, fx)
        est = 0.0
        if self.coarse_weights is not None:
            coarse = chunked_kahan_dot(self.coarse_weights, fx)
            est = abs(val - coarse)
        if self.kind == "radial" and self.tail_power > 4.0:
            # f ≈ C r^(3-p) beyond the last node: ∫_R^∞ f = f(R) R / (p-4).
            r0 = self.tail_node
            tail = float(f(np.array([r0]))[0]) * r0 / (self.tail_power - 4.0)
            # empirical tail error: re-estimate from one doubling further out
            mid_nodes, mid_w = _gauss_panel(r0, 2.0 * r0, 32)
            mid = chunked_kahan_dot(mid_w, np.asarray(f(mid_nodes), dtype=float))
            tail2 = float(f(np.array([2.0 * r0]))[0]) * 2.0 * r0 / (self.tail_power - 4.0)
            val += tail
            est += abs(tail - (mid + tail2))
        return val, est


def _chebyshev2(n: int):
    """Gauss rule for weight sqrt(1-u^2) on [-1, 1]."""
    k = np.arange(1, n + 1, dtype=float)
    theta = k * np.pi / (n + 1)
    return np.cos(theta), (np.pi / (n + 1)) * np.sin(theta) ** 2


def s3_quadrature(order: int, radius: float = 1.0) -> QuadratureRule:
    """Product rule on the 3-sphere of the given radius.

    order columns of Gauss nodes in each polar cosine and 2*order uniform
    azimuth points; node count 2*order^3.  Exact (to roundoff) for
    polynomials of degree ≤ order; total weight 2π²·radius³.
    """
    if order < 4:
        raise ValueError("s3_quadrature needs order >= 4")
    if radius <= 0.0:
        raise ValueError("s3_quadrature needs radius > 0")
    u1, w1 = _chebyshev2(order)           # u1 = cos ψ, weight carries sin²ψ
    u2, w2 = np.polynomial.legendre.leggauss(order)   # u2 = cos θ
    nphi = 2 * order
    phi = 2.0 * np.pi * np.arange(nphi) / nphi
    wphi = 2.0 * np.pi / nphi

    U1, U2, PHI = np.meshgrid(u1, u2, phi, indexing="ij")
    S1 = np.sqrt(1.0 - U1 ** 2)
    S2 = np.sqrt(1.0 - U2 ** 2)
    nodes = np.stack([
        U1,
        S1 * U2,
        S1 * S2 * np.cos(PHI),
        S1 * S2 * np.sin(PHI),
    ], axis=-1).reshape(-1, 4) * radius
    W = (w1[:, None, None] * w2[None, :, None]
         * np.full((1, 1, nphi), wphi)) * radius ** 3
    return QuadratureRule("surface", nodes, W.reshape(-1), radius=radius)


def _gauss_panel(a: float, b: float, n: int):
    u, w = np.polynomial.legendre.leggauss(n)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return mid + half * u, half * w


def radial_quadrature(a: float, b: float, decay_power: float = 0.0,
                      points_per_panel: int = 32, scale: float = 1.0,
                      max_doublings: int = 40) -> QuadratureRule:
    """Composite Gauss rule on [a, b] (b may be np.inf).

    For infinite b the integrand must behave like C r^(3-p) with
    p = decay_power > 4 (a field of decay r^(-p) times the r^3 measure);
    beyond the last panel the tail is estimated analytically and its own
    error is bounded empirically in :meth:`QuadratureRule.integrate`.
    """
    if a < 0.0:
        raise ValueError("radial_quadrature needs a >= 0")
    infinite = np.isinf(b)
    if infinite and decay_power <= 4.0:
        raise ValueError("non-integrable tail: decay power must exceed 4 "
                         "for an infinite upper limit")
    edges = [a]
    if infinite:
        r = max(scale, a + scale)
        edges.append(r)
        for _ in range(max_doublings):
            r *= 2.0
            edges.append(r)
    else:
        n_panels = 8
        edges.extend(a + (b - a) * (k + 1) / n_panels for k in range(n_panels))
    # fine and coarse rules share one node list; the coarse rule (half the
    # Gauss points per panel) carries zero fine-weights and vice versa, so a
    # single integrand evaluation yields both values and an error estimate.
    nodes, weights, coarse = [], [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        xs, ws = _gauss_panel(lo, hi, points_per_panel)
        xc, wc = _gauss_panel(lo, hi, points_per_panel // 2)
        nodes.extend([xs, xc])
        weights.extend([ws, np.zeros_like(wc)])
        coarse.extend([np.zeros_like(ws), wc])
    nodes = np.concatenate(nodes)
    weights = np.concatenate(weights)
    coarse = np.concatenate(coarse)
    return QuadratureRule("radial", nodes, weights,
                          tail_node=edges[-1] if infinite else 0.0,
                          tail_power=decay_power if infinite else 0.0,
                          coarse_weights=coarse)


def line_fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Least-squares slope and intercept with explicit deterministic sums."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.size
    sx, sy = kahan_sum(x, 0), kahan_sum(y, 0)
    sxx = kahan_sum(x * x, 0)
    sxy = kahan_sum(x * y, 0)
    slope = (n * sxy - sx * sy) / (n * sxx - sx * sx)
    intercept = (sy - slope * sx) / n
    return float(slope), float(intercept)
