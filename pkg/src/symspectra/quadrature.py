"""Breakpoint-aligned composite Gauss-Legendre quadrature.

Grids are built piecewise between coefficient breakpoints so that integrands
are smooth on every subinterval; refinement doubles the subdivision count.
A cumulative-integral helper turns nodal samples into a spectrally accurate
antiderivative (per-subinterval Legendre expansion), which is what the
variation-of-constants solver and the resolvent kernel need.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre as npleg


@lru_cache(maxsize=16)
def _reference_rule(order: int):
    xi, w = npleg.leggauss(order)
    # Discrete Legendre transform: values at nodes -> series coefficients,
    # exact for polynomials of degree < order.
    vander = npleg.legvander(xi, order - 1)          # (order, order), V[k, m] = P_m(xi_k)
    scale = (2.0 * np.arange(order) + 1.0) / 2.0
    to_coeff = scale[:, None] * (vander * w[:, None]).T
    return xi, w, to_coeff


@dataclass(frozen=True)
class QuadGrid:
    """Composite Gauss-Legendre grid on [a, b] aligned with breakpoints."""

    a: float
    b: float
    sub_edges: np.ndarray   # (S+1,) subinterval boundaries, includes all breakpoints
    order: int
    nodes: np.ndarray       # (S*order,)
    weights: np.ndarray     # (S*order,)

    @property
    def n_sub(self) -> int:
        return len(self.sub_edges) - 1

    @staticmethod
    def build(a: float, b: float, breakpoints=(), subdivisions: int = 4,
              order: int = 12, max_freq: float = 0.0) -> "QuadGrid":
        """Grid with `subdivisions` panels per piece, more if max_freq demands it.

        `max_freq` is the largest |lambda| the integrands oscillate with; panel
        widths are capped near order/max_freq so Gauss-Legendre resolves the
        oscillation with headroom.
        """
        pts = sorted({float(a), float(b), *(float(t) for t in breakpoints
                                            if a < float(t) < b)})
        edges = []
        for left, right in zip(pts[:-1], pts[1:]):
            m = subdivisions
            if max_freq > 0.0:
                h_max = max(order / (2.0 * max_freq), 1e-8)
                m = max(m, int(np.ceil((right - left) / h_max)))
            edges.append(np.linspace(left, right, m + 1))
        sub_edges = np.unique(np.concatenate(edges))
        return QuadGrid._from_edges(a, b, sub_edges, order)

    @staticmethod
    def _from_edges(a, b, sub_edges, order) -> "QuadGrid":
        xi, w, _ = _reference_rule(order)
        left = sub_edges[:-1]
        half = 0.5 * np.diff(sub_edges)
        nodes = (left[:, None] + half[:, None] * (xi[None, :] + 1.0)).ravel()
        weights = (half[:, None] * w[None, :]).ravel()
        return QuadGrid(a=float(a), b=float(b), sub_edges=np.asarray(sub_edges, float),
                        order=order, nodes=nodes, weights=weights)

    def refine(self) -> "QuadGrid":
        """Split every subinterval in two."""
        mids = 0.5 * (self.sub_edges[:-1] + self.sub_edges[1:])
        sub_edges = np.sort(np.concatenate([self.sub_edges, mids]))
        return QuadGrid._from_edges(self.a, self.b, sub_edges, self.order)

    def integrate(self, values: np.ndarray):
        """Sum of weights * values along the leading axis."""
        return np.tensordot(self.weights, values, axes=(0, 0))


class CumulativeIntegral:
    """Antiderivative t -> integral over [a, t] of sampled values.

    Reconstructed per subinterval from the Legendre expansion of the sampled
    integrand, so evaluation anywhere on the grid's interval is spectrally
    accurate for smooth data.
    """

    def __init__(self, grid: QuadGrid, values: np.ndarray):
        p = grid.order
        xi, w, to_coeff = _reference_rule(p)
        s = grid.n_sub
        tail = values.shape[1:]
        blocks = values.reshape(s, p, *tail)
        coeff = np.tensordot(to_coeff, blocks, axes=(1, 1))   # (p, s, *tail)
        coeff = np.moveaxis(coeff, 0, 1)                      # (s, p, *tail)
        anti = npleg.legint(coeff, axis=1)                    # (s, p+1, *tail)
        # Normalise each antiderivative to vanish at the left panel edge.
        at_left = npleg.legval(-1.0, np.moveaxis(anti, 1, 0), tensor=True)
        self._anti = anti
        self._at_left = at_left
        half = 0.5 * np.diff(grid.sub_edges)
        full = npleg.legval(1.0, np.moveaxis(anti, 1, 0), tensor=True) - at_left
        panel = half.reshape(-1, *([1] * len(tail))) * full
        prefix = np.concatenate([np.zeros((1, *tail), dtype=panel.dtype),
                                 np.cumsum(panel, axis=0)], axis=0)
        self._prefix = prefix        # (s+1, *tail): integral up to each sub edge
        self._half = half
        self.grid = grid
        self.total = prefix[-1]

    def at(self, ts) -> np.ndarray:
        """Integral over [a, t] for each t (scalar or 1-D array)."""
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        edges = self.grid.sub_edges
        idx = np.clip(np.searchsorted(edges, ts, side="right") - 1, 0, self.grid.n_sub - 1)
        xi = (ts - edges[idx]) / (edges[idx + 1] - edges[idx]) * 2.0 - 1.0
        out = np.empty((len(ts), *self._prefix.shape[1:]), dtype=self._prefix.dtype)
        for k, (i, x) in enumerate(zip(idx, xi)):
            local = npleg.legval(x, np.moveaxis(self._anti[i], 0, 0)) - self._at_left[i]
            out[k] = self._prefix[i] + self._half[i] * local
        return out
