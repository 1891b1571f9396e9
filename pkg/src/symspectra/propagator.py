"""Fundamental matrix solutions of the homogeneous system.

The matrix solution with identity initial value at the left endpoint is
integrated piece-by-piece (coefficients are smooth between breakpoints) with
an adaptive 8th-order Runge-Kutta method and dense output.  Distinct spectral
parameters are stacked into one vector field so that grids of lambda values
cost a single adaptive solve; results are memoized per (system, lambda).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .config import DEFAULT_TOLS, Tolerances
from .errors import StepSizeUnderflow
from .system import SymmetricSystem

_CHUNK = 192


def _piece_data(sys: SymmetricSystem):
    """Merged coefficient pieces: list of (t0, t1, b_coeffs, delta_coeffs)."""
    key = "pieces"
    if key not in sys._cache:
        a, b = sys.interval
        pts = np.unique(np.concatenate([[a, b], sys.breakpoints]))
        pts = pts[(pts >= a) & (pts <= b)]
        data = []
        for t0, t1 in zip(pts[:-1], pts[1:]):
            mid = 0.5 * (t0 + t1)
            bc = sys.coeff_b.coeffs[sys.coeff_b.piece_index(mid)]
            dc = sys.coeff_delta.coeffs[sys.coeff_delta.piece_index(mid)]
            data.append((float(t0), float(t1), bc, dc))
        sys._cache[key] = data
    return sys._cache[key]


def _horner(coeffs: np.ndarray, t: float) -> np.ndarray:
    acc = coeffs[-1]
    for k in range(coeffs.shape[0] - 2, -1, -1):
        acc = acc * t + coeffs[k]
    return acc


def _mode_split(gen: np.ndarray):
    """Eigenmode factorisation of a stack of generators, or None if unsafe.

    Only well-conditioned eigenbases are accepted (within 1e4), so defective
    or nearly defective generators fall back to the adaptive integrator.
    """
    try:
        rates, vecs = np.linalg.eig(gen)
    except np.linalg.LinAlgError:
        return None
    sv = np.linalg.svd(vecs, compute_uv=False)
    if np.any(sv[:, -1] <= 1e-4 * sv[:, 0]):
        return None
    return vecs, rates, np.linalg.inv(vecs)


def _make_rhs(j_mat, bc, dc, lams):
    minus_j = -j_mat
    lam_col = lams[:, None, None]
    m = len(lams)
    n = j_mat.shape[0]

    def rhs(t, yflat):
        coef = _horner(bc, t)[None, :, :] + lam_col * _horner(dc, t)[None, :, :]
        a = np.matmul(minus_j, coef)
        y = yflat.reshape(m, n, -1)
        return np.matmul(a, y).reshape(-1)

    return rhs


class _OdePieceSol:
    """Dense output of one stacked solve, reshaped to (nt, m, n, n)."""

    def __init__(self, sol, m, n):
        self.sol = sol
        self.m = m
        self.n = n

    def eval(self, ts):
        vals = self.sol(np.asarray(ts, dtype=float))   # (m*n*n, nt)
        return vals.T.reshape(len(ts), self.m, self.n, self.n)


class _ModePieceSol:
    """Closed-form piece solution from an eigenmode split of a constant generator."""

    def __init__(self, t0, vecs, rates, right):
        self.t0 = t0
        self.vecs = vecs     # (m, n, n)
        self.rates = rates   # (m, n)
        self.right = right   # (m, n, n): vecs^-1 @ (value at t0)

    def eval(self, ts):
        ts = np.asarray(ts, dtype=float)
        e = np.exp(np.multiply.outer(ts - self.t0, self.rates))    # (nt, m, n)
        return np.einsum("mij,tmj,mjl->tmil", self.vecs, e, self.right)


class BatchPropagation:
    """Stacked fundamental solutions for a batch of lambda values."""

    def __init__(self, sys, lams, sols, edge_values, err_est):
        self.sys = sys
        self.lams = np.asarray(lams)
        self._sols = sols                      # per piece: piece solution or None
        self.edge_values = edge_values         # (n_edges, m, n, n)
        self.edges = np.array([p[0] for p in _piece_data(sys)] + [sys.interval[1]])
        self.err_est = err_est

    def eval(self, ts) -> np.ndarray:
        """Dense-output values, shape (len(ts), m, n, n)."""
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        m = len(self.lams)
        n = self.sys.dims.dim_total
        out = np.empty((len(ts), m, n, n), dtype=complex)
        idx = np.clip(np.searchsorted(self.edges, ts, side="right") - 1,
                      0, len(self._sols) - 1)
        for p, sol in enumerate(self._sols):
            mask = idx == p
            if not mask.any():
                continue
            if sol is None:
                raise StepSizeUnderflow("dense output unavailable for this batch")
            out[mask] = sol.eval(ts[mask])
        return out

    def at_end(self) -> np.ndarray:
        return self.edge_values[-1]


def propagation_batch(sys: SymmetricSystem, lams, tol: Tolerances = DEFAULT_TOLS,
                      dense: bool = True) -> BatchPropagation:
    """Integrate the matrix equation for every lambda in one stacked solve."""
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    n = sys.dims.dim_total
    j_mat = sys.structure_matrix
    inner = min(tol.ode * 1e-2, 1e-10)
    y = np.broadcast_to(np.eye(n, dtype=complex), (len(lams), n, n)).copy()
    edge_values = [y.copy()]
    sols = []
    nsteps = 0
    for t0, t1, bc, dc in _piece_data(sys):
        if bc.shape[0] == 1 and dc.shape[0] == 1:
            # constant coefficients: transfer matrix and modes are closed-form
            gen = np.matmul(-j_mat, bc[0][None] + lams[:, None, None] * dc[0][None])
            if not dense:
                y = np.matmul(expm(gen * (t1 - t0)), y)
                edge_values.append(y.copy())
                sols.append(None)
                nsteps += 1
                continue
            mode = _mode_split(gen)
            if mode is not None:
                vecs, rates, vinv = mode
                right = np.matmul(vinv, y)
                sols.append(_ModePieceSol(t0, vecs, rates, right))
                e = np.exp(rates * (t1 - t0))
                y = np.matmul(vecs * e[:, None, :], right)
                edge_values.append(y.copy())
                nsteps += 1
                continue
        rhs = _make_rhs(j_mat, bc, dc, lams)
        res = solve_ivp(rhs, (t0, t1), y.reshape(-1), method="DOP853",
                        rtol=inner, atol=inner, dense_output=dense)
        if not res.success:
            raise StepSizeUnderflow(
                f"propagation failed on [{t0}, {t1}] (lambda batch of {len(lams)}): "
                f"{res.message}")
        y = res.y[:, -1].reshape(len(lams), n, n)
        edge_values.append(y.copy())
        sols.append(_OdePieceSol(res.sol, len(lams), n) if dense else None)
        nsteps += len(res.t)
    maxnorm = max(float(np.max(np.abs(v))) for v in edge_values)
    err_est = nsteps * inner * (1.0 + maxnorm)
    return BatchPropagation(sys, lams, sols, np.array(edge_values), err_est)


@dataclass
class Propagation:
    """Fundamental solution at one lambda with dense output and checkpoints."""

    sys: SymmetricSystem
    lam: complex
    batch: BatchPropagation

    @property
    def checkpoints(self):
        return [(float(t), self.batch.edge_values[k, 0])
                for k, t in enumerate(self.batch.edges)]

    @property
    def err_est(self) -> float:
        return self.batch.err_est

    def eval(self, ts) -> np.ndarray:
        """Values Y0(t, lambda), shape (len(ts), n, n)."""
        return self.batch.eval(ts)[:, 0]

    def at(self, t: float) -> np.ndarray:
        return self.eval([t])[0]

    def monodromy(self) -> np.ndarray:
        return self.batch.edge_values[-1, 0]


def propagate(sys: SymmetricSystem, lam: complex,
              tol: Tolerances = DEFAULT_TOLS) -> Propagation:
    """Dense fundamental solution, memoized per (lambda, tolerance)."""
    cache = sys._cache.setdefault("prop", {})
    key = (complex(lam), tol.ode)
    if key not in cache:
        cache[key] = Propagation(sys, complex(lam),
                                 propagation_batch(sys, [lam], tol, dense=True))
    return cache[key]


def fundamental_solution(sys: SymmetricSystem, lam: complex, t: float,
                         tol: Tolerances = DEFAULT_TOLS) -> np.ndarray:
    """Matrix solution Y0(t, lambda) with identity value at the left endpoint."""
    a, b = sys.interval
    if not (a - 1e-12 <= t <= b + 1e-12):
        raise ValueError(f"t={t} outside [{a}, {b}]")
    return propagate(sys, lam, tol).at(float(np.clip(t, a, b)))


def monodromy(sys: SymmetricSystem, lam: complex,
              tol: Tolerances = DEFAULT_TOLS) -> np.ndarray:
    """Y0 at the right endpoint, cached per lambda."""
    cache = sys._cache.setdefault("monodromy", {})
    key = (complex(lam), tol.ode)
    if key not in cache:
        prop_cache = sys._cache.get("prop", {})
        if key in prop_cache:
            cache[key] = prop_cache[key].monodromy()
        else:
            batch = propagation_batch(sys, [lam], tol, dense=False)
            cache[key] = batch.at_end()[0]
    return cache[key]


def monodromy_batch(sys: SymmetricSystem, lams,
                    tol: Tolerances = DEFAULT_TOLS) -> np.ndarray:
    """Monodromy matrices for an array of lambda values, shape (m, n, n)."""
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    cache = sys._cache.setdefault("monodromy", {})
    missing = [i for i, lam in enumerate(lams)
               if (complex(lam), tol.ode) not in cache]
    for start in range(0, len(missing), _CHUNK):
        idx = missing[start:start + _CHUNK]
        batch = propagation_batch(sys, lams[idx], tol, dense=False)
        ends = batch.at_end()
        for k, i in enumerate(idx):
            cache[(complex(lams[i]), tol.ode)] = ends[k]
    n = sys.dims.dim_total
    out = np.empty((len(lams), n, n), dtype=complex)
    for i, lam in enumerate(lams):
        out[i] = cache[(complex(lam), tol.ode)]
    return out


def transfer_matrices(sys: SymmetricSystem, lam: complex, edges,
                      tol: Tolerances = DEFAULT_TOLS):
    """Segment-to-segment transfer matrices along a partition of [a, b].

    Each entry propagates values from one partition point to the next; used
    by the stabilised two-point solver at large |Im lambda| where the full
    monodromy would overflow.
    """
    edges = np.asarray(edges, dtype=float)
    n = sys.dims.dim_total
    j_mat = sys.structure_matrix
    inner = min(tol.ode * 1e-2, 1e-10)
    pieces = _piece_data(sys)
    mats = []
    lam_arr = np.array([lam], dtype=complex)
    for s0, s1 in zip(edges[:-1], edges[1:]):
        y = np.eye(n, dtype=complex)[None]
        for t0, t1, bc, dc in pieces:
            lo, hi = max(t0, s0), min(t1, s1)
            if hi - lo <= 1e-14:
                continue
            if bc.shape[0] == 1 and dc.shape[0] == 1:
                gen = -j_mat @ (bc[0] + lam * dc[0])
                y = expm(gen * (hi - lo))[None] @ y
                continue
            rhs = _make_rhs(j_mat, bc, dc, lam_arr)
            res = solve_ivp(rhs, (lo, hi), y.reshape(-1), method="DOP853",
                            rtol=inner, atol=inner)
            if not res.success:
                raise StepSizeUnderflow(
                    f"segment propagation failed on [{lo}, {hi}] at lambda={lam}")
            y = res.y[:, -1].reshape(1, n, n)
        mats.append(y[0])
    return mats


def lagrange_bilinear_check(sys: SymmetricSystem, lam: complex,
                            tol: Tolerances = DEFAULT_TOLS,
                            samples_per_piece: int = 5) -> float:
    """Max defect of Y0(t, conj lambda)* J Y0(t, lambda) - J over the interval.

    The quantity is conserved by the flow because the potential is Hermitian
    and the weight is PSD.  Each sample is normalised by the size of the
    product (1 + |Y1| |Y2|): at large |Im lambda| the factors grow
    exponentially and the cancellation in the product cannot beat machine
    epsilon times their scale.
    """
    j_mat = sys.structure_matrix
    p1 = propagate(sys, lam, tol)
    p2 = propagate(sys, np.conj(lam), tol)
    ts = []
    edges = p1.batch.edges
    for t0, t1 in zip(edges[:-1], edges[1:]):
        ts.extend(np.linspace(t0, t1, samples_per_piece + 1)[1:])
    ts = np.array([edges[0], *ts])
    y1 = p1.eval(ts)
    y2 = p2.eval(ts)
    lhs = np.einsum("tji,jk,tkl->til", y2.conj(), j_mat, y1)
    defect = np.max(np.abs(lhs - j_mat[None]), axis=(1, 2))
    scale = 1.0 + np.max(np.abs(y1), axis=(1, 2)) * np.max(np.abs(y2), axis=(1, 2))
    return float(np.max(defect / scale))


def ode_residual_max(sys: SymmetricSystem, prop: Propagation,
                     splits_per_piece: int = 8) -> float:
    """Integral-form residual of the propagated solution.

    On each subinterval the increment of Y0 must equal the integral of the
    vector field; both sides are evaluated from the dense output with a
    12-point Gauss rule, which avoids differentiating the interpolant.
    """
    from .quadrature import QuadGrid

    lam = prop.lam
    j_mat = sys.structure_matrix
    edges = prop.batch.edges
    worst = 0.0
    scale = 1.0
    for t0, t1 in zip(edges[:-1], edges[1:]):
        grid = QuadGrid.build(t0, t1, (), subdivisions=splits_per_piece, order=12)
        ys = prop.eval(grid.nodes)
        coef = sys.coeff_b(grid.nodes) + lam * sys.coeff_delta(grid.nodes)
        flow = np.matmul(coef, ys)
        checks = grid.sub_edges
        yv = prop.eval(checks)
        scale = max(scale, float(np.max(np.abs(yv))))
        p = grid.order
        for s in range(grid.n_sub):
            block = flow[s * p:(s + 1) * p]
            integral = np.tensordot(grid.weights[s * p:(s + 1) * p], block, axes=(0, 0))
            resid = yv[s + 1] - yv[s] + j_mat @ integral
            worst = max(worst, float(np.max(np.abs(resid))))
    return worst / scale
