"""Weyl solutions, the block Weyl function, and characteristic matrices.

Two operator solutions of the homogeneous system are pinned down by
endpoint constraints (one normalised against the upper half at the left
endpoint, one against the regular right endpoint).  Their boundary values
assemble the Nevanlinna matrix function m(lambda) of the boundary maps, the
base characteristic matrix, and for every boundary pair the full
characteristic matrix via a linear-fractional correction.

For moderate spectral parameters the constraints reduce to one linear system
built from the monodromy; when exp(|Im lambda| * length) would overflow the
interval is partitioned and the same constraints are solved as a stabilised
multiple-shooting system.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .boundary import BoundaryPair
from .config import DEFAULT_TOLS, Tolerances
from .errors import SingularConstraintSystem, SingularPencil
from .propagator import monodromy, monodromy_batch, transfer_matrices
from .system import SymmetricSystem

_SEG_EXPONENT_LIMIT = 20.0   # switch to multiple shooting beyond this
_SEG_EXPONENT_TARGET = 14.0  # per-segment growth budget


@dataclass
class WeylSolutions:
    """Boundary values of the two constrained operator solutions."""

    lam: complex
    v0_a: np.ndarray   # (n, dim_h0)
    v0_b: np.ndarray
    u_a: np.ndarray    # (n, dim_h)
    u_b: np.ndarray
    cond: float
    segments: int


def _constraint_rhs(sys: SymmetricSystem) -> np.ndarray:
    """Right-hand sides for the stacked [v0 | u] constraint system."""
    pr = sys.projector_set
    h, hh = sys.dims.dim_h, sys.dims.dim_hhat
    n0 = sys.dims.dim_h0
    n = sys.dims.dim_total
    rhs = np.zeros((n, n), dtype=complex)
    rhs[:h, n0:] = np.eye(h)                     # top rows: u hits identity
    rhs[h:h + hh, :n0] = pr.p_h0_hhat            # middle rows: v0 hits projector
    rhs[h + hh:, :n0] = -pr.p_h0_h               # bottom rows: v0 normalisation
    return rhs


def _segment_count(sys: SymmetricSystem, lam: complex) -> int:
    growth = abs(np.imag(lam)) * (sys.interval[1] - sys.interval[0])
    if growth <= _SEG_EXPONENT_LIMIT:
        return 1
    return int(np.ceil(growth / _SEG_EXPONENT_TARGET))


def weyl_solutions(sys: SymmetricSystem, lam: complex,
                   tol: Tolerances = DEFAULT_TOLS) -> WeylSolutions:
    """Solve the two-point constraints for the pair of operator solutions."""
    lam = complex(lam)
    n = sys.dims.dim_total
    pr = sys.projector_set
    rhs = _constraint_rhs(sys)
    k = _segment_count(sys, lam)
    if k == 1:
        w = monodromy(sys, lam, tol)
        a_sys = np.concatenate([pr.e_top @ w,
                                1j * (pr.e_hat - pr.e_hat @ w),
                                pr.e_bot], axis=0)
        svals = np.linalg.svd(a_sys, compute_uv=False)
        cond = np.inf if svals[-1] == 0 else float(svals[0] / svals[-1])
        if not np.isfinite(cond) or cond > tol.cond_limit:
            raise SingularConstraintSystem(
                f"constraint system singular at lambda={lam} (cond={cond:.3e})",
                cond=cond)
        x0 = np.linalg.solve(a_sys, rhs)
        xb = w @ x0
        segments = 1
    else:
        a, b = sys.interval
        edges = np.unique(np.concatenate([np.linspace(a, b, k + 1),
                                          sys.breakpoints]))
        mats = transfer_matrices(sys, lam, edges, tol)
        m = len(mats)
        big = np.zeros(((m + 1) * n, (m + 1) * n), dtype=complex)
        brhs = np.zeros(((m + 1) * n, n), dtype=complex)
        for i, t_mat in enumerate(mats):
            big[i * n:(i + 1) * n, i * n:(i + 1) * n] = -t_mat
            big[i * n:(i + 1) * n, (i + 1) * n:(i + 2) * n] = np.eye(n)
        last = m * n
        big[last:last + n, :n] += np.concatenate(
            [np.zeros((sys.dims.dim_h, n)), 1j * pr.e_hat, pr.e_bot], axis=0)
        big[last:last + n, m * n:] += np.concatenate(
            [pr.e_top, -1j * pr.e_hat, np.zeros((sys.dims.dim_h, n))], axis=0)
        brhs[last:] = rhs
        scale = np.maximum(np.abs(big).max(axis=1), 1e-300)
        big = big / scale[:, None]
        brhs = brhs / scale[:, None]
        svals = np.linalg.svd(big, compute_uv=False)
        cond = np.inf if svals[-1] == 0 else float(svals[0] / svals[-1])
        if not np.isfinite(cond) or cond > tol.cond_limit:
            raise SingularConstraintSystem(
                f"shooting system singular at lambda={lam} (cond={cond:.3e})",
                cond=cond)
        x = np.linalg.solve(big, brhs)
        x0 = x[:n]
        xb = x[m * n:]
        segments = m
    n0 = sys.dims.dim_h0
    return WeylSolutions(lam=lam, v0_a=x0[:, :n0], v0_b=xb[:, :n0],
                         u_a=x0[:, n0:], u_b=xb[:, n0:],
                         cond=cond, segments=segments)


def weyl_constraint_residual(sys: SymmetricSystem, ws: WeylSolutions) -> float:
    """Max defect of the defining endpoint constraints (verification helper)."""
    pr = sys.projector_set
    res = [
        pr.e_bot @ ws.v0_a + pr.p_h0_h,
        1j * (pr.e_hat @ ws.v0_a - pr.e_hat @ ws.v0_b) - pr.p_h0_hhat,
        pr.e_top @ ws.v0_b,
        pr.e_bot @ ws.u_a,
        1j * (pr.e_hat @ ws.u_a - pr.e_hat @ ws.u_b),
        pr.e_top @ ws.u_b - np.eye(sys.dims.dim_h),
    ]
    return max(float(np.max(np.abs(r))) if r.size else 0.0 for r in res)


@dataclass
class WeylData:
    """Block Weyl function and the frames of the characteristic matrix."""

    lam: complex
    m0: np.ndarray
    m2: np.ndarray
    m3: np.ndarray
    m4: np.ndarray
    m: np.ndarray        # assembled block matrix on (upper half) + (endpoint block)
    omega0: np.ndarray   # base characteristic matrix
    s_mat: np.ndarray    # frame mapping the pair space into the full space


def _assemble(sys: SymmetricSystem, ws: WeylSolutions) -> WeylData:
    pr = sys.projector_set
    h = sys.dims.dim_h
    n0 = sys.dims.dim_h0
    n = sys.dims.dim_total
    v0a_upper = pr.e_h0 @ ws.v0_a
    m0 = v0a_upper + 0.5j * pr.p_hhat_in_h0
    m2 = pr.e_h0 @ ws.u_a
    m3 = -pr.e_bot @ ws.v0_b
    m4 = -pr.e_bot @ ws.u_b
    m = np.block([[m0, m2], [m3, m4]])
    omega0 = np.zeros((n, n), dtype=complex)
    omega0[:n0, :n0] = m0
    omega0[:n0, n0:] = -0.5 * pr.i_h_h0
    omega0[n0:, :n0] = -0.5 * pr.p_h0_h
    s_mat = np.zeros((n, n), dtype=complex)
    s_mat[:n0, :n0] = v0a_upper
    s_mat[:n0, n0:] = m2
    s_mat[n0:, :n0] = -pr.p_h0_h
    return WeylData(lam=ws.lam, m0=m0, m2=m2, m3=m3, m4=m4, m=m,
                    omega0=omega0, s_mat=s_mat)


def weyl_function(sys: SymmetricSystem, lam: complex,
                  tol: Tolerances = DEFAULT_TOLS) -> WeylData:
    """Weyl data at one lambda, memoized per (lambda, ode tolerance)."""
    cache = sys._cache.setdefault("weyl", {})
    key = (complex(lam), tol.ode)
    if key not in cache:
        cache[key] = _assemble(sys, weyl_solutions(sys, lam, tol))
    return cache[key]


def weyl_function_batch(sys: SymmetricSystem, lams,
                        tol: Tolerances = DEFAULT_TOLS) -> list:
    """Weyl data for an array of lambdas; monodromies are solved in batches.

    Falls back to the segmented path for entries with large |Im lambda|.
    """
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    cache = sys._cache.setdefault("weyl", {})
    pr = sys.projector_set
    n = sys.dims.dim_total
    rhs = _constraint_rhs(sys)
    todo = [i for i, lam in enumerate(lams)
            if (complex(lam), tol.ode) not in cache]
    fast = [i for i in todo if _segment_count(sys, lams[i]) == 1]
    slow = [i for i in todo if i not in set(fast)]
    if fast:
        w = monodromy_batch(sys, lams[fast], tol)
        e_top = np.broadcast_to(pr.e_top, (len(fast),) + pr.e_top.shape)
        e_hat = np.broadcast_to(pr.e_hat, (len(fast),) + pr.e_hat.shape)
        e_bot = np.broadcast_to(pr.e_bot, (len(fast),) + pr.e_bot.shape)
        a_sys = np.concatenate([np.matmul(e_top, w),
                                1j * (e_hat - np.matmul(e_hat, w)),
                                e_bot], axis=1)
        svals = np.linalg.svd(a_sys, compute_uv=False)
        bad = svals[:, -1] <= svals[:, 0] / tol.cond_limit
        if bad.any():
            k = int(np.argmax(bad))
            raise SingularConstraintSystem(
                f"constraint system singular at lambda={lams[fast[k]]}",
                cond=float(svals[k, 0] / max(svals[k, -1], 1e-300)))
        x0 = np.linalg.solve(a_sys, np.broadcast_to(rhs, (len(fast), n, n)))
        xb = np.matmul(w, x0)
        n0 = sys.dims.dim_h0
        for k, i in enumerate(fast):
            ws = WeylSolutions(lam=complex(lams[i]), v0_a=x0[k, :, :n0],
                               v0_b=xb[k, :, :n0], u_a=x0[k, :, n0:],
                               u_b=xb[k, :, n0:],
                               cond=float(svals[k, 0] / svals[k, -1]), segments=1)
            cache[(complex(lams[i]), tol.ode)] = _assemble(sys, ws)
    for i in slow:
        weyl_function(sys, lams[i], tol)
    return [cache[(complex(lam), tol.ode)] for lam in lams]


def characteristic_matrix(sys: SymmetricSystem, tau: BoundaryPair, lam: complex,
                          tol: Tolerances = DEFAULT_TOLS) -> np.ndarray:
    """Characteristic matrix of the boundary pair at lambda.

    The frame at the conjugate point is computed by an honest second
    propagation, so conjugation symmetry is a test rather than an assumption.
    """
    wd = weyl_function(sys, lam, tol)
    c0l, c1l = tau.at(lam)
    if np.abs(c1l).max() == 0.0:
        return wd.omega0.copy()
    pencil = c0l - c1l @ wd.m
    svals = np.linalg.svd(pencil, compute_uv=False)
    cond = np.inf if svals[-1] == 0 else float(svals[0] / svals[-1])
    if not np.isfinite(cond) or cond > tol.cond_limit:
        raise SingularPencil(
            f"pencil c0 - c1 m singular at lambda={lam} (cond={cond:.3e})",
            cond=cond)
    x = np.linalg.solve(pencil, c1l)
    wd_conj = weyl_function(sys, np.conj(lam), tol)
    return wd.omega0 + wd.s_mat @ x @ wd_conj.s_mat.conj().T


class CharMatrixEval:
    """Batched evaluator lambda-array -> stack of characteristic matrices."""

    def __init__(self, sys: SymmetricSystem, tau: BoundaryPair,
                 tol: Tolerances = DEFAULT_TOLS):
        self.sys = sys
        self.tau = tau
        self.tol = tol
        self.dim = sys.dims.dim_total
        self._needs_conj = bool(np.abs(tau.c1).max() > 0.0)

    def __call__(self, lams) -> np.ndarray:
        lams = np.atleast_1d(np.asarray(lams, dtype=complex))
        wds = weyl_function_batch(self.sys, lams, self.tol)
        if not self._needs_conj:
            return np.array([wd.omega0 for wd in wds])
        wds_conj = weyl_function_batch(self.sys, np.conj(lams), self.tol)
        out = np.empty((len(lams), self.dim, self.dim), dtype=complex)
        for k, (wd, wdc) in enumerate(zip(wds, wds_conj)):
            c0l, c1l = self.tau.at(lams[k])
            pencil = c0l - c1l @ wd.m
            try:
                x = np.linalg.solve(pencil, c1l)
            except np.linalg.LinAlgError as exc:
                raise SingularPencil(
                    f"pencil singular at lambda={lams[k]}") from exc
            out[k] = wd.omega0 + wd.s_mat @ x @ wdc.s_mat.conj().T
        return out


def omega_evaluator(sys: SymmetricSystem, tau: BoundaryPair,
                    tol: Tolerances = DEFAULT_TOLS) -> CharMatrixEval:
    return CharMatrixEval(sys, tau, tol)


# ---------------------------------------------------------------------------
# Admissibility limits along the imaginary axis
# ---------------------------------------------------------------------------

@dataclass
class AdmissibilityEstimate:
    b_tau: np.ndarray
    bhat_tau: np.ndarray
    b_norms: np.ndarray
    bhat_norms: np.ndarray
    y_sequence: np.ndarray
    decay_fit: float
    admissible: bool
    tol: float


def default_radii() -> np.ndarray:
    return 10.0 * 2.0 ** np.arange(6)


def admissibility(sys: SymmetricSystem, tau: BoundaryPair, radii=None,
                  tol: Tolerances = DEFAULT_TOLS) -> AdmissibilityEstimate:
    """Estimate the two strong limits along i*y as y grows.

    Both families are evaluated at geometric radii, their norm decay is
    fitted with a power law, and the matrices are extrapolated with the
    fitted exponent; the pair is declared admissible when both extrapolated
    norms fall below the tolerance.
    """
    radii = default_radii() if radii is None else np.asarray(radii, dtype=float)
    if len(radii) < 4 or np.any(np.diff(radii) <= 0):
        raise ValueError("need at least 4 increasing radii")
    n = sys.dims.dim_total
    b_seq = np.empty((len(radii), n, n), dtype=complex)
    bh_seq = np.empty_like(b_seq)
    for k, y in enumerate(radii):
        lam = 1j * y
        wd = weyl_function(sys, lam, tol)
        c0l, c1l = tau.at(lam)
        pencil = c0l - c1l @ wd.m
        svals = np.linalg.svd(pencil, compute_uv=False)
        if svals[-1] <= svals[0] / tol.cond_limit:
            raise SingularPencil(f"pencil singular at radius y={y}")
        inv = np.linalg.inv(pencil)
        b_seq[k] = (inv @ c1l) / lam
        bh_seq[k] = (wd.m @ inv @ c0l) / lam
    b_lim, p_b = _extrapolate_power(b_seq, radii)
    bh_lim, p_bh = _extrapolate_power(bh_seq, radii)
    exps = [p for p in (p_b, p_bh) if np.isfinite(p)]
    decay = float(min(exps)) if exps else np.inf
    b_norm = float(np.linalg.norm(b_lim, 2))
    bh_norm = float(np.linalg.norm(bh_lim, 2))
    return AdmissibilityEstimate(
        b_tau=b_lim, bhat_tau=bh_lim,
        b_norms=np.array([np.linalg.norm(mat, 2) for mat in b_seq]),
        bhat_norms=np.array([np.linalg.norm(mat, 2) for mat in bh_seq]),
        y_sequence=radii, decay_fit=decay,
        admissible=bool(b_norm <= tol.adm and bh_norm <= tol.adm),
        tol=tol.adm)


def _extrapolate_power(seq: np.ndarray, radii: np.ndarray):
    """Power-law extrapolation of a matrix sequence with values -> limit."""
    norms = np.array([np.linalg.norm(mat, 2) for mat in seq])
    mask = norms > 1e-13
    if np.count_nonzero(mask) < 2:
        return np.zeros_like(seq[0]), np.inf
    logs = np.log(norms[mask])
    logy = np.log(radii[mask])
    slope, _ = np.polyfit(logy, logs, 1)
    p = max(-float(slope), 0.05)
    r = radii[-1] / radii[-2]
    return seq[-1] - (seq[-2] - seq[-1]) / (r ** p - 1.0), p
