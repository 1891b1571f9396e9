"""Boundary maps, Nevanlinna boundary pairs, boundary problems, eigenvalues.

For a regular right endpoint the singular boundary value reduces to plain
evaluation, so both boundary maps act on the pair (y(a), y(b)).  With the
canonical block splitting y = (y_top, y_mid, y_bot) they read

    map0 y = (-y_bot(a),  i*(y_mid(a) - y_mid(b)),  y_top(b))
    map1 y = ( y_top(a), (y_mid(a) + y_mid(b))/2,  -y_bot(b))

and together they are surjective and turn the Lagrange identity into a
finite-dimensional Green identity.  A boundary pair (c0, c1) selects the
condition c0(lambda) map0 y = c1(lambda) map1 y.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .blockspace import BlockDims
from .config import DEFAULT_TOLS, Tolerances
from .errors import (NotInMaximalRelation, RootFindingFailure,
                     SingularBoundaryMatrix)
from .propagator import monodromy, monodromy_batch, propagate, propagation_batch
from .quadrature import CumulativeIntegral
from .system import (GridFunction, SymmetricSystem, _merged_grid,
                     weighted_inner_product)


@dataclass(frozen=True)
class BoundaryMaps:
    """Matrices of the two boundary maps acting on stacked (y(a), y(b))."""

    dims: BlockDims
    g0: np.ndarray   # (n, 2n)
    g1: np.ndarray   # (n, 2n)
    stacked_rank: int

    def apply(self, ya: np.ndarray, yb: np.ndarray):
        yab = np.concatenate([ya, yb], axis=0)
        return self.g0 @ yab, self.g1 @ yab


def boundary_maps(sys: SymmetricSystem) -> BoundaryMaps:
    """Decomposing boundary maps of the regular system, surjectivity verified."""
    key = "bmaps"
    if key in sys._cache:
        return sys._cache[key]
    pr = sys.projector_set
    n = sys.dims.dim_total
    h, hh = sys.dims.dim_h, sys.dims.dim_hhat
    g0 = np.zeros((n, 2 * n), dtype=complex)
    g1 = np.zeros((n, 2 * n), dtype=complex)
    g0[:h, :n] = -pr.e_bot
    g0[h:h + hh, :n] = 1j * pr.e_hat
    g0[h:h + hh, n:] = -1j * pr.e_hat
    g0[h + hh:, n:] = pr.e_top
    g1[:h, :n] = pr.e_top
    g1[h:h + hh, :n] = 0.5 * pr.e_hat
    g1[h:h + hh, n:] = 0.5 * pr.e_hat
    g1[h + hh:, n:] = -pr.e_bot
    rank = int(np.linalg.matrix_rank(np.vstack([g0, g1]), tol=1e-12))
    if rank != 2 * n:
        raise AssertionError("boundary maps are not jointly surjective")
    maps = BoundaryMaps(dims=sys.dims, g0=g0, g1=g1, stacked_rank=rank)
    sys._cache[key] = maps
    return maps


class BoundaryPair:
    """Nevanlinna boundary parameter: a pair of matrix polynomials in lambda.

    Coefficients are stored ascending in powers of lambda with shape
    (n_coeff, m, m).  ``kind`` is "constant-selfadjoint" for constant pairs
    passing the self-adjointness conditions, otherwise "general".
    """

    def __init__(self, c0, c1, kind: Optional[str] = None, label: str = ""):
        self.c0 = np.atleast_3d(np.asarray(c0, dtype=complex))
        self.c1 = np.atleast_3d(np.asarray(c1, dtype=complex))
        if self.c0.shape[1:] != self.c1.shape[1:]:
            raise ValueError("c0/c1 value shapes differ")
        self.label = label
        if kind is None:
            kind = "constant-selfadjoint" if self._selfadjoint_constant() else "general"
        self.kind = kind

    @classmethod
    def constant(cls, c0, c1, label: str = "") -> "BoundaryPair":
        c0 = np.asarray(c0, dtype=complex)
        c1 = np.asarray(c1, dtype=complex)
        return cls(c0[None], c1[None], label=label)

    @property
    def dim(self) -> int:
        return self.c0.shape[1]

    @property
    def is_constant(self) -> bool:
        return self.c0.shape[0] == 1 and self.c1.shape[0] == 1

    def _selfadjoint_constant(self, tol: float = 1e-10) -> bool:
        if not self.is_constant:
            return False
        c0, c1 = self.c0[0], self.c1[0]
        prod = c1 @ c0.conj().T
        if np.max(np.abs(prod - prod.conj().T)) > 2 * tol * max(1.0, np.abs(prod).max()):
            return False
        for sign in (1.0, -1.0):
            s = np.linalg.svd(c0 + sign * 1j * c1, compute_uv=False)
            if s[-1] <= 1e-12 * max(1.0, s[0]):
                return False
        return True

    def c0_at(self, lam) -> np.ndarray:
        return _poly_at(self.c0, lam)

    def c1_at(self, lam) -> np.ndarray:
        return _poly_at(self.c1, lam)

    def at(self, lam):
        return self.c0_at(lam), self.c1_at(lam)


def _poly_at(coeffs: np.ndarray, lam) -> np.ndarray:
    lam = np.asarray(lam, dtype=complex)
    acc = np.broadcast_to(coeffs[-1], lam.shape + coeffs.shape[1:]).copy()
    for k in range(coeffs.shape[0] - 2, -1, -1):
        acc = acc * lam[..., None, None] + coeffs[k]
    return acc


@dataclass(frozen=True)
class PairReport:
    kind: str
    selfadjoint: bool
    selfadjoint_defect: float
    inversion_cond: float            # worst cond of c0 +/- i c1 (constant pairs)
    rank_ok: bool
    sign_ok_upper: bool
    sign_ok_lower: bool
    conj_symmetric: bool
    passed: bool


_SAMPLE_UPPER = np.array([0.7 + 0.4j, -1.3 + 1j, 0.2 + 2.5j, 2 + 0.8j, 3j])


def validate_pair(tau: BoundaryPair, dims: BlockDims,
                  tol: Tolerances = DEFAULT_TOLS) -> PairReport:
    """Report-style validation of a boundary pair.

    Constant pairs are checked against the self-adjointness conditions
    (vanishing imaginary part of c1 c0* and invertibility of c0 +/- i c1).
    All pairs are additionally checked on a sampled lambda grid in both
    half-planes: full row rank of [c0 | c1], the sign condition on
    Im(c1 c0*) relative to the half-plane, and conjugation symmetry of the
    coefficients.
    """
    m = tau.dim
    if m != dims.dim_total:
        raise ValueError(f"pair dimension {m} does not match dim {dims.dim_total}")
    sa_defect = np.inf
    inv_cond = np.inf
    if tau.is_constant:
        c0, c1 = tau.c0[0], tau.c1[0]
        prod = c1 @ c0.conj().T
        sa_defect = float(np.max(np.abs((prod - prod.conj().T) / 2j)))
        conds = []
        for sign in (1.0, -1.0):
            s = np.linalg.svd(c0 + sign * 1j * c1, compute_uv=False)
            conds.append(np.inf if s[-1] == 0 else s[0] / s[-1])
        inv_cond = float(max(conds))
    selfadjoint = tau.is_constant and sa_defect <= tol.sym * 10 and np.isfinite(inv_cond) \
        and inv_cond < tol.cond_limit

    rank_ok = True
    sign_ok = {1.0: True, -1.0: True}
    for half in (1.0, -1.0):
        for lam in _SAMPLE_UPPER * (1.0 if half > 0 else -1.0):
            c0l, c1l = tau.at(lam)
            s = np.linalg.svd(np.hstack([c0l, c1l]), compute_uv=False)
            if s[m - 1] <= 1e-10 * max(1.0, s[0]):
                rank_ok = False
            prod = c1l @ c0l.conj().T
            im = (prod - prod.conj().T) / 2j
            scaled = half * np.linalg.eigvalsh(im)[0]
            if scaled < -1e-9 * max(1.0, np.abs(prod).max()):
                sign_ok[half] = False

    conj_symmetric = True
    for lam in _SAMPLE_UPPER:
        for at in (tau.c0_at, tau.c1_at):
            if np.max(np.abs(at(np.conj(lam)) - np.conj(at(lam)))) > 1e-9:
                conj_symmetric = False
    passed = rank_ok and (selfadjoint or (sign_ok[1.0] and sign_ok[-1.0]))
    return PairReport(kind=tau.kind, selfadjoint=bool(selfadjoint),
                      selfadjoint_defect=sa_defect, inversion_cond=inv_cond,
                      rank_ok=rank_ok, sign_ok_upper=sign_ok[1.0],
                      sign_ok_lower=sign_ok[-1.0],
                      conj_symmetric=conj_symmetric, passed=bool(passed))


# ---------------------------------------------------------------------------
# Maximal-relation pairs and the Green identity
# ---------------------------------------------------------------------------

@dataclass
class MaximalPair:
    """A (y, f) pair meant to satisfy the inhomogeneous system a.e."""

    y: GridFunction
    f: GridFunction
    lam: Optional[complex] = None


def membership_residual(sys: SymmetricSystem, pair: MaximalPair,
                        tol: Tolerances = DEFAULT_TOLS) -> float:
    """Integral-form defect of the system equation for a candidate pair.

    On every quadrature subinterval the increment of y must match the
    integral of the vector field built from (y, f); no derivative of y is
    required.
    """
    max_freq = abs(pair.lam) if pair.lam is not None else 0.0
    grid = _merged_grid(sys, pair.y.breakpoints + pair.f.breakpoints,
                        max_freq=max_freq)
    yv = pair.y.values_on(grid)
    fv = pair.f.values_on(grid)
    bv = sys.coeff_b(grid.nodes)
    dv = sys.coeff_delta(grid.nodes)
    flow = np.einsum("tij,tj->ti", bv, yv) + np.einsum("tij,tj->ti", dv, fv)
    cum = CumulativeIntegral(grid, flow)
    edges = grid.sub_edges
    y_edges = pair.y.eval(edges)
    incr = np.diff(y_edges, axis=0)
    j_mat = sys.structure_matrix
    flow_int = np.diff(cum.at(edges), axis=0)
    resid = incr + flow_int @ j_mat.T
    scale = 1.0 + float(np.max(np.abs(yv))) + float(np.max(np.abs(fv)))
    return float(np.max(np.abs(resid))) / scale


def green_identity_residual(sys: SymmetricSystem, pair1: MaximalPair,
                            pair2: MaximalPair,
                            tol: Tolerances = DEFAULT_TOLS) -> float:
    """Defect of the boundary Green identity for two maximal-relation pairs.

    Both sides are computed independently: the left by weighted quadrature,
    the right from endpoint evaluations through the boundary maps.
    """
    for pair in (pair1, pair2):
        r = membership_residual(sys, pair, tol)
        if r > tol.membership:
            raise NotInMaximalRelation(
                f"membership residual {r:.3e} exceeds {tol.membership:.1e}")
    y, f = pair1.y, pair1.f
    z, g = pair2.y, pair2.f
    lhs = weighted_inner_product(sys, f, z, tol) - weighted_inner_product(sys, y, g, tol)
    maps = boundary_maps(sys)
    a, b = sys.interval
    y_ab = y.eval([a, b])
    z_ab = z.eval([a, b])
    g0y, g1y = maps.apply(y_ab[0], y_ab[1])
    g0z, g1z = maps.apply(z_ab[0], z_ab[1])
    rhs = np.vdot(g0z, g1y) - np.vdot(g1z, g0y)
    return float(abs(lhs - rhs))


# ---------------------------------------------------------------------------
# Boundary problems
# ---------------------------------------------------------------------------

def forcing_cumulative(sys: SymmetricSystem, lam: complex, f: GridFunction,
                       tol: Tolerances = DEFAULT_TOLS):
    """Cumulative integral of Y0(t, conj lambda)* weight(t) f(t).

    Returns (grid, cumulative); the total is the transform of f evaluated at
    the conjugated spectral parameter.
    """
    grid = _merged_grid(sys, f.breakpoints, max_freq=abs(lam))
    prop = propagate(sys, np.conj(lam), tol)
    yv = prop.eval(grid.nodes)
    dv = sys.coeff_delta(grid.nodes)
    fv = f.values_on(grid)
    integrand = np.einsum("tki,tkl,tl->ti", yv.conj(), dv, fv)
    return grid, CumulativeIntegral(grid, integrand)


def _solution_gridfunction(sys, lam, cum, coeff, tol, breakpoints=(), label=""):
    """y(t) = Y0(t, lam) (coeff - J * cumulative(t)) as a GridFunction."""
    prop = propagate(sys, lam, tol)
    j_mat = sys.structure_matrix

    def fn(ts):
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        yv = prop.eval(ts)
        q = coeff[None, :] - cum.at(ts) @ j_mat.T
        return np.einsum("tij,tj->ti", yv, q)

    grid = cum.grid
    return GridFunction(grid.nodes, fn(grid.nodes), fn=fn,
                        breakpoints=breakpoints, label=label)


def solve_bvp(sys: SymmetricSystem, tau: BoundaryPair, lam: complex,
              f: GridFunction, tol: Tolerances = DEFAULT_TOLS) -> GridFunction:
    """Unique solution of the boundary problem at spectral parameter lambda.

    Variation of constants produces a particular solution; the homogeneous
    correction is fixed by the boundary condition
    c0(lambda) map0 y = c1(lambda) map1 y.  Raises SingularBoundaryMatrix
    when lambda is an eigenvalue or the pair degenerates at lambda.
    """
    maps = boundary_maps(sys)
    n = sys.dims.dim_total
    c0l, c1l = tau.at(lam)
    big = c0l @ maps.g0 - c1l @ maps.g1          # (n, 2n)
    w = monodromy(sys, lam, tol)
    t_mat = big[:, :n] + big[:, n:] @ w
    svals = np.linalg.svd(t_mat, compute_uv=False)
    cond = np.inf if svals[-1] == 0 else float(svals[0] / svals[-1])
    if not np.isfinite(cond) or cond > tol.cond_limit:
        raise SingularBoundaryMatrix(
            f"boundary matrix singular at lambda={lam} (cond={cond:.3e})", cond=cond)
    grid, cum = forcing_cumulative(sys, lam, f, tol)
    j_mat = sys.structure_matrix
    total = cum.total
    rhs = big[:, n:] @ (w @ (j_mat @ total))
    coeff = np.linalg.solve(t_mat, rhs)
    return _solution_gridfunction(sys, lam, cum, coeff, tol,
                                  breakpoints=f.breakpoints,
                                  label=f"bvp({lam})")


def boundary_value_residual(sys: SymmetricSystem, tau: BoundaryPair,
                            lam: complex, y: GridFunction) -> float:
    """Defect of the boundary condition for a computed solution."""
    maps = boundary_maps(sys)
    a, b = sys.interval
    y_ab = y.eval([a, b])
    g0y, g1y = maps.apply(y_ab[0], y_ab[1])
    c0l, c1l = tau.at(lam)
    scale = 1.0 + float(np.max(np.abs(y_ab)))
    return float(np.max(np.abs(c0l @ g0y - c1l @ g1y))) / scale


# ---------------------------------------------------------------------------
# Eigenvalues of self-adjoint boundary conditions
# ---------------------------------------------------------------------------

def boundary_matrix_batch(sys: SymmetricSystem, tau: BoundaryPair, lams,
                          tol: Tolerances = DEFAULT_TOLS) -> np.ndarray:
    """c0(lam) map0 - c1(lam) map1 applied to the fundamental columns, batched."""
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    maps = boundary_maps(sys)
    n = sys.dims.dim_total
    w = monodromy_batch(sys, lams, tol)
    a_mat = maps.g0[:, :n][None] + np.matmul(maps.g0[:, n:][None], w)
    b_mat = maps.g1[:, :n][None] + np.matmul(maps.g1[:, n:][None], w)
    c0l = _poly_at(tau.c0, lams)
    c1l = _poly_at(tau.c1, lams)
    return np.matmul(c0l, a_mat) - np.matmul(c1l, b_mat)


def boundary_determinant(sys: SymmetricSystem, tau: BoundaryPair, lams,
                         tol: Tolerances = DEFAULT_TOLS) -> np.ndarray:
    return np.linalg.det(boundary_matrix_batch(sys, tau, lams, tol))


@dataclass
class Eigenvalue:
    lam: float
    multiplicity: int
    basis: np.ndarray        # (n, multiplicity), weighted-norm-1 coefficient columns
    sigma_min: float


def eigenfunction(sys: SymmetricSystem, eig: Eigenvalue, col: int = 0,
                  tol: Tolerances = DEFAULT_TOLS) -> GridFunction:
    """Eigenfunction as a GridFunction (already weighted-normalised)."""
    prop = propagate(sys, eig.lam, tol)
    c = eig.basis[:, col]

    def fn(ts):
        return np.einsum("tij,j->ti", prop.eval(ts), c)

    grid = sys.default_grid(max_freq=abs(eig.lam))
    return GridFunction(grid.nodes, fn(grid.nodes), fn=fn,
                        label=f"eig({eig.lam:.6g})")


def eigenvalues_selfadjoint(sys: SymmetricSystem, tau: BoundaryPair, window,
                            tol: Tolerances = DEFAULT_TOLS,
                            scan_step: float = 0.05) -> list:
    """Real eigenvalues of the self-adjoint boundary condition inside a window.

    Scans the boundary determinant on a uniform grid, brackets sign changes
    of its real and imaginary parts, refines by bisection, and confirms roots
    through the smallest singular value of the boundary matrix.  Multiplicity
    is the numerical nullity; basis columns are weighted-normalised.
    """
    if tau.kind != "constant-selfadjoint":
        raise ValueError("eigenvalue search requires a constant self-adjoint pair")
    s_min, s_max = float(window[0]), float(window[1])
    if not s_min < s_max:
        return []
    n_pts = max(2, int(np.ceil((s_max - s_min) / scan_step)) + 1)
    grid = np.linspace(s_min, s_max, n_pts)
    dets = boundary_determinant(sys, tau, grid, tol)
    scale = float(np.median(np.abs(dets))) + float(np.max(np.abs(dets))) * 1e-14
    tiny = 1e-9 * max(scale, 1e-300)

    candidates = []
    for i, d in enumerate(dets):
        if abs(d) <= tiny:
            candidates.append(("point", grid[i]))
    for comp in (np.real, np.imag):
        vals = comp(dets)
        for i in range(len(grid) - 1):
            if abs(dets[i]) <= tiny or abs(dets[i + 1]) <= tiny:
                continue
            if vals[i] == 0.0 or vals[i] * vals[i + 1] < 0.0:
                candidates.append(("bracket", (grid[i], grid[i + 1], comp)))

    roots = []
    brackets = [c[1] for c in candidates if c[0] == "bracket"]
    if brackets:
        roots.extend(_bisect_batch(sys, tau, brackets, tol))
    roots.extend(lam for kind, lam in candidates if kind == "point")
    roots = sorted(roots)
    merged = []
    for r in roots:
        if merged and abs(r - merged[-1]) < max(10 * tol.eig, 1e-9):
            continue
        merged.append(r)

    out = []
    for lam in merged:
        t_mat = boundary_matrix_batch(sys, tau, [lam], tol)[0]
        u, s, vh = np.linalg.svd(t_mat)
        thresh = 1e-8 * max(s[0], 1e-300)
        mult = int(np.count_nonzero(s < thresh))
        if mult == 0:
            continue
        basis = vh.conj().T[:, -mult:]
        out.append(Eigenvalue(lam=float(lam), multiplicity=mult, basis=basis,
                              sigma_min=float(s[-1])))
    if not out and merged:
        raise RootFindingFailure(
            f"no candidate in window ({s_min}, {s_max}) survived verification")
    _normalise_eigenbases(sys, out, tol)
    return out


def _bisect_batch(sys, tau, brackets, tol, max_iter=52):
    lo = np.array([b[0] for b in brackets], dtype=float)
    hi = np.array([b[1] for b in brackets], dtype=float)
    comps = [b[2] for b in brackets]
    flo = np.empty(len(brackets))
    d_lo = boundary_determinant(sys, tau, lo, tol)
    for k, comp in enumerate(comps):
        flo[k] = comp(d_lo[k])
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if np.all(hi - lo < 0.01 * tol.eig * np.maximum(1.0, np.abs(mid))):
            break
        d_mid = boundary_determinant(sys, tau, mid, tol)
        for k, comp in enumerate(comps):
            fm = comp(d_mid[k])
            if flo[k] * fm <= 0.0:
                hi[k] = mid[k]
            else:
                lo[k] = mid[k]
                flo[k] = fm
    return list(0.5 * (lo + hi))


def _normalise_eigenbases(sys, eigs, tol):
    if not eigs:
        return
    max_freq = max(abs(e.lam) for e in eigs)
    grid = sys.default_grid(max_freq=max_freq)
    batch = propagation_batch(sys, [e.lam for e in eigs], tol, dense=True)
    yv = batch.eval(grid.nodes)                      # (t, m, n, n)
    dv = sys.coeff_delta(grid.nodes)
    for k, eig in enumerate(eigs):
        cols = yv[:, k] @ eig.basis                  # (t, n, mult)
        gram = np.einsum("t,tij,tim->jm", grid.weights,
                         np.einsum("tkl,tlj->tkj", dv, cols).conj(), cols)
        # gram[j, m] = (col_m, col_j)_weight; normalise columns.
        norms = np.sqrt(np.maximum(np.real(np.diag(gram)), 1e-300))
        eig.basis = eig.basis / norms[None, :]
