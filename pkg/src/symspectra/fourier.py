"""Transform against the fundamental solution, its inverse, and isometry checks.

The forward transform integrates the conjugate-transposed fundamental
solution against the weighted input over the interval; for a pure-jump
distribution the inverse sums fundamental columns against the jump data.
Norm bookkeeping between the two sides (exact on finite expansions, tail-
estimated on truncations) decides between isometric and partial-isometric
behaviour, with the kernel candidates supplied by the multivalued-part
construction for degenerate weights.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .config import DEFAULT_TOLS, Tolerances
from .errors import QuadratureFailure, UnsupportedWeightStructure
from .propagator import propagation_batch
from .system import (GridFunction, SymmetricSystem, _merged_grid,
                     weighted_inner_product, weighted_norm)
from .spectral import SpectralFunction, DiscreteL2Sigma

_BATCH = 128


@dataclass
class TransformResult:
    s_grid: np.ndarray
    values: np.ndarray          # (len(s_grid), n)
    err_est: float
    provenance: str = ""

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values))) if len(self.values) else 0.0


def fourier_transform_many(sys: SymmetricSystem, fs, s_grid,
                           tol: Tolerances = DEFAULT_TOLS) -> list:
    """Transforms of several functions on one spectral grid, sharing solves.

    The quadrature grid resolves the fastest requested oscillation; the
    doubled grid supplies the error estimate.  One propagation batch per
    lambda chunk is evaluated on both grids and reused for every input.
    """
    fs = list(fs)
    s_grid = np.atleast_1d(np.asarray(s_grid))
    n = sys.dims.dim_total
    if len(s_grid) == 0 or not fs:
        return [TransformResult(s_grid=s_grid, values=np.zeros((0, n)), err_est=0.0,
                                provenance=f"{sys.label}:{f.label}") for f in fs]
    max_freq = float(np.max(np.abs(s_grid)))
    breaks = tuple(b for f in fs for b in f.breakpoints)
    coarse = _merged_grid(sys, breaks, max_freq=max_freq)
    fine = coarse.refine()
    wdf = []
    for grid in (coarse, fine):
        dv = sys.coeff_delta(grid.nodes)
        wdf.append([grid.weights[:, None] * np.einsum("tij,tj->ti", dv,
                                                      f.values_on(grid))
                    for f in fs])
    vals_c = np.empty((len(fs), len(s_grid), n), dtype=complex)
    vals_f = np.empty_like(vals_c)
    for k in range(0, len(s_grid), _BATCH):
        chunk = np.asarray(s_grid[k:k + _BATCH], dtype=complex)
        batch = propagation_batch(sys, chunk, tol, dense=True)
        for out, grid, w in ((vals_c, coarse, wdf[0]), (vals_f, fine, wdf[1])):
            yv = batch.eval(grid.nodes)        # (t, m, n, n)
            for i, wf in enumerate(w):
                out[i, k:k + _BATCH] = np.einsum("tmki,tk->mi", yv.conj(), wf)
    results = []
    for i, f in enumerate(fs):
        err = float(np.max(np.abs(vals_f[i] - vals_c[i])))
        scale = 1.0 + float(np.max(np.abs(vals_f[i])))
        if err > 1e3 * tol.quad * scale:
            raise QuadratureFailure(f"transform quadrature error {err:.3e}")
        results.append(TransformResult(s_grid=s_grid, values=vals_f[i], err_est=err,
                                       provenance=f"{sys.label}:{f.label}"))
    return results


def fourier_transform(sys: SymmetricSystem, f: GridFunction, s_grid,
                      tol: Tolerances = DEFAULT_TOLS) -> TransformResult:
    """Transform of f sampled on a finite grid of spectral points."""
    return fourier_transform_many(sys, [f], s_grid, tol)[0]


def inverse_transform(sys: SymmetricSystem, sf: SpectralFunction, g,
                      tol: Tolerances = DEFAULT_TOLS) -> GridFunction:
    """Sum of fundamental columns against pure-jump data: t -> sum Y(t, s_k) A_k g_k."""
    space = DiscreteL2Sigma(sf)
    gv = space.element(g)
    coeffs = np.einsum("kij,kj->ki", space.weights, gv)   # A_k g_k
    support = space.support
    props = [propagation_batch(sys, support[k:k + _BATCH].astype(complex),
                               tol, dense=True)
             for k in range(0, len(support), _BATCH)]

    def fn(ts):
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        out = np.zeros((len(ts), sys.dims.dim_total), dtype=complex)
        pos = 0
        for batch in props:
            m = len(batch.lams)
            yv = batch.eval(ts)                 # (t, m, n, n)
            out += np.einsum("tmij,mj->ti", yv, coeffs[pos:pos + m])
            pos += m
        return out

    grid = sys.default_grid(max_freq=float(np.max(np.abs(support))) if len(support) else 0.0)
    return GridFunction(grid.nodes, fn(grid.nodes), fn=fn, label="inverse-transform")


# ---------------------------------------------------------------------------
# Norm bookkeeping
# ---------------------------------------------------------------------------

@dataclass
class DefectReport:
    sum_truncated: float
    norm_sq: float
    norm_sq_complement: float
    defect: float                 # |sum - norm_sq|
    defect_complement: float      # |sum - norm_sq_complement|
    tail_estimate: float
    decay_exponent: Optional[float]
    defect_with_tail: float       # |sum + tail - norm_sq_complement|
    truncation: float


def _tail_fit(support, terms, truncation):
    """Power-law fit of the outer-half terms; midpoint-corrected tail sum."""
    tail = 0.0
    exponent = None
    for side in (1.0, -1.0):
        sel = [(abs(s), t) for s, t in zip(support, terms)
               if s * side > 0 and abs(s) <= truncation and t > 1e-18]
        if len(sel) < 4:
            continue
        sel.sort()
        outer = [p for p in sel if p[0] >= 0.5 * sel[-1][0]]
        if len(outer) < 3:
            continue
        xs = np.log([p[0] for p in outer])
        ys = np.log([p[1] for p in outer])
        slope, intercept = np.polyfit(xs, ys, 1)
        p = -float(slope)
        c = float(np.exp(intercept))
        spacing = (outer[-1][0] - outer[0][0]) / max(len(outer) - 1, 1)
        if p <= 1.05 or spacing <= 0:
            return np.inf, p
        edge = outer[-1][0] + 0.5 * spacing
        tail += (c / spacing) * edge ** (1.0 - p) / (p - 1.0)
        exponent = p if exponent is None else min(exponent, p)
    return tail, exponent


def project_off(sys: SymmetricSystem, f: GridFunction, basis,
                tol: Tolerances = DEFAULT_TOLS) -> GridFunction:
    """Subtract the weighted-orthogonal projection onto a finite basis."""
    if not basis:
        return f
    coefs = [weighted_inner_product(sys, f, e, tol) for e in basis]

    def fn(ts):
        out = f.eval(ts)
        for c, e in zip(coefs, basis):
            out = out - c * e.eval(ts)
        return out

    return GridFunction(f.nodes, fn(f.nodes), fn=fn, breakpoints=f.breakpoints,
                        label=f.label + "-complement")


def parseval_defect(sys: SymmetricSystem, sf: SpectralFunction, f: GridFunction,
                    truncation: float, mul_basis=None,
                    tol: Tolerances = DEFAULT_TOLS) -> DefectReport:
    """Norm defect between the weighted norm of f and its transform's norm.

    Sums jump terms with |s_k| <= truncation, fits the outer-half decay of
    the terms and reports the fitted tail separately (never silently added).
    When a multivalued-part basis is supplied the defect is also taken
    against the norm of f projected off that basis.
    """
    mul_basis = list(mul_basis.elements) if hasattr(mul_basis, "elements") \
        else list(mul_basis or [])
    support = sf.support
    sel = np.abs(support) <= truncation
    tr = fourier_transform(sys, f, support[sel], tol)
    weights = sf.weights[sel]
    terms = np.real(np.einsum("kij,kj,ki->k", weights, tr.values, tr.values.conj()))
    total = float(np.sum(terms))
    norm_sq = weighted_norm(sys, f, tol) ** 2
    if mul_basis:
        norm0_sq = weighted_norm(sys, project_off(sys, f, mul_basis, tol), tol) ** 2
    else:
        norm0_sq = norm_sq
    tail, exponent = _tail_fit(support[sel], terms, truncation)
    defect = abs(total - norm_sq)
    defect_c = abs(total - norm0_sq)
    with_tail = abs(total + tail - norm0_sq) if np.isfinite(tail) else np.inf
    return DefectReport(sum_truncated=total, norm_sq=norm_sq,
                        norm_sq_complement=norm0_sq, defect=defect,
                        defect_complement=defect_c, tail_estimate=float(tail),
                        decay_exponent=exponent, defect_with_tail=with_tail,
                        truncation=float(truncation))


# ---------------------------------------------------------------------------
# Multivalued-part candidates for piecewise-constant degenerate weights
# ---------------------------------------------------------------------------

@dataclass
class MulCertificate:
    piece: tuple
    direction: np.ndarray
    shape_index: int
    weight_null_residual: float
    flow_residual: float
    endpoint_values: tuple


@dataclass
class MulTminBasis:
    elements: list = field(default_factory=list)       # GridFunctions, orthonormal
    certificates: list = field(default_factory=list)

    def __len__(self):
        return len(self.elements)


def _common_kernel(stack: np.ndarray, rtol=1e-11) -> np.ndarray:
    flat = stack.reshape(-1, stack.shape[-1])
    u, s, vh = np.linalg.svd(flat)
    if s.size == 0:
        return np.eye(stack.shape[-1], dtype=complex)
    rank = int(np.count_nonzero(s > rtol * s[0]))
    return vh.conj().T[:, rank:]


def mul_tmin_basis(sys: SymmetricSystem, n_max: int,
                   tol: Tolerances = DEFAULT_TOLS) -> MulTminBasis:
    """Weighted-orthonormal candidates spanning the multivalued part.

    On every weight piece with a constant nontrivial kernel, directions v in
    the kernel with J v and B(t) v pointing out of the kernel support
    solutions q(t) v that vanish at the piece ends and stay weight-null; the
    matching right-hand sides are returned (up to n_max, orthonormalised).
    Raises UnsupportedWeightStructure when the kernel rank varies inside a
    piece; returns an empty basis when the weight is invertible a.e.
    """
    a, b = sys.interval
    delta = sys.coeff_delta
    n = sys.dims.dim_total
    j_mat = sys.structure_matrix
    raw = []
    for i, stack in enumerate(delta.coeffs):
        t0 = max(float(delta.breakpoints[i]), a)
        t1 = min(float(delta.breakpoints[i + 1]), b)
        if t1 - t0 <= 1e-12:
            continue
        kernel = _common_kernel(stack)
        k = kernel.shape[1]
        ts = np.linspace(t0, t1, 33)
        dvals = delta(0.5 * (ts[:-1] + ts[1:]))
        ranks = [int(np.linalg.matrix_rank(d, tol=1e-10 * max(1.0, np.abs(d).max())))
                 for d in dvals]
        if any(r != n - k for r in ranks):
            raise UnsupportedWeightStructure(
                f"weight kernel varies inside piece [{t0}, {t1}]")
        if k == 0:
            continue
        # directions v in the kernel with P_ker J v = 0 and P_ker B(t) v = 0
        rows = [kernel.conj().T @ j_mat @ kernel]
        for bstack in sys.coeff_b.coeffs:
            for mat in bstack:
                rows.append(kernel.conj().T @ mat @ kernel)
        dirs = _common_kernel(np.array(rows))
        if dirs.shape[1] == 0:
            continue
        for r in range(dirs.shape[1]):
            v = kernel @ dirs[:, r]
            for j_shape in range(1, n_max + 1):
                raw.append(_mul_candidate(sys, (t0, t1), v, j_shape, tol))
                if len(raw) >= 4 * n_max:
                    break
    basis = MulTminBasis()
    for f, cert in raw:
        g = project_off(sys, f, basis.elements, tol)
        nrm = weighted_norm(sys, g, tol)
        if nrm < 1e-8:
            continue
        unit = GridFunction(g.nodes, g.values / nrm,
                            fn=(lambda ts, gg=g, nn=nrm: gg.eval(ts) / nn),
                            breakpoints=g.breakpoints, label=g.label)
        basis.elements.append(unit)
        basis.certificates.append(cert)
        if len(basis.elements) >= n_max:
            break
    return basis


def _mul_candidate(sys, span, v, j_shape, tol):
    t0, t1 = span
    omega = j_shape * np.pi / (t1 - t0)
    j_mat = sys.structure_matrix

    def profile(ts):
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        inside = (ts >= t0) & (ts <= t1)
        q = np.where(inside, np.sin(omega * (ts - t0)), 0.0)
        dq = np.where(inside, omega * np.cos(omega * (ts - t0)), 0.0)
        return q, dq

    def rhs_fn(ts):
        q, dq = profile(ts)
        return dq[:, None] * (j_mat @ v)[None, :] \
            - q[:, None] * np.einsum("tij,j->ti", sys.coeff_b(ts), v)

    def f_fn(ts):
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        rhs = rhs_fn(ts)
        dmats = sys.coeff_delta(ts)
        out = np.zeros_like(rhs)
        for m in range(len(ts)):
            if rhs[m].any():
                out[m] = np.linalg.pinv(dmats[m], rcond=1e-10) @ rhs[m]
        return out

    f = GridFunction.from_callable(sys, f_fn, breakpoints=(t0, t1),
                                   label=f"mul[{j_shape}]")
    ts = np.linspace(t0, t1, 41)
    dvals = sys.coeff_delta(ts)
    q, _ = profile(ts)
    yv = q[:, None] * v[None, :]
    wnull = float(np.max(np.abs(np.einsum("tij,tj->ti", dvals, yv))))
    flow = float(np.max(np.abs(
        np.einsum("tij,tj->ti", dvals, f_fn(ts)) - rhs_fn(ts))))
    cert = MulCertificate(piece=(t0, t1), direction=v, shape_index=j_shape,
                          weight_null_residual=wnull, flow_residual=flow,
                          endpoint_values=(0.0, 0.0))
    return f, cert


# ---------------------------------------------------------------------------
# Isometry verdict
# ---------------------------------------------------------------------------

@dataclass
class IsometryReport:
    mul_sigma_norms: list
    mul_sup_norms: list
    complement_defects: list      # (label, raw defect, tail-corrected defect)
    verdict: str


def isometry_report(sys: SymmetricSystem, sf: SpectralFunction, test_set,
                    mul_basis: Optional[MulTminBasis] = None,
                    truncation: Optional[float] = None,
                    image_window: float = 100.0,
                    tol: Tolerances = DEFAULT_TOLS,
                    image_tol: float = 1e-8,
                    defect_tol: float = 1e-3) -> IsometryReport:
    """Partial-isometry diagnostics for one distribution function.

    Reports (i) transform norms of the multivalued-part candidates, which
    must vanish, (ii) norm defects on the supplied complement samples, and
    (iii) a verdict: isometric behaviour when there is no multivalued part,
    partial-isometric behaviour when the candidates map to zero and the
    complement defects stay small.
    """
    test_set = list(test_set)
    elements = list(mul_basis.elements) if mul_basis is not None else []
    if not test_set and not elements:
        return IsometryReport([], [], [], verdict="")
    if truncation is None:
        truncation = float(np.max(np.abs(sf.support))) if sf.jumps else 0.0
    mul_sigma, mul_sup = [], []
    if elements:
        s_dense = np.linspace(-image_window, image_window, 801)
        sups = fourier_transform_many(sys, elements, s_dense, tol)
        for e, sup in zip(elements, sups):
            rep = parseval_defect(sys, sf, e, truncation, None, tol)
            mul_sigma.append(float(np.sqrt(max(rep.sum_truncated, 0.0))))
            mul_sup.append(sup.sup_norm())
    defects = []
    for g in test_set:
        rep = parseval_defect(sys, sf, g, truncation, mul_basis, tol)
        defects.append((g.label or f"sample{len(defects)}",
                        rep.defect_complement, rep.defect_with_tail))
    images_ok = all(v <= image_tol for v in mul_sigma + mul_sup)
    defects_ok = all(min(raw, corr) <= defect_tol for _, raw, corr in defects)
    if not elements:
        verdict = ("spectral behavior confirmed" if defects_ok
                   else "isometry defect detected")
    elif images_ok and defects_ok:
        verdict = "pseudospectral behavior confirmed"
    elif images_ok:
        verdict = "partial isometry with enlarged kernel"
    else:
        verdict = "inclusion violated"
    return IsometryReport(mul_sigma_norms=mul_sigma, mul_sup_norms=mul_sup,
                          complement_defects=defects, verdict=verdict)
