"""Stieltjes inversion of characteristic matrices and the discrete image space.

Interval increments and point masses of the induced distribution function are
recovered from boundary values just above the real axis: increments integrate
the matrix imaginary part and extrapolate the height to zero, point masses
extrapolate height times the imaginary part.  The pure-jump case also carries
a concrete weighted sequence space with its scale (multiplication) operator.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .boundary import BoundaryPair, eigenvalues_selfadjoint
from .config import DEFAULT_TOLS, Tolerances
from .errors import (ExtrapolationDivergence, NotPSD, QuadratureFailure,
                     UnboundedElement)
from .quadrature import _reference_rule
from .system import SymmetricSystem
from .weyl import omega_evaluator


def default_eps_seq() -> np.ndarray:
    return 0.1 * 2.0 ** -np.arange(7)


def as_batch_eval(fn: Callable) -> Callable:
    """Wrap a scalar lambda -> matrix function into the batched protocol."""
    def batched(lams):
        lams = np.atleast_1d(np.asarray(lams, dtype=complex))
        return np.array([np.asarray(fn(lam), dtype=complex) for lam in lams])
    return batched


def _imag_part(mats: np.ndarray) -> np.ndarray:
    return (mats - mats.conj().transpose(0, 2, 1)) / 2j


def _richardson(seq, ratio: float, orders) -> tuple:
    """Eliminate error terms of the given orders from a sequence of arrays.

    seq[k] corresponds to parameter eps0 * ratio**-k; returns (limit, err)
    where err compares the last two extrapolation columns.
    """
    table = [np.asarray(s, dtype=complex) for s in seq]
    prev_last = table[-1]
    for j, order in enumerate(orders[:len(seq) - 1]):
        fac = ratio ** order - 1.0
        table = [table[k] + (table[k] - table[k - 1]) / fac
                 for k in range(1, len(table))]
    err = float(np.max(np.abs(table[-1] - prev_last))) if len(table) else 0.0
    return table[-1], err


# ---------------------------------------------------------------------------
# Interval increments
# ---------------------------------------------------------------------------

@dataclass
class StieltjesIncrement:
    value: np.ndarray
    err_est: float
    per_eps: np.ndarray   # raw integrals before extrapolation


def _panel_edges(alpha, beta, eps, features):
    """Panels graded geometrically toward each feature point."""
    pts = {alpha, beta}
    for s in features:
        if s < alpha - 40 * eps or s > beta + 40 * eps:
            continue
        for k in range(14):
            off = eps * (2.0 ** k)
            for cand in (s - off, s + off):
                if alpha < cand < beta:
                    pts.add(cand)
            if off > (beta - alpha):
                break
        if alpha < s < beta:
            pts.add(s)
    return np.array(sorted(pts))


def _gl_panels(omega_eval, edges, eps, order=12):
    xi, w, _ = _reference_rule(order)
    left = edges[:-1]
    half = 0.5 * np.diff(edges)
    nodes = (left[:, None] + half[:, None] * (xi[None, :] + 1.0)).ravel()
    mats = omega_eval(nodes + 1j * eps)
    ims = _imag_part(mats)
    n = ims.shape[-1]
    blocks = ims.reshape(len(left), order, n, n)
    vals = np.einsum("k,pkij->pij", w, blocks) * half[:, None, None]
    return vals


def _integrate_im(omega_eval, alpha, beta, eps, features, tol_abs, max_rounds=42):
    if features:
        edges = _panel_edges(alpha, beta, eps, features)
        coarse = _gl_panels(omega_eval, edges, eps)
        mids = 0.5 * (edges[:-1] + edges[1:])
        fine_edges = np.sort(np.concatenate([edges, mids]))
        fine = _gl_panels(omega_eval, fine_edges, eps)
        total_c = coarse.sum(axis=0)
        total_f = fine.sum(axis=0)
        if np.max(np.abs(total_f - total_c)) <= max(tol_abs, 1e-13):
            return total_f
        # fall through to adaptive refinement seeded with the fine panels
        panels = list(zip(fine_edges[:-1], fine_edges[1:], fine))
    else:
        edges = np.linspace(alpha, beta, 9)
        vals = _gl_panels(omega_eval, edges, eps)
        panels = list(zip(edges[:-1], edges[1:], vals))
    total_width = beta - alpha
    accepted = []
    for _ in range(max_rounds):
        if not panels:
            break
        # evaluate both children of every active panel in one batch
        children = []
        for a0, b0, _ in panels:
            m = 0.5 * (a0 + b0)
            children.append((a0, m))
            children.append((m, b0))
        child_vals = []
        for k in range(0, len(children), 128):
            child_vals.append(_gl_panels_pairs(omega_eval, children[k:k + 128], eps))
        child_vals = np.concatenate(child_vals, axis=0)
        nxt = []
        for i, (a0, b0, old) in enumerate(panels):
            left_v = child_vals[2 * i]
            right_v = child_vals[2 * i + 1]
            err = np.max(np.abs(old - left_v - right_v))
            budget = max(tol_abs, 1e-14) * max((b0 - a0) / total_width, 1e-6)
            if err <= budget:
                accepted.append(left_v + right_v)
            else:
                nxt.append((a0, 0.5 * (a0 + b0), left_v))
                nxt.append((0.5 * (a0 + b0), b0, right_v))
        panels = nxt
    if panels:
        raise QuadratureFailure(
            f"increment quadrature did not converge at eps={eps}")
    return np.sum(accepted, axis=0)


def _gl_panels_pairs(omega_eval, spans, eps, order=12):
    xi, w, _ = _reference_rule(order)
    left = np.array([s[0] for s in spans])
    half = 0.5 * np.array([s[1] - s[0] for s in spans])
    nodes = (left[:, None] + half[:, None] * (xi[None, :] + 1.0)).ravel()
    mats = omega_eval(nodes + 1j * eps)
    ims = _imag_part(mats)
    n = ims.shape[-1]
    blocks = ims.reshape(len(spans), order, n, n)
    return np.einsum("k,pkij->pij", w, blocks) * half[:, None, None]


def stieltjes_increment(omega_eval, alpha: float, beta: float,
                        eps_seq=None, feature_points=(),
                        tol: Tolerances = DEFAULT_TOLS) -> StieltjesIncrement:
    """Increment of the induced distribution over [alpha, beta).

    For each height eps the matrix imaginary part is integrated over the
    interval (1/pi normalised); the eps -> 0 limit is taken by Richardson
    extrapolation over the decreasing eps sequence.  ``feature_points`` may
    list known singular points so the quadrature grades panels toward them.
    Raises ExtrapolationDivergence when the sequence does not stabilise,
    which signals a jump at or near an endpoint.
    """
    if not beta > alpha:
        raise ValueError("need alpha < beta")
    eps_seq = default_eps_seq() if eps_seq is None else np.asarray(eps_seq, float)
    if len(eps_seq) < 3 or np.any(np.diff(eps_seq) >= 0):
        raise ValueError("eps_seq must be decreasing with at least 3 entries")
    ratio = float(eps_seq[0] / eps_seq[1])
    feats = tuple(float(s) for s in feature_points)
    guard = 5.0 * float(eps_seq[-1])
    for s in feats:
        if min(abs(s - alpha), abs(s - beta)) <= guard:
            raise ExtrapolationDivergence(
                f"jump at {s} sits within {guard:g} of an endpoint of "
                f"[{alpha}, {beta}]")
    per_eps = []
    for eps in eps_seq:
        val = _integrate_im(omega_eval, alpha, beta, float(eps), feats,
                            tol_abs=1e-10) / np.pi
        per_eps.append(val)
    limit, err = _richardson(per_eps, ratio, orders=list(range(1, len(eps_seq))))
    tail_delta = float(np.max(np.abs(per_eps[-1] - per_eps[-2])))
    if err > max(10 * tail_delta, 1e-5) and err > 1e-5:
        raise ExtrapolationDivergence(
            f"increment extrapolation unstable on [{alpha}, {beta}] "
            f"(err={err:.3e}); a jump may sit at an endpoint")
    value = 0.5 * (limit + limit.conj().T)
    return StieltjesIncrement(value=value, err_est=err,
                              per_eps=np.array(per_eps))


# ---------------------------------------------------------------------------
# Point masses
# ---------------------------------------------------------------------------

def extract_jump(omega_eval, s0: float, eps_seq=None,
                 tol: Tolerances = DEFAULT_TOLS) -> np.ndarray:
    """Point mass at s0: limit of eps * Im Omega(s0 + i eps).

    The sequence has an even error expansion in eps and is extrapolated
    accordingly; the result must be PSD and is projected onto the PSD cone
    only within the configured slack, otherwise NotPSD is raised.
    """
    eps_seq = default_eps_seq() if eps_seq is None else np.asarray(eps_seq, float)
    ratio = float(eps_seq[0] / eps_seq[1])
    mats = omega_eval(s0 + 1j * eps_seq)
    seq = eps_seq[:, None, None] * _imag_part(mats)
    limit, _ = _richardson(list(seq), ratio, orders=[2, 4, 6, 8, 10, 12])
    limit = 0.5 * (limit + limit.conj().T)
    evals, evecs = np.linalg.eigh(limit)
    scale = max(1.0, float(np.max(np.abs(evals))))
    if evals[0] < -tol.jump_psd * scale:
        raise NotPSD(
            f"extracted mass at s0={s0} has eigenvalue {evals[0]:.3e}")
    clipped = np.clip(evals, 0.0, None)
    return (evecs * clipped[None, :]) @ evecs.conj().T


# ---------------------------------------------------------------------------
# Distribution functions
# ---------------------------------------------------------------------------

@dataclass
class SpectralFunction:
    """Pure-jump (plus optional tabulated continuous) distribution data.

    Left-continuous normalisation vanishing at zero: the distribution at s
    sums masses in [0, s) for s > 0 and minus the masses in [s, 0) for
    s <= 0.
    """

    jumps: list = field(default_factory=list)          # [(s_k, PSD matrix)]
    ac_increments: list = field(default_factory=list)  # [((alpha, beta), matrix)]
    has_continuous_part: bool = False

    def __post_init__(self):
        self.jumps = sorted(((float(s), np.asarray(a)) for s, a in self.jumps),
                            key=lambda p: p[0])
        locs = [s for s, _ in self.jumps]
        if any(b - a <= 0 for a, b in zip(locs, locs[1:])):
            raise ValueError("jump locations must be strictly increasing")

    @property
    def support(self) -> np.ndarray:
        return np.array([s for s, _ in self.jumps])

    @property
    def weights(self) -> np.ndarray:
        return np.array([a for _, a in self.jumps])

    @property
    def dim(self) -> int:
        if self.jumps:
            return self.jumps[0][1].shape[0]
        if self.ac_increments:
            return self.ac_increments[0][1].shape[0]
        raise ValueError("empty spectral function has no dimension")

    def distribution_at(self, s: float) -> np.ndarray:
        total = np.zeros((self.dim, self.dim), dtype=complex)
        for sk, a in self.jumps:
            if 0.0 <= sk < s:
                total += a
            elif s <= sk < 0.0:
                total -= a
        return total

    def mass_in(self, alpha: float, beta: float) -> np.ndarray:
        """Sum of jumps in [alpha, beta)."""
        total = np.zeros((self.dim, self.dim), dtype=complex)
        for sk, a in self.jumps:
            if alpha <= sk < beta:
                total += a
        return total


def build_spectral_function(sys: SymmetricSystem, tau: BoundaryPair, window,
                            eps_seq=None, tol: Tolerances = DEFAULT_TOLS,
                            tiles: int = 16) -> SpectralFunction:
    """Distribution function of the pair's characteristic matrix on a window.

    Constant self-adjoint pairs produce a pure-jump function: eigenvalues are
    located first and the point mass is extracted at each.  Other pairs are
    tabulated as interval increments over a uniform tiling, with a flag when
    a genuinely continuous component shows up.
    """
    s_min, s_max = float(window[0]), float(window[1])
    if not s_min < s_max:
        return SpectralFunction()
    omega = omega_evaluator(sys, tau, tol)
    if tau.kind == "constant-selfadjoint":
        eigs = eigenvalues_selfadjoint(sys, tau, (s_min, s_max), tol)
        jumps = []
        for eig in eigs:
            mass = extract_jump(omega, eig.lam, eps_seq, tol)
            jumps.append((eig.lam, mass))
        return SpectralFunction(jumps=jumps)
    edges = np.linspace(s_min, s_max, tiles + 1)
    incs = []
    continuous = False
    for a0, b0 in zip(edges[:-1], edges[1:]):
        inc = stieltjes_increment(omega, a0, b0, eps_seq, (), tol)
        incs.append(((float(a0), float(b0)), inc.value))
        if np.linalg.norm(inc.value, 2) > 1e-8:
            continuous = True
    return SpectralFunction(jumps=[], ac_increments=incs,
                            has_continuous_part=continuous)


# ---------------------------------------------------------------------------
# The discrete weighted sequence space
# ---------------------------------------------------------------------------

class DiscreteL2Sigma:
    """Finite-support realisation of the weighted sequence space.

    Elements are arrays of vectors aligned with the jump locations; the
    semi-inner product weighs values with the jump matrices, so norm-zero
    elements are exactly those annihilated by every weight.
    """

    def __init__(self, sf: SpectralFunction):
        if not sf.jumps:
            raise ValueError("need a pure-jump spectral function with support")
        self.sf = sf
        self.support = sf.support
        self.weights = sf.weights

    def element(self, fn_or_values) -> np.ndarray:
        if callable(fn_or_values):
            vals = np.array([np.asarray(fn_or_values(s), dtype=complex)
                             for s in self.support])
        else:
            vals = np.asarray(fn_or_values, dtype=complex)
        if vals.shape != (len(self.support), self.sf.dim):
            raise ValueError(f"element must have shape "
                             f"{(len(self.support), self.sf.dim)}")
        return vals

    def inner(self, f, g) -> complex:
        f = self.element(f)
        g = self.element(g)
        val = complex(np.einsum("kij,kj,ki->", self.weights, f, g.conj()))
        if not np.isfinite(val):
            raise UnboundedElement("inner product is not finite")
        return val

    def norm(self, f) -> float:
        return float(np.sqrt(max(self.inner(f, f).real, 0.0)))

    def apply_scale(self, f) -> np.ndarray:
        """Multiplication by the support variable (the scale operator)."""
        f = self.element(f)
        out = self.support[:, None] * f
        if not np.all(np.isfinite(out)):
            raise UnboundedElement("scaled element is not finite")
        return out

    def project(self, f, borel_interval) -> np.ndarray:
        """Spectral projector: indicator multiplication over [lo, hi)."""
        lo, hi = borel_interval
        f = self.element(f)
        mask = (self.support >= lo) & (self.support < hi)
        return mask[:, None] * f


def l2sigma_ops(sf: SpectralFunction, f, g):
    """Inner product and the scale operator applied to f (pure-jump only)."""
    space = DiscreteL2Sigma(sf)
    return space.inner(f, g), space.apply_scale(f)
