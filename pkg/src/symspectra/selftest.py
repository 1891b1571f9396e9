"""Built-in oracle suite: one named check per acceptance criterion.

Every check compares library output against independent reference data
(closed forms, transcendental equations, eigenfunction expansions) at a fixed
tolerance and reports the worst residual.  The CLI prints one line per check;
the pytest acceptance module runs the same functions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from . import presets
from .boundary import (BoundaryPair, MaximalPair, boundary_maps,
                       eigenfunction, eigenvalues_selfadjoint,
                       green_identity_residual)
from .config import DEFAULT_TOLS, Tolerances
from .fourier import (fourier_transform_many, isometry_report, mul_tmin_basis,
                      parseval_defect)
from .propagator import fundamental_solution, lagrange_bilinear_check, propagate
from .resolvent import resolvent_crosscheck, resolvent_identity_check
from .spectral import extract_jump, stieltjes_increment, build_spectral_function
from .system import GridFunction, weighted_inner_product, weighted_norm
from .weyl import admissibility, omega_evaluator, weyl_function


@dataclass
class CheckResult:
    name: str
    passed: bool
    residual: float
    tolerance: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"{status} {self.name} residual={self.residual:.6e} "
                f"tol={self.tolerance:.1e} {self.detail}".rstrip())


@dataclass
class VerificationReport:
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_text(self) -> str:
        lines = [c.line() for c in self.checks]
        lines.append(f"{'OK' if self.passed else 'FAILED'} "
                     f"{sum(c.passed for c in self.checks)}/{len(self.checks)} checks")
        return "\n".join(lines) + "\n"


class _Context:
    """Fresh systems and pairs; caches live on the system objects."""

    def __init__(self, tol: Tolerances = DEFAULT_TOLS):
        self.tol = tol
        self.free1 = presets.free1()
        self.deg1 = presets.deg1()
        self.smoke3 = presets.smoke3()
        self.systems = [self.free1, self.deg1, self.smoke3]
        self.tau_a = presets.pair_identity_zero(2)
        self.tau_b = presets.pair_mixed(2)
        self.tau_c = presets.pair_zero_identity(2)


def _worst(values) -> float:
    return float(max(values)) if values else 0.0


# --- criterion 1 -----------------------------------------------------------

def check_propagator_oracle(ctx: _Context) -> CheckResult:
    tol = 1e-9
    lam_set = [0.7, -1.3, 1j, 2 + 3j, -0.5 - 0.8j]
    t_set = [0.3, 1.0, 2.0, float(np.pi)]
    worst = 0.0
    for lam in lam_set:
        ref = presets.free1_fundamental(t_set, lam)
        for k, t in enumerate(t_set):
            val = fundamental_solution(ctx.free1, lam, t, ctx.tol)
            worst = max(worst, float(np.max(np.abs(val - ref[k]))))
    worst_deg = 0.0
    for s in (0.3, 1.7, -2.2):
        ref = presets.deg1_fundamental_left([0.25, 0.6, 0.95], s)
        for k, t in enumerate((0.25, 0.6, 0.95)):
            val = fundamental_solution(ctx.deg1, s, t, ctx.tol)
            worst_deg = max(worst_deg, float(np.max(np.abs(val - ref[k]))))
    passed = worst <= tol and worst_deg <= 1e-10
    return CheckResult("01-propagator-oracle", passed, max(worst, worst_deg), tol,
                       f"free1={worst:.2e} deg1={worst_deg:.2e}")


# --- criterion 2 -----------------------------------------------------------

def check_symplectic_identity(ctx: _Context) -> CheckResult:
    tol = 1e-9
    lam_set = [0.0, 1j, -1j, 2 + 3j]
    worst = _worst([lagrange_bilinear_check(sys, lam, ctx.tol)
                    for sys in ctx.systems for lam in lam_set])
    return CheckResult("02-symplectic-identity", worst <= tol, worst, tol,
                       "systems=FREE1,DEG1,SMOKE3")


# --- criterion 3 -----------------------------------------------------------

def _random_pairs(sys, n_pairs, rng, tol):
    """Maximal pairs: half solution pairs, half driven by random polynomials."""
    n = sys.dims.dim_total
    a, b = sys.interval
    pairs = []
    lam_pool = rng.uniform(-2.0, 2.0, size=max(1, n_pairs // 10))
    for k in range(n_pairs // 2):
        lam = float(lam_pool[k % len(lam_pool)])
        c = rng.normal(size=n) + 1j * rng.normal(size=n)
        prop = propagate(sys, lam, tol)
        y = GridFunction.from_callable(
            sys, lambda ts, pr=prop, cc=c: np.einsum("tij,j->ti", pr.eval(ts), cc))
        f = GridFunction.from_callable(
            sys, lambda ts, yy=y, ll=lam: ll * yy.eval(ts))
        pairs.append(MaximalPair(y=y, f=f, lam=lam))
    m = n_pairs - len(pairs)
    coeffs = rng.normal(size=(m, 4, n)) + 1j * rng.normal(size=(m, 4, n))
    y0 = (rng.normal(size=(m, n)) + 1j * rng.normal(size=(m, n)))

    def fvals(ts):
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        acc = np.broadcast_to(coeffs[:, -1, :][:, None, :],
                              (m, len(ts), n)).copy()
        for kk in range(coeffs.shape[1] - 2, -1, -1):
            acc = acc * ts[None, :, None] + coeffs[:, kk, :][:, None, :]
        return acc                                    # (m, t, n)

    j_mat = sys.structure_matrix

    def rhs(t, yflat):
        y = yflat.reshape(m, n)
        bv = sys.coeff_b(t)
        dv = sys.coeff_delta(t)
        fv = fvals(np.array([t]))[:, 0, :]
        return (-(y @ bv.T + fv @ dv.T) @ j_mat.T).reshape(-1)

    res = solve_ivp(rhs, (a, b), y0.reshape(-1), method="DOP853",
                    rtol=1e-12, atol=1e-12, dense_output=True)
    sol = res.sol
    for i in range(m):
        def yfn(ts, idx=i):
            vals = sol(np.atleast_1d(np.asarray(ts, dtype=float)))
            return vals.T.reshape(len(np.atleast_1d(ts)), m, n)[:, idx]

        def ffn(ts, idx=i):
            return fvals(ts)[idx]

        pairs.append(MaximalPair(
            y=GridFunction.from_callable(sys, yfn),
            f=GridFunction.from_callable(sys, ffn)))
    return pairs


def check_green_identity(ctx: _Context) -> CheckResult:
    tol = 1e-8
    rng = np.random.default_rng(20260810)
    worst = 0.0
    for sys in ctx.systems:
        pairs = _random_pairs(sys, 100, rng, ctx.tol)
        for i in range(len(pairs)):
            r = green_identity_residual(sys, pairs[i], pairs[(i + 1) % len(pairs)],
                                        ctx.tol)
            worst = max(worst, r)
    return CheckResult("03-green-identity", worst <= tol, worst, tol,
                       "100 randomized pairs per system")


# --- criterion 4 -----------------------------------------------------------

def check_weyl_oracle(ctx: _Context) -> CheckResult:
    tol = 1e-8
    worst = _worst([float(np.max(np.abs(weyl_function(ctx.free1, lam, ctx.tol).m
                                        - presets.free1_weyl_matrix(lam))))
                    for lam in (1j, 0.5 + 1j, -2j)])
    cone = 0.0
    sym = 0.0
    for re in (-2.0, -1.0, 0.0, 1.0, 2.0):
        for im in (0.2, 0.5, 1.0, 2.0, 5.0):
            lam = re + 1j * im
            m = weyl_function(ctx.free1, lam, ctx.tol).m
            m_conj = weyl_function(ctx.free1, np.conj(lam), ctx.tol).m
            cone = min(cone, float(np.linalg.eigvalsh((m - m.conj().T) / 2j)[0]))
            sym = max(sym, float(np.max(np.abs(m_conj - m.conj().T))))
    passed = worst <= tol and cone >= -1e-9 and sym <= tol
    return CheckResult("04-weyl-oracle", passed, max(worst, sym, -cone), tol,
                       f"closed-form={worst:.2e} min-eig={cone:.2e} sym={sym:.2e}")


# --- criterion 5 -----------------------------------------------------------

def check_characteristic_matrix(ctx: _Context) -> CheckResult:
    tol = 1e-8
    from .weyl import characteristic_matrix
    sym = 0.0
    for lam in (1 + 2j, -0.5 + 0.7j):
        om = characteristic_matrix(ctx.free1, ctx.tau_b, lam, ctx.tol)
        om_c = characteristic_matrix(ctx.free1, ctx.tau_b, np.conj(lam), ctx.tol)
        sym = max(sym, float(np.max(np.abs(om_c - om.conj().T))))
    om_a = characteristic_matrix(ctx.free1, ctx.tau_a, 1j, ctx.tol)
    base = weyl_function(ctx.free1, 1j, ctx.tol).omega0
    collapse = float(np.max(np.abs(om_a - base)))
    corner = 0.0
    for sys in (ctx.free1, ctx.smoke3):
        wd = weyl_function(sys, 1j, ctx.tol)
        h = sys.dims.dim_h
        corner = max(corner, float(np.max(np.abs(wd.omega0[-h:, -h:]))))
    passed = sym <= tol and collapse == 0.0 and corner == 0.0
    return CheckResult("05-characteristic-matrix", passed, max(sym, collapse, corner),
                       tol, f"sym={sym:.2e} collapse={collapse:.1e} corner={corner:.1e}")


# --- criterion 6 -----------------------------------------------------------

def check_resolvent(ctx: _Context) -> CheckResult:
    tol = 1e-7
    worst = 0.0
    cases = []
    for sys in (ctx.free1, ctx.deg1):
        f1 = GridFunction.from_constant(sys, [1.0, 0.0], label="e0")
        f2 = GridFunction.from_callable(
            sys, lambda ts: np.stack([ts, np.ones_like(ts)], axis=1), label="(t,1)")
        for tau in (ctx.tau_a, ctx.tau_b):
            for lam in (1j, 2j):
                for f in (f1, f2):
                    rep = resolvent_crosscheck(sys, tau, lam, f, ctx.tol)
                    cases.append(rep.defect)
    worst = _worst(cases)
    ident = max(
        resolvent_identity_check(ctx.free1, ctx.tau_a, 1j, 2j,
                                 GridFunction.from_constant(ctx.free1, [1, 0]),
                                 ctx.tol),
        resolvent_identity_check(
            ctx.deg1, ctx.tau_a, 1j, -1j,
            GridFunction.from_callable(
                ctx.deg1,
                lambda ts: np.stack([np.zeros_like(ts), (ts < 1.0) * 1.0], axis=1),
                breakpoints=(1.0,)),
            ctx.tol))
    passed = worst <= tol and ident <= tol
    return CheckResult("06-resolvent", passed, max(worst, ident), tol,
                       f"crosscheck={worst:.2e} identity={ident:.2e} "
                       f"({len(cases)} cases)")


# --- criterion 7 -----------------------------------------------------------

def check_spectral_oracle(ctx: _Context) -> CheckResult:
    eig_tol = 1e-9
    jump_tol = 1e-5
    ref_jump = presets.free1_jump_matrix()
    worst_eig = 0.0
    worst_jump = 0.0
    detail = []
    for tau, expected in ((ctx.tau_a, presets.free1_eigenvalues_identity_zero((-3, 3))),
                          (ctx.tau_b, presets.free1_eigenvalues_mixed((-2.5, 2.5)))):
        window = (-3.0, 3.0) if tau is ctx.tau_a else (-2.5, 2.5)
        eigs = eigenvalues_selfadjoint(ctx.free1, tau, window, ctx.tol)
        found = np.array([e.lam for e in eigs])
        if len(found) != len(expected):
            return CheckResult("07-spectral-oracle", False, np.inf, eig_tol,
                               f"expected {len(expected)} eigenvalues, got {len(found)}")
        worst_eig = max(worst_eig, float(np.max(np.abs(found - expected))))
        omega = omega_evaluator(ctx.free1, tau, ctx.tol)
        for e in eigs:
            jump = extract_jump(omega, e.lam, tol=ctx.tol)
            worst_jump = max(worst_jump, float(np.max(np.abs(jump - ref_jump))))
        detail.append(f"{tau.label}:{len(eigs)}eigs")
    passed = worst_eig <= eig_tol and worst_jump <= jump_tol
    return CheckResult("07-spectral-oracle", passed, max(worst_eig, worst_jump),
                       jump_tol, f"eig={worst_eig:.2e} jump={worst_jump:.2e} "
                       + " ".join(detail))


# --- criterion 8 -----------------------------------------------------------

def check_stieltjes_consistency(ctx: _Context) -> CheckResult:
    tol_add = 1e-6
    tol_jump = 1e-5
    omega = omega_evaluator(ctx.free1, ctx.tau_a, ctx.tol)
    feats = (-0.5, 0.5, 1.5)
    i1 = stieltjes_increment(omega, 0.2, 0.8, feature_points=feats, tol=ctx.tol)
    i2 = stieltjes_increment(omega, 0.8, 1.2, feature_points=feats, tol=ctx.tol)
    i3 = stieltjes_increment(omega, 0.2, 1.2, feature_points=feats, tol=ctx.tol)
    additivity = float(np.max(np.abs(i3.value - i1.value - i2.value)))
    psd = -min(float(np.linalg.eigvalsh(i.value)[0]) for i in (i1, i2, i3))
    jump = extract_jump(omega, 0.5, tol=ctx.tol)
    crossing = float(np.max(np.abs(i1.value - jump)))
    quiet = float(np.max(np.abs(
        stieltjes_increment(omega, 0.6, 1.4, feature_points=feats,
                            tol=ctx.tol).value)))
    passed = (additivity <= tol_add and psd <= 1e-6 and crossing <= tol_jump
              and quiet <= 1e-6)
    return CheckResult("08-stieltjes-consistency", passed,
                       max(additivity, psd, crossing, quiet), tol_jump,
                       f"add={additivity:.2e} psd={psd:.2e} cross={crossing:.2e} "
                       f"quiet={quiet:.2e}")


# --- criterion 9 -----------------------------------------------------------

def check_parseval(ctx: _Context) -> CheckResult:
    tol_tail = 1e-4
    tol_exact = 1e-8
    sf = build_spectral_function(ctx.free1, ctx.tau_a, (-51.0, 51.0), tol=ctx.tol)
    f = GridFunction.from_constant(ctx.free1, [1.0, 0.0], label="const-e0")
    rep = parseval_defect(ctx.free1, sf, f, 50.5, tol=ctx.tol)
    p1 = propagate(ctx.free1, 0.5, ctx.tol)
    p2 = propagate(ctx.free1, 1.5, ctx.tol)
    combo = GridFunction.from_callable(
        ctx.free1,
        lambda ts: np.einsum("tij,j->ti", p1.eval(ts), np.array([1.0, 0]))
        + 2.0 * np.einsum("tij,j->ti", p2.eval(ts), np.array([1.0, 0])),
        label="eig-combo")
    rep2 = parseval_defect(ctx.free1, sf, combo, 50.5, tol=ctx.tol)
    passed = (rep.defect_with_tail <= tol_tail and np.isfinite(rep.tail_estimate)
              and rep2.defect <= tol_exact)
    return CheckResult("09-parseval", passed,
                       max(rep.defect_with_tail, rep2.defect), tol_tail,
                       f"tail-corrected={rep.defect_with_tail:.2e} "
                       f"(raw={rep.defect:.2e} tail={rep.tail_estimate:.2e}) "
                       f"combo={rep2.defect:.2e}")


# --- criterion 10 ----------------------------------------------------------

def check_pseudospectral_dichotomy(ctx: _Context) -> CheckResult:
    basis = mul_tmin_basis(ctx.deg1, 3, ctx.tol)
    if len(basis) != 3:
        return CheckResult("10-pseudospectral-dichotomy", False, np.inf, 1e-8,
                           f"expected 3 kernel candidates, got {len(basis)}")
    s_dense = np.linspace(-100.0, 100.0, 801)
    sups = [r.sup_norm()
            for r in fourier_transform_many(ctx.deg1, basis.elements, s_dense,
                                            ctx.tol)]
    sup = _worst(sups)
    sf = build_spectral_function(ctx.deg1, ctx.tau_c, (-100.5, 100.5), tol=ctx.tol)
    g1 = GridFunction.from_callable(
        ctx.deg1,
        lambda ts: np.stack([np.zeros_like(ts), (ts < 1.0) * 1.0], axis=1),
        breakpoints=(1.0,), label="kernel-direction")
    g2 = GridFunction.from_callable(
        ctx.deg1,
        lambda ts: np.stack([np.sin(np.pi * np.clip(ts - 1.0, 0, 1)) ** 2,
                             np.zeros_like(ts)], axis=1),
        breakpoints=(1.0,), label="bump-right")
    rep = isometry_report(ctx.deg1, sf, [g1, g2], basis, truncation=100.0,
                          tol=ctx.tol)
    defect = _worst([min(raw, corr) for _, raw, corr in rep.complement_defects])
    free_basis = mul_tmin_basis(ctx.free1, 3, ctx.tol)
    sf_free = build_spectral_function(ctx.free1, ctx.tau_a, (-20.5, 20.5),
                                      tol=ctx.tol)
    combo = GridFunction.from_callable(
        ctx.free1,
        lambda ts: np.einsum("tij,j->ti", propagate(ctx.free1, 0.5, ctx.tol).eval(ts),
                             np.array([1.0, 0.0])), label="eig-half")
    rep_free = isometry_report(ctx.free1, sf_free, [combo], free_basis,
                               truncation=20.5, tol=ctx.tol)
    passed = (sup <= 1e-8 and defect <= 1e-3
              and rep.verdict == "pseudospectral behavior confirmed"
              and len(free_basis) == 0
              and rep_free.verdict == "spectral behavior confirmed")
    return CheckResult("10-pseudospectral-dichotomy", passed, max(sup, defect),
                       1e-3, f"sup={sup:.2e} defect={defect:.2e} "
                       f"deg1='{rep.verdict}' free1='{rep_free.verdict}'")


# --- criterion 11 ----------------------------------------------------------

def check_admissibility(ctx: _Context) -> CheckResult:
    tol_adm = 1e-6
    worst = 0.0
    decay = np.inf
    for tau in (ctx.tau_a, ctx.tau_c, ctx.tau_b):
        est = admissibility(ctx.free1, tau, tol=ctx.tol)
        worst = max(worst, float(np.linalg.norm(est.b_tau, 2)),
                    float(np.linalg.norm(est.bhat_tau, 2)))
        decay = min(decay, est.decay_fit)
    passed = worst <= tol_adm and decay >= 0.9
    return CheckResult("11-admissibility", passed, worst, tol_adm,
                       f"norms={worst:.2e} decay={decay:.3f}")


# --- criterion 12 ----------------------------------------------------------

def _determinism_battery() -> str:
    """Representative computations on fresh systems, fully formatted."""
    ctx = _Context()
    out = []
    for lam in (0.7, 1j, 2 + 3j):
        out.append(repr(fundamental_solution(ctx.free1, lam, 1.1, ctx.tol)))
        out.append(repr(weyl_function(ctx.free1, lam, ctx.tol).m))
    eigs = eigenvalues_selfadjoint(ctx.free1, ctx.tau_a, (-2, 2), ctx.tol)
    out.extend(repr(e.lam) + repr(e.basis) for e in eigs)
    omega = omega_evaluator(ctx.free1, ctx.tau_a, ctx.tol)
    out.append(repr(extract_jump(omega, 0.5, tol=ctx.tol)))
    out.append(repr(stieltjes_increment(omega, 0.2, 0.8, feature_points=(0.5,),
                                        tol=ctx.tol).value))
    est = admissibility(ctx.free1, ctx.tau_b, tol=ctx.tol)
    out.append(repr(est.b_tau) + repr(est.bhat_tau))
    sf = build_spectral_function(ctx.free1, ctx.tau_a, (-10.5, 10.5), tol=ctx.tol)
    f = GridFunction.from_constant(ctx.free1, [1.0, 0.0])
    rep = parseval_defect(ctx.free1, sf, f, 10.5, tol=ctx.tol)
    out.append(repr(rep.sum_truncated) + repr(rep.tail_estimate))
    return "\n".join(out)


def check_determinism(ctx: _Context) -> CheckResult:
    first = _determinism_battery()
    second = _determinism_battery()
    passed = first == second
    return CheckResult("12-determinism", passed, 0.0 if passed else 1.0, 0.0,
                       "two fresh runs byte-identical" if passed
                       else "reports differ between runs")


ALL_CHECKS = [
    check_propagator_oracle,
    check_symplectic_identity,
    check_green_identity,
    check_weyl_oracle,
    check_characteristic_matrix,
    check_resolvent,
    check_spectral_oracle,
    check_stieltjes_consistency,
    check_parseval,
    check_pseudospectral_dichotomy,
    check_admissibility,
    check_determinism,
]


def run_selftest(tol: Tolerances = DEFAULT_TOLS) -> VerificationReport:
    ctx = _Context(tol)
    report = VerificationReport()
    for check in ALL_CHECKS:
        report.checks.append(check(ctx))
    return report
