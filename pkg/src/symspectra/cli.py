"""Command-line interface: ingestion, dispatch, table/CSV emission, selftest.

Exit codes: 0 success, 2 validation or parse failure, 3 numerical failure.
Complex numbers are emitted as paired re/im columns; matrices row-major with
an explicit shape header.  Every CSV starts with a comment row naming the
tolerance profile, so identical inputs give byte-identical outputs.
"""

from __future__ import annotations

import argparse
import sys as _sys
from pathlib import Path

import numpy as np

from . import presets
from .config import DEFAULT_TOLS
from .errors import ParseError, SymSpectraError, UnknownCommand
from .fileio import load_input_function, load_pair, load_system
from .system import GridFunction, probe_definiteness, validate_system

_COMMANDS = ("describe", "propagate", "weyl", "charmatrix", "eigen", "spectral",
             "parseval", "fourier", "mulmin", "resolvent-check", "selftest")


def _tol_from_args(args):
    return DEFAULT_TOLS.with_overrides(
        sym=getattr(args, "tol_sym", None), psd=getattr(args, "tol_psd", None),
        quad=getattr(args, "tol_quad", None), ode=getattr(args, "tol_ode", None),
        eig=getattr(args, "tol_eig", None), adm=getattr(args, "tol_adm", None),
        green=getattr(args, "tol_green", None))


def _resolve_system(spec: str):
    if spec.upper() in presets.builtin_names() and not Path(spec).exists():
        return presets.builtin(spec)
    return load_system(spec)


def _parse_complex(text: str) -> complex:
    parts = text.split(",")
    if len(parts) != 2:
        raise ParseError(f"expected RE,IM, got {text!r}")
    try:
        return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        raise ParseError(f"non-numeric lambda {text!r}") from None


def _parse_window(text: str):
    parts = text.split(",")
    if len(parts) != 2:
        raise ParseError(f"expected MIN,MAX, got {text!r}")
    return float(parts[0]), float(parts[1])


def _parse_grid(text: str) -> np.ndarray:
    """Grid spec: either 'start:stop:count' or a comma list of values."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ParseError(f"expected START:STOP:COUNT, got {text!r}")
        return np.linspace(float(parts[0]), float(parts[1]), int(parts[2]))
    return np.array([float(v) for v in text.split(",")])


def _parse_lambda_grid(text: str) -> np.ndarray:
    """Lambda grid: 'RE0:RE1:COUNT@IM' or a semicolon list of RE,IM pairs."""
    if "@" in text:
        real_part, im = text.split("@", 1)
        return _parse_grid(real_part) + 1j * float(im)
    return np.array([_parse_complex(tok) for tok in text.split(";")])


class _Emitter:
    def __init__(self, out, fmt, tol):
        self.rows = []
        self.out = out
        self.fmt = fmt
        self.tol = tol

    def comment(self, text):
        self.rows.append(("#", text))

    def header(self, *cols):
        self.rows.append(("H", cols))

    def row(self, *cells):
        self.rows.append(("R", cells))

    @staticmethod
    def _fmt_cell(c):
        if isinstance(c, float):
            return f"{c:.17g}"
        return str(c)

    def render(self) -> str:
        lines = [f"# tolerances: ode={self.tol.ode:g} quad={self.tol.quad:g} "
                 f"eig={self.tol.eig:g} adm={self.tol.adm:g}"]
        for kind, payload in self.rows:
            if kind == "#":
                lines.append(f"# {payload}")
            else:
                sep = "," if self.fmt == "csv" else "\t"
                lines.append(sep.join(self._fmt_cell(c) for c in payload))
        return "\n".join(lines) + "\n"

    def emit(self):
        text = self.render()
        if self.out:
            Path(self.out).write_text(text, encoding="utf-8")
        else:
            _sys.stdout.write(text)


def _emit_matrix(em: _Emitter, name: str, mat: np.ndarray):
    mat = np.atleast_2d(np.asarray(mat, dtype=complex))
    em.comment(f"{name} shape={mat.shape[0]}x{mat.shape[1]} row-major")
    em.header("row", "col", "re", "im")
    for i in range(mat.shape[0]):
        for j in range(mat.shape[1]):
            em.row(i, j, float(mat[i, j].real), float(mat[i, j].imag))


def _cmd_describe(args, tol):
    sysm = _resolve_system(args.system)
    rep = validate_system(sysm, tol)
    dfn = probe_definiteness(sysm, tol)
    em = _Emitter(args.out, args.format, tol)
    em.header("field", "value")
    em.row("label", sysm.label or "(unnamed)")
    em.row("dim_h", sysm.dims.dim_h)
    em.row("dim_hhat", sysm.dims.dim_hhat)
    em.row("dim_total", sysm.dims.dim_total)
    em.row("interval_a", float(sysm.interval[0]))
    em.row("interval_b", float(sysm.interval[1]))
    em.row("valid", rep.passed)
    em.row("herm_defect", rep.herm_defect)
    em.row("min_weight_eig", rep.min_weight_eig)
    em.row("absolutely_definite", dfn.absolutely_definite)
    em.row("invertible_measure", dfn.invertible_measure)
    em.row("definiteness", dfn.definiteness)
    # regular interval: every solution is weighted-square-integrable
    em.row("deficiency_index_plus", sysm.dims.dim_total)
    em.row("deficiency_index_minus", sysm.dims.dim_total)
    em.emit()
    return 0 if rep.passed else 2


def _cmd_propagate(args, tol):
    from .propagator import fundamental_solution
    sysm = _resolve_system(args.system)
    lam = _parse_complex(args.lam)
    t = args.t if args.t is not None else sysm.interval[1]
    mat = fundamental_solution(sysm, lam, t, tol)
    em = _Emitter(args.out, args.format, tol)
    em.comment(f"fundamental solution at t={t:g} lambda={lam}")
    _emit_matrix(em, "Y0", mat)
    em.emit()
    return 0


def _cmd_weyl(args, tol):
    from .weyl import weyl_function
    sysm = _resolve_system(args.system)
    lams = _parse_lambda_grid(args.lambda_grid)
    em = _Emitter(args.out, args.format, tol)
    em.header("lambda_re", "lambda_im", "row", "col", "m_re", "m_im")
    for lam in lams:
        m = weyl_function(sysm, lam, tol).m
        for i in range(m.shape[0]):
            for j in range(m.shape[1]):
                em.row(float(lam.real), float(lam.imag), i, j,
                       float(m[i, j].real), float(m[i, j].imag))
    em.emit()
    return 0


def _cmd_charmatrix(args, tol):
    from .weyl import characteristic_matrix
    sysm = _resolve_system(args.system)
    tau = load_pair(args.tau)
    lam = _parse_complex(args.lam)
    om = characteristic_matrix(sysm, tau, lam, tol)
    em = _Emitter(args.out, args.format, tol)
    _emit_matrix(em, f"Omega_tau({lam})", om)
    em.emit()
    return 0


def _cmd_eigen(args, tol):
    from .boundary import eigenvalues_selfadjoint
    sysm = _resolve_system(args.system)
    tau = load_pair(args.tau)
    window = _parse_window(args.window)
    eigs = eigenvalues_selfadjoint(sysm, tau, window, tol)
    em = _Emitter(args.out, args.format, tol)
    em.header("eigenvalue", "multiplicity", "sigma_min")
    for e in eigs:
        em.row(float(e.lam), e.multiplicity, float(e.sigma_min))
    em.emit()
    return 0


def _cmd_spectral(args, tol):
    from .spectral import build_spectral_function, default_eps_seq
    sysm = _resolve_system(args.system)
    tau = load_pair(args.tau)
    window = _parse_window(args.window)
    eps = (np.array([float(v) for v in args.eps_seq.split(",")])
           if args.eps_seq else default_eps_seq())
    sf = build_spectral_function(sysm, tau, window, eps_seq=eps, tol=tol)
    em = _Emitter(args.out, args.format, tol)
    em.comment(f"jump table: {len(sf.jumps)} point masses in "
               f"[{window[0]:g}, {window[1]:g}]")
    em.header("s", "row", "col", "a_re", "a_im")
    for s, a in sf.jumps:
        for i in range(a.shape[0]):
            for j in range(a.shape[1]):
                em.row(float(s), i, j, float(a[i, j].real), float(a[i, j].imag))
    if sf.ac_increments:
        em.comment("increment table")
        em.header("alpha", "beta", "row", "col", "inc_re", "inc_im")
        for (a0, b0), m in sf.ac_increments:
            for i in range(m.shape[0]):
                for j in range(m.shape[1]):
                    em.row(float(a0), float(b0), i, j,
                           float(m[i, j].real), float(m[i, j].imag))
    em.emit()
    return 0


def _cmd_parseval(args, tol):
    from .fourier import mul_tmin_basis, parseval_defect
    from .spectral import build_spectral_function
    sysm = _resolve_system(args.system)
    tau = load_pair(args.tau)
    window = _parse_window(args.window)
    f = load_input_function(args.f, sysm)
    sf = build_spectral_function(sysm, tau, window, tol=tol)
    basis = mul_tmin_basis(sysm, 8, tol)
    rep = parseval_defect(sysm, sf, f, max(abs(window[0]), abs(window[1])),
                          basis, tol)
    em = _Emitter(args.out, args.format, tol)
    em.header("field", "value")
    em.row("sum_truncated", rep.sum_truncated)
    em.row("norm_sq", rep.norm_sq)
    em.row("norm_sq_complement", rep.norm_sq_complement)
    em.row("defect", rep.defect)
    em.row("defect_complement", rep.defect_complement)
    em.row("tail_estimate", rep.tail_estimate)
    em.row("decay_exponent", rep.decay_exponent if rep.decay_exponent is not None
           else "n/a")
    em.row("defect_with_tail", rep.defect_with_tail)
    em.row("verdict", "parseval holds within tail" if
           min(rep.defect_complement, rep.defect_with_tail) < 1e-3 else
           "parseval defect detected")
    em.emit()
    return 0


def _cmd_fourier(args, tol):
    from .fourier import fourier_transform
    sysm = _resolve_system(args.system)
    f = load_input_function(args.f, sysm)
    s_grid = _parse_grid(args.s_grid)
    res = fourier_transform(sysm, f, s_grid, tol)
    em = _Emitter(args.out, args.format, tol)
    em.comment(f"transform on {len(s_grid)} points, err_est={res.err_est:.3e}")
    em.header("s", "component", "re", "im")
    for k, s in enumerate(res.s_grid):
        for j in range(res.values.shape[1]):
            em.row(float(s), j, float(res.values[k, j].real),
                   float(res.values[k, j].imag))
    em.emit()
    return 0


def _cmd_mulmin(args, tol):
    from .fourier import mul_tmin_basis
    sysm = _resolve_system(args.system)
    basis = mul_tmin_basis(sysm, args.n_max, tol)
    em = _Emitter(args.out, args.format, tol)
    em.comment(f"multivalued-part candidates: {len(basis)}")
    em.header("index", "piece_left", "piece_right", "shape_index",
              "weight_null_residual", "flow_residual")
    for k, cert in enumerate(basis.certificates):
        em.row(k, float(cert.piece[0]), float(cert.piece[1]), cert.shape_index,
               float(cert.weight_null_residual), float(cert.flow_residual))
    em.emit()
    return 0


def _cmd_resolvent_check(args, tol):
    from .resolvent import resolvent_crosscheck
    sysm = _resolve_system(args.system)
    tau = load_pair(args.tau)
    lam = _parse_complex(args.lam)
    f = load_input_function(args.f, sysm)
    rep = resolvent_crosscheck(sysm, tau, lam, f, tol)
    em = _Emitter(args.out, args.format, tol)
    em.header("field", "value")
    em.row("lambda_re", float(lam.real))
    em.row("lambda_im", float(lam.imag))
    em.row("defect", rep.defect)
    em.row("ode_residual_integral", rep.ode_residual_integral)
    em.row("ode_residual_bvp", rep.ode_residual_bvp)
    em.row("boundary_residual_bvp", rep.boundary_residual_bvp)
    em.emit()
    return 0


def _cmd_selftest(args, tol):
    from .selftest import run_selftest
    report = run_selftest(tol)
    text = report.to_text()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        _sys.stdout.write(text)
    return 0 if report.passed else 3


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="symspectra",
        description="Weyl functions, characteristic matrices and "
                    "(pseudo)spectral functions of regular symmetric systems")
    sub = parser.add_subparsers(dest="command")

    def add(name, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.add_argument("--out", default=None, help="output path (default stdout)")
        p.add_argument("--format", choices=("text", "csv"), default="text")
        for tname in ("sym", "psd", "quad", "ode", "eig", "adm", "green"):
            p.add_argument(f"--tol-{tname}", type=float, default=None,
                           dest=f"tol_{tname}")
        return p

    p = add("describe", help="system summary, validation and definiteness")
    p.add_argument("--system", required=True)
    p = add("propagate", help="fundamental solution at one point")
    p.add_argument("--system", required=True)
    p.add_argument("--lambda", required=True, dest="lam", metavar="RE,IM")
    p.add_argument("--t", type=float, default=None)
    p = add("weyl", help="Weyl matrix on a lambda grid")
    p.add_argument("--system", required=True)
    p.add_argument("--lambda-grid", required=True, dest="lambda_grid",
                   metavar="RE0:RE1:N@IM")
    p = add("charmatrix", help="characteristic matrix of a boundary pair")
    p.add_argument("--system", required=True)
    p.add_argument("--tau", required=True)
    p.add_argument("--lambda", required=True, dest="lam", metavar="RE,IM")
    p = add("eigen", help="eigenvalues of a self-adjoint boundary condition")
    p.add_argument("--system", required=True)
    p.add_argument("--tau", required=True)
    p.add_argument("--window", required=True, metavar="MIN,MAX")
    p = add("spectral", help="jump/increment tables of the induced distribution")
    p.add_argument("--system", required=True)
    p.add_argument("--tau", required=True)
    p.add_argument("--window", required=True, metavar="MIN,MAX")
    p.add_argument("--eps-seq", default=None, dest="eps_seq")
    p = add("parseval", help="norm bookkeeping of the transform")
    p.add_argument("--system", required=True)
    p.add_argument("--tau", required=True)
    p.add_argument("--window", required=True, metavar="MIN,MAX")
    p.add_argument("--f", required=True)
    p = add("fourier", help="transform of an input function on a grid")
    p.add_argument("--system", required=True)
    p.add_argument("--f", required=True)
    p.add_argument("--s-grid", required=True, dest="s_grid",
                   metavar="S0:S1:N")
    p = add("mulmin", help="multivalued-part candidates of the minimal relation")
    p.add_argument("--system", required=True)
    p.add_argument("--n-max", type=int, default=8, dest="n_max")
    p = add("resolvent-check", help="integral kernel vs boundary problem")
    p.add_argument("--system", required=True)
    p.add_argument("--tau", required=True)
    p.add_argument("--lambda", required=True, dest="lam", metavar="RE,IM")
    p.add_argument("--f", required=True)
    add("selftest", help="run the built-in oracle suite")
    return parser


_DISPATCH = {
    "describe": _cmd_describe,
    "propagate": _cmd_propagate,
    "weyl": _cmd_weyl,
    "charmatrix": _cmd_charmatrix,
    "eigen": _cmd_eigen,
    "spectral": _cmd_spectral,
    "parseval": _cmd_parseval,
    "fourier": _cmd_fourier,
    "mulmin": _cmd_mulmin,
    "resolvent-check": _cmd_resolvent_check,
    "selftest": _cmd_selftest,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return 2
    try:
        handler = _DISPATCH.get(args.command)
        if handler is None:
            raise UnknownCommand(args.command)
        tol = _tol_from_args(args)
        return handler(args, tol)
    except (ParseError, UnknownCommand, ValueError) as exc:
        _sys.stderr.write(f"error: {exc}\n")
        return 2
    except SymSpectraError as exc:
        _sys.stderr.write(f"numerical failure: {exc}\n")
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
