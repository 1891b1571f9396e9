"""JSON schemas for system, boundary-pair and input-function files.

All matrices are given as {"re": [[...]], "im": [[...]]} with "im" optional;
polynomials are lists of such matrices in ascending powers; piecewise objects
pair a breakpoint list with one polynomial per interval.  Parsers reject
unknown fields and report the offending path.
"""

from __future__ import annotations

import json

import numpy as np

from .blockspace import BlockDims
from .boundary import BoundaryPair
from .errors import ParseError
from .system import GridFunction, PiecewiseMatrixPoly, SymmetricSystem


def _check_keys(obj: dict, allowed, required, path: str):
    if not isinstance(obj, dict):
        raise ParseError(f"{path}: expected an object")
    unknown = set(obj) - set(allowed)
    if unknown:
        raise ParseError(f"{path}: unknown field(s) {sorted(unknown)}")
    missing = set(required) - set(obj)
    if missing:
        raise ParseError(f"{path}: missing field(s) {sorted(missing)}")


def _parse_matrix(obj, path: str) -> np.ndarray:
    _check_keys(obj, ("re", "im"), ("re",), path)
    try:
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{path}: non-numeric entries ({exc})") from None
    if re.shape != im.shape:
        raise ParseError(f"{path}: re/im shapes differ {re.shape} vs {im.shape}")
    return re + 1j * im


def _parse_poly(obj, path: str) -> np.ndarray:
    if not isinstance(obj, list) or not obj:
        raise ParseError(f"{path}: expected a non-empty list of coefficient matrices")
    mats = [_parse_matrix(m, f"{path}[{k}]") for k, m in enumerate(obj)]
    shapes = {m.shape for m in mats}
    if len(shapes) != 1:
        raise ParseError(f"{path}: coefficient shapes differ: {sorted(shapes)}")
    return np.array(mats)


def _parse_piecewise(obj, path: str) -> PiecewiseMatrixPoly:
    _check_keys(obj, ("breakpoints", "pieces"), ("breakpoints", "pieces"), path)
    if not isinstance(obj["pieces"], list):
        raise ParseError(f"{path}.pieces: expected a list")
    polys = [_parse_poly(p, f"{path}.pieces[{k}]")
             for k, p in enumerate(obj["pieces"])]
    try:
        return PiecewiseMatrixPoly(obj["breakpoints"], polys)
    except Exception as exc:
        raise ParseError(f"{path}: {exc}") from None


def load_system(path_or_dict) -> SymmetricSystem:
    """Parse a system definition file (or an already-loaded dict)."""
    data = _load(path_or_dict)
    _check_keys(data, ("dims", "interval", "potential", "weight", "label"),
                ("dims", "interval", "potential", "weight"), "system")
    _check_keys(data["dims"], ("h", "hhat"), ("h",), "system.dims")
    try:
        dims = BlockDims(int(data["dims"]["h"]), int(data["dims"].get("hhat", 0)))
    except (TypeError, ValueError) as exc:
        raise ParseError(f"system.dims: {exc}") from None
    interval = data["interval"]
    if not (isinstance(interval, list) and len(interval) == 2):
        raise ParseError("system.interval: expected [a, b]")
    pot = _parse_piecewise(data["potential"], "system.potential")
    wgt = _parse_piecewise(data["weight"], "system.weight")
    try:
        return SymmetricSystem(dims=dims, interval=tuple(interval),
                               coeff_b=pot, coeff_delta=wgt,
                               label=str(data.get("label", "")))
    except Exception as exc:
        raise ParseError(f"system: {exc}") from None


def dump_system(sys: SymmetricSystem) -> dict:
    return {
        "dims": {"h": sys.dims.dim_h, "hhat": sys.dims.dim_hhat},
        "interval": [sys.interval[0], sys.interval[1]],
        "potential": _dump_piecewise(sys.coeff_b),
        "weight": _dump_piecewise(sys.coeff_delta),
        "label": sys.label,
    }


def load_pair(path_or_dict) -> BoundaryPair:
    """Parse a boundary-pair file (kind "constant" or "poly")."""
    data = _load(path_or_dict)
    _check_keys(data, ("kind", "c0", "c1", "label"), ("kind", "c0", "c1"), "tau")
    kind = data["kind"]
    if kind not in ("constant", "poly"):
        raise ParseError(f"tau.kind: expected 'constant' or 'poly', got {kind!r}")
    c0 = _parse_poly(data["c0"], "tau.c0")
    c1 = _parse_poly(data["c1"], "tau.c1")
    if kind == "constant" and (len(c0) != 1 or len(c1) != 1):
        raise ParseError("tau: constant pairs take exactly one coefficient each")
    if c0.shape[1] != c0.shape[2]:
        raise ParseError("tau.c0: coefficients must be square")
    try:
        return BoundaryPair(c0, c1, label=str(data.get("label", "")))
    except Exception as exc:
        raise ParseError(f"tau: {exc}") from None


def dump_pair(tau: BoundaryPair) -> dict:
    kind = "constant" if tau.is_constant else "poly"
    return {"kind": kind,
            "c0": [_dump_matrix(m) for m in tau.c0],
            "c1": [_dump_matrix(m) for m in tau.c1],
            "label": tau.label}


def load_input_function(path_or_dict, sys: SymmetricSystem) -> GridFunction:
    """Parse a piecewise-polynomial vector input (right-hand side file)."""
    data = _load(path_or_dict)
    _check_keys(data, ("breakpoints", "pieces", "label"),
                ("breakpoints", "pieces"), "f")
    pieces = []
    for k, piece in enumerate(data["pieces"]):
        coeffs = []
        for m, coeff in enumerate(piece):
            _check_keys(coeff, ("re", "im"), ("re",), f"f.pieces[{k}][{m}]")
            re = np.asarray(coeff["re"], dtype=float)
            im = np.asarray(coeff.get("im", np.zeros_like(re)), dtype=float)
            if re.ndim != 1 or re.shape != im.shape:
                raise ParseError(f"f.pieces[{k}][{m}]: expected 1-D re/im vectors")
            coeffs.append(re + 1j * im)
        pieces.append(np.array(coeffs))
    try:
        poly = PiecewiseMatrixPoly(data["breakpoints"], pieces)
    except Exception as exc:
        raise ParseError(f"f: {exc}") from None
    if poly.value_shape != (sys.dims.dim_total,):
        raise ParseError(f"f: vector dimension {poly.value_shape} does not match "
                         f"system dimension {sys.dims.dim_total}")
    a, b = sys.interval
    if not poly.covers(a, b):
        raise ParseError(f"f: pieces do not cover [{a}, {b}]")
    interior = tuple(t for t in poly.breakpoints[1:-1])
    return GridFunction.from_callable(sys, lambda ts: poly(ts),
                                      breakpoints=interior,
                                      label=str(data.get("label", "f")))


def _dump_matrix(m: np.ndarray) -> dict:
    out = {"re": np.real(m).tolist()}
    if np.any(np.imag(m) != 0.0):
        out["im"] = np.imag(m).tolist()
    return out


def _dump_piecewise(poly: PiecewiseMatrixPoly) -> dict:
    return {"breakpoints": [float(t) for t in poly.breakpoints],
            "pieces": [[_dump_matrix(m) for m in stack] for stack in poly.coeffs]}


def _load(path_or_dict):
    if isinstance(path_or_dict, dict):
        return path_or_dict
    try:
        with open(path_or_dict, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read {path_or_dict}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path_or_dict}: invalid JSON at line {exc.lineno}, "
                         f"column {exc.colno}") from None
