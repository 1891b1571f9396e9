"""Regular symmetric systems on a finite interval.

A system couples a block structure (see :mod:`symspectra.blockspace`) with
piecewise-polynomial coefficients: a Hermitian-valued potential and a
positive-semidefinite weight.  The weighted inner product is a composite
Gauss-Legendre approximation of the integral of (weight * f, g); the
definiteness probe samples invertibility of the weight.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicSpline

from .blockspace import BlockDims, ProjectorSet, canonical_structure_matrix, projectors
from .config import DEFAULT_TOLS, Tolerances
from .errors import MalformedCoefficients, QuadratureFailure
from .quadrature import QuadGrid

_MAX_REFINEMENTS = 7


class PiecewiseMatrixPoly:
    """Piecewise matrix (or vector) polynomial in t with complex coefficients.

    ``coeffs[i]`` holds the coefficient stack of piece i in ascending powers
    of t (global variable), shape (deg_i + 1, n, n) for matrix values or
    (deg_i + 1, n) for vector values.  Pieces are contiguous, left-closed;
    the final piece includes its right endpoint.
    """

    MAX_DEGREE = 6

    def __init__(self, breakpoints, coeffs):
        breakpoints = np.asarray(breakpoints, dtype=float)
        if breakpoints.ndim != 1 or len(breakpoints) < 2:
            raise MalformedCoefficients("need at least two breakpoints")
        if np.any(np.diff(breakpoints) <= 0):
            raise MalformedCoefficients("breakpoints must be strictly increasing")
        if len(coeffs) != len(breakpoints) - 1:
            raise MalformedCoefficients(
                f"{len(coeffs)} pieces for {len(breakpoints) - 1} intervals")
        coeffs = [np.asarray(c, dtype=complex) for c in coeffs]
        shape = coeffs[0].shape[1:]
        for i, c in enumerate(coeffs):
            if c.ndim < 2 or c.shape[1:] != shape:
                raise MalformedCoefficients(f"piece {i} has inconsistent value shape")
            if c.shape[0] - 1 > self.MAX_DEGREE:
                raise MalformedCoefficients(
                    f"piece {i} exceeds max polynomial degree {self.MAX_DEGREE}")
        self.breakpoints = breakpoints
        self.coeffs = coeffs
        self.value_shape = shape

    @classmethod
    def constant(cls, value, interval) -> "PiecewiseMatrixPoly":
        value = np.asarray(value, dtype=complex)
        return cls([interval[0], interval[1]], [value[None, ...]])

    def piece_index(self, t: float) -> int:
        i = int(np.searchsorted(self.breakpoints, t, side="right") - 1)
        return min(max(i, 0), len(self.coeffs) - 1)

    def __call__(self, ts):
        """Evaluate at scalar or 1-D array ts; returns (..., *value_shape)."""
        scalar = np.isscalar(ts) or np.asarray(ts).ndim == 0
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        out = np.zeros((len(ts), *self.value_shape), dtype=complex)
        idx = np.clip(np.searchsorted(self.breakpoints, ts, side="right") - 1,
                      0, len(self.coeffs) - 1)
        for i, c in enumerate(self.coeffs):
            mask = idx == i
            if not mask.any():
                continue
            tt = ts[mask]
            acc = np.broadcast_to(c[-1], (len(tt), *self.value_shape)).copy()
            for k in range(c.shape[0] - 2, -1, -1):
                acc = acc * tt.reshape(-1, *([1] * len(self.value_shape))) + c[k]
            out[mask] = acc
        return out[0] if scalar else out

    def covers(self, a: float, b: float, tol: float = 1e-12) -> bool:
        return self.breakpoints[0] <= a + tol and self.breakpoints[-1] >= b - tol


@dataclass
class SymmetricSystem:
    """Regular first-order symmetric system on a finite interval.

    Treat as immutable after :func:`validate_system`; all operations are pure.
    """

    dims: BlockDims
    interval: tuple
    coeff_b: PiecewiseMatrixPoly
    coeff_delta: PiecewiseMatrixPoly
    label: str = ""
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        a, b = float(self.interval[0]), float(self.interval[1])
        if not (np.isfinite(a) and np.isfinite(b) and a < b):
            raise ValueError(f"interval must be finite with a < b, got {self.interval}")
        self.interval = (a, b)
        n = self.dims.dim_total
        for name, coeff in (("coeff_b", self.coeff_b), ("coeff_delta", self.coeff_delta)):
            if coeff.value_shape != (n, n):
                raise MalformedCoefficients(f"{name} must be {n}x{n}-valued")

    @property
    def structure_matrix(self) -> np.ndarray:
        if "j" not in self._cache:
            self._cache["j"] = canonical_structure_matrix(self.dims)
        return self._cache["j"]

    @property
    def projector_set(self) -> ProjectorSet:
        if "proj" not in self._cache:
            self._cache["proj"] = projectors(self.dims)
        return self._cache["proj"]

    @property
    def breakpoints(self) -> np.ndarray:
        return np.unique(np.concatenate([self.coeff_b.breakpoints,
                                         self.coeff_delta.breakpoints]))

    def default_grid(self, max_freq: float = 0.0) -> QuadGrid:
        key = ("grid", round(float(max_freq), 6))
        if key not in self._cache:
            self._cache[key] = QuadGrid.build(
                self.interval[0], self.interval[1], self.breakpoints,
                subdivisions=4, order=12, max_freq=max_freq)
        return self._cache[key]


class GridFunction:
    """Representative of a weighted-L2 element: samples plus optional closed form.

    When ``fn`` is given it is the authoritative evaluation (vectorised,
    t-array -> (len(t), n)); otherwise values are interpolated by cubic
    splines component-wise.  ``breakpoints`` lists extra discontinuity points
    the quadrature should split at.
    """

    def __init__(self, nodes, values, fn: Optional[Callable] = None,
                 breakpoints=(), label: str = ""):
        self.nodes = np.asarray(nodes, dtype=float)
        self.values = np.asarray(values, dtype=complex)
        if self.nodes.ndim != 1 or len(self.nodes) < 2:
            raise ValueError("need at least two nodes")
        if np.any(np.diff(self.nodes) <= 0):
            raise ValueError("nodes must be strictly increasing")
        if self.values.shape[0] != len(self.nodes):
            raise ValueError("values/nodes length mismatch")
        self.fn = fn
        self.breakpoints = tuple(float(t) for t in breakpoints)
        self.label = label
        self._spline = None

    @classmethod
    def from_callable(cls, sys: SymmetricSystem, fn, breakpoints=(), label=""):
        grid = sys.default_grid()
        vec = _vectorize_fn(fn, sys.dims.dim_total, grid.nodes[:2])
        return cls(grid.nodes, vec(grid.nodes), fn=vec,
                   breakpoints=breakpoints, label=label)

    @classmethod
    def from_constant(cls, sys: SymmetricSystem, vector, label=""):
        vector = np.asarray(vector, dtype=complex)
        return cls.from_callable(
            sys, lambda ts: np.broadcast_to(vector, (len(ts), len(vector))).copy(),
            label=label)

    def eval(self, ts) -> np.ndarray:
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        if self.fn is not None:
            return self.fn(ts)
        if self._spline is None:
            self._spline = CubicSpline(self.nodes, self.values, axis=0)
        return self._spline(ts)

    def values_on(self, grid: QuadGrid) -> np.ndarray:
        if self.fn is None and len(grid.nodes) == len(self.nodes) \
                and np.allclose(grid.nodes, self.nodes):
            return self.values
        return self.eval(grid.nodes)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        if self.fn is not None and other.fn is not None:
            fn = lambda ts: self.fn(ts) - other.fn(ts)
            return GridFunction(self.nodes, fn(self.nodes), fn=fn,
                                breakpoints=self.breakpoints + other.breakpoints)
        vals = other.eval(self.nodes)
        return GridFunction(self.nodes, self.values - vals,
                            breakpoints=self.breakpoints + other.breakpoints)


def _vectorize_fn(fn, dim, probe_ts):
    """Wrap fn so it accepts a 1-D t array and returns (len(t), dim)."""
    try:
        probe = np.asarray(fn(np.asarray(probe_ts, dtype=float)), dtype=complex)
        vectorised = probe.shape == (len(probe_ts), dim)
    except Exception:
        vectorised = False

    if vectorised:
        def vec(ts):
            ts = np.atleast_1d(np.asarray(ts, dtype=float))
            return np.asarray(fn(ts), dtype=complex)
        return vec

    def vec_scalar(ts):
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        return np.array([np.asarray(fn(float(t)), dtype=complex) for t in ts])

    return vec_scalar


# ---------------------------------------------------------------------------
# Validation, inner product, definiteness
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    herm_defect: float
    min_weight_eig: float
    offending_piece: Optional[tuple] = None
    message: str = ""


def validate_system(sys: SymmetricSystem, tol: Tolerances = DEFAULT_TOLS,
                    samples_per_piece: int = 33) -> ValidationReport:
    """Check Hermiticity of the potential and positivity of the weight.

    Samples each coefficient piece on a uniform grid; reports the worst
    Hermiticity defect and the most negative weight eigenvalue, and locates
    the first offending piece.
    """
    a, b = sys.interval
    for name, coeff in (("coeff_b", sys.coeff_b), ("coeff_delta", sys.coeff_delta)):
        if not coeff.covers(a, b):
            raise MalformedCoefficients(f"{name} does not cover [{a}, {b}]")
    herm_defect = 0.0
    min_eig = np.inf
    offending = None
    for coeff, is_weight in ((sys.coeff_b, False), (sys.coeff_delta, True)):
        bps = coeff.breakpoints
        for i in range(len(bps) - 1):
            left, right = max(bps[i], a), min(bps[i + 1], b)
            if right <= left:
                continue
            ts = np.linspace(left, right, samples_per_piece)
            vals = coeff(ts)
            defect = float(np.max(np.abs(vals - vals.conj().transpose(0, 2, 1))))
            if is_weight:
                sym = 0.5 * (vals + vals.conj().transpose(0, 2, 1))
                eigs = np.linalg.eigvalsh(sym)
                piece_min = float(eigs.min())
                if piece_min < min_eig:
                    min_eig = piece_min
                bad = defect > tol.sym or piece_min < -tol.psd
            else:
                bad = defect > tol.sym
                if defect > herm_defect:
                    herm_defect = defect
            if is_weight and defect > herm_defect:
                herm_defect = defect
            if bad and offending is None:
                offending = (float(left), float(right))
    passed = herm_defect <= tol.sym and min_eig >= -tol.psd
    msg = "" if passed else f"coefficient check failed on piece {offending}"
    return ValidationReport(passed=passed, herm_defect=herm_defect,
                            min_weight_eig=float(min_eig),
                            offending_piece=offending, message=msg)


def _merged_grid(sys: SymmetricSystem, extra_breaks, max_freq=0.0) -> QuadGrid:
    breaks = set(float(t) for t in sys.breakpoints)
    breaks.update(float(t) for t in extra_breaks)
    return QuadGrid.build(sys.interval[0], sys.interval[1], sorted(breaks),
                          subdivisions=4, order=12, max_freq=max_freq)


def weighted_inner_product(sys: SymmetricSystem, f: GridFunction, g: GridFunction,
                           tol: Tolerances = DEFAULT_TOLS,
                           grid: Optional[QuadGrid] = None) -> complex:
    """Weighted inner product: integral of (weight(t) f(t), g(t)) over [a, b].

    Refines the composite Gauss-Legendre grid until doubling changes the
    result by less than the tolerance; raises QuadratureFailure otherwise.
    The second argument is the conjugated one.
    """
    if grid is None:
        grid = _merged_grid(sys, f.breakpoints + g.breakpoints)
    value = _ip_on_grid(sys, f, g, grid)
    for _ in range(_MAX_REFINEMENTS):
        fine = grid.refine()
        value_fine = _ip_on_grid(sys, f, g, fine)
        err = abs(value_fine - value)
        if err <= tol.quad * (1.0 + abs(value_fine)):
            return value_fine
        grid, value = fine, value_fine
    raise QuadratureFailure(
        f"inner product did not converge: last change {err:.3e}")


def _ip_on_grid(sys, f, g, grid):
    fv = f.values_on(grid)
    gv = g.values_on(grid)
    dv = sys.coeff_delta(grid.nodes)
    integrand = np.einsum("tij,tj,ti->t", dv, fv, gv.conj())
    return complex(np.dot(grid.weights, integrand))


def weighted_norm(sys: SymmetricSystem, f: GridFunction,
                  tol: Tolerances = DEFAULT_TOLS) -> float:
    val = weighted_inner_product(sys, f, f, tol=tol)
    return float(np.sqrt(max(val.real, 0.0)))


@dataclass(frozen=True)
class DefinitenessReport:
    absolutely_definite: bool
    invertible_measure: float
    definiteness: str          # "certified" | "undetermined"
    invertible_piece: Optional[tuple] = None


def probe_definiteness(sys: SymmetricSystem, tol: Tolerances = DEFAULT_TOLS,
                       samples_per_piece: int = 65) -> DefinitenessReport:
    """Sample where the weight is invertible.

    Estimates the measure of the invertibility set; when the weight is
    invertible on an entire sampled subinterval, definiteness follows from
    uniqueness of the homogeneous solutions and is reported as "certified".
    Otherwise the probe reports "undetermined" rather than guessing.
    """
    a, b = sys.interval
    coeff = sys.coeff_delta
    measure = 0.0
    certified_piece = None
    for i, stack in enumerate(coeff.coeffs):
        left = max(float(coeff.breakpoints[i]), a)
        right = min(float(coeff.breakpoints[i + 1]), b)
        if right <= left:
            continue
        ts = np.linspace(left, right, samples_per_piece)
        acc = np.broadcast_to(stack[-1], (len(ts),) + stack.shape[1:]).copy()
        for k in range(stack.shape[0] - 2, -1, -1):
            acc = acc * ts[:, None, None] + stack[k]
        sym = 0.5 * (acc + acc.conj().transpose(0, 2, 1))
        mins = np.linalg.eigvalsh(sym)[:, 0]
        invertible = mins > tol.psd
        frac = float(np.count_nonzero(invertible)) / len(ts)
        measure += (right - left) * frac
        if invertible.all() and certified_piece is None:
            certified_piece = (left, right)
    return DefinitenessReport(
        absolutely_definite=bool(measure > 0.0),
        invertible_measure=float(measure),
        definiteness="certified" if certified_piece is not None else "undetermined",
        invertible_piece=certified_piece,
    )
