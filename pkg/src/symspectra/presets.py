"""Built-in example systems with closed-form reference data.

FREE1   free Hamiltonian-type system on [0, pi]: zero potential, identity
        weight.  The fundamental solution is the rotation block
        [[cos(lam t), sin(lam t)], [-sin(lam t), cos(lam t)]], obtained by
        integrating y0' = lam*y1, y1' = -lam*y0 from the identity.  Its block
        Weyl matrix is [[tan(pi lam), sec(pi lam)], [sec(pi lam),
        tan(pi lam)]] (impose bottom value -1 at the left end and vanishing
        top value at the right end for the first solution, and top value 1 at
        the right end for the second).

DEG1    degenerate-weight system on [0, 2]: zero potential, weight
        diag(0, 1) on [0, 1) and the identity on [1, 2].  On the degenerate
        piece the fundamental solution is [[1, lam t], [0, 1]]; past it the
        rotation block continues.  The upper-left Weyl entry is
        lam + tan(lam), the off-diagonal entries sec(lam) and the lower-right
        entry tan(lam).

SMOKE3  three-block smoke system on [0, 1] (middle block nontrivial): zero
        potential, identity weight.  The outer blocks rotate while the middle
        block picks up the phase exp(-i lam t).
"""

from __future__ import annotations

import numpy as np

from .blockspace import BlockDims
from .boundary import BoundaryPair
from .system import PiecewiseMatrixPoly, SymmetricSystem


def free1() -> SymmetricSystem:
    iv = (0.0, float(np.pi))
    return SymmetricSystem(
        dims=BlockDims(1, 0), interval=iv,
        coeff_b=PiecewiseMatrixPoly.constant(np.zeros((2, 2)), iv),
        coeff_delta=PiecewiseMatrixPoly.constant(np.eye(2), iv),
        label="FREE1")


def deg1() -> SymmetricSystem:
    iv = (0.0, 2.0)
    weight = PiecewiseMatrixPoly(
        [0.0, 1.0, 2.0],
        [np.diag([0.0, 1.0])[None], np.eye(2)[None]])
    return SymmetricSystem(
        dims=BlockDims(1, 0), interval=iv,
        coeff_b=PiecewiseMatrixPoly.constant(np.zeros((2, 2)), iv),
        coeff_delta=weight, label="DEG1")


def smoke3() -> SymmetricSystem:
    iv = (0.0, 1.0)
    return SymmetricSystem(
        dims=BlockDims(1, 1), interval=iv,
        coeff_b=PiecewiseMatrixPoly.constant(np.zeros((3, 3)), iv),
        coeff_delta=PiecewiseMatrixPoly.constant(np.eye(3), iv),
        label="SMOKE3")


_BUILTINS = {"FREE1": free1, "DEG1": deg1, "SMOKE3": smoke3}


def builtin(name: str) -> SymmetricSystem:
    key = name.upper()
    if key not in _BUILTINS:
        raise KeyError(f"unknown builtin system {name!r}; "
                       f"have {sorted(_BUILTINS)}")
    return _BUILTINS[key]()


def builtin_names():
    return sorted(_BUILTINS)


# ---------------------------------------------------------------------------
# Standard boundary pairs
# ---------------------------------------------------------------------------

def pair_identity_zero(n: int) -> BoundaryPair:
    """(I, 0): pins the first boundary map to zero."""
    return BoundaryPair.constant(np.eye(n), np.zeros((n, n)), label="(I,0)")


def pair_zero_identity(n: int) -> BoundaryPair:
    """(0, I): pins the second boundary map to zero."""
    return BoundaryPair.constant(np.zeros((n, n)), np.eye(n), label="(0,I)")


def pair_mixed(n: int) -> BoundaryPair:
    """(diag(1,0,...), diag(0,...,1)): splits the condition across the maps."""
    c0 = np.zeros((n, n))
    c1 = np.zeros((n, n))
    half = n // 2
    c0[:half, :half] = np.eye(half)
    c1[half:, half:] = np.eye(n - half)
    return BoundaryPair.constant(c0, c1, label="(diag(1,0),diag(0,1))")


# ---------------------------------------------------------------------------
# Closed-form reference data
# ---------------------------------------------------------------------------

def free1_fundamental(ts, lam) -> np.ndarray:
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    c = np.cos(lam * ts)
    s = np.sin(lam * ts)
    out = np.empty((len(ts), 2, 2), dtype=complex)
    out[:, 0, 0] = c
    out[:, 0, 1] = s
    out[:, 1, 0] = -s
    out[:, 1, 1] = c
    return out


def free1_weyl_matrix(lam) -> np.ndarray:
    t = np.tan(np.pi * lam)
    s = 1.0 / np.cos(np.pi * lam)
    return np.array([[t, s], [s, t]], dtype=complex)


def free1_char_matrix_mixed(lam) -> np.ndarray:
    """Characteristic matrix of the mixed pair: upper-left -cot(pi lam)."""
    return np.array([[-1.0 / np.tan(np.pi * lam), -0.5], [-0.5, 0.0]],
                    dtype=complex)


def free1_eigenvalues_identity_zero(window) -> np.ndarray:
    """Half-integers inside the window (vanishing cosine at the right end)."""
    lo, hi = window
    k = np.arange(np.ceil(lo - 0.5), np.floor(hi - 0.5) + 1)
    return k + 0.5


def free1_eigenvalues_mixed(window) -> np.ndarray:
    """Integers inside the window (vanishing sine at the right end)."""
    lo, hi = window
    return np.arange(np.ceil(lo), np.floor(hi) + 1)


def free1_jump_matrix() -> np.ndarray:
    """Every FREE1 point mass equals e0 e0* / pi (eigenfunction norm pi)."""
    out = np.zeros((2, 2))
    out[0, 0] = 1.0 / np.pi
    return out


def deg1_fundamental_left(ts, lam) -> np.ndarray:
    """Fundamental solution on the degenerate piece [0, 1]."""
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    out = np.zeros((len(ts), 2, 2), dtype=complex)
    out[:, 0, 0] = 1.0
    out[:, 0, 1] = lam * ts
    out[:, 1, 1] = 1.0
    return out


def deg1_weyl_matrix(lam) -> np.ndarray:
    t = np.tan(lam)
    s = 1.0 / np.cos(lam)
    return np.array([[lam + t, s], [s, t]], dtype=complex)


def deg1_eigen_equation_zero_identity(x):
    """Vanishes exactly at the spectrum of the (0, I) condition: cot x = x."""
    return np.cos(x) - x * np.sin(x)


def smoke3_fundamental(ts, lam) -> np.ndarray:
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    out = np.zeros((len(ts), 3, 3), dtype=complex)
    out[:, 0, 0] = np.cos(lam * ts)
    out[:, 0, 2] = np.sin(lam * ts)
    out[:, 2, 0] = -np.sin(lam * ts)
    out[:, 2, 2] = np.cos(lam * ts)
    out[:, 1, 1] = np.exp(-1j * lam * ts)
    return out
