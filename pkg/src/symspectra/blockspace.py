"""Block Hilbert-space structure shared by every module.

The state space is a direct sum of three blocks (top, middle, bottom) with the
middle block possibly trivial.  The canonical ordering (top, middle, bottom)
is fixed once and never permuted; every matrix in the package is stored in
this basis.  The top and bottom blocks have equal dimension; together the top
and middle blocks form the "upper half" used by boundary maps and Weyl data.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class BlockDims:
    """Block dimensions (dim_h, dim_hhat) of the decomposition H + Hhat + H."""

    dim_h: int
    dim_hhat: int = 0

    def __post_init__(self):
        if not (isinstance(self.dim_h, (int, np.integer)) and self.dim_h >= 1):
            raise ValueError(f"dim_h must be a positive integer, got {self.dim_h!r}")
        if not (isinstance(self.dim_hhat, (int, np.integer)) and self.dim_hhat >= 0):
            raise ValueError(f"dim_hhat must be a non-negative integer, got {self.dim_hhat!r}")

    @property
    def dim_h0(self) -> int:
        """Dimension of the upper half H + Hhat."""
        return self.dim_h + self.dim_hhat

    @property
    def dim_total(self) -> int:
        """Dimension of the full space H + Hhat + H."""
        return 2 * self.dim_h + self.dim_hhat


def canonical_structure_matrix(dims: BlockDims) -> np.ndarray:
    """Skew-Hermitian unitary structure matrix in the canonical block basis.

    Blocks: zero / zero / -I on the first row, zero / i*I / zero on the
    second, I / zero / zero on the third.  For a trivial middle block this is
    the standard 2x2-block symplectic matrix.
    """
    h, hh = dims.dim_h, dims.dim_hhat
    n = dims.dim_total
    j = np.zeros((n, n), dtype=complex)
    j[:h, h + hh:] = -np.eye(h)
    j[h:h + hh, h:h + hh] = 1j * np.eye(hh)
    j[h + hh:, :h] = np.eye(h)
    return j


@dataclass(frozen=True)
class ProjectorSet:
    """Orthoprojectors, block extractions and embeddings for one BlockDims.

    p0/phat/p1 are orthoprojectors in the full space onto the three blocks.
    e_top/e_hat/e_bot/e_h0 extract block coordinates (rectangular maps);
    p_h0_h, i_h_h0 and p_hhat_in_h0 act between the upper half and its parts.
    """

    dims: BlockDims
    p0: np.ndarray
    phat: np.ndarray
    p1: np.ndarray
    e_top: np.ndarray       # full -> H (first block coordinates)
    e_hat: np.ndarray       # full -> Hhat
    e_bot: np.ndarray       # full -> H (third block coordinates)
    e_h0: np.ndarray        # full -> upper half
    p_h0_h: np.ndarray      # upper half -> H
    p_h0_hhat: np.ndarray   # upper half -> Hhat
    i_h_h0: np.ndarray      # H -> upper half embedding
    p_hhat_in_h0: np.ndarray  # orthoprojector in the upper half onto Hhat


def projectors(dims: BlockDims) -> ProjectorSet:
    """All canonical projectors/embeddings consistent with the block ordering."""
    h, hh = dims.dim_h, dims.dim_hhat
    n = dims.dim_total
    n0 = dims.dim_h0
    eye = np.eye(n, dtype=complex)
    e_top = eye[:h].copy()
    e_hat = eye[h:h + hh].copy()
    e_bot = eye[h + hh:].copy()
    e_h0 = eye[:n0].copy()
    eye0 = np.eye(n0, dtype=complex)
    p_h0_h = eye0[:h].copy()
    p_h0_hhat = eye0[h:].copy()
    return ProjectorSet(
        dims=dims,
        p0=e_top.conj().T @ e_top,
        phat=e_hat.conj().T @ e_hat,
        p1=e_bot.conj().T @ e_bot,
        e_top=e_top,
        e_hat=e_hat,
        e_bot=e_bot,
        e_h0=e_h0,
        p_h0_h=p_h0_h,
        p_h0_hhat=p_h0_hhat,
        i_h_h0=p_h0_h.conj().T.copy(),
        p_hhat_in_h0=p_h0_hhat.conj().T @ p_h0_hhat,
    )
