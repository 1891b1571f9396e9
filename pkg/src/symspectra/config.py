"""Tolerance profile and the thread-count cap.

All numerical operations accept an optional :class:`Tolerances`; the module
default ``DEFAULT_TOLS`` gives double-precision headroom at desk scale.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    sym: float = 1e-10          # Hermiticity defect of B on the sample grid
    psd: float = 1e-10          # min eigenvalue slack for the weight
    quad: float = 1e-10         # quadrature error target
    ode: float = 1e-10          # propagation local error target
    green: float = 1e-8         # boundary/Lagrange identity residual
    eig: float = 1e-10          # eigenvalue isolation width
    adm: float = 1e-6           # admissibility limits after extrapolation
    jump_psd: float = 1e-7      # PSD projection slack for extracted jumps
    membership: float = 1e-6    # maximal-relation membership residual
    cond_limit: float = 1e12    # condition number treated as singular

    def with_overrides(self, **kwargs) -> "Tolerances":
        kwargs = {k: v for k, v in kwargs.items() if v is not None}
        return replace(self, **kwargs) if kwargs else self


DEFAULT_TOLS = Tolerances()


def thread_count() -> int:
    """Parallelism cap from SYMSPECTRA_THREADS (default 1: serial, deterministic)."""
    raw = os.environ.get("SYMSPECTRA_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def pmap(fn, items):
    """Order-preserving map honouring the thread cap."""
    items = list(items)
    n = thread_count()
    if n <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=min(n, len(items))) as ex:
        return list(ex.map(fn, items))
