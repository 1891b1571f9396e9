"""Generalized resolvent: integral kernel form and boundary-problem form.

The integral form applies the kernel built from a characteristic matrix and
the sign-split structure term; forward and backward cumulative integrals on a
shared grid make each output evaluation O(1) after one pass.  The
boundary-problem form solves the same equation directly; agreement of the two
routes ties the characteristic matrix to the resolvent it represents.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .boundary import (BoundaryPair, MaximalPair, boundary_value_residual,
                       forcing_cumulative, membership_residual, solve_bvp,
                       _solution_gridfunction)
from .config import DEFAULT_TOLS, Tolerances
from .system import (GridFunction, SymmetricSystem, weighted_inner_product,
                     weighted_norm)
from .weyl import characteristic_matrix


def apply_resolvent_integral(sys: SymmetricSystem, omega, lam: complex,
                             f: GridFunction,
                             tol: Tolerances = DEFAULT_TOLS) -> GridFunction:
    """Apply the integral-kernel resolvent at non-real lambda.

    ``omega`` is the characteristic matrix at lambda (a matrix, or a callable
    lam -> matrix).  The kernel splits at the evaluation point; the split is
    realised through one cumulative integral of the transformed input.
    """
    if callable(omega):
        omega = omega(lam)
    omega = np.asarray(omega, dtype=complex)
    grid, cum = forcing_cumulative(sys, lam, f, tol)
    j_mat = sys.structure_matrix
    coeff = (omega + 0.5 * j_mat) @ cum.total
    return _solution_gridfunction(sys, lam, cum, coeff, tol,
                                  breakpoints=f.breakpoints,
                                  label=f"resolvent({lam})")


@dataclass(frozen=True)
class CrossCheckReport:
    lam: complex
    defect: float                 # normalised distance between the two routes
    ode_residual_integral: float
    ode_residual_bvp: float
    boundary_residual_bvp: float


def resolvent_crosscheck(sys: SymmetricSystem, tau: BoundaryPair, lam: complex,
                         f: GridFunction,
                         tol: Tolerances = DEFAULT_TOLS) -> CrossCheckReport:
    """Compare the kernel route (with the pair's characteristic matrix) against
    the direct boundary-problem route for the same data."""
    omega = characteristic_matrix(sys, tau, lam, tol)
    y_int = apply_resolvent_integral(sys, omega, lam, f, tol)
    y_bvp = solve_bvp(sys, tau, lam, f, tol)
    diff = y_int - y_bvp
    denom = weighted_norm(sys, f, tol) + 1.0
    defect = weighted_norm(sys, diff, tol) / denom
    res_int = membership_residual(sys, MaximalPair(y=y_int, f=_shifted(sys, f, y_int, lam), lam=lam), tol)
    res_bvp = membership_residual(sys, MaximalPair(y=y_bvp, f=_shifted(sys, f, y_bvp, lam), lam=lam), tol)
    bres = boundary_value_residual(sys, tau, lam, y_bvp)
    return CrossCheckReport(lam=lam, defect=float(defect),
                            ode_residual_integral=res_int,
                            ode_residual_bvp=res_bvp,
                            boundary_residual_bvp=bres)


def _shifted(sys, f, y, lam):
    """f + lam*y: the right-hand side seen by the maximal relation."""
    def fn(ts):
        return f.eval(ts) + lam * y.eval(ts)
    return GridFunction(y.nodes, fn(y.nodes), fn=fn,
                        breakpoints=f.breakpoints + y.breakpoints)


def resolvent_identity_check(sys: SymmetricSystem, tau: BoundaryPair,
                             lam: complex, mu: complex, f: GridFunction,
                             tol: Tolerances = DEFAULT_TOLS) -> float:
    """Weighted norm of R(lam)f - R(mu)f - (lam - mu) R(lam) R(mu) f.

    Canonical resolvents of one self-adjoint boundary condition satisfy the
    first resolvent identity; the defect is returned unnormalised.
    """
    if tau.kind != "constant-selfadjoint":
        raise ValueError("resolvent identity requires a constant self-adjoint pair")
    if lam == mu:
        return 0.0
    r_mu = solve_bvp(sys, tau, mu, f, tol)
    r_lam = solve_bvp(sys, tau, lam, f, tol)
    r_chain = solve_bvp(sys, tau, lam, r_mu, tol)

    def fn(ts):
        return r_lam.eval(ts) - r_mu.eval(ts) - (lam - mu) * r_chain.eval(ts)

    diff = GridFunction(r_lam.nodes, fn(r_lam.nodes), fn=fn,
                        breakpoints=f.breakpoints)
    return weighted_norm(sys, diff, tol)


def resolvent_bilinear_defect(sys: SymmetricSystem, tau: BoundaryPair,
                              lam: complex, f: GridFunction, g: GridFunction,
                              tol: Tolerances = DEFAULT_TOLS) -> float:
    """|(R(lam) f, g) - (f, R(conj lam) g)| in the weighted inner product."""
    rf = solve_bvp(sys, tau, lam, f, tol)
    rg = solve_bvp(sys, tau, np.conj(lam), g, tol)
    lhs = weighted_inner_product(sys, rf, g, tol)
    rhs = weighted_inner_product(sys, f, rg, tol)
    return float(abs(lhs - rhs))
