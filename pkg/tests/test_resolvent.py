import numpy as np
import pytest

from symspectra.boundary import (BoundaryPair, MaximalPair,
                                 membership_residual, solve_bvp)
from symspectra.resolvent import (apply_resolvent_integral,
                                  resolvent_bilinear_defect,
                                  resolvent_crosscheck,
                                  resolvent_identity_check)
from symspectra.system import GridFunction, weighted_norm
from symspectra.weyl import characteristic_matrix


@pytest.fixture(scope="module")
def f_const(free1):
    return GridFunction.from_constant(free1, [1.0, 0.0], label="e0")


def test_weight_annihilated_input(deg1, tau_a):
    omega = characteristic_matrix(deg1, tau_a, 1j)
    f = GridFunction.from_callable(
        deg1, lambda ts: np.stack([(ts < 1.0) * 1.0, np.zeros_like(ts)], axis=1),
        breakpoints=(1.0,))
    y = apply_resolvent_integral(deg1, omega, 1j, f)
    assert weighted_norm(deg1, y) < 1e-10


def test_zero_input_zero_defect(free1, tau_a):
    f = GridFunction.from_constant(free1, [0.0, 0.0])
    rep = resolvent_crosscheck(free1, tau_a, 1j, f)
    assert rep.defect < 1e-12


def test_crosscheck_free_system(free1, tau_a, f_const):
    rep = resolvent_crosscheck(free1, tau_a, 1j, f_const)
    assert rep.defect < 1e-8
    assert rep.ode_residual_integral < 1e-8
    assert rep.ode_residual_bvp < 1e-8
    assert rep.boundary_residual_bvp < 1e-9


def test_crosscheck_degenerate_system(deg1, tau_b):
    f = GridFunction.from_callable(
        deg1, lambda ts: np.stack([ts, np.ones_like(ts)], axis=1), label="(t,1)")
    rep = resolvent_crosscheck(deg1, tau_b, 2j, f)
    assert rep.defect < 1e-8


def test_omega_may_be_callable(free1, tau_a, f_const):
    y1 = apply_resolvent_integral(
        free1, lambda lam: characteristic_matrix(free1, tau_a, lam), 1j, f_const)
    y2 = apply_resolvent_integral(
        free1, characteristic_matrix(free1, tau_a, 1j), 1j, f_const)
    assert weighted_norm(free1, y1 - y2) < 1e-12


def test_adjoint_symmetry(free1, tau_a, f_const, rng):
    cg = rng.normal(size=(3, 2)) + 1j * rng.normal(size=(3, 2))
    g = GridFunction.from_callable(
        free1, lambda ts: sum(cg[k][None] * (ts ** k)[:, None] for k in range(3)))
    assert resolvent_bilinear_defect(free1, tau_a, 1j, f_const, g) < 1e-8


def test_identity_trivial_cases(free1, tau_a, f_const):
    assert resolvent_identity_check(free1, tau_a, 1j, 1j, f_const) == 0.0


def test_first_resolvent_identity(free1, deg1, tau_a, f_const):
    assert resolvent_identity_check(free1, tau_a, 1j, 2j, f_const) < 1e-7
    f_piece = GridFunction.from_callable(
        deg1, lambda ts: np.stack([np.zeros_like(ts), (ts < 1.0) * 1.0], axis=1),
        breakpoints=(1.0,))
    assert resolvent_identity_check(deg1, tau_a, 1j, -1j, f_piece) < 1e-7


def test_identity_requires_selfadjoint_pair(free1, f_const):
    tau = BoundaryPair.constant(np.eye(2), 1j * np.eye(2))
    with pytest.raises(ValueError):
        resolvent_identity_check(free1, tau, 1j, 2j, f_const)


@pytest.mark.parametrize("lam", [1j, 2j, 1 + 1j], ids=str)
def test_canonical_resolvent_norm_bound(free1, tau_a, f_const, lam):
    y = solve_bvp(free1, tau_a, lam, f_const)
    bound = weighted_norm(free1, f_const) / abs(lam.imag)
    assert weighted_norm(free1, y) <= bound + 1e-8


def test_both_routes_in_maximal_relation(free1, tau_a, f_const):
    lam = 2j
    omega = characteristic_matrix(free1, tau_a, lam)
    for y in (apply_resolvent_integral(free1, omega, lam, f_const),
              solve_bvp(free1, tau_a, lam, f_const)):
        shifted = GridFunction.from_callable(
            free1, lambda ts, yy=y: f_const.eval(ts) + lam * yy.eval(ts))
        assert membership_residual(free1, MaximalPair(y=y, f=shifted, lam=lam)) < 1e-8
