import numpy as np
import pytest

from symspectra import presets
from symspectra.blockspace import BlockDims
from symspectra.propagator import (fundamental_solution, lagrange_bilinear_check,
                                   monodromy, monodromy_batch, ode_residual_max,
                                   propagate, propagation_batch)
from symspectra.system import PiecewiseMatrixPoly, SymmetricSystem

LAMBDAS = [0.0, 0.7, -1.3, 1j, -1j, 2 + 3j, -0.5 - 0.8j]


@pytest.fixture(scope="module")
def poly_system():
    """Genuinely t-dependent coefficients, exercising the adaptive integrator."""
    iv = (0.0, 1.5)
    b = PiecewiseMatrixPoly(
        [0.0, 1.5],
        [np.array([np.zeros((2, 2)), 0.3 * np.array([[0.0, 1.0], [1.0, 0.0]])])])
    d = PiecewiseMatrixPoly(
        [0.0, 1.5],
        [np.array([np.eye(2), 0.1 * np.eye(2)])])
    return SymmetricSystem(dims=BlockDims(1, 0), interval=iv, coeff_b=b,
                           coeff_delta=d, label="POLY")


@pytest.mark.parametrize("lam", LAMBDAS, ids=str)
def test_free1_closed_form(free1, lam):
    ts = np.array([0.0, 0.4, 1.3, np.pi])
    ref = presets.free1_fundamental(ts, lam)
    for k, t in enumerate(ts):
        val = fundamental_solution(free1, lam, t)
        assert np.max(np.abs(val - ref[k])) < 1e-9


def test_zero_lambda_no_potential(free1, deg1, smoke3):
    for sysm in (free1, deg1, smoke3):
        for t in np.linspace(*sysm.interval, 5):
            val = fundamental_solution(sysm, 0.0, t)
            assert np.max(np.abs(val - np.eye(sysm.dims.dim_total))) < 1e-12


@pytest.mark.parametrize("s", [0.3, 1.7, -2.2], ids=str)
def test_deg1_left_piece(deg1, s):
    for t in (0.25, 0.6, 0.95):
        val = fundamental_solution(deg1, s, t)
        assert np.max(np.abs(val - [[1.0, s * t], [0.0, 1.0]])) < 1e-10


def test_deg1_full_monodromy(deg1):
    lam = 1.3
    rot = np.array([[np.cos(lam), np.sin(lam)], [-np.sin(lam), np.cos(lam)]])
    ref = rot @ np.array([[1.0, lam], [0.0, 1.0]])
    assert np.max(np.abs(monodromy(deg1, lam) - ref)) < 1e-12


def test_smoke3_closed_form(smoke3):
    lam = 0.9 + 0.4j
    ts = np.array([0.2, 0.7, 1.0])
    ref = presets.smoke3_fundamental(ts, lam)
    prop = propagate(smoke3, lam)
    assert np.max(np.abs(prop.eval(ts) - ref)) < 1e-10


def test_monodromy_examples(free1):
    assert np.max(np.abs(monodromy(free1, 1.0) + np.eye(2))) < 1e-11
    assert np.max(np.abs(monodromy(free1, 0.5)
                         - np.array([[0.0, 1.0], [-1.0, 0.0]]))) < 1e-11
    assert np.max(np.abs(monodromy(free1, 0.0) - np.eye(2))) < 1e-12


def test_monodromy_batch_matches_singles(free1):
    lams = np.array([0.3, 1j, 2 - 1j, -4.0])
    batch = monodromy_batch(free1, lams)
    for k, lam in enumerate(lams):
        assert np.max(np.abs(batch[k] - monodromy(free1, lam))) < 1e-12


@pytest.mark.parametrize("lam", [0.0, 1j, 2 + 3j], ids=str)
def test_bilinear_identity(free1, deg1, smoke3, poly_system, lam):
    for sysm in (free1, deg1, smoke3, poly_system):
        assert lagrange_bilinear_check(sysm, lam) < 1e-9


def test_bilinear_identity_at_left_endpoint(free1):
    # the identity holds exactly at the initial point
    prop = propagate(free1, 1j)
    t0, y0 = prop.checkpoints[0]
    j = free1.structure_matrix
    assert np.max(np.abs(y0.conj().T @ j @ y0 - j)) == 0.0


def test_ode_residual_integral_form(free1, poly_system):
    for sysm, lam in ((free1, 2 + 3j), (poly_system, 1j), (poly_system, -2.0)):
        assert ode_residual_max(sysm, propagate(sysm, lam)) < 1e-9


def test_polynomial_system_against_reference(poly_system):
    # independent oracle: dense RK at much tighter tolerance via tiny steps
    from scipy.integrate import solve_ivp
    lam = 1.2 - 0.7j
    j = poly_system.structure_matrix

    def rhs(t, y):
        coef = poly_system.coeff_b(t) + lam * poly_system.coeff_delta(t)
        return (-j @ coef @ y.reshape(2, 2)).reshape(-1)

    ref = solve_ivp(rhs, poly_system.interval, np.eye(2, dtype=complex).reshape(-1),
                    method="DOP853", rtol=1e-13, atol=1e-13).y[:, -1].reshape(2, 2)
    val = monodromy(poly_system, lam)
    assert np.max(np.abs(val - ref)) < 1e-10


def test_entire_dependence_on_lambda(free1, poly_system):
    # finite-difference derivative against the conjugate variable vanishes
    h = 1e-4
    for sysm in (free1, poly_system):
        t = 0.7
        vals = {d: fundamental_solution(sysm, 1j + d, t)
                for d in (h, -h, 1j * h, -1j * h)}
        conj_deriv = ((vals[h] - vals[-h]) / (2 * h)
                      + 1j * (vals[1j * h] - vals[-1j * h]) / (2 * h)) / 2.0
        assert np.max(np.abs(conj_deriv)) < 1e-6


def test_propagation_caching_and_error_estimate(free1):
    p1 = propagate(free1, 0.25)
    p2 = propagate(free1, 0.25)
    assert p1 is p2
    assert p1.err_est >= 0.0
    assert p1.checkpoints[0][0] == 0.0
    assert p1.checkpoints[-1][0] == pytest.approx(np.pi)


def test_out_of_interval_rejected(free1):
    with pytest.raises(ValueError):
        fundamental_solution(free1, 1.0, 2 * np.pi)
