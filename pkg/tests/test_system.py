import numpy as np
import pytest

from symspectra.blockspace import BlockDims
from symspectra.errors import MalformedCoefficients, QuadratureFailure
from symspectra.system import (GridFunction, PiecewiseMatrixPoly,
                               SymmetricSystem, probe_definiteness,
                               validate_system, weighted_inner_product,
                               weighted_norm)


def make_system(interval, b_poly, d_poly, dims=BlockDims(1, 0)):
    return SymmetricSystem(dims=dims, interval=interval, coeff_b=b_poly,
                           coeff_delta=d_poly)


class TestPiecewisePoly:
    def test_evaluation_matches_polyval(self, rng):
        coeffs = rng.normal(size=(4, 2, 2)) + 1j * rng.normal(size=(4, 2, 2))
        poly = PiecewiseMatrixPoly([0.0, 2.0], [coeffs])
        ts = rng.uniform(0, 2, size=11)
        expected = sum(coeffs[k][None] * (ts ** k)[:, None, None]
                       for k in range(4))
        assert np.max(np.abs(poly(ts) - expected)) < 1e-12

    def test_piece_selection(self):
        poly = PiecewiseMatrixPoly([0.0, 1.0, 2.0],
                                   [np.zeros((1, 2, 2)), np.ones((1, 2, 2))])
        assert np.max(np.abs(poly(0.5))) == 0.0
        assert np.min(np.abs(poly(1.0))) == 1.0   # right piece is left-closed
        assert np.min(np.abs(poly(2.0))) == 1.0   # final piece keeps its endpoint

    def test_validation(self):
        with pytest.raises(MalformedCoefficients):
            PiecewiseMatrixPoly([0.0], [])
        with pytest.raises(MalformedCoefficients):
            PiecewiseMatrixPoly([0.0, 1.0, 0.5], [np.zeros((1, 2, 2))] * 2)
        with pytest.raises(MalformedCoefficients):
            PiecewiseMatrixPoly([0.0, 1.0], [np.zeros((9, 2, 2))])  # degree cap

    def test_scalar_vs_array_call(self):
        poly = PiecewiseMatrixPoly.constant(np.eye(2), (0.0, 1.0))
        assert poly(0.3).shape == (2, 2)
        assert poly(np.array([0.1, 0.9])).shape == (2, 2, 2)


class TestValidation:
    def test_free_system_passes(self, free1):
        rep = validate_system(free1)
        assert rep.passed
        assert rep.herm_defect == 0.0
        assert rep.min_weight_eig == pytest.approx(1.0)

    def test_non_hermitian_piece_located(self):
        iv = (0.0, 2.0)
        bad = PiecewiseMatrixPoly([0.0, 1.0, 2.0],
                                  [np.zeros((1, 2, 2)),
                                   np.array([[[0.0, 1.0], [0.0, 0.0]]])])
        sysm = make_system(iv, bad, PiecewiseMatrixPoly.constant(np.eye(2), iv))
        rep = validate_system(sysm)
        assert not rep.passed
        assert rep.offending_piece == (1.0, 2.0)

    def test_degenerate_weight_passes(self, deg1):
        assert validate_system(deg1).passed

    def test_coverage_error(self):
        iv = (0.0, 2.0)
        short = PiecewiseMatrixPoly.constant(np.eye(2), (0.0, 1.0))
        sysm = make_system(iv, PiecewiseMatrixPoly.constant(np.zeros((2, 2)), iv),
                           short)
        with pytest.raises(MalformedCoefficients):
            validate_system(sysm)


class TestInnerProduct:
    def test_free_constant(self, free1):
        f = GridFunction.from_constant(free1, [1.0, 0.0])
        assert weighted_inner_product(free1, f, f) == pytest.approx(np.pi, abs=1e-12)

    def test_degenerate_weight_example(self, deg1):
        f = GridFunction.from_constant(deg1, [1.0, 1.0])
        # diag(0,1) on [0,1) contributes 1, identity on [1,2] contributes 2
        assert weighted_inner_product(deg1, f, f) == pytest.approx(3.0, abs=1e-12)

    def test_zero_weight_piece_contributes_nothing(self):
        iv = (0.0, 2.0)
        weight = PiecewiseMatrixPoly([0.0, 1.0, 2.0],
                                     [np.zeros((1, 2, 2)), np.eye(2)[None]])
        sysm = make_system(iv, PiecewiseMatrixPoly.constant(np.zeros((2, 2)), iv),
                           weight)
        f = GridFunction.from_callable(
            sysm, lambda ts: np.stack([np.sin(7 * ts), np.cos(3 * ts)], axis=1))
        full = weighted_inner_product(sysm, f, f)
        right_only = np.trapezoid(
            np.abs(np.sin(7 * np.linspace(1, 2, 20001))) ** 2
            + np.abs(np.cos(3 * np.linspace(1, 2, 20001))) ** 2,
            np.linspace(1, 2, 20001))
        assert full.real == pytest.approx(right_only, abs=1e-7)

    def test_polynomial_exact(self, free1):
        f = GridFunction.from_callable(
            free1, lambda ts: np.stack([ts ** 2, np.zeros_like(ts)], axis=1))
        val = weighted_inner_product(free1, f, f)
        assert val == pytest.approx(np.pi ** 5 / 5.0, rel=1e-13)

    def test_conjugate_symmetry(self, free1, rng):
        cf = rng.normal(size=(3, 2)) + 1j * rng.normal(size=(3, 2))
        cg = rng.normal(size=(3, 2)) + 1j * rng.normal(size=(3, 2))
        f = GridFunction.from_callable(
            free1, lambda ts: sum(cf[k][None] * (ts ** k)[:, None] for k in range(3)))
        g = GridFunction.from_callable(
            free1, lambda ts: sum(cg[k][None] * (ts ** k)[:, None] for k in range(3)))
        a = weighted_inner_product(free1, f, g)
        b = weighted_inner_product(free1, g, f)
        assert abs(a - np.conj(b)) < 1e-10
        assert weighted_inner_product(free1, f, f).real >= -1e-12

    def test_psd_for_degenerate_weight(self, deg1, rng):
        vals = rng.normal(size=(3, 2)) + 1j * rng.normal(size=(3, 2))
        f = GridFunction.from_callable(
            deg1, lambda ts: sum(vals[k][None] * (ts ** k)[:, None] for k in range(3)))
        assert weighted_inner_product(deg1, f, f).real >= -1e-12


class TestDefiniteness:
    def test_free_system(self, free1):
        rep = probe_definiteness(free1)
        assert rep.absolutely_definite
        assert rep.invertible_measure == pytest.approx(np.pi)
        assert rep.definiteness == "certified"

    def test_degenerate_weight(self, deg1):
        rep = probe_definiteness(deg1)
        assert rep.absolutely_definite
        assert rep.invertible_measure == pytest.approx(1.0)
        assert rep.definiteness == "certified"
        assert rep.invertible_piece == (1.0, 2.0)

    def test_fully_degenerate_is_undetermined(self):
        iv = (0.0, 1.0)
        sysm = make_system(iv, PiecewiseMatrixPoly.constant(np.zeros((2, 2)), iv),
                           PiecewiseMatrixPoly.constant(np.diag([0.0, 1.0]), iv))
        rep = probe_definiteness(sysm)
        assert not rep.absolutely_definite
        assert rep.invertible_measure == 0.0
        assert rep.definiteness == "undetermined"


class TestGridFunction:
    def test_subtraction_and_eval(self, free1):
        f = GridFunction.from_constant(free1, [1.0, 2.0])
        g = GridFunction.from_constant(free1, [0.5, 0.5])
        d = f - g
        assert np.max(np.abs(d.eval([0.1, 1.0]) - np.array([0.5, 1.5]))) < 1e-14

    def test_sample_only_function_resamples(self, free1):
        grid = free1.default_grid()
        f = GridFunction(grid.nodes, np.stack([np.sin(grid.nodes),
                                               np.cos(grid.nodes)], axis=1))
        fine = grid.refine()
        vals = f.values_on(fine)
        ref = np.stack([np.sin(fine.nodes), np.cos(fine.nodes)], axis=1)
        assert np.max(np.abs(vals - ref)) < 1e-8   # cubic-spline resample

    def test_validation(self):
        with pytest.raises(ValueError):
            GridFunction([0.0], [[1.0, 0.0]])
        with pytest.raises(ValueError):
            GridFunction([0.0, 0.0], [[1.0, 0.0], [1.0, 0.0]])
