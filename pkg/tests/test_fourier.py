import numpy as np
import pytest

from symspectra.errors import UnsupportedWeightStructure
from symspectra.blockspace import BlockDims
from symspectra.fourier import (fourier_transform, fourier_transform_many,
                                inverse_transform, isometry_report,
                                mul_tmin_basis, parseval_defect, project_off)
from symspectra.propagator import propagate
from symspectra.spectral import build_spectral_function
from symspectra.system import (GridFunction, PiecewiseMatrixPoly,
                               SymmetricSystem, weighted_inner_product,
                               weighted_norm)


def eig_function(sysm, lam, coeff):
    prop = propagate(sysm, lam)
    coeff = np.asarray(coeff, dtype=complex)
    return GridFunction.from_callable(
        sysm, lambda ts: np.einsum("tij,j->ti", prop.eval(ts), coeff),
        label=f"sol({lam})")


class TestForwardTransform:
    def test_free1_closed_form(self, free1):
        f = GridFunction.from_constant(free1, [1.0, 0.0])
        s = np.array([0.5, 1.5, 2.5, 10.5])
        res = fourier_transform(free1, f, s)
        expected = np.stack([np.sin(s * np.pi) / s,
                             (1 - np.cos(s * np.pi)) / s], axis=1)
        assert np.max(np.abs(res.values - expected)) < 1e-11

    def test_linearity(self, free1, rng):
        c1 = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        f = GridFunction.from_callable(
            free1, lambda ts: c1[0][None] + c1[1][None] * ts[:, None])
        g = GridFunction.from_constant(free1, [0.3, -1.0])
        comb = GridFunction.from_callable(
            free1, lambda ts: 2.0 * f.eval(ts) - 1j * g.eval(ts))
        s = np.linspace(-3, 3, 7)
        rf, rg, rc = fourier_transform_many(free1, [f, g, comb], s)
        assert np.max(np.abs(rc.values - 2.0 * rf.values + 1j * rg.values)) < 1e-10

    def test_weight_annihilated_input(self, deg1):
        f = GridFunction.from_callable(
            deg1, lambda ts: np.stack([np.cos(ts), np.zeros_like(ts)], axis=1),
            breakpoints=(1.0,))
        # weight kills the first component on [0,1); the input vanishes after
        f2 = GridFunction.from_callable(
            deg1,
            lambda ts: np.stack([np.cos(ts) * (ts < 1.0), np.zeros_like(ts)],
                                axis=1), breakpoints=(1.0,))
        res = fourier_transform(deg1, f2, np.linspace(-5, 5, 11))
        assert res.sup_norm() < 1e-12

    def test_zero_mean_profile_maps_to_zero(self, deg1):
        # second component with vanishing mean on the degenerate piece
        f = GridFunction.from_callable(
            deg1,
            lambda ts: np.stack([np.zeros_like(ts),
                                 (ts < 1.0) * np.pi * np.cos(np.pi * ts)], axis=1),
            breakpoints=(1.0,))
        res = fourier_transform(deg1, f, np.linspace(-20, 20, 41))
        assert res.sup_norm() < 1e-10

    def test_eigenfunction_orthogonality_pattern(self, free1):
        lams = [0.5, 1.5, 2.5]
        fs = [eig_function(free1, lk, [1.0, 0.0]) for lk in lams]
        results = fourier_transform_many(free1, fs, np.array(lams))
        for k, res in enumerate(results):
            for j in range(len(lams)):
                expected = np.pi if j == k else 0.0
                assert abs(res.values[j, 0] - expected) < 1e-10

    def test_empty_grid(self, free1):
        f = GridFunction.from_constant(free1, [1.0, 0.0])
        res = fourier_transform(free1, f, np.array([]))
        assert res.values.shape == (0, 2)


class TestInverseTransform:
    def test_zero_data(self, free1, tau_a):
        sf = build_spectral_function(free1, tau_a, (-2.0, 2.0))
        f = inverse_transform(free1, sf, lambda s: np.zeros(2))
        assert weighted_norm(free1, f) < 1e-14

    def test_single_point_support(self, free1):
        from symspectra.spectral import SpectralFunction
        a0 = np.zeros((2, 2))
        a0[0, 0] = 1.0 / np.pi
        sf = SpectralFunction(jumps=[(0.5, a0)])
        f = inverse_transform(free1, sf, lambda s: np.array([1.0, 0.0]))
        ref = eig_function(free1, 0.5, [1.0 / np.pi, 0.0])
        assert weighted_norm(free1, f - ref) < 1e-10

    def test_roundtrip_on_eigencomponent(self, free1, tau_a):
        sf = build_spectral_function(free1, tau_a, (-2.0, 2.0))
        y = eig_function(free1, 0.5, [1.0, 0.0])
        tr = fourier_transform(free1, y, sf.support)
        back = inverse_transform(free1, sf, tr.values)
        assert weighted_norm(free1, back - y) < 1e-6

    def test_adjoint_relation(self, free1, tau_a, rng):
        sf = build_spectral_function(free1, tau_a, (-2.0, 2.0))
        from symspectra.spectral import DiscreteL2Sigma
        space = DiscreteL2Sigma(sf)
        cf = rng.normal(size=(3, 2)) + 1j * rng.normal(size=(3, 2))
        f = GridFunction.from_callable(
            free1, lambda ts: sum(cf[k][None] * (ts ** k)[:, None] for k in range(3)))
        g = space.element(rng.normal(size=(4, 2)) + 1j * rng.normal(size=(4, 2)))
        vf = space.element(fourier_transform(free1, f, sf.support).values)
        lhs = space.inner(vf, g)
        rhs = weighted_inner_product(free1, f, inverse_transform(free1, sf, g))
        assert abs(lhs - rhs) < 1e-7


class TestParseval:
    def test_exact_on_finite_combination(self, free1, tau_a):
        sf = build_spectral_function(free1, tau_a, (-3.0, 3.0))
        f = GridFunction.from_callable(
            free1,
            lambda ts: (eig_function(free1, 0.5, [1.0, 0]).eval(ts)
                        + 2j * eig_function(free1, 2.5, [1.0, 0]).eval(ts)),
            label="combo")
        rep = parseval_defect(free1, sf, f, 3.0)
        assert rep.norm_sq == pytest.approx(5 * np.pi, abs=1e-9)
        assert rep.defect < 1e-8

    def test_truncated_with_tail(self, free1, tau_a):
        sf = build_spectral_function(free1, tau_a, (-21.0, 21.0))
        f = GridFunction.from_constant(free1, [1.0, 0.0])
        rep = parseval_defect(free1, sf, f, 20.5)
        assert rep.defect > 1e-3              # truncation really bites
        assert rep.defect_with_tail < 1e-4    # and the tail fit accounts for it
        assert rep.decay_exponent == pytest.approx(2.0, abs=0.05)

    def test_complement_norm_used_with_basis(self, deg1, tau_c):
        sf = build_spectral_function(deg1, tau_c, (-30.5, 30.5))
        basis = mul_tmin_basis(deg1, 3)
        # constant plus the first kernel direction: norms 1 and 1/2 on [0,1)
        f = GridFunction.from_callable(
            deg1,
            lambda ts: np.stack([np.zeros_like(ts),
                                 (ts < 1.0) * (1.0 + np.cos(np.pi * ts))], axis=1),
            breakpoints=(1.0,), label="mixed")
        rep = parseval_defect(deg1, sf, f, 30.5, mul_basis=basis)
        assert rep.norm_sq == pytest.approx(1.5, abs=1e-9)
        assert rep.norm_sq_complement == pytest.approx(1.0, abs=1e-9)
        # kernel part is invisible to the transform: complement defect is the
        # honest one and much smaller than the raw defect
        assert rep.defect_complement < rep.defect - 0.2
        assert rep.defect_complement < 0.05


class TestMulBasis:
    def test_invertible_weight_has_empty_basis(self, free1):
        assert len(mul_tmin_basis(free1, 3)) == 0

    def test_degenerate_weight_basis(self, deg1):
        basis = mul_tmin_basis(deg1, 3)
        assert len(basis) == 3
        for cert in basis.certificates:
            assert cert.piece == (0.0, 1.0)
            assert cert.weight_null_residual < 1e-12
            assert cert.flow_residual < 1e-12
        gram = np.array([[weighted_inner_product(deg1, e1, e2)
                          for e2 in basis.elements] for e1 in basis.elements])
        assert np.max(np.abs(gram - np.eye(3))) < 1e-9

    def test_n_max_respected(self, deg1):
        assert len(mul_tmin_basis(deg1, 2)) == 2

    def test_orthogonal_to_kernel_constant(self, deg1):
        basis = mul_tmin_basis(deg1, 3)
        const = GridFunction.from_callable(
            deg1, lambda ts: np.stack([np.zeros_like(ts), (ts < 1.0) * 1.0], axis=1),
            breakpoints=(1.0,))
        for e in basis.elements:
            assert abs(weighted_inner_product(deg1, e, const)) < 1e-10

    def test_varying_kernel_rejected(self):
        iv = (0.0, 1.0)
        # rank-one weight with rotating kernel direction
        weight = PiecewiseMatrixPoly(
            [0.0, 1.0],
            [np.array([[[1.0, 0.0], [0.0, 0.0]],
                       [[0.0, 1.0], [1.0, 0.0]],
                       [[0.0, 0.0], [0.0, 1.0]]])])
        sysm = SymmetricSystem(dims=BlockDims(1, 0), interval=iv,
                               coeff_b=PiecewiseMatrixPoly.constant(
                                   np.zeros((2, 2)), iv),
                               coeff_delta=weight)
        with pytest.raises(UnsupportedWeightStructure):
            mul_tmin_basis(sysm, 3)

    def test_projection_off_basis(self, deg1):
        basis = mul_tmin_basis(deg1, 3)
        f = basis.elements[0]
        g = project_off(deg1, f, basis.elements)
        assert weighted_norm(deg1, g) < 1e-9


class TestIsometryReport:
    def test_empty_inputs(self, free1, tau_a):
        sf = build_spectral_function(free1, tau_a, (-2.0, 2.0))
        rep = isometry_report(free1, sf, [], None)
        assert rep.verdict == ""
        assert rep.complement_defects == []

    def test_spectral_verdict(self, free1, tau_a):
        sf = build_spectral_function(free1, tau_a, (-10.5, 10.5))
        basis = mul_tmin_basis(free1, 3)
        f = eig_function(free1, 1.5, [1.0, 0.0])
        f.label = "eig"
        rep = isometry_report(free1, sf, [f], basis, truncation=10.5)
        assert rep.verdict == "spectral behavior confirmed"

    def test_enlarged_kernel_detected(self, deg1, tau_a):
        # the (I,0) condition on the degenerate system misses the constant
        # kernel direction: the first limit of its pair fails to vanish and
        # the transform cannot preserve that direction's norm
        sf = build_spectral_function(deg1, tau_a, (-30.9, 30.9))
        basis = mul_tmin_basis(deg1, 3)
        g = GridFunction.from_callable(
            deg1, lambda ts: np.stack([np.zeros_like(ts), (ts < 1.0) * 1.0], axis=1),
            breakpoints=(1.0,), label="kernel-const")
        rep = isometry_report(deg1, sf, [g], basis, truncation=30.9)
        assert rep.verdict == "partial isometry with enlarged kernel"
        _, raw, corrected = rep.complement_defects[0]
        assert min(raw, corrected) > 0.5
