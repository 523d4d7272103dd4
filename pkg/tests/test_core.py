import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from geomaxent.core import (
    PAULI_X,
    DiscreteEnsemble,
    HermitianMatrix,
    eigh,
    ensemble_density,
    matrix_from_json,
    matrix_to_json,
    observable_value,
    pure_projector,
    traceless_hermitian_basis,
    validate_density,
)
from geomaxent.errors import DimensionMismatch, NotHermitian, NotPSD, TraceNotOne
from geomaxent.manifold import from_homogeneous, to_homogeneous

from conftest import BENCH, random_hermitian

S = math.sqrt(0.5)


class TestValidateDensity:
    def test_maximally_mixed(self):
        rho = validate_density(np.eye(2) / 2)
        assert np.allclose(eigh(rho).values, [0.5, 0.5])

    def test_bench_matrix_is_valid(self):
        validate_density(BENCH)

    def test_not_psd_reports_eigenvalue(self):
        with pytest.raises(NotPSD) as info:
            validate_density([[0.5, 0.6], [0.6, 0.5]])
        assert info.value.deviation == pytest.approx(-0.1, abs=1e-12)

    def test_not_hermitian(self):
        with pytest.raises(NotHermitian):
            validate_density([[0.5, 0.1], [0.2, 0.5]])

    def test_trace(self):
        with pytest.raises(TraceNotOne) as info:
            validate_density(np.eye(2) * 0.6)
        assert info.value.deviation == pytest.approx(0.2)

    def test_non_square(self):
        with pytest.raises(DimensionMismatch):
            validate_density(np.ones((2, 3)) / 3)

    def test_immutable(self):
        rho = validate_density(np.eye(2) / 2)
        with pytest.raises(ValueError):
            rho.data[0, 0] = 1.0


class TestEigh:
    def test_identity_tie_break(self):
        es = eigh(HermitianMatrix(np.eye(3)))
        assert np.allclose(es.values, 1)
        assert np.allclose(es.basis, np.eye(3))

    def test_bench_values(self):
        es = eigh(HermitianMatrix(BENCH))
        r = math.sqrt(0.05 ** 2 + 0.2 ** 2 + 0.3 ** 2)
        assert np.allclose(es.values, [0.5 - r, 0.5 + r], atol=1e-14)
        assert es.values[0] == pytest.approx(0.1360, abs=1e-4)

    def test_permutation(self):
        es = eigh(HermitianMatrix(np.diag([2.0, -1.0])))
        assert np.allclose(es.values, [-1, 2])
        assert np.allclose(es.basis, [[0, 1], [1, 0]])

    def test_phase_convention(self, rng):
        es = eigh(HermitianMatrix(random_hermitian(rng, 4)))
        for row in es.basis:
            # rows are conjugated eigenvectors; the eigenvector's first component is real positive
            lead = row.conj()[np.argmax(np.abs(row) > 1e-12)]
            assert abs(lead.imag) < 1e-14 and lead.real > 0

    @pytest.mark.parametrize("D", [2, 3, 4, 5, 6])
    def test_round_trip(self, rng, D):
        for _ in range(20):
            a = random_hermitian(rng, D)
            es = eigh(HermitianMatrix(a))
            u = es.basis
            assert np.max(np.abs(es.reconstruct() - a)) <= 1e-10
            assert np.max(np.abs(u @ u.conj().T - np.eye(D))) <= 1e-10
            assert np.max(np.abs(u @ a @ u.conj().T - np.diag(es.values))) <= 1e-10
            assert np.all(np.diff(es.values) >= 0)


class TestObservableValue:
    def test_projector_on_basis_state(self):
        o = HermitianMatrix(np.diag([1.0, 0.0]))
        assert observable_value(o, from_homogeneous([1, 0])) == 1.0

    def test_projector_on_plus(self):
        o = HermitianMatrix(np.diag([1.0, 0.0]))
        assert observable_value(o, from_homogeneous([S, S])) == pytest.approx(0.5)

    def test_pauli_x_at_quarter_phase(self):
        z = to_homogeneous([0.5, 0.5], [math.pi / 2])
        assert observable_value(HermitianMatrix(PAULI_X), z) == pytest.approx(0.0, abs=1e-15)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            observable_value(HermitianMatrix(np.eye(3)), from_homogeneous([1, 0]))

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
                    min_size=2, max_size=5))
    def test_identity_is_one(self, zs):
        z = np.array(zs)
        if np.linalg.norm(z) < 1e-6:
            return
        p = from_homogeneous(z)
        assert observable_value(HermitianMatrix(np.eye(len(z))), p) == pytest.approx(1.0, abs=1e-12)


class TestEnsembleDensity:
    def test_z_basis_ensemble(self):
        e = DiscreteEnsemble([(0.5, from_homogeneous([1, 0])), (0.5, from_homogeneous([0, 1]))])
        assert np.allclose(ensemble_density(e).data, np.eye(2) / 2, atol=1e-15)

    def test_x_basis_ensemble_identical(self):
        a = DiscreteEnsemble([(0.5, from_homogeneous([1, 0])), (0.5, from_homogeneous([0, 1]))])
        b = DiscreteEnsemble([(0.5, from_homogeneous([S, S])), (0.5, from_homogeneous([S, -S]))])
        assert np.max(np.abs(ensemble_density(a).data - ensemble_density(b).data)) < 1e-15

    def test_single_pure(self):
        e = DiscreteEnsemble([(1.0, from_homogeneous([1, 0]))])
        assert np.allclose(ensemble_density(e).data, np.diag([1, 0]))

    def test_born_rule_consistency(self, rng):
        for D in (2, 3, 4):
            k = 5
            w = rng.dirichlet(np.ones(k))
            pts = [from_homogeneous(rng.standard_normal(D) + 1j * rng.standard_normal(D)) for _ in range(k)]
            w[-1] = 1.0 - w[:-1].sum()
            e = DiscreteEnsemble(list(zip(w, pts)))
            rho = ensemble_density(e)
            o = HermitianMatrix(random_hermitian(rng, D))
            lhs = np.trace(o.data @ rho.data).real
            rhs = sum(wi * observable_value(o, p) for wi, p in zip(w, pts))
            assert lhs == pytest.approx(rhs, abs=1e-10)


def test_json_round_trip():
    obj = matrix_to_json(BENCH)
    assert obj["dim"] == 2
    assert np.array_equal(matrix_from_json(obj), BENCH)
    with pytest.raises(DimensionMismatch):
        matrix_from_json({"dim": 3, "re": [[1]], "im": [[0]]})


def test_traceless_basis_is_orthonormal():
    for D in (2, 3, 4):
        B = traceless_hermitian_basis(D)
        assert len(B) == D * D - 1
        gram = np.einsum("aij,bji->ab", B, B).real
        assert np.allclose(gram, np.eye(D * D - 1))
        assert np.allclose(np.trace(B, axis1=1, axis2=2), 0)


def test_pure_projector():
    p = pure_projector([1, 1j])
    assert np.allclose(p.data, [[0.5, -0.5j], [0.5j, 0.5]])
