import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from flyingcat.netstates import TETRA
from flyingcat.qcore import (
    BELL,
    BELL_LABELS,
    ContractError,
    PauliString,
    apply_pauli,
    bell_measure,
    bell_probabilities,
    bell_project,
    check_density,
    check_state,
    dm,
    fidelity,
    haar_states,
    haar_two_qubit,
    hadamard_all,
    is_density,
    ket,
    maximally_mixed,
    operator,
    partial_trace,
    product_state,
)

paulis = st.text(alphabet="IXYZ", min_size=1, max_size=3)


class TestPauliString:
    def test_masks_msb_first(self):
        assert PauliString("XIZ").masks() == (0b100, 0b001)
        assert PauliString("YII").masks() == (0b100, 0b100)

    def test_matrix_matches_kron(self):
        from flyingcat.qcore import X, Z
        assert_allclose(PauliString("XZ").matrix(), np.kron(X, Z))

    @given(paulis, st.data())
    def test_product_matches_matrices(self, a, data):
        b = data.draw(st.text(alphabet="IXYZ", min_size=len(a), max_size=len(a)))
        p, q = PauliString(a), PauliString(b)
        assert_allclose((p * q).matrix(), p.matrix() @ q.matrix(), atol=1e-12)

    @given(paulis, st.data())
    def test_square_of_product_is_plus_minus_identity(self, a, data):
        b = data.draw(st.text(alphabet="IXYZ", min_size=len(a), max_size=len(a)))
        m = PauliString(a).matrix() @ PauliString(b).matrix()
        sq = m @ m
        d = sq.shape[0]
        assert np.allclose(sq, np.eye(d)) or np.allclose(sq, -np.eye(d))

    def test_commutes_agrees_with_matrices(self):
        for a, b in itertools.product(["XX", "XZ", "YY", "ZI", "IY"], repeat=2):
            p, q = PauliString(a), PauliString(b)
            comm = np.allclose(p.matrix() @ q.matrix(), q.matrix() @ p.matrix())
            assert p.commutes(q) == comm

    def test_bad_labels(self):
        with pytest.raises(ContractError):
            PauliString("XA")


class TestApplyPauli:
    def test_identity_leaves_state(self, rng):
        psi = haar_states(3, 1, rng)[0]
        assert_allclose(apply_pauli(psi, PauliString("III")), psi)

    def test_involution(self, rng):
        psi = haar_states(3, 1, rng)[0]
        x1 = PauliString("XII")
        assert_allclose(apply_pauli(apply_pauli(psi, x1), x1), psi)

    def test_density_conjugation(self, rng):
        rho = dm(haar_states(2, 1, rng)[0])
        p = PauliString("YZ")
        m = p.matrix()
        assert_allclose(apply_pauli(rho, p), m @ rho @ m.conj().T, atol=1e-14)

    def test_vector_matches_matrix(self, rng):
        psi = haar_states(3, 1, rng)[0]
        p = PauliString("YXZ", 1)
        assert_allclose(apply_pauli(psi, p), p.matrix() @ psi, atol=1e-14)

    def test_gauge_equivalence_on_even_subspace(self, xi_plus):
        # Z2Z3 then the gauge Z1Z2Z3 acts as Z1 where Z1Z2Z3 = +1
        out = apply_pauli(apply_pauli(xi_plus, PauliString("IZZ")), PauliString("ZZZ"))
        assert_allclose(out, apply_pauli(xi_plus, PauliString("ZII")), atol=1e-14)

    def test_length_mismatch(self):
        with pytest.raises(ContractError):
            apply_pauli(ket("00"), PauliString("ZZZ"))


class TestValidation:
    def test_unnormalized_rejected(self):
        with pytest.raises(ContractError):
            check_density(np.eye(2))

    def test_non_hermitian_rejected(self):
        with pytest.raises(ContractError):
            check_density(np.array([[0.5, 0.1], [0.0, 0.5]]))

    def test_negative_rejected(self):
        with pytest.raises(ContractError):
            check_density(np.diag([1.5, -0.5]))

    def test_register_limit(self):
        with pytest.raises(ContractError):
            check_state(np.ones(512) / math.sqrt(512))


class TestFidelity:
    def test_pure_self(self, rng):
        psi = haar_states(3, 1, rng)[0]
        assert fidelity(dm(psi), psi) == pytest.approx(1.0, abs=1e-12)

    def test_maximally_mixed_tetra(self):
        assert fidelity(maximally_mixed(6), TETRA) == pytest.approx(1 / 64, abs=1e-15)


class TestPartialTrace:
    def test_product_state(self, rng):
        a, b = haar_states(1, 2, rng)
        rho = dm(product_state(a, b))
        assert_allclose(partial_trace(rho, [1]), dm(b), atol=1e-14)
        assert_allclose(partial_trace(rho, [0]), dm(a), atol=1e-14)

    def test_direct_sum_oracle(self, rng):
        rho = dm(haar_states(3, 1, rng)[0])
        t = rho.reshape(2, 4, 2, 4)
        assert_allclose(partial_trace(rho, [0]), np.einsum("ajbj->ab", t), atol=1e-14)


class TestBell:
    def test_eigenstate(self, rng):
        label, post = bell_measure(BELL["Phi+"], (0, 1), rng)
        assert label == "Phi+"
        assert_allclose(post, BELL["Phi+"], atol=1e-14)

    def test_tetra_pair_uniform(self):
        probs = bell_probabilities(TETRA, (0, 1))
        assert_allclose([probs[k] for k in BELL_LABELS], [0.25] * 4, atol=1e-14)

    def test_probabilities_sum_to_one(self, rng):
        for psi in haar_states(4, 20, rng):
            assert sum(bell_probabilities(psi, (1, 3)).values()) == pytest.approx(1.0, abs=1e-12)

    def test_project_keeps_pair_in_bell_state(self, rng):
        psi = haar_states(3, 1, rng)[0]
        p, post = bell_project(psi, (0, 2), "Psi-")
        proj = np.outer(BELL["Psi-"], BELL["Psi-"].conj())
        # reorder to (0, 2, 1) and check the pair projector leaves it unchanged
        t = post.reshape(2, 2, 2).transpose(0, 2, 1).reshape(4, 2)
        assert_allclose(proj @ t, t, atol=1e-12)
        assert 0 < p < 1

    def test_empirical_frequencies(self, rng):
        psi = haar_states(4, 1, rng)[0]
        exact = bell_probabilities(psi, (0, 3))
        shots = 10_000
        counts = dict.fromkeys(BELL_LABELS, 0)
        for _ in range(shots):
            counts[bell_measure(psi, (0, 3), rng)[0]] += 1
        for k in BELL_LABELS:
            sd = math.sqrt(exact[k] * (1 - exact[k]) / shots)
            assert abs(counts[k] / shots - exact[k]) < 3 * sd + 1e-12


class TestHaar:
    def test_norm(self, rng):
        assert np.linalg.norm(haar_two_qubit(rng)) == pytest.approx(1.0, abs=1e-12)

    def test_basis_weight_moment(self, rng):
        w = np.abs(haar_states(2, 100_000, rng)[:, 0]) ** 2
        assert abs(w.mean() - 0.25) < 3 * w.std() / math.sqrt(w.size)

    def test_pair_fidelity_moment(self, rng):
        a = haar_states(2, 100_000, rng)
        b = haar_states(2, 100_000, rng)
        f = np.abs(np.einsum("ij,ij->i", a.conj(), b)) ** 2
        assert abs(f.mean() - 0.25) < 3 * f.std() / math.sqrt(f.size)


class TestOperators:
    def test_hadamard_all_involution(self, rng):
        rho = dm(haar_states(3, 1, rng)[0])
        assert_allclose(hadamard_all(hadamard_all(rho)), rho, atol=1e-14)

    def test_operator_embedding(self):
        from flyingcat.qcore import X
        assert_allclose(operator(2, {1: X}), PauliString("IX").matrix())

    def test_is_density(self):
        assert is_density(maximally_mixed(2))
        assert not is_density(np.diag([2.0, -1.0]))
