import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hqcomm import qcore
from hqcomm.channels import secret_state
from hqcomm.errors import ChannelError
from hqcomm.phqis import (
    BOB_PROB_DISCREPANCY,
    BOB_PROB_TABLE,
    DIANA_PROB_TABLE,
    enumerate_phqis,
    phqis_branch,
    run_phqis,
    success_probability_exact,
    two_qubit_op_for,
    u1_matrix,
    u_matrix,
)
from hqcomm.hqis import Party
from hqcomm.qcore import BELL_ORDER

from . import oracles

PSI_P, PSI_M, PHI_P, PHI_M = BELL_ORDER
A, B = 0.8, 0.6
amplitude_pairs = st.floats(0.05, math.pi / 4).map(lambda t: (math.cos(t), math.sin(t)))
lambdas = st.builds(complex, st.floats(-3, 3), st.floats(-3, 3))


def ancilla_zero_part(vec):
    """Receiver amplitudes conditioned on ancilla 0 (ancilla is the low qubit)."""
    return np.array([vec[0], vec[2]])


class TestMatrices:
    def test_u_entries(self):
        u = u_matrix(A, B)
        assert u[0, 0] == pytest.approx(B / A)
        assert u[0, 1] == pytest.approx(math.sqrt(1 - (B / A) ** 2))
        np.testing.assert_allclose(u.conj().T @ u, np.eye(4), atol=1e-14)

    def test_u1_is_u_after_flip(self):
        u1 = u1_matrix(A, B)
        np.testing.assert_allclose(u1, u_matrix(A, B) @ np.kron(qcore.X, qcore.I2))
        assert u1[0, 2] == pytest.approx(B / A)
        np.testing.assert_allclose(u1.conj().T @ u1, np.eye(4), atol=1e-14)

    def test_maximal_limit_is_signed_permutation(self):
        h = 1 / math.sqrt(2)
        u = u_matrix(h, h)
        assert u[0, 0] == pytest.approx(1)
        assert u[0, 1] == pytest.approx(0, abs=1e-15)
        assert set(np.round(np.abs(u).ravel(), 12)) == {0.0, 1.0}

    @pytest.mark.parametrize("lam", [1.0, 0.5j, -2 + 1j])
    def test_u_levels_amplitudes(self, lam):
        psi = np.array([A, lam * B]) / math.sqrt(A**2 + abs(lam * B) ** 2)
        out = u_matrix(A, B) @ np.kron(psi, [1, 0])
        norm = math.sqrt(A**2 + abs(lam * B) ** 2)
        expected = np.zeros(4, complex)
        expected[0], expected[2], expected[3] = B, lam * B, math.sqrt(A**2 - B**2)
        np.testing.assert_allclose(out, expected / norm, atol=1e-14)

    @pytest.mark.parametrize("lam", [1.0, 0.5j, -2 + 1j])
    def test_u_levels_phi_row_input(self, lam):
        # Diana's qubit on a phi announcement: a still sits on |0>
        out = u_matrix(A, B) @ np.kron([lam * A, B], [1, 0])
        np.testing.assert_allclose(ancilla_zero_part(out), B * np.array([lam, 1]), atol=1e-14)

    @pytest.mark.parametrize("lam", [1.0, 0.5j, -2 + 1j])
    def test_u1_levels_mirrored_amplitudes(self, lam):
        psi = np.array([B, lam * A])
        out = u1_matrix(A, B) @ np.kron(psi, [1, 0])
        np.testing.assert_allclose(ancilla_zero_part(out), B * np.array([lam, 1]), atol=1e-14)

    def test_rejects_bad_amplitudes(self):
        with pytest.raises(ChannelError):
            u_matrix(0.6, 0.8)
        with pytest.raises(ChannelError):
            u_matrix(0.8, 0.5)

    @given(amplitude_pairs)
    def test_unitary_for_any_valid_pair(self, ab):
        for m in (u_matrix(*ab), u1_matrix(*ab)):
            np.testing.assert_allclose(m.conj().T @ m, np.eye(4), atol=1e-12)


class TestOperatorRule:
    def test_diana_always_u(self):
        assert all(two_qubit_op_for(Party.DIANA, bit) == "U" for bit in (0, 1))

    def test_bob_u_iff_psi(self):
        for cd in BELL_ORDER:
            assert two_qubit_op_for(Party.BOB, cd) == ("U" if cd.is_psi else "U1")

    def test_only_one_printed_row_disagrees(self):
        off = [k for k, (printed, _c, _s) in BOB_PROB_TABLE.items()
               if printed != two_qubit_op_for(Party.BOB, k[1])]
        assert off == [BOB_PROB_DISCREPANCY]


def _states_match(ket, coeffs):
    v = np.asarray(coeffs, complex)
    return ket is not None and qcore.fidelity_up_to_phase(ket, qcore.ket_from_amplitudes(v)) > 1 - 1e-12


@pytest.mark.parametrize("lam", [1.0, 1j, 2 - 3j, 0.37 + 0.1j])
class TestTableRows:
    def test_diana_rows(self, lam):
        for t in enumerate_phqis("Diana", A, B, lam):
            key = (t.alice_outcome, int(t.helper_outcomes[0][1]))
            corr, state = DIANA_PROB_TABLE[key]
            if t.succeeded:
                assert t.correction == corr
                assert t.fidelity == pytest.approx(1, abs=1e-12)
                assert _states_match(t.conditional_state, state(lam))
            else:
                assert _states_match(t.final_state, (0, 1))

    def test_bob_rows(self, lam):
        for t in enumerate_phqis("Bob", A, B, lam):
            key = (t.alice_outcome, t.helper_outcomes[0][1])
            _printed, corr, state = BOB_PROB_TABLE[key]
            if t.succeeded:
                assert t.correction == corr
                assert t.fidelity == pytest.approx(1, abs=1e-12)
                assert _states_match(t.conditional_state, state(lam))
            else:
                assert _states_match(t.final_state, (0, 1))


class TestDiscrepantRow:
    def _row(self, op, lam):
        alice, cd = BOB_PROB_DISCREPANCY
        return phqis_branch("Bob", A, B, lam, two_qubit_op=op,
                            forced={"alice": alice, "helper": cd, "ancilla": 0})

    @pytest.mark.parametrize("lam", oracles.random_lambdas(6, seed=5))
    def test_rule_operator_passes(self, lam):
        assert self._row("U", lam).fidelity == pytest.approx(1, abs=1e-12)

    def test_printed_operator_fails(self):
        errors = [1 - self._row("U1", lam).fidelity for lam in oracles.random_lambdas(20, seed=5)]
        assert min(errors) > 1e-3
        assert max(errors) > 0.5


class TestSuccessProbability:
    @pytest.mark.parametrize("receiver", ["Diana", "Bob"])
    def test_closed_form(self, receiver):
        values = [success_probability_exact(receiver, A, B, lam) for lam in (0, 1, 1j, 2 - 3j)]
        assert max(values) - min(values) < 1e-12
        assert values[0] == pytest.approx(2 * min(A, B) ** 2, abs=1e-12)
        assert values[0] == pytest.approx(0.72, abs=1e-12)

    @pytest.mark.filterwarnings("ignore::hqcomm.errors.MaximalChannelWarning")
    def test_maximal_limit(self):
        h = 1 / math.sqrt(2)
        assert success_probability_exact("Diana", h, h, 0.3) == pytest.approx(1, abs=1e-12)

    @settings(max_examples=15)
    @given(amplitude_pairs, lambdas)
    def test_matches_two_b_squared(self, ab, lam):
        a, b = ab
        assert success_probability_exact("Bob", a, b, lam) == pytest.approx(2 * b * b, abs=1e-10)

    def test_branch_probabilities_sum_to_one(self):
        for receiver in ("Diana", "Bob"):
            total = sum(t.probability for t in enumerate_phqis(receiver, A, B, 0.4 - 1j))
            assert total == pytest.approx(1, abs=1e-12)

    def test_failure_leaves_one(self):
        for seed in range(30):
            t = run_phqis("Diana", A, B, 1 + 1j, np.random.default_rng(seed))
            if not t.succeeded:
                assert _states_match(t.final_state, (0, 1))
                assert t.correction.name == "I"
            else:
                assert t.fidelity == pytest.approx(1, abs=1e-12)


def test_dense_oracle_success_probability():
    # independent: project the full 6-qubit state with dense matrices
    lam = 0.7 - 0.2j
    omega_p = np.zeros(16, complex)
    for bits, amp in (("0000", A), ("0110", A), ("1001", B), ("1111", -B)):
        omega_p[int(bits, 2)] = amp / math.sqrt(2)
    total = 0.0
    for alice in oracles.BELL:
        for bit in (0, 1):
            state = np.kron(np.kron(oracles.secret(lam), omega_p), [1, 0])
            state = oracles.bell_projector(alice, [0, 1], 6) @ state
            proj = np.diag([1.0, 0.0]) if bit == 0 else np.diag([0.0, 1.0])
            state = oracles.full_operator(proj, [2], 6) @ state
            state = oracles.full_operator(u_matrix(A, B), [4, 5], 6) @ state
            state = oracles.full_operator(np.diag([1.0, 0.0]), [5], 6) @ state
            total += float(np.vdot(state, state).real)
    assert total == pytest.approx(0.72, abs=1e-12)


def test_secret_state_used():
    assert secret_state(1.0).allclose(qcore.ket_from_amplitudes([1, 1]))
