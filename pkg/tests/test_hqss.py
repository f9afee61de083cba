import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hqcomm import qcore
from hqcomm.errors import CopyCountOutOfRange
from hqcomm.hqss import (
    DECOY_STATES,
    AdversaryModel,
    DecoyState,
    attack_effectiveness_study,
    prepare_distribution,
    rearrange,
    run_check,
    run_hqss,
    transmit_with_adversary,
)
from hqcomm.register import Register

seeds = st.integers(0, 2**32 - 1)


class TestDecoys:
    def test_bases_and_bits(self):
        assert [(d.basis, d.bit) for d in DECOY_STATES] == [("Z", 0), ("Z", 1), ("X", 0), ("X", 1)]
        np.testing.assert_allclose(DecoyState.XMINUS.ket.amps, np.array([1, -1]) / math.sqrt(2))

    def test_uniform_marginal(self):
        # chi-square over 10^4 preparations, 3 degrees of freedom
        counts = dict.fromkeys(DECOY_STATES, 0)
        rng = np.random.default_rng(123)
        for _ in range(10_000 // 3):
            plan, _ = prepare_distribution(1, rng)
            for d in plan.decoys.values():
                counts[d] += 1
        total = sum(counts.values())
        chi2 = sum((c - total / 4) ** 2 / (total / 4) for c in counts.values())
        # mean 3, sd sqrt(6)
        assert chi2 < 3 + 3 * math.sqrt(6)


class TestPlan:
    def test_n1_layout(self):
        plan, reg = prepare_distribution(1, np.random.default_rng(0))
        assert plan.p_a == ["p1"]
        assert sorted(plan.sent["B"]) == ["d1", "p2"]
        assert set(plan.decoys) == {"d1", "d2", "d3"}

    def test_n2_layout(self):
        plan, _ = prepare_distribution(2, np.random.default_rng(0))
        assert plan.primed["D"] == ["p4", "p8", "d5", "d6"]
        assert plan.p_a == ["p1", "p5"]
        assert plan.p_b == ["p2", "p6"]

    @pytest.mark.parametrize("n", [0, 4])
    def test_copy_range(self, n):
        with pytest.raises(CopyCountOutOfRange):
            prepare_distribution(n, np.random.default_rng(0))

    @given(st.integers(1, 3), seeds)
    def test_permutation_soundness(self, n, seed):
        plan, _ = prepare_distribution(n, np.random.default_rng(seed))
        assert sorted(plan.permutation) == list(range(2 * n))
        coords = plan.signal_coordinates()
        for s, seq in plan.sent.items():
            assert rearrange(seq, coords) == plan.primed[s][:n]
            assert {seq[j] for j in plan.decoy_coordinates()} == set(plan.primed[s][n:])


class TestTransmission:
    def test_no_adversary_is_identity(self):
        plan, reg = prepare_distribution(2, np.random.default_rng(4))
        out, log = transmit_with_adversary(plan, reg, AdversaryModel.none(), np.random.default_rng(0))
        assert log.intercepts == []
        for label in plan.decoys:
            assert out.pure_state(label).allclose(reg.pure_state(label))

    def test_intercept_on_plus_forwards_z_eigenstate(self):
        zeros = 0
        trials = 400
        for seed in range(trials):
            rng = np.random.default_rng(seed)
            reg = Register()
            reg.add(["d1"], DecoyState.XPLUS.ket)
            bit, _ = reg.measure("d1", rng=rng, basis="Z")
            assert reg.pure_state("d1").allclose(qcore.basis_ket(str(bit)))
            zeros += bit == 0
        assert abs(zeros - trials / 2) < 5 * math.sqrt(trials / 4)

    def test_adversary_validation(self):
        with pytest.raises(ValueError):
            AdversaryModel("sniff")
        with pytest.raises(ValueError):
            AdversaryModel.intercept_resend(1.5)
        with pytest.raises(ValueError):
            AdversaryModel.intercept_resend(targets=("A",))


class TestCheck:
    @given(st.integers(1, 3), seeds)
    def test_honest_zero_errors(self, n, seed):
        rng = np.random.default_rng(seed)
        plan, reg = prepare_distribution(n, rng)
        report = run_check(plan, reg, 0.0, rng)
        assert report.decoys_checked == 3 * n
        assert report.errors == 0 and not report.aborted

    def test_error_rate_definition(self):
        rng = np.random.default_rng(0)
        plan, reg = prepare_distribution(1, rng)
        r = run_check(plan, reg, 0.0, rng)
        assert r.error_rate == r.errors / max(r.bases_matched, 1)
        assert r.aborted == (r.error_rate > r.threshold)

    def test_matched_fraction_about_half(self):
        rng = np.random.default_rng(8)
        matched = checked = 0
        for _ in range(1000):
            plan, reg = prepare_distribution(2, rng)
            r = run_check(plan, reg, 0.0, rng)
            matched += r.bases_matched
            checked += r.decoys_checked
        assert abs(matched / checked - 0.5) < 5 * math.sqrt(0.25 / checked)

    def test_intercept_resend_quarter_error(self):
        rng = np.random.default_rng(21)
        adv = AdversaryModel.intercept_resend()
        matched = errors = 0
        while matched < 3000:
            plan, reg = prepare_distribution(2, rng)
            reg, _ = transmit_with_adversary(plan, reg, adv, rng)
            r = run_check(plan, reg, 0.0, rng)
            matched += r.bases_matched
            errors += r.errors
        assert abs(errors / matched - 0.25) < 5 * math.sqrt(0.25 * 0.75 / matched)

    def test_abort_conditional_on_k(self):
        # P(abort | k matched) = 1 - (3/4)^k
        rng = np.random.default_rng(33)
        adv = AdversaryModel.intercept_resend()
        by_k: dict[int, list[int]] = {}
        for _ in range(1500):
            plan, reg = prepare_distribution(2, rng)
            reg, _ = transmit_with_adversary(plan, reg, adv, rng)
            r = run_check(plan, reg, 0.0, rng)
            by_k.setdefault(r.bases_matched, []).append(r.aborted)
        for k, runs in by_k.items():
            if len(runs) < 50:
                continue
            p = 1 - 0.75**k
            sigma = math.sqrt(max(p * (1 - p), 1e-12) / len(runs))
            assert abs(np.mean(runs) - p) <= 5 * sigma + 1e-12

    def test_twelve_decoy_abort_value(self):
        assert 1 - 0.75**12 == pytest.approx(0.968, abs=1e-3)


class TestRunHqss:
    @pytest.mark.parametrize("n", [1, 2])
    @pytest.mark.parametrize("receiver", ["Diana", "Bob"])
    def test_honest(self, n, receiver):
        for seed in range(5):
            t = run_hqss(n, 0.4 + 1.1j, receiver, None, 0.0, np.random.default_rng(seed))
            assert not t.aborted and t.check.errors == 0
            assert len(t.copies) == n
            assert all(c.fidelity == pytest.approx(1, abs=1e-12) for c in t.copies)
            bits = 3 if receiver == "Diana" else 4
            assert all(c.classical_bits_consumed_by_receiver == bits for c in t.copies)

    def test_abort_has_no_secret_phase(self):
        adv = AdversaryModel.intercept_resend()
        for seed in range(40):
            t = run_hqss(3, 1.0, "Diana", adv, 0.0, np.random.default_rng(seed))
            if t.aborted:
                assert t.copies == []
                assert t.to_dict()["aborted"] is True
                return
        pytest.fail("no abort in 40 intercepted sessions")

    def test_deterministic(self):
        adv = AdversaryModel.intercept_resend(0.5)
        a = run_hqss(2, 0.3j, "Bob", adv, 0.5, np.random.default_rng(9)).to_dict()
        b = run_hqss(2, 0.3j, "Bob", adv, 0.5, np.random.default_rng(9)).to_dict()
        assert a == b


class TestAttackStudy:
    def test_bare_versus_hqss(self):
        rng = np.random.default_rng(2)
        reports = [attack_effectiveness_study(1, 0.8 - 0.5j, rng) for _ in range(300)]
        assert all(r.bare_fidelity == pytest.approx(1, abs=1e-12) for r in reports)
        blind = [f for r in reports for f in r.hqss_fidelities]
        assert np.mean(blind) < 0.9
        assert any(f < 0.99 for f in blind)
        assert np.mean([r.detected for r in reports]) > 0.2

    def test_correct_pairing_recovers(self):
        rng = np.random.default_rng(5)
        for _ in range(60):
            r = attack_effectiveness_study(1, 1.0, rng)
            for hit, f in zip(r.correct_pairings, r.hqss_fidelities):
                if hit:
                    assert f == pytest.approx(1, abs=1e-12)
