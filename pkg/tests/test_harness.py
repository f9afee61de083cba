import csv
import io
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hqcomm.errors import InvalidConfig
from hqcomm.harness import (
    CSV_COLUMNS,
    PROTOCOLS,
    IoFailure,
    ScenarioConfig,
    _trial_streams,
    canonical,
    emit_report,
    parse_report,
    random_lambda,
    run_scenario,
    trial_rng,
    verify_tables,
    write_report,
)


def cfg(**kw):
    return ScenarioConfig(**kw)


SMALL = {
    "hqis-perfect": cfg(protocol="hqis-perfect", trials=20, seed=3),
    "hqis-probabilistic": cfg(protocol="hqis-probabilistic", a=0.8, b=0.6, receiver="Bob",
                              lam="random", trials=20, seed=3),
    "hqss": cfg(protocol="hqss", n=2, adversary="intercept-resend", trials=10, seed=3),
    "attack-study": cfg(protocol="attack-study", trials=10, seed=3),
    "verify-tables": cfg(protocol="verify-tables", trials=2, seed=3),
    "verify-encryption": cfg(protocol="verify-encryption", lam="random", trials=5, seed=3),
}


class TestValidation:
    @pytest.mark.parametrize("kw, field", [
        ({"protocol": "teleport"}, "protocol"),
        ({"seed": -1}, "seed"),
        ({"seed": 2**64}, "seed"),
        ({"trials": 0}, "trials"),
        ({"lam": "sometimes"}, "lambda"),
        ({"lam": complex("nan")}, "lambda"),
        ({"channel": "omega-prime"}, "channel"),
        ({"receiver": "Alice"}, "receiver"),
        ({"receiver": "Eve"}, "receiver"),
        ({"a": 0.8, "b": 0.6}, "a"),
        ({"n": 2}, "n"),
        ({"adversary": "intercept-resend"}, "adversary"),
        ({"protocol": "hqss", "n": 4}, "n"),
        ({"protocol": "hqss", "threshold": 1.5}, "threshold"),
        ({"protocol": "hqss", "intercept_prob": -0.1}, "intercept_prob"),
        ({"protocol": "hqss", "channel": "cluster4"}, "channel"),
        ({"protocol": "hqis-probabilistic", "a": 0.8}, "b"),
        ({"protocol": "hqis-probabilistic", "a": 0.8, "b": 0.5}, "a"),
        ({"protocol": "hqis-probabilistic", "a": 0.6, "b": 0.8}, "b"),
        ({"protocol": "hqis-probabilistic", "a": 1.0, "b": 0.0}, "b"),
        ({"protocol": "hqis-probabilistic", "a": 0.8, "b": 0.6, "receiver": "Charlie"},
         "receiver"),
    ])
    def test_rejects(self, kw, field):
        with pytest.raises(InvalidConfig) as exc:
            cfg(**kw).validated()
        assert exc.value.field == field

    def test_defaults(self):
        c = cfg(protocol="hqss").validated()
        assert (c.channel, c.n, c.trials, c.threshold) == ("omega", 1, 1000, 0.0)
        assert cfg(protocol="hqis-probabilistic", a=0.8, b=0.6).validated().channel == "omega-prime"

    def test_receiver_case_insensitive(self):
        assert cfg(receiver="diana").validated().receiver == "Diana"

    def test_renormalizes_amplitudes(self):
        c = cfg(protocol="hqis-probabilistic", a=0.8, b=0.6 + 1e-10).validated()
        assert c.a**2 + c.b**2 == pytest.approx(1, abs=1e-15)

    def test_dict_round_trip(self):
        c = cfg(protocol="hqis-perfect", lam=1 - 2j, seed=5)
        d = c.to_dict()
        assert d["lambda"] == [1.0, -2.0]
        assert ScenarioConfig.from_dict(json.loads(json.dumps(d))) == c

    def test_unknown_key(self):
        with pytest.raises(InvalidConfig) as exc:
            ScenarioConfig.from_dict({"protocl": "hqss"})
        assert exc.value.field == "protocl"


class TestStreams:
    def test_trial_stream_independent_of_batch(self):
        a = trial_rng(7, 5).random(3)
        b = trial_rng(7, 5).random(3)
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, trial_rng(7, 6).random(3))

    @given(st.integers(0, 2**64 - 1), st.integers(0, 10**6))
    def test_random_lambda_range(self, seed, k):
        lam = random_lambda(trial_rng(seed, k))
        assert -2 <= lam.real <= 2 and -2 <= lam.imag <= 2

    @given(st.integers(0, 2**64 - 1), st.integers(1, 5))
    def test_rewound_streams_match_fresh_generators(self, seed, trials):
        for k, rng in _trial_streams(seed, trials):
            fresh = trial_rng(seed, k)
            assert rng.random() == fresh.random()
            assert rng.integers(4, size=5).tolist() == fresh.integers(4, size=5).tolist()

    def test_trial_k_reproducible_in_isolation(self):
        full = run_scenario(cfg(protocol="hqis-perfect", lam="random", trials=8, seed=11))
        lam = random_lambda(trial_rng(11, 5))
        assert [full.rows[5]["lambda_re"], full.rows[5]["lambda_im"]] == canonical(lam)
        first = run_scenario(cfg(protocol="hqis-perfect", lam="random", trials=6, seed=11))
        assert first.rows == full.rows[:6]


class TestCanonical:
    def test_float_digits(self):
        assert canonical(0.1 + 0.2) == 0.3
        assert canonical(-0.0) == 0.0
        assert canonical(1 + 2j) == [1.0, 2.0]
        assert canonical(np.float64(1 / 3)) == 0.333333333333
        assert canonical(float("inf")) == "inf"

    def test_nested(self):
        assert canonical({"a": (np.int64(1), True, None)}) == {"a": [1, True, None]}


class TestScenarios:
    def test_perfect_example(self):
        rep = run_scenario(cfg(protocol="hqis-perfect", receiver="diana", lam=1, trials=1000,
                               seed=7))
        assert rep.aggregates["mean_fidelity"] == 1.0
        assert rep.passed is None

    def test_probabilistic_aggregates(self):
        rep = run_scenario(cfg(protocol="hqis-probabilistic", a=0.8, b=0.6, trials=2000, seed=7))
        agg = rep.aggregates
        assert agg["exact_success_probability"] == 0.72
        assert abs(agg["z_score"]) < 5
        assert agg["min_fidelity_on_success"] == 1.0
        assert agg["failure_states_are_one"] is True

    def test_hqss_honest(self):
        rep = run_scenario(cfg(protocol="hqss", n=2, receiver="Bob", trials=30, seed=1))
        assert rep.aggregates["aborts"] == 0
        assert rep.aggregates["decoy_errors"] == 0
        assert rep.aggregates["min_fidelity"] == 1.0

    def test_hqss_intercept(self):
        rep = run_scenario(cfg(protocol="hqss", n=2, adversary="intercept-resend",
                               trials=400, seed=1))
        agg = rep.aggregates
        assert abs(agg["decoy_error_rate"] - 0.25) < 5 * agg["decoy_error_sigma"]
        assert abs(agg["abort_rate"] - agg["expected_abort_rate"]) < 5 * agg["abort_sigma"]

    def test_encryption_passes(self):
        rep = run_scenario(SMALL["verify-encryption"])
        assert rep.passed is True
        assert rep.aggregates["weak_receiver"] == "Bob"
        assert rep.aggregates["role_swap_all"] is True

    def test_attack_study(self):
        agg = run_scenario(SMALL["attack-study"]).aggregates
        assert agg["min_bare_fidelity"] == 1.0
        assert sum(agg["blind_fidelity_histogram"]) == 10

    @pytest.mark.parametrize("protocol", PROTOCOLS)
    def test_byte_identical_reruns(self, protocol):
        c = SMALL[protocol]
        for fmt in ("json", "csv", "human"):
            assert emit_report(run_scenario(c), fmt) == emit_report(run_scenario(c), fmt)

    def test_seed_changes_output(self):
        a = run_scenario(cfg(protocol="hqis-perfect", trials=10, seed=1))
        b = run_scenario(cfg(protocol="hqis-perfect", trials=10, seed=2))
        assert a.rows != b.rows
        assert a.provenance["config_hash"] != b.provenance["config_hash"]


class TestEmit:
    @pytest.mark.parametrize("protocol", PROTOCOLS)
    def test_json_round_trip(self, protocol):
        rep = run_scenario(SMALL[protocol])
        assert parse_report(emit_report(rep, "json")) == rep

    @pytest.mark.parametrize("protocol", PROTOCOLS)
    def test_csv_header(self, protocol):
        rep = run_scenario(SMALL[protocol])
        rows = list(csv.reader(io.StringIO(emit_report(rep, "csv").decode())))
        assert tuple(rows[0]) == CSV_COLUMNS[protocol]
        assert len(rows) == len(rep.rows) + 1

    def test_human_has_provenance(self):
        rep = run_scenario(SMALL["hqis-perfect"])
        text = emit_report(rep, "human").decode()
        assert "seed: 3" in text
        assert rep.provenance["config_hash"] in text

    def test_schema_and_order(self):
        d = json.loads(emit_report(run_scenario(SMALL["hqss"])))
        assert list(d) == ["schema_version", "protocol", "provenance", "config", "passed",
                           "aggregates", "rows"]
        assert d["schema_version"] == 1

    def test_unknown_format(self):
        with pytest.raises(ValueError):
            emit_report(run_scenario(SMALL["hqis-perfect"]), "xml")

    def test_write_failure(self, tmp_path):
        rep = run_scenario(SMALL["hqis-perfect"])
        with pytest.raises(IoFailure):
            write_report(rep, "json", str(tmp_path / "missing" / "r.json"))
        path = tmp_path / "r.json"
        write_report(rep, "json", str(path))
        assert path.read_bytes() == emit_report(rep, "json")


@pytest.fixture(scope="module")
def report():
    return verify_tables()


class TestVerifyTables:
    def test_all_rows_pass(self, report):
        assert report.summary() == {
            "diana-perfect": {"rows": 8, "passed": 8},
            "bob-perfect": {"rows": 16, "passed": 16},
            "diana-probabilistic": {"rows": 8, "passed": 8},
            "bob-probabilistic": {"rows": 16, "passed": 16},
        }
        assert report.passed
        assert all(r.lambdas == 25 for r in report.rows)

    def test_discrepancy_flagged(self, report):
        d = report.discrepancy
        assert d["row"] == ["PhiMinus", "PsiMinus"] and d["printed"] == "U1"
        assert d["candidates"]["U"]["passed"]
        assert not d["candidates"]["U1"]["passed"]
        noted = [r for r in report.rows if r.note]
        assert [(r.alice_outcome, r.helper_outcome) for r in noted] == [("PhiMinus", "PsiMinus")]

    def test_subset(self):
        rep = verify_tables(n_lambda=2, tables=("diana-perfect",))
        assert len(rep.rows) == 8 and rep.discrepancy == {}
