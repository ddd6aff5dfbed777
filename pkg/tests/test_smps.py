import json
import string

import numpy as np
import pytest

from lshaped import (
    ParseError,
    SmpsTriple,
    StochasticTemplate,
    TwoStageProblem,
    enumerate_scenarios,
    parse_native,
    parse_smps,
    validate_problem,
    write_native,
)
from helpers import P1_CORE, P1_STOCH, P1_TIME, build_p1, random_instance, random_template


def p1_triple(core=P1_CORE, time=P1_TIME, stoch=P1_STOCH):
    return SmpsTriple(core_text=core, time_text=time, stoch_text=stoch)


class TestParseSmps:
    def test_p1_fixture_round_trip(self, p1):
        template = parse_smps(p1_triple())
        prob = enumerate_scenarios(template)
        assert validate_problem(prob) == []
        assert prob.n_scenarios == 2
        assert np.array_equal(prob.first.c, p1.first.c)
        assert np.array_equal(prob.W, p1.W)
        for got, want in zip(prob.scenarios, p1.scenarios):
            assert got.pi == want.pi
            assert np.array_equal(got.q, want.q)
            assert np.array_equal(got.T, want.T)
            assert np.array_equal(got.h, want.h)

    def test_three_periods_rejected(self):
        time3 = P1_TIME.replace("ENDATA", "    Y         R2        T3\nENDATA")
        with pytest.raises(ParseError) as err:
            parse_smps(p1_triple(time=time3))
        assert any("exactly two periods" in d.message for d in err.value.diagnostics)

    def test_stoch_probability_sum_diagnostic(self):
        bad = P1_STOCH.replace("0.5", "0.4", 1)
        with pytest.raises(ParseError) as err:
            parse_smps(p1_triple(stoch=bad))
        diag = err.value.diagnostics[0]
        assert diag.file == "stoch"
        assert "sum to 0.9" in diag.message
        assert diag.line == 3

    def test_blocks_section_rejected(self):
        stoch = "STOCH P1\nBLOCKS DISCRETE\nENDATA\n"
        with pytest.raises(ParseError) as err:
            parse_smps(p1_triple(stoch=stoch))
        assert any("BLOCKS" in d.message for d in err.value.diagnostics)

    def test_unknown_core_section_rejected(self):
        core = P1_CORE.replace("RHS\n", "SOS\nRHS\n")
        with pytest.raises(ParseError) as err:
            parse_smps(p1_triple(core=core))
        assert any("unknown section" in d.message for d in err.value.diagnostics)

    def test_dangling_stoch_row(self):
        stoch = P1_STOCH.replace("R2", "R9")
        with pytest.raises(ParseError) as err:
            parse_smps(p1_triple(stoch=stoch))
        assert any("unknown row" in d.message for d in err.value.diagnostics)

    def test_recourse_matrix_randomness_rejected(self):
        stoch = (
            "STOCH P1\nINDEP DISCRETE\n"
            "    Y         R2        1.0       0.5\n"
            "    Y         R2        2.0       0.5\nENDATA\n"
        )
        with pytest.raises(ParseError) as err:
            parse_smps(p1_triple(stoch=stoch))
        assert any("recourse" in d.message for d in err.value.diagnostics)

    def test_objective_cost_randomness_on_stage2_column(self):
        stoch = (
            "STOCH P1\nINDEP DISCRETE\n"
            "    Y         OBJ       1.0       0.5\n"
            "    Y         OBJ       2.0       0.5\nENDATA\n"
        )
        template = parse_smps(p1_triple(stoch=stoch))
        assert template.entries[0].target == "q"
        prob = enumerate_scenarios(template)
        assert [s.q[0] for s in prob.scenarios] == [1.0, 2.0]

    def test_technology_randomness_on_stage1_column(self):
        stoch = (
            "STOCH P1\nINDEP DISCRETE\n"
            "    X         R2        0.5       0.25\n"
            "    X         R2        1.5       0.75\nENDATA\n"
        )
        template = parse_smps(p1_triple(stoch=stoch))
        entry = template.entries[0]
        assert entry.target == "T" and entry.row == 0 and entry.col == 0
        prob = enumerate_scenarios(template)
        assert [s.T[0, 0] for s in prob.scenarios] == [0.5, 1.5]

    def test_period_field_in_stoch_lines_accepted(self):
        stoch = P1_STOCH.replace("2.0       0.5", "2.0  T2  0.5").replace(
            "4.0       0.5", "4.0  T2  0.5"
        )
        template = parse_smps(p1_triple(stoch=stoch))
        assert [v for v, _ in template.entries[0].outcomes] == [2.0, 4.0]

    def test_ranged_row_expands_to_two_rows(self):
        core = P1_CORE.replace("ENDATA", "RANGES\n    RNG       R2        1.0\nENDATA")
        template = parse_smps(p1_triple(stoch="STOCH P1\nINDEP DISCRETE\nENDATA\n"))
        ranged = parse_smps(
            SmpsTriple(core_text=core, time_text=P1_TIME,
                       stoch_text="STOCH P1\nINDEP DISCRETE\nENDATA\n")
        )
        assert ranged.T.shape[0] == template.T.shape[0] + 1

    def test_upper_bound_becomes_row(self):
        core = P1_CORE.replace("ENDATA", "BOUNDS\n UP BND       X         1.5\nENDATA")
        template = parse_smps(
            SmpsTriple(core_text=core, time_text=P1_TIME,
                       stoch_text="STOCH P1\nINDEP DISCRETE\nENDATA\n")
        )
        # the bound row x + slack = 1.5 lands in the first stage
        assert template.first.A.shape[0] == 1
        assert template.first.b[0] == 1.5

    def test_unsupported_bound_type(self):
        core = P1_CORE.replace("ENDATA", "BOUNDS\n MI BND       X\nENDATA")
        with pytest.raises(ParseError) as err:
            parse_smps(
                SmpsTriple(core_text=core, time_text=P1_TIME,
                           stoch_text="STOCH P1\nINDEP DISCRETE\nENDATA\n")
            )
        assert any("bound" in d.message for d in err.value.diagnostics)


class TestParseNative:
    def test_p1_document(self, p1):
        prob = parse_native(write_native(p1, name="p1"))
        assert isinstance(prob, TwoStageProblem)
        assert validate_problem(prob) == []

    def test_scenarios_and_random_mutually_exclusive(self, p1):
        doc = json.loads(write_native(p1))
        doc["nominal"] = {"q": [1.0, 0.0], "T": [[1.0]], "h": [2.0]}
        doc["random"] = []
        with pytest.raises(ParseError) as err:
            parse_native(json.dumps(doc))
        assert any("mutually exclusive" in d.message for d in err.value.diagnostics)

    def test_empty_scenarios_rejected(self, p1):
        doc = json.loads(write_native(p1))
        doc["scenarios"] = []
        with pytest.raises(ParseError) as err:
            parse_native(json.dumps(doc))
        assert any("N >= 1" in d.message for d in err.value.diagnostics)

    def test_diagnostics_carry_json_paths(self, p1):
        doc = json.loads(write_native(p1))
        doc["scenarios"][1]["T"] = "oops"
        with pytest.raises(ParseError) as err:
            parse_native(json.dumps(doc))
        assert any("$.scenarios[1].T" in d.message for d in err.value.diagnostics)

    def test_bad_version(self):
        with pytest.raises(ParseError) as err:
            parse_native('{"version": 2}')
        assert any("version" in d.message for d in err.value.diagnostics)

    def test_probability_rescale_within_tolerance(self, p1):
        doc = json.loads(write_native(p1))
        doc["scenarios"][0]["pi"] = 0.5 + 4e-10
        prob = parse_native(json.dumps(doc))
        assert sum(s.pi for s in prob.scenarios) == pytest.approx(1.0, abs=1e-15)

    def test_probability_rejection_beyond_tolerance(self, p1):
        doc = json.loads(write_native(p1))
        doc["scenarios"][0]["pi"] = 0.4
        with pytest.raises(ParseError) as err:
            parse_native(json.dumps(doc))
        assert any("sum to 0.9" in d.message for d in err.value.diagnostics)

    def test_template_document_round_trip(self):
        template = random_template(3)
        parsed = parse_native(write_native(template, name="t"))
        assert isinstance(parsed, StochasticTemplate)
        assert np.array_equal(parsed.q, template.q)
        assert len(parsed.entries) == len(template.entries)
        for a, b in zip(parsed.entries, template.entries):
            assert (a.target, a.row, a.col) == (b.target, b.row, b.col)
            assert a.outcomes == b.outcomes


class TestRoundTrip:
    def test_problem_round_trips_exactly(self):
        for seed in range(6):
            prob = random_instance(seed, 7)
            parsed = parse_native(write_native(prob))
            assert np.array_equal(parsed.first.c, prob.first.c)
            assert np.array_equal(parsed.first.A, prob.first.A)
            assert np.array_equal(parsed.first.b, prob.first.b)
            assert np.array_equal(parsed.W, prob.W)
            for a, b in zip(parsed.scenarios, prob.scenarios):
                # pi may shift a few ulps when load-time renormalization fires
                assert a.pi == pytest.approx(b.pi, abs=1e-12)
                assert np.array_equal(a.q, b.q)
                assert np.array_equal(a.T, b.T)
                assert np.array_equal(a.h, b.h)


class TestFuzz:
    def test_arbitrary_bytes_only_raise_parse_errors(self):
        rng = np.random.default_rng(13)
        alphabet = string.printable
        for trial in range(150):
            length = int(rng.integers(0, 400))
            text = "".join(alphabet[i] for i in rng.integers(0, len(alphabet), length))
            for attack in ("core", "time", "stoch"):
                parts = {"core": P1_CORE, "time": P1_TIME, "stoch": P1_STOCH}
                parts[attack] = text
                try:
                    parse_smps(SmpsTriple(parts["core"], parts["time"], parts["stoch"]))
                except ParseError:
                    pass
            try:
                parse_native(text)
            except ParseError:
                pass

    def test_mutated_fixture_only_raises_parse_errors(self):
        rng = np.random.default_rng(14)
        for trial in range(100):
            lines = P1_CORE.splitlines()
            k = int(rng.integers(0, len(lines)))
            mutation = rng.integers(0, 3)
            if mutation == 0:
                lines.pop(k)
            elif mutation == 1:
                lines[k] = lines[k][: int(rng.integers(0, len(lines[k]) + 1))]
            else:
                lines.insert(k, "".join(rng.choice(list(" ABC123.-"), size=12)))
            try:
                template = parse_smps(p1_triple(core="\n".join(lines)))
            except ParseError:
                continue
            # anything accepted must expand into a valid problem
            prob = enumerate_scenarios(template)
            assert validate_problem(prob) == []
