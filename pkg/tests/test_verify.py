import json

import pytest

from credal_ot import cli
from credal_ot.exceptions import InputError
from credal_ot.verify import SUITES, superadditive_witness, run_suites, trial_rng


@pytest.mark.parametrize("suite", sorted(set(SUITES) - {"gaussian"}))
def test_small_suites_pass(suite):
    report = run_suites(suite, seed=3, trials=8)
    assert report and all(e["passed"] for e in report), [e for e in report if not e["passed"]]


def test_gaussian_suite_small():
    report = run_suites("gaussian", seed=3, trials=3)
    assert all(e["passed"] for e in report)


def test_deterministic():
    a = run_suites("conditioning", seed=11, trials=20)
    b = run_suites("conditioning", seed=11, trials=20)
    assert a == b


def test_monge_ratio_notes():
    report = run_suites("monge-equiv", seed=7, trials=20)
    ratios = [e["notes"] for e in report if "expected_ratio" in e["notes"]]
    assert ratios
    for notes in ratios:
        assert notes["mean_ratio"] == pytest.approx(notes["expected_ratio"], abs=1e-12)


def test_tolerance_override_can_fail():
    report = run_suites("choquet-oracles", seed=7, trials=10, tol=0.0)
    assert not all(e["passed"] for e in report)


def test_unknown_suite():
    with pytest.raises(InputError):
        run_suites("bogus")


def test_trial_rng_independent_of_order():
    assert trial_rng(1, 2, 3).random() == trial_rng(1, 2, 3).random()
    assert trial_rng(1, 2, 3).random() != trial_rng(1, 2, 4).random()


def test_witness_total():
    assert superadditive_witness(0.25).table[-1] == pytest.approx(0.75)


def test_cli_verify(capsys):
    code = cli.run(["verify", "--suite", "conditioning", "--trials", "30", "--seed", "7"])
    out, err = capsys.readouterr()
    assert code == 0
    doc = json.loads(out)
    assert doc["diagnostics"]["passed"] is True
    lines = [ln for ln in err.splitlines() if ln.startswith(("PASS", "FAIL"))]
    assert lines and all(ln.startswith("PASS") for ln in lines)


def test_cli_verify_failure_exit(capsys):
    code = cli.run(["verify", "--suite", "choquet-oracles", "--trials", "5", "--tolerance", "0"])
    capsys.readouterr()
    assert code == 1
