import json
from pathlib import Path

import numpy as np
import pytest

from credal_ot import cli
from credal_ot import io as cio
from credal_ot.exceptions import InputError, SolverError

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
ALL_FIXTURES = sorted(FIXTURES.glob("*.json"))


def run(capsys, *argv):
    code = cli.run([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def fx(name):
    return FIXTURES / f"{name}.json"


class TestCanonical:
    @pytest.mark.parametrize("path", ALL_FIXTURES, ids=lambda p: p.stem)
    def test_fixture_roundtrip(self, path):
        text = path.read_text()
        again = cio.canonical_dumps(cio.loads(text))
        assert again == text
        assert cio.canonical_dumps(cio.loads(again)) == again

    def test_float_format(self):
        assert cio.canonical_dumps({"b": 0.1, "a": 1.0, "c": [1, None, True]}) == \
            '{"a": 1.0, "b": 0.10000000000000001, "c": [1, null, true]}\n'
        x = 0.1 + 0.2
        assert json.loads(cio.canonical_dumps(x)) == x

    def test_rejects_nan(self):
        with pytest.raises(InputError):
            cio.canonical_dumps(float("nan"))

    def test_csv_line_endings(self):
        text = cio.plan_csv(np.eye(2) / 2)
        assert "\r" not in text
        assert text.splitlines() == ["i,j,mass", "0,0,0.5", "0,1,0.0", "1,0,0.0", "1,1,0.5"]

    def test_parse_errors(self):
        with pytest.raises(InputError):
            cio.parse_distribution({"space": [1, 2], "mass": [1.0]})
        with pytest.raises(InputError):
            cio.parse_matrix({"rows": 2, "cols": 2, "data": [[1.0, 2.0]]})
        with pytest.raises(InputError):
            cio.parse_contamination({"base": {"space": [0], "mass": [1.0]}, "epsilon": "x"})


class TestExamples:
    def test_kantorovich_uniform(self, capsys):
        code, out, _ = run(capsys, "kantorovich", "--input", fx("uniform2"))
        assert code == 0 and json.loads(out)["value"] == 0.0

    def test_lower_kantorovich_skew(self, capsys):
        code, out, _ = run(capsys, "lower-kantorovich", "--input", fx("skew"), "--epsilon", 0.2)
        doc = json.loads(out)
        assert code == 0
        assert doc["value"] == pytest.approx(0.2, abs=1e-12)
        assert doc["diagnostics"]["classical_value"] == pytest.approx(0.25, abs=1e-12)

    def test_choquet_and_condition(self, capsys):
        _, out, _ = run(capsys, "choquet", "--input", fx("choquet"))
        assert json.loads(out)["value"] == 1.0
        _, out, _ = run(capsys, "condition", "--input", fx("condition"))
        doc = json.loads(out)
        assert doc["value"] == pytest.approx(1 / 3, abs=1e-15)
        assert doc["diagnostics"]["geometric"] == 0.5

    def test_infeasible_monge(self, capsys):
        code, out, _ = run(capsys, "monge", "--input", fx("monge_dirac_source"))
        doc = json.loads(out)
        assert code == 0 and doc["value"] is None and doc["diagnostics"]["feasible"] is False

    def test_wasserstein(self, capsys):
        code, out, _ = run(capsys, "wasserstein", "--input", fx("wasserstein"), "--p-exponent", 2)
        assert code == 0 and json.loads(out)["value"] == pytest.approx(1.0)

    def test_epsilon_fill_in(self, capsys, tmp_path):
        doc = cio.loads(fx("skew").read_text())
        doc["p"] = {"base": doc["p"], "epsilon": 0.5}
        doc["q"] = {"base": doc["q"], "epsilon": 0.5}
        path = tmp_path / "eps.json"
        path.write_text(cio.canonical_dumps(doc))
        _, out, _ = run(capsys, "lower-kantorovich", "--input", path, "--epsilon", 0.2)
        assert json.loads(out)["value"] == pytest.approx(0.125, abs=1e-12)


class TestExitCodes:
    @pytest.mark.parametrize("argv,code", [
        (["kantorovich", "--input", fx("uniform2")], 0),
        (["lower-monge", "--input", fx("lower_monge_eps_mismatch")], 3),
        (["kantorovich", "--input", fx("missing_cost")], 2),
        (["monge", "--input", fx("monge_too_large")], 4),
        (["wasserstein", "--input", fx("bad_metric")], 2),
        (["kantorovich", "--input", "/nonexistent/input.json"], 2),
        (["kantorovich", "--input", fx("uniform2"), "--output", "/nonexistent/dir/out.json"], 2),
        (["verify", "--suite", "no-such-suite"], 2),
    ])
    def test_codes(self, capsys, argv, code):
        with pytest.raises(SystemExit) if code == 2 and argv[0] == "verify" else _null():
            got, _, err = run(capsys, *argv)
            assert got == code
            if code:
                reason = json.loads(err.strip().splitlines()[-1])
                assert reason["exit_code"] == code and reason["message"]

    def test_internal_error(self, capsys, monkeypatch):
        def broken(*a, **k):
            raise SolverError("simulated solver failure")
        monkeypatch.setattr(cli, "solve_kantorovich", broken)
        code, _, err = run(capsys, "kantorovich", "--input", fx("uniform2"))
        assert code == 1
        assert json.loads(err.strip())["error"] == "internal-error"

    def test_unwritable_plot_path(self, capsys):
        code, _, _ = run(capsys, "kantorovich", "--input", fx("uniform2"),
                         "--emit-plot-data", "/nonexistent/dir/p.csv")
        assert code == 2


class _null:
    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False


class TestDeterminism:
    @pytest.mark.parametrize("argv", [
        ["lower-kantorovich", "--input", fx("skew"), "--epsilon", "0.2"],
        ["gauss-map", "--input", fx("gauss2d"), "--seed", "3"],
        ["choquet", "--input", fx("choquet")],
    ])
    def test_byte_identical(self, capsys, argv):
        _, a, _ = run(capsys, *argv)
        _, b, _ = run(capsys, *argv)
        assert a == b and a.endswith("\n")

    def test_provenance(self, capsys):
        _, out, _ = run(capsys, "kantorovich", "--input", fx("uniform2"), "--seed", 9)
        prov = json.loads(out)["provenance"]
        assert prov["seed"] == 9
        assert prov["input_sha256"] == cio.sha256_hex(fx("uniform2").read_bytes())


class TestPlotData:
    def test_diagonal_plan(self, capsys, tmp_path):
        path = tmp_path / "plan.csv"
        run(capsys, "kantorovich", "--input", fx("uniform2"), "--emit-plot-data", path)
        rows = path.read_text().splitlines()[1:]
        assert len(rows) == 4
        off = [float(r.split(",")[2]) for r in rows if r.split(",")[0] != r.split(",")[1]]
        assert off == [0.0, 0.0]

    def test_monge1d_line(self, capsys, tmp_path):
        path = tmp_path / "map.csv"
        run(capsys, "monge1d", "--input", fx("monge1d_uniform"), "--emit-plot-data", path)
        data = np.loadtxt(path, delimiter=",", skiprows=1)
        assert data.shape[0] == 11
        assert np.allclose(data[:, 1], 2 * data[:, 0], atol=1e-12)

    def test_gauss1d_slope(self, capsys, tmp_path):
        path = tmp_path / "g.csv"
        run(capsys, "gauss-map", "--input", fx("gauss1d"), "--emit-plot-data", path)
        data = np.loadtxt(path, delimiter=",", skiprows=1)
        slope = np.polyfit(data[:, 0], data[:, 1], 1)[0]
        assert slope == pytest.approx(1.5, abs=1e-12)

    def test_no_plot_for_scalar(self, capsys, tmp_path):
        code, _, _ = run(capsys, "choquet", "--input", fx("choquet"),
                         "--emit-plot-data", tmp_path / "x.csv")
        assert code == 2
