import json
from pathlib import Path

from jsonschema import Draft202012Validator
import pytest
from referencing import Registry, Resource

from skfeedback.launcher.main import CSV_COLUMNS, EXIT_INFEASIBLE, EXIT_OK, EXIT_USAGE, main

SCHEMAS = Path(__file__).resolve().parents[2] / "schemas"


def _schema(name: str) -> dict:
    return json.loads((SCHEMAS / name).read_text(encoding="utf-8"))


def _registry() -> Registry:
    resources = []
    for path in sorted(SCHEMAS.glob("*.schema.json")):
        contents = json.loads(path.read_text(encoding="utf-8"))
        resources.append((contents["$id"], Resource.from_contents(contents)))
    return Registry().with_resources(resources)


def _assert_matches_schema(payload: dict, name: str):
    schema = _schema(name)
    Draft202012Validator.check_schema(schema)
    Draft202012Validator(schema, registry=_registry()).validate(payload)


def _data_lines(text: str) -> list[str]:
    return [line for line in text.splitlines() if line and not line.startswith("#")]


class TestGapCurveCommand:
    def test_csv_to_stdout(self, capsys):
        code = main(["-q", "gap-curve", "--rate", "4", "--dsnr-db", "20", "--n-max", "3"])
        assert code == EXIT_OK
        out = capsys.readouterr().out
        lines = _data_lines(out)
        assert lines[0] == ",".join(CSV_COLUMNS)
        assert len(lines) == 4
        assert all(line.startswith("20,") and line.endswith(",true") for line in lines[1:])
        assert out.startswith("# command: gap-curve")
        assert "# n_opt dsnr_db=20: " in out

    def test_single_round(self, tmp_path):
        out = tmp_path / "curve.csv"
        code = main(["-q", "gap-curve", "--rate", "1", "--dsnr-db", "10", "--n-max", "1", "--out", str(out)])
        assert code == EXIT_OK
        text = out.read_text(encoding="utf-8")
        assert len(_data_lines(text)) == 2
        assert "# n_opt dsnr_db=10: 1" in text

    def test_json_with_noiseless_curve(self, tmp_path):
        out = tmp_path / "curve.json"
        code = main(["-q", "gap-curve", "--rate", "1", "--noiseless", "--n-max", "2", "--format", "json", "--out", str(out)])
        assert code == EXIT_OK
        payload = json.loads(out.read_text(encoding="utf-8"))
        _assert_matches_schema(payload, "gap_curve.schema.json")
        curve = payload["curves"][0]
        assert curve["dsnr_db"] is None
        assert [p["n"] for p in curve["points"]] == [1, 2]
        assert all(p["feasible"] is True for p in curve["points"])

    def test_many_rounds(self, tmp_path):
        out = tmp_path / "curve.json"
        code = main(["-q", "gap-curve", "--rate", "1", "--noiseless", "--dsnr-db", "20", "--n-max", "60",
                     "--format", "json", "--out", str(out)])
        assert code == EXIT_OK
        payload = json.loads(out.read_text(encoding="utf-8"))
        _assert_matches_schema(payload, "gap_curve.schema.json")
        for curve in payload["curves"]:
            assert len(curve["points"]) == 60
            assert all(p["feasible"] is True for p in curve["points"])

    def test_plot(self, tmp_path):
        png = tmp_path / "gap.png"
        code = main(["-q", "gap-curve", "--rate", "4", "--dsnr-db", "20", "--noiseless", "--n-max", "4",
                     "--plot", str(png), "--out", str(tmp_path / "gap.csv")])
        assert code == EXIT_OK
        assert png.is_file()

    @pytest.mark.parametrize(
        "argv",
        [
            ["gap-curve", "--rate", "1", "--dsnr-db", "10", "--n-max", "0"],
            ["gap-curve", "--dsnr-db", "10"],
            ["gap-curve", "--rate", "1"],
            ["gap-curve", "--curve-set", "rate-99"],
            ["gap-curve", "--rate", "1", "--dsnr-db", "0"],
        ],
    )
    def test_usage_errors(self, argv):
        assert main(["-q", *argv]) == EXIT_USAGE


class TestTheoremCommand:
    def test_output(self, tmp_path):
        out = tmp_path / "theorem.json"
        code = main(["-q", "theorem", "--rounds", "10", "--snr-db", "60", "--dsnr-db", "20", "--out", str(out)])
        assert code == EXIT_OK
        payload = json.loads(out.read_text(encoding="utf-8"))
        _assert_matches_schema(payload, "theorem.schema.json")
        assert payload["theorem"]["gap_db"] == pytest.approx(payload["approx_gap_db"], abs=0.01)

    def test_error_floor(self):
        assert main(["-q", "theorem", "--rounds", "10", "--snr-db", "0", "--dsnr-db", "3"]) == EXIT_INFEASIBLE

    def test_below_operating_range(self):
        assert main(["-q", "theorem", "--rounds", "2", "--snr-db", "2", "--dsnr-db", "30"]) == EXIT_INFEASIBLE

    def test_missing_argument(self):
        with pytest.raises(SystemExit) as excinfo:
            main(["-q", "theorem", "--rounds", "10"])
        assert excinfo.value.code == EXIT_USAGE


class TestSimulateCommand:
    def test_proposed_scheme(self, tmp_path):
        out = tmp_path / "sim.json"
        code = main(["-q", "simulate", "--scheme", "proposed", "--system", "desk-proposed",
                     "--trials", "2000", "--seed", "7", "--variance-profile", "--out", str(out)])
        assert code == EXIT_OK
        payload = json.loads(out.read_text(encoding="utf-8"))
        _assert_matches_schema(payload, "simulate.schema.json")
        assert payload["result"]["trials"] == 2000
        assert payload["manifest"]["seed"] == 7
        assert len(payload["variance_profile"]["variance"]) == 4

    def test_overrides_named_system(self, tmp_path):
        out = tmp_path / "sim.json"
        code = main(["-q", "simulate", "--scheme", "uncoded", "--system", "desk-uncoded", "--snr-db", "20",
                     "--trials", "1000", "--out", str(out)])
        assert code == EXIT_OK
        payload = json.loads(out.read_text(encoding="utf-8"))
        assert payload["config"]["P"] == pytest.approx(100.0)
        assert "budget" not in payload

    def test_unknown_scheme(self):
        with pytest.raises(SystemExit) as excinfo:
            main(["-q", "simulate", "--scheme", "turbo", "--system", "desk-proposed"])
        assert excinfo.value.code == EXIT_USAGE

    @pytest.mark.parametrize(
        "argv",
        [
            ["--scheme", "uncoded", "--system", "desk-proposed", "--trials", "0"],
            ["--scheme", "sk", "--system", "desk-coupled", "--trials", "10"],
            ["--scheme", "proposed", "--system", "desk-nowhere", "--trials", "10"],
            ["--scheme", "proposed", "--snr-db", "10", "--trials", "10"],
            ["--scheme", "proposed", "--system", "desk-proposed", "--trials", "10", "--workers", "0"],
        ],
    )
    def test_usage_errors(self, argv):
        assert main(["-q", "simulate", *argv]) == EXIT_USAGE

    def test_error_floor(self):
        argv = ["-q", "simulate", "--scheme", "proposed", "--snr-db", "0", "--dsnr-db", "3", "--rounds", "10",
                "--rate", "1", "--pe", "1e-6", "--trials", "10"]
        assert main(argv) == EXIT_INFEASIBLE


class TestVerifyCouplingCommand:
    def test_aggressive_configuration(self, tmp_path):
        out = tmp_path / "coupling.json"
        code = main(["-q", "verify-coupling", "--system", "desk-coupling-aggressive", "--trials", "3000",
                     "--out", str(out)])
        assert code == EXIT_OK
        payload = json.loads(out.read_text(encoding="utf-8"))
        _assert_matches_schema(payload, "coupling.schema.json")
        assert payload["report"]["violations"] == 0

    def test_invalid_workers(self):
        argv = ["-q", "verify-coupling", "--system", "desk-coupled", "--trials", "10", "--workers", "0"]
        assert main(argv) == EXIT_USAGE


class TestTradeoffCommand:
    def test_default_one_way_gap(self, capsys):
        code = main(["-q", "tradeoff", "--snr-db", "10", "--gap-star-db", "0.4"])
        assert code == EXIT_OK
        payload = json.loads(capsys.readouterr().out)
        assert payload["interactive_wins"] is True
        assert 22.0 < payload["crossover_snr_db"] < 24.0
        assert payload["manifest"]["parameters"]["gap_fec_db"] == pytest.approx(9.01787449938529)
