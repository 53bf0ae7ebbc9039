"""Tests for the bsec command line."""

import json
import sys

import pytest

from byzantine_secretary import cli, model
from byzantine_secretary._errors import OracleFailure
from byzantine_secretary._response import from_exception
from byzantine_secretary.adversaries import gen_knapsack_family, gen_pure_green
from byzantine_secretary.harness import read_csv


def _invoke(monkeypatch, capsys, *argv):
    """Run ``bsec *argv``; return (exit code, parsed stdout or raw text)."""
    monkeypatch.setattr(sys, "argv", ["bsec", *argv])
    code = 0
    try:
        cli.main()
    except SystemExit as e:
        code = e.code
    out = capsys.readouterr().out
    try:
        return code, json.loads(out)
    except json.JSONDecodeError:
        return code, out


# ============================================================
# Param parsing
# ============================================================


class TestParseParams:
    def test_forms(self):
        kwargs = cli._parse_params(["--n=8", "--seed", "3", "--desk", "--K", "2.5", "--in", "r.csv"])
        assert kwargs == {"n": 8, "seed": 3, "desk": True, "K": 2.5, "input": "r.csv"}

    def test_dashes_become_underscores(self):
        assert cli._parse_params(["--family-params", "{}"]) == {"family_params": "{}"}

    def test_bare_word_rejected(self):
        with pytest.raises(ValueError):
            cli._parse_params(["oops"])

    def test_bad_int(self):
        with pytest.raises(ValueError):
            cli._parse_params(["--trials=many"])


# ============================================================
# Verbs
# ============================================================


class TestVerbs:
    def test_gen(self, monkeypatch, capsys, tmp_path):
        out = tmp_path / "lb.json"
        code, result = _invoke(
            monkeypatch, capsys, "gen", "--family", "lower_bound", "--n", "8", "--num_reds", "3", "--states", "2",
            "--out", str(out),
        )
        assert code == 0
        assert result["status"] is True
        assert json.loads(out.read_text())["states"][0]["instance"]["n"] == 8

    def test_run_and_report(self, monkeypatch, capsys, tmp_path):
        inst = tmp_path / "g.json"
        model.dump_instance(gen_pure_green(20), str(inst))
        csv_path = tmp_path / "r.csv"
        code, result = _invoke(
            monkeypatch, capsys, "run", "--instance", str(inst), "--algo", "dynkin", "--trials", "40",
            "--seed", "1", "--out", str(csv_path),
        )
        assert code == 0
        assert result["data"]["trials"] == 40
        assert read_csv(str(csv_path))[0]["algo"] == "dynkin"

        code, result = _invoke(monkeypatch, capsys, "report", "--in", str(csv_path), "--format", "md")
        assert code == 0
        assert "| dynkin |" in result["data"]["text"]

    def test_run_forwards_algorithm_params(self, monkeypatch, capsys):
        code, result = _invoke(
            monkeypatch, capsys, "run", "--family", "pure_green", "--n", "40", "--algo", "uniform_constant",
            "--r", "2", "--trials", "10",
        )
        assert code == 0
        assert result["data"]["payoff"] == "value_ratio"

    def test_oracle(self, monkeypatch, capsys, tmp_path):
        inst = tmp_path / "k.json"
        model.dump_instance(gen_knapsack_family("heavy", 12, 3.0, seed=0), str(inst))
        code, result = _invoke(monkeypatch, capsys, "oracle", "--instance", str(inst), "--kind", "knapsack", "--K", "3")
        assert code == 0
        assert result["data"]["exact"] is True
        assert result["data"]["value"] > 0


# ============================================================
# Exit codes
# ============================================================


class TestExitCodes:
    def test_unknown_algorithm_is_config_error(self, monkeypatch, capsys):
        code, result = _invoke(monkeypatch, capsys, "run", "--family", "pure_green", "--n", "10", "--algo", "quantum")
        assert code == 2
        assert result["data"]["error_code"] == "UNKNOWN_ALGORITHM"

    def test_missing_required(self, monkeypatch, capsys):
        code, result = _invoke(monkeypatch, capsys, "gen", "--family", "pure_green")
        assert code == 2
        assert "--n" in result["message"]

    def test_unknown_param_on_closed_command(self, monkeypatch, capsys):
        code, _ = _invoke(monkeypatch, capsys, "single_item", "logstar_schedule", "--n=100", "--colour=red")
        assert code == 2

    def test_unknown_module(self, monkeypatch, capsys):
        code, _ = _invoke(monkeypatch, capsys, "astrology", "horoscope")
        assert code == 2

    def test_oracle_failure_exits_3(self, monkeypatch, capsys, tmp_path):
        inst = tmp_path / "g.json"
        model.dump_instance(gen_pure_green(5), str(inst))
        monkeypatch.setattr(model, "compute_benchmark", lambda **kw: from_exception(OracleFailure("no incumbent")))
        code, result = _invoke(monkeypatch, capsys, "oracle", "--instance", str(inst))
        assert code == 3
        assert result["data"]["error_code"] == "ORACLE_FAILURE"

    def test_other_failures_exit_1(self, monkeypatch, capsys, tmp_path):
        code, result = _invoke(monkeypatch, capsys, "model", "validate_instance", "--instance", str(tmp_path / "nope.json"))
        assert code == 1
        assert result["data"]["error_code"] == "IO_ERROR"


# ============================================================
# Discovery
# ============================================================


class TestDiscovery:
    def test_catalog(self, monkeypatch, capsys):
        code, result = _invoke(monkeypatch, capsys, "catalog")
        assert code == 0
        assert set(result["verbs"]) == {"gen", "run", "oracle", "report"}
        assert "harness" in result["modules"]

    def test_version(self, monkeypatch, capsys):
        from byzantine_secretary import __version__

        code, out = _invoke(monkeypatch, capsys, "--version")
        assert code == 0
        assert __version__ in out

    def test_module_help(self, monkeypatch, capsys):
        code, out = _invoke(monkeypatch, capsys, "single_item")
        assert code == 0
        assert "logstar_schedule --n=<value>" in out

    def test_schema(self, monkeypatch, capsys):
        code, result = _invoke(monkeypatch, capsys, "harness", "schema")
        assert code == 0
        names = {t["name"] for t in result["tools"]}
        assert "harness_run" in names
        run_tool = next(t for t in result["tools"] if t["name"] == "harness_run")
        assert run_tool["parameters"]["properties"]["trials"]["type"] == "integer"

    def test_direct_command(self, monkeypatch, capsys):
        code, result = _invoke(monkeypatch, capsys, "single_item", "logstar_schedule", "--n=1000")
        assert code == 0
        assert result["status"] is True
