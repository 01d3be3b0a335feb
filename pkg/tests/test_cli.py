import csv
import io
import json
import subprocess
import sys
from pathlib import Path

import pytest

from oracles import brute_fixed_weight_law
from poisson_words import cli
from poisson_words.config import parse_config_text, parse_seeds
from poisson_words.errors import ConfigError, InvariantError
from poisson_words.model import RngStream, sample_sequence

GOLDEN = Path(__file__).parent / "golden"
CP_ARGS = ["conditional-poisson", "--p", "0.6", "--c", "0", "--lambda", "1", "--k", "12,14", "--seeds", "3"]


def run_cli(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


class TestConfig:
    def test_minimal_conditional(self, tmp_path):
        path = tmp_path / "cp.cfg"
        path.write_text("# conditional run\np = 0.6\nc = 0\nlambda = 1   # target mean\nk = 24\nseeds = [1..10]\n")
        values = parse_config_text(path.read_text())
        spec = cli.spec_from_values("ConditionalPoisson", values)
        assert spec.seeds == tuple(range(1, 11))
        from poisson_words.analytic import ModelParams, resolve_regime

        assert resolve_regime(spec.rule, ModelParams(0.6, 24)) == 12169775

    def test_unknown_key_named(self):
        with pytest.raises(ConfigError, match=r"line 2: unknown key 'lamda'"):
            parse_config_text("p = 0.6\nlamda = 1\n")

    def test_repeated_key(self):
        with pytest.raises(ConfigError, match="given twice"):
            parse_config_text("p = 0.6\np = 0.7\n")

    def test_bad_line(self):
        with pytest.raises(ConfigError, match="line 1"):
            parse_config_text("p 0.6\n")

    def test_bad_number(self):
        with pytest.raises(ConfigError, match="line 1: p"):
            parse_config_text("p = high\n")

    def test_dash_keys(self):
        assert parse_config_text("n-max = 7\nmemory-budget-mb = 100\n") == {"n_max": 7, "memory_budget_mb": 100}

    @pytest.mark.parametrize(
        "text,expect",
        [("3", [1, 2, 3]), ("4..6", [4, 5, 6]), ("[9]", [9]), ("5, 7", [5, 7]), ("[1..3]", [1, 2, 3])],
    )
    def test_seeds(self, text, expect):
        assert parse_seeds(text) == expect

    @pytest.mark.parametrize("text", ["0", "x", "[]", "-1,2"])
    def test_bad_seeds(self, text):
        with pytest.raises(ConfigError):
            parse_seeds(text)


class TestAnalytic:
    def test_limit_atom(self, capsys):
        code, out, _ = run_cli(["analytic", "--fn", "limit-atom", "--a", "1", "--p", "0.6"], capsys)
        assert code == 0 and out == "0.5\n"

    @pytest.mark.parametrize(
        "argv,expect",
        [
            (["--fn", "entropy", "--p", "0.5"], "1\n"),
            (["--fn", "phi", "--s", "0"], "0.5\n"),
            (["--fn", "phi-p", "--s", "0", "--p", "0.3"], "0.5\n"),
            (["--fn", "match-prob", "--k", "3", "--p", "0.7"], f"{0.58**3:.17g}\n"),
            (["--fn", "n-k", "--k", "24", "--p", "0.6", "--c", "0"], "14\n"),
            (["--fn", "N-k", "--k", "24", "--p", "0.6", "--c", "0", "--lambda", "1"], "12169775\n"),
            (["--fn", "N-k", "--k", "24", "--p", "0.5", "--a", "1"], f"{2**24}\n"),
        ],
    )
    def test_functions(self, argv, expect, capsys):
        code, out, _ = run_cli(["analytic", *argv], capsys)
        assert code == 0 and out == expect

    def test_missing_argument(self, capsys):
        code, _, err = run_cli(["analytic", "--fn", "limit-atom", "--p", "0.6"], capsys)
        assert code == 1 and "--a" in err

    def test_overflow_is_guard(self, capsys):
        code, _, err = run_cli(["analytic", "--fn", "N-k", "--k", "64", "--p", "0.6", "--a", "1"], capsys)
        assert code == 2 and "exceeds" in err


class TestExperimentCommands:
    def test_golden_csv(self, tmp_path, capsys):
        out = tmp_path / "r.csv"
        code, stdout, err = run_cli([*CP_ARGS, "--out", str(out)], capsys)
        assert code == 0
        assert out.read_bytes() == (GOLDEN / "cli_conditional_poisson_k12_14.csv").read_bytes()
        assert "effective spec:" in err and '"seeds": [1, 2, 3]' in err
        assert "PASS" in stdout

    def test_golden_rows_match_oracle(self):
        # every frozen row is recomputed from the sampled prefix by listing the whole weight class
        rows = list(csv.DictReader((GOLDEN / "cli_conditional_poisson_k12_14.csv").open()))
        for row in rows[:3]:
            k, seed, n, n_k = int(row["k"]), int(row["seed"]), int(row["N_k"]), int(row["n_k"])
            x = sample_sequence(RngStream(seed, k), n + k - 1, 0.6)
            law = brute_fixed_weight_law(x.to_bits(), k, n, n_k)
            for m in range(4):
                assert float(row[f"pmf{m}"]) == pytest.approx(law.get(m, 0.0), abs=1e-15)

    def test_byte_identical_across_threads(self, tmp_path, capsys):
        outputs = []
        for threads in ("1", "4", "1"):
            path = tmp_path / f"r{threads}_{len(outputs)}.csv"
            assert cli.main([*CP_ARGS, "--threads", threads, "--out", str(path)]) == 0
            outputs.append(path.read_bytes())
        capsys.readouterr()
        assert outputs[0] == outputs[1] == outputs[2]

    def test_stdout_csv(self, capsys):
        code, out, _ = run_cli(["annealed-exact", "--p", "0.6", "--a", "1", "--k", "256,1024,4096", "--n-max", "5"], capsys)
        assert code == 0
        rows = list(csv.DictReader(io.StringIO(out)))
        assert [r["k"] for r in rows] == ["256", "1024", "4096"]
        assert all(f"pmf{n}" in rows[0] for n in range(6))

    def test_config_with_override(self, tmp_path, capsys):
        cfg = tmp_path / "a.cfg"
        cfg.write_text("p = 0.7\nk = 64\na = 1\nn_max = 4\n")
        code, out, err = run_cli(["annealed-exact", "--config", str(cfg), "--p", "0.6"], capsys)
        assert code == 0
        assert '"p": 0.6' in err
        assert out.splitlines()[0].startswith("k,regime,log2_N_k,N_k,pmf0,pmf1,pmf2,pmf3,pmf4,tail")

    def test_json_output(self, tmp_path, capsys):
        path = tmp_path / "r.json"
        code, _, _ = run_cli(["non-poisson-witness", "--p", "0.6", "--a", "1", "--k", "1024,2048,4096",
                              "--json", str(path)], capsys)
        assert code == 0
        d = json.loads(path.read_text())
        assert d["schema_version"] == 1 and len(d["rows"]) == 3
        assert all(c["passed"] for c in d["checks"])


class TestExitCodes:
    def test_validation_p(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("p = 1.0\nk = 24\na = 1\nseeds = 2\n")
        code, _, err = run_cli(["quenched", "--config", str(cfg)], capsys)
        assert code == 1 and "p must lie strictly inside (0,1)" in err

    def test_validation_unknown_key(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("p = 0.6\nlamda = 1\n")
        code, _, err = run_cli(["conditional-poisson", "--config", str(cfg)], capsys)
        assert code == 1 and "lamda" in err

    def test_validation_flags(self, capsys):
        assert run_cli(["quenched", "--p", "0.6"], capsys)[0] == 1
        assert run_cli(["quenched", "--p", "0.6", "--k", "20", "--a", "1", "--delta", "0.1", "--seeds", "1"], capsys)[0] == 1
        assert run_cli(["bogus"], capsys)[0] == 1
        assert run_cli(["quenched", "--p", "abc"], capsys)[0] == 1
        assert run_cli(["quenched", "--p", "0.6", "--k", "70", "--a", "1", "--seeds", "1"], capsys)[0] == 1

    def test_guard_writes_partial_report(self, tmp_path, capsys):
        out = tmp_path / "r.csv"
        code, stdout, _ = run_cli(["conditional-poisson", "--p", "0.6", "--c", "0", "--lambda", "1", "--k", "12,40",
                                   "--seeds", "1", "--out", str(out)], capsys)
        assert code == 2
        rows = list(csv.DictReader(out.open()))
        assert [r["k"] for r in rows] == ["12"]
        assert "GUARD" in stdout

    def test_invariant(self, monkeypatch, capsys):
        def broken(spec):
            raise InvariantError("pmf and tail do not sum to one")

        monkeypatch.setattr(cli, "run", broken)
        code, _, err = run_cli(["annealed-exact", "--p", "0.6", "--a", "1", "--k", "8"], capsys)
        assert code == 3 and "invariant" in err


class TestHelp:
    @pytest.mark.parametrize("command", list(cli.SUBCOMMANDS))
    def test_symbols_documented(self, command, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main([command, "--help"])
        assert exc.value.code == 0
        text = capsys.readouterr().out
        for symbol in ("p:", "k:", "a:", "c:", "lambda:", "N_k", "n_k:"):
            assert symbol in text

    def test_analytic_help(self, capsys):
        with pytest.raises(SystemExit):
            cli.main(["analytic", "--help"])
        text = capsys.readouterr().out
        for fn in cli.ANALYTIC_FNS:
            assert fn in text


def test_module_entry_point(tmp_path):
    result = subprocess.run(
        [sys.executable, "-m", "poisson_words.cli", "analytic", "--fn", "entropy", "--p", "0.5"],
        capture_output=True,
        text=True,
        check=False,
    )
    assert result.returncode == 0 and result.stdout == "1\n"
