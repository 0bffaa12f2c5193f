import csv
import io
import json
import re
from pathlib import Path

import numpy as np
import pytest

from lapbox import cli
from lapbox.cli import emit, main, run, table_csv
from lapbox.config import SCHEMAS, load_config, parse_config
from lapbox.errors import BudgetError, ConfigError

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

GREEN = """
scenario = green
d = 1
lam = -1.0
xs = ((0,), (1,), (2,))
"""


def _strip_time(env):
    env = json.loads(json.dumps(env))
    env["metadata"].pop("wall_time")
    return env


# ---------------------------------------------------------------- parsing

def test_literals_and_bare_words():
    cfg = parse_config(GREEN + "method = trapezoid\neps = 1e-3\n")
    assert cfg.params.method == "trapezoid"
    assert cfg.params.eps == 1e-3
    assert cfg.params.xs == ((0,), (1,), (2,))


def test_unknown_section_key_named_in_error():
    with pytest.raises(ConfigError, match="chi_lam"):
        parse_config("scenario = gamma\n[chi]\nlam = 2.0\n")


def test_section_keys_map_to_fields():
    cfg = parse_config("scenario = holder\nd = 1\nlambda0 = 1.0\n[V]\nsites = ((0,),)\nvalues = (-1.0,)\n")
    assert cfg.params.V_sites == ((0,),)
    assert cfg.params.V_values == (-1.0,)


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="unknown keys"):
        parse_config(GREEN + "bogus = 3\n")


def test_missing_required_key():
    with pytest.raises(ConfigError, match="missing required keys.*'d'"):
        parse_config("scenario = green\nlam = -1.0\n")


def test_type_checked_numbers():
    with pytest.raises(ConfigError, match="expected a number"):
        parse_config("scenario = green\nd = two\nlam = -1.0\n")


def test_scenario_conflicts_and_unknown():
    with pytest.raises(ConfigError):
        parse_config(GREEN, "lap")
    with pytest.raises(ConfigError):
        parse_config("d = 1\n")
    with pytest.raises(ConfigError):
        parse_config("scenario = nonsense\n")


@pytest.mark.parametrize("seed", [-1, 2**64])
def test_seed_range(seed):
    with pytest.raises(ConfigError, match="seed"):
        parse_config(GREEN, seed=seed)


def test_seed_override():
    assert parse_config(GREEN + "seed = 5\n").seed == 5
    assert parse_config(GREEN + "seed = 5\n", seed=9).seed == 9


def test_missing_file():
    with pytest.raises(ConfigError, match="cannot read"):
        load_config("/nonexistent/x.ini")


# ---------------------------------------------------------------- run

def test_green_envelope():
    env = run(parse_config(GREEN))
    assert list(env) == ["scenario", "params", "results", "metadata"]
    rows = env["results"]["tables"]["values"]["rows"]
    assert rows[0][1] == pytest.approx(1 / np.sqrt(5), abs=1e-12)
    assert rows[0][1] == pytest.approx(0.4472136, abs=1e-7)
    assert env["params"]["method"] == "auto"   # defaults are printed
    assert env["metadata"]["passed"] is True


def test_region_envelope():
    env = run(load_config(CONFIGS / "example_region.ini"))
    assert env["results"]["tables"]["membership"]["rows"] == [[0.7, 0.3, True]]


def test_errors_carry_scenario_context(monkeypatch):
    def boom(P, seed):
        raise BudgetError("too small")

    monkeypatch.setitem(cli.RUNNERS, "green", boom)
    with pytest.raises(BudgetError, match="green: too small"):
        run(parse_config(GREEN))


def test_determinism():
    text = "scenario = green\nd = 1\nlam = 1.0\neps = 0.1\ncheck = resolvent_identity\ndims = (1, 2)\ngrid = 16\n"
    a = run(parse_config(text, seed=3))
    b = run(parse_config(text, seed=3))
    c = run(parse_config(text, seed=4))
    assert _strip_time(a) == _strip_time(b)
    assert _strip_time(a)["results"] != _strip_time(c)["results"]


def test_threads(monkeypatch):
    env = run(parse_config(GREEN), threads=2)
    assert env["metadata"]["passed"]
    monkeypatch.setenv("LAPBOX_THREADS", "1")
    assert run(parse_config(GREEN))["metadata"]["passed"]
    monkeypatch.setenv("LAPBOX_THREADS", "many")
    with pytest.raises(ConfigError):
        run(parse_config(GREEN))
    with pytest.raises(ConfigError):
        run(parse_config(GREEN), threads=0)


# ---------------------------------------------------------------- emit

def test_empty_table_is_header_only():
    assert table_csv({"columns": ["a", "b"], "rows": []}) == "a,b\r\n"


def test_csv_formatting():
    text = table_csv({"columns": ["x", "note", "ok"], "rows": [[0.1, 'say "hi", ok', True]]})
    assert text.splitlines()[1] == '0.10000000000000001,"say ""hi"", ok",true'
    assert next(csv.reader(io.StringIO(text.splitlines()[1])))[1] == 'say "hi", ok'


def test_json_round_trip(tmp_path):
    env = run(parse_config(GREEN))
    (p,) = emit(env, "json", tmp_path / "out.json")
    assert json.loads(p.read_text()) == env


def test_decay_schema(tmp_path):
    env = run(parse_config("scenario = decay\nd = 3\nlam = 1.0\nwindow = (8, 16)\n"))
    (p,) = emit(env, "csv", tmp_path / "decay.csv")
    header = p.read_text().splitlines()[0]
    assert header == "abs_x,value_re,value_im,log_abs,fit_exponent,fit_residual"


def test_multi_table_naming(tmp_path):
    env = run(load_config(CONFIGS / "crit06_kernel_decay.ini"))
    paths = emit(env, "csv", tmp_path / "k.csv")
    assert sorted(p.name for p in paths) == ["k.decay_d2_lam1.csv", "k.decay_d3_lam1.csv"]
    assert all(p.exists() for p in paths)


def test_atomic_write_leaves_no_temp_files(tmp_path):
    env = run(parse_config(GREEN))
    emit(env, "json", tmp_path / "a.json")
    emit(env, "json", tmp_path / "a.json")
    assert [p.name for p in tmp_path.iterdir()] == ["a.json"]
    with pytest.raises(OSError, match="missing"):
        emit(env, "json", tmp_path / "missing" / "a.json")


def test_stdout_emit(capsys):
    env = run(parse_config(GREEN))
    assert emit(env, "csv") == []
    out = capsys.readouterr().out
    assert out.startswith("# values\r\nx0,value_re,value_im\r\n")


# ---------------------------------------------------------------- main

def test_exit_pass(tmp_path):
    cfg = tmp_path / "g.ini"
    cfg.write_text(GREEN + "check = closed_form\n")
    out = tmp_path / "g.json"
    assert main(["green", "--config", str(cfg), "--out", str(out)]) == cli.EXIT_PASS
    assert json.loads(out.read_text())["metadata"]["flags"] == {"closed_form": True}


def test_exit_fail(tmp_path, capsys):
    # the 3D kernel decays like |x|^-1, outside the demanded exponent range
    cfg = tmp_path / "d.ini"
    cfg.write_text("scenario = decay\nd = 3\nlam = 1.0\nwindow = (8, 16)\nk_range = (2.0, 3.0)\n")
    assert main(["decay", "--config", str(cfg), "--out", str(tmp_path / "d.json")]) == cli.EXIT_FAIL
    assert "check failed" in capsys.readouterr().err


def test_exit_config_writes_nothing(tmp_path, capsys):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("scenario = green\nlam = -1.0\n")
    out = tmp_path / "never.json"
    assert main(["green", "--config", str(cfg), "--out", str(out)]) == cli.EXIT_CONFIG
    assert not out.exists()
    assert "missing required keys" in capsys.readouterr().err


def test_exit_runtime(tmp_path, monkeypatch):
    def boom(P, seed):
        raise BudgetError("torus too small")

    monkeypatch.setitem(cli.RUNNERS, "green", boom)
    cfg = tmp_path / "g.ini"
    cfg.write_text(GREEN)
    assert main(["green", "--config", str(cfg)]) == cli.EXIT_RUNTIME


def test_main_defaults_without_config(capsys):
    assert main(["region"]) == cli.EXIT_PASS
    assert json.loads(capsys.readouterr().out)["scenario"] == "region"


# ---------------------------------------------------------------- shipped configs

def test_every_criterion_has_one_config():
    names = sorted(p.name for p in CONFIGS.glob("crit*.ini"))
    nums = [int(re.match(r"crit(\d+)_", n).group(1)) for n in names]
    assert nums == list(range(1, 15))


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.ini")), ids=lambda p: p.stem)
def test_shipped_configs_validate(path):
    cfg = load_config(path)
    assert cfg.scenario in SCHEMAS
