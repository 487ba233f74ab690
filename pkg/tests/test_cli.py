import csv
import io
import json
import subprocess
import sys

import pytest

from nahmzeta.cli import COMMANDS, RunConfig, _flatten, _plain, main


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.mark.parametrize("command", COMMANDS)
def test_commands_pass(command, capsys):
    code, out, _ = run([command], capsys)
    d = json.loads(out)
    assert code == 0 and d["pass"] and d["schema"] == 1 and d["command"] == command


def test_csv_matches_json(capsys):
    _, js, _ = run(["band-structure"], capsys)
    _, cs, _ = run(["band-structure", "--format", "csv"], capsys)
    flat = dict(_flatten(json.loads(js)))
    rows = list(csv.reader(io.StringIO(cs)))[1:]
    assert len(rows) == len(flat)
    for k, v in rows:
        if k == "config.format":
            continue
        expected = flat[k]
        assert (float(v) if isinstance(expected, float) else json.loads(v)) == expected


def test_invalid_config_exit_code(capsys):
    code, _, err = run(["zeta", "--b", "0"], capsys)
    assert code == 2 and "config error" in err
    with pytest.raises(ValueError):
        RunConfig(route="mellin")


def test_mutation_is_flagged(capsys):
    code, out, err = run(["solve-hermite", "--mutate", "P1"], capsys)
    d = json.loads(out)
    assert code == 1 and not d["pass"] and "FAIL" in err
    assert "identity_exact" in d["failed"]


def test_roots_scale_with_b(capsys):
    _, a, _ = run(["solve-hermite"], capsys)
    _, b, _ = run(["solve-hermite", "--b", "2"], capsys)
    ra = json.loads(a)["results"]["roots"]
    rb = json.loads(b)["results"]["roots"]
    assert rb == pytest.approx([4 * r for r in ra], rel=1e-14, abs=1e-14)


def test_published_mismatch_reported(capsys):
    _, out, _ = run(["solve-hermite"], capsys)
    res = json.loads(out)["results"]
    assert res["matches_published"] is False
    assert {m["name"] for m in res["published_mismatch"]} == {"P2", "q2"}


def test_env_config_and_flag_precedence(tmp_path, monkeypatch, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"b": 2.0, "hbar": 3.0}))
    monkeypatch.setenv("NAHM_ZETA_CONFIG", str(cfg))
    _, out, _ = run(["mass"], capsys)
    assert json.loads(out)["config"]["b"] == 2.0
    _, out, _ = run(["mass", "--b", "0.5"], capsys)
    d = json.loads(out)["config"]
    assert d["b"] == 0.5 and d["hbar"] == 3.0
    cfg.write_text(json.dumps({"bogus": 1}))
    code, _, _ = run(["mass"], capsys)
    assert code == 2


def test_deterministic_output(tmp_path, capsys):
    out = tmp_path / "a.json"
    assert main(["zeta", "--out", str(out)]) == 0
    first = out.read_bytes()
    assert main(["zeta", "--out", str(out)]) == 0
    assert out.read_bytes() == first


def test_free_zeta_zero(capsys):
    code, out, _ = run(["zeta", "--free"], capsys)
    d = json.loads(out)
    assert code == 0
    for row in d["results"]["zeta"]:
        assert row["hyperelliptic"]["value_re"] == 0 and row["hyperelliptic"]["value_im"] == 0
    assert d["results"]["delta_S"]["value_re"] == 0


def test_plot_dir(tmp_path, capsys):
    assert main(["zeta", "--plot-dir", str(tmp_path)]) == 0
    capsys.readouterr()
    names = {p.name for p in tmp_path.iterdir()}
    assert {"zeta_s.csv", "density.csv", "heat_trace.csv"} <= names


def test_transverse_dimensions_skip_spectral(capsys):
    code, out, _ = run(["zeta", "--d", "3"], capsys)
    assert code == 0
    assert "spectral_skipped" in json.dumps(json.loads(out)["results"])


def test_plain_complex():
    assert _plain(1 + 2j) == {"re": 1.0, "im": 2.0}


def test_console_script():
    r = subprocess.run([sys.executable, "-m", "nahmzeta.cli", "mass"], capture_output=True, text=True)
    assert r.returncode == 0 and json.loads(r.stdout)["pass"]
