import subprocess
import sys

import numpy as np
import pytest

from abwave.analysis import Pattern, rescale_equivalence
from abwave.cli import CSV_MAGIC, ascii_pattern, main, read_pattern_csv
from abwave.errors import ParseError
from abwave.fields import Vacuum
from abwave.scenario_file import export_scenario, parse_scenario
from abwave.scenarios import BUILTINS, builtin


def _cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def _write(tmp_path, text, name="s.txt"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


# ---------------------------------------------------------------------------
# scenario files


@pytest.mark.parametrize("name", BUILTINS)
def test_export_parse_round_trip(name):
    s = builtin(name)
    text = export_scenario(s)
    back = parse_scenario(text)
    assert back == s
    assert export_scenario(back) == text


def test_misspelled_key_reports_line():
    text = export_scenario(builtin("free")).replace("\nz = -2000.0", "\nslitz = -2000.0")
    line = text.splitlines().index("slitz = -2000.0") + 1
    with pytest.raises(ParseError) as info:
        parse_scenario(text)
    assert info.value.line == line and "slitz" in str(info.value)


def test_empty_field_section_is_vacuum():
    assert parse_scenario(export_scenario(builtin("free"))).field == Vacuum()


def test_comments_and_blank_lines_ignored():
    text = export_scenario(builtin("fig1_1"))
    noisy = "# leading comment\n\n" + text.replace("[field]", "[field]  # tube here\n")
    assert parse_scenario(noisy) == builtin("fig1_1")


def test_missing_required_key():
    text = export_scenario(builtin("free")).replace("kind = topological\n", "")
    with pytest.raises(ParseError):
        parse_scenario(text)


# ---------------------------------------------------------------------------
# exit codes


def test_unknown_key_exits_2(capsys, tmp_path):
    text = export_scenario(builtin("free")).replace("\nz = -2000.0", "\nslitz = -2000.0")
    code, _, err = _cli(capsys, "simulate", "--scenario", _write(tmp_path, text))
    assert code == 2 and "line" in err


def test_unknown_scenario_exits_2(capsys):
    assert _cli(capsys, "simulate", "--scenario", "no_such_thing")[0] == 2


def test_bad_arguments_exit_2(capsys):
    with pytest.raises(SystemExit) as info:
        main(["simulate"])
    assert info.value.code == 2


def test_bad_thread_env_exits_2(capsys, monkeypatch):
    monkeypatch.setenv("ABWAVE_THREADS", "0")
    assert _cli(capsys, "simulate", "--scenario", "free")[0] == 2


def test_degenerate_geometry_exits_3(capsys, tmp_path):
    text = export_scenario(builtin("free")).replace("\nz = 5000.0", "\nz = 0.5")
    code, _, err = _cli(capsys, "simulate", "--scenario", _write(tmp_path, text))
    assert code == 3 and "DegenerateGeometry" in err


def test_gauge_check_passes(capsys):
    code, out, _ = _cli(capsys, "gauge-check", "--scenario", "fig1_1", "--gauge", "bump")
    assert code == 0 and out.rstrip().endswith("ok")


def test_console_script_runs():
    r = subprocess.run([sys.executable, "-m", "abwave.cli", "list-scenarios"],
                       capture_output=True, text=True)
    assert r.returncode == 0
    assert [ln.split()[0] for ln in r.stdout.splitlines()] == list(BUILTINS)


# ---------------------------------------------------------------------------
# outputs


def test_simulate_csv_layout(capsys, tmp_path):
    out = tmp_path / "free.csv"
    assert _cli(capsys, "simulate", "--scenario", "free", "--out", str(out))[0] == 0
    raw = out.read_bytes()
    assert b"\r" not in raw
    text = raw.decode()
    assert text.startswith(CSV_MAGIC + "\n") and "x,intensity\n" in text
    xs, inten, meta = read_pattern_csv(text)
    assert len(xs) == len(inten) == 2048
    assert meta["scenario"] == "free"
    spacing = float(meta["fringe_spacing"])
    assert spacing == pytest.approx(100.0, rel=1e-2)
    assert abs(float(meta["central_max_x"])) < 1e-3 * spacing


def test_csv_identical_across_threads(capsys, tmp_path):
    outs = []
    for n in (1, 3):
        path = tmp_path / f"t{n}.csv"
        _cli(capsys, "simulate", "--scenario", "fig1_1", "--threads", str(n),
             "--out", str(path))
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_ascii_flag(capsys, tmp_path):
    code, out, _ = _cli(capsys, "simulate", "--scenario", "free", "--ascii",
                        "--out", str(tmp_path / "p.csv"))
    assert code == 0 and len(out.splitlines()) >= 16


def test_ascii_pattern_shape():
    xs = np.linspace(-1, 1, 200)
    rows = ascii_pattern(xs, np.cos(5 * xs) ** 2).splitlines()
    assert len(rows) >= 16 and max(len(r) for r in rows) >= 64


def test_sweep_rows(capsys):
    code, out, _ = _cli(capsys, "sweep", "--scenario", "fig1_1", "--param", "flux",
                        "--from", "0", "--to", "3.141592653589793", "--steps", "3")
    assert code == 0
    body = [ln for ln in out.splitlines() if not ln.startswith("#")]
    assert body[0].startswith("flux,central_max_x") and len(body) == 4


def test_compare_models_columns(capsys):
    code, out, _ = _cli(capsys, "compare-models", "--scenario", "fig1_1")
    assert code == 0
    header = [ln for ln in out.splitlines() if not ln.startswith("#")][0]
    assert header.split(",")[0] == "x" and len(header.split(",")) == 4
    assert "max_relative_difference_vs_topological" in out


def test_predict_shift_output(capsys):
    code, out, _ = _cli(capsys, "predict-shift", "--B", "0.01", "--thickness", "0.01")
    assert code == 0
    assert "2.41799e10 per m" in out and "7.25%" in out


def test_fig1_5_csvs_rescale(capsys, tmp_path):
    pats = {}
    for model in ("topological", "local"):
        path = tmp_path / f"{model}.csv"
        _cli(capsys, "simulate", "--scenario", "fig1_5", "--model", model,
             "--out", str(path))
        xs, inten, _ = read_pattern_csv(path.read_text())
        pats[model] = Pattern(xs, inten)
    out = rescale_equivalence(pats["local"], pats["topological"])
    assert out["scale"] == pytest.approx(0.9324, abs=1e-2)
    assert out["residual"] < 1e-2


def test_export_builtin(capsys, tmp_path):
    code, out, _ = _cli(capsys, "list-scenarios", "--export", "fig1_5")
    assert code == 0
    code, _, _ = _cli(capsys, "simulate", "--scenario", _write(tmp_path, out),
                      "--out", str(tmp_path / "o.csv"))
    assert code == 0
