import json
import math

import numpy as np
import pytest

from cqtsim.cli import main, parse_input_state
from cqtsim.fock import KET_D, NAMED_KETS


AXIAL = ("h", "v", "plus", "minus", "r", "l")


def run_cli(args):
    return main(list(args))


def read_text(path):
    return path.read_text(encoding="utf-8")


def write_exact_counts(path, rho, exposure=10000.0):
    lines = ["label,projector,count"]
    for name in AXIAL:
        ket = NAMED_KETS[name]
        prob = float(np.real(ket.conj() @ rho @ ket))
        lines.append(f"{name},{name},{exposure * prob}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def test_run_ideal_allow_golden(tmp_path, capsys):
    out = tmp_path / "run.csv"
    code = run_cli(["run", "--channel", "g1", "--action", "allow", "--input", "plus",
                    "--ideal", "--out", str(out)])
    assert code == 0
    text = read_text(out)
    assert text.startswith("# schema=")
    row = text.strip().splitlines()[-1].split(",")
    assert row[5] == "1"


def test_run_ideal_deny_golden(tmp_path):
    out = tmp_path / "run.csv"
    assert run_cli(["run", "--channel", "g1", "--action", "deny", "--input", "plus",
                    "--ideal", "--out", str(out)]) == 0
    row = read_text(out).strip().splitlines()[-1].split(",")
    assert float(row[5]) == pytest.approx(0.5, abs=1e-9)


def test_reproduce_table_within_tolerance(tmp_path):
    out = tmp_path / "table.csv"
    assert run_cli(["reproduce", "table1", "--out", str(out),
                    "--full-precision"]) == 0
    rows = [line.split(",") for line in read_text(out).strip().splitlines()
            if not line.startswith("#")][1:]
    assert len(rows) == 7
    for row in rows:
        assert abs(float(row[6])) < 0.2


def test_run_reproduce_alias(tmp_path):
    direct = tmp_path / "a.csv"
    alias = tmp_path / "b.csv"
    assert run_cli(["reproduce", "table1", "--out", str(direct)]) == 0
    assert run_cli(["run", "--reproduce", "table1", "--out", str(alias)]) == 0
    assert read_text(direct) == read_text(alias)


def test_scan_werner_grid_values(tmp_path):
    out = tmp_path / "scan.csv"
    assert run_cli(["scan-werner", "--q-list", "0,0.333333333333,0.428571428571,1",
                    "--out", str(out), "--full-precision"]) == 0
    lines = read_text(out).strip().splitlines()
    assert any("crosses 2/3 at q=0.333333333" in line for line in lines)
    rows = [line.split(",") for line in lines if not line.startswith("#")][1:]
    f_allowed = [float(r[1]) for r in rows]
    assert f_allowed[0] == pytest.approx(0.5, abs=1e-9)
    assert f_allowed[1] == pytest.approx(2 / 3, abs=1e-9)
    assert f_allowed[2] == pytest.approx(5 / 7, abs=1e-9)
    assert f_allowed[3] == pytest.approx(1.0, abs=1e-9)


def test_scan_werner_empty_grid_is_usage_error():
    assert run_cli(["scan-werner", "--q-list", ""]) == 2


def test_scan_werner_single_point(tmp_path):
    out = tmp_path / "one.csv"
    assert run_cli(["scan-werner", "--q-list", "1", "--out", str(out)]) == 0
    rows = [l for l in read_text(out).splitlines() if not l.startswith("#")]
    assert len(rows) == 2   # header + one row
    assert float(rows[1].split(",")[1]) == pytest.approx(1.0)


def test_fit_spdc_round_trip(tmp_path):
    out = tmp_path / "fit.csv"
    assert run_cli(["fit-spdc", "--synthetic-ratio", "0.8", "--out", str(out)]) == 0
    text = read_text(out)
    ratio = float(next(l for l in text.splitlines() if "fitted_ratio" in l).split("=")[1])
    assert ratio == pytest.approx(0.8, abs=1e-3)


def test_fit_spdc_reference_targets_report_residuals(tmp_path):
    out = tmp_path / "fit.csv"
    assert run_cli(["fit-spdc", "--out", str(out)]) == 0
    text = read_text(out)
    assert "fitted_ratio=" in text
    rows = [l.split(",") for l in text.splitlines() if not l.startswith("#")][1:]
    assert {r[0] for r in rows} == {"uncontrolled", "allowed", "denied"}


def test_tomo_noiseless_plus(tmp_path):
    counts = tmp_path / "counts.csv"
    write_exact_counts(counts, np.outer(KET_D, KET_D.conj()))
    out = tmp_path / "tomo.json"
    assert run_cli(["tomo", "--counts", str(counts), "--target", "plus",
                    "--format", "json", "--out", str(out)]) == 0
    payload = json.loads(read_text(out))
    assert payload["raw_fidelity"] == pytest.approx(1.0, abs=1e-3)
    assert payload["converged"] is True


def test_tomo_uniform_counts(tmp_path):
    counts = tmp_path / "counts.csv"
    write_exact_counts(counts, np.eye(2) / 2)
    out = tmp_path / "tomo.json"
    assert run_cli(["tomo", "--counts", str(counts), "--target", "plus",
                    "--format", "json", "--out", str(out)]) == 0
    payload = json.loads(read_text(out))
    assert payload["raw_fidelity"] == pytest.approx(0.5, abs=1e-6)


def test_tomo_background_correction_golden(tmp_path):
    # counts synthesized for a raw fidelity of 0.647; removing the 55.4 %
    # admixture must lift it to 0.830
    a = 2 * (0.647 - 0.5)
    rho = a * np.outer(KET_D, KET_D.conj()) + (1 - a) * np.eye(2) / 2
    counts = tmp_path / "counts.csv"
    write_exact_counts(counts, rho)
    out = tmp_path / "tomo.json"
    assert run_cli(["tomo", "--counts", str(counts), "--target", "plus",
                    "--weight", "0.554", "--format", "json", "--out", str(out)]) == 0
    payload = json.loads(read_text(out))
    assert payload["raw_fidelity"] == pytest.approx(0.647, abs=1e-4)
    assert payload["corrected_fidelity"] == pytest.approx(0.830, abs=1.5e-3)


def test_tomo_malformed_counts_is_usage_error(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("label,projector,count\nh,notastate,12\n", encoding="utf-8")
    assert run_cli(["tomo", "--counts", str(bad)]) == 2
    assert run_cli(["tomo", "--counts", str(tmp_path / "missing.csv")]) == 2


def test_stochastic_commands_require_seed(tmp_path):
    assert run_cli(["run", "--ideal", "--resamples", "100"]) == 2
    counts = tmp_path / "counts.csv"
    write_exact_counts(counts, np.eye(2) / 2)
    assert run_cli(["tomo", "--counts", str(counts), "--resamples", "100"]) == 2


def test_run_determinism_with_seed(tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    args = ["run", "--channel", "g1", "--action", "deny", "--input", "plus",
            "--ideal", "--resamples", "400", "--seed", "7", "--full-precision"]
    assert run_cli(args + ["--out", str(a)]) == 0
    assert run_cli(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_degenerate_simulation_is_runtime_error():
    assert run_cli(["run", "--channel", "g1", "--action", "deny", "--input", "h",
                    "--ideal"]) == 1


def test_unknown_flag_is_usage_error(capsys):
    assert run_cli(["run", "--bogus"]) == 2


def test_no_subcommand_is_usage_error(capsys):
    assert run_cli([]) == 2


def test_config_file_supplies_defaults(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[run]\nchannel = g1\naction = deny\ninput = plus\nideal = true\n",
                   encoding="utf-8")
    out = tmp_path / "out.csv"
    assert run_cli(["run", "--config", str(cfg), "--out", str(out)]) == 0
    row = read_text(out).strip().splitlines()[-1].split(",")
    assert row[0] == "g1"
    assert row[1] == "deny"
    assert float(row[5]) == pytest.approx(0.5, abs=1e-9)
    # explicit flags override the config
    out2 = tmp_path / "out2.csv"
    assert run_cli(["run", "--config", str(cfg), "--action", "allow",
                    "--out", str(out2)]) == 0
    assert float(read_text(out2).strip().splitlines()[-1].split(",")[5]) == 1.0


def test_missing_config_is_usage_error(tmp_path):
    assert run_cli(["run", "--config", str(tmp_path / "nope.ini")]) == 2


def test_out_dir_env_var(tmp_path, monkeypatch):
    monkeypatch.setenv("CQTSIM_OUT_DIR", str(tmp_path))
    assert run_cli(["reproduce", "table1", "--out", "deep/table.csv"]) == 0
    assert (tmp_path / "deep" / "table.csv").exists()


def test_parse_input_state_forms():
    assert parse_input_state("plus").alpha == pytest.approx(1 / math.sqrt(2))
    lin = parse_input_state("linear:45")
    assert lin.beta == pytest.approx(1 / math.sqrt(2))
    custom = parse_input_state("0.6,0.8")
    assert abs(custom.alpha) == pytest.approx(0.6)
    with pytest.raises(Exception):
        parse_input_state("whatever")


def test_json_format_run(tmp_path):
    out = tmp_path / "run.json"
    assert run_cli(["run", "--channel", "reference", "--action", "none", "--ideal",
                    "--format", "json", "--out", str(out)]) == 0
    payload = json.loads(read_text(out))
    assert payload["schema"] == "cqtsim.v1"
    fid_col = payload["columns"].index("fidelity")
    assert payload["rows"][0][fid_col] == pytest.approx(1.0)
