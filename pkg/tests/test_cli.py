import json
import subprocess
import sys

import numpy as np
import pytest

from rydswitch import cli


def run(args, capsys):
    code = cli.main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def table(text):
    rows = [l.split("\t") for l in text.splitlines() if l and not l.startswith("#")]
    return rows[0], rows[1:]


def test_derive_report(capsys):
    code, out, err = run(["derive", "--no-manifest"], capsys)
    assert code == 0
    head, rows = table(out)
    assert head == ["quantity", "value", "unit", "reference", "rel_dev"]
    vals = {r[0]: float(r[1]) for r in rows}
    assert vals["r_b,t"] == pytest.approx(14, rel=0.05)
    assert vals["l_a"] == pytest.approx(5, rel=0.10)
    assert vals["v_g (formula)"] == pytest.approx(0.5, rel=0.15)


def test_manifest_on_stderr(capsys):
    code, out, err = run(["derive"], capsys)
    man = json.loads(err.strip().splitlines()[-1])
    assert man["subcommand"] == "derive" and man["preset"] == "paper-2014"
    import hashlib

    assert man["output_sha256"] == hashlib.sha256(out.encode()).hexdigest()


def test_empty_config_exit_code(tmp_path, capsys):
    f = tmp_path / "empty.ini"
    f.write_text("")
    code, out, err = run(["derive", "--config", str(f)], capsys)
    assert code == cli.EXIT_CONFIG
    assert "atom_number" in err and "cycle_time" in err


def test_curve_extinction_starts_at_one(capsys):
    code, out, _ = run(["curve", "extinction_vs_ng_full", "--no-manifest"], capsys)
    assert code == 0
    head, rows = table(out)
    assert float(rows[0][0]) == 0.0 and float(rows[0][1]) == 1.0


def test_curve_transmitted_mean_asymptote(capsys):
    code, out, _ = run(["curve", "transmitted_mean", "--stop", "60", "--no-manifest"], capsys)
    _, rows = table(out)
    assert float(rows[-1][1]) == pytest.approx(0.48, rel=1e-6)


def test_spectrum_wings(capsys):
    code, out, _ = run(["spectrum", "--no-manifest"], capsys)
    _, rows = table(out)
    t = np.array([float(r[1]) for r in rows])
    # absorption fades toward both ends of the sweep
    assert t[0] > 0.9 and t[-1] > 0.9
    assert np.all(np.diff(t[:40]) < 0) and np.all(np.diff(t[-40:]) > 0)


def test_unknown_model_lists_available(capsys):
    code, _, err = run(["curve", "nope", "--no-manifest"], capsys)
    assert code == cli.EXIT_CONFIG
    assert "transmitted_mean" in err


def test_strict_validity_escalation(capsys):
    code, _, err = run(["curve", "extinction_post_vs_nt", "--start", "1", "--stop", "40", "--strict",
                        "--no-manifest"], capsys)
    assert code == cli.EXIT_VALIDITY
    assert "N1" in err


def test_validity_warning_without_strict(capsys):
    with pytest.warns(Warning):
        code, _, _ = run(["curve", "extinction_post_vs_nt", "--start", "1", "--stop", "40", "--no-manifest"],
                         capsys)
    assert code == 0


def test_montecarlo_identical_across_workers(tmp_path):
    outs = []
    for w in (1, 8):
        o = tmp_path / f"mc{w}.tsv"
        assert cli.main(["montecarlo", "-n", "100000", "--seed", "5", "--workers", str(w), "-o", str(o)]) == 0
        outs.append(o.read_bytes())
        man = json.loads((tmp_path / f"mc{w}.tsv.manifest.json").read_text())
        assert man["seed"] == 5
    assert outs[0] == outs[1]


def test_rerun_byte_identical(tmp_path):
    a, b = tmp_path / "a.tsv", tmp_path / "b.tsv"
    for o in (a, b):
        cli.main(["curve", "transmitted_mean", "--noise", "0.05", "--seed", "3", "-o", str(o)])
    assert a.read_bytes() == b.read_bytes()
    ma = json.loads((tmp_path / "a.tsv.manifest.json").read_text())
    mb = json.loads((tmp_path / "b.tsv.manifest.json").read_text())
    ma.pop("timestamp"), mb.pop("timestamp")
    ma.pop("argv"), mb.pop("argv"), ma.pop("output"), mb.pop("output")
    assert ma == mb


def test_montecarlo_background_heralds(capsys):
    code, out, _ = run(["montecarlo", "-n", "400000", "--set", "n_g=0", "--seed", "1", "--no-manifest"], capsys)
    assert code == 0
    _, rows = table(out)
    ph = {r[0]: r for r in rows}["p_h"]
    assert abs(float(ph[1]) - 1.4e-4) < 3.5 * float(ph[2])


def test_fit_round_trip(tmp_path, capsys):
    data = tmp_path / "d.tsv"
    cli.main(["curve", "transmitted_mean", "--start", "0.1", "--stop", "6", "--points", "40", "--noise", "0.02",
              "--noise-floor", "0.002", "--seed", "11", "-o", str(data)])
    code, out, _ = run(["fit", "transmitted_mean", str(data), "--free", "t0,b", "--init", "t0=0.5,b=1",
                        "--no-manifest"], capsys)
    assert code == 0
    _, rows = table(out)
    res = {r[0]: (float(r[1]), float(r[2])) for r in rows}
    assert abs(res["t0"][0] - 0.30) < 3 * res["t0"][1]
    assert abs(res["b"][0] - 1.6) < 3 * res["b"][1]


def test_fit_bad_data(tmp_path, capsys):
    f = tmp_path / "bad.tsv"
    f.write_text("# nothing\nx y\n")
    code, _, err = run(["fit", "linear", str(f), "--free", "slope", "--no-manifest"], capsys)
    assert code == cli.EXIT_CONFIG


def test_fit_nonconvergence_exit_code(tmp_path, capsys):
    f = tmp_path / "d.tsv"
    x = np.linspace(0.1, 5, 20)
    np.savetxt(f, np.column_stack([x, 0.3 * 1.6 * (1 - np.exp(-x / 1.6))]))
    code, _, _ = run(["fit", "transmitted_mean", str(f), "--free", "t0,b", "--init", "t0=0.9,b=50",
                      "--max-iter", "1", "--no-manifest"], capsys)
    assert code == cli.EXIT_NONCONVERGED


def test_usage_error_exit_code():
    proc = subprocess.run([sys.executable, "-m", "rydswitch.cli", "curve"], capture_output=True)
    assert proc.returncode == 2


def test_presets_listing(capsys):
    code, out, _ = run(["presets"], capsys)
    assert code == 0 and "paper-2014" in out
