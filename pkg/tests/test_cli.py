import csv
import io
import json
import math
import subprocess
import sys

import pytest

from chromopaint import cli, validate


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_exact_two_locus(capsys):
    code, out, _ = run(["exact", "--loci", "0,1", "--rho", "1"], capsys)
    assert code == 0
    got = {r["partition"]: float(r["probability"]) for r in rows(out)}
    assert got == {"0,1": 0.5, "0/1": 0.5}


def test_exact_three_loci_sums_to_one(capsys):
    code, out, _ = run(["exact", "--loci", "0,1,3", "--rho", "10", "--format", "json"], capsys)
    table = json.loads(out)
    assert code == 0 and len(table) == 5
    assert sum(r["probability"] for r in table) == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("loci", ["1,0", "0,x", "0,1,1", ""])
def test_exact_rejects_bad_loci(loci, capsys):
    code, _, err = run(["exact", "--loci", loci, "--rho", "1"], capsys)
    assert code == 2 and "--loci" in err


def test_exact_rejects_bad_rho_and_size(capsys):
    code, _, err = run(["exact", "--loci", "0,1", "--rho", "-1"], capsys)
    assert code == 2 and "--rho" in err
    code, _, err = run(["exact", "--loci", ",".join(str(i) for i in range(12)), "--rho", "1"], capsys)
    assert code == 2 and "ceiling" in err


@pytest.mark.parametrize("rho,expected", [(100.0, 1 / 101), (1e4, 1 / 10001)])
def test_approx_two_locus_error(rho, expected, capsys):
    code, out, _ = run(["approx", "--loci", "0,1", "--rho", str(rho)], capsys)
    table = {r["partition"]: r for r in rows(out)}
    assert code == 0
    assert list(rows(out)[0]) == ["partition", "order", "exact", "approx", "rel_error"]
    assert float(table["0,1"]["rel_error"]) == pytest.approx(expected, rel=1e-9)
    assert table["0,1"]["order"] == "1"
    assert all(math.isfinite(float(r["rel_error"])) for r in rows(out))


def test_sim_interval_outputs_and_manifest(tmp_path, capsys):
    out = tmp_path / "ens.csv"
    argv = ["sim-interval", "--R", "50", "--replicates", "20", "--t-burn", "3",
            "--windows", "0:0.5,0.5:1", "--seed", "4", "--out", str(out)]
    assert cli.main(argv) == 0
    data = rows(out.read_text())
    assert len(data) == 40      # one row per window per replicate
    assert list(data[0]) == ["replicate", "R", "rho", "t_burn", "leftmost_raw", "leftmost_rescaled",
                             "segments_total", "theta_a", "theta_b", "theta_mass"]
    assert [(r["replicate"], r["theta_a"], r["theta_b"]) for r in data[:2]] == [("0", "0", "0.5"), ("0", "0.5", "1")]
    summary = json.loads((tmp_path / "ens.csv.summary.json").read_text())
    assert summary["ks_skipped"] is False and 0 <= summary["ks_exp1"]["p_value"] <= 1
    assert len(summary["theta_windows"]) == 2
    assert summary["segment_halves"]["expected"] == 26.0
    man = cli.RunManifest.read(str(out) + ".manifest.json")
    assert man.command == "sim-interval" and man.seed == 4 and man.params["R"] == 50.0
    assert str(out) in man.outputs and man.timestamp

    # replay reproduces the bytes
    again = tmp_path / "again.csv"
    assert cli.main(["replay", str(out) + ".manifest.json", "--out", str(again)]) == 0
    assert again.read_bytes() == out.read_bytes()


def test_sim_interval_single_replicate(tmp_path):
    out = tmp_path / "one.csv"
    assert cli.main(["sim-interval", "--R", "30", "--replicates", "1", "--seed", "1", "--out", str(out)]) == 0
    summary = json.loads((tmp_path / "one.csv.summary.json").read_text())
    assert summary["ks_skipped"] is True and summary["ks_exp1"] is None


def test_sim_interval_guards(capsys):
    code, _, err = run(["sim-interval", "--R", "1e6", "--replicates", "10000"], capsys)
    assert code == 2 and "--force" in err
    code, _, err = run(["sim-interval", "--R", "10", "--windows", "0:3"], capsys)
    assert code == 2
    code, _, err = run(["sim-interval", "--R", "10", "--replicates", "0"], capsys)
    assert code == 2


def test_sim_interval_determinism_and_env_seed(tmp_path, monkeypatch):
    base = ["sim-interval", "--R", "40", "--replicates", "6", "--t-burn", "2"]
    a, b, c = tmp_path / "a.csv", tmp_path / "b.csv", tmp_path / "c.csv"
    assert cli.main(base + ["--seed", "9", "--out", str(a)]) == 0
    monkeypatch.setenv(cli.SEED_ENV, "9")
    assert cli.main(base + ["--threads", "2", "--out", str(b)]) == 0
    # the flag wins over the environment
    assert cli.main(base + ["--seed", "10", "--out", str(c)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_bytes() != c.read_bytes()
    man = cli.RunManifest.read(str(b) + ".manifest.json")
    assert man.argv[-2:] == ["--seed", "9"]


def test_bad_env_seed(monkeypatch, capsys):
    monkeypatch.setenv(cli.SEED_ENV, "abc")
    code, _, err = run(["theta"], capsys)
    assert code == 2 and cli.SEED_ENV in err


def test_theta_outputs(tmp_path, capsys):
    code, out, _ = run(["theta", "--trunc", "1e-3", "--seed", "2"], capsys)
    atoms = json.loads(out)
    assert code == 0 and all(1e-3 < a["x"] <= 1 for a in atoms)
    code, out, _ = run(["theta", "--replicates", "20000", "--seed", "2"], capsys)
    table = rows(out)
    assert code == 0 and len(table) == 5
    assert list(table[0]) == ["intervals", "powers", "analytic", "monte_carlo", "std_err"]
    code, _, _ = run(["theta", "--trunc", "2"], capsys)
    assert code == 2


def test_sim_arg(capsys):
    code, out, _ = run(["sim-arg", "--loci", "0,1", "--rho", "1", "--t-max", "2000", "--seed", "3"], capsys)
    table = rows(out)
    assert code == 0 and len(table) == 2
    for r in table:
        assert abs(float(r["occupancy"]) - float(r["exact"])) < 4 * float(r["std_err"])


def test_moran_outputs(tmp_path):
    out, snap = tmp_path / "fix.json", tmp_path / "mosaics.csv"
    assert cli.main(["moran", "--N", "5", "--R", "3", "--rho", "0.1", "--seed", "1",
                     "--out", str(out), "--snapshot", str(snap)]) == 0
    res = json.loads(out.read_text())
    assert res["fixed"] and res["events"] > 0 and res["n_colors"] >= 1
    table = rows(snap.read_text())
    assert list(table[0]) == ["individual", "seg_start", "seg_end", "color"]
    assert {r["individual"] for r in table} == {str(i) for i in range(5)}
    assert (tmp_path / "mosaics.csv.manifest.json").exists()


def test_moran_rejects_bad_rate(capsys):
    code, _, err = run(["moran", "--N", "5", "--R", "3", "--rho", "0.5"], capsys)
    assert code == 2 and "rho_N" in err


def test_duality_command(capsys):
    code, out, _ = run(["duality", "--N", "6", "--R", "2", "--loci", "0,1", "--rho", "1",
                        "--replicates", "200", "--seed", "1"], capsys)
    res = json.loads(out)
    assert code == 0 and res["states"] == ["0,1", "0/1"] and res["limit"] == pytest.approx([0.5, 0.5])


def test_validate_exit_status(monkeypatch, tmp_path, capsys):
    def fake_suite(level, threads=1, seed_offset=0, echo=print):
        return [validate.Criterion(1, "ok", 0.0, "<= 1", True),
                validate.Criterion(2, "bad", 2.0, "<= 1", False)]

    monkeypatch.setattr(validate, "run_suite", fake_suite)
    out = tmp_path / "report.json"
    assert cli.main(["validate", "--out", str(out)]) == 1
    report = json.loads(out.read_text())
    assert report["passed"] is False and [c["passed"] for c in report["criteria"]] == [True, False]
    assert set(report["criteria"][0]) == {"id", "name", "observed", "threshold", "passed", "runtime", "details"}


def test_validate_quick_runs_clean(tmp_path):
    out = tmp_path / "quick.json"
    assert cli.main(["validate", "--level", "quick", "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert [c["id"] for c in report["criteria"]] == [1, 2, 3, 4, 5, 6]
    assert sum(c["runtime"] for c in report["criteria"]) < 60


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "chromopaint.cli", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and "chromopaint" in proc.stdout
