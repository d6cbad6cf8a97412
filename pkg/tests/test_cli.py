import csv
import json
import subprocess
import sys

import pytest

from nbody_majorants.cli import EXIT_CHECK, EXIT_INPUT, EXIT_NUMERIC, EXIT_OK, OUT_ENV, main
from nbody_majorants.presets import SOLAR_UNITS, save_system, synthetic_solar_system


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def by_name(rows, key="name"):
    return {r[key]: r for r in rows}


def test_radii_default(tmp_path, capsys):
    assert main(["--out", str(tmp_path), "radii"]) == EXIT_OK
    rows = by_name(read_csv(tmp_path / "radii.csv"))
    assert abs(float(rows["R"]["value"]) - 0.0839968103939379) <= 1e-12
    assert abs(float(rows["r(0.5)"]["value"]) - 0.42812819) <= 1e-7
    assert abs(float(rows["R_hat"]["value"]) / 0.094790093 - 1) <= 1e-4
    assert rows["R"]["anchor"] == "0.0839968103939379"
    assert "R," in capsys.readouterr().out
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["command"] == "radii"
    assert all(manifest["checks"].values())
    assert {"config", "version", "outputs", "duration_s"} <= manifest.keys()


def test_series_xi_zeta(tmp_path):
    assert main(["--out", str(tmp_path), "--order", "5", "series", "xi-zeta"]) == EXIT_OK
    rows = read_csv(tmp_path / "series_xi-zeta.csv")
    xi = [(int(r["degree"]), float(r["coefficient"])) for r in rows if r["series"] == "xi"]
    zeta = [(int(r["degree"]), float(r["coefficient"])) for r in rows if r["series"] == "zeta"]
    assert xi[:2] == [(0, 1.0), (1, 1.0)]
    assert zeta[:2] == [(0, 0.0), (1, 1.0)]
    checks = [r for r in rows if r["series"].startswith("check:")]
    assert checks and all(float(r["coefficient"]) <= 1e-10 for r in checks)
    assert rows[-1]["series"] == "radius"


def test_series_lambda(tmp_path):
    assert main(["--out", str(tmp_path), "--order", "2", "series", "lambda", "--eta0", "0.5"]) == EXIT_OK
    rows = read_csv(tmp_path / "series_lambda.csv")
    assert float(rows[1]["coefficient"]) == pytest.approx(0.5**0.5, abs=1e-15)
    assert float(rows[2]["coefficient"]) == pytest.approx(0.25, abs=1e-15)


def test_series_rho_rejects_zero_parameters(tmp_path, capsys):
    assert main(["--out", str(tmp_path), "series", "rho", "--mu0", "0", "--nu0", "0"]) == EXIT_INPUT
    assert "nu0" in capsys.readouterr().err


@pytest.mark.parametrize("which", ["rho", "midpoint"])
def test_series_other_families(tmp_path, which):
    assert main(["--out", str(tmp_path), "--order", "20", "series", which]) == EXIT_OK


def test_series_energy_needs_kappa(tmp_path):
    assert main(["--out", str(tmp_path), "series", "xi-zeta", "--kind", "energy"]) == EXIT_INPUT
    assert main(["--out", str(tmp_path), "--order", "10", "series", "xi-zeta", "--kind", "energy",
                 "--kappa", "0.5"]) == EXIT_OK


def test_global_flags_after_subcommand(tmp_path):
    assert main(["radii", "--out", str(tmp_path), "--eta0", "0.5"]) == EXIT_OK
    assert (tmp_path / "radii.csv").exists()


def test_output_directory_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(OUT_ENV, str(tmp_path / "env"))
    assert main(["--order", "4", "series", "lambda"]) == EXIT_OK
    assert (tmp_path / "env" / "series_lambda.csv").exists()


def test_reruns_are_byte_identical(tmp_path):
    args = ["integrate", "--preset", "circular", "--renorm", "pnorm", "--nsteps", "30", "--local-errors"]
    assert main(["--out", str(tmp_path / "a")] + args) == EXIT_OK
    assert main(["--out", str(tmp_path / "b")] + args) == EXIT_OK
    for name in ("trajectory.csv", "local_errors.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_integrate_certified(tmp_path):
    assert main(["--out", str(tmp_path), "integrate", "--preset", "ellipse099", "--renorm", "pnorm",
                 "--nsteps", "40", "--step", "0.01", "--certify"]) == EXIT_OK
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["checks"]["local errors within certificates"]
    rows = read_csv(tmp_path / "local_errors.csv")
    assert all(float(r["pos_err"]) <= float(r["cert_bound"]) for r in rows)


def test_integrate_nonconvergence_exit_code(tmp_path):
    code = main(["--out", str(tmp_path), "integrate", "--preset", "circular", "--renorm", "physical",
                 "--step", "3.0", "--nsteps", "3", "--fp-maxiter", "10"])
    assert code == EXIT_NUMERIC
    assert json.loads((tmp_path / "manifest.json").read_text())["failure"]["step"] == 1


def test_invalid_system_file(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"bodies": []}))
    assert main(["--out", str(tmp_path), "integrate", "--system", str(bad)]) == EXIT_INPUT
    assert main(["--out", str(tmp_path), "integrate", "--system", str(tmp_path / "missing.json")]) == EXIT_INPUT


def test_physical_run_reproduces_compare_column(tmp_path):
    assert main(["--out", str(tmp_path / "c"), "compare", "--preset", "circular", "--nsteps", "50",
                 "--probe", "local"]) == EXIT_OK
    summary = by_name(read_csv(tmp_path / "c" / "summary.csv"), "run")
    dt = summary["physical"]["step"]
    assert main(["--out", str(tmp_path / "i"), "integrate", "--preset", "circular", "--renorm", "physical",
                 "--nsteps", "50", "--step", dt, "--local-errors"]) == EXIT_OK
    a = (tmp_path / "c" / "physical_local_errors.csv").read_bytes()
    b = (tmp_path / "i" / "local_errors.csv").read_bytes()
    assert a == b


def test_compare_eccentric_orbit(tmp_path):
    assert main(["--out", str(tmp_path), "compare", "--preset", "ellipse099", "--stages", "1",
                 "--nsteps", "2000", "--renorm", "original", "--probe", "local"]) == EXIT_OK
    s = by_name(read_csv(tmp_path / "summary.csv"), "run")
    assert s["physical"]["nsteps"] == s["renormalized"]["nsteps"] == "2000"
    assert float(s["renormalized"]["max_local_err"]) < float(s["physical"]["max_local_err"])


def test_compare_writes_global_tables(tmp_path):
    assert main(["--out", str(tmp_path), "compare", "--preset", "circular", "--nsteps", "40"]) == EXIT_OK
    for name in ("physical_local_errors.csv", "physical_global_errors.csv",
                 "renormalized_local_errors.csv", "renormalized_global_errors.csv", "summary.csv"):
        assert (tmp_path / name).exists()


def test_compare_rejects_physical_renorm(tmp_path):
    assert main(["--out", str(tmp_path), "compare", "--preset", "circular", "--renorm", "physical"]) == EXIT_INPUT


def test_compare_fifteen_body_smoke(tmp_path):
    path = tmp_path / "system.json"
    save_system(synthetic_solar_system(), path, {k: v for k, v in SOLAR_UNITS.items() if k != "G"})
    code = main(["--out", str(tmp_path / "out"), "compare", "--system", str(path), "--dt", "8",
                 "--dtau", "0.7196076352409821", "--nsteps", "1000", "--stages", "8", "--renorm", "original",
                 "--probe", "none"])
    assert code == EXIT_OK
    s = by_name(read_csv(tmp_path / "out" / "summary.csv"), "run")
    assert s["physical"]["completed"] == s["renormalized"]["completed"] == "True"
    assert s["renormalized"]["step"] == "0.7196076352409821"
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert manifest["units"]["length"] == "AU"


def test_validate_bounds(tmp_path):
    assert main(["--out", str(tmp_path), "--seed", "4", "validate-bounds", "--states", "4"]) == EXIT_OK
    rows = read_csv(tmp_path / "dominance.csv")
    assert rows and all(r["holds"] == "True" for r in rows)


def test_console_script_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "nbody_majorants.cli", "--out", str(tmp_path), "radii",
                          "--eta0", "0.5"], capture_output=True, text=True)
    assert out.returncode == 0
    assert out.stdout.startswith("name,value,tolerance,anchor")


def test_exit_code_constants():
    assert (EXIT_OK, EXIT_CHECK, EXIT_INPUT, EXIT_NUMERIC) == (0, 1, 2, 3)
