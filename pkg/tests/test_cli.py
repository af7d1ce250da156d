import csv
import io
import subprocess
import sys

import pytest

from relaytree.cli import EXIT_CONFIG, EXIT_DOMAIN, EXIT_OK, OUTPUT_DIR_ENV, main


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr().out
    return code, out


def table(text):
    lines = text.splitlines()
    assert lines[0].startswith("# relaytree ")
    return list(csv.DictReader(io.StringIO("\n".join(lines[1:]) + "\n")))


def test_evolve(capsys):
    code, out = run(["evolve", "--height", "3", "--schedule", "quadratic:p0=0.1"], capsys)
    assert code == EXIT_OK
    rows = table(out)
    assert [int(r["k"]) for r in rows] == [0, 1, 2, 3]
    assert float(rows[1]["alpha"]) == pytest.approx(0.191 / 1.1, rel=1e-14)
    assert rows[0]["region"] == "B"


def test_evolve_sensor_count(capsys):
    code, out = run(["evolve", "--sensors", "16"], capsys)
    assert code == EXIT_OK and len(table(out)) == 5


def test_bounds_record(capsys):
    code, out = run(["bounds", "--sensors", "1024", "--schedule", "quadratic:p0=0.1"], capsys)
    assert code == EXIT_OK
    rec = dict(l.split("=", 1) for l in out.splitlines()[1:])
    assert rec["parity"] == "even"
    assert float(rec["upper_bits"]) >= float(rec["measured_bits"])


def test_simulate_columns(capsys):
    code, out = run(["simulate", "--height", "3", "--trials", "5000", "--seed", "4"], capsys)
    assert code == EXIT_OK
    (row,) = table(out)
    for key in ("est_typeI", "se_typeI", "rec_typeI", "z_typeI", "est_starvation"):
        assert key in row


def test_oracle(capsys):
    code, out = run(["oracle", "--height", "2", "--schedule", "constant:p=0.1"], capsys)
    assert code == EXIT_OK and table(out)


def test_regions(capsys):
    code, out = run(["regions", "--q", "0.1", "--alpha-step", "0.1"], capsys)
    rows = table(out)
    assert code == EXIT_OK and len(rows) == 5


def test_ratios(capsys):
    code, out = run(["ratios", "--height", "6", "--schedule", "quadratic:p0=0.1"], capsys)
    assert code == EXIT_OK and table(out)


def test_scaling(capsys):
    code, out = run(["scaling"], capsys)
    rows = table(out)
    slopes = {r["profile"]: float(r["fitted_slope"]) for r in rows}
    assert code == EXIT_OK
    assert slopes["none"] == pytest.approx(0.5, abs=0.05)
    assert slopes["constant"] < slopes["quadratic"] - 0.05


def test_size(capsys):
    code, out = run(["size", "--epsilon", "0.01", "--L0", "0.1"], capsys)
    assert code == EXIT_OK and int(table(out)[0]["n_sensors"]) == 16


def test_decay(capsys):
    code, out = run(["decay", "--schedule", "constant:p=0.1"], capsys)
    assert code == EXIT_OK and "verdict=insufficient" in out


@pytest.mark.parametrize("argv", [
    ["evolve", "--sensors", "12"],
    ["evolve", "--height", "3", "--sensors", "8"],
    ["evolve", "--height", "3", "--schedule", "bogus"],
    ["evolve", "--height", "3", "--alpha0", "0.7", "--beta0", "0.5"],
    ["evolve", "--height", "3", "--schedule", "explicit:0.1,0.1"],
    ["size", "--epsilon", "0.01", "--L0", "0.3", "--c", "1"],
    ["nosuch"],
])
def test_config_errors(argv, capsys):
    assert main(argv) == EXIT_CONFIG
    assert capsys.readouterr().out == ""


def test_domain_error(capsys):
    assert main(["evolve", "--height", "3", "--schedule", "constant:p=1"]) == EXIT_DOMAIN


def test_env_output_dir_and_no_partial_file(tmp_path, monkeypatch):
    monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path))
    assert main(["evolve", "--height", "2"]) == EXIT_OK
    assert (tmp_path / "evolve.csv").read_text().startswith("# relaytree")
    assert main(["oracle", "--height", "9"]) != EXIT_OK
    assert not (tmp_path / "oracle.csv").exists()


def test_byte_identical(tmp_path):
    argv = ["simulate", "--height", "4", "--schedule", "quadratic:p0=0.1", "--trials", "9000",
            "--seed", "3"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(argv + ["-o", str(a)]) == EXIT_OK
    assert main(argv + ["--workers", "3", "-o", str(b)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# example\nschedule = quadratic:p0=0.1\nalpha0 = 0.05\n")
    code, out = run(["--config", str(cfg), "evolve", "--height", "1"], capsys)
    assert code == EXIT_OK
    assert float(table(out)[0]["alpha"]) == 0.05


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "relaytree", "size", "--epsilon", "0.25",
                          "--L0", "0.25"], capture_output=True, text=True, check=True)
    assert res.stdout.splitlines()[-1].split(",")[3] == "4"


def test_short_c_flag_is_not_config(capsys):
    code, out = run(["size", "--epsilon", "1e-6", "--L0", "0.1", "--c", "0"], capsys)
    assert code == EXIT_OK and int(table(out)[0]["n_sensors"]) == 256
