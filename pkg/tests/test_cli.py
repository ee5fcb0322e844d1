import json

import pytest

from qite.cli import main


@pytest.fixture
def files(tmp_path):
    z = tmp_path / "z.txt"
    z.write_text("1.0 Z\n")
    xz = tmp_path / "xz.txt"
    xz.write_text("0.5 X\n0.5 Z\n")
    diag = tmp_path / "diag.txt"
    diag.write_text("0.3 ZZI\n-0.8 ZII\n0.5 IZZ\n")
    xor = tmp_path / "xor.qubo"
    xor.write_text("lin 0 1\nlin 1 1\nquad 0 1 -2\n")
    return tmp_path, {"z": z, "xz": xz, "diag": diag, "xor": xor}


def run(args, out):
    return main([*args, "--out", str(out)])


def read_report(out):
    return json.loads((out / "report.json").read_text())


def test_exact_writes_trace(files, capsys):
    tmp, f = files
    out = tmp / "exact"
    assert run(["exact", "--hamiltonian", str(f["z"]), "--time", "5", "--samples", "100", "--init", "plus"], out) == 0
    lines = (out / "trace.csv").read_text().splitlines()
    assert lines[0].startswith("# ")
    header = json.loads(lines[0][2:])
    assert header["seed"] == 0 and header["time"] == 5.0
    assert len(lines) == 2 + 100
    rep = read_report(out)
    assert rep["fidelity_bound_ok"] is True
    assert rep["Q"] == 1 and rep["mu"] == 1 and rep["gap"] == pytest.approx(2.0) and rep["f0"] == pytest.approx(0.5)


def test_exact_random_init_deterministic(files):
    tmp, f = files
    args = ["exact", "--hamiltonian", str(f["diag"]), "--time", "1", "--samples", "7", "--init", "random", "--seed", "7"]
    assert run(args, tmp / "a") == 0
    assert run(args, tmp / "b") == 0
    assert (tmp / "a" / "trace.csv").read_text().splitlines()[1:] == (tmp / "b" / "trace.csv").read_text().splitlines()[1:]


def test_trotter_reports_error_and_factors(files, capsys):
    tmp, f = files
    errs = []
    for delta in ("0.02", "0.01"):
        out = tmp / f"t{delta}"
        assert run(["trotter", "--hamiltonian", str(f["xz"]), "--time", "1", "--delta", delta, "--init", "basis:1"], out) == 0
        rep = read_report(out)
        errs.append(rep["error_vs_exact"])
        assert rep["factors_total"] == 2 * rep["layers"]
    assert errs[0] / errs[1] == pytest.approx(2.0, rel=0.2)


def test_trotter_warns_when_delta_exceeds_time(files, capsys):
    tmp, f = files
    assert run(["trotter", "--hamiltonian", str(f["z"]), "--time", "0.1", "--delta", "0.5"], tmp / "w") == 0
    assert "warning" in capsys.readouterr().err
    assert read_report(tmp / "w")["warnings"]


def test_trotter_commuting_exact(files):
    tmp, f = files
    assert run(["trotter", "--hamiltonian", str(f["diag"]), "--time", "1", "--delta", "0.1"], tmp / "c") == 0
    assert read_report(tmp / "c")["error_vs_exact"] <= 1e-9


def test_compile_single_qubit_demo(files):
    tmp, f = files
    out = tmp / "comp"
    assert run(["compile", "--hamiltonian", str(f["z"]), "--time", "0.05", "--delta", "0.05"], out) == 0
    steps = json.loads((out / "steps.json").read_text())
    angles = steps["steps"][0]["angles"]
    assert angles[1] == pytest.approx(0.09983, abs=1e-5)
    assert steps["flags"]["seed"] == 0
    rep = read_report(out)
    assert rep["total_gates"] == 3
    circuit = (out / "circuit.txt").read_text().splitlines()
    assert circuit[1].startswith("R(Y, ")
    assert rep["gate_bound"] == 4


def test_compile_reproducible(files):
    tmp, f = files
    args = ["compile", "--hamiltonian", str(f["xz"]), "--time", "0.1", "--delta", "0.05", "--init", "random", "--seed", "3"]
    assert run(args, tmp / "a") == 0
    assert run(args, tmp / "b") == 0
    assert (tmp / "a" / "circuit.txt").read_text() == (tmp / "b" / "circuit.txt").read_text()


def test_qubo_xor(files, capsys):
    tmp, f = files
    assert run(["qubo", "--qubo", str(f["xor"]), "--epsilon", "0.5", "--repeats", "50"], tmp / "q") == 0
    rep = read_report(tmp / "q")
    assert rep["p_measured"] >= 0.5
    assert rep["flags"]["seed"] == 0


def test_qubo_single_shot_on_converged_state(files):
    tmp, f = files
    assert run(["qubo", "--qubo", str(f["xor"]), "--epsilon", "0.999999", "--shots", "1", "--seed", "4", "--repeats", "20"], tmp / "s") == 0
    rep = read_report(tmp / "s")
    assert rep["empirical_success"] == 1.0


def test_qubo_parse_error_has_line(files, capsys):
    tmp, f = files
    bad = tmp / "bad.qubo"
    bad.write_text("lin 0 1\nquad 0 1\n")
    assert run(["qubo", "--qubo", str(bad)], tmp / "x") == 1
    assert "line 2" in capsys.readouterr().err


def test_missing_required_flag(files, capsys):
    tmp, f = files
    with pytest.raises(SystemExit) as err:
        main(["exact", "--time", "1"])
    assert err.value.code == 1
    assert "--hamiltonian" in capsys.readouterr().err


def test_config_file_supplies_defaults_flags_win(files):
    tmp, f = files
    cfg = tmp / "run.cfg"
    cfg.write_text(f"# defaults\nhamiltonian = {f['z']}\ntime = 1\nsamples = 3\n")
    out = tmp / "cfg"
    assert main(["exact", "--config", str(cfg), "--samples", "4", "--out", str(out)]) == 0
    assert len((out / "trace.csv").read_text().splitlines()) == 2 + 4


def test_bad_config_key(files):
    tmp, f = files
    cfg = tmp / "bad.cfg"
    cfg.write_text("nonsense = 1\n")
    with pytest.raises(SystemExit) as err:
        main(["exact", "--config", str(cfg)])
    assert err.value.code == 1


def test_missing_file_is_usage_error(files, capsys):
    tmp, _ = files
    assert run(["exact", "--hamiltonian", str(tmp / "nope.txt"), "--time", "1"], tmp / "m") == 1
