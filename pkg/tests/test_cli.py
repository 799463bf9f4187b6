import struct
import subprocess
import sys

import numpy as np
import pytest

from fineq.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_condition_c_examples(capsys):
    code, out, _ = run(capsys, "condition-c", "--omega", "3,1", "--c1", "3,-1")
    assert (code, out.strip()) == (0, "satisfied")
    code, out, _ = run(capsys, "condition-c", "--omega", "2,1", "--c1", "3,-1")
    assert code == 1 and out.startswith("violated: kernel vector")


def test_condition_c_from_file(tmp_path, capsys):
    f = tmp_path / "c.ini"
    f.write_text("[cohomology]\nbasis_rank = 2\nomega = 1/2, 3/2\nc1 = 3, -1\n")
    assert run(capsys, "condition-c", "--config", str(f))[0] == 0
    f.write_text("[cohomology]\nbasis_rank = 3\nomega = 1, 1\nc1 = 1, 1\n")
    assert run(capsys, "condition-c", "--config", str(f))[0] == 2


@pytest.mark.parametrize("argv", [
    ["condition-c", "--omega", "3,1"],
    ["condition-c", "--omega", "abc,1", "--c1", "1,1"],
    ["quantize", "--k", "0", "--f", "u"],
    ["quantize", "--k", "4", "--f", "nope"],
    ["propagate", "--k", "4", "--path", "rot_q(1)"],
    ["run", "/nonexistent/x.cfg"],
])
def test_input_errors_exit_2(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_argparse_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["quantize", "--k", "x", "--f", "u"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2


def test_quantize_norm(capsys):
    code, out, _ = run(capsys, "quantize", "--k", "16", "--f", "u")
    assert code == 0
    line = next(l for l in out.splitlines() if l.startswith("op-norm"))
    assert float(line.split("=")[1]) == pytest.approx(15 / 17, abs=1e-13)


def test_dump_operator_formats(tmp_path, capsys):
    csv_path, raw_path = tmp_path / "q.csv", tmp_path / "q.raw"
    assert run(capsys, "dump-operator", "--k", "3", "--f", "u", "-o", str(csv_path))[0] == 0
    assert run(capsys, "dump-operator", "--k", "3", "--f", "u", "--format", "raw", "-o", str(raw_path))[0] == 0
    rows = [list(map(float, l.split(","))) for l in csv_path.read_text().splitlines()]
    A = np.array([[complex(r[2 * j], r[2 * j + 1]) for j in range(3)] for r in rows])
    B = np.frombuffer(raw_path.read_bytes(), dtype="<c16").reshape(3, 3)
    assert np.array_equal(A, B)
    assert np.allclose(np.diag(A).real, [2 / 3, 0, -2 / 3], atol=1e-15)
    assert struct.calcsize("<dd") * 9 == raw_path.stat().st_size


def test_propagate_half_turn(capsys):
    code, out, _ = run(capsys, "propagate", "--k", "9", "--path", "rot_x(pi)")
    assert code == 0
    line = next(l for l in out.splitlines() if l.startswith("||U - 1||_op"))
    assert float(line.split("=")[1]) == pytest.approx(2.0, abs=1e-12)


def test_list(capsys):
    code, out, _ = run(capsys, "list")
    assert code == 0 and "egorov" in out and "twopiloop" in out and "u2" in out


def test_run_writes_artifacts_and_plot_reproduces(tmp_path, capsys):
    cfg = tmp_path / "t.cfg"
    cfg.write_text("[run]\nks = 4, 8, 16\nexperiments = separation, p1_norm\n[p1_norm]\nfunctions = u\n")
    code, out, _ = run(capsys, "run", str(cfg), "--output", str(tmp_path / "o"), "-q", "--threads", "2")
    assert code == 0
    assert "0 fail" in out
    for name in ("defects.csv", "rates.csv", "report.json"):
        assert (tmp_path / "o" / name).exists()
    svg = tmp_path / "o" / "plots" / "p1_norm.svg"
    before = svg.read_bytes()
    assert run(capsys, "plot", str(tmp_path / "o" / "defects.csv"), "--output", str(tmp_path / "p"))[0] == 0
    assert (tmp_path / "p" / "p1_norm.svg").read_bytes() == before
    assert run(capsys, "run", str(cfg), "--only", "egorov", "--output", str(tmp_path / "o"))[0] == 2


def test_plot_rejects_foreign_csv(tmp_path, capsys):
    f = tmp_path / "x.csv"
    f.write_text("a,b\n1,2\n")
    assert run(capsys, "plot", str(f))[0] == 2


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "fineq.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("fineq ")
