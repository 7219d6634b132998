import subprocess
import sys

import numpy as np
import pytest

from hebbnet.cli import main
from hebbnet.patterns import generate_random_patterns, save_patterns, save_pgm


def test_theory_mode(tmp_path, capsys):
    out = tmp_path / "t.csv"
    assert main(["--mode", "theory", "--ak-source", "fc", "--out", str(out)]) == 0
    assert "alpha_c=0.1379" in capsys.readouterr().out
    assert "alpha,m,chi,r,MI,i,converged" in out.read_text()


def test_stability_mode_deterministic(tmp_path):
    args = ["--mode", "stability", "--budget", "20000", "--gamma", "0.2", "--omega", "0.1",
            "--trials", "1", "--delta-p", "5", "--seed", "4"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_sweep_mode(tmp_path, capsys):
    out = tmp_path / "s.csv"
    assert main(["--mode", "sweep", "--budget", "20000", "--gamma", "0.3,0.1", "--omega", "0.1",
                 "--trials", "1", "--out", str(out)]) == 0
    assert "gamma_opt=" in capsys.readouterr().out
    assert len(out.read_text().splitlines()) > 3


def test_ak_mode(tmp_path):
    out = tmp_path / "a.csv"
    assert main(["--mode", "ak", "--budget", "40000", "--gamma", "0.05", "--omega", "0.3",
                 "--walks", "20000", "--kmax", "6", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[1] == "k,a_k,stderr" and len(lines) == 9


def test_patterns_file(tmp_path, capsys):
    path = tmp_path / "p.txt"
    save_patterns(generate_random_patterns(5, 100, np.random.default_rng(0)), path)
    # budget 1000 at gamma 0.1 gives N=100, K=10
    assert main(["--mode", "retrieval", "--budget", "1000", "--gamma", "0.1", "--patterns", str(path),
                 "--trials", "1"]) == 0
    assert "N=100 K=10" in capsys.readouterr().out


def test_image_mode(tmp_path, capsys):
    img = np.zeros((40, 40), dtype=np.uint8)
    img[:, 20:] = 200
    img[20:, :] //= 2
    path = tmp_path / "step.pgm"
    save_pgm(img, path)
    assert main(["--mode", "image", "--image", str(path), "--patch", "12", "--gamma", "0.3,0.1",
                 "--omega", "0.1", "--trials", "1", "--delta-p", "3"]) == 0
    assert "gamma_opt=" in capsys.readouterr().out


@pytest.mark.parametrize("argv", [
    ["--mode", "stability", "--gamma", "2"],
    ["--mode", "image"],
    ["--mode", "retrieval", "--patterns", "{bad}"],
    ["--mode", "image", "--image", "{bad}"],
])
def test_errors_exit_nonzero(tmp_path, capsys, argv):
    bad = tmp_path / "bad.txt"
    bad.write_text("P=1 N=3\n1 0 1\n")
    argv = [a.replace("{bad}", str(bad)) for a in argv]
    assert main(argv) != 0
    assert "error" in capsys.readouterr().err


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "hebbnet", "--mode", "theory", "--ak-source", "red"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0 and "i_max=0.2156" in res.stdout
    bad = subprocess.run([sys.executable, "-m", "hebbnet", "--mode", "nope"], capture_output=True)
    assert bad.returncode != 0
