import shutil
import subprocess
import sys

from conftest import LAB, SCENARIOS
from eigrpsim.cli import main


def test_run_passes(capsys):
    assert main(["run", str(LAB)]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 12 and "FAIL" not in out
    assert "events=" in out and "trace=" in out


def test_run_missing_file(capsys):
    assert main(["run", "does-not-exist.esim"]) == 2


def test_run_parse_error(tmp_path, capsys):
    bad = tmp_path / "bad.esim"
    bad.write_text("node a type=router\nlink x kind=serial attach=a:se0/0/0\n")
    assert main(["run", str(bad)]) == 2
    assert "line 2" in capsys.readouterr().err


def test_run_failing_expectation(tmp_path, capsys):
    shutil.copytree(SCENARIOS / "fixtures", tmp_path / "fixtures")
    (tmp_path / "fixtures" / "router0_route.txt").write_text("nothing like it")
    sc = tmp_path / "one.esim"
    sc.write_text(LAB.read_text().replace("file=configs/", f"file={SCENARIOS}/configs/"))
    assert main(["run", str(sc)]) == 1
    assert "FAIL" in capsys.readouterr().out


def test_trace_and_dump(tmp_path, capsys):
    trace = tmp_path / "trace.txt"
    assert main(["run", str(LAB), "--trace", str(trace), "--dump-dir", str(tmp_path / "d")]) == 0
    assert trace.read_text().startswith("[t=")
    assert (tmp_path / "d" / "router0_route.txt").exists()


def test_render(capsys):
    assert main(["render", str(LAB), "--node", "router1", "--cmd", "sh ipv6 ro"]) == 0
    assert "[90/2172416]" in capsys.readouterr().out
    assert main(["render", str(LAB), "--node", "pc0", "--cmd", "sh ipv6 ro"]) == 2
    assert main(["render", str(LAB), "--node", "router1", "--cmd", "sh bogus"]) == 2


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "eigrpsim", "console", str(LAB), "--node", "router1"],
        input="sh ipv6 eigrp nei\nexit\n", capture_output=True, text=True, timeout=60,
    )
    assert proc.returncode == 0
    assert "Router1#" in proc.stdout and "FE80::1" in proc.stdout
