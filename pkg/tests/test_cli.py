import json

import pytest

from spp_cge.cli import main
from spp_cge.core import read_instance

from support import FIXTURE_GTFS, FIVE


@pytest.fixture
def five_file(tmp_path):
    path = tmp_path / "five.txt"
    path.write_text("3 5\n0.5 2 1 2\n0.4 1 3\n1.0 3 1 2 3\n0.3 1 1\n0.6 2 2 3\n")
    return path


def test_gen_instance_gtfs(tmp_path):
    out, man = tmp_path / "i.txt", tmp_path / "m.json"
    rc = main(["gen-instance", "--gtfs", str(FIXTURE_GTFS), "--depots", "A",
               "--max-span-hours", "4", "-o", str(out), "--manifest", str(man)])
    assert rc == 0
    inst = read_instance(out)
    assert (inst.num_elements, inst.num_columns) == (4, 2)
    assert len(json.loads(man.read_text())["duties"]) == 2


def test_gen_instance_synthetic_is_repeatable(tmp_path):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    for path in (a, b):
        assert main(["gen-instance", "-m", "12", "-n", "40", "--seed", "5",
                     "--cost-mode", "random-decile", "-o", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_gen_instance_needs_sizes(capsys):
    assert main(["gen-instance"]) == 1


@pytest.mark.parametrize("method", ["conventional", "proposed"])
def test_solve(five_file, tmp_path, method, capsys):
    trace = tmp_path / "t.jsonl"
    assert main(["solve", str(five_file), "--method", method, "--trace", str(trace)]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["status"] == "Solved" and doc["objective"] == pytest.approx(0.9)
    assert len(trace.read_text().splitlines()) == doc["iterations"]


def test_oracle(five_file, capsys):
    assert main(["oracle", str(five_file)]) == 0
    assert json.loads(capsys.readouterr().out)["objective"] == pytest.approx(0.9)
    assert main(["oracle", str(five_file), "--brute-force"]) == 0
    assert json.loads(capsys.readouterr().out)["columns"] == [0, 1]


def test_bad_instance_file(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("2 1\n0.5 3 1\n")
    assert main(["oracle", str(bad)]) == 1
    assert "error" in capsys.readouterr().err


def test_experiment_exit_codes(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("trials = 1\nm_range = 8, 9\nn_range = 20, 30\noutput_csv = r.csv\n")
    assert main(["experiment", str(cfg)]) == 0
    assert (tmp_path / "r.csv").read_text().startswith("group,trials,unverified,")
    cfg.write_text("trials = 0\n")
    assert main(["experiment", str(cfg)]) == 1
    assert main(["experiment", str(tmp_path / "missing.cfg")]) == 1


def test_experiment_reports_trial_failures(tmp_path, monkeypatch):
    import spp_cge.bench.experiment as exp

    def broken(instance, limits=None):
        raise RuntimeError("boom")

    monkeypatch.setitem(exp.RUNNERS, "proposed", broken)
    cfg = tmp_path / "c.cfg"
    cfg.write_text("trials = 1\nm_range = 8, 9\nn_range = 20, 30\n"
                   "output_csv = r.csv\noutput_json = r.json\n")
    assert main(["experiment", str(cfg)]) == 2
    doc = json.loads((tmp_path / "r.json").read_text())
    assert doc["trials"][0]["methods"]["proposed"]["error"] == "RuntimeError: boom"
    assert (tmp_path / "r.csv").exists()
