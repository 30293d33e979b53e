import hashlib
import json

import pytest

from sandcast.cli import main
from sandcast.synth import FILES


def sha(p):
    return hashlib.sha256(p.read_bytes()).hexdigest()


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    mp = pytest.MonkeyPatch()
    mp.setenv("SANDCAST_LOG", str(d / "runs.log"))
    assert main(["synth", "--seed", "3", "--out", str(d / "data"), "--inlines", "20", "--xlines", "20",
                 "--nt", "150"]) == 0
    yield d
    mp.undo()


@pytest.fixture(autouse=True)
def _log_env(workdir, monkeypatch):
    monkeypatch.setenv("SANDCAST_LOG", str(workdir / "runs.log"))


def train(workdir, name, *extra):
    return main(["train", "--data", str(workdir / "data"), "--blind", "W2", "--hidden", "3",
                 "--max-epoch", "30", "--seed", "7", "--out", str(workdir / name), *extra])


def test_synth_files(workdir):
    for name in FILES.values():
        assert (workdir / "data" / name).is_file()


def test_pipeline(workdir, capsys):
    d = workdir
    assert main(["ingest", "--data", str(d / "data")]) == 0
    assert (d / "data" / "wells_integrated.csv").is_file()
    assert train(d, "m.json") == 0
    assert main(["train-single", "--data", str(d / "data"), "--blind", "W2", "--hidden", "match",
                 "--match-model", str(d / "m.json"), "--max-epoch", "30", "--out", str(d / "s.json")]) == 0
    assert json.loads((d / "s.json").read_text())["zones"][0]["H"] == 9
    assert main(["compare", "--data", str(d / "data"), "--model", str(d / "m.json"),
                 "--single", str(d / "s.json"), "--out", str(d / "r.csv")]) == 0
    scopes = [ln.split(",")[0] for ln in (d / "r.csv").read_text().splitlines()[1:]]
    assert scopes == ["Z1", "Z2", "Z3", "average", "weighted_average", "single_ann"]
    assert main(["blind-test", "--data", str(d / "data"), "--model", str(d / "m.json"),
                 "--out", str(d / "r2.csv")]) == 0
    assert main(["volume-predict", "--model", str(d / "m.json"), "--data", str(d / "data"),
                 "--out", str(d / "pred.csv"), "--threads", "2"]) == 0
    assert main(["filter", "--input", str(d / "pred.csv"), "--out", str(d / "filt.csv")]) == 0
    assert main(["section", "--input", str(d / "filt.csv"), "--inline", "105", "--format", "pgm",
                 "--out", str(d / "sec.pgm")]) == 0
    assert (d / "sec.pgm").read_text().startswith("P2\n20 150\n255\n")
    log = [json.loads(ln) for ln in (d / "runs.log").read_text().splitlines()]
    last = log[-1]
    assert last["command"] == "section" and last["exit_code"] == 0
    assert str(d / "filt.csv") in last["inputs"]
    assert any(r["command"] == "train" and r["seed"] == 7 for r in log)


def test_reproducible(workdir):
    assert train(workdir, "a.json") == 0
    assert train(workdir, "b.json") == 0
    assert sha(workdir / "a.json") == sha(workdir / "b.json")


def test_unknown_flag(capsys):
    assert main(["train", "--bogus"]) == 1
    assert "usage" in capsys.readouterr().err


def test_no_command():
    assert main([]) == 1


@pytest.mark.parametrize("argv", [
    ["train", "--data", "{d}/data", "--blind", "W99", "--out", "{d}/x.json", "--max-epoch", "1"],
    ["volume-predict", "--model", "{d}/missing.json", "--data", "{d}/data", "--out", "{d}/v.csv"],
    ["section", "--input", "{d}/data/ground_truth.csv", "--inline", "1", "--out", "{d}/s.csv"],
    ["filter", "--input", "{d}/data/ground_truth.csv", "--window", "2", "--out", "{d}/f.csv"],
])
def test_data_errors(workdir, argv, capsys):
    assert main([a.format(d=workdir) for a in argv]) == 2
    err = capsys.readouterr().err.strip()
    assert err and len(err.splitlines()) == 1


def test_capacity_config_error(workdir):
    assert train(workdir, "big.json", "--hidden", "200") == 2


def test_numeric_failure_code(workdir, monkeypatch):
    from sandcast import mann
    from sandcast.errors import NumericFailure

    def boom(*a, **k):
        raise NumericFailure("non-finite loss", epoch=3)

    monkeypatch.setattr(mann, "train_mann", boom)
    assert train(workdir, "nf.json") == 3


def test_bad_threads(workdir):
    assert main(["filter", "--input", "x", "--out", "y", "--threads", "0"]) == 1
