import csv
import io
import json

import pytest

from wbsn_aka.cli import ConfigError, ScenarioConfig, cmd_bench, main, parse_action
from wbsn_aka.simnet import Replay, Tamper
from wbsn_aka.wire import Hop


@pytest.fixture
def deploy_file(tmp_path):
    path = tmp_path / "deploy.json"
    assert main(["deploy", "3", "1", "--seed", "7", "--out", str(path)]) == 0
    return path


def write_scenario(tmp_path, deploy_file, **extra):
    scen = {"deployment": deploy_file.name, "seed": 3, **extra}
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(scen))
    return path


def test_deploy_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["deploy", "3", "1", "--seed", "7", "--out", str(a)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["storageBits"] == {"SN": 640, "IN": 16, "HN": 1616}
    assert main(["deploy", "3", "1", "--seed", "7", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_deploy_one_one(tmp_path):
    p = tmp_path / "d.json"
    assert main(["deploy", "1", "1", "--seed", "7", "--out", str(p)]) == 0
    d = json.loads(p.read_text())
    assert len(d["sensors"]) == 1 and len(d["intermediates"]) == 1


@pytest.mark.parametrize("args", [["0", "1"], ["1", "0"], ["-2", "1"]])
def test_deploy_invalid_counts(tmp_path, args):
    assert main(["deploy", *args, "--out", str(tmp_path / "x.json")]) == 1


def test_deploy_unwritable(tmp_path):
    assert main(["deploy", "1", "1", "--out", str(tmp_path / "missing" / "x.json")]) == 1


def test_run_honest(tmp_path, deploy_file, capsys):
    out = tmp_path / "out"
    assert main(["run", "--deployment", str(deploy_file), "--out", str(out)]) == 0
    assert capsys.readouterr().out.startswith("AgreedKeys ")
    report = json.loads((out / "report.json").read_text())
    assert report["SN"]["hashCount"] == 2 and report["SN"]["xorCount"] == 6
    assert report["HN"]["hashCount"] == 2 and report["HN"]["xorCount"] == 2 * 3 + 5
    assert report["SN"]["timeMs"] == 0.12 and report["SN"]["energyMJ"] == 0.014256
    assert report["bitsSent"] == {"hop1": 384, "hop2": 400, "hop3": 368, "hop4": 352}
    lines = (out / "transcript.txt").read_text().splitlines()
    assert [ln.split(", ")[0] for ln in lines] == ["SN->IN", "IN->HN", "HN->IN", "IN->SN"]


def test_run_outputs_are_byte_identical(tmp_path, deploy_file):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["run", "--deployment", str(deploy_file), "--seed", "4", "--out", str(d)]) == 0
    for name in ("report.json", "transcript.txt"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_run_late_replay_scenario(tmp_path, deploy_file, capsys):
    scen = write_scenario(
        tmp_path, deploy_file,
        script=[{"action": "replay", "index": 1, "at": 50}],
        outputs={"report": "r.json", "transcript": "t.txt"},
    )
    assert main(["run", str(scen)]) == 2
    assert "StaleTimestamp" in capsys.readouterr().out
    report = json.loads((tmp_path / "r.json").read_text())
    assert report["reason"] == "StaleTimestamp" and report["step"] == 3
    assert report["bitsSent"]["hop2"] == 800


def test_run_tamper_scenario(tmp_path, deploy_file, capsys):
    scen = write_scenario(tmp_path, deploy_file, script=[{"action": "tamper", "hop": "HN->IN", "bits": [200]}])
    assert main(["run", str(scen)]) == 2
    assert "AuthFailed" in capsys.readouterr().out


def test_run_flag_overrides(tmp_path, deploy_file, capsys):
    scen = write_scenario(tmp_path, deploy_file, script=[{"action": "delay", "hop": "IN->HN", "by": 6}])
    assert main(["run", str(scen)]) == 2
    assert main(["run", str(scen), "--delta-t", "20"]) == 0
    assert main(["run", str(scen), "--delta-t", "20", "--hop-delay", "10"]) == 2


@pytest.mark.parametrize(
    "argv",
    [
        ["run"],
        ["run", "nope.json"],
        ["run", "--deployment", "nope.json"],
        ["frobnicate"],
        ["run", "--seed", "x"],
    ],
)
def test_usage_errors_exit_1(tmp_path, argv, monkeypatch):
    monkeypatch.chdir(tmp_path)
    try:
        code = main(argv)
    except SystemExit as exc:  # argparse rejections
        code = exc.code
    assert code == 1


def test_bad_sensor_index(tmp_path, deploy_file):
    assert main(["run", "--deployment", str(deploy_file), "--sensor", "9"]) == 1


def test_bad_policy(tmp_path, deploy_file):
    assert main(["run", "--deployment", str(deploy_file), "--delta-t", "0"]) == 1


def test_bad_script(tmp_path, deploy_file):
    scen = write_scenario(tmp_path, deploy_file, script=[{"action": "teleport"}])
    assert main(["run", str(scen)]) == 1


def test_parse_actions():
    assert parse_action({"action": "tamper", "hop": "HN->IN", "bits": [1, 2]}) == Tamper(Hop.HN_IN, (1, 2))
    assert parse_action({"action": "replay", "index": 1, "at": 9}) == Replay(1, 9)
    with pytest.raises(ConfigError):
        parse_action({"action": "drop", "hop": "X->Y"})


def test_scenario_paths_relative_to_file(tmp_path, deploy_file):
    scen = write_scenario(tmp_path, deploy_file, outputs={"report": "r.json"})
    cfg = ScenarioConfig.from_file(scen)
    assert cfg.deployment == deploy_file
    assert cfg.report_path == tmp_path / "r.json"


def test_bench_rows():
    rows = cmd_bench([1, 2, 5, 10], trials=4, seed=0)
    assert [r["n"] for r in rows] == [1, 2, 5, 10]
    for r in rows:
        assert (r["sn_hash"], r["sn_xor"], r["hn_hash"]) == (2, 6, 2)
        assert r["hn_xor"] == 2 * r["n"] + 5
        assert (r["sn_ms"], r["sn_mj"]) == (0.12, 0.014256)
        assert [r[f"hop{i}_bits"] for i in range(1, 5)] == [384, 400, 368, 352]
        assert r["hn_storage_bits"] == 480 * r["n"] + 16 + 160


def test_bench_cli_csv(tmp_path, capsys):
    assert main(["bench", "--n", "1", "3", "--trials", "2"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert rows[0]["sn_ms"] == "0.12" and rows[0]["sn_mj"] == "0.014256"
    assert rows[1]["hn_xor"] == "11"
    out = tmp_path / "b.csv"
    assert main(["bench", "--n", "1", "--trials", "2", "--out", str(out)]) == 0
    assert out.read_text().startswith("n,sn_hash")
