import json
import subprocess
import sys

import pytest

from bundlerev.cli import main
from bundlerev.distcore import DiscreteDist, MarketInstance, dump_instance, ddt_instance


@pytest.fixture
def ddt_file(tmp_path):
    path = tmp_path / "ddt.json"
    dump_instance(ddt_instance(), path)
    return str(path)


def _run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_analyze_ddt(ddt_file, capsys):
    code, out, _ = _run(["analyze", "--instance", ddt_file, "--seed", "9"], capsys)
    data = json.loads(out)
    assert code == 0
    assert data["srev"] == 2.5 and data["brev"] == 2.25
    assert data["rev"] == pytest.approx(2.625)
    assert data["ratio_rev_max"] == pytest.approx(1.05)
    assert data["meta"]["seed"] == 9 and data["meta"]["command"] == "analyze"
    assert len(data["meta"]["config_hash"]) == 12


def test_analyze_single_item(tmp_path, capsys):
    path = tmp_path / "one.json"
    dump_instance(MarketInstance.independent([DiscreteDist.from_atoms([1, 3], [0.5, 0.5])]), path)
    code, out, _ = _run(["analyze", "--instance", str(path)], capsys)
    data = json.loads(out)
    assert code == 0
    assert data["srev"] == data["brev"] == data["prev"] == pytest.approx(data["rev"]) == pytest.approx(1.5)


def test_malformed_probs(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(
        json.dumps({"label": "bad", "items": 1, "buyers": 1, "grid": [[{"support": [1, 2], "probs": [0.5, 0.4]}]]})
    )
    code, _, err = _run(["analyze", "--instance", str(path)], capsys)
    assert code == 1
    assert "probs" in err


def test_usage_errors(capsys, ddt_file):
    assert _run(["analyze"], capsys)[0] == 1
    with pytest.raises(SystemExit) as exc:
        main(["nonsense"])
    assert exc.value.code == 1
    assert _run(["gaps", "--kind", "cor", "--ns", "a,b"], capsys)[0] == 1
    assert _run(["analyze", "--instance", "/no/such/file.json"], capsys)[0] == 1


def test_decompose_ddt(ddt_file, capsys):
    code, out, _ = _run(["decompose", "--instance", ddt_file, "--mode", "adaptive", "--c", "1"], capsys)
    data = json.loads(out)
    assert code == 0
    assert data["split"]["thresholds"] == [2.5, 2.5]
    assert all(c["passed"] for c in data["checks"])


def test_approx_ddt(ddt_file, capsys):
    code, out, _ = _run(["approx", "--instance", ddt_file, "--epsilon", "0.1", "--seed", "42"], capsys)
    data = json.loads(out)
    assert code == 0
    assert data["decision"]["choice"] == "separate"
    assert data["decision"]["seed"] == 42


@pytest.mark.parametrize("check", ["split", "bundle", "shatter", "brendan", "reserve"])
def test_pricing_checks(ddt_file, capsys, check):
    code, out, _ = _run(["pricing", "--instance", ddt_file, "--check", check], capsys)
    data = json.loads(out)
    assert code == 0
    assert data["check"] == check and data["report"]["passed"]


def test_reduce(ddt_file, capsys):
    code, out, _ = _run(["reduce", "--instance", ddt_file], capsys)
    assert code == 0
    assert len(json.loads(out)["checks"]) == 2


def test_failed_check_exit_code(ddt_file, capsys, monkeypatch):
    # the checked inequalities are theorems, so force a failing report to exercise exit status 2
    import bundlerev.cli as cli
    from bundlerev.reports import Report

    monkeypatch.setattr(cli, "check_reduction_ratios", lambda inst: Report("reduction-ratios", False, {}))
    code, out, _ = _run(["reduce", "--instance", ddt_file], capsys)
    assert code == 2
    assert json.loads(out)["checks"][0]["passed"] is False


def test_gaps_csv_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        assert main(["gaps", "--kind", "cor", "--ns", "4,16", "--seed", "7", "--out", str(path)]) == 0
    la, lb = a.read_text().splitlines(), b.read_text().splitlines()
    assert la[0].startswith("# generated ")
    assert la[1:] == lb[1:]
    assert "seed=7" in la[1]
    header = la[2].split(",")
    rows = [dict(zip(header, line.split(","))) for line in la[3:]]
    assert len(rows) == 2
    assert float(rows[0]["ratio"]) < float(rows[1]["ratio"])
    assert all(r["seed"] == "7" for r in rows)
    assert rows[1]["brev_kind"] == "upper-bound" and rows[1]["srev_kind"] == "exact"


def test_gaps_many_iid_json(capsys):
    code, out, _ = _run(["gaps", "--kind", "many_iid", "--ns", "16", "--trials", "500", "--format", "json"], capsys)
    data = json.loads(out)
    assert code == 0 and data["rows"][0]["seq_rev_kind"] == "monte-carlo"


def test_console_script_version():
    res = subprocess.run([sys.executable, "-m", "bundlerev.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("bundlerev ")
