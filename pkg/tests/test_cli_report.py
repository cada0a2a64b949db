from __future__ import annotations

import io
import json

import pytest

from ethracer import corpus
from ethracer.cli import EXIT_BUGS, EXIT_CLEAN, EXIT_ERROR, run_cli
from ethracer.events import Scenario
from ethracer.report import AnalysisOptions, ReplayMismatch, analyze, dumps, replay, to_json, verify_report


def cli(*argv) -> tuple[int, str]:
    out = io.StringIO()
    code = run_cli(list(argv), out)
    return code, out.getvalue()


@pytest.fixture(scope="module")
def iou_report(tmp_path_factory):
    path = tmp_path_factory.mktemp("reports") / "iou.json"
    code, text = cli("analyze", str(corpus.contract_path("iou")), "--scenario", str(corpus.scenario_path("iou")), "--report", str(path), "--jobs", "1")
    assert code == EXIT_BUGS
    return json.loads(path.read_text()), text


def test_iou_summary_and_report(iou_report):
    doc, text = iou_report
    assert "hb relations: (1, 2), (1, 5), (3, 4), (3, 6)" in text
    assert len(doc["sync"]["witnesses"]) == 1
    assert doc["hb"]["pairs"] == [[1, 2], [1, 5], [3, 4], [3, 6]]
    assert doc["sync"]["stats"]["traces_enumerated"] == 2560
    assert doc["events"][0]["label"] == "transfer(S, 1)@O"
    assert doc["pure"] == ["decimals", "name", "safeAdd", "safeDiv", "safeMul", "safeSub", "symbol", "version"]
    assert "elapsed_s" not in doc


def test_report_verifies(iou_report):
    doc, _ = iou_report
    assert verify_report(doc)


def test_tampered_hash_fails(iou_report):
    doc = json.loads(json.dumps(iou_report[0]))
    doc["sync"]["witnesses"][0]["output_a_sha256"] = "0" * 64
    assert not verify_report(doc)
    with pytest.raises(ReplayMismatch):
        replay(doc)


def test_tampered_source_fails(iou_report):
    doc = json.loads(json.dumps(iou_report[0]))
    doc["contract"]["source"] += "\n"
    assert not verify_report(doc)


def test_tampered_hb_fails(iou_report):
    doc = json.loads(json.dumps(iou_report[0]))
    doc["hb"]["pairs"].append([0, 1])
    assert not verify_report(doc)


def test_reports_are_byte_deterministic():
    source = corpus.contract_path("iou").read_text()
    sc = Scenario.load(corpus.scenario_path("iou"))
    a = dumps(to_json(analyze(source, sc, AnalysisOptions(seed=3))))
    b = dumps(to_json(analyze(source, sc, AnalysisOptions(seed=3))))
    assert a == b


def test_verify_command(tmp_path, iou_report):
    path = tmp_path / "r.json"
    path.write_text(json.dumps(iou_report[0]))
    assert cli("verify", str(path))[0] == EXIT_CLEAN
    doc = iou_report[0] | {"sync": dict(iou_report[0]["sync"], witnesses=[dict(iou_report[0]["sync"]["witnesses"][0], output_b_sha256="x")])}
    path.write_text(json.dumps(doc))
    code, text = cli("verify", str(path))
    assert code == EXIT_ERROR and "mismatch" in text


def test_casino_lin_mode(tmp_path):
    path = tmp_path / "casino.json"
    code, text = cli("analyze", "casino", "--mode", "lin", "--report", str(path))
    assert code == EXIT_BUGS
    doc = json.loads(path.read_text())
    assert "sync" not in doc
    assert len(doc["lin"]["violations"]) == 1
    assert doc["lin"]["violations"][0]["order"] == ["c0", "c1", "r0", "r1"]
    assert verify_report(doc)


def test_default_mode_follows_callback(tmp_path):
    path = tmp_path / "g.json"
    cli("analyze", "gamble", "--report", str(path))
    doc = json.loads(path.read_text())
    assert doc["mode"]["sync"] and doc["mode"]["lin"]
    assert verify_report(doc)


def test_empty_contract_is_clean():
    assert cli("analyze", "empty")[0] == EXIT_CLEAN
    assert cli("analyze", "constant")[0] == EXIT_CLEAN


def test_lin_mode_needs_callback():
    assert cli("analyze", "iou", "--mode", "lin")[0] == EXIT_ERROR


def test_parse_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.fsol"
    bad.write_text("contract C {\n  function f() { x = ; }\n}")
    (tmp_path / "bad.scenario.json").write_text('{"actors": ["a"]}')
    assert cli("analyze", str(bad))[0] == EXIT_ERROR
    assert "bad.fsol:2:" in capsys.readouterr().err


def test_missing_inputs_exit_code():
    assert cli("analyze", "no-such-contract")[0] == EXIT_ERROR
    assert cli("bogus")[0] == EXIT_ERROR


def test_dump_rwsets_and_timing():
    code, text = cli("analyze", "escrow", "--dump-rwsets", "--timing")
    assert code == EXIT_BUGS
    assert "setEscrowFee: reads=[] writes=['escrowFee']" in text
    assert "wall time:" in text


def test_env_overrides(monkeypatch, tmp_path):
    path = tmp_path / "iou.json"
    monkeypatch.setenv("ETHRACER_MAX_LEN", "3")
    monkeypatch.setenv("ETHRACER_JOBS", "1")
    code, _ = cli("analyze", "iou", "--report", str(path))
    doc = json.loads(path.read_text())
    assert code == EXIT_BUGS and doc["mode"]["max_len"] == 3
    code, _ = cli("analyze", "iou", "--max-len", "2", "--report", str(path))
    assert json.loads(path.read_text())["mode"]["max_len"] == 2


def test_truncation_is_reported(tmp_path):
    path = tmp_path / "iou.json"
    code, text = cli("analyze", "iou", "--max-traces", "50", "--report", str(path))
    assert "[TRUNCATED]" in text
    assert json.loads(path.read_text())["truncated"] is True


def test_corpus_listing():
    code, text = cli("corpus")
    assert code == EXIT_CLEAN
    assert text.split() == corpus.names()
    assert cli("corpus", "iou")[1].splitlines()[0].endswith("iou.fsol")


def test_compare_transfers_flag_changes_outputs(tmp_path):
    path = tmp_path / "b.json"
    cli("analyze", "bounty", "--compare-transfers", "--report", str(path))
    doc = json.loads(path.read_text())
    assert doc["mode"]["compare_transfers"] is True
    assert verify_report(doc)
