from app.config import settings
from app.core.bench_service import read_records
from app.core.topology import load_scenario, save_scenario
from app.models.network import ValidationReport, Violation
from scripts import inspect_scenario, run_benchmark


def _chain_file(tmp_path, chain):
    net, Q = chain
    return str(save_scenario(tmp_path / "chain.json", net, Q, settings.channel_params))


def test_benchmark_cli_writes_records(tmp_path, chain):
    out = tmp_path / "records.csv"
    code = run_benchmark.main([
        "--scenario", _chain_file(tmp_path, chain),
        "--kinds", "node-based,level-based",
        "--extensions", "none,schedex",
        "--rhos", "0.9,0.999",
        "--trials", "0",
        "--out", str(out),
    ])
    assert code == 0
    records = read_records(out)
    assert len(records) == 2 * (1 + 2)
    assert {r.kind.value for r in records} == {"node-based", "level-based"}


def test_benchmark_cli_reports_failures(tmp_path, chain, monkeypatch):
    monkeypatch.setattr(settings, "INCREMENTER_MAX_SLOTS", 2)
    code = run_benchmark.main([
        "--scenario", _chain_file(tmp_path, chain),
        "--kinds", "dedicated",
        "--extensions", "incrementer",
        "--rhos", "0.9",
        "--trials", "0",
        "--out", str(tmp_path / "failed.json"),
        "--format", "json",
        "--no-summary",
    ])
    assert code == 1
    (record,) = read_records(tmp_path / "failed.json")
    assert record.status == "failed"


def test_benchmark_cli_rejects_invalid_bounds(tmp_path):
    assert run_benchmark.main(["--rhos", "1.0", "--out", str(tmp_path / "never.csv")]) == 2
    assert not (tmp_path / "never.csv").exists()


def test_inspect_generates_and_reads_a_scenario(tmp_path):
    path = tmp_path / "generated.json"
    assert inspect_scenario.main([str(path), "--generate", "50", "--seed", "4", "--rho", "0.999", "-l", "5"]) == 0
    net, _, _, tp = load_scenario(path)
    assert len(net.transceiver_ids) == 50
    assert tp.seed == 4


def test_inspect_reports_unreadable_files(tmp_path):
    assert inspect_scenario.main([str(tmp_path / "missing.json")]) == 1


def test_benchmark_cli_fails_invalid_frames(tmp_path, chain, monkeypatch):
    broken = ValidationReport(violations=(Violation(constraint="c5", message="conflict", slot=0, nodes=(1, 2)),))
    monkeypatch.setattr("app.core.scheduling_service.validate_schedule", lambda *args: broken)
    code = run_benchmark.main([
        "--scenario", _chain_file(tmp_path, chain),
        "--kinds", "node-based",
        "--extensions", "none",
        "--trials", "0",
        "--out", str(tmp_path / "invalid.json"),
        "--format", "json",
        "--no-summary",
    ])
    assert code == 1
    (record,) = read_records(tmp_path / "invalid.json")
    assert record.status == "failed"
    assert record.reason.startswith("InvalidFrameError")
    assert "c5" in record.reason


def test_inspect_checks_the_frame_by_simulation(tmp_path, chain, capsys):
    assert inspect_scenario.main([_chain_file(tmp_path, chain), "--trials", "2000"]) == 0
    out = capsys.readouterr().out
    assert "buffer replay" in out
    assert "per packet hop" in out
