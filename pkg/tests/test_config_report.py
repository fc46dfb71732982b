"""Config files, metrics/trace emission, and the command line surface."""

import json
from dataclasses import replace

import pytest

from fedhlm.cli import main
from fedhlm.config import (
    InvalidValue,
    MissingFile,
    config_to_text,
    parse_config,
    parse_config_text,
)
from fedhlm.engine import (
    RoundReport,
    SimulationConfig,
    SimulationReport,
    Stage,
    default_config,
    run_simulation,
)
from fedhlm.federation import ClusterTopology
from fedhlm.reporting import (
    CSV_COLUMNS,
    compute_trr,
    emit_metrics_csv,
    emit_trace,
    metrics_rows,
    round_trr,
    summarize,
)


def tiny_config() -> SimulationConfig:
    return SimulationConfig(
        topology=ClusterTopology(num_clients=4, num_clusters=2),
        rounds=3,
        tokens_per_client=6,
        seed=11,
    )


TINY_TEXT = "\n".join(
    [
        "# four clients, two clusters, short run",
        "topology.num_clients = 4",
        "topology.num_clusters = 2",
        "run.rounds = 3",
        "run.tokens_per_client = 6",
        "run.seed = 11",
    ]
)


# --- configuration parsing ---


def test_empty_config_yields_defaults():
    cfg = parse_config_text("")
    assert cfg == default_config()
    assert (cfg.topology.num_clients, cfg.topology.num_clusters, cfg.rounds) == (20, 4, 30)


def test_comments_and_blanks_ignored():
    cfg = parse_config_text("\n# note\n\n  run.seed = 9  \n")
    assert cfg.seed == 9


def test_unknown_key_rejected():
    with pytest.raises(InvalidValue) as err:
        parse_config_text("run.banana = 3")
    assert err.value.key == "run.banana"


def test_malformed_line_rejected():
    with pytest.raises(InvalidValue):
        parse_config_text("this is not a key value pair")


def test_type_errors_name_the_key():
    with pytest.raises(InvalidValue) as err:
        parse_config_text("run.rounds = many")
    assert err.value.key == "run.rounds"
    with pytest.raises(InvalidValue) as err:
        parse_config_text("learner.gamma = fast")
    assert err.value.key == "learner.gamma"


def test_constraint_errors_name_the_key():
    cases = {
        "partition.dirichlet_alpha = -1": "partition.dirichlet_alpha",
        "learner.gamma = 0": "learner.gamma",
        "profile.agreement = 2.0": "profile.agreement",
        "run.p_offload = 1.5": "run.p_offload",
        "peer.similarity_threshold = 3": "peer.similarity_threshold",
        "cost.c_llm = 0": "cost.c_llm",
        "topology.num_clusters = 0": "topology.num_clusters",
        "run.mode = turbo": "run.mode",
    }
    for text, key in cases.items():
        with pytest.raises(InvalidValue) as err:
            parse_config_text(text)
        assert err.value.key == key, text


def test_missing_file_raises():
    with pytest.raises(MissingFile):
        parse_config("/nonexistent/fedhlm.conf")


def test_parse_config_reads_file(tmp_path):
    path = tmp_path / "run.conf"
    path.write_text(TINY_TEXT, encoding="utf-8")
    assert parse_config(path) == tiny_config()


def test_roundtrip_default_and_customized():
    for cfg in (
        default_config(),
        tiny_config(),
        replace(default_config(), uncertainty_kind="entropy", mode="uhlm", workers=2),
    ):
        assert parse_config_text(config_to_text(cfg)) == cfg


def test_serialization_echoes_every_effective_setting():
    text = config_to_text(default_config())
    for key in (
        "topology.num_clients",
        "topology.assignment",
        "partition.dirichlet_alpha",
        "profile.vocab_size",
        "sampler.temperature",
        "learner.lambda",
        "peer.cache_capacity",
        "cost.c_llm",
        "run.rounds",
        "run.seed",
        "run.zipf_exponent",
    ):
        assert f"{key} = " in text


def test_custom_assignment_roundtrip():
    text = "\n".join(
        [
            "topology.num_clients = 4",
            "topology.num_clusters = 2",
            "topology.assignment = 1,0,1,0",
        ]
    )
    cfg = parse_config_text(text)
    assert cfg.topology.assignment == {0: 1, 1: 0, 2: 1, 3: 0}
    assert parse_config_text(config_to_text(cfg)) == cfg


def test_assignment_length_must_match():
    with pytest.raises(InvalidValue) as err:
        parse_config_text("topology.num_clients = 3\ntopology.assignment = 0,0")
    assert err.value.key == "topology.assignment"


# --- transmission reduction rate ---


def _counts_report(local: int, p2p: int, edge: int, llm: int) -> SimulationReport:
    counts = {Stage.LOCAL: local, Stage.P2P: p2p, Stage.EDGE: edge, Stage.LLM: llm}
    rnd = RoundReport(
        round_index=0,
        per_client={},
        outcomes={},
        outcome_counts=counts,
        thresholds_local={},
        thresholds_after={},
        cluster_thresholds=(0.1,),
        global_threshold=0.1,
        total_cost=0.0,
        avg_uncertainty=0.0,
        rejection_rate=0.0,
        llm_after_p2p=0,
    )
    return SimulationReport(default_config(), [rnd], {}, [])


def test_trr_endpoints():
    assert compute_trr(_counts_report(100, 0, 0, 0)) == 1.0
    assert compute_trr(_counts_report(0, 0, 0, 100)) == 0.0


def test_trr_headline_ratio():
    report = _counts_report(16_584, 400, 308, 708)
    value = compute_trr(report)
    assert value == pytest.approx(1.0 - 708 / 18_000, abs=1e-12)
    assert round(value, 4) == 0.9607


def test_round_trr_matches_whole_run_on_single_round():
    report = _counts_report(50, 10, 5, 35)
    assert round_trr(report.rounds[0]) == compute_trr(report)


# --- metrics CSV and trace emission ---


@pytest.fixture(scope="module")
def tiny_report():
    return run_simulation(tiny_config())


def test_metrics_csv_layout(tmp_path, tiny_report):
    path = tmp_path / "metrics.csv"
    emit_metrics_csv(tiny_report, path)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 1 + 3
    assert lines[0] == ",".join(CSV_COLUMNS)
    for line in lines[1:]:
        assert len(line.split(",")) == len(CSV_COLUMNS)


def test_metrics_csv_byte_stable(tmp_path):
    cfg = tiny_config()
    first, second = run_simulation(cfg), run_simulation(cfg)
    emit_metrics_csv(first, tmp_path / "one.csv")
    emit_metrics_csv(second, tmp_path / "two.csv")
    assert (tmp_path / "one.csv").read_bytes() == (tmp_path / "two.csv").read_bytes()


def test_trace_layout_and_order(tmp_path, tiny_report):
    path = tmp_path / "trace.jsonl"
    emit_trace(tiny_report, path)
    records = [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines()]
    assert len(records) == 3 * 4 * 6  # rounds x clients x tokens
    keys = [(r["round"], r["client"], r["timestep"]) for r in records]
    assert keys == sorted(keys)
    for record in records:
        assert record["stage"] in {"local", "p2p", "edge", "llm"}
        assert (record["beta"] is None) == (record["stage"] != "llm")
        assert isinstance(record["correct"], bool)


def test_csv_counts_agree_with_trace(tmp_path, tiny_report):
    emit_metrics_csv(tiny_report, tmp_path / "metrics.csv")
    emit_trace(tiny_report, tmp_path / "trace.jsonl")
    records = [json.loads(line) for line in (tmp_path / "trace.jsonl").read_text().splitlines()]
    csv_lines = (tmp_path / "metrics.csv").read_text().splitlines()[1:]
    for line in csv_lines:
        cells = line.split(",")
        rnd = int(cells[0])
        from_trace = {"local": 0, "p2p": 0, "edge": 0, "llm": 0}
        for record in records:
            if record["round"] == rnd:
                from_trace[record["stage"]] += 1
        assert [int(cells[2]), int(cells[3]), int(cells[4]), int(cells[5])] == [
            from_trace["local"],
            from_trace["p2p"],
            from_trace["edge"],
            from_trace["llm"],
        ]


def test_trr_consistent_with_trace(tmp_path, tiny_report):
    emit_trace(tiny_report, tmp_path / "trace.jsonl")
    records = [json.loads(line) for line in (tmp_path / "trace.jsonl").read_text().splitlines()]
    llm = sum(1 for r in records if r["stage"] == "llm")
    assert compute_trr(tiny_report) == pytest.approx(1.0 - llm / len(records), abs=1e-12)


def test_metrics_rows_counts_partition_total(tiny_report):
    for row in metrics_rows(tiny_report):
        assert row.local_count + row.p2p_count + row.edge_count + row.llm_count == 4 * 6
        assert 0.0 <= row.trr <= 1.0
        assert 0.0 <= row.transmission_rate <= 1.0


def test_summarize_mentions_totals(tiny_report):
    text = summarize(tiny_report)
    assert "tokens=72" in text
    assert "trr=" in text


# --- command line ---


def _write_tiny(tmp_path):
    path = tmp_path / "tiny.conf"
    path.write_text(TINY_TEXT + "\n", encoding="utf-8")
    return path


def test_cli_run_writes_artifacts(tmp_path, capsys):
    conf = _write_tiny(tmp_path)
    out = tmp_path / "out"
    code = main(["run", "--config", str(conf), "--out-dir", str(out)])
    assert code == 0
    assert (out / "metrics.csv").is_file()
    assert (out / "trace.jsonl").is_file()
    resolved = parse_config(out / "config.resolved.txt")
    assert resolved == tiny_config()
    assert "tokens=72" in capsys.readouterr().out


def test_cli_seed_override_changes_resolved_config(tmp_path):
    conf = _write_tiny(tmp_path)
    out = tmp_path / "out"
    assert main(["run", "--config", str(conf), "--out-dir", str(out), "--seed", "99"]) == 0
    assert parse_config(out / "config.resolved.txt").seed == 99


def test_cli_baseline_requires_mode(tmp_path):
    conf = _write_tiny(tmp_path)
    assert main(["baseline", "--config", str(conf)]) == 2
    assert main(["baseline", "--config", str(conf), "--mode", "uhlm"]) == 0
    assert main(["baseline", "--config", str(conf), "--mode", "rand"]) == 0


def test_cli_bad_config_exits_2(tmp_path):
    conf = tmp_path / "bad.conf"
    conf.write_text("partition.dirichlet_alpha = -1\n", encoding="utf-8")
    assert main(["run", "--config", str(conf)]) == 2
    assert main(["run", "--config", str(tmp_path / "missing.conf")]) == 2


def test_cli_sweep_writes_grid(tmp_path):
    conf = _write_tiny(tmp_path)
    out = tmp_path / "sweep"
    code = main(["sweep", "--config", str(conf), "--out-dir", str(out), "--alphas", "5.0,0.5"])
    assert code == 0
    summary = (out / "sweep_summary.csv").read_text(encoding="utf-8").splitlines()
    assert summary[0].startswith("alpha,")
    assert len(summary) == 3
    assert (out / "alpha_5.0" / "metrics.csv").is_file()
    assert (out / "alpha_0.5" / "metrics.csv").is_file()


def test_cli_sweep_rejects_two_grids(tmp_path):
    conf = _write_tiny(tmp_path)
    assert main(["sweep", "--config", str(conf), "--alphas", "1.0", "--cost-ratios", "0.5"]) == 2


def test_cli_cost_tables(tmp_path):
    out = tmp_path / "cost"
    assert main(["cost", "--out-dir", str(out)]) == 0
    policy = (out / "cost_policy.csv").read_text(encoding="utf-8").splitlines()
    assert policy[0] == "p_hit,expected_escalation_cost,attempt_p2p,policy_cost"
    assert len(policy) == 22
    curve = (out / "cache_curve.csv").read_text(encoding="utf-8").splitlines()
    assert len(curve) == 8
    # hit ratio column is monotone in cache size
    ratios = [float(line.split(",")[1]) for line in curve[1:]]
    assert all(a < b for a, b in zip(ratios, ratios[1:]))


def test_cli_cost_stdout_without_out_dir(capsys):
    assert main(["cost"]) == 0
    printed = capsys.readouterr().out
    assert "p_hit,expected_escalation_cost" in printed
    assert "cache_size,hit_ratio" in printed
