from __future__ import annotations

import json

import pytest

from ecomate import gateway
from ecomate.bench import (
    RECORD_COLUMNS,
    BenchError,
    GridConfig,
    LlmSpec,
    SchemaError,
    data_path,
    default_grid_config,
    load_grid_config,
    main,
    read_records_csv,
    render_heatmap_svg,
    report,
    run_grid,
    write_records_csv,
)
from ecomate.prompts import PromptVariant

VALID_REPLY = (
    "Sure! Here is the routine:\n```\n"
    + json.dumps({"alias": "demo", "trigger": [{"platform": "time", "at": "08:00:00"}],
                  "action": [{"service": "light.turn_on", "entity_id": "light.kitchen"}]})
    + "\n```\nUsed a simple morning schedule."
)


def mini_config(tmp_path, prompts=None, temperatures=None) -> GridConfig:
    return GridConfig(
        llms=[LlmSpec(name="mockA", provider="mock", mock_text=VALID_REPLY),
              LlmSpec(name="mockB", provider="mock", mock_text="I cannot help with that.")],
        prompts=prompts or [PromptVariant.GREEN, PromptVariant.NO_GREEN],
        temperatures=temperatures or [0.0, 0.7],
        template_path=data_path("h107.json"),
        commands_path=data_path("commands.json"),
        energy_paths=[data_path("energy", "annotations_part1.csv"),
                      data_path("energy", "annotations_part2.csv")],
        output_dir=tmp_path / "out",
        parallelism=3,
    )


def test_mini_grid_cardinality_and_columns(tmp_path):
    config = mini_config(tmp_path)
    records, paths = run_grid(config)
    assert len(records) == 2 * 2 * 2 * 40
    header = paths["records"].read_text(encoding="utf-8").splitlines()[0]
    assert header == ",".join(RECORD_COLUMNS)


def test_records_ordered_by_command_llm_prompt_temperature(tmp_path):
    config = mini_config(tmp_path)
    records, _ = run_grid(config)
    first_eight = records[:8]
    assert all(r.user_command == "make it less chilly in here" for r in first_eight)
    assert [r.llm for r in first_eight] == ["mockA"] * 4 + ["mockB"] * 4
    assert [(r.prompt, r.temperature) for r in first_eight[:4]] == [
        ("Green", 0.0), ("Green", 0.7), ("No green", 0.0), ("No green", 0.7)]


def test_failure_class_present_iff_invalid(tmp_path):
    config = mini_config(tmp_path)
    records, _ = run_grid(config)
    for record in records:
        assert (record.failure_class is not None) == (not record.json_validity)


def test_provider_errors_become_records(tmp_path):
    replay_dir = tmp_path / "empty_replay"
    replay_dir.mkdir()
    config = mini_config(tmp_path)
    config.llms = [LlmSpec(name="gappy", provider="replay", replay_dir=str(replay_dir))]
    records, _ = run_grid(config, base=tmp_path)
    assert len(records) == 1 * 2 * 2 * 40
    assert all(not r.json_validity for r in records)
    assert all(r.ha_response.startswith("Provider error:") for r in records)


def test_records_csv_roundtrip(tmp_path):
    config = mini_config(tmp_path)
    records, paths = run_grid(config)
    loaded = read_records_csv(paths["records"])
    assert len(loaded) == len(records)
    assert loaded[0].user_command == records[0].user_command
    assert loaded[0].json_validity == records[0].json_validity
    assert loaded[0].latency_ms == records[0].latency_ms


def test_read_records_rejects_wrong_columns(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(SchemaError):
        read_records_csv(path)


def test_read_records_rejects_empty(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text(",".join(RECORD_COLUMNS) + "\n")
    with pytest.raises(SchemaError):
        read_records_csv(path)


def test_report_outputs_and_svg(tmp_path):
    config = mini_config(tmp_path)
    _, paths = run_grid(config)
    out = report(paths["records"], tmp_path / "report", svg=True)
    table = out["table"].read_text(encoding="utf-8")
    assert "mockA" in table and "Validity" in table
    assert out["heatmap_svg"].read_text(encoding="utf-8").startswith("<svg")
    matrix = out["heatmap_validity"].read_text(encoding="utf-8").splitlines()
    assert matrix[0].startswith("llm,")
    assert len(matrix) == 3  # header + two models


def test_single_record_heatmap(tmp_path):
    config = mini_config(tmp_path)
    records, _ = run_grid(config)
    single = tmp_path / "single.csv"
    write_records_csv(records[:1], single)
    out = report(single, tmp_path / "single_report")
    matrix = out["heatmap_validity"].read_text(encoding="utf-8").splitlines()
    assert len(matrix) == 2


def test_svg_requires_data(tmp_path):
    empty = tmp_path / "matrix.csv"
    empty.write_text("llm\n")
    with pytest.raises(SchemaError):
        render_heatmap_svg(empty, tmp_path / "x.svg")


def test_missing_energy_entry_fails_startup(tmp_path):
    config = mini_config(tmp_path)
    sparse = tmp_path / "sparse.csv"
    sparse.write_text("appliance_type,power_watts\nlight,9\n")
    config.energy_paths = [sparse]
    with pytest.raises(BenchError, match="without energy data"):
        run_grid(config)


def test_load_grid_config_from_toml(tmp_path, monkeypatch):
    monkeypatch.setenv("DEMO_TOKEN", "tok-123")
    config_path = tmp_path / "grid.toml"
    config_path.write_text(
        '[grid]\n'
        'prompts = ["green"]\n'
        'temperatures = [0.0]\n'
        'parallelism = 2\n'
        'output_dir = "out"\n'
        '[paths]\n'
        'template = "builtin:h107.json"\n'
        'commands = "builtin:commands.json"\n'
        'energy = ["builtin:energy/annotations_part1.csv"]\n'
        '[[llm]]\n'
        'name = "live"\n'
        'provider = "http"\n'
        'endpoint_url = "http://127.0.0.1:9/v1"\n'
        'auth_token_env = "DEMO_TOKEN"\n'
    )
    config = load_grid_config(config_path)
    assert config.prompts == [PromptVariant.GREEN]
    assert config.llms[0].auth_token.reveal() == "tok-123"
    assert config.output_dir == tmp_path / "out"


def test_builtin_demo_grid_is_960_cells(tmp_path):
    config = default_grid_config(tmp_path / "demo")
    records, _ = run_grid(config)
    assert len(records) == 960


def test_cli_run_and_report(tmp_path, capsys):
    out_dir = tmp_path / "cli_out"
    assert main(["run", "--out", str(out_dir)]) == 0
    assert (out_dir / "records.csv").exists()
    assert main(["report", "--records", str(out_dir / "records.csv"),
                 "--out", str(tmp_path / "cli_report"), "--svg"]) == 0
    assert (tmp_path / "cli_report" / "summary_table.txt").exists()


def test_no_secrets_in_outputs(tmp_path, monkeypatch):
    monkeypatch.setenv("LEAKY_TOKEN", "sk-should-never-appear")
    config = mini_config(tmp_path)
    config.llms[0].auth_token = gateway.ProviderConfig(
        name="x", auth_token=__import__("ecomate.secret", fromlist=["Secret"])
        .Secret("sk-should-never-appear")).auth_token
    _, paths = run_grid(config)
    for path in paths.values():
        assert "sk-should-never-appear" not in path.read_text(encoding="utf-8")
