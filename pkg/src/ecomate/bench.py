"""Comparative benchmark grid: run every (model x prompt x temperature x command)
cell, persist the records as CSV, and derive summary tables, pair metrics,
and heatmap matrices.

Cell failures never abort a run; transport errors become records with
``json_validity=False`` so the dataset always has full grid cardinality.
Results are gathered and sorted before writing, which makes output
byte-identical across reruns and independent of worker scheduling.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import analysis, extractor, gateway, prompts, validator
from .analysis import GREEN_LABEL, NO_GREEN_LABEL, RunRecord
from .gateway import format_temperature
from .home import (
    CommandCategory,
    HomeTemplate,
    UserCommand,
    ingest_energy_annotations,
    load_command_dataset,
    load_home_template,
)
from .prompts import PromptVariant
from .secret import Secret

RECORD_COLUMNS = ("user_command", "type", "category", "llm", "prompt", "temperature",
                  "output", "json", "latency", "json_validity", "ha_response", "failure_class")

SUMMARY_COLUMNS = ("llm", "prompt", "temperature", "total", "valid_count", "fp_count",
                   "fn_count", "acc", "fp", "fn", "rel", "latency_min", "latency_max",
                   "latency_mean", "validity_pct")

PAIR_COLUMNS = ("user_command", "llm", "temperature", "boolean_difference",
                "latency_difference_ms", "similarity")

PROMPT_LABELS = {PromptVariant.GREEN: GREEN_LABEL, PromptVariant.NO_GREEN: NO_GREEN_LABEL}
PROMPT_BY_NAME = {"green": PromptVariant.GREEN, "no_green": PromptVariant.NO_GREEN}


class BenchError(RuntimeError):
    pass


class SchemaError(BenchError):
    """A CSV or config input does not match the documented layout."""


def data_path(*parts: str) -> Path:
    """Path to a file shipped inside the package data directory."""
    return Path(str(resources.files("ecomate").joinpath("data", *parts)))


def _resolve_path(value: str, base: Path) -> Path:
    if value.startswith("builtin:"):
        return data_path(*value.split(":", 1)[1].split("/"))
    path = Path(value)
    return path if path.is_absolute() else base / path


@dataclass
class LlmSpec:
    name: str
    model_id: str = ""
    provider: str = "replay"  # replay | http | mock
    replay_dir: str = "builtin:replay"
    endpoint_url: str = ""
    auth_token: Secret = field(default_factory=lambda: Secret(""))
    timeout_ms: int = 60_000
    max_retries: int = 3
    permits: int = gateway.DEFAULT_PERMITS
    mock_text: str = ""

    def __post_init__(self) -> None:
        self.model_id = self.model_id or self.name


@dataclass
class GridConfig:
    llms: list[LlmSpec]
    prompts: list[PromptVariant]
    temperatures: list[float]
    template_path: Path
    commands_path: Path
    energy_paths: list[Path]
    output_dir: Path
    parallelism: int = 4

    def __post_init__(self) -> None:
        if not (self.llms and self.prompts and self.temperatures):
            raise BenchError("llms, prompts and temperatures must all be non-empty")
        if self.parallelism < 1:
            raise BenchError("parallelism must be >= 1")

    @property
    def cell_count_per_command(self) -> int:
        return len(self.llms) * len(self.prompts) * len(self.temperatures)


def load_grid_config(path: str | Path) -> GridConfig:
    path = Path(path)
    with open(path, "rb") as handle:
        raw = tomllib.load(handle)
    base = path.parent
    grid = raw.get("grid", {})
    paths = raw.get("paths", {})
    llms = []
    for entry in raw.get("llm", []):
        token = Secret(os.environ.get(entry.get("auth_token_env", ""), ""))
        llms.append(
            LlmSpec(
                name=entry["name"],
                model_id=entry.get("model_id", entry["name"]),
                provider=entry.get("provider", "replay"),
                replay_dir=entry.get("replay_dir", "builtin:replay"),
                endpoint_url=entry.get("endpoint_url", ""),
                auth_token=token,
                timeout_ms=int(entry.get("timeout_ms", 60_000)),
                max_retries=int(entry.get("max_retries", 3)),
                permits=int(entry.get("permits", gateway.DEFAULT_PERMITS)),
                mock_text=entry.get("mock_text", ""),
            )
        )
    return GridConfig(
        llms=llms,
        prompts=[PROMPT_BY_NAME[name] for name in grid.get("prompts", ["green", "no_green"])],
        temperatures=[float(t) for t in grid.get("temperatures", [0.0, 0.7])],
        template_path=_resolve_path(paths.get("template", "builtin:h107.json"), base),
        commands_path=_resolve_path(paths.get("commands", "builtin:commands.json"), base),
        energy_paths=[_resolve_path(p, base) for p in paths.get(
            "energy", ["builtin:energy/annotations_part1.csv",
                       "builtin:energy/annotations_part2.csv"])],
        output_dir=_resolve_path(grid.get("output_dir", "bench_out"), base),
        parallelism=int(grid.get("parallelism", 4)),
    )


def default_grid_config(output_dir: Path, replay_dir: str = "builtin:replay") -> GridConfig:
    """The shipped six-model demo grid backed by the packaged replay store."""
    names = ["GPT3.5", "GPT4", "LLAMA2-70b", "LLAMA2-7b", "MISTRAL", "codeLLAMA"]
    return GridConfig(
        llms=[LlmSpec(name=name, model_id=name, provider="replay", replay_dir=replay_dir)
              for name in names],
        prompts=[PromptVariant.GREEN, PromptVariant.NO_GREEN],
        temperatures=[0.0, 0.7],
        template_path=data_path("h107.json"),
        commands_path=data_path("commands.json"),
        energy_paths=[data_path("energy", "annotations_part1.csv"),
                      data_path("energy", "annotations_part2.csv")],
        output_dir=output_dir,
        parallelism=4,
    )


def build_provider(spec: LlmSpec, base: Path):
    if spec.provider == "replay":
        return gateway.load_replay_store(_resolve_path(spec.replay_dir, base))
    if spec.provider == "http":
        return gateway.OpenAiHttpProvider(gateway.ProviderConfig(
            name=spec.name, endpoint_url=spec.endpoint_url, auth_token=spec.auth_token,
            timeout_ms=spec.timeout_ms, max_retries=spec.max_retries, permits=spec.permits))
    if spec.provider == "mock":
        return gateway.MockProvider(text=spec.mock_text, name=spec.name, permits=spec.permits)
    raise BenchError(f"unknown provider kind {spec.provider!r}")


@dataclass(frozen=True)
class _Cell:
    command_index: int
    command: UserCommand
    llm_index: int
    llm: LlmSpec
    variant: PromptVariant
    temperature: float

    @property
    def sort_key(self) -> tuple:
        prompt_order = 0 if self.variant is PromptVariant.GREEN else 1
        return (self.command_index, self.llm_index, prompt_order, self.temperature)


def _run_cell(cell: _Cell, provider, template: HomeTemplate,
              categories: dict[str, CommandCategory], profile) -> RunRecord:
    bundle = prompts.build_prompt(cell.variant, template, profile, cell.command.text)
    request = gateway.LlmRequest(model_id=cell.llm.model_id, temperature=cell.temperature,
                                 messages=tuple(bundle.to_messages()))
    label = PROMPT_LABELS[cell.variant]
    try:
        response = gateway.complete(provider, request)
    except gateway.GatewayError as exc:
        record = RunRecord(
            user_command=cell.command.text, goal_type=cell.command.goal_type,
            category=cell.command.category, llm=cell.llm.name, prompt=label,
            temperature=cell.temperature, output="", json=None, latency_ms=0,
            json_validity=False, ha_response=f"Provider error: {exc}")
        failure = analysis.classify_failure(record, template, categories)
        return dataclasses.replace(record, failure_class=failure)

    extraction = extractor.extract(response.text)
    checked_text = extraction.json_text if extraction.found else response.text
    outcome = validator.validate_offline(checked_text, template, strict_entities=True)
    record = RunRecord(
        user_command=cell.command.text,
        goal_type=cell.command.goal_type,
        category=cell.command.category,
        llm=cell.llm.name,
        prompt=label,
        temperature=cell.temperature,
        output=response.text,
        json=extraction.json_text,
        latency_ms=response.latency_ms,
        json_validity=outcome.ok,
        ha_response=outcome.message,
        explanation_over_budget=prompts.is_over_explanation_budget(extraction.remainder_text),
    )
    if not outcome.ok:
        failure = analysis.classify_failure(record, template, categories)
        record = dataclasses.replace(record, failure_class=failure)
    return record


def run_grid(config: GridConfig, providers: dict[str, object] | None = None,
             base: Path | None = None) -> tuple[list[RunRecord], dict[str, Path]]:
    """Run every grid cell and write records/summaries/pairs/heatmap CSVs."""
    base = base or Path.cwd()
    template = load_home_template(config.template_path.read_text(encoding="utf-8"))
    commands, category_list = load_command_dataset(
        config.commands_path.read_text(encoding="utf-8"))
    categories = {c.name: c for c in category_list}
    profile = ingest_energy_annotations(config.energy_paths)

    missing = sorted(template.appliance_types - set(profile.entries))
    if missing:
        raise BenchError(f"appliance types without energy data: {missing}")

    if providers is None:
        providers = {spec.name: build_provider(spec, base) for spec in config.llms}

    cells = [
        _Cell(command_index=ci, command=command, llm_index=li, llm=spec,
              variant=variant, temperature=temperature)
        for ci, command in enumerate(commands)
        for li, spec in enumerate(config.llms)
        for variant in config.prompts
        for temperature in config.temperatures
    ]

    with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
        futures = {
            pool.submit(_run_cell, cell, providers[cell.llm.name],
                        template, categories, profile): cell
            for cell in cells
        }
        results = {futures[future].sort_key: future.result() for future in futures}

    records = [results[key] for key in sorted(results)]

    config.output_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "records": config.output_dir / "records.csv",
        "summaries": config.output_dir / "summaries.csv",
        "pairs": config.output_dir / "pairs.csv",
        "heatmap_validity": config.output_dir / "heatmap_validity.csv",
        "heatmap_validity_by_category": config.output_dir / "heatmap_validity_by_category.csv",
        "heatmap_similarity_by_category": config.output_dir / "heatmap_similarity_by_category.csv",
    }
    write_records_csv(records, paths["records"])
    summaries = analysis.summarize(records, template, categories)
    write_summaries_csv(summaries, paths["summaries"])
    pair_rows: list[analysis.PairedRecord] = []
    if len(config.prompts) == 2:
        pair_rows = analysis.pair_green_nogreen(records)
        write_pairs_csv(pair_rows, paths["pairs"])
    _write_heatmaps(records, summaries, pair_rows, paths)
    return records, paths


def _format_float(value: float) -> str:
    return f"{value:.6f}"


def write_records_csv(records: list[RunRecord], path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(RECORD_COLUMNS)
        for r in records:
            writer.writerow([
                r.user_command, r.goal_type, r.category, r.llm, r.prompt,
                format_temperature(r.temperature), r.output, r.json or "",
                str(r.latency_ms), str(r.json_validity), r.ha_response,
                r.failure_class.value if r.failure_class else "",
            ])


def read_records_csv(path: Path) -> list[RunRecord]:
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None or tuple(reader.fieldnames) != RECORD_COLUMNS:
            raise SchemaError(f"records CSV {path} does not have the documented columns")
        records = []
        for row in reader:
            records.append(RunRecord(
                user_command=row["user_command"],
                goal_type=row["type"],
                category=row["category"],
                llm=row["llm"],
                prompt=row["prompt"],
                temperature=float(row["temperature"]),
                output=row["output"],
                json=row["json"] or None,
                latency_ms=int(row["latency"]),
                json_validity=row["json_validity"] == "True",
                ha_response=row["ha_response"],
                failure_class=analysis.FailureClass(row["failure_class"])
                if row["failure_class"] else None,
            ))
    if not records:
        raise SchemaError(f"records CSV {path} contains no rows")
    return records


def write_summaries_csv(summaries: list[analysis.MetricsSummary], path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(SUMMARY_COLUMNS)
        for s in summaries:
            shown = s.display()
            writer.writerow([
                s.llm, s.prompt, shown["temperature"], str(s.total), str(s.valid_count),
                str(s.fp_count), str(s.fn_count), shown["acc"], shown["fp"], shown["fn"],
                shown["rel"], shown["latency_min"], shown["latency_max"],
                shown["latency_mean"], shown["validity_pct"],
            ])


def write_pairs_csv(pairs: list[analysis.PairedRecord], path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(PAIR_COLUMNS)
        for p in pairs:
            writer.writerow([
                p.user_command, p.llm, format_temperature(p.temperature),
                str(p.boolean_difference), str(p.latency_difference_ms),
                _format_float(p.similarity),
            ])


def _write_matrix(path: Path, row_label: str, columns: list[str],
                  rows: dict[str, list[str]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow([row_label, *columns])
        for name in sorted(rows):
            writer.writerow([name, *rows[name]])


def _write_heatmaps(records: list[RunRecord], summaries: list[analysis.MetricsSummary],
                    pairs: list[analysis.PairedRecord], paths: dict[str, Path]) -> None:
    configs = sorted({(s.prompt, s.temperature) for s in summaries})
    columns = [f"{prompt} t={format_temperature(t)}" for prompt, t in configs]
    by_llm: dict[str, list[str]] = {}
    lookup = {(s.llm, s.prompt, s.temperature): s for s in summaries}
    for llm in sorted({s.llm for s in summaries}):
        by_llm[llm] = [
            str(analysis.round_half_up(cell.valid_count, cell.total, 2))
            if (cell := lookup.get((llm, prompt, t))) else ""
            for prompt, t in configs
        ]
    _write_matrix(paths["heatmap_validity"], "llm", columns, by_llm)

    categories = sorted({r.category for r in records})
    validity_rows: dict[str, list[str]] = {}
    for llm in sorted({r.llm for r in records}):
        cells = []
        for category in categories:
            group = [r for r in records if r.llm == llm and r.category == category]
            valid = sum(1 for r in group if r.json_validity)
            cells.append(str(analysis.round_half_up(valid, len(group), 2)) if group else "")
        validity_rows[llm] = cells
    _write_matrix(paths["heatmap_validity_by_category"], "llm", categories, validity_rows)

    if pairs:
        category_of = {r.user_command: r.category for r in records}
        similarity_rows: dict[str, list[str]] = {}
        for llm in sorted({p.llm for p in pairs}):
            cells = []
            for category in categories:
                group = [p.similarity for p in pairs
                         if p.llm == llm and category_of.get(p.user_command) == category]
                cells.append(_format_float(sum(group) / len(group)) if group else "")
            similarity_rows[llm] = cells
        _write_matrix(paths["heatmap_similarity_by_category"], "llm", categories,
                      similarity_rows)


def render_summary_table(summaries: list[analysis.MetricsSummary]) -> str:
    """Fixed-width table mirroring the summary CSV layout."""
    header = ("LLM", "Prompt", "t", "Acc", "FP", "FN", "Rel",
              "Min", "Max", "Mean", "Validity")
    rows = [header]
    for s in summaries:
        shown = s.display()
        rows.append((s.llm, s.prompt, shown["temperature"], shown["acc"], shown["fp"],
                     shown["fn"], shown["rel"], shown["latency_min"], shown["latency_max"],
                     shown["latency_mean"], shown["validity_pct"]))
    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
    lines = []
    for index, row in enumerate(rows):
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip())
        if index == 0:
            lines.append("  ".join("-" * widths[i] for i in range(len(header))))
    return "\n".join(lines) + "\n"


def render_heatmap_svg(matrix_csv: Path, out_path: Path) -> None:
    """Minimal SVG rendering of a matrix CSV; no plotting dependency."""
    with open(matrix_csv, newline="", encoding="utf-8") as handle:
        rows = list(csv.reader(handle))
    if len(rows) < 2:
        raise SchemaError(f"matrix CSV {matrix_csv} has no data rows")
    header, data = rows[0], rows[1:]
    cell, label_w, label_h = 72, 140, 40
    width = label_w + cell * (len(header) - 1)
    height = label_h + cell * len(data)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'font-family="sans-serif" font-size="11">'
    ]
    for j, name in enumerate(header[1:]):
        parts.append(f'<text x="{label_w + j * cell + cell / 2}" y="{label_h - 10}" '
                     f'text-anchor="middle">{name}</text>')
    for i, row in enumerate(data):
        y = label_h + i * cell
        parts.append(f'<text x="{label_w - 8}" y="{y + cell / 2}" text-anchor="end" '
                     f'dominant-baseline="middle">{row[0]}</text>')
        for j, value in enumerate(row[1:]):
            x = label_w + j * cell
            try:
                shade = max(0.0, min(1.0, float(value)))
            except ValueError:
                shade = 0.0
            red = int(255 - 155 * shade)
            blue = int(255 - 155 * shade)
            parts.append(f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" '
                         f'fill="rgb({red},255,{blue})" stroke="#888"/>')
            parts.append(f'<text x="{x + cell / 2}" y="{y + cell / 2}" text-anchor="middle" '
                         f'dominant-baseline="middle">{value}</text>')
    parts.append("</svg>")
    out_path.write_text("\n".join(parts), encoding="utf-8")


def report(records_path: Path, out_dir: Path, template_path: Path | None = None,
           commands_path: Path | None = None, svg: bool = False) -> dict[str, Path]:
    """Derive tables and heatmaps from a records CSV."""
    records = read_records_csv(records_path)
    template = load_home_template(
        (template_path or data_path("h107.json")).read_text(encoding="utf-8"))
    commands_doc = (commands_path or data_path("commands.json")).read_text(encoding="utf-8")
    _, category_list = load_command_dataset(commands_doc)
    categories = {c.name: c for c in category_list}

    out_dir.mkdir(parents=True, exist_ok=True)
    summaries = analysis.summarize(records, template, categories)
    paths = {
        "table": out_dir / "summary_table.txt",
        "summaries": out_dir / "summaries.csv",
        "heatmap_validity": out_dir / "heatmap_validity.csv",
        "heatmap_validity_by_category": out_dir / "heatmap_validity_by_category.csv",
        "heatmap_similarity_by_category": out_dir / "heatmap_similarity_by_category.csv",
    }
    paths["table"].write_text(render_summary_table(summaries), encoding="utf-8")
    write_summaries_csv(summaries, paths["summaries"])
    prompts_present = {r.prompt for r in records}
    pair_rows: list[analysis.PairedRecord] = []
    if prompts_present == {GREEN_LABEL, NO_GREEN_LABEL}:
        pair_rows = analysis.pair_green_nogreen(records)
    _write_heatmaps(records, summaries, pair_rows, paths)
    if svg:
        svg_path = out_dir / "heatmap_validity.svg"
        render_heatmap_svg(paths["heatmap_validity"], svg_path)
        paths["heatmap_svg"] = svg_path
    return paths


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="bench",
                                     description="Routine-generation benchmark grid")
    sub = parser.add_subparsers(dest="command", required=True)

    run_parser = sub.add_parser("run", help="run the benchmark grid")
    run_parser.add_argument("--config", help="grid TOML config; omit for the builtin demo grid")
    run_parser.add_argument("--out", default="bench_out",
                            help="output directory when no config is given")

    report_parser = sub.add_parser("report", help="render tables and heatmaps from records")
    report_parser.add_argument("--records", required=True)
    report_parser.add_argument("--out", required=True)
    report_parser.add_argument("--template", default=None)
    report_parser.add_argument("--commands", default=None)
    report_parser.add_argument("--svg", action="store_true")

    args = parser.parse_args(argv)
    if args.command == "run":
        if args.config:
            config = load_grid_config(args.config)
            base = Path(args.config).parent
        else:
            config = default_grid_config(Path(args.out))
            base = Path.cwd()
        records, paths = run_grid(config, base=base)
        expected = config.cell_count_per_command * _count_commands(config)
        print(f"{len(records)} records -> {paths['records']}")
        return 0 if len(records) == expected else 1
    if args.command == "report":
        paths = report(
            Path(args.records), Path(args.out),
            template_path=Path(args.template) if args.template else None,
            commands_path=Path(args.commands) if args.commands else None,
            svg=args.svg,
        )
        print(f"report written to {paths['table'].parent}")
        return 0
    return 2


def _count_commands(config: GridConfig) -> int:
    commands, _ = load_command_dataset(config.commands_path.read_text(encoding="utf-8"))
    return len(commands)


if __name__ == "__main__":
    sys.exit(main())
