"""Report assembly and rendering: canonical JSON, delimited files, markdown.

The run report is a single JSON document (sorted keys, stable float repr) so
identical experiments produce byte-identical outputs. CSV and markdown views
are derived from it; the markdown summary bolds the best method per row.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Optional, Sequence

from .backtest import ComparisonReport
from .metrics import MetricRecord

SUMMARY_DECIMALS = 3


def definition_result_dict(
    records: Sequence[MetricRecord], report: ComparisonReport, method_order: Sequence[str]
) -> dict:
    methods = {}
    for label in method_order:
        summary = report.summaries[label]
        methods[label] = {
            "overall_rmse": summary.overall_rmse,
            "overall_mae": summary.overall_mae,
            "rounds": list(summary.rounds),
            "round_rmse": list(summary.round_rmse),
            "round_mae": list(summary.round_mae),
        }
    rank_sum = {
        label: {
            "statistic": outcome.statistic,
            "p_value": outcome.p_value,
            "significant": outcome.significant,
        }
        for label, outcome in report.rank_sum.items()
    }
    quartiles = None
    if report.quartile_boundaries is not None:
        quartiles = {
            "boundaries": list(report.quartile_boundaries),
            "tasks": {g: list(ids) for g, ids in report.quartile_tasks.items()},
            "wld": {
                g: {m: list(t) for m, t in per_method.items()}
                for g, per_method in report.quartile_wld.items()
            },
        }
    return {
        "benchmark": report.benchmark,
        "methods": methods,
        "rank_sum": rank_sum,
        "quartiles": quartiles,
        "skipped_rounds": list(report.skipped_rounds),
        "n_records": len(records),
    }


def dump_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def load_json(path: Path) -> dict:
    return json.loads(path.read_text())


def write_records_csv(path: Path, rows: Sequence[tuple[str, MetricRecord]]) -> None:
    """One line per (definition, method, round, task) metric record."""
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["definition", "method", "round", "task_id", "n", "rmse", "mae"])
        for definition, record in rows:
            writer.writerow(
                [
                    definition,
                    record.method,
                    record.round_index,
                    record.task_id,
                    record.n,
                    repr(record.rmse),
                    repr(record.mae),
                ]
            )


def _method_order(report: dict) -> list[str]:
    return report["method_order"]


def write_summary_csv(path: Path, report: dict) -> None:
    """Wide table: one row per task definition, RMSE/MAE columns per method."""
    methods = _method_order(report)
    header = ["definition"]
    for label in methods:
        header += [f"{label}_rmse", f"{label}_mae"]
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for definition in report["definition_order"]:
            result = report["definitions"][definition]
            row = [definition]
            for label in methods:
                row.append(repr(result["methods"][label]["overall_rmse"]))
                row.append(repr(result["methods"][label]["overall_mae"]))
            writer.writerow(row)


def write_ranksum_csv(path: Path, report: dict) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["definition", "method", "statistic", "p_value", "significant"])
        for definition in report["definition_order"]:
            result = report["definitions"][definition]
            for label in _method_order(report):
                outcome = result["rank_sum"][label]
                writer.writerow(
                    [
                        definition,
                        label,
                        repr(outcome["statistic"]),
                        repr(outcome["p_value"]),
                        outcome["significant"],
                    ]
                )


def write_wld_csv(path: Path, report: dict) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["definition", "group", "method", "win", "loss", "draw"])
        for definition in report["definition_order"]:
            quartiles = report["definitions"][definition]["quartiles"]
            if quartiles is None:
                continue
            for group, per_method in quartiles["wld"].items():
                for label in _method_order(report):
                    w, l, d = per_method[label]
                    writer.writerow([definition, group, label, w, l, d])


def summary_markdown(report: dict) -> str:
    """Summary table with the best (lowest RMSE, lowest MAE) method in bold."""
    methods = _method_order(report)
    lines = ["# Backtest summary", ""]
    header = ["definition"] + [f"{m} RMSE" for m in methods] + [f"{m} MAE" for m in methods]
    lines.append("| " + " | ".join(header) + " |")
    lines.append("|" + "---|" * len(header))
    for definition in report["definition_order"]:
        result = report["definitions"][definition]
        rmse_values = [result["methods"][m]["overall_rmse"] for m in methods]
        mae_values = [result["methods"][m]["overall_mae"] for m in methods]
        cells = [definition]
        cells += _bold_min_cells(rmse_values)
        cells += _bold_min_cells(mae_values)
        lines.append("| " + " | ".join(cells) + " |")
    lines.append("")
    return "\n".join(lines)


def _bold_min_cells(values: Sequence[float]) -> list[str]:
    best = min(values)
    cells = []
    for v in values:
        text = f"{v:.{SUMMARY_DECIMALS}f}"
        cells.append(f"**{text}**" if v == best else text)
    return cells


def wld_markdown(report: dict) -> str:
    methods = _method_order(report)
    lines = ["# Win/Loss/Draw vs benchmark", ""]
    header = ["definition", "group"] + methods
    lines.append("| " + " | ".join(header) + " |")
    lines.append("|" + "---|" * len(header))
    for definition in report["definition_order"]:
        quartiles = report["definitions"][definition]["quartiles"]
        if quartiles is None:
            continue
        for group, per_method in quartiles["wld"].items():
            row = [definition, group]
            for label in methods:
                w, l, d = per_method[label]
                row.append(f"{w}/{l}/{d}")
            lines.append("| " + " | ".join(row) + " |")
    lines.append("")
    return "\n".join(lines)


def ranksum_markdown(report: dict) -> str:
    methods = _method_order(report)
    lines = ["# Rank-sum test vs benchmark", ""]
    header = ["definition", "method", "statistic", "p-value", "significant"]
    lines.append("| " + " | ".join(header) + " |")
    lines.append("|" + "---|" * len(header))
    for definition in report["definition_order"]:
        result = report["definitions"][definition]
        for label in methods:
            outcome = result["rank_sum"][label]
            lines.append(
                "| "
                + " | ".join(
                    [
                        definition,
                        label,
                        f"{outcome['statistic']:g}",
                        f"{outcome['p_value']:.4f}",
                        str(outcome["significant"]),
                    ]
                )
                + " |"
            )
    lines.append("")
    return "\n".join(lines)


def render(results_dir: Path, fmt: str, out_dir: Optional[Path] = None) -> list[Path]:
    """Render the stored report to the requested format; returns written paths."""
    results_dir = Path(results_dir)
    report_path = results_dir / "report.json"
    if not report_path.exists():
        raise FileNotFoundError(f"no report.json under {results_dir}")
    report = load_json(report_path)
    out = Path(out_dir) if out_dir is not None else results_dir / "rendered"
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    if fmt == "json":
        path = out / "report.json"
        dump_json(path, report)
        written.append(path)
    elif fmt == "csv":
        for name, writer in (
            ("summary.csv", write_summary_csv),
            ("ranksum.csv", write_ranksum_csv),
            ("wld.csv", write_wld_csv),
        ):
            path = out / name
            writer(path, report)
            written.append(path)
    elif fmt == "md":
        path = out / "report.md"
        text = "\n".join(
            [summary_markdown(report), ranksum_markdown(report), wld_markdown(report)]
        )
        path.write_text(text)
        written.append(path)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return written
