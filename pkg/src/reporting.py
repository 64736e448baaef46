"""
Reporting module: text summaries, JSON reports and per-point CSV tables.
"""
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence

import pandas as pd

from src.config import REPORT_DIR, ensure_directories
from src.utils import dump_json, ensure_directory

logger = logging.getLogger(__name__)


def _is_complex(value: Any) -> bool:
    return isinstance(value, Mapping) and set(value) == {"re", "im"}


def _is_scalar(value: Any) -> bool:
    if _is_complex(value):
        return True
    if isinstance(value, list):
        return not any(isinstance(x, dict) for x in value)
    return not isinstance(value, dict)


def _line(key: str, value: Any) -> str:
    if _is_complex(value):
        value = f"{value['re']} + {value['im']}i"
    elif isinstance(value, (list, tuple)) and len(value) > 8:
        value = f"[{len(value)} entries]"
    return f"{key.replace('_', ' ').capitalize()}: {value}"


def generate_text_report(title: str, report: Mapping[str, Any]) -> str:
    """
    Render a report as "=== Section ===" blocks.

    Scalars of the top level go to a summary block; nested mappings get a
    block of their own and lists of mappings one numbered line per entry.

    Args:
        title: Heading of the report
        report: JSON-ready report mapping

    Returns:
        Formatted report string
    """
    lines = [f"=== {title} ===", ""]
    summary = [(k, v) for k, v in report.items() if _is_scalar(v)]
    if summary:
        lines.append("=== Summary ===")
        lines.extend(_line(k, v) for k, v in summary)
        lines.append("")
    for key, value in report.items():
        if _is_scalar(value):
            continue
        if isinstance(value, dict):
            lines.append(f"=== {key.replace('_', ' ').title()} ===")
            lines.extend(_line(k, v) if _is_scalar(v) else f"{k}: {json.dumps(v, sort_keys=True)}"
                         for k, v in value.items())
            lines.append("")
        else:
            lines.append(f"=== {key.replace('_', ' ').title()} ===")
            for i, entry in enumerate(value, 1):
                lines.append(f"{i}. {json.dumps(entry, sort_keys=True)}")
            lines.append("")
    return "\n".join(lines).rstrip() + "\n"


def generate_json_report(report: Any) -> str:
    """Deterministic JSON rendering."""
    return dump_json(report) + "\n"


def rows_to_frame(rows: Sequence[Mapping[str, Any]]) -> pd.DataFrame:
    """Flatten per-point rows (lists and complex pairs become strings) into a table."""
    flat: List[Dict[str, Any]] = []
    for row in rows:
        out = {}
        for key, value in row.items():
            if _is_complex(value):
                out[f"{key}_re"], out[f"{key}_im"] = value["re"], value["im"]
            elif isinstance(value, (list, tuple, dict)):
                out[key] = json.dumps(value, sort_keys=True)
            else:
                out[key] = value
        flat.append(out)
    return pd.DataFrame(flat)


def generate_csv_report(rows: Sequence[Mapping[str, Any]], path: Path) -> pd.DataFrame:
    """
    Write per-point rows as CSV.

    Args:
        rows: JSON-ready rows, one per fixed point or critical point
        path: Output file

    Returns:
        The table that was written
    """
    frame = rows_to_frame(rows)
    path = Path(path)
    ensure_directory(path.parent)
    frame.to_csv(path, index=False)
    logger.info(f"Table with {len(frame)} rows saved to {path}")
    return frame


def save_report(name: str, report: Mapping[str, Any], title: str, out: Optional[Path] = None,
                rows: Optional[Sequence[Mapping[str, Any]]] = None) -> Dict[str, Path]:
    """
    Save the JSON report, its text summary and optionally a CSV table.

    Args:
        name: Base file name, e.g. "residue_normal-cone-p1"
        report: JSON-ready report mapping
        title: Heading of the text summary
        out: Output directory (defaults to the report directory)
        rows: Per-point rows for the CSV table

    Returns:
        Mapping from format to written path
    """
    if out is None:
        ensure_directories()
        directory = REPORT_DIR
    else:
        directory = Path(out)
        ensure_directory(directory)
    paths = {"json": directory / f"{name}.json", "text": directory / f"{name}.txt"}
    paths["json"].write_text(generate_json_report(report))
    text = generate_text_report(title, report)
    paths["text"].write_text(text)
    logger.info(f"Report saved to {paths['json']}")
    if rows:
        paths["csv"] = directory / f"{name}.csv"
        generate_csv_report(rows, paths["csv"])
    for line in text.split("\n"):
        if line.startswith("==="):
            logger.debug(line)
    return paths
