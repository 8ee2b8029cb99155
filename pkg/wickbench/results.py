# wickbench/results.py
"""
Result records and their persistence.

Every run writes one CSV (header row, '.' decimals, rows in grid order) and one JSON
manifest echoing the validated config, versions, budgets and verdicts. Output is a
pure function of (config, seed), so two identical runs give byte-identical files.
"""

import csv
import hashlib
import json
import logging
import math
import platform
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence

import numpy as np
import pydantic
import scipy
from pydantic import BaseModel

logger = logging.getLogger(__name__)

RESULTS_FILENAME = "results.csv"
MANIFEST_FILENAME = "manifest.json"


def format_value(value: Any) -> Any:
    """Locale-free text for CSV cells; floats use repr so reruns are byte-identical."""
    if isinstance(value, bool) or value is None:
        return "" if value is None else str(value).lower()
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        return repr(value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return value


def flatten(values: Mapping[str, Any]) -> Dict[str, Any]:
    """Split complex entries into <name>_re / <name>_im columns."""
    row: Dict[str, Any] = {}
    for key, value in values.items():
        if isinstance(value, (complex, np.complexfloating)):
            row[f"{key}_re"] = float(np.real(value))
            row[f"{key}_im"] = float(np.imag(value))
        elif isinstance(value, (list, tuple, dict)):
            continue
        else:
            row[key] = value
    return row


class ResultRecord(BaseModel):
    """Base for all emitted result records; `anchor` names the quantity in each row."""

    model_config = pydantic.ConfigDict(arbitrary_types_allowed=True)

    anchor: str = ""

    def to_row(self) -> Dict[str, Any]:
        return flatten(self.model_dump())


def json_default(value: Any) -> Any:
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [float(np.real(value)), float(np.imag(value))]
    if isinstance(value, np.ndarray):
        return value.tolist()
    return str(value)


def canonical_json(data: Any) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"), default=json_default)


def config_hash(config_data: Mapping[str, Any], seed: int) -> str:
    """SHA-256 of the canonical config JSON plus the seed."""
    payload = canonical_json({"config": config_data, "seed": seed})
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def collect_fieldnames(rows: Sequence[Mapping[str, Any]]) -> List[str]:
    """Union of row keys in first-seen order, with anchor and config_hash first."""
    seen: Dict[str, None] = {"anchor": None, "config_hash": None}
    for row in rows:
        for key in row:
            seen.setdefault(key, None)
    return list(seen)


def write_csv(path: Path, rows: Sequence[Mapping[str, Any]], digest: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    stamped = [{**row, "config_hash": digest} for row in rows]
    fieldnames = collect_fieldnames(stamped)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.DictWriter(
            handle, fieldnames=fieldnames, extrasaction="ignore", lineterminator="\n"
        )
        writer.writeheader()
        for row in stamped:
            writer.writerow({key: format_value(row.get(key)) for key in fieldnames})
    logger.info(f"Wrote {len(rows)} rows to {path}")
    return path


def versions() -> Dict[str, str]:
    from wickbench.cli_main import get_version

    return {
        "wickbench": get_version(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pydantic": pydantic.VERSION,
    }


def file_digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(
    path: Path,
    kind: str,
    config_data: Mapping[str, Any],
    digest: str,
    seed: int,
    verdicts: Mapping[str, str],
    budgets: Mapping[str, Any],
    summary: Optional[Iterable[Mapping[str, Any]]] = None,
    failures: Optional[Iterable[Mapping[str, Any]]] = None,
    files: Optional[Iterable[Path]] = None,
) -> Path:
    """
    Write the run manifest; keys are sorted so reruns are byte-identical.

    Each path in files is recorded by name with its SHA-256 digest.
    """
    manifest = {
        "kind": kind,
        "config": config_data,
        "config_hash": digest,
        "seed": seed,
        "versions": versions(),
        "budgets": dict(budgets),
        "verdicts": dict(verdicts),
        "summary": [flatten(item) for item in (summary or [])],
        "failures": list(failures or []),
        "files": {file.name: file_digest(file) for file in (files or [])},
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps(manifest, sort_keys=True, indent=2, default=json_default) + "\n",
        encoding="utf-8",
    )
    logger.info(f"Wrote manifest to {path}")
    return path
