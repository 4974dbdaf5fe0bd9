"""
Experiment records and their CSV / JSON serialisation.

A record is a list of rows. Every row carries the provenance columns
(experiment, row, seed, version, timestamp), then the resolved config as
param.* columns, then its measurements as measure.* columns. Floats are
written with 17 significant digits so values survive a round trip exactly.
"""

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List

import numpy as np

from . import __version__
from .errors import SchemaMismatch

logger = logging.getLogger(__name__)

PROVENANCE = ("experiment", "row", "seed", "version", "timestamp")
PARAM_PREFIX = "param."
MEASURE_PREFIX = "measure."
SUMMARY = "summary"
# params that never split a report pool
POOL_IGNORED = ("experiment", "seed", "out", "format", "jobs", "strict")


def format_value(value):
    """Cell text for one value."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if isinstance(value, (list, tuple)):
        return ";".join(format_value(v) for v in value)
    return str(value)


def parse_value(text):
    """Inverse of format_value for scalars; lists come back as their text."""
    if text == "":
        return None
    if text in ("true", "false"):
        return text == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def _json_value(value):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        # JSON has no inf / nan
        return value if math.isfinite(value) else format_value(value)
    if isinstance(value, (list, tuple)):
        return format_value(value)
    return value


def _from_json_value(value):
    return parse_value(value) if isinstance(value, str) else value


@dataclass
class Row:
    label: str
    measures: Dict[str, object] = field(default_factory=dict)


@dataclass
class ExperimentRecord:
    """
    Rows produced by one experiment run.

    Attributes:
        experiment (str): Experiment id.
        seed (int): Master seed that reproduces every row.
        params (dict): Resolved configuration.
        rows (list): Row objects, summary rows first.
        version (str): Package version string.
        timestamp (str): UTC time of the run.
    """

    experiment: str
    seed: int
    params: Dict[str, object] = field(default_factory=dict)
    rows: List[Row] = field(default_factory=list)
    version: str = ""
    timestamp: str = ""

    def __post_init__(self):
        if not self.version:
            self.version = f"v{__version__}"
        if not self.timestamp:
            self.timestamp = datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
        # list params are stored as JSON text, unset params are not stored
        self.params = {
            key: json.dumps(value) if isinstance(value, (list, tuple)) else value
            for key, value in self.params.items()
            if value is not None
        }

    def add(self, label, **measures):
        self.rows.append(Row(label, {k: v for k, v in measures.items() if v is not None}))
        return self

    def summary_rows(self):
        return [r for r in self.rows if r.label == SUMMARY or r.label.startswith(SUMMARY + ":")]

    def columns(self):
        """Header: provenance, params, then every measure in first-seen order."""
        measure_keys = {}
        for row in self.rows:
            for key in row.measures:
                measure_keys.setdefault(key, None)
        return (
            list(PROVENANCE)
            + [PARAM_PREFIX + key for key in self.params]
            + [MEASURE_PREFIX + key for key in measure_keys]
        )

    def flat_rows(self):
        """Rows as dicts keyed by column name, with Python values."""
        flat = []
        for row in self.rows:
            item = {
                "experiment": self.experiment,
                "row": row.label,
                "seed": self.seed,
                "version": self.version,
                "timestamp": self.timestamp,
            }
            item.update({PARAM_PREFIX + k: v for k, v in self.params.items()})
            item.update({MEASURE_PREFIX + k: v for k, v in row.measures.items()})
            flat.append(item)
        return flat

    def write(self, path, fmt=None):
        """
        Write the record as CSV (default) or JSON.

        Args:
            path (str): Output file.
            fmt (str, optional): "csv" or "json"; inferred from the suffix.
        """
        path = Path(path)
        fmt = fmt or ("json" if path.suffix.lower() == ".json" else "csv")
        if path.parent and not path.parent.exists():
            path.parent.mkdir(parents=True, exist_ok=True)
        columns = self.columns()
        if fmt == "json":
            data = [{c: _json_value(item.get(c)) for c in columns if c in item} for item in self.flat_rows()]
            with open(path, "w", encoding="utf-8") as f:
                json.dump(data, f, indent=2)
                f.write("\n")
        else:
            with open(path, "w", newline="", encoding="utf-8") as f:
                writer = csv.writer(f, lineterminator="\n")
                writer.writerow(columns)
                for item in self.flat_rows():
                    writer.writerow([format_value(item.get(c)) for c in columns])
        logger.info(f"Wrote {len(self.rows)} rows of {self.experiment} to {path}")

    @classmethod
    def from_flat_rows(cls, items, source="<rows>"):
        """
        Rebuild records from flat row dicts, one record per (experiment, seed).

        Raises:
            SchemaMismatch: If provenance columns are missing.
        """
        records = {}
        for item in items:
            missing = [c for c in PROVENANCE if c not in item]
            if missing:
                raise SchemaMismatch(f"{source}: missing columns {', '.join(missing)}")
            key = (item["experiment"], item["seed"], item["timestamp"])
            if key not in records:
                params = {
                    c[len(PARAM_PREFIX):]: v for c, v in item.items() if c.startswith(PARAM_PREFIX) and v is not None
                }
                records[key] = cls(
                    str(item["experiment"]), int(item["seed"]), params,
                    version=str(item["version"]), timestamp=str(item["timestamp"]),
                )
            measures = {
                c[len(MEASURE_PREFIX):]: v for c, v in item.items() if c.startswith(MEASURE_PREFIX) and v is not None
            }
            records[key].rows.append(Row(str(item["row"]), measures))
        return list(records.values())

    @classmethod
    def read(cls, path):
        """
        Read every record stored in a CSV or JSON file.

        Raises:
            SchemaMismatch: If the file does not have the record layout.
        """
        path = Path(path)
        if path.suffix.lower() == ".json":
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
            if not isinstance(data, list):
                raise SchemaMismatch(f"{path}: expected a JSON array of rows")
            items = [{k: _from_json_value(v) for k, v in row.items()} for row in data]
        else:
            with open(path, "r", newline="", encoding="utf-8") as f:
                reader = csv.DictReader(f)
                header = reader.fieldnames or []
                if tuple(header[:len(PROVENANCE)]) != PROVENANCE:
                    raise SchemaMismatch(f"{path}: header must start with {', '.join(PROVENANCE)}")
                items = [{k: parse_value(v) for k, v in row.items()} for row in reader]
        return cls.from_flat_rows(items, source=str(path))


@dataclass
class ReportLine:
    """
    Pooled summary of one experiment (and summary row) across files.

    empirical_se is the spread of the per-file values when several files are
    pooled, and the row's own standard error otherwise.
    """

    experiment: str
    row: str
    files: int
    seeds: List[int]
    empirical: float
    empirical_se: float
    bound: float = math.nan
    limit: float = math.nan
    setting: str = ""

    def format(self):
        text = (
            f"{self.experiment:<10} {self.row:<18} n={self.files:<3} "
            f"empirical={self.empirical:.6g} ± {self.empirical_se:.2g}  "
            f"bound={self.bound:.6g}  limit={self.limit:.6g}"
        )
        return f"{text}  [{self.setting}]" if self.setting else text


def _as_float(value):
    if value is None:
        return math.nan
    try:
        return float(value)
    except (TypeError, ValueError):
        return math.nan


def _setting(params):
    return tuple(sorted((key, format_value(value)) for key, value in params.items() if key not in POOL_IGNORED))


def _distinguishing(settings):
    """Text of the params that vary across settings, one string per setting."""
    tables = [dict(setting) for setting in settings]
    keys = sorted({key for table in tables for key in table})
    varying = [key for key in keys if len({table.get(key, "") for table in tables}) > 1]
    return [" ".join(f"{key}={table.get(key, '')}" for key in varying) for table in tables]


def report(paths):
    """
    Merge record files and compare empirical values with bounds and limits.

    Summary rows are pooled per experiment, label and parameter setting; the
    seed, output path, format, job count and strict flag do not split a pool.
    Pooled empirical values are averaged and their standard error is the
    sample spread over the files (or the row's own empirical_se for a single
    file). When one label has several settings each line names the params
    that tell them apart.

    Args:
        paths (list): Files written by run.

    Returns:
        dict: Experiment id -> list of ReportLine, in first-seen order.

    Raises:
        SchemaMismatch: If pooled rows carry different measures.
    """
    groups = {}
    for path in paths:
        for record in ExperimentRecord.read(path):
            setting = _setting(record.params)
            for row in record.summary_rows():
                pools = groups.setdefault(record.experiment, {}).setdefault(row.label, {})
                pools.setdefault(setting, []).append((record.seed, row))

    sections = {}
    for experiment, labels in groups.items():
        lines = []
        for label, pools in labels.items():
            for setting_text, entries in zip(_distinguishing(list(pools)), pools.values()):
                keys = {frozenset(row.measures) for _, row in entries}
                if len(keys) > 1:
                    raise SchemaMismatch(f"{experiment}/{label}: files disagree on the measured columns")
                values = np.array([_as_float(row.measures.get("empirical")) for _, row in entries])
                if len(values) > 1:
                    se = float(np.std(values, ddof=1) / math.sqrt(len(values)))
                else:
                    se = _as_float(entries[0][1].measures.get("empirical_se"))
                first = entries[0][1].measures
                lines.append(
                    ReportLine(
                        experiment, label, len(entries), [seed for seed, _ in entries],
                        float(np.mean(values)), se, _as_float(first.get("bound")), _as_float(first.get("limit")),
                        setting=setting_text,
                    )
                )
        sections[experiment] = lines
    return sections
