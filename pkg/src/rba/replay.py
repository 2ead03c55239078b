"""Dataset replay harness.

Replays a login dataset through the scoring engine: each row is scored
against the history accumulated from all preceding rows, then appended.
Dataset feature values are used verbatim; validation, normalization and
sub-feature derivation are bypassed so the comparison is not distorted
by derivation differences.  Rows whose user has no prior entry produce
no output (their score would be zero anyway) but still enter history.

Output is headerless CSV ``global_index,user_id,risk_score`` with ten
decimal places, so shard outputs concatenate to the full replay byte
for byte.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

from .config import RiskConfig
from .engine import risk_score
from .history import HistoryStore
from .model import FeatureValues

# Logical column -> header in the public login dataset.  The mapping is
# overridable from a JSON file because header strings vary by export.
DEFAULT_COLUMNS = {
    "user_id": "User ID",
    "timestamp": "Login Timestamp",
    "ip": "IP Address",
    "country": "Country",
    "asn": "ASN",
    "ua_full": "User Agent String",
    "browser": "Browser Name and Version",
    "os": "OS Name and Version",
    "device_type": "Device Type",
    "rtt": "Round-Trip Time [ms]",
    "success": "Login Successful",
}

_REQUIRED = ("user_id", "timestamp", "ip", "country", "asn", "ua_full",
             "browser", "os", "device_type", "success")

_TRUTHY = {"true", "1", "yes", "t"}
_FALSY = {"false", "0", "no", "f"}


class DatasetError(ValueError):
    """Unreadable dataset: missing column or unparseable row."""


@dataclass(frozen=True)
class DatasetRow:
    """One successful login attempt, feature values verbatim."""

    global_index: int
    user_id: str
    timestamp: str
    features: FeatureValues = field(default_factory=dict)


def load_column_mapping(path: str | None) -> dict[str, str]:
    """Default dataset headers, overridden by a JSON mapping file."""
    mapping = dict(DEFAULT_COLUMNS)
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            overrides = json.load(fh)
        unknown = set(overrides) - set(DEFAULT_COLUMNS)
        if unknown:
            raise DatasetError(f"unknown mapping keys: {sorted(unknown)}")
        mapping.update(overrides)
    return mapping


def _cell(row: dict, header: str | None):
    if header is None:
        return None
    value = (row.get(header) or "").strip()
    return value or None


def load_dataset(path: str, columns: dict[str, str] | None = None) -> list[DatasetRow]:
    """Read the successful login attempts, in file order.

    ``global_index`` is the 0-based position of the row among all data
    rows of the file, so indices stay stable when failed logins are
    dropped.  Raises :class:`DatasetError` naming a missing column, or
    with the row number for an unparseable row.
    """
    columns = columns or DEFAULT_COLUMNS
    rows: list[DatasetRow] = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DatasetError("empty dataset: no header row")
        for logical in _REQUIRED:
            header = columns[logical]
            if header not in reader.fieldnames:
                raise DatasetError(f"missing column {header!r} (for {logical})")
        has_rtt = columns["rtt"] in reader.fieldnames
        for index, record in enumerate(reader):
            flag = (record.get(columns["success"]) or "").strip().lower()
            if flag in _FALSY:
                continue
            if flag not in _TRUTHY:
                raise DatasetError(
                    f"row {index}: unparseable success flag {flag!r}")
            user = _cell(record, columns["user_id"])
            if user is None:
                raise DatasetError(f"row {index}: missing user id")
            features: FeatureValues = {
                "ip": _cell(record, columns["ip"]),
                "asn": _cell(record, columns["asn"]),
                "country": _cell(record, columns["country"]),
                "ua_full": _cell(record, columns["ua_full"]),
                "browser": _cell(record, columns["browser"]),
                "os": _cell(record, columns["os"]),
                "device_type": _cell(record, columns["device_type"]),
                "rtt": _cell(record, columns["rtt"]) if has_rtt else None,
            }
            rows.append(DatasetRow(
                global_index=index,
                user_id=user,
                timestamp=_cell(record, columns["timestamp"]) or "",
                features=features,
            ))
    return rows


def replay(rows: Sequence[DatasetRow], start: int = 0, count: int | None = None,
           config: RiskConfig = RiskConfig(), include_rtt: bool = False,
           history_cap: int | None = None) -> list[tuple[int, str, float]]:
    """Score rows [start, start+count) against all preceding entries.

    Rows before ``start`` are ingested into history without scoring, so
    a shard reproduces exactly the state a full run would have reached.
    Histories are uncapped unless ``history_cap`` is given.
    """
    if start < 0:
        raise ValueError("start must be nonnegative")
    if count is not None and count < 0:
        raise ValueError("count must be nonnegative")
    store = HistoryStore(cap=history_cap)
    end = len(rows) if count is None else min(start + count, len(rows))
    results: list[tuple[int, str, float]] = []
    for position, row in enumerate(rows):
        if position >= end:
            break
        if position >= start:
            prior = store.user_history(row.user_id)
            if prior:
                score = risk_score(row.features, row.user_id, prior,
                                   store.counters, None, config,
                                   include_rtt=include_rtt)
                results.append((row.global_index, row.user_id, score))
        store.append(row.user_id, row.features)
    return results


def format_score(score: float) -> str:
    return "inf" if math.isinf(score) else f"{score:.10f}"


def write_scores(results: Sequence[tuple[int, str, float]], path: str) -> None:
    """Headerless CSV, deterministic formatting, LF newlines."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for global_index, user_id, score in results:
            fh.write(f"{global_index},{user_id},{format_score(score)}\n")


def read_scores(path: str) -> list[tuple[int, str, float]]:
    results = []
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, line in enumerate(csv.reader(fh), start=1):
            if not line:
                continue
            if len(line) != 3:
                raise DatasetError(f"line {lineno}: expected 3 fields")
            try:
                results.append((int(line[0]), line[1], float(line[2])))
            except ValueError as exc:
                raise DatasetError(f"line {lineno}: {exc}") from exc
    return results


@dataclass(frozen=True)
class CompareReport:
    """Row-aligned diff of two score files."""

    ok: bool
    rows_compared: int
    max_abs_diff: float
    max_rel_diff: float
    first_mismatch: tuple[int, float, float] | None
    structural_error: str | None = None

    def summary(self) -> str:
        if self.structural_error is not None:
            return f"structural mismatch: {self.structural_error}"
        lines = [f"rows compared: {self.rows_compared}",
                 f"max abs diff:  {self.max_abs_diff:.3e}",
                 f"max rel diff:  {self.max_rel_diff:.3e}"]
        if self.first_mismatch is not None:
            index, a, b = self.first_mismatch
            lines.append(f"first mismatch at global index {index}: "
                         f"{format_score(a)} vs {format_score(b)}")
        else:
            lines.append("within tolerance")
        return "\n".join(lines)


def _diffs(a: float, b: float) -> tuple[float, float]:
    if math.isinf(a) and math.isinf(b):
        return (0.0, 0.0)
    if math.isinf(a) or math.isinf(b):
        return (math.inf, math.inf)
    abs_diff = abs(a - b)
    scale = max(abs(a), abs(b))
    return (abs_diff, abs_diff / scale if scale else 0.0)


def compare(path_a: str, path_b: str, tol: float = 1e-9) -> CompareReport:
    """Row-aligned comparison on (global index, score), abs tolerance."""
    rows_a = read_scores(path_a)
    rows_b = read_scores(path_b)
    if len(rows_a) != len(rows_b):
        return CompareReport(False, 0, math.nan, math.nan, None,
                             f"row counts differ: {len(rows_a)} vs {len(rows_b)}")
    max_abs = 0.0
    max_rel = 0.0
    first = None
    for (ia, _, sa), (ib, _, sb) in zip(rows_a, rows_b):
        if ia != ib:
            return CompareReport(False, 0, math.nan, math.nan, None,
                                 f"global indices diverge: {ia} vs {ib}")
        abs_diff, rel_diff = _diffs(sa, sb)
        max_abs = max(max_abs, abs_diff)
        max_rel = max(max_rel, rel_diff)
        if abs_diff > tol and first is None:
            first = (ia, sa, sb)
    return CompareReport(first is None, len(rows_a), max_abs, max_rel, first)


def shard(rows: Sequence, n_shards: int) -> list[tuple[int, int]]:
    """Contiguous (start, count) slices covering the rows.

    Replaying each slice and concatenating the outputs equals one full
    replay, because each shard re-ingests its prefix for history state.
    """
    if n_shards < 1:
        raise ValueError("n_shards must be >= 1")
    total = len(rows)
    base, extra = divmod(total, n_shards)
    boundaries = []
    start = 0
    for i in range(n_shards):
        count = base + (1 if i < extra else 0)
        boundaries.append((start, count))
        start += count
    return boundaries
