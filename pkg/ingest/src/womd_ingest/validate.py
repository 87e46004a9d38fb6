"""Standalone checks of the scenario JSONL contract, with per-line findings.

Mirrors the consumer's validation rules (lengths 11/20, nine features per
history row, finite floats, unit lane directions) without importing the
consumer, so this tool stays dependency-free.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

HISTORY_STEPS = 11
FUTURE_STEPS = 20
FEATURES = 9
LANE_UNIT_TOL = 1e-6


@dataclass
class ValidationReport:
    lines_checked: int = 0
    findings: list[tuple[int, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.findings

    def add(self, lineno: int, message: str) -> None:
        self.findings.append((lineno, message))


def check_record(payload) -> list[str]:
    """Contract violations of one parsed JSONL record."""
    problems = []
    if not isinstance(payload, dict):
        return ["record is not a JSON object"]
    if not isinstance(payload.get("id"), str) or not payload.get("id"):
        problems.append("missing or empty 'id'")

    history = payload.get("history")
    if not isinstance(history, list) or len(history) != HISTORY_STEPS:
        problems.append(f"'history' must have {HISTORY_STEPS} rows")
    else:
        for row_index, row in enumerate(history):
            if not isinstance(row, list) or len(row) != FEATURES:
                problems.append(f"history row {row_index} must have {FEATURES} features")
                continue
            if not all(isinstance(v, (int, float)) and math.isfinite(v) for v in row):
                problems.append(f"history row {row_index} has non-finite values")
            elif row[7] <= 0 or row[8] <= 0:
                problems.append(f"history row {row_index} has non-positive dimensions")

    future = payload.get("future")
    if not isinstance(future, list) or len(future) != FUTURE_STEPS:
        problems.append(f"'future' must have {FUTURE_STEPS} rows")
    else:
        for row_index, row in enumerate(future):
            if not isinstance(row, list) or len(row) != 2:
                problems.append(f"future row {row_index} must have 2 values")
            elif not all(isinstance(v, (int, float)) and math.isfinite(v) for v in row):
                problems.append(f"future row {row_index} has non-finite values")

    lanes = payload.get("lane_vectors", [])
    if not isinstance(lanes, list):
        problems.append("'lane_vectors' must be a list")
    else:
        for row_index, row in enumerate(lanes):
            if not isinstance(row, list) or len(row) != 4:
                problems.append(f"lane row {row_index} must have 4 values")
                continue
            if not all(isinstance(v, (int, float)) and math.isfinite(v) for v in row):
                problems.append(f"lane row {row_index} has non-finite values")
                continue
            norm = math.hypot(row[2], row[3])
            if abs(norm - 1.0) > LANE_UNIT_TOL:
                problems.append(
                    f"lane row {row_index} direction norm {norm:.6f} is not unit"
                )
    return problems


def validate_file(path) -> ValidationReport:
    report = ValidationReport()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            report.lines_checked += 1
            try:
                payload = json.loads(line)
            except json.JSONDecodeError as exc:
                report.add(lineno, f"invalid JSON: {exc}")
                continue
            for problem in check_record(payload):
                report.add(lineno, problem)
    return report
