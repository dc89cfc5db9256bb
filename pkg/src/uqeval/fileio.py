"""Prediction-table and report serialization.

Prediction files are comma-separated UTF-8 with a header row.  Columns y,
mu, sigma are required; input features ride along as x0..xk numbered from
zero.  Column names match case-sensitively and may appear in any order.
Parse errors carry the 1-based data row, the file line, and the column
name, so a bad record can be found without a debugger.

Reports are JSON with sorted keys.  All floats are written with repr
formatting (shortest form that parses back to the identical double), which
is what makes CLI output comparable to in-process results at full precision.
"""

from __future__ import annotations

import csv
import json
import math
import os
import re

import numpy as np

from .calibration import AdvGroupCurve, CalibrationCurve
from .core import (
    EmptyInputError,
    EvalDataset,
    PredictionSet,
    ProbGrid,
    ValidationError,
)
from .scoring import SCALAR_METRICS, MetricReport

__all__ = [
    "REQUIRED_COLUMNS",
    "read_prediction_file",
    "write_prediction_file",
    "report_to_dict",
    "report_from_dict",
    "write_report",
    "read_report",
]

REQUIRED_COLUMNS = ("y", "mu", "sigma")
_FEATURE_RE = re.compile(r"^x(\d+)$")


def _parse_header(header: list[str], path: str) -> tuple[dict[str, int], list[int]]:
    """Column name -> index map plus feature column indices ordered x0..xk."""
    seen: dict[str, int] = {}
    for i, name in enumerate(header):
        if name in seen:
            raise ValidationError(f"{path}: duplicate column {name!r} in header")
        seen[name] = i
    for name in REQUIRED_COLUMNS:
        if name not in seen:
            raise ValidationError(
                f"{path}: missing required column {name!r} "
                f"(header has {', '.join(map(repr, header))})"
            )
    features: dict[int, int] = {}
    for name, i in seen.items():
        if name in REQUIRED_COLUMNS:
            continue
        m = _FEATURE_RE.match(name)
        if not m:
            raise ValidationError(
                f"{path}: unknown column {name!r}; expected y, mu, sigma "
                f"and feature columns x0..xk"
            )
        features[int(m.group(1))] = i
    if features and sorted(features) != list(range(len(features))):
        raise ValidationError(
            f"{path}: feature columns must be contiguous from x0, "
            f"got {sorted('x%d' % j for j in features)}"
        )
    return seen, [features[j] for j in sorted(features)]


def _parse_cell(raw: str, row: int, column: str, path: str) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise ValidationError(
            f"{path}: row {row} (line {row + 1}), column {column!r}: "
            f"not a number: {raw!r}"
        ) from None
    if not math.isfinite(value):
        raise ValidationError(
            f"{path}: row {row} (line {row + 1}), column {column!r}: "
            f"non-finite value {raw!r}"
        )
    return value


def read_prediction_file(path: str) -> tuple[PredictionSet, EvalDataset]:
    """Parse a prediction table into validated prediction and data objects."""
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise ValidationError(f"cannot read prediction file {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValidationError(f"{path}: empty file, expected a header row")
        columns, feature_idx = _parse_header(header, path)
        y_col, mu_col, sd_col = (columns[c] for c in REQUIRED_COLUMNS)

        ys, mus, sds, feats = [], [], [], []
        for row_num, row in enumerate(reader, start=1):
            if len(row) != len(header):
                raise ValidationError(
                    f"{path}: row {row_num} (line {row_num + 1}) has "
                    f"{len(row)} fields, header has {len(header)}"
                )
            ys.append(_parse_cell(row[y_col], row_num, "y", path))
            mus.append(_parse_cell(row[mu_col], row_num, "mu", path))
            sigma = _parse_cell(row[sd_col], row_num, "sigma", path)
            if sigma <= 0.0:
                raise ValidationError(
                    f"{path}: row {row_num} (line {row_num + 1}), column "
                    f"'sigma': must be > 0, got {row[sd_col]}"
                )
            sds.append(sigma)
            feats.append(
                [_parse_cell(row[j], row_num, header[j], path) for j in feature_idx]
            )
    if not ys:
        raise EmptyInputError(f"{path}: no data rows after the header")
    inputs = np.array(feats, dtype=float).reshape(len(ys), len(feature_idx))
    preds = PredictionSet(np.array(mus), np.array(sds))
    data = EvalDataset(inputs, np.array(ys))
    return preds, data


def write_prediction_file(path: str, preds: PredictionSet, data: EvalDataset) -> None:
    """Inverse of read_prediction_file; floats keep full precision via repr."""
    if len(preds) != len(data):
        raise ValidationError(
            f"predictions and data disagree on length: {len(preds)} vs {len(data)}"
        )
    n_features = data.inputs.shape[1]
    header = list(REQUIRED_COLUMNS) + [f"x{j}" for j in range(n_features)]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i in range(len(preds)):
            row = [
                repr(float(data.targets[i])),
                repr(float(preds.means[i])),
                repr(float(preds.stddevs[i])),
            ]
            row.extend(repr(float(v)) for v in data.inputs[i])
            writer.writerow(row)


def report_to_dict(
    report: MetricReport,
    grid: ProbGrid,
    seed: int | None = None,
    tool_version: str | None = None,
) -> dict:
    """JSON-ready form of a metric report, provenance included."""
    from . import __version__

    payload: dict = {name: getattr(report, name) for name in SCALAR_METRICS}
    payload["calibration"] = {
        "expected": [float(v) for v in report.calibration_curve.expected],
        "observed": [float(v) for v in report.calibration_curve.observed],
    }
    if report.adv_group_curve is not None:
        adv = report.adv_group_curve
        payload["adv_group"] = {
            "fractions": [float(v) for v in adv.group_fractions],
            "mean_worst_ece": [float(v) for v in adv.mean_worst_ece],
            "stderr": [float(v) for v in adv.stderr],
        }
    payload["provenance"] = {
        "grid": [float(v) for v in grid.probs],
        "seed": seed,
        "tool_version": tool_version if tool_version is not None else __version__,
    }
    return payload


def report_from_dict(payload: dict) -> MetricReport:
    """Rebuild a MetricReport from its JSON form (inverse of report_to_dict)."""
    try:
        scalars = {name: float(payload[name]) for name in SCALAR_METRICS}
        curve = CalibrationCurve(
            expected=np.array(payload["calibration"]["expected"], dtype=float),
            observed=np.array(payload["calibration"]["observed"], dtype=float),
        )
    except KeyError as exc:
        raise ValidationError(f"report is missing key {exc}") from exc
    adv = None
    if "adv_group" in payload:
        block = payload["adv_group"]
        try:
            adv = AdvGroupCurve(
                group_fractions=np.array(block["fractions"], dtype=float),
                mean_worst_ece=np.array(block["mean_worst_ece"], dtype=float),
                stderr=np.array(block["stderr"], dtype=float),
            )
        except KeyError as exc:
            raise ValidationError(f"adv_group block missing key {exc}") from exc
    return MetricReport(calibration_curve=curve, adv_group_curve=adv, **scalars)


def write_report(path: str, payload: dict) -> None:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_report(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read report {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed report {path}: {exc}") from exc
