"""Structured-text documents for analysis results.

Every document is a JSON object with a "kind" discriminator:

  model_report     per-layer similarities, skips, and stage means
  residual_report  layer-paired untrained/trained residuals and totals
  fingerprint      a standalone stage-mean vector
  match_result     classification outcome against reference fingerprints

Stage-indexed values serialize as an object with keys "1".."5"; absent
stages are null. Documents embed the tool version, and model reports
carry a digest of the container they came from, so results stay
auditable. Files are written with two-space indentation and a trailing
newline; byte-identical inputs yield byte-identical documents.

Plot rows export as CSV, either per report (layer,stage,x,y) or across
models (model,layer,stage,x,y).
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from pathlib import Path
from typing import Iterable, Sequence

from chirascope import __version__
from chirascope.analysis import (
    ComparisonResult,
    Fingerprint,
    MatchResult,
    ModelReport,
    PlotRow,
    SkippedLayer,
)
from chirascope.chirality import LayerSimilarity
from chirascope.errors import ReportError

__all__ = [
    "file_digest",
    "report_to_dict",
    "report_from_dict",
    "comparison_to_dict",
    "fingerprint_to_dict",
    "fingerprint_from_dict",
    "match_to_dict",
    "write_document",
    "read_document",
    "plot_csv",
    "multi_plot_csv",
]

_STAGE_KEYS = ("1", "2", "3", "4", "5")


def file_digest(path: str | Path) -> str:
    """Content digest of a file, as "sha256:<hex>"."""
    digest = hashlib.sha256(Path(path).read_bytes()).hexdigest()
    return f"sha256:{digest}"


def _stage_json(values: dict[int, float]) -> dict[str, float | None]:
    return {key: values.get(int(key)) for key in _STAGE_KEYS}


def _stage_from_json(raw: object, kind: str, field: str) -> dict[int, float]:
    if not isinstance(raw, dict):
        raise ReportError(f"{kind} field {field!r} must be an object")
    out: dict[int, float] = {}
    for key, value in raw.items():
        if key not in _STAGE_KEYS:
            raise ReportError(f"{kind} field {field!r} has unknown stage key {key!r}")
        if value is None:
            continue
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ReportError(f"{kind} field {field!r} stage {key} must be a number")
        out[int(key)] = float(value)
    return out


def _get(doc: dict, key: str, kind: str) -> object:
    if key not in doc:
        raise ReportError(f"{kind} document is missing field {key!r}")
    return doc[key]


def _str_field(doc: dict, key: str, kind: str) -> str:
    value = _get(doc, key, kind)
    if not isinstance(value, str):
        raise ReportError(f"{kind} field {key!r} must be a string")
    return value


def _bool_field(doc: dict, key: str, kind: str) -> bool:
    value = _get(doc, key, kind)
    if not isinstance(value, bool):
        raise ReportError(f"{kind} field {key!r} must be a boolean")
    return value


def _int_field(doc: dict, key: str, kind: str) -> int:
    value = _get(doc, key, kind)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ReportError(f"{kind} field {key!r} must be an integer")
    return value


def _num_field(doc: dict, key: str, kind: str) -> float:
    value = _get(doc, key, kind)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ReportError(f"{kind} field {key!r} must be a number")
    return float(value)


def _opt_int_field(doc: dict, key: str, kind: str) -> int | None:
    value = _get(doc, key, kind)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, int):
        raise ReportError(f"{kind} field {key!r} must be an integer or null")
    return value


def _opt_str_field(doc: dict, key: str, kind: str) -> str | None:
    value = _get(doc, key, kind)
    if value is None or isinstance(value, str):
        return value
    raise ReportError(f"{kind} field {key!r} must be a string or null")


def _list_field(doc: dict, key: str, kind: str) -> list:
    value = _get(doc, key, kind)
    if not isinstance(value, list):
        raise ReportError(f"{kind} field {key!r} must be an array")
    return value


def report_to_dict(report: ModelReport) -> dict:
    return {
        "kind": "model_report",
        "tool_version": __version__,
        "model_name": report.model_name,
        "family": report.family,
        "flipped": report.flipped,
        "input_digest": report.input_digest,
        "layers": [
            {
                "layer_name": layer.layer_name,
                "stage": layer.stage,
                "kernel_count": layer.kernel_count,
                "kernel_dim": layer.kernel_dim,
                "flipped": layer.flipped,
                "value": layer.value,
            }
            for layer in report.layers
        ],
        "skipped": [
            {"layer_name": s.layer_name, "reason": s.reason} for s in report.skipped
        ],
        "stage_means": _stage_json(report.stage_means),
    }


def report_from_dict(doc: object) -> ModelReport:
    if not isinstance(doc, dict):
        raise ReportError("report document must be a JSON object")
    kind = _str_field(doc, "kind", "report")
    if kind != "model_report":
        raise ReportError(f"expected a model_report document, got kind {kind!r}")
    layers = []
    for i, entry in enumerate(_list_field(doc, "layers", kind)):
        if not isinstance(entry, dict):
            raise ReportError(f"{kind} layers[{i}] must be an object")
        where = f"{kind} layers[{i}]"
        try:
            layers.append(
                LayerSimilarity(
                    layer_name=_str_field(entry, "layer_name", where),
                    stage=_opt_int_field(entry, "stage", where),
                    kernel_count=_int_field(entry, "kernel_count", where),
                    kernel_dim=_int_field(entry, "kernel_dim", where),
                    flipped=_bool_field(entry, "flipped", where),
                    value=_num_field(entry, "value", where),
                )
            )
        except ValueError as exc:
            raise ReportError(f"invalid {where}: {exc}") from exc
    skipped = []
    for i, entry in enumerate(_list_field(doc, "skipped", kind)):
        if not isinstance(entry, dict):
            raise ReportError(f"{kind} skipped[{i}] must be an object")
        where = f"{kind} skipped[{i}]"
        skipped.append(
            SkippedLayer(
                layer_name=_str_field(entry, "layer_name", where),
                reason=_str_field(entry, "reason", where),
            )
        )
    try:
        return ModelReport(
            model_name=_str_field(doc, "model_name", kind),
            family=_str_field(doc, "family", kind),
            flipped=_bool_field(doc, "flipped", kind),
            layers=tuple(layers),
            skipped=tuple(skipped),
            stage_means=_stage_from_json(_get(doc, "stage_means", kind), kind, "stage_means"),
            input_digest=_opt_str_field(doc, "input_digest", kind),
        )
    except ValueError as exc:
        raise ReportError(f"invalid model_report: {exc}") from exc


def comparison_to_dict(result: ComparisonResult) -> dict:
    residual = result.residual
    return {
        "kind": "residual_report",
        "tool_version": __version__,
        "untrained_name": result.untrained_name,
        "trained_name": result.trained_name,
        "layers": [
            {
                "layer_name": r.layer_name,
                "s_untrained": r.s_untrained,
                "s_trained": r.s_trained,
                "residual": r.residual,
            }
            for r in residual.per_layer
        ],
        "total": residual.total,
        "layer_count": residual.layer_count,
        "chirality_present": residual.chirality_present,
        "tolerance": residual.tolerance,
        "decreasing": result.decreasing,
        "increasing": result.increasing,
        "unchanged": result.unchanged,
    }


def fingerprint_to_dict(fp: Fingerprint) -> dict:
    return {
        "kind": "fingerprint",
        "tool_version": __version__,
        "model_name": fp.model_name,
        "family": fp.family,
        "vector": _stage_json(fp.vector),
        "trained": fp.trained,
    }


def fingerprint_from_dict(doc: object) -> Fingerprint:
    if not isinstance(doc, dict):
        raise ReportError("fingerprint document must be a JSON object")
    kind = _str_field(doc, "kind", "fingerprint")
    if kind != "fingerprint":
        raise ReportError(f"expected a fingerprint document, got kind {kind!r}")
    trained = _get(doc, "trained", kind)
    if trained is not None and not isinstance(trained, bool):
        raise ReportError("fingerprint field 'trained' must be a boolean or null")
    try:
        return Fingerprint(
            model_name=_str_field(doc, "model_name", kind),
            family=_str_field(doc, "family", kind),
            vector=_stage_from_json(_get(doc, "vector", kind), kind, "vector"),
            trained=trained,
        )
    except ValueError as exc:
        raise ReportError(f"invalid fingerprint: {exc}") from exc


def match_to_dict(
    result: MatchResult,
    untrained_threshold: float,
    trained_threshold: float,
) -> dict:
    return {
        "kind": "match_result",
        "tool_version": __version__,
        "query_name": result.query_name,
        "best_reference": result.best_reference,
        "best_family": result.best_family,
        "distances": [
            {"reference": name, "distance": dist} for name, dist in result.distances
        ],
        "trained_verdict": result.trained_verdict,
        "baseline_deviation": result.baseline_deviation,
        "untrained_threshold": untrained_threshold,
        "trained_threshold": trained_threshold,
    }


def write_document(doc: dict, path: str | Path) -> None:
    """Write a document as indented JSON with a trailing newline."""
    text = json.dumps(doc, indent=2, allow_nan=False) + "\n"
    Path(path).write_text(text, encoding="utf-8")


def read_document(path: str | Path) -> dict:
    """Read a JSON document, rejecting anything that is not an object."""
    try:
        raw = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ReportError(f"cannot read document {path}: {exc}") from exc
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ReportError(f"document {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ReportError(f"document {path} must hold a JSON object")
    return doc


def plot_csv(rows: Sequence[PlotRow]) -> str:
    """CSV for one report's plot rows, header layer,stage,x,y."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["layer", "stage", "x", "y"])
    for row in rows:
        writer.writerow([row.layer_name, row.stage, row.x, row.y])
    return buf.getvalue()


def multi_plot_csv(named_rows: Iterable[tuple[str, Sequence[PlotRow]]]) -> str:
    """CSV across models, header model,layer,stage,x,y; input order kept."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["model", "layer", "stage", "x", "y"])
    for model_name, rows in named_rows:
        for row in rows:
            writer.writerow([model_name, row.layer_name, row.stage, row.x, row.y])
    return buf.getvalue()
