"""Model-level reports, stage geometry, and fingerprint classification.

A report runs the per-layer similarity measure over every analyzable
layer of a model, records skipped layers with a reason, and aggregates
per-stage means. Stages 1..5 give each model family a fixed-length
signature regardless of depth; layers inside a stage are spread evenly
over the unit interval (s, s+1) for plotting, at x = s + (k + 0.5) / m
for the k-th of m layers.

Classification compares a query's stage-mean vector against reference
fingerprints by Euclidean distance over the stages both sides define,
and estimates trained state from how far the per-layer values sit from
the random-direction expectation sqrt(2 / (pi * dim)).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from chirascope.chirality import (
    RESIDUAL_TOLERANCE_PER_LAYER,
    LayerSimilarity,
    ModelResidual,
    layer_residual,
    layer_similarity,
    layer_similarity_noflip,
    model_residual,
)
from chirascope.errors import (
    EmptyReferenceSetError,
    LayerSetMismatchError,
    NoAnalyzableLayersError,
    UnassignedStageError,
)
from chirascope.weights_io import ConvLayer

__all__ = [
    "SkippedLayer",
    "ModelReport",
    "PlotRow",
    "Fingerprint",
    "MatchResult",
    "ComparisonResult",
    "UNTRAINED_THRESHOLD",
    "TRAINED_THRESHOLD",
    "random_direction_baseline",
    "analyze_model",
    "stage_positions",
    "compare_reports",
    "fingerprint",
    "classify",
]

SKIP_REASON_NOT_FLIPPABLE = "kernel width 1 cannot be flipped"

#: Default verdict cutoffs on the mean relative deviation from the
#: random-direction baseline. Below the first: untrained. Above the
#: second: trained. Between: inconclusive.
UNTRAINED_THRESHOLD = 0.15
TRAINED_THRESHOLD = 0.5

STAGES = (1, 2, 3, 4, 5)


def random_direction_baseline(dim: int) -> float:
    """Expected |cosine| between independent random directions in R^dim."""
    if dim < 1:
        raise ValueError(f"dimension must be >= 1, got {dim}")
    return math.sqrt(2.0 / (math.pi * float(dim)))


def _worker_count() -> int:
    # CHIRASCOPE_THREADS caps layer-level fan-out; 0 or unset picks a
    # small automatic default.
    raw = os.environ.get("CHIRASCOPE_THREADS")
    if raw is None or raw.strip() == "":
        count = 0
    else:
        try:
            count = int(raw)
        except ValueError:
            raise ValueError(
                f"CHIRASCOPE_THREADS must be an integer, got {raw!r}"
            ) from None
    if count < 0:
        raise ValueError(f"CHIRASCOPE_THREADS must be >= 0, got {count}")
    if count == 0:
        count = min(4, os.cpu_count() or 1)
    return count


def _stage_means(layers: Sequence[LayerSimilarity]) -> dict[int, float]:
    by_stage: dict[int, list[float]] = {}
    for layer in layers:
        if layer.stage is not None:
            by_stage.setdefault(layer.stage, []).append(layer.value)
    return {s: sum(vals) / len(vals) for s, vals in sorted(by_stage.items())}


@dataclass(frozen=True)
class SkippedLayer:
    """A layer left out of a report, and why."""

    layer_name: str
    reason: str


@dataclass(frozen=True)
class ModelReport:
    """Per-layer similarity values for one model plus stage aggregates.

    stage_means holds one mean per stage that has at least one measured
    layer; it is recomputed on construction, so a hand-built value that
    disagrees with the layers is rejected.
    """

    model_name: str
    family: str
    flipped: bool
    layers: tuple[LayerSimilarity, ...]
    skipped: tuple[SkippedLayer, ...] = ()
    stage_means: dict[int, float] | None = None
    input_digest: str | None = None

    def __post_init__(self) -> None:
        if not self.layers:
            raise ValueError("a report needs at least one measured layer")
        names = [layer.layer_name for layer in self.layers]
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise ValueError(f"duplicate layer names in report: {', '.join(dupes)}")
        for layer in self.layers:
            if layer.flipped != self.flipped:
                raise ValueError(
                    f"layer {layer.layer_name!r} flip mode disagrees with the report"
                )
        means = _stage_means(self.layers)
        if self.stage_means is None:
            object.__setattr__(self, "stage_means", means)
        elif dict(self.stage_means) != means:
            raise ValueError("stage_means disagrees with the layer values")


@dataclass(frozen=True)
class PlotRow:
    """One plotted point: a layer's similarity at its stretched x position."""

    layer_name: str
    stage: int
    x: float
    y: float

    def __post_init__(self) -> None:
        if not self.stage < self.x < self.stage + 1:
            raise ValueError(
                f"x = {self.x} for {self.layer_name!r} falls outside "
                f"({self.stage}, {self.stage + 1})"
            )


@dataclass(frozen=True)
class Fingerprint:
    """Stage-mean vector characterizing a model; absent stages are omitted."""

    model_name: str
    family: str
    vector: dict[int, float] = field(default_factory=dict)
    trained: bool | None = None

    def __post_init__(self) -> None:
        if not self.vector:
            raise ValueError("a fingerprint needs at least one stage component")
        for stage, value in self.vector.items():
            if stage not in STAGES:
                raise ValueError(f"stage {stage} outside 1..5")
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"stage {stage} component {value} outside [0, 1]")


@dataclass(frozen=True)
class MatchResult:
    """Outcome of matching a query fingerprint against references."""

    query_name: str
    best_reference: str
    best_family: str
    distances: tuple[tuple[str, float], ...]
    trained_verdict: str
    baseline_deviation: float

    def __post_init__(self) -> None:
        if self.trained_verdict not in ("trained", "untrained", "inconclusive"):
            raise ValueError(f"unknown verdict {self.trained_verdict!r}")
        for name, dist in self.distances:
            if dist < 0.0 or math.isnan(dist):
                raise ValueError(f"negative distance for reference {name!r}")


@dataclass(frozen=True)
class ComparisonResult:
    """Residual between an untrained and a trained report, with direction counts.

    decreasing counts layers whose similarity dropped with training,
    increasing the reverse, unchanged exact ties.
    """

    untrained_name: str
    trained_name: str
    residual: ModelResidual
    decreasing: int
    increasing: int
    unchanged: int


def analyze_model(
    layers: Iterable[ConvLayer],
    flipped: bool = True,
    *,
    model_name: str = "unknown",
    family: str = "unknown",
    input_digest: str | None = None,
) -> ModelReport:
    """Measure every analyzable layer and assemble the model report.

    With flipped=True, width-1 layers cannot be mirrored and are recorded
    as skipped; the no-flip variant measures them like any other layer.
    Layer computations are independent and may run on a small thread
    pool (capped by CHIRASCOPE_THREADS); results keep input order, so
    the report is identical regardless of parallelism.
    """
    pending: list[ConvLayer] = []
    skipped: list[SkippedLayer] = []
    for layer in layers:
        if flipped and not layer.flippable:
            skipped.append(SkippedLayer(layer.name, SKIP_REASON_NOT_FLIPPABLE))
        else:
            pending.append(layer)
    if not pending:
        raise NoAnalyzableLayersError(
            f"model {model_name!r} has no analyzable layers "
            f"({len(skipped)} skipped, flipped={flipped})"
        )
    measure = layer_similarity if flipped else layer_similarity_noflip
    workers = _worker_count()
    if workers > 1 and len(pending) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(measure, pending))
    else:
        results = [measure(layer) for layer in pending]
    return ModelReport(
        model_name=model_name,
        family=family,
        flipped=flipped,
        layers=tuple(results),
        skipped=tuple(skipped),
        input_digest=input_digest,
    )


def stage_positions(report: ModelReport) -> list[PlotRow]:
    """Stretch each stage's layers evenly across (s, s+1), in stage order."""
    for layer in report.layers:
        if layer.stage is None:
            raise UnassignedStageError(
                f"layer {layer.layer_name!r} has no stage assignment"
            )
    rows: list[PlotRow] = []
    stages = sorted({layer.stage for layer in report.layers})
    for stage in stages:
        members = [layer for layer in report.layers if layer.stage == stage]
        m = len(members)
        for k, layer in enumerate(members):
            rows.append(
                PlotRow(
                    layer_name=layer.layer_name,
                    stage=stage,
                    x=stage + (k + 0.5) / m,
                    y=layer.value,
                )
            )
    return rows


def compare_reports(
    untrained: ModelReport,
    trained: ModelReport,
    tolerance_per_layer: float = RESIDUAL_TOLERANCE_PER_LAYER,
) -> ComparisonResult:
    """Pair two reports layer-by-layer and total the residuals.

    Both reports must use the same flip mode and cover the same layer
    names with the same kernel counts and dimensions; pairing follows
    the untrained report's order.
    """
    if untrained.flipped != trained.flipped:
        raise LayerSetMismatchError(
            "reports disagree on flip mode: "
            f"untrained flipped={untrained.flipped}, trained flipped={trained.flipped}"
        )
    trained_by_name = {layer.layer_name: layer for layer in trained.layers}
    untrained_names = {layer.layer_name for layer in untrained.layers}
    missing = [l.layer_name for l in untrained.layers if l.layer_name not in trained_by_name]
    extra = [l.layer_name for l in trained.layers if l.layer_name not in untrained_names]
    if missing or extra:
        parts = []
        if missing:
            parts.append(f"missing from trained report: {', '.join(missing)}")
        if extra:
            parts.append(f"only in trained report: {', '.join(extra)}")
        raise LayerSetMismatchError("; ".join(parts))
    misshaped = [
        u.layer_name
        for u in untrained.layers
        if (u.kernel_count, u.kernel_dim)
        != (trained_by_name[u.layer_name].kernel_count, trained_by_name[u.layer_name].kernel_dim)
    ]
    if misshaped:
        raise LayerSetMismatchError(
            f"layer shapes disagree between reports: {', '.join(misshaped)}"
        )
    pairs = [(u, trained_by_name[u.layer_name]) for u in untrained.layers]
    per_layer = [layer_residual(u, t) for u, t in pairs]
    residual = model_residual(per_layer, tolerance_per_layer=tolerance_per_layer)
    decreasing = sum(1 for u, t in pairs if t.value < u.value)
    increasing = sum(1 for u, t in pairs if t.value > u.value)
    unchanged = len(pairs) - decreasing - increasing
    return ComparisonResult(
        untrained_name=untrained.model_name,
        trained_name=trained.model_name,
        residual=residual,
        decreasing=decreasing,
        increasing=increasing,
        unchanged=unchanged,
    )


def fingerprint(report: ModelReport) -> Fingerprint:
    """Copy a report's stage means into a standalone fingerprint."""
    if not report.stage_means:
        raise UnassignedStageError(
            f"report for {report.model_name!r} has no stage means to fingerprint"
        )
    return Fingerprint(
        model_name=report.model_name,
        family=report.family,
        vector=dict(report.stage_means),
    )


def classify(
    query: Fingerprint,
    references: Iterable[Fingerprint],
    per_layer_dims: Iterable[tuple[int, float]],
    untrained_threshold: float = UNTRAINED_THRESHOLD,
    trained_threshold: float = TRAINED_THRESHOLD,
) -> MatchResult:
    """Match a query against reference fingerprints and judge trained state.

    Distance to each reference is Euclidean over the stages present in
    both vectors; references sharing no stage are dropped. The best
    match is the smallest distance, ties broken by reference name. The
    trained verdict comes from the mean relative deviation of per-layer
    values from the random-direction baseline for their dimension.
    """
    refs = list(references)
    if not refs:
        raise EmptyReferenceSetError("reference set is empty")
    dims = list(per_layer_dims)
    if not dims:
        raise ValueError("per_layer_dims needs at least one (dim, similarity) pair")
    if not 0.0 <= untrained_threshold <= trained_threshold:
        raise ValueError(
            "thresholds must satisfy 0 <= untrained_threshold <= trained_threshold, "
            f"got {untrained_threshold} and {trained_threshold}"
        )
    scored: list[tuple[Fingerprint, float]] = []
    for ref in refs:
        common = sorted(set(query.vector) & set(ref.vector))
        if not common:
            continue
        gap = math.sqrt(
            sum((query.vector[s] - ref.vector[s]) ** 2 for s in common)
        )
        scored.append((ref, gap))
    if not scored:
        raise EmptyReferenceSetError(
            f"none of the {len(refs)} references shares a stage with the query"
        )
    best_ref, _ = min(scored, key=lambda item: (item[1], item[0].model_name))
    deviations = [
        abs(value - random_direction_baseline(dim)) / random_direction_baseline(dim)
        for dim, value in dims
    ]
    baseline_deviation = sum(deviations) / len(deviations)
    if baseline_deviation < untrained_threshold:
        verdict = "untrained"
    elif baseline_deviation > trained_threshold:
        verdict = "trained"
    else:
        verdict = "inconclusive"
    return MatchResult(
        query_name=query.model_name,
        best_reference=best_ref.model_name,
        best_family=best_ref.family,
        distances=tuple((ref.model_name, gap) for ref, gap in scored),
        trained_verdict=verdict,
        baseline_deviation=baseline_deviation,
    )
