"""Command-line front end.

Subcommands:

  analyze      measure one container and write a model report
  synth-init   synthesize untrained weights for a known architecture
  residual     compare two containers layer-by-layer
  fingerprint  match a report against reference fingerprints
  plotdata     turn reports into stage-stretched CSV plot rows

Human summaries go to standard output, diagnostics to standard error,
and structured results to the --out path. Outputs carry no timestamps
unless --stamp is given, so reruns on identical inputs are
byte-identical. Exit codes: 0 success, 2 unreadable or invalid input,
3 nothing analyzable, 4 layer sets disagree, 5 unusable reference set,
1 any other measurement failure.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from datetime import datetime, timezone
from pathlib import Path

from chirascope import __version__
from chirascope.analysis import (
    TRAINED_THRESHOLD,
    UNTRAINED_THRESHOLD,
    ModelReport,
    analyze_model,
    classify,
    compare_reports,
    fingerprint,
    stage_positions,
)
from chirascope.archs import INIT_METHODS, SUPPORTED_ARCHS, synth_model
from chirascope.errors import (
    ChirascopeError,
    ContainerError,
    EmptyReferenceSetError,
    LayerSetMismatchError,
    ManifestError,
    NoAnalyzableLayersError,
    ReportError,
    UnassignedStageError,
    UnknownArchitectureError,
)
from chirascope.reports import (
    comparison_to_dict,
    file_digest,
    fingerprint_from_dict,
    fingerprint_to_dict,
    match_to_dict,
    multi_plot_csv,
    read_document,
    report_from_dict,
    report_to_dict,
    write_document,
)
from chirascope.weights_io import (
    FAMILIES,
    extract_conv_layers,
    read_container,
    read_manifest,
    write_container,
    write_manifest,
)

#: Accepted spellings for each initialization method.
_METHOD_ALIASES = {
    "kaiming": "kaiming-normal",
    "xavier": "xavier-normal",
    "normal": "plain-normal",
    "plain": "plain-normal",
}
_METHOD_CHOICES = tuple(INIT_METHODS) + tuple(_METHOD_ALIASES)


def _warn(message: object) -> None:
    print(f"warning: {message}", file=sys.stderr)


def _load_layers(weights_path: str, manifest_path: str | None, suffix: str):
    """Read a container plus optional manifest, routing warnings to stderr."""
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        tensor_map = read_container(weights_path)
        manifest = read_manifest(manifest_path) if manifest_path else None
        layers = extract_conv_layers(tensor_map, manifest=manifest, suffix=suffix)
    for w in caught:
        _warn(w.message)
    return tensor_map, manifest, layers


def _resolve_identity(flag_name, flag_family, manifest, tensor_map) -> tuple[str, str]:
    """Model name and family from flags, then manifest, then metadata."""
    metadata = tensor_map.metadata or {}
    name = flag_name
    if name is None and manifest is not None:
        name = manifest.model_name
    if name is None:
        name = metadata.get("model_name")
    family = flag_family
    if family is None and manifest is not None:
        family = manifest.family
    if family is None:
        candidate = metadata.get("family")
        if candidate in FAMILIES:
            family = candidate
    return name or "unknown", family or "unknown"


def _maybe_stamp(doc: dict, stamp: bool) -> dict:
    if stamp:
        doc["generated_at"] = datetime.now(timezone.utc).isoformat()
    return doc


def _report_for_container(
    weights_path: str,
    manifest_path: str | None,
    suffix: str,
    flipped: bool,
    flag_name: str | None = None,
    flag_family: str | None = None,
) -> ModelReport:
    tensor_map, manifest, layers = _load_layers(weights_path, manifest_path, suffix)
    name, family = _resolve_identity(flag_name, flag_family, manifest, tensor_map)
    return analyze_model(
        layers,
        flipped=flipped,
        model_name=name,
        family=family,
        input_digest=file_digest(weights_path),
    )


def _print_stage_table(report: ModelReport) -> None:
    print("stage  layers  mean_similarity")
    if not report.stage_means:
        print("(no stage assignments)")
        return
    for stage in sorted(report.stage_means):
        count = sum(1 for layer in report.layers if layer.stage == stage)
        print(f"{stage:>5}  {count:>6}  {report.stage_means[stage]:.6f}")


def _cmd_analyze(args: argparse.Namespace) -> int:
    report = _report_for_container(
        args.weights,
        args.manifest,
        args.suffix,
        flipped=not args.no_flip,
        flag_name=args.model_name,
        flag_family=args.family,
    )
    doc = _maybe_stamp(report_to_dict(report), args.stamp)
    write_document(doc, args.out)
    mode = "flipped" if report.flipped else "no-flip"
    print(f"model: {report.model_name}  family: {report.family}  mode: {mode}")
    print(f"layers measured: {len(report.layers)}  skipped: {len(report.skipped)}")
    _print_stage_table(report)
    print(f"report written to: {args.out}")
    return 0


def _cmd_synth(args: argparse.Namespace) -> int:
    method = _METHOD_ALIASES.get(args.method, args.method)
    tensor_map, manifest = synth_model(args.arch, method, args.seed)
    write_container(tensor_map, args.out)
    manifest_out = args.manifest_out or f"{args.out}.manifest.json"
    write_manifest(manifest, manifest_out)
    size = Path(args.out).stat().st_size
    print(
        f"synthesized {args.arch} ({method}, seed {args.seed}): "
        f"{len(tensor_map.entries)} tensors, {size} bytes"
    )
    print(f"weights written to: {args.out}")
    print(f"manifest written to: {manifest_out}")
    return 0


def _cmd_residual(args: argparse.Namespace) -> int:
    flipped = not args.no_flip
    trained = _report_for_container(
        args.trained, args.trained_manifest, args.suffix, flipped
    )
    untrained = _report_for_container(
        args.untrained, args.untrained_manifest, args.suffix, flipped
    )
    result = compare_reports(untrained, trained)
    doc = _maybe_stamp(comparison_to_dict(result), args.stamp)
    write_document(doc, args.out)
    residual = result.residual
    present = "yes" if residual.chirality_present else "no"
    print(
        f"untrained: {result.untrained_name}  trained: {result.trained_name}  "
        f"layers: {residual.layer_count}"
    )
    print(f"total residual: {residual.total:.6f}  chirality present: {present}")
    print(
        f"direction: {result.decreasing} decreasing, "
        f"{result.increasing} increasing, {result.unchanged} unchanged"
    )
    print(f"residual report written to: {args.out}")
    return 0


def _load_references(refs_dir: str) -> list:
    root = Path(refs_dir)
    if not root.is_dir():
        raise ValueError(f"reference directory {refs_dir!r} does not exist")
    refs = []
    skipped = 0
    for path in sorted(root.glob("*.json")):
        try:
            refs.append(fingerprint_from_dict(read_document(path)))
        except ReportError as exc:
            skipped += 1
            _warn(f"skipping reference {path.name}: {exc}")
    if not refs:
        raise EmptyReferenceSetError(
            f"no usable reference fingerprints in {refs_dir!r} "
            f"({skipped} files skipped)"
        )
    return refs


def _cmd_fingerprint(args: argparse.Namespace) -> int:
    if args.refs is None and args.save_fingerprint is None:
        raise ValueError("nothing to do: pass --refs and/or --save-fingerprint")
    if args.refs is not None and args.out is None:
        raise ValueError("--out is required when classifying against --refs")
    report = report_from_dict(read_document(args.report))
    query = fingerprint(report)
    if args.save_fingerprint:
        write_document(
            _maybe_stamp(fingerprint_to_dict(query), args.stamp),
            args.save_fingerprint,
        )
        print(f"fingerprint written to: {args.save_fingerprint}")
    if args.refs is None:
        return 0
    references = _load_references(args.refs)
    dims = [(layer.kernel_dim, layer.value) for layer in report.layers]
    result = classify(
        query,
        references,
        dims,
        untrained_threshold=args.untrained_threshold,
        trained_threshold=args.trained_threshold,
    )
    doc = _maybe_stamp(
        match_to_dict(result, args.untrained_threshold, args.trained_threshold),
        args.stamp,
    )
    write_document(doc, args.out)
    best_distance = dict(result.distances)[result.best_reference]
    print(
        f"query: {result.query_name}  best match: {result.best_reference} "
        f"(family {result.best_family})  distance: {best_distance:.6f}"
    )
    print(
        f"verdict: {result.trained_verdict}  "
        f"baseline deviation: {result.baseline_deviation:.6f}"
    )
    print(f"match written to: {args.out}")
    return 0


def _cmd_plotdata(args: argparse.Namespace) -> int:
    named_rows = []
    total = 0
    for path in args.reports:
        report = report_from_dict(read_document(path))
        rows = stage_positions(report)
        named_rows.append((report.model_name, rows))
        total += len(rows)
    Path(args.out).write_text(multi_plot_csv(named_rows), encoding="utf-8")
    print(f"wrote {total} rows for {len(named_rows)} models to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chirascope",
        description="Measure kernel mirror-similarity fingerprints of CNN weights.",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("analyze", help="measure a container and write a report")
    p.add_argument("weights", help="tensor container path")
    p.add_argument("--manifest", help="layer manifest path")
    p.add_argument("--out", required=True, help="report document path")
    p.add_argument(
        "--no-flip",
        action="store_true",
        help="compare kernels with themselves instead of their mirrors",
    )
    p.add_argument(
        "--suffix",
        default="weight",
        help="tensor-name suffix filter when no manifest is given (default: weight)",
    )
    p.add_argument("--model-name", help="override the model name")
    p.add_argument("--family", choices=FAMILIES, help="override the model family")
    p.add_argument("--stamp", action="store_true", help="embed a generation timestamp")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("synth-init", help="synthesize untrained weights")
    p.add_argument("arch", choices=SUPPORTED_ARCHS, help="architecture id")
    p.add_argument(
        "--method",
        choices=_METHOD_CHOICES,
        default="kaiming-normal",
        help="initialization method (default: kaiming-normal)",
    )
    p.add_argument("--seed", type=int, default=0, help="generator seed (default: 0)")
    p.add_argument("--out", required=True, help="container output path")
    p.add_argument(
        "--manifest-out",
        help="manifest output path (default: <out>.manifest.json)",
    )
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("residual", help="compare trained vs untrained containers")
    p.add_argument("trained", help="trained container path")
    p.add_argument("untrained", help="untrained container path")
    p.add_argument("--trained-manifest", help="manifest for the trained container")
    p.add_argument("--untrained-manifest", help="manifest for the untrained container")
    p.add_argument("--out", required=True, help="residual document path")
    p.add_argument(
        "--no-flip",
        action="store_true",
        help="compare kernels with themselves instead of their mirrors",
    )
    p.add_argument(
        "--suffix",
        default="weight",
        help="tensor-name suffix filter when no manifest is given (default: weight)",
    )
    p.add_argument("--stamp", action="store_true", help="embed a generation timestamp")
    p.set_defaults(func=_cmd_residual)

    p = sub.add_parser("fingerprint", help="classify a report against references")
    p.add_argument("report", help="model report document path")
    p.add_argument("--refs", help="directory of reference fingerprint documents")
    p.add_argument("--out", help="match document path (required with --refs)")
    p.add_argument("--save-fingerprint", help="also write the query's fingerprint here")
    p.add_argument(
        "--untrained-threshold",
        type=float,
        default=UNTRAINED_THRESHOLD,
        help=f"deviation below this reads as untrained (default: {UNTRAINED_THRESHOLD})",
    )
    p.add_argument(
        "--trained-threshold",
        type=float,
        default=TRAINED_THRESHOLD,
        help=f"deviation above this reads as trained (default: {TRAINED_THRESHOLD})",
    )
    p.add_argument("--stamp", action="store_true", help="embed a generation timestamp")
    p.set_defaults(func=_cmd_fingerprint)

    p = sub.add_parser("plotdata", help="export stage-stretched plot rows as CSV")
    p.add_argument("reports", nargs="+", help="model report document paths")
    p.add_argument("--out", required=True, help="CSV output path")
    p.set_defaults(func=_cmd_plotdata)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (
        ContainerError,
        ManifestError,
        ReportError,
        UnknownArchitectureError,
        UnassignedStageError,
        ValueError,
        OSError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NoAnalyzableLayersError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except LayerSetMismatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except EmptyReferenceSetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 5
    except ChirascopeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
