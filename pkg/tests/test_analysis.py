"""Report assembly, stage geometry, residual comparison, classification."""

import math

import numpy as np
import pytest

from chirascope.analysis import (
    Fingerprint,
    ModelReport,
    analyze_model,
    classify,
    compare_reports,
    fingerprint,
    random_direction_baseline,
    stage_positions,
)
from chirascope.chirality import LayerSimilarity
from chirascope.errors import (
    EmptyReferenceSetError,
    LayerSetMismatchError,
    NoAnalyzableLayersError,
    UnassignedStageError,
)
from conftest import VGG16_TABLE, make_layer, naive_layer_similarity


def small_layers(rng_np, count=3, stage_of=lambda i: i + 1):
    layers = []
    for i in range(count):
        data = rng_np.standard_normal((3, 2, 3, 3))
        layers.append(make_layer(data, name=f"conv{i}.weight", stage=stage_of(i)))
    return layers


def sim(name, stage, value, flipped=True, count=3, dim=18):
    return LayerSimilarity(name, stage, count, dim, value, flipped)


def report_of(values_by_stage, flipped=True, name="m", family="unknown"):
    layers = tuple(
        sim(f"l{i}", stage, value, flipped=flipped)
        for i, (stage, value) in enumerate(values_by_stage)
    )
    return ModelReport(model_name=name, family=family, flipped=flipped, layers=layers)


def test_analyze_model_values_match_oracle(rng_np):
    layers = small_layers(rng_np)
    report = analyze_model(layers, model_name="toy")
    assert report.model_name == "toy"
    assert report.flipped
    assert len(report.layers) == 3
    for layer, measured in zip(layers, report.layers):
        want = naive_layer_similarity(layer.kernels(), flipped=True)
        assert measured.value == pytest.approx(want, abs=1e-12)
        assert measured.layer_name == layer.name
        assert measured.stage == layer.stage


def test_analyze_model_skips_narrow_layers_when_flipping(rng_np):
    layers = small_layers(rng_np, count=2)
    narrow = make_layer(rng_np.standard_normal((2, 4, 1, 1)), name="pw.weight", stage=2)
    report = analyze_model(layers + [narrow])
    assert [s.layer_name for s in report.skipped] == ["pw.weight"]
    assert report.skipped[0].reason == "kernel width 1 cannot be flipped"
    assert [l.layer_name for l in report.layers] == ["conv0.weight", "conv1.weight"]


def test_analyze_model_noflip_measures_narrow_layers(rng_np):
    narrow = make_layer(rng_np.standard_normal((2, 4, 1, 1)), name="pw.weight", stage=2)
    report = analyze_model([narrow], flipped=False)
    assert report.skipped == ()
    assert report.layers[0].flipped is False


def test_analyze_model_requires_analyzable_layers(rng_np):
    with pytest.raises(NoAnalyzableLayersError):
        analyze_model([])
    narrow = make_layer(rng_np.standard_normal((2, 4, 1, 1)), name="pw.weight")
    with pytest.raises(NoAnalyzableLayersError, match="1 skipped"):
        analyze_model([narrow])


def test_analyze_model_stage_means_are_plain_averages(rng_np):
    layers = small_layers(rng_np, count=4, stage_of=lambda i: 2 if i < 2 else 5)
    report = analyze_model(layers)
    values = [l.value for l in report.layers]
    assert set(report.stage_means) == {2, 5}
    assert report.stage_means[2] == (values[0] + values[1]) / 2
    assert report.stage_means[5] == (values[2] + values[3]) / 2


def test_analyze_model_parallelism_does_not_change_results(rng_np, monkeypatch):
    layers = small_layers(rng_np, count=6, stage_of=lambda i: (i % 5) + 1)
    monkeypatch.setenv("CHIRASCOPE_THREADS", "1")
    serial = analyze_model(layers)
    monkeypatch.setenv("CHIRASCOPE_THREADS", "6")
    threaded = analyze_model(layers)
    assert serial == threaded


def test_analyze_model_rejects_bad_thread_setting(rng_np, monkeypatch):
    layers = small_layers(rng_np, count=1)
    monkeypatch.setenv("CHIRASCOPE_THREADS", "two")
    with pytest.raises(ValueError, match="CHIRASCOPE_THREADS"):
        analyze_model(layers)
    monkeypatch.setenv("CHIRASCOPE_THREADS", "-3")
    with pytest.raises(ValueError, match=">= 0"):
        analyze_model(layers)


def test_report_validates_construction():
    layers = (sim("a", 1, 0.5), sim("b", 1, 0.3))
    report = ModelReport(model_name="m", family="vgg", flipped=True, layers=layers)
    assert report.stage_means == {1: (0.5 + 0.3) / 2}
    with pytest.raises(ValueError, match="stage_means"):
        ModelReport(
            model_name="m", family="vgg", flipped=True, layers=layers,
            stage_means={1: 0.9},
        )
    with pytest.raises(ValueError, match="duplicate"):
        ModelReport(
            model_name="m", family="vgg", flipped=True,
            layers=(sim("a", 1, 0.5), sim("a", 2, 0.3)),
        )
    with pytest.raises(ValueError, match="flip mode"):
        ModelReport(
            model_name="m", family="vgg", flipped=False, layers=layers,
        )
    with pytest.raises(ValueError, match="at least one"):
        ModelReport(model_name="m", family="vgg", flipped=True, layers=())


def test_stage_positions_single_and_double():
    report = report_of([(2, 0.4)])
    rows = stage_positions(report)
    assert [(r.stage, r.x, r.y) for r in rows] == [(2, 2.5, 0.4)]
    report = report_of([(3, 0.4), (3, 0.2)])
    assert [r.x for r in stage_positions(report)] == [3.25, 3.75]


def test_stage_positions_vgg16_stage3_thirds():
    stages = [stage for _, _, stage, _ in VGG16_TABLE]
    report = report_of([(s, 0.1) for s in stages])
    xs = [r.x for r in stage_positions(report) if r.stage == 3]
    assert xs == pytest.approx([3 + 1 / 6, 3 + 1 / 2, 3 + 5 / 6])


def test_stage_positions_ordering_and_bounds(rng_np):
    stages = [5, 1, 3, 1, 5, 5]
    report = report_of([(s, float(v)) for s, v in zip(stages, rng_np.uniform(0.1, 0.9, 6))])
    rows = stage_positions(report)
    assert [r.stage for r in rows] == sorted(stages)
    for row in rows:
        assert row.stage < row.x < row.stage + 1
    by_stage = {}
    for row in rows:
        by_stage.setdefault(row.stage, []).append(row.x)
    for xs in by_stage.values():
        assert xs == sorted(xs)


def test_stage_positions_requires_stages():
    layers = (sim("a", None, 0.5),)
    report = ModelReport(model_name="m", family="unknown", flipped=True, layers=layers)
    with pytest.raises(UnassignedStageError, match="'a'"):
        stage_positions(report)


def test_compare_reports_self_is_zero(rng_np):
    layers = small_layers(rng_np)
    report = analyze_model(layers)
    result = compare_reports(report, report)
    assert result.residual.total == 0.0
    assert not result.residual.chirality_present
    assert (result.decreasing, result.increasing, result.unchanged) == (0, 0, 3)


def test_compare_reports_counts_directions():
    untrained = report_of([(1, 0.50), (2, 0.40), (3, 0.30)])
    trained = report_of([(1, 0.48), (2, 0.40), (3, 0.31)])
    result = compare_reports(untrained, trained)
    assert result.residual.total == pytest.approx(0.03, abs=1e-15)
    assert (result.decreasing, result.increasing, result.unchanged) == (1, 1, 1)
    assert result.residual.per_layer[0].residual == pytest.approx(0.02, abs=1e-15)


def test_compare_reports_is_symmetric_in_total():
    a = report_of([(1, 0.50), (2, 0.40)])
    b = report_of([(1, 0.43), (2, 0.49)])
    assert compare_reports(a, b).residual.total == compare_reports(b, a).residual.total


def test_compare_reports_rejects_name_mismatch():
    a = report_of([(1, 0.5), (2, 0.4)])
    layers = (sim("l0", 1, 0.5), sim("other", 2, 0.4))
    b = ModelReport(model_name="m", family="unknown", flipped=True, layers=layers)
    with pytest.raises(LayerSetMismatchError, match="other"):
        compare_reports(a, b)


def test_compare_reports_rejects_shape_mismatch():
    a = report_of([(1, 0.5)])
    b = ModelReport(
        model_name="m", family="unknown", flipped=True,
        layers=(sim("l0", 1, 0.5, dim=27),),
    )
    with pytest.raises(LayerSetMismatchError, match="shapes"):
        compare_reports(a, b)


def test_compare_reports_rejects_flip_mix():
    a = report_of([(1, 0.5)])
    b = report_of([(1, 0.5)], flipped=False)
    with pytest.raises(LayerSetMismatchError, match="flip mode"):
        compare_reports(a, b)


def test_fingerprint_copies_stage_means():
    report = report_of([(1, 0.5), (1, 0.3), (4, 0.2)], name="q", family="vgg")
    fp = fingerprint(report)
    assert fp.model_name == "q"
    assert fp.family == "vgg"
    assert fp.vector == {1: 0.4, 4: 0.2}
    assert fp.trained is None


def test_fingerprint_requires_stage_means():
    layers = (sim("a", None, 0.5),)
    report = ModelReport(model_name="m", family="unknown", flipped=True, layers=layers)
    with pytest.raises(UnassignedStageError):
        fingerprint(report)


def test_fingerprint_validates_vector():
    with pytest.raises(ValueError, match="outside"):
        Fingerprint(model_name="m", family="vgg", vector={1: 1.5})
    with pytest.raises(ValueError, match="stage"):
        Fingerprint(model_name="m", family="vgg", vector={7: 0.5})
    with pytest.raises(ValueError, match="at least one"):
        Fingerprint(model_name="m", family="vgg", vector={})


def baseline_dims(scale=1.0, count=4, dim=576):
    return [(dim, scale * random_direction_baseline(dim)) for _ in range(count)]


def test_classify_exact_reference_wins():
    query = Fingerprint("q", "unknown", {1: 0.4, 2: 0.3})
    refs = [
        Fingerprint("vgg16-trained", "vgg", {1: 0.4, 2: 0.3}),
        Fingerprint("alexnet-trained", "alexnet", {1: 0.9, 2: 0.8}),
    ]
    result = classify(query, refs, baseline_dims())
    assert result.best_reference == "vgg16-trained"
    assert result.best_family == "vgg"
    assert dict(result.distances)["vgg16-trained"] == 0.0


def test_classify_distance_uses_shared_stages_only():
    query = Fingerprint("q", "unknown", {2: 0.3, 3: 0.2})
    ref = Fingerprint("r", "vgg", {3: 0.5, 4: 0.9})
    result = classify(query, [ref], baseline_dims())
    assert dict(result.distances)["r"] == pytest.approx(0.3)


def test_classify_skips_disjoint_refs_and_errors_when_all_are():
    query = Fingerprint("q", "unknown", {1: 0.4})
    disjoint = Fingerprint("d", "resnet", {5: 0.2})
    usable = Fingerprint("u", "vgg", {1: 0.5})
    result = classify(query, [disjoint, usable], baseline_dims())
    assert [name for name, _ in result.distances] == ["u"]
    with pytest.raises(EmptyReferenceSetError, match="shares a stage"):
        classify(query, [disjoint], baseline_dims())
    with pytest.raises(EmptyReferenceSetError, match="empty"):
        classify(query, [], baseline_dims())


def test_classify_breaks_ties_lexicographically():
    # 0.25 above and below: both gaps are binary-exact, a true tie
    query = Fingerprint("q", "unknown", {1: 0.5})
    refs = [
        Fingerprint("zebra", "resnet", {1: 0.75}),
        Fingerprint("aardvark", "vgg", {1: 0.25}),
    ]
    result = classify(query, refs, baseline_dims())
    assert result.best_reference == "aardvark"
    assert result.best_family == "vgg"


def test_classify_argmin_stable_under_worse_reference():
    query = Fingerprint("q", "unknown", {1: 0.4, 3: 0.1})
    refs = [Fingerprint("close", "vgg", {1: 0.41, 3: 0.1})]
    first = classify(query, refs, baseline_dims())
    refs.append(Fingerprint("far", "alexnet", {1: 0.9, 3: 0.9}))
    second = classify(query, refs, baseline_dims())
    assert second.best_reference == first.best_reference == "close"


def test_classify_verdicts_follow_deviation():
    query = Fingerprint("q", "unknown", {1: 0.4})
    refs = [Fingerprint("r", "vgg", {1: 0.4})]
    untrained = classify(query, refs, baseline_dims(scale=1.0))
    assert untrained.trained_verdict == "untrained"
    assert untrained.baseline_deviation == pytest.approx(0.0, abs=1e-15)
    trained = classify(query, refs, baseline_dims(scale=2.0))
    assert trained.trained_verdict == "trained"
    assert trained.baseline_deviation == pytest.approx(1.0)
    middle = classify(query, refs, baseline_dims(scale=1.3))
    assert middle.trained_verdict == "inconclusive"
    assert middle.baseline_deviation == pytest.approx(0.3)


def test_classify_thresholds_are_adjustable():
    query = Fingerprint("q", "unknown", {1: 0.4})
    refs = [Fingerprint("r", "vgg", {1: 0.4})]
    result = classify(query, refs, baseline_dims(scale=1.3), untrained_threshold=0.4)
    assert result.trained_verdict == "untrained"
    with pytest.raises(ValueError, match="thresholds"):
        classify(query, refs, baseline_dims(), untrained_threshold=0.9, trained_threshold=0.1)
    with pytest.raises(ValueError, match="per_layer_dims"):
        classify(query, refs, [])


def test_random_direction_baseline_formula():
    assert random_direction_baseline(576) == pytest.approx(
        math.sqrt(2.0 / (math.pi * 576.0))
    )
    assert random_direction_baseline(4) == 0.5 * random_direction_baseline(1)
    with pytest.raises(ValueError):
        random_direction_baseline(0)
