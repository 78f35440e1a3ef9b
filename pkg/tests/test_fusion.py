from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from playguide.catalog import ObjectCatalog
from playguide.fusion import (
    AttentionCue,
    FusionError,
    FusionParams,
    apply_cue,
    apply_cues,
    init_distribution,
    ranked_objects,
)

from .conftest import make_catalog


def visual(object_id: str, t: int = 0, person: str = "child") -> AttentionCue:
    return AttentionCue(timestamp_ms=t, person=person, modality="visual", object_id=object_id)


def spoken(object_id: str, t: int = 0, person: str = "parent") -> AttentionCue:
    return AttentionCue(timestamp_ms=t, person=person, modality="spoken", object_id=object_id)


def test_init_uniform_four_objects() -> None:
    dist = init_distribution(make_catalog("a", "b", "c", "d"))
    assert all(w == pytest.approx(0.25) for w in dist.weights.values())


def test_init_uniform_eleven_objects(reference_resources) -> None:
    dist = init_distribution(reference_resources.catalog)
    assert all(w == pytest.approx(1 / 11) for w in dist.weights.values())
    assert sum(dist.weights.values()) == pytest.approx(1.0, abs=1e-12)


def test_init_single_object_degenerate() -> None:
    dist = init_distribution(make_catalog("only"))
    assert dist.weights == {"only": 1.0}


def test_init_empty_catalog_rejected() -> None:
    with pytest.raises(FusionError):
        init_distribution(ObjectCatalog(objects=()))


def test_apply_cue_matches_arithmetic_oracle() -> None:
    # Oracle: add the increment to the target, divide everything by 1.2.
    dist = init_distribution(make_catalog("ball", "flower", "dog"))
    params = FusionParams(alpha=0.2, beta=0.2)
    out = apply_cue(dist, visual("ball"), params)
    third = 1.0 / 3.0
    assert out.weights["ball"] == pytest.approx((third + 0.2) / 1.2, abs=1e-15)
    assert out.weights["flower"] == pytest.approx(third / 1.2, abs=1e-15)
    assert out.weights["dog"] == pytest.approx(third / 1.2, abs=1e-15)
    assert out.weights["ball"] == pytest.approx(0.4444, abs=5e-5)
    assert out.weights["flower"] == pytest.approx(0.2778, abs=5e-5)


def test_apply_cue_single_object_fixed_point() -> None:
    dist = init_distribution(make_catalog("only"))
    out = apply_cue(dist, visual("only"), FusionParams())
    assert out.weights["only"] == pytest.approx(1.0, abs=1e-15)


def test_apply_cue_target_rises_others_fall() -> None:
    dist = init_distribution(make_catalog("a", "b", "c"))
    out = apply_cue(dist, spoken("b"), FusionParams())
    assert out.weights["b"] > dist.weights["b"]
    assert out.weights["a"] < dist.weights["a"]
    assert out.weights["c"] < dist.weights["c"]


def test_apply_cue_unknown_object() -> None:
    dist = init_distribution(make_catalog("a"))
    with pytest.raises(FusionError, match="zebra"):
        apply_cue(dist, visual("zebra"), FusionParams())


def test_repeated_cues_match_closed_form() -> None:
    # w_t = 1 - (1 - w_0) * (1 + alpha)^(-t) for repeated cues on one object.
    alpha = 0.05
    params = FusionParams(alpha=alpha, beta=0.15)
    dist = init_distribution(make_catalog("a", "b", "c", "d", "e"))
    w0 = dist.weights["a"]
    for t in range(1, 101):
        dist = apply_cue(dist, visual("a", t=t), params)
        expected = 1.0 - (1.0 - w0) * (1.0 + alpha) ** (-t)
        assert dist.weights["a"] == pytest.approx(expected, abs=1e-9)


def test_apply_cues_empty_list_returns_input_unchanged() -> None:
    dist = init_distribution(make_catalog("a", "b"))
    assert apply_cues(dist, [], FusionParams()) is dist


def test_apply_cues_modality_symmetry_when_alpha_equals_beta() -> None:
    params = FusionParams(alpha=0.1, beta=0.1)
    dist = init_distribution(make_catalog("ball", "dog"))
    mixed = apply_cues(dist, [visual("ball", 0), spoken("ball", 1)], params)
    double_visual = apply_cues(dist, [visual("ball", 0), visual("ball", 1)], params)
    assert mixed.weights == double_visual.weights


def test_apply_cues_equals_sequential_fold_oracle() -> None:
    params = FusionParams(alpha=0.07, beta=0.21)
    catalog = make_catalog("a", "b", "c")
    cues = [
        visual("a", 0),
        spoken("b", 10),
        visual("c", 20),
        visual("a", 30),
        spoken("c", 40),
        spoken("a", 50),
    ]
    folded = apply_cues(init_distribution(catalog), cues, params)
    oracle = init_distribution(catalog)
    for cue in cues:
        oracle = apply_cue(oracle, cue, params)
    assert folded.weights == oracle.weights  # bit-identical fold equivalence


def test_apply_cues_rejects_out_of_order_timestamps() -> None:
    dist = init_distribution(make_catalog("a"))
    with pytest.raises(FusionError, match="out-of-order"):
        apply_cues(dist, [visual("a", 100), visual("a", 50)], FusionParams())


def test_ranked_uniform_keeps_catalog_order() -> None:
    dist = init_distribution(make_catalog("a", "b", "c"))
    assert [object_id for object_id, _ in ranked_objects(dist)] == ["a", "b", "c"]


def test_ranked_sorts_by_weight() -> None:
    from playguide.fusion import AttentionDistribution

    dist = AttentionDistribution(weights={"a": 0.5, "b": 0.3, "c": 0.2})
    assert [object_id for object_id, _ in ranked_objects(dist)] == ["a", "b", "c"]
    dist = AttentionDistribution(weights={"a": 0.2, "b": 0.3, "c": 0.5})
    assert [object_id for object_id, _ in ranked_objects(dist)] == ["c", "b", "a"]


def test_ranked_after_cue_matches_oracle_example() -> None:
    dist = init_distribution(make_catalog("ball", "flower", "dog"))
    out = apply_cue(dist, visual("ball"), FusionParams(alpha=0.2, beta=0.2))
    assert [object_id for object_id, _ in ranked_objects(out)] == ["ball", "flower", "dog"]


@given(
    n_objects=st.integers(min_value=1, max_value=11),
    seq=st.lists(st.tuples(st.integers(0, 10), st.booleans()), max_size=60),
    alpha=st.floats(min_value=1e-4, max_value=1.0),
    beta=st.floats(min_value=1e-4, max_value=1.0),
)
@settings(max_examples=60, deadline=None)
def test_normalization_invariant_under_random_cues(n_objects, seq, alpha, beta) -> None:
    catalog = make_catalog(*[f"o{i}" for i in range(n_objects)])
    params = FusionParams(alpha=alpha, beta=beta)
    dist = init_distribution(catalog)
    for t, (index, is_visual) in enumerate(seq):
        object_id = f"o{index % n_objects}"
        cue = visual(object_id, t) if is_visual else spoken(object_id, t)
        dist = apply_cue(dist, cue, params)
        assert abs(sum(dist.weights.values()) - 1.0) <= 1e-9
        assert min(dist.weights.values()) >= 0.0


def test_monotone_saturation_gain_strictly_decreasing() -> None:
    # Repeated cues on one object: per-step gain shrinks geometrically.
    params = FusionParams(alpha=0.05, beta=0.15)
    dist = init_distribution(make_catalog(*[f"o{i}" for i in range(6)]))
    previous_gain = None
    ratio = 1.0 / 1.05
    for t in range(1, 120):
        before = dist.weights["o0"]
        dist = apply_cue(dist, visual("o0", t), params)
        gain = dist.weights["o0"] - before
        assert gain > 0
        if previous_gain is not None:
            assert gain < previous_gain
            assert gain / previous_gain == pytest.approx(ratio, rel=1e-9)
        previous_gain = gain
    assert 1.0 - dist.weights["o0"] == pytest.approx(
        (1.0 - 1.0 / 6.0) * ratio ** 119, rel=1e-9
    )


@given(
    permutation_seed=st.integers(0, 1000),
    seq=st.lists(st.tuples(st.integers(0, 4), st.booleans()), min_size=1, max_size=40),
)
@settings(max_examples=40, deadline=None)
def test_relabeling_equivariance(permutation_seed, seq) -> None:
    import random

    names = ["a", "b", "c", "d", "e"]
    shuffled = names[:]
    random.Random(permutation_seed).shuffle(shuffled)
    params = FusionParams()

    def run(order: list[str]) -> dict[str, float]:
        dist = init_distribution(make_catalog(*order))
        for t, (index, is_visual) in enumerate(seq):
            object_id = names[index]
            cue = visual(object_id, t) if is_visual else spoken(object_id, t)
            dist = apply_cue(dist, cue, params)
        return dist.weights

    assert run(names) == run(shuffled)  # same weights per object, any order
