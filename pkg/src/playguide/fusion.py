"""Joint attention distribution and its cue-driven update rule.

The distribution holds one normalized weight per catalog object. A cue
adds a modality-specific increment to its target object's weight and the
whole vector is divided by (1 + increment), so the vector stays a
probability distribution and repeated cues on one object saturate
geometrically instead of growing without bound.
"""
from __future__ import annotations

from dataclasses import dataclass

from .catalog import ObjectCatalog

# Per-cue increments. Spoken mentions are deliberately stronger than gaze
# samples; with two people gazing at 1 Hz each, a sustained shift of
# attention brings the first card for the new object onto the board in
# roughly 15-25 s (see the sensitivity simulation in the test suite).
DEFAULT_ALPHA = 0.0025
DEFAULT_BETA = 0.0075

DEFAULT_DEBOUNCE_MS = 1000

PERSONS = ("parent", "child")
MODALITY_VISUAL = "visual"
MODALITY_SPOKEN = "spoken"


class FusionError(ValueError):
    """Invalid cue or distribution input."""


@dataclass(frozen=True)
class FusionParams:
    alpha: float = DEFAULT_ALPHA
    beta: float = DEFAULT_BETA

    def __post_init__(self) -> None:
        if self.alpha <= 0 or self.beta <= 0:
            raise FusionError("cue increments must be positive")

    def increment(self, modality: str) -> float:
        if modality == MODALITY_VISUAL:
            return self.alpha
        if modality == MODALITY_SPOKEN:
            return self.beta
        raise FusionError(f"unknown cue modality {modality!r}")


@dataclass(frozen=True)
class AttentionCue:
    """One timestamped evidence event attributed to a person."""

    timestamp_ms: int
    person: str
    modality: str
    object_id: str


@dataclass(frozen=True)
class AttentionDistribution:
    """Normalized per-object weights; immutable snapshot.

    ``weights`` is keyed in catalog order, which downstream consumers rely
    on for deterministic tie-breaking.
    """

    weights: dict[str, float]
    last_update_ms: int = 0

    def weight(self, object_id: str) -> float:
        return self.weights[object_id]

    def items(self) -> list[tuple[str, float]]:
        return list(self.weights.items())


def init_distribution(catalog: ObjectCatalog) -> AttentionDistribution:
    """Uniform distribution over the catalog (no cold-start bias)."""
    if len(catalog) == 0:
        raise FusionError("cannot initialize distribution over empty catalog")
    share = 1.0 / len(catalog)
    return AttentionDistribution(weights={object_id: share for object_id in catalog.ids()})


def apply_cue(
    dist: AttentionDistribution, cue: AttentionCue, params: FusionParams
) -> AttentionDistribution:
    """Apply one cue: bump the target weight, renormalize everything."""
    if cue.object_id not in dist.weights:
        raise FusionError(f"cue for unknown object {cue.object_id!r}")
    inc = params.increment(cue.modality)
    scale = 1.0 + inc
    weights = {
        object_id: (w + inc) / scale if object_id == cue.object_id else w / scale
        for object_id, w in dist.weights.items()
    }
    return AttentionDistribution(weights=weights, last_update_ms=cue.timestamp_ms)


def apply_cues(
    dist: AttentionDistribution, cues: list[AttentionCue], params: FusionParams
) -> AttentionDistribution:
    """Left-fold of apply_cue over a time-ordered cue list."""
    previous: int | None = None
    for cue in cues:
        if previous is not None and cue.timestamp_ms < previous:
            raise FusionError(
                f"out-of-order cue timestamp {cue.timestamp_ms} after {previous}"
            )
        previous = cue.timestamp_ms
        dist = apply_cue(dist, cue, params)
    return dist


def ranked_objects(dist: AttentionDistribution) -> list[tuple[str, float]]:
    """Objects by descending weight; ties keep catalog order."""
    return sorted(dist.items(), key=lambda item: -item[1])
