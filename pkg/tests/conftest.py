from __future__ import annotations

import pytest

from playguide.catalog import (
    LemmaDictionary,
    ObjectCatalog,
    ObjectEntry,
    PhraseBank,
    PhraseCandidate,
)
from playguide.cues import Box, SceneLayout
from playguide.session import SessionConfig, SessionResources


@pytest.fixture(scope="session")
def reference_config() -> SessionConfig:
    return SessionConfig()


@pytest.fixture(scope="session")
def reference_resources(reference_config: SessionConfig) -> SessionResources:
    return reference_config.load()


def make_catalog(*object_ids: str) -> ObjectCatalog:
    return ObjectCatalog(
        objects=tuple(
            ObjectEntry(id=object_id, display_name=object_id.title(), name_lemmas=frozenset({object_id}))
            for object_id in object_ids
        )
    )


def make_bank(catalog: ObjectCatalog, candidates_per_object: int = 6) -> PhraseBank:
    entries = {}
    for entry in catalog.objects:
        entries[entry.id] = tuple(
            PhraseCandidate(
                object_id=entry.id,
                candidate_index=i,
                target_word_lemma=f"{entry.id}-word{i}",
                phrase_text=f"phrase {i} about the {entry.id}",
            )
            for i in range(candidates_per_object)
        )
    return PhraseBank(entries=entries)


def make_layout(catalog: ObjectCatalog) -> SceneLayout:
    n = len(catalog)
    boxes = {}
    for i, object_id in enumerate(catalog.ids()):
        x0 = i / n
        boxes[object_id] = Box(x0 + 0.01, 0.1, x0 + 1.0 / n - 0.01, 0.9)
    return SceneLayout(boxes=boxes)


def make_resources(*object_ids: str, candidates_per_object: int = 6) -> SessionResources:
    catalog = make_catalog(*object_ids)
    return SessionResources(
        catalog=catalog,
        bank=make_bank(catalog, candidates_per_object),
        dictionary=LemmaDictionary(surface_to_lemma={}),
        layout=make_layout(catalog),
    )
