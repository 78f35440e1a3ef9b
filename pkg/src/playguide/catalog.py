"""Object catalog, phrase bank, and lemma dictionary loading.

All three resources are line-oriented UTF-8 files with tab-separated
fields; lines starting with ``#`` are ignored. They are loaded once at
session start and treated as immutable afterwards.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path


class CatalogError(ValueError):
    """Malformed or inconsistent catalog / phrase bank / dictionary data."""


@dataclass(frozen=True)
class ObjectEntry:
    id: str
    display_name: str
    name_lemmas: frozenset[str]


@dataclass(frozen=True)
class ObjectCatalog:
    """The closed set of recognizable play objects, in file order.

    File order is stable across loads and is the tie-breaking order used
    everywhere downstream (ranking, apportionment).
    """

    objects: tuple[ObjectEntry, ...]

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for entry in self.objects:
            if not entry.id:
                raise CatalogError("catalog entry with empty id")
            if entry.id in seen:
                raise CatalogError(f"duplicate object id {entry.id!r}")
            if not entry.name_lemmas or not all(entry.name_lemmas):
                raise CatalogError(f"object {entry.id!r} has no name lemmas")
            seen.add(entry.id)

    def __len__(self) -> int:
        return len(self.objects)

    def __contains__(self, object_id: str) -> bool:
        return any(entry.id == object_id for entry in self.objects)

    def ids(self) -> tuple[str, ...]:
        return tuple(entry.id for entry in self.objects)

    def rank(self, object_id: str) -> int:
        """Catalog-order position, used for deterministic tie-breaking."""
        for i, entry in enumerate(self.objects):
            if entry.id == object_id:
                return i
        raise KeyError(object_id)

    def entry(self, object_id: str) -> ObjectEntry:
        for item in self.objects:
            if item.id == object_id:
                return item
        raise KeyError(object_id)

    def lemma_index(self) -> dict[str, str]:
        """Map every name lemma to its object id."""
        index: dict[str, str] = {}
        for entry in self.objects:
            for lemma in entry.name_lemmas:
                index[lemma] = entry.id
        return index


@dataclass(frozen=True)
class PhraseCandidate:
    object_id: str
    candidate_index: int
    target_word_lemma: str
    phrase_text: str


@dataclass(frozen=True)
class PhraseBank:
    """Ordered phrase candidates per object, indexed 0..k-1 without gaps."""

    entries: dict[str, tuple[PhraseCandidate, ...]]

    def candidates(self, object_id: str) -> tuple[PhraseCandidate, ...]:
        return self.entries[object_id]

    def candidate(self, object_id: str, index: int) -> PhraseCandidate:
        return self.entries[object_id][index]

    def capacity(self, object_id: str) -> int:
        return len(self.entries.get(object_id, ()))


@dataclass(frozen=True)
class LemmaDictionary:
    """Finite surface-form to lemma mapping with identity fallback."""

    surface_to_lemma: dict[str, str]

    def lemma(self, surface: str) -> str:
        return self.surface_to_lemma.get(surface, surface)


_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Split on whitespace and punctuation, folding to lowercase."""
    return _TOKEN_RE.findall(text.lower())


def lemmatize(tokens: list[str], dictionary: LemmaDictionary) -> list[str]:
    """Map each surface token to its lemma; unknown tokens pass through."""
    return [dictionary.lemma(token) for token in tokens]


def _data_lines(path: str | Path) -> list[tuple[int, str]]:
    lines: list[tuple[int, str]] = []
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        lines.append((lineno, line))
    return lines


def load_catalog(path: str | Path) -> ObjectCatalog:
    """Load and validate an object catalog file (`id<TAB>name<TAB>lemmas`)."""
    entries: list[ObjectEntry] = []
    for lineno, line in _data_lines(path):
        fields = line.split("\t")
        if len(fields) != 3:
            raise CatalogError(f"{path}:{lineno}: expected 3 tab-separated fields")
        object_id, display_name, lemma_csv = fields
        lemmas = frozenset(part.strip() for part in lemma_csv.split(",") if part.strip())
        if not lemmas:
            raise CatalogError(f"{path}:{lineno}: object {object_id!r} has no name lemmas")
        entries.append(ObjectEntry(id=object_id.strip(), display_name=display_name.strip(), name_lemmas=lemmas))
    if not entries:
        raise CatalogError(f"{path}: catalog file has no entries")
    return ObjectCatalog(objects=tuple(entries))


def load_phrase_bank(path: str | Path, catalog: ObjectCatalog) -> PhraseBank:
    """Load the phrase bank and check coverage/index contiguity per object."""
    raw: dict[str, list[PhraseCandidate]] = {}
    for lineno, line in _data_lines(path):
        fields = line.split("\t")
        if len(fields) != 4:
            raise CatalogError(f"{path}:{lineno}: expected 4 tab-separated fields")
        object_id, index_text, target_lemma, phrase_text = (field.strip() for field in fields)
        if object_id not in catalog:
            raise CatalogError(f"{path}:{lineno}: unknown object {object_id!r}")
        try:
            index = int(index_text)
        except ValueError:
            raise CatalogError(f"{path}:{lineno}: bad candidate index {index_text!r}") from None
        if not target_lemma:
            raise CatalogError(f"{path}:{lineno}: empty target word for {object_id!r}")
        raw.setdefault(object_id, []).append(
            PhraseCandidate(
                object_id=object_id,
                candidate_index=index,
                target_word_lemma=target_lemma,
                phrase_text=phrase_text,
            )
        )
    entries: dict[str, tuple[PhraseCandidate, ...]] = {}
    for entry in catalog.objects:
        candidates = sorted(raw.get(entry.id, []), key=lambda c: c.candidate_index)
        if not candidates:
            raise CatalogError(f"{path}: no phrase candidates for object {entry.id!r}")
        indices = [candidate.candidate_index for candidate in candidates]
        if indices != list(range(len(candidates))):
            raise CatalogError(
                f"{path}: candidate indices for {entry.id!r} are {indices}, expected 0..{len(candidates) - 1}"
            )
        entries[entry.id] = tuple(candidates)
    return PhraseBank(entries=entries)


def load_lemma_dictionary(path: str | Path) -> LemmaDictionary:
    """Load the surface-to-lemma dictionary (`surface<TAB>lemma`)."""
    mapping: dict[str, str] = {}
    for lineno, line in _data_lines(path):
        fields = line.split("\t")
        if len(fields) != 2:
            raise CatalogError(f"{path}:{lineno}: expected 2 tab-separated fields")
        surface, lemma = (field.strip() for field in fields)
        if not surface or not lemma:
            raise CatalogError(f"{path}:{lineno}: empty surface or lemma")
        mapping[surface] = lemma
    return LemmaDictionary(surface_to_lemma=mapping)
