"""Phrase-card board: proportional allocation, replacement, progress.

Card counts per object follow the attention distribution by
largest-remainder apportionment. Board updates are minimal-change: slots
keep their timers and use counts unless their object loses cards. A card
is swapped for the object's next candidate after its target word is used
``n_uses`` times or after ``t_display_ms`` on display.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .catalog import ObjectCatalog, PhraseBank
from .cues import TargetWordHit
from .fusion import AttentionDistribution


class BoardError(ValueError):
    """Allocation or reconciliation contract violation."""


@dataclass(frozen=True)
class ReplacementPolicy:
    n_uses: int = 2
    t_display_ms: int = 120_000
    board_size: int = 6

    def __post_init__(self) -> None:
        if self.n_uses <= 0 or self.t_display_ms <= 0 or self.board_size <= 0:
            raise BoardError("replacement policy values must be positive")


@dataclass(frozen=True)
class CardSlot:
    object_id: str
    candidate_index: int
    shown_since_ms: int
    uses: int = 0


@dataclass(frozen=True)
class BoardChange:
    action: str  # "remove" | "add"
    slot_index: int
    object_id: str
    candidate_index: int


@dataclass(frozen=True)
class CardBoard:
    """Displayed slots plus per-object rotation cursors."""

    slots: tuple[CardSlot, ...] = ()
    cursors: dict[str, int] | None = None

    def cursor(self, object_id: str) -> int:
        if self.cursors is None:
            return 0
        return self.cursors.get(object_id, 0)

    def count(self, object_id: str) -> int:
        return sum(1 for slot in self.slots if slot.object_id == object_id)

    def displayed_candidates(self, object_id: str) -> set[int]:
        return {slot.candidate_index for slot in self.slots if slot.object_id == object_id}

    def objects(self) -> set[str]:
        return {slot.object_id for slot in self.slots}


@dataclass(frozen=True)
class ProgressState:
    goal: int = 10
    achieved: int = 0

    def __post_init__(self) -> None:
        if self.goal <= 0 or self.achieved < 0:
            raise BoardError("invalid progress state")


def allocate(
    dist: AttentionDistribution,
    policy: ReplacementPolicy,
    bank: PhraseBank,
    catalog: ObjectCatalog,
) -> dict[str, int]:
    """Largest-remainder apportionment of board slots to objects.

    Quotas are board_size * weight; every object gets its quota floor, and
    leftover slots go to the largest fractional remainders, catalog order
    breaking ties. No object receives more cards than it has candidates;
    if caps bind, leftover slots cycle to the next-largest remainders.
    Objects with zero cards are omitted from the result.
    """
    quotas = {object_id: policy.board_size * dist.weight(object_id) for object_id in catalog.ids()}
    caps = {object_id: bank.capacity(object_id) for object_id in catalog.ids()}
    counts = {
        object_id: min(math.floor(quotas[object_id]), caps[object_id])
        for object_id in catalog.ids()
    }
    leftover = policy.board_size - sum(counts.values())
    by_remainder = sorted(
        catalog.ids(),
        key=lambda object_id: (-(quotas[object_id] - math.floor(quotas[object_id])), catalog.rank(object_id)),
    )
    while leftover > 0:
        progressed = False
        for object_id in by_remainder:
            if leftover == 0:
                break
            if counts[object_id] < caps[object_id]:
                counts[object_id] += 1
                leftover -= 1
                progressed = True
        if not progressed:
            break  # every object at its candidate cap; board stays short
    return {object_id: n for object_id, n in counts.items() if n > 0}


def _next_candidate(
    cursors: dict[str, int], bank: PhraseBank, object_id: str, taken: set[int]
) -> int:
    """Pick the object's cursor candidate, skipping ones already on display."""
    capacity = bank.capacity(object_id)
    start = cursors.get(object_id, 0)
    for step in range(capacity):
        index = (start + step) % capacity
        if index not in taken:
            cursors[object_id] = (index + 1) % capacity
            return index
    raise BoardError(f"no free candidate for object {object_id!r}")


def reconcile(
    board: CardBoard,
    allocation: dict[str, int],
    now_ms: int,
    bank: PhraseBank,
) -> tuple[CardBoard, list[BoardChange]]:
    """Minimally adjust the board to match the allocation.

    Slots whose object keeps at least its current count are untouched
    (timers and use counts intact). Surplus slots go oldest-shown-first.
    New slots take each object's next rotation candidate and fill the
    vacated positions in order, appending if the board grows.
    """
    for object_id, wanted in allocation.items():
        if wanted > bank.capacity(object_id):
            raise BoardError(
                f"allocation of {wanted} exceeds {bank.capacity(object_id)} candidates for {object_id!r}"
            )

    changes: list[BoardChange] = []
    slots: list[CardSlot | None] = list(board.slots)
    current: dict[str, list[int]] = {}
    for index, slot in enumerate(board.slots):
        current.setdefault(slot.object_id, []).append(index)

    for object_id, indices in current.items():
        surplus = len(indices) - allocation.get(object_id, 0)
        if surplus <= 0:
            continue
        oldest_first = sorted(indices, key=lambda i: (board.slots[i].shown_since_ms, i))
        for index in oldest_first[:surplus]:
            slot = board.slots[index]
            changes.append(BoardChange("remove", index, slot.object_id, slot.candidate_index))
            slots[index] = None

    cursors = dict(board.cursors or {})
    free = [i for i, slot in enumerate(slots) if slot is None]
    for object_id, wanted in allocation.items():
        deficit = wanted - len(current.get(object_id, []))
        if deficit <= 0:
            continue
        taken = {slot.candidate_index for slot in slots if slot is not None and slot.object_id == object_id}
        for _ in range(deficit):
            candidate = _next_candidate(cursors, bank, object_id, taken)
            taken.add(candidate)
            new_slot = CardSlot(object_id=object_id, candidate_index=candidate, shown_since_ms=now_ms)
            if free:
                index = free.pop(0)
                slots[index] = new_slot
            else:
                slots.append(new_slot)
                index = len(slots) - 1
            changes.append(BoardChange("add", index, object_id, candidate))

    new_slots = tuple(slot for slot in slots if slot is not None)
    return CardBoard(slots=new_slots, cursors=cursors), changes


def record_hit(
    board: CardBoard,
    hit: TargetWordHit,
    progress: ProgressState,
    bank: PhraseBank,
    policy: ReplacementPolicy,
) -> tuple[CardBoard, ProgressState, list[BoardChange]]:
    """Count a target-word hit; swap the matching card after n_uses.

    Progress always advances, displayed or not. A hit matches a slot when
    the slot's candidate carries the spoken target word for that object.
    """
    progress = replace(progress, achieved=progress.achieved + 1)

    match_index: int | None = None
    for index, slot in enumerate(board.slots):
        if slot.object_id != hit.object_id:
            continue
        candidate = bank.candidate(slot.object_id, slot.candidate_index)
        if candidate.target_word_lemma == hit.target_word_lemma:
            match_index = index
            break
    if match_index is None:
        return board, progress, []

    slots = list(board.slots)
    slot = slots[match_index]
    uses = slot.uses + 1
    changes: list[BoardChange] = []
    cursors = dict(board.cursors or {})
    if uses >= policy.n_uses:
        taken = board.displayed_candidates(slot.object_id) - {slot.candidate_index}
        candidate_index = _next_candidate(cursors, bank, slot.object_id, taken)
        changes.append(BoardChange("remove", match_index, slot.object_id, slot.candidate_index))
        slots[match_index] = CardSlot(
            object_id=slot.object_id,
            candidate_index=candidate_index,
            shown_since_ms=hit.timestamp_ms,
        )
        changes.append(BoardChange("add", match_index, slot.object_id, candidate_index))
    else:
        slots[match_index] = replace(slot, uses=uses)
    return CardBoard(slots=tuple(slots), cursors=cursors), progress, changes


def tick(
    board: CardBoard,
    now_ms: int,
    policy: ReplacementPolicy,
    bank: PhraseBank,
) -> tuple[CardBoard, list[BoardChange]]:
    """Swap every card displayed strictly longer than t_display_ms."""
    slots = list(board.slots)
    cursors = dict(board.cursors or {})
    changes: list[BoardChange] = []
    for index, slot in enumerate(slots):
        if now_ms - slot.shown_since_ms <= policy.t_display_ms:
            continue
        taken = {
            s.candidate_index
            for s in slots
            if s.object_id == slot.object_id and s is not slot
        }
        candidate_index = _next_candidate(cursors, bank, slot.object_id, taken)
        changes.append(BoardChange("remove", index, slot.object_id, slot.candidate_index))
        slots[index] = CardSlot(
            object_id=slot.object_id,
            candidate_index=candidate_index,
            shown_since_ms=now_ms,
        )
        changes.append(BoardChange("add", index, slot.object_id, candidate_index))
    if not changes:
        return board, []
    return CardBoard(slots=tuple(slots), cursors=cursors), changes
