"""Two-stage human review workflow gating taxonomy approval.

Stage one is a structural review (format, coherence, hierarchy); stage two
is adversarial domain-expert validation (counter-examples, scenario
relevance). A draft can only reach Approved through both stages, and every
decision lands in an append-only history that replays to the current state.
Decisions are persisted with atomic renames so an interrupted process never
leaves a half-written record.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable

from .extraction import TaxonomyDraft
from .fsio import atomic_write_json, is_tmp_file, read_json

logger = logging.getLogger(__name__)


class Stage(str, Enum):
    STRUCTURAL = "structural"
    DOMAIN_EXPERT = "domain_expert"


class Decision(str, Enum):
    APPROVED = "approved"
    REJECTED = "rejected"
    REVISED = "revised"


class ItemStatus(str, Enum):
    PENDING = "pending"
    APPROVED = "approved"
    REJECTED = "rejected"
    REVISED = "revised"


class RecordState(str, Enum):
    DRAFT = "draft"
    STRUCTURAL_REVIEW = "structural_review"
    DOMAIN_REVIEW = "domain_review"
    REVISING = "revising"
    APPROVED = "approved"


LEGAL_TRANSITIONS: frozenset[tuple[RecordState, RecordState]] = frozenset(
    {
        (RecordState.DRAFT, RecordState.STRUCTURAL_REVIEW),
        (RecordState.STRUCTURAL_REVIEW, RecordState.DOMAIN_REVIEW),
        (RecordState.STRUCTURAL_REVIEW, RecordState.REVISING),
        (RecordState.DOMAIN_REVIEW, RecordState.APPROVED),
        (RecordState.DOMAIN_REVIEW, RecordState.REVISING),
        (RecordState.REVISING, RecordState.STRUCTURAL_REVIEW),
    }
)

STRUCTURAL_CATEGORY_CRITERION = "feature words accurately describe the persona"
STRUCTURAL_TAXONOMY_CRITERION = (
    "classification types are logically coherent and hierarchically well organized"
)
DOMAIN_CATEGORY_CRITERION = "holds up against counter-examples and real-world scenario testing"
DOMAIN_TAXONOMY_CRITERION = "taxonomy is relevant and usable for real-world design decisions"


class TransitionError(RuntimeError):
    pass


class ConflictError(RuntimeError):
    """A decision was already recorded for this item (first write wins)."""


class DecisionError(ValueError):
    pass


@dataclass(frozen=True)
class DecisionEvent:
    reviewer_id: str
    decision: Decision
    comment: str
    challenge: str | None
    at: str

    def to_dict(self) -> dict:
        return {
            "reviewer_id": self.reviewer_id,
            "decision": self.decision.value,
            "comment": self.comment,
            "challenge": self.challenge,
            "at": self.at,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DecisionEvent":
        return cls(
            reviewer_id=data["reviewer_id"],
            decision=Decision(data["decision"]),
            comment=data.get("comment", ""),
            challenge=data.get("challenge"),
            at=data["at"],
        )


@dataclass(frozen=True)
class ReviewItem:
    item_id: str
    draft_id: str
    stage: Stage
    criterion: str
    round: int
    category_id: str | None = None  # None = taxonomy-level item
    status: ItemStatus = ItemStatus.PENDING
    decisions: tuple[DecisionEvent, ...] = ()

    def to_dict(self) -> dict:
        return {
            "item_id": self.item_id,
            "draft_id": self.draft_id,
            "stage": self.stage.value,
            "criterion": self.criterion,
            "round": self.round,
            "category_id": self.category_id,
            "status": self.status.value,
            "decisions": [d.to_dict() for d in self.decisions],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ReviewItem":
        return cls(
            item_id=data["item_id"],
            draft_id=data["draft_id"],
            stage=Stage(data["stage"]),
            criterion=data["criterion"],
            round=int(data["round"]),
            category_id=data.get("category_id"),
            status=ItemStatus(data["status"]),
            decisions=tuple(DecisionEvent.from_dict(d) for d in data.get("decisions", ())),
        )


@dataclass(frozen=True)
class Transition:
    from_state: RecordState
    to_state: RecordState
    actor: str
    at: str
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "from_state": self.from_state.value,
            "to_state": self.to_state.value,
            "actor": self.actor,
            "at": self.at,
            "note": self.note,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Transition":
        return cls(
            from_state=RecordState(data["from_state"]),
            to_state=RecordState(data["to_state"]),
            actor=data["actor"],
            at=data["at"],
            note=data.get("note", ""),
        )


@dataclass(frozen=True)
class RefinementRequest:
    item_id: str
    challenge: str
    created_at: str

    def to_dict(self) -> dict:
        return {"item_id": self.item_id, "challenge": self.challenge, "created_at": self.created_at}

    @classmethod
    def from_dict(cls, data: dict) -> "RefinementRequest":
        return cls(item_id=data["item_id"], challenge=data["challenge"], created_at=data["created_at"])


@dataclass(frozen=True)
class ValidationRecord:
    draft_id: str
    state: RecordState = RecordState.DRAFT
    round: int = 0
    history: tuple[Transition, ...] = ()
    pending_refinements: tuple[RefinementRequest, ...] = ()

    def to_dict(self) -> dict:
        return {
            "draft_id": self.draft_id,
            "state": self.state.value,
            "round": self.round,
            "history": [t.to_dict() for t in self.history],
            "pending_refinements": [r.to_dict() for r in self.pending_refinements],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ValidationRecord":
        return cls(
            draft_id=data["draft_id"],
            state=RecordState(data["state"]),
            round=int(data.get("round", 0)),
            history=tuple(Transition.from_dict(t) for t in data.get("history", ())),
            pending_refinements=tuple(
                RefinementRequest.from_dict(r) for r in data.get("pending_refinements", ())
            ),
        )


def replay_history(history: Iterable[Transition]) -> RecordState:
    """Reconstruct the state a record must be in after its history."""
    state = RecordState.DRAFT
    for transition in history:
        if transition.from_state is not state:
            raise TransitionError(
                f"history is inconsistent: at {state.value}, saw transition from "
                f"{transition.from_state.value}"
            )
        if (transition.from_state, transition.to_state) not in LEGAL_TRANSITIONS:
            raise TransitionError(
                f"illegal transition {transition.from_state.value} -> {transition.to_state.value}"
            )
        state = transition.to_state
    return state


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


class ReviewWorkflow:
    """Review queue + validation state machine over one or more drafts.

    quorum decisions finalize an item; with quorum > 1 the majority wins
    and ties resolve conservatively to rejected. Passing store_dir persists
    every mutation; omit it for an in-memory workflow.
    """

    def __init__(
        self,
        store_dir: str | Path | None = None,
        quorum: int = 1,
        clock: Callable[[], str] = _utc_now,
    ):
        if quorum < 1:
            raise ValueError("quorum must be >= 1")
        self.store_dir = Path(store_dir) if store_dir is not None else None
        self.quorum = quorum
        self.clock = clock
        self._records: dict[str, ValidationRecord] = {}
        self._items: dict[str, ReviewItem] = {}
        if self.store_dir is not None:
            self.store_dir.mkdir(parents=True, exist_ok=True)
            self._load()

    # -- persistence ------------------------------------------------------

    def _load(self) -> None:
        for path in sorted(self.store_dir.glob("*.json")):
            if is_tmp_file(path):
                continue
            data = read_json(path)
            record = ValidationRecord.from_dict(data["record"])
            self._records[record.draft_id] = record
            for item_data in data.get("items", ()):
                item = ReviewItem.from_dict(item_data)
                self._items[item.item_id] = item

    def _save(self, draft_id: str) -> None:
        if self.store_dir is None:
            return
        record = self._records[draft_id]
        items = [i.to_dict() for i in self._items.values() if i.draft_id == draft_id]
        atomic_write_json(
            self.store_dir / f"{draft_id}.json", {"record": record.to_dict(), "items": items}
        )

    # -- queries ----------------------------------------------------------

    def get_record(self, draft_id: str) -> ValidationRecord:
        try:
            return self._records[draft_id]
        except KeyError:
            raise KeyError(f"no validation record for draft {draft_id!r}") from None

    def get_item(self, item_id: str) -> ReviewItem:
        try:
            return self._items[item_id]
        except KeyError:
            raise KeyError(f"no review item {item_id!r}") from None

    def _actionable(self, item: ReviewItem) -> bool:
        """An item accepts decisions only while its draft is in the matching
        review state and the item belongs to the current round."""
        record = self._records.get(item.draft_id)
        if record is None or item.round != record.round:
            return False
        if item.stage is Stage.STRUCTURAL:
            return record.state is RecordState.STRUCTURAL_REVIEW
        return record.state is RecordState.DOMAIN_REVIEW

    def pending_items(
        self, stage: Stage | None = None, draft_id: str | None = None
    ) -> list[ReviewItem]:
        items = [
            item
            for item in self._items.values()
            if item.status is ItemStatus.PENDING
            and self._actionable(item)
            and (stage is None or item.stage is stage)
            and (draft_id is None or item.draft_id == draft_id)
        ]
        return sorted(items, key=lambda i: i.item_id)

    def items_for(self, draft_id: str, stage: Stage | None = None, round: int | None = None) -> list[ReviewItem]:
        items = [
            item
            for item in self._items.values()
            if item.draft_id == draft_id
            and (stage is None or item.stage is stage)
            and (round is None or item.round == round)
        ]
        return sorted(items, key=lambda i: i.item_id)

    def approval_gate(self, draft_id: str) -> bool:
        """True only for drafts that cleared both review stages."""
        record = self._records.get(draft_id)
        return record is not None and record.state is RecordState.APPROVED

    # -- mutations ---------------------------------------------------------

    def _transition(self, record: ValidationRecord, to_state: RecordState, actor: str, note: str = "") -> ValidationRecord:
        pair = (record.state, to_state)
        if pair not in LEGAL_TRANSITIONS:
            raise TransitionError(f"illegal transition {record.state.value} -> {to_state.value}")
        transition = Transition(
            from_state=record.state, to_state=to_state, actor=actor, at=self.clock(), note=note
        )
        updated = replace(record, state=to_state, history=record.history + (transition,))
        self._records[record.draft_id] = updated
        return updated

    def _create_items(self, draft: TaxonomyDraft, stage: Stage, round: int) -> list[ReviewItem]:
        if stage is Stage.STRUCTURAL:
            category_criterion = STRUCTURAL_CATEGORY_CRITERION
            taxonomy_criterion = STRUCTURAL_TAXONOMY_CRITERION
        else:
            category_criterion = DOMAIN_CATEGORY_CRITERION
            taxonomy_criterion = DOMAIN_TAXONOMY_CRITERION
        items = []
        for category in draft.categories:
            items.append(
                ReviewItem(
                    item_id=f"{draft.draft_id}:r{round}:{stage.value}:{category.category_id}",
                    draft_id=draft.draft_id,
                    stage=stage,
                    criterion=category_criterion,
                    round=round,
                    category_id=category.category_id,
                )
            )
        items.append(
            ReviewItem(
                item_id=f"{draft.draft_id}:r{round}:{stage.value}:taxonomy",
                draft_id=draft.draft_id,
                stage=stage,
                criterion=taxonomy_criterion,
                round=round,
                category_id=None,
            )
        )
        for item in items:
            if item.item_id in self._items:
                raise TransitionError(f"review items already enqueued: {item.item_id}")
            self._items[item.item_id] = item
        return items

    def enqueue_review(
        self, draft: TaxonomyDraft, stage: Stage, actor: str = "system"
    ) -> list[ReviewItem]:
        """Create one pending item per category plus one taxonomy-level item
        for the given stage, advancing the record into that review state."""
        record = self._records.get(draft.draft_id)
        if record is None:
            record = ValidationRecord(draft_id=draft.draft_id)
            self._records[draft.draft_id] = record
        if record.state is RecordState.APPROVED:
            raise TransitionError(f"draft {draft.draft_id} is already approved (terminal)")

        if stage is Stage.STRUCTURAL:
            if record.state not in (RecordState.DRAFT, RecordState.REVISING):
                raise TransitionError(
                    f"cannot start structural review from state {record.state.value}"
                )
            next_round = record.round + 1 if record.state is RecordState.REVISING else record.round
            record = replace(record, round=next_round)
            self._records[draft.draft_id] = record
            record = self._transition(record, RecordState.STRUCTURAL_REVIEW, actor)
            items = self._create_items(draft, stage, record.round)
        else:
            if record.state is not RecordState.DOMAIN_REVIEW:
                raise TransitionError(
                    f"cannot enqueue domain review from state {record.state.value}"
                )
            items = self._create_items(draft, stage, record.round)
        self._save(draft.draft_id)
        return items

    def record_decision(
        self,
        item_id: str,
        decision: Decision | str,
        reviewer_id: str,
        comment: str = "",
        challenge: str | None = None,
    ) -> ValidationRecord:
        """Record one reviewer decision; finalizes the item at quorum and
        advances the draft's state machine accordingly."""
        decision = Decision(decision)
        item = self.get_item(item_id)
        if item.status is not ItemStatus.PENDING:
            raise ConflictError(f"item {item_id} already decided ({item.status.value})")
        if not self._actionable(item):
            raise ConflictError(f"item {item_id} belongs to a round that is no longer under review")
        if any(d.reviewer_id == reviewer_id for d in item.decisions):
            raise ConflictError(f"reviewer {reviewer_id!r} already decided item {item_id}")
        if decision in (Decision.REJECTED, Decision.REVISED) and not comment.strip():
            raise DecisionError(f"{decision.value} requires a non-empty comment")
        if challenge is not None and item.stage is not Stage.DOMAIN_EXPERT:
            raise DecisionError("challenges are only permitted at the domain-expert stage")
        if decision is Decision.REVISED:
            if item.stage is not Stage.DOMAIN_EXPERT:
                raise DecisionError("revised decisions are only permitted at the domain-expert stage")
            if not (challenge or "").strip():
                raise DecisionError("a revised decision requires a challenge")

        record = self.get_record(item.draft_id)
        event = DecisionEvent(
            reviewer_id=reviewer_id,
            decision=decision,
            comment=comment,
            challenge=challenge,
            at=self.clock(),
        )
        item = replace(item, decisions=item.decisions + (event,))

        if decision is Decision.REVISED and challenge:
            record = replace(
                record,
                pending_refinements=record.pending_refinements
                + (RefinementRequest(item_id=item_id, challenge=challenge, created_at=event.at),),
            )
            self._records[record.draft_id] = record

        if len(item.decisions) >= self.quorum:
            item = replace(item, status=self._quorum_status(item.decisions))
        self._items[item_id] = item

        record = self._advance(record, item, actor=reviewer_id)
        self._save(record.draft_id)
        return record

    @staticmethod
    def _quorum_status(decisions: tuple[DecisionEvent, ...]) -> ItemStatus:
        tally: dict[Decision, int] = {}
        for event in decisions:
            tally[event.decision] = tally.get(event.decision, 0) + 1
        best = max(tally.values())
        winners = [d for d, n in tally.items() if n == best]
        if len(winners) > 1:  # ties resolve conservatively
            return ItemStatus.REJECTED
        return ItemStatus(winners[0].value)

    def _advance(self, record: ValidationRecord, item: ReviewItem, actor: str) -> ValidationRecord:
        if item.status is ItemStatus.PENDING:
            return record
        stage_items = self.items_for(record.draft_id, stage=item.stage, round=record.round)
        if any(i.status in (ItemStatus.REJECTED, ItemStatus.REVISED) for i in stage_items):
            if record.state in (RecordState.STRUCTURAL_REVIEW, RecordState.DOMAIN_REVIEW):
                record = self._transition(
                    record, RecordState.REVISING, actor, note=f"{item.stage.value} found issues"
                )
            return record
        if all(i.status is ItemStatus.APPROVED for i in stage_items):
            if record.state is RecordState.STRUCTURAL_REVIEW:
                record = self._transition(
                    record, RecordState.DOMAIN_REVIEW, actor, note="structural review passed"
                )
            elif record.state is RecordState.DOMAIN_REVIEW and item.stage is Stage.DOMAIN_EXPERT:
                record = self._transition(
                    record, RecordState.APPROVED, actor, note="domain review passed"
                )
        return record

    def pop_refinements(self, draft_id: str) -> list[RefinementRequest]:
        """Drain the scheduled refinement requests for a draft."""
        record = self.get_record(draft_id)
        pending = list(record.pending_refinements)
        self._records[draft_id] = replace(record, pending_refinements=())
        self._save(draft_id)
        return pending


def ensure_domain_review(workflow: ReviewWorkflow, draft: TaxonomyDraft) -> list[ReviewItem]:
    """Enqueue domain-expert items once the structural stage has passed.

    Called by orchestration layers after applying decisions; a no-op unless
    the record sits in domain review with no items for the current round.
    """
    try:
        record = workflow.get_record(draft.draft_id)
    except KeyError:
        return []
    if record.state is not RecordState.DOMAIN_REVIEW:
        return []
    if workflow.items_for(draft.draft_id, stage=Stage.DOMAIN_EXPERT, round=record.round):
        return []
    return workflow.enqueue_review(draft, Stage.DOMAIN_EXPERT)
