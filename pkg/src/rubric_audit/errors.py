"""Error-cause taxonomy, interactive annotation of misaligned rules, and cause proportions."""

from __future__ import annotations

import enum
import json
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Protocol

from .align import AlignmentReport, GeneratedRubric
from .items import AssessmentItem

__all__ = [
    "ErrorCause",
    "QueueEntry",
    "Annotation",
    "CauseDistribution",
    "ConsistencyError",
    "AnnotationInterrupted",
    "Channel",
    "ConsoleChannel",
    "ScriptedChannel",
    "collect_incorrect_rules",
    "annotate",
    "load_annotations",
    "append_annotations",
    "cause_proportions",
]


class ErrorCause(enum.Enum):
    InappropriateExpression = "Inappropriate Expression"
    IncorrectLogicChain = "Incorrect Logic Chain"
    IncorrectLogicObject = "Incorrect Logic Object"
    NoLogicChain = "No Logic Chain"


CAUSES = tuple(ErrorCause)


class ConsistencyError(ValueError):
    pass


class AnnotationInterrupted(RuntimeError):
    def __init__(self, done: list[Annotation]):
        super().__init__(f"annotation interrupted after {len(done)} records")
        self.done = done


@dataclass(frozen=True)
class QueueEntry:
    item_id: str
    setting: str
    rule_index: int
    rule_text: str
    best_score: float

    @property
    def key(self) -> tuple[str, str, int]:
        return (self.item_id, self.setting, self.rule_index)


@dataclass(frozen=True)
class Annotation:
    item_id: str
    setting: str
    rule_index: int
    rule_text: str
    cause: ErrorCause
    annotator: str
    timestamp: str

    @property
    def key(self) -> tuple[str, str, int]:
        return (self.item_id, self.setting, self.rule_index)

    def to_dict(self) -> dict:
        return {
            "item_id": self.item_id,
            "setting": self.setting,
            "rule_index": self.rule_index,
            "rule_text": self.rule_text,
            "cause": self.cause.name,
            "annotator": self.annotator,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> Annotation:
        return cls(
            item_id=doc["item_id"],
            setting=doc["setting"],
            rule_index=int(doc["rule_index"]),
            rule_text=doc["rule_text"],
            cause=ErrorCause[doc["cause"]],
            annotator=doc["annotator"],
            timestamp=doc["timestamp"],
        )


@dataclass(frozen=True)
class CauseDistribution:
    setting: str
    counts: dict[ErrorCause, int]
    percentages: dict[ErrorCause, float]

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def to_dict(self) -> dict:
        return {
            "setting": self.setting,
            "total": self.total,
            "counts": {c.name: self.counts[c] for c in CAUSES},
            "percentages": {c.name: self.percentages[c] for c in CAUSES},
        }


def collect_incorrect_rules(
    reports: Sequence[AlignmentReport], rubrics: Sequence[GeneratedRubric]
) -> list[QueueEntry]:
    """Generated rules whose best human match falls below the precision threshold."""
    by_key: dict[tuple[str, str], GeneratedRubric] = {}
    for rub in rubrics:
        key = (rub.item_id, rub.setting)
        if key in by_key:
            raise ConsistencyError(f"duplicate rubric for {key}")
        by_key[key] = rub
    seen: set[tuple[str, str]] = set()
    queue: list[QueueEntry] = []
    for rep in reports:
        key = (rep.item_id, rep.setting)
        if key in seen:
            raise ConsistencyError(f"duplicate alignment report for {key}")
        seen.add(key)
        if key not in by_key:
            raise ConsistencyError(f"alignment report {key} has no matching rubric")
        rub = by_key[key]
        if len(rub.rules) != rep.rule_count:
            raise ConsistencyError(f"{key}: report covers {rep.rule_count} rules, rubric has {len(rub.rules)}")
        for g, _, score in rep.matches:
            if score < rep.config.tau_precision:
                queue.append(QueueEntry(rep.item_id, rep.setting, g, rub.rules[g].text, score))
    if set(by_key) != seen:
        missing = sorted(set(by_key) - seen)
        raise ConsistencyError(f"rubrics without alignment reports: {missing}")
    queue.sort(key=lambda e: e.key)
    return queue


# -- persistence -------------------------------------------------------------


def load_annotations(path: str | Path) -> list[Annotation]:
    path = Path(path)
    if not path.exists():
        return []
    out = []
    with path.open(encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(Annotation.from_dict(json.loads(line)))
    return out


def append_annotations(path: str | Path, annotations: Iterable[Annotation]) -> int:
    """Append records not already present (by key); returns how many were written."""
    path = Path(path)
    present = {a.key for a in load_annotations(path)}
    written = 0
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("a", encoding="utf-8") as fh:
        for ann in annotations:
            if ann.key in present:
                continue
            fh.write(json.dumps(ann.to_dict(), ensure_ascii=False, sort_keys=True) + "\n")
            fh.flush()
            present.add(ann.key)
            written += 1
    return written


# -- interactive flow --------------------------------------------------------


class Channel(Protocol):
    def show(self, text: str) -> None: ...

    def ask(self, prompt: str) -> str: ...


class ConsoleChannel:
    def show(self, text: str) -> None:
        print(text)

    def ask(self, prompt: str) -> str:
        return input(prompt)


class ScriptedChannel:
    """Feeds canned answers; raises ``EOFError`` once they run out."""

    def __init__(self, answers: Iterable[str]) -> None:
        self.answers = list(answers)
        self.shown: list[str] = []
        self.prompts: list[str] = []

    def show(self, text: str) -> None:
        self.shown.append(text)

    def ask(self, prompt: str) -> str:
        self.prompts.append(prompt)
        if not self.answers:
            raise EOFError
        return self.answers.pop(0)


def _menu() -> str:
    return "\n".join(f"  {i}. {cause.value}" for i, cause in enumerate(CAUSES, 1))


def annotate(
    queue: Sequence[QueueEntry],
    channel: Channel,
    store: str | Path,
    *,
    annotator: str = "annotator",
    items: dict[str, AssessmentItem] | None = None,
    clock: Callable[[], datetime] | None = None,
) -> list[Annotation]:
    """Ask for one cause per queued rule, appending each answer to ``store``.

    Rules already annotated in ``store`` are skipped, so an interrupted session
    can be resumed. Returns the annotations covering the queue. End of input
    or Ctrl-C raises :class:`AnnotationInterrupted` after the finished records
    are on disk.
    """
    clock = clock or (lambda: datetime.now(timezone.utc))
    existing = {a.key: a for a in load_annotations(store)}
    pending = [e for e in queue if e.key not in existing]
    done: list[Annotation] = []
    for pos, entry in enumerate(pending, 1):
        lines = [f"[{pos}/{len(pending)}] item {entry.item_id} / setting {entry.setting}"]
        if items and entry.item_id in items:
            item = items[entry.item_id]
            lines.append(f"Task: {item.task_description}")
            lines.extend(f"Human rule {i + 1}: {r}" for i, r in enumerate(item.analytic_rubric))
        lines.append(f"Generated rule {entry.rule_index + 1} (best score {entry.best_score:.3f}):")
        lines.append(f"  {entry.rule_text}")
        lines.append(_menu())
        channel.show("\n".join(lines))
        try:
            while True:
                answer = channel.ask(f"cause [1-{len(CAUSES)}]: ").strip()
                if answer.isdigit() and 1 <= int(answer) <= len(CAUSES):
                    break
                channel.show(f"invalid choice {answer!r}; enter a number from 1 to {len(CAUSES)}")
        except (EOFError, KeyboardInterrupt):
            raise AnnotationInterrupted(done) from None
        ann = Annotation(
            entry.item_id,
            entry.setting,
            entry.rule_index,
            entry.rule_text,
            CAUSES[int(answer) - 1],
            annotator,
            clock().isoformat(),
        )
        append_annotations(store, [ann])
        existing[ann.key] = ann
        done.append(ann)
    return [existing[e.key] for e in queue]


def cause_proportions(annotations: Iterable[Annotation], setting: str) -> CauseDistribution:
    selected = [a for a in annotations if a.setting == setting]
    if not selected:
        raise ValueError(f"no annotations for setting {setting!r}")
    counts = {c: 0 for c in CAUSES}
    for a in selected:
        counts[a.cause] += 1
    total = len(selected)
    return CauseDistribution(
        setting, counts, {c: round(100.0 * counts[c] / total, 2) for c in CAUSES}
    )
