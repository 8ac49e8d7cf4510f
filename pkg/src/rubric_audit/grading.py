"""Rubric-guided automatic scoring of sampled responses."""

from __future__ import annotations

import json
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np

from .gateway import Backend, ChatParams, ResponseCache, cached_complete
from .items import AssessmentItem, GradeLabel, SampledCorpus, StudentResponse
from .prompts import RubricVariant, render_grading_prompt

__all__ = [
    "ParseStatus",
    "GradingOutcome",
    "GradingReport",
    "GradingAborted",
    "find_bracketed",
    "extract_rating",
    "accuracy",
    "confusion_matrix",
    "grade_item",
    "write_outcomes",
    "read_outcomes",
]

ParseStatus = Literal["parsed", "missing_rating", "unknown_label"]


def find_bracketed(text: str) -> list[str]:
    """Contents of every ``[[...]]`` token, scanning left to right.

    A token's content may not contain ``[`` or ``]``. After a match the scan
    resumes past its closing brackets; otherwise it advances one character.
    """
    found = []
    i, n = 0, len(text)
    while i < n - 1:
        if text[i] == "[" and text[i + 1] == "[":
            j = i + 2
            while j < n and text[j] not in "[]":
                j += 1
            if j + 1 < n and text[j] == "]" and text[j + 1] == "]":
                found.append(text[i + 2 : j])
                i = j + 2
                continue
        i += 1
    return found


def extract_rating(
    completion: str, labels: Sequence[GradeLabel]
) -> tuple[GradeLabel | None, ParseStatus]:
    """The label named by the last ``[[...]]`` token in ``completion``."""
    if not labels:
        raise ValueError("labels must be non-empty")
    tokens = find_bracketed(completion)
    if not tokens:
        return None, "missing_rating"
    wanted = tokens[-1].strip().casefold()
    for lab in labels:
        if lab.name.strip().casefold() == wanted:
            return lab, "parsed"
    return None, "unknown_label"


@dataclass(frozen=True)
class GradingOutcome:
    response_id: str
    raw_completion: str
    predicted: GradeLabel | None
    parse_status: ParseStatus
    correct: bool
    gold: GradeLabel | None = None

    def to_dict(self) -> dict:
        return {
            "response_id": self.response_id,
            "gold": self.gold.name if self.gold else None,
            "predicted": self.predicted.name if self.predicted else None,
            "parse_status": self.parse_status,
            "correct": self.correct,
            "raw_completion": self.raw_completion,
        }

    @classmethod
    def from_dict(cls, doc: dict, labels: Sequence[GradeLabel]) -> GradingOutcome:
        by_name = {lab.name: lab for lab in labels}
        return cls(
            response_id=doc["response_id"],
            raw_completion=doc["raw_completion"],
            predicted=by_name[doc["predicted"]] if doc["predicted"] is not None else None,
            parse_status=doc["parse_status"],
            correct=doc["correct"],
            gold=by_name[doc["gold"]] if doc["gold"] is not None else None,
        )


def accuracy(outcomes: Sequence[GradingOutcome]) -> float:
    if not outcomes:
        raise ValueError("accuracy of an empty outcome list is undefined")
    return sum(o.correct for o in outcomes) / len(outcomes)


def confusion_matrix(outcomes: Sequence[GradingOutcome], labels: Sequence[GradeLabel]) -> np.ndarray:
    """Counts indexed ``[gold ordinal, predicted ordinal]``; the last column counts unparsed."""
    L = len(labels)
    mat = np.zeros((L, L + 1), dtype=int)
    for o in outcomes:
        if o.gold is None:
            raise ValueError(f"outcome {o.response_id!r} has no gold label")
        col = o.predicted.ordinal if o.predicted is not None else L
        mat[o.gold.ordinal, col] += 1
    return mat


@dataclass(frozen=True)
class GradingReport:
    item_id: str
    variant_kind: str
    outcomes: tuple[GradingOutcome, ...]
    accuracy: float
    confusion: np.ndarray

    def status_counts(self) -> dict[str, int]:
        counts = {"parsed": 0, "missing_rating": 0, "unknown_label": 0}
        for o in self.outcomes:
            counts[o.parse_status] += 1
        return counts

    def summary(self) -> dict:
        return {
            "item_id": self.item_id,
            "variant": self.variant_kind,
            "n": len(self.outcomes),
            "accuracy": self.accuracy,
            "confusion": self.confusion.tolist(),
            "parse_status": self.status_counts(),
        }


class GradingAborted(RuntimeError):
    """A backend failure stopped an item run; ``partial`` holds the outcomes finished so far."""

    def __init__(self, message: str, partial: list[GradingOutcome]):
        super().__init__(message)
        self.partial = partial


def _outcome(resp: StudentResponse, text: str, labels: Sequence[GradeLabel]) -> GradingOutcome:
    predicted, status = extract_rating(text, labels)
    return GradingOutcome(
        response_id=resp.id,
        raw_completion=text,
        predicted=predicted,
        parse_status=status,
        correct=predicted is not None and predicted == resp.gold_label,
        gold=resp.gold_label,
    )


def write_outcomes(path: str | Path, outcomes: Sequence[GradingOutcome]) -> None:
    lines = [json.dumps(o.to_dict(), ensure_ascii=False, sort_keys=True) for o in outcomes]
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def read_outcomes(path: str | Path, labels: Sequence[GradeLabel]) -> list[GradingOutcome]:
    with Path(path).open(encoding="utf-8") as fh:
        return [GradingOutcome.from_dict(json.loads(line), labels) for line in fh if line.strip()]


def grade_item(
    item: AssessmentItem,
    variant: RubricVariant,
    sample: SampledCorpus,
    backend: Backend,
    cache: ResponseCache | None,
    params: ChatParams,
    *,
    example: tuple[StudentResponse, GradeLabel] | None = None,
    workers: int = 1,
    partial_path: str | Path | None = None,
) -> GradingReport:
    """Grade every sampled response of ``item`` with ``variant`` in its rubric slot.

    Calls may run on up to ``workers`` threads; outcomes are folded in sample
    order either way. If the backend fails, the outcomes completed before the
    first failing response are written to ``partial_path`` (when given) and
    :class:`GradingAborted` is raised.
    """
    if not sample.responses:
        raise ValueError(f"item {item.id!r}: empty sample")
    if example is not None and example[0].id in set(sample.ids()):
        raise ValueError(f"item {item.id!r}: grading example is part of the evaluation sample")

    def run_one(resp: StudentResponse) -> str:
        transcript = render_grading_prompt(item, variant, resp, example)
        return cached_complete(cache, backend, transcript, params)

    responses = list(sample.responses)
    texts: list[str | Exception] = []
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(run_one, r) for r in responses]
            for fut in futures:
                try:
                    texts.append(fut.result())
                except Exception as exc:
                    texts.append(exc)
    else:
        for resp in responses:
            try:
                texts.append(run_one(resp))
            except Exception as exc:
                texts.append(exc)
                break

    outcomes: list[GradingOutcome] = []
    for resp, text in zip(responses, texts):
        if isinstance(text, Exception):
            if partial_path is not None:
                write_outcomes(partial_path, outcomes)
            raise GradingAborted(
                f"item {item.id!r}: grading stopped at response {resp.id!r}: {text}", outcomes
            ) from text
        outcomes.append(_outcome(resp, text, item.labels))

    return GradingReport(
        item_id=item.id,
        variant_kind=variant.kind,
        outcomes=tuple(outcomes),
        accuracy=accuracy(outcomes),
        confusion=confusion_matrix(outcomes, item.labels),
    )
