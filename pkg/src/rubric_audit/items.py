"""Assessment items, graded student responses, and seeded response sampling."""

from __future__ import annotations

import hashlib
import json
import random
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from pathlib import Path

__all__ = [
    "GradeLabel",
    "StudentResponse",
    "AssessmentItem",
    "SampledCorpus",
    "ItemParseError",
    "ItemValidationError",
    "load_items",
    "parse_items",
    "dump_items",
    "item_to_dict",
    "sample_balanced",
    "select_graded_examples",
    "seeded_rng",
]


class ItemParseError(ValueError):
    """The item document is malformed (missing field, wrong type)."""


class ItemValidationError(ValueError):
    """The item document parses but violates an item invariant."""


@dataclass(frozen=True)
class GradeLabel:
    name: str
    ordinal: int

    def __post_init__(self) -> None:
        if not self.name or not self.name.strip():
            raise ItemValidationError("grade label name must be non-empty")
        if self.ordinal < 0:
            raise ItemValidationError(f"label {self.name!r}: ordinal must be >= 0")


@dataclass(frozen=True)
class StudentResponse:
    id: str
    text: str
    gold_label: GradeLabel

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ItemValidationError(f"response {self.id!r}: text is empty")


@dataclass(frozen=True)
class AssessmentItem:
    """One science item with its human-authored rubrics and graded responses.

    ``holistic_rubric`` pairs each label name with its descriptor, in label
    order. ``analytic_rubric`` holds the human rules, which serve as the
    reference when scoring generated rubrics.
    """

    id: str
    task_description: str
    holistic_rubric: tuple[tuple[str, str], ...]
    analytic_rubric: tuple[str, ...]
    labels: tuple[GradeLabel, ...]
    responses: tuple[StudentResponse, ...] = ()

    def __post_init__(self) -> None:
        if len(self.labels) not in (2, 3):
            raise ItemValidationError(
                f"item {self.id!r}: expected 2 or 3 grade levels, got {len(self.labels)}"
            )
        if [lab.ordinal for lab in self.labels] != list(range(len(self.labels))):
            raise ItemValidationError(f"item {self.id!r}: label ordinals must be 0..L-1 in order")
        names = [lab.name for lab in self.labels]
        if len(set(names)) != len(names):
            raise ItemValidationError(f"item {self.id!r}: duplicate label names")
        if [name for name, _ in self.holistic_rubric] != names:
            raise ItemValidationError(
                f"item {self.id!r}: holistic rubric must have exactly one descriptor per label"
            )
        label_set = set(self.labels)
        seen_ids: set[str] = set()
        for resp in self.responses:
            if resp.gold_label not in label_set:
                raise ItemValidationError(
                    f"item {self.id!r}: response {resp.id!r} has unknown label {resp.gold_label.name!r}"
                )
            if resp.id in seen_ids:
                raise ItemValidationError(f"item {self.id!r}: duplicate response id {resp.id!r}")
            seen_ids.add(resp.id)

    @property
    def level_count(self) -> int:
        return len(self.labels)

    def label(self, name: str) -> GradeLabel:
        for lab in self.labels:
            if lab.name == name:
                return lab
        raise KeyError(name)

    def pool(self, label: GradeLabel, exclude: Iterable[str] = ()) -> list[StudentResponse]:
        """Responses with gold label ``label``, in file order, minus excluded ids."""
        skip = set(exclude)
        return [r for r in self.responses if r.gold_label == label and r.id not in skip]


@dataclass(frozen=True)
class SampledCorpus:
    item_id: str
    responses: tuple[StudentResponse, ...]
    seed: int

    def ids(self) -> list[str]:
        return [r.id for r in self.responses]

    def __len__(self) -> int:
        return len(self.responses)


# -- file format -------------------------------------------------------------


def _field(obj: dict, key: str, kind: type, where: str):
    if not isinstance(obj, dict) or key not in obj:
        raise ItemParseError(f"{where}: missing field {key!r}")
    value = obj[key]
    if not isinstance(value, kind):
        raise ItemParseError(f"{where}: field {key!r} must be {kind.__name__}")
    return value


def _parse_item(raw: dict, position: int) -> AssessmentItem:
    where = f"items[{position}]"
    item_id = _field(raw, "id", str, where)
    where = f"item {item_id!r}"
    task = _field(raw, "task", str, where)
    levels = _field(raw, "levels", list, where)
    holistic = _field(raw, "holistic", dict, where)
    analytic = _field(raw, "analytic", list, where)
    responses = _field(raw, "responses", list, where)

    if not all(isinstance(name, str) for name in levels):
        raise ItemParseError(f"{where}: field 'levels' must hold strings")
    if not all(isinstance(rule, str) for rule in analytic):
        raise ItemParseError(f"{where}: field 'analytic' must hold strings")

    try:
        labels = tuple(GradeLabel(name, i) for i, name in enumerate(levels))
    except ItemValidationError as exc:
        raise ItemValidationError(f"{where}: {exc}") from None
    missing = [name for name in levels if name not in holistic]
    if missing or len(holistic) != len(levels):
        extra = sorted(set(holistic) - set(levels))
        raise ItemValidationError(
            f"{where}: holistic rubric must have one descriptor per level "
            f"(missing {missing}, unexpected {extra})"
        )
    by_name = {lab.name: lab for lab in labels}
    parsed: list[StudentResponse] = []
    for j, resp in enumerate(responses):
        rwhere = f"{where} responses[{j}]"
        rid = _field(resp, "id", str, rwhere)
        text = _field(resp, "text", str, rwhere)
        label = _field(resp, "label", str, rwhere)
        if label not in by_name:
            raise ItemValidationError(f"{rwhere}: label {label!r} is not one of {levels}")
        try:
            parsed.append(StudentResponse(rid, text, by_name[label]))
        except ItemValidationError as exc:
            raise ItemValidationError(f"{where}: {exc}") from None

    return AssessmentItem(
        id=item_id,
        task_description=task,
        holistic_rubric=tuple((name, str(holistic[name])) for name in levels),
        analytic_rubric=tuple(analytic),
        labels=labels,
        responses=tuple(parsed),
    )


def parse_items(document: dict) -> list[AssessmentItem]:
    """Build items from an already-decoded item document."""
    raw_items = _field(document, "items", list, "document")
    items = [_parse_item(raw, i) for i, raw in enumerate(raw_items)]
    seen: set[str] = set()
    for item in items:
        if item.id in seen:
            raise ItemValidationError(f"duplicate item id {item.id!r}")
        seen.add(item.id)
    return items


def load_items(path: str | Path) -> list[AssessmentItem]:
    text = Path(path).read_text(encoding="utf-8")
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ItemParseError(f"{path}: not valid JSON ({exc})") from None
    return parse_items(document)


def item_to_dict(item: AssessmentItem) -> dict:
    return {
        "id": item.id,
        "task": item.task_description,
        "levels": [lab.name for lab in item.labels],
        "holistic": dict(item.holistic_rubric),
        "analytic": list(item.analytic_rubric),
        "responses": [
            {"id": r.id, "text": r.text, "label": r.gold_label.name} for r in item.responses
        ],
    }


def dump_items(items: Sequence[AssessmentItem], path: str | Path | None = None) -> str:
    """Serialize items to the item-file format; write to ``path`` when given."""
    text = json.dumps({"items": [item_to_dict(it) for it in items]}, indent=2, ensure_ascii=False)
    text += "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


# -- sampling ----------------------------------------------------------------


def seeded_rng(seed: int, *salt: str) -> random.Random:
    """A ``random.Random`` whose stream depends only on ``seed`` and ``salt``.

    Hashing keeps draws for different items independent while staying stable
    across processes and platforms.
    """
    material = "\x1f".join([str(int(seed)), *salt]).encode("utf-8")
    return random.Random(int.from_bytes(hashlib.sha256(material).digest()[:8], "big"))


def balanced_allocation(n: int, pool_sizes: Sequence[int]) -> list[int]:
    """Per-label counts for a balanced draw of ``n`` from pools of the given sizes.

    Each label gets ``n // L``; the remainder goes one each to the lowest
    ordinals. Labels whose pool is short give up all they have, and the
    shortfall is backfilled one response at a time, cycling through ordinals
    from 0 and skipping exhausted labels.
    """
    L = len(pool_sizes)
    target = min(n, sum(pool_sizes))
    base, rem = divmod(n, L)
    wanted = [base + (1 if i < rem else 0) for i in range(L)]
    counts = [min(w, size) for w, size in zip(wanted, pool_sizes)]
    shortfall = target - sum(counts)
    while shortfall > 0:
        for i in range(L):
            if shortfall == 0:
                break
            if counts[i] < pool_sizes[i]:
                counts[i] += 1
                shortfall -= 1
    return counts


def sample_balanced(
    item: AssessmentItem, n: int, seed: int, exclude: Iterable[str] = ()
) -> SampledCorpus:
    if n <= 0:
        raise ValueError(f"sample size must be positive, got {n}")
    skip = set(exclude)
    pools = [item.pool(lab, skip) for lab in item.labels]
    if not any(pools):
        raise ValueError(f"item {item.id!r} has no responses to sample")
    rng = seeded_rng(seed, "balanced", item.id)
    shuffled = []
    for pool in pools:
        pool = list(pool)
        rng.shuffle(pool)
        shuffled.append(pool)
    counts = balanced_allocation(n, [len(p) for p in pools])
    chosen = [r for pool, c in zip(shuffled, counts) for r in pool[:c]]
    rng.shuffle(chosen)
    return SampledCorpus(item.id, tuple(chosen), seed)


def select_graded_examples(
    item: AssessmentItem, k: int = 5, seed: int = 0, exclude: Iterable[str] = ()
) -> list[StudentResponse]:
    """Pick up to ``k`` human-graded responses, covering every label the pool allows.

    One response per label is taken first (lowest ordinals first when ``k`` is
    smaller than the level count); remaining slots are filled uniformly from
    what is left. Responses whose ids are in ``exclude`` are never chosen.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    skip = set(exclude)
    rng = seeded_rng(seed, "graded", item.id)
    pools = []
    for lab in item.labels:
        pool = item.pool(lab, skip)
        rng.shuffle(pool)
        pools.append(pool)
    picked = []
    for pool in pools:
        if pool and len(picked) < k:
            picked.append(pool.pop(0))
    rest = [r for pool in pools for r in pool]
    rng.shuffle(rest)
    picked.extend(rest[: k - len(picked)])
    return picked
