"""Rule parsing and thresholded-similarity precision/recall/F1 against human rubrics."""

from __future__ import annotations

import json
import os
import re
import string
import urllib.error
import urllib.request
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from .gateway import ENV_API_KEY
from .items import AssessmentItem
from .prompts import RULE_SEPARATOR, ConfigurationError

__all__ = [
    "Rule",
    "GeneratedRubric",
    "SimilarityScorer",
    "JaccardScorer",
    "EmbeddingScorer",
    "RemoteSimilarityScorer",
    "ScorerError",
    "AlignmentConfig",
    "AlignmentReport",
    "parse_rules",
    "similarity_matrix",
    "precision",
    "recall",
    "f1",
    "align",
    "human_rules",
]


@dataclass(frozen=True)
class Rule:
    text: str
    index: int


@dataclass(frozen=True)
class GeneratedRubric:
    item_id: str
    setting: str
    raw: str
    rules: tuple[Rule, ...]

    @classmethod
    def from_raw(cls, item_id: str, setting: str, raw: str) -> GeneratedRubric:
        return cls(item_id, setting, raw, tuple(parse_rules(raw)))

    def texts(self) -> list[str]:
        return [r.text for r in self.rules]


_RUBRIC_LABEL = re.compile(r"^\s*(?:[-*]\s*)?_*\s*analytic rubric\s*:?\s*_*\s*:?\s*", re.IGNORECASE)
_BULLET = re.compile(r"^\s*(?:[-*•]|\d+[.)])\s+")


def _clean(segment: str) -> str:
    return segment.strip().strip(RULE_SEPARATOR).strip()


def parse_rules(raw: str) -> list[Rule]:
    """Split a generated rubric into rules.

    Rules are separated by ``|||``. Without a separator the text is read as a
    bullet or numbered list (lines before the first bullet are dropped), and
    failing that the whole text is one rule. A leading ``Analytic Rubric:``
    label, as echoed from the in-context examples, is removed.
    """
    text = _RUBRIC_LABEL.sub("", raw, count=1)
    if RULE_SEPARATOR in text:
        segments = text.split(RULE_SEPARATOR)
    else:
        lines = text.splitlines()
        if any(_BULLET.match(line) for line in lines):
            segments = []
            for line in lines:
                if _BULLET.match(line):
                    segments.append(_BULLET.sub("", line, count=1))
                elif segments and line.strip():
                    segments[-1] += " " + line.strip()
        else:
            segments = [text]
    texts = [_clean(s) for s in segments]
    return [Rule(t, i) for i, t in enumerate(t for t in texts if t)]


def human_rules(item: AssessmentItem) -> list[Rule]:
    return [Rule(text.strip(), i) for i, text in enumerate(item.analytic_rubric)]


# -- similarity scorers ------------------------------------------------------


class SimilarityScorer(Protocol):
    def score(self, a: str, b: str) -> float: ...


class ScorerError(RuntimeError):
    pass


_PUNCT = str.maketrans("", "", string.punctuation)


def _word_set(text: str) -> frozenset[str]:
    return frozenset(text.lower().translate(_PUNCT).split())


class JaccardScorer:
    """Word-set Jaccard similarity after lowercasing and deleting ASCII punctuation."""

    def score(self, a: str, b: str) -> float:
        sa, sb = _word_set(a), _word_set(b)
        if not sa and not sb:
            return 1.0
        return len(sa & sb) / len(sa | sb)


class EmbeddingScorer:
    """Cosine similarity of sentence embeddings, clipped to [0, 1].

    ``encode`` maps a list of texts to a 2-D array of embeddings; a
    sentence-transformers model's ``encode`` method fits directly. Embeddings
    are memoized per text.
    """

    def __init__(self, encode: Callable[[list[str]], np.ndarray]) -> None:
        self.encode = encode
        self._memo: dict[str, np.ndarray] = {}

    def _vectors(self, texts: Sequence[str]) -> list[np.ndarray]:
        todo = [t for t in dict.fromkeys(texts) if t not in self._memo]
        if todo:
            vecs = np.asarray(self.encode(list(todo)), dtype=float)
            for t, v in zip(todo, vecs):
                norm = np.linalg.norm(v)
                self._memo[t] = v / norm if norm > 0 else v
        return [self._memo[t] for t in texts]

    def score(self, a: str, b: str) -> float:
        if a == b:
            return 1.0
        va, vb = self._vectors([a, b])
        return float(np.clip(va @ vb, 0.0, 1.0))

    def score_matrix(self, rows: Sequence[str], cols: Sequence[str]) -> np.ndarray:
        vr = np.array(self._vectors(rows)).reshape(len(rows), -1)
        vc = np.array(self._vectors(cols)).reshape(len(cols), -1)
        sims = np.clip(vr @ vc.T, 0.0, 1.0)
        for i, a in enumerate(rows):
            for j, b in enumerate(cols):
                if a == b:
                    sims[i, j] = 1.0
        return sims


class RemoteSimilarityScorer:
    """Scores text pairs through an HTTP similarity service.

    Request: ``POST {base_url}/similarity`` with ``{"pairs": [[a, b], ...]}``.
    Response: ``{"scores": [float, ...]}`` in the same order. Scores are
    clipped to [0, 1].
    """

    ENV_BASE_URL = "RUBRIC_AUDIT_SIMILARITY_URL"

    def __init__(self, base_url: str | None = None, api_key: str | None = None, timeout: float = 60.0):
        base_url = base_url or os.environ.get(self.ENV_BASE_URL)
        if not base_url:
            raise ValueError(f"no similarity URL given and {self.ENV_BASE_URL} is unset")
        self.url = base_url.rstrip("/") + "/similarity"
        self.api_key = api_key if api_key is not None else os.environ.get(ENV_API_KEY)
        self.timeout = timeout

    def score_pairs(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        body = json.dumps({"pairs": [list(p) for p in pairs]}).encode("utf-8")
        req = urllib.request.Request(
            self.url, data=body, headers={"Content-Type": "application/json"}, method="POST"
        )
        if self.api_key:
            req.add_header("Authorization", f"Bearer {self.api_key}")
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                scores = json.loads(resp.read().decode("utf-8"))["scores"]
        except (urllib.error.URLError, OSError, KeyError, TypeError, json.JSONDecodeError) as exc:
            raise ScorerError(f"similarity service failed: {exc}") from exc
        if len(scores) != len(pairs):
            raise ScorerError(f"similarity service returned {len(scores)} scores for {len(pairs)} pairs")
        return [min(1.0, max(0.0, float(s))) for s in scores]

    def score(self, a: str, b: str) -> float:
        return self.score_pairs([(a, b)])[0]

    def score_matrix(self, rows: Sequence[str], cols: Sequence[str]) -> np.ndarray:
        if not rows or not cols:
            return np.zeros((len(rows), len(cols)))
        flat = self.score_pairs([(a, b) for a in rows for b in cols])
        return np.array(flat).reshape(len(rows), len(cols))


# -- metric ------------------------------------------------------------------


@dataclass(frozen=True)
class AlignmentConfig:
    tau_precision: float = 0.5
    tau_recall: float = 0.6

    def __post_init__(self) -> None:
        for name in ("tau_precision", "tau_recall"):
            value = getattr(self, name)
            if not 0 < value <= 1:
                raise ValueError(f"{name} must lie in (0, 1], got {value}")


@dataclass(frozen=True)
class AlignmentReport:
    """Alignment of one generated rubric with the item's human rubric.

    ``matches`` holds ``(generated index, best human index, score)`` per
    generated rule; ``recalled`` holds ``(human index, best generated index,
    score)`` per human rule, with ``None`` when there is nothing to match.
    Ties go to the lowest index.
    """

    item_id: str
    setting: str
    precision: float
    recall: float
    f1: float
    rule_count: int
    matches: tuple[tuple[int, int, float], ...]
    recalled: tuple[tuple[int, int | None, float], ...]
    config: AlignmentConfig = field(default_factory=AlignmentConfig)

    def incorrect_rules(self) -> list[int]:
        """Generated rule indices whose best score misses the precision threshold."""
        return [g for g, _, s in self.matches if s < self.config.tau_precision]

    def to_dict(self) -> dict:
        return {
            "item_id": self.item_id,
            "setting": self.setting,
            "rule_count": self.rule_count,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "tau_precision": self.config.tau_precision,
            "tau_recall": self.config.tau_recall,
            "matches": [list(m) for m in self.matches],
            "recalled": [list(r) for r in self.recalled],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> AlignmentReport:
        return cls(
            item_id=doc["item_id"],
            setting=doc["setting"],
            precision=doc["precision"],
            recall=doc["recall"],
            f1=doc["f1"],
            rule_count=doc["rule_count"],
            matches=tuple((int(g), int(h), float(s)) for g, h, s in doc["matches"]),
            recalled=tuple(
                (int(h), None if g is None else int(g), float(s)) for h, g, s in doc["recalled"]
            ),
            config=AlignmentConfig(doc["tau_precision"], doc["tau_recall"]),
        )


def _texts(rules: Sequence[Rule | str]) -> list[str]:
    return [r.text if isinstance(r, Rule) else r for r in rules]


def similarity_matrix(gen: Sequence[Rule | str], human: Sequence[Rule | str], scorer) -> np.ndarray:
    """Scores for every (generated, human) pair; rows are generated rules."""
    g, h = _texts(gen), _texts(human)
    if hasattr(scorer, "score_matrix"):
        try:
            return np.asarray(scorer.score_matrix(g, h), dtype=float).reshape(len(g), len(h))
        except ScorerError:
            raise
        except Exception as exc:
            raise ScorerError(f"batch scoring failed: {exc}") from exc
    sims = np.zeros((len(g), len(h)))
    for i, a in enumerate(g):
        for j, b in enumerate(h):
            try:
                sims[i, j] = scorer.score(a, b)
            except Exception as exc:
                raise ScorerError(
                    f"scorer failed on generated rule {i} vs human rule {j}: {exc}"
                ) from exc
    return sims


def precision(gen, human, scorer, cfg: AlignmentConfig = AlignmentConfig()) -> float:
    if not gen:
        raise ValueError("precision is undefined for an empty generated rubric")
    if not human:
        return 0.0
    best = similarity_matrix(gen, human, scorer).max(axis=1)
    return float(np.count_nonzero(best >= cfg.tau_precision) / len(gen))


def recall(gen, human, scorer, cfg: AlignmentConfig = AlignmentConfig()) -> float:
    if not human:
        raise ConfigurationError("recall needs a non-empty human rubric")
    if not gen:
        return 0.0
    best = similarity_matrix(gen, human, scorer).max(axis=0)
    return float(np.count_nonzero(best >= cfg.tau_recall) / len(human))


def f1(p: float, r: float) -> float:
    if not (0.0 <= p <= 1.0 and 0.0 <= r <= 1.0):
        raise ValueError(f"precision and recall must lie in [0, 1], got {p}, {r}")
    if p + r == 0:
        return 0.0
    return 2 * p * r / (p + r)


def align(
    generated: GeneratedRubric,
    item: AssessmentItem,
    scorer,
    cfg: AlignmentConfig = AlignmentConfig(),
) -> AlignmentReport:
    human = human_rules(item)
    if not human:
        raise ConfigurationError(f"item {item.id!r} has no human analytic rubric")
    gen = list(generated.rules)
    if not gen:
        return AlignmentReport(
            item.id, generated.setting, 0.0, 0.0, 0.0, 0,
            matches=(),
            recalled=tuple((j, None, 0.0) for j in range(len(human))),
            config=cfg,
        )
    sims = similarity_matrix(gen, human, scorer)
    best_h = sims.argmax(axis=1)
    best_g = sims.argmax(axis=0)
    matches = tuple((i, int(best_h[i]), float(sims[i, best_h[i]])) for i in range(len(gen)))
    recalled = tuple((j, int(best_g[j]), float(sims[best_g[j], j])) for j in range(len(human)))
    p = sum(s >= cfg.tau_precision for _, _, s in matches) / len(gen)
    r = sum(s >= cfg.tau_recall for _, _, s in recalled) / len(human)
    return AlignmentReport(
        item.id, generated.setting, p, r, f1(p, r), len(gen), matches, recalled, cfg
    )
