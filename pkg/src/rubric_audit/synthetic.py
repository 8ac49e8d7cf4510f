"""Synthetic item corpus and a deterministic simulated model for offline runs.

The simulated model reads a rendered transcript and answers the way a
rubric-following grader plausibly would: generated rubrics drift from the
human rules in setting-dependent ways, and grades come from counting how
many rubric rules a response covers. It exists to record the mock fixture
that ships with the repository and to drive demos; nothing in the metric or
grading code depends on it.
"""

from __future__ import annotations

import hashlib
import json
import random
import re
import tempfile
from collections.abc import Sequence
from pathlib import Path

from .gateway import FunctionBackend
from .items import AssessmentItem, GradeLabel, StudentResponse, dump_items
from .prompts import RULE_SEPARATOR, ChatTranscript

__all__ = ["SyntheticModel", "build_items", "write_fixtures", "FIGURE_ITEM_ID", "FIXTURE_CONFIG"]

FIGURE_ITEM_ID = "thermal-dishes"

TRINOMIAL = ("Beginning", "Developing", "Proficient")
BINOMIAL = ("Beginning", "Proficient")

# (id, task, analytic rules, level names, per-label pool sizes, topic words)
_ITEM_TABLE: list[tuple[str, str, list[str], tuple[str, ...], tuple[int, ...], list[str]]] = [
    (
        FIGURE_ITEM_ID,
        "This task is measuring a student's proficiency in the following: Develop a model that "
        "explains how particle motion changes when thermal energy is transferred to or from a "
        "substance without changing state. Shwan had 3 dishes of water at room temperature. She "
        "cooled one dish, causing thermal energy to transfer from that dish to surroundings. She "
        "kept the middle dish at room temperature. She transferred thermal energy into the third "
        "dish by heating it. Then Shwan dropped a red-coated chocolate candy into each dish. "
        "Construct a model that shows what is happening to water particles and red dye particles "
        "in each dish.",
        [
            "Water and dye molecules move slowly when the water is cold, faster when at room "
            "temperature, and faster when the water is hot.",
            "The key identifies water and dye particles.",
            "The key identifies the particle’s motion (faster/slower).",
            "The answer is a meaningful sentence.",
        ],
        TRINOMIAL,
        (20, 20, 20),
        ["water", "dye", "particles", "dish"],
    ),
    (
        "ball-inflation",
        "A basketball was left outside on a hot afternoon and brought into a cold garage at night. "
        "Explain, using a particle model, why the ball looks more inflated in the afternoon than "
        "at night.",
        [
            "When thermal energy is transferred to the ball, air particles inside the ball move faster.",
            "Faster moving air particles hit the inside wall of the ball more often and push it outward.",
        ],
        TRINOMIAL,
        (20, 20, 20),
        ["ball", "air", "particles", "garage"],
    ),
    (
        "heated-water-temperature",
        "Explain how your model shows that transferring thermal energy to water changes the "
        "movement of water molecules and temperature of water.",
        [
            "When the average kinetic energy of particles increases, the temperature increases.",
            "Transferring thermal energy to water makes water molecules move faster.",
        ],
        TRINOMIAL,
        (20, 20, 20),
        ["water", "molecules", "energy", "heating"],
    ),
    (
        "metal-spoon",
        "A metal spoon is placed in a cup of hot cocoa. After a few minutes the handle of the "
        "spoon feels warm. Develop a model that explains how thermal energy moves through the spoon.",
        [
            "Thermal energy transfers from the hot cocoa to the spoon particles by collisions.",
            "Particles in the spoon pass energy to neighboring particles toward the handle.",
            "The handle particles vibrate faster so the handle becomes warmer.",
        ],
        TRINOMIAL,
        (20, 20, 20),
        ["spoon", "cocoa", "particles", "handle"],
    ),
    (
        "ice-melting-tray",
        "Two ice cubes are placed on a metal tray and a plastic tray at room temperature. Explain "
        "which ice cube melts first and why, in terms of thermal energy transfer.",
        [
            "The ice on the metal tray melts first because metal transfers thermal energy faster.",
            "Thermal energy moves from the warmer tray to the colder ice.",
        ],
        BINOMIAL,
        (30, 30),
        ["ice", "tray", "metal", "plastic"],
    ),
    (
        "perfume-spread",
        "A bottle of perfume is opened in the corner of a warm room and in the corner of a cool "
        "room. Explain with a particle model why the smell spreads faster in the warm room.",
        [
            "Perfume particles move faster in the warm room than in the cool room.",
            "Faster moving perfume particles spread through the air of the room more quickly.",
        ],
        TRINOMIAL,
        (8, 26, 26),
        ["perfume", "smell", "room", "particles"],
    ),
    (
        "balloon-freezer",
        "A balloon is placed in a freezer for one hour. Explain, using particle motion, why the "
        "balloon shrinks.",
        [
            "Thermal energy transfers from the balloon air to the cold freezer.",
            "The air particles inside the balloon slow down and hit the balloon wall less often.",
        ],
        BINOMIAL,
        (30, 30),
        ["balloon", "freezer", "air", "particles"],
    ),
    (
        "sun-sand-water",
        "On a sunny day, the sand at a beach feels hotter than the water. Construct an explanation "
        "of how thermal energy from the sun changes the motion of particles in sand and water.",
        [
            "Energy from the sun is transferred to sand particles and water particles.",
            "Sand particles speed up more than water particles for the same energy transfer.",
            "The faster particle motion in sand means the sand has a higher temperature.",
        ],
        TRINOMIAL,
        (20, 20, 20),
        ["sand", "sun", "beach", "water"],
    ),
    (
        "thermometer-liquid",
        "The liquid in a thermometer rises when the thermometer is placed in warm water. Develop a "
        "model that explains why the liquid rises.",
        [
            "Thermal energy from the warm water makes the liquid particles in the thermometer move faster.",
            "Faster moving liquid particles spread farther apart so the liquid takes up more space and rises.",
        ],
        TRINOMIAL,
        (20, 20, 20),
        ["thermometer", "liquid", "tube", "water"],
    ),
    (
        "cooling-soup",
        "A bowl of hot soup is left on the kitchen table. Explain how the motion of the soup "
        "particles changes as the soup cools down.",
        [
            "Thermal energy transfers from the hot soup to the cooler air around it.",
            "The soup particles move slower as the soup loses thermal energy.",
        ],
        BINOMIAL,
        (30, 30),
        ["soup", "bowl", "table", "particles"],
    ),
    (
        "food-coloring",
        "Drops of food coloring are added to a glass of cold water and a glass of hot water. "
        "Explain with a particle model why the color spreads faster in the hot water.",
        [
            "Water particles in the hot water move faster than water particles in the cold water.",
            "Faster water particles bump the food coloring particles so the color mixes more quickly.",
        ],
        TRINOMIAL,
        (20, 20, 20),
        ["coloring", "glass", "water", "color"],
    ),
    (
        "bike-tire",
        "A bike tire is pumped up in the morning and feels harder after riding for an hour on a hot "
        "road. Explain what happens to the air particles inside the tire.",
        [
            "The hot road transfers thermal energy to the air inside the tire.",
            "The air particles move faster and push harder on the inside of the tire.",
            "The student describes the change in particle motion with temperature.",
        ],
        TRINOMIAL,
        (20, 20, 20),
        ["tire", "road", "air", "bike"],
    ),
]

_HOLISTIC = {
    "Proficient": "Student develops a model that fully explains {topic} using particle motion "
    "and thermal energy transfer.",
    "Developing": "Student develops a model that partially explains {topic} using particle "
    "motion and thermal energy transfer.",
    "Beginning": "Student does not at all develop a model that explains {topic} using particle "
    "motion and thermal energy transfer.",
}

_FIGURE_HOLISTIC = {
    "Proficient": "Student develops a model that fully identifies both water and dye particles and "
    "their motions while describing that water molecules move faster at higher temperatures (and "
    "vice versa).",
    "Developing": "Student develops a model that partially identifies both water and dye particles "
    "and their motion while describing that water molecules move faster at higher temperatures "
    "(and vice versa).",
    "Beginning": "Student does not at all develop a model that identifies both water and dye "
    "particles and their motion while describing that water molecules move faster at higher "
    "temperatures (Vice Versa).",
}

_OPENERS = ["I think", "In my model", "My drawing shows that", "Basically", "I noticed that"]
_FILLERS = [
    "There is {w0} and {w1} in the picture.",
    "The {w0} changes when it gets hot or cold.",
    "I am not sure what happens to the {w1}.",
    "Something happens to the {w0} over time.",
    "The {w1} look different in each one.",
]

_STOPWORDS = frozenset(
    "a an and are as at be by each for from in is it its of on or so than that the their them "
    "then there this to when while with more less does not".split()
)


def _rng(*parts: object) -> random.Random:
    material = "\x1f".join(str(p) for p in parts).encode("utf-8")
    return random.Random(int.from_bytes(hashlib.sha256(material).digest()[:8], "big"))


def _words(text: str) -> list[str]:
    return re.findall(r"[a-z]+", text.lower())


def content_words(text: str) -> set[str]:
    return {w for w in _words(text) if w not in _STOPWORDS and len(w) > 2}


def _evidence(rule: str, rng: random.Random) -> str:
    words = rule.rstrip(".").split()
    if len(words) > 6:
        del words[rng.randrange(1, len(words))]
    sentence = " ".join(words)
    return f"{rng.choice(_OPENERS)} {sentence[0].lower()}{sentence[1:]}."


def _responses(
    item_id: str, rules: Sequence[str], labels: Sequence[GradeLabel], sizes: Sequence[int],
    topic: Sequence[str], seed: int,
) -> list[StudentResponse]:
    out = []
    L = len(labels)
    for lab, size in zip(labels, sizes):
        for k in range(size):
            rng = _rng(seed, item_id, lab.name, k)
            if lab.ordinal == L - 1:
                shown = list(range(len(rules)))
            elif lab.ordinal == 0:
                shown = [] if rng.random() < 0.7 else [rng.randrange(len(rules))]
            else:
                m = max(1, len(rules) // 2)
                shown = rng.sample(range(len(rules)), m)
            parts = [_evidence(rules[i], rng) for i in sorted(shown)]
            for _ in range(rng.randint(1, 2)):
                w0, w1 = rng.sample(list(topic), 2)
                parts.insert(rng.randrange(len(parts) + 1), rng.choice(_FILLERS).format(w0=w0, w1=w1))
            out.append(StudentResponse(f"{item_id}-{lab.name[0].lower()}{k:03d}", " ".join(parts), lab))
    return out


def build_items(seed: int = 0) -> list[AssessmentItem]:
    """The synthetic twelve-item corpus, deterministic in ``seed``."""
    items = []
    for item_id, task, rules, levels, sizes, topic in _ITEM_TABLE:
        labels = tuple(GradeLabel(name, i) for i, name in enumerate(levels))
        if item_id == FIGURE_ITEM_ID:
            holistic = tuple((name, _FIGURE_HOLISTIC[name]) for name in levels)
        else:
            phrase = f"the {topic[0]} and {topic[1]} observations"
            holistic = tuple((name, _HOLISTIC[name].format(topic=phrase)) for name in levels)
        items.append(
            AssessmentItem(
                id=item_id,
                task_description=task,
                holistic_rubric=holistic,
                analytic_rubric=tuple(rules),
                labels=labels,
                responses=tuple(_responses(item_id, rules, labels, sizes, topic, seed)),
            )
        )
    return items


# -- simulated model ---------------------------------------------------------

_EXTRA_RULES = [
    "The answer uses correct scientific vocabulary.",
    "The student draws a labeled diagram of the system.",
    "The response is written in complete sentences with correct spelling.",
    "The student states a claim supported by evidence from the investigation.",
]
_FLIPS = {
    "faster": "slower", "slower": "faster", "increases": "decreases", "decreases": "increases",
    "hot": "cold", "cold": "hot", "more": "less", "warm": "cool", "higher": "lower",
}

# Probabilities of (keep, flip, vague, keyword, drop) per human rule, and extra-rule count.
_PROFILES = {
    "none": ((0.30, 0.05, 0.35, 0.10, 0.20), (1, 2)),
    "oneshot": ((0.50, 0.20, 0.15, 0.05, 0.10), (1, 2)),
    "fullshot": ((0.65, 0.10, 0.10, 0.05, 0.10), (0, 1)),
    "fullshot_holistic": ((0.80, 0.05, 0.05, 0.05, 0.05), (0, 1)),
    "fullshot_graded": ((0.25, 0.05, 0.10, 0.50, 0.10), (1, 2)),
}

_FIELD = re.compile(r"^- __(?P<label>[^_]+?):__ (?P<body>.*)$", re.MULTILINE)


def _fields(content: str) -> dict[str, str]:
    return {m["label"]: m["body"] for m in _FIELD.finditer(content)}


class SyntheticModel:
    """Deterministic stand-in for a chat model, keyed on the transcript text."""

    def __init__(self, items: Sequence[AssessmentItem], seed: int = 0) -> None:
        self.by_task = {it.task_description: it for it in items}
        self.seed = seed

    def __call__(self, transcript: ChatTranscript) -> str:
        instruction = transcript.messages[1].content
        if instruction.startswith("Your job is to provide the analytic rubric"):
            return self._rubric(transcript)
        return self._grade(transcript)

    def _rng(self, transcript: ChatTranscript) -> random.Random:
        return _rng(self.seed, transcript.canonical())

    @staticmethod
    def _profile(transcript: ChatTranscript, fields: dict[str, str]) -> str:
        pairs = transcript.example_pairs()
        if pairs == 0:
            return "none"
        if pairs == 1:
            return "oneshot"
        if any(label.startswith("Graded Response") for label in fields):
            return "fullshot_graded"
        if "Holistic Rubric" in fields:
            return "fullshot_holistic"
        return "fullshot"

    def _rubric(self, transcript: ChatTranscript) -> str:
        fields = _fields(transcript.messages[-1].content)
        item = self.by_task[fields["Task"]]
        profile = self._profile(transcript, fields)
        weights, (lo, hi) = _PROFILES[profile]
        rng = self._rng(transcript)
        rules = []
        for rule in item.analytic_rubric:
            action = rng.choices(["keep", "flip", "vague", "keyword", "drop"], weights)[0]
            words = rule.rstrip(".").split()
            if action == "keep":
                if len(words) > 7:
                    del words[rng.randrange(1, len(words))]
                rules.append(" ".join(words) + ".")
            elif action == "flip":
                rules.append(" ".join(_FLIPS.get(w, w) for w in words[: max(3, len(words) // 2)])
                             + " in the student's model.")
            elif action == "vague":
                rules.append("Explanation of the change in " + " ".join(words[-3:]) + ".")
            elif action == "keyword":
                keys = sorted(content_words(rule))[:2]
                rules.append("The model shows the " + " and ".join(keys) + ".")
        for _ in range(rng.randint(lo, hi)):
            rules.append(rng.choice(_EXTRA_RULES))
        if not rules:
            rules.append(rng.choice(_EXTRA_RULES))
        if profile == "none":
            return "Here is the analytic rubric:\n" + "\n".join(
                f"{i}. {r}" for i, r in enumerate(rules, 1)
            )
        return f"- __Analytic Rubric:__ {f' {RULE_SEPARATOR} '.join(rules)}"

    def _grade(self, transcript: ChatTranscript) -> str:
        fields = _fields(transcript.messages[-1].content)
        item = self.by_task[fields["Context"]]
        names = [lab.name for lab in item.labels]
        response = fields["Student Response"]
        rng = self._rng(transcript)
        rubric = fields.get("Rubric")
        analytic = "strictly following the Analytic Rubric" in transcript.messages[1].content
        if rubric is None or not analytic:
            level = rng.randrange(len(names))
            reason = "I judged the response as a whole."
        else:
            rules = [r.strip() for r in rubric.split(RULE_SEPARATOR) if r.strip()]
            present = content_words(response)
            met = 0
            for rule in rules:
                words = content_words(rule)
                if words and len(words & present) / len(words) >= 0.6:
                    met += 1
            frac = met / len(rules) if rules else 0.0
            level = min(len(names) - 1, int(frac * len(names)))
            if rng.random() < 0.25:
                level = min(len(names) - 1, max(0, level + rng.choice([-1, 1])))
            reason = f"The response satisfies {met} of {len(rules)} rubric rules."
        if rng.random() < 0.02:
            return f"{reason} I would place it at the {names[level].lower()} level."
        return f"{reason} Rating: [[{names[level]}]]"


FIXTURE_CONFIG = {
    "items": "fixtures/items.json",
    "backend": "mock:fixtures/mock_responses.json",
    "seed": 0,
    "n": 30,
    "out": "runs/fixture",
    "cache": "runs/fixture-cache.jsonl",
}


def write_fixtures(root: str | Path = ".") -> dict[str, Path]:
    """Write the synthetic item file, run config, and recorded mock responses under ``root``.

    The mock responses are recorded by running the pipeline once with
    :class:`SyntheticModel` as the backend into a scratch run directory.
    """
    # experiment imports this module for the "sim" backend
    from .experiment import ExperimentConfig, record_fixture

    root = Path(root)
    (root / "fixtures").mkdir(parents=True, exist_ok=True)
    items = build_items(0)
    paths = {
        "items": root / FIXTURE_CONFIG["items"],
        "config": root / "fixtures/config.json",
        "mock": root / FIXTURE_CONFIG["backend"][len("mock:"):],
    }
    dump_items(items, paths["items"])
    paths["config"].write_text(json.dumps(FIXTURE_CONFIG, indent=2) + "\n", encoding="utf-8")
    with tempfile.TemporaryDirectory() as scratch:
        cfg = ExperimentConfig.from_dict(
            {**FIXTURE_CONFIG, "items": str(paths["items"]), "backend": "sim",
             "out": scratch, "cache": None}
        )
        record_fixture(cfg, FunctionBackend(SyntheticModel(items, 0)), paths["mock"])
    return paths
