"""Role-play chat templates for rubric generation and response grading.

Both templates follow the same three-round shape: an instruction round
(system prompt, user instruction, agent acknowledgement), zero or more
in-context example rounds (user turn plus agent answer), and a final user
turn that awaits completion.
"""

from __future__ import annotations

import json
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Literal

from .items import AssessmentItem, GradeLabel, StudentResponse, select_graded_examples, seeded_rng

__all__ = [
    "ChatMessage",
    "ChatTranscript",
    "GenerationSetting",
    "RubricVariant",
    "ConfigurationError",
    "TranscriptError",
    "SYSTEM_PROMPT",
    "RULE_SEPARATOR",
    "render_markdown_block",
    "render_rubric_prompt",
    "render_grading_prompt",
    "choose_example_items",
    "holistic_text",
    "scale_text",
]

Role = Literal["system", "user", "agent"]

SYSTEM_PROMPT = (
    "The agent is an impartial science educator working in a middle school. "
    "His job is working under the supervision of the User."
)
ACKNOWLEDGEMENT = "I will begin to work on my job."
RUBRIC_INSTRUCTION = (
    "Your job is to provide the analytic rubric for a science item. "
    "The analytic rubric includes a minimum set of rules, each of which covers a specific "
    "required action, and their complete collection describes the requirements of the entire task."
)
# Stand-in wording: the graded-response sentence is not part of the published template.
GRADED_RESPONSES_INSTRUCTION = (
    "Human-graded student responses to the item are provided for reference."
)
GRADING_INSTRUCTION_HOLISTIC = (
    "Your job is to evaluate the quality of the response provided by a student to a science item."
)
GRADING_INSTRUCTION_ANALYTIC = (
    "Your job is to evaluate the quality of student responses strictly following the "
    "Analytic Rubric provided previously."
)
RULE_SEPARATOR = "|||"

_ROLE_TITLES = {"system": "System", "user": "User", "agent": "Agent"}


class ConfigurationError(ValueError):
    """The requested prompt cannot be built from the given inputs."""


class TranscriptError(ValueError):
    """A transcript violates its role-ordering invariants."""


@dataclass(frozen=True)
class ChatMessage:
    role: Role
    content: str

    def __post_init__(self) -> None:
        if self.role not in _ROLE_TITLES:
            raise TranscriptError(f"unknown role {self.role!r}")
        if not self.content:
            raise TranscriptError(f"{self.role} message has empty content")


@dataclass(frozen=True)
class ChatTranscript:
    """An ordered conversation awaiting the agent's next turn.

    ``rounds`` records how many messages each round holds so the transcript
    can be rendered with a blank line between rounds; it does not take part
    in equality or in the wire form.
    """

    messages: tuple[ChatMessage, ...]
    rounds: tuple[int, ...] = field(default=(), compare=False)

    def __post_init__(self) -> None:
        msgs = self.messages
        if not msgs or msgs[0].role != "system":
            raise TranscriptError("transcript must start with a system message")
        if any(m.role == "system" for m in msgs[1:]):
            raise TranscriptError("only the first message may be a system message")
        for i, m in enumerate(msgs[1:]):
            expected = "user" if i % 2 == 0 else "agent"
            if m.role != expected:
                raise TranscriptError(f"message {i + 1}: expected {expected}, got {m.role}")
        if msgs[-1].role != "user":
            raise TranscriptError("final message must be a user request")
        if self.rounds and sum(self.rounds) != len(msgs):
            raise TranscriptError("round sizes do not cover the transcript")

    def example_pairs(self) -> int:
        """Number of in-context user/agent pairs after the instruction round."""
        return (len(self.messages) - 4) // 2

    def to_wire(self) -> list[dict[str, str]]:
        """Chat-completion ``messages`` array; the agent role maps to ``assistant``."""
        return [
            {"role": "assistant" if m.role == "agent" else m.role, "content": m.content}
            for m in self.messages
        ]

    def canonical(self) -> str:
        return json.dumps(
            [[m.role, m.content] for m in self.messages],
            ensure_ascii=False,
            separators=(",", ":"),
        )

    def render(self) -> str:
        """Human-readable text form used by the golden files."""
        sizes = self.rounds or (len(self.messages),)
        blocks = []
        pos = 0
        for size in sizes:
            lines = []
            for m in self.messages[pos : pos + size]:
                title = _ROLE_TITLES[m.role]
                sep = "\n" if m.content.startswith("- ") or "\n" in m.content else " "
                lines.append(f"{title}:{sep}{m.content}")
            blocks.append("\n".join(lines))
            pos += size
        return "\n\n".join(blocks) + "\n"


@dataclass(frozen=True)
class GenerationSetting:
    in_context: Literal["none", "oneshot", "fullshot"] = "none"
    include_holistic: bool = False
    include_graded_responses: bool = False
    max_graded: int = 5
    seed: int = 0

    def __post_init__(self) -> None:
        if self.in_context not in ("none", "oneshot", "fullshot"):
            raise ConfigurationError(f"unknown in-context mode {self.in_context!r}")
        if self.max_graded < 1:
            raise ConfigurationError("max_graded must be >= 1")


@dataclass(frozen=True)
class RubricVariant:
    """What goes into the grading prompt's rubric slot.

    ``rules_or_text`` is either a sequence of rule strings (analytic kinds) or
    a single block of text (holistic).
    """

    kind: Literal["none", "human_analytic", "generated_analytic", "holistic"]
    rules_or_text: tuple[str, ...] | str = ()

    @property
    def is_analytic(self) -> bool:
        return self.kind in ("human_analytic", "generated_analytic")

    def slot_text(self) -> str:
        if isinstance(self.rules_or_text, str):
            return self.rules_or_text.strip()
        return f" {RULE_SEPARATOR} ".join(r.strip() for r in self.rules_or_text if r.strip())

    @classmethod
    def holistic_of(cls, item: AssessmentItem) -> RubricVariant:
        return cls("holistic", holistic_text(item))

    @classmethod
    def human_of(cls, item: AssessmentItem) -> RubricVariant:
        return cls("human_analytic", tuple(item.analytic_rubric))


def render_markdown_block(label: str, body: str) -> str:
    if not label:
        raise ValueError("markdown block label must be non-empty")
    return f"- __{label}:__ {body}\n"


def _block_content(*blocks: str) -> str:
    return "".join(blocks).rstrip("\n")


def holistic_text(item: AssessmentItem) -> str:
    """Holistic descriptors on one line, highest level first."""
    return " ".join(
        f"{name} Level: {desc.strip()}" for name, desc in reversed(item.holistic_rubric)
    )


def scale_text(labels: Sequence[GradeLabel]) -> str:
    quoted = [f'"{lab.name}"' for lab in labels]
    if len(quoted) == 2:
        return f"{quoted[0]} and {quoted[1]}"
    return ", ".join(quoted[:-1]) + f", and {quoted[-1]}"


def choose_example_items(
    target: AssessmentItem, items: Sequence[AssessmentItem], setting: GenerationSetting
) -> list[AssessmentItem]:
    """In-context example items for ``target`` under ``setting``.

    Candidates are the other items that carry a human analytic rubric. One-shot
    draws one of them with the setting's seed; full-shot takes all of them in
    their original order.
    """
    if setting.in_context == "none":
        return []
    candidates = [it for it in items if it.id != target.id and it.analytic_rubric]
    if setting.in_context == "fullshot":
        return candidates
    if not candidates:
        raise ConfigurationError(f"item {target.id!r}: one-shot needs another item with a rubric")
    rng = seeded_rng(setting.seed, "oneshot", target.id)
    return [candidates[rng.randrange(len(candidates))]]


def _item_blocks(item: AssessmentItem, with_holistic: bool) -> list[str]:
    blocks = [
        render_markdown_block("Task", item.task_description),
        render_markdown_block("Total Points", str(item.level_count)),
    ]
    if with_holistic:
        blocks.append(render_markdown_block("Holistic Rubric", holistic_text(item)))
    return blocks


def render_rubric_prompt(
    item: AssessmentItem,
    setting: GenerationSetting,
    example_items: Sequence[AssessmentItem],
    graded: Sequence[StudentResponse] | None = None,
) -> ChatTranscript:
    """Render the rubric-generation transcript for ``item``.

    ``graded`` overrides the graded-response block; when omitted and the
    setting asks for graded responses, they are drawn with
    :func:`select_graded_examples` using the setting's seed.
    """
    if any(ex.id == item.id for ex in example_items):
        raise ConfigurationError(f"item {item.id!r} cannot be its own in-context example")
    if setting.in_context == "none" and example_items:
        raise ConfigurationError("setting 'none' takes no example items")
    if setting.in_context == "oneshot" and len(example_items) != 1:
        raise ConfigurationError(
            f"one-shot needs exactly one example item, got {len(example_items)}"
        )
    for ex in example_items:
        if not ex.analytic_rubric:
            raise ConfigurationError(f"example item {ex.id!r} has no analytic rubric")

    instruction = RUBRIC_INSTRUCTION
    if setting.include_graded_responses:
        instruction += " " + GRADED_RESPONSES_INSTRUCTION
    msgs = [
        ChatMessage("system", SYSTEM_PROMPT),
        ChatMessage("user", instruction),
        ChatMessage("agent", ACKNOWLEDGEMENT),
    ]
    rounds = [3]
    for ex in example_items:
        msgs.append(ChatMessage("user", _block_content(*_item_blocks(ex, setting.include_holistic))))
        rubric = f" {RULE_SEPARATOR} ".join(rule.strip() for rule in ex.analytic_rubric)
        msgs.append(ChatMessage("agent", _block_content(render_markdown_block("Analytic Rubric", rubric))))
        rounds.append(2)

    target_blocks = _item_blocks(item, setting.include_holistic)
    if setting.include_graded_responses:
        if graded is None:
            graded = select_graded_examples(item, setting.max_graded, setting.seed)
        for resp in list(graded)[: setting.max_graded]:
            target_blocks.append(
                render_markdown_block(f"Graded Response ({resp.gold_label.name})", resp.text)
            )
    msgs.append(ChatMessage("user", _block_content(*target_blocks)))
    rounds.append(1)
    return ChatTranscript(tuple(msgs), tuple(rounds))


def _grading_instruction(item: AssessmentItem, variant: RubricVariant) -> str:
    opening = GRADING_INSTRUCTION_ANALYTIC if variant.is_analytic else GRADING_INSTRUCTION_HOLISTIC
    refer = (
        "Refer to the CONTEXT while rating."
        if variant.kind == "none"
        else "Refer to the CONTEXT and RUBRIC while rating."
    )
    return (
        f"{opening} Begin your evaluation by providing a short explanation. "
        "Be as objective as possible. After providing your explanation, you must classify "
        f"the response on a scale of {scale_text(item.labels)} by strictly following this "
        f'format: [[rating]], for example: "Rating: [[{item.labels[0].name}]]". {refer}'
    )


def _grading_user_turn(item: AssessmentItem, variant: RubricVariant, text: str) -> str:
    blocks = [render_markdown_block("Context", item.task_description)]
    if variant.kind != "none":
        blocks.append(render_markdown_block("Rubric", variant.slot_text()))
    blocks.append(render_markdown_block("Student Response", text))
    return _block_content(*blocks)


def render_grading_prompt(
    item: AssessmentItem,
    variant: RubricVariant,
    response: StudentResponse,
    example: tuple[StudentResponse, GradeLabel] | None = None,
) -> ChatTranscript:
    if variant.kind != "none" and not variant.slot_text():
        raise ConfigurationError(f"rubric variant {variant.kind!r} has no content")
    if example is not None:
        ex_resp, ex_label = example
        if ex_resp.id == response.id:
            raise ConfigurationError("the in-context example must differ from the graded response")
        if ex_label not in item.labels:
            raise ConfigurationError(f"example label {ex_label.name!r} is not on the item's scale")

    msgs = [
        ChatMessage("system", SYSTEM_PROMPT),
        ChatMessage("user", _grading_instruction(item, variant)),
        ChatMessage("agent", ACKNOWLEDGEMENT),
    ]
    rounds = [3]
    if example is not None:
        ex_resp, ex_label = example
        msgs.append(ChatMessage("user", _grading_user_turn(item, variant, ex_resp.text)))
        msgs.append(ChatMessage("agent", f"Rating: [[{ex_label.name}]]"))
        rounds.append(2)
    msgs.append(ChatMessage("user", _grading_user_turn(item, variant, response.text)))
    rounds.append(1)
    return ChatTranscript(tuple(msgs), tuple(rounds))
