"""Render the two prompt families for a fixture item and show their shape.

    python3 demos/prompt_templates.py
"""

from pathlib import Path

from rubric_audit.items import load_items
from rubric_audit.prompts import GenerationSetting, RubricVariant, render_grading_prompt, render_rubric_prompt

ROOT = Path(__file__).resolve().parents[1]
items = {it.id: it for it in load_items(ROOT / "fixtures/items.json")}
target, example = items["thermal-dishes"], items["ball-inflation"]

gen = render_rubric_prompt(target, GenerationSetting("oneshot"), [example])
print(gen.render())
print("wire roles:", [m["role"] for m in gen.to_wire()])

# full-shot: every other item becomes a worked example
others = [it for it in items.values() if it.id != target.id]
full = render_rubric_prompt(target, GenerationSetting("fullshot", include_holistic=True), others)
print(f"\nfull-shot transcript: {len(full.messages)} messages, {full.example_pairs()} example pairs")

# grading with the human analytic rubric slotted in
response = target.pool(target.labels[0])[0]
grade = render_grading_prompt(target, RubricVariant.human_of(target), response)
print("\n" + grade.messages[-1].content)
