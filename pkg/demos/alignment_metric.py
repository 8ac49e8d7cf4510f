"""Walk through the rubric alignment metric on one fixture item.

Run with ``python3 demos/alignment_metric.py`` from the repository root.
"""

from pathlib import Path

from rubric_audit.align import GeneratedRubric, JaccardScorer, align, similarity_matrix
from rubric_audit.items import load_items

ROOT = Path(__file__).resolve().parents[1]
items = {it.id: it for it in load_items(ROOT / "fixtures/items.json")}
item = items["thermal-dishes"]

human = item.analytic_rubric
print(f"{len(human)} human rules for {item.id}")
for k, rule in enumerate(human):
    print(f"  h{k}: {rule}")

# two rules copied verbatim; a loose paraphrase and two off-topic rules miss
raw = " ||| ".join([human[0], human[1], "dye spreads faster in hot water", "mentions arrows", "uses colour"])
rubric = GeneratedRubric.from_raw(item.id, "demo", raw)

# pairwise scores; precision wants > 0.5, recall wants > 0.6
scores = similarity_matrix(rubric.rules, human, JaccardScorer())
for g, row in zip(rubric.rules, scores):
    print(f"  g{g.index}: " + "  ".join(f"{v:.2f}" for v in row))

report = align(rubric, item, JaccardScorer())
print(f"precision {report.precision:.3f}  recall {report.recall:.3f}  f1 {report.f1:.3f}")
print("rules below the precision threshold:", [rubric.rules[i].text for i in report.incorrect_rules()])

# the two reference rows: no rubric at all, and the human rubric itself
empty = align(GeneratedRubric.from_raw(item.id, "no_ar", ""), item, JaccardScorer())
same = align(GeneratedRubric.from_raw(item.id, "human_ar", " ||| ".join(human)), item, JaccardScorer())
print("empty rubric:", (empty.precision, empty.recall, empty.f1))
print("human rubric:", (same.precision, same.recall, same.f1))
