"""Rating extraction, accuracy and the statistics behind the summary table.

Run with ``python3 demos/grading_and_stats.py``.
"""

from rubric_audit.grading import extract_rating
from rubric_audit.items import GradeLabel
from rubric_audit.stats import paired_t_test, spearman, t_tail

labels = [GradeLabel("Beginning", 0), GradeLabel("Developing", 1), GradeLabel("Proficient", 2)]

for completion in [
    "The particles speed up. Rating: [[Developing]]",
    "[[Beginning]] on reflection, [[proficient]]",   # last bracket wins, case folded
    "I would call this solid work.",                  # no brackets at all
    "Rating: [[Expert]]",                             # not one of the labels
]:
    label, status = extract_rating(completion, labels)
    print(f"{status:15s} {label.name if label else '-':12s} {completion!r}")

# mean F1 and accuracy per setting as published
f1 = [0.000, 1.000, 0.580, 0.664, 0.752, 0.350]
acc = [34.83, 50.41, 49.17, 49.41, 54.58, 48.41]

res = spearman(f1, acc)
print(f"\nrho = {res.rho:.4f}, t-approximation p = {res.p_value:.4g}")
print(f"one-sided p = {spearman(f1, acc, alternative='greater').p_value:.4g}")
# with n = 6 the full permutation distribution is only 720 rankings
exact_two = spearman(f1, acc, exact=True).p_value
exact_one = spearman(f1, acc, exact=True, alternative="greater").p_value
print(f"exact two-sided p = {exact_two:.4g} ({round(exact_two * 720)}/720)")
print(f"exact one-sided p = {exact_one:.4g} ({round(exact_one * 720)}/720)")

t = res.rho * ((len(f1) - 2) / (1 - res.rho**2)) ** 0.5
print(f"t = {t:.3f} on 4 df, two-tailed tail area {t_tail(t, 4):.4g}")

# per-item F1 for two settings; paired over items
a = [0.71, 0.55, 0.80, 0.62, 0.67, 0.59]
b = [0.58, 0.49, 0.70, 0.55, 0.66, 0.50]
pt = paired_t_test(a, b)
print(f"\npaired t = {pt.t:.3f}, df = {pt.df}, p = {pt.p_two_tailed:.4g}, reject = {pt.reject_at_alpha}")
print("identical inputs:", paired_t_test(a, a).p_two_tailed)
shift = paired_t_test([x + 0.1 for x in b], b)
print("constant shift:", shift.t, shift.p_two_tailed, "degenerate" if shift.degenerate else "")
