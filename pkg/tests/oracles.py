"""Independent reference implementations the library is checked against.

Each oracle is written from the metric's definition, without sharing code
with the package.
"""

from __future__ import annotations

import math
import re
import string

import mpmath


def allocation_oracle(n, pools):
    """Deal n slots round-robin with caps, then keep cycling from ordinal 0 to backfill."""
    L = len(pools)
    counts = [0] * L
    for slot in range(n):
        i = slot % L
        if counts[i] < pools[i]:
            counts[i] += 1
    i = 0
    while sum(counts) < min(n, sum(pools)):
        if counts[i] < pools[i]:
            counts[i] += 1
        i = (i + 1) % L
    return counts


def jaccard_oracle(a, b):
    def words(s):
        return set("".join(ch for ch in s.lower() if ch not in string.punctuation).split())

    wa, wb = words(a), words(b)
    union = wa | wb
    return 1.0 if not union else len(wa & wb) / len(union)


def alignment_oracle(gen, human, tau_p=0.5, tau_r=0.6, score=jaccard_oracle):
    """Exhaustive double loop: (precision, recall, f1, best human per gen, best gen per human)."""
    if not gen:
        return 0.0, 0.0, 0.0, [], [None] * len(human)
    best_h = []
    good = 0
    for g in gen:
        top, arg = -1.0, None
        for j, h in enumerate(human):
            s = score(g, h)
            if s > top:
                top, arg = s, j
        best_h.append(arg)
        good += top >= tau_p
    best_g = []
    hit = 0
    for h in human:
        top, arg = -1.0, None
        for i, g in enumerate(gen):
            s = score(g, h)
            if s > top:
                top, arg = s, i
        best_g.append(arg)
        hit += top >= tau_r
    p, r = good / len(gen), hit / len(human)
    f = 0.0 if p + r == 0 else 2 * p * r / (p + r)
    return p, r, f, best_h, best_g


_RATING = re.compile(r"\[\[([^\[\]]*)\]\]")


def rating_oracle(completion, label_names):
    """Last ``[[...]]`` token wins; match case-insensitively after trimming."""
    found = _RATING.findall(completion)
    if not found:
        return None, "missing_rating"
    token = found[-1].strip().lower()
    for name in label_names:
        if name.lower() == token:
            return name, "parsed"
    return None, "unknown_label"


mpmath.mp.dps = 30


def t_two_tailed_oracle(t, df):
    """2 * integral of the Student t density from |t| to infinity."""
    t = abs(mpmath.mpf(t))
    nu = mpmath.mpf(df)
    c = mpmath.gamma((nu + 1) / 2) / (mpmath.sqrt(nu * mpmath.pi) * mpmath.gamma(nu / 2))

    def pdf(x):
        return c * (1 + x * x / nu) ** (-(nu + 1) / 2)

    return float(2 * mpmath.quad(pdf, [t, mpmath.inf]))


def paired_t_oracle(diffs):
    n = len(diffs)
    mean = sum(diffs) / n
    sd = math.sqrt(sum((d - mean) ** 2 for d in diffs) / (n - 1))
    t = mean / (sd / math.sqrt(n))
    return t, t_two_tailed_oracle(t, n - 1)


def spearman_rank_formula(xs, ys):
    """1 - 6 sum d^2 / (n (n^2 - 1)) for tie-free data."""
    def ranks(v):
        order = sorted(range(len(v)), key=lambda i: v[i])
        r = [0] * len(v)
        for pos, i in enumerate(order, 1):
            r[i] = pos
        return r

    rx, ry = ranks(xs), ranks(ys)
    n = len(xs)
    d2 = sum((a - b) ** 2 for a, b in zip(rx, ry))
    return 1 - 6 * d2 / (n * (n * n - 1)), d2


_NOISE = "abc xyz Rating: rating [ ] [[ ]] .,;:!?\n\t"


def random_completion(rng, label_names):
    """Random prefix/suffix text around 0-3 bracketed tokens in mixed case."""
    def noise():
        return "".join(rng.choice(_NOISE) for _ in range(rng.randint(0, 12)))

    def token():
        pick = rng.random()
        if pick < 0.6:
            base = rng.choice(label_names)
        elif pick < 0.8:
            base = rng.choice(["Expert", "", "Begin ning", "4", "Developing]"])
        else:
            base = "".join(rng.choice("abcXYZ [") for _ in range(rng.randint(0, 6)))
        cased = "".join(ch.upper() if rng.random() < 0.5 else ch.lower() for ch in base)
        pad = " " * rng.randint(0, 2)
        return f"[[{pad}{cased}{pad}]]"

    parts = [noise()]
    for _ in range(rng.randint(0, 3)):
        parts += [token(), noise()]
    return "".join(parts)
