"""Summary statistics, Student t-tests, and Spearman rank correlation."""

from __future__ import annotations

import itertools
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy.special import betainc
from scipy.stats import rankdata

__all__ = [
    "SummaryStat",
    "TTestResult",
    "SpearmanResult",
    "UndefinedCorrelationError",
    "mean_std",
    "t_tail",
    "paired_t_test",
    "pooled_t_test",
    "spearman",
]


class UndefinedCorrelationError(ValueError):
    pass


@dataclass(frozen=True)
class SummaryStat:
    mean: float
    std: float
    n: int

    def format(self, mean_digits: int, std_digits: int = 2, scale: float = 1.0) -> str:
        return f"{self.mean * scale:.{mean_digits}f}±{self.std * scale:.{std_digits}f}"


@dataclass(frozen=True)
class TTestResult:
    t: float
    df: float
    p_two_tailed: float
    reject_at_alpha: bool
    alpha: float = 0.05
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {
            "t": self.t if math.isfinite(self.t) else str(self.t),
            "df": self.df,
            "p_two_tailed": self.p_two_tailed,
            "reject_at_alpha": self.reject_at_alpha,
            "alpha": self.alpha,
            "degenerate": self.degenerate,
        }


@dataclass(frozen=True)
class SpearmanResult:
    rho: float
    p_value: float
    n: int

    def to_dict(self) -> dict:
        return {"rho": self.rho, "p_value": self.p_value, "n": self.n}


def mean_std(xs: Sequence[float]) -> SummaryStat:
    """Mean and population standard deviation."""
    arr = np.asarray(xs, dtype=float)
    if arr.size == 0:
        raise ValueError("mean_std needs at least one value")
    return SummaryStat(float(arr.mean()), float(arr.std()), int(arr.size))


def t_tail(t: float, df: float) -> float:
    """Two-tailed p-value ``2 P(T >= |t|)`` for Student's t with ``df`` degrees of freedom.

    Uses the identity ``2 P(T >= |t|) = I_x(df/2, 1/2)`` with
    ``x = df / (df + t^2)``.
    """
    if not df > 0:
        raise ValueError(f"degrees of freedom must be positive, got {df}")
    if math.isinf(t):
        return 0.0
    if t == 0:
        return 1.0
    x = df / (df + t * t)
    return float(min(1.0, max(0.0, betainc(df / 2.0, 0.5, x))))


# Spreads this small relative to the values are rounding noise, not variation.
_ZERO_SPREAD = 1e-12


def _negligible(spread: float, scale: float) -> bool:
    return spread <= _ZERO_SPREAD * max(1.0, scale)


def _t_result(t: float, df: float, alpha: float, degenerate: bool = False) -> TTestResult:
    p = t_tail(t, df)
    return TTestResult(t, df, p, p < alpha, alpha, degenerate)


def paired_t_test(a: Sequence[float], b: Sequence[float], alpha: float = 0.05) -> TTestResult:
    """Paired two-tailed t-test on ``a - b``.

    Zero-variance differences give ``t = 0, p = 1`` when they are all zero and
    a flagged degenerate result (``t = ±inf, p = 0``) otherwise. Spreads below
    1e-12 of the data's magnitude count as zero, so a constant float shift
    such as 0.1 is caught despite rounding.
    """
    xa, xb = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if xa.shape != xb.shape or xa.ndim != 1:
        raise ValueError("paired samples must be 1-D and of equal length")
    n = xa.size
    if n < 2:
        raise ValueError("paired t-test needs at least two pairs")
    d = xa - xb
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    df = float(n - 1)
    if _negligible(sd, float(np.abs(d).max())):
        if _negligible(abs(mean), float(np.abs(d).max())):
            return TTestResult(0.0, df, 1.0, False, alpha, degenerate=False)
        return TTestResult(math.copysign(math.inf, mean), df, 0.0, True, alpha, degenerate=True)
    return _t_result(mean / (sd / math.sqrt(n)), df, alpha)


def pooled_t_test(a: Sequence[float], b: Sequence[float], alpha: float = 0.05) -> TTestResult:
    """Independent two-sample t-test with pooled variance."""
    xa, xb = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    na, nb = xa.size, xb.size
    if na < 2 or nb < 2:
        raise ValueError("pooled t-test needs at least two values per sample")
    df = float(na + nb - 2)
    diff = float(xa.mean() - xb.mean())
    pooled = ((na - 1) * xa.var(ddof=1) + (nb - 1) * xb.var(ddof=1)) / df
    se = math.sqrt(pooled * (1.0 / na + 1.0 / nb))
    scale = float(max(np.abs(xa).max(), np.abs(xb).max()))
    if _negligible(se, scale):
        if _negligible(abs(diff), scale):
            return TTestResult(0.0, df, 1.0, False, alpha)
        return TTestResult(math.copysign(math.inf, diff), df, 0.0, True, alpha, degenerate=True)
    return _t_result(diff / se, df, alpha)


def _rank_corr(rx: np.ndarray, ry: np.ndarray) -> float:
    cx, cy = rx - rx.mean(), ry - ry.mean()
    rho = float((cx @ cy) / math.sqrt((cx @ cx) * (cy @ cy)))
    return max(-1.0, min(1.0, rho))


_ALTERNATIVES = ("two-sided", "greater", "less")


def _tail_hit(value: float, observed: float, alternative: str) -> bool:
    tol = 1e-12
    if alternative == "greater":
        return value >= observed - tol
    if alternative == "less":
        return value <= observed + tol
    return abs(value) >= abs(observed) - tol


def spearman(
    xs: Sequence[float],
    ys: Sequence[float],
    exact: bool = False,
    alternative: str = "two-sided",
) -> SpearmanResult:
    """Spearman's rho with a p-value.

    Ties receive average ranks. The p-value comes from the t approximation
    with ``n - 2`` degrees of freedom, or, with ``exact=True`` and ``n <= 8``,
    from enumerating every permutation of the second ranking.
    ``alternative`` is ``"two-sided"`` (default), ``"greater"`` (rho > 0)
    or ``"less"`` (rho < 0).
    """
    if alternative not in _ALTERNATIVES:
        raise ValueError(f"alternative must be one of {_ALTERNATIVES}, got {alternative!r}")
    x, y = np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("spearman needs two 1-D sequences of equal length")
    n = x.size
    if n < 3:
        raise ValueError("spearman needs at least three pairs")
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise UndefinedCorrelationError("correlation with a constant vector is undefined")
    rx, ry = rankdata(x), rankdata(y)
    rho = _rank_corr(rx, ry)
    if exact:
        if n > 8:
            raise ValueError("exact permutation p-values are limited to n <= 8")
        hits = total = 0
        for perm in itertools.permutations(ry):
            total += 1
            if _tail_hit(_rank_corr(rx, np.asarray(perm)), rho, alternative):
                hits += 1
        return SpearmanResult(rho, hits / total, n)
    if abs(rho) >= 1.0:
        if alternative == "two-sided" or (alternative == "greater") == (rho > 0):
            return SpearmanResult(rho, 0.0, n)
        return SpearmanResult(rho, 1.0, n)
    t = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
    two = t_tail(t, n - 2)
    if alternative == "two-sided":
        return SpearmanResult(rho, two, n)
    upper = two / 2 if t > 0 else 1.0 - two / 2
    return SpearmanResult(rho, upper if alternative == "greater" else 1.0 - upper, n)
