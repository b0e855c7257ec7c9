"""Rank tests and descriptive statistics.

``mann_whitney`` is exact for small samples: the null distribution of the
rank sum is counted over every split of the pooled midranks, ties included.
Larger samples use the tie-corrected normal approximation with a 0.5
continuity correction.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np

EXACT_MAX_N = 20
CONTINUITY = 0.5


@dataclass(frozen=True)
class MannWhitneyResult:
    u_statistic: float
    p_two_sided: float
    method: str
    n1: int
    n2: int

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class EcdfCurve:
    values: tuple[float, ...]
    fractions: tuple[float, ...]
    n: int

    def as_dict(self) -> dict:
        return {"values": list(self.values), "fractions": list(self.fractions), "n": self.n}


def normal_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def normal_sf(x: float) -> float:
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def rankdata(values) -> np.ndarray:
    """1-based ranks with ties assigned their mean rank."""
    a = np.asarray(values, dtype=float)
    order = np.argsort(a, kind="mergesort")
    sorted_a = a[order]
    ranks = np.empty(len(a))
    i = 0
    n = len(a)
    while i < n:
        j = i
        while j + 1 < n and sorted_a[j + 1] == sorted_a[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _exact_tail(doubled_ranks: list[int], n1: int, observed: int) -> float:
    """P(|S - E[S]| >= |observed - E[S]|) for S the doubled rank sum of a random n1-subset.

    Counts subset sums with a dynamic program over (size, sum); the counts
    equal those of enumerating all C(n, n1) assignments.
    """
    n = len(doubled_ranks)
    center = n1 * (n + 1)  # E[S] = 2 * n1 * (n + 1) / 2
    dev = abs(observed - center)
    # counts[k][s]: number of k-subsets with doubled rank sum s
    counts: list[dict[int, int]] = [dict() for _ in range(n1 + 1)]
    counts[0][0] = 1
    for r in doubled_ranks:
        for k in range(n1 - 1, -1, -1):
            row = counts[k]
            if not row:
                continue
            nxt = counts[k + 1]
            for s, c in row.items():
                nxt[s + r] = nxt.get(s + r, 0) + c
    dist = counts[n1]
    hits = sum(c for s, c in dist.items() if abs(s - center) >= dev)
    return hits / math.comb(n, n1)


def mann_whitney(a: Sequence[float], b: Sequence[float], method: str = "auto") -> MannWhitneyResult:
    """Two-sided Mann-Whitney U test.

    Parameters
    ----------
    a, b : samples
    method : {"auto", "exact", "approx"}
        "auto" is exact when ``len(a) + len(b) <= 20``.

    Returns
    -------
    MannWhitneyResult
        ``u_statistic`` is U for ``a``: the number of pairs with a > b plus
        half the ties.
    """
    x = np.asarray(a, dtype=float)
    y = np.asarray(b, dtype=float)
    n1, n2 = len(x), len(y)
    if n1 == 0 or n2 == 0:
        raise ValueError("mann_whitney needs two nonempty samples")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("samples must be finite")
    if method == "auto":
        method = "exact" if n1 + n2 <= EXACT_MAX_N else "approx"
    if method not in ("exact", "approx"):
        raise ValueError(f"unknown method {method!r}")

    ranks = rankdata(np.concatenate([x, y]))
    r1 = float(ranks[:n1].sum())
    u = r1 - n1 * (n1 + 1) / 2.0
    mu = n1 * n2 / 2.0

    if method == "exact":
        # midranks are multiples of 1/2, so doubled values are exact integers
        doubled = [int(round(2 * r)) for r in ranks]
        p = _exact_tail(doubled, n1, int(round(2 * r1)))
    else:
        n = n1 + n2
        _, counts = np.unique(ranks, return_counts=True)
        tie_term = float((counts**3 - counts).sum())
        var = n1 * n2 / 12.0 * ((n + 1) - tie_term / (n * (n - 1))) if n > 1 else 0.0
        if var <= 0:
            p = 1.0
        else:
            z = max(abs(u - mu) - CONTINUITY, 0.0) / math.sqrt(var)
            p = 2.0 * normal_sf(z)
    return MannWhitneyResult(float(u), min(max(p, 0.0), 1.0), method, n1, n2)


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or len(x) < 2:
        raise ValueError("pearson needs two equal-length samples of size >= 2")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = math.sqrt(float(dx @ dx))
    sy = math.sqrt(float(dy @ dy))
    if sx == 0.0 or sy == 0.0:
        raise ValueError("correlation undefined for a constant sample")
    r = float(dx @ dy) / (sx * sy)
    return min(max(r, -1.0), 1.0)


def ecdf(sample: Sequence[float]) -> EcdfCurve:
    """Step points ``(v, #(x <= v) / n)`` at each distinct value."""
    s = np.sort(np.asarray(sample, dtype=float))
    n = len(s)
    if n == 0:
        raise ValueError("ecdf of an empty sample")
    values, counts = np.unique(s, return_counts=True)
    cum = np.cumsum(counts)
    fractions = [float(c) / n for c in cum]
    fractions[-1] = 1.0
    return EcdfCurve(tuple(float(v) for v in values), tuple(fractions), n)


def median(sample: Sequence[float]) -> float:
    s = sorted(float(v) for v in sample)
    n = len(s)
    if n == 0:
        raise ValueError("median of an empty sample")
    mid = n // 2
    return s[mid] if n % 2 else 0.5 * (s[mid - 1] + s[mid])


def zscore(sample: Sequence[float]) -> np.ndarray:
    """Scale to zero mean and unit population variance."""
    x = np.asarray(sample, dtype=float)
    if len(x) == 0:
        raise ValueError("zscore of an empty sample")
    if np.ptp(x) == 0:
        raise ValueError("zscore undefined for a constant sample")
    centered = x - x.mean()
    sd = math.sqrt(float(centered @ centered) / len(x))
    z = centered / sd
    # one correction pass removes rounding residue in mean and scale
    z = z - z.mean()
    return z / math.sqrt(float(z @ z) / len(z))


def write_ecdf(curve: EcdfCurve, path: str | os.PathLike) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("value", "fraction"))
        for v, f in zip(curve.values, curve.fractions):
            w.writerow((repr(v), repr(f)))
