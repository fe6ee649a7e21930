"""Built-in association functions and the Fisher exact baseline.

``LogOdds`` scores two binary segments by the log odds ratio of their 2x2
table with ``epsilon`` added to each cell.  ``Pearson`` and ``Spearman``
score real-valued segments.  Each one also has a vectorised ``profile``
method, which the shift test uses to score every shift in one pass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import gammaln
from scipy.stats import rankdata

from .core import AssociationError, InvalidInputError

__all__ = [
    "ContingencyTable2x2",
    "accumulate_table",
    "log_odds_v",
    "pearson_v",
    "spearman_v",
    "fisher_exact_2x2",
    "hypergeometric_support",
    "LogOdds",
    "Pearson",
    "Spearman",
    "ASSOCIATIONS",
    "get_association",
]


@dataclass(frozen=True)
class ContingencyTable2x2:
    """Joint counts ``c_ij = #{t : x_t = i, y_t = j}`` for binary series."""

    c00: int
    c01: int
    c10: int
    c11: int

    def __post_init__(self):
        for name in ("c00", "c01", "c10", "c11"):
            c = getattr(self, name)
            if int(c) != c or c < 0:
                raise InvalidInputError(f"{name} must be a non-negative integer, got {c!r}")
            object.__setattr__(self, name, int(c))

    @property
    def total(self) -> int:
        return self.c00 + self.c01 + self.c10 + self.c11

    def as_array(self) -> np.ndarray:
        return np.array([[self.c00, self.c01], [self.c10, self.c11]])


def _check_binary(seg: np.ndarray, name: str) -> np.ndarray:
    seg = np.asarray(seg)
    bad = (seg != 0) & (seg != 1)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise InvalidInputError(f"{name} holds non-binary symbol {seg[i]!r} at index {i}")
    return seg.astype(np.int64)


def accumulate_table(x_seg: Any, y_seg: Any) -> ContingencyTable2x2:
    """Count joint occurrences of binary values in two equal-length segments."""
    x = _check_binary(x_seg, "x")
    y = _check_binary(y_seg, "y")
    if x.shape != y.shape:
        raise InvalidInputError(f"segment lengths differ: {x.size} != {y.size}")
    c11 = int(np.sum(x & y))
    c10 = int(np.sum(x)) - c11
    c01 = int(np.sum(y)) - c11
    return ContingencyTable2x2(x.size - c11 - c10 - c01, c01, c10, c11)


def log_odds_v(table, epsilon: float = 0.1):
    """Natural log of the odds ratio of `table` after adding `epsilon` to every cell.

    `table` may be a ``ContingencyTable2x2`` or a 4-tuple ``(c00, c01, c10, c11)``
    of count arrays, in which case the result broadcasts.
    """
    if not epsilon > 0:
        raise InvalidInputError(f"epsilon must be positive, got {epsilon!r}")
    if isinstance(table, ContingencyTable2x2):
        c00, c01, c10, c11 = table.c00, table.c01, table.c10, table.c11
    else:
        c00, c01, c10, c11 = table
    c00, c01, c10, c11 = (np.asarray(c, dtype=np.float64) for c in (c00, c01, c10, c11))
    out = np.log(((epsilon + c00) * (epsilon + c11)) / ((epsilon + c01) * (epsilon + c10)))
    return float(out) if out.ndim == 0 else out


def _real_pair(x_seg: Any, y_seg: Any) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x_seg, dtype=np.float64)
    y = np.asarray(y_seg, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise InvalidInputError(f"segments must be 1-d of equal length, got {x.shape}, {y.shape}")
    if x.size < 2:
        raise InvalidInputError("correlation needs segments of length >= 2")
    return x, y


def pearson_v(x_seg: Any, y_seg: Any) -> float:
    """Sample Pearson correlation of two real segments."""
    x, y = _real_pair(x_seg, y_seg)
    xc = x - x.mean()
    yc = y - y.mean()
    sxx = np.dot(xc, xc)
    syy = np.dot(yc, yc)
    if sxx == 0 or syy == 0:
        raise InvalidInputError("zero-variance segment: correlation undefined")
    r = np.dot(xc, yc) / math.sqrt(sxx * syy)
    return float(min(1.0, max(-1.0, r)))


def spearman_v(x_seg: Any, y_seg: Any) -> float:
    """Spearman correlation, with tied values given their average rank."""
    x, y = _real_pair(x_seg, y_seg)
    return pearson_v(rankdata(x), rankdata(y))


def hypergeometric_support(table: ContingencyTable2x2) -> tuple[np.ndarray, np.ndarray]:
    """All values of ``c00`` compatible with the margins of `table`, with log point probabilities."""
    r0 = table.c00 + table.c01
    k0 = table.c00 + table.c10
    k1 = table.c01 + table.c11
    n = table.total
    lo = max(0, r0 - k1)
    hi = min(r0, k0)
    a = np.arange(lo, hi + 1)

    def lchoose(nn, kk):
        return gammaln(nn + 1) - gammaln(kk + 1) - gammaln(nn - kk + 1)

    logp = lchoose(k0, a) + lchoose(k1, r0 - a) - lchoose(n, r0)
    return a, logp


def fisher_exact_2x2(table: ContingencyTable2x2) -> float:
    """Two-sided Fisher exact test p-value.

    Sums the hypergeometric probabilities of all tables with the observed
    margins that are no more probable than the observed one, using a
    relative tolerance of 1e-7 on that comparison.  Works in log space so
    tables with totals in the millions are fine.
    """
    if not isinstance(table, ContingencyTable2x2):
        table = ContingencyTable2x2(*np.asarray(table).ravel())
    if table.total == 0:
        raise InvalidInputError("empty contingency table")
    a, logp = hypergeometric_support(table)
    if a.size == 1:
        return 1.0
    obs = logp[table.c00 - a[0]]
    top = logp.max()
    w = np.exp(logp - top)
    keep = logp <= obs + math.log1p(1e-7)
    p = w[keep].sum() / w.sum()
    return float(min(1.0, p))


# --------------------------------------------------------------------------
# Association objects usable by shift_profile
# --------------------------------------------------------------------------


def _windows(y: np.ndarray, d: int) -> np.ndarray:
    return sliding_window_view(y, d)


def _raise_nonfinite(scores: np.ndarray, n_shifts: int) -> np.ndarray:
    bad = np.flatnonzero(~np.isfinite(scores))
    if bad.size:
        raise AssociationError(int(bad[0]) - n_shifts, float(scores[bad[0]]))
    return scores


@dataclass(frozen=True)
class LogOdds:
    """Regularised log odds ratio of the 2x2 table of two binary segments."""

    epsilon: float = 0.1

    def __post_init__(self):
        if not self.epsilon > 0:
            raise InvalidInputError(f"epsilon must be positive, got {self.epsilon!r}")

    def __call__(self, x_seg, y_seg) -> float:
        return log_odds_v(accumulate_table(x_seg, y_seg), self.epsilon)

    def profile(self, x_center: np.ndarray, y: np.ndarray, n_shifts: int) -> np.ndarray:
        x = _check_binary(x_center, "x")
        y = _check_binary(y, "y")
        d = x.size
        # integer counts per shift, so these match the per-shift tables exactly
        c11 = np.correlate(y, x, mode="valid")
        cy = np.concatenate(([0], np.cumsum(y)))
        y1 = cy[d:] - cy[:-d]
        c10 = int(x.sum()) - c11
        c01 = y1 - c11
        c00 = d - c11 - c10 - c01
        return log_odds_v((c00, c01, c10, c11), self.epsilon)


@dataclass(frozen=True)
class Pearson:
    """Pearson correlation of two real segments."""

    def __call__(self, x_seg, y_seg) -> float:
        return pearson_v(x_seg, y_seg)

    def profile(self, x_center: np.ndarray, y: np.ndarray, n_shifts: int) -> np.ndarray:
        x = np.asarray(x_center, dtype=np.float64)
        yw = _windows(np.asarray(y, dtype=np.float64), x.size)
        if x.size < 2:
            raise InvalidInputError("correlation needs segments of length >= 2")
        xc = x - x.mean()
        yc = yw - yw.mean(axis=1, keepdims=True)
        sxx = np.dot(xc, xc)
        syy = np.einsum("ij,ij->i", yc, yc)
        if sxx == 0:
            raise InvalidInputError("zero-variance segment: correlation undefined")
        zero = np.flatnonzero(syy == 0)
        if zero.size:
            raise InvalidInputError(
                f"zero-variance segment at shift s={int(zero[0]) - n_shifts}: correlation undefined"
            )
        r = (yc @ xc) / np.sqrt(sxx * syy)
        return _raise_nonfinite(np.clip(r, -1.0, 1.0), n_shifts)


@dataclass(frozen=True)
class Spearman:
    """Spearman rank correlation of two real segments (average ranks for ties)."""

    def __call__(self, x_seg, y_seg) -> float:
        return spearman_v(x_seg, y_seg)

    def profile(self, x_center: np.ndarray, y: np.ndarray, n_shifts: int) -> np.ndarray:
        x = np.asarray(x_center, dtype=np.float64)
        if x.size < 2:
            raise InvalidInputError("correlation needs segments of length >= 2")
        yw = _windows(np.asarray(y, dtype=np.float64), x.size)
        rx = rankdata(x)
        ry = rankdata(yw, axis=1)
        xc = rx - rx.mean()
        yc = ry - ry.mean(axis=1, keepdims=True)
        sxx = np.dot(xc, xc)
        syy = np.einsum("ij,ij->i", yc, yc)
        if sxx == 0 or np.any(syy == 0):
            raise InvalidInputError("constant segment: rank correlation undefined")
        r = (yc @ xc) / np.sqrt(sxx * syy)
        return _raise_nonfinite(np.clip(r, -1.0, 1.0), n_shifts)


ASSOCIATIONS = {
    "log-odds": LogOdds,
    "pearson": Pearson,
    "spearman": Spearman,
}


def get_association(name: str, **params):
    """Build a named association function ("log-odds", "pearson" or "spearman")."""
    try:
        cls = ASSOCIATIONS[name]
    except KeyError:
        raise InvalidInputError(
            f"unknown association {name!r}; choose from {sorted(ASSOCIATIONS)}"
        ) from None
    return cls(**params)
