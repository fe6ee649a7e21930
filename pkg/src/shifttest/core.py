"""Shift test engine.

The central segment ``x[N:T-N]`` of one series is scored against every
segment ``y[s+N:s+T-N]`` of the other for ``s = -N..N``.  The rank statistic
``m`` counts how many of those scores are at least as large as the unshifted
score.  If ``y`` is stationary and independent of ``x`` then
``P(m <= M) <= M / (N + 1)``, which gives a conservative test; the rule
``m <= alpha * (2N + 1)`` is only valid as ``N`` grows large.

Examples
--------
>>> import numpy as np
>>> from shifttest import run_test, LogOdds
>>> x = np.array([0, 0, 1, 1, 0, 1, 1, 0, 0, 1, 1, 1])
>>> profile, outcome = run_test(x, x, n_shifts=2, v=LogOdds(), alpha="0.5")
>>> outcome.m
1
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Integral, Real
from typing import Any, Callable, Literal, Protocol, Sequence, Union, runtime_checkable

import numpy as np

__all__ = [
    "ShiftTestError",
    "InvalidInputError",
    "AssociationError",
    "AssociationFunction",
    "SeriesSegment",
    "ShiftProfile",
    "TestOutcome",
    "as_segment",
    "shift_profile",
    "brute_force_profile",
    "rank_statistic",
    "decide",
    "run_test",
    "is_local_maximum",
    "count_local_maxima_in_window",
    "exact_alpha",
]

Kind = Literal["categorical", "real"]
AlphaLike = Union[str, float, Fraction, int]


class ShiftTestError(Exception):
    """Base class for errors raised by this package."""


class InvalidInputError(ShiftTestError, ValueError):
    """A precondition on the inputs was violated."""


class AssociationError(InvalidInputError):
    """The association function returned a non-finite score."""

    def __init__(self, shift: int, value: float):
        self.shift = shift
        self.value = value
        super().__init__(f"association function returned {value!r} at shift s={shift}")


@runtime_checkable
class AssociationFunction(Protocol):
    """Maps two equal-length segments to a real score; larger means more associated.

    Implementations may also provide ``profile(x_center, y, n_shifts)``
    returning all ``2N+1`` scores at once.  It must agree with calling the
    function on each shifted pair.
    """

    def __call__(self, x_seg: np.ndarray, y_seg: np.ndarray) -> float: ...


# --------------------------------------------------------------------------
# Domain types
# --------------------------------------------------------------------------


def _infer_kind(values: Any) -> tuple[np.ndarray, Kind]:
    arr = np.asarray(values)
    if arr.dtype == object:
        # plain python containers with mixed element types end up here
        kinds = {_scalar_kind(v) for v in arr.ravel()}
        if len(kinds) != 1:
            raise InvalidInputError(f"series mixes value kinds: {sorted(kinds)}")
        kind = kinds.pop()
        arr = arr.astype(np.int64 if kind == "categorical" else np.float64)
        return arr, kind
    if arr.dtype == bool or np.issubdtype(arr.dtype, np.integer):
        return arr.astype(np.int64), "categorical"
    if np.issubdtype(arr.dtype, np.floating):
        return arr.astype(np.float64), "real"
    raise InvalidInputError(f"unsupported series dtype {arr.dtype}")


def _scalar_kind(v: Any) -> str:
    if isinstance(v, (bool, np.bool_, Integral)):
        return "categorical"
    if isinstance(v, Real):
        return "real"
    return type(v).__name__


@dataclass(frozen=True)
class SeriesSegment:
    """A finite series over one alphabet kind.

    Parameters
    ----------
    values : array_like
        Integer category codes or real numbers.  A python list that mixes
        ints and floats is rejected.
    kind : {"categorical", "real"}, optional
        Declared alphabet kind.  Inferred from ``values`` when omitted.
    """

    values: np.ndarray
    kind: Kind = field(default="real")

    def __init__(self, values: Any, kind: Kind | None = None):
        if isinstance(values, SeriesSegment):
            values = values.values
        if not isinstance(values, np.ndarray):
            # list input: check element types before numpy coerces them
            values = np.array(list(values), dtype=object) if len(values) else np.array([])
        arr, inferred = _infer_kind(values)
        if arr.ndim != 1:
            raise InvalidInputError(f"series must be one-dimensional, got shape {arr.shape}")
        if arr.size < 1:
            raise InvalidInputError("series must contain at least one value")
        if kind is None:
            kind = inferred
        elif kind == "categorical" and inferred != "categorical":
            if not np.all(np.isfinite(arr)) or np.any(arr != np.round(arr)):
                raise InvalidInputError("categorical series must hold integer codes")
            arr = arr.astype(np.int64)
        elif kind == "real":
            arr = arr.astype(np.float64)
        elif kind != "categorical":
            raise InvalidInputError(f"unknown series kind {kind!r}")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "kind", kind)

    @property
    def length(self) -> int:
        return int(self.values.size)

    def __len__(self) -> int:
        return self.length


def as_segment(values: Any) -> SeriesSegment:
    if isinstance(values, SeriesSegment):
        return values
    return SeriesSegment(values)


@dataclass(frozen=True)
class ShiftProfile:
    """Association scores for shifts ``-N..N``; ``scores[s + N]`` is the score at shift ``s``."""

    scores: np.ndarray
    n_shifts: int
    segment_length: int

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=np.float64)
        if scores.shape != (2 * self.n_shifts + 1,):
            raise InvalidInputError(
                f"profile needs {2 * self.n_shifts + 1} scores, got shape {scores.shape}"
            )
        if self.segment_length < 1:
            raise InvalidInputError("segment length must be at least 1")
        bad = np.flatnonzero(~np.isfinite(scores))
        if bad.size:
            raise AssociationError(int(bad[0]) - self.n_shifts, float(scores[bad[0]]))
        scores = scores.copy()
        scores.setflags(write=False)
        object.__setattr__(self, "scores", scores)

    @property
    def shifts(self) -> np.ndarray:
        return np.arange(-self.n_shifts, self.n_shifts + 1)

    @property
    def unshifted(self) -> float:
        return float(self.scores[self.n_shifts])

    def at(self, s: int) -> float:
        if abs(s) > self.n_shifts:
            raise IndexError(f"shift {s} outside -{self.n_shifts}..{self.n_shifts}")
        return float(self.scores[s + self.n_shifts])


@dataclass(frozen=True)
class TestOutcome:
    """Rank statistic, both p-value bounds and both decisions at level ``alpha``."""

    __test__ = False  # not a pytest class

    m: int
    n_shifts: int
    p_conservative: float
    p_approximate: float
    alpha: float
    reject_conservative: bool
    reject_approximate: bool

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "n_shifts": self.n_shifts,
            "p_conservative": self.p_conservative,
            "p_approximate": self.p_approximate,
            "alpha": self.alpha,
            "reject_conservative": self.reject_conservative,
            "reject_approximate": self.reject_approximate,
        }


# --------------------------------------------------------------------------
# Operations
# --------------------------------------------------------------------------


def _check_lengths(x: SeriesSegment, y: SeriesSegment, n_shifts: int) -> int:
    if x.length != y.length:
        raise InvalidInputError(f"series lengths differ: {x.length} != {y.length}")
    if isinstance(n_shifts, bool) or not isinstance(n_shifts, Integral):
        raise InvalidInputError(f"n_shifts must be an integer, got {n_shifts!r}")
    if n_shifts < 1:
        raise InvalidInputError(f"n_shifts must be at least 1, got {n_shifts}")
    d = x.length - 2 * n_shifts
    if d < 1:
        raise InvalidInputError(
            f"n_shifts={n_shifts} too large for series of length {x.length} "
            f"(segment length T - 2N = {d} < 1)"
        )
    return d


def shift_profile(
    x: Any, y: Any, n_shifts: int, v: AssociationFunction
) -> ShiftProfile:
    """Score the central segment of `x` against every shifted segment of `y`.

    Parameters
    ----------
    x, y : SeriesSegment or array_like
        Series of common length ``T``.  ``y`` is the one assumed stationary.
    n_shifts : int
        Maximum shift ``N``.  Segments have length ``D = T - 2N``.
    v : AssociationFunction
        Association score of two segments.

    Returns
    -------
    ShiftProfile
        ``scores[s + N] = v(x[N:T-N], y[s+N:s+T-N])`` for ``s = -N..N``.

    Raises
    ------
    InvalidInputError
        On length mismatch or when ``T - 2N < 1``.
    AssociationError
        When `v` returns NaN or an infinite score; carries the shift index.
    """
    x = as_segment(x)
    y = as_segment(y)
    d = _check_lengths(x, y, n_shifts)
    x_center = x.values[n_shifts : n_shifts + d]
    batch = getattr(v, "profile", None)
    if callable(batch):
        scores = np.asarray(batch(x_center, y.values, n_shifts), dtype=np.float64)
    else:
        scores = np.empty(2 * n_shifts + 1)
        for k in range(2 * n_shifts + 1):
            scores[k] = v(x_center, y.values[k : k + d])
    return ShiftProfile(scores, n_shifts, d)


def brute_force_profile(
    x: Any, y: Any, n_shifts: int, v: Callable[[np.ndarray, np.ndarray], float]
) -> np.ndarray:
    """Per-shift reference: copy each shifted pair and call `v` on it.

    Ignores any batch ``profile`` method on `v`.  Used to validate the fast
    paths.
    """
    xv = np.array(as_segment(x).values)
    yv = np.array(as_segment(y).values)
    t = xv.size
    out = []
    for s in range(-n_shifts, n_shifts + 1):
        xs = xv[n_shifts : t - n_shifts].copy()
        ys = yv[s + n_shifts : s + t - n_shifts].copy()
        out.append(float(v(xs, ys)))
    return np.array(out)


def rank_statistic(profile: ShiftProfile) -> int:
    """Number of shifts whose score is >= the unshifted score (``s = 0`` included)."""
    return int(np.count_nonzero(profile.scores >= profile.scores[profile.n_shifts]))


def exact_alpha(alpha: AlphaLike) -> Fraction:
    """Significance level as an exact fraction.

    Floats are converted through their shortest repr, so ``0.05`` becomes
    ``1/20`` rather than the binary approximation.
    """
    if isinstance(alpha, Fraction):
        a = alpha
    elif isinstance(alpha, bool):
        raise InvalidInputError(f"invalid alpha {alpha!r}")
    elif isinstance(alpha, (int, float, str)):
        try:
            a = Fraction(str(alpha).strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise InvalidInputError(f"invalid alpha {alpha!r}") from exc
    else:
        raise InvalidInputError(f"invalid alpha {alpha!r}")
    if not 0 < a < 1:
        raise InvalidInputError(f"alpha must lie in (0, 1), got {alpha!r}")
    return a


def decide(m: int, n_shifts: int, alpha: AlphaLike) -> TestOutcome:
    """Apply the conservative and approximate rules to rank statistic `m`.

    The conservative rule rejects when ``m <= alpha (N+1)`` and the
    approximate rule when ``m <= alpha (2N+1)``.  Both comparisons are exact,
    so ``m = 1, N = 19, alpha = 0.05`` rejects.
    """
    if isinstance(n_shifts, bool) or not isinstance(n_shifts, Integral) or n_shifts < 1:
        raise InvalidInputError(f"n_shifts must be a positive integer, got {n_shifts!r}")
    if isinstance(m, bool) or not isinstance(m, Integral) or not 1 <= m <= 2 * n_shifts + 1:
        raise InvalidInputError(f"m must be an integer in 1..{2 * n_shifts + 1}, got {m!r}")
    a = exact_alpha(alpha)
    m = int(m)
    n_shifts = int(n_shifts)
    return TestOutcome(
        m=m,
        n_shifts=n_shifts,
        p_conservative=min(1.0, m / (n_shifts + 1)),
        p_approximate=m / (2 * n_shifts + 1),
        alpha=float(a),
        reject_conservative=m <= a * (n_shifts + 1),
        reject_approximate=m <= a * (2 * n_shifts + 1),
    )


def run_test(
    x: Any, y: Any, n_shifts: int, v: AssociationFunction, alpha: AlphaLike = "0.05"
) -> tuple[ShiftProfile, TestOutcome]:
    """Shift test of independence between `x` and stationary `y`.

    Returns the shift profile and the decision at level `alpha`.
    """
    profile = shift_profile(x, y, n_shifts, v)
    return profile, decide(rank_statistic(profile), n_shifts, alpha)


def is_local_maximum(window: Sequence[float], m_bound: int) -> bool:
    """True if the centre of `window` is among its top `m_bound` values (ties count against it).

    `window` holds ``2N + 1`` values centred on the tested point.
    """
    w = np.asarray(window, dtype=np.float64)
    if w.ndim != 1 or w.size % 2 == 0 or w.size < 3:
        raise InvalidInputError(f"window must have odd length 2N+1 >= 3, got {w.size}")
    if not 1 <= m_bound <= w.size:
        raise InvalidInputError(f"m_bound must lie in 1..{w.size}, got {m_bound}")
    return int(np.count_nonzero(w >= w[w.size // 2])) <= m_bound


def count_local_maxima_in_window(
    sequence: Sequence[float], start: int, m_bound: int, n: int
) -> int:
    """Count ``(m_bound, n)``-local maxima among positions ``start .. start + n``.

    Every candidate needs a full ``±n`` neighbourhood inside `sequence`.  At
    most `m_bound` positions of any such run can qualify.
    """
    seq = np.asarray(sequence, dtype=np.float64)
    if n < 1:
        raise InvalidInputError(f"n must be at least 1, got {n}")
    if start - n < 0 or start + 2 * n >= seq.size:
        raise InvalidInputError(
            f"positions {start}..{start + n} need indices {start - n}..{start + 2 * n}, "
            f"sequence has length {seq.size}"
        )
    return sum(
        is_local_maximum(seq[t - n : t + n + 1], m_bound) for t in range(start, start + n + 1)
    )
