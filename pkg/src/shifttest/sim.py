"""Stochastic processes for exercising the shift test.

* ``simulate_pair``: two categorical Markov chains that reset to a uniformly
  random state, independently and optionally also jointly.
* ``tightness_block`` / ``tightness_process_sample``: a periodic process whose
  chance of a local maximum at time 0 comes arbitrarily close to the
  ``M / (N + 1)`` bound.
* ``ergodic_ar_like``: a stationary Gaussian AR(1) sequence.

Randomness comes from numpy's counter-based Philox generator.  Stream
``(seed, replicate, sub)`` is keyed by a ``SeedSequence`` spawn key, so any
replicate can be regenerated on its own, whatever the worker layout.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.signal import lfilter

from .core import InvalidInputError, SeriesSegment, is_local_maximum

__all__ = [
    "rng_stream",
    "MarkovPairConfig",
    "simulate_pair",
    "TightnessConfig",
    "tightness_block",
    "tightness_process_sample",
    "tightness_local_max_probability",
    "ergodic_ar_like",
    "X_STREAM",
    "Y_STREAM",
    "COMMON_STREAM",
]

# sub-stream ids within one replicate
X_STREAM, Y_STREAM, COMMON_STREAM = 0, 1, 2


def rng_stream(seed: int, *path: int) -> np.random.Generator:
    """Independent Philox generator for ``(seed, *path)``."""
    if seed < 0 or any(p < 0 for p in path):
        raise InvalidInputError("seeds and stream ids must be non-negative")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=path)))


@dataclass(frozen=True)
class MarkovPairConfig:
    """Settings for ``simulate_pair``.

    At each step every series independently jumps to a uniform random state
    (possibly the state it is already in) with probability ``p_switch``.
    Then, with probability ``p_common``, both series jump to one shared
    uniform random state.
    """

    length: int = 300
    n_states: int = 2
    p_switch: float = 0.1
    p_common: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.length < 1:
            raise InvalidInputError(f"length must be >= 1, got {self.length}")
        if self.n_states < 2:
            raise InvalidInputError(f"n_states must be >= 2, got {self.n_states}")
        for name in ("p_switch", "p_common"):
            p = getattr(self, name)
            if not 0 <= p <= 1:
                raise InvalidInputError(f"{name} must lie in [0, 1], got {p}")
        if self.seed < 0:
            raise InvalidInputError(f"seed must be non-negative, got {self.seed}")


def _reset_chain(
    draws: np.ndarray, resets: np.ndarray, common_vals: np.ndarray, common: np.ndarray
) -> np.ndarray:
    t = np.arange(draws.size)
    value = np.where(common, common_vals, draws)
    event = common | resets
    event[0] = True
    value[0] = draws[0]
    last = np.maximum.accumulate(np.where(event, t, 0))
    return value[last]


def simulate_pair(
    config: MarkovPairConfig, replicate: int = 0
) -> tuple[SeriesSegment, SeriesSegment]:
    """Simulate two categorical series.

    Initial states are uniform and independent, which is the stationary law
    of each chain.  ``x`` only reads stream ``(seed, replicate, 0)``, ``y``
    only ``(seed, replicate, 1)``, and the shared resets come from
    ``(seed, replicate, 2)``.  With ``p_common = 0`` the series are therefore
    independent by construction.
    """
    t = config.length
    k = config.n_states
    gc = rng_stream(config.seed, replicate, COMMON_STREAM)
    common = gc.random(t) < config.p_common
    common_vals = gc.integers(k, size=t)
    out = []
    for sub in (X_STREAM, Y_STREAM):
        g = rng_stream(config.seed, replicate, sub)
        resets = g.random(t) < config.p_switch
        draws = g.integers(k, size=t)
        out.append(SeriesSegment(_reset_chain(draws, resets, common_vals, common), "categorical"))
    return out[0], out[1]


@dataclass(frozen=True)
class TightnessConfig:
    """Parameters of the extremal periodic sequence: ``M`` peaks per block of ``N+1``, ``K`` blocks."""

    m_bound: int
    n_shifts: int
    k_copies: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.n_shifts < 1:
            raise InvalidInputError(f"n_shifts must be >= 1, got {self.n_shifts}")
        if not 1 <= self.m_bound <= self.n_shifts + 1:
            raise InvalidInputError(
                f"m_bound must lie in 1..{self.n_shifts + 1}, got {self.m_bound}"
            )
        if self.k_copies < 1:
            raise InvalidInputError(f"k_copies must be >= 1, got {self.k_copies}")

    @property
    def period(self) -> int:
        return self.k_copies * (self.n_shifts + 1)


def tightness_block(config: TightnessConfig) -> np.ndarray:
    """One period of the sequence.

    Position ``t`` holds ``1 + (t mod (N+1)) + M (t div (N+1))`` when
    ``t mod (N+1) < M`` and 0 otherwise.

    >>> tightness_block(TightnessConfig(3, 4, 3)).astype(int).tolist()
    [1, 2, 3, 0, 0, 4, 5, 6, 0, 0, 7, 8, 9, 0, 0]
    """
    t = np.arange(config.period)
    r, q = t % (config.n_shifts + 1), t // (config.n_shifts + 1)
    return np.where(r < config.m_bound, 1 + r + config.m_bound * q, 0).astype(np.float64)


def tightness_process_sample(
    config: TightnessConfig, length: int, start: int = 0, phase: int | None = None
) -> np.ndarray:
    """Times ``start .. start+length-1`` of the randomly phased periodic process.

    The value at time ``t`` is ``W[(t + phase) mod period]``.  When `phase`
    is None it is drawn uniformly from ``0 .. period-1`` using ``config.seed``.
    """
    period = config.period
    if phase is None:
        phase = int(rng_stream(config.seed).integers(period))
    w = tightness_block(config)
    return w[(np.arange(start, start + length) + phase) % period]


def tightness_local_max_probability(config: TightnessConfig) -> Fraction:
    """Exact probability that time 0 is an ``(M, N)``-local maximum, by enumerating all phases."""
    n = config.n_shifts
    hits = sum(
        is_local_maximum(tightness_process_sample(config, 2 * n + 1, -n, phase), config.m_bound)
        for phase in range(config.period)
    )
    return Fraction(hits, config.period)


def ergodic_ar_like(
    length: int, persistence: float, seed: int, stream: int = 0
) -> np.ndarray:
    """Stationary Gaussian AR(1) sequence with unit variance.

    ``v[t] = a v[t-1] + sqrt(1 - a^2) e[t]`` with ``v[0] ~ N(0, 1)``, where
    ``a`` is `persistence`.  Mixing is geometric, so the sequence is ergodic.
    """
    if not 0 <= persistence < 1:
        raise InvalidInputError(f"persistence must lie in [0, 1), got {persistence}")
    if length < 1:
        raise InvalidInputError(f"length must be >= 1, got {length}")
    e = rng_stream(seed, stream).standard_normal(length)
    if persistence == 0:
        return e
    scale = np.sqrt(1.0 - persistence**2)
    e[0] /= scale
    return lfilter([scale], [1.0, -persistence], e)
