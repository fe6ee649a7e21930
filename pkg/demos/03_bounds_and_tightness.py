"""
Why the conservative bound is M / (N + 1)
=========================================

A point is an (M, N)-local maximum when at most M of the 2N + 1 values
around it (itself included) are at least as large.  No run of N + 1
consecutive points can hold more than M of them.  The periodic sequence
built below comes arbitrarily close to that limit, so the bound cannot be
improved.  For large N, the approximate rule's size on a stationary ergodic
sequence approaches alpha.
"""

from fractions import Fraction

import numpy as np

from shifttest import (
    ShiftProfile,
    TightnessConfig,
    count_local_maxima_in_window,
    decide,
    ergodic_ar_like,
    is_local_maximum,
    rank_statistic,
    tightness_block,
    tightness_local_max_probability,
)

# Counting local maxima in random sequences never exceeds M
rng = np.random.default_rng(1)
worst = 0
for _ in range(2000):
    n = int(rng.integers(1, 8))
    m = int(rng.integers(1, 2 * n + 2))
    seq = rng.integers(0, 3, size=4 * n + 1).astype(float)
    worst = max(worst, count_local_maxima_in_window(seq, n, m, n) - m)
print("max over trials of (count - M):", worst)

# The extremal sequence for M=3, N=4, K=3
cfg = TightnessConfig(m_bound=3, n_shifts=4, k_copies=3)
w = tightness_block(cfg)
print("W =", w.astype(int).tolist())
print("peaks are local maxima:", [
    bool(is_local_maximum(np.r_[np.zeros(4), w, np.zeros(4)][t : t + 9], 3))
    for t in np.flatnonzero(w > 0)
])

# Repeated with a random phase, the chance that time 0 is a local maximum is
# (MK - M + 1) / (K (N + 1)), which tends to M / (N + 1) as K grows.
for k in (2, 5, 10, 50):
    p = tightness_local_max_probability(TightnessConfig(3, 4, k))
    print(f"K={k:3d}: P = {p} = {float(p):.4f}   (limit {float(Fraction(3, 5))})")

# The approximate rule on an AR(1) sequence with N = 500
n, reps = 500, 1000
for alpha in ("0.05", "0.1"):
    rejections = 0
    for r in range(reps):
        v = ergodic_ar_like(2 * n + 1, persistence=0.9, seed=3, stream=r)
        rejections += decide(rank_statistic(ShiftProfile(v, n, 1)), n, alpha).reject_approximate
    print(f"alpha={alpha}: approximate-rule rejection rate {rejections / reps:.3f}")
