"""
Real-valued series with Pearson and Spearman scores
===================================================

Two smooth AR(1) series are strongly autocorrelated.  A plain correlation
test on them would often report spurious significance.  The shift test
only rejects when ``y`` genuinely tracks ``x``.
"""

import numpy as np
from scipy import stats

from shifttest import Pearson, Spearman, ergodic_ar_like, run_test

T, N = 400, 30
x = ergodic_ar_like(T, persistence=0.95, seed=11, stream=0)
y_indep = ergodic_ar_like(T, persistence=0.95, seed=11, stream=1)
y_dep = 0.5 * x + ergodic_ar_like(T, persistence=0.95, seed=11, stream=2)

for label, y in [("independent", y_indep), ("dependent", y_dep)]:
    naive = stats.pearsonr(x, y)
    print(f"{label}: naive Pearson r={naive.statistic:.3f}, p={naive.pvalue:.2g}")
    for v in (Pearson(), Spearman()):
        _, out = run_test(x, y, N, v, alpha="0.05")
        print(f"  {type(v).__name__:8s} m={out.m:2d}  p_cons={out.p_conservative:.3f}"
              f"  reject={out.reject_conservative}")
