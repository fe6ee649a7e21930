"""Shift test for independence of two autocorrelated time series."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    AssociationError,
    AssociationFunction,
    InvalidInputError,
    SeriesSegment,
    ShiftProfile,
    ShiftTestError,
    TestOutcome,
    brute_force_profile,
    count_local_maxima_in_window,
    decide,
    is_local_maximum,
    rank_statistic,
    run_test,
    shift_profile,
)
from .assoc import (  # noqa: E402
    ContingencyTable2x2,
    LogOdds,
    Pearson,
    Spearman,
    accumulate_table,
    fisher_exact_2x2,
    get_association,
    log_odds_v,
    pearson_v,
    spearman_v,
)
from .sim import (  # noqa: E402
    MarkovPairConfig,
    TightnessConfig,
    ergodic_ar_like,
    simulate_pair,
    tightness_block,
    tightness_local_max_probability,
    tightness_process_sample,
)
