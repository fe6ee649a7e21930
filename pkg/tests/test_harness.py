import json
import math

import numpy as np
import pytest

from shifttest import MarkovPairConfig, ShiftTestError
from shifttest.harness import (
    CumulativeHistogram,
    ExperimentSpec,
    ReplicateError,
    bound_verification_suite,
    figure2_spec,
    fisher_baseline_experiment,
    records_csv,
    reproduce_figure2,
    run_experiment,
)


@pytest.fixture(scope="module")
def null_result():
    return run_experiment(figure2_spec(False, 400, master_seed=3))


def test_worker_count_does_not_change_results():
    spec = figure2_spec(True, 60, master_seed=12)
    one = run_experiment(spec, workers=1)
    three = run_experiment(spec, workers=3)
    assert [r.outcome for r in one.records] == [r.outcome for r in three.records]
    assert records_csv(one.records) == records_csv(three.records)


def test_records_carry_index_and_stream(null_result):
    recs = null_result.records
    assert [r.replicate for r in recs] == list(range(400))
    assert recs[7].stream == "3/7"


def test_single_replicate_histogram_is_unit_step():
    res = run_experiment(figure2_spec(False, 1, master_seed=0))
    m = res.records[0].m
    counts = res.histogram.cumulative_counts
    assert np.all(counts[: m - 1] == 0)
    assert np.all(counts[m - 1 :] == 1)


def test_histogram_invariants(null_result):
    h = null_result.histogram
    assert np.all(np.diff(h.cumulative_counts) >= 0)
    assert h.cumulative_counts[-1] == 400
    assert h.thresholds.tolist() == list(range(1, 40))
    np.testing.assert_allclose(h.reference_conservative[:20], np.arange(1, 21) / 20)
    assert np.all(h.reference_conservative[19:] == 1.0)
    np.testing.assert_allclose(h.reference_approximate, np.arange(1, 40) / 39)


def test_histogram_csv_round_trip(null_result):
    lines = null_result.histogram.to_csv().splitlines()
    assert lines[0].startswith("M,count_m_le_M")
    assert len(lines) == 40
    assert lines[-1].split(",")[1] == "400"


def test_histogram_rejects_out_of_range():
    with pytest.raises(ShiftTestError):
        CumulativeHistogram.from_ms([0, 3], 2)


def _flaky_spec(replicates=40):
    # short, slowly switching binary chains give constant windows, on which
    # Pearson correlation is undefined
    return ExperimentSpec(
        replicates=replicates,
        pair_config=MarkovPairConfig(30, 2, 0.02, 0.0),
        n_shifts=5,
        association="pearson",
        association_params={},
        master_seed=1,
    )


def test_fail_fast_reports_replicate():
    with pytest.raises(ReplicateError) as info:
        run_experiment(_flaky_spec())
    assert info.value.replicate >= 0
    assert "replicate" in str(info.value)


def test_fail_fast_across_processes():
    with pytest.raises(ReplicateError):
        run_experiment(_flaky_spec(), workers=2)


def test_skip_and_report():
    res = run_experiment(_flaky_spec(), skip_errors=True)
    assert res.failures
    assert len(res.failures) + len(res.records) == 40
    assert res.histogram.replicates == len(res.records)
    first = min(f.replicate for f in res.failures)
    with pytest.raises(ReplicateError) as info:
        run_experiment(_flaky_spec())
    assert info.value.replicate == first


def test_spec_validation():
    with pytest.raises(ShiftTestError):
        figure2_spec(False, 0)
    with pytest.raises(ShiftTestError):
        ExperimentSpec(pair_config=MarkovPairConfig(30), n_shifts=15)
    with pytest.raises(ShiftTestError):
        ExperimentSpec(association="nope")
    with pytest.raises(ShiftTestError):
        ExperimentSpec(alpha="2")


# --- Fisher baseline ----------------------------------------------------------------


@pytest.fixture(scope="module")
def fisher_null():
    return fisher_baseline_experiment(figure2_spec(False, 1000, master_seed=0))


def test_fisher_null_skewed_to_zero(fisher_null):
    assert fisher_null.fraction_below(0.05) > 0.3
    assert fisher_null.counts.sum() == 1000
    assert fisher_null.counts.size == 20
    np.testing.assert_allclose(np.diff(fisher_null.bin_edges), 0.05)


def test_fisher_correlated_more_significant(fisher_null):
    corr = fisher_baseline_experiment(figure2_spec(True, 1000, master_seed=0))
    assert corr.fraction_below(0.05) > fisher_null.fraction_below(0.05)


def test_fisher_iid_is_valid():
    # with full resets the series are i.i.d. and the exact test keeps its size;
    # its discreteness leaves some bins empty, so only the CDF is checked
    reps = 1000
    spec = ExperimentSpec(
        replicates=reps, pair_config=MarkovPairConfig(300, 2, 1.0, 0.0), master_seed=0
    )
    f = fisher_baseline_experiment(spec)
    for c in f.bin_edges[1:-1]:
        frac = np.mean(f.p_values <= c)
        assert frac <= c + 3 * math.sqrt(c * (1 - c) / reps)
    assert f.fraction_below(0.05) < 0.3


def test_fisher_csv(fisher_null):
    lines = fisher_null.to_csv().splitlines()
    assert lines[0] == "bin_low,bin_high,count"
    assert len(lines) == 21


# --- bound verification -----------------------------------------------------------


def test_bound_suite_full_range(null_result):
    spec = null_result.spec
    report = bound_verification_suite(spec, result=null_result)
    assert [r.M for r in report.rows] == list(range(1, 40))
    assert report.rows[-1].empirical == 1.0
    assert report.conservative_ok
    row = report.rows[0]
    assert row.bound_conservative == pytest.approx(1 / 20)
    assert row.slack_conservative == pytest.approx(3 * math.sqrt(0.05 * 0.95 / 400))


def test_bound_suite_grid_subset(null_result):
    report = bound_verification_suite(null_result.spec, m_grid=[1, 20], result=null_result)
    assert [r.M for r in report.rows] == [1, 20]
    with pytest.raises(ShiftTestError):
        bound_verification_suite(null_result.spec, m_grid=[40], result=null_result)


def test_bound_suite_needs_null_spec():
    with pytest.raises(ShiftTestError, match="independent"):
        bound_verification_suite(figure2_spec(True, 10))


def test_bound_suite_csv_and_dict(null_result):
    report = bound_verification_suite(null_result.spec, result=null_result)
    lines = report.to_csv().splitlines()
    assert lines[0].split(",")[0] == "M"
    assert len(lines) == 40
    d = report.to_dict()
    json.dumps(d)
    assert d["conservative_ok"] is True


@pytest.mark.parametrize(
    "cfg",
    [
        MarkovPairConfig(300, 2, 0.05, 0.0),
        MarkovPairConfig(300, 2, 0.3, 0.0),
        MarkovPairConfig(300, 4, 0.1, 0.0),
    ],
)
def test_conservative_bound_over_test_matrix(cfg):
    # log-odds needs binary input; multi-state chains use Spearman on the codes
    assoc = ("log-odds", {"epsilon": 0.1}) if cfg.n_states == 2 else ("spearman", {})
    spec = ExperimentSpec(
        replicates=600,
        pair_config=cfg,
        association=assoc[0],
        association_params=assoc[1],
        master_seed=5,
    )
    report = bound_verification_suite(spec, workers=2)
    assert report.conservative_ok


# --- reproduce-fig2 driver ------------------------------------------------------------


def test_reproduce_smoke(tmp_path):
    summary = reproduce_figure2(tmp_path, replicates=10, seed=4)
    assert summary["low_power"]
    for cond in ("independent", "correlated"):
        assert summary["conditions"][cond]["status"] == "LOW-POWER"
        for panel in ("panel_b_fisher", "panel_c_profile", "panel_d_cumulative", "replicates"):
            assert (tmp_path / f"{panel}_{cond}.csv").exists()
    loaded = json.loads((tmp_path / "summary.json").read_text())
    assert loaded == summary
    profile = (tmp_path / "panel_c_profile_correlated.csv").read_text().splitlines()
    assert profile[0] == "shift,score"
    assert len(profile) == 40
