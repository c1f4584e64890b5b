import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import average_ranks, pair_count_auc, pearson
from policygraph.diagnostics import (
    DEFAULT_TAUS,
    Regime,
    SuccessCategory,
    classify_taxonomy,
    confusion_row,
    lgs_band,
    per_seed_ranking,
    rank_auc,
    regime_crosstab,
    rule_predict_failure,
    spearman_rho,
    stratify,
    success_category,
    taxonomy_summary,
    threshold_sweep,
)
from policygraph.metrics import GoalRecord


def rec(succ, lgs, seed=0, condition="c", goal_basin=0.5, comp=0.25, frag=0.5, **kw) -> GoalRecord:
    regime = classify_taxonomy(goal_basin, comp, frag).value
    return GoalRecord(
        condition=condition, seed=seed, goal_x=0, goal_y=0, succ_H=succ, lgs_count=0, lgs_frac=lgs,
        n_neighbors=4, goal_basin=goal_basin, fail_basin=1 - goal_basin, comp_basin=comp,
        dominance=goal_basin - comp, fail_concentration=None, cycle_basin=0.0, fp_basin=1 - goal_basin,
        n_attractors=2, fragmentation=frag, mean_t_attractor=1.0, mean_t_goal=1.0, regime=regime,
        success_category=success_category(succ).value,
    )


@pytest.mark.parametrize("args,regime", [
    ((0.944, 0.037, 0.104), Regime.GOAL_DOMINANT),
    ((0.084, 0.733, 0.195), Regime.COMPETITOR_DOMINATED),
    ((0.50, 0.40, 0.10), Regime.PARTIAL_CONTESTED),
    ((0.30, 0.20, 0.60), Regime.FRAGMENTED),
    ((0.75, 0.25, 0.375), Regime.GOAL_DOMINANT),
    ((0.50, 0.50, 0.50), Regime.PARTIAL_CONTESTED),  # comp not strictly above beta_g
    ((0.40, 0.50, 0.58), Regime.COMPETITOR_DOMINATED),
])
def test_taxonomy(args, regime):
    assert classify_taxonomy(*args) is regime


@settings(max_examples=300, deadline=None)
@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_taxonomy_total_and_ordered(b, c, f):
    r = classify_taxonomy(b, c, f)
    if b >= 0.75:
        assert r is Regime.GOAL_DOMINANT
    elif c >= 0.5 and c > b:
        assert r is Regime.COMPETITOR_DOMINATED
    elif f >= 0.3 and c < 0.5:
        assert r is Regime.FRAGMENTED
    else:
        assert r is Regime.PARTIAL_CONTESTED


@pytest.mark.parametrize("succ,cat", [
    (0.0, SuccessCategory.ZERO), (0.1, SuccessCategory.LOW), (0.25, SuccessCategory.PARTIAL),
    (0.7499, SuccessCategory.PARTIAL), (0.75, SuccessCategory.HIGH), (0.99, SuccessCategory.HIGH),
    (1.0, SuccessCategory.PERFECT),
])
def test_success_bins(succ, cat):
    assert success_category(succ) is cat


def test_success_bins_reject_out_of_range():
    with pytest.raises(ValueError):
        success_category(1.2)


def test_rule_boundaries():
    assert rule_predict_failure(0.0, 0.0)
    assert rule_predict_failure(0.5, 0.5)
    assert not rule_predict_failure(1.0, 0.75)


def test_confusion_hand_oracle():
    # predicted: T T F F ; actual: T F T F
    row = confusion_row("c", 0.5, [True, True, False, False], [True, False, True, False])
    assert (row.tp, row.fp, row.fn, row.tn) == (1, 1, 1, 1)
    assert (row.precision, row.recall, row.f1, row.accuracy) == (0.5, 0.5, 0.5, 0.5)
    row = confusion_row("c", 0.5, [True, False, False, False], [True, True, False, False])
    assert (row.precision, row.recall, row.accuracy) == (1.0, 0.5, 0.75)
    assert row.f1 == pytest.approx(2 / 3)


def test_no_predicted_positives_flag():
    row = confusion_row("c", 0.0, [False, False], [True, False])
    assert row.precision == 1.0 and row.no_predicted_positives and row.recall == 0.0


def test_sweep_all_fail_with_zero_support():
    rows = threshold_sweep([rec(0.0, 0.0) for _ in range(5)], taus=(0.0,))
    assert rows[0].precision == 1.0 and rows[0].recall == 1.0


def test_sweep_structure_and_monotonicity():
    rng = np.random.default_rng(0)
    recs = []
    for cond in ("a", "b"):
        for _ in range(60):
            lgs = float(rng.choice([0, 0.25, 1 / 3, 0.5, 2 / 3, 0.75, 1.0]))
            succ = 0.0 if lgs == 0 else float(rng.uniform(0, 1))
            recs.append(rec(succ, lgs, condition=cond))
    rows = threshold_sweep(recs)
    assert len(rows) == 2 * len(DEFAULT_TAUS)
    for cond in ("a", "b"):
        rs = [r for r in rows if r.condition == cond]
        assert all(r.tp + r.fp + r.fn + r.tn == 60 for r in rs)
        assert rs[0].precision == 1.0
        recalls = [r.recall for r in rs]
        positives = [r.tp + r.fp for r in rs]
        assert recalls == sorted(recalls) and positives == sorted(positives)
    with pytest.raises(ValueError):
        threshold_sweep([])


def test_auc_simple_cases():
    assert rank_auc([0, 0.25, 1, 1], [True, True, False, False]) == 1.0
    assert rank_auc([0.5] * 4, [True, False, True, False]) == 0.5
    assert rank_auc([0.5, 1.0], [False, False]) is None


def test_auc_six_record_example():
    lgs = [0.0, 0.5, 0.5, 0.25, 1.0, 0.5]
    failed = [True, True, False, False, False, True]
    assert rank_auc(lgs, failed) == pytest.approx(pair_count_auc(lgs, failed), abs=1e-15)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.sampled_from([0, 0.25, 0.5, 2 / 3, 0.75, 1.0]), st.booleans()), min_size=2, max_size=200))
def test_auc_equals_pair_counting(pairs):
    lgs = [p[0] for p in pairs]
    failed = [p[1] for p in pairs]
    got = rank_auc(lgs, failed)
    if all(failed) or not any(failed):
        assert got is None
    else:
        assert got == pytest.approx(pair_count_auc(lgs, failed), abs=1e-12)


def test_spearman_simple_cases():
    assert spearman_rho([1, 2, 3, 4], [10, 20, 30, 40]) == pytest.approx(1.0)
    assert spearman_rho([1, 2, 3, 4], [4, 3, 2, 1]) == pytest.approx(-1.0)
    assert spearman_rho([1, 1, 1], [1, 2, 3]) is None
    assert spearman_rho([1, 2], [1, 2]) is None


def test_spearman_with_ties():
    x = [0.0, 0.5, 0.5, 1.0, 0.25, 0.5, 1.0, 0.0]
    y = [0.0, 0.4, 0.6, 0.9, 0.1, 0.4, 1.0, 0.2]
    expected = pearson(average_ranks(x), average_ranks(y))
    assert spearman_rho(x, y) == pytest.approx(expected, abs=1e-12)


def test_per_seed_ranking():
    recs = [rec(0.0, 0.0, seed=1), rec(1.0, 1.0, seed=1), rec(0.5, 0.5, seed=1),
            rec(0.9, 0.5, seed=0), rec(1.0, 1.0, seed=0), rec(0.8, 0.75, seed=0)]
    rows = per_seed_ranking(recs)
    assert [r.seed for r in rows] == [0, 1]
    assert rows[0].auc is None and rows[0].n_fail == 0 and rows[0].n_ok == 3
    assert rows[1].auc == 1.0 and rows[1].spearman == pytest.approx(1.0)


def test_bands():
    assert [lgs_band(v) for v in (0.0, 0.5, 0.51, 0.75, 1.0)] == ["Low", "Low", "Partial", "Partial", "Full"]


def test_stratify_single_record_per_band():
    recs = [rec(0.0, 0.25, goal_basin=0.1, comp=0.8, frag=0.3), rec(0.6, 0.75, goal_basin=0.6, comp=0.3, frag=0.5),
            rec(1.0, 1.0, goal_basin=1.0, comp=0.0, frag=0.0)]
    rows = {r.band: r for r in stratify(recs)}
    assert rows["Low"] == ("c", "Low", 1, 0.0, 100.0, 0.1, 0.8, 0.3)
    assert rows["Partial"] == ("c", "Partial", 1, 0.6, 0.0, 0.6, 0.3, 0.5)
    assert rows["Full"] == ("c", "Full", 1, 1.0, 0.0, 1.0, 0.0, 0.0)


def test_stratify_empty_band():
    rows = {r.band: r for r in stratify([rec(1.0, 1.0)])}
    assert rows["Low"].n == 0 and rows["Low"].mean_succ is None


def test_taxonomy_summary_and_crosstab():
    recs = [rec(1.0, 1.0, goal_basin=0.9, comp=0.1, frag=0.1), rec(0.0, 0.0, goal_basin=0.1, comp=0.9, frag=0.1),
            rec(0.1, 0.25, goal_basin=0.2, comp=0.6, frag=0.5), rec(0.5, 0.5, goal_basin=0.5, comp=0.2, frag=0.6)]
    rows = {r.regime: r for r in taxonomy_summary(recs)}
    assert rows["GoalDominant"].n == 1 and rows["GoalDominant"].pct == 25.0
    assert rows["CompetitorDominated"].n == 2 and rows["CompetitorDominated"].mean_succ == pytest.approx(0.05)
    assert rows["PartialContested"].n == 0 and rows["PartialContested"].mean_succ is None
    pooled = taxonomy_summary(recs, pooled_label="ALL")
    assert {r.condition for r in pooled} == {"ALL"}
    ct = {r.regime: r for r in regime_crosstab(recs)}
    assert ct["CompetitorDominated"][1:] == (50.0, 50.0, 0.0, 0.0, 0.0)
    assert ct["GoalDominant"].perfect_pct == 100.0
    assert ct["PartialContested"].zero_pct is None
