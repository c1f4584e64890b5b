"""Rule-based failure diagnostics over collections of goal records.

Nothing here is fitted: the local-support rule, the taxonomy and the success
bins are fixed thresholds applied to per-goal metrics.
"""
from __future__ import annotations

import math
from collections import defaultdict
from enum import Enum
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy.stats import rankdata

from .metrics import FAIL_CUTOFF, GoalRecord

DEFAULT_TAUS: tuple[float, ...] = (0.0, 0.25, 1 / 3, 0.5, 2 / 3, 0.75)

GOAL_DOMINANT_MIN = 0.75
COMPETITOR_MIN = 0.5
FRAGMENTED_MIN = 0.3


class Regime(str, Enum):
    GOAL_DOMINANT = "GoalDominant"
    COMPETITOR_DOMINATED = "CompetitorDominated"
    FRAGMENTED = "Fragmented"
    PARTIAL_CONTESTED = "PartialContested"


class SuccessCategory(str, Enum):
    ZERO = "Zero"
    LOW = "Low"
    PARTIAL = "Partial"
    HIGH = "High"
    PERFECT = "Perfect"


def classify_taxonomy(goal_basin: float, comp: float, frag: float) -> Regime:
    if goal_basin >= GOAL_DOMINANT_MIN:
        return Regime.GOAL_DOMINANT
    if comp >= COMPETITOR_MIN and comp > goal_basin:
        return Regime.COMPETITOR_DOMINATED
    if frag >= FRAGMENTED_MIN and comp < COMPETITOR_MIN:
        return Regime.FRAGMENTED
    return Regime.PARTIAL_CONTESTED


def success_category(succ: float) -> SuccessCategory:
    if not 0.0 <= succ <= 1.0:
        raise ValueError("success must lie in [0, 1]")
    if succ == 0.0:
        return SuccessCategory.ZERO
    if succ < 0.25:
        return SuccessCategory.LOW
    if succ < 0.75:
        return SuccessCategory.PARTIAL
    if succ < 1.0:
        return SuccessCategory.HIGH
    return SuccessCategory.PERFECT


def rule_predict_failure(lgs_frac: float, tau: float) -> bool:
    return lgs_frac <= tau


# -- threshold sweep ----------------------------------------------------


class SweepRow(NamedTuple):
    condition: str
    tau: float
    tp: int
    fp: int
    fn: int
    tn: int
    precision: float
    recall: float
    f1: float
    accuracy: float
    no_predicted_positives: bool


def confusion_row(condition: str, tau: float, predicted: Sequence[bool], actual: Sequence[bool]) -> SweepRow:
    tp = fp = fn = tn = 0
    for p, a in zip(predicted, actual):
        if p and a:
            tp += 1
        elif p:
            fp += 1
        elif a:
            fn += 1
        else:
            tn += 1
    # reported as 1.0 and flagged when nothing is predicted positive
    precision = tp / (tp + fp) if tp + fp else 1.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    acc = (tp + tn) / (tp + fp + fn + tn)
    return SweepRow(condition, tau, tp, fp, fn, tn, precision, recall, f1, acc, tp + fp == 0)


def threshold_sweep(
    records: Iterable[GoalRecord],
    taus: Sequence[float] = DEFAULT_TAUS,
    fail_cutoff: float = FAIL_CUTOFF,
) -> list[SweepRow]:
    by_cond = _group(records, "condition")
    if not by_cond:
        raise ValueError("no records to sweep")
    rows = []
    for cond, recs in by_cond.items():
        actual = [r.succ_H < fail_cutoff for r in recs]
        for tau in taus:
            pred = [rule_predict_failure(r.lgs_frac, tau) for r in recs]
            rows.append(confusion_row(cond, tau, pred, actual))
    return rows


# -- per-seed ranking ---------------------------------------------------


def rank_auc(lgs: Sequence[float], failed: Sequence[bool]) -> float | None:
    """How well ``-LGS`` ranks failing goals ahead of the rest.

    Mann-Whitney U over average ranks, ties counting one half. Returns ``None``
    when only one class is present.
    """
    score = -np.asarray(lgs, dtype=np.float64)
    failed = np.asarray(failed, dtype=bool)
    n_pos, n_neg = int(failed.sum()), int((~failed).sum())
    if n_pos == 0 or n_neg == 0:
        return None
    ranks = rankdata(score)
    u = ranks[failed].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def spearman_rho(x: Sequence[float], y: Sequence[float]) -> float | None:
    """Pearson correlation of average ranks; ``None`` without variance in both."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(x) < 3:
        return None
    rx, ry = rankdata(x), rankdata(y)
    rx -= rx.mean()
    ry -= ry.mean()
    denom = math.sqrt(float(rx @ rx) * float(ry @ ry))
    if denom == 0.0:
        return None
    return float(rx @ ry) / denom


class RankingRow(NamedTuple):
    condition: str
    seed: int
    auc: float | None
    spearman: float | None
    n_fail: int
    n_ok: int


def per_seed_ranking(records: Iterable[GoalRecord], fail_cutoff: float = FAIL_CUTOFF) -> list[RankingRow]:
    groups: dict[tuple[str, int], list[GoalRecord]] = defaultdict(list)
    for r in records:
        groups[(r.condition, r.seed)].append(r)
    rows = []
    for (cond, seed), recs in sorted(groups.items(), key=lambda kv: (kv[0][0], kv[0][1])):
        lgs = [r.lgs_frac for r in recs]
        succ = [r.succ_H for r in recs]
        failed = [s < fail_cutoff for s in succ]
        rows.append(RankingRow(
            cond, seed, rank_auc(lgs, failed), spearman_rho(lgs, succ),
            sum(failed), len(failed) - sum(failed),
        ))
    return rows


# -- stratification and taxonomy tables ---------------------------------


BANDS = ("Low", "Partial", "Full")


def lgs_band(lgs_frac: float) -> str:
    if lgs_frac <= 0.5:
        return "Low"
    if lgs_frac < 1.0:
        return "Partial"
    return "Full"


class StratumRow(NamedTuple):
    condition: str
    band: str
    n: int
    mean_succ: float | None
    failure_pct: float | None
    mean_goal_basin: float | None
    mean_comp_basin: float | None
    mean_frag: float | None


def _mean(vals: Sequence[float]) -> float | None:
    return float(np.mean(vals)) if len(vals) else None


def stratify(records: Iterable[GoalRecord], fail_cutoff: float = FAIL_CUTOFF) -> list[StratumRow]:
    rows = []
    for cond, recs in _group(records, "condition").items():
        bands: dict[str, list[GoalRecord]] = {b: [] for b in BANDS}
        for r in recs:
            bands[lgs_band(r.lgs_frac)].append(r)
        for b in BANDS:
            rs = bands[b]
            fail = [100.0 * (r.succ_H < fail_cutoff) for r in rs]
            rows.append(StratumRow(
                cond, b, len(rs),
                _mean([r.succ_H for r in rs]),
                _mean(fail),
                _mean([r.goal_basin for r in rs]),
                _mean([r.comp_basin for r in rs]),
                _mean([r.fragmentation for r in rs]),
            ))
    return rows


class TaxonomyRow(NamedTuple):
    condition: str
    regime: str
    n: int
    pct: float
    mean_succ: float | None
    mean_lgs: float | None
    mean_goal_basin: float | None
    mean_comp_basin: float | None
    mean_frag: float | None


def taxonomy_summary(records: Iterable[GoalRecord], pooled_label: str | None = None) -> list[TaxonomyRow]:
    """Regime counts and means per condition, or pooled under ``pooled_label``."""
    records = list(records)
    if pooled_label is not None:
        groups = {pooled_label: records}
    else:
        groups = _group(records, "condition")
    rows = []
    for cond, recs in groups.items():
        for reg in Regime:
            rs = [r for r in recs if r.regime == reg.value]
            rows.append(TaxonomyRow(
                cond, reg.value, len(rs), 100.0 * len(rs) / len(recs) if recs else 0.0,
                _mean([r.succ_H for r in rs]),
                _mean([r.lgs_frac for r in rs]),
                _mean([r.goal_basin for r in rs]),
                _mean([r.comp_basin for r in rs]),
                _mean([r.fragmentation for r in rs]),
            ))
    return rows


class CrosstabRow(NamedTuple):
    regime: str
    zero_pct: float | None
    low_pct: float | None
    partial_pct: float | None
    high_pct: float | None
    perfect_pct: float | None


def regime_crosstab(records: Iterable[GoalRecord]) -> list[CrosstabRow]:
    """Row percentages of success category within each regime."""
    records = list(records)
    rows = []
    for reg in Regime:
        rs = [r for r in records if r.regime == reg.value]
        pct = []
        for cat in SuccessCategory:
            k = sum(1 for r in rs if r.success_category == cat.value)
            pct.append(100.0 * k / len(rs) if rs else None)
        rows.append(CrosstabRow(reg.value, *pct))
    return rows


def _group(records: Iterable[GoalRecord], key: str) -> dict:
    out: dict = {}
    for r in records:
        out.setdefault(getattr(r, key), []).append(r)
    return out
