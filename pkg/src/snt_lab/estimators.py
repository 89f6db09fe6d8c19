"""Censoring weights, weighted product-limit risks, and the analysis battery.

Risks are estimated on the annual grid with a discrete weighted
product-limit estimator. Within each follow-up year t the hazard is the
weight-sum of events over the weight-sum at risk; the two-year risk is one
minus the product of (1 - hazard) over years 1 and 2. Censored indexes leave
the risk set after their censoring year.

Artificial censoring can only strike untreated Visit 1 indexes, at year 1,
and its probability is a known function of severity at the next visit, so
the year 1 weight is always 1 and the year 2 weight is the inverse of the
probability of remaining uncensored given that severity.

Every analysis contrasts a treated and an untreated risk through the risk
ratio; standardized analyses mix (arm x severity) stratum risks with the
target population's severity shares first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .config import ScenarioSpec, WEIGHT_MODE_INITIATION, WEIGHT_MODE_PAPER
from .designs import DESIGN_SPT, IndexSet
from .population import Cohort, UndefinedRatioError, cohort_true_rr

ANALYSIS_TRUE = "true_rr"
ANALYSIS_CRUDE = "crude"
ANALYSIS_ATE_SNT = "ate_snt"
ANALYSIS_ATT_SNT = "att_snt"
ANALYSIS_ATE_SPT = "ate_spt"
ANALYSIS_ATT_SPT = "att_spt"
ANALYSES = (
    ANALYSIS_TRUE,
    ANALYSIS_CRUDE,
    ANALYSIS_ATE_SNT,
    ANALYSIS_ATT_SNT,
    ANALYSIS_ATE_SPT,
    ANALYSIS_ATT_SPT,
)

TARGET_NONE = "none"
TARGET_SNT_ALL = "snt_all"
TARGET_SNT_TREATED = "snt_treated"
TARGET_SPT_ALL = "spt_all"
TARGET_SPT_TREATED = "spt_treated"

FLAG_EMPTY_STRATUM = "empty_stratum"
FLAG_EMPTY_TARGET = "empty_target"
FLAG_ZERO_RISK_TREATED = "zero_risk_treated"
FLAG_ZERO_RISK_UNTREATED = "zero_risk_untreated"
FLAG_UNDEFINED_TRUTH = "undefined_truth"


class EmptyRiskSetError(ValueError):
    """No indexes in the requested arm (and stratum) at year 1."""


class DegenerateWeightError(ValueError):
    """A censoring probability of 1 makes the weight infinite."""


@dataclass(frozen=True)
class AnalysisResult:
    """One estimator's risks and risk ratio for one replicate dataset."""

    design: str
    analysis: str
    target_population: str
    risk_treated: float
    risk_untreated: float
    rr: float
    log_rr: float
    n_treated: int
    n_untreated: int
    degenerate: str = ""


def censoring_weights(
    indexes: IndexSet, spec: ScenarioSpec, mode: str = WEIGHT_MODE_INITIATION
) -> np.ndarray:
    """Per-index weight schedule, shape (n, 2) for follow-up years 1 and 2.

    Treated indexes and Visit 2 indexes cannot be censored, so their weights
    are 1. For untreated Visit 1 indexes the year 2 weight is
    1 / Pr(uncensored | severity at Visit 2), where the censoring hazard is
    Pr(decision point) * Pr(initiate | decision point) under the default
    'initiation' mode and just Pr(initiate) under 'paper_simplified'.
    """
    if mode not in (WEIGHT_MODE_INITIATION, WEIGHT_MODE_PAPER):
        raise ValueError(f"unknown weight mode {mode!r}")
    tp = np.asarray(spec.treat_prob)
    dp = np.asarray(spec.decision_prob)
    hazard = tp if mode == WEIGHT_MODE_PAPER else dp * tp
    p_uncensored = 1.0 - hazard

    n = len(indexes)
    w = np.ones((n, 2))
    at_risk = ~indexes.treated & (indexes.index_visit == 1)
    p = p_uncensored[indexes.severity_next[at_risk]]
    if np.any(p <= 0.0):
        raise DegenerateWeightError(
            "certain censoring: Pr(uncensored) = 0 for some severity level"
        )
    w[at_risk, 1] = 1.0 / p
    return w


def ipcw_km_risk(
    indexes: IndexSet,
    weights: np.ndarray,
    treated: bool,
    severity: int | None = None,
    tau: int = 2,
) -> float:
    """Weighted product-limit two-year risk for one arm, optionally within
    one severity-at-index stratum.

    Raises EmptyRiskSetError when the year 1 risk set is empty. An empty
    year 2 risk set leaves the curve flat at its year 1 value.
    """
    mask = indexes.treated == treated
    if severity is not None:
        mask &= indexes.severity_at_index == severity
    if not mask.any():
        raise EmptyRiskSetError(
            f"no indexes with treated={treated}"
            + ("" if severity is None else f", severity={severity}")
        )

    surv = 1.0
    futime, event = indexes.futime, indexes.event
    for t in range(1, tau + 1):
        at_risk = mask & (futime >= t)
        wt = weights[:, t - 1]
        denom = float(wt[at_risk].sum())
        if denom <= 0.0:
            break
        num = float(wt[at_risk & event & (futime == t)].sum())
        surv *= 1.0 - num / denom
    return 1.0 - surv


def severity_distribution(indexes: IndexSet, subset: str = "all") -> tuple[float, float]:
    """Empirical (low, high) severity-at-index shares over all or treated
    indexes; the standardization target of the ATE and ATT analyses."""
    if subset == "all":
        sev = indexes.severity_at_index
    elif subset == "treated":
        sev = indexes.severity_at_index[indexes.treated]
    else:
        raise ValueError(f"unknown subset {subset!r}")
    total = sev.shape[0]
    if total == 0:
        raise EmptyRiskSetError(f"no {subset} indexes to standardize to")
    n_high = int((sev == 1).sum())
    return (1.0 - n_high / total, n_high / total)


def _contrast(
    base: AnalysisResult, risk_treated: float, risk_untreated: float, flags: list[str]
) -> AnalysisResult:
    rr = float("nan")
    log_rr = float("nan")
    if not flags:
        if risk_untreated == 0.0:
            flags.append(FLAG_ZERO_RISK_UNTREATED)
        else:
            rr = risk_treated / risk_untreated
            if rr > 0.0:
                log_rr = math.log(rr)
            else:
                flags.append(FLAG_ZERO_RISK_TREATED)
    return replace(
        base,
        risk_treated=risk_treated,
        risk_untreated=risk_untreated,
        rr=rr,
        log_rr=log_rr,
        degenerate=";".join(flags),
    )


def standardized_rr(
    indexes: IndexSet,
    weights: np.ndarray,
    target: tuple[float, float],
    analysis: str,
    target_population: str,
) -> AnalysisResult:
    """Directly standardized risk ratio: per-arm stratum risks mixed with
    the target severity distribution. An empty (arm x stratum) cell flags
    the result as degenerate instead of raising."""
    base = _result_shell(indexes, analysis, target_population)
    flags: list[str] = []
    std = {0: 0.0, 1: 0.0}
    for arm in (0, 1):
        for sev in (0, 1):
            try:
                risk = ipcw_km_risk(indexes, weights, treated=bool(arm), severity=sev)
            except EmptyRiskSetError:
                flags.append(f"{FLAG_EMPTY_STRATUM}:arm{arm}/sev{sev}")
                continue
            std[arm] += target[sev] * risk
    return _contrast(base, std[1], std[0], flags)


def crude_rr(indexes: IndexSet, weights: np.ndarray, analysis: str = ANALYSIS_CRUDE,
             target_population: str = TARGET_NONE) -> AnalysisResult:
    """Arm-level weighted risks with no standardization."""
    base = _result_shell(indexes, analysis, target_population)
    flags: list[str] = []
    risks = {0: float("nan"), 1: float("nan")}
    for arm in (0, 1):
        try:
            risks[arm] = ipcw_km_risk(indexes, weights, treated=bool(arm))
        except EmptyRiskSetError:
            flags.append(f"{FLAG_EMPTY_STRATUM}:arm{arm}")
    return _contrast(base, risks[1], risks[0], flags)


def _result_shell(indexes: IndexSet, analysis: str, target_population: str) -> AnalysisResult:
    n_treated = int(indexes.treated.sum())
    return AnalysisResult(
        design=indexes.design,
        analysis=analysis,
        target_population=target_population,
        risk_treated=float("nan"),
        risk_untreated=float("nan"),
        rr=float("nan"),
        log_rr=float("nan"),
        n_treated=n_treated,
        n_untreated=len(indexes) - n_treated,
    )


def _safe_distribution(indexes: IndexSet, subset: str):
    try:
        return severity_distribution(indexes, subset), None
    except EmptyRiskSetError:
        return None, FLAG_EMPTY_TARGET + ":" + subset


def _standardized_or_flag(indexes, weights, target, flag, analysis, target_population):
    if target is None:
        base = _result_shell(indexes, analysis, target_population)
        return replace(base, degenerate=flag)
    return standardized_rr(indexes, weights, target, analysis, target_population)


def analyze_replicate(
    cohort: Cohort,
    spt: IndexSet,
    cal: IndexSet,
    td: IndexSet,
    spec: ScenarioSpec,
    cal_weight_mode: str = WEIGHT_MODE_INITIATION,
) -> list[AnalysisResult]:
    """The full analysis battery for one replicate: 14 results.

    SPT: the within-cohort true risk ratio, the crude contrast, and
    standardizations to its own all-participant and treated-participant
    severity distributions. Each emulation: the censoring-weighted crude
    contrast, standardizations to its own index populations, and
    standardizations to the single point trial's populations from the same
    cohort. Degenerate cells are flagged, never dropped.
    """
    results: list[AnalysisResult] = []

    n = len(cohort)
    base_true = AnalysisResult(
        design=DESIGN_SPT,
        analysis=ANALYSIS_TRUE,
        target_population=TARGET_NONE,
        risk_treated=float("nan"),
        risk_untreated=float("nan"),
        rr=float("nan"),
        log_rr=float("nan"),
        n_treated=n,
        n_untreated=n,
    )
    try:
        truth = cohort_true_rr(cohort, tau=spec.horizon_tau)
        results.append(
            replace(
                base_true,
                risk_treated=truth.risk_treated,
                risk_untreated=truth.risk_untreated,
                rr=truth.rr,
                log_rr=truth.log_rr,
                degenerate="" if truth.rr > 0 else FLAG_ZERO_RISK_TREATED,
            )
        )
    except UndefinedRatioError:
        results.append(replace(base_true, degenerate=FLAG_UNDEFINED_TRUTH))

    unit = np.ones((len(spt), 2))
    spt_all, flag_all = _safe_distribution(spt, "all")
    spt_treated, flag_treated = _safe_distribution(spt, "treated")

    results.append(crude_rr(spt, unit))
    results.append(
        _standardized_or_flag(spt, unit, spt_all, flag_all, ANALYSIS_ATE_SPT, TARGET_SPT_ALL)
    )
    results.append(
        _standardized_or_flag(
            spt, unit, spt_treated, flag_treated, ANALYSIS_ATT_SPT, TARGET_SPT_TREATED
        )
    )

    for emulation, mode in ((cal, cal_weight_mode), (td, WEIGHT_MODE_INITIATION)):
        w = censoring_weights(emulation, spec, mode)
        own_all, flag_own_all = _safe_distribution(emulation, "all")
        own_treated, flag_own_treated = _safe_distribution(emulation, "treated")
        results.append(crude_rr(emulation, w))
        results.append(
            _standardized_or_flag(
                emulation, w, own_all, flag_own_all, ANALYSIS_ATE_SNT, TARGET_SNT_ALL
            )
        )
        results.append(
            _standardized_or_flag(
                emulation, w, own_treated, flag_own_treated, ANALYSIS_ATT_SNT,
                TARGET_SNT_TREATED,
            )
        )
        results.append(
            _standardized_or_flag(
                emulation, w, spt_all, flag_all, ANALYSIS_ATE_SPT, TARGET_SPT_ALL
            )
        )
        results.append(
            _standardized_or_flag(
                emulation, w, spt_treated, flag_treated, ANALYSIS_ATT_SPT,
                TARGET_SPT_TREATED,
            )
        )
    return results
