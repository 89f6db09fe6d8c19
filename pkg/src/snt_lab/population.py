"""Individual-level data generation and exact truth enumeration.

Each simulated individual carries three annual visits. At every visit the
generator draws, for both treatment arms, whether the composite outcome
occurs in the following year given severity at that visit. From those
per-visit potential outcomes the three treatment patterns (never initiate,
initiate at Visit 2, initiate at Visit 1) each get a potential event time,
counted in years from Visit 1. An outcome determined at visit t is observed
at year t; nothing is generated past year 3.

Severity is monotone: low may progress to high between visits, high never
reverts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .config import ScenarioSpec
from .hazards import HazardSet, two_year_risk_high, two_year_risk_low

LOW, HIGH = 0, 1

#: Treatment patterns as (index, per-visit arms). Initiation at Visit 1 or 2
#: is carried forward, so arms never switch back to 0.
PATTERN_NEVER = 0
PATTERN_VISIT2 = 1
PATTERN_VISIT1 = 2
PATTERN_ARMS = np.array([[0, 0, 0], [0, 1, 1], [1, 1, 1]], dtype=np.intp)
PATTERN_LABELS = ("never", "initiate_visit2", "initiate_visit1")

#: Sentinel for "no event by Visit 4" in event-time arrays (real times are 1..3).
NO_EVENT = 99


class UndefinedRatioError(ZeroDivisionError):
    """Risk ratio with a zero denominator risk."""


@dataclass(frozen=True)
class Individual:
    """One simulated person, unpacked into plain Python values."""

    person_id: int
    severity: tuple[int, int, int]
    decision2: bool
    po: tuple[tuple[int, int], tuple[int, int], tuple[int, int]]  # [visit][arm]
    event_time: tuple[int | None, int | None, int | None]  # per pattern


@dataclass
class Cohort:
    """Column-oriented cohort; rows are individuals.

    severity:   (n, 3) int8, severity at Visits 1-3
    decision2:  (n,) bool, Visit 2 qualifies as a treatment decision point
    po:         (n, 3, 2) bool, outcome determined at [visit] under [arm]
    event_time: (n, 3) int16, years from Visit 1 per pattern, NO_EVENT if none
    """

    severity: np.ndarray
    decision2: np.ndarray
    po: np.ndarray
    event_time: np.ndarray

    def __len__(self) -> int:
        return self.severity.shape[0]

    def individual(self, i: int) -> Individual:
        times = tuple(
            None if t == NO_EVENT else int(t) for t in self.event_time[i]
        )
        return Individual(
            person_id=i,
            severity=tuple(int(s) for s in self.severity[i]),
            decision2=bool(self.decision2[i]),
            po=tuple(tuple(int(v) for v in row) for row in self.po[i]),
            event_time=times,
        )

    def individuals(self) -> Iterator[Individual]:
        return (self.individual(i) for i in range(len(self)))

    def take(self, indices: np.ndarray) -> "Cohort":
        """Row subset/resample (used for with-replacement cohort sampling)."""
        return Cohort(
            severity=self.severity[indices],
            decision2=self.decision2[indices],
            po=self.po[indices],
            event_time=self.event_time[indices],
        )

    @classmethod
    def from_arrays(
        cls, severity: np.ndarray, decision2: np.ndarray, po: np.ndarray
    ) -> "Cohort":
        """Build a cohort from explicit draws, deriving the pattern event
        times; severity must already be monotone."""
        severity = np.asarray(severity, dtype=np.int8)
        po = np.asarray(po, dtype=bool)
        return cls(
            severity=severity,
            decision2=np.asarray(decision2, dtype=bool),
            po=po,
            event_time=_pattern_event_times(po),
        )


@dataclass(frozen=True)
class TruthEntry:
    risk_treated: float
    risk_untreated: float
    rr: float
    log_rr: float


@dataclass(frozen=True)
class TruthTable:
    """Exact two-year risks per estimand label.

    In the single point trial treatment is randomized independently of
    severity, so the severity-standardized estimands coincide with the
    marginal contrast; the three entries are equal by construction.
    """

    marginal: TruthEntry
    std_spt_all: TruthEntry
    std_spt_treated: TruthEntry

    def entries(self) -> list[tuple[str, TruthEntry]]:
        return [
            ("marginal", self.marginal),
            ("std_spt_all", self.std_spt_all),
            ("std_spt_treated", self.std_spt_treated),
        ]


def _pattern_event_times(po: np.ndarray) -> np.ndarray:
    """First event year (from Visit 1) under each treatment pattern."""
    n = po.shape[0]
    out = np.full((n, 3), NO_EVENT, dtype=np.int16)
    for k in range(3):
        arms = PATTERN_ARMS[k]
        hit = po[:, np.arange(3), arms]  # (n, 3) outcome flags along the pattern
        out[:, k] = np.where(
            hit[:, 0], 1, np.where(hit[:, 1], 2, np.where(hit[:, 2], 3, NO_EVENT))
        )
    return out


def event_time_under_pattern(ind: Individual, pattern: int) -> int | None:
    """Walk visits 1..3 applying the pattern's arm at each visit; return the
    first year offset whose potential-outcome flag is set, else None."""
    for visit in range(3):
        if ind.po[visit][PATTERN_ARMS[pattern][visit]]:
            return visit + 1
    return None


def draw_cohort(
    rng: np.random.Generator, spec: ScenarioSpec, hazards: HazardSet, n: int
) -> Cohort:
    """Draw n individuals i.i.d. from the generative law.

    Draw order is fixed (baseline severity, the two progression steps, the
    decision-point indicator, then the per-visit-per-arm outcome grid) so a
    given stream always reproduces the same cohort.
    """
    pi = spec.progression_prob
    s1 = rng.random(n) < spec.baseline_high_prob
    s2 = s1 | (rng.random(n) < pi)
    s3 = s2 | (rng.random(n) < pi)
    severity = np.stack([s1, s2, s3], axis=1).astype(np.int8)

    dec_p = np.asarray(spec.decision_prob)
    decision2 = rng.random(n) < dec_p[severity[:, 1]]

    # p[arm, severity] -> probability the outcome is determined at a visit
    p = np.array([[hazards.p00, hazards.p01], [hazards.p10, hazards.p11]])
    u = rng.random((n, 3, 2))
    po = u < p.T[severity]  # p.T[z] = (p0z, p1z), broadcast over visits

    return Cohort.from_arrays(severity=severity, decision2=decision2, po=po)


def draw_individual(
    rng: np.random.Generator, spec: ScenarioSpec, hazards: HazardSet, person_id: int = 0
) -> Individual:
    ind = draw_cohort(rng, spec, hazards, 1).individual(0)
    return Individual(
        person_id=person_id,
        severity=ind.severity,
        decision2=ind.decision2,
        po=ind.po,
        event_time=ind.event_time,
    )


def enumerate_truth(spec: ScenarioSpec, hazards: HazardSet) -> TruthTable:
    """Exact two-year risks under sustained treatment versus never treating,
    by summation over the discrete severity state space. No sampling."""
    pi = spec.progression_prob
    p_s1 = {LOW: 1.0 - spec.baseline_high_prob, HIGH: spec.baseline_high_prob}
    trans = {LOW: {LOW: 1.0 - pi, HIGH: pi}, HIGH: {LOW: 0.0, HIGH: 1.0}}

    risks = []
    for arm in (0, 1):
        p_arm = hazards.for_arm(arm)
        risk = 0.0
        for s1 in (LOW, HIGH):
            year2 = sum(trans[s1][s2] * p_arm[s2] for s2 in (LOW, HIGH))
            risk += p_s1[s1] * (p_arm[s1] + (1.0 - p_arm[s1]) * year2)
        risks.append(risk)

    risk_untreated, risk_treated = risks
    rr = risk_treated / risk_untreated
    entry = TruthEntry(
        risk_treated=risk_treated,
        risk_untreated=risk_untreated,
        rr=rr,
        log_rr=float(np.log(rr)),
    )
    return TruthTable(marginal=entry, std_spt_all=entry, std_spt_treated=entry)


def cohort_true_rr(cohort: Cohort, tau: int = 2) -> TruthEntry:
    """Finite-sample truth within one cohort: the share with an event by tau
    under sustained initiation over the share under never initiating.

    Raises UndefinedRatioError when the never-initiate share is zero.
    """
    if len(cohort) == 0:
        raise UndefinedRatioError("empty cohort")
    risk_treated = float(np.mean(cohort.event_time[:, PATTERN_VISIT1] <= tau))
    risk_untreated = float(np.mean(cohort.event_time[:, PATTERN_NEVER] <= tau))
    if risk_untreated == 0.0:
        raise UndefinedRatioError("no events under the never-initiate pattern")
    rr = risk_treated / risk_untreated
    log_rr = float(np.log(rr)) if rr > 0 else float("nan")
    return TruthEntry(
        risk_treated=risk_treated, risk_untreated=risk_untreated, rr=rr, log_rr=log_rr
    )


def check_truth_consistency(spec: ScenarioSpec, hazards: HazardSet) -> tuple[float, float]:
    """The enumerated risks restated through the closed-form two-year risk
    expressions; used as a self-check that enumeration matches calibration."""
    pi = spec.progression_prob
    w_high = spec.baseline_high_prob
    out = []
    for arm in (0, 1):
        p_low, p_high = hazards.for_arm(arm)
        out.append(
            (1.0 - w_high) * two_year_risk_low(p_low, p_high, pi)
            + w_high * two_year_risk_high(p_high)
        )
    return out[0], out[1]
