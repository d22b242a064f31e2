"""Fuzzy-link semantics: PosR verdicts, conjunctions and the enumeration check.

A proposition "x is in R" holds when the squared mass in R is at least
``1 - p``; its complement holds when that mass is at most ``p``. With
``p < 0.5`` the two cannot both hold.
"""

from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import dataclass
from enum import Enum

from .errors import ShapeError, ValidationError
from .lattice import LatticeWavefunction, region_mass
from .state import ProductState, SparseState, log_branch_mass, marble_name


@dataclass(frozen=True)
class FuzzyConfig:
    p: float = 0.1
    p_all: float | None = None

    def __post_init__(self):
        if not 0.0 < self.p < 0.5:
            raise ValidationError("p must lie in (0, 0.5)")
        if self.p_all is not None and not 0.0 < self.p_all < 0.5:
            raise ValidationError("p_all must lie in (0, 0.5)")

    @property
    def conjunction_p(self) -> float:
        return self.p if self.p_all is None else self.p_all


class Truth(str, Enum):
    HOLDS = "holds"
    COMPLEMENT_HOLDS = "complement_holds"
    INDETERMINATE = "indeterminate"


@dataclass(frozen=True)
class Verdict:
    value: Truth
    mass: float
    log_mass: float

    @property
    def holds(self) -> bool:
        return self.value is Truth.HOLDS

    @property
    def complement_holds(self) -> bool:
        return self.value is Truth.COMPLEMENT_HOLDS

    def to_dict(self) -> dict:
        return {"value": self.value.value, "mass": self.mass, "log_mass": self.log_mass}


def _verdict_from_log(log_mass: float, p: float, mass: float | None = None) -> Verdict:
    if mass is None:
        mass = math.exp(log_mass)
    if mass >= 1.0 - p:
        v = Truth.HOLDS
    elif mass <= p:
        v = Truth.COMPLEMENT_HOLDS
    else:
        v = Truth.INDETERMINATE
    return Verdict(v, mass, log_mass)


def posr_verdict(mass_in_region: float, config: FuzzyConfig) -> Verdict:
    if not -1e-12 <= mass_in_region <= 1.0 + 1e-12:
        raise ValueError(f"mass {mass_in_region} outside [0, 1]")
    log_mass = math.log(mass_in_region) if mass_in_region > 0 else -math.inf
    return _verdict_from_log(log_mass, config.p, float(mass_in_region))


@dataclass(frozen=True)
class AnomalyReport:
    per_marble: tuple[Verdict, ...]
    conjunction: Verdict
    assignment: tuple[tuple[int, str], ...] = ()

    @property
    def joint_mass(self) -> float:
        return self.conjunction.mass

    @property
    def weak_anomaly(self) -> bool:
        return all(v.holds for v in self.per_marble) and not self.conjunction.holds

    @property
    def strong_anomaly(self) -> bool:
        return all(v.holds for v in self.per_marble) and self.conjunction.complement_holds

    def to_dict(self) -> dict:
        return {
            "assignment": {str(k): lab for k, lab in self.assignment},
            "per_marble": [v.to_dict() for v in self.per_marble],
            "conjunction": self.conjunction.to_dict(),
            "joint_mass": self.joint_mass,
            "log_joint_mass": self.conjunction.log_mass,
            "weak_anomaly": self.weak_anomaly,
            "strong_anomaly": self.strong_anomaly,
        }


def _marble_ids(state) -> list[int]:
    if isinstance(state, ProductState):
        return [m.marble_id for m in state.marbles]
    ids = []
    for s in state.roster:
        if s.name.startswith("m") and s.name[1:].isdigit():
            ids.append(int(s.name[1:]))
    return ids


def log_conjunction_mass(state, assignment: Mapping[int, str]) -> float:
    if isinstance(state, ProductState):
        for mid in assignment:
            state.index_of(mid)
        return state.log_joint_mass(assignment)
    if isinstance(state, SparseState):
        pred = {marble_name(mid): lab for mid, lab in assignment.items()}
        for name in pred:
            state.index_of(name)
        return log_branch_mass(state, pred)
    raise TypeError(f"unsupported state type {type(state).__name__}")


def conjunction_verdict(state, assignment: Mapping[int, str], config: FuzzyConfig, p: float | None = None) -> Verdict:
    """Fuzzy-link verdict on "marble i is in assignment[i] for every i"."""
    if not assignment:
        raise ShapeError("empty assignment")
    lm = log_conjunction_mass(state, assignment)
    return _verdict_from_log(lm, config.p if p is None else p)


def dominant_assignment(state) -> dict[int, str]:
    """Each marble's currently heavier region."""
    if isinstance(state, ProductState):
        return {m.marble_id: m.dominant() for m in state.marbles}
    out = {}
    for mid in _marble_ids(state):
        lm = state.label_log_masses(marble_name(mid))
        out[mid] = max(lm, key=lm.get)
    return out


def enumeration_check(state, config: FuzzyConfig, assignment: Mapping[int, str] | None = None) -> AnomalyReport:
    """Per-marble verdicts against the verdict on their conjunction.

    By default every marble is asked about 'in'. With ``p_all`` set, the
    conjunction is judged at that threshold.
    """
    if assignment is None:
        assignment = {mid: "in" for mid in _marble_ids(state)}
    if isinstance(state, ProductState):
        if not assignment:
            raise ShapeError("empty assignment")
        by_id = {m.marble_id: m for m in state.marbles}
        missing = set(assignment) - set(by_id)
        if missing:
            raise ShapeError(f"unknown marble {min(missing)}")
        logs = [by_id[mid].log_mass(lab) for mid, lab in assignment.items()]
        per = tuple(_verdict_from_log(lm, config.p) for lm in logs)
        conj = _verdict_from_log(math.fsum(logs), config.conjunction_p)
        return AnomalyReport(per, conj, tuple(assignment.items()))
    per = tuple(conjunction_verdict(state, {mid: lab}, config) for mid, lab in assignment.items())
    conj = conjunction_verdict(state, assignment, config, p=config.conjunction_p)
    return AnomalyReport(per, conj, tuple(assignment.items()))


@dataclass(frozen=True)
class DualThresholdReport:
    consistent: bool
    forced_no_marble_in_box: bool
    all_in_mass_floor: float
    max_consistent_p: float


def max_consistent_p(n: int, p_all: float) -> float:
    """Largest p with (1-p)^n >= 1-p_all."""
    return -math.expm1(math.log1p(-p_all) / n)


def dual_threshold_check(n: int, p: float, p_all: float, a_sq: float) -> DualThresholdReport:
    FuzzyConfig(p, p_all)
    floor = math.exp(n * math.log1p(-p))
    return DualThresholdReport(
        consistent=floor >= 1.0 - p_all,
        forced_no_marble_in_box=a_sq < 1.0 - p,
        all_in_mass_floor=floor,
        max_consistent_p=max_consistent_p(n, p_all),
    )


@dataclass(frozen=True)
class IntersectionReport:
    in_delta: Verdict
    in_delta_prime: Verdict
    in_intersection: Verdict

    @property
    def violation(self) -> bool:
        return self.in_delta.holds and self.in_delta_prime.holds and not self.in_intersection.holds


def property_intersection_check(
    psi: LatticeWavefunction, delta, delta_prime, config: FuzzyConfig
) -> IntersectionReport:
    lo, hi = max(delta[0], delta_prime[0]), min(delta[1], delta_prime[1])
    inter = region_mass(psi, (lo, hi)) if lo < hi else 0.0
    clip = lambda m: min(max(m, 0.0), 1.0)  # noqa: E731
    return IntersectionReport(
        posr_verdict(clip(region_mass(psi, delta)), config),
        posr_verdict(clip(region_mass(psi, delta_prime)), config),
        posr_verdict(clip(inter), config),
    )
