"""GRW hit process on two-region marbles and sparse pointer states.

Hits arrive as a Poisson process with rate ``lambda_hit`` per particle. A hit
on a marble acts on the whole marble at once (every particle of a rigid body
sees the same jump factor), so at this level a hit multiplies the squared
mass of every branch whose label differs from the hit center by
``epsilon_leak`` and renormalizes.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import asdict, dataclass, field

import numpy as np

from . import kernels
from .amplitude import NEG_INF, Amplitude
from .errors import ShapeError, ValidationError
from .state import MARBLE_ALPHABET, ProductState, SparseState, TwoRegionMarble

FWHM_PER_STD = 2.0 * math.sqrt(2.0 * math.log(2.0))


@dataclass(frozen=True)
class GrwParams:
    """Collapse-model parameters (CGS units by default).

    ``epsilon_leak`` left as ``None`` is derived from the region separation as
    ``exp(-d**2 / sigma**2)`` (the squared ratio of a jump factor of standard
    deviation ``sigma`` at distance ``d`` to its peak), clamped from below by
    ``epsilon_floor``.
    """

    lambda_hit: float = 1e-15
    sigma_jump: float = 1e-5
    particles_per_marble: float = 6e23
    epsilon_leak: float | None = None
    eta_collapse: float = 1.0 - 1e-6
    region_separation: float = 1.0
    epsilon_floor: float = 1e-12
    pointer_particles: float | None = None
    localization_ceiling: float | None = None
    corrected_sampling: bool = False
    width_convention: str = "std"

    def __post_init__(self):
        if not self.lambda_hit > 0:
            raise ValidationError("lambda_hit must be > 0")
        if not self.sigma_jump > 0:
            raise ValidationError("sigma_jump must be > 0")
        if not self.particles_per_marble > 0:
            raise ValidationError("particles_per_marble must be > 0")
        if self.epsilon_leak is not None and not 0.0 < self.epsilon_leak < 1.0:
            raise ValidationError("epsilon_leak must lie in (0, 1)")
        if not 0.0 < self.epsilon_floor < 1.0:
            raise ValidationError("epsilon_floor must lie in (0, 1)")
        if not 0.5 < self.eta_collapse < 1.0:
            raise ValidationError("eta_collapse must lie in (0.5, 1)")
        if not self.region_separation > 0:
            raise ValidationError("region_separation must be > 0")
        if self.pointer_particles is not None and not self.pointer_particles > 0:
            raise ValidationError("pointer_particles must be > 0")
        if self.localization_ceiling is not None and not 0.5 < self.localization_ceiling < 1.0:
            raise ValidationError("localization_ceiling must lie in (0.5, 1)")
        if self.width_convention not in ("std", "fwhm"):
            raise ValidationError("width_convention must be 'std' or 'fwhm'")

    @property
    def sigma(self) -> float:
        """Standard deviation of the jump factor."""
        if self.width_convention == "fwhm":
            return self.sigma_jump / FWHM_PER_STD
        return self.sigma_jump

    @property
    def log_epsilon(self) -> float:
        if self.epsilon_leak is not None:
            return math.log(self.epsilon_leak)
        derived = -((self.region_separation / self.sigma) ** 2)
        return max(derived, math.log(self.epsilon_floor))

    @property
    def epsilon(self) -> float:
        return math.exp(self.log_epsilon)

    @property
    def pointer_particle_count(self) -> float:
        return self.particles_per_marble if self.pointer_particles is None else self.pointer_particles

    def with_(self, **changes) -> "GrwParams":
        d = asdict(self)
        d.update(changes)
        return GrwParams(**d)


@dataclass(frozen=True)
class HitRecord:
    time: float
    target_subsystem: int
    center_region: str
    pre_dominant_mass: float
    post_dominant_mass: float
    target_name: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def sample_next_hit(rng: np.random.Generator, params: GrwParams, particle_counts, now: float = 0.0):
    """Draw the next hit time and target.

    ``particle_counts`` is a scalar or one count per subsystem. Returns
    ``(time, subsystem_index)``, or ``None`` when nothing can be hit.
    """
    if isinstance(particle_counts, (int, float)):
        if not particle_counts > 0:
            return None
        return now + rng.exponential(1.0 / (params.lambda_hit * particle_counts)), 0
    counts = np.atleast_1d(np.asarray(particle_counts, dtype=float))
    total = float(counts.sum())
    if not total > 0:
        return None
    rate = params.lambda_hit * total
    t = now + rng.exponential(1.0 / rate)
    if len(counts) == 1:
        return t, 0
    u = rng.random() * total
    idx = int(np.searchsorted(np.cumsum(counts), u, side="right"))
    return t, min(idx, len(counts) - 1)


_MARBLE_CODES = np.array([0, 1], dtype=np.int32)
_MARBLE_CODES.flags.writeable = False


def _ceiling_args(params: GrwParams) -> tuple[float, float]:
    c = params.localization_ceiling
    if c is None:
        return 0.0, NEG_INF
    return math.log(c), math.log1p(-c)


def apply_marble_hit(
    state: ProductState, marble: int, rng: np.random.Generator, params: GrwParams, time: float = 0.0
) -> tuple[ProductState, HitRecord]:
    """Hit marble at position ``marble``; every other factor is untouched."""
    if not 0 <= marble < len(state):
        raise ShapeError(f"marble index {marble} out of range")
    factor = state.marbles[marble]
    logm = np.array([factor.amp_in.log_magnitude, factor.amp_out.log_magnitude])
    log_c, log1m_c = _ceiling_args(params)
    new_logm, center, pre, post = kernels.hit_update(
        _MARBLE_CODES,
        logm,
        2,
        float(rng.random()),
        params.log_epsilon,
        params.corrected_sampling,
        log_c,
        log1m_c,
    )
    new_factor = TwoRegionMarble(
        Amplitude(float(new_logm[0]), factor.amp_in.phase),
        Amplitude(float(new_logm[1]), factor.amp_out.phase),
        factor.marble_id,
    )
    record = HitRecord(
        time, marble, MARBLE_ALPHABET[center], math.exp(pre), math.exp(post), f"m{factor.marble_id}"
    )
    return state.replace(marble, new_factor), record


def apply_sparse_hit(
    state: SparseState, subsystem, rng: np.random.Generator, params: GrwParams, time: float = 0.0
) -> tuple[SparseState, HitRecord]:
    """Hit one subsystem of an entangled state.

    All distinct labels of the subsystem are treated as mutually distant
    regions: the center label is drawn with its branch mass and every other
    branch loses the factor ``epsilon_leak`` in squared mass.
    """
    j = state.index_of(subsystem)
    sub = state.roster[j]
    log_c, log1m_c = _ceiling_args(params)
    new_logm, center, pre, post = kernels.hit_update(
        state.codes[:, j],
        state.logm,
        len(sub.alphabet),
        float(rng.random()),
        params.log_epsilon,
        params.corrected_sampling,
        log_c,
        log1m_c,
    )
    record = HitRecord(time, j, sub.alphabet[center], math.exp(pre), math.exp(post), sub.name)
    return state._replace(logm=new_logm), record


def effective_collapse_status(state: SparseState, subsystem_group, eta: float):
    """Dominant configuration class on ``subsystem_group`` if its mass >= eta.

    Returns ``{name: label}`` or ``None``.
    """
    group = [state.roster[state.index_of(g)].name for g in subsystem_group]
    log_eta = math.log(eta)
    if len(set(group)) == len(state.roster):
        r = state.dominant_row()
        if 2.0 * state.logm[r] - state.log_mass() >= log_eta:
            cfg = dict(zip(state.names, state.config(r)))
            return {g: cfg[g] for g in group}
        return None
    total = state.log_mass()
    for cfg, lm in state.marginal_log_masses(group).items():
        if lm - total >= log_eta:
            return dict(zip(group, cfg))
    return None


@dataclass
class EventLog:
    """Hit records of one trial, in time order."""

    records: list[HitRecord] = field(default_factory=list)

    def append(self, rec: HitRecord):
        if self.records and not rec.time > self.records[-1].time:
            raise ValueError("hit times must be strictly increasing")
        self.records.append(rec)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)


def subsystem_particle_counts(state: SparseState) -> Sequence[float]:
    return [s.particles for s in state.roster]
