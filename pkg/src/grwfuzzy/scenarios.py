"""Seeded experiments built from the state, dynamics and semantics layers.

Each ``run_*`` function is a pure function of ``(cfg, rng)`` and returns a
:class:`TrialResult`; :func:`monte_carlo` runs many trials with per-trial
random streams derived from ``cfg.seed``.
"""

from __future__ import annotations

import math
import statistics
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from functools import lru_cache

import numpy as np

from .dynamics import (
    GrwParams,
    HitRecord,
    apply_marble_hit,
    apply_sparse_hit,
    effective_collapse_status,
    sample_next_hit,
)
from .errors import CapacityError, ValidationError
from .rng import RNG_ID, trial_rng
from .semantics import (
    AnomalyReport,
    FuzzyConfig,
    dominant_assignment,
    enumeration_check,
    posr_verdict,
)
from .state import (
    DEFAULT_DENSE_LIMIT,
    MARBLE_ALPHABET,
    ProductState,
    SparseState,
    Subsystem,
    apparatus_name,
    expand,
    marble_name,
    schmidt_rank_one_check,
)

COUNTER = "M"
OBSERVER = "obs"
POINTER_ALPHABET = ("ready", "in", "out")


class Order(str, Enum):
    INDIVIDUAL_FIRST = "individual_first"
    COLLECTIVE_FIRST = "collective_first"


@dataclass(frozen=True)
class ScenarioConfig:
    n_marbles: int = 1
    a_sq: float = 0.95
    fuzzy: FuzzyConfig = field(default_factory=FuzzyConfig)
    grw: GrwParams = field(default_factory=GrwParams)
    duration: float = 1e-6
    trials: int = 1
    seed: int = 0
    order: Order = Order.INDIVIDUAL_FIRST
    observer: bool = False
    post_collapse_hits: int = 0
    dense_limit: int = DEFAULT_DENSE_LIMIT

    def __post_init__(self):
        object.__setattr__(self, "order", Order(self.order))
        if not self.n_marbles >= 1:
            raise ValidationError("n_marbles must be >= 1")
        if not 0.0 < self.a_sq <= 1.0:
            raise ValidationError("a_sq must lie in (0, 1]")
        if not self.trials >= 1:
            raise ValidationError("trials must be >= 1")
        if not self.duration >= 0:
            raise ValidationError("duration must be >= 0")
        if not self.seed >= 0:
            raise ValidationError("seed must be a non-negative integer")
        if not self.post_collapse_hits >= 0:
            raise ValidationError("post_collapse_hits must be >= 0")

    def with_(self, **changes) -> "ScenarioConfig":
        return replace(self, **changes)


@dataclass
class TrialResult:
    event_log: list[HitRecord] = field(default_factory=list)
    final_state_summary: dict = field(default_factory=dict)
    anomaly_timeline: list[tuple[float, AnomalyReport]] = field(default_factory=list)
    manifestation_events: int = 0
    pointer_agreement: bool = True
    metrics: dict = field(default_factory=dict)

    def to_dict(self, include_log: bool = False) -> dict:
        d = {
            "final_state_summary": self.final_state_summary,
            "anomaly_timeline": [{"time": t, "report": r.to_dict()} for t, r in self.anomaly_timeline],
            "manifestation_events": self.manifestation_events,
            "pointer_agreement": self.pointer_agreement,
            "metrics": self.metrics,
        }
        if include_log:
            d["event_log"] = [r.to_dict() for r in self.event_log]
        return d


# single marble ------------------------------------------------------------


def run_single_marble_collapse(cfg: ScenarioConfig, rng: np.random.Generator) -> TrialResult:
    """Evolve one marble under hits for ``cfg.duration``.

    Unless configured, the localization ceiling is ``1 - epsilon``: hits
    cannot push the minority branch below the leakage level, so every later
    hit can still produce a jump. The marble counts as collapsed once its
    dominant mass reaches ``eta_collapse`` or the ceiling, whichever is lower.
    """
    if cfg.n_marbles != 1:
        raise ValidationError("single-marble scenario needs n_marbles = 1")
    params = cfg.grw
    if params.localization_ceiling is None:
        params = params.with_(localization_ceiling=1.0 - params.epsilon)
    state = ProductState.uniform(1, cfg.a_sq)
    # the ceiling is reached up to rounding, hence the small slack
    log_eta = min(math.log(params.eta_collapse), math.log(params.localization_ceiling) - 1e-12)
    log, t = [], 0.0
    settled, collapse_time, collapsed_to, jumps = None, None, None, 0
    while True:
        nxt = sample_next_hit(rng, params, params.particles_per_marble, t)
        if nxt is None or nxt[0] > cfg.duration:
            break
        t = nxt[0]
        state, rec = apply_marble_hit(state, 0, rng, params, time=t)
        log.append(rec)
        m = state.marbles[0]
        dom = m.dominant()
        if m.log_mass(dom) >= log_eta:
            if settled is None:
                collapse_time, collapsed_to = t, dom
            elif dom != settled:
                jumps += 1
            settled = dom
    m = state.marbles[0]
    verdict = posr_verdict(min(m.mass_in, 1.0), cfg.fuzzy)
    return TrialResult(
        event_log=log,
        final_state_summary={"mass_in": m.mass_in, "mass_out": m.mass_out, "log_mass_out": m.amp_out.log_abs2},
        metrics={
            "collapse_time": collapse_time,
            "collapsed": collapse_time is not None,
            "collapsed_in": collapsed_to == "in",
            "final_in_verdict": verdict.value.value,
            "jump_events": jumps,
            "hits": len(log),
        },
    )


# counting anomaly ----------------------------------------------------------


def run_counting_anomaly(cfg: ScenarioConfig) -> AnomalyReport:
    """Enumeration check on n identical marbles with |a|^2 = a_sq."""
    return enumeration_check(ProductState.uniform(cfg.n_marbles, cfg.a_sq), cfg.fuzzy)


# anomaly persistence ------------------------------------------------------


def run_gb_persistence(cfg: ScenarioConfig, rng: np.random.Generator) -> TrialResult:
    """Hit the marbles of a product state and re-check the best conjunction.

    The conjunction at each event asks every marble about its currently
    dominant region. Unless configured, the localization ceiling is
    ``a_sq``: the initial factors are already as sharp as collapse makes them.
    """
    params = cfg.grw
    if params.localization_ceiling is None and 0.5 < cfg.a_sq < 1.0:
        params = params.with_(localization_ceiling=cfg.a_sq)
    state = ProductState.uniform(cfg.n_marbles, cfg.a_sq)
    counts = [params.particles_per_marble] * cfg.n_marbles
    timeline = [(0.0, enumeration_check(state, cfg.fuzzy, dominant_assignment(state)))]
    log, t, jumps, product_ok = [], 0.0, 0, True
    check_dense = cfg.n_marbles <= 8
    while True:
        nxt = sample_next_hit(rng, params, counts, t)
        if nxt is None or nxt[0] > cfg.duration:
            break
        t, k = nxt
        before = state.marbles[k].dominant()
        state, rec = apply_marble_hit(state, k, rng, params, time=t)
        log.append(rec)
        if state.marbles[k].dominant() != before:
            jumps += 1
        timeline.append((t, enumeration_check(state, cfg.fuzzy, dominant_assignment(state))))
        if check_dense and cfg.n_marbles > 1:
            dense = expand(state)
            product_ok &= all(
                schmidt_rank_one_check(dense, [marble_name(m.marble_id)])[0] for m in state.marbles
            )
    if not product_ok:
        raise AssertionError("marble-only hits broke the product form")
    return TrialResult(
        event_log=log,
        final_state_summary={
            "dominant": {str(k): v for k, v in dominant_assignment(state).items()},
            "joint_mass": timeline[-1][1].joint_mass,
        },
        anomaly_timeline=timeline,
        metrics={
            "weak_anomaly_throughout": all(r.weak_anomaly for _, r in timeline),
            "strong_anomaly_throughout": all(r.strong_anomaly for _, r in timeline),
            "jump_events": jumps,
            "hits": len(log),
            "product_form_preserved": product_ok,
        },
    )


# measurement chain ---------------------------------------------------------


def counter_label(k: int) -> str:
    return f"O={k}"


def observer_label(k: int) -> str:
    return f"count={k}"


def _marble_roster(n: int, params: GrwParams):
    return tuple(Subsystem(marble_name(i), MARBLE_ALPHABET, params.particles_per_marble) for i in range(1, n + 1))


def _column(state: SparseState, name: str) -> np.ndarray:
    return state.codes[:, state.index_of(name)]


def _with_apparatuses(state: SparseState, n: int, params: GrwParams) -> SparseState:
    for i in range(1, n + 1):
        sub = Subsystem(apparatus_name(i), POINTER_ALPHABET, params.pointer_particle_count)
        state = state.with_subsystem(sub, "ready")
        # marble code 0/1 (in/out) -> pointer code 1/2
        state = state.recorded(sub.name, _column(state, marble_name(i)) + 1)
    return state


def _in_count(state: SparseState, names: list[str]) -> np.ndarray:
    return sum(
        (_column(state, nm) == state.roster[state.index_of(nm)].code("in")).astype(np.int32) for nm in names
    )


def _with_counter(state: SparseState, n: int, params: GrwParams) -> SparseState:
    sub = Subsystem(COUNTER, ("ready",) + tuple(counter_label(k) for k in range(n + 1)), params.pointer_particle_count)
    state = state.with_subsystem(sub, "ready")
    k = _in_count(state, [marble_name(i) for i in range(1, n + 1)])
    return state.recorded(COUNTER, k + 1)


def _with_observer(state: SparseState, n: int, params: GrwParams) -> SparseState:
    sub = Subsystem(OBSERVER, ("count?",) + tuple(observer_label(k) for k in range(n + 1)), params.pointer_particle_count)
    state = state.with_subsystem(sub, "count?")
    k = _in_count(state, [apparatus_name(i) for i in range(1, n + 1)])
    return state.recorded(OBSERVER, k + 1, ready="count?")


def _determinate_label(state: SparseState, name: str, fuzzy: FuzzyConfig):
    for lab, lm in state.label_log_masses(name).items():
        if math.exp(lm) >= 1.0 - fuzzy.p:
            return lab
    return None


def manifestation_check(state: SparseState, n: int, fuzzy: FuzzyConfig) -> bool:
    """True when every pointer is determinate yet the records disagree."""
    readings = {}
    names = [apparatus_name(i) for i in range(1, n + 1)] + [COUNTER]
    if OBSERVER in state.names:
        names.append(OBSERVER)
    for name in names:
        lab = _determinate_label(state, name, fuzzy)
        if lab is None:
            return False
        readings[name] = lab
    n_in = sum(readings[apparatus_name(i)] == "in" for i in range(1, n + 1))
    bad = readings[COUNTER] != counter_label(n_in)
    if OBSERVER in readings:
        bad |= readings[OBSERVER] != observer_label(n_in)
    return bad


def _config_consistent(cfg: dict, n: int) -> bool:
    k = sum(cfg[marble_name(i)] == "in" for i in range(1, n + 1))
    ok = cfg.get(COUNTER) == counter_label(k)
    if apparatus_name(1) in cfg:
        ok &= all(cfg[apparatus_name(i)] == cfg[marble_name(i)] for i in range(1, n + 1))
    if OBSERVER in cfg:
        ok &= cfg[OBSERVER] == observer_label(k)
    return ok


class _ChainRun:
    """Event loop shared by both orderings of the measurement chain."""

    def __init__(self, cfg: ScenarioConfig, rng: np.random.Generator, state: SparseState):
        self.cfg, self.rng, self.state = cfg, rng, state
        self.params = cfg.grw
        self.log_eta = math.log(cfg.grw.eta_collapse)
        self.t = 0.0
        self.log: list[HitRecord] = []
        self.timeline: list[tuple[float, AnomalyReport]] = []
        self.settled = None
        self.jumps = 0
        self.collapse_instants = 0
        self.manifestations = 0
        self.consistent = True

    def collapsed(self):
        st = self.state
        if 2.0 * float(st.logm.max()) - st.log_mass() < self.log_eta:
            return None
        return effective_collapse_status(st, st.names, self.params.eta_collapse)

    def hit(self) -> bool:
        counts = [s.particles for s in self.state.roster]
        nxt = sample_next_hit(self.rng, self.params, counts, self.t)
        if nxt is None or nxt[0] > self.cfg.duration:
            return False
        self.t = nxt[0]
        self.state, rec = apply_sparse_hit(self.state, nxt[1], self.rng, self.params, time=self.t)
        self.log.append(rec)
        return True

    def observe(self, dom: dict, with_records: bool):
        """Bookkeeping at an effective-collapse instant."""
        self.collapse_instants += 1
        n = self.cfg.n_marbles
        if self.settled is not None and dom != self.settled:
            self.jumps += 1
        self.settled = dict(dom)
        self.consistent &= _config_consistent(dom, n)
        if with_records and manifestation_check(self.state, n, self.cfg.fuzzy):
            self.manifestations += 1
        self.timeline.append((self.t, enumeration_check(self.state, self.cfg.fuzzy)))

    def run_until_collapse(self, with_records: bool) -> dict | None:
        dom = self.collapsed()
        while dom is None:
            if not self.hit():
                return None
            dom = self.collapsed()
        self.observe(dom, with_records)
        return dom

    def settle(self, with_records: bool):
        for _ in range(self.cfg.post_collapse_hits):
            if not self.hit():
                return
            dom = self.collapsed()
            if dom is not None:
                self.observe(dom, with_records)


def prepare_chain_state(cfg: ScenarioConfig, stage: str) -> SparseState:
    """States of the measurement chain before any hit.

    ``stage`` is 'marbles' (the expanded product), 'records' (each marble
    correlated with its apparatus), 'counted' (records plus counter) or
    'collective' (marbles plus counter, no apparatuses).
    """
    return _prepare_chain_state(cfg.n_marbles, cfg.a_sq, cfg.grw, cfg.dense_limit, stage)


@lru_cache(maxsize=32)
def _prepare_chain_state(n: int, a_sq: float, params: GrwParams, dense_limit: int, stage: str) -> SparseState:
    if n > dense_limit:
        raise CapacityError(f"{n} marbles exceed the dense limit of {dense_limit}")
    state = expand(ProductState.uniform(n, a_sq), dense_limit, _marble_roster(n, params))
    if stage == "marbles":
        return state
    if stage == "collective":
        return _with_counter(state, n, params)
    state = _with_apparatuses(state, n, params)
    if stage == "records":
        return state
    if stage == "counted":
        return _with_counter(state, n, params)
    raise ValueError(f"unknown stage {stage!r}")


def run_measurement_chain(cfg: ScenarioConfig, rng: np.random.Generator) -> TrialResult:
    """Premeasure, count and let hits settle the pointers.

    individual_first: marbles -> apparatuses M_i -> counter M, then hits.
    collective_first: marbles -> counter M, hits until that pair settles,
    then the M_i, then hits again.
    Manifestation is counted only at effective-collapse instants.
    """
    n = cfg.n_marbles
    params = cfg.grw
    if cfg.order is Order.INDIVIDUAL_FIRST:
        run = _ChainRun(cfg, rng, prepare_chain_state(cfg, "counted"))
        if cfg.observer:
            run.state = _with_observer(run.state, n, params)
        run.timeline.append((0.0, enumeration_check(run.state, cfg.fuzzy)))
        dom = run.run_until_collapse(with_records=True)
        if dom is not None:
            run.settle(with_records=True)
        first_dom = dom
    else:
        run = _ChainRun(cfg, rng, prepare_chain_state(cfg, "collective"))
        run.timeline.append((0.0, enumeration_check(run.state, cfg.fuzzy)))
        first_dom = run.run_until_collapse(with_records=False)
        run.state = _with_apparatuses(run.state, n, params)
        if cfg.observer:
            run.state = _with_observer(run.state, n, params)
        dom = run.run_until_collapse(with_records=True)
        if dom is not None:
            run.settle(with_records=True)

    final = run.collapsed()
    counter = None
    if final is not None:
        counter = int(final[COUNTER].split("=")[1])
    agreement = final is not None and _config_consistent(final, n) and run.consistent
    summary = {
        "dominant_configuration": final,
        "dominant_mass": math.exp(2.0 * float(run.state.logm.max()) - run.state.log_mass()),
        "terms": len(run.state),
    }
    return TrialResult(
        event_log=run.log,
        final_state_summary=summary,
        anomaly_timeline=run.timeline,
        manifestation_events=run.manifestations,
        pointer_agreement=agreement,
        metrics={
            "collapsed": final is not None,
            "collapse_time": run.t if final is not None else None,
            "final_counter": counter,
            "first_settled_counter": (
                int(first_dom[COUNTER].split("=")[1]) if first_dom is not None else None
            ),
            "jump_events": run.jumps,
            "collapse_instants": run.collapse_instants,
            "hits": len(run.log),
        },
    )


# action at a distance ------------------------------------------------------


def aaad_state(a_sq: float, params: GrwParams, particles: float = 1.0) -> SparseState:
    """a|in>_L|in>_R + b|out>_L|out>_R with |a|^2 = a_sq."""
    roster = (Subsystem("L", MARBLE_ALPHABET, particles), Subsystem("R", MARBLE_ALPHABET, particles))
    terms = {("in", "in"): math.sqrt(a_sq), ("out", "out"): math.sqrt(1.0 - a_sq)}
    return SparseState.from_terms(roster, terms)


def run_action_at_a_distance(cfg: ScenarioConfig, rng: np.random.Generator) -> TrialResult:
    """Two entangled particles; a control window, then a measurement on L.

    Returns whether R switched from determinately in to determinately out.
    """
    params = cfg.grw
    state = aaad_state(cfg.a_sq, params)
    r_before = _right_in_verdict(state, cfg.fuzzy)

    # control: only the two particles can be hit during the window
    control_hits, t = 0, 0.0
    log = []
    while True:
        nxt = sample_next_hit(rng, params, [s.particles for s in state.roster], t)
        if nxt is None or nxt[0] > cfg.duration:
            break
        t = nxt[0]
        state, rec = apply_sparse_hit(state, nxt[1], rng, params, time=t)
        log.append(rec)
        control_hits += 1
    r_control = _right_in_verdict(state, cfg.fuzzy)

    # measurement on L with a macroscopic pointer
    meas = aaad_state(cfg.a_sq, params)
    meas = meas.with_subsystem(Subsystem("M_L", POINTER_ALPHABET, params.pointer_particle_count), "ready")
    meas = meas.coupled("M_L", lambda c: c["L"])
    t = 0.0
    dom = effective_collapse_status(meas, meas.names, params.eta_collapse)
    while dom is None:
        nxt = sample_next_hit(rng, params, [s.particles for s in meas.roster], t)
        if nxt is None or nxt[0] > cfg.duration:
            break
        t = nxt[0]
        meas, rec = apply_sparse_hit(meas, nxt[1], rng, params, time=t)
        log.append(rec)
        dom = effective_collapse_status(meas, meas.names, params.eta_collapse)
    r_after = _right_in_verdict(meas, cfg.fuzzy)
    switched = r_before.holds and r_after.complement_holds
    return TrialResult(
        event_log=log,
        final_state_summary={"dominant_configuration": dom, "R_in_mass": r_after.mass},
        metrics={
            "control_hits": control_hits,
            "control_R_in": r_control.value.value,
            "collapsed": dom is not None,
            "right_switched": switched,
            "collapse_time": t if dom is not None else None,
        },
        pointer_agreement=dom is None or dom["M_L"] == dom["L"],
    )


def _right_in_verdict(state: SparseState, fuzzy: FuzzyConfig):
    return posr_verdict(min(state.label_masses("R")["in"], 1.0), fuzzy)


SCENARIOS = {
    "single-marble": run_single_marble_collapse,
    "gb-persistence": run_gb_persistence,
    "measure-chain": run_measurement_chain,
    "aaad": run_action_at_a_distance,
}


# Monte Carlo ---------------------------------------------------------------


def _run_trials(args):
    name, cfg, indices, keep_logs = args
    fn = SCENARIOS[name]
    out = []
    for k in indices:
        res = fn(cfg, trial_rng(cfg.seed, k))
        if not keep_logs:
            res.event_log = []
        out.append((k, res))
    return out


def wilson_interval(successes: int, n: int, z: float = 1.959963984540054):
    if n == 0:
        return (0.0, 1.0)
    p = successes / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


def aggregate(results: list[TrialResult]) -> dict:
    """Per-metric frequencies, means with 95% intervals, and histograms."""
    rows = []
    for r in results:
        row = dict(r.metrics)
        row["manifestation_events"] = r.manifestation_events
        row["pointer_agreement"] = r.pointer_agreement
        rows.append(row)
    keys = sorted({k for row in rows for k in row})
    out = {}
    for key in keys:
        vals = [row.get(key) for row in rows if row.get(key) is not None]
        if not vals:
            out[key] = {"count": 0}
        elif all(isinstance(v, bool) for v in vals):
            s = sum(vals)
            lo, hi = wilson_interval(s, len(vals))
            out[key] = {"count": len(vals), "true": s, "frequency": s / len(vals), "ci95": [lo, hi]}
        elif all(isinstance(v, (int, float)) for v in vals):
            mean = math.fsum(vals) / len(vals)
            se = statistics.stdev(vals) / math.sqrt(len(vals)) if len(vals) > 1 else 0.0
            entry = {
                "count": len(vals),
                "mean": mean,
                "stderr": se,
                "ci95": [mean - 1.959963984540054 * se, mean + 1.959963984540054 * se],
                "median": statistics.median(vals),
                "min": min(vals),
                "max": max(vals),
                "sum": math.fsum(vals),
            }
            if all(isinstance(v, int) for v in vals):
                entry["histogram"] = {str(k): c for k, c in sorted(Counter(vals).items())}
            out[key] = entry
        else:
            out[key] = {
                "count": len(vals),
                "histogram": {str(k): c for k, c in sorted(Counter(map(str, vals)).items())},
            }
    return out


@dataclass
class MonteCarloSummary:
    scenario: str
    config: ScenarioConfig
    results: list[TrialResult]
    aggregates: dict

    def to_dict(self, include_logs: bool = False) -> dict:
        return {
            "scenario": self.scenario,
            "trials": len(self.results),
            "seed": self.config.seed,
            "rng": RNG_ID,
            "trial_seeds": {"root": self.config.seed, "derivation": "SeedSequence(seed, spawn_key=(trial,))"},
            "aggregates": self.aggregates,
            "per_trial": [r.to_dict(include_log=include_logs) for r in self.results],
        }


def monte_carlo(scenario: str, cfg: ScenarioConfig, workers: int = 1, keep_logs: bool = True) -> MonteCarloSummary:
    """Run ``cfg.trials`` independent trials of ``scenario``.

    Trial ``k`` always uses the stream derived from ``(cfg.seed, k)``, so the
    summary is identical for any number of workers.
    """
    if scenario not in SCENARIOS:
        raise ValueError(f"unknown scenario {scenario!r}; choose from {sorted(SCENARIOS)}")
    idx = list(range(cfg.trials))
    if workers <= 1:
        pairs = _run_trials((scenario, cfg, idx, keep_logs))
    else:
        chunks = [idx[i::workers] for i in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            pairs = [p for part in pool.map(_run_trials, [(scenario, cfg, c, keep_logs) for c in chunks]) for p in part]
    pairs.sort(key=lambda kv: kv[0])
    results = [r for _, r in pairs]
    return MonteCarloSummary(scenario, cfg, results, aggregate(results))


def config_to_dict(cfg: ScenarioConfig) -> dict:
    d = asdict(cfg)
    d["order"] = cfg.order.value
    return d
