import math

import numpy as np
import pytest

from grwfuzzy.amplitude import Amplitude
from grwfuzzy.dynamics import (
    EventLog,
    GrwParams,
    HitRecord,
    apply_marble_hit,
    apply_sparse_hit,
    effective_collapse_status,
    sample_next_hit,
)
from grwfuzzy.errors import ShapeError, ValidationError
from grwfuzzy.rng import make_rng
from grwfuzzy.state import (
    MARBLE_ALPHABET,
    ProductState,
    SparseState,
    Subsystem,
    TwoRegionMarble,
    expand,
    marble_name,
    schmidt_rank_one_check,
)

from oracles import dense_hit, dense_product, total_variation


class FixedRng:
    """Stands in for a Generator when a test needs a chosen hit center."""

    def __init__(self, *values):
        self.values = list(values)

    def random(self):
        return self.values.pop(0)


def sparse_probs(state):
    lm = state.log_mass()
    return {state.config(r): math.exp(2 * state.logm[r] - lm) for r in range(len(state))}


# parameters ----------------------------------------------------------------


@pytest.mark.parametrize(
    "kw, msg",
    [
        ({"lambda_hit": 0.0}, "lambda_hit"),
        ({"sigma_jump": -1.0}, "sigma_jump"),
        ({"epsilon_leak": 1.0}, "epsilon_leak"),
        ({"eta_collapse": 0.5}, "eta_collapse"),
        ({"localization_ceiling": 1.0}, "localization_ceiling"),
        ({"width_convention": "hwhm"}, "width_convention"),
    ],
)
def test_param_validation_names_the_field(kw, msg):
    with pytest.raises(ValidationError, match=msg):
        GrwParams(**kw)


def test_epsilon_derivation():
    assert GrwParams().epsilon == pytest.approx(1e-12)  # 1 cm apart at sigma 1e-5 hits the floor
    p = GrwParams(sigma_jump=1.0, region_separation=2.0)
    assert p.epsilon == pytest.approx(math.exp(-4.0))
    assert GrwParams(epsilon_leak=1e-3).epsilon == pytest.approx(1e-3)
    fw = GrwParams(sigma_jump=2.0, width_convention="fwhm")
    assert fw.sigma == pytest.approx(2.0 / (2 * math.sqrt(2 * math.log(2))))


# hit times -----------------------------------------------------------------


@pytest.mark.parametrize("n_particles, expected", [(1e15, 1.0), (6e23, 1.0 / 6e8)])
def test_mean_waiting_time(n_particles, expected):
    rng = make_rng(7)
    params = GrwParams()
    waits = [sample_next_hit(rng, params, n_particles)[0] for _ in range(10_000)]
    assert np.mean(waits) == pytest.approx(expected, rel=0.03)


def test_hit_targets_proportional_to_particle_count():
    rng = make_rng(3)
    params = GrwParams()
    n = 10_000
    hits = sum(sample_next_hit(rng, params, [9e20, 1e20])[1] == 0 for _ in range(n))
    sd = math.sqrt(0.9 * 0.1 / n)
    assert abs(hits / n - 0.9) < 3 * sd


def test_next_hit_is_after_now_and_none_without_particles():
    rng = make_rng(0)
    t, k = sample_next_hit(rng, GrwParams(), [1.0, 2.0], now=5.0)
    assert t > 5.0 and k in (0, 1)
    assert sample_next_hit(rng, GrwParams(), [0.0]) is None


def test_event_log_requires_increasing_times():
    log = EventLog()
    log.append(HitRecord(1.0, 0, "in", 0.5, 0.9))
    with pytest.raises(ValueError):
        log.append(HitRecord(1.0, 0, "in", 0.5, 0.9))
    assert len(log) == 1


# marble hits ---------------------------------------------------------------


def test_equal_superposition_hit_at_in(each_backend):
    state = ProductState.uniform(1, 0.5)
    params = GrwParams(epsilon_leak=1e-12)
    new, rec = apply_marble_hit(state, 0, FixedRng(0.1), params)
    assert rec.center_region == "in"
    assert new.marbles[0].mass_out == pytest.approx(1e-12 / (1 + 1e-12), rel=1e-9)
    assert rec.pre_dominant_mass == pytest.approx(0.5)
    assert rec.post_dominant_mass == pytest.approx(1 / (1 + 1e-12))


def test_eigenstate_is_a_fixed_point(each_backend):
    state = ProductState.uniform(1, 1.0)
    rng = make_rng(1)
    for _ in range(50):
        new, rec = apply_marble_hit(state, 0, rng, GrwParams())
        assert rec.center_region == "in"
        assert new == state


def test_born_frequencies_of_hit_centers(each_backend):
    rng = make_rng(2024)
    state = ProductState.uniform(1, 0.7)
    params = GrwParams()
    n = 10_000
    hits_in = sum(apply_marble_hit(state, 0, rng, params)[1].center_region == "in" for _ in range(n))
    assert abs(hits_in / n - 0.7) < 0.014


def test_tails_never_vanish(each_backend):
    rng = make_rng(5)
    state = ProductState.uniform(1, 0.5)
    params = GrwParams(epsilon_leak=1e-12)
    for _ in range(200):
        state, _ = apply_marble_hit(state, 0, rng, params)
    m = state.marbles[0]
    minority = min(m.amp_in.log_abs2, m.amp_out.log_abs2)
    assert math.isfinite(minority) and minority < -1000
    assert abs(m.log_norm()) < 1e-12


def test_ceiling_caps_the_center_mass(each_backend):
    params = GrwParams(epsilon_leak=1e-12, localization_ceiling=0.95)
    new, rec = apply_marble_hit(ProductState.uniform(1, 0.5), 0, FixedRng(0.9), params)
    assert rec.center_region == "out"
    assert new.marbles[0].mass_out == pytest.approx(0.95)


def test_marble_index_out_of_range():
    with pytest.raises(ShapeError):
        apply_marble_hit(ProductState.uniform(2, 0.5), 2, make_rng(0), GrwParams())


# sparse hits ---------------------------------------------------------------


@pytest.mark.parametrize("n", [1, 2, 4, 8])
def test_sparse_dynamics_match_factorized_dynamics(each_backend, n):
    """Matched seeds: hits on the expanded state equal hits on the factors."""
    params = GrwParams(epsilon_leak=1e-3)
    worst = 0.0
    for trial in range(100 if n <= 4 else 25):
        rng_f, rng_s = make_rng(trial), make_rng(trial)
        prod = ProductState(tuple(
            TwoRegionMarble.from_masses(0.3 + 0.6 * ((i * 7 + trial) % 10) / 10, i + 1) for i in range(n)
        ))
        sparse = expand(prod)
        ref = dense_product([(m.amp_in.to_complex(), m.amp_out.to_complex()) for m in prod.marbles])
        for k in range(6):
            target = (k * 5 + trial) % n
            prod, rec_f = apply_marble_hit(prod, target, rng_f, params)
            sparse, rec_s = apply_sparse_hit(sparse, target, rng_s, params)
            assert rec_f.center_region == rec_s.center_region
            ref = dense_hit(ref, target, rec_f.center_region, params.epsilon)
        got = sparse_probs(sparse)
        fact = sparse_probs(expand(prod))
        dense = {c: abs(z) ** 2 for c, z in ref.items()}
        worst = max(worst, total_variation(got, fact), total_variation(got, dense))
    assert worst < 1e-9


def test_one_hit_settles_a_counter_with_tiny_leakage(each_backend):
    counter = Subsystem("M", ("ready", "O=0", "O=1"))
    s = SparseState.from_terms((counter,), {("O=1",): math.sqrt(0.9), ("O=0",): math.sqrt(0.1)})
    params = GrwParams(epsilon_leak=1e-12)
    for u in (0.05, 0.5, 0.95):
        new, _ = apply_sparse_hit(s, "M", FixedRng(u), params)
        assert effective_collapse_status(new, ["M"], params.eta_collapse) is not None


def test_hit_on_basis_pure_subsystem_is_identity(each_backend):
    roster = (Subsystem("m1", MARBLE_ALPHABET), Subsystem("m2", MARBLE_ALPHABET))
    s = SparseState.from_terms(roster, {("in", "in"): 0.6, ("in", "out"): 0.8})
    new, rec = apply_sparse_hit(s, "m1", make_rng(0), GrwParams())
    assert rec.center_region == "in"
    np.testing.assert_allclose(new.logm, s.logm, atol=1e-15)


@pytest.mark.parametrize("eps", [1e-12, 0.3])
def test_marble_only_hits_preserve_product_form(each_backend, eps):
    n = 6
    rng = make_rng(99)
    params = GrwParams(epsilon_leak=eps)
    s = expand(ProductState(tuple(TwoRegionMarble.from_masses(0.2 + 0.1 * i, i + 1) for i in range(n))))
    for _ in range(100):
        s, _ = apply_sparse_hit(s, marble_name(1), rng, params)
    for k in range(1, 2 ** n - 1):
        left = [marble_name(i + 1) for i in range(n) if k >> i & 1]
        assert schmidt_rank_one_check(s, left)[1] < 1e-10


# effective collapse --------------------------------------------------------


def test_effective_collapse_examples():
    roster = (Subsystem("m1", MARBLE_ALPHABET),)
    eta = 1 - 1e-6
    s = SparseState.from_terms(roster, {("in",): math.sqrt(0.9999999), ("out",): math.sqrt(1e-7)})
    assert effective_collapse_status(s, ["m1"], eta) == {"m1": "in"}
    s = SparseState.from_terms(roster, {("in",): math.sqrt(0.5), ("out",): math.sqrt(0.5)})
    assert effective_collapse_status(s, ["m1"], eta) is None


def test_effective_collapse_after_a_hit_on_an_entangled_pair():
    roster = (Subsystem("m1", MARBLE_ALPHABET), Subsystem("M1", ("ready", "in", "out")))
    s = SparseState.from_terms(roster, {("in", "in"): math.sqrt(0.5), ("out", "out"): math.sqrt(0.5)})
    params = GrwParams(epsilon_leak=1e-12)
    new, rec = apply_sparse_hit(s, "M1", make_rng(4), params)
    status = effective_collapse_status(new, ["m1", "M1"], params.eta_collapse)
    assert status == {"m1": rec.center_region, "M1": rec.center_region}
    assert effective_collapse_status(new, ["m1"], params.eta_collapse) == {"m1": rec.center_region}


def test_sparse_hit_keeps_phases():
    roster = (Subsystem("m1", MARBLE_ALPHABET),)
    s = SparseState.from_terms(roster, {("in",): Amplitude(math.log(0.6), 1.0), ("out",): Amplitude(math.log(0.8), -2.0)})
    new, _ = apply_sparse_hit(s, 0, make_rng(0), GrwParams(epsilon_leak=0.5))
    np.testing.assert_array_equal(new.phase, s.phase)
