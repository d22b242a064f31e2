import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from grwfuzzy.amplitude import Amplitude
from grwfuzzy.dynamics import GrwParams
from grwfuzzy.errors import CapacityError, DegenerateStateError, ShapeError
from grwfuzzy.scenarios import ScenarioConfig, prepare_chain_state
from grwfuzzy.state import (
    MARBLE_ALPHABET,
    ProductState,
    SparseState,
    Subsystem,
    TwoRegionMarble,
    apparatus_name,
    branch_mass,
    expand,
    inner_product,
    marble_name,
    normalize,
    schmidt_rank_one_check,
)

from oracles import dense_product

M1 = Subsystem("m1", MARBLE_ALPHABET)
M2 = Subsystem("m2", MARBLE_ALPHABET)


def one_marble(z_in, z_out):
    return SparseState.from_terms((M1,), {("in",): z_in, ("out",): z_out})


# marble factors ------------------------------------------------------------


def test_marble_factor_must_be_normalized():
    with pytest.raises(DegenerateStateError):
        TwoRegionMarble(Amplitude.from_complex(0.6), Amplitude.from_complex(0.6))
    m = TwoRegionMarble.from_amplitudes(Amplitude(-800.0, 0.0), Amplitude(-800.0, 1.0))
    assert m.mass_in == pytest.approx(0.5)


def test_marble_labels():
    m = TwoRegionMarble.from_masses(0.7)
    assert m.dominant() == "in"
    assert math.exp(m.log_mass("out")) == pytest.approx(0.3)
    with pytest.raises(ShapeError):
        m.log_mass("elsewhere")


def test_product_state_rejects_duplicate_ids():
    m = TwoRegionMarble.from_masses(0.5, 1)
    with pytest.raises(ShapeError):
        ProductState((m, m))


# normalize -----------------------------------------------------------------


def test_normalize_keeps_normalized_state():
    s = normalize(one_marble(0.6, 0.8))
    assert s.label_masses("m1")["in"] == pytest.approx(0.36)
    assert s.label_masses("m1")["out"] == pytest.approx(0.64)


def test_normalize_equal_weights():
    s = normalize(one_marble(1.0, 1.0))
    for z in s.terms.values():
        assert z.to_complex() == pytest.approx(1 / math.sqrt(2))


def test_normalize_tiny_amplitudes_without_underflow():
    s = SparseState.from_terms((M1,), {("in",): Amplitude(-1000.0, 0.0), ("out",): Amplitude(-1000.0, 0.0)})
    assert s.mass() == 0.0  # the raw state underflows in linear space
    n = normalize(s)
    for z in n.terms.values():
        assert z.abs2() == pytest.approx(0.5, abs=1e-12)
    n.check_normalized(1e-12)


def test_normalize_matches_exact_rationals_at_small_exponents():
    from fractions import Fraction

    # log-magnitudes -1 and -2 with weight ratio e^2 : 1 for the squared masses
    s = normalize(SparseState.from_terms((M1,), {("in",): Amplitude(-1.0, 0.0), ("out",): Amplitude(-2.0, 0.0)}))
    e2 = Fraction(math.exp(2.0))
    assert s.label_masses("m1")["in"] == pytest.approx(float(e2 / (e2 + 1)), rel=1e-14)


def test_normalize_zero_state_raises():
    s = SparseState((M1,), np.zeros((0, 1)), [], [])
    with pytest.raises(DegenerateStateError):
        normalize(s)


# construction and invariants -----------------------------------------------


def test_zero_terms_are_dropped_and_rows_sorted():
    s = SparseState.from_terms((M1, M2), {("out", "in"): 0.6, ("in", "out"): 0.8, ("in", "in"): 0.0})
    assert len(s) == 2
    assert [s.config(r) for r in range(len(s))] == [("in", "out"), ("out", "in")]


def test_duplicate_and_out_of_range_codes_rejected():
    with pytest.raises(ShapeError):
        SparseState((M1,), [[0], [0]], [0.0, 0.0], [0.0, 0.0])
    with pytest.raises(ShapeError):
        SparseState((M1,), [[2]], [0.0], [0.0])
    with pytest.raises(ShapeError):
        M1.code("nowhere")


def test_state_arrays_are_read_only():
    s = one_marble(0.6, 0.8)
    with pytest.raises(ValueError):
        s.logm[0] = 0.0


# expand --------------------------------------------------------------------


def test_expand_single_factor():
    s = expand(ProductState((TwoRegionMarble.from_masses(0.36),)))
    t = s.terms
    assert t[("in",)].to_complex() == pytest.approx(0.6)
    assert t[("out",)].to_complex() == pytest.approx(0.8)


def test_expand_two_equal_marbles():
    s = expand(ProductState.uniform(2, 0.5))
    assert len(s) == 4
    for z in s.terms.values():
        assert z.abs2() == pytest.approx(0.25)


def test_expand_three_marbles_all_in_mass():
    s = expand(ProductState.uniform(3, 0.95))
    assert s.terms[("in", "in", "in")].abs2() == pytest.approx(0.857375, abs=1e-12)
    s.check_normalized(1e-12)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.floats(0.01, 0.99), st.floats(-3, 3), st.floats(-3, 3)), min_size=1, max_size=6))
def test_expand_matches_dense_kronecker_product(factors):
    marbles = tuple(TwoRegionMarble.from_masses(a, i + 1, p1, p2) for i, (a, p1, p2) in enumerate(factors))
    s = expand(ProductState(marbles))
    ref = dense_product([(m.amp_in.to_complex(), m.amp_out.to_complex()) for m in marbles])
    got = s.terms
    assert set(got) == set(ref)
    for cfg, z in ref.items():
        assert abs(got[cfg].to_complex() - z) < 1e-12


def test_expand_skips_zero_amplitudes():
    s = expand(ProductState.uniform(4, 1.0))
    assert len(s) == 1


def test_expand_capacity_error():
    with pytest.raises(CapacityError):
        expand(ProductState.uniform(5, 0.5), dense_limit=4)


# branch mass / inner product ---------------------------------------------------


def test_branch_mass_basics():
    s = expand(ProductState.uniform(3, 0.95))
    assert branch_mass(s, lambda c: True) == pytest.approx(1.0)
    assert branch_mass(s, lambda c: False) == 0.0
    assert branch_mass(s, {"m1": "in"}) == pytest.approx(0.95)
    assert branch_mass(s, {"m1": ("in", "out")}) == pytest.approx(1.0)


def test_branch_mass_all_in_for_45_marbles():
    # a sparse state holding only the two branches the check needs
    roster = tuple(Subsystem(marble_name(i), MARBLE_ALPHABET) for i in range(1, 46))
    a = Amplitude(0.5 * 45 * math.log(0.95), 0.0)
    b = Amplitude(0.5 * math.log1p(-(0.95**45)), 0.0)
    s = SparseState.from_terms(roster, {("in",) * 45: a, ("out",) + ("in",) * 44: b})
    mass = branch_mass(s, {marble_name(i): "in" for i in range(1, 46)})
    assert abs(mass - 0.95**45) < 1e-9
    assert mass == pytest.approx(0.0994, abs=5e-5)


def test_inner_product_examples():
    s = expand(ProductState.uniform(4, 0.7))
    assert inner_product(s, s).to_complex() == pytest.approx(1.0)
    roster = s.roster
    all_in = SparseState.from_terms(roster, {("in",) * 4: 1.0})
    ov = inner_product(s, all_in)
    assert ov.abs2() == pytest.approx(0.7**4)
    all_out = SparseState.from_terms(roster, {("out",) * 4: 1.0})
    assert inner_product(all_in, all_out).is_zero


def test_inner_product_is_conjugate_linear_in_first_argument():
    x = SparseState.from_terms((M1,), {("in",): 1j})
    y = SparseState.from_terms((M1,), {("in",): 1.0})
    assert inner_product(x, y).to_complex() == pytest.approx(-1j)


def test_inner_product_roster_mismatch():
    with pytest.raises(ShapeError):
        inner_product(one_marble(0.6, 0.8), SparseState.from_terms((M2,), {("in",): 1.0}))


# Schmidt check -------------------------------------------------------------


@pytest.mark.parametrize("n", [2, 3, 5, 8])
def test_product_states_factorize_across_every_cut(n):
    rng = np.random.default_rng(n)
    marbles = tuple(TwoRegionMarble.from_masses(float(rng.uniform(0.05, 0.95)), i, *rng.uniform(-3, 3, 2))
                    for i in range(1, n + 1))
    s = expand(ProductState(marbles))
    for k in range(1, 2 ** n - 1):
        left = [marble_name(i + 1) for i in range(n) if k >> i & 1]
        ok, dev = schmidt_rank_one_check(s, left)
        assert ok, (left, dev)


def test_bell_pair_is_maximally_entangled():
    s = SparseState.from_terms((M1, M2), {("in", "in"): 1 / math.sqrt(2), ("out", "out"): 1 / math.sqrt(2)})
    ok, dev = schmidt_rank_one_check(s, ["m1"])
    assert not ok
    assert dev == pytest.approx(1.0)


def test_records_state_factorizes_into_marble_apparatus_pairs():
    cfg = ScenarioConfig(n_marbles=4, a_sq=0.8, grw=GrwParams())
    s = prepare_chain_state(cfg, "records")
    for i in range(1, 5):
        ok, dev = schmidt_rank_one_check(s, [marble_name(i), apparatus_name(i)])
        assert ok, dev
    # but a marble alone is entangled with its apparatus
    assert not schmidt_rank_one_check(s, [marble_name(1)])[0]


def test_schmidt_check_rejects_trivial_cut():
    s = expand(ProductState.uniform(2, 0.5))
    with pytest.raises(ShapeError):
        schmidt_rank_one_check(s, [])


# pointer coupling ----------------------------------------------------------


def test_coupling_copies_the_marble_label():
    s = one_marble(0.6, 0.8)
    ptr = Subsystem("M1", ("ready", "in", "out"))
    s = s.with_subsystem(ptr, "ready").coupled("M1", lambda c: c["m1"])
    assert set(s.terms) == {("in", "in"), ("out", "out")}
    assert s.label_masses("M1")["in"] == pytest.approx(0.36)
    with pytest.raises(ShapeError):
        s.coupled("M1", lambda c: c["m1"])  # no longer ready


def test_marginals_and_effective_labels():
    s = expand(ProductState.uniform(2, 0.9))
    marg = s.marginal_log_masses(["m2"])
    assert math.exp(marg[("in",)]) == pytest.approx(0.9)
    assert s.config(s.dominant_row()) == ("in", "in")


# serialization -------------------------------------------------------------


GOLDEN = """\
m1=in,m2=in | -0.5108256237659907 0.0
m1=out,m2=out | -0.916290731874155 1.5
"""


def test_text_form_golden():
    s = SparseState.from_terms(
        (M1, M2), {("out", "out"): Amplitude(math.log(0.4), 1.5), ("in", "in"): Amplitude(math.log(0.6), 0.0)}
    )
    assert s.to_text() == GOLDEN


@settings(max_examples=25, deadline=None)
@given(st.lists(st.tuples(st.floats(-800, 0), st.floats(-3.1, 3.1)), min_size=4, max_size=4))
def test_text_round_trip_is_exact(pairs):
    roster = (M1, M2)
    cfgs = [("in", "in"), ("in", "out"), ("out", "in"), ("out", "out")]
    s = SparseState.from_terms(roster, {c: Amplitude(lm, ph) for c, (lm, ph) in zip(cfgs, pairs)})
    back = SparseState.from_text(s.to_text(), roster)
    assert np.array_equal(back.codes, s.codes)
    assert np.array_equal(back.logm, s.logm)
    assert np.array_equal(back.phase, s.phase)
