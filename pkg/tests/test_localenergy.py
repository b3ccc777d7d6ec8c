import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slpassive import channels as ch
from slpassive import localenergy as le
from slpassive import models
from slpassive.errors import IndexOutOfRange, NotApplicable

PAIR = models.build_pair(2.0, 1.0)
XXX = models.build_xxx()


# ---------------------------------------------------------------------------
# extracted energy


def test_identity_channel_extracts_nothing():
    rho = models.gibbs(PAIR, 0.8).density
    assert abs(le.delta_e(PAIR, rho, ch.identity_channel())) < 1e-14


@pytest.mark.parametrize("seed", range(10))
def test_ground_state_never_gives_energy(seed):
    ks = ch.random_channel(2, 4, seed)
    assert le.delta_e(PAIR, PAIR.hamiltonian.projector(0), ks) <= 1e-10


def test_reset_on_mixed_state_by_hand():
    # after reset: |0><0| (x) I/2, whose only nonzero term is <Z_1> = 1
    rho = np.eye(4) / 4
    assert le.delta_e(PAIR, rho, ch.reset_channel()) == pytest.approx(-1.0, abs=1e-14)
    form = le.bilinear_form(PAIR, rho)
    assert form.delta_e(ch.reset_channel()) == pytest.approx(-1.0, abs=1e-12)


def test_xxx_singlet_reset_by_hand():
    # the singlet at -3 is sent to |0><0| (x) I/2, of energy 0
    assert le.delta_e_k(XXX, 0, ch.reset_channel()) == pytest.approx(-3.0, abs=1e-12)


def test_delta_e_k_signs_and_range():
    for seed in range(10):
        ks = ch.random_channel(2, 3, seed)
        assert le.delta_e_k(PAIR, 0, ks) <= 1e-12
        assert le.delta_e_k(PAIR, 3, ks) >= -1e-12
    with pytest.raises(IndexOutOfRange):
        le.delta_e_k(PAIR, 4, ch.identity_channel())


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.floats(0.1, 5.0), st.floats(0.0, 1.0))
def test_energy_form_matches_direct(seed, kappa, gamma):
    model = models.build_pair(kappa, gamma)
    rng = np.random.default_rng(seed)
    p = rng.dirichlet(np.ones(4))
    rho = model.hamiltonian.mixture(p)
    c0, w = le.energy_form(model, rho)
    assert np.allclose(w, w.conj().T, atol=1e-12)
    ks = ch.random_channel(2, int(rng.integers(1, 5)), seed)
    form = le.BilinearEnergyForm(c0, w)
    assert abs(form.delta_e(ks) - le.delta_e(model, rho, ks)) < 1e-10


def test_energy_form_on_chain_with_coherent_state():
    model = models.build_chain(3, 1.2)
    rng = np.random.default_rng(0)
    a = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
    rho = a @ a.conj().T
    rho /= np.trace(rho)
    c0, w = le.energy_form(model, rho)
    ks = ch.random_channel(2, 4, 5)
    assert abs(le.BilinearEnergyForm(c0, w).delta_e(ks) - le.delta_e(model, rho, ks)) < 1e-10


# ---------------------------------------------------------------------------
# coefficients


def test_ground_state_coefficients():
    form = le.bilinear_form(PAIR, models.eigenmixture(PAIR, [1, 0, 0, 0]))
    assert form.eta == pytest.approx(2 / math.sqrt(8), abs=1e-10)
    assert form.xi == pytest.approx(4 / math.sqrt(8), abs=1e-10)
    assert form.mu == pytest.approx(form.xi, abs=1e-10)
    assert form.residual < 1e-10


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 5.0), st.floats(0.0, 1.0), st.integers(0, 2**31))
def test_fit_matches_analytic_coefficients(kappa, gamma, seed):
    model = models.build_pair(kappa, gamma)
    p = np.random.default_rng(seed).dirichlet(np.ones(4))
    mix = models.eigenmixture(model, p)
    form = le.bilinear_form(model, mix)
    eta, xi, mu = le.pair_coefficients(kappa, gamma, *mix.deltas)
    assert form.residual < 1e-10
    assert np.allclose([form.eta, form.xi, form.mu], [eta, xi, mu], atol=1e-10)


def test_gamma_zero_has_no_mu():
    mix = models.eigenmixture(models.build_pair(1.7, 0.0), [0.4, 0.3, 0.2, 0.1])
    assert abs(le.bilinear_form(mix.model, mix).mu) < 1e-12


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_chain_fits_the_pair_pattern(n):
    model = models.build_chain(n, 2.0)
    form = le.bilinear_form(model, models.gibbs(model, 1.0))
    assert form.residual_tied < 1e-10


# ---------------------------------------------------------------------------
# closed forms and the 2-D reduction


def test_omega_closed_examples():
    assert le.omega_closed(0.0, 0.0) == 1.0
    assert le.omega_closed(2 / math.sqrt(8), 4 / math.sqrt(8)) == 0.0
    eta, xi, _ = le.pair_coefficients(2.0, 1.0, 0.96, -0.04)
    assert abs(le.omega_closed(eta, xi)) < 1e-12
    # |eta| = 1 always lands on the boundary branch
    assert le.omega_branch(1.0, 0.0) == "boundary"
    assert le.omega_closed(1.0, 0.0) == 0.0
    assert le.omega_closed(-1.0, 0.0) == 2.0


def test_omega_closed_continuous_across_branches():
    for eta in np.linspace(-0.9, 0.9, 19):
        if abs(eta) < 1e-12:
            continue
        xi = (1 - eta * eta) / abs(eta)
        inner = math.sqrt((1 - eta**2 + xi**2) / (1 - eta**2)) - xi - eta
        outer = abs(xi) + abs(eta) - xi - eta
        assert abs(inner - outer) < 1e-9


def test_omega_aniso_trivial_point():
    assert le.omega_aniso(0.0, 0.0, 0.0) == pytest.approx(1.0, abs=1e-12)


def test_omega_aniso_matches_closed_for_gamma_one():
    axis = np.linspace(-1, 1, 11)
    for d0 in axis:
        for d1 in axis:
            if abs(d0) + abs(d1) > 1 + 1e-12:
                continue
            eta, xi, mu = le.pair_coefficients(2.0, 1.0, d0, d1)
            assert abs(le.omega_aniso(eta, xi, mu) - le.omega_closed(eta, xi)) < 1e-8


def test_omega_aniso_vs_oracle_gibbs():
    model = models.build_pair(3.0, 0.5)
    state = models.gibbs(model, 0.5)
    eta, xi, mu = le.pair_coefficients(3.0, 0.5, *state.deltas)
    got = le.omega_aniso(eta, xi, mu)
    assert abs(got - le.oracle_maximize(model, state, restarts=32).best_delta_e) < 1e-6


def test_omega_aniso_finds_narrow_corner_region():
    # next to the level crossing the positive region hugs a corner and is
    # invisible on the 513 grid; frozen against the oracle
    model = models.build_pair(2.3, 0.5)
    state = models.gibbs(model, 0.02)
    eta, xi, mu = le.pair_coefficients(2.3, 0.5, *state.deltas)
    got = le.omega_aniso(eta, xi, mu)
    assert got == pytest.approx(1.8294117e-06, rel=1e-6)
    assert abs(got - le.oracle_maximize(model, state, restarts=32).best_delta_e) < 1e-12


# ---------------------------------------------------------------------------
# oracle


def test_oracle_mixed_state():
    res = le.oracle_maximize(PAIR, np.eye(4) / 4, restarts=8)
    assert res.best_delta_e == pytest.approx(1.0, abs=1e-6)
    assert res.converged
    assert ch.validate(res.best_channel)["valid"]
    assert res.best_delta_e == max(res.per_restart)


def test_oracle_xxx_ground_state():
    res = le.oracle_maximize(XXX, XXX.hamiltonian.projector(0), restarts=64)
    assert res.best_delta_e <= 1e-9


def test_oracle_gibbs_at_unit_temperature():
    res = le.oracle_maximize(PAIR, models.gibbs(PAIR, 1.0), restarts=16)
    assert 0.0 <= res.best_delta_e + 1e-12 and res.best_delta_e <= 1e-6


def test_oracle_is_deterministic():
    state = models.from_deltas(PAIR, 0.2, 0.3)
    a = le.oracle_maximize(PAIR, state, restarts=4, seed=11)
    b = le.oracle_maximize(PAIR, state, restarts=4, seed=11)
    assert a.per_restart == b.per_restart
    assert np.array_equal(a.best_channel.ops, b.best_channel.ops)


def test_oracle_needs_restarts():
    with pytest.raises(ValueError):
        le.oracle_maximize(PAIR, np.eye(4) / 4, restarts=0)


# ---------------------------------------------------------------------------
# thresholds


def test_threshold_pair_values():
    res = le.threshold_pair(2.0)
    assert res["p_star"] == pytest.approx(0.9383, abs=5e-5)
    assert res["delta_star"] == pytest.approx(0.876691358, abs=1e-9)
    assert res["p_star_printed"] == pytest.approx(0.654979, abs=1e-6)
    assert res["delta_star"] == pytest.approx(models.pair_m(2.0) * res["delta_star_printed"], abs=1e-12)


def test_threshold_pair_decreases_with_kappa():
    p = [le.threshold_pair(k)["p_star"] for k in (1, 2, 4, 8, 16)]
    assert all(a > b for a, b in zip(p, p[1:]))


def test_threshold_pair_boundary_sweep():
    p_star = le.threshold_pair(2.0)["p_star"]
    rng = np.random.default_rng(0)
    for _ in range(500):
        p0 = rng.uniform(p_star, 1.0)
        rest = rng.dirichlet(np.ones(3)) * (1 - p0)
        d0, d1 = p0 - rest[2], rest[0] - rest[1]
        eta, xi, _ = le.pair_coefficients(2.0, 1.0, d0, d1)
        assert le.omega_closed(eta, xi) < 1e-12


def test_threshold_general_requires_entangled_ground():
    with pytest.raises(NotApplicable):
        le.threshold_general(models.build_pair(1.0, 0.0))


def test_threshold_general_pair_is_tight():
    # the single-level adversary finds the tight value; the corner formula
    # p* = (1 + delta*) / 2 is a sufficient bound above it
    p = le.threshold_general(PAIR, k_worst=3, restarts=4)
    assert p == pytest.approx(0.90824, abs=2e-4)
    eta, xi, _ = le.pair_coefficients(2.0, 1.0, 2 * 0.909 - 1, 0.0)
    assert le.omega_closed(eta, xi) == 0.0


def test_charging_threshold_not_applicable_for_xxx():
    with pytest.raises(NotApplicable):
        le.charging_threshold(XXX)


# ---------------------------------------------------------------------------
# critical temperatures


def test_pair_critical_temperature():
    ct = le.critical_temperature(PAIR)
    assert ct.method == "closed-condition"
    assert ct.t_star == pytest.approx(0.995644, abs=1e-5)
    lo, hi = ct.bracket
    assert le.closed_condition(PAIR, lo) >= 0 > le.closed_condition(PAIR, hi)


def test_xxx_critical_temperature_is_infinite():
    ct = le.critical_temperature(XXX)
    assert math.isinf(ct.t_star) and ct.certified


def test_degenerate_ground_gives_zero():
    ct = le.critical_temperature(models.build_pair(le.degeneracy_kappa(0.5), 0.5))
    assert ct.t_star == 0.0


def test_gamma_zero_critical_temperatures():
    assert le.pair_t_star(1.5, 0.0) == 0.0
    assert le.pair_t_star(3.0, 0.0) == pytest.approx(2.5058, abs=1e-3)


def test_excited_population_small_and_exact():
    model = models.build_pair(2.0)
    t = 0.05
    p = models.gibbs_populations(model.energies, t)
    assert le.excited_population(model, t) == pytest.approx(p[1:].sum(), rel=1e-12)
    assert le.excited_population(model, math.inf) == 0.75


def test_chain_two_equals_pair_curve():
    chain = le.chain_critical_curve([2], [1.0, 2.0, 4.0], workers=1)
    for (_, k, t, *_rest) in chain.rows:
        assert abs(t - le.critical_temperature(models.build_pair(k, 1.0)).t_star) < 1e-6


def test_locate_zero_edge_on_a_synthetic_dip():
    # descends linearly to zero at 2.3 then jumps up, like the anisotropic pair
    kc = 2.3

    def t_of(k):
        return kc - k if k <= kc else 1.0

    ks = [2.0, 2.1, 2.2, 2.35, 2.45]
    k, t = le.locate_zero_edge(t_of, ks, [t_of(x) for x in ks], threshold=1e-4, kappa_tol=1e-7)
    assert abs(k - kc) < 1e-4 and t <= 1e-4


def test_locate_zero_edge_with_sampled_zero():
    ks = [1.0, 1.5, 2.0, 2.5]
    ts = [0.0, 0.0, 0.5, 0.7]
    k, t = le.locate_zero_edge(lambda x: 0.0 if x < 1.8 else 0.4, ks, ts, kappa_tol=1e-6)
    assert k == pytest.approx(1.8, abs=1e-5)


# ---------------------------------------------------------------------------
# coherence


@pytest.mark.parametrize("phi", [-0.4, 0.0, 0.05, 0.1, 0.3, 1.2])
def test_coherence_closed_matches_direct(phi):
    base = models.eigenmixture(PAIR, [0.95, 0.0, 0.05, 0.0])
    state = models.coherent_perturb(base, 0.1)
    direct = le.delta_e(PAIR, state.density, ch.unitary_y(phi))
    assert abs(le.coherence_closed(2.0, base, 0.1, phi) - direct) < 1e-12
    assert le.coherence_delta_e(2.0, base, 0.1, phi) == pytest.approx(direct, abs=1e-12)


def test_coherence_typeset_value():
    base = models.eigenmixture(PAIR, [0.95, 0.0, 0.05, 0.0])
    assert le.coherence_amplitude(2.0) == pytest.approx(8.922, abs=1e-3)
    assert le.coherence_delta_e_printed(2.0, base, 0.1, 0.1) == pytest.approx(0.0202, abs=1e-4)


def test_coherence_witness():
    base = models.eigenmixture(PAIR, [0.95, 0.0, 0.05, 0.0])
    w = le.coherence_witness(2.0, base, 0.1)
    assert 0 < w["phi_best"] < w["phi_max"]
    assert w["delta_e_best"] > 0.05
    assert le.coherence_closed(2.0, base, 0.1, w["phi_max"]) == pytest.approx(0.0, abs=1e-12)
    zero = le.coherence_witness(2.0, base, 0.0)
    assert zero["delta_e_best"] == 0.0
