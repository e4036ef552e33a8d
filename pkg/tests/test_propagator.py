import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from discord_dyn.coeffs import CoefficientSet, accumulate_integrals, coefficient_series
from discord_dyn.liouville import liouvillian, swap_operator, vec
from discord_dyn.propagator import (
    NegativityWarning,
    StepInstabilityError,
    apply_factorized,
    density_matrix,
    initial_state,
    markov_limit_check,
    propagate_numerical,
    solve_independent_analytic,
)
from discord_dyn.spectral import HighT, SpectralParams, ZeroT, spectral_density

from oracles import frozen_step, random_state

BELL = initial_state("bell_psi_plus")
OHMIC10 = SpectralParams.ohmic(10.0)


def _constant(c):
    return lambda _t: c


def test_initial_state_presets():
    assert_allclose(initial_state("eg")[1, 1], 1.0)
    assert_allclose(initial_state("ee")[0, 0], 1.0)
    assert_allclose(BELL[1, 2], 0.5)
    with pytest.raises(ValueError):
        initial_state("gg")


@pytest.mark.parametrize("bad", [np.eye(3), np.diag([1.0, 0, 0, 0.1]), np.diag([1.5, -0.5, 0, 0]),
                                 np.array([[0.5, 0.1, 0, 0], [0, 0.5, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0]])])
def test_density_matrix_validation(bad):
    with pytest.raises(ValueError):
        density_matrix(bad)


def test_argument_validation():
    with pytest.raises(ValueError):
        propagate_numerical(BELL, "common", OHMIC10, ZeroT(), 1.0, 5)
    with pytest.raises(ValueError):
        propagate_numerical(BELL, "common", OHMIC10, ZeroT(), 0.0, 100)


def test_zero_generator_keeps_state():
    traj = propagate_numerical(BELL, "common", None, None, 3.0, 30, coefficients=np.zeros((61, 4)))
    assert np.all(traj.states == BELL)
    assert traj.times[0] == 0 and np.all(np.diff(traj.times) > 0)


@pytest.mark.filterwarnings("ignore::discord_dyn.propagator.NegativityWarning")
@pytest.mark.parametrize("kind", ["independent", "common"])
def test_frozen_step_matches_exponential(kind):
    rng = np.random.default_rng(10)
    t_end = 1e-3
    for _ in range(25):
        rho = random_state(rng)
        c = CoefficientSet(*rng.uniform(-1, 1, size=4))
        traj = propagate_numerical(rho, kind, None, None, t_end, 10, coefficients=_constant(c))
        exact = frozen_step(liouvillian(kind, c).matrix, t_end, vec(rho))
        assert np.abs(vec(traj.states[-1]) - exact).max() < 1e-12


def test_fourth_order_convergence():
    args = (BELL, "common", SpectralParams.ohmic(0.3), HighT(100.0), 2.0)
    ref = propagate_numerical(*args, 800).states[-1]
    e1 = np.abs(propagate_numerical(*args, 50).states[-1] - ref).max()
    e2 = np.abs(propagate_numerical(*args, 100).states[-1] - ref).max()
    assert 12 < e1 / e2 < 20


@pytest.mark.parametrize("kind", ["independent", "common"])
def test_swap_covariance(kind):
    rng = np.random.default_rng(11)
    sw = swap_operator()
    rho = random_state(rng)
    a = propagate_numerical(sw @ rho @ sw, kind, SpectralParams.sub_ohmic(1.0), ZeroT(), 10.0, 400)
    b = propagate_numerical(rho, kind, SpectralParams.sub_ohmic(1.0), ZeroT(), 10.0, 400)
    assert np.abs(a.states - sw @ b.states @ sw).max() < 1e-9


@pytest.mark.parametrize("kind", ["independent", "common"])
@pytest.mark.parametrize("regime", [ZeroT(), HighT(100.0)])
def test_trace_and_hermiticity(kind, regime):
    traj = propagate_numerical(BELL, kind, SpectralParams.super_ohmic(1.0), regime, 50.0, 4000)
    assert traj.trace_error.max() < 1e-8
    assert traj.hermiticity_defect.max() < 1e-10


def test_blowup_raises():
    with pytest.raises(StepInstabilityError):
        propagate_numerical(BELL, "common", None, None, 10.0, 10,
                            coefficients=_constant(CoefficientSet(1e3, 0, 0, 0)))


def test_negativity_warns():
    with pytest.warns(NegativityWarning):
        propagate_numerical(initial_state("ee"), "independent", None, None, 1.0, 20,
                            coefficients=_constant(CoefficientSet(-0.5, 0, 0, 0)))


def test_anti_diagonal_decays_with_gamma():
    # the anti-diagonal rows of the independent generator couple only to
    # themselves, with rate 4 kappa1 (plus a kappa2 phase on rho14)
    rho0 = 0.5 * (BELL + initial_state("eg"))
    traj = propagate_numerical(rho0, "independent", OHMIC10, ZeroT(), 5.0, 1000)
    fine = np.linspace(0, 5.0, 16001)
    gamma = np.array([x.Gamma for x in accumulate_integrals(
        fine, series=coefficient_series(fine, OHMIC10, ZeroT()))])[::16]
    assert_allclose(traj.element(2, 3), rho0[1, 2] * np.exp(-gamma), rtol=1e-6)


def test_factorized_identity_at_zero_parameters():
    rho = random_state(np.random.default_rng(12))
    assert_allclose(apply_factorized(rho, 0.0, 0.0, 0.0), rho, atol=1e-15)


def test_analytic_anti_diagonal_without_prefactor():
    rho0 = BELL
    t = np.linspace(0, 5, 501)
    traj = solve_independent_analytic(rho0, OHMIC10, ZeroT(), t, prefactor="none")
    assert np.abs(traj.element(2, 3) - rho0[1, 2]).max() < 1e-10


@pytest.mark.parametrize("prefactor,tol", [("gamma_only", 1e-9), ("gamma_and_j0", 1e-9)])
def test_analytic_populations_match_numerical(prefactor, tol):
    rho0 = initial_state("eg")
    num = propagate_numerical(rho0, "independent", OHMIC10, ZeroT(), 5.0, 1000)
    ana = solve_independent_analytic(rho0, OHMIC10, ZeroT(), num.times, prefactor=prefactor)
    pops = lambda tr: np.einsum("nii->ni", tr.states).real
    assert np.abs(pops(num) - pops(ana)).max() < tol


def test_analytic_without_prefactor_misses():
    rho0 = initial_state("eg")
    num = propagate_numerical(rho0, "independent", OHMIC10, ZeroT(), 5.0, 1000)
    ana = solve_independent_analytic(rho0, OHMIC10, ZeroT(), num.times, prefactor="none")
    assert np.abs(num.states[-1, 1, 1] - ana.states[-1, 1, 1]) > 1e-2


def test_analytic_full_state_high_t():
    t = np.linspace(0, 5, 1001)
    reg = HighT(100.0)
    num = propagate_numerical(BELL, "independent", OHMIC10, reg, 5.0, 1000)
    ana = solve_independent_analytic(BELL, OHMIC10, reg, t, prefactor="gamma_and_j0", j0_formula="naive")
    assert np.abs(num.states - ana.states).max() < 1e-6


def test_analytic_rejects_bad_switch():
    with pytest.raises(ValueError):
        solve_independent_analytic(BELL, OHMIC10, ZeroT(), [0, 1], prefactor="both")
    with pytest.raises(ValueError):
        solve_independent_analytic(BELL, OHMIC10, ZeroT(), [0, 1], j0_formula="other")


def test_markov_limit_values():
    assert_allclose(markov_limit_check(OHMIC10, ZeroT()), math.pi * 0.01 * math.exp(-0.1), rtol=1e-14)
    p = SpectralParams.super_ohmic(0.3)
    assert_allclose(markov_limit_check(p, ZeroT()), math.pi * spectral_density(1.0, p), rtol=1e-14)
    assert_allclose(markov_limit_check(OHMIC10, HighT(100.0)), 200 * math.pi * 0.01 * math.exp(-0.1))


def test_discord_column_filled():
    traj = propagate_numerical(BELL, "common", OHMIC10, ZeroT(), 1.0, 20).with_discord(grid=16)
    assert traj.discord.shape == traj.times.shape
    assert_allclose(traj.discord[0], 1.0, atol=1e-9)
