"""Acceptance criteria, each checked at its stated tolerance.

Every test prints one ``criterion N: PASS|FAIL`` line; the lines are also
repeated in the terminal summary.  Figure-scenario runs are shared through a
module fixture.
"""

import itertools
import math
import time
import warnings

import numpy as np
import pytest

from discord_dyn.cli import main
from discord_dyn.coeffs import CoefficientSet, coefficients_at
from discord_dyn.discord import quantum_discord
from discord_dyn.liouville import liouvillian, vec
from discord_dyn.presets import FAMILIES, SPECTRA, family_panels, preset_configs
from discord_dyn.propagator import (
    NegativityWarning,
    PREFACTOR_MODES,
    initial_state,
    propagate_numerical,
    solve_independent_analytic,
)
from discord_dyn.runner import time_to_half
from discord_dyn.spectral import HighT, SpectralParams, ZeroT, spectral_density

from acceptance_log import verdict
from oracles import brute_force_coefficients, frozen_step, random_local_unitary, random_state

# regression baseline: discord at omega_a t = 50 for the common, Ohmic,
# omega_c = 0.3, kT = 100 Bell-state run (first run of this code)
COMMON_PLATEAU_BASELINE = 0.33332137485764746


def _run(cfg):
    traj = propagate_numerical(cfg.rho0(), cfg.reservoir_kind, cfg.spectral_params, cfg.regime,
                               cfg.t_end, cfg.n_steps)
    return traj.with_discord(grid=cfg.discord_grid, measured=cfg.measured_qubit)


@pytest.fixture(scope="module")
def figure_runs():
    """All short-time series of the three figure families, keyed by
    ``(panel, spectrum)``, plus the total wall time."""
    runs = {}
    start = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NegativityWarning)
        for family in FAMILIES:
            for panel in family_panels(family):
                for label, cfg in preset_configs(panel.name).items():
                    runs[panel.name, label] = _run(cfg)
    return runs, time.perf_counter() - start


def test_criterion_01_trace_and_hermiticity(figure_runs):
    runs, seconds = figure_runs
    trace = max(t.trace_error.max() for t in runs.values())
    herm = max(t.hermiticity_defect.max() for t in runs.values())
    ok = trace < 1e-8 and herm < 1e-10 and seconds < 300
    verdict(1, ok, f"{len(runs)} runs, max |Tr-1| = {trace:.2e}, max Hermiticity defect = {herm:.2e}, "
                   f"{seconds:.0f} s")


def test_criterion_02_rk4_against_exponential():
    rng = np.random.default_rng(2024)
    h = 1e-4
    worst = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NegativityWarning)
        for case in range(50):
            kind = ("independent", "common")[case % 2]
            rho = random_state(rng)
            c = CoefficientSet(*rng.uniform(-1, 1, size=4))
            traj = propagate_numerical(rho, kind, None, None, 10 * h, 10, coefficients=lambda _t: c)
            exact = frozen_step(liouvillian(kind, c).matrix, 10 * h, vec(rho))
            worst = max(worst, np.abs(vec(traj.states[-1]) - exact).max())
    verdict(2, worst < 1e-12, f"50 cases, max entry deviation {worst:.2e}")


def test_criterion_03_coefficients():
    worst = 0.0
    for s, wc, regime, t in itertools.product((0.5, 1.0, 3.0), (0.3, 1.0, 10.0),
                                              (ZeroT(), HighT(100.0)), (0.1, 1.0, 10.0)):
        p = SpectralParams(0.01, wc, s)
        ref = np.array(brute_force_coefficients(t, p, regime))
        got = coefficients_at(t, p, regime).as_array()
        worst = max(worst, np.max(np.abs(got - ref) / np.abs(ref)))
    p = SpectralParams.ohmic(10.0)
    target = 0.5 * math.pi * spectral_density(1.0, p)
    markov = abs(coefficients_at(500.0, p, ZeroT()).kappa1 - target) / target
    verdict(3, worst < 1e-6 and markov < 0.02,
            f"max relative deviation from double integral {worst:.2e}; kappa1(500) off plateau by {markov:.1e} relative")


def test_criterion_04_discord_oracles():
    rng = np.random.default_rng(404)
    bell = abs(quantum_discord(initial_state("bell_psi_plus")).discord - 1.0)
    product = 0.0
    for _ in range(10):
        a, b = random_state(rng)[:2, :2], random_state(rng)[:2, :2]
        a, b = a / np.trace(a), b / np.trace(b)
        product = max(product, abs(quantum_discord(np.kron(a, b)).discord))
    classical = abs(quantum_discord(np.diag([0.5, 0, 0, 0.5]).astype(complex)).discord)
    unitary = 0.0
    for _ in range(5):
        rho = random_state(rng, rank=2)
        d0 = quantum_discord(rho).discord
        for _ in range(4):
            u = random_local_unitary(rng)
            unitary = max(unitary, abs(quantum_discord(u @ rho @ u.conj().T).discord - d0))
    ok = bell < 1e-4 and product < 1e-9 and classical < 1e-4 and unitary < 1e-4
    verdict(4, ok, f"Bell off by {bell:.1e}, product {product:.1e}, classical {classical:.1e}, "
                   f"local-unitary spread {unitary:.1e} (20 cases)")


def test_criterion_05_common_steady_state(figure_runs):
    runs, _ = figure_runs
    common, indep = runs["fig1f", "ohmic"], runs["fig1c", "ohmic"]
    window = common.times >= 40.0
    slope = abs(np.polyfit(common.times[window], common.discord[window], 1)[0])
    ratio_ok = common.discord[-1] > 10 * indep.discord[-1]
    baseline = abs(common.discord[-1] - COMMON_PLATEAU_BASELINE)
    ok = ratio_ok and slope < 1e-4 and baseline < 1e-8
    verdict(5, ok, f"common {common.discord[-1]:.6f} vs independent {indep.discord[-1]:.2e}, "
                   f"slope {slope:.1e}, baseline drift {baseline:.1e}")


def _half_times(runs, panel):
    return {label: time_to_half(runs[panel, label].times, runs[panel, label].discord) for label in SPECTRA}


def test_criterion_06_ohmic_slowest_at_high_t(figure_runs):
    runs, _ = figure_runs
    failures, margins = [], []
    for panel in family_panels("fig1"):
        th = _half_times(runs, panel.name)
        others = max(th["sub_ohmic"], th["super_ohmic"])
        margins.append(th["ohmic"] - others)
        if not th["ohmic"] > others:
            failures.append(panel.name)
    verdict(6, not failures, f"Ohmic half-time largest in {6 - len(failures)}/6 slices, "
                             f"smallest margin {min(margins):.2e}" + (f", fails {failures}" if failures else ""))


def test_criterion_07_zero_t_inversion(figure_runs):
    runs, _ = figure_runs
    ordering_fail, detail = [], []
    for panel in family_panels("fig2"):
        th = _half_times(runs, panel.name)
        if not th["super_ohmic"] < min(th["sub_ohmic"], th["ohmic"]):
            ordering_fail.append(panel.name)
            detail.append(f"{panel.name} half-times " + ", ".join(f"{k}={v:.3g}" for k, v in th.items()))
    steady_fail = []
    panels = family_panels("fig2")
    for indep, common in zip(panels[:3], panels[3:]):
        for label in SPECTRA:
            if runs[common.name, label].discord[-1] > 10 * runs[indep.name, label].discord[-1]:
                steady_fail.append(f"{common.name}/{label}")
    ok = not ordering_fail and not steady_fail
    verdict(7, ok, f"super-Ohmic fastest in {6 - len(ordering_fail)}/6 panels; no common steady state "
                   f"in {9 - len(steady_fail)}/9 pairs" + ("; " + "; ".join(detail) if detail else ""))


def _interior_max(d):
    k = int(np.argmax(d))
    return 0 < k < d.size - 1 and d[k] > d[0] and d[k] > d[-1]


def test_criterion_08_discord_generation(figure_runs):
    runs, _ = figure_runs
    generated = {label: float(runs["fig3a", label].discord.max()) for label in SPECTRA}
    starts_zero = all(runs["fig3a", label].discord[0] == 0.0 for label in SPECTRA)
    rise_fall, used_long = [], []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NegativityWarning)
        for panel in ("fig3d", "fig3e", "fig3f"):
            for label in SPECTRA:
                d = runs[panel, label].discord
                if not _interior_max(d):
                    # the turnover lies beyond the short window: use the long-time grid
                    d = _run(preset_configs(panel, long_time=True)[label]).discord
                    used_long.append(f"{panel}/{label}")
                rise_fall.append(_interior_max(d))
    ok = starts_zero and min(generated.values()) > 0.01 and all(rise_fall)
    verdict(8, ok, "fig3a peak discord " + ", ".join(f"{k}={v:.3f}" for k, v in generated.items())
                   + f"; |ee> interior maximum in {sum(rise_fall)}/9 series (long grid for {used_long})")


def test_criterion_09_analytic_cross_check():
    params, regime = SpectralParams.ohmic(10.0), ZeroT()
    rho0 = initial_state("eg")
    num = propagate_numerical(rho0, "independent", params, regime, 5.0, 1000)
    pops = lambda tr: np.einsum("nii->ni", tr.states).real
    bell = initial_state("bell_psi_plus")
    num_bell = propagate_numerical(bell, "independent", params, regime, 5.0, 1000)
    deviation, full = {}, {}
    for mode in PREFACTOR_MODES:
        ana = solve_independent_analytic(rho0, params, regime, num.times, prefactor=mode)
        deviation[mode] = float(np.abs(pops(num) - pops(ana)).max())
        ana_bell = solve_independent_analytic(bell, params, regime, num.times, prefactor=mode)
        full[mode] = float(np.abs(num_bell.states - ana_bell.states).max())
    # populations decide; coherences of the Bell run break ties
    best = min(PREFACTOR_MODES, key=lambda m: (round(deviation[m], 9), full[m]))

    # constancy of rho14 and rho23, probed with a state whose anti-diagonal is nonzero
    paths = {
        "numerical": num_bell,
        "analytic": solve_independent_analytic(bell, params, regime, num.times, prefactor=best),
    }
    drift = {}
    for name, tr in paths.items():
        drift[name] = max(np.abs(tr.element(i, j) - bell[i - 1, j - 1]).max() for i, j in ((1, 4), (2, 3)))
    ok = deviation[best] < 1e-3 and max(drift.values()) < 1e-10
    verdict(9, ok, f"best switch {best} (population deviation {deviation[best]:.1e}, "
                   f"full-state {full[best]:.1e}; "
                   + ", ".join(f"{k}={v:.1e}" for k, v in deviation.items())
                   + "); anti-diagonal drift " + ", ".join(f"{k}={v:.2e}" for k, v in drift.items()))


def test_criterion_10_determinism(tmp_path):
    codes = [main(["figures", "--family", "fig1", "--out", str(tmp_path / name)]) for name in ("a", "b")]
    files = sorted(p.name for p in (tmp_path / "a").glob("*.csv"))
    same = all((tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes() for f in files)
    ok = codes == [0, 0] and len(files) == 18 and same
    verdict(10, ok, f"{len(files)} CSVs per invocation, bit-identical: {same}")
