"""Acceptance gate: one test per criterion, each printing a pass/fail line.

Ensembles are memoized so criteria sharing a protocol reuse the same runs.
Full module runtime is tens of minutes on a single desk-scale machine; the
linewidth-scaling criterion uses the documented 4x-reduced trajectory
budget.
"""

import math

import numpy as np
import pytest

from srbeam import (
    SimParams,
    compute_C0,
    fit_damped_cosine,
    g1_normalized,
    jump_probability,
    linewidth_phase_diffusion,
    phase_trace,
    run_ensemble,
    scaling_fit,
    solve_bistable,
    spectrum,
    sr_boundary,
    superdiffusion_exponent,
    two_time_correlation,
)
from srbeam.dynamics import collective_dipole, initial_fill, step
from srbeam.params import nondimensionalize, rng_stream
from srbeam.stability import dispersion_D

G = 30.0
_CACHE = {}


def _ensemble(k_vz_tau, n_atoms, n_traj, t_sim=100.0, seed=2024, dt=0.005):
    key = (round(k_vz_tau, 12), n_atoms, n_traj, t_sim, seed, dt)
    if key not in _CACHE:
        params = SimParams(n_gamma_tau=G, k_vz_tau=k_vz_tau, n_atoms=n_atoms,
                           t_sim=t_sim, n_traj=n_traj, master_seed=seed,
                           dt=dt)
        _CACHE[key] = (params, run_ensemble(params))
    return _CACHE[key]


def _report(criterion, ok, detail):
    print(f"\n[criterion {criterion}] {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, f"criterion {criterion}: {detail}"


def _fitted_linewidth(params, records, t0=10.0):
    lags, g1 = g1_normalized(records, t0)
    fit = fit_damped_cosine(g1, lags)
    return fit


def test_criterion_01_ssr_bistable_threshold():
    c0_pi = compute_C0(G, math.pi)
    c0_below = compute_C0(G, 0.98 * math.pi)
    c0_above = compute_C0(G, 1.02 * math.pi)

    fits = {}
    for kvz in (0.9 * math.pi, 1.1 * math.pi):
        params, records = _ensemble(kvz, 200, 100, seed=301)
        fits[kvz] = abs(_fitted_linewidth(params, records).omega)
    # context for the N=200 result: the same discriminator at N=800
    params, records = _ensemble(0.9 * math.pi, 800, 150, seed=301)
    fit_800 = abs(_fitted_linewidth(params, records).omega)
    ok = (abs(c0_pi) < 1e-8 and c0_below > 0 > c0_above
          and fits[0.9 * math.pi] < 0.3 and fits[1.1 * math.pi] > 1.0)
    _report(1, ok,
            f"C0(pi)={c0_pi:.2e}, sign change {c0_below:.3f}/{c0_above:.3f}; "
            f"fitted |omega| = {fits[0.9 * math.pi]:.3f} at 0.9pi, "
            f"{fits[1.1 * math.pi]:.3f} at 1.1pi "
            f"(0.9pi at N=800: {fit_800:.3f})")


def test_criterion_02_tricritical_point():
    val = sr_boundary(math.pi)
    target = 2.0 * math.pi**2
    ok = abs(val - target) / target < 0.005
    _report(2, ok, f"sr_boundary(pi) = {val:.4f} vs 2 pi^2 = {target:.4f}")


def test_criterion_03_zero_tilt_threshold_and_max():
    v0 = sr_boundary(0.0)
    grid = np.linspace(0.0, 4 * math.pi, 81)
    gmax = max(sr_boundary(k) for k in grid)
    ok = abs(v0 - 8.0) < 1e-4 and 19.7 < gmax < 20.5
    _report(3, ok, f"sr_boundary(0) = {v0:.6f}; "
                   f"max over [0, 4 pi] = {gmax:.3f}")


def test_criterion_04_bistable_spectrum():
    params, records = _ensemble(2 * math.pi * 0.8, 800, 200, t_sim=500.0,
                                seed=404)
    res = spectrum(records, 10.0, 200.0, params=params)
    om, s = res.omega_grid, res.s_values
    peak_pos = om[om > 1.0][np.argmax(s[om > 1.0])]
    peak_neg = om[om < -1.0][np.argmax(s[om < -1.0])]

    # classify trajectories by the sign of their phase drift
    lags, traces = phase_trace(records, 10.0)
    slopes = traces[:, -1] / lags[-1]
    # J ~ e^{-i omega t} has phase slope -omega and a spectral peak at
    # -omega, so slope and peak frequency share a sign
    pos = [r for r, sl in zip(records, slopes) if sl > 0]
    neg = [r for r, sl in zip(records, slopes) if sl < 0]
    frac = len(pos) / len(records)

    def peak_ratio(sub):
        r = spectrum(sub, 10.0, 200.0)
        hi_pos = r.s_values[r.omega_grid > 1.0].max()
        hi_neg = r.s_values[r.omega_grid < -1.0].max()
        return hi_pos / hi_neg

    ratio_pos = peak_ratio(pos)
    ratio_neg = peak_ratio(neg)
    ok = (abs(peak_pos - 4.46) < 0.25 and abs(peak_neg + 4.46) < 0.25
          and ratio_pos > 2.0 and 1.0 / ratio_neg > 2.0
          and 0.4 <= frac <= 0.6)
    _report(4, ok,
            f"peaks at {peak_pos:+.3f}/{peak_neg:+.3f} (target +-4.46+-0.25); "
            f"sub-ensemble peak ratios {ratio_pos:.1f}/{1/ratio_neg:.1f}; "
            f"branch split {frac:.2f}")


def test_criterion_05_meanfield_vs_simulation_intensity():
    results = {}
    for kvz, n_traj in ((2 * math.pi * 0.3, 100), (2 * math.pi * 1.2, 100)):
        params, records = _ensemble(kvz, 800, n_traj, seed=505)
        j2 = np.mean([np.mean(np.abs(r.j_complex[r.times >= 10.0]) ** 2)
                      for r in records]) / 800**2
        mf = solve_bistable(G, kvz).j_norm ** 2
        results[kvz] = (mf, j2, abs(j2 - mf) / mf)
    ok = all(rel < 0.10 for _, _, rel in results.values())
    detail = "; ".join(
        f"kvz={k:.3f}: mf {mf:.4f} vs sim {j2:.4f} ({rel:.1%})"
        for k, (mf, j2, rel) in results.items())
    _report(5, ok, detail)


N_SCALING = (50, 100, 200, 400, 800)
SCALING_BUDGET = 1.2e5  # documented 4x reduction of the full protocol


def _scaling_alpha(kvz):
    points = []
    for n in N_SCALING:
        n_traj = int(round(SCALING_BUDGET / n))
        params, records = _ensemble(kvz, n, n_traj, seed=606)
        fit = _fitted_linewidth(params, records)
        points.append((n, fit.gamma))
    return scaling_fit(points).alpha, points


def test_criterion_06_linewidth_scaling():
    alphas, gammas = {}, {}
    for kvz in (math.pi / 2, 1.5 * math.pi, math.pi):
        alphas[kvz], gammas[kvz] = _scaling_alpha(kvz)
    ok = (abs(alphas[math.pi / 2] + 1.0) < 0.15
          and abs(alphas[1.5 * math.pi] + 1.0) < 0.15
          and abs(alphas[math.pi] + 0.30) < 0.15)
    per_n = ", ".join(f"{n}:{g * n:.0f}" for n, g in gammas[math.pi / 2])
    _report(6, ok,
            f"alpha(pi/2) = {alphas[math.pi / 2]:.3f}, "
            f"alpha(3pi/2) = {alphas[1.5 * math.pi]:.3f} (target -1.0); "
            f"alpha(pi) = {alphas[math.pi]:.3f} (target -0.30); "
            f"N*Gamma*tau at pi/2 by N: {per_n}")


def test_criterion_07_phase_diffusion_linewidth():
    analytic = linewidth_phase_diffusion(G, math.pi / 2)  # N Gamma tau
    n_traj = int(round(SCALING_BUDGET / 800))
    params, records = _ensemble(math.pi / 2, 800, n_traj, seed=606)
    fitted = _fitted_linewidth(params, records).gamma * 800
    rel = abs(fitted - analytic) / analytic
    ratio = (linewidth_phase_diffusion(G, 0.95 * math.pi)
             / linewidth_phase_diffusion(G, 0.5 * math.pi))
    ok = rel < 0.30 and ratio >= 5.0
    _report(7, ok,
            f"N Gamma tau: analytic {analytic:.1f} vs fitted {fitted:.1f} "
            f"({rel:.1%}); divergence ratio 0.95pi/0.5pi = {ratio:.1f}")


def test_criterion_08_jump_statistics():
    pjs = {}
    for kvz in (2 * math.pi * 0.3, 2 * math.pi * 0.8):
        params, records = _ensemble(kvz, 800, 400, seed=808)
        lags, traces = phase_trace(records, 10.0)
        pjs[kvz] = jump_probability(traces, lags, 90.0, 20)
    ok = (abs(pjs[2 * math.pi * 0.3] - 0.5) < 0.1
          and pjs[2 * math.pi * 0.8] < 0.1)
    _report(8, ok,
            f"P_jump = {pjs[2 * math.pi * 0.3]:.3f} at 2pi*0.3 "
            f"(target 0.5 +- 0.1), {pjs[2 * math.pi * 0.8]:.4f} at 2pi*0.8 "
            f"(target < 0.1)")


def test_criterion_09_superdiffusion():
    # the t^3/N law is asymptotic in N with a reference time before the
    # phase-velocity spread saturates; N = 51200 with t0 = 0.5 tau exposes
    # the window (smaller N shows only the ballistic crossover)
    params, records = _ensemble(math.pi, 51200, 32, t_sim=12.0, seed=77)
    lags, traces = phase_trace(records, 0.5)
    beta_thresh = superdiffusion_exponent(traces, lags)

    n_traj = int(round(SCALING_BUDGET / 800))
    params2, records2 = _ensemble(math.pi / 2, 800, n_traj, seed=606)
    lags2, traces2 = phase_trace(records2, 10.0)
    beta_ssr = superdiffusion_exponent(traces2, lags2, t_hi=20.0)
    ok = abs(beta_thresh - 3.0) < 0.5 and abs(beta_ssr - 1.0) < 0.3
    _report(9, ok,
            f"beta = {beta_thresh:.2f} at threshold (target 3 +- 0.5), "
            f"{beta_ssr:.2f} in the regular phase (target 1 +- 0.3)")


def test_criterion_10_invariant_suite():
    checks = {}

    # Bloch length over 1e5 steps
    from srbeam.dynamics import _step_kernel
    rng = np.random.default_rng(3)
    n = 8
    x = np.zeros(n)
    z = rng.random(n)
    sx = rng.integers(0, 2, n) * 2.0 - 1.0
    sy = rng.integers(0, 2, n) * 2.0 - 1.0
    sz = np.ones(n)
    eta = np.empty(n)
    gamma_c, dt = G / n, 0.005
    dw = rng.normal(0.0, math.sqrt(gamma_c * dt), (10**5, 2))
    for k in range(10**5):
        _step_kernel(x, z, sx, sy, sz, eta, gamma_c, 0.3, dt,
                     dw[k, 0], dw[k, 1], False)
    checks["bloch"] = float(np.abs(sx**2 + sy**2 + sz**2 - 3.0).max()) < 1e-8

    # determinism under worker count
    p = SimParams(G, 2.0, 16, t_sim=4.0, t0=1.0, n_traj=2)
    serial = run_ensemble(p, workers=1)
    parallel = run_ensemble(p, workers=2)
    checks["workers"] = all(
        np.array_equal(a.j_complex, b.j_complex)
        for a, b in zip(serial, parallel))

    # excitation bookkeeping, drift only
    p2 = SimParams(G, 2.0, 64, t_sim=4.0, t0=1.0)
    units = nondimensionalize(p2)
    state = initial_fill(p2, rng_stream(13, 0))
    jx, jy = collective_dipole(state)
    new = step(state, p2.dt, rng_stream(13, 1), units,
               recycle=False, drift_only=True)
    diff = (new.s_z.sum() - state.s_z.sum()
            + 0.5 * units.gamma_c * (jx**2 + jy**2) * p2.dt)
    checks["excitation"] = abs(diff) < 50.0 * p2.dt**2

    # dispersion Schwarz symmetry
    nu = 0.4 + 2.2j
    checks["schwarz"] = abs(dispersion_D(np.conj(nu), G, 2.5)
                            - np.conj(dispersion_D(nu, G, 2.5))) < 1e-12

    # g1(0) = 1 and Parseval on a small simulated ensemble
    params, records = _ensemble(2 * math.pi * 0.3, 100, 8, t_sim=25.0,
                                seed=1010)
    lags, g1 = g1_normalized(records, 10.0)
    checks["g1"] = abs(g1[0] - 1.0) < 1e-12

    _, c = two_time_correlation(records, 10.0)
    T = 10.0
    dtl = lags[1] - lags[0]
    nT = int(round(T / dtl)) + 1
    res = spectrum(records, 10.0, T, pad_factor=4)
    d_omega = res.omega_grid[1] - res.omega_grid[0]
    lhs = np.sum(res.s_values**2) * d_omega / (2 * math.pi)
    rhs = np.sum(np.abs(c[:nT]) ** 2) * dtl
    checks["parseval"] = abs(lhs - rhs) < 1e-9 * rhs

    ok = all(checks.values())
    _report(10, ok, ", ".join(f"{k}={'ok' if v else 'FAIL'}"
                              for k, v in checks.items()))
