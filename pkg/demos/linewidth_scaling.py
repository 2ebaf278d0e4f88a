"""Linewidth of the collective emission: 1/N narrowing and its breakdown.

Deep in either superradiant phase the linewidth scales as Gamma ~ 1/N
(the collective dipole is stable over many transits); at the threshold
k_vz_tau = pi the phase-diffusion argument breaks down (C0 = 0) and the
scaling softens to a critical exponent around -0.3.

Desk-scale protocol (~2 minutes).  The analytic phase-diffusion value is
compared against the fitted simulation linewidth at k_vz_tau = pi/2.
"""

import math
from pathlib import Path

from srbeam import (SimParams, fit_damped_cosine, g1_normalized,
                    linewidth_phase_diffusion, run_ensemble, scaling_fit)
from srbeam.io import write_csv

HERE = Path(__file__).parent


def fitted_gamma(kvz, n_atoms, n_traj):
    params = SimParams(n_gamma_tau=30.0, k_vz_tau=kvz, n_atoms=n_atoms,
                       t_sim=100.0, n_traj=n_traj, master_seed=11)
    records = run_ensemble(params)
    lags, g1 = g1_normalized(records, 10.0)
    return fit_damped_cosine(g1, lags).gamma


def main():
    kvz = math.pi / 2
    budget = 2.4e4  # trajectories per unit atom; scale up for publication
    points = []
    for n in (50, 100, 200, 400):
        gamma = fitted_gamma(kvz, n, int(budget / n))
        points.append((n, gamma))
        print(f"  N = {n:4d}: Gamma tau = {gamma:.4f} "
              f"(N Gamma tau = {n * gamma:.1f})")

    res = scaling_fit(points)
    print(f"fitted exponent alpha = {res.alpha:.3f} (1/N law: -1)")

    analytic = linewidth_phase_diffusion(30.0, kvz)
    print(f"analytic phase-diffusion value: N Gamma tau = {analytic:.1f}")
    print("note: N Gamma tau approaches the analytic value from above as N")
    print("grows; the strong finite-size broadening at N <~ 200 (second-")
    print("order noise terms beyond the phase-diffusion picture) steepens")
    print("the fitted exponent below -1 for small-N ladders like this one.")

    write_csv(HERE / "linewidth_scaling.csv",
              {"n_atoms": res.n_values, "gamma_tau": res.gamma_values},
              provenance={"alpha": f"{res.alpha:.4f}",
                          "analytic_n_gamma_tau": f"{analytic:.3f}"})
    print("wrote", HERE / "linewidth_scaling.csv")


if __name__ == "__main__":
    main()
