"""Deterministic large-N solutions: stationary dipole and emission frequency.

The stationary ansatz reduces the mean-field transport equations to ODEs
along straight atom paths.  Instead of integrating the (tipping angle,
phase) pair, which is singular at the entry plane, we integrate the
equivalent Bloch parameterization

    p = sin(K) exp(-i psi),   c = cos(K),

for which the characteristic equations are smooth:

    dp/dt = i omega p + G eta(t) c,      dc/dt = -G eta(t) Re(p),

with G = n_gamma_tau * j_norm * 2 ... (see _integrate_characteristics) and
eta(t) the mode function sampled along the path.  c^2 + |p|^2 = 1 is an
invariant.  Self-consistency closes the system: the mode-weighted average
of p over the strip must equal the (real) dipole amplitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy import optimize, special

TWO_PI = 2.0 * math.pi
THRESHOLD_KVZ = math.pi  # regular <-> frequency-bistable boundary


class MeanFieldConvergenceError(RuntimeError):
    def __init__(self, msg, residual=None):
        super().__init__(msg)
        self.residual = residual


class DegenerateRegionError(RuntimeError):
    """The collective dipole collapsed: parameters are not superradiant."""


@dataclass
class MeanFieldSolution:
    """Stationary solution at one parameter point.

    j_norm = |<J>|/N in [0, 1/2]; omega in units of 1/tau; K_field and
    psi_field are sampled on the (x_grid, z_grid) mesh, K_field[i, k] at
    x = x_grid[i], z = z_grid[k].
    """

    j_norm: float
    omega: float
    x_grid: np.ndarray
    z_grid: np.ndarray
    K_field: np.ndarray
    psi_field: np.ndarray
    residual: float
    n_gamma_tau: float
    k_vz_tau: float


def _sinc(u):
    """sin(u)/u, stable at 0."""
    return np.sinc(np.asarray(u) / np.pi)


def solve_j_parallel_ssr(n_gamma_tau: float, k_vz_tau: float) -> float:
    """Largest root y = J_par/N of the implicit stationary-dipole equation.

    The zero-frequency stationary state satisfies
        y = [1 - BesselJ0(u * sinc(k_vz_tau/2))] / u,   u = n_gamma_tau*y/2.
    Returns 0 when only the trivial root exists.
    """
    g = float(n_gamma_tau)
    s = float(_sinc(k_vz_tau / 2.0))

    def h(u):
        return 2.0 * u * u / g - 1.0 + special.j0(u * s)

    # u = g*y/2 with y <= 1/2, scan a bracket grid above the trivial root
    u_max = g / 4.0 + 1.0
    grid = np.linspace(1e-9, u_max, 2000)
    vals = h(grid)
    roots = []
    for i in range(len(grid) - 1):
        if vals[i] == 0.0:
            roots.append(grid[i])
        elif vals[i] * vals[i + 1] < 0.0:
            roots.append(optimize.brentq(h, grid[i], grid[i + 1], xtol=1e-14))
    if not roots:
        return 0.0
    u_star = max(roots)
    return 2.0 * u_star / g


def tipping_angle_ssr(x, z, j_parallel: float, n_gamma_tau: float,
                      k_vz_tau: float):
    """Closed-form tipping angle K(x, z) of the zero-frequency phase.

    ``j_parallel`` is J_par/N.  x is the strip coordinate in [-1/2, 1/2]
    (distance since entry is x + 1/2), z the wrapped transverse position.
    Continuous in the k_vz_tau -> 0 limit.
    """
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    d = x + 0.5  # distance traveled since entry, = time since entry
    theta = k_vz_tau
    # sin(theta d/2)/theta -> d/2 as theta -> 0
    osc = 0.5 * d * _sinc(0.5 * theta * d)
    out = n_gamma_tau * j_parallel * osc * np.cos(TWO_PI * z - 0.5 * theta * d)
    return out if out.ndim else float(out)


@njit(cache=True)
def _char_rk4(G, omega, v_z, n_entry, n_steps):
    """RK4 of the Bloch characteristics for every entry phase at once."""
    dt = 1.0 / n_steps
    p_hist = np.empty((n_steps + 1, n_entry), np.complex128)
    c_hist = np.empty((n_steps + 1, n_entry))
    iw = 1j * omega
    for m in range(n_entry):
        z0 = (m + 0.5) / n_entry
        p = 0.0 + 0.0j
        c = 1.0
        p_hist[0, m] = p
        c_hist[0, m] = c
        for k in range(n_steps):
            t = k * dt
            e0 = math.cos(TWO_PI * (z0 + v_z * t))
            e1 = math.cos(TWO_PI * (z0 + v_z * (t + 0.5 * dt)))
            e2 = math.cos(TWO_PI * (z0 + v_z * (t + dt)))
            k1p = iw * p + G * e0 * c
            k1c = -G * e0 * p.real
            p2 = p + 0.5 * dt * k1p
            c2 = c + 0.5 * dt * k1c
            k2p = iw * p2 + G * e1 * c2
            k2c = -G * e1 * p2.real
            p3 = p + 0.5 * dt * k2p
            c3 = c + 0.5 * dt * k2c
            k3p = iw * p3 + G * e1 * c3
            k3c = -G * e1 * p3.real
            p4 = p + dt * k3p
            c4 = c + dt * k3c
            k4p = iw * p4 + G * e2 * c4
            k4c = -G * e2 * p4.real
            p = p + dt / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
            c = c + dt / 6.0 * (k1c + 2.0 * k2c + 2.0 * k3c + k4c)
            p_hist[k + 1, m] = p
            c_hist[k + 1, m] = c
    return p_hist, c_hist


def _integrate_characteristics(j_norm, omega, n_gamma_tau, k_vz_tau,
                               n_entry=256, n_steps=1024):
    """Integrate all characteristics; return the self-consistency integral.

    Returns (closure, p_hist, c_hist, t_grid, z0) where closure is the
    complex integral (1/2) <eta p> over the strip, which must equal
    j_norm + 0i at a solution.  The drive G is Gamma_c |<J>| tau, which in
    dimensionless form is n_gamma_tau * j_norm.
    """
    G = n_gamma_tau * j_norm
    v_z = k_vz_tau / TWO_PI
    p_hist, c_hist = _char_rk4(G, omega, v_z, n_entry, n_steps)
    z0 = (np.arange(n_entry) + 0.5) / n_entry
    t_grid = np.linspace(0.0, 1.0, n_steps + 1)
    eta_hist = np.cos(TWO_PI * (z0[None, :] + v_z * t_grid[:, None]))
    # trapezoid in transit time, uniform (spectrally accurate) mean over z0
    integrand = (eta_hist * p_hist).mean(axis=1)
    closure = 0.5 * np.trapezoid(integrand, t_grid)
    return closure, p_hist, c_hist, t_grid, z0


def _closure_residual(x, n_gamma_tau, k_vz_tau, n_entry, n_steps):
    j_norm, omega = x
    closure, *_ = _integrate_characteristics(
        j_norm, omega, n_gamma_tau, k_vz_tau, n_entry, n_steps)
    return np.array([closure.real - j_norm, closure.imag])


def _fields_from_characteristics(p_hist, c_hist, t_grid, z0, k_vz_tau):
    """Map characteristic data onto an (x, z) mesh via the entry phase."""
    v_z = k_vz_tau / TWO_PI
    x_grid = t_grid - 0.5
    n_entry = z0.size
    z_grid = z0.copy()
    K = np.empty((t_grid.size, n_entry))
    psi = np.empty_like(K)
    for i, t in enumerate(t_grid):
        # the characteristic that is at (x_i, z_k) entered at z0 = z_k - v_z t
        entry = (z_grid - v_z * t) % 1.0
        idx = np.round(entry * n_entry - 0.5).astype(int) % n_entry
        frac = entry * n_entry - 0.5 - np.round(entry * n_entry - 0.5)
        nxt = (idx + 1) % n_entry
        p = p_hist[i, idx] * (1 - frac) + p_hist[i, nxt] * frac
        c = c_hist[i, idx] * (1 - frac) + c_hist[i, nxt] * frac
        K[i] = np.arctan2(np.abs(p), c)
        psi[i] = -np.angle(p)
    return x_grid, z_grid, K, psi


def solve_bistable(n_gamma_tau: float, k_vz_tau: float,
                   n_entry: int = 256, n_steps: int = 2048,
                   tol: float = 1e-10,
                   warm_start: tuple[float, float] | None = None,
                   ) -> MeanFieldSolution:
    """Stationary (|<J>|/N, omega) at one superradiant parameter point.

    Below the half-wavelength threshold the frequency is zero and the
    amplitude coincides with the zero-frequency implicit-equation root.
    Above it, the omega > 0 branch is returned (the omega < 0 branch is
    its mirror image with identical amplitude); without a warm start a
    short continuation walks up from the threshold.
    """
    g, kvz = float(n_gamma_tau), float(k_vz_tau)

    if kvz < 0.0:
        # mirror symmetry z -> -z: same amplitude, opposite frequency
        mirror = solve_bistable(g, -kvz, n_entry, n_steps, tol, warm_start)
        return MeanFieldSolution(mirror.j_norm, -mirror.omega,
                                 mirror.x_grid, mirror.z_grid,
                                 mirror.K_field, mirror.psi_field,
                                 mirror.residual, g, kvz)

    if kvz <= THRESHOLD_KVZ and warm_start is None:
        y = solve_j_parallel_ssr(g, kvz)
        if y <= 1e-8:
            raise DegenerateRegionError(
                f"no superradiant solution at ({g}, {kvz})")
        j0 = y / 2.0

        def f(j):
            closure, *_ = _integrate_characteristics(j, 0.0, g, kvz,
                                                     n_entry, n_steps)
            return closure.real - j

        j_sol = optimize.brentq(f, 0.25 * j0, min(2.5 * j0, 0.5), xtol=1e-13)
        closure, p_h, c_h, t_g, z0 = _integrate_characteristics(
            j_sol, 0.0, g, kvz, n_entry, n_steps)
        xg, zg, K, psi = _fields_from_characteristics(p_h, c_h, t_g, z0, kvz)
        return MeanFieldSolution(j_sol, 0.0, xg, zg, K, psi,
                                 abs(closure.real - j_sol), g, kvz)

    if warm_start is None:
        warm_start = _bracket_branch(g, kvz)

    x0 = np.array(warm_start)
    sol = optimize.root(_closure_residual, x0,
                        args=(g, kvz, n_entry, n_steps),
                        method="hybr", tol=1e-12)
    res = float(np.linalg.norm(_closure_residual(sol.x, g, kvz,
                                                 n_entry, n_steps)))
    j_sol, omega = float(sol.x[0]), float(sol.x[1])
    if not sol.success or res > 1e-7:
        raise MeanFieldConvergenceError(
            f"no convergence at ({g}, {kvz}): residual {res:.2e}", res)
    if j_sol < 1e-6:
        raise DegenerateRegionError(f"dipole collapsed at ({g}, {kvz})")
    omega = abs(omega)
    closure, p_h, c_h, t_g, z0 = _integrate_characteristics(
        j_sol, omega, g, kvz, n_entry, n_steps)
    xg, zg, K, psi = _fields_from_characteristics(p_h, c_h, t_g, z0, kvz)
    return MeanFieldSolution(j_sol, omega, xg, zg, K, psi, res, g, kvz)


def _amplitude_root(omega, g, kvz, n_entry, n_steps):
    """Largest amplitude solving the real part of the closure at fixed omega."""
    def f(j):
        closure, *_ = _integrate_characteristics(j, omega, g, kvz,
                                                 n_entry, n_steps)
        return closure.real - j

    grid = np.linspace(0.5, 0.01, 25)
    vals = [f(j) for j in grid]
    for i in range(len(grid) - 1):
        if vals[i] < 0.0 <= vals[i + 1]:
            return optimize.brentq(f, grid[i + 1], grid[i], xtol=1e-12)
    return None


def _bracket_branch(g, kvz, n_entry=128, n_steps=768):
    """Locate the omega > 0 branch by nested 1D bracketing.

    For each trial frequency, solve the amplitude from the real part of
    the closure, then look for a sign change of the imaginary part along
    the frequency axis.  The largest-frequency crossing is the physical
    branch (the zero-frequency crossing always exists but is the unstable
    continuation of the regular phase).
    """
    def im_residual(omega):
        j = _amplitude_root(omega, g, kvz, n_entry, n_steps)
        if j is None:
            return None, None
        closure, *_ = _integrate_characteristics(j, omega, g, kvz,
                                                 n_entry, n_steps)
        return closure.imag, j

    omegas = np.linspace(0.05, 1.25 * kvz, 48)
    prev = None
    brackets = []
    for om in omegas:
        val, j = im_residual(om)
        if val is None:
            prev = None
            continue
        if prev is not None and prev[1] * val < 0.0:
            brackets.append((prev[0], om))
        prev = (om, val)
    if not brackets:
        raise MeanFieldConvergenceError(
            f"no nonzero-frequency branch found at ({g}, {kvz})")
    lo, hi = brackets[-1]
    om_star = optimize.brentq(lambda om: im_residual(om)[0], lo, hi,
                              xtol=1e-10)
    j_star = _amplitude_root(om_star, g, kvz, n_entry, n_steps)
    return (j_star, om_star)


def frequency_branch_diagram(n_gamma_tau: float, k_vz_grid,
                             n_entry: int = 256, n_steps: int = 2048):
    """Sweep the stationary solution over k_vz_tau with warm starts.

    Returns a list of dicts (k_vz_tau, omega, j_norm, residual, converged);
    beyond the threshold both +-omega branches appear as separate rows.
    Non-converged points are recorded and the sweep continues.
    """
    rows = []
    guess = None
    for kvz in np.asarray(k_vz_grid, dtype=float):
        try:
            if kvz <= THRESHOLD_KVZ:
                sol = solve_bistable(n_gamma_tau, kvz, n_entry, n_steps)
                guess = None
            else:
                if guess is not None:
                    sol = solve_bistable(n_gamma_tau, kvz, n_entry, n_steps,
                                         warm_start=guess)
                else:
                    sol = solve_bistable(n_gamma_tau, kvz, n_entry, n_steps)
                guess = (sol.j_norm, max(sol.omega, 1e-3))
        except (MeanFieldConvergenceError, DegenerateRegionError) as exc:
            rows.append(dict(k_vz_tau=float(kvz), omega=math.nan,
                             j_norm=math.nan, residual=math.nan,
                             converged=False, error=str(exc)))
            continue
        rows.append(dict(k_vz_tau=float(kvz), omega=sol.omega,
                         j_norm=sol.j_norm, residual=sol.residual,
                         converged=True))
        if sol.omega > 0:
            rows.append(dict(k_vz_tau=float(kvz), omega=-sol.omega,
                             j_norm=sol.j_norm, residual=sol.residual,
                             converged=True))
    return rows
