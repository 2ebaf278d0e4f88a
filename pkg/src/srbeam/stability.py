"""Linear stability and fluctuation theory.

The rectangular mode profile collapses all Laplace-domain integrals onto a
finite transit-time support: the spatial overlap of the mode with itself
shifted by the flight during a lag t is

    O(t) = (1 - t) cos(k_vz_tau * t) / 2,   0 <= t <= 1,

and zero beyond one transit.  The dispersion relation of the
non-superradiant state is then D(nu) = 1 - (g/2) * Laplace[O](nu) with
g = n_gamma_tau.  All quadratures here are Gauss-Legendre on [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import optimize

from .meanfield import solve_j_parallel_ssr, tipping_angle_ssr

TWO_PI = 2.0 * math.pi
THRESHOLD_KVZ = math.pi


class RootNotFoundError(RuntimeError):
    def __init__(self, msg, diagnostic=None):
        super().__init__(msg)
        self.diagnostic = diagnostic


class ThresholdDivergenceError(RuntimeError):
    """Phase-diffusion quantities diverge at the bistability threshold."""


@dataclass
class DispersionEvaluation:
    nu: complex
    value: complex


@dataclass
class PhaseBoundaryPoint:
    k_vz_tau: float
    n_gamma_tau_critical: float
    re_nu0_residual: float = 0.0


@lru_cache(maxsize=8)
def _gauss01(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def overlap(t, k_vz_tau: float):
    """Mode self-overlap after a flight lag t (vanishes for t > 1)."""
    t = np.asarray(t, dtype=float)
    out = np.where((t >= 0) & (t <= 1.0),
                   0.5 * (1.0 - t) * np.cos(k_vz_tau * t), 0.0)
    return out if out.ndim else float(out)


def _laplace_overlap(nu, k_vz_tau, n_nodes=256):
    t, w = _gauss01(n_nodes)
    with np.errstate(over="ignore", invalid="ignore"):
        return np.sum(w * np.exp(-nu * t) * overlap(t, k_vz_tau))


def dispersion_D(nu: complex, n_gamma_tau: float, k_vz_tau: float) -> complex:
    """Dispersion relation of the non-superradiant state.

    The prefactor N Gamma_c / (4 w lambda) equals n_gamma_tau / 2 in
    internal units.
    """
    return 1.0 - 0.5 * n_gamma_tau * _laplace_overlap(nu, k_vz_tau)


def _dispersion_D_prime(nu, n_gamma_tau, k_vz_tau, n_nodes=256):
    t, w = _gauss01(n_nodes)
    with np.errstate(over="ignore", invalid="ignore"):
        return 0.5 * n_gamma_tau * np.sum(
            w * t * np.exp(-nu * t) * overlap(t, k_vz_tau))


def leading_root(n_gamma_tau: float, k_vz_tau: float,
                 re_box: tuple[float, float] = (-5.0, 5.0),
                 im_max: float | None = None) -> complex:
    """Root of D(nu) with the largest real part.

    Scans a grid of Newton starting points over the half-plane (the
    imaginary box covers the Doppler sidebands), polishes each, and keeps
    the converged root with maximal real part.  Conjugate partners are
    implied (Schwarz symmetry); the root with Im >= 0 is reported.
    """
    if im_max is None:
        im_max = 4.0 * math.pi + k_vz_tau
    res = np.linspace(re_box[0], re_box[1], 11)
    ims = np.linspace(0.0, im_max, 25)
    roots = []
    best_diag = (None, np.inf)
    for re0 in res:
        for im0 in ims:
            nu = complex(re0, im0)
            ok = False
            for _ in range(60):
                d = dispersion_D(nu, n_gamma_tau, k_vz_tau)
                if abs(d) < best_diag[1]:
                    best_diag = (nu, abs(d))
                dp = _dispersion_D_prime(nu, n_gamma_tau, k_vz_tau)
                if dp == 0 or not (np.isfinite(d.real) and np.isfinite(dp.real)):
                    break
                delta = d / dp
                nu = nu - delta
                if abs(nu) > 1e3:
                    break
                if abs(delta) < 1e-13:
                    ok = True
                    break
            if ok and abs(dispersion_D(nu, n_gamma_tau, k_vz_tau)) < 1e-9:
                roots.append(nu)
    if not roots:
        raise RootNotFoundError(
            f"no root of D found for ({n_gamma_tau}, {k_vz_tau})",
            diagnostic=best_diag)
    roots = [complex(r.real, abs(r.imag)) for r in roots]
    uniq = {}
    for r in roots:
        uniq[(round(r.real, 8), round(r.imag, 8))] = r
    roots = list(uniq.values())
    best = max(roots, key=lambda r: (r.real, abs(r.imag)))
    return best


def sr_boundary(k_vz_tau: float) -> float:
    """Critical collective linewidth where the quiet state loses stability.

    At threshold a root sits on the imaginary axis: g * L[O](i omega) = 1
    needs L[O](i omega) real and positive, so the critical coupling is the
    reciprocal of the largest such real value over the frequency axis.
    """
    im_max = 4.0 * math.pi + k_vz_tau

    def im_part(om):
        return _laplace_overlap(1j * om, k_vz_tau).imag

    omegas = np.linspace(0.0, im_max, 4097)
    vals = np.array([im_part(om) for om in omegas])
    candidates = [0.0]
    sign = np.sign(vals)
    for i in range(len(omegas) - 1):
        if sign[i] != 0 and sign[i + 1] != 0 and sign[i] != sign[i + 1]:
            om = optimize.brentq(im_part, omegas[i], omegas[i + 1],
                                 xtol=1e-13)
            candidates.append(om)
    best = -np.inf
    for om in candidates:
        re = _laplace_overlap(1j * om, k_vz_tau).real
        best = max(best, re)
    if best <= 0:
        raise RootNotFoundError(
            f"no destabilizing frequency at k_vz_tau={k_vz_tau}")
    return 2.0 / best


def trace_boundary(k_vz_grid) -> list[PhaseBoundaryPoint]:
    """Critical coupling along a grid of Doppler phases, with the real part
    of the leading dispersion root at criticality as a residual check."""
    points = []
    for k in np.asarray(k_vz_grid, dtype=float):
        g_c = sr_boundary(float(k))
        nu0 = leading_root(g_c, float(k))
        points.append(PhaseBoundaryPoint(float(k), g_c, float(nu0.real)))
    return points


# ---------------------------------------------------------------------------
# Goldstone mode of the regular superradiant phase

class GoldstoneDispersion:
    """Goldstone-mode dispersion of the regular phase, D_perp(nu).

    D_perp(nu) = nu * Laplace[Ibar](nu) with Ibar(t) the mode-weighted
    overlap of the flown mode with the stationary transverse dipole
    density, normalized by the stationary collective dipole.  The t
    support is again one transit.
    """

    def __init__(self, n_gamma_tau: float, k_vz_tau: float,
                 j_parallel: float | None = None,
                 n_t: int = 128, n_d: int = 96, n_z: int = 128):
        self.n_gamma_tau = float(n_gamma_tau)
        self.k_vz_tau = float(k_vz_tau)
        if j_parallel is None:
            j_parallel = solve_j_parallel_ssr(n_gamma_tau, k_vz_tau)
        if j_parallel <= 0:
            raise ValueError("Goldstone analysis needs a superradiant "
                             "stationary state (j_parallel > 0)")
        self.j_parallel = float(j_parallel)
        self._t_nodes, self._t_weights = _gauss01(n_t)
        self._ibar = np.array([self._overlap_with_dipole(t, n_d, n_z)
                               for t in self._t_nodes])

    def _overlap_with_dipole(self, t, n_d, n_z):
        """(1/J_par) * integral of eta(x+vt) sin(K(x)) N/(2 w lambda)."""
        if t >= 1.0:
            return 0.0
        v_z = self.k_vz_tau / TWO_PI
        d_nodes, d_weights = _gauss01(n_d)
        # entry distance d in [0, 1 - t]; x = d - 1/2
        d = d_nodes * (1.0 - t)
        wd = d_weights * (1.0 - t)
        z = (np.arange(n_z) + 0.5) / n_z
        K = tipping_angle_ssr(d[:, None] - 0.5, z[None, :],
                              self.j_parallel, self.n_gamma_tau,
                              self.k_vz_tau)
        eta_shift = np.cos(TWO_PI * (z[None, :] + v_z * t))
        inner = (eta_shift * np.sin(K)).mean(axis=1)
        # s_par = N sin(K) and J_par = y N, so Ibar = integral sinK / y
        return float(np.sum(wd * inner)) / self.j_parallel

    def laplace_ibar(self, nu: complex) -> complex:
        return complex(np.sum(self._t_weights * np.exp(-nu * self._t_nodes)
                              * self._ibar))

    def __call__(self, nu: complex) -> complex:
        return nu * self.laplace_ibar(nu)

    def c0_limit(self) -> float:
        """lim D_perp(nu)/nu for nu -> 0, by direct quadrature."""
        return float(np.sum(self._t_weights * self._ibar))

    def first_moment(self) -> float:
        """integral of t * Ibar(t); minus this is the second-order limit."""
        return float(np.sum(self._t_weights * self._t_nodes * self._ibar))


def dispersion_Dperp(nu: complex, n_gamma_tau: float, k_vz_tau: float,
                     j_parallel: float | None = None) -> complex:
    return GoldstoneDispersion(n_gamma_tau, k_vz_tau, j_parallel)(nu)


def compute_C0(n_gamma_tau: float, k_vz_tau: float,
               j_parallel: float | None = None) -> float:
    """First-order zero coefficient C0 = lim D_perp(nu)/nu, closed form.

    C0 * J_par carries a factor cos(k_vz_tau / 2), so it changes sign at
    the half-wavelength threshold; R is a BesselJ1 quadrature over the
    entry-to-exit fraction.
    """
    g = float(n_gamma_tau)
    kvz = float(k_vz_tau)
    if j_parallel is None:
        j_parallel = solve_j_parallel_ssr(g, kvz)
    y = float(j_parallel)
    if y <= 0:
        raise ValueError("C0 needs a superradiant stationary state")
    from scipy.special import j1

    u, w = _gauss01(128)
    if kvz > 1e-8:
        integrand = (np.sin(0.5 * kvz * (1.0 - u))
                     * j1(g * y * np.sin(0.5 * kvz * u) / kvz) / kvz)
        r_over_n = 2.0 * np.sum(w * integrand)
    else:
        integrand = 0.5 * (1.0 - u) * j1(0.5 * g * y * u)
        r_over_n = 2.0 * np.sum(w * integrand)
    c0_jpar = math.cos(0.5 * kvz) * r_over_n  # = C0 * J_par / N
    return c0_jpar / y


def compute_C1(n_gamma_tau: float, k_vz_tau: float,
               j_parallel: float | None = None,
               tol: float = 0.01) -> float:
    """Second-order zero coefficient C1 = lim D_perp(nu)/nu^2 at threshold.

    Only defined where C0 vanishes (k_vz_tau = pi); rejected elsewhere.
    Richardson-extrapolates D_perp(nu)/nu^2 over a decade ladder and
    warns if the extrapolants disagree.
    """
    c0 = compute_C0(n_gamma_tau, k_vz_tau, j_parallel)
    if abs(c0) > 1e-6:
        raise ThresholdDivergenceError(
            f"C1 undefined away from threshold (C0 = {c0:.3e})")
    gd = GoldstoneDispersion(n_gamma_tau, k_vz_tau, j_parallel)
    nus = np.array([1e-2, 1e-3, 1e-4])
    vals = np.array([(gd(nu) / nu**2).real for nu in nus])
    # D_perp/nu^2 = C1 + O(nu); eliminate the linear error term
    extrap = (nus[:-1] * vals[1:] - nus[1:] * vals[:-1]) / (nus[:-1] - nus[1:])
    c1 = float(extrap[-1])
    if abs(extrap[0] - extrap[1]) > tol * max(abs(c1), 1e-12):
        import warnings
        warnings.warn("C1 extrapolation ladder disagrees by more than "
                      f"{tol:.0%}: {extrap}", RuntimeWarning, stacklevel=2)
    return c1


def linewidth_phase_diffusion(n_gamma_tau: float, k_vz_tau: float) -> float:
    """Phase-diffusion linewidth of the regular phase, in units of 1/(N tau).

    Two white-noise intensities feed the phase random walk: the boundary
    projection noise of freshly injected dipoles, whose correlator
    collapses onto the mode self-overlap and integrates to
    (1 - cos k_vz_tau)/k_vz_tau^2 per atom, and the cavity vacuum noise,
    contributing 4/n_gamma_tau per atom.  Dividing by the squared
    Goldstone stiffness (C0 J_par)^2 gives a linewidth scaling exactly as
    1/N; the returned number is N * Gamma * tau.
    """
    g = float(n_gamma_tau)
    kvz = float(k_vz_tau)
    y = solve_j_parallel_ssr(g, kvz)
    if y <= 0:
        raise ValueError("linewidth needs a superradiant stationary state")
    if kvz > 1e-8:
        intensity_boundary = (1.0 - math.cos(kvz)) / kvz**2
    else:
        intensity_boundary = 0.5
    intensity_cavity = 4.0 / g
    c0_jpar = compute_C0(g, kvz, y) * y  # = C0 J_par / N
    if abs(c0_jpar) < 1e-10:
        raise ThresholdDivergenceError(
            "phase-diffusion linewidth diverges at the bistability threshold")
    return (intensity_boundary + intensity_cavity) / c0_jpar**2
