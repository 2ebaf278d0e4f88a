import math

import numpy as np
import pytest
from scipy import integrate

from srbeam.stability import (
    GoldstoneDispersion,
    ThresholdDivergenceError,
    compute_C0,
    compute_C1,
    dispersion_D,
    dispersion_Dperp,
    leading_root,
    linewidth_phase_diffusion,
    overlap,
    sr_boundary,
    trace_boundary,
)

G = 30.0


# ---------------------------------------------------------------------------
# dispersion relation D(nu)

def test_dispersion_zero_tilt_closed_form():
    # D(0) = 1 - g/8 at zero tilt
    for g in (4.0, 8.0, 30.0):
        assert dispersion_D(0.0, g, 0.0) == pytest.approx(1.0 - g / 8.0,
                                                          abs=1e-10)


def test_dispersion_quadrature_oracle():
    # independent adaptive quadrature of 1 - (g/2) * L[O](nu)
    g, kvz, nu = 17.0, 2.2, 0.8 + 1.3j

    def integrand_re(t):
        return (overlap(t, kvz) * np.exp(-nu * t)).real

    def integrand_im(t):
        return (overlap(t, kvz) * np.exp(-nu * t)).imag

    re, _ = integrate.quad(integrand_re, 0.0, 1.0, epsabs=1e-13)
    im, _ = integrate.quad(integrand_im, 0.0, 1.0, epsabs=1e-13)
    ref = 1.0 - 0.5 * g * complex(re, im)
    assert dispersion_D(nu, g, kvz) == pytest.approx(ref, abs=1e-10)


def test_dispersion_large_nu_limit():
    # approach to 1 is O(1/nu): residual ~ (g/2) * O(0) / nu
    for nu in (200.0, 400.0):
        assert dispersion_D(nu, G, 2.0) == pytest.approx(
            1.0 - 0.5 * G * overlap(0.0, 2.0) / nu, abs=2e-3)


def test_dispersion_schwarz_symmetry():
    for nu in (0.5 + 2.0j, -0.3 + 5.0j, 1.0 + 0.1j):
        a = dispersion_D(np.conj(nu), G, 2.5)
        b = np.conj(dispersion_D(nu, G, 2.5))
        assert a == pytest.approx(b, abs=1e-12)


# ---------------------------------------------------------------------------
# leading root and phase boundary

def test_leading_root_sign_below_threshold():
    assert leading_root(4.0, 0.0).real < 0.0


def test_leading_root_sign_above_threshold():
    assert leading_root(30.0, 0.0).real > 0.0


def test_leading_root_vanishes_on_boundary():
    for kvz in (0.0, 2.0, math.pi):
        g_c = sr_boundary(kvz)
        assert abs(leading_root(g_c, kvz).real) < 1e-6


def test_boundary_zero_tilt():
    assert sr_boundary(0.0) == pytest.approx(8.0, abs=1e-4)


def test_boundary_tricritical():
    assert sr_boundary(math.pi) == pytest.approx(2.0 * math.pi**2, rel=5e-3)


def test_boundary_mirror_symmetry():
    assert sr_boundary(2.0) == pytest.approx(sr_boundary(-2.0), rel=1e-12)


def test_trace_boundary_residuals():
    pts = trace_boundary([0.5, 1.5, 3.0])
    for p in pts:
        assert p.n_gamma_tau_critical > 0
        assert abs(p.re_nu0_residual) < 1e-6


# ---------------------------------------------------------------------------
# Goldstone mode

def test_dperp_vanishes_at_zero():
    assert abs(dispersion_Dperp(1e-12, G, 2.0)) < 1e-10


def test_dperp_large_nu_limit():
    # D_perp -> Ibar(0) ~ 1... the explicit nu factor against the Laplace
    # transform gives Ibar(0+) in the large-nu limit
    gd = GoldstoneDispersion(G, 2.0)
    val = gd(400.0).real
    assert val == pytest.approx(gd._ibar[0], rel=0.2)


def test_c0_two_routes_agree():
    for kvz in (1.0, 2.0, 2.8):
        closed = compute_C0(G, kvz)
        gd = GoldstoneDispersion(G, kvz)
        limit = (gd(1e-6) / 1e-6).real
        assert closed == pytest.approx(limit, rel=1e-6)


def test_c0_sign_change_at_threshold():
    assert compute_C0(G, 3.0) > 0.0
    assert compute_C0(G, 3.3) < 0.0
    assert abs(compute_C0(G, math.pi)) < 1e-8


def test_c1_finite_at_threshold():
    c1 = compute_C1(G, math.pi)
    assert np.isfinite(c1) and c1 != 0.0


def test_c1_matches_moment_oracle():
    # second Taylor coefficient of the Laplace numerator: -integral t*Ibar
    gd = GoldstoneDispersion(G, math.pi)
    assert compute_C1(G, math.pi) == pytest.approx(-gd.first_moment(),
                                                   rel=1e-3)


def test_c1_rejected_off_threshold():
    with pytest.raises(ThresholdDivergenceError):
        compute_C1(G, 2.0)


# ---------------------------------------------------------------------------
# linewidth

def test_linewidth_diverges_toward_threshold():
    mid = linewidth_phase_diffusion(G, 0.5 * math.pi)
    near = linewidth_phase_diffusion(G, 0.95 * math.pi)
    assert near >= 5.0 * mid


def test_linewidth_threshold_divergence_error():
    with pytest.raises(ThresholdDivergenceError):
        linewidth_phase_diffusion(G, math.pi)


def test_linewidth_positive_and_finite():
    for kvz in (0.5, 1.5, 2.5):
        val = linewidth_phase_diffusion(G, kvz)
        assert np.isfinite(val) and val > 0.0
