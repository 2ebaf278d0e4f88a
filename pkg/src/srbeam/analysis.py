"""Post-processing of trajectory ensembles.

Spectra from the two-time dipole correlation, damped-cosine fits of the
normalized first-order coherence (frequency and linewidth), per-trajectory
phase traces, mode-hop counting, and atom-number scaling fits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, stats

from .params import DipoleRecord, SimParams


class InsufficientSamplesError(ValueError):
    pass


class FitError(RuntimeError):
    def __init__(self, msg, best=None):
        super().__init__(msg)
        self.best = best


@dataclass
class SpectrumResult:
    omega_grid: np.ndarray
    s_values: np.ndarray
    t0: float
    T: float
    params: SimParams | None = None


@dataclass
class FitResult:
    omega: float
    gamma: float
    phi0: float
    residual_norm: float
    covariance: np.ndarray


@dataclass
class ScalingResult:
    alpha: float
    intercept: float
    stderr_alpha: float
    n_values: np.ndarray
    gamma_values: np.ndarray


def _stack(records: list[DipoleRecord]):
    times = records[0].times
    return times, np.stack([r.j_complex for r in records])


def _index_of(times, t):
    i = int(np.argmin(np.abs(times - t)))
    if abs(times[i] - t) > 0.5 * (times[1] - times[0]) + 1e-12:
        raise ValueError(f"time {t} not on the sample grid")
    return i


def two_time_correlation(records: list[DipoleRecord], t0: float):
    """C(t) = < J*(t0 + t) J(t0) > averaged over trajectories.

    Returns (lags, C) with lags starting at 0.
    """
    if len(records) < 2:
        raise InsufficientSamplesError("need at least 2 trajectories")
    times, j = _stack(records)
    i0 = _index_of(times, t0)
    c = (np.conj(j[:, i0:]) * j[:, i0][:, None]).mean(axis=0)
    return times[i0:] - times[i0], c


def spectrum(records: list[DipoleRecord], t0: float, T: float,
             pad_factor: int = 4, window: str = "rect",
             params: SimParams | None = None) -> SpectrumResult:
    """|integral of e^{i omega t} C(t) dt| on a zero-padded FFT grid.

    The plain rectangular window matches the bare finite-time integral;
    a Hann option exists for exploratory work.
    """
    lags, c = two_time_correlation(records, t0)
    dt = lags[1] - lags[0]
    n = int(round(T / dt)) + 1
    if n > lags.size:
        raise ValueError(f"T={T} exceeds the available record span")
    c = c[:n].copy()
    if window == "hann":
        c *= np.hanning(2 * n)[n:]
    elif window != "rect":
        raise ValueError(f"unknown window {window!r}")
    n_fft = pad_factor * n
    # sum C(t) e^{+i omega t}: inverse-transform convention
    s = np.fft.fftshift(np.fft.ifft(c, n_fft)) * n_fft * dt
    omega = np.fft.fftshift(np.fft.fftfreq(n_fft, dt)) * 2.0 * math.pi
    return SpectrumResult(omega_grid=omega, s_values=np.abs(s),
                          t0=t0, T=T, params=params)


def g1_normalized(records: list[DipoleRecord], t0: float):
    """Re C(t) / <|J(t0)|^2>; returns (lags, g1)."""
    times, j = _stack(records)
    i0 = _index_of(times, t0)
    denom = (np.abs(j[:, i0]) ** 2).mean()
    if denom < 1e-300:
        raise ZeroDivisionError("vanishing <|J(t0)|^2>")
    lags, c = two_time_correlation(records, t0)
    return lags, c.real / denom


def _damped_cosine(t, omega, gamma, phi0):
    return np.cos(omega * t + phi0) * np.exp(-0.5 * gamma * t)


def fit_damped_cosine(g1: np.ndarray, times: np.ndarray,
                      max_nfev: int = 20000) -> FitResult:
    """Nonlinear least squares of cos(omega t + phi0) exp(-Gamma t / 2).

    Initial frequency from the FFT peak of the input, initial decay from a
    log fit to the local-extrema envelope.  The fit window is truncated
    where the envelope reaches the estimator noise floor: past that point
    the record carries no signal and would otherwise dominate the residual
    when the decay is fast.
    """
    g1 = np.asarray(g1, dtype=float)
    times = np.asarray(times, dtype=float)
    if g1.size < 20:
        raise InsufficientSamplesError("need at least 20 samples to fit")
    dt = times[1] - times[0]
    # envelope from local maxima of |g1|; truncate where it has decayed to
    # the few-percent level, past which the record carries no signal and
    # would otherwise dominate the residual when the decay is fast
    mag = np.abs(g1)
    peaks = [i for i in range(1, g1.size - 1)
             if mag[i] >= mag[i - 1] and mag[i] >= mag[i + 1]
             and mag[i] > 1e-6]
    cut = g1.size
    for i in peaks:
        if mag[i] < 0.02:
            cut = i
            break
    cut = max(cut, 20)
    live = [i for i in peaks if i < cut]
    gamma0 = 0.1
    if len(live) >= 2:
        tp = times[live]
        lp = np.log(mag[live])
        slope = np.polyfit(tp, lp, 1)[0]
        gamma0 = max(-2.0 * slope, 1e-6)
    g1 = g1[:cut]
    times = times[:cut]
    # frequency guess from the transform peak of the retained window; also
    # try a zero-frequency start, since a fast-decaying record at omega=0
    # can trap the optimizer in a spurious finite-frequency minimum
    n_fft = 8 * g1.size
    amp = np.abs(np.fft.rfft(g1, n_fft))
    freqs = np.fft.rfftfreq(n_fft, dt) * 2.0 * math.pi
    omega0 = float(freqs[np.argmax(amp)])
    best = None
    last_err = None
    for om_init in dict.fromkeys((omega0, 0.0)):
        try:
            popt, pcov = optimize.curve_fit(
                _damped_cosine, times, g1, p0=[om_init, gamma0, 0.0],
                bounds=([-np.inf, 0.0, -np.pi], [np.inf, np.inf, np.pi]),
                maxfev=max_nfev)
        except RuntimeError as exc:
            last_err = exc
            continue
        ss = float(np.sum((g1 - _damped_cosine(times, *popt)) ** 2))
        if best is None or ss < best[0]:
            best = (ss, popt, pcov)
    if best is None:
        raise FitError(f"damped-cosine fit did not converge: {last_err}",
                       best=(omega0, gamma0, 0.0)) from None
    popt, pcov = best[1], best[2]
    resid = g1 - _damped_cosine(times, *popt)
    return FitResult(omega=float(popt[0]), gamma=float(popt[1]),
                     phi0=float(popt[2]),
                     residual_norm=float(np.linalg.norm(resid)),
                     covariance=pcov)


def phase_trace(records: list[DipoleRecord], t0: float,
                t1: float | None = None):
    """Unwrapped phase drift of each trajectory relative to time t0.

    With t1 = None (or t1 == t0) the single-reference protocol is used:
    Delta phi(t) = unwrapped arg of J*(t + t0) J(t0) per trajectory.
    Otherwise the correlation is additionally averaged over reference
    times in [t0, t1] before taking the argument.

    Returns (lags, traces) with traces of shape (n_traj, n_lags).
    """
    times, j = _stack(records)
    i0 = _index_of(times, t0)
    # sign convention: Delta phi tracks the phase of J itself, so a rigid
    # rotation J = e^{-i omega t} gives Delta phi = -omega t
    if t1 is None or t1 <= t0:
        corr = j[:, i0:] * np.conj(j[:, i0])[:, None]
        lags = times[i0:] - times[i0]
    else:
        i1 = _index_of(times, t1)
        if i1 <= i0:
            raise ValueError("t1 must exceed t0 by at least one sample")
        n_lag = j.shape[1] - i1
        refs = np.arange(i0, i1)
        corr = np.zeros((j.shape[0], n_lag), dtype=complex)
        for r in refs:
            corr += j[:, r:r + n_lag] * np.conj(j[:, r])[:, None]
        corr /= refs.size
        lags = times[:n_lag] - times[0]
    return lags, np.unwrap(np.angle(corr), axis=1)


def jump_probability(traces: np.ndarray, lags: np.ndarray,
                     t_max: float, m_bins: int) -> float:
    """Fraction of adjacent time bins whose mean frequencies change sign.

    Bin-averaged frequencies are finite differences of the phase trace
    over M equal bins of [0, t_max]; a jump is a negative product of
    consecutive bin frequencies; normalized by (M-1) * n_traj.
    """
    if m_bins < 2:
        raise ValueError("need at least 2 bins")
    edges = np.linspace(0.0, t_max, m_bins + 1)
    idx = np.array([_index_of(lags, e) for e in edges])
    phi = traces[:, idx]
    om = np.diff(phi, axis=1)  # proportional to the bin frequency
    flips = om[:, :-1] * om[:, 1:] < 0.0
    return float(flips.sum()) / ((m_bins - 1) * traces.shape[0])


def mean_square_phase(traces: np.ndarray):
    return (traces**2).mean(axis=0)


def superdiffusion_exponent(traces: np.ndarray, lags: np.ndarray,
                            t_lo: float = 2.0,
                            t_hi: float | None = None) -> float:
    """Power-law exponent of <Delta phi^2> over a window of the lag axis.

    The early transient (< t_lo) and the late, saturation-prone half are
    excluded by default.
    """
    if t_hi is None:
        t_hi = lags[-1] / 2.0
    msd = mean_square_phase(traces)
    sel = (lags >= t_lo) & (lags <= t_hi) & (msd > 0)
    if sel.sum() < 5:
        raise InsufficientSamplesError("fit window too small")
    beta, _ = np.polyfit(np.log(lags[sel]), np.log(msd[sel]), 1)
    return float(beta)


def scaling_fit(points) -> ScalingResult:
    """OLS of log(Gamma tau) against log(N): Gamma tau ~ N^alpha."""
    pts = sorted((int(n), float(g)) for n, g in points)
    if len(pts) < 3:
        raise InsufficientSamplesError("need at least 3 (N, gamma) points")
    n_vals = np.array([p[0] for p in pts], dtype=float)
    g_vals = np.array([p[1] for p in pts])
    if np.any(g_vals <= 0):
        raise ValueError("nonpositive linewidth in scaling input")
    if np.unique(n_vals).size != n_vals.size:
        raise ValueError("duplicate N in scaling input")
    res = stats.linregress(np.log(n_vals), np.log(g_vals))
    return ScalingResult(alpha=float(res.slope),
                         intercept=float(res.intercept),
                         stderr_alpha=float(res.stderr),
                         n_values=n_vals, gamma_values=g_vals)
