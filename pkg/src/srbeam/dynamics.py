"""Stochastic trajectory engine for the semiclassical spin equations.

All resident atoms share a single pair of cavity-noise increments per step,
and each Bloch vector is advanced by an exact rotation, which conserves the
spin length to machine precision.  The rotation angle uses the collective
dipole evaluated at the step midpoint (cheap predictor), which keeps the
scheme second-order weak in dt without extra noise draws.  The noise enters
inside the rotation (Stratonovich reading).

Atoms leaving the strip at x = +w are recycled: replaced by a freshly
injected atom with x shifted back by the strip width, so the resident
number is exactly N and every transit lasts exactly tau.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from numba import njit

from .params import (
    AtomState,
    DipoleRecord,
    InternalUnits,
    SimParams,
    nondimensionalize,
    rng_stream,
    trajectory_seed,
)

TWO_PI = 2.0 * math.pi
W = 0.5  # strip half-width in internal units


class IntegratorBlowupError(RuntimeError):
    """Non-finite state encountered during integration."""

    def __init__(self, atom_index: int, time: float):
        super().__init__(f"non-finite state for atom {atom_index} at t={time:.4f}")
        self.atom_index = atom_index
        self.time = time


class EnsembleError(RuntimeError):
    """One or more trajectories of an ensemble failed."""

    def __init__(self, failures: dict):
        super().__init__(
            "trajectories failed: "
            + ", ".join(f"{i}: {e}" for i, e in sorted(failures.items()))
        )
        self.failures = failures


@dataclass
class EnsembleState:
    """Positions and Bloch vectors of all resident atoms at one instant."""

    x: np.ndarray
    z: np.ndarray
    s_x: np.ndarray
    s_y: np.ndarray
    s_z: np.ndarray
    time: float = 0.0

    def copy(self) -> "EnsembleState":
        return EnsembleState(
            self.x.copy(), self.z.copy(),
            self.s_x.copy(), self.s_y.copy(), self.s_z.copy(), self.time,
        )


def mode_function(x, z):
    """Cavity mode: cos(2 pi z) inside the strip -w <= x < w, zero outside.

    Half-open on the right so an atom exactly at the exit plane is counted
    once.
    """
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    inside = (x >= -W) & (x < W)
    out = np.where(inside, np.cos(TWO_PI * z), 0.0)
    return out if out.ndim else float(out)


def inject_atom(rng: np.random.Generator) -> AtomState:
    """Fresh pre-excited atom at the entry plane.

    s_z = 1 and the transverse components are independent coin flips +-1,
    which realizes maximal transverse uncertainty for an atom entering in
    the excited state; the Bloch length is sqrt(3) exactly.
    """
    z = rng.random()
    s_x = 1.0 if rng.integers(0, 2) else -1.0
    s_y = 1.0 if rng.integers(0, 2) else -1.0
    return AtomState(x=-W, z=z, s_x=s_x, s_y=s_y, s_z=1.0)


def collective_dipole(state: EnsembleState) -> tuple[float, float]:
    """Mode-weighted sums (J_x, J_y) over resident atoms."""
    eta = mode_function(state.x, state.z)
    return float(eta @ state.s_x), float(eta @ state.s_y)


@njit(cache=True)
def _eta_and_dipole(x, z, s_x, s_y, s_z, strip_check, eta):
    """Fill eta per atom; return (J_x, J_y, sum eta^2 s_z)."""
    jx = 0.0
    jy = 0.0
    q = 0.0
    for i in range(x.size):
        e = math.cos(TWO_PI * z[i])
        if strip_check and (x[i] < -W or x[i] >= W):
            e = 0.0
        eta[i] = e
        jx += e * s_x[i]
        jy += e * s_y[i]
        q += e * e * s_z[i]
    return jx, jy, q


@njit(cache=True)
def _rotate_and_advance(x, z, s_x, s_y, s_z, eta, bx, by, v_z, dt):
    """Exact Bloch rotation by eta_j * (-by, bx, 0), then free flight.

    (bx, by) already contain both the mean-field drift increment and the
    shared noise increment.
    """
    for i in range(x.size):
        wx = -eta[i] * by
        wy = eta[i] * bx
        th = math.sqrt(wx * wx + wy * wy)
        if th > 0.0:
            nx = wx / th
            ny = wy / th
            c = math.cos(th)
            s = math.sin(th)
            d = nx * s_x[i] + ny * s_y[i]
            omc = 1.0 - c
            sx_new = s_x[i] * c + ny * s_z[i] * s + nx * d * omc
            sy_new = s_y[i] * c - nx * s_z[i] * s + ny * d * omc
            sz_new = s_z[i] * c + (nx * s_y[i] - ny * s_x[i]) * s
            s_x[i] = sx_new
            s_y[i] = sy_new
            s_z[i] = sz_new
        x[i] += dt
        z[i] = (z[i] + v_z * dt) % 1.0


@njit(cache=True)
def _step_kernel(x, z, s_x, s_y, s_z, eta, gamma_c, v_z, dt,
                 dw_x, dw_y, strip_check):
    """One timestep; returns the pre-step dipole (J_x, J_y)."""
    jx, jy, q = _eta_and_dipole(x, z, s_x, s_y, s_z, strip_check, eta)
    ax = 0.5 * gamma_c * jx * dt + dw_x
    ay = 0.5 * gamma_c * jy * dt + dw_y
    # predictor: to first order the dipole increment is a_x * sum eta^2 s_z
    jx_mid = jx + 0.5 * ax * q
    jy_mid = jy + 0.5 * ay * q
    bx = 0.5 * gamma_c * jx_mid * dt + dw_x
    by = 0.5 * gamma_c * jy_mid * dt + dw_y
    _rotate_and_advance(x, z, s_x, s_y, s_z, eta, bx, by, v_z, dt)
    return jx, jy


@njit(cache=True)
def _recycle(x, z, s_x, s_y, s_z, pool_z, pool_sx, pool_sy, ptr):
    """Replace every atom past the exit plane with a fresh injected one."""
    for i in range(x.size):
        if x[i] >= W:
            if ptr >= pool_z.size:
                return -1
            x[i] -= 2.0 * W
            z[i] = pool_z[ptr]
            s_x[i] = pool_sx[ptr]
            s_y[i] = pool_sy[ptr]
            s_z[i] = 1.0
            ptr += 1
    return ptr


@njit(cache=True)
def _run_kernel(x, z, s_x, s_y, s_z, gamma_c, v_z, dt, n_steps,
                dw, pool_z, pool_sx, pool_sy, stride, out_jx, out_jy,
                recycle):
    """Integrate n_steps, recording the dipole every `stride` steps.

    Returns (status, step): status 0 on success, -1 on pool exhaustion,
    -2 on non-finite state at the given step.
    """
    eta = np.empty(x.size)
    ptr = 0
    k = 0
    for step in range(n_steps):
        jx, jy = _step_kernel(x, z, s_x, s_y, s_z, eta, gamma_c, v_z, dt,
                              dw[step, 0], dw[step, 1], not recycle)
        if step % stride == 0:
            out_jx[k] = jx
            out_jy[k] = jy
            k += 1
            if not (math.isfinite(jx) and math.isfinite(jy)):
                return -2, step
        if recycle:
            ptr = _recycle(x, z, s_x, s_y, s_z, pool_z, pool_sx, pool_sy, ptr)
            if ptr < 0:
                return -1, step
    if n_steps % stride == 0 and k < out_jx.size:
        jx, jy, _ = _eta_and_dipole(x, z, s_x, s_y, s_z, not recycle, eta)
        out_jx[k] = jx
        out_jy[k] = jy
    return 0, n_steps


def step(state: EnsembleState, dt: float, rng: np.random.Generator,
         units: InternalUnits, recycle: bool = True,
         drift_only: bool = False) -> EnsembleState:
    """Advance an ensemble by one timestep (functional: returns a new state).

    Draws one shared Gaussian noise pair Normal(0, Gamma_c dt) unless
    drift_only, rotates every Bloch vector exactly, advances positions,
    and (optionally) recycles exiting atoms.
    """
    new = state.copy()
    if drift_only:
        dw_x = dw_y = 0.0
    else:
        dw_x, dw_y = rng.normal(0.0, math.sqrt(units.gamma_c * dt), 2)
    eta = np.empty(new.x.size)
    _step_kernel(new.x, new.z, new.s_x, new.s_y, new.s_z, eta,
                 units.gamma_c, units.v_z, dt, dw_x, dw_y, not recycle)
    if recycle:
        exiting = int(np.count_nonzero(new.x >= W))
        if exiting:
            pool_z = rng.random(exiting)
            pool_sx = rng.integers(0, 2, exiting) * 2.0 - 1.0
            pool_sy = rng.integers(0, 2, exiting) * 2.0 - 1.0
            _recycle(new.x, new.z, new.s_x, new.s_y, new.s_z,
                     pool_z, pool_sx, pool_sy, 0)
    new.time = state.time + dt
    bad = ~(np.isfinite(new.s_x) & np.isfinite(new.s_y) & np.isfinite(new.s_z))
    if bad.any():
        raise IntegratorBlowupError(int(np.argmax(bad)), new.time)
    return new


def initial_fill(params: SimParams, rng: np.random.Generator) -> EnsembleState:
    """Uniform fill of the strip with freshly injected internal states.

    The artificial uniform-x transient is discarded downstream via t0.
    """
    n = params.n_atoms
    return EnsembleState(
        x=rng.random(n) - W,
        z=rng.random(n),
        s_x=rng.integers(0, 2, n) * 2.0 - 1.0,
        s_y=rng.integers(0, 2, n) * 2.0 - 1.0,
        s_z=np.ones(n),
    )


def run_trajectory(params: SimParams, trajectory_index: int) -> DipoleRecord:
    """Integrate one full trajectory and record J(t) = (J_x - i J_y)/2."""
    params.validate()
    units = nondimensionalize(params)
    rng = rng_stream(params.master_seed, trajectory_index)

    state = initial_fill(params, rng)
    n_steps = int(round(params.t_sim / params.dt))
    dw = rng.normal(0.0, math.sqrt(units.gamma_c * params.dt), (n_steps, 2))

    # flux is exactly N per transit time; generous margin on the pool
    pool_n = params.n_atoms * (int(params.t_sim) + 3)
    pool_z = rng.random(pool_n)
    pool_sx = rng.integers(0, 2, pool_n) * 2.0 - 1.0
    pool_sy = rng.integers(0, 2, pool_n) * 2.0 - 1.0

    stride = params.sample_stride
    n_rec = n_steps // stride + 1
    out_jx = np.empty(n_rec)
    out_jy = np.empty(n_rec)

    status, at_step = _run_kernel(
        state.x, state.z, state.s_x, state.s_y, state.s_z,
        units.gamma_c, units.v_z, params.dt, n_steps,
        dw, pool_z, pool_sx, pool_sy, stride, out_jx, out_jy, True,
    )
    if status == -1:
        raise RuntimeError("injection pool exhausted (internal sizing bug)")
    if status == -2:
        bad = ~(np.isfinite(state.s_x) & np.isfinite(state.s_y)
                & np.isfinite(state.s_z))
        idx = int(np.argmax(bad)) if bad.any() else -1
        raise IntegratorBlowupError(idx, at_step * params.dt)

    times = np.arange(n_rec) * stride * params.dt
    return DipoleRecord(
        times=times,
        j_complex=0.5 * (out_jx - 1j * out_jy),
        trajectory_seed=trajectory_seed(params.master_seed, trajectory_index),
    )


def _worker(args) -> DipoleRecord:
    params_dict, index = args
    return run_trajectory(SimParams(**params_dict), index)


def run_ensemble(params: SimParams, workers: int = 1) -> list[DipoleRecord]:
    """Run n_traj independent trajectories (indices 0..n_traj-1).

    Each trajectory is a pure function of (params, index), so the result is
    bit-identical for any worker count.
    """
    params.validate()
    indices = range(params.n_traj)
    if workers <= 1:
        records = []
        failures = {}
        for i in indices:
            try:
                records.append(run_trajectory(params, i))
            except Exception as exc:  # noqa: BLE001 - aggregate with indices
                failures[i] = exc
        if failures:
            raise EnsembleError(failures)
        return records
    jobs = [(params.asdict(), i) for i in indices]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_worker, jobs, chunksize=1))
