"""Dimensionless control parameters, shared domain types, and RNG streams.

Everything downstream works in internal units where the transit time,
the optical wavelength, and the longitudinal velocity are all unity:
tau = 1, lambda = 1, w = 1/2, v_x = 1.  The physics then depends only on
the two dimensionless groups ``n_gamma_tau`` (collective linewidth times
transit time) and ``k_vz_tau`` (Doppler phase accumulated per transit),
plus the atom number N.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

TWO_PI = 2.0 * math.pi


class ParameterError(ValueError):
    """A SimParams invariant is violated; the message names it."""


@dataclass(frozen=True)
class SimParams:
    """All control parameters of a trajectory-ensemble run.

    Attributes
    ----------
    n_gamma_tau : float
        Collective linewidth times transit time (N Gamma_c tau).
    k_vz_tau : float
        Doppler phase per transit (k_c v_z tau).
    n_atoms : int
        Mean intracavity atom number N (kept exactly constant by recycling).
    dt : float
        Integration step in units of tau.
    t_sim : float
        Total simulated time in units of tau.
    t0 : float
        Transient to discard downstream, units of tau.
    n_traj : int
        Number of independent trajectories.
    sample_stride : int
        Record the collective dipole every this many steps.
    master_seed : int
        64-bit master seed; (master_seed, trajectory index) fully determines
        every trajectory.
    """

    n_gamma_tau: float
    k_vz_tau: float
    n_atoms: int
    dt: float = 0.005
    t_sim: float = 100.0
    t0: float = 10.0
    n_traj: int = 1
    sample_stride: int = 10
    master_seed: int = 2024

    def validate(self) -> "SimParams":
        if not self.n_gamma_tau > 0:
            raise ParameterError(f"n_gamma_tau > 0 violated: {self.n_gamma_tau}")
        if self.k_vz_tau < 0:
            raise ParameterError(f"k_vz_tau >= 0 violated: {self.k_vz_tau}")
        if self.n_atoms < 1:
            raise ParameterError(f"n_atoms >= 1 violated: {self.n_atoms}")
        if not (0 < self.dt <= 0.02):
            raise ParameterError(f"0 < dt <= 0.02 violated: {self.dt}")
        if self.dt * self.n_gamma_tau > 0.5:
            raise ParameterError(
                f"dt * n_gamma_tau <= 0.5 stability guard violated: "
                f"{self.dt * self.n_gamma_tau}"
            )
        if not self.t0 < self.t_sim:
            raise ParameterError(f"t0 < t_sim violated: t0={self.t0}, t_sim={self.t_sim}")
        if self.n_traj < 1:
            raise ParameterError(f"n_traj >= 1 violated: {self.n_traj}")
        if self.sample_stride < 1:
            raise ParameterError(f"sample_stride >= 1 violated: {self.sample_stride}")
        return self

    def asdict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class InternalUnits:
    """Internal constants implied by a SimParams (tau = lambda = v_x = 1)."""

    tau: float = 1.0
    lam: float = 1.0
    w: float = 0.5
    v_x: float = 1.0
    k_c: float = TWO_PI
    v_z: float = 0.0
    gamma_c: float = 0.0


def nondimensionalize(params: SimParams) -> InternalUnits:
    """Map SimParams onto the internal unit system.

    tau = 1, lambda = 1 (so k_c = 2 pi), w = 1/2, v_x = 1; hence
    v_z = k_vz_tau / (2 pi) and Gamma_c = n_gamma_tau / n_atoms.
    """
    params.validate()
    return InternalUnits(
        v_z=params.k_vz_tau / TWO_PI,
        gamma_c=params.n_gamma_tau / params.n_atoms,
    )


@dataclass
class AtomState:
    """One atom: position (x, z) and classical Bloch vector.

    x is in units of the cavity half-width strip coordinate (so resident
    atoms have -1/2 <= x < 1/2 in internal units), z in units of the
    wavelength wrapped to [0, 1).
    """

    x: float
    z: float
    s_x: float
    s_y: float
    s_z: float

    def bloch_length_sq(self) -> float:
        return self.s_x**2 + self.s_y**2 + self.s_z**2


@dataclass
class DipoleRecord:
    """Per-trajectory time series of the complex collective dipole.

    j_complex[k] = (J_x - i J_y)/2 sampled at times[k].
    """

    times: np.ndarray
    j_complex: np.ndarray
    trajectory_seed: int


def rng_stream(master_seed: int, trajectory_index: int) -> np.random.Generator:
    """Deterministic, statistically independent stream per trajectory.

    Built from a spawned SeedSequence, so streams for different indices are
    independent and the same (seed, index) pair always reproduces the
    bit-identical stream regardless of how many workers are in flight.
    """
    ss = np.random.SeedSequence(master_seed, spawn_key=(trajectory_index,))
    return np.random.Generator(np.random.PCG64(ss))


def trajectory_seed(master_seed: int, trajectory_index: int) -> int:
    """64-bit tag identifying the stream of one trajectory (for provenance)."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(trajectory_index,))
    state = ss.generate_state(2, dtype=np.uint32)
    return int(state[0]) << 32 | int(state[1])


# ---------------------------------------------------------------------------
# flat key=value config files

_INT_FIELDS = {"n_atoms", "n_traj", "sample_stride", "master_seed"}


def load_config(path) -> dict:
    """Parse a flat key = value config file with SimParams field names."""
    values = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"malformed config line: {raw!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in SimParams.__dataclass_fields__:
            raise ParameterError(f"unknown config key: {key!r}")
        values[key] = int(val) if key in _INT_FIELDS else float(val)
    return values


def params_from_config(path=None, **overrides) -> SimParams:
    """Build SimParams from an optional config file plus keyword overrides."""
    values = load_config(path) if path is not None else {}
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        params = SimParams(**values)
    except TypeError as exc:
        raise ParameterError(str(exc)) from None
    return params.validate()
