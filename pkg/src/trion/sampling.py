"""Microcanonical initial conditions inside the symmetry subspaces.

Trajectory i of an ensemble draws from its own generator seeded with
(seed, i), so samples are reproducible and independent of how consumers
parallelize.  The carrier phase phi is drawn first; the energy shell is then
built for the instantaneous Hamiltonian at t0 with that phase.

C3v protocol: initial conditions lie on the energy shell H = E restricted to
the hypersurface Z = 0, where the potential reduces to -(9 - sqrt(3))/R and
the field term vanishes.  R is sampled over the classically allowed interval
and the momentum direction uniformly on the circle, with |p| fixed by the
kinetic energy 6*(E - V).  With two momentum degrees of freedom the exact
microcanonical shell weight (E - V)^((d_p-2)/2) is constant, so the product
and shell measures coincide here.

C2v protocol: the energy shell alone leaves the subspace open (one electron
far out can compensate), so configurations are additionally confined to
electron-nucleus distances not exceeding the smallest electron distance of
the planar saddle at peak field.  Configurations are drawn uniformly in that
region (product measure) or with the exact shell weight sqrt(E - V) behind
``measure="shell"``; the weight is unbounded near collisions, so it is
clipped at twice the maximum found in a deterministic pre-scan (the affected
configuration-space fraction is far below 1e-4).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, SamplingError
from .fields import FieldParams, envelope
from .hamiltonians import C2vState, C3vState, c2v_potential
from .saddles import saddle_c2v

_C3V_COULOMB = 9.0 - math.sqrt(3.0)   # -(9 - sqrt3)/R is the potential at Z = 0
_MAX_TRIES = 1_000_000                # per-trajectory rejection budget
_SEED_MIX = 0x9E3779B97F4A7C15        # distinct stream for auxiliary draws


@dataclass(frozen=True)
class EnsembleConfig:
    """Everything that defines a trajectory ensemble (physical units)."""

    subspace: str            # "c3v" | "c2v"
    E: float                 # compound-state energy, a.u.
    t0_frac: float           # start time as a fraction of T_d
    field: FieldParams
    n_traj: int
    seed: int
    measure: str = "product"  # "product" | "shell"

    def __post_init__(self):
        if self.subspace not in ("c3v", "c2v"):
            raise DomainError(f"unknown subspace {self.subspace!r}")
        if self.E >= 0:
            raise DomainError(f"compound state must be bound, got E={self.E}")
        if not 0.0 < self.t0_frac < 1.0:
            raise DomainError(f"t0_frac must lie strictly inside (0, 1), got {self.t0_frac}")
        if self.n_traj < 1:
            raise DomainError(f"n_traj must be >= 1, got {self.n_traj}")
        if self.measure not in ("product", "shell"):
            raise DomainError(f"unknown measure {self.measure!r}")

    @property
    def t0(self) -> float:
        return self.t0_frac * self.field.T_d

    def replace(self, **kw):
        from dataclasses import replace as _replace
        return _replace(self, **kw)


@dataclass(frozen=True)
class InitialCondition:
    state: object
    phi: float


def _rng_for(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, index])


def c3v_allowed_radius(E: float, F: float) -> float:
    """Upper end of the classically allowed R interval at Z = 0.

    For bound E the root of V(R, 0) = E; for E >= 0 the interval is unbounded
    and is capped at the saddle radius at peak field (the compound state is
    confined near the core).
    """
    if E < 0:
        return _C3V_COULOMB / (-E)
    if F <= 0:
        raise DomainError("unbound energy needs a positive field for the radius cap")
    return (math.sqrt(6.0) / F) ** 0.5


def c2v_distance_cap(F: float) -> float:
    """Smallest electron-nucleus distance of the planar saddle at peak field."""
    if F <= 0:
        raise DomainError("distance cap needs a positive peak field")
    info = saddle_c2v(1.0)
    return float(np.min(info.electron_distances())) / math.sqrt(F)


def _draw_c3v(rng, E, r_max, t0):
    phi = rng.uniform(0.0, 2.0 * math.pi)
    R = rng.uniform(0.0, r_max)
    while R <= 0.0:
        R = rng.uniform(0.0, r_max)
    V = -_C3V_COULOMB / R
    kin = E - V
    if kin < 0.0:        # only possible through rounding at the interval edge
        kin = 0.0
    p = math.sqrt(6.0 * kin)
    chi = rng.uniform(0.0, 2.0 * math.pi)
    return np.array([R, 0.0, p * math.cos(chi), p * math.sin(chi)]), phi


def _c2v_field_at_t0(field: FieldParams, t0, phi):
    probe = FieldParams(F=field.F, omega=field.omega, T_d=field.T_d, phi=phi,
                        envelope_kind=field.envelope_kind)
    return field.F * envelope(probe, t0)


def _draw_c2v_config(rng, E, d_max, f_t0):
    """One uniform draw of (x, z, z1) in the capped region; None if outside."""
    x = rng.uniform(-d_max, d_max)
    z = rng.uniform(-d_max, d_max)
    z1 = rng.uniform(0.0, d_max)
    if x == 0.0 or z1 == 0.0:
        return None
    if math.hypot(x, z) > d_max:
        return None
    V = c2v_potential(x, z, z1, f_t0)
    kin = E - V
    if kin < 0.0:
        return None
    return x, z, z1, kin


def _shell_weight_cap(config: EnsembleConfig, d_max: float) -> float:
    """Deterministic clip level for the sqrt(E - V) shell weight."""
    rng = _rng_for(config.seed ^ _SEED_MIX, 0)
    w_max = 0.0
    for _ in range(4096):
        phi = rng.uniform(0.0, 2.0 * math.pi)
        f_t0 = _c2v_field_at_t0(config.field, config.t0, phi)
        drawn = _draw_c2v_config(rng, config.E, d_max, f_t0)
        if drawn is not None:
            w = math.sqrt(drawn[3])
            if w > w_max:
                w_max = w
    if w_max == 0.0:
        raise SamplingError("constrained energy shell appears to be empty")
    return 2.0 * w_max


def _draw_c2v(rng, config, d_max, w_cap, t0):
    phi = rng.uniform(0.0, 2.0 * math.pi)
    f_t0 = _c2v_field_at_t0(config.field, t0, phi)
    for _ in range(_MAX_TRIES):
        drawn = _draw_c2v_config(rng, config.E, d_max, f_t0)
        if drawn is None:
            continue
        x, z, z1, kin = drawn
        if w_cap is not None:
            w = math.sqrt(kin)
            if w < w_cap and rng.uniform(0.0, 1.0) >= w / w_cap:
                continue
        u = rng.normal(size=3)
        u /= np.linalg.norm(u)
        s = math.sqrt(2.0 * kin)
        p_x = s * math.sqrt(2.0) * u[0]
        p_z = s * math.sqrt(2.0) * u[1]
        p_z1 = s * u[2]
        return np.array([x, z, z1, p_x, p_z, p_z1]), phi
    raise SamplingError(
        f"acceptance rate below {1.0 / _MAX_TRIES:.0e} while sampling the C2v shell")


def sample_arrays(config: EnsembleConfig):
    """Initial conditions as arrays: (states (n, dim), phis (n,), t0).

    This is the array core used by the ensemble runner; :func:`sample_c3v`
    and :func:`sample_c2v` wrap it in state objects.
    """
    t0 = config.t0
    n = config.n_traj
    if config.subspace == "c3v":
        r_max = c3v_allowed_radius(config.E, config.field.F)
        y = np.empty((n, 4))
        phis = np.empty(n)
        for i in range(n):
            y[i], phis[i] = _draw_c3v(_rng_for(config.seed, i), config.E, r_max, t0)
        return y, phis, t0
    d_max = c2v_distance_cap(config.field.F)
    w_cap = _shell_weight_cap(config, d_max) if config.measure == "shell" else None
    y = np.empty((n, 6))
    phis = np.empty(n)
    for i in range(n):
        y[i], phis[i] = _draw_c2v(_rng_for(config.seed, i), config, d_max, w_cap, t0)
    return y, phis, t0


def sample_c3v(config: EnsembleConfig):
    """Microcanonical C3v initial conditions at t0, one per trajectory index."""
    if config.subspace != "c3v":
        raise DomainError("config.subspace must be 'c3v'")
    y, phis, t0 = sample_arrays(config)
    return [InitialCondition(C3vState(R=r[0], Z=r[1], p_R=r[2], p_Z=r[3], t=t0), phi)
            for r, phi in zip(y, phis)]


def sample_c2v(config: EnsembleConfig):
    """Microcanonical, distance-capped C2v initial conditions at t0."""
    if config.subspace != "c2v":
        raise DomainError("config.subspace must be 'c2v'")
    y, phis, t0 = sample_arrays(config)
    return [InitialCondition(
        C2vState(x=r[0], z=r[1], z1=r[2], p_x=r[3], p_z=r[4], p_z1=r[5], t=t0), phi)
        for r, phi in zip(y, phis)]
