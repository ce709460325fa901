"""Potentials, Hamiltonians and equations of motion.

Three systems share this module:

* the full three-electron system (Cartesian positions/momenta, unit masses),
* the C3v subspace: three electrons at the corners of an equilateral triangle
  perpendicular to the field axis, coordinates (R, Z) with kinetic term
  (p_R^2 + p_Z^2)/6, i.e. effective masses (3, 3),
* the C2v subspace: one electron on the field axis at z1, a symmetric pair at
  (+-x, z), kinetic term (p_x^2 + p_z^2)/4 + p_z1^2/2, masses (2, 2, 1).

All formulas are in scaled or physical atomic units; the field enters every
potential only through the instantaneous value ``field_value`` = F*f(t).

The electron-pair repulsion of the triangular configuration,
3/(2 R sin(pi/3)), is simplified analytically to sqrt(3)/R throughout.

Scalar kernels are numba-compiled because the trajectory integrator calls
them millions of times; the Python wrappers add the domain checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import DomainError
from .fields import FieldParams, envelope

SQRT3 = math.sqrt(3.0)

#: diagonal mass matrices of the reduced kinetic terms; the stability module
#: consumes these same arrays for its mass-weighted Hessians
MASS_C3V = np.array([3.0, 3.0])
MASS_C2V = np.array([2.0, 2.0, 1.0])

#: azimuthal angles of the three electrons in the embedded C3v configuration
C3V_ANGLES = 2.0 * math.pi * np.arange(1, 4) / 3.0


# ---------------------------------------------------------------------------
# state types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class C3vState:
    """Phase-space point of the triangular subspace: cylindrical radius R,
    height Z and conjugate momenta, plus simulation time."""

    R: float
    Z: float
    p_R: float
    p_Z: float
    t: float = 0.0

    def __post_init__(self):
        if self.R <= 0:
            raise DomainError(f"C3v state requires R > 0, got R={self.R}")

    @property
    def coords(self):
        return np.array([self.R, self.Z])

    @property
    def momenta(self):
        return np.array([self.p_R, self.p_Z])

    @classmethod
    def with_parts(cls, coords, momenta, t):
        return cls(R=float(coords[0]), Z=float(coords[1]),
                   p_R=float(momenta[0]), p_Z=float(momenta[1]), t=float(t))

    def as_array(self):
        """(R, Z, p_R, p_Z) layout used by the integrator kernels."""
        return np.array([self.R, self.Z, self.p_R, self.p_Z])


@dataclass(frozen=True)
class C2vState:
    """Phase-space point of the planar subspace: pair half-separation x,
    pair height z, on-axis electron height z1, conjugate momenta, time."""

    x: float
    z: float
    z1: float
    p_x: float
    p_z: float
    p_z1: float
    t: float = 0.0

    def __post_init__(self):
        if self.x == 0:
            raise DomainError("C2v state requires x != 0")
        if self.z1 <= 0:
            raise DomainError(f"C2v state requires z1 > 0 at initialization, got {self.z1}")

    @property
    def coords(self):
        return np.array([self.x, self.z, self.z1])

    @property
    def momenta(self):
        return np.array([self.p_x, self.p_z, self.p_z1])

    @classmethod
    def with_parts(cls, coords, momenta, t):
        return cls(x=float(coords[0]), z=float(coords[1]), z1=float(coords[2]),
                   p_x=float(momenta[0]), p_z=float(momenta[1]), p_z1=float(momenta[2]),
                   t=float(t))

    def as_array(self):
        """(x, z, z1, p_x, p_z, p_z1) layout used by the integrator kernels."""
        return np.array([self.x, self.z, self.z1, self.p_x, self.p_z, self.p_z1])


@dataclass(frozen=True)
class FullState:
    """Cartesian positions and momenta of the three electrons, shape (3, 3)."""

    positions: np.ndarray
    momenta_xyz: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "positions", np.asarray(self.positions, dtype=float))
        object.__setattr__(self, "momenta_xyz", np.asarray(self.momenta_xyz, dtype=float))
        if self.positions.shape != (3, 3) or self.momenta_xyz.shape != (3, 3):
            raise DomainError("FullState holds three electrons with 3 Cartesian components each")

    @property
    def coords(self):
        return self.positions

    @property
    def momenta(self):
        return self.momenta_xyz

    @classmethod
    def with_parts(cls, coords, momenta, t):
        return cls(positions=coords, momenta_xyz=momenta, t=float(t))


# ---------------------------------------------------------------------------
# compiled scalar kernels
# ---------------------------------------------------------------------------

@njit(cache=True)
def c3v_potential(R, Z, f):
    # -9/sqrt(R^2+Z^2) + sqrt(3)/R - 3 Z f
    s = math.sqrt(R * R + Z * Z)
    return -9.0 / s + SQRT3 / R - 3.0 * Z * f


@njit(cache=True)
def c3v_gradient(R, Z, f):
    s2 = R * R + Z * Z
    s3 = s2 * math.sqrt(s2)
    dR = 9.0 * R / s3 - SQRT3 / (R * R)
    dZ = 9.0 * Z / s3 - 3.0 * f
    return dR, dZ


@njit(cache=True)
def c2v_potential(x, z, z1, f):
    # pair-nucleus, axis-nucleus, pair-pair, pair-axis, field
    s2 = math.sqrt(x * x + z * z)
    dz = z - z1
    s23 = math.sqrt(x * x + dz * dz)
    return (-6.0 / s2 - 3.0 / abs(z1) + 0.5 / abs(x) + 2.0 / s23
            - (2.0 * z + z1) * f)


@njit(cache=True)
def c2v_gradient(x, z, z1, f):
    r2 = x * x + z * z
    s2_3 = r2 * math.sqrt(r2)
    dz = z - z1
    r23 = x * x + dz * dz
    s23_3 = r23 * math.sqrt(r23)
    sx = 1.0 if x > 0 else -1.0
    sz1 = 1.0 if z1 > 0 else -1.0
    gx = 6.0 * x / s2_3 - sx * 0.5 / (x * x) - 2.0 * x / s23_3
    gz = 6.0 * z / s2_3 - 2.0 * dz / s23_3 - 2.0 * f
    gz1 = sz1 * 3.0 / (z1 * z1) + 2.0 * dz / s23_3 - f
    return gx, gz, gz1


@njit(cache=True)
def c3v_hamiltonian(y, f):
    return (y[2] * y[2] + y[3] * y[3]) / 6.0 + c3v_potential(y[0], y[1], f)


@njit(cache=True)
def c2v_hamiltonian(y, f):
    return ((y[3] * y[3] + y[4] * y[4]) / 4.0 + y[5] * y[5] / 2.0
            + c2v_potential(y[0], y[1], y[2], f))


# ---------------------------------------------------------------------------
# potentials (public, with domain checks)
# ---------------------------------------------------------------------------

def potential_c3v(R: float, Z: float, field_value: float) -> float:
    """Potential energy of the triangular configuration at instantaneous field."""
    if R <= 0:
        raise DomainError(f"potential_c3v requires R > 0, got R={R}")
    return c3v_potential(R, Z, field_value)


def potential_c2v(x: float, z: float, z1: float, field_value: float) -> float:
    """Potential energy of the planar configuration at instantaneous field."""
    if x == 0 or z1 == 0:
        raise DomainError("singular C2v configuration")
    return c2v_potential(x, z, z1, field_value)


def coulomb_potential(positions: np.ndarray, field_value: float,
                      nuclear_charge: float) -> float:
    """Coulomb + field potential for an arbitrary set of electrons.

    ``positions`` has shape (n, 3).  Nuclear attraction uses ``nuclear_charge``,
    every electron pair repels with charge 1, and the field couples to the sum
    of the z coordinates.
    """
    pos = np.asarray(positions, dtype=float)
    r = np.linalg.norm(pos, axis=1)
    if np.any(r == 0):
        raise DomainError("electron at the nucleus")
    v = -nuclear_charge * np.sum(1.0 / r)
    n = len(pos)
    for i in range(n):
        for j in range(i + 1, n):
            d = np.linalg.norm(pos[i] - pos[j])
            if d == 0:
                raise DomainError("coinciding electrons")
            v += 1.0 / d
    return v - field_value * np.sum(pos[:, 2])


def potential_full(state: FullState, field_value: float, Z_nucleus: float = 3.0) -> float:
    """Potential of the full three-electron system; Z_nucleus=3 is the physical case."""
    return coulomb_potential(state.positions, field_value, Z_nucleus)


def coulomb_gradient(positions: np.ndarray, field_value: float,
                     nuclear_charge: float) -> np.ndarray:
    """Gradient of :func:`coulomb_potential` with respect to all positions, shape (n, 3)."""
    pos = np.asarray(positions, dtype=float)
    n = len(pos)
    grad = np.zeros_like(pos)
    r = np.linalg.norm(pos, axis=1)
    grad += nuclear_charge * pos / r[:, None] ** 3
    for i in range(n):
        for j in range(i + 1, n):
            d = pos[i] - pos[j]
            d3 = np.linalg.norm(d) ** 3
            grad[i] -= d / d3
            grad[j] += d / d3
    grad[:, 2] -= field_value
    return grad


# ---------------------------------------------------------------------------
# Hamiltonians and equations of motion
# ---------------------------------------------------------------------------

def hamiltonian_c3v(state: C3vState, field_value: float) -> float:
    return ((state.p_R ** 2 + state.p_Z ** 2) / 6.0
            + potential_c3v(state.R, state.Z, field_value))


def hamiltonian_c2v(state: C2vState, field_value: float) -> float:
    return ((state.p_x ** 2 + state.p_z ** 2) / 4.0 + state.p_z1 ** 2 / 2.0
            + potential_c2v(state.x, state.z, state.z1, field_value))


def hamiltonian_full(state: FullState, field_value: float, Z_nucleus: float = 3.0) -> float:
    return (0.5 * np.sum(state.momenta_xyz ** 2)
            + potential_full(state, field_value, Z_nucleus))


def eom_c3v(state: C3vState, params: FieldParams) -> np.ndarray:
    """Time derivative (dR, dZ, dp_R, dp_Z) under the full time-dependent field."""
    f = params.F * envelope(params, state.t)
    if state.R <= 0:
        raise DomainError("singular C3v state")
    gR, gZ = c3v_gradient(state.R, state.Z, f)
    return np.array([state.p_R / 3.0, state.p_Z / 3.0, -gR, -gZ])


def eom_c2v(state: C2vState, params: FieldParams) -> np.ndarray:
    """Time derivative (dx, dz, dz1, dp_x, dp_z, dp_z1)."""
    f = params.F * envelope(params, state.t)
    if state.x == 0 or state.z1 == 0:
        raise DomainError("singular C2v state")
    gx, gz, gz1 = c2v_gradient(state.x, state.z, state.z1, f)
    return np.array([state.p_x / 2.0, state.p_z / 2.0, state.p_z1,
                     -gx, -gz, -gz1])


# ---------------------------------------------------------------------------
# embeddings into the full space
# ---------------------------------------------------------------------------

def embed(state) -> FullState:
    """Map a subspace state to the full 18-dimensional phase-space point.

    C3v: electrons at angles 2*pi*i/3 on the ring, each carrying momentum
    (p_R/3, p_Z/3) in its radial/axial directions.  C2v: electron 1 on the
    axis at z1, electrons 2 and 3 at (+-x, 0, z) with p_x2 = -p_x3 = p_x/2,
    p_z2 = p_z3 = p_z/2.
    """
    if isinstance(state, C3vState):
        pos = np.empty((3, 3))
        mom = np.empty((3, 3))
        for i, ang in enumerate(C3V_ANGLES):
            c, s = math.cos(ang), math.sin(ang)
            pos[i] = (state.R * c, state.R * s, state.Z)
            mom[i] = (state.p_R / 3.0 * c, state.p_R / 3.0 * s, state.p_Z / 3.0)
        return FullState(pos, mom, state.t)
    if isinstance(state, C2vState):
        pos = np.array([[0.0, 0.0, state.z1],
                        [state.x, 0.0, state.z],
                        [-state.x, 0.0, state.z]])
        mom = np.array([[0.0, 0.0, state.p_z1],
                        [state.p_x / 2.0, 0.0, state.p_z / 2.0],
                        [-state.p_x / 2.0, 0.0, state.p_z / 2.0]])
        return FullState(pos, mom, state.t)
    raise DomainError(f"cannot embed {type(state).__name__}")


def angular_momentum_z(state: FullState) -> float:
    """Total angular momentum about the field axis; zero for embedded states."""
    pos, mom = state.positions, state.momenta_xyz
    return float(np.sum(pos[:, 0] * mom[:, 1] - pos[:, 1] * mom[:, 0]))
