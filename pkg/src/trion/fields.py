"""Laser pulse definition and the field-amplitude scaling transform.

All quantities are in atomic units (a.u.).  The pulse is linearly polarized
along z with

    f(t) = sin^2(pi t / T_d) * cos(omega t + phi),        0 <= t <= T_d,

and the instantaneous field is F * f(t).  Because the Coulomb interaction is
homogeneous of degree -1, rescaling

    r -> F^(1/2) r',   p -> F^(-1/4) p',   t -> F^(3/4) t',
    omega -> F^(-3/4) omega',   H -> F^(-1/2) H'

maps the dynamics at peak amplitude F onto the same system with F = 1.  The
"to-scaled" direction of every scaling helper applies exactly these factors;
"from-scaled" inverts them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError

# exponents of F applied to each quantity in the "to-scaled" direction
_SCALE_EXPONENTS = {
    "position": 0.5,
    "momentum": -0.25,
    "time": 0.75,
    "frequency": -0.75,
    "energy": -0.5,
}

# envelope kinds understood by the integrator kernels
ENV_SIN2 = 0     # sin^2 pulse with carrier (the physical pulse)
ENV_STATIC = 1   # f(t) = 1, used for adiabatic/static-field analysis and tests
ENV_OFF = 2      # f(t) = 0, post-pulse propagation

_ENV_KINDS = {"sin2": ENV_SIN2, "static": ENV_STATIC, "off": ENV_OFF}


@dataclass(frozen=True)
class FieldParams:
    """Laser pulse: peak amplitude F, angular frequency, duration and carrier phase.

    ``envelope_kind`` is "sin2" for the physical pulse; "static" freezes
    f(t) = 1 (adiabatic analysis, integrator self-tests) and "off" turns the
    field off entirely.
    """

    F: float
    omega: float
    T_d: float
    phi: float = 0.0
    envelope_kind: str = "sin2"

    def __post_init__(self):
        if self.F < 0:
            raise DomainError(f"peak amplitude must be >= 0, got F={self.F}")
        if self.omega <= 0:
            raise DomainError(f"frequency must be > 0, got omega={self.omega}")
        if self.T_d <= 0:
            raise DomainError(f"pulse duration must be > 0, got T_d={self.T_d}")
        if self.envelope_kind not in _ENV_KINDS:
            raise DomainError(f"unknown envelope kind {self.envelope_kind!r}")

    @classmethod
    def from_cycles(cls, F, omega, cycles, phi=0.0, envelope_kind="sin2"):
        """Build params with T_d given as a number of carrier periods 2*pi/omega."""
        return cls(F=F, omega=omega, T_d=cycles * 2.0 * math.pi / omega,
                   phi=phi, envelope_kind=envelope_kind)

    @property
    def env_code(self) -> int:
        """Integer envelope code consumed by the compiled kernels."""
        return _ENV_KINDS[self.envelope_kind]

    def cycles(self) -> float:
        return self.T_d * self.omega / (2.0 * math.pi)


def pulse_profile(params: FieldParams, t: float) -> float:
    """Envelope f_p(t) = sin^2(pi t / T_d), without the carrier."""
    if params.envelope_kind == "static":
        return 1.0
    if params.envelope_kind == "off":
        return 0.0
    if t < 0.0 or t > params.T_d:
        raise DomainError(f"t={t} outside pulse interval [0, {params.T_d}]")
    s = math.sin(math.pi * t / params.T_d)
    return s * s


def envelope(params: FieldParams, t: float) -> float:
    """Dimensionless field factor f(t) = f_p(t) * cos(omega t + phi)."""
    if params.envelope_kind == "static":
        return 1.0
    if params.envelope_kind == "off":
        return 0.0
    return pulse_profile(params, t) * math.cos(params.omega * t + params.phi)


def field_value(params: FieldParams, t: float) -> float:
    """Instantaneous field F * f(t)."""
    return params.F * envelope(params, t)


def scale_factor(quantity: str, F: float, direction: str) -> float:
    """Multiplicative factor turning a physical quantity into its scaled value
    (direction "to-scaled") or back (direction "from-scaled")."""
    if F <= 0:
        raise DomainError(f"scaling requires F > 0, got F={F}")
    try:
        expo = _SCALE_EXPONENTS[quantity]
    except KeyError:
        raise DomainError(f"unknown quantity {quantity!r}") from None
    if direction == "to-scaled":
        return F ** expo
    if direction == "from-scaled":
        return F ** (-expo)
    raise DomainError(f"direction must be 'to-scaled' or 'from-scaled', got {direction!r}")


def scale_energy(E: float, F: float, direction: str = "to-scaled") -> float:
    return E * scale_factor("energy", F, direction)


def scale_time(t: float, F: float, direction: str = "to-scaled") -> float:
    return t * scale_factor("time", F, direction)


def scale_frequency(omega: float, F: float, direction: str = "to-scaled") -> float:
    return omega * scale_factor("frequency", F, direction)


def scale_state(state, F: float, direction: str = "to-scaled"):
    """Apply the amplitude-scaling transform to a phase-space point.

    ``state`` must provide ``coords``, ``momenta`` and ``t`` plus a
    ``with_parts(coords, momenta, t)`` constructor; the subspace and
    full-space state types in :mod:`trion.hamiltonians` all do.  The
    round trip to-scaled -> from-scaled is the identity.
    """
    cr = scale_factor("position", F, direction)
    cp = scale_factor("momentum", F, direction)
    ct = scale_factor("time", F, direction)
    return state.with_parts(state.coords * cr, state.momenta * cp, state.t * ct)
