"""Adaptive trajectory propagation through the pulse and outcome classification.

The propagator is an embedded Dormand-Prince 5(4) pair with PI step-size
control, compiled with numba so that ensembles of 1e4..1e5 trajectories run
in minutes on a single core.  Hamilton's equations are integrated with the
full time-dependent field from t0 to the end of the pulse, then field-free
until the outcome classification is stable or the time cap is reached.

Classification is per embedded electron: ionized means the distance to the
nucleus exceeds ``r_escape`` AND the single-particle energy p^2/2 - 3/r is
positive.  In the C3v subspace the three electrons are identical, so only
triple ionization or survival can occur; the C2v subspace distinguishes
single (axis electron), double (the symmetric pair) and triple escape.

Collisions: the potential is not regularized globally and a minimum-step
floor classifies a trajectory as rejected.  The one exception is the exact
on-axis electron-nucleus collision in C2v, which every bound axis electron
reaches within one radial period (its motion is strictly one-dimensional).
The zero-angular-momentum limit of the corresponding three-dimensional orbit
is an elastic reflection off the nucleus, so when z1 dips below
``bounce_radius`` moving inward, p_z1 flips sign.  The time spent below the
bounce radius in the true dynamics is O(bounce_radius^(3/2)), negligible
against every other error source.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from numba import njit, prange

from .errors import DomainError
from .fields import ENV_OFF, ENV_SIN2, FieldParams
from .hamiltonians import (C2vState, C3vState, c2v_gradient, c2v_hamiltonian,
                           c3v_gradient, c3v_hamiltonian)

SUB_C3V = 0
SUB_C2V = 1

# outcome codes shared with the compiled kernels
BOUND, SINGLE, DOUBLE, TRIPLE, REJECTED = 0, 1, 2, 3, 4
OUTCOME_NAMES = ("bound", "single", "double", "triple", "rejected")

# span-integrator statuses
_OK, _UNDERFLOW, _EXHAUSTED = 0, 1, 2


@dataclass(frozen=True)
class IntegratorControls:
    """Tolerances and thresholds of the propagator."""

    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    min_step: float = 1e-12        # adaptive steps below this reject the trajectory
    r_escape_factor: float = 20.0  # r_escape = factor * saddle radius at peak field
    t_max_factor: float = 2.0      # propagate at most to t_max_factor * T_d
    bounce_radius: float = 1e-3    # C2v axis-electron reflection radius (a.u.)
    settle_factor: float = 5.0     # ionized electrons must pass settle_factor * r_escape
    max_steps: int = 20_000_000
    check_dt_frac: float = 0.05    # post-pulse classification interval, fraction of T_d

    def as_tuple(self):
        return (self.rel_tol, self.abs_tol, self.min_step, self.bounce_radius,
                float(self.max_steps))


@dataclass(frozen=True)
class TrajectoryOutcome:
    outcome: str
    p_ion_parallel: float | None
    final_state: object
    t_end: float
    energy_drift: float
    min_distance: float
    n_steps: int

    @property
    def ionized_electrons(self) -> int:
        return {"bound": 0, "single": 1, "double": 2, "triple": 3,
                "rejected": 0}[self.outcome]


def saddle_radius(F: float) -> float:
    """Distance of the triangular saddle from the nucleus at field value F."""
    if F <= 0:
        raise DomainError("saddle radius needs a positive field value")
    return (math.sqrt(6.0) / F) ** 0.5


# ---------------------------------------------------------------------------
# compiled kernels
# ---------------------------------------------------------------------------

@njit(cache=True)
def _env_factor(t, omega, Td, phi, kind):
    if kind == 0:      # sin^2 pulse with carrier
        s = math.sin(math.pi * t / Td)
        return s * s * math.cos(omega * t + phi)
    elif kind == 1:    # static
        return 1.0
    return 0.0         # off


@njit(cache=True)
def _rhs(sub, t, y, dy, F, omega, Td, phi, kind):
    f = F * _env_factor(t, omega, Td, phi, kind)
    if sub == 0:
        gr, gz = c3v_gradient(y[0], y[1], f)
        dy[0] = y[2] / 3.0
        dy[1] = y[3] / 3.0
        dy[2] = -gr
        dy[3] = -gz
    else:
        gx, gz, gz1 = c2v_gradient(y[0], y[1], y[2], f)
        dy[0] = y[3] / 2.0
        dy[1] = y[4] / 2.0
        dy[2] = y[5]
        dy[3] = -gx
        dy[4] = -gz
        dy[5] = -gz1


@njit(cache=True)
def _min_distance(sub, y):
    if sub == 0:
        return math.hypot(y[0], y[1])
    d1 = abs(y[2])
    d2 = math.hypot(y[0], y[1])
    return d1 if d1 < d2 else d2


@njit(cache=True)
def _integrate_span(sub, y, t0, t1, F, omega, Td, phi, kind,
                    rtol, atol, min_step, bounce_r, max_steps):
    """Dormand-Prince 5(4) with PI control from t0 to t1 (either direction).

    Mutates y in place; returns (status, steps_used, min_dist).
    """
    dim = 4 if sub == 0 else 6
    direction = 1.0 if t1 >= t0 else -1.0
    span = abs(t1 - t0)
    if span == 0.0:
        return _OK, 0, _min_distance(sub, y)

    k1 = np.empty(dim)
    k2 = np.empty(dim)
    k3 = np.empty(dim)
    k4 = np.empty(dim)
    k5 = np.empty(dim)
    k6 = np.empty(dim)
    k7 = np.empty(dim)
    ytmp = np.empty(dim)
    ynew = np.empty(dim)

    t = t0
    mind = _min_distance(sub, y)
    _rhs(sub, t, y, k1, F, omega, Td, phi, kind)

    # initial step size from the local derivative scale
    d0 = 0.0
    d1 = 0.0
    for i in range(dim):
        sc = atol + rtol * abs(y[i])
        d0 += (y[i] / sc) ** 2
        d1 += (k1[i] / sc) ** 2
    d0 = math.sqrt(d0 / dim)
    d1 = math.sqrt(d1 / dim)
    h = 1e-6 * span if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    if h > span:
        h = span
    h *= direction

    err_prev = 1.0
    steps = 0
    while (t - t1) * direction < 0.0:
        if abs(h) < min_step:
            return _UNDERFLOW, steps, mind
        if steps >= max_steps:
            return _EXHAUSTED, steps, mind
        if (t + h - t1) * direction > 0.0:
            h = t1 - t

        # DOPRI5 stages
        for i in range(dim):
            ytmp[i] = y[i] + h * 0.2 * k1[i]
        _rhs(sub, t + 0.2 * h, ytmp, k2, F, omega, Td, phi, kind)
        for i in range(dim):
            ytmp[i] = y[i] + h * (3.0 / 40.0 * k1[i] + 9.0 / 40.0 * k2[i])
        _rhs(sub, t + 0.3 * h, ytmp, k3, F, omega, Td, phi, kind)
        for i in range(dim):
            ytmp[i] = y[i] + h * (44.0 / 45.0 * k1[i] - 56.0 / 15.0 * k2[i]
                                  + 32.0 / 9.0 * k3[i])
        _rhs(sub, t + 0.8 * h, ytmp, k4, F, omega, Td, phi, kind)
        for i in range(dim):
            ytmp[i] = y[i] + h * (19372.0 / 6561.0 * k1[i] - 25360.0 / 2187.0 * k2[i]
                                  + 64448.0 / 6561.0 * k3[i] - 212.0 / 729.0 * k4[i])
        _rhs(sub, t + 8.0 / 9.0 * h, ytmp, k5, F, omega, Td, phi, kind)
        for i in range(dim):
            ytmp[i] = y[i] + h * (9017.0 / 3168.0 * k1[i] - 355.0 / 33.0 * k2[i]
                                  + 46732.0 / 5247.0 * k3[i] + 49.0 / 176.0 * k4[i]
                                  - 5103.0 / 18656.0 * k5[i])
        _rhs(sub, t + h, ytmp, k6, F, omega, Td, phi, kind)
        for i in range(dim):
            ynew[i] = y[i] + h * (35.0 / 384.0 * k1[i] + 500.0 / 1113.0 * k3[i]
                                  + 125.0 / 192.0 * k4[i] - 2187.0 / 6784.0 * k5[i]
                                  + 11.0 / 84.0 * k6[i])
        _rhs(sub, t + h, ynew, k7, F, omega, Td, phi, kind)

        # embedded error estimate
        err = 0.0
        bad = False
        for i in range(dim):
            e = h * (71.0 / 57600.0 * k1[i] - 71.0 / 16695.0 * k3[i]
                     + 71.0 / 1920.0 * k4[i] - 17253.0 / 339200.0 * k5[i]
                     + 22.0 / 525.0 * k6[i] - 1.0 / 40.0 * k7[i])
            ay = abs(y[i])
            an = abs(ynew[i])
            sc = atol + rtol * (ay if ay > an else an)
            if not math.isfinite(e) or not math.isfinite(ynew[i]):
                bad = True
                break
            err += (e / sc) ** 2
        err = math.sqrt(err / dim) if not bad else 2.0

        if bad or (sub == 1 and ynew[2] <= 0.0):
            # non-finite stage or axis electron crossing the nucleus: shrink
            h *= 0.25
            steps += 1
            continue

        if err <= 1.0:
            t += h
            for i in range(dim):
                y[i] = ynew[i]
                k1[i] = k7[i]          # FSAL
            d = _min_distance(sub, y)
            if d < mind:
                mind = d
            if sub == 1 and y[2] < bounce_r and y[5] * direction < 0.0:
                y[5] = -y[5]           # elastic reflection off the nucleus
                _rhs(sub, t, y, k1, F, omega, Td, phi, kind)
            e = err if err > 1e-10 else 1e-10
            fac = 0.9 * e ** -0.14 * err_prev ** 0.08
            if fac > 5.0:
                fac = 5.0
            elif fac < 0.1:
                fac = 0.1
            h *= fac
            err_prev = e
        else:
            fac = 0.9 * err ** -0.2
            if fac < 0.1:
                fac = 0.1
            h *= fac
        steps += 1
    return _OK, steps, mind


@njit(cache=True)
def _count_electrons(sub, y, r_escape):
    """(n_ionized, n_transit): transit electrons are unbound but still inside r_escape."""
    n_ion = 0
    n_transit = 0
    if sub == 0:
        r = math.hypot(y[0], y[1])
        e1 = (y[2] * y[2] + y[3] * y[3]) / 18.0 - 3.0 / r
        if e1 > 0.0:
            if r > r_escape:
                n_ion = 3
            else:
                n_transit = 3
    else:
        r1 = abs(y[2])
        e1 = 0.5 * y[5] * y[5] - 3.0 / r1
        if e1 > 0.0:
            if r1 > r_escape:
                n_ion += 1
            else:
                n_transit += 1
        rp = math.hypot(y[0], y[1])
        ep = (y[3] * y[3] + y[4] * y[4]) / 8.0 - 3.0 / rp
        if ep > 0.0:
            if rp > r_escape:
                n_ion += 2
            else:
                n_transit += 2
    return n_ion, n_transit


@njit(cache=True)
def _all_settled(sub, y, r_escape, r_settle):
    """True when every ionized electron has also passed the settle radius."""
    if sub == 0:
        r = math.hypot(y[0], y[1])
        e1 = (y[2] * y[2] + y[3] * y[3]) / 18.0 - 3.0 / r
        return not (e1 > 0.0 and r_escape < r <= r_settle)
    r1 = abs(y[2])
    e1 = 0.5 * y[5] * y[5] - 3.0 / r1
    if e1 > 0.0 and r_escape < r1 <= r_settle:
        return False
    rp = math.hypot(y[0], y[1])
    ep = (y[3] * y[3] + y[4] * y[4]) / 8.0 - 3.0 / rp
    if ep > 0.0 and r_escape < rp <= r_settle:
        return False
    return True


@njit(cache=True)
def _field_free_energy(sub, y):
    if sub == 0:
        return c3v_hamiltonian(y, 0.0)
    return c2v_hamiltonian(y, 0.0)


@njit(cache=True)
def _propagate_one(sub, y, t0, F, omega, Td, phi,
                   rtol, atol, min_step, bounce_r, max_steps,
                   r_escape, r_settle, t_max, dt_check):
    """Full protocol for one trajectory.  Returns
    (code, p_ion, t_end, drift, min_dist, steps)."""
    status, steps, mind = _integrate_span(
        sub, y, t0, Td, F, omega, Td, phi, ENV_SIN2,
        rtol, atol, min_step, bounce_r, max_steps)
    t = Td
    if status != _OK:
        return REJECTED, 0.0, t, math.nan, mind, steps

    h0 = _field_free_energy(sub, y)

    # field-free continuation until the classification is stable
    while True:
        n_ion, n_transit = _count_electrons(sub, y, r_escape)
        if n_transit == 0 and _all_settled(sub, y, r_escape, r_settle):
            break
        if t >= t_max:
            break
        t1 = t + dt_check
        if t1 > t_max:
            t1 = t_max
        status, st, d = _integrate_span(
            sub, y, t, t1, F, omega, Td, phi, ENV_OFF,
            rtol, atol, min_step, bounce_r, max_steps - steps)
        steps += st
        if d < mind:
            mind = d
        t = t1
        if status == _UNDERFLOW:
            return REJECTED, 0.0, t, math.nan, mind, steps
        if status == _EXHAUSTED:
            return REJECTED, 0.0, t, math.nan, mind, steps

    h1 = _field_free_energy(sub, y)
    denom = abs(h0) if abs(h0) > 1.0 else 1.0
    drift = abs(h1 - h0) / denom

    n_ion, n_transit = _count_electrons(sub, y, r_escape)
    if sub == 0:
        code = TRIPLE if n_ion == 3 else BOUND
        p_ion = -y[3]
    else:
        if n_ion == 3:
            code = TRIPLE
        elif n_ion == 2:
            code = DOUBLE
        elif n_ion == 1:
            code = SINGLE
        else:
            code = BOUND
        p_ion = -(y[4] + y[5])
    if code != TRIPLE:
        p_ion = math.nan
    return code, p_ion, t, drift, mind, steps


@njit(parallel=True, cache=True)
def _propagate_batch(sub, y0, phis, t0, F, omega, Td,
                     rtol, atol, min_step, bounce_r, max_steps,
                     r_escape, r_settle, t_max, dt_check,
                     codes, p_ions, t_ends, drifts, min_dists, nsteps, finals):
    n = y0.shape[0]
    dim = y0.shape[1]
    for i in prange(n):
        y = np.empty(dim)
        for j in range(dim):
            y[j] = y0[i, j]
        code, p_ion, t_end, drift, mind, steps = _propagate_one(
            sub, y, t0, F, omega, Td, phis[i],
            rtol, atol, min_step, bounce_r, max_steps,
            r_escape, r_settle, t_max, dt_check)
        codes[i] = code
        p_ions[i] = p_ion
        t_ends[i] = t_end
        drifts[i] = drift
        min_dists[i] = mind
        nsteps[i] = steps
        for j in range(dim):
            finals[i, j] = y[j]


# ---------------------------------------------------------------------------
# public API
# ---------------------------------------------------------------------------

def _sub_of(state):
    if isinstance(state, C3vState):
        return SUB_C3V
    if isinstance(state, C2vState):
        return SUB_C2V
    raise DomainError(f"cannot propagate {type(state).__name__}")


def _normalized_array(state):
    """Kernel layout; C2v states are mapped to the x > 0 half plane
    (the dynamics is equivariant under x -> -x)."""
    y = state.as_array()
    if isinstance(state, C2vState) and y[0] < 0:
        y[0] = -y[0]
        y[3] = -y[3]
    return y


def _state_from_array(sub, y, t):
    if sub == SUB_C3V:
        return C3vState(R=y[0], Z=y[1], p_R=y[2], p_Z=y[3], t=t)
    return C2vState(x=y[0], z=y[1], z1=y[2], p_x=y[3], p_z=y[4], p_z1=y[5], t=t)


def propagate(state, params: FieldParams, controls: IntegratorControls | None = None) -> TrajectoryOutcome:
    """Propagate one subspace state from its time through the pulse and classify it."""
    controls = controls or IntegratorControls()
    sub = _sub_of(state)
    y = _normalized_array(state)
    r_esc = controls.r_escape_factor * saddle_radius(params.F)
    code, p_ion, t_end, drift, mind, steps = _propagate_one(
        sub, y, state.t, params.F, params.omega, params.T_d, params.phi,
        controls.rel_tol, controls.abs_tol, controls.min_step,
        controls.bounce_radius, controls.max_steps,
        r_esc, controls.settle_factor * r_esc,
        controls.t_max_factor * params.T_d, controls.check_dt_frac * params.T_d)
    return TrajectoryOutcome(
        outcome=OUTCOME_NAMES[code],
        p_ion_parallel=None if math.isnan(p_ion) else float(p_ion),
        final_state=_state_from_array(sub, y, t_end),
        t_end=float(t_end),
        energy_drift=float(drift),
        min_distance=float(mind),
        n_steps=int(steps),
    )


def classify(state, params: FieldParams, controls: IntegratorControls | None = None) -> str:
    """Outcome class of a state as it stands (no further propagation)."""
    controls = controls or IntegratorControls()
    sub = _sub_of(state)
    r_esc = controls.r_escape_factor * saddle_radius(params.F)
    n_ion, _ = _count_electrons(sub, state.as_array(), r_esc)
    if sub == SUB_C3V:
        return "triple" if n_ion == 3 else "bound"
    return OUTCOME_NAMES[{0: BOUND, 1: SINGLE, 2: DOUBLE, 3: TRIPLE}[n_ion]]


def ion_momentum(outcome: TrajectoryOutcome) -> float:
    """Parallel recoil-ion momentum -(sum of electron z momenta); triple outcomes only."""
    if outcome.outcome != "triple":
        raise DomainError(f"ion momentum is defined for triple ionization, not {outcome.outcome!r}")
    return outcome.p_ion_parallel


def integrate_span(state, params: FieldParams, t1: float,
                   controls: IntegratorControls | None = None):
    """Integrate a state to time t1 (forward or backward) and return the new state.

    Exposed for energy-conservation, reversibility and scaling tests; the
    envelope kind of ``params`` decides whether the field is pulsed, static
    or off.
    """
    controls = controls or IntegratorControls()
    sub = _sub_of(state)
    y = _normalized_array(state)
    status, steps, mind = _integrate_span(
        sub, y, state.t, t1, params.F, params.omega, params.T_d, params.phi,
        params.env_code, controls.rel_tol, controls.abs_tol, controls.min_step,
        controls.bounce_radius, controls.max_steps)
    if status == _UNDERFLOW:
        raise DomainError("step size underflow (collision) during span integration")
    if status == _EXHAUSTED:
        raise DomainError("step budget exhausted during span integration")
    return _state_from_array(sub, y, t1)
