"""Stationary points of the fixed-field potentials.

The triangular (C3v) saddle is analytic:

    theta = arctan(1/sqrt(2)),  r_s^2 = sqrt(6)/|f|,  V_s = -2*6^(3/4)*sqrt(|f|),

with the saddle on the downfield side (theta_s = theta for f > 0, pi - theta
for f < 0).  The planar (C2v) saddle has no closed form and is located by a
damped Newton iteration on the gradient with analytic Hessian, seeded from
the known f = 1 point and the exact field-scaling law
coords ~ |f|^(-1/2), V_s ~ |f|^(1/2).

The ring saddle generalizes the triangle to N electrons on a ring of radius R
at height Z around a nucleus of charge N:

    V(R, Z) = -N^2/sqrt(R^2+Z^2) + A_N/R - N Z f,
    A_N = (N/4) * sum_{k=1}^{N-1} 1/sin(pi k/N).

Every solve is followed by a Morse-index check; stationary points with an
unexpected index are rejected rather than silently returned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .errors import ConvergenceError, DomainError

#: saddle angle of the triangular configuration, measured from the field axis
THETA_C3V = math.atan(1.0 / math.sqrt(2.0))

#: published f = 1 location of the planar saddle, used to seed the Newton solve
_C2V_SEED = np.array([1.1607, 1.1143, 1.4665])

_GRAD_TOL = 1e-12          # Newton convergence target on max|grad|
_RESIDUAL_LIMIT = 1e-10    # every reported saddle must beat this


@dataclass(frozen=True)
class SaddleInfo:
    """A located stationary point of a fixed-field potential."""

    kind: str                       # "c3v" | "c2v" | "ring"
    coords: np.ndarray              # subspace configuration coordinates
    coord_names: tuple
    V_s: float
    field_value: float
    residual: float                 # max-norm of the potential gradient
    morse_index: int                # negative Hessian eigenvalues in the subspace
    n_electrons: int = 3

    def coord(self, name: str) -> float:
        return float(self.coords[self.coord_names.index(name)])

    def electron_distances(self) -> np.ndarray:
        """Distance of each (inequivalent) electron to the nucleus."""
        if self.kind == "c3v" or self.kind == "ring":
            R, Z = self.coords
            return np.array([math.hypot(R, Z)])
        x, z, z1 = self.coords
        return np.array([abs(z1), math.hypot(x, z), math.hypot(x, z)])

    def as_dict(self) -> dict:
        return {
            "type": self.kind,
            "N": self.n_electrons,
            "field": self.field_value,
            "coordinates": {n: float(v) for n, v in zip(self.coord_names, self.coords)},
            "V_s": self.V_s,
            "residual": self.residual,
            "morse_index": self.morse_index,
        }


# ---------------------------------------------------------------------------
# gradients / Hessians of the reduced potentials (configuration space only)
# ---------------------------------------------------------------------------

def c3v_hessian(R: float, Z: float) -> np.ndarray:
    """Configuration-space Hessian of the triangular potential (field terms are linear)."""
    s2 = R * R + Z * Z
    s3 = s2 ** 1.5
    s5 = s2 ** 2.5
    sqrt3 = math.sqrt(3.0)
    h = np.empty((2, 2))
    h[0, 0] = 9.0 / s3 - 27.0 * R * R / s5 + 2.0 * sqrt3 / R ** 3
    h[1, 1] = 9.0 / s3 - 27.0 * Z * Z / s5
    h[0, 1] = h[1, 0] = -27.0 * R * Z / s5
    return h


def c2v_hessian(x: float, z: float, z1: float) -> np.ndarray:
    """Configuration-space Hessian of the planar potential."""
    s2sq = x * x + z * z
    s3 = s2sq ** 1.5
    s5 = s2sq ** 2.5
    w = z - z1
    dsq = x * x + w * w
    d5 = dsq ** 2.5
    pair_xx = 2.0 * (3.0 * x * x - dsq) / d5
    pair_ww = 2.0 * (3.0 * w * w - dsq) / d5
    pair_xw = 6.0 * x * w / d5
    h = np.empty((3, 3))
    h[0, 0] = 6.0 * (1.0 / s3 - 3.0 * x * x / s5) + 1.0 / abs(x) ** 3 + pair_xx
    h[1, 1] = 6.0 * (1.0 / s3 - 3.0 * z * z / s5) + pair_ww
    h[2, 2] = -6.0 / abs(z1) ** 3 + pair_ww
    h[0, 1] = h[1, 0] = -18.0 * x * z / s5 + pair_xw
    h[0, 2] = h[2, 0] = -pair_xw
    h[1, 2] = h[2, 1] = -pair_ww
    return h


def _c2v_gradient(q: np.ndarray, f: float) -> np.ndarray:
    from .hamiltonians import c2v_gradient
    return np.array(c2v_gradient(q[0], q[1], q[2], f))


def ring_repulsion_coefficient(N: int) -> float:
    """A_N = (N/4) * sum_k csc(pi k / N): pair repulsion of N electrons on a unit ring."""
    return N / 4.0 * sum(1.0 / math.sin(math.pi * k / N) for k in range(1, N))


def ring_potential(R: float, Z: float, N: int, f: float) -> float:
    if R <= 0:
        raise DomainError("ring potential requires R > 0")
    a = ring_repulsion_coefficient(N)
    return -N * N / math.hypot(R, Z) + a / R - N * Z * f


def ring_gradient(R: float, Z: float, N: int, f: float) -> np.ndarray:
    a = ring_repulsion_coefficient(N)
    s3 = (R * R + Z * Z) ** 1.5
    return np.array([N * N * R / s3 - a / (R * R), N * N * Z / s3 - N * f])


def ring_hessian(R: float, Z: float, N: int) -> np.ndarray:
    a = ring_repulsion_coefficient(N)
    s2 = R * R + Z * Z
    s3 = s2 ** 1.5
    s5 = s2 ** 2.5
    n2 = N * N
    h = np.empty((2, 2))
    h[0, 0] = n2 * (1.0 / s3 - 3.0 * R * R / s5) + 2.0 * a / R ** 3
    h[1, 1] = n2 * (1.0 / s3 - 3.0 * Z * Z / s5)
    h[0, 1] = h[1, 0] = -3.0 * n2 * R * Z / s5
    return h


# ---------------------------------------------------------------------------
# Newton solver
# ---------------------------------------------------------------------------

def _newton_stationary(grad, hess, x0, max_iter=200, tol=_GRAD_TOL,
                       max_step=None, lower_floor=None):
    """Damped Newton on grad = 0 with a Levenberg-style trust fallback.

    When the Hessian is near-singular (ring saddles approaching a fold) the
    raw Newton step is replaced by a shifted solve (H + lam*I) with lam grown
    until the step is acceptable.  Steps are damped so no coordinate with a
    positivity floor crosses it.
    """
    x = np.array(x0, dtype=float)
    quiet = dict(over="ignore", invalid="ignore", divide="ignore")
    with np.errstate(**quiet):
        g = grad(x)
    for _ in range(max_iter):
        gnorm = np.max(np.abs(g))
        if gnorm < tol:
            return x
        with np.errstate(**quiet):
            h = hess(x)
        step = None
        try:
            cond = np.linalg.cond(h)
            if cond < 1e12:
                step = np.linalg.solve(h, -g)
        except np.linalg.LinAlgError:
            step = None
        if step is None or not np.all(np.isfinite(step)):
            lam = 1e-6 * np.max(np.abs(h))
            for _ in range(60):
                try:
                    step = np.linalg.solve(h + lam * np.eye(len(x)), -g)
                except np.linalg.LinAlgError:
                    step = None
                if step is not None and np.all(np.isfinite(step)):
                    break
                lam *= 10.0
            else:
                raise ConvergenceError("singular Hessian in Newton solve", last_iterate=x)
        if max_step is not None:
            n = np.linalg.norm(step)
            if n > max_step:
                step *= max_step / n
        # backtrack so positivity floors are respected and the residual shrinks
        alpha = 1.0
        for _ in range(60):
            xn = x + alpha * step
            if lower_floor is None or np.all(xn[lower_floor[0]] > lower_floor[1]):
                with np.errstate(**quiet):
                    gn = grad(xn)
                if np.all(np.isfinite(gn)) and (np.max(np.abs(gn)) < gnorm or alpha < 1e-3):
                    x, g = xn, gn
                    break
            alpha *= 0.5
        else:
            raise ConvergenceError("Newton line search stalled", last_iterate=x)
    raise ConvergenceError(f"Newton did not converge; last |grad|={np.max(np.abs(g)):.3e}",
                           last_iterate=x)


def _morse_index(hessian: np.ndarray) -> int:
    return int(np.sum(np.linalg.eigvalsh(hessian) < 0.0))


# ---------------------------------------------------------------------------
# saddle locators
# ---------------------------------------------------------------------------

def saddle_c3v(field_value: float) -> SaddleInfo:
    """Analytic saddle of the triangular configuration at a static field."""
    if field_value == 0:
        raise DomainError("no saddle for zero field (it recedes to infinity)")
    af = abs(field_value)
    r_s = (math.sqrt(6.0) / af) ** 0.5
    theta_s = THETA_C3V if field_value > 0 else math.pi - THETA_C3V
    R_s = r_s * math.sin(theta_s)
    Z_s = r_s * math.cos(theta_s)
    V_s = -2.0 * 6.0 ** 0.75 * math.sqrt(af)
    from .hamiltonians import c3v_gradient
    residual = float(np.max(np.abs(c3v_gradient(R_s, Z_s, field_value))))
    index = _morse_index(c3v_hessian(R_s, Z_s))
    if index != 1:
        raise ConvergenceError(f"triangular saddle has Morse index {index}, expected 1")
    return SaddleInfo(kind="c3v", coords=np.array([R_s, Z_s]), coord_names=("R", "Z"),
                      V_s=V_s, field_value=field_value, residual=residual,
                      morse_index=index)


def saddle_c2v(field_value: float, initial_guess=None) -> SaddleInfo:
    """Numerically located saddle of the planar configuration.

    The returned stationary point has Morse index 2 within the (x, z, z1)
    subspace (one stable, two unstable modes); convergence to any other
    stationary point raises.
    """
    if field_value == 0:
        raise DomainError("no saddle for zero field")
    af = abs(field_value)
    scale = af ** -0.5
    if initial_guess is None:
        guess = _C2V_SEED * scale
    else:
        guess = np.asarray(initial_guess, dtype=float)

    def grad(q):
        return _c2v_gradient(q, af)

    def hess(q):
        return c2v_hessian(q[0], q[1], q[2])

    floor = (np.array([0, 2]), 1e-9)   # keep x and z1 positive during the solve
    x = _newton_stationary(grad, hess, guess, max_step=0.5 * scale, lower_floor=floor)
    residual = float(np.max(np.abs(grad(x))))
    if residual > _RESIDUAL_LIMIT:
        raise ConvergenceError(f"residual {residual:.2e} above {_RESIDUAL_LIMIT}",
                               last_iterate=x)
    index = _morse_index(hess(x))
    if index != 2:
        raise ConvergenceError(
            f"converged to a stationary point with Morse index {index}, expected 2",
            last_iterate=x)
    from .hamiltonians import c2v_potential
    V_s = float(c2v_potential(x[0], x[1], x[2], af))
    if field_value < 0:
        x = np.array([x[0], -x[1], -x[2]])
    return SaddleInfo(kind="c2v", coords=x, coord_names=("x", "z", "z1"),
                      V_s=V_s, field_value=field_value, residual=residual,
                      morse_index=index)


def _ring_guess(N: int, af: float) -> np.ndarray:
    # triangular-angle guess: place the ring at theta = arctan(1/sqrt(2))
    s = math.sqrt(N * math.cos(THETA_C3V) / af)
    return np.array([s * math.sin(THETA_C3V), s * math.cos(THETA_C3V)])


def _solve_ring(N: int, af: float, guess: np.ndarray):
    def grad(q):
        return ring_gradient(q[0], q[1], N, af)

    def hess(q):
        return ring_hessian(q[0], q[1], N)

    floor = (np.array([0]), 1e-9)
    x = _newton_stationary(grad, hess, guess, lower_floor=floor)
    return x


def _ring_grid_scan(N: int, af: float, r_guess: float, n_grid: int = 80):
    """Coarse scan for a gradient zero: cells where both components change sign."""
    rs = np.linspace(1e-3 * r_guess, 5.0 * r_guess, n_grid)
    zs = np.linspace(1e-3 * r_guess, 5.0 * r_guess, n_grid)
    gR = np.empty((n_grid, n_grid))
    gZ = np.empty((n_grid, n_grid))
    a = ring_repulsion_coefficient(N)
    for i, R in enumerate(rs):
        s3 = (R * R + zs * zs) ** 1.5
        gR[i] = N * N * R / s3 - a / (R * R)
        gZ[i] = N * N * zs / s3 - N * af
    hits = []
    for i in range(n_grid - 1):
        for j in range(n_grid - 1):
            cr = gR[i:i + 2, j:j + 2]
            cz = gZ[i:i + 2, j:j + 2]
            if cr.min() < 0 < cr.max() and cz.min() < 0 < cz.max():
                hits.append(np.array([rs[i], zs[j]]))
    return hits


def saddle_ring(N: int, field_value: float, _guess=None):
    """Saddle of N electrons on a C_Nv ring, or None when no such saddle exists.

    Non-existence is only declared when Newton from the continuation guess
    fails AND a coarse grid scan over (0, 5*r_guess]^2 shows no gradient zero;
    a plain solver failure with a surviving grid hit is re-polished instead.
    """
    if N < 2:
        raise DomainError(f"ring saddle needs N >= 2, got {N}")
    if field_value == 0:
        raise DomainError("no saddle for zero field")
    af = abs(field_value)
    guess = _ring_guess(N, af) if _guess is None else np.asarray(_guess, dtype=float)
    x = None
    try:
        x = _solve_ring(N, af, guess)
    except ConvergenceError:
        hits = _ring_grid_scan(N, af, float(np.linalg.norm(guess)))
        for h in hits:
            try:
                x = _solve_ring(N, af, h)
                break
            except ConvergenceError:
                continue
        if x is None:
            if hits:
                raise ConvergenceError(
                    f"ring N={N}: grid scan found gradient zeros but Newton failed")
            return None
    residual = float(np.max(np.abs(ring_gradient(x[0], x[1], N, af))))
    if residual > _RESIDUAL_LIMIT:
        raise ConvergenceError(f"ring N={N}: residual {residual:.2e} too large",
                               last_iterate=x)
    index = _morse_index(ring_hessian(x[0], x[1], N))
    if index != 1:
        raise ConvergenceError(
            f"ring N={N}: stationary point has Morse index {index}, expected 1",
            last_iterate=x)
    V_s = ring_potential(x[0], x[1], N, af)
    if field_value < 0:
        x = np.array([x[0], -x[1]])
    return SaddleInfo(kind="ring", coords=x, coord_names=("R", "Z"),
                      V_s=V_s, field_value=field_value, residual=residual,
                      morse_index=index, n_electrons=N)


def ring_scan(n_max: int, field_value: float = 1.0):
    """Ring saddles for N = 2..n_max with continuation in N.

    Returns a list of dicts with keys N, exists, R_s, Z_s, V_s.
    """
    rows = []
    prev = None
    for N in range(2, n_max + 1):
        guess = None
        if prev is not None:
            # continuation: previous solution rescaled to the new charge/count
            guess = prev * math.sqrt(N / (N - 1))
        try:
            info = saddle_ring(N, field_value, _guess=guess)
        except ConvergenceError:
            info = saddle_ring(N, field_value)   # retry from the analytic guess
        if info is None:
            rows.append({"N": N, "exists": False, "R_s": math.nan,
                         "Z_s": math.nan, "V_s": math.nan})
            prev = None
        else:
            rows.append({"N": N, "exists": True, "R_s": info.coord("R"),
                         "Z_s": info.coord("Z"), "V_s": info.V_s})
            prev = info.coords.copy()
    return rows
