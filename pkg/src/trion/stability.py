"""Linear stability of the escape saddles.

Mass-weighted Hessian eigenanalysis around a saddle, in the symmetry subspace
and in the full configuration space.  A negative eigenvalue mu of
M^(-1/2) Hess(V) M^(-1/2) corresponds to an unstable mode with local Lyapunov
exponent sqrt(-mu) (in inverse scaled time at the analysis field value).

Full-space treatment follows two different routes on purpose:

* C3v: the overall rotation about the field axis is removed by restricting to
  the orthogonal complement of the rotation generator (equivalent to the
  per-electron cylindrical coordinates with the global angle eliminated),
  leaving 8 coordinates and no neutral mode.
* C2v: all 9 Cartesian coordinates are kept and the rotation shows up as one
  explicit zero mode.

The generalized Wannier threshold exponent is the ratio of the summed
non-reaction unstable exponents to the reaction exponent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .errors import DomainError, TrionError
from .fields import FieldParams, scale_frequency
from .hamiltonians import MASS_C2V, MASS_C3V, C3V_ANGLES, embed
from .saddles import SaddleInfo, c2v_hessian, c3v_hessian, saddle_c2v, saddle_c3v

#: relative tolerance for grouping analytically degenerate eigenvalues
DEGENERACY_RTOL = 1e-6

# classification tags
REACTION = "reaction"
IN_SUBSPACE_UNSTABLE = "in-subspace unstable"
IN_SUBSPACE_STABLE = "in-subspace stable"
BREAKING_UNSTABLE = "symmetry-breaking unstable"
BREAKING_STABLE = "symmetry-breaking stable"
NEUTRAL = "neutral"

UNSTABLE_TAGS = (REACTION, IN_SUBSPACE_UNSTABLE, BREAKING_UNSTABLE)


@dataclass(frozen=True)
class Mode:
    """One (possibly degenerate) eigenvalue group of the mass-weighted Hessian."""

    eigenvalue: float            # mass-weighted Hessian eigenvalue mu
    multiplicity: int
    vectors: np.ndarray          # configuration-space eigenvectors, one per column
    classification: str
    lyapunov: float | None       # sqrt(-mu) for unstable modes, else None


@dataclass(frozen=True)
class StabilityReport:
    subspace: str                # "c3v" | "c2v"
    scope: str                   # "subspace" | "full"
    field_value: float
    modes: tuple                 # Mode instances, eigenvalues ascending
    coord_labels: tuple          # meaning of vector components

    @property
    def eigenvalues(self):
        """List of (eigenvalue, multiplicity) pairs."""
        return [(m.eigenvalue, m.multiplicity) for m in self.modes]

    @property
    def lyapunov_exponents(self):
        return {m.classification: m.lyapunov for m in self.modes if m.lyapunov is not None}

    def modes_by(self, classification):
        return [m for m in self.modes if m.classification == classification]

    @property
    def reaction_exponent(self) -> float:
        r = self.modes_by(REACTION)
        if len(r) != 1 or r[0].multiplicity != 1:
            raise TrionError("report does not contain exactly one reaction mode")
        return r[0].lyapunov

    @property
    def wannier_alpha(self):
        try:
            return wannier_exponent(self)
        except TrionError:
            return None

    def as_dict(self):
        return {
            "subspace": self.subspace,
            "scope": self.scope,
            "field": self.field_value,
            "modes": [
                {
                    "eigenvalue": m.eigenvalue,
                    "multiplicity": m.multiplicity,
                    "classification": m.classification,
                    "lyapunov": m.lyapunov,
                    "vectors": m.vectors.T.tolist(),
                }
                for m in self.modes
            ],
            "coord_labels": list(self.coord_labels),
            "wannier_alpha": self.wannier_alpha,
        }


# ---------------------------------------------------------------------------
# Hessians
# ---------------------------------------------------------------------------

def full_hessian(positions: np.ndarray, nuclear_charge: float) -> np.ndarray:
    """Analytic Hessian of the Coulomb + field potential in Cartesian coordinates.

    ``positions`` has shape (n, 3); the result is (3n, 3n).  The field term is
    linear and contributes nothing.
    """
    pos = np.asarray(positions, dtype=float)
    n = len(pos)
    h = np.zeros((3 * n, 3 * n))
    eye = np.eye(3)
    for i in range(n):
        r = np.linalg.norm(pos[i])
        if r == 0:
            raise DomainError("electron at the nucleus")
        blk = nuclear_charge * (eye / r ** 3 - 3.0 * np.outer(pos[i], pos[i]) / r ** 5)
        h[3 * i:3 * i + 3, 3 * i:3 * i + 3] += blk
    for i in range(n):
        for j in range(i + 1, n):
            d = pos[i] - pos[j]
            dn = np.linalg.norm(d)
            if dn == 0:
                raise DomainError("coinciding electrons")
            blk = (3.0 * np.outer(d, d) - dn ** 2 * eye) / dn ** 5
            h[3 * i:3 * i + 3, 3 * i:3 * i + 3] += blk
            h[3 * j:3 * j + 3, 3 * j:3 * j + 3] += blk
            h[3 * i:3 * i + 3, 3 * j:3 * j + 3] -= blk
            h[3 * j:3 * j + 3, 3 * i:3 * i + 3] -= blk
    return h


def hessian(potential: str, point, nuclear_charge: float = 3.0) -> np.ndarray:
    """Analytic second derivatives of a named potential at a configuration point.

    ``potential`` is "c3v" (point = (R, Z)), "c2v" (point = (x, z, z1)) or
    "full" (point = positions of shape (n, 3)).  Field couplings are linear in
    the coordinates, so no field value is needed.
    """
    if potential == "c3v":
        R, Z = point
        if R <= 0:
            raise DomainError("R must be positive")
        return c3v_hessian(R, Z)
    if potential == "c2v":
        x, z, z1 = point
        if x == 0 or z1 == 0:
            raise DomainError("singular C2v configuration")
        return c2v_hessian(x, z, z1)
    if potential == "full":
        return full_hessian(point, nuclear_charge)
    raise DomainError(f"unknown potential {potential!r}")


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def rotation_generator(positions: np.ndarray) -> np.ndarray:
    """Unit tangent of a rigid rotation about the field (z) axis, flattened."""
    pos = np.asarray(positions, dtype=float)
    g = np.zeros_like(pos)
    g[:, 0] = -pos[:, 1]
    g[:, 1] = pos[:, 0]
    g = g.ravel()
    n = np.linalg.norm(g)
    if n == 0:
        raise DomainError("configuration is rotation-invariant; generator vanishes")
    return g / n


def _group_eigenvalues(mu: np.ndarray, rtol: float):
    """Indices of eigenvalue groups; values within rtol*scale are degenerate."""
    scale = max(1.0, float(np.max(np.abs(mu))))
    groups = [[0]]
    for k in range(1, len(mu)):
        if abs(mu[k] - mu[groups[-1][0]]) <= rtol * scale:
            groups[-1].append(k)
        else:
            groups.append([k])
    return groups


def subspace_tangent(subspace: str) -> np.ndarray:
    """Embedding Jacobian d(embed)/d(subspace coords) as Cartesian columns (9 x d)."""
    if subspace == "c3v":
        j = np.zeros((9, 2))
        for i, ang in enumerate(C3V_ANGLES):
            j[3 * i + 0, 0] = math.cos(ang)
            j[3 * i + 1, 0] = math.sin(ang)
            j[3 * i + 2, 1] = 1.0
        return j
    if subspace == "c2v":
        j = np.zeros((9, 3))
        j[3, 0] = 1.0    # electron 2, +x
        j[6, 0] = -1.0   # electron 3, -x
        j[5, 1] = 1.0    # electron 2, z
        j[8, 1] = 1.0    # electron 3, z
        j[2, 2] = 1.0    # electron 1, z
        return j
    raise DomainError(f"unknown subspace {subspace!r}")


def subspace_angle(vectors: np.ndarray, candidate: np.ndarray) -> float:
    """Angle (rad) between ``candidate`` and the span of the columns of ``vectors``."""
    q, _ = np.linalg.qr(vectors)
    v = np.asarray(candidate, float)
    v = v / np.linalg.norm(v)
    proj = q @ (q.T @ v)
    c = min(1.0, np.linalg.norm(proj))
    return math.acos(c)


def normalize_mode(vector: np.ndarray, component: int) -> np.ndarray:
    """Rescale a mode so the designated component equals 1 (paper-style display)."""
    v = np.asarray(vector, float)
    if v[component] == 0:
        raise DomainError("cannot normalize on a vanishing component")
    return v / v[component]


def cylindrical_components(vec9: np.ndarray, angles=C3V_ANGLES) -> np.ndarray:
    """Per-electron (radial, tangential, z) components of a 9-dim Cartesian vector."""
    v = np.asarray(vec9, float).reshape(3, 3)
    out = np.empty((3, 3))
    for i, ang in enumerate(angles):
        c, s = math.cos(ang), math.sin(ang)
        out[i, 0] = v[i, 0] * c + v[i, 1] * s
        out[i, 1] = -v[i, 0] * s + v[i, 1] * c
        out[i, 2] = v[i, 2]
    return out


# ---------------------------------------------------------------------------
# analyses
# ---------------------------------------------------------------------------

def _same_sign(values: np.ndarray) -> bool:
    v = values[np.abs(values) > 1e-8 * np.max(np.abs(values))]
    return bool(np.all(v > 0) or np.all(v < 0))


def _classify_group(mu, vectors, in_subspace, to_subspace_coords, zero_tol):
    """Tag one eigenvalue group; vectors are configuration-space columns."""
    if abs(mu) <= zero_tol:
        return NEUTRAL
    unstable = mu < 0
    if in_subspace:
        if not unstable:
            return IN_SUBSPACE_STABLE
        q = to_subspace_coords(vectors[:, 0])
        return REACTION if _same_sign(q) else IN_SUBSPACE_UNSTABLE
    return BREAKING_UNSTABLE if unstable else BREAKING_STABLE


def _build_report(subspace, scope, field_value, mu, config_vectors,
                  in_subspace_fn, to_subspace_coords, coord_labels,
                  degeneracy_rtol, zero_tol):
    order = np.argsort(mu)
    mu = mu[order]
    config_vectors = config_vectors[:, order]
    modes = []
    for grp in _group_eigenvalues(mu, degeneracy_rtol):
        vecs = config_vectors[:, grp]
        val = float(np.mean(mu[grp]))
        tag = _classify_group(val, vecs, in_subspace_fn(vecs), to_subspace_coords,
                              zero_tol)
        lam = math.sqrt(-val) if (val < -zero_tol) else None
        modes.append(Mode(eigenvalue=val, multiplicity=len(grp), vectors=vecs,
                          classification=tag, lyapunov=lam))
    return StabilityReport(subspace=subspace, scope=scope, field_value=field_value,
                           modes=tuple(modes), coord_labels=coord_labels)


def analyze_subspace(saddle: SaddleInfo, degeneracy_rtol: float = DEGENERACY_RTOL) -> StabilityReport:
    """Stability within the saddle's own symmetry subspace.

    Eigenvectors are returned in configuration space (u = M^(-1/2) v with v
    the unit mass-weighted eigenvector).
    """
    if saddle.kind == "c3v" or saddle.kind == "ring":
        mass = MASS_C3V if saddle.kind == "c3v" else np.array([float(saddle.n_electrons)] * 2)
        if saddle.kind == "c3v":
            h = c3v_hessian(*saddle.coords)
        else:
            from .saddles import ring_hessian
            h = ring_hessian(saddle.coords[0], saddle.coords[1], saddle.n_electrons)
        labels = ("R", "Z")
        sub = "c3v"
    elif saddle.kind == "c2v":
        mass = MASS_C2V
        h = c2v_hessian(*saddle.coords)
        labels = ("x", "z", "z1")
        sub = "c2v"
    else:
        raise DomainError(f"unknown saddle kind {saddle.kind}")
    inv_sqrt_m = 1.0 / np.sqrt(mass)
    w = h * np.outer(inv_sqrt_m, inv_sqrt_m)
    mu, v = np.linalg.eigh(w)
    config = inv_sqrt_m[:, None] * v
    # orient so the outward escape direction reads positive
    for k in range(config.shape[1]):
        if np.sum(config[:, k]) < 0:
            config[:, k] = -config[:, k]
    zero_tol = 1e-8 * max(1.0, float(np.max(np.abs(mu))))
    return _build_report(sub, "subspace", saddle.field_value, mu, config,
                         in_subspace_fn=lambda vecs: True,
                         to_subspace_coords=lambda v9: v9,
                         coord_labels=labels,
                         degeneracy_rtol=degeneracy_rtol, zero_tol=zero_tol)


def analyze_fullspace(saddle: SaddleInfo, degeneracy_rtol: float = DEGENERACY_RTOL) -> StabilityReport:
    """Stability of the embedded saddle in the full configuration space.

    C3v works in the 8-dimensional complement of the rigid rotation (no
    neutral mode is reported); C2v keeps all 9 Cartesian coordinates and
    reports the rotation as an explicit zero mode.  Unit electron masses make
    the Cartesian Hessian already mass-weighted.
    """
    if saddle.kind not in ("c3v", "c2v"):
        raise DomainError(f"full-space analysis supports c3v/c2v saddles, not {saddle.kind}")
    from .hamiltonians import C2vState, C3vState

    if saddle.kind == "c3v":
        state = C3vState(R=saddle.coord("R"), Z=saddle.coord("Z"), p_R=0.0, p_Z=0.0)
    else:
        x, z, z1 = saddle.coords
        sign = 1.0 if z1 > 0 else -1.0
        state = C2vState(x=x, z=sign * z, z1=sign * z1, p_x=0.0, p_z=0.0, p_z1=0.0)
    positions = embed(state).positions
    h9 = full_hessian(positions, nuclear_charge=3.0)

    j = subspace_tangent(saddle.kind)
    jhat, _ = np.linalg.qr(j)

    def in_subspace_fn(vecs):
        frac = np.linalg.norm(jhat.T @ vecs, axis=0) / np.linalg.norm(vecs, axis=0)
        return bool(np.all(frac > 1.0 - 1e-6))

    def to_subspace_coords(v9):
        # least-squares subspace coordinates of an in-subspace Cartesian vector
        return np.linalg.lstsq(j, v9, rcond=None)[0]

    labels = tuple(f"{c}{i}" for i in (1, 2, 3) for c in ("x", "y", "z"))

    if saddle.kind == "c3v":
        g = rotation_generator(positions)
        if np.max(np.abs(h9 @ g)) > 1e-9 * np.max(np.abs(h9)):
            raise TrionError("rotation direction is not a null direction of the Hessian")
        import scipy.linalg
        b = scipy.linalg.null_space(g[None, :])           # 9 x 8 orthonormal
        w = b.T @ h9 @ b
        mu, u = np.linalg.eigh(w)
        config = b @ u
        zero_tol = 1e-10 * max(1.0, float(np.max(np.abs(mu))))
    else:
        mu, config = np.linalg.eigh(h9)
        zero_tol = 1e-8 * max(1.0, float(np.max(np.abs(mu))))

    return _build_report(saddle.kind, "full", saddle.field_value, mu, config.copy(),
                         in_subspace_fn=in_subspace_fn,
                         to_subspace_coords=to_subspace_coords,
                         coord_labels=labels,
                         degeneracy_rtol=degeneracy_rtol, zero_tol=zero_tol)


def wannier_exponent(report: StabilityReport) -> float:
    """Generalized threshold exponent alpha = (sum of non-reaction unstable
    exponents) / (reaction exponent), multiplicities counted."""
    reaction = report.modes_by(REACTION)
    if len(reaction) != 1 or reaction[0].multiplicity != 1:
        raise TrionError("need exactly one reaction mode to form the threshold exponent")
    others = [m for m in report.modes
              if m.classification in (IN_SUBSPACE_UNSTABLE, BREAKING_UNSTABLE)]
    if not others:
        raise TrionError("no non-reaction unstable modes in report")
    total = sum(m.lyapunov * m.multiplicity for m in others)
    return total / reaction[0].lyapunov


@dataclass(frozen=True)
class TimescaleReport:
    scaled_period: float
    inverse_exponents: tuple     # (classification, lyapunov, 1/lyapunov) per unstable mode


def timescale_report(report: StabilityReport, params: FieldParams) -> TimescaleReport:
    """Field period in scaled units against the saddle crossing/departure times."""
    omega_scaled = scale_frequency(params.omega, params.F, "to-scaled")
    inv = tuple((m.classification, m.lyapunov, 1.0 / m.lyapunov)
                for m in report.modes if m.lyapunov is not None)
    return TimescaleReport(scaled_period=2.0 * math.pi / omega_scaled,
                           inverse_exponents=inv)


def standard_exponents(field_value: float = 1.0) -> dict:
    """Convenience bundle: both saddles analyzed at a static field.

    Returns reaction and symmetry-breaking exponents plus both threshold
    exponents, all at the given field value.
    """
    rep3 = analyze_fullspace(saddle_c3v(field_value))
    rep2 = analyze_fullspace(saddle_c2v(field_value))
    out = {
        "lambda_r": rep3.reaction_exponent,
        "nu_a": rep3.modes_by(BREAKING_UNSTABLE)[0].lyapunov,
        "alpha3": wannier_exponent(rep3),
        "lambda_2r": rep2.reaction_exponent,
        "nu_2a": rep2.modes_by(IN_SUBSPACE_UNSTABLE)[0].lyapunov,
        "alpha2": wannier_exponent(rep2),
    }
    breaking2 = sorted(m.lyapunov for m in rep2.modes_by(BREAKING_UNSTABLE))
    out["nu_2b"], out["nu_2c"] = breaking2[0], breaking2[-1]
    return out
