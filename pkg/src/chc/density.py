"""Atomic Patterson-Sullivan densities and a finite-difference Levi form check.

The density at s is approximated by unit masses at the orbit points gamma o,
weighted by exp(-s d(o, gamma o)) / Phi(s).  Its total mass seen from x is

    mass_at(x) = sum exp(-s d(x, gamma o)) / Phi(s),

and f(x) = -ln mass_at(x).  The complex Hessian of f is probed through

    2 i dd^c f(v, Jv) = D^2 f(v, v) + D^2 f(Jv, Jv),

with second derivatives taken along unit-speed geodesics.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import logsumexp

from .exponent import OrbitCloud
from .geometry import (
    BALL,
    GeometryError,
    HermitianModel,
    ball_boost,
    ball_coords,
    ball_point,
    convert,
    distances,
    point_kind,
    q,
    require_interior,
)

DEFAULT_OFFSET = 0.05
DEFAULT_STEP = 1e-3
# stencil points must stay this close to the probe point
STENCIL_LIMIT = 0.5
LEVI_TOLERANCE = 0.15


@dataclass(frozen=True)
class DensityApprox:
    cloud: OrbitCloud
    s: float
    log_phi: float
    weights: np.ndarray = field(repr=False)

    @property
    def model(self) -> HermitianModel:
        return self.cloud.model

    @property
    def phi(self) -> float:
        return float(np.exp(self.log_phi))

    @property
    def hoo(self) -> float:
        return float(q(self.model, self.cloud.basepoint))

    def outer_mask(self) -> np.ndarray:
        """Atoms outside the largest word ball the cloud is known to contain, shrunk by one layer.

        If gamma is a generator, gamma^-1 maps the complement of this set
        back into the cloud.
        """
        full = int(self.cloud.length.max())
        if self.cloud.capped:
            full -= 1
        return self.cloud.length >= full


def build_density(cloud: OrbitCloud, s: float | None = None, delta_hat: float | None = None,
                  offset: float = DEFAULT_OFFSET) -> DensityApprox:
    """Atomic density at exponent s, by default delta_hat + offset."""
    if s is None:
        if delta_hat is None:
            raise ValueError("give either s or delta_hat")
        s = delta_hat + offset
    if not s > 0:
        raise ValueError("s must be positive")
    logw = -s * cloud.displacement
    log_phi = float(logsumexp(logw))
    return DensityApprox(cloud, float(s), log_phi, np.exp(logw - log_phi))


def _log_atoms(density: DensityApprox, x) -> np.ndarray:
    x = require_interior(density.model, x, "x")
    d = distances(density.model, x, density.cloud.points, hyy=density.hoo)
    return -density.s * d


def log_mass(density: DensityApprox, x) -> float:
    """f(x) = -ln mass_at(x)."""
    return float(density.log_phi - logsumexp(_log_atoms(density, x)))


def mass_at(density: DensityApprox, x) -> float:
    return float(np.exp(-log_mass(density, x)))


def weight_share(density: DensityApprox, x, mask) -> float:
    """Fraction of mass_at(x) carried by the atoms selected by mask."""
    la = _log_atoms(density, x)
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        return 0.0
    return float(np.exp(logsumexp(la[mask]) - logsumexp(la)))


def truncation_bound(*shares: float) -> float:
    """-ln(1 - max share): how far truncation can move f, given the shares at the points involved."""
    worst = max(shares)
    if worst >= 1.0:
        return float("inf")
    return float(-np.log1p(-worst))


def invariance_bound(density: DensityApprox, x, y) -> float:
    """Bound on |f(gamma x) - f(x)| for a generator gamma with y = gamma x."""
    mask = density.outer_mask()
    return truncation_bound(weight_share(density, x, mask), weight_share(density, y, mask))


# ---------------------------------------------------------------------------
# geodesics and probes


def _frame(model: HermitianModel, x) -> tuple[np.ndarray, np.ndarray]:
    """Transvection B (ball basis) with B 0 = x, and its inverse."""
    z = ball_coords(model, require_interior(model, x, "x"))
    B = ball_boost(z)
    return B, ball_boost(-z)


def _from_origin(model: HermitianModel, B: np.ndarray, u: np.ndarray, t: float) -> np.ndarray:
    p = B @ ball_point(np.tanh(t) * u)
    return convert(p, model.with_basis(BALL), model)


def direction_at(model: HermitianModel, x, y) -> np.ndarray:
    """Unit vector at the ball origin pointing, after moving x to 0, toward y.

    y may also be a boundary point, which fixes the geodesic ray toward it.
    """
    y = np.asarray(y, dtype=complex)
    if point_kind(model, y) == "exterior":
        raise GeometryError("direction point lies outside the ball")
    _, Binv = _frame(model, x)
    w = Binv @ convert(y, model, model.with_basis(BALL))
    u = w[1:] / w[0]
    r = np.linalg.norm(u)
    if not r > 1e-14:
        raise GeometryError("direction point coincides with x")
    return u / r


def geodesic_step(model: HermitianModel, x, y, t: float) -> np.ndarray:
    """Move x by arclength t along the geodesic toward the point y."""
    u = direction_at(model, x, y)
    B, _ = _frame(model, x)
    return _from_origin(model, B, u, t)


@dataclass(frozen=True)
class LeviProbe:
    """Probe point x with a unit direction u, expressed at the ball origin after moving x to 0.

    J acts there as multiplication by i.
    """

    model: HermitianModel
    x: np.ndarray
    u: np.ndarray
    h: float = DEFAULT_STEP

    def __post_init__(self):
        u = np.atleast_1d(np.asarray(self.u, dtype=complex))
        r = np.linalg.norm(u)
        if not r > 0:
            raise GeometryError("zero probe direction")
        object.__setattr__(self, "u", u / r)
        object.__setattr__(self, "x", require_interior(self.model, self.x, "probe point"))
        if not 0 < self.h < STENCIL_LIMIT:
            raise ValueError(f"stencil step must lie in (0, {STENCIL_LIMIT})")

    @classmethod
    def toward(cls, model: HermitianModel, x, y, h: float = DEFAULT_STEP) -> "LeviProbe":
        return cls(model, x, direction_at(model, x, y), h)

    def point(self, t: float, rotated: bool = False) -> np.ndarray:
        """exp_x(t v), or exp_x(t Jv) when rotated."""
        B, _ = _frame(self.model, self.x)
        u = 1j * self.u if rotated else self.u
        return _from_origin(self.model, B, u, t)

    def stencil(self) -> list[np.ndarray]:
        h = self.h
        return [self.point(h), self.point(-h), self.point(h, True), self.point(-h, True)]


def levi_estimate(f: Callable[[np.ndarray], float], probe: LeviProbe) -> float:
    """[f(+hv) + f(-hv) + f(+hJv) + f(-hJv) - 4 f(x)] / (2 h^2)."""
    f0 = f(probe.x)
    total = sum(f(p) for p in probe.stencil())
    return float((total - 4.0 * f0) / (2.0 * probe.h ** 2))


def levi_lower_bound(density: DensityApprox, probe: LeviProbe) -> float:
    if probe.model != density.model:
        raise ValueError("probe and density live in different models")
    return levi_estimate(lambda p: log_mass(density, p), probe)


def orthogonality_defect(probe: LeviProbe, eps: float = 1e-4) -> float:
    """Largest first-order deviation of (v, Jv) from an orthonormal pair.

    Polarization: for orthonormal v, Jv the three points x, exp(eps v),
    exp(eps Jv) form a right isosceles triangle with legs eps.
    """
    m = probe.model
    pv, pj = probe.point(eps), probe.point(eps, True)
    legs = distances(m, probe.x, np.array([pv, pj]))
    hyp = distances(m, pv, pj[None, :])[0]
    return float(max(abs(legs[0] / eps - 1), abs(legs[1] / eps - 1), abs(hyp ** 2 / (2 * eps ** 2) - 1)))


# ---------------------------------------------------------------------------
# probe grids


@dataclass
class ProbeRow:
    point: int
    direction: int
    coords: np.ndarray
    estimate: float
    threshold: float

    @property
    def passed(self) -> bool:
        return self.estimate >= self.threshold


@dataclass
class LeviReport:
    delta_hat: float
    s: float
    threshold: float
    rows: list[ProbeRow]
    warnings: list[str] = field(default_factory=list)

    @property
    def minimum(self) -> float:
        return min(r.estimate for r in self.rows)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["point", "direction", "coords", "levi", "threshold", "result"])
        for r in self.rows:
            coords = " ".join(f"{c.real:.9f}{c.imag:+.9f}j" for c in r.coords)
            w.writerow([r.point, r.direction, coords, f"{r.estimate:.9f}",
                        f"{r.threshold:.9f}", "pass" if r.passed else "fail"])
        return buf.getvalue()


def probe_grid(model: HermitianModel, basepoint, rng: np.random.Generator, points: int = 20,
               directions: int = 5, r_min: float = 0.3, r_max: float = 1.5,
               h: float = DEFAULT_STEP) -> list[list[LeviProbe]]:
    """Probe points at distances spread over [r_min, r_max] from the basepoint, random directions."""
    n = model.n
    B, _ = _frame(model, basepoint)
    grid = []
    for r in np.linspace(r_min, r_max, points):
        a = rng.normal(size=n) + 1j * rng.normal(size=n)
        x = _from_origin(model, B, a / np.linalg.norm(a), r)
        row = []
        for _ in range(directions):
            u = rng.normal(size=n) + 1j * rng.normal(size=n)
            row.append(LeviProbe(model, x, u, h))
        grid.append(row)
    return grid


def levi_threshold(delta_hat: float, tolerance: float = LEVI_TOLERANCE) -> float:
    return delta_hat * (1.0 - delta_hat / 2.0) - tolerance


def levi_check(density: DensityApprox, delta_hat: float, rng: np.random.Generator,
               points: int = 20, directions: int = 5, h: float = DEFAULT_STEP,
               tolerance: float = LEVI_TOLERANCE) -> LeviReport:
    threshold = levi_threshold(delta_hat, tolerance)
    warnings = []
    if len(density.cloud) < 2:
        warnings.append("degenerate cloud: a single atom")
    if delta_hat >= 2:
        warnings.append("delta_hat >= 2: the bound is vacuous")
    grid = probe_grid(density.model, density.cloud.basepoint, rng, points, directions, h=h)
    rows = []
    for i, probes in enumerate(grid):
        for j, probe in enumerate(probes):
            est = levi_lower_bound(density, probe)
            rows.append(ProbeRow(i, j, ball_coords(density.model, probe.x), est, threshold))
    return LeviReport(delta_hat, density.s, threshold, rows, warnings)
