"""Hermitian-form model of complex hyperbolic space.

Points of the ball are lines in C^{n+1} on which the form of signature (n, 1)
is negative.  Two bases are supported:

* ``"ball"``: q(z) = -|z_0|^2 + |z_1|^2 + ... + |z_n|^2, so that the affine
  chart z_0 = 1 is the unit ball;
* ``"siegel"``: the basis (f1, f2, e_1, ..., e_{n-1}) in which
  q(a f1 + b f2 + u) = 2 Re(a conj(b)) + |u|^2, with [f1] on the boundary.

The Hermitian form is linear in its first argument and conjugate-linear in
the second: h(v, w) = w^* H v.  Distances are normalized so that the
sectional curvature lies in [-4, -1]; on a complex line through the origin
of the ball, d(0, z) = artanh|z|.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

BALL = "ball"
SIEGEL = "siegel"

# |q(v)| / |v|^2 below this is treated as boundary.
BOUNDARY_TOL = 1e-9
# relative tolerance on eigenvalue moduli and numerical ranks in classify()
EIGEN_TOL = 1e-8
# eigenvalues closer than this (relative) are clustered before testing moduli;
# perturbed Jordan blocks spread their eigenvalues by ~eps**(1/3).
CLUSTER_TOL = 1e-4
# canonical keys: entries within this factor of the largest modulus tie
PIVOT_TIE = 1e-6
KEY_GRID = 1e-9


class GeometryError(ValueError):
    """Raised for points or matrices outside the domain of an operation."""


@dataclass(frozen=True)
class HermitianModel:
    """Complex hyperbolic n-space in the ball or Siegel basis."""

    n: int
    basis: str = BALL

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"dimension must be >= 1, got {self.n}")
        if self.basis not in (BALL, SIEGEL):
            raise ValueError(f"unknown basis {self.basis!r}")

    @property
    def size(self) -> int:
        return self.n + 1

    @property
    def gram(self) -> np.ndarray:
        return gram_matrix(self.n, self.basis)

    @property
    def to_ball(self) -> np.ndarray:
        """Matrix whose columns are this basis written in ball coordinates."""
        if self.basis == BALL:
            return np.eye(self.size, dtype=complex)
        return siegel_change_of_basis(self.n)

    @property
    def from_ball(self) -> np.ndarray:
        if self.basis == BALL:
            return np.eye(self.size, dtype=complex)
        return np.linalg.inv(siegel_change_of_basis(self.n))

    @property
    def origin(self) -> np.ndarray:
        """Lift of the ball origin; in the Siegel chart this is (a, u) = (-1, 0)."""
        o = np.zeros(self.size, dtype=complex)
        if self.basis == BALL:
            o[0] = 1.0
        else:
            o[0], o[1] = -1.0, 1.0
        return o

    def with_basis(self, basis: str) -> "HermitianModel":
        return HermitianModel(self.n, basis)


def gram_matrix(n: int, basis: str = BALL) -> np.ndarray:
    H = np.eye(n + 1, dtype=complex)
    if basis == BALL:
        H[0, 0] = -1.0
    elif basis == SIEGEL:
        H[0, 0] = H[1, 1] = 0.0
        H[0, 1] = H[1, 0] = 1.0
    else:
        raise ValueError(f"unknown basis {basis!r}")
    return H


def siegel_change_of_basis(n: int) -> np.ndarray:
    """Columns f1, f2, e_1, ..., e_{n-1} expressed in the ball basis.

    C^* H_ball C = H_siegel exactly (up to rounding of 1/sqrt(2)).
    """
    C = np.eye(n + 1, dtype=complex)
    r = 1.0 / np.sqrt(2.0)
    C[:2, :2] = [[r, -r], [r, r]]
    return C


def convert(v: np.ndarray, source: HermitianModel, target: HermitianModel) -> np.ndarray:
    """Re-express lifts (last axis) from one basis in another."""
    if source.n != target.n:
        raise ValueError("models have different dimensions")
    if source.basis == target.basis:
        return np.asarray(v, dtype=complex)
    M = target.from_ball @ source.to_ball
    return np.asarray(v, dtype=complex) @ M.T


def convert_matrix(g: np.ndarray, source: HermitianModel, target: HermitianModel) -> np.ndarray:
    if source.basis == target.basis:
        return np.asarray(g, dtype=complex)
    M = target.from_ball @ source.to_ball
    return M @ g @ np.linalg.inv(M)


# ---------------------------------------------------------------------------
# the form and points


def form_eval(model: HermitianModel, v, w) -> complex | np.ndarray:
    """h(v, w) = w^* H v, broadcasting over leading axes."""
    v = np.asarray(v, dtype=complex)
    w = np.asarray(w, dtype=complex)
    if v.shape[-1] != model.size or w.shape[-1] != model.size:
        raise ValueError(
            f"expected vectors of length {model.size}, got {v.shape[-1]} and {w.shape[-1]}"
        )
    H = model.gram
    out = np.einsum("...i,ij,...j->...", np.conj(w), H, v)
    return out[()] if out.ndim == 0 else out


def q(model: HermitianModel, v) -> float | np.ndarray:
    return np.real(form_eval(model, v, v))


def point_kind(model: HermitianModel, v) -> str:
    """'interior', 'boundary' or 'exterior' according to the sign of q."""
    v = np.asarray(v, dtype=complex)
    norm2 = np.vdot(v, v).real
    if norm2 == 0:
        raise GeometryError("the zero vector is not a projective point")
    r = q(model, v) / norm2
    if abs(r) < BOUNDARY_TOL:
        return "boundary"
    return "interior" if r < 0 else "exterior"


def require_interior(model: HermitianModel, v, what: str = "point") -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    kind = point_kind(model, v)
    if kind != "interior":
        raise GeometryError(f"{what} is {kind}, expected an interior point")
    return v


def ball_point(z) -> np.ndarray:
    """Lift [1 : z] of a point z of the unit ball (ball basis)."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    return np.concatenate([[1.0 + 0j], z])


def ball_coords(model: HermitianModel, v) -> np.ndarray:
    """Affine ball coordinates z = v[1:] / v[0] (after moving to the ball basis)."""
    w = convert(v, model, model.with_basis(BALL))
    return w[..., 1:] / w[..., :1]


# ---------------------------------------------------------------------------
# distance


def _arccosh_sqrt(c2):
    # d = log(sqrt(c2) + sqrt(c2 - 1)); stays finite for huge c2
    c2 = np.maximum(c2, 1.0)
    return np.log(np.sqrt(c2) + np.sqrt(c2 - 1.0))


def distances(model: HermitianModel, x, Y, hyy=None) -> np.ndarray:
    """Distances from the point x to each row of Y.

    ``hyy`` may supply the known values of h(y, y) (for orbit points g.o this
    is h(o, o) exactly, which avoids cancellation in far lifts).  Pairs closer
    than arccosh(2) are recomputed through the h-orthogonal projection of y
    off x, which keeps full relative accuracy as y -> x.
    """
    x = np.asarray(x, dtype=complex)
    Y = np.atleast_2d(np.asarray(Y, dtype=complex))
    hxx = q(model, x)
    hyx = form_eval(model, Y, x)
    if hyy is None:
        hyy = q(model, Y)
    hyy = np.broadcast_to(np.asarray(hyy, dtype=float), hyx.shape)
    c2 = np.abs(hyx) ** 2 / (hxx * hyy)
    d = _arccosh_sqrt(c2)
    near = c2 < 4.0
    if np.any(near):
        Yn = Y[near]
        W = Yn - (hyx[near] / hxx)[:, None] * x[None, :]
        s2 = -q(model, W) / q(model, Yn)
        d[near] = np.arcsinh(np.sqrt(np.maximum(s2, 0.0)))
    return d


def distance(model: HermitianModel, x, y) -> float:
    """Complex hyperbolic distance between two interior points."""
    x = require_interior(model, x, "x")
    y = require_interior(model, y, "y")
    return float(distances(model, x, y[None, :])[0])


def cosh2_distance(model: HermitianModel, x, y) -> float:
    """The raw ratio h(x,y)h(y,x) / (h(x,x)h(y,y))."""
    hxy = form_eval(model, x, y)
    return float(abs(hxy) ** 2 / (q(model, x) * q(model, y)))


# ---------------------------------------------------------------------------
# Siegel chart and horoballs


class SiegelPoint(NamedTuple):
    a: complex
    u: np.ndarray

    @property
    def height(self) -> float:
        """2 Re(a) + |u|^2, negative on the domain."""
        u = np.asarray(self.u, dtype=complex)
        return 2.0 * float(np.real(self.a)) + float(np.vdot(u, u).real)


def siegel_point(a, u=()) -> SiegelPoint:
    return SiegelPoint(complex(a), np.atleast_1d(np.asarray(u, dtype=complex)))


def siegel_to_projective(model: HermitianModel, p: SiegelPoint) -> np.ndarray:
    """(a, u) -> [a f1 + f2 + u], returned as a lift in ``model``'s basis."""
    u = np.asarray(p.u, dtype=complex).reshape(-1)
    if u.size != model.n - 1:
        raise ValueError(f"u must have length {model.n - 1}, got {u.size}")
    if not p.height < 0:
        raise GeometryError(f"(a, u) is not in the Siegel domain: 2Re(a)+|u|^2 = {p.height}")
    v = np.concatenate([[p.a, 1.0], u]).astype(complex)
    return convert(v, model.with_basis(SIEGEL), model)


def projective_to_siegel(model: HermitianModel, v) -> SiegelPoint:
    w = convert(v, model, model.with_basis(SIEGEL))
    if abs(w[1]) <= BOUNDARY_TOL * np.linalg.norm(w):
        raise GeometryError("point has no f2 component; it is [f1] or not interior")
    w = w / w[1]
    p = SiegelPoint(complex(w[0]), w[2:].copy())
    if not p.height < 0:
        raise GeometryError(f"point is not interior: 2Re(a)+|u|^2 = {p.height}")
    return p


def busemann_siegel(p: SiegelPoint) -> float:
    """Busemann function at [f1] vanishing at (-1, 0).

    b(a, u) = 1/2 ln(-2 / (2 Re a + |u|^2)).
    """
    s = p.height
    if not s < 0:
        raise GeometryError("Busemann function is only defined on the Siegel domain")
    return 0.5 * float(np.log(-2.0 / s))


def busemann_point(model: HermitianModel, v) -> float:
    return busemann_siegel(projective_to_siegel(model, v))


def horoball_translate(n: int, lam: float, mu: float) -> np.ndarray:
    """Siegel-basis matrix of L_t, t = exp(-2 lam) - exp(-2 mu).

    L_t maps the horoball {b < lam} at [f1] onto {b < mu} and commutes with
    the stabilizer U(n-1) x N of [f1].  It is a biholomorphism of CP^n but
    not an isometry of the ball (it does not preserve the form), so a plain
    matrix is returned.
    """
    L = np.eye(n + 1, dtype=complex)
    L[0, 1] = np.exp(-2.0 * lam) - np.exp(-2.0 * mu)
    return L


# ---------------------------------------------------------------------------
# isometries


class IsometryClass(enum.Enum):
    IDENTITY = "identity"
    ELLIPTIC = "elliptic"
    PARABOLIC = "parabolic"
    LOXODROMIC = "loxodromic"

    def __str__(self):
        return self.value


def form_defect(model: HermitianModel, g: np.ndarray) -> float:
    """||g^* H g - H|| relative to ||g||^2."""
    H = model.gram
    g = np.asarray(g, dtype=complex)
    return float(np.linalg.norm(g.conj().T @ H @ g - H) / max(1.0, np.linalg.norm(g, 2) ** 2))


def unit_det(g: np.ndarray) -> np.ndarray:
    """Rescale g so that |det g| = 1."""
    g = np.asarray(g, dtype=complex)
    d = abs(np.linalg.det(g))
    if d == 0 or not np.isfinite(d):
        raise GeometryError("singular matrix")
    return g / d ** (1.0 / g.shape[0])


@dataclass(frozen=True, eq=False)
class Isometry:
    """An element of PU(n,1), stored as a form-preserving matrix with |det| = 1.

    The stored matrix is only defined up to a unit scalar; use ``key()`` to
    compare elements of PU(n, 1).
    """

    matrix: np.ndarray
    model: HermitianModel

    def __post_init__(self):
        g = np.asarray(self.matrix, dtype=complex)
        if g.shape != (self.model.size, self.model.size):
            raise GeometryError(f"expected a {self.model.size}x{self.model.size} matrix, got {g.shape}")
        g = unit_det(g)
        defect = form_defect(self.model, g)
        if defect > 1e-8:
            raise GeometryError(f"matrix does not preserve the Hermitian form (defect {defect:.2e})")
        object.__setattr__(self, "matrix", g)

    @classmethod
    def identity(cls, model: HermitianModel) -> "Isometry":
        return cls(np.eye(model.size, dtype=complex), model)

    def __matmul__(self, other):
        if isinstance(other, Isometry):
            return Isometry(self.matrix @ other.matrix, self.model)
        return self.matrix @ np.asarray(other, dtype=complex)

    def inverse(self) -> "Isometry":
        # g^{-1} = H^{-1} g^* H for form-preserving g
        H = self.model.gram
        return Isometry(np.linalg.solve(H, self.matrix.conj().T @ H), self.model)

    def apply(self, v) -> np.ndarray:
        return self.matrix @ np.asarray(v, dtype=complex)

    def in_basis(self, basis: str) -> "Isometry":
        target = self.model.with_basis(basis)
        return Isometry(convert_matrix(self.matrix, self.model, target), target)

    def key(self) -> bytes:
        return canonical_keys(self.matrix[None])[0]

    def classify(self) -> IsometryClass:
        return classify(self)


def canonical_form(mats: np.ndarray, normalize: bool = True) -> np.ndarray:
    """Representatives of matrices up to scalar: |det| = 1 and a real-positive pivot.

    The pivot is the first entry (row-major) whose modulus is within a factor
    1 - 1e-6 of the largest one.  Only the phase is removed; dividing by the
    pivot's modulus as well would erase the difference between powers of a
    loxodromic element.  Pass ``normalize=False`` for products of unit
    determinant matrices, whose numerical determinant is unreliable once the
    entries are large.
    """
    mats = np.asarray(mats, dtype=complex)
    if normalize:
        m = mats.shape[-1]
        det = np.abs(np.linalg.det(mats))
        mats = mats / (det ** (1.0 / m))[:, None, None]
    flat = mats.reshape(mats.shape[0], -1)
    mod = np.abs(flat)
    top = mod.max(axis=1, keepdims=True)
    pivot_idx = np.argmax(mod >= (1.0 - PIVOT_TIE) * top, axis=1)
    pivot = flat[np.arange(flat.shape[0]), pivot_idx]
    phase = np.conj(pivot) / np.abs(pivot)
    return (flat * phase[:, None]).reshape(mats.shape)


def canonical_keys(mats: np.ndarray, normalize: bool = True) -> list[bytes]:
    """Hashable keys identifying matrices up to scalar.

    Entries of the canonical form are rounded on a grid of 1e-9 times the
    largest entry, and the log of that entry on a grid of 1e-9.
    """
    canon = canonical_form(mats, normalize)
    flat = canon.reshape(canon.shape[0], -1)
    top = np.abs(flat).max(axis=1, keepdims=True)
    grid = np.rint(flat.view(np.float64) / (top * KEY_GRID)).astype(np.int64)
    # overall size, so that powers of a loxodromic element stay apart
    size = np.rint(np.log(top) / KEY_GRID).astype(np.int64)
    grid = np.concatenate([size, grid], axis=1)
    raw = grid.tobytes()
    w = grid.shape[1] * 8
    return [raw[i * w:(i + 1) * w] for i in range(grid.shape[0])]


def key_distance(g: np.ndarray, h: np.ndarray) -> float:
    """Distance between canonical forms, relative to the larger entry."""
    a, b = canonical_form(np.array([g, h]))
    return float(np.abs(a - b).max() / max(np.abs(a).max(), np.abs(b).max()))


def classify(g: Isometry) -> IsometryClass:
    """Elliptic / parabolic / loxodromic / identity from the Jordan structure."""
    M = g.matrix
    m = M.shape[0]
    scale = np.linalg.norm(M, 2)
    lam0 = np.trace(M) / m
    if np.linalg.norm(M - lam0 * np.eye(m)) <= EIGEN_TOL * scale:
        return IsometryClass.IDENTITY

    eig = np.linalg.eigvals(M)
    clusters = _cluster(eig, CLUSTER_TOL * max(1.0, scale))
    for members in clusters:
        mu = eig[members].mean()
        if abs(abs(mu) - 1.0) > EIGEN_TOL * max(1.0, scale):
            return IsometryClass.LOXODROMIC
    for members in clusters:
        mu = eig[members].mean()
        sv = np.linalg.svd(M - mu * np.eye(m), compute_uv=False)
        rank = int(np.sum(sv > EIGEN_TOL * max(1.0, scale)))
        if rank > m - len(members):
            return IsometryClass.PARABOLIC
    return IsometryClass.ELLIPTIC


def _cluster(values: np.ndarray, tol: float) -> list[list[int]]:
    clusters: list[list[int]] = []
    for i, v in enumerate(values):
        for c in clusters:
            if any(abs(v - values[j]) <= tol for j in c):
                c.append(i)
                break
        else:
            clusters.append([i])
    return clusters


# ---------------------------------------------------------------------------
# transvections and random isometries (ball basis)


def ball_boost(z) -> np.ndarray:
    """Ball-basis transvection along the geodesic through 0 and z, sending 0 to z."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    r2 = float(np.vdot(z, z).real)
    if not r2 < 1.0:
        raise GeometryError("point is not inside the unit ball")
    m = z.size + 1
    B = np.eye(m, dtype=complex)
    if r2 == 0.0:
        return B
    gam = 1.0 / np.sqrt(1.0 - r2)
    B[0, 0] = gam
    B[0, 1:] = gam * z.conj()
    B[1:, 0] = gam * z
    B[1:, 1:] += (gam - 1.0) * np.outer(z, z.conj()) / r2
    return B


def ball_boost_inverse(z) -> np.ndarray:
    return ball_boost(-np.atleast_1d(np.asarray(z, dtype=complex)))


def random_unitary(m: int, rng: np.random.Generator) -> np.ndarray:
    X = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
    Q, R = np.linalg.qr(X)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def random_ball_point(n: int, rng: np.random.Generator, max_dist: float = 2.0) -> np.ndarray:
    """Ball-basis lift of a point at distance <= max_dist from the origin."""
    direction = rng.normal(size=n) + 1j * rng.normal(size=n)
    direction /= np.linalg.norm(direction)
    r = np.tanh(rng.uniform(0.0, max_dist))
    return ball_point(r * direction)


def random_isometry(model: HermitianModel, rng: np.random.Generator, max_dist: float = 2.0) -> Isometry:
    """A boost of length <= max_dist composed with a random element of U(1) x U(n)."""
    n = model.n
    K = np.zeros((n + 1, n + 1), dtype=complex)
    K[0, 0] = np.exp(1j * rng.uniform(0, 2 * np.pi))
    K[1:, 1:] = random_unitary(n, rng)
    z = ball_coords(model.with_basis(BALL), random_ball_point(n, rng, max_dist))
    g = ball_boost(z) @ K
    return Isometry(convert_matrix(g, model.with_basis(BALL), model), model)
