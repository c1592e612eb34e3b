"""Stabilizers of a boundary point: the group U(n-1) x N in Heisenberg coordinates.

An element (T, b, c) acts in the Siegel basis (f1, f2, e_1, ..., e_{n-1}) by

    [ 1   -|b|^2/2 + ic   -<T . , b> ]
    [ 0        1                0    ]
    [ 0        b                T    ]

with group law (T,b,c)(T',b',c') = (TT', b + Tb', c + c' + Im<b, Tb'>), where
<x, y> = sum x_i conj(y_i).  ``analyze`` runs the Stein decision procedure
for parabolic groups whose projection to U(n-1) x C^{n-1} is Abelian and
returns the exact critical exponent (2l + k)/2.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .geometry import SIEGEL, HermitianModel, Isometry

UNITARY_TOL = 1e-10
COMMUTE_TOL = 1e-10
# |1 - a_i(gamma)| at or below this puts the eigendirection in V1
EIGENVALUE_ONE_TOL = 1e-10
CENTER_TOL = 1e-10
RANK_TOL = 1e-9

Word = tuple[int, ...]


def hermitian(x, y) -> complex:
    """<x, y>, linear in x and conjugate-linear in y."""
    return complex(np.vdot(y, x))


@dataclass(frozen=True, eq=False)
class HeisenbergElement:
    T: np.ndarray
    b: np.ndarray
    c: float

    def __post_init__(self):
        T = np.atleast_2d(np.asarray(self.T, dtype=complex))
        b = np.atleast_1d(np.asarray(self.b, dtype=complex)).reshape(-1)
        if T.shape != (b.size, b.size):
            raise ValueError(f"T has shape {T.shape} but b has length {b.size}")
        if b.size == 0:
            raise ValueError("Heisenberg coordinates need n >= 2")
        err = np.linalg.norm(T.conj().T @ T - np.eye(b.size))
        if err > UNITARY_TOL:
            raise ValueError(f"T is not unitary (|T*T - I| = {err:.2e})")
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", float(self.c))

    @classmethod
    def identity(cls, m: int) -> "HeisenbergElement":
        return cls(np.eye(m), np.zeros(m), 0.0)

    @classmethod
    def translation(cls, b, c: float = 0.0) -> "HeisenbergElement":
        b = np.atleast_1d(np.asarray(b, dtype=complex))
        return cls(np.eye(b.size), b, c)

    @property
    def m(self) -> int:
        """Dimension n - 1 of the horizontal space C^{n-1}."""
        return self.b.size

    def __mul__(self, other: "HeisenbergElement") -> "HeisenbergElement":
        return compose(self, other)

    def inverse(self) -> "HeisenbergElement":
        return inverse(self)

    def matrix(self) -> np.ndarray:
        return embed(self)

    def isometry(self) -> Isometry:
        return Isometry(embed(self), HermitianModel(self.m + 1, SIEGEL))

    def is_unipotent(self, tol: float = UNITARY_TOL) -> bool:
        return bool(np.linalg.norm(self.T - np.eye(self.m)) <= tol)

    def is_central(self, tol: float = CENTER_TOL) -> bool:
        """T = Id and b = 0 (any c)."""
        return self.is_unipotent(tol) and bool(np.linalg.norm(self.b) <= tol)

    def distance_to(self, other: "HeisenbergElement") -> float:
        return float(
            max(
                np.linalg.norm(self.T - other.T),
                np.linalg.norm(self.b - other.b),
                abs(self.c - other.c),
            )
        )

    def isclose(self, other: "HeisenbergElement", tol: float = 1e-12) -> bool:
        return self.distance_to(other) <= tol

    def __repr__(self):
        return f"HeisenbergElement(T={self.T!r}, b={self.b!r}, c={self.c!r})"


def compose(g: HeisenbergElement, h: HeisenbergElement) -> HeisenbergElement:
    if g.m != h.m:
        raise ValueError(f"dimension mismatch: {g.m} vs {h.m}")
    Tb = g.T @ h.b
    return HeisenbergElement(g.T @ h.T, g.b + Tb, g.c + h.c + hermitian(g.b, Tb).imag)


def inverse(g: HeisenbergElement) -> HeisenbergElement:
    Tinv = g.T.conj().T
    return HeisenbergElement(Tinv, -(Tinv @ g.b), -g.c)


def commutator(g: HeisenbergElement, h: HeisenbergElement) -> HeisenbergElement:
    """[g, h] = g h g^-1 h^-1."""
    return compose(compose(g, h), compose(inverse(g), inverse(h)))


def embed(g: HeisenbergElement) -> np.ndarray:
    m = g.m
    M = np.zeros((m + 2, m + 2), dtype=complex)
    M[0, 0] = M[1, 1] = 1.0
    M[0, 1] = -0.5 * np.vdot(g.b, g.b).real + 1j * g.c
    M[0, 2:] = -(g.b.conj() @ g.T)
    M[2:, 1] = g.b
    M[2:, 2:] = g.T
    return M


def from_matrix(M: np.ndarray, tol: float = 1e-9) -> HeisenbergElement:
    """Read (T, b, c) off a Siegel-basis matrix of the stabilizer of [f1].

    The matrix is first scaled so that its (0, 0) entry is 1.
    """
    M = np.asarray(M, dtype=complex)
    if abs(M[0, 0]) < tol:
        raise ValueError("matrix does not fix [f1]")
    M = M / M[0, 0]
    g = HeisenbergElement(M[2:, 2:], M[2:, 1], M[0, 1].imag)
    if np.linalg.norm(embed(g) - M) > tol * max(1.0, np.linalg.norm(M)):
        raise ValueError("matrix is not of the form (T, b, c)")
    return g


def evaluate_word(generators: Sequence[HeisenbergElement], word: Word) -> HeisenbergElement:
    """Product of generators; letter k > 0 is generators[k-1], k < 0 its inverse."""
    if not generators:
        raise ValueError("no generators")
    out = HeisenbergElement.identity(generators[0].m)
    for letter in word:
        if letter == 0 or abs(letter) > len(generators):
            raise ValueError(f"bad letter {letter} for {len(generators)} generators")
        g = generators[abs(letter) - 1]
        out = compose(out, g if letter > 0 else inverse(g))
    return out


def projection_commutator(g: HeisenbergElement, h: HeisenbergElement) -> tuple[np.ndarray, np.ndarray]:
    """The (T, b) parts of [Pi(g), Pi(h)] for the affine maps z -> Tz + b.

    For commuting T-parts the translation part is (Id - T_h) b_g - (Id - T_g) b_h.
    """
    comm = commutator(g, h)
    return comm.T, comm.b


# ---------------------------------------------------------------------------
# the analysis


@dataclass
class ParabolicGroupInput:
    generators: list[HeisenbergElement]
    substitution: list[Word] | None = None

    def __post_init__(self):
        if not self.generators:
            raise ValueError("a parabolic group needs at least one generator")
        m = self.generators[0].m
        if any(g.m != m for g in self.generators):
            raise ValueError("generators have different dimensions")
        if self.substitution is not None:
            self.substitution = [tuple(int(a) for a in w) for w in self.substitution]
            if not self.substitution:
                raise ValueError("empty finite-index substitution")
            for w in self.substitution:
                evaluate_word(self.generators, w)  # validates letters

    @property
    def m(self) -> int:
        return self.generators[0].m

    @property
    def n(self) -> int:
        return self.m + 1

    def working_generators(self) -> list[HeisenbergElement]:
        if self.substitution is None:
            return list(self.generators)
        return [evaluate_word(self.generators, w) for w in self.substitution]


class ProjectionNotAbelianError(ValueError):
    """The projections Pi of two working generators do not commute."""

    def __init__(self, pair: tuple[int, int], commutator_T: np.ndarray, commutator_b: np.ndarray, reason: str):
        self.pair = pair
        self.commutator_T = commutator_T
        self.commutator_b = commutator_b
        self.reason = reason
        i, j = pair
        super().__init__(
            f"projections of generators {i + 1} and {j + 1} do not commute ({reason}); "
            "supply a finite-index substitution"
        )


def check_projection_abelian(generators: Sequence[HeisenbergElement], tol: float = COMMUTE_TOL) -> None:
    """Raise ProjectionNotAbelianError for the first non-commuting pair."""
    for i, j in itertools.combinations(range(len(generators)), 2):
        g, h = generators[i], generators[j]
        T, b = projection_commutator(g, h)
        scale = max(1.0, np.linalg.norm(g.b), np.linalg.norm(h.b))
        if np.linalg.norm(g.T @ h.T - h.T @ g.T) > tol:
            raise ProjectionNotAbelianError((i, j), T, b, "rotation parts do not commute")
        if np.linalg.norm(b) > tol * scale:
            raise ProjectionNotAbelianError((i, j), T, b, "affine parts do not commute")


def simultaneous_eigenbasis(unitaries: Sequence[np.ndarray], seed: int = 0, tries: int = 8) -> np.ndarray:
    """Orthonormal basis (columns) diagonalizing pairwise commuting unitaries.

    Diagonalizes a random real combination of their Hermitian and
    anti-Hermitian parts; retried with fresh coefficients until every matrix
    is diagonal in the result.
    """
    m = unitaries[0].shape[0]
    rng = np.random.default_rng(seed)
    parts = []
    for U in unitaries:
        parts.append((U + U.conj().T) / 2)
        parts.append((U - U.conj().T) / 2j)
    for _ in range(tries):
        coef = rng.normal(size=len(parts))
        M = sum(c * P for c, P in zip(coef, parts)) if parts else np.zeros((m, m))
        _, E = np.linalg.eigh(M)
        worst = 0.0
        for U in unitaries:
            D = E.conj().T @ U @ E
            worst = max(worst, np.linalg.norm(D - np.diag(np.diag(D))))
        if worst <= 1e-9:
            return E
    raise np.linalg.LinAlgError("could not diagonalize the rotation parts simultaneously")


def real_rank(vectors: Sequence[np.ndarray], tol: float = RANK_TOL) -> int:
    """Dimension over R of the real span of complex vectors."""
    vecs = [np.asarray(v, dtype=complex).reshape(-1) for v in vectors]
    if not vecs:
        return 0
    A = np.array([np.concatenate([v.real, v.imag]) for v in vecs])
    sv = np.linalg.svd(A, compute_uv=False)
    if sv.size == 0 or sv[0] == 0:
        return 0
    return int(np.sum(sv > tol * sv[0]))


def totally_real_test(vectors: Sequence[np.ndarray], tol: float = RANK_TOL) -> bool:
    """Is W = Span_R(vectors) totally real, i.e. W cap iW = {0}?"""
    vecs = [np.asarray(v, dtype=complex).reshape(-1) for v in vectors]
    k = real_rank(vecs, tol)
    return real_rank(vecs + [1j * v for v in vecs], tol) == 2 * k


@dataclass
class ParabolicAnalysis:
    generators: list[HeisenbergElement]
    pi_abelian: bool
    eigenbasis: np.ndarray
    eigenvalues: np.ndarray  # (generator, direction)
    coordinates: np.ndarray  # b_i(gamma) in the eigenbasis
    Lambda: np.ndarray
    V1: np.ndarray  # orthonormal columns
    W1: list[np.ndarray]
    conjugated: list[HeisenbergElement]
    elliptic_parts: list[HeisenbergElement]
    unipotent_parts: list[HeisenbergElement]
    totally_real: bool
    stein: bool
    l: int
    k: int
    delta: Fraction
    central_witness: HeisenbergElement | None = None
    caveats: list[str] = field(default_factory=list)

    @property
    def dim_V1(self) -> int:
        return self.V1.shape[1]

    @property
    def dim_W1(self) -> int:
        return self.k

    @property
    def T_Lambda(self) -> HeisenbergElement:
        return HeisenbergElement.translation(self.Lambda)


def analyze(data: ParabolicGroupInput, seed: int = 0) -> ParabolicAnalysis:
    """Decide Steinness and compute delta for a parabolic group.

    Raises ProjectionNotAbelianError when the projections of the working
    generators (after the optional finite-index substitution) fail to commute.
    """
    gens = data.working_generators()
    check_projection_abelian(gens)
    m = data.m

    E = simultaneous_eigenbasis([g.T for g in gens], seed=seed)
    a = np.array([np.diag(E.conj().T @ g.T @ E) for g in gens])
    bcoord = np.array([E.conj().T @ g.b for g in gens])

    in_v1 = np.all(np.abs(1.0 - a) <= EIGENVALUE_ONE_TOL, axis=0)
    lam = np.zeros(m, dtype=complex)
    for i in np.flatnonzero(~in_v1):
        j = int(np.argmax(np.abs(1.0 - a[:, i]) > EIGENVALUE_ONE_TOL))
        lam[i] = bcoord[j, i] / (1.0 - a[j, i])
    Lambda = E @ lam
    V1 = E[:, in_v1]

    T_L = HeisenbergElement.translation(Lambda)
    T_L_inv = inverse(T_L)
    conjugated = [compose(compose(T_L_inv, g), T_L) for g in gens]
    elliptic = [HeisenbergElement(p.T, np.zeros(m), 0.0) for p in conjugated]
    unipotent = [HeisenbergElement(np.eye(m), p.b, p.c) for p in conjugated]

    # b(phi(gamma)) must already lie in V1; project to be safe about rounding
    P = V1 @ V1.conj().T
    W1 = [P @ u.b for u in unipotent]
    k = real_rank(W1)
    totally_real = totally_real_test(W1)

    caveats = []
    central = None
    candidates = list(gens)
    candidates += [commutator(g, h) for g, h in itertools.combinations(gens, 2)]
    candidates += unipotent
    for cand in candidates:
        if cand.is_central() and abs(cand.c) > CENTER_TOL:
            central = cand
            break
    l = 1 if central is not None else 0
    if l == 0:
        caveats.append("l=0 is not certified: no central element among generators, commutators or unipotent parts")

    return ParabolicAnalysis(
        generators=gens,
        pi_abelian=True,
        eigenbasis=E,
        eigenvalues=a,
        coordinates=bcoord,
        Lambda=Lambda,
        V1=V1,
        W1=W1,
        conjugated=conjugated,
        elliptic_parts=elliptic,
        unipotent_parts=unipotent,
        totally_real=totally_real,
        stein=totally_real,
        l=l,
        k=k,
        delta=Fraction(2 * l + k, 2),
        central_witness=central,
        caveats=caveats,
    )


# ---------------------------------------------------------------------------
# witnesses for delta >= 2


@dataclass
class Z2Witness:
    x: Word
    y: Word
    commutator: HeisenbergElement


def _element_key(g: HeisenbergElement) -> bytes:
    v = np.concatenate([g.T.ravel(), g.b, [g.c]]).astype(complex)
    return np.rint(v.view(np.float64) / 1e-9).astype(np.int64).tobytes()


def enumerate_words(generators: Sequence[HeisenbergElement], max_length: int):
    """Distinct elements with a shortest word each, in breadth-first order.

    Letters are ordered g1, ..., gk, g1^-1, ..., gk^-1.
    """
    k = len(generators)
    letters = list(range(1, k + 1)) + [-i for i in range(1, k + 1)]
    values = {i: g for i, g in zip(range(1, k + 1), generators)}
    values.update({-i: inverse(g) for i, g in zip(range(1, k + 1), generators)})
    ident = HeisenbergElement.identity(generators[0].m)
    seen = {_element_key(ident)}
    out: list[tuple[Word, HeisenbergElement]] = [((), ident)]
    frontier = [((), ident)]
    for _ in range(max_length):
        nxt = []
        for w, g in frontier:
            for a in letters:
                if w and w[-1] == -a:
                    continue
                h = compose(g, values[a])
                key = _element_key(h)
                if key not in seen:
                    seen.add(key)
                    nxt.append((w + (a,), h))
        out.extend(nxt)
        frontier = nxt
    return out


def z2_witness(data: ParabolicGroupInput, max_word_length: int) -> Z2Witness | None:
    """Find x, y with commuting projections Pi(x), Pi(y) but [x, y] != Id.

    Such a pair generates a subgroup with critical exponent 2.  Words are
    searched up to ``max_word_length`` in the original generators; None
    means the search was inconclusive at that depth.
    """
    if max_word_length < 1:
        raise ValueError("max_word_length must be >= 1")
    elems = enumerate_words(data.generators, max_word_length)[1:]
    by_length: dict[int, list[int]] = {}
    for i, (w, _) in enumerate(elems):
        by_length.setdefault(len(w), []).append(i)
    for total in range(2, 2 * max_word_length + 1):
        for li in range(1, total // 2 + 1):
            left = by_length.get(li, [])
            right = by_length.get(total - li, [])
            for i in left:
                for j in right:
                    if j <= i:
                        continue
                    witness = _witness(elems[i], elems[j])
                    if witness is not None:
                        return witness
    return None


def _witness(x, y) -> Z2Witness | None:
    (wx, gx), (wy, gy) = x, y
    if np.linalg.norm(gx.T @ gy.T - gy.T @ gx.T) > COMMUTE_TOL:
        return None
    comm = commutator(gx, gy)
    if np.linalg.norm(comm.b) > COMMUTE_TOL * max(1.0, np.linalg.norm(gx.b), np.linalg.norm(gy.b)):
        return None
    if abs(comm.c) <= CENTER_TOL:
        return None
    return Z2Witness(wx, wy, comm)
