"""Orbit enumeration and numerical critical exponents.

The orbit of a basepoint o is explored breadth-first in the word metric.
Elements are deduplicated up to scalar through canonical matrix keys.  For a
generating set closed under inverses every neighbour of layer L lies in
layer L-1, L or L+1, so only the two most recent layers are kept in the
dedup index.

Two estimators of the critical exponent are provided:

* ``shell``: least-squares slope of ln N(R) against R, where
  N(R) = #{gamma : d(o, gamma o) <= R}, over the radii where the truncated
  orbit is complete, dropping the outer 20%;
* ``bisection``: the exponent s where the truncated Poincare series
  S_R(s) = sum exp(-s d(o, gamma o)) stops growing faster than linearly in
  R, i.e. where S_R(s) / S_{R/2}(s) crosses 2.  Bisected to 1e-3.
"""
from __future__ import annotations

import csv
import hashlib
import io
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .geometry import (
    HermitianModel,
    Isometry,
    canonical_keys,
    form_eval,
    q,
    require_interior,
)

log = logging.getLogger(__name__)

OUTER_EXCLUSION = 0.2
MIN_POINTS = 50
# smallest orbit count at which shells enter the regression
MIN_SHELL_COUNT = 10
GROWTH_RATIO = 2.0
SERIES_THRESHOLD = 1e6
BISECTION_TOL = 1e-3
CHUNK = 65536
# stop exploring once matrix entries get this large
ENTRY_LIMIT = 1e120


class InsufficientDataError(ValueError):
    pass


@dataclass
class GroupSpec:
    generators: list[Isometry]
    basepoint: np.ndarray | None = None
    names: list[str] | None = None

    def __post_init__(self):
        if not self.generators:
            raise ValueError("need at least one generator")
        model = self.generators[0].model
        if any(g.model != model for g in self.generators):
            raise ValueError("generators live in different models")
        if self.basepoint is None:
            self.basepoint = model.origin
        self.basepoint = require_interior(model, self.basepoint, "basepoint")
        if self.names is None:
            self.names = [f"g{i + 1}" for i in range(len(self.generators))]

    @property
    def model(self) -> HermitianModel:
        return self.generators[0].model

    def symmetric_generators(self) -> tuple[np.ndarray, list[str], np.ndarray]:
        """Generators closed under inversion, without duplicates up to scalar.

        Returns the matrices, their names and, for each, the index of its inverse.
        """
        mats, names = [], []
        for g, name in zip(self.generators, self.names):
            mats.append(g.matrix)
            names.append(name)
        for g, name in zip(self.generators, self.names):
            mats.append(g.inverse().matrix)
            names.append(name + "^-1")
        keys = canonical_keys(np.array(mats))
        keep, seen = [], {}
        for i, key in enumerate(keys):
            if key in seen:
                continue
            seen[key] = len(keep)
            keep.append(i)
        mats = np.array([mats[i] for i in keep])
        names = [names[i] for i in keep]
        inv_keys = canonical_keys(np.array([Isometry(m, self.model).inverse().matrix for m in mats]))
        inverse_of = np.array([seen[k] for k in inv_keys])
        return mats, names, inverse_of


@dataclass
class WordTree:
    """Breadth-first tree: node i is parent[i] followed by letter[i]."""

    parent: np.ndarray
    letter: np.ndarray
    names: list[str]

    def word(self, node: int) -> list[int]:
        out = []
        while node > 0:
            out.append(int(self.letter[node]))
            node = int(self.parent[node])
        return out[::-1]

    def word_string(self, node: int) -> str:
        w = self.word(node)
        return " ".join(self.names[a] for a in w) if w else "e"


@dataclass
class OrbitCloud:
    """Deduplicated orbit points gamma . o with word lengths and displacements."""

    model: HermitianModel
    basepoint: np.ndarray
    generators: np.ndarray
    tree: WordTree
    node: np.ndarray
    length: np.ndarray
    displacement: np.ndarray
    points: np.ndarray
    max_word_length: int
    max_points: int
    capped: bool
    complete_radius: float
    max_displacement: float | None = None

    def __len__(self) -> int:
        return int(self.displacement.size)

    @property
    def size(self) -> int:
        return len(self)

    def word(self, i: int) -> list[int]:
        return self.tree.word(int(self.node[i]))

    def element(self, i: int) -> np.ndarray:
        g = np.eye(self.model.size, dtype=complex)
        for a in self.word(i):
            g = g @ self.generators[a]
        return g

    def subset(self, mask) -> "OrbitCloud":
        return OrbitCloud(
            model=self.model,
            basepoint=self.basepoint,
            generators=self.generators,
            tree=self.tree,
            node=self.node[mask],
            length=self.length[mask],
            displacement=self.displacement[mask],
            points=self.points[mask],
            max_word_length=self.max_word_length,
            max_points=self.max_points,
            capped=self.capped,
            complete_radius=self.complete_radius,
            max_displacement=self.max_displacement,
        )

    def head(self, count: int) -> "OrbitCloud":
        """The first ``count`` records, i.e. the cloud a smaller point cap would give."""
        count = min(count, len(self))
        sub = self.subset(slice(0, count))
        sub.max_points = count
        if count < len(self):
            sub.capped = True
            sub.complete_radius = _complete_radius(sub.length, sub.displacement)
        return sub

    def within(self, radius: float) -> "OrbitCloud":
        sub = self.subset(self.displacement <= radius)
        sub.max_displacement = radius
        return sub

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["key_hash", "word", "word_length", "displacement"])
        for i in range(len(self)):
            g = self.element(i)
            key = canonical_keys(g[None], normalize=False)[0]
            w.writerow([
                hashlib.blake2b(key, digest_size=8).hexdigest(),
                self.tree.word_string(int(self.node[i])),
                int(self.length[i]),
                f"{self.displacement[i]:.12g}",
            ])
        return buf.getvalue()


def _complete_radius(length: np.ndarray, disp: np.ndarray) -> float:
    """Radius up to which the orbit is taken to be complete.

    Undiscovered elements have word length at least that of the last explored
    layer; their displacement is assumed to be at least the smallest
    displacement found in that layer.
    """
    last = length.max()
    if last == 0:
        return 0.0
    return float(disp[length == last].min())


def orbit_displacements(model: HermitianModel, basepoint: np.ndarray, points: np.ndarray) -> np.ndarray:
    """d(o, g o) for orbit lifts g o, using h(g o, g o) = h(o, o)."""
    hoo = float(q(model, basepoint))
    hgo = form_eval(model, points, basepoint)
    c2 = np.abs(hgo) ** 2 / (hoo * hoo)
    c2 = np.maximum(c2, 1.0)
    return np.log(np.sqrt(c2) + np.sqrt(c2 - 1.0))


def enumerate_orbit(spec: GroupSpec, max_word_length: int, max_points: int,
                    max_displacement: float | None = None) -> OrbitCloud:
    """Breadth-first orbit closure with dedup up to scalar.

    Stops after ``max_word_length`` layers or ``max_points`` records,
    whichever comes first (reported through ``capped``), or earlier once
    matrix entries exceed ``ENTRY_LIMIT``.  A displacement cap
    only filters the output; it does not prune the search.
    """
    if max_word_length < 0:
        raise ValueError("max_word_length must be >= 0")
    if max_points < 1:
        raise ValueError("max_points must be >= 1")
    model = spec.model
    o = spec.basepoint
    G, names, inverse_of = spec.symmetric_generators()
    k = G.shape[0]
    m = model.size

    ident = np.eye(m, dtype=complex)
    parent = [np.array([-1], dtype=np.int64)]
    letter = [np.array([-1], dtype=np.int64)]
    length = [np.array([0], dtype=np.int64)]
    points = [o[None, :].copy()]

    prev_keys: set[bytes] = set()
    cur_keys: set[bytes] = set(canonical_keys(ident[None]))
    frontier = ident[None]
    frontier_ids = np.array([0])
    frontier_last = np.array([-1])
    total = 1
    capped = False
    depth = 0

    while depth < max_word_length and total < max_points and frontier.shape[0]:
        depth += 1
        new_keys: set[bytes] = set()
        new_mats, new_parent, new_letter = [], [], []
        room = max_points - total
        for start in range(0, frontier.shape[0], max(1, CHUNK // k)):
            F = frontier[start:start + CHUNK // k]
            fid = frontier_ids[start:start + CHUNK // k]
            flast = frontier_last[start:start + CHUNK // k]
            cand = np.einsum("fij,gjk->fgik", F, G).reshape(-1, m, m)
            cpar = np.repeat(fid, k)
            clet = np.tile(np.arange(k), F.shape[0])
            reducible = np.repeat(flast, k) >= 0
            reducible &= inverse_of[clet] == np.repeat(np.where(flast >= 0, flast, 0), k)
            keep = ~reducible
            cand, cpar, clet = cand[keep], cpar[keep], clet[keep]
            keys = canonical_keys(cand, normalize=False)
            for idx, key in enumerate(keys):
                if key in cur_keys or key in prev_keys or key in new_keys:
                    continue
                new_keys.add(key)
                new_mats.append(cand[idx])
                new_parent.append(cpar[idx])
                new_letter.append(clet[idx])
                if len(new_mats) >= room:
                    break
            if len(new_mats) >= room:
                capped = True
                break
        if not new_mats:
            frontier = np.zeros((0, m, m), dtype=complex)
            break
        mats = np.array(new_mats)
        ids = np.arange(total, total + mats.shape[0])
        parent.append(np.array(new_parent, dtype=np.int64))
        letter.append(np.array(new_letter, dtype=np.int64))
        length.append(np.full(mats.shape[0], depth, dtype=np.int64))
        points.append(mats @ o)
        total += mats.shape[0]
        prev_keys, cur_keys = cur_keys, new_keys
        frontier, frontier_ids, frontier_last = mats, ids, np.array(new_letter)
        if total >= max_points and depth < max_word_length:
            capped = True
        if np.abs(mats).max() > ENTRY_LIMIT:
            log.warning("matrix entries exceed %.0e at word length %d; stopping", ENTRY_LIMIT, depth)
            capped = depth < max_word_length
            break

    parent_arr = np.concatenate(parent)
    letter_arr = np.concatenate(letter)
    length_arr = np.concatenate(length)
    points_arr = np.concatenate(points)
    disp = orbit_displacements(model, o, points_arr)
    disp[0] = 0.0
    tree = WordTree(parent_arr, letter_arr, names)
    cloud = OrbitCloud(
        model=model,
        basepoint=o,
        generators=G,
        tree=tree,
        node=np.arange(total),
        length=length_arr,
        displacement=disp,
        points=points_arr,
        max_word_length=max_word_length,
        max_points=max_points,
        capped=capped,
        complete_radius=_complete_radius(length_arr, disp),
    )
    if max_displacement is not None:
        cloud = cloud.within(max_displacement)
    return cloud


def poincare_partial_sum(cloud: OrbitCloud, s: float) -> float:
    """sum over the cloud of exp(-s d(o, gamma o))."""
    if s < 0:
        raise ValueError("s must be >= 0")
    return float(np.sum(np.exp(-s * cloud.displacement)))


@dataclass
class DeltaEstimate:
    estimate: float
    method: str
    shell: float
    bisection: float
    radius: float
    residual: float
    shell_edges: np.ndarray
    shell_counts: np.ndarray
    regression_radii: np.ndarray = field(repr=False)
    regression_counts: np.ndarray = field(repr=False)
    diagnostics: dict = field(default_factory=dict)


def _stable_radius(cloud: OrbitCloud) -> float:
    r = min(float(cloud.displacement.max()), cloud.complete_radius)
    if cloud.max_displacement is not None:
        r = min(r, cloud.max_displacement)
    return r


def shell_regression(disp: np.ndarray, radius: float, exclusion: float = OUTER_EXCLUSION,
                     samples: int = 64) -> tuple[float, float, np.ndarray, np.ndarray]:
    """Slope of ln N(R) on [R_lo, (1 - exclusion) radius]."""
    d = np.sort(disp)
    hi = (1.0 - exclusion) * radius
    if d.size < MIN_SHELL_COUNT:
        raise InsufficientDataError("too few orbit points for a shell regression")
    lo = d[MIN_SHELL_COUNT - 1]
    if not hi > lo:
        raise InsufficientDataError(
            f"degenerate regression range [{lo:.3g}, {hi:.3g}]; enlarge the orbit"
        )
    radii = np.linspace(lo, hi, samples)
    counts = np.searchsorted(d, radii, side="right").astype(float)
    y = np.log(counts)
    A = np.vstack([radii, np.ones_like(radii)]).T
    coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.sqrt(np.mean((A @ coef - y) ** 2)))
    return float(coef[0]), resid, radii, counts


def growth_ratio(disp: np.ndarray, radius: float, s: float) -> float:
    """S_R(s) / S_{R/2}(s) for the truncated Poincare series."""
    w = np.exp(-s * disp[disp <= radius])
    inner = np.sum(w[disp[disp <= radius] <= radius / 2])
    return float(np.sum(w) / inner)


def bisect_exponent(disp: np.ndarray, radius: float, ratio: float = GROWTH_RATIO,
                    threshold: float | None = None, tol: float = BISECTION_TOL) -> float:
    """Bisection on s for the truncated series.

    With ``threshold`` None, find s where S_R(s) / S_{R/2}(s) = ``ratio``;
    otherwise find s where S_R(s) = ``threshold``.  Returns 0 when the
    crossing is at or below s = 0.
    """
    d = disp[disp <= radius]
    if threshold is None:
        def excess(s):
            return growth_ratio(d, radius, s) - ratio
    else:
        def excess(s):
            return float(np.sum(np.exp(-s * d))) - threshold
    if excess(0.0) <= 0:
        return 0.0
    lo, hi = 0.0, 1.0
    while excess(hi) > 0:
        lo, hi = hi, 2 * hi
        if hi > 1e3:
            raise InsufficientDataError("bisection failed to bracket the exponent")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if excess(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def estimate_delta(cloud: OrbitCloud, method: str = "shell", exclusion: float = OUTER_EXCLUSION,
                   threshold: float | None = None) -> DeltaEstimate:
    """Critical exponent from a truncated orbit; both estimators are always run."""
    if len(cloud) < MIN_POINTS:
        raise InsufficientDataError(f"need at least {MIN_POINTS} orbit points, got {len(cloud)}")
    disp = cloud.displacement
    if np.ptp(disp[1:]) == 0:
        raise InsufficientDataError("degenerate regression: all displacements are equal")
    radius = _stable_radius(cloud)
    slope, resid, radii, counts = shell_regression(disp, radius, exclusion)
    hi = (1.0 - exclusion) * radius
    bis = bisect_exponent(disp, hi, threshold=threshold)

    edges = np.linspace(0.0, float(disp.max()) + 1e-12, 33)
    shell_counts, _ = np.histogram(disp, bins=edges)
    shell = max(slope, 0.0)
    est = {"shell": shell, "bisection": bis}
    if method not in est:
        raise ValueError(f"unknown method {method!r}")
    return DeltaEstimate(
        estimate=est[method],
        method=method,
        shell=shell,
        bisection=bis,
        radius=radius,
        residual=resid,
        shell_edges=edges,
        shell_counts=shell_counts,
        regression_radii=radii,
        regression_counts=counts,
        diagnostics={
            "orbit_size": len(cloud),
            "regression_range": (float(radii[0]), float(radii[-1])),
            "capped": cloud.capped,
        },
    )


def spec_from_parabolic(generators: Sequence, basepoint=None) -> GroupSpec:
    """GroupSpec for Heisenberg generators, acting in the Siegel basis."""
    return GroupSpec([g.isometry() for g in generators], basepoint)
