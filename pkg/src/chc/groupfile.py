"""JSON description of a finitely generated group.

    {
      "dimension": 2,
      "basis": "siegel",
      "generators": [
        {"heisenberg": {"T": [[[1.0, 0.0]]], "b": [[1.0, 0.0]], "c": 0.0}},
        {"matrix": [[[1.0, 0.0], [0.0, 0.0], [0.0, 0.0]], ...]}
      ],
      "basepoint": [[1.0, 0.0], [0.0, 0.0], [0.0, 0.0]],
      "substitution": ["1 2", "-1 3"]
    }

Complex numbers are [re, im] pairs.  ``basepoint`` and ``substitution`` are
optional.  Heisenberg triples (T, b, c) act through the Siegel basis, with
T of size n-1.  Substitution words use the letters k and -k for generator k
and its inverse.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exponent import GroupSpec
from .geometry import BALL, SIEGEL, HermitianModel, Isometry, convert_matrix
from .heisenberg import HeisenbergElement, ParabolicGroupInput, Word, from_matrix


class GroupFileError(Exception):
    """Malformed group file."""


def _complex_array(obj, ndim: int, what: str) -> np.ndarray:
    try:
        a = np.asarray(obj, dtype=float)
    except (TypeError, ValueError):
        raise GroupFileError(f"{what}: expected nested lists of [re, im] pairs") from None
    if a.ndim != ndim + 1 or a.shape[-1] != 2:
        raise GroupFileError(f"{what}: expected a {ndim}-dimensional array of [re, im] pairs")
    if not np.all(np.isfinite(a)):
        raise GroupFileError(f"{what}: non-finite entry")
    return a[..., 0] + 1j * a[..., 1]


def _pairs(a: np.ndarray):
    a = np.asarray(a, dtype=complex)
    if a.ndim == 0:
        return [float(a.real), float(a.imag)]
    return [_pairs(x) for x in a]


def parse_word(text) -> Word:
    try:
        return tuple(int(t) for t in str(text).split())
    except ValueError:
        raise GroupFileError(f"bad substitution word {text!r}") from None


def format_word(word: Word) -> str:
    return " ".join(str(a) for a in word)


@dataclass
class GroupFile:
    n: int
    basis: str
    generators: list  # np.ndarray matrices or HeisenbergElement triples
    basepoint: np.ndarray | None = None
    substitution: list[Word] | None = None

    @property
    def model(self) -> HermitianModel:
        return HermitianModel(self.n, self.basis)

    def isometries(self) -> list[Isometry]:
        """Generators as isometries in the file's basis.  Raises GeometryError."""
        out = []
        for g in self.generators:
            if isinstance(g, HeisenbergElement):
                out.append(g.isometry().in_basis(self.basis))
            else:
                out.append(Isometry(g, self.model))
        return out

    def group_spec(self) -> GroupSpec:
        gens = self.isometries()
        if self.substitution is not None:
            gens = [_evaluate(gens, w) for w in self.substitution]
        return GroupSpec(gens, self.basepoint)

    def parabolic_input(self) -> ParabolicGroupInput:
        """Heisenberg view of the generators; matrices must fix the Siegel point at infinity."""
        gens = []
        for g in self.generators:
            if isinstance(g, HeisenbergElement):
                gens.append(g)
                continue
            m = np.asarray(g, dtype=complex)
            if self.basis == BALL:
                m = convert_matrix(m, self.model, self.model.with_basis(SIEGEL))
            gens.append(from_matrix(m))
        return ParabolicGroupInput(gens, self.substitution)


def _evaluate(gens: list[Isometry], word: Word) -> Isometry:
    g = Isometry.identity(gens[0].model)
    for a in word:
        if a == 0 or abs(a) > len(gens):
            raise GroupFileError(f"letter {a} out of range")
        h = gens[abs(a) - 1]
        g = g @ (h if a > 0 else h.inverse())
    return g


def from_dict(doc) -> GroupFile:
    if not isinstance(doc, dict):
        raise GroupFileError("top level must be an object")
    unknown = set(doc) - {"dimension", "basis", "generators", "basepoint", "substitution"}
    if unknown:
        raise GroupFileError(f"unknown fields: {', '.join(sorted(unknown))}")
    try:
        n = doc["dimension"]
        gens_doc = doc["generators"]
    except KeyError as exc:
        raise GroupFileError(f"missing field {exc.args[0]!r}") from None
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise GroupFileError("dimension must be a positive integer")
    basis = doc.get("basis", BALL)
    if basis not in (BALL, SIEGEL):
        raise GroupFileError(f"basis must be {BALL!r} or {SIEGEL!r}")
    if not isinstance(gens_doc, list) or not gens_doc:
        raise GroupFileError("generators must be a non-empty list")
    gens = []
    for i, g in enumerate(gens_doc, 1):
        what = f"generator {i}"
        if not isinstance(g, dict) or len(g) != 1:
            raise GroupFileError(f"{what}: expected {{\"matrix\": ...}} or {{\"heisenberg\": ...}}")
        if "matrix" in g:
            m = _complex_array(g["matrix"], 2, what)
            if m.shape != (n + 1, n + 1):
                raise GroupFileError(f"{what}: expected a {n + 1}x{n + 1} matrix, got {m.shape}")
            gens.append(m)
        elif "heisenberg" in g:
            h = g["heisenberg"]
            if not isinstance(h, dict) or set(h) != {"T", "b", "c"}:
                raise GroupFileError(f"{what}: heisenberg needs exactly T, b and c")
            T = _complex_array(h["T"], 2, what + " T")
            b = _complex_array(h["b"], 1, what + " b")
            if b.size != n - 1 or T.shape != (n - 1, n - 1):
                raise GroupFileError(f"{what}: T and b must have size {n - 1}")
            c = h["c"]
            if not isinstance(c, (int, float)) or isinstance(c, bool):
                raise GroupFileError(f"{what}: c must be a real number")
            # a non-unitary T is an invalid matrix, not a parse error
            gens.append(_Triple(T, b, float(c)))
        else:
            raise GroupFileError(f"{what}: unknown generator kind {next(iter(g))!r}")
    basepoint = None
    if "basepoint" in doc:
        basepoint = _complex_array(doc["basepoint"], 1, "basepoint")
        if basepoint.size != n + 1:
            raise GroupFileError(f"basepoint must have {n + 1} entries")
    substitution = None
    if "substitution" in doc:
        if not isinstance(doc["substitution"], list) or not doc["substitution"]:
            raise GroupFileError("substitution must be a non-empty list of words")
        substitution = [parse_word(w) for w in doc["substitution"]]
        for w in substitution:
            for a in w:
                if a == 0 or abs(a) > len(gens):
                    raise GroupFileError(f"substitution letter {a} out of range")
    return GroupFile(n, basis, gens, basepoint, substitution)


@dataclass
class _Triple:
    """Heisenberg triple as read from a file, validated on first use."""

    T: np.ndarray
    b: np.ndarray
    c: float


def resolve(gf: GroupFile) -> GroupFile:
    """Turn raw triples into HeisenbergElements; raises ValueError for non-unitary T."""
    gens = [HeisenbergElement(g.T, g.b, g.c) if isinstance(g, _Triple) else g for g in gf.generators]
    return GroupFile(gf.n, gf.basis, gens, gf.basepoint, gf.substitution)


def to_dict(gf: GroupFile) -> dict:
    gens = []
    for g in gf.generators:
        if isinstance(g, (HeisenbergElement, _Triple)):
            gens.append({"heisenberg": {"T": _pairs(g.T), "b": _pairs(g.b), "c": float(g.c)}})
        else:
            gens.append({"matrix": _pairs(g)})
    doc = {"dimension": gf.n, "basis": gf.basis, "generators": gens}
    if gf.basepoint is not None:
        doc["basepoint"] = _pairs(gf.basepoint)
    if gf.substitution is not None:
        doc["substitution"] = [format_word(w) for w in gf.substitution]
    return doc


def loads(text: str) -> GroupFile:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GroupFileError(f"invalid JSON: {exc}") from None
    return resolve(from_dict(doc))


def load(path) -> GroupFile:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise GroupFileError(f"cannot read {path}: {exc.strerror}") from None
    return loads(text)


def dumps(gf: GroupFile) -> str:
    """Canonical text: one top-level field per line, one generator per line."""
    doc = to_dict(gf)
    lines = ["{"]
    items = list(doc.items())
    for i, (k, v) in enumerate(items):
        sep = "," if i < len(items) - 1 else ""
        if k in ("generators", "substitution"):
            lines.append(f"  {json.dumps(k)}: [")
            for j, g in enumerate(v):
                inner = "," if j < len(v) - 1 else ""
                lines.append(f"    {json.dumps(g)}{inner}")
            lines.append(f"  ]{sep}")
        else:
            lines.append(f"  {json.dumps(k)}: {json.dumps(v)}{sep}")
    lines.append("}")
    return "\n".join(lines) + "\n"


def dump(gf: GroupFile, path) -> None:
    Path(path).write_text(dumps(gf))


def from_parabolic(data: ParabolicGroupInput) -> GroupFile:
    return GroupFile(data.n, SIEGEL, list(data.generators), None, data.substitution)


def from_isometries(gens: list[Isometry], basepoint=None) -> GroupFile:
    model = gens[0].model
    bp = None if basepoint is None else np.asarray(basepoint, dtype=complex)
    return GroupFile(model.n, model.basis, [g.matrix for g in gens], bp)
