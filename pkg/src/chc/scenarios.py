"""Built-in groups used by the tests, the acceptance suite and the bundled group files."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .geometry import BALL, SIEGEL, HermitianModel, Isometry
from .groupfile import GroupFile, dumps, load
from .heisenberg import HeisenbergElement, ParabolicGroupInput

GROUPS_DIR = Path(__file__).parent / "groups"

SCHOTTKY_TRANSLATION = 2.5
EXAMPLE2_A = np.sqrt(2) + 1j
EXAMPLE2_B = 1j


def example1(n: int = 2) -> ParabolicGroupInput:
    """gamma_1 = (Id, e1, 0), gamma_2 = (Id, i e1, 0)."""
    e1 = np.eye(n - 1)[0]
    return ParabolicGroupInput([HeisenbergElement.translation(e1), HeisenbergElement.translation(1j * e1)])


def example2(a: complex = EXAMPLE2_A, b: complex = EXAMPLE2_B) -> ParabolicGroupInput:
    """Translations by e1, e2 and a e1 + b e2 in dimension 3 (Im a = Im b, Re a - Re b irrational)."""
    vs = [np.array([1, 0]), np.array([0, 1]), np.array([a, b])]
    return ParabolicGroupInput([HeisenbergElement.translation(v) for v in vs])


def single_translation(n: int = 2) -> ParabolicGroupInput:
    return ParabolicGroupInput([HeisenbergElement.translation(np.eye(n - 1)[0])])


def mixed_elliptic() -> ParabolicGroupInput:
    """(T, b, c) = (-1, 1, 1) in dimension 2: elliptic part of angle pi times a central translation."""
    return ParabolicGroupInput([HeisenbergElement(np.array([[-1.0]]), np.array([1.0]), 1.0)])


def siegel_loxodromic(t: float, n: int = 2) -> Isometry:
    """diag(e^t, e^-t, 1, ...) in the Siegel basis: translation length t along the vertical geodesic."""
    d = np.ones(n + 1)
    d[0], d[1] = np.exp(t), np.exp(-t)
    return Isometry(np.diag(d).astype(complex), HermitianModel(n, SIEGEL))


def schottky(t: float = SCHOTTKY_TRANSLATION) -> list[Isometry]:
    """Two loxodromics of translation length t with orthogonal axes through the ball origin."""
    A = siegel_loxodromic(t).in_basis(BALL)
    P = np.eye(3, dtype=complex)[[0, 2, 1]]
    B = Isometry(P @ A.matrix @ P.T, A.model)
    return [A, B]


def builtin_files() -> dict[str, GroupFile]:
    par = {
        "example1": example1(),
        "example2": example2(),
        "translation": single_translation(),
        "mixed_elliptic": mixed_elliptic(),
    }
    out = {name: GroupFile(d.n, SIEGEL, list(d.generators)) for name, d in par.items()}
    out["loxodromic"] = GroupFile(2, SIEGEL, [siegel_loxodromic(1.0).matrix])
    out["schottky"] = GroupFile(2, BALL, [g.matrix for g in schottky()])
    out["identity"] = GroupFile(2, BALL, [np.eye(3, dtype=complex)])
    return out


def builtin(name: str) -> GroupFile:
    return load(GROUPS_DIR / f"{name}.json")


def write_builtin_files(directory: Path = GROUPS_DIR) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    for name, gf in builtin_files().items():
        (directory / f"{name}.json").write_text(dumps(gf))
