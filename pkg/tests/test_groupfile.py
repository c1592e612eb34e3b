import json

import numpy as np
import pytest

from chc.geometry import GeometryError
from chc.groupfile import GroupFile, GroupFileError, dumps, from_parabolic, loads
from chc.heisenberg import HeisenbergElement
from chc.scenarios import GROUPS_DIR, builtin, builtin_files, example2


def test_bundled_files_match_scenarios():
    for name, gf in builtin_files().items():
        assert (GROUPS_DIR / f"{name}.json").read_text() == dumps(gf), name


@pytest.mark.parametrize("path", sorted(GROUPS_DIR.glob("*.json")), ids=lambda p: p.stem)
def test_round_trip_is_identity(path):
    text = path.read_text()
    assert dumps(loads(text)) == text


def test_whitespace_insensitive():
    text = (GROUPS_DIR / "example1.json").read_text()
    compact = json.dumps(json.loads(text))
    assert dumps(loads(compact)) == text


def test_parabolic_view_of_matrix_generators():
    gf = builtin("example2")
    matrices = GroupFile(gf.n, gf.basis, [g.matrix() for g in gf.generators])
    for g, h in zip(matrices.parabolic_input().generators, example2().generators):
        assert g.isclose(h, 1e-12)


def test_parabolic_view_in_ball_basis():
    g = HeisenbergElement.translation([0.5j], 0.25)
    ball = GroupFile(2, "ball", [g.isometry().in_basis("ball").matrix])
    assert ball.parabolic_input().generators[0].isclose(g, 1e-12)


def test_substitution_round_trip():
    gf = builtin("example1")
    gf.substitution = [(1, -2, 1), (2,)]
    text = dumps(gf)
    assert '"1 -2 1"' in text
    back = loads(text)
    assert back.substitution == [(1, -2, 1), (2,)]
    assert len(back.group_spec().generators) == 2


def test_basepoint_round_trip():
    gf = builtin("schottky")
    gf.basepoint = np.array([1, 0.3, 0.2j])
    back = loads(dumps(gf))
    assert np.array_equal(back.basepoint, gf.basepoint)
    assert np.allclose(back.group_spec().basepoint, gf.basepoint)


def test_from_parabolic():
    gf = from_parabolic(example2())
    assert gf.n == 3 and gf.basis == "siegel"
    assert dumps(gf) == (GROUPS_DIR / "example2.json").read_text()


@pytest.mark.parametrize(
    "doc",
    [
        "not json",
        "[]",
        '{"generators": []}',
        '{"dimension": 0, "generators": [{"matrix": [[[1, 0]]]}]}',
        '{"dimension": 1, "basis": "upper", "generators": [{"matrix": [[[1, 0], [0, 0]], [[0, 0], [1, 0]]]}]}',
        '{"dimension": 1, "generators": []}',
        '{"dimension": 1, "generators": [{"matrix": [[1, 0], [0, 1]]}]}',
        '{"dimension": 2, "generators": [{"matrix": [[[1, 0], [0, 0]], [[0, 0], [1, 0]]]}]}',
        '{"dimension": 2, "generators": [{"heisenberg": {"T": [[[1, 0]]], "b": [[1, 0]]}}]}',
        '{"dimension": 2, "generators": [{"heisenberg": {"T": [[[1, 0]]], "b": [[1, 0]], "c": "x"}}]}',
        '{"dimension": 2, "generators": [{"rotation": 1}]}',
        '{"dimension": 2, "generators": [{"heisenberg": {"T": [[[1, 0]]], "b": [[1, 0]], "c": 0}}], '
        '"substitution": ["1 2"]}',
        '{"dimension": 2, "generators": [{"heisenberg": {"T": [[[1, 0]]], "b": [[1, 0]], "c": 0}}], '
        '"substitution": ["one"]}',
        '{"dimension": 2, "generators": [{"heisenberg": {"T": [[[1, 0]]], "b": [[1, 0]], "c": 0}}], '
        '"basepoint": [[1, 0]]}',
        '{"dimension": 2, "generators": [{"heisenberg": {"T": [[[1, 0]]], "b": [[1, 0]], "c": 0}}], "extra": 1}',
    ],
)
def test_parse_errors(doc):
    with pytest.raises(GroupFileError):
        loads(doc)


def test_invalid_matrices_are_not_parse_errors():
    with pytest.raises(ValueError) as info:
        loads('{"dimension": 2, "generators": [{"heisenberg": {"T": [[[2, 0]]], "b": [[1, 0]], "c": 0}}]}')
    assert not isinstance(info.value, GroupFileError)
    gf = loads('{"dimension": 1, "generators": [{"matrix": [[[2, 0], [0, 0]], [[0, 0], [1, 0]]]}]}')
    with pytest.raises(GeometryError):
        gf.isometries()
