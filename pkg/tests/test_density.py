import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chc.density import (
    LeviProbe,
    build_density,
    direction_at,
    geodesic_step,
    invariance_bound,
    levi_check,
    levi_estimate,
    levi_lower_bound,
    levi_threshold,
    log_mass,
    mass_at,
    orthogonality_defect,
    probe_grid,
    truncation_bound,
    weight_share,
)
from chc.exponent import GroupSpec, enumerate_orbit
from chc.geometry import (
    SIEGEL,
    GeometryError,
    HermitianModel,
    Isometry,
    ball_coords,
    ball_point,
    convert,
    distance,
    distances,
    q,
    random_ball_point,
)
from chc.scenarios import schottky

B = HermitianModel(2)
seeds = st.integers(0, 2**32 - 1)


@pytest.fixture(scope="module")
def schottky_cloud():
    return enumerate_orbit(GroupSpec(schottky()), 8, 20000)


@pytest.fixture(scope="module")
def schottky_density(schottky_cloud):
    return build_density(schottky_cloud, delta_hat=0.55)


def single_atom(model=B, s=0.8):
    cloud = enumerate_orbit(GroupSpec([Isometry.identity(model)]), 0, 1)
    return build_density(cloud, s=s)


def test_weights_normalized(schottky_density):
    assert schottky_density.weights.sum() == pytest.approx(1.0)
    assert np.all(schottky_density.weights > 0)
    assert schottky_density.s == pytest.approx(0.6)


def test_mass_at_basepoint_is_one(schottky_density):
    o = schottky_density.cloud.basepoint
    assert mass_at(schottky_density, o) == pytest.approx(1.0, rel=1e-12)
    assert log_mass(schottky_density, o) == pytest.approx(0.0, abs=1e-12)


def test_single_atom():
    d = single_atom()
    x = ball_point([0.4, -0.3j])
    r = distance(B, B.origin, x)
    assert mass_at(d, x) == pytest.approx(np.exp(-0.8 * r))
    assert log_mass(d, x) == pytest.approx(0.8 * r)


def test_non_interior_rejected(schottky_density):
    with pytest.raises(GeometryError):
        mass_at(schottky_density, ball_point([1.0, 0]))


def test_requires_exponent(schottky_cloud):
    with pytest.raises(ValueError):
        build_density(schottky_cloud)
    with pytest.raises(ValueError):
        build_density(schottky_cloud, s=0.0)


def test_cocycle_matches_busemann(schottky_cloud):
    i = int(np.argmax(schottky_cloud.displacement))
    assert schottky_cloud.displacement[i] > 10
    atom = schottky_cloud.points[i]
    x, y = ball_point([0.2, 0.1j]), ball_point([-0.3, 0.2])
    hoo = q(B, B.origin)
    diff = distances(B, x, atom[None], hyy=hoo)[0] - distances(B, y, atom[None], hyy=hoo)[0]
    # B_theta(x, y) through a point 30 units further along the ray from o
    u = ball_coords(B, atom)
    u = u / np.linalg.norm(u)
    t = schottky_cloud.displacement[i] + 30.0
    far = np.concatenate([[np.cosh(t)], np.sinh(t) * u])
    bus = distances(B, x, far[None], hyy=-1.0)[0] - distances(B, y, far[None], hyy=-1.0)[0]
    assert diff == pytest.approx(bus, abs=1e-2)


def test_approximate_invariance(schottky_density):
    rng = np.random.default_rng(0)
    for g in schottky():
        for _ in range(5):
            x = random_ball_point(2, rng, 1.0)
            y = g.apply(x)
            gap = abs(log_mass(schottky_density, y) - log_mass(schottky_density, x))
            assert gap <= invariance_bound(schottky_density, x, y) + 1e-9


def test_monotone_truncation(schottky_cloud):
    small = schottky_cloud.head(2000)
    d_small = build_density(small, s=0.6)
    d_large = build_density(schottky_cloud, s=0.6)
    added = np.arange(len(schottky_cloud)) >= 2000
    rng = np.random.default_rng(1)
    for _ in range(5):
        x = random_ball_point(2, rng, 1.5)
        change = abs(log_mass(d_large, x) - log_mass(d_small, x))
        bound = truncation_bound(weight_share(d_large, x, added),
                                 weight_share(d_large, schottky_cloud.basepoint, added))
        assert change <= bound + 1e-12


def test_truncation_bound():
    assert truncation_bound(0.0) == 0.0
    assert truncation_bound(0.5, 0.1) == pytest.approx(np.log(2))
    assert truncation_bound(1.0) == np.inf


# geodesic steps


def test_step_zero():
    x = ball_point([0.2, 0.3j])
    assert np.allclose(ball_coords(B, geodesic_step(B, x, B.origin, 0.0)), ball_coords(B, x))


def test_step_from_origin():
    p = geodesic_step(B, B.origin, ball_point([0.9, 0]), np.arctanh(0.5))
    assert np.allclose(ball_coords(B, p), [0.5, 0])


@settings(max_examples=40, deadline=None)
@given(seeds, st.floats(-3, 3), st.floats(-3, 3))
def test_step_length_and_additivity(seed, t1, t2):
    rng = np.random.default_rng(seed)
    x, y = random_ball_point(2, rng), random_ball_point(2, rng)
    p = geodesic_step(B, x, y, t1)
    assert distance(B, x, p) == pytest.approx(abs(t1), abs=1e-10)
    # continue in the same direction: toward y if t1 >= 0, away from it otherwise
    q2 = geodesic_step(B, x, y, t1 + t2)
    ahead = geodesic_step(B, x, y, t1 + np.sign(t1 or 1.0) * 5.0)
    if abs(t1) > 1e-6:
        cont = geodesic_step(B, p, ahead, np.sign(t1) * t2)
        assert distance(B, cont, q2) <= 1e-9


def test_step_in_siegel_basis():
    S = HermitianModel(2, SIEGEL)
    x = convert(ball_point([0.1, 0.2]), B, S)
    y = convert(ball_point([-0.5, 0.1j]), B, S)
    p = geodesic_step(S, x, y, 0.7)
    assert distance(S, x, p) == pytest.approx(0.7, abs=1e-10)


def test_degenerate_direction():
    x = ball_point([0.2, 0])
    with pytest.raises(GeometryError):
        geodesic_step(B, x, x, 1.0)
    with pytest.raises(GeometryError):
        direction_at(B, x, ball_point([2.0, 0]))


def test_boundary_direction_allowed():
    p = geodesic_step(B, B.origin, ball_point([0, 1j]), np.arctanh(0.5))
    assert np.allclose(ball_coords(B, p), [0, 0.5j])


# Levi estimates


def test_stencil_self_test_squared_distance():
    o = B.origin
    for u in ([1, 0], [0.3, 1j], [1j, -2]):
        probe = LeviProbe(B, o, u, 1e-3)
        assert levi_estimate(lambda p: distance(B, o, p) ** 2, probe) == pytest.approx(2.0, abs=1e-2)


def test_single_atom_levi_positive():
    d = single_atom()
    x = geodesic_step(B, B.origin, ball_point([0.3, 0.4j]), 1.0)
    rng = np.random.default_rng(2)
    for _ in range(5):
        u = rng.normal(size=2) + 1j * rng.normal(size=2)
        assert levi_lower_bound(d, LeviProbe(B, x, u)) > 0


def test_stencil_convergence_ratio():
    d = single_atom()
    x = geodesic_step(B, B.origin, ball_point([0.5, 0.3j]), 1.0)
    for u in ([1, 0], [0.3, 1j], [1j, 1]):
        e = [levi_lower_bound(d, LeviProbe(B, x, u, h)) for h in (0.2, 0.1, 0.05)]
        ratio = (e[0] - e[1]) / (e[1] - e[2])
        assert 2.5 <= ratio <= 5.5


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_jv_orthonormal(seed):
    rng = np.random.default_rng(seed)
    x = random_ball_point(2, rng)
    probe = LeviProbe(B, x, rng.normal(size=2) + 1j * rng.normal(size=2))
    assert orthogonality_defect(probe) <= 1e-6


def test_probe_validation():
    with pytest.raises(ValueError):
        LeviProbe(B, B.origin, [1, 0], h=0.6)
    with pytest.raises(GeometryError):
        LeviProbe(B, B.origin, [0, 0])
    with pytest.raises(GeometryError):
        LeviProbe(B, ball_point([1, 0]), [1, 0])


def test_stencil_stays_close():
    probe = LeviProbe(B, ball_point([0.5, 0.5j]), [1, 1j], 0.1)
    for p in probe.stencil():
        assert distance(B, probe.x, p) == pytest.approx(0.1, abs=1e-12)


def test_probe_grid_shape_and_distances():
    grid = probe_grid(B, B.origin, np.random.default_rng(0), 20, 5)
    assert len(grid) == 20 and all(len(row) == 5 for row in grid)
    r = [distance(B, B.origin, row[0].x) for row in grid]
    assert r[0] == pytest.approx(0.3) and r[-1] == pytest.approx(1.5)


def test_levi_check_report(schottky_density):
    rep = levi_check(schottky_density, 0.55, np.random.default_rng(0), points=4, directions=2)
    assert len(rep.rows) == 8
    assert rep.threshold == pytest.approx(levi_threshold(0.55))
    assert rep.passed == (rep.minimum >= rep.threshold)
    lines = rep.to_csv().splitlines()
    assert lines[0] == "point,direction,coords,levi,threshold,result"
    assert len(lines) == 9


def test_levi_check_single_atom_warns():
    rep = levi_check(single_atom(s=0.05), 0.0, np.random.default_rng(0), points=2, directions=1)
    assert any("single atom" in w for w in rep.warnings)
