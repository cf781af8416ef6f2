from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from discrete_lorenz.maps import (Family, MapSpec, NotInvertibleError, OverflowMapError, evaluate,
                                  evaluate_many, inverse_evaluate, iterate, jacobian, jacobian_power,
                                  orbit, write_orbit_csv)

H = MapSpec.henon(0.0, 0.85, 0.7)
coord = st.floats(-2.0, 2.0, allow_nan=False)
state = st.tuples(coord, coord, coord)
par = st.floats(-1.5, 1.5, allow_nan=False)
nonzero_b = st.floats(-1.5, 1.5).filter(lambda b: abs(b) > 0.05)


@st.composite
def companion_maps(draw):
    fam = draw(st.sampled_from(["henon", "mira", "generalized", "epsilon"]))
    if fam == "henon":
        return MapSpec.henon(draw(par), draw(par), draw(nonzero_b))
    if fam == "mira":
        return MapSpec.mira(draw(par), draw(par), draw(nonzero_b))
    if fam == "generalized":
        return MapSpec.generalized(draw(nonzero_b), *(draw(par) for _ in range(6)))
    return MapSpec.epsilon_normal_form(1.0 - draw(nonzero_b), *(draw(par) for _ in range(5)))


def test_evaluate_examples():
    assert np.array_equal(evaluate(H, (0, 0, 0)), [0, 0, 0])
    assert np.allclose(evaluate(H, (1, 1, 1)), [1, 1, 0.55], atol=1e-15)
    assert np.allclose(evaluate(H, (0.55, 0.55, 0.55)), [0.55] * 3, atol=1e-15)


def test_family_formulas():
    s = np.array([0.3, -0.4, 0.7])
    x, y, z = s
    assert np.allclose(evaluate(MapSpec.henon(0.2, 0.5, 0.6), s), [y, z, 0.2 + 0.6 * x + 0.5 * y - z * z])
    assert np.allclose(evaluate(MapSpec.mira(0.2, 0.5, 0.6), s), [y, z, 0.2 + 0.6 * x + 0.5 * z - y * y])
    e = MapSpec.epsilon_normal_form(0.1, 0.2, 0.3, 1.0, 2.0, 3.0)
    zn = 0.9 * x + 0.8 * y - 1.3 * z + 1.0 * y * y + 2.0 * y * z + 3.0 * z * z
    assert np.allclose(evaluate(e, s), [y, z, zn])
    A = np.arange(9.0).reshape(3, 3)
    assert np.allclose(evaluate(MapSpec.affine(A, (1, 2, 3)), s), A @ s + [1, 2, 3])


def test_overflow_carries_input():
    with pytest.raises(OverflowMapError) as exc:
        evaluate(H, (0.0, 0.0, 1e200))
    assert exc.value.state == (0.0, 0.0, 1e200)
    with pytest.raises(OverflowMapError):
        evaluate(H, (np.nan, 0, 0))


def test_jacobian_examples():
    assert np.linalg.det(jacobian(H, (0, 0, 0))) == pytest.approx(0.7, abs=1e-12)
    J = jacobian(H, (0.3, 0.2, 1.0))
    assert np.array_equal(J, [[0, 1, 0], [0, 0, 1], [0.7, 0.85, -2.0]])


@given(companion_maps(), state)
def test_det_equals_b(m, s):
    assert abs(np.linalg.det(jacobian(m, s)) - m.det) < 1e-12 * max(1.0, np.abs(jacobian(m, s)).max() ** 2)


@given(companion_maps(), state)
def test_jacobian_matches_central_differences(m, s):
    h = 1e-6
    s = np.asarray(s)
    fd = np.empty((3, 3))
    for k in range(3):
        e = np.zeros(3)
        e[k] = h
        fd[:, k] = (evaluate(m, s + e) - evaluate(m, s - e)) / (2 * h)
    J = jacobian(m, s)
    assert np.all(np.abs(fd - J) <= 1e-6 * np.maximum(1.0, np.abs(J)))


def test_inverse_examples():
    assert np.allclose(inverse_evaluate(H, (1, 1, 0.55)), [1, 1, 1], atol=1e-15)
    assert np.allclose(inverse_evaluate(H, (0.55,) * 3), [0.55] * 3, atol=1e-15)
    with pytest.raises(NotInvertibleError):
        inverse_evaluate(MapSpec.henon(0, 0.85, 0.0), (1, 1, 1))


@pytest.mark.parametrize("B", [0.7, -0.8, -0.95])
def test_inverse_round_trip(B):
    rng = np.random.default_rng(1)
    m = MapSpec.henon(0.3, 0.85, B)
    for s in rng.uniform(-2, 2, (1000, 3)):
        assert np.max(np.abs(evaluate(m, inverse_evaluate(m, s)) - s)) < 1e-10
        assert np.max(np.abs(inverse_evaluate(m, evaluate(m, s)) - s)) < 1e-10


def test_inverse_round_trip_b07_tight():
    rng = np.random.default_rng(2)
    for s in rng.uniform(-1, 1, (1000, 3)):
        assert np.linalg.norm(inverse_evaluate(H, evaluate(H, s)) - s) < 1e-12


def test_evaluate_many_matches_scalar():
    pts = np.random.default_rng(3).uniform(-1, 1, (50, 3))
    for m in (H, MapSpec.mira(0.1, 0.2, 0.3), MapSpec.affine(np.eye(3) * 0.5, (1, 0, 0))):
        assert np.allclose(evaluate_many(m, pts), [evaluate(m, p) for p in pts], rtol=0, atol=1e-15)


def test_jacobian_power_chain_rule():
    s = np.array([0.1, 0.2, 0.3])
    img, D = jacobian_power(H, s, 3)
    assert np.allclose(img, iterate(H, s, 3))
    J0 = jacobian(H, s)
    J1 = jacobian(H, iterate(H, s, 1))
    J2 = jacobian(H, iterate(H, s, 2))
    assert np.allclose(D, J2 @ J1 @ J0)


def test_orbit_bounded_attractor():
    seg = orbit(H, (0.1, 0.1, 0.1), 10_000, 100_000)
    assert not seg.escaped and len(seg) == 100_000
    assert np.abs(seg.points).max() < 3.0


def test_orbit_matches_direct_iteration():
    seg = orbit(H, (0.1, 0.1, 0.1), 5, 50)
    s = iterate(H, (0.1, 0.1, 0.1), 5)
    for p in seg.points:
        assert np.array_equal(p, s)
        s = evaluate(H, s)


def test_orbit_fixed_point_and_escape():
    seg = orbit(H, (0.55, 0.55, 0.55), 10, 100)
    assert np.all(seg.points == seg.points[0])
    seg = orbit(H, (100, 100, 100), 10_000, 10)
    assert seg.escaped and len(seg) == 0
    # direct iteration oracle: the z^2 term blows up within a few steps
    s, k = np.array([100.0, 100.0, 100.0]), 0
    while np.abs(s).max() <= 1e6:
        s = evaluate(H, s)
        k += 1
    assert seg.escape_index == k


def test_orbit_deterministic():
    a = orbit(H, (0.1, 0.2, 0.3), 100, 5000)
    b = orbit(H, (0.1, 0.2, 0.3), 100, 5000)
    assert a.points.tobytes() == b.points.tobytes()


def test_orbit_csv(tmp_path):
    seg = orbit(H, (0.1, 0.1, 0.1), 0, 5)
    p = write_orbit_csv(seg, tmp_path / "o.csv")
    lines = p.read_text().splitlines()
    assert lines[0] == "i,x,y,z" and len(lines) == 6
    back = np.array([[float(v) for v in ln.split(",")[1:]] for ln in lines[1:]])
    assert np.array_equal(back, seg.points)


def test_mapspec_params():
    m = MapSpec.henon(1, 2, 3)
    assert m.param("M2") == 2 and m.with_param("M2", 5).param("M2") == 5
    assert m.family is Family.HENON and m.det == 3
    with pytest.raises(KeyError):
        m.param("Q")
    with pytest.raises(ValueError):
        MapSpec(Family.HENON, (1, 2))
    assert MapSpec.henon(0, 0.85, 0.7).quadratic_coefficients == (0.0, 0.0, -1.0)
    assert MapSpec.mira(0, 0.85, 0.7).quadratic_coefficients == (-1.0, 0.0, 0.0)
