import numpy as np
import pytest

from conftest import random_hexagon, vertex_oracle_2d
from evikit.errors import DomainError, Infeasible, InvariantViolation, TooLarge
from evikit.linsolve import LinearProgram, solve_lp
from evikit.polytope import (
    Polytope,
    enumerate_vertices,
    membership,
    product_polytope,
    vi_gap,
)

UNIT_SQUARE = Polytope.box([0.0, 0.0], [1.0, 1.0], name="unit-square")
SEGMENT = Polytope(A=[[1.0], [-1.0]], b=[1.0, 1.0], name="segment")


def sign_op(x):
    return np.where(np.asarray(x) < 0.0, -1.0, 1.0)


def test_membership_interior_and_boundary():
    assert membership(UNIT_SQUARE, [0.5, 0.5]) == (True, None)
    ok, sep = membership(UNIT_SQUARE, [1.5, 0.0])
    assert not ok
    np.testing.assert_array_equal(sep.normal, [1.0, 0.0])
    assert sep.offset == 1.0
    assert membership(UNIT_SQUARE, [1.0, 1.0], tol=1e-9)[0]


def test_separator_validity_is_supported_by_lp(rng):
    for _ in range(50):
        A, b = random_hexagon(rng)
        X = Polytope(A=A, b=b)
        x = X.interior_point + rng.normal(scale=4.0, size=2)
        ok, sep = membership(X, x)
        if ok:
            continue
        best = solve_lp(LinearProgram(objective=sep.normal, lhs=A, rhs=b,
                                      direction="max"))
        assert sep.normal @ x > best.value - 1e-9


def test_vertex_enumeration_square_and_simplex():
    vl = enumerate_vertices(UNIT_SQUARE)
    got = {tuple(np.round(v, 9)) for v in vl.vertices}
    assert got == {(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)}

    simplex = Polytope.simplex(3)
    vl = enumerate_vertices(simplex)
    got = {tuple(np.round(v, 9)) for v in vl.vertices}
    assert got == {(1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)}


def test_vertex_enumeration_matches_pairwise_oracle(rng):
    for _ in range(40):
        A, b = random_hexagon(rng)
        X = Polytope(A=A, b=b)
        mine = enumerate_vertices(X).vertices
        want = vertex_oracle_2d(A, b)
        assert len(mine) == len(want)
        for v in want:
            assert np.min(np.abs(mine - v).max(axis=1)) <= 1e-7


def test_vertex_guard():
    big = Polytope.box(np.zeros(5), np.ones(5))
    with pytest.raises(TooLarge):
        enumerate_vertices(big)


def test_empty_polytope_raises_with_certificate():
    with pytest.raises(Infeasible) as exc:
        Polytope(A=[[1.0], [-1.0]], b=[-1.0, -1.0])
    assert exc.value.farkas is not None


def test_unbounded_polytope_rejected():
    with pytest.raises(InvariantViolation):
        Polytope(A=[[1.0, 0.0]], b=[1.0])


def test_geometry_metadata():
    assert SEGMENT.inner_radius == pytest.approx(1.0, abs=1e-9)
    assert SEGMENT.outer_radius == pytest.approx(1.0, abs=1e-9)
    assert UNIT_SQUARE.outer_radius == pytest.approx(np.sqrt(2.0), abs=1e-9)
    assert UNIT_SQUARE.inner_radius == pytest.approx(0.5, abs=1e-9)
    np.testing.assert_allclose(UNIT_SQUARE.interior_point, [0.5, 0.5], atol=1e-7)


def test_vi_gap_sign_examples():
    assert vi_gap(SEGMENT, sign_op, [0.0]) == pytest.approx(1.0, abs=1e-10)
    assert vi_gap(SEGMENT, sign_op, [0.5]) == pytest.approx(1.5, abs=1e-10)


def test_vi_gap_vanishing_field():
    def bos_field(z):
        return np.array([2.0 - 5.0 * z[1], 3.0 - 5.0 * z[0]])
    assert vi_gap(UNIT_SQUARE, bos_field, [0.6, 0.4]) == pytest.approx(0.0, abs=1e-10)


def test_vi_gap_requires_feasible_point():
    with pytest.raises(DomainError):
        vi_gap(SEGMENT, sign_op, [2.0])


def test_vi_gap_nonnegative_randomized(rng):
    for _ in range(200):
        A, b = random_hexagon(rng)
        X = Polytope(A=A, b=b)
        lam = rng.dirichlet(np.ones(2))
        vl = enumerate_vertices(X).vertices
        idx = rng.integers(0, len(vl), size=2)
        x = lam @ vl[idx]
        M = rng.normal(size=(2, 2))
        q = rng.normal(size=2)
        assert vi_gap(X, lambda z: M @ z + q, x) >= -1e-9


def test_json_round_trip(tmp_path):
    path = tmp_path / "poly.json"
    import json
    path.write_text(json.dumps(UNIT_SQUARE.to_dict()))
    loaded = Polytope.from_json(path)
    np.testing.assert_array_equal(loaded.A, UNIT_SQUARE.A)
    np.testing.assert_array_equal(loaded.b, UNIT_SQUARE.b)
    assert loaded.name == "unit-square"


def test_product_polytope_blocks():
    prod, blocks = product_polytope([Polytope.simplex(2), Polytope.simplex(2)])
    assert prod.dim == 4
    assert blocks == [(0, 2), (2, 4)]
    assert membership(prod, [0.3, 0.7, 1.0, 0.0])[0]
    assert not membership(prod, [0.3, 0.8, 1.0, 0.0])[0]
