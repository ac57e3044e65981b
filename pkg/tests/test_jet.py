import random

import pytest
import sympy as sp
from hypothesis import given, strategies as st

from pdesym.jet import (
    JetError,
    JetSpace,
    MultiIndex,
    PDESystem,
    restrict_to_L,
    total_derivative,
    total_derivative_multi,
)
from pdesym.kernel import normalize, ufn
from conftest import random_expr

t, x1, x2 = sp.symbols("t x1 x2")


@pytest.fixture(scope="module")
def space():
    return JetSpace((t, x1, x2), ("u",), 4)


def test_multiindex_basics():
    a = MultiIndex((1, 0, 2))
    assert a.order == 3
    assert a.bump(1) == MultiIndex((1, 1, 2))
    assert a.dominates(MultiIndex((1, 0, 1)))
    assert not MultiIndex((0, 1, 0)).dominates(a)


def test_coord_naming(space):
    z = space.zero_index()
    assert space.coord("u", z).name == "u"
    assert space.coord("u", z.bump(0)).name == "u_t"
    assert space.coord("u", (0, 2, 0)).name == "u_{x1 x1}"
    assert space.coord("u", (1, 1, 1)).name == "u_{t x1 x2}"


@given(st.lists(st.integers(min_value=0, max_value=2), min_size=3, max_size=3))
def test_coord_decode_roundtrip(alpha):
    space = JetSpace((t, x1, x2), ("u",), 6)
    s = space.coord("u", alpha)
    dep, back = space.decode(s)
    assert dep == "u"
    assert tuple(back) == tuple(alpha)


def test_decode_rejects_foreign(space):
    assert space.decode(sp.Symbol("v_t")) is None
    assert space.decode(t) is None


def test_unknown_dependent(space):
    with pytest.raises(JetError):
        space.coord("w", space.zero_index())


def test_total_derivative_of_base_coordinates(space):
    z = space.zero_index()
    u = space.coord("u", z)
    assert total_derivative(x1, 1, space) == 1
    assert total_derivative(x1, 2, space) == 0
    assert normalize(total_derivative(u, 0, space) - space.coord("u", z.bump(0))) == 0


def test_total_derivative_leibniz(space):
    z = space.zero_index()
    u = space.coord("u", z)
    e = x1 * u**2
    expected = u**2 + 2 * x1 * u * space.coord("u", z.bump(1))
    assert normalize(total_derivative(e, 1, space) - expected) == 0


@given(st.integers(min_value=0, max_value=10_000))
def test_total_derivative_commutation(seed):
    space = JetSpace((t, x1, x2), ("u",), 4)
    z = space.zero_index()
    atoms = [t, x1, space.coord("u", z), space.coord("u", z.bump(1)), space.coord("u", z.bump(0))]
    e = random_expr(random.Random(seed), atoms)
    d12 = total_derivative(total_derivative(e, 1, space), 2, space)
    d21 = total_derivative(total_derivative(e, 2, space), 1, space)
    assert normalize(d12 - d21) == 0


def test_total_derivative_multi(space):
    z = space.zero_index()
    u = space.coord("u", z)
    e = total_derivative_multi(u, (0, 1, 1), space)
    assert normalize(e - space.coord("u", (0, 1, 1))) == 0


def test_total_derivative_through_ufn(space):
    g = ufn("g", t, x1)
    d = total_derivative(g, 1, space)
    assert normalize(d - ufn("g", t, x1, beta=(0, 1))) == 0


def test_restrict_to_L_heat():
    space = JetSpace((t, x1, x2), ("u",), 2)
    z = space.zero_index()
    rhs = space.coord("u", (0, 2, 0)) + space.coord("u", (0, 0, 2))
    sys = PDESystem(space, ((space.coord("u", z.bump(0)), rhs),), name="heat2")
    assert restrict_to_L(space.coord("u", z.bump(0)) - rhs, sys) == 0
    # a differential consequence is used too: u_tt rewrites via derived rules
    e = space.extend(4).coord("u", (2, 0, 0))
    sys4 = PDESystem(space.extend(4), ((space.coord("u", z.bump(0)), rhs),), name="heat2")
    reduced = restrict_to_L(e, sys4)
    assert space.extend(4).decode(sp.Symbol("u_{t t}")) is not None
    assert "u_{t t}" not in [s.name for s in reduced.free_symbols]


def test_system_requires_solved_jet_lhs():
    space = JetSpace((t, x1), ("u",), 2)
    with pytest.raises(JetError):
        PDESystem(space, ((t, space.coord("u", (1, 0))),), name="bad")
