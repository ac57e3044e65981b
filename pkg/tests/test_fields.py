import random

import pytest
import sympy as sp
from hypothesis import given, strategies as st

from pdesym.fields import (
    Chart,
    ChartError,
    OperatorFamily,
    PointTransformation,
    Prolongation,
    RankError,
    VectorField,
    canonicalize,
    commutator,
    equivalent_families,
    equivalent_mod_group,
    is_involutive,
    pushforward,
    verify_flow,
)
from pdesym.jet import JetSpace, MultiIndex, total_derivative
from pdesym.kernel import normalize, ufn
from conftest import random_expr

t, x1, x2, eps = sp.symbols("t x1 x2 epsilon")


@pytest.fixture(scope="module")
def space():
    return JetSpace((t, x1, x2), ("u",), 2)


def u0(space):
    return space.coord("u", space.zero_index())


# ---------------------------------------------------------------------------
# Chart.
# ---------------------------------------------------------------------------

def test_chart_invertibility():
    g = ufn("g", t, x1)
    chart = Chart((g, x1))
    assert chart.is_invertible(sp.Integer(3))
    assert chart.is_invertible(g)
    assert chart.is_invertible(-2 * g * x1**2)
    assert chart.is_invertible(sp.exp(t) / g)
    assert not chart.is_invertible(t)
    assert not chart.is_invertible(g + 1)
    assert not chart.is_invertible(sp.Integer(0))


# ---------------------------------------------------------------------------
# Vector fields and prolongation.
# ---------------------------------------------------------------------------

def test_apply_first_order(space):
    u = u0(space)
    q = VectorField(space, (0, 1, 0), (u,), "Q")
    assert normalize(q.apply(x1 * u) - (u + x1 * u)) == 0


def test_prolongation_galilean(space):
    # G_1 = t d/dx1 - x1 u/2 d/du on the heat space
    u = u0(space)
    q = VectorField(space, (0, t, 0), (-x1 * u / 2,), "G1")
    pr = Prolongation(q)
    z = space.zero_index()
    u_t, u_1 = space.coord("u", z.bump(0)), space.coord("u", z.bump(1))
    # eta^{t} = D_t(eta - xi^j u_j) + xi^j u_{tj}
    expected = -x1 * u_t / 2 - u_1
    assert normalize(pr.coefficient("u", z.bump(0)) - expected) == 0


@given(st.integers(min_value=0, max_value=10_000))
def test_prolongation_recurrence_matches_closed_formula(seed):
    rng = random.Random(seed)
    space = JetSpace((t, x1), ("u",), 4)
    z = space.zero_index()
    atoms = [t, x1, space.coord("u", z)]
    q = VectorField(
        space,
        (random_expr(rng, atoms, 2), random_expr(rng, atoms, 2)),
        (random_expr(rng, atoms, 2),),
        "Q",
    )
    pr = Prolongation(q)
    alpha = MultiIndex((rng.randint(0, 1), rng.randint(0, 1)))
    i = rng.randint(0, 1)
    lhs = pr.coefficient("u", alpha.bump(i))
    rhs = total_derivative(pr.coefficient("u", alpha), i, space) - sum(
        total_derivative(q.xi[j], i, space) * space.coord("u", alpha.bump(j))
        for j in range(space.n)
    )
    assert normalize(lhs - rhs) == 0


# ---------------------------------------------------------------------------
# Commutators.
# ---------------------------------------------------------------------------

def test_commutator_heat_algebra(space):
    u = u0(space)
    dt = VectorField(space, (1, 0, 0), (0,), "dt")
    d1 = VectorField(space, (0, 1, 0), (0,), "d1")
    G1 = VectorField(space, (0, t, 0), (-x1 * u / 2,), "G1")
    D = VectorField(space, (2 * t, x1, x2), (0,), "D")
    c = commutator(dt, G1)
    assert all(normalize(a - b) == 0 for a, b in zip(c.xi, d1.xi))
    assert normalize(c.eta[0]) == 0
    c2 = commutator(D, dt)
    assert normalize(c2.xi[0] + 2) == 0
    c3 = commutator(d1, G1)
    assert normalize(c3.eta[0] + u / 2) == 0


def test_commutator_antisymmetry(space):
    u = u0(space)
    q = VectorField(space, (u, 0, x1), (t * u,), "a")
    p = VectorField(space, (0, x2, 1), (u**2,), "b")
    c, cr = commutator(q, p), commutator(p, q)
    assert all(normalize(a + b) == 0 for a, b in zip(c.xi + c.eta, cr.xi + cr.eta))


# ---------------------------------------------------------------------------
# Involutivity, canonicalization, equivalence.
# ---------------------------------------------------------------------------

def test_involutive_examples(space):
    d1 = VectorField(space, (0, 1, 0), (0,), "d1")
    d2 = VectorField(space, (0, 0, 1), (0,), "d2")
    ok, table = is_involutive(OperatorFamily((d1, d2)))
    assert ok
    x1d2 = VectorField(space, (0, 0, x1), (0,), "x1d2")
    ok, _ = is_involutive(OperatorFamily((d1, x1d2)), Chart((x1,)))
    assert ok


def test_rank_violation(space):
    d1 = VectorField(space, (0, 1, 0), (0,), "d1")
    with pytest.raises(RankError):
        OperatorFamily((d1, d1.scaled(sp.Integer(2)))).check_rank()


def test_canonicalize_scaling(space):
    d1 = VectorField(space, (0, 2, 0), (0,), "2d1")
    canonical = canonicalize(OperatorFamily((d1,)), Chart())
    member = canonical.family.members[0]
    assert member.xi[1] == 1 and member.xi[0] == 0 and member.xi[2] == 0


def test_canonicalize_requires_invertible_minor(space):
    q = VectorField(space, (0, t, 0), (0,), "t d1")
    with pytest.raises(ChartError):
        canonicalize(OperatorFamily((q,)), Chart())


def test_equivalent_families_examples(space):
    u = u0(space)
    d1 = VectorField(space, (0, 1, 0), (0,), "d1")
    d2 = VectorField(space, (0, 0, 1), (0,), "d2")
    scaled = VectorField(space, (0, 1 + u**2, 0), (0,), "s")
    assert equivalent_families(OperatorFamily((d1,)), OperatorFamily((scaled,)), Chart((1 + u**2,)))
    assert not equivalent_families(OperatorFamily((d1,)), OperatorFamily((d2,)))
    mix_a = OperatorFamily((d1, d2))
    mix_b = OperatorFamily(
        (
            VectorField(space, (0, 1, 1), (0,), "p"),
            VectorField(space, (0, 1, -1), (0,), "m"),
        )
    )
    assert equivalent_families(mix_a, mix_b)


# ---------------------------------------------------------------------------
# Transformations and pushforward.
# ---------------------------------------------------------------------------

def _translation_flow(space):
    return PointTransformation(
        space,
        ((x1, x1 + eps),),
        ((x1, x1 - eps),),
        name="d1 flow",
        parameter=eps,
    )


def test_pushforward_translation_fixes_invariant_field(space):
    g = _translation_flow(space)
    dt_field = VectorField(space, (1, 0, 0), (0,), "dt")
    pushed = pushforward(g, dt_field)
    assert all(normalize(a - b) == 0 for a, b in zip(pushed.xi, dt_field.xi))
    assert normalize(pushed.eta[0]) == 0


def test_pushforward_first_order_expansion(space):
    # Ad(exp(eps V)) q = q + eps [V, q] + O(eps^2)
    u = u0(space)
    g = PointTransformation(
        space,
        ((x1, x1 + eps * t), (u, u * sp.exp(-eps * x1 / 2 - eps**2 * t / 4))),
        ((x1, x1 - eps * t), (u, u * sp.exp(eps * x1 / 2 - eps**2 * t / 4))),
        name="G1 flow",
        parameter=eps,
    )
    v = VectorField(space, (0, t, 0), (-x1 * u / 2,), "G1")
    q = VectorField(space, (1, 0, 0), (0,), "dt")
    pushed = pushforward(g, q)
    bracket = commutator(v, q)
    for comp, base, lin in zip(
        pushed.xi + pushed.eta, q.xi + q.eta, bracket.xi + bracket.eta
    ):
        series = sp.series(sp.together(comp), eps, 0, 2).removeO()
        assert normalize(series - base - eps * lin) == 0


def test_verify_flow_and_roundtrip(space):
    g = _translation_flow(space)
    d1 = VectorField(space, (0, 1, 0), (0,), "d1")
    assert verify_flow(d1, g, eps)
    assert g.check_roundtrip()
    bad = PointTransformation(
        space, ((x1, x1 + eps),), ((x1, x1 + eps),), name="bad", parameter=eps
    )
    assert not bad.check_roundtrip()


def test_equivalent_mod_group(space):
    g = _translation_flow(space)
    d1 = VectorField(space, (0, 1, 0), (0,), "d1")
    d2 = VectorField(space, (0, 0, 1), (0,), "d2")
    assert equivalent_mod_group(OperatorFamily((d1,)), OperatorFamily((d1,)), g)
    assert not equivalent_mod_group(OperatorFamily((d2,)), OperatorFamily((d1,)), g)
