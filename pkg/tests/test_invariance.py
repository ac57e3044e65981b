import pytest
import sympy as sp

from pdesym import catalog
from pdesym.fields import Chart, OperatorFamily, VectorField
from pdesym.invariance import (
    Verdict,
    determining_system,
    lie_check,
    qcond_check,
)
from pdesym.kernel import ConstraintSet, is_zero, normalize, ufn
from pdesym.jet import JetSpace, PDESystem

t = sp.Symbol("t")


# ---------------------------------------------------------------------------
# Classical invariance.
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("n", [1, 2, 3])
def test_heat_algebra_is_lie_invariant(n):
    sys = catalog.lhe(n)
    for q in catalog.lhe_algebra(n):
        rep = lie_check(sys, q)
        assert rep.passed, (q.name, rep.residuals)


def test_heat_source_term():
    for n in (1, 2):
        sys = catalog.lhe(n)
        q, cs = catalog.lhe_source_term(n)
        assert lie_check(sys, q, cs).passed
        assert lie_check(sys, q).verdict is Verdict.NOT_INVARIANT


def test_projective_generator_u_coefficient_negative_control():
    # the u-coefficient needs 2nt; with 2t the check must fail for n = 2
    sys = catalog.lhe(2)
    space = sys.space
    xs = space.independents[1:]
    u = space.coord("u", space.zero_index())
    bad = VectorField(
        space,
        (4 * t**2, 4 * t * xs[0], 4 * t * xs[1]),
        (-(xs[0] ** 2 + xs[1] ** 2 + 2 * t) * u,),
        "Pi(2t)",
    )
    rep = lie_check(sys, bad)
    assert rep.verdict is Verdict.NOT_INVARIANT
    assert any(normalize(r - 2 * u) == 0 for r in rep.residuals)


def test_scaling_is_not_a_symmetry_alone():
    sys = catalog.lhe(2)
    space = sys.space
    q = VectorField(space, (0, space.independents[1], 0), (0,), "x1 d1")
    assert lie_check(sys, q).verdict is Verdict.NOT_INVARIANT


def test_euler_and_ns_algebras():
    sys = catalog.euler()
    for q in catalog.euler_algebra():
        assert lie_check(sys, q).passed, q.name
    ns = catalog.navier_stokes()
    for q in catalog.ns_algebra():
        assert lie_check(ns, q).passed, q.name


def test_euler_dilations_fail_on_ns():
    ns = catalog.navier_stokes()
    by_name = {g.name: g for g in catalog.euler_algebra()}
    ns_dt = VectorField(ns.space, by_name["Dt"].xi, by_name["Dt"].eta, "Dt")
    assert lie_check(ns, ns_dt).verdict is Verdict.NOT_INVARIANT


# ---------------------------------------------------------------------------
# Conditional invariance.
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("n", [2, 3])
def test_qtilde1(n):
    entry = catalog.qtilde1(n)
    assert entry.check().passed


def test_qtilde1_negative_control_without_constraint():
    entry = catalog.qtilde1(2)
    rep = qcond_check(entry.system, entry.family, None, entry.chart)
    assert rep.verdict is Verdict.NOT_INVARIANT
    # the residual lies in the ideal of the dropped constraint
    nonzero = [r for r in rep.residuals if r != 0]
    assert nonzero
    for r in nonzero:
        assert is_zero(r, entry.constraints)


@pytest.mark.parametrize("n", [2, 3])
def test_qtilde2(n):
    entry = catalog.qtilde2(n)
    assert entry.check().passed


@pytest.mark.parametrize("fam", ["a", "b", "c", "d"])
def test_qtilde2_closed_form_families(fam):
    entry = catalog.qtilde2(2, fam)
    assert entry.check().passed


def test_euler_qtilde_and_sign_controls():
    entry = catalog.euler_qtilde()
    assert entry.check().passed

    space = entry.system.space
    x3 = space.independents[3]
    u3 = space.coord("u3", space.zero_index())
    zeta = ufn("zeta", t, x3, u3)
    zeta_u = ufn("zeta", t, x3, u3, beta=(0, 0, 1))
    chi = ufn("chi", t)

    # flipped sign on the mixed transport term: not invariant
    flipped = ConstraintSet.from_equations(
        [
            (ufn("zeta", t, x3, u3, beta=(0, 1, 0)), -zeta * zeta_u),
            (
                ufn("zeta", t, x3, u3, beta=(1, 0, 0)),
                -(u3 * zeta + chi * x3) * zeta_u - zeta**2 - chi,
            ),
        ]
    )
    rep = qcond_check(entry.system, entry.family, flipped, entry.chart)
    assert rep.verdict is Verdict.NOT_INVARIANT

    # omitting the zeta_t constraint entirely: not invariant
    partial = ConstraintSet.from_equations(
        [(ufn("zeta", t, x3, u3, beta=(0, 1, 0)), -zeta * zeta_u)]
    )
    rep = qcond_check(entry.system, entry.family, partial, entry.chart)
    assert rep.verdict is Verdict.NOT_INVARIANT


def test_euler_qtilde_explicit_solution():
    # chi = 0, zeta = u3/(x3 + c) solves both transport constraints
    entry = catalog.euler_qtilde()
    space = entry.system.space
    x3 = space.independents[3]
    u3 = space.coord("u3", space.zero_index())
    c = sp.Symbol("c")
    q = VectorField(
        entry.system.space, (0, 0, 0, 1), (0, 0, u3 / (x3 + c), 0), "Qexp"
    )
    rep = qcond_check(entry.system, q, None, Chart((x3 + c,)))
    assert rep.passed


# ---------------------------------------------------------------------------
# Determining systems.
# ---------------------------------------------------------------------------

def _template_space():
    x = sp.Symbol("x1")
    space = JetSpace((t, x), ("u",), 2)
    z = space.zero_index()
    sys = PDESystem(space, ((space.coord("u", z.bump(0)), space.coord("u", (0, 2))),), "heat1")
    return space, sys


def test_determining_lie_mode():
    space, sys = _template_space()
    x = space.independents[1]
    u = space.coord("u", space.zero_index())
    eta = ufn("eta", t, x, u)
    template = VectorField(space, (0, 1), (eta,), "Q")
    eqs = determining_system(sys, template, "lie")
    # coefficients of u_x monomials: eta_uu, eta_xu, and eta_t - eta_xx
    assert len(eqs) == 3
    expected = {
        normalize(ufn("eta", t, x, u, beta=(0, 0, 2))),
        normalize(ufn("eta", t, x, u, beta=(0, 1, 1))),
        normalize(
            ufn("eta", t, x, u, beta=(1, 0, 0)) - ufn("eta", t, x, u, beta=(0, 2, 0))
        ),
    }
    got = {normalize(sp.factor_list(e)[1][0][0]) for e in eqs}
    assert {normalize(e) for e in expected} <= {normalize(e) for e in got} | {
        normalize(-e) for e in got
    }


def test_determining_qcond_mode():
    space, sys = _template_space()
    x = space.independents[1]
    u = space.coord("u", space.zero_index())
    eta = ufn("eta", t, x, u)
    eta_u = ufn("eta", t, x, u, beta=(0, 0, 1))
    template = VectorField(space, (0, 1), (eta,), "Q")
    eqs = determining_system(sys, template, "qcond")
    assert len(eqs) == 1
    expected = (
        ufn("eta", t, x, u, beta=(1, 0, 0))
        - ufn("eta", t, x, u, beta=(0, 2, 0))
        - 2 * eta * ufn("eta", t, x, u, beta=(0, 1, 1))
        - eta**2 * ufn("eta", t, x, u, beta=(0, 0, 2))
    )
    assert normalize(eqs[0] - expected) == 0 or normalize(eqs[0] + expected) == 0
