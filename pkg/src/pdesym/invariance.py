"""Invariance checkers: classical Lie invariance, Q-conditional invariance of
an involutive operator family, and determining systems for undetermined
operator coefficients."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum

import sympy as sp

from .kernel import (
    ConstraintSet,
    InconclusiveError,
    KernelError,
    normalize,
    zero_decision,
)
from .jet import (
    JetError,
    JetSpace,
    MRules,
    MultiIndex,
    PDESystem,
    restrict_to_L,
    restrict_to_ML,
    restrict_to_M,
)
from .fields import (
    Chart,
    OperatorFamily,
    Prolongation,
    VectorField,
    canonicalize,
    is_involutive,
)

__all__ = [
    "Verdict",
    "InvarianceReport",
    "lie_check",
    "qcond_check",
    "determining_system",
]


class Verdict(str, Enum):
    INVARIANT = "invariant"
    NOT_INVARIANT = "not-invariant"
    INCONCLUSIVE = "inconclusive"


@dataclass
class InvarianceReport:
    system: str
    family: str
    residuals: list[sp.Expr]
    verdict: Verdict
    constraints: str = ""
    witness: dict | None = None
    elapsed: float = 0.0

    @property
    def passed(self) -> bool:
        return self.verdict is Verdict.INVARIANT


def _assemble(system, family, decisions, constraints, started) -> InvarianceReport:
    residuals = [d.normal_form for d in decisions]
    if all(d.verdict is True for d in decisions):
        verdict, witness = Verdict.INVARIANT, None
    elif any(d.verdict is False for d in decisions):
        bad = next(d for d in decisions if d.verdict is False)
        verdict, witness = Verdict.NOT_INVARIANT, bad.witness
    else:
        verdict, witness = Verdict.INCONCLUSIVE, None
    return InvarianceReport(
        system=system,
        family=family,
        residuals=residuals,
        verdict=verdict,
        constraints=constraints.description if constraints else "",
        witness=witness,
        elapsed=time.monotonic() - started,
    )


def lie_check(
    sys: PDESystem,
    q: VectorField,
    constraints: ConstraintSet | None = None,
    *,
    seed: int = 0,
) -> InvarianceReport:
    """Classical invariance: the prolonged field annihilates each equation on
    the solution manifold L alone."""
    started = time.monotonic()
    pr = Prolongation(q)
    decisions = []
    for lhs, rhs in sys.equations:
        residual = pr.apply(lhs - rhs)
        residual = restrict_to_L(residual, sys)
        decisions.append(zero_decision(residual, constraints, seed=seed))
    return _assemble(sys.name, q.name, decisions, constraints, started)


def qcond_check(
    sys: PDESystem,
    family: OperatorFamily | VectorField,
    constraints: ConstraintSet | None = None,
    chart: Chart = Chart(),
    *,
    seed: int = 0,
) -> InvarianceReport:
    """Conditional invariance: the prolonged members annihilate each equation
    on the intersection of the characteristic manifold M (from the
    canonicalized family) and the solution manifold L."""
    started = time.monotonic()
    if isinstance(family, VectorField):
        family = OperatorFamily((family,), name=family.name)
    ok, _zeta = is_involutive(family, chart, constraints, seed=seed)
    if not ok:
        raise KernelError(f"family {family.name} is not involutive")
    canonical = canonicalize(family, chart, constraints, seed=seed)
    rules = canonical.characteristic_rules()
    qsys = _displace_system(sys, rules, chart)
    decisions = []
    for q in family:
        pr = Prolongation(q)
        for lhs, rhs in sys.equations:
            residual = pr.apply(lhs - rhs)
            residual = restrict_to_ML(residual, qsys, rules)
            decisions.append(zero_decision(residual, constraints, seed=seed))
    return _assemble(sys.name, family.name, decisions, constraints, started)


def _displace_system(sys: PDESystem, rules: MRules, chart: Chart) -> PDESystem:
    """Re-solve equations whose leading derivative is eliminated by the
    characteristic rules.  The displaced equation stays in the system, solved
    for another coordinate, so it still vanishes on the intersection with M."""
    space = sys.space
    new_eqs = []
    for lhs, rhs in sys.equations:
        dep, alpha = space.decode(lhs)
        if not any(alpha[c] > 0 for c in rules.directions):
            new_eqs.append((lhs, rhs))
            continue
        constraint = restrict_to_M(lhs - rhs, rules, do_normalize=True)
        resolved = _solve_displaced(constraint, space, rules.directions, chart)
        if resolved is None:
            raise JetError(
                f"cannot re-solve displaced equation {lhs} = {rhs} on the chart"
            )
        new_eqs.append(resolved)
    return PDESystem(space, tuple(new_eqs), name=sys.name)


def _solve_displaced(expr, space: JetSpace, exclude_dirs, chart: Chart):
    """Solve ``expr = 0`` for the highest-ranked jet coordinate that appears
    linearly with a chart-invertible coefficient and carries no derivative
    along an excluded direction."""
    candidates = []
    for s, (dep, alpha) in space.jet_atoms(expr).items():
        if alpha.order == 0:
            continue
        if any(alpha[c] > 0 for c in exclude_dirs):
            continue
        candidates.append((alpha.order, space.dependents.index(dep), tuple(alpha), s))
    for _order, _depi, _alpha, s in sorted(candidates, reverse=True):
        tmp = sp.Dummy("lead")
        ex2 = sp.expand(expr.xreplace({s: tmp}))
        try:
            poly = sp.Poly(ex2, tmp)
        except sp.PolynomialError:
            continue
        if poly.degree() != 1:
            continue
        coeff = poly.nth(1)
        if not (normalize(coeff) in (sp.Integer(1), sp.Integer(-1)) or chart.is_invertible(coeff)):
            continue
        return s, normalize(-poly.nth(0) / coeff)
    return None


def determining_system(
    sys: PDESystem,
    template: VectorField,
    mode: str = "lie",
    chart: Chart = Chart(),
) -> list[sp.Expr]:
    """Equations in the template's undetermined coefficients obtained by
    collecting coefficients of monomials in the parametric jet coordinates of
    the restricted invariance residual.

    ``mode`` is "lie" or "qcond"; in qcond mode the template must already be
    in canonical form (constant 0/1 xi components)."""
    if mode not in ("lie", "qcond"):
        raise KernelError(f"unknown mode {mode!r}")
    space = sys.space
    pr = Prolongation(template)
    residuals = []
    if mode == "lie":
        for lhs, rhs in sys.equations:
            residuals.append(restrict_to_L(pr.apply(lhs - rhs), sys))
    else:
        for v in template.xi:
            if v not in (sp.Integer(0), sp.Integer(1)):
                raise KernelError(
                    "qcond determining systems require a canonical-form template"
                )
        directions = tuple(i for i, v in enumerate(template.xi) if v == 1)
        if len(directions) != 1:
            raise KernelError("qcond template must have exactly one unit xi component")
        canonical = canonicalize(OperatorFamily((template,)), chart)
        rules = canonical.characteristic_rules()
        qsys = _displace_system(sys, rules, chart)
        for lhs, rhs in sys.equations:
            residuals.append(restrict_to_ML(pr.apply(lhs - rhs), qsys, rules))

    equations: list[sp.Expr] = []
    for residual in residuals:
        params = [
            s
            for s, (_dep, alpha) in sorted(
                space.jet_atoms(residual).items(), key=lambda kv: sp.default_sort_key(kv[0])
            )
            if alpha.order >= 1
        ]
        if not params:
            eqs = [residual]
        else:
            poly = sp.Poly(sp.expand(residual), *params)
            eqs = [normalize(c) for c in poly.coeffs()]
        for e in eqs:
            if e != 0 and e not in equations:
                equations.append(e)
            elif e == 0 and not equations:
                pass
    return equations
