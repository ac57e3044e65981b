"""Vector fields on (x, u)-space: prolongation to jet space, commutators,
involutive families, function-coefficient equivalence, canonicalization on a
chart, and adjoint actions of finite point transformations."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import sympy as sp

from .kernel import (
    ConstraintSet,
    InconclusiveError,
    KernelError,
    differentiate,
    is_zero,
    normalize,
)
from .jet import JetSpace, MRules, MultiIndex, characteristic_rules, total_derivative

__all__ = [
    "FieldError",
    "RankError",
    "ChartError",
    "Chart",
    "VectorField",
    "OperatorFamily",
    "PointTransformation",
    "Prolongation",
    "prolong",
    "apply_prolonged",
    "commutator",
    "is_involutive",
    "equivalent_families",
    "canonicalize",
    "CanonicalFamily",
    "pushforward",
    "equivalent_mod_group",
    "verify_flow",
]


class FieldError(KernelError):
    pass


class RankError(FieldError):
    """The coefficient matrix of a family does not have full rank."""


class ChartError(FieldError):
    """No invertible minor / factor available on the working chart."""


@dataclass(frozen=True)
class Chart:
    """Declared-nonvanishing expressions.  An expression is accepted as
    invertible iff it factors into rationals, powers, exponentials, and
    declared factors (each up to a rational multiple)."""

    nonvanishing: tuple[sp.Expr, ...] = ()

    def with_(self, *extra) -> "Chart":
        return Chart(self.nonvanishing + tuple(sp.sympify(x) for x in extra))

    def _factor_ok(self, f: sp.Expr) -> bool:
        if f.is_Rational:
            return f != 0
        if f.is_Pow and (f.exp.is_Integer or f.exp.is_Rational):
            return self._factor_ok(f.base)
        if f.func is sp.exp:
            return True
        for d in self.nonvanishing:
            q = sp.cancel(f / d)
            if q.is_Rational and q != 0:
                return True
        return False

    def is_invertible(self, e: sp.Expr) -> bool:
        e = normalize(sp.sympify(e))
        if e == 0:
            return False
        try:
            e = sp.factor(e)
        except Exception:
            pass
        factors = e.args if e.is_Mul else (e,)
        return all(self._factor_ok(f) for f in factors)


@dataclass(frozen=True)
class VectorField:
    """xi^i d/dx_i + eta^a d/du^a with coefficients depending only on the
    independent and dependent variables (no jet coordinates of order >= 1)."""

    space: JetSpace
    xi: tuple[sp.Expr, ...]
    eta: tuple[sp.Expr, ...]
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "xi", tuple(sp.sympify(v) for v in self.xi))
        object.__setattr__(self, "eta", tuple(sp.sympify(v) for v in self.eta))
        if len(self.xi) != self.space.n or len(self.eta) != self.space.m:
            raise FieldError("coefficient count does not match the jet space")
        for c in (*self.xi, *self.eta):
            for s, (_dep, alpha) in self.space.jet_atoms(c).items():
                if alpha.order >= 1:
                    raise FieldError(f"coefficient {c} contains jet coordinate {s}")

    def apply(self, f: sp.Expr) -> sp.Expr:
        """Derivation on functions of (x, u)."""
        out = sp.Integer(0)
        for x, c in zip(self.space.independents, self.xi):
            if c != 0:
                out += c * differentiate(f, x)
        for dep, c in zip(self.space.dependents, self.eta):
            if c != 0:
                out += c * differentiate(f, self.space.coord(dep, self.space.zero_index()))
        return out

    def scaled(self, factor: sp.Expr, name: str = "") -> "VectorField":
        factor = sp.sympify(factor)
        return VectorField(
            self.space,
            tuple(normalize(factor * v) for v in self.xi),
            tuple(normalize(factor * v) for v in self.eta),
            name or self.name,
        )

    def is_zero_field(self) -> bool:
        return all(normalize(c) == 0 for c in (*self.xi, *self.eta))


@dataclass(frozen=True)
class OperatorFamily:
    """l vector fields with coefficient matrix ||xi^{si}|| of rank l."""

    members: tuple[VectorField, ...]
    name: str = ""

    def __post_init__(self):
        if not self.members:
            raise FieldError("empty operator family")
        space = self.members[0].space
        if any(q.space != space for q in self.members):
            raise FieldError("family members live in different jet spaces")
        if len(self.members) > space.n:
            raise FieldError("family size exceeds the number of independent variables")

    def __iter__(self):
        return iter(self.members)

    def __len__(self):
        return len(self.members)

    @property
    def space(self) -> JetSpace:
        return self.members[0].space

    def xi_matrix(self) -> sp.Matrix:
        return sp.Matrix([[q.xi[i] for i in range(self.space.n)] for q in self.members])

    def check_rank(self) -> tuple[int, ...]:
        """Column indices of some minor with a nonzero normal form."""
        l = len(self.members)
        xi = self.xi_matrix()
        for cols in itertools.combinations(range(self.space.n), l):
            det = normalize(xi[:, list(cols)].det())
            if det != 0:
                return cols
        raise RankError(
            f"family {self.name or self.members}: rank of the xi matrix is below {l}"
        )


# ---------------------------------------------------------------------------
# Prolongation.
# ---------------------------------------------------------------------------

class Prolongation:
    """Prolonged coefficient table of a vector field, computed lazily via
    the closed formula eta^{a,alpha} = D^alpha(eta^a - xi^i u^a_i)
    + xi^i u^a_{alpha,i}."""

    def __init__(self, q: VectorField):
        self.q = q
        self.space = q.space
        self._dcache: dict[tuple[str, MultiIndex], sp.Expr] = {}
        self._table: dict[tuple[str, MultiIndex], sp.Expr] = {}

    def _d_alpha(self, dep: str, alpha: MultiIndex) -> sp.Expr:
        hit = self._dcache.get((dep, alpha))
        if hit is not None:
            return hit
        if alpha.order == 0:
            a = self.space.dependents.index(dep)
            val = self.q.eta[a] - sum(
                self.q.xi[i] * self.space.coord(dep, self.space.zero_index().bump(i))
                for i in range(self.space.n)
            )
            val = sp.expand(val)
        else:
            i = next(j for j, v in enumerate(alpha) if v > 0)
            prev = MultiIndex(v - (1 if j == i else 0) for j, v in enumerate(alpha))
            val = sp.expand(total_derivative(self._d_alpha(dep, prev), i, self.space))
        self._dcache[(dep, alpha)] = val
        return val

    def coefficient(self, dep: str, alpha: Sequence[int]) -> sp.Expr:
        """eta^{a,alpha}; for alpha = 0 this is eta^a itself."""
        alpha = MultiIndex(alpha)
        key = (dep, alpha)
        hit = self._table.get(key)
        if hit is not None:
            return hit
        val = self._d_alpha(dep, alpha) + sum(
            self.q.xi[i] * self.space.coord(dep, alpha.bump(i))
            for i in range(self.space.n)
        )
        val = sp.expand(val)
        self._table[key] = val
        return val

    def table(self, r: int) -> dict[tuple[str, MultiIndex], sp.Expr]:
        """All coefficients with |alpha| <= r."""
        out = {}
        for dep in self.space.dependents:
            for alpha in _multiindices(self.space.n, r):
                out[(dep, alpha)] = self.coefficient(dep, alpha)
        return out

    def apply(self, e: sp.Expr) -> sp.Expr:
        """Apply the prolonged operator to a jet-space expression, using only
        the coefficients actually needed."""
        e = sp.sympify(e)
        out = sp.Integer(0)
        for x, c in zip(self.space.independents, self.q.xi):
            if c != 0:
                de = differentiate(e, x)
                if de != 0:
                    out += c * de
        for s, (dep, alpha) in self.space.jet_atoms(e).items():
            de = differentiate(e, s)
            if de != 0:
                out += self.coefficient(dep, alpha) * de
        return sp.expand(out)


def _multiindices(n: int, max_order: int):
    def rec(prefix, remaining, budget):
        if remaining == 0:
            yield MultiIndex(prefix)
            return
        for v in range(budget + 1):
            yield from rec(prefix + [v], remaining - 1, budget - v)

    for order in range(max_order + 1):
        for idx in rec([], n, order):
            if idx.order == order:
                yield idx


def prolong(q: VectorField, r: int) -> dict[tuple[str, MultiIndex], sp.Expr]:
    """Full prolonged coefficient table {(dep, alpha): eta^{a,alpha}},
    |alpha| <= r."""
    if r < 1:
        raise FieldError("prolongation order must be >= 1")
    return Prolongation(q).table(r)


def apply_prolonged(q: VectorField, e: sp.Expr) -> sp.Expr:
    return Prolongation(q).apply(e)


# ---------------------------------------------------------------------------
# Commutators, involution, equivalence.
# ---------------------------------------------------------------------------

def commutator(q: VectorField, p: VectorField) -> VectorField:
    """[q, p] as a vector field on (x, u)-space."""
    if q.space != p.space:
        raise FieldError("commutator of fields in different spaces")
    xi = tuple(
        normalize(q.apply(p.xi[i]) - p.apply(q.xi[i])) for i in range(q.space.n)
    )
    eta = tuple(
        normalize(q.apply(p.eta[a]) - p.apply(q.eta[a])) for a in range(q.space.m)
    )
    return VectorField(q.space, xi, eta, name=f"[{q.name},{p.name}]")


def _solve_against_minor(
    family: OperatorFamily,
    cols: tuple[int, ...],
    minor_inv: sp.Matrix,
    target: VectorField,
    constraints: ConstraintSet | None,
    seed: int,
) -> tuple[sp.Expr, ...] | None:
    """Coefficients lam with target = lam^s member_s, or None."""
    vec = sp.Matrix([[target.xi[c] for c in cols]])
    lam = vec * minor_inv
    n, m = family.space.n, family.space.m
    for i in range(n):
        if i in cols:
            continue
        resid = target.xi[i] - sum(lam[s] * family.members[s].xi[i] for s in range(len(family)))
        if not is_zero(resid, constraints, seed=seed):
            return None
    for a in range(m):
        resid = target.eta[a] - sum(lam[s] * family.members[s].eta[a] for s in range(len(family)))
        if not is_zero(resid, constraints, seed=seed):
            return None
    return tuple(normalize(v) for v in lam)


def _invertible_minor(
    family: OperatorFamily, chart: Chart
) -> tuple[tuple[int, ...], sp.Matrix]:
    l = len(family)
    xi = family.xi_matrix()
    for cols in itertools.combinations(range(family.space.n), l):
        minor = xi[:, list(cols)]
        det = normalize(minor.det())
        if det != 0 and chart.is_invertible(det):
            inv = minor.inv()
            inv = inv.applyfunc(normalize)
            return cols, inv
    raise ChartError("no invertible minor of the xi matrix on this chart")


def is_involutive(
    family: OperatorFamily,
    chart: Chart = Chart(),
    constraints: ConstraintSet | None = None,
    *,
    seed: int = 0,
) -> tuple[bool, dict | None]:
    """Check closure of the family under commutators modulo function
    coefficients; returns the structure-coefficient table on success."""
    family.check_rank()
    if len(family) == 1:
        return True, {}
    cols, minor_inv = _invertible_minor(family, chart)
    zeta = {}
    for s, p in itertools.combinations(range(len(family)), 2):
        c = commutator(family.members[s], family.members[p])
        lam = _solve_against_minor(family, cols, minor_inv, c, constraints, seed)
        if lam is None:
            return False, None
        zeta[(s, p)] = lam
    return True, zeta


def equivalent_families(
    f: OperatorFamily,
    g: OperatorFamily,
    chart: Chart = Chart(),
    constraints: ConstraintSet | None = None,
    *,
    seed: int = 0,
) -> bool:
    """Span equality over the function ring, both directions."""
    if len(f) != len(g):
        return False

    def one_way(a: OperatorFamily, b: OperatorFamily) -> bool:
        cols, minor_inv = _invertible_minor(a, chart)
        for member in b:
            if _solve_against_minor(a, cols, minor_inv, member, constraints, seed) is None:
                return False
        return True

    return one_way(f, g) and one_way(g, f)


@dataclass(frozen=True)
class CanonicalFamily:
    """Equivalent family with xi equal to the identity on the chosen
    characteristic axes."""

    family: OperatorFamily
    directions: tuple[int, ...]

    def characteristic_rules(self) -> MRules:
        pairs = [(axis, q) for axis, q in zip(self.directions, self.family.members)]
        return characteristic_rules(pairs, self.family.space)


def canonicalize(
    family: OperatorFamily,
    chart: Chart = Chart(),
    constraints: ConstraintSet | None = None,
    *,
    seed: int = 0,
    verify_commutators: bool = True,
) -> CanonicalFamily:
    """Multiply by the inverse of an invertible minor so the chosen columns
    of xi become the identity; the result generates a commutative algebra,
    which is verified."""
    cols, minor_inv = _invertible_minor(family, chart)
    l = len(family)
    members = []
    for s in range(l):
        xi = tuple(
            normalize(sum(minor_inv[s, p] * family.members[p].xi[i] for p in range(l)))
            for i in range(family.space.n)
        )
        eta = tuple(
            normalize(sum(minor_inv[s, p] * family.members[p].eta[a] for p in range(l)))
            for a in range(family.space.m)
        )
        members.append(
            VectorField(family.space, xi, eta, name=f"{family.members[s].name or 'Q'}^")
        )
    canon = OperatorFamily(tuple(members), name=family.name)
    if verify_commutators:
        for s, p in itertools.combinations(range(l), 2):
            c = commutator(members[s], members[p])
            for coeff in (*c.xi, *c.eta):
                if not is_zero(coeff, constraints, seed=seed):
                    raise FieldError("canonicalized family is not commutative")
    return CanonicalFamily(canon, cols)


# ---------------------------------------------------------------------------
# Finite transformations.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PointTransformation:
    """A point transformation of (x, u)-space given by explicit forward and
    inverse coordinate maps (both written in the same symbols)."""

    space: JetSpace
    forward: tuple[tuple[sp.Symbol, sp.Expr], ...]
    inverse: tuple[tuple[sp.Symbol, sp.Expr], ...]
    name: str = ""
    parameter: sp.Symbol | None = None

    def __post_init__(self):
        object.__setattr__(
            self, "forward", tuple((s, sp.sympify(v)) for s, v in self.forward)
        )
        object.__setattr__(
            self, "inverse", tuple((s, sp.sympify(v)) for s, v in self.inverse)
        )

    def coordinates(self) -> list[sp.Symbol]:
        return list(self.space.independents) + [
            self.space.coord(dep, self.space.zero_index()) for dep in self.space.dependents
        ]

    def forward_map(self) -> dict:
        d = {s: v for s, v in self.forward}
        for c in self.coordinates():
            d.setdefault(c, c)
        return d

    def inverse_map(self) -> dict:
        d = {s: v for s, v in self.inverse}
        for c in self.coordinates():
            d.setdefault(c, c)
        return d

    def check_roundtrip(self, constraints=None, seed: int = 0) -> bool:
        fwd = self.forward_map()
        inv = self.inverse_map()
        for c in self.coordinates():
            composed = fwd[c].xreplace(inv)
            if not is_zero(composed - c, constraints, seed=seed):
                return False
        return True


def pushforward(g: PointTransformation, q: VectorField) -> VectorField:
    """Adjoint action Ad(g) q.

    Conventions are fixed by the one-parameter case: for g the time-eps flow
    of V, Ad(g) q = q + eps [V, q] + O(eps^2), so the coefficients are those
    of q chain-ruled through the inverse map and expressed via the forward
    map (Ad(g) is the pushforward along g^{-1})."""
    if not g.inverse:
        raise FieldError("pushforward requires an explicit inverse map")
    fwd = g.forward_map()
    inv = g.inverse_map()
    space = q.space
    xi = []
    for x in space.independents:
        xi.append(normalize(q.apply(inv[x]).xreplace(fwd)))
    eta = []
    for dep in space.dependents:
        c = space.coord(dep, space.zero_index())
        eta.append(normalize(q.apply(inv[c]).xreplace(fwd)))
    return VectorField(space, tuple(xi), tuple(eta), name=f"Ad({g.name}){q.name}")


def equivalent_mod_group(
    f: OperatorFamily,
    g_family: OperatorFamily,
    g: PointTransformation,
    chart: Chart = Chart(),
    constraints: ConstraintSet | None = None,
    *,
    seed: int = 0,
) -> bool:
    pushed = OperatorFamily(
        tuple(pushforward(g, q) for q in g_family), name=f"Ad({g.name}){g_family.name}"
    )
    return equivalent_families(f, pushed, chart, constraints, seed=seed)


def verify_flow(
    v: VectorField,
    g: PointTransformation,
    eps: sp.Symbol,
    constraints: ConstraintSet | None = None,
    *,
    seed: int = 0,
) -> bool:
    """Certify d/d(eps) forward = v composed with forward."""
    fwd = g.forward_map()
    space = v.space
    coeffs = dict(zip(space.independents, v.xi))
    coeffs.update(
        {space.coord(dep, space.zero_index()): e for dep, e in zip(space.dependents, v.eta)}
    )
    for c in g.coordinates():
        lhs = differentiate(fwd[c], eps)
        rhs = coeffs[c].xreplace(fwd)
        if not is_zero(lhs - rhs, constraints, seed=seed):
            return False
    return True
