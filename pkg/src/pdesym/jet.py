"""Jet-space bookkeeping: jet coordinates, total derivatives, PDE systems in
solved form, and restriction of expressions to the solution manifold (L) and
to the characteristic manifold (M) of an operator family."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import sympy as sp

from .kernel import (
    KernelError,
    differentiate,
    normalize,
)

__all__ = [
    "JetError",
    "MultiIndex",
    "JetSpace",
    "PDESystem",
    "total_derivative",
    "restrict_to_L",
    "MRules",
    "restrict_to_M",
    "restrict_to_ML",
]


class JetError(KernelError):
    pass


_NAME_RE = re.compile(r"^[A-Za-z][A-Za-z0-9]*$")


class MultiIndex(tuple):
    """Derivative multi-index over the independent variables."""

    def __new__(cls, entries: Iterable[int]):
        entries = tuple(int(v) for v in entries)
        if any(v < 0 for v in entries):
            raise JetError(f"negative multi-index {entries}")
        return super().__new__(cls, entries)

    @property
    def order(self) -> int:
        return sum(self)

    def bump(self, i: int) -> "MultiIndex":
        return MultiIndex(v + (1 if j == i else 0) for j, v in enumerate(self))

    def __add__(self, other):
        return MultiIndex(a + b for a, b in zip(self, other))

    def __sub__(self, other):
        return MultiIndex(a - b for a, b in zip(self, other))

    def dominates(self, other) -> bool:
        return all(a >= b for a, b in zip(self, other))


def _zero_index(n: int) -> MultiIndex:
    return MultiIndex((0,) * n)


@dataclass(frozen=True)
class JetSpace:
    """Declarations of independent/dependent variables with jet coordinates
    u^a_alpha named in the DSL convention (``u``, ``u_t``, ``u_{x1 x1}``)."""

    independents: tuple[sp.Symbol, ...]
    dependents: tuple[str, ...]
    order: int

    def __post_init__(self):
        names = [s.name for s in self.independents] + list(self.dependents)
        if len(set(names)) != len(names):
            raise JetError(f"variable names are not distinct: {names}")
        for nm in names:
            if not _NAME_RE.match(nm):
                raise JetError(f"bad variable name {nm!r}")
        if self.order < 1:
            raise JetError("jet order must be >= 1")

    @property
    def n(self) -> int:
        return len(self.independents)

    @property
    def m(self) -> int:
        return len(self.dependents)

    def axis(self, x: sp.Symbol | str) -> int:
        name = x.name if isinstance(x, sp.Symbol) else x
        for i, s in enumerate(self.independents):
            if s.name == name:
                return i
        raise JetError(f"not an independent variable: {name}")

    def zero_index(self) -> MultiIndex:
        return _zero_index(self.n)

    def coord(self, dep: str, alpha: Sequence[int]) -> sp.Symbol:
        """The jet coordinate symbol u^a_alpha."""
        if dep not in self.dependents:
            raise JetError(f"unknown dependent variable {dep!r}")
        alpha = MultiIndex(alpha)
        if len(alpha) != self.n:
            raise JetError(f"multi-index length {len(alpha)} != {self.n}")
        parts = []
        for count, x in zip(alpha, self.independents):
            parts.extend([x.name] * count)
        if not parts:
            return sp.Symbol(dep)
        if len(parts) == 1:
            return sp.Symbol(f"{dep}_{parts[0]}")
        return sp.Symbol(f"{dep}_{{{' '.join(parts)}}}")

    def decode(self, s: sp.Symbol) -> tuple[str, MultiIndex] | None:
        """Inverse of :meth:`coord`; None when ``s`` is not a jet coordinate
        of this space."""
        name = s.name
        if name in self.dependents:
            return name, self.zero_index()
        if "_" not in name:
            return None
        dep, _, sub = name.partition("_")
        if dep not in self.dependents:
            return None
        if sub.startswith("{") and sub.endswith("}"):
            parts = sub[1:-1].split()
        else:
            parts = [sub]
        alpha = [0] * self.n
        index = {x.name: i for i, x in enumerate(self.independents)}
        for p in parts:
            if p not in index:
                return None
            alpha[index[p]] += 1
        return dep, MultiIndex(alpha)

    def jet_atoms(self, e: sp.Expr) -> dict[sp.Symbol, tuple[str, MultiIndex]]:
        """Jet coordinates of this space occurring (as free symbols) in e."""
        out = {}
        for s in e.free_symbols:
            d = self.decode(s)
            if d is not None:
                out[s] = d
        return out

    def extend(self, order: int) -> "JetSpace":
        if order <= self.order:
            return self
        return JetSpace(self.independents, self.dependents, order)


def total_derivative(e: sp.Expr, i: int | sp.Symbol, space: JetSpace) -> sp.Expr:
    """Total derivative D_i: differentiates through every jet coordinate,
    extending the jet space on demand."""
    if isinstance(i, sp.Symbol):
        i = space.axis(i)
    e = sp.sympify(e)
    x = space.independents[i]
    res = differentiate(e, x)
    for s, (dep, alpha) in space.jet_atoms(e).items():
        de = differentiate(e, s)
        if de != 0:
            res += space.coord(dep, alpha.bump(i)) * de
    return res


def total_derivative_multi(e: sp.Expr, gamma: Sequence[int], space: JetSpace) -> sp.Expr:
    for i, count in enumerate(gamma):
        for _ in range(count):
            e = sp.expand(total_derivative(e, i, space))
    return e


@dataclass
class PDESystem:
    """A PDE system in solved form: each equation is a jet coordinate
    (the leading derivative) equal to a right-hand side."""

    space: JetSpace
    equations: tuple[tuple[sp.Symbol, sp.Expr], ...]
    name: str = ""
    _derived: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.equations = tuple((lhs, sp.sympify(rhs)) for lhs, rhs in self.equations)
        seen = set()
        for lhs, _rhs in self.equations:
            d = self.space.decode(lhs)
            if d is None:
                raise JetError(f"solved coordinate {lhs} is not a jet coordinate")
            if lhs in seen:
                raise JetError(f"coordinate {lhs} solved twice")
            seen.add(lhs)

    @property
    def order(self) -> int:
        return self.space.order

    def solved(self) -> list[tuple[str, MultiIndex, sp.Expr]]:
        out = []
        for lhs, rhs in self.equations:
            dep, alpha = self.space.decode(lhs)
            out.append((dep, alpha, rhs))
        return out

    def residuals(self) -> list[sp.Expr]:
        """lhs - rhs for each equation."""
        return [lhs - rhs for lhs, rhs in self.equations]

    def derived_rhs(self, dep: str, alpha: MultiIndex, gamma: MultiIndex) -> sp.Expr:
        """D^gamma applied to the rhs solved for u^dep_alpha."""
        key = (dep, alpha, gamma)
        hit = self._derived.get(key)
        if hit is not None:
            return hit
        for d2, a2, rhs in self.solved():
            if d2 == dep and a2 == alpha:
                val = total_derivative_multi(rhs, gamma, self.space)
                self._derived[key] = val
                return val
        raise JetError(f"no equation solved for {dep}^{alpha}")


_MAX_RESTRICT_PASSES = 80


def restrict_to_L(e: sp.Expr, sys: PDESystem, *, do_normalize: bool = True) -> sp.Expr:
    """Eliminate every solved coordinate and its total-derivative successors."""
    e = sp.sympify(e)
    solved = sys.solved()
    for _ in range(_MAX_RESTRICT_PASSES):
        mapping = {}
        for s, (dep, alpha) in sys.space.jet_atoms(e).items():
            for d2, a2, _rhs in solved:
                if dep == d2 and alpha.dominates(a2):
                    mapping[s] = sys.derived_rhs(d2, a2, alpha - a2)
                    break
        if not mapping:
            return normalize(e) if do_normalize else e
        e = sp.expand(e.xreplace(mapping))
    raise JetError("restriction to L did not terminate (acyclicity violated?)")


@dataclass
class MRules:
    """Characteristic substitution rules of a canonicalized operator family:
    for each dependent variable and characteristic axis c,
    u^a_c = eta^a - sum over non-characteristic axes of xi^i u^a_i,
    together with all total-derivative consequences, generated on demand."""

    space: JetSpace
    directions: tuple[int, ...]
    base: dict[tuple[str, int], sp.Expr]
    _derived: dict = field(default_factory=dict, repr=False, compare=False)

    def derived(self, dep: str, c: int, gamma: MultiIndex) -> sp.Expr:
        key = (dep, c, gamma)
        hit = self._derived.get(key)
        if hit is not None:
            return hit
        val = total_derivative_multi(self.base[(dep, c)], gamma, self.space)
        self._derived[key] = val
        return val


def characteristic_rules(canonical_members, space: JetSpace) -> MRules:
    """Build M-rules from a canonicalized family.

    ``canonical_members`` is a list of (axis, VectorField-like) pairs where
    each member has xi equal to 1 on its own axis and 0 on the other
    canonical axes."""
    directions = tuple(axis for axis, _q in canonical_members)
    base = {}
    for axis, q in canonical_members:
        for a, dep in enumerate(space.dependents):
            rhs = q.eta[a]
            for i in range(space.n):
                if i == axis or i in directions:
                    continue
                if q.xi[i] != 0:
                    rhs = rhs - q.xi[i] * space.coord(dep, space.zero_index().bump(i))
            base[(dep, axis)] = normalize(rhs)
    return MRules(space=space, directions=directions, base=base)


def restrict_to_M(e: sp.Expr, rules: MRules, *, do_normalize: bool = True) -> sp.Expr:
    """Eliminate every derivative taken along a characteristic direction."""
    e = sp.sympify(e)
    space = rules.space
    for _ in range(_MAX_RESTRICT_PASSES):
        mapping = {}
        for s, (dep, alpha) in space.jet_atoms(e).items():
            chars = [c for c in rules.directions if alpha[c] > 0]
            if chars:
                c = max(chars)
                mapping[s] = rules.derived(dep, c, alpha - space.zero_index().bump(c))
        if not mapping:
            return normalize(e) if do_normalize else e
        e = sp.expand(e.xreplace(mapping))
    raise JetError("restriction to M did not terminate")


def restrict_to_ML(e: sp.Expr, sys: PDESystem, rules: MRules) -> sp.Expr:
    """Joint restriction to the intersection of M and L.  M-rules take
    precedence when both solve the same coordinate; iterated to a fixed
    point."""
    e = sp.sympify(e)
    for _ in range(_MAX_RESTRICT_PASSES):
        e1 = restrict_to_M(e, rules, do_normalize=False)
        e1 = restrict_to_L(e1, sys, do_normalize=False)
        e1 = restrict_to_M(e1, rules, do_normalize=False)
        if sp.expand(e1 - e) == 0:
            return normalize(e1)
        e = e1
    raise JetError("joint restriction to M and L did not terminate")
