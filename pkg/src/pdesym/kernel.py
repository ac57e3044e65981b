"""Exact symbolic kernel: expression trees, differentiation, substitution,
canonical normalization and a constraint-aware zero test.

Expressions are ordinary sympy trees restricted to a small fragment:
rationals, symbols, Add/Mul/Pow, a fixed table of elementary functions,
and applications of undetermined functions.  Derivatives of undetermined
functions are never stored as sympy ``Derivative`` nodes; instead each
derivative gets its own function head carrying a multi-index over the
argument slots (``g@1,0`` is dg/d(slot 1)).  This keeps every expression a
plain algebraic tree, so substitution, random evaluation and rewriting are
exact and structural.

All arithmetic is exact rational arithmetic; floating point enters only in
the randomized evaluation guard of :func:`is_zero`, and only to bound the
magnitude of transcendental constants.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import sympy as sp
from sympy.core.function import AppliedUndef

__all__ = [
    "KernelError",
    "UnsupportedExpressionError",
    "ConflictingRulesError",
    "RewriteDepthExceededError",
    "InconclusiveError",
    "ufn",
    "ufn_head",
    "ufn_info",
    "is_ufn",
    "differentiate",
    "substitute",
    "normalize",
    "ConstraintRule",
    "ConstraintSet",
    "EMPTY_CONSTRAINTS",
    "is_zero",
    "zero_decision",
    "ZeroDecision",
    "differential_order",
]


class KernelError(Exception):
    """Base class for kernel failures."""


class UnsupportedExpressionError(KernelError):
    """An expression node outside the supported fragment was encountered."""


class ConflictingRulesError(KernelError):
    """Two substitution rules target the same pattern with different results."""


class RewriteDepthExceededError(KernelError):
    """The constraint rewrite fixed point was not reached within the bound."""


class InconclusiveError(KernelError):
    """Zero test could not decide: nonzero normal form, no numeric witness."""

    def __init__(self, message, normal_form=None):
        super().__init__(message)
        self.normal_form = normal_form


# Derivative table for the supported elementary functions.  tan/tanh/coth
# are differentiated into polynomials of themselves so that normalization
# can close over them without extra rewrite rules.
ELEM_DERIVATIVES = {
    sp.exp: lambda a: sp.exp(a),
    sp.log: lambda a: 1 / a,
    sp.sin: lambda a: sp.cos(a),
    sp.cos: lambda a: -sp.sin(a),
    sp.tan: lambda a: 1 + sp.tan(a) ** 2,
    sp.sinh: lambda a: sp.cosh(a),
    sp.cosh: lambda a: sp.sinh(a),
    sp.tanh: lambda a: 1 - sp.tanh(a) ** 2,
    sp.coth: lambda a: 1 - sp.coth(a) ** 2,
}

ELEM_FUNCTIONS = tuple(ELEM_DERIVATIVES)


# ---------------------------------------------------------------------------
# Undetermined function heads.
#
# A head name is either a plain identifier (multi-index all zero) or
# "<name>@<i1>,...,<ik>" for the derivative with respect to argument slots.
# ---------------------------------------------------------------------------

_HEAD_INFO: dict[str, tuple[str, tuple[int, ...]]] = {}


def ufn_head(name: str, beta: Sequence[int]):
    """Function head for the beta-slot-derivative of the undetermined
    function ``name``."""
    beta = tuple(int(b) for b in beta)
    if any(b < 0 for b in beta):
        raise KernelError(f"negative derivative multi-index {beta} for {name}")
    if "@" in name:
        raise KernelError(f"bad undetermined function name {name!r}")
    if not any(beta):
        # bare heads carry no arity information; ufn_info derives the
        # zero multi-index from the application itself
        return sp.Function(name)
    mangled = name + "@" + ",".join(map(str, beta))
    _HEAD_INFO[mangled] = (name, beta)
    return sp.Function(mangled)


def ufn(name: str, *args, beta: Sequence[int] | None = None) -> sp.Expr:
    """Application of an undetermined function (or one of its slot
    derivatives) to ``args``."""
    args = tuple(sp.sympify(a) for a in args)
    if beta is None:
        beta = (0,) * len(args)
    beta = tuple(int(b) for b in beta)
    if len(beta) != len(args):
        raise KernelError(
            f"derivative multi-index length {len(beta)} != arity {len(args)} for {name}"
        )
    return ufn_head(name, beta)(*args)


def ufn_info(app: AppliedUndef) -> tuple[str, tuple[int, ...]]:
    """(base name, slot multi-index) of an undetermined function application."""
    mangled = app.func.__name__
    if mangled in _HEAD_INFO:
        base, beta = _HEAD_INFO[mangled]
        if len(beta) != len(app.args):
            raise KernelError(
                f"arity mismatch for {base}: multi-index {beta} vs {len(app.args)} args"
            )
        return base, beta
    if "@" in mangled:  # pragma: no cover - foreign mangled name
        raise KernelError(f"unregistered derivative head {mangled!r}")
    return mangled, (0,) * len(app.args)


def is_ufn(e: sp.Basic) -> bool:
    return isinstance(e, AppliedUndef)


def differential_order(e: sp.Expr) -> int:
    """Highest slot-derivative order of any undetermined function in ``e``."""
    e = sp.sympify(e)
    orders = [sum(ufn_info(a)[1]) for a in e.atoms(AppliedUndef)]
    return max(orders, default=0)


# ---------------------------------------------------------------------------
# Differentiation.
# ---------------------------------------------------------------------------

def differentiate(e: sp.Expr, s: sp.Symbol) -> sp.Expr:
    """Partial derivative of ``e`` with respect to the symbol ``s``.

    All other symbols are treated as constants; undetermined functions are
    chain-ruled through their argument slots.
    """
    e = sp.sympify(e)
    if not isinstance(s, sp.Symbol):
        raise UnsupportedExpressionError(f"can only differentiate by a symbol, got {s}")
    return _diff(e, s, {})


def _diff(e: sp.Expr, s: sp.Symbol, cache: dict) -> sp.Expr:
    key = e
    hit = cache.get(key)
    if hit is not None:
        return hit
    res = _diff_uncached(e, s, cache)
    cache[key] = res
    return res


def _diff_uncached(e, s, cache):
    if e is s:
        return sp.Integer(1)
    if e.is_Number:
        return sp.Integer(0)
    if e.is_Atom and e.is_number:
        # numeric constant atoms such as E or pi
        return sp.Integer(0)
    if e.is_Symbol:
        return sp.Integer(1) if e == s else sp.Integer(0)
    if e.is_Add:
        return sp.Add(*[_diff(a, s, cache) for a in e.args])
    if e.is_Mul:
        args = e.args
        terms = []
        for i, a in enumerate(args):
            da = _diff(a, s, cache)
            if da != 0:
                terms.append(sp.Mul(*args[:i], da, *args[i + 1 :]))
        return sp.Add(*terms)
    if e.is_Pow:
        b, p = e.args
        db = _diff(b, s, cache)
        dp = _diff(p, s, cache)
        res = sp.Integer(0)
        if db != 0:
            res += p * b ** (p - 1) * db
        if dp != 0:
            res += e * sp.log(b) * dp
        return res
    if isinstance(e, AppliedUndef):
        name, beta = ufn_info(e)
        total = sp.Integer(0)
        for j, arg in enumerate(e.args):
            da = _diff(sp.sympify(arg), s, cache)
            if da != 0:
                nb = list(beta)
                nb[j] += 1
                total += ufn_head(name, nb)(*e.args) * da
        return total
    if e.func in ELEM_DERIVATIVES:
        a = e.args[0]
        da = _diff(sp.sympify(a), s, cache)
        if da == 0:
            return sp.Integer(0)
        return ELEM_DERIVATIVES[e.func](a) * da
    raise UnsupportedExpressionError(f"cannot differentiate node {e.func}: {e}")


# ---------------------------------------------------------------------------
# Substitution.
# ---------------------------------------------------------------------------

def substitute(
    e: sp.Expr,
    rules: Iterable[tuple[sp.Expr, sp.Expr]],
    *,
    do_normalize: bool = True,
) -> sp.Expr:
    """Simultaneous replacement of maximal matches of the rule patterns.

    Patterns must be symbols or undetermined-function applications.  For a
    function pattern with distinct plain-symbol arguments, slot derivatives
    of the pattern occurring in ``e`` are replaced by the corresponding
    derivatives of the replacement (needed when instantiating a closed form
    for an undetermined function).
    """
    e = sp.sympify(e)
    mapping: dict[sp.Expr, sp.Expr] = {}
    for pat, rep in rules:
        pat = sp.sympify(pat)
        rep = sp.sympify(rep)
        if not (pat.is_Symbol or isinstance(pat, AppliedUndef)):
            raise KernelError(f"unsupported substitution pattern {pat}")
        if pat in mapping and mapping[pat] != rep:
            raise ConflictingRulesError(f"conflicting rules for pattern {pat}")
        mapping[pat] = rep

    extra: dict[sp.Expr, sp.Expr] = {}
    for pat, rep in mapping.items():
        if not isinstance(pat, AppliedUndef):
            continue
        name, beta = ufn_info(pat)
        args = pat.args
        if not all(a.is_Symbol for a in args) or len(set(args)) != len(args):
            continue
        for app in e.atoms(AppliedUndef):
            n2, b2 = ufn_info(app)
            if n2 != name or app.args != args or b2 == beta:
                continue
            if not all(x >= y for x, y in zip(b2, beta)):
                continue
            r = rep
            for a_sym, extra_ct in zip(args, (x - y for x, y in zip(b2, beta))):
                for _ in range(extra_ct):
                    r = differentiate(r, a_sym)
            if app in mapping and mapping[app] != r:
                raise ConflictingRulesError(f"conflicting rules for pattern {app}")
            extra[app] = r
    mapping.update(extra)
    out = e.xreplace(mapping)
    return normalize(out) if do_normalize else out


# ---------------------------------------------------------------------------
# Normalization.
# ---------------------------------------------------------------------------

_NORMALIZE_MAX_PASSES = 12


def _even_power_rewrite(e: sp.Expr) -> sp.Expr:
    """sin(x)^k -> (1-cos(x)^2)^(k//2) * sin(x)^(k%2) for k >= 2, and the
    hyperbolic analogue sinh(x)^k -> (cosh(x)^2-1)^(k//2) * sinh(x)^(k%2)."""

    def wanted(p):
        return (
            p.is_Pow
            and p.exp.is_Integer
            and p.exp >= 2
            and p.base.func in (sp.sin, sp.sinh)
        )

    def rewrite(p):
        a = p.base.args[0]
        k = int(p.exp)
        if p.base.func is sp.sin:
            sq = 1 - sp.cos(a) ** 2
        else:
            sq = sp.cosh(a) ** 2 - 1
        return sq ** (k // 2) * p.base ** (k % 2)

    return e.replace(wanted, rewrite)


def _rational_pow_rewrite(e: sp.Expr) -> sp.Expr:
    """Canonicalize non-integer rational powers: cancel the base, and pull an
    integer power with a rational sign out of it, so that compositions like
    (1/(1-w))^(3/2) * (1-w)^(3/2) collapse.  (Sound on charts where the
    surviving base is positive; bases with a negative rational coefficient
    and an even inner power are left untouched.)"""

    def wanted(p):
        return p.is_Pow and p.exp.is_Rational and not p.exp.is_Integer

    def rewrite(p):
        r = p.exp
        b = sp.cancel(p.base)
        c, rest = b.as_coeff_Mul()
        if not c.is_Rational or c == 0:
            return sp.Pow(b, r)
        k = sp.Integer(1)
        core = rest
        if rest.is_Pow and rest.exp.is_Integer:
            core, k = rest.base, rest.exp
        if c < 0:
            if k % 2 == 0:
                return sp.Pow(b, r)
            c, core = -c, -core
        return sp.Pow(c, r) * sp.Pow(core, k * r)

    return e.replace(wanted, rewrite)


def _cancel(e: sp.Expr) -> sp.Expr:
    try:
        return sp.cancel(e)
    except Exception:
        return sp.together(e)


def _normalize_args(e: sp.Expr) -> sp.Expr:
    """Normalize the arguments of every function application (rational
    normalization treats applications as atoms and never descends into
    them)."""

    def wanted(p):
        return p.func in ELEM_DERIVATIVES or isinstance(p, AppliedUndef)

    def rebuild(p):
        args = tuple(normalize(a) for a in p.args)
        return p if args == p.args else p.func(*args)

    return e.replace(wanted, rebuild)


def _normalize_pass(e: sp.Expr) -> sp.Expr:
    # The even-power rewrite runs on both the expanded and the cancelled
    # form: after cancellation a sin^2/sinh^2 may sit in a numerator where
    # plain expansion would fold it back into the denominator.
    e = _normalize_args(e)
    e = sp.expand(e)
    e = _rational_pow_rewrite(e)
    e = sp.powsimp(e)
    e = _even_power_rewrite(e)
    e = _cancel(sp.expand(e))
    e = _even_power_rewrite(e)
    e = _cancel(sp.expand(e))
    return e


def normalize(e: sp.Expr) -> sp.Expr:
    """Canonical form: expanded, like terms collected over exact rationals,
    rational-function normal form over the distinct non-rational subterms,
    with even powers of sin/sinh rewritten through cos/cosh.

    Iterates a single normalization pass to a structural fixed point, which
    makes the function idempotent by construction.
    """
    e = sp.sympify(e)
    for _ in range(_NORMALIZE_MAX_PASSES):
        ne = _normalize_pass(e)
        if ne == e:
            return ne
        e = ne
    return e


# ---------------------------------------------------------------------------
# Constraint rewriting.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConstraintRule:
    """One oriented rewrite rule: a slot derivative of an undetermined
    function, solved for that derivative.

    ``args`` are the formal arguments of the rule; matching applications may
    carry arbitrary actual arguments, in which case the (slot-level)
    replacement is instantiated by substituting formals by actuals.
    """

    name: str
    beta: tuple[int, ...]
    args: tuple[sp.Symbol, ...]
    replacement: sp.Expr

    def __post_init__(self):
        if not any(self.beta):
            raise KernelError("constraint rule must target a derivative")
        if not all(a.is_Symbol for a in self.args) or len(set(self.args)) != len(self.args):
            raise KernelError("constraint rule formal arguments must be distinct symbols")
        pat = self.pattern
        if pat in sp.sympify(self.replacement).atoms(AppliedUndef):
            raise KernelError(f"rule for {pat} directly references itself")

    @property
    def pattern(self) -> sp.Expr:
        return ufn_head(self.name, self.beta)(*self.args)


def _beta_key(name: str, beta: tuple[int, ...]):
    return (name, beta)


class ConstraintSet:
    """Oriented side relations on undetermined functions, used as rewrite
    rules (with differential consequences generated on demand) during
    zero testing."""

    def __init__(self, rules: Iterable[ConstraintRule] = (), description: str = ""):
        self.rules = tuple(rules)
        self.description = description
        seen = {}
        for r in self.rules:
            key = _beta_key(r.name, r.beta)
            if key in seen and seen[key] != r.replacement:
                raise ConflictingRulesError(f"conflicting constraint rules for {key}")
            seen[key] = r.replacement
        self._consequences: dict[tuple, sp.Expr] = {}

    def __bool__(self):
        return bool(self.rules)

    def __iter__(self):
        return iter(self.rules)

    @classmethod
    def from_equations(
        cls,
        equations: Iterable[tuple[sp.Expr, sp.Expr]],
        description: str = "",
    ) -> "ConstraintSet":
        """Build a set from equations lhs = rhs, each solved for the
        lexicographically highest derivative (function name, then slot
        multi-index) occurring in it."""
        rules = []
        for lhs, rhs in equations:
            expr = sp.sympify(lhs) - sp.sympify(rhs)
            cands = [
                (a, ufn_info(a))
                for a in expr.atoms(AppliedUndef)
                if any(ufn_info(a)[1])
            ]
            if not cands:
                raise KernelError(f"no derivative to solve for in {lhs} = {rhs}")
            cands.sort(key=lambda t: (t[1][0], t[1][1]))
            target, (name, beta) = cands[-1]
            tmp = sp.Dummy("solve")
            ex2 = sp.expand(expr.xreplace({target: tmp}))
            poly = sp.Poly(ex2, tmp)
            if poly.degree() != 1:
                raise KernelError(f"cannot solve {lhs} = {rhs} linearly for {target}")
            coeff = poly.nth(1)
            rest = poly.nth(0)
            replacement = normalize(-rest / coeff)
            rules.append(
                ConstraintRule(
                    name=name,
                    beta=beta,
                    args=tuple(target.args),
                    replacement=replacement,
                )
            )
        return cls(rules, description)

    def _consequence(self, rule: ConstraintRule, extra: tuple[int, ...]) -> sp.Expr:
        """Slot-level consequence of ``rule`` differentiated ``extra`` more
        times, expressed in the rule's formal arguments."""
        key = (rule.name, rule.beta, rule.args, extra)
        hit = self._consequences.get(key)
        if hit is not None:
            return hit
        r = rule.replacement
        for a_sym, ct in zip(rule.args, extra):
            for _ in range(ct):
                r = differentiate(r, a_sym)
        self._consequences[key] = r
        return r

    def _match_map(self, e: sp.Expr) -> dict:
        mapping = {}
        for app in e.atoms(AppliedUndef):
            name, beta = ufn_info(app)
            for rule in self.rules:
                if rule.name != name or len(rule.beta) != len(beta):
                    continue
                if not all(x >= y for x, y in zip(beta, rule.beta)):
                    continue
                extra = tuple(x - y for x, y in zip(beta, rule.beta))
                rep = self._consequence(rule, extra)
                if app.args != rule.args:
                    rep = rep.xreplace(dict(zip(rule.args, app.args)))
                mapping[app] = rep
                break
        return mapping

    def reduce(self, e: sp.Expr, bound: int | None = None) -> sp.Expr:
        """Rewrite ``e`` to a fixed point under the rules; normalized."""
        e = normalize(sp.sympify(e))
        if not self.rules:
            return e
        if bound is None:
            bound = 4 * (differential_order(e) + 1)
        for _ in range(bound):
            m = self._match_map(e)
            if not m:
                return e
            e = normalize(e.xreplace(m))
        if self._match_map(e):
            raise RewriteDepthExceededError(
                f"constraint rewriting did not terminate within {bound} passes"
            )
        return e


EMPTY_CONSTRAINTS = ConstraintSet()


# ---------------------------------------------------------------------------
# Zero testing.
# ---------------------------------------------------------------------------

@dataclass
class ZeroDecision:
    """Outcome of a zero test.  ``verdict`` is True (identically zero),
    False (nonzero, with a witness point), or None (inconclusive)."""

    verdict: bool | None
    normal_form: sp.Expr
    witness: dict | None = None
    witness_value: sp.Expr | None = None


def _random_rational(rng: random.Random) -> sp.Rational:
    num = rng.randint(-12, 12)
    den = rng.randint(1, 12)
    return sp.Rational(num, den)


def _eval_at_point(e: sp.Expr, point: dict) -> sp.Expr | None:
    """Exact evaluation; None when the point hits a pole."""
    val = e.xreplace(point)
    if val.has(sp.zoo, sp.nan, sp.oo, -sp.oo):
        return None
    return val


def _value_is_zero(val: sp.Expr) -> bool | None:
    """Exactly zero? None when undecidable cheaply."""
    if val.is_Rational:
        return val == 0
    v = sp.cancel(val) if val.free_symbols == set() else val
    if v.is_Rational:
        return v == 0
    approx = sp.Abs(v).evalf(50)
    if approx.is_Number:
        return bool(approx < sp.Float("1e-40", 50))
    return None


def zero_decision(
    e: sp.Expr,
    constraints: ConstraintSet | None = None,
    *,
    seed: int = 0,
    samples: int = 8,
) -> ZeroDecision:
    """Constraint-aware zero test with a randomized evaluation guard.

    Rewrites ``e`` to a fixed point under the constraints, normalizes, and
    declares zero iff the normal form is the zero constant.  A nonzero
    normal form is checked at random rational points (undetermined function
    applications treated as independent indeterminates); a nonzero value is
    a witness, while all-zero samples leave the test inconclusive.
    """
    e = sp.sympify(e)
    constraints = constraints or EMPTY_CONSTRAINTS
    nf = constraints.reduce(e)
    nf = normalize(nf)
    if nf == 0:
        return ZeroDecision(True, nf)

    rng = random.Random(seed)
    atoms = sorted(nf.atoms(AppliedUndef), key=sp.default_sort_key)
    syms = sorted(nf.free_symbols, key=sp.default_sort_key)
    taken = 0
    attempts = 0
    while taken < samples and attempts < 8 * samples:
        attempts += 1
        point = {a: _random_rational(rng) for a in atoms}
        point.update({s: _random_rational(rng) for s in syms})
        val = _eval_at_point(nf, point)
        if val is None:
            continue
        z = _value_is_zero(val)
        if z is None:
            continue
        taken += 1
        if not z:
            return ZeroDecision(
                False,
                nf,
                witness={str(k): v for k, v in point.items()},
                witness_value=val,
            )
    return ZeroDecision(None, nf)


def is_zero(
    e: sp.Expr,
    constraints: ConstraintSet | None = None,
    *,
    seed: int = 0,
    samples: int = 8,
) -> bool:
    """True iff ``e`` rewrites to the zero constant under the constraints.

    Raises :class:`InconclusiveError` when the normal form is nonzero but no
    numeric witness point could be found.
    """
    d = zero_decision(e, constraints, seed=seed, samples=samples)
    if d.verdict is None:
        raise InconclusiveError(
            f"nonzero normal form without numeric witness: {d.normal_form}",
            normal_form=d.normal_form,
        )
    return d.verdict
