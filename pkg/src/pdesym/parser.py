"""Line-oriented DSL for declaring PDE systems, side constraints and operator
families, plus the matching expression printer.

Statements (each terminated by ``;``, ``#`` starts a comment):

    vars t x1 x2 ;
    deps u ;
    order 2 ;
    params kappa ;                      # optional free constants
    eq u_t = u_{x1 x1} + u_{x2 x2} ;
    ufn g(t, x2) ;
    constraint g_t = g_{x2 x2} ;
    nonvanishing g ;                    # optional chart declaration
    op Q1 = d/dx2 + (g_{x2}/g)*u * d/du ;

Jet coordinates are written ``u``, ``u_t``, ``u_{x1 x1}`` (indices in braces,
repeated for higher order); derivatives of a declared function are written by
subscripted argument names (``g_{x2 x2}``).  A bare function name denotes its
application to the declared arguments.  Operators are linear combinations of
the direction atoms ``d/dVAR`` and ``d/dDEP``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import sympy as sp

from .kernel import ConstraintSet, KernelError, ufn, ufn_info
from .jet import JetSpace, MultiIndex, PDESystem
from .fields import Chart, OperatorFamily, VectorField

__all__ = [
    "ParseError",
    "Token",
    "tokenize",
    "Document",
    "parse_document",
    "parse_expression",
    "print_expression",
]

_FUNCTIONS = {
    f.__name__: f
    for f in (sp.exp, sp.log, sp.sin, sp.cos, sp.tan, sp.cot,
              sp.sinh, sp.cosh, sp.tanh, sp.coth, sp.sqrt)
}

_KEYWORDS = (
    "vars", "deps", "order", "params", "eq", "ufn",
    "constraint", "nonvanishing", "op",
)


class ParseError(KernelError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT NUMBER PUNCT END
    value: str
    line: int
    col: int


_PUNCT = "(){},;=+-*/^_"


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, col = 1, 1
    i = 0
    while i < len(text):
        c = text[i]
        if c == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if c == "#":
            while i < len(text) and text[i] != "\n":
                i += 1
            continue
        start_col = col
        if c.isdigit():
            j = i
            while j < len(text) and text[j].isdigit():
                j += 1
            tokens.append(Token("NUMBER", text[i:j], line, start_col))
            col += j - i
            i = j
            continue
        if c.isalpha():
            j = i
            while j < len(text) and text[j].isalnum():
                j += 1
            tokens.append(Token("IDENT", text[i:j], line, start_col))
            col += j - i
            i = j
            continue
        if c in _PUNCT:
            tokens.append(Token("PUNCT", c, line, start_col))
            i += 1
            col += 1
            continue
        raise ParseError(f"unexpected character {c!r}", line, col)
    tokens.append(Token("END", "", line, col))
    return tokens


@dataclass
class Document:
    """Declaration table collected from a DSL source."""

    variables: tuple[sp.Symbol, ...] = ()
    dependents: tuple[str, ...] = ()
    order: int = 2
    params: tuple[sp.Symbol, ...] = ()
    ufns: dict[str, tuple[sp.Symbol, ...]] = field(default_factory=dict)
    equations: list[tuple[sp.Expr, sp.Expr]] = field(default_factory=list)
    constraint_equations: list[tuple[sp.Expr, sp.Expr]] = field(default_factory=list)
    nonvanishing: tuple[sp.Expr, ...] = ()
    operators: dict[str, VectorField] = field(default_factory=dict)

    @property
    def space(self) -> JetSpace:
        return JetSpace(self.variables, self.dependents, self.order)

    def system(self, name: str = "dsl") -> PDESystem:
        if not self.equations:
            raise KernelError("document declares no equations")
        return PDESystem(self.space, tuple(self.equations), name=name)

    def constraints(self) -> ConstraintSet | None:
        if not self.constraint_equations:
            return None
        return ConstraintSet.from_equations(self.constraint_equations, "dsl constraints")

    def chart(self) -> Chart:
        return Chart(self.nonvanishing)

    def family(self) -> OperatorFamily:
        if not self.operators:
            raise KernelError("document declares no operators")
        return OperatorFamily(tuple(self.operators.values()), name="dsl family")


_DIRECTION = "direction"


class _Parser:
    def __init__(self, tokens: list[Token], doc: Document):
        self.tokens = tokens
        self.pos = 0
        self.doc = doc

    # -- token plumbing -----------------------------------------------------
    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.peek()
        if tok.kind != "END":
            self.pos += 1
        return tok

    def error(self, message: str, tok: Token | None = None) -> ParseError:
        tok = tok or self.peek()
        return ParseError(message, tok.line, tok.col)

    def expect(self, kind: str, value: str | None = None) -> Token:
        tok = self.next()
        if tok.kind != kind or (value is not None and tok.value != value):
            want = value if value is not None else kind
            raise self.error(f"expected {want!r}, found {tok.value or 'end of input'!r}", tok)
        return tok

    def at_punct(self, value: str) -> bool:
        tok = self.peek()
        return tok.kind == "PUNCT" and tok.value == value

    # -- statements ----------------------------------------------------------
    def document(self) -> Document:
        while self.peek().kind != "END":
            self.statement()
        return self.doc

    def statement(self) -> None:
        tok = self.expect("IDENT")
        if tok.value not in _KEYWORDS:
            raise self.error(f"unknown statement {tok.value!r}", tok)
        getattr(self, f"_stmt_{tok.value}")()
        self.expect("PUNCT", ";")

    def _ident_list(self) -> list[Token]:
        names = []
        while self.peek().kind == "IDENT":
            names.append(self.next())
        if not names:
            raise self.error("expected at least one name")
        return names

    def _declaration_list(self) -> list[Token]:
        toks = self._ident_list()
        seen = set()
        for tok in toks:
            if tok.value in seen:
                raise self.error(f"duplicate declaration of {tok.value!r}", tok)
            seen.add(tok.value)
            self._declare(tok)
        return toks

    def _declare(self, tok: Token) -> None:
        if self._lookup_kind(tok.value) is not None:
            raise self.error(f"duplicate declaration of {tok.value!r}", tok)

    def _stmt_vars(self) -> None:
        toks = self._declaration_list()
        self.doc.variables += tuple(sp.Symbol(tok.value) for tok in toks)

    def _stmt_deps(self) -> None:
        toks = self._declaration_list()
        self.doc.dependents += tuple(tok.value for tok in toks)

    def _stmt_params(self) -> None:
        toks = self._declaration_list()
        self.doc.params += tuple(sp.Symbol(tok.value) for tok in toks)

    def _stmt_order(self) -> None:
        tok = self.expect("NUMBER")
        self.doc.order = int(tok.value)

    def _stmt_ufn(self) -> None:
        name = self.expect("IDENT")
        self._declare(name)
        self.expect("PUNCT", "(")
        args = []
        while True:
            arg = self.expect("IDENT")
            if self._lookup_kind(arg.value) not in ("var", "param", "dep"):
                raise self.error(f"function argument {arg.value!r} is not declared", arg)
            args.append(sp.Symbol(arg.value))
            if self.at_punct(","):
                self.next()
                continue
            break
        self.expect("PUNCT", ")")
        self.doc.ufns[name.value] = tuple(args)

    def _stmt_eq(self) -> None:
        lhs = self.expression()
        space = self.doc.space
        if not isinstance(lhs, sp.Symbol) or space.decode(lhs) is None:
            raise self.error("equation left-hand side must be a single jet coordinate")
        self.expect("PUNCT", "=")
        self.doc.equations.append((lhs, self.expression()))

    def _stmt_constraint(self) -> None:
        lhs = self.expression()
        self.expect("PUNCT", "=")
        self.doc.constraint_equations.append((lhs, self.expression()))

    def _stmt_nonvanishing(self) -> None:
        exprs = [self.expression()]
        while self.at_punct(","):
            self.next()
            exprs.append(self.expression())
        self.doc.nonvanishing += tuple(exprs)

    def _stmt_op(self) -> None:
        name = self.expect("IDENT")
        self._declare(name)
        self.expect("PUNCT", "=")
        expr = self.expression(allow_directions=True)
        self.doc.operators[name.value] = self._to_field(name.value, expr)

    def _to_field(self, name: str, expr: sp.Expr) -> VectorField:
        space = self.doc.space
        atoms = [sp.Symbol(f"@d/d{x.name}") for x in space.independents]
        atoms += [sp.Symbol(f"@d/d{d}") for d in space.dependents]
        present = [a for a in atoms if expr.has(a)]
        if not present:
            raise self.error(f"operator {name!r} contains no direction atoms")
        try:
            poly = sp.Poly(expr, *atoms)
        except sp.PolynomialError as exc:
            raise self.error(f"operator {name!r} is not linear in directions: {exc}")
        coeffs = {a: sp.Integer(0) for a in atoms}
        for monom, coeff in poly.terms():
            if sum(monom) != 1:
                raise self.error(f"operator {name!r} must be linear in the direction atoms")
            coeffs[atoms[monom.index(1)]] = coeff
        xi = tuple(coeffs[a] for a in atoms[: space.n])
        eta = tuple(coeffs[a] for a in atoms[space.n:])
        return VectorField(space, xi, eta, name)

    # -- expressions ----------------------------------------------------------
    def expression(self, allow_directions: bool = False) -> sp.Expr:
        return self._additive(allow_directions)

    def _additive(self, ad: bool) -> sp.Expr:
        left = self._multiplicative(ad)
        while self.at_punct("+") or self.at_punct("-"):
            op = self.next().value
            right = self._multiplicative(ad)
            left = left + right if op == "+" else left - right
        return left

    def _multiplicative(self, ad: bool) -> sp.Expr:
        left = self._unary(ad)
        while self.at_punct("*") or self.at_punct("/"):
            op = self.next().value
            right = self._unary(ad)
            left = left * right if op == "*" else left / right
        return left

    def _unary(self, ad: bool) -> sp.Expr:
        if self.at_punct("-"):
            self.next()
            return -self._unary(ad)
        if self.at_punct("+"):
            self.next()
            return self._unary(ad)
        return self._power(ad)

    def _power(self, ad: bool) -> sp.Expr:
        base = self._primary(ad)
        if self.at_punct("^"):
            self.next()
            return base ** self._unary(ad)
        return base

    def _primary(self, ad: bool) -> sp.Expr:
        tok = self.peek()
        if tok.kind == "NUMBER":
            self.next()
            return sp.Integer(int(tok.value))
        if tok.kind == "PUNCT" and tok.value == "(":
            self.next()
            inner = self.expression(ad)
            self.expect("PUNCT", ")")
            return inner
        if tok.kind == "IDENT":
            if (
                tok.value == "d"
                and self.peek(1).kind == "PUNCT"
                and self.peek(1).value == "/"
                and self.peek(2).kind == "IDENT"
                and self.peek(2).value.startswith("d")
                and self._lookup_kind(self.peek(2).value[1:]) in ("var", "dep")
            ):
                self.next()
                self.next()
                target = self.next().value[1:]
                if not ad:
                    raise self.error("direction atoms are only allowed in op statements", tok)
                return sp.Symbol(f"@d/d{target}")
            return self._identifier()
        raise self.error(f"unexpected token {tok.value or 'end of input'!r}", tok)

    def _lookup_kind(self, name: str) -> str | None:
        if any(v.name == name for v in self.doc.variables):
            return "var"
        if name in self.doc.dependents:
            return "dep"
        if any(p.name == name for p in self.doc.params):
            return "param"
        if name in self.doc.ufns:
            return "ufn"
        if name in self.doc.operators:
            return "op"
        return None

    def _subscript_vars(self) -> list[Token]:
        """The variable tokens of a ``_t`` or ``_{x1 x1}`` subscript."""
        self.expect("PUNCT", "_")
        if self.at_punct("{"):
            self.next()
            toks = self._ident_list()
            self.expect("PUNCT", "}")
            return toks
        return [self.expect("IDENT")]

    def _identifier(self) -> sp.Expr:
        tok = self.next()
        name = tok.value
        kind = self._lookup_kind(name)
        if kind is None and name in _FUNCTIONS:
            self.expect("PUNCT", "(")
            arg = self.expression()
            self.expect("PUNCT", ")")
            return _FUNCTIONS[name](arg)
        if kind is None:
            raise self.error(f"undeclared identifier {name!r}", tok)
        if kind in ("var", "param"):
            return sp.Symbol(name)
        if kind == "dep":
            space = self.doc.space
            if self.at_punct("_"):
                toks = self._subscript_vars()
                alpha = [0] * space.n
                for vt in toks:
                    if self._lookup_kind(vt.value) != "var":
                        raise self.error(f"{vt.value!r} is not an independent variable", vt)
                    alpha[space.axis(vt.value)] += 1
                if sum(alpha) > space.order:
                    raise self.error(f"derivative order exceeds declared order {space.order}", tok)
                return space.coord(name, MultiIndex(alpha))
            return space.coord(name, space.zero_index())
        if kind == "ufn":
            args = self.doc.ufns[name]
            beta = [0] * len(args)
            if self.at_punct("_"):
                for vt in self._subscript_vars():
                    slot = next(
                        (i for i, a in enumerate(args) if a.name == vt.value), None
                    )
                    if slot is None:
                        raise self.error(
                            f"{vt.value!r} is not an argument of {name}", vt
                        )
                    beta[slot] += 1
            if self.at_punct("("):
                raise self.error(
                    f"write the bare name {name!r}; it applies to its declared arguments",
                    tok,
                )
            return ufn(name, *args, beta=beta)
        raise self.error(f"{name!r} cannot appear inside an expression", tok)


def parse_document(text: str) -> Document:
    return _Parser(tokenize(text), Document()).document()


def parse_expression(text: str, doc: Document, allow_directions: bool = False) -> sp.Expr:
    """Parse a single expression against the declarations in ``doc``."""
    p = _Parser(tokenize(text), doc)
    expr = p.expression(allow_directions)
    tok = p.peek()
    if tok.kind != "END":
        raise ParseError(f"trailing input {tok.value!r}", tok.line, tok.col)
    return expr


# ---------------------------------------------------------------------------
# Printer.
# ---------------------------------------------------------------------------

class _DSLPrinter(sp.printing.str.StrPrinter):
    def __init__(self, doc: Document | None):
        super().__init__({"order": "lex"})
        self.doc = doc

    def _print_Pow(self, expr, rational=False):
        return super()._print_Pow(expr, rational=rational).replace("**", "^")

    def _print_Function(self, expr):
        if isinstance(expr, sp.core.function.AppliedUndef):
            name, beta = ufn_info(expr)
            if self.doc is not None and name in self.doc.ufns:
                args = self.doc.ufns[name]
                if tuple(expr.args) == args:
                    sub = [a.name for a, b in zip(args, beta) for _ in range(b)]
                    if not sub:
                        return name
                    if len(sub) == 1:
                        return f"{name}_{sub[0]}"
                    return f"{name}_{{{' '.join(sub)}}}"
        return super()._print_Function(expr)


def print_expression(expr: sp.Expr, doc: Document | None = None) -> str:
    """Render an expression in the DSL syntax (inverse of parse_expression up
    to normalize)."""
    return _DSLPrinter(doc).doprint(sp.sympify(expr))
