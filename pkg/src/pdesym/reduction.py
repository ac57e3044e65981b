"""Coordinate changes for PDE systems, ansatz substitution with chain-rule
bookkeeping, and verification that a substitution reduces a system to an
expected lower-dimensional system."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import sympy as sp
from sympy.core.function import AppliedUndef

from .kernel import (
    ConstraintSet,
    KernelError,
    differentiate,
    is_zero,
    normalize,
    ufn,
    ufn_info,
)
from .jet import JetError, JetSpace, MultiIndex, PDESystem, total_derivative
from .fields import Chart, ChartError

__all__ = [
    "ReductionError",
    "CoordinateChange",
    "change_coordinates",
    "Ansatz",
    "apply_ansatz",
    "verify_reduction",
    "PhiFamily",
    "phi_family",
    "PHI_FAMILY_IDS",
]


class ReductionError(KernelError):
    pass


def _solve_linear(expr: sp.Expr, s: sp.Symbol, chart: Chart) -> sp.Expr | None:
    """rhs with expr = 0 solved for ``s``, when ``s`` occurs linearly with a
    chart-invertible coefficient; None otherwise."""
    tmp = sp.Dummy("lead")
    ex2 = sp.expand(sp.sympify(expr).xreplace({s: tmp}))
    try:
        poly = sp.Poly(ex2, tmp)
    except sp.PolynomialError:
        return None
    if poly.degree() != 1:
        return None
    coeff = poly.nth(1)
    if not chart.is_invertible(coeff):
        return None
    return normalize(-poly.nth(0) / coeff)


# ---------------------------------------------------------------------------
# Coordinate changes.
# ---------------------------------------------------------------------------

@dataclass
class CoordinateChange:
    """Change of independent variables between two jet spaces with the same
    dependent variables.

    ``source_in_target`` expresses each source independent variable through
    the target independents (entries may be omitted for variables that never
    occur explicitly, e.g. an angle).  The Jacobian d(source_i)/d(target_j)
    is derived from these maps, or supplied explicitly via ``jacobian`` when
    the maps are inconvenient to differentiate (entries must then be written
    in the target variables)."""

    source: JetSpace
    target: JetSpace
    source_in_target: dict
    chart: Chart = field(default_factory=Chart)
    jacobian: sp.Matrix | None = None
    name: str = ""

    def __post_init__(self):
        if self.source.dependents != self.target.dependents:
            raise ReductionError("source and target must share dependent variables")
        if self.source.n != self.target.n:
            raise ReductionError("source and target must have the same dimension")
        self.source_in_target = {
            sp.sympify(k): sp.sympify(v) for k, v in self.source_in_target.items()
        }
        for k in self.source_in_target:
            self.source.axis(k)  # validates membership
        self._frame_cache = None
        self._coord_cache: dict[tuple[str, MultiIndex], sp.Expr] = {}

    def _jacobian(self) -> sp.Matrix:
        if self.jacobian is not None:
            return sp.Matrix(self.jacobian)
        rows = []
        for s in self.source.independents:
            if s not in self.source_in_target:
                raise ReductionError(
                    f"no expression for source variable {s}; supply a jacobian"
                )
            expr = self.source_in_target[s]
            rows.append([differentiate(expr, tau) for tau in self.target.independents])
        return sp.Matrix(rows)

    def _frame(self) -> sp.Matrix:
        """Matrix B with D^source_i = sum_j B[i, j] D^target_j (chain rule
        through the inverse Jacobian), entries in target variables."""
        if self._frame_cache is not None:
            return self._frame_cache
        jac = self._jacobian()
        det = normalize(jac.det())
        if not self.chart.is_invertible(det):
            raise ChartError(f"Jacobian determinant {det} is not invertible on the chart")
        inv = jac.inv().T.applyfunc(normalize)
        self._frame_cache = inv
        return inv

    def _coord_image(self, dep: str, alpha: MultiIndex) -> sp.Expr:
        key = (dep, alpha)
        hit = self._coord_cache.get(key)
        if hit is not None:
            return hit
        if alpha.order == 0:
            val = self.target.coord(dep, self.target.zero_index())
        else:
            i = next(j for j, v in enumerate(alpha) if v > 0)
            prev = MultiIndex(v - (1 if j == i else 0) for j, v in enumerate(alpha))
            frame = self._frame()
            prev_img = self._coord_image(dep, prev)
            val = sp.expand(
                sum(
                    frame[i, j] * total_derivative(prev_img, j, self.target)
                    for j in range(self.target.n)
                    if frame[i, j] != 0
                )
            )
        self._coord_cache[key] = val
        return val

    def transform(self, e: sp.Expr) -> sp.Expr:
        """Express a source jet-space expression in target jet coordinates."""
        e = sp.sympify(e)
        mapping = {
            s: self._coord_image(dep, alpha)
            for s, (dep, alpha) in self.source.jet_atoms(e).items()
        }
        e = sp.expand(e.xreplace(mapping))
        explicit = {}
        for s in e.free_symbols:
            if any(s == x for x in self.source.independents) and not any(
                s == x for x in self.target.independents
            ):
                if s not in self.source_in_target:
                    raise ReductionError(
                        f"source variable {s} occurs explicitly but has no target expression"
                    )
                explicit[s] = self.source_in_target[s]
        shared = {
            s: v
            for s, v in self.source_in_target.items()
            if any(s == x for x in self.target.independents) and s != v
        }
        explicit.update(shared)
        if explicit:
            e = e.xreplace(explicit)
        return normalize(e)


def change_coordinates(sys: PDESystem, cc: CoordinateChange) -> PDESystem:
    """Rewrite each equation in the new chart and re-solve it for the image
    of its leading derivative."""
    if sys.space != cc.source:
        raise ReductionError("system does not live in the source space of the change")
    equations = []
    for lhs, rhs in sys.equations:
        residual = cc.transform(lhs - rhs)
        lhs_image = cc.transform(lhs)
        atoms = sorted(
            (
                (alpha.order, cc.target.dependents.index(dep), tuple(alpha), s)
                for s, (dep, alpha) in cc.target.jet_atoms(lhs_image).items()
                if alpha.order > 0
            ),
            reverse=True,
        )
        solved = None
        for _o, _d, _a, s in atoms:
            rhs_new = _solve_linear(residual, s, cc.chart)
            if rhs_new is not None:
                solved = (s, rhs_new)
                break
        if solved is None:
            raise ReductionError(
                f"cannot re-solve the transformed equation for the image of {lhs}"
            )
        equations.append(solved)
    return PDESystem(cc.target, tuple(equations), name=sys.name)


# ---------------------------------------------------------------------------
# Ansatz substitution.
# ---------------------------------------------------------------------------

def new_unknown(reduced_space: JetSpace, name: str) -> sp.Expr:
    """A reduced-system unknown as a function application over the reduced
    independent variables, ready to use in ansatz substitutions."""
    if name not in reduced_space.dependents:
        raise ReductionError(f"unknown reduced dependent {name!r}")
    return ufn(name, *reduced_space.independents)


@dataclass
class Ansatz:
    """Substitution u^a = F^a(x, v, auxiliary functions) expressing the old
    unknowns through new unknowns v that depend on a subset of the old
    independent variables (the reduced chart).

    ``substitutions`` maps each old dependent name to its expression; the new
    unknowns appear as undetermined-function applications over exactly the
    reduced independents, built by :func:`new_unknown`."""

    system_space: JetSpace
    reduced_space: JetSpace
    substitutions: dict
    constraints: ConstraintSet | None = None
    chart: Chart = field(default_factory=Chart)
    name: str = ""

    def __post_init__(self):
        for omega in self.reduced_space.independents:
            self.system_space.axis(omega)  # reduced chart is a coordinate subset
        self.substitutions = {
            k: sp.sympify(v) for k, v in self.substitutions.items()
        }
        missing = set(self.system_space.dependents) - set(self.substitutions)
        if missing:
            raise ReductionError(f"no substitution for dependent variables {sorted(missing)}")
        self._image_cache: dict[tuple[str, MultiIndex], sp.Expr] = {}

    def dependent(self, name: str) -> sp.Expr:
        """The new unknown ``name`` as a function application over the
        reduced independents."""
        return new_unknown(self.reduced_space, name)

    def _image(self, dep: str, alpha: MultiIndex) -> sp.Expr:
        key = (dep, alpha)
        hit = self._image_cache.get(key)
        if hit is not None:
            return hit
        if alpha.order == 0:
            val = self.substitutions[dep]
        else:
            i = next(j for j, v in enumerate(alpha) if v > 0)
            prev = MultiIndex(v - (1 if j == i else 0) for j, v in enumerate(alpha))
            val = sp.expand(
                differentiate(self._image(dep, prev), self.system_space.independents[i])
            )
        self._image_cache[key] = val
        return val

    def _to_reduced_jets(self, e: sp.Expr) -> sp.Expr:
        args = tuple(self.reduced_space.independents)
        mapping = {}
        for app in e.atoms(AppliedUndef):
            base, beta = ufn_info(app)
            if base not in self.reduced_space.dependents:
                continue
            if app.args != args:
                raise ReductionError(
                    f"new unknown {base} applied to {app.args}, expected {args}"
                )
            mapping[app] = self.reduced_space.coord(base, beta)
        return e.xreplace(mapping)


def apply_ansatz(sys: PDESystem, a: Ansatz) -> list[sp.Expr]:
    """Residuals of the system equations after the substitution, expressed in
    the reduced jet coordinates; the residual list is the reduced system (up
    to nonvanishing factors)."""
    if sys.space != a.system_space:
        raise ReductionError("system does not live in the ansatz's jet space")
    residuals = []
    for lhs, rhs in sys.equations:
        e = lhs - rhs
        mapping = {
            s: a._image(dep, alpha) for s, (dep, alpha) in sys.space.jet_atoms(e).items()
        }
        e = sp.expand(e.xreplace(mapping))
        if a.constraints:
            e = a.constraints.reduce(e)
        e = a._to_reduced_jets(e)
        e = normalize(e)
        leftover = [
            s for s, (_d, alpha) in sys.space.jet_atoms(e).items() if alpha.order >= 1
        ]
        if leftover:
            raise ReductionError(
                f"ansatz did not eliminate jet coordinates {leftover} in equation {lhs}"
            )
        residuals.append(e)
    return residuals


def verify_reduction(
    sys: PDESystem,
    a: Ansatz,
    expected: Sequence[sp.Expr],
    *,
    seed: int = 0,
) -> bool:
    """True iff the residuals of ``apply_ansatz`` match the expected reduced
    equations up to ordering, each equal to a chart-invertible factor (free
    of reduced derivative coordinates) times its expected expression."""
    residuals = apply_ansatz(sys, a)
    expected = [normalize(e) for e in expected]
    if len(residuals) != len(expected):
        return False
    unused = list(range(len(expected)))
    for res in residuals:
        matched = None
        for j in unused:
            exp_j = expected[j]
            if exp_j == 0 or res == 0:
                if exp_j == 0 and res == 0:
                    matched = j
                    break
                continue
            q = normalize(sp.cancel(res / exp_j))
            if any(
                alpha.order >= 1
                for _s, (_d, alpha) in a.reduced_space.jet_atoms(q).items()
            ):
                continue
            if not a.chart.is_invertible(q):
                continue
            if not is_zero(res - q * exp_j, a.constraints, seed=seed):
                continue
            matched = j
            break
        if matched is None:
            return False
        unused.remove(matched)
    return not unused


# ---------------------------------------------------------------------------
# Closed-form separation families for the rotational reduction.
# ---------------------------------------------------------------------------

PHI_FAMILY_IDS = ("a", "b", "c", "d")


def _as_sin_cos(e: sp.Expr) -> sp.Expr:
    """Rewrite tan/tanh/coth as sin-cos ratios so that certificates mixing a
    quotient function with its integrating factor close under the kernel's
    even-power rewrites."""
    e = sp.sympify(e)
    e = e.replace(lambda p: p.func is sp.tan, lambda p: sp.sin(p.args[0]) / sp.cos(p.args[0]))
    e = e.replace(lambda p: p.func is sp.tanh, lambda p: sp.sinh(p.args[0]) / sp.cosh(p.args[0]))
    e = e.replace(lambda p: p.func is sp.coth, lambda p: sp.cosh(p.args[0]) / sp.sinh(p.args[0]))
    return e


@dataclass(frozen=True)
class PhiFamily:
    """Closed forms for the angular factor: phi solves the Riccati-type ODE
    phi'' + 2 phi phi' = 0, Phi is its integrating factor (Phi' = phi Phi),
    and lam = -phi' - phi^2 is the constant separation parameter."""

    id: str
    theta: sp.Symbol
    kappa: sp.Expr | None
    phi: sp.Expr
    Phi: sp.Expr
    lam: sp.Expr
    chart: Chart


def phi_family(
    fam: str,
    kappa: sp.Expr | None = None,
    theta: sp.Symbol = sp.Symbol("theta"),
    *,
    seed: int = 0,
) -> PhiFamily:
    """One of the four closed-form families (tan, tanh, coth, 1/theta); every
    stored identity is certified exactly on construction."""
    if fam not in PHI_FAMILY_IDS:
        raise ReductionError(f"unknown family {fam!r}; expected one of {PHI_FAMILY_IDS}")
    if fam == "d":
        if kappa is not None:
            raise ReductionError("family 'd' takes no parameter")
        phi, Phi, lam = 1 / theta, theta, sp.Integer(0)
        chart = Chart((theta,))
    else:
        if kappa is None:
            kappa = sp.Symbol("kappa")
        kappa = sp.sympify(kappa)
        if kappa == 0:
            raise ReductionError(f"family {fam!r} requires a nonzero parameter")
        if fam == "a":
            phi, Phi, lam = -kappa * sp.tan(kappa * theta), sp.cos(kappa * theta), kappa**2
            chart = Chart((kappa, sp.cos(kappa * theta)))
        elif fam == "b":
            phi, Phi, lam = kappa * sp.tanh(kappa * theta), sp.cosh(kappa * theta), -(kappa**2)
            chart = Chart((kappa, sp.cosh(kappa * theta)))
        else:  # "c", on the chart theta > 0 where sinh does not vanish
            phi, Phi, lam = kappa * sp.coth(kappa * theta), sp.sinh(kappa * theta), -(kappa**2)
            chart = Chart((kappa, sp.sinh(kappa * theta)))
    dphi = differentiate(phi, theta)
    checks = [
        differentiate(dphi, theta) + 2 * phi * dphi,
        differentiate(Phi, theta) - phi * Phi,
        lam + dphi + phi**2,
    ]
    for c in checks:
        if not is_zero(_as_sin_cos(c), seed=seed):
            raise ReductionError(f"family {fam!r} failed certification on {c}")
    if not chart.is_invertible(_as_sin_cos(dphi)):
        raise ReductionError(f"family {fam!r}: phi' = {normalize(dphi)} not invertible")
    return PhiFamily(fam, theta, kappa, phi, Phi, lam, chart)
