#!/usr/bin/env python3
"""Derive the classical and conditional determining systems for a
one-coefficient operator template on the one-dimensional heat equation.

The conditional system collapses to the single quasilinear equation
eta_t = eta_xx + 2 eta eta_{x u} + eta^2 eta_{u u}, whose solutions
parametrize the nonclassical operators d/dx + eta d/du.
"""

import sympy as sp

from pdesym import JetSpace, PDESystem, VectorField, determining_system, ufn
from pdesym.cli import _doc_for_space
from pdesym.parser import print_expression

t, x = sp.symbols("t x1")


def main() -> int:
    space = JetSpace((t, x), ("u",), 2)
    z = space.zero_index()
    heat = PDESystem(
        space, ((space.coord("u", z.bump(0)), space.coord("u", (0, 2))),), "heat1"
    )
    u = space.coord("u", z)
    eta = ufn("eta", t, x, u)
    template = VectorField(space, (0, 1), (eta,), "Q")
    doc = _doc_for_space(space)
    doc.ufns["eta"] = (t, x, u)
    for mode in ("lie", "qcond"):
        print(f"== {mode} determining system for Q = d/dx1 + eta(t,x1,u) d/du")
        for eq in determining_system(heat, template, mode):
            print(f"  0 = {print_expression(eq, doc)}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
