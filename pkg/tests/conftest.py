import random

import pytest
import sympy as sp
from hypothesis import HealthCheck, settings

from pdesym import JetSpace, ufn

settings.register_profile(
    "default",
    max_examples=60,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.filter_too_much],
)
settings.load_profile("default")

t, x1, x2 = sp.symbols("t x1 x2")


@pytest.fixture(scope="session")
def heat1():
    from pdesym.catalog import lhe

    return lhe(1)


@pytest.fixture(scope="session")
def heat2():
    from pdesym.catalog import lhe

    return lhe(2)


def random_expr(rng: random.Random, atoms, depth: int = 3) -> sp.Expr:
    """Small random expression over the given atoms; exact rationals only."""
    if depth == 0 or rng.random() < 0.3:
        kind = rng.random()
        if kind < 0.45:
            return rng.choice(atoms)
        return sp.Rational(rng.randint(-4, 4), rng.randint(1, 3))
    kind = rng.random()
    if kind < 0.35:
        return random_expr(rng, atoms, depth - 1) + random_expr(rng, atoms, depth - 1)
    if kind < 0.7:
        return random_expr(rng, atoms, depth - 1) * random_expr(rng, atoms, depth - 1)
    if kind < 0.8:
        return random_expr(rng, atoms, depth - 1) ** rng.randint(1, 3)
    if kind < 0.9:
        return sp.sin(random_expr(rng, atoms, depth - 1))
    return sp.exp(rng.choice(atoms))
