"""Random generators and independent oracles shared by the test modules."""

import random
from itertools import product as cartesian

from hyperlagrange.expr import Add, Const, Div, Mul, Neg, PowInt, Sub, Var
from hyperlagrange.hyperreal import GeneratorSet, Hyperreal

GENS = GeneratorSet(["eps", "delta"])
ORDER = 4


def random_hyperreal(rng: random.Random, gens=GENS, order=ORDER, standard=None, density=0.5, scale=3.0):
    """Random finite hyperreal; ``standard`` fixes the standard part if given."""
    terms = {}
    for mono in cartesian(range(order + 1), repeat=len(gens)):
        if 0 < sum(mono) <= order and rng.random() < density:
            terms[mono] = rng.uniform(-scale, scale)
    c0 = rng.uniform(-scale, scale) if standard is None else standard
    terms[(0,) * len(gens)] = c0
    return Hyperreal.from_terms(terms, gens, order)


def random_infinitesimal(rng, gens=GENS, order=ORDER):
    return random_hyperreal(rng, gens, order, standard=0.0)


def random_constant(rng, gens=GENS, order=ORDER, perturbed=True):
    c = round(rng.uniform(-3, 3), 3)
    if not perturbed or rng.random() < 0.4:
        return Const(Hyperreal.constant(c, gens, order))
    return Const(random_hyperreal(rng, gens, order, standard=c, density=0.3))


def random_poly(rng, nvars, depth=3, gens=GENS, order=ORDER, allow_div=True):
    """Random polynomial Expr with perturbed constants.

    Division only by constants with standard part bounded away from zero, so
    the function stays polynomial in the variables.
    """
    if depth == 0 or rng.random() < 0.25:
        if rng.random() < 0.6:
            return Var(rng.randrange(nvars))
        return random_constant(rng, gens, order)
    kind = rng.choice(["add", "sub", "mul", "mul", "neg", "pow", "div"])
    sub = lambda: random_poly(rng, nvars, depth - 1, gens, order, allow_div)
    if kind == "add":
        return Add(sub(), sub())
    if kind == "sub":
        return Sub(sub(), sub())
    if kind == "mul":
        return Mul(sub(), sub())
    if kind == "neg":
        return Neg(sub())
    if kind == "pow":
        return PowInt(sub(), rng.randint(0, 3))
    if allow_div:
        c = rng.choice([-1, 1]) * rng.uniform(0.5, 3)
        return Div(sub(), Const(random_hyperreal(rng, gens, order, standard=c, density=0.3)))
    return Mul(sub(), sub())


def random_parseable(rng, nvars, gens=GENS, order=ORDER, depth=4):
    """Random tree using only node shapes the parser produces."""
    if depth == 0 or rng.random() < 0.2:
        r = rng.random()
        if r < 0.5:
            return Var(rng.randrange(nvars))
        if r < 0.75 and len(gens):
            return Const(Hyperreal.generator(rng.choice(gens.names), gens, order))
        v = rng.choice([0, 1, 2, 7, 10, 0.5, 1.25, 3.75, 1e-5, 2.5e20, 123456.789])
        return Const(Hyperreal.constant(float(v), gens, order))
    kind = rng.choice([Add, Sub, Mul, Div, Neg, PowInt])
    sub = lambda: random_parseable(rng, nvars, gens, order, depth - 1)
    if kind is Neg:
        return Neg(sub())
    if kind is PowInt:
        return PowInt(sub(), rng.randint(0, 5))
    return kind(sub(), sub())


def random_point(rng, n, gens=GENS, order=ORDER, standard=True, box=1.5):
    if standard:
        return [Hyperreal.constant(rng.uniform(-box, box), gens, order) for _ in range(n)]
    return [random_hyperreal(rng, gens, order, standard=rng.uniform(-box, box), density=0.3, scale=1.0)
            for _ in range(n)]


def naive_mul(a: dict, b: dict, order: int) -> dict:
    """Sparse dict convolution of term maps, independent of the dense kernels."""
    out = {}
    for ma, ca in a.items():
        for mb, cb in b.items():
            m = tuple(x + y for x, y in zip(ma, mb))
            if sum(m) <= order:
                out[m] = out.get(m, 0.0) + ca * cb
    return {m: c for m, c in out.items() if c != 0.0}
