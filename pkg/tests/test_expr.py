import math
import random

import pytest

from hyperlagrange.expr import (
    Add,
    Const,
    Mul,
    Neg,
    ParseError,
    PowInt,
    ProblemError,
    Sub,
    Var,
    compile_standard,
    evaluate,
    parse,
    parse_problem,
    render,
    shadow,
    symbolic_diff,
)
from hyperlagrange.hyperreal import GeneratorSet, Hyperreal, approx_eq, render as render_h

from helpers import GENS, random_parseable, random_point, random_poly

XYZ = ["x", "y", "z"]


def P(text, vars=XYZ, gens=GENS):
    return parse(text, vars, gens)


def pt(*values, gens=GENS):
    return [Hyperreal.constant(v, gens, 4) for v in values]


def eps():
    return Hyperreal.generator("eps", GENS)


# -- parse ----------------------------------------------------------------


def test_parse_objective_example():
    e = P("x*y*z + eps")
    assert e == Add(Mul(Mul(Var(0), Var(1)), Var(2)), Const(eps()))


def test_parse_constraint_example():
    e = P("x^2 + 2*(y+delta)^2 + 3*z^2 - 1")
    two = Const(Hyperreal.constant(2.0, GENS))
    three = Const(Hyperreal.constant(3.0, GENS))
    one = Const(Hyperreal.constant(1.0, GENS))
    delta = Const(Hyperreal.generator("delta", GENS))
    want = Sub(
        Add(Add(PowInt(Var(0), 2), Mul(two, PowInt(Add(Var(1), delta), 2))), Mul(three, PowInt(Var(2), 2))),
        one,
    )
    assert e == want


def test_parse_error_position():
    with pytest.raises(ParseError) as err:
        P("x + * y")
    assert (err.value.line, err.value.column) == (1, 5)


@pytest.mark.parametrize(
    "text, col",
    [("x + w", 5), ("(x + y", 7), ("x )", 3), ("x ^ 2.5", 5), ("x $ y", 3), ("2x", 2), ("x ^ -1", 5)],
)
def test_parse_errors(text, col):
    with pytest.raises(ParseError) as err:
        P(text)
    assert err.value.column == col


def test_parse_error_empty():
    with pytest.raises(ParseError):
        P("   ")


def test_precedence_and_associativity():
    assert P("-x^2") == Neg(PowInt(Var(0), 2))
    assert P("x^2^3") == PowInt(Var(0), 8)
    assert P("x - y - z") == Sub(Sub(Var(0), Var(1)), Var(2))
    assert P("x - -y") == Sub(Var(0), Neg(Var(1)))
    assert P("-x*y") == Mul(Neg(Var(0)), Var(1))
    assert P("x*(y+z)") == Mul(Var(0), Add(Var(1), Var(2)))


def test_literals():
    assert P("1.5e-3").value.st() == 1.5e-3
    assert P(".5").value.st() == 0.5
    assert P("2.").value.st() == 2.0


def test_variables_shadow_generators_in_resolution():
    e = parse("eps", ["eps"], GeneratorSet(["delta"]))
    assert e == Var(0)


def test_multiline_error_position():
    with pytest.raises(ParseError) as err:
        P("x +\n  y * * z")
    assert (err.value.line, err.value.column) == (2, 7)


# -- eval -------------------------------------------------------------------


def test_eval_perturbed_function():
    f = P("(1+eps)*x*y^2 - delta*z")
    assert render_h(evaluate(f, pt(1, 2, 3))) == "4 + 4*eps - 3*delta"


def test_eval_zero_point_no_constant():
    f = P("x*y + 3*z^2 - x*eps")
    assert evaluate(f, pt(0, 0, 0)).is_zero()


def test_eval_ellipsoid_maximum():
    f = P("x*y*z + eps")
    v = evaluate(f, pt(1 / math.sqrt(3), 1 / math.sqrt(6), 1 / 3))
    assert v.st() == pytest.approx(1 / (3 * math.sqrt(18)), abs=1e-15)
    assert approx_eq(v - eps(), Hyperreal.constant(1 / (3 * math.sqrt(18)), GENS), 1e-15)
    assert dict(v.terms)[(1, 0)] == 1.0


def test_eval_rejects_short_point():
    with pytest.raises(ValueError):
        evaluate(P("z"), pt(1, 2))


# -- symbolic_diff ----------------------------------------------------------


def test_symbolic_diff_examples():
    f = P("(1+eps)*x*y^2 - delta*z")
    dx = symbolic_diff(P("(1+eps)*x*y^2"), 0)
    want = P("(1+eps)*y^2")
    for p in (pt(1, 2, 3), pt(-0.5, 1.5, 2)):
        assert evaluate(dx, p) == evaluate(want, p)
    dz = symbolic_diff(f, 2)
    assert evaluate(dz, pt(4, 5, 6)) == -Hyperreal.generator("delta", GENS)
    assert symbolic_diff(P("3 + eps"), 0) == Const(0.0)


def test_symbolic_diff_quotient():
    f = P("x / (1 + y^2)")
    dy = symbolic_diff(f, 1)
    x, y = 1.3, -0.7
    assert compile_standard(shadow(dy))([x, y, 0]) == pytest.approx(-2 * x * y / (1 + y * y) ** 2)


# -- shadow -----------------------------------------------------------------


def test_shadow_examples():
    assert render(shadow(P("x*y*z + eps")), XYZ) == "x * y * z + 0"
    s = shadow(P("x^2 + 2*(y+delta)^2 + 3*z^2 - 1"))
    ref = P("x^2 + 2*y^2 + 3*z^2 - 1")
    rng = random.Random(0)
    for _ in range(20):
        v = [rng.uniform(-2, 2) for _ in range(3)]
        assert compile_standard(s)(v) == pytest.approx(compile_standard(shadow(ref))(v), abs=1e-12)
    plain = P("x*y - 2")
    assert render(shadow(plain), XYZ) == render(plain, XYZ)


def test_compile_standard_requires_shadow():
    with pytest.raises(ValueError):
        compile_standard(P("x + eps"))


# -- properties -------------------------------------------------------------


def test_render_round_trip_corpus():
    rng = random.Random(2024)
    for _ in range(1000):
        tree = random_parseable(rng, 3)
        t = render(tree, XYZ)
        once = P(t)
        assert P(render(once, XYZ)) == once, t


def test_shadow_commutes_with_evaluation():
    rng = random.Random(7)
    for _ in range(300):
        e = random_poly(rng, 3)
        alpha = random_point(rng, 3)
        lhs = evaluate(e, alpha).st()
        rhs = compile_standard(shadow(e))([a.st() for a in alpha])
        assert lhs == pytest.approx(rhs, abs=1e-9)


def test_shadow_commutes_with_symbolic_diff():
    rng = random.Random(8)
    for _ in range(40):
        e = random_poly(rng, 3)
        i = rng.randrange(3)
        a = compile_standard(shadow(symbolic_diff(e, i)))
        b = compile_standard(symbolic_diff(shadow(e), i))
        for _ in range(100):
            v = [rng.uniform(-1.5, 1.5) for _ in range(3)]
            assert a(v) == pytest.approx(b(v), abs=1e-9)


# -- problem files ----------------------------------------------------------

EX2 = """\
generators: eps, delta
vars: x, y, z
objective: x*y*z + eps
constraint: x^2 + 2*(y+delta)^2 + 3*z^2 - 1
trunc: 4
tol: 1e-9
"""


def test_parse_problem_example():
    p = parse_problem(EX2)
    assert p.generators.names == ("eps", "delta")
    assert p.vars == ("x", "y", "z")
    assert (p.n, p.m, p.order, p.tolerance.tol) == (3, 1, 4, 1e-9)
    assert p.objective == P("x*y*z + eps")


def test_problem_defaults_and_comments():
    p = parse_problem("# header\ngenerators: eps\nvars: x, y  # two\nobjective: x*y\n\n")
    assert (p.order, p.tolerance.tol, p.m) == (4, 1e-9, 0)


@pytest.mark.parametrize(
    "text, msg",
    [
        ("generators: eps\nvars: x\nobjective: x\nfoo: 1\n", "unknown key"),
        ("generators: eps\nobjective: x\n", "missing required key 'vars'"),
        ("generators: eps\nvars: x\nvars: y\nobjective: x\n", "duplicate key"),
        ("generators: eps\nvars: x\nobjective: x\ntrunc: two\n", "trunc"),
        ("generators: eps\nvars: x\nobjective: x\ntol: -1\n", "tol"),
        ("generators: x\nvars: x\nobjective: x\n", "both variable and generator"),
        ("generators: eps\nvars: x\nobjective x\n", "key: value"),
    ],
)
def test_problem_errors(text, msg):
    with pytest.raises(ProblemError, match=msg):
        parse_problem(text)


def test_problem_expression_error_reports_file_position():
    with pytest.raises(ParseError) as err:
        parse_problem("generators: eps\nvars: x, y\nconstraint: x + y\nobjective: x * (y\n")
    assert err.value.line == 4
    assert err.value.column == 18  # one past the trailing "y"


def test_problem_dimension_check():
    p = parse_problem("generators: eps\nvars: x\nobjective: x\nconstraint: x - 1\n")
    with pytest.raises(ProblemError, match="too many constraints"):
        p.check_dimensions()
