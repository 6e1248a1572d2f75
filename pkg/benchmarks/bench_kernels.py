"""Compare the compiled series kernels with the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat N]

Times raw multiplication and reciprocal on a few basis sizes, then a full
gradient and solve through each backend (the backend is swapped in place).
"""

import argparse
import timeit

import numpy as np

from hyperlagrange import hyperreal, lagrange, mudiff
from hyperlagrange import _series_py
from hyperlagrange.expr import load_problem, parse
from hyperlagrange.hyperreal import GeneratorSet, basis_for

try:
    from hyperlagrange import _series
except ImportError:
    _series = None

CASES = [(("eps", "delta"), 4), (("eps", "delta", "h"), 5), (("a", "b", "c", "d"), 6)]


def best(stmt, repeat, number):
    return min(timeit.repeat(stmt, repeat=repeat, number=number)) / number


def kernel_rows(backends, repeat):
    rng = np.random.default_rng(0)
    for names, order in CASES:
        basis = basis_for(GeneratorSet(names), order)
        a = rng.normal(size=len(basis))
        b = rng.normal(size=len(basis))
        a[0] = 1.5
        for op in ("mul", "reciprocal"):
            row = [f"{op:<10} {len(names)} gens K={order} ({len(basis):>3} terms)"]
            for mod in backends:
                if op == "mul":
                    t = best(lambda: mod.mul(a, b, basis), repeat, 2000)
                else:
                    t = best(lambda: mod.reciprocal_unit(a, basis), repeat, 500)
                row.append(t)
            yield row


def workload_rows(backends, repeat):
    import pathlib

    problems = pathlib.Path(__file__).resolve().parents[1] / "problems"
    ellipsoid = load_problem(problems / "ellipsoid.txt")
    gens = GeneratorSet(["eps", "delta"])
    f = parse("(1+eps)*x*y^2 - delta*z + x^3*y/(2+eps*z)", ["x", "y", "z"], gens)
    x = mudiff.point([0.3, -1.2, 0.7], gens)
    saved = hyperreal._kernels
    try:
        grad_row, solve_row = ["gradient (3 vars, K=4)"], ["solve ellipsoid (64 seeds)"]
        for mod in backends:
            hyperreal._kernels = mod
            grad_row.append(best(lambda: mudiff.gradient(f, x), repeat, 50))
            solve_row.append(best(lambda: lagrange.solve(ellipsoid), repeat, 1))
    finally:
        hyperreal._kernels = saved
    yield grad_row
    yield solve_row


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    backends = [_series_py] + ([_series] if _series is not None else [])
    header = ["case"] + [m.NAME for m in backends]
    if _series is None:
        print("compiled kernels not built; showing the fallback only")
    else:
        header.append("speedup")
    print(f"{header[0]:<40}" + "".join(f"{h:>14}" for h in header[1:]))
    for rows in (kernel_rows(backends, args.repeat), workload_rows(backends, args.repeat)):
        for label, *times in rows:
            line = f"{label:<40}" + "".join(f"{t * 1e6:>12.1f}us" for t in times)
            if len(times) == 2:
                line += f"{times[0] / times[1]:>13.1f}x"
            print(line)


if __name__ == "__main__":
    main()
