"""Mu-differentiation by exact infinitesimal difference quotients.

The step is a monomial in a generator that does not occur in the function's
constants (by default a fresh generator ``h``), so the quotient
``(f(x + step*e_i) - f(x)) / step`` is computed exactly in truncated series
arithmetic.  Evaluation runs at order ``K + deg(step)`` and the quotient is
truncated back to ``K``, so no retained degree is lost to the division.

Results are gradients only up to infinitesimals: two quotients taken with
different admissible steps differ by an infinitesimal vector, so compare them
with :func:`~hyperlagrange.hyperreal.approx_eq`, never with ``==``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .expr import Expr, evaluate
from .hyperreal import (
    ConfigurationError,
    GeneratorSet,
    Hyperreal,
    Monomial,
    Tolerance,
    is_infinitesimal,
)

HyperPoint = Sequence[Hyperreal]


@dataclass(frozen=True)
class DiffConfig:
    """Choice of step ``generator^power``.

    ``generator=None`` picks a fresh name (``h``, or ``h_1`` ... on collision)
    appended to the point's generators.  ``delta_f`` is the assumed lower bound
    on admissible steps; it is recorded, not checked.
    """

    generator: str | None = None
    power: int = 1
    delta_f: float = 0.0
    tolerance: Tolerance = field(default_factory=Tolerance)

    def __post_init__(self):
        if self.power < 1:
            raise ConfigurationError("step power must be a positive integer")


@dataclass(frozen=True)
class Gradient:
    partials: tuple[Hyperreal, ...]
    step_used: Monomial
    step_name: str

    def __len__(self):
        return len(self.partials)

    def __iter__(self):
        return iter(self.partials)

    def __getitem__(self, i):
        return self.partials[i]

    def st(self) -> list[float]:
        return [p.st() for p in self.partials]


def point(values: Sequence[float], gens: GeneratorSet | Sequence[str] = (), order: int = 4) -> list[Hyperreal]:
    """Standard point as a list of hyperreal coordinates."""
    if not isinstance(gens, GeneratorSet):
        gens = GeneratorSet(gens)
    return [Hyperreal.constant(float(v), gens, order) for v in values]


def _step_setup(x: HyperPoint, cfg: DiffConfig):
    if not x:
        raise ValueError("empty point")
    gens, order = x[0].gens, x[0].order
    name = cfg.generator or gens.fresh_name("h")
    ext = gens.extended(name)
    work = order + cfg.power
    step = Hyperreal.generator(name, ext, work, power=cfg.power)
    lifted = [c.lift(ext, work) for c in x]
    mono = step.basis.monomials[int(step.coeffs.nonzero()[0][0])]
    return name, mono, step, lifted, order


def _quotient(f: Expr, base: list[Hyperreal], shifted: list[Hyperreal], step: Hyperreal, order: int) -> Hyperreal:
    num = evaluate(f, shifted) - evaluate(f, base)
    return (num / step).truncate(order)


def partial(f: Expr, x: HyperPoint, i: int, cfg: DiffConfig | None = None) -> Hyperreal:
    """``(f(..., x_i + step, ...) - f(x)) / step``, exact up to truncation order."""
    cfg = cfg or DiffConfig()
    if not 0 <= i < len(x):
        raise IndexError(f"variable index {i} outside point of size {len(x)}")
    _, _, step, lifted, order = _step_setup(x, cfg)
    shifted = list(lifted)
    shifted[i] = lifted[i] + step
    return _quotient(f, lifted, shifted, step, order)


def gradient(f: Expr, x: HyperPoint, cfg: DiffConfig | None = None) -> Gradient:
    cfg = cfg or DiffConfig()
    name, mono, step, lifted, order = _step_setup(x, cfg)
    base = evaluate(f, lifted)
    parts = []
    for i in range(len(x)):
        shifted = list(lifted)
        shifted[i] = lifted[i] + step
        parts.append(((evaluate(f, shifted) - base) / step).truncate(order))
    return Gradient(tuple(parts), mono, name)


def directional(f: Expr, x: HyperPoint, u: HyperPoint, cfg: DiffConfig | None = None) -> Hyperreal:
    """``(f(x + step*u) - f(x)) / step`` for a finite direction ``u``."""
    cfg = cfg or DiffConfig()
    if len(u) != len(x):
        raise ValueError("direction and point sizes differ")
    _, _, step, lifted, order = _step_setup(x, cfg)
    ext, work = step.gens, step.order
    shifted = [xi + step * ui.lift(ext, work) for xi, ui in zip(lifted, u)]
    return _quotient(f, lifted, shifted, step, order)


def dot(g: Gradient | Sequence[Hyperreal], u: HyperPoint) -> Hyperreal:
    """``sum_i g_i * u_i``, embedding ``u`` into the gradient's generators."""
    parts = list(g)
    basis = parts[0].basis
    total = parts[0] * 0.0
    for gi, ui in zip(parts, u):
        total = total + gi * ui.lift(basis.gens, basis.order)
    return total


def is_m_critical(f: Expr, x: HyperPoint, cfg: DiffConfig | None = None) -> bool:
    """True iff every component of the gradient is infinitesimal."""
    cfg = cfg or DiffConfig()
    return all(is_infinitesimal(p, cfg.tolerance) for p in gradient(f, x, cfg))
