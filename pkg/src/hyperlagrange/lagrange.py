"""Lagrange multiplier rules for mu-differentiable functions.

Candidates are found on the standard shadow of the problem: an m-critical
point of the hyperreal problem has a standard part that is a classical
critical point of ``st(f)`` on ``{st(g_j) = 0}``, and conversely.  The shadow
stationarity system is solved by multistart damped Newton, then every root
is lifted back and checked against the full hyperreal residual computed by
:mod:`hyperlagrange.mudiff` on the unshadowed expressions.

Two forms are offered:

* normal form, ``F = f + sum(lam_j g_j)``, unknowns ``(x, lam)``;
* general form, ``F = mu f + sum(lam_j g_j)`` with ``mu^2 + |lam|^2 = 1``
  appended, unknowns ``(x, mu, lam)``; ``mu ~ 0`` marks an abnormal point.

Completeness of the root list is best effort: multistart Newton gives no
guarantee of finding every stationary point.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from . import mudiff
from .expr import (
    Add,
    Const,
    Expr,
    Mul,
    PowInt,
    ProblemDef,
    Sub,
    Var,
    compile_standard,
    evaluate,
    shadow,
    symbolic_diff,
)
from .hyperreal import Hyperreal

log = logging.getLogger(__name__)

CANDIDATE_MIN = "candidate-min"
CANDIDATE_MAX = "candidate-max"
UNCLASSIFIED = "unclassified"

# Jacobians with a larger condition number are treated as singular.
_MAX_COND = 1e14


@dataclass(frozen=True)
class SolverOptions:
    seeds: int = 64
    seed_box: float = 2.0
    max_iter: int = 50
    newton_tol: float = 1e-12
    dedup_radius: float = 1e-6
    rng_seed: int = 0
    max_halvings: int = 30

    def __post_init__(self):
        for name in ("seeds", "seed_box", "max_iter", "newton_tol", "dedup_radius"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_halvings < 0:
            raise ValueError("max_halvings must be nonnegative")
        if not self.dedup_radius > self.newton_tol:
            raise ValueError("dedup_radius must exceed newton_tol")


@dataclass(frozen=True)
class CriticalPoint:
    point: tuple[float, ...]
    mu: float
    lambdas: tuple[float, ...]
    residual_norm: float
    objective_st: float
    abnormal: bool = False
    constraint_degenerate: bool = False
    classification: tuple[str, ...] = (UNCLASSIFIED,)

    @property
    def multipliers(self) -> tuple[float, ...]:
        return (self.mu,) + self.lambdas

    def ratios(self) -> tuple[float, ...]:
        """``lam_j / mu``; undefined for abnormal points."""
        if self.mu == 0:
            raise ZeroDivisionError("abnormal point has no normal-form multipliers")
        return tuple(l / self.mu for l in self.lambdas)


@dataclass
class AugmentedSystem:
    """Shadow stationarity system of ``F = mu*f + lam.g``.

    ``unknowns`` orders the columns: ``x_1..x_n``, then ``mu`` in general form,
    then ``lam_1..lam_m``.
    """

    general: bool
    n: int
    m: int
    unknowns: tuple[str, ...]
    F: Expr
    residuals: list[Expr]
    jacobian: list[list[Expr]]
    _res_fn: Callable = field(repr=False, default=None)
    _jac_fn: Callable = field(repr=False, default=None)

    def __post_init__(self):
        self._res_fn = _compile_vector(self.residuals)
        self._jac_fn = _compile_vector([e for row in self.jacobian for e in row])

    @property
    def size(self) -> int:
        return len(self.unknowns)

    def residual(self, z) -> np.ndarray:
        return np.array(self._res_fn(z), dtype=np.float64)

    def jac(self, z) -> np.ndarray:
        return np.array(self._jac_fn(z), dtype=np.float64).reshape(self.size, self.size)


def _compile_vector(exprs: Sequence[Expr]) -> Callable:
    fns = [compile_standard(e) for e in exprs]
    return lambda z: [f(z) for f in fns]


def _sum(terms):
    out = None
    for t in terms:
        out = t if out is None else Add(out, t)
    return out


def build_augmented(p: ProblemDef, general: bool = False) -> AugmentedSystem:
    """Augmented function and its shadow stationarity residuals."""
    p.check_dimensions()
    n, m = p.n, p.m
    if general and m < 1:
        raise ValueError("the general Lagrange rule needs at least one constraint")
    lam0 = n + 1 if general else n
    lam = [Var(lam0 + j) for j in range(m)]
    names = list(p.vars) + (["mu"] if general else []) + [f"lambda_{j + 1}" for j in range(m)]

    def augmented(f, gs):
        head = Mul(Var(n), f) if general else f
        return _sum([head] + [Mul(l, g) for l, g in zip(lam, gs)])

    F = augmented(p.objective, p.constraints)
    shadow_f = shadow(p.objective)
    shadow_g = [shadow(g) for g in p.constraints]
    Fs = augmented(shadow_f, shadow_g)
    residuals = [symbolic_diff(Fs, i) for i in range(n)] + shadow_g
    if general:
        sphere = _sum([PowInt(Var(n + k), 2) for k in range(m + 1)])
        residuals.append(Sub(sphere, Const(1.0)))
    size = len(names)
    jacobian = [[symbolic_diff(r, k) for k in range(size)] for r in residuals]
    return AugmentedSystem(general, n, m, tuple(names), F, residuals, jacobian)


def _newton(system: AugmentedSystem, z, opts: SolverOptions, accept: float):
    """Damped Newton from ``z``; returns the root or ``None`` if the seed is abandoned."""
    r = system.residual(z)
    if not np.all(np.isfinite(r)):
        return None
    nr = np.linalg.norm(r)
    for _ in range(opts.max_iter):
        small = np.max(np.abs(r)) <= opts.newton_tol
        J = system.jac(z)
        if not np.all(np.isfinite(J)) or np.linalg.cond(J) > _MAX_COND:
            return z if small else None
        try:
            dz = np.linalg.solve(J, r)
        except np.linalg.LinAlgError:
            return z if small else None
        # at a singular root the residual is tiny long before z is accurate,
        # so stop only once the step is negligible as well
        if small and np.max(np.abs(dz)) <= opts.newton_tol * (1.0 + np.max(np.abs(z))):
            return z
        t = 1.0
        for _ in range(opts.max_halvings + 1):
            zn = z - t * dz
            rn = system.residual(zn)
            nrn = np.linalg.norm(rn)
            if np.isfinite(nrn) and nrn < nr:
                break
            t *= 0.5
        else:
            # no decrease: either at the float noise floor of a root or stuck
            return z if np.max(np.abs(r)) <= accept else None
        z, r, nr = zn, rn, nrn
    return z if np.max(np.abs(r)) <= accept else None


@dataclass
class SolveReport:
    points: list[CriticalPoint]
    seeds: int
    converged: int
    abandoned: int
    rejected: int

    def diagnostic(self) -> str:
        return (
            f"{len(self.points)} critical point(s) from {self.seeds} seeds: "
            f"{self.converged} converged, {self.abandoned} abandoned, "
            f"{self.rejected} failed hyperreal verification"
        )


def _canonical_multipliers(w: np.ndarray, tol: float) -> np.ndarray:
    w = w / np.linalg.norm(w)
    for v in w:
        if abs(v) > tol:
            return w if v > 0 else -w
    return w


def _constraint_degenerate(p: ProblemDef, x: np.ndarray, grads: list[list[Callable]]) -> bool:
    if not grads:
        return False
    G = np.array([[d(x) for d in row] for row in grads])
    return bool(np.linalg.svd(G, compute_uv=False).min() <= p.tolerance.tol)


def solve(p: ProblemDef, opts: SolverOptions | None = None, general: bool = False) -> SolveReport:
    """Multistart solve of the shadow system, with dedup and hyperreal verification."""
    opts = opts or SolverOptions()
    tol = p.tolerance.tol
    system = build_augmented(p, general)
    n = p.n
    rng = np.random.default_rng(opts.rng_seed)
    starts = rng.uniform(-opts.seed_box, opts.seed_box, size=(opts.seeds, system.size))

    roots = []
    abandoned = 0
    for k, z0 in enumerate(starts):
        z = _newton(system, z0, opts, tol)
        if z is None:
            abandoned += 1
            continue
        if general:
            z = np.concatenate([z[:n], _canonical_multipliers(z[n:], tol)])
        res = float(np.max(np.abs(system.residual(z))))
        roots.append((res, k, z))

    kept: list[np.ndarray] = []
    for res, k, z in sorted(roots, key=lambda t: (t[0], t[1])):
        if all(np.max(np.abs(z[:n] - q[:n])) > opts.dedup_radius for q in kept):
            kept.append(z)

    objective = compile_standard(shadow(p.objective))
    grads = [[compile_standard(symbolic_diff(shadow(g), i)) for i in range(n)]
             for g in p.constraints]
    points = []
    rejected = 0
    for z in kept:
        x = z[:n] + 0.0
        if general:
            mu, lambdas = float(z[n]), tuple(float(v) for v in z[n + 1:])
        else:
            mu, lambdas = 1.0, tuple(float(v) for v in z[n:])
        cand = CriticalPoint(
            point=tuple(float(v) for v in x),
            mu=mu,
            lambdas=lambdas,
            residual_norm=0.0,
            objective_st=float(objective(x)),
            abnormal=general and abs(mu) <= tol,
            constraint_degenerate=_constraint_degenerate(p, x, grads),
        )
        resid = verify(p, cand)
        if resid > tol:
            rejected += 1
            log.warning("discarding root %s: hyperreal residual %.3g", cand.point, resid)
            continue
        points.append(replace(cand, residual_norm=resid))
    points.sort(key=lambda c: (c.objective_st, c.point))

    report = SolveReport(points, opts.seeds, len(roots), abandoned, rejected)
    log.info(report.diagnostic())
    return report


def solve_normal(p: ProblemDef, opts: SolverOptions | None = None) -> list[CriticalPoint]:
    """Critical points of ``f + lam.g`` (normal form, ``mu = 1``)."""
    return solve(p, opts, general=False).points


def solve_general(p: ProblemDef, opts: SolverOptions | None = None) -> list[CriticalPoint]:
    """Critical points of ``mu f + lam.g`` with ``(mu, lam)`` on the unit sphere."""
    return solve(p, opts, general=True).points


def verify(p: ProblemDef, c: CriticalPoint, cfg: mudiff.DiffConfig | None = None) -> float:
    """Max ``|st|`` of the lifted residual ``mu grad f + sum lam_j grad g_j`` and ``g_j``.

    Computed by mu-differentiation of the original (unshadowed) expressions at
    the standard point ``c.point``.
    """
    x = mudiff.point(c.point, p.generators, p.order)
    grad = mudiff.gradient(p.objective, x, cfg)
    total = [gi.scale(c.mu) for gi in grad]
    values: list[Hyperreal] = []
    for lam, g in zip(c.lambdas, p.constraints):
        gg = mudiff.gradient(g, x, cfg)
        total = [t + gi.scale(lam) for t, gi in zip(total, gg)]
        values.append(evaluate(g, x))
    return max(abs(v.st()) for v in total + values)


def classify(p: ProblemDef, points: Sequence[CriticalPoint]) -> list[CriticalPoint]:
    """Label the lowest/highest shadow objective values among the candidates.

    Labels compare the found candidates with each other only; they are not
    certificates of extremality.
    """
    if not points:
        return []
    tol = p.tolerance.tol
    lo = min(c.objective_st for c in points)
    hi = max(c.objective_st for c in points)
    out = []
    for c in points:
        labels = []
        if c.objective_st <= lo + tol:
            labels.append(CANDIDATE_MIN)
        if c.objective_st >= hi - tol:
            labels.append(CANDIDATE_MAX)
        out.append(replace(c, classification=tuple(labels) or (UNCLASSIFIED,)))
    return out


def objective_value(p: ProblemDef, c: CriticalPoint) -> Hyperreal:
    """Hyperreal value of the objective at the candidate's standard point."""
    return evaluate(p.objective, mudiff.point(c.point, p.generators, p.order))
