"""Truncated multivariate series in named infinitesimal generators.

A :class:`Hyperreal` is a finite real combination of monomials in the
generators of a :class:`GeneratorSet`, truncated at total degree ``order``.
Every representable value is finite; anything that would need a negative
total degree (``1/eps``) raises :class:`NonUnitDivisorError`.

Coefficients are stored densely against a :class:`Basis`: the monomials of
degree ``<= order`` sorted by total degree, then lexicographically with the
first declared generator most significant.  Bases are cached per
``(generators, order)``, and the product kernels are selected at import time
(compiled extension when available, numpy otherwise; set
``HYPERLAGRANGE_PURE_PYTHON=1`` to force the fallback).
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import lru_cache
from numbers import Real
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

if os.environ.get("HYPERLAGRANGE_PURE_PYTHON"):
    from . import _series_py as _kernels
else:
    try:
        from . import _series as _kernels
    except ImportError:  # extension not built
        from . import _series_py as _kernels

BACKEND: str = _kernels.NAME

DEFAULT_ORDER = 4
DEFAULT_TOL = 1e-9


class ConfigurationError(ValueError):
    """Operands live in different generator sets or truncation orders."""


class NonUnitDivisorError(ArithmeticError):
    """The quotient would be an infinite hyperreal."""


@dataclass(frozen=True)
class Tolerance:
    """Float realization of ``a ≈ b``: ``|st(a - b)| <= tol``."""

    tol: float = DEFAULT_TOL

    def __post_init__(self):
        if not self.tol >= 0:
            raise ValueError(f"tolerance must be nonnegative, got {self.tol!r}")


def _as_tol(t) -> float:
    if t is None:
        return DEFAULT_TOL
    if isinstance(t, Tolerance):
        return t.tol
    return Tolerance(float(t)).tol


class GeneratorSet:
    """Ordered, immutable collection of infinitesimal generator names."""

    __slots__ = ("_names",)

    def __init__(self, names: Iterable[str] = ()):
        names = tuple(names)
        for name in names:
            if not isinstance(name, str) or not name.isidentifier():
                raise ConfigurationError(f"invalid generator name {name!r}")
        if len(set(names)) != len(names):
            raise ConfigurationError(f"duplicate generator names in {names!r}")
        self._names = names

    @property
    def names(self) -> tuple[str, ...]:
        return self._names

    def __len__(self):
        return len(self._names)

    def __iter__(self):
        return iter(self._names)

    def __contains__(self, name):
        return name in self._names

    def index(self, name: str) -> int:
        try:
            return self._names.index(name)
        except ValueError:
            raise ConfigurationError(f"unknown generator {name!r}") from None

    def extended(self, *names: str) -> GeneratorSet:
        return GeneratorSet(self._names + tuple(n for n in names if n not in self._names))

    def fresh_name(self, base: str = "h") -> str:
        """``base`` if unused, otherwise ``base_1``, ``base_2``, ..."""
        if base not in self._names:
            return base
        k = 1
        while f"{base}_{k}" in self._names:
            k += 1
        return f"{base}_{k}"

    def __eq__(self, other):
        return isinstance(other, GeneratorSet) and self._names == other._names

    def __hash__(self):
        return hash(self._names)

    def __repr__(self):
        return f"GeneratorSet({list(self._names)!r})"


class Monomial(tuple):
    """Exponent vector over a generator set, one entry per generator."""

    __slots__ = ()

    @property
    def total_degree(self) -> int:
        return sum(self)

    @property
    def exponents(self) -> dict[int, int]:
        """Sparse view: generator index -> nonzero exponent."""
        return {i: e for i, e in enumerate(self) if e}

    def divides(self, other: Monomial) -> bool:
        return all(a <= b for a, b in zip(self, other))

    def render(self, gens: GeneratorSet) -> str:
        parts = []
        for name, e in zip(gens.names, self):
            if e == 1:
                parts.append(name)
            elif e > 1:
                parts.append(f"{name}^{e}")
        return "*".join(parts)


def _monomials_of_degree(nvars: int, degree: int) -> Iterator[tuple[int, ...]]:
    # descending lexicographic: eps^2, eps*delta, delta^2
    if nvars == 0:
        if degree == 0:
            yield ()
        return
    if nvars == 1:
        yield (degree,)
        return
    for first in range(degree, -1, -1):
        for rest in _monomials_of_degree(nvars - 1, degree - first):
            yield (first,) + rest


class Basis:
    """Graded monomial basis with precomputed product tables."""

    def __init__(self, gens: GeneratorSet, order: int):
        if order < 0:
            raise ConfigurationError(f"truncation order must be >= 0, got {order}")
        self.gens = gens
        self.order = order
        monos = [
            Monomial(m)
            for d in range(order + 1)
            for m in _monomials_of_degree(len(gens), d)
        ]
        self.monomials: tuple[Monomial, ...] = tuple(monos)
        self.index = {m: i for i, m in enumerate(monos)}
        self.degree = np.array([m.total_degree for m in monos], dtype=np.int32)
        n = len(monos)
        # count of monomials with degree <= d, for d = 0..order
        upto = np.searchsorted(self.degree, np.arange(order + 1), side="right")
        self.limit = np.ascontiguousarray(upto[order - self.degree], dtype=np.int32)

        table = np.full((n, n), -1, dtype=np.int32)
        pi, pj, pk = [], [], []
        for i, mi in enumerate(monos):
            for j in range(int(self.limit[i])):
                k = self.index[Monomial(a + b for a, b in zip(mi, monos[j]))]
                table[i, j] = k
                pi.append(i)
                pj.append(j)
                pk.append(k)
        self.table = table
        self.pair_i = np.array(pi, dtype=np.intp)
        self.pair_j = np.array(pj, dtype=np.intp)
        self.pair_k = np.array(pk, dtype=np.intp)

    def __len__(self):
        return len(self.monomials)

    def __repr__(self):
        return f"Basis({list(self.gens.names)!r}, order={self.order}, size={len(self)})"


@lru_cache(maxsize=None)
def basis_for(gens: GeneratorSet, order: int) -> Basis:
    return Basis(gens, order)


@lru_cache(maxsize=None)
def _embedding(src: Basis, dst: Basis) -> tuple[np.ndarray, np.ndarray]:
    # generators are matched by name; src names must all occur in dst
    pos = [dst.gens.index(name) for name in src.gens]
    keep, target = [], []
    for i, m in enumerate(src.monomials):
        exps = [0] * len(dst.gens)
        for p, e in zip(pos, m):
            exps[p] = e
        k = dst.index.get(Monomial(exps))
        if k is not None:
            keep.append(i)
            target.append(k)
    return np.array(keep, dtype=np.intp), np.array(target, dtype=np.intp)


class Hyperreal:
    """Immutable finite hyperreal: truncated series over named infinitesimals."""

    __slots__ = ("basis", "coeffs")

    def __init__(self, basis: Basis, coeffs):
        arr = np.asarray(coeffs, dtype=np.float64) + 0.0  # drop signed zeros
        if arr.shape != (len(basis),):
            raise ConfigurationError(
                f"coefficient vector of shape {arr.shape} does not match {basis!r}"
            )
        arr.flags.writeable = False
        self.basis = basis
        self.coeffs = arr

    # -- construction -----------------------------------------------------

    @classmethod
    def constant(cls, value: float, gens: GeneratorSet, order: int = DEFAULT_ORDER) -> Hyperreal:
        basis = basis_for(gens, order)
        c = np.zeros(len(basis))
        c[0] = value
        return cls(basis, c)

    @classmethod
    def generator(cls, name: str, gens: GeneratorSet, order: int = DEFAULT_ORDER,
                  power: int = 1, coeff: float = 1.0) -> Hyperreal:
        exps = [0] * len(gens)
        exps[gens.index(name)] = power
        return cls.from_terms({Monomial(exps): coeff}, gens, order)

    @classmethod
    def from_terms(cls, terms: Mapping[Sequence[int], float], gens: GeneratorSet,
                   order: int = DEFAULT_ORDER) -> Hyperreal:
        """Build from ``{exponent tuple: coefficient}``; degrees above ``order`` are dropped."""
        basis = basis_for(gens, order)
        c = np.zeros(len(basis))
        for mono, coeff in terms.items():
            mono = Monomial(mono)
            if len(mono) != len(gens) or any(e < 0 for e in mono):
                raise ConfigurationError(f"bad monomial {tuple(mono)!r} for {gens!r}")
            k = basis.index.get(mono)
            if k is not None:
                c[k] += coeff
        return cls(basis, c)

    def _like(self, coeffs) -> Hyperreal:
        return Hyperreal(self.basis, coeffs)

    # -- views ------------------------------------------------------------

    @property
    def gens(self) -> GeneratorSet:
        return self.basis.gens

    @property
    def order(self) -> int:
        return self.basis.order

    @property
    def terms(self) -> dict[Monomial, float]:
        """Nonzero terms in canonical order."""
        mons = self.basis.monomials
        return {mons[k]: float(self.coeffs[k]) for k in np.flatnonzero(self.coeffs)}

    def st(self) -> float:
        return float(self.coeffs[0])

    def is_zero(self) -> bool:
        return not self.coeffs.any()

    def is_standard(self) -> bool:
        return not self.coeffs[1:].any()

    def lowest_degree(self) -> int | None:
        nz = np.flatnonzero(self.coeffs)
        return int(self.basis.degree[nz[0]]) if nz.size else None

    def lift(self, gens: GeneratorSet | None = None, order: int | None = None) -> Hyperreal:
        """Embed into a larger generator set and/or change the truncation order.

        Lowering ``order`` truncates; ``gens`` must contain every current
        generator name (in any position).
        """
        gens = self.gens if gens is None else gens
        order = self.order if order is None else order
        if gens == self.gens and order == self.order:
            return self
        if not set(self.gens.names) <= set(gens.names):
            raise ConfigurationError(f"cannot embed {self.gens!r} into {gens!r}")
        dst = basis_for(gens, order)
        keep, target = _embedding(self.basis, dst)
        c = np.zeros(len(dst))
        c[target] = self.coeffs[keep]
        return Hyperreal(dst, c)

    def truncate(self, order: int) -> Hyperreal:
        return self.lift(order=order)

    # -- arithmetic -------------------------------------------------------

    def _coerce(self, other) -> Hyperreal:
        if isinstance(other, Hyperreal):
            if other.basis is not self.basis:
                raise ConfigurationError(
                    f"operands differ: {self.basis!r} vs {other.basis!r}"
                )
            return other
        if isinstance(other, Real):
            c = np.zeros(len(self.basis))
            c[0] = float(other)
            return self._like(c)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self._like(self.coeffs + other.coeffs)

    __radd__ = __add__

    def __neg__(self):
        return self._like(-self.coeffs)

    def __pos__(self):
        return self

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self._like(self.coeffs - other.coeffs)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other - self

    def scale(self, k: float) -> Hyperreal:
        return self._like(self.coeffs * float(k))

    def __mul__(self, other):
        if isinstance(other, Real):
            return self.scale(other)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self._like(_kernels.mul(self.coeffs, other.coeffs, self.basis))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return div(self, other)

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return div(other, self)

    def __pow__(self, n):
        return pow_int(self, n)

    def __eq__(self, other):
        if isinstance(other, Hyperreal):
            return self.basis is other.basis and np.array_equal(self.coeffs, other.coeffs)
        if isinstance(other, Real):
            return self.is_standard() and self.st() == other
        return NotImplemented

    def __hash__(self):
        return hash((self.gens, self.order, self.coeffs.tobytes()))

    def __float__(self):
        return self.st()

    def __repr__(self):
        return f"Hyperreal({render(self)!r}, gens={list(self.gens.names)}, order={self.order})"

    def __str__(self):
        return render(self)


def add(a: Hyperreal, b: Hyperreal) -> Hyperreal:
    return a + b


def sub(a: Hyperreal, b: Hyperreal) -> Hyperreal:
    return a - b


def neg(a: Hyperreal) -> Hyperreal:
    return -a


def mul(a: Hyperreal, b: Hyperreal) -> Hyperreal:
    return a * b


def scale(a: Hyperreal, k: float) -> Hyperreal:
    return a.scale(k)


def div(a: Hyperreal, b: Hyperreal) -> Hyperreal:
    """Quotient ``a / b`` for a unit ``b`` or a monomial ``b`` dividing ``a``."""
    b = a._coerce(b)
    if b.is_zero():
        raise ZeroDivisionError("hyperreal division by zero")
    c0 = b.coeffs[0]
    if c0 != 0.0:
        if b.is_standard():
            return a._like(a.coeffs / c0)
        return a * Hyperreal(b.basis, _kernels.reciprocal_unit(b.coeffs, b.basis))

    nz = np.flatnonzero(b.coeffs)
    if nz.size != 1:
        raise NonUnitDivisorError(
            f"nonunit divisor {render(b)}: quotient would be infinite"
        )
    basis = a.basis
    step = basis.monomials[nz[0]]
    c = b.coeffs[nz[0]]
    out = np.zeros(len(basis))
    for k in np.flatnonzero(a.coeffs):
        m = basis.monomials[k]
        if not step.divides(m):
            raise NonUnitDivisorError(
                f"nonunit divisor {render(b)} does not divide {render(a)}"
            )
        q = Monomial(x - y for x, y in zip(m, step))
        out[basis.index[q]] = a.coeffs[k] / c
    return a._like(out)


def pow_int(a: Hyperreal, n: int) -> Hyperreal:
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 0:
        raise ValueError(f"exponent must be a nonnegative integer, got {n!r}")
    result = a._coerce(1.0)
    base = a
    n = int(n)
    while n:
        if n & 1:
            result = result * base
        n >>= 1
        if n:
            base = base * base
    return result


def st(a) -> float:
    if isinstance(a, Hyperreal):
        return a.st()
    return float(a)


def is_infinitesimal(a, t=None) -> bool:
    return abs(st(a)) <= _as_tol(t)


def _common(a, b):
    if isinstance(a, Hyperreal) and isinstance(b, Hyperreal) and a.basis is not b.basis:
        gens = a.gens.extended(*b.gens.names)
        k = min(a.order, b.order)
        a, b = a.lift(gens, k), b.lift(gens, k)
    return a, b


def approx_eq(a, b, t=None) -> bool:
    """``a ≈ b``.  Operands over different generator sets are compared in their union."""
    a, b = _common(a, b)
    return is_infinitesimal(a - b, t)


def render(a: Hyperreal, digits: int = 12) -> str:
    """Canonical text form, e.g. ``4 + 4*eps - 3*delta``."""
    out = []
    for mono, c in a.terms.items():
        mag = f"{abs(c):.{digits}g}"
        body = mono.render(a.gens)
        if not body:
            term = mag
        elif mag == "1":
            term = body
        else:
            term = f"{mag}*{body}"
        if not out:
            out.append(term if c > 0 else f"-{term}")
        else:
            out.append(f"+ {term}" if c > 0 else f"- {term}")
    return " ".join(out) if out else "0"


def isclose_terms(a: Hyperreal, b: Hyperreal, rel: float = 1e-12) -> bool:
    """Same support-wise coefficients up to relative ``rel``."""
    a, b = _common(a, b)
    scale_ = max(1.0, float(np.max(np.abs(a.coeffs), initial=0.0)),
                 float(np.max(np.abs(b.coeffs), initial=0.0)))
    return bool(np.all(np.abs(a.coeffs - b.coeffs) <= rel * scale_))
