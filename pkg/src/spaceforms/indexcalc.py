"""Exact index-iteration machinery for non-orientable closed geodesics.

Everything here is integer/rational arithmetic over a symplectic normal
form: the ceiling/floor functionals, their parity-shifted variants, the
index and nullity of the m-th iterate, the mean index, and the geometric
lower bounds used by the multiplicity arguments.  Angles are stored as
fractions of a full turn; `fractions.Fraction` inputs are evaluated exactly,
floats are evaluated in double precision with snapping near integers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational

import numpy as np

from .errors import DomainError, PreconditionError

_SNAP = 1e-9

AngleLike = "Fraction | float"


def _ceil(a):
    if isinstance(a, Rational):
        return -((-a.numerator) // a.denominator)
    r = round(a)
    if abs(a - r) < _SNAP * max(1.0, abs(a)):
        return int(r)
    return math.ceil(a)


def _floor(a):
    if isinstance(a, Rational):
        return a.numerator // a.denominator
    r = round(a)
    if abs(a - r) < _SNAP * max(1.0, abs(a)):
        return int(r)
    return math.floor(a)


def floor_ops(a) -> dict:
    """E(a) = ceiling, floor, phi(a) = E - floor in {0,1}, frac(a) in [0,1)."""
    E = _ceil(a)
    fl = _floor(a)
    return {"E": E, "floor": fl, "phi": E - fl, "frac": a - fl}


def E_m_phi_m(m: int, a) -> dict:
    """Parity-shifted ceiling/jump: shift a by 1/2 iff m is odd."""
    if m < 1:
        raise PreconditionError("iteration exponent must be >= 1")
    if m % 2 == 1:
        a = a - (Fraction(1, 2) if isinstance(a, Rational) else 0.5)
    ops = floor_ops(a)
    return {"E_m": ops["E"], "phi_m": ops["phi"]}


def _check_angle(a) -> None:
    x = float(a)
    if not 0.0 < x < 1.0 or x == 0.5 or (isinstance(a, Rational) and a == Fraction(1, 2)):
        raise DomainError("angle fractions must lie in (0,1) \\ {1/2}")


@dataclass(frozen=True)
class NormalForm:
    """Block data of a symplectic normal form plus the prime index/nullity.

    thetas/alphas/betas hold rotation angles as fractions of 2*pi; the first
    r_prime entries of thetas are the ones in (1/2, 1).
    """

    n: int
    i1: int
    nu1: int = 0
    p_minus: int = 0
    p_zero: int = 0
    p_plus: int = 0
    q_minus: int = 0
    q_zero: int = 0
    q_plus: int = 0
    thetas: tuple = ()
    r_prime: int = 0
    alphas: tuple = ()
    betas: tuple = ()
    h_count: int = 0

    def __post_init__(self):
        object.__setattr__(self, "thetas", tuple(self.thetas))
        object.__setattr__(self, "alphas", tuple(self.alphas))
        object.__setattr__(self, "betas", tuple(self.betas))
        for a in (*self.thetas, *self.alphas, *self.betas):
            _check_angle(a)
        if not 0 <= self.r_prime <= len(self.thetas):
            raise PreconditionError("r_prime must count a prefix of thetas")
        for j, a in enumerate(self.thetas):
            big = float(a) > 0.5
            if big != (j < self.r_prime):
                raise PreconditionError("thetas must list the (1/2,1) angles first (r_prime of them)")
        if self.nu1 < 0:
            raise PreconditionError("nullity must be nonnegative")
        if self.block_dimension > 2 * self.n - 2:
            raise PreconditionError("total block dimension exceeds 2n-2")

    @property
    def r(self) -> int:
        return len(self.thetas)

    @property
    def r_star(self) -> int:
        return len(self.alphas)

    @property
    def r_zero(self) -> int:
        return len(self.betas)

    @property
    def block_dimension(self) -> int:
        return (
            2 * (self.p_minus + self.p_zero + self.p_plus)
            + 2 * (self.q_minus + self.q_zero + self.q_plus)
            + 2 * self.r
            + 4 * self.r_star
            + 4 * self.r_zero
            + 2 * self.h_count
        )


def _n_odd_flag(n: int) -> int:
    return (1 - (-1) ** n) // 2


def index_iterate(nf: NormalForm, m: int) -> int:
    """Index i(c^m) of the m-th iterate, exactly as the iteration formula states."""
    if m < 1:
        raise PreconditionError("iteration exponent must be >= 1")
    even = (1 + (-1) ** m) // 2
    total = m * (nf.i1 + nf.q_zero + nf.q_plus - 2 * nf.r_prime)
    total -= nf.q_zero + nf.q_plus
    total -= even * (nf.r + nf.p_minus + nf.p_zero + _n_odd_flag(nf.n))
    for th in nf.thetas:
        total += 2 * E_m_phi_m(m, m * th if isinstance(th, Rational) else m * float(th))["E_m"]
    for al in nf.alphas:
        total += 2 * E_m_phi_m(m, m * al if isinstance(al, Rational) else m * float(al))["phi_m"]
    total -= 2 * nf.r_star
    return total


def nullity_iterate(nf: NormalForm, m: int) -> int:
    """Nullity nu(c^m) of the m-th iterate."""
    if m < 1:
        raise PreconditionError("iteration exponent must be >= 1")
    even = (1 + (-1) ** m) // 2
    total = nf.nu1 + even * (nf.p_minus + 2 * nf.p_zero + nf.p_plus + _n_odd_flag(nf.n))
    for group in (nf.thetas, nf.alphas, nf.betas):
        jumps = sum(E_m_phi_m(m, m * a if isinstance(a, Rational) else m * float(a))["phi_m"] for a in group)
        total += 2 * (len(group) - jumps)
    return total


def mean_index(nf: NormalForm):
    """Mean index: the linear growth rate lim i(c^m)/m; exact for rational angles."""
    base = nf.i1 + nf.q_zero + nf.q_plus - 2 * nf.r_prime
    if all(isinstance(t, Rational) for t in nf.thetas):
        return base + 2 * sum((Fraction(t) for t in nf.thetas), Fraction(0))
    return base + 2.0 * sum(float(t) for t in nf.thetas)


def _as_int_fraction(a) -> tuple[int, int] | None:
    if isinstance(a, Rational):
        return a.numerator, a.denominator
    return None


def index_iterate_batch(nf: NormalForm, m_max: int) -> np.ndarray:
    """i(c^m) for m = 1..m_max; exact vectorized integer arithmetic when
    every angle is rational, double-precision with snapping otherwise."""
    m = np.arange(1, m_max + 1, dtype=np.int64)
    odd = m % 2 == 1
    total = m * (nf.i1 + nf.q_zero + nf.q_plus - 2 * nf.r_prime)
    total = total - (nf.q_zero + nf.q_plus)
    total = total - np.where(odd, 0, nf.r + nf.p_minus + nf.p_zero + _n_odd_flag(nf.n))
    rational = all(_as_int_fraction(a) is not None for a in (*nf.thetas, *nf.alphas))
    if rational:
        for th in nf.thetas:
            num, den = _as_int_fraction(th)
            # E_m(m*th): subtract 1/2 for odd m, then take the ceiling exactly
            twice = 2 * m * num - np.where(odd, den, 0)  # numerator over 2*den
            total = total + 2 * (-((-twice) // (2 * den)))
        for al in nf.alphas:
            num, den = _as_int_fraction(al)
            twice = 2 * m * num - np.where(odd, den, 0)
            is_int = twice % (2 * den) == 0
            total = total + 2 * np.where(is_int, 0, 1)
    else:
        for th in nf.thetas:
            a = m * float(th) - np.where(odd, 0.5, 0.0)
            r = np.rint(a)
            snapped = np.abs(a - r) < _SNAP * np.maximum(1.0, np.abs(a))
            total = total + 2 * np.where(snapped, r, np.ceil(a)).astype(np.int64)
        for al in nf.alphas:
            a = m * float(al) - np.where(odd, 0.5, 0.0)
            r = np.rint(a)
            is_int = np.abs(a - r) < _SNAP * np.maximum(1.0, np.abs(a))
            total = total + 2 * np.where(is_int, 0, 1)
    return total - 2 * nf.r_star


def nullity_iterate_batch(nf: NormalForm, m_max: int) -> np.ndarray:
    """nu(c^m) for m = 1..m_max (same arithmetic policy as index_iterate_batch)."""
    m = np.arange(1, m_max + 1, dtype=np.int64)
    odd = m % 2 == 1
    total = nf.nu1 + np.where(odd, 0, nf.p_minus + 2 * nf.p_zero + nf.p_plus + _n_odd_flag(nf.n))
    for group in (nf.thetas, nf.alphas, nf.betas):
        for a in group:
            fr = _as_int_fraction(a)
            if fr is not None:
                num, den = fr
                twice = 2 * m * num - np.where(odd, den, 0)
                jump = np.where(twice % (2 * den) == 0, 0, 1)
            else:
                x = m * float(a) - np.where(odd, 0.5, 0.0)
                r = np.rint(x)
                jump = np.where(np.abs(x - r) < _SNAP * np.maximum(1.0, np.abs(x)), 0, 1)
            total = total + 2 * (1 - jump)
    return total


@dataclass(frozen=True)
class IndexSequence:
    """i(c^m), nu(c^m) for m = 1..M with the mean index and parity trace."""

    indices: tuple
    nullities: tuple
    mean: object

    @property
    def parity(self) -> tuple:
        return tuple(i % 2 for i in self.indices)


def index_sequence(nf: NormalForm, m_max: int) -> IndexSequence:
    i = index_iterate_batch(nf, m_max)
    nu = nullity_iterate_batch(nf, m_max)
    return IndexSequence(tuple(int(v) for v in i), tuple(int(v) for v in nu), mean_index(nf))


def growth_constant(nf: NormalForm) -> int:
    """A bound C with |i(c^m) - m * mean_index| <= C for all m (from block counts)."""
    return (
        abs(nf.q_zero + nf.q_plus)
        + nf.r + nf.p_minus + nf.p_zero + 1
        + 2 * nf.r + 4 * nf.r_star
    )


def bound_min_length(lam: float) -> float:
    """Lower bound pi*(lam+1)/lam for closed geodesic length under the pinch hypotheses."""
    if lam < 1.0:
        raise DomainError("reversibility must satisfy lambda >= 1")
    return math.pi * (lam + 1.0) / lam


def bound_index_from_length(L: float, delta: float, n: int) -> int:
    """k(n-1) where k is the largest integer with L > k*pi/sqrt(delta)."""
    if delta <= 0.0 or L <= 0.0:
        raise DomainError("need delta > 0 and L > 0")
    k = 0
    while L > (k + 1) * math.pi / math.sqrt(delta):
        k += 1
    return k * (n - 1)


def bound_mean_index(delta: float, lam: float, n: int, p: int) -> float:
    """sqrt(delta)*(lam+1)/lam*(n-1)/p, with the curvature hypothesis gate."""
    if lam < 1.0:
        raise DomainError("reversibility must satisfy lambda >= 1")
    if not 0.0 < delta <= 1.0:
        raise DomainError("curvature bound must satisfy 0 < delta <= 1")
    if n % 2 == 1 and delta <= (lam / (lam + 1.0)) ** 2:
        raise DomainError("odd dimension requires delta > (lambda/(lambda+1))^2")
    return math.sqrt(delta) * (lam + 1.0) / lam * (n - 1) / p
