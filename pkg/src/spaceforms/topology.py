"""Equivariant topology of the non-contractible loop space and counting bounds.

Closed-form Betti numbers of the circle-equivariant homology of the space
of non-contractible loops on a projective space, Morse-inequality audits
against a finite collection of critical-point index data, and the exact
rational counting arguments that turn curvature pinching into geodesic
multiplicity lower bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

from .errors import DomainError, PreconditionError


def betti(n: int, q: int) -> int:
    """Equivariant Betti number b_q for the non-contractible loops on RP^n.

    Odd n = 2k+1: b_q = 2 for q a positive multiple of n-1 (even), 1 for the
    other even q >= 0, 0 otherwise.  Even n = 2k: nonzero only in even
    degrees, with b_q = 2 exactly on positive multiples of 2(n-1).
    """
    if n < 2:
        raise DomainError("dimension must be >= 2")
    if q < 0:
        return 0
    if q % 2 == 1:
        return 0
    if n % 2 == 1:
        if q > 0 and q % (n - 1) == 0:
            return 2
        return 1
    if q > 0 and q % (2 * (n - 1)) == 0:
        return 2
    # even n: odd multiples of n-1 are even degrees only when n-1 is even,
    # which never happens here, so the remaining even degrees all carry 1
    return 1


def poincare_series_coeffs(n: int, q_max: int) -> list:
    """Coefficients of the equivariant Poincare series by exact long division.

    Odd n = 2k+1: (1 - t^{2k+2}) / ((1 - t^2)(1 - t^{2k})).
    Even n = 2k:  (1 - t^{4k}) / ((1 - t^2)(1 - t^{4k-2})).
    """
    if n < 2:
        raise DomainError("dimension must be >= 2")
    if n % 2 == 1:
        k = (n - 1) // 2
        num_deg, d1, d2 = 2 * k + 2, 2, 2 * k
    else:
        k = n // 2
        num_deg, d1, d2 = 4 * k, 2, 4 * k - 2
    num = [0] * (max(num_deg, q_max) + 1)
    num[0] = 1
    num[num_deg] -= 1
    # divide by (1 - t^d): c_new[i] = c[i] + c_new[i - d]
    out = list(num)
    for d in (d1, d2):
        for i in range(d, q_max + 1):
            out[i] += out[i - d]
    return out[: q_max + 1]


@dataclass(frozen=True)
class BettiTable:
    """Betti numbers b_0..b_{q_max} with their running (Morse) partial sums."""

    n: int
    values: tuple

    @property
    def partial_sums(self) -> tuple:
        total, out = 0, []
        for v in self.values:
            total += v
            out.append(total)
        return tuple(out)


def betti_table(n: int, q_max: int) -> BettiTable:
    vals = tuple(betti(n, q) for q in range(q_max + 1))
    series = poincare_series_coeffs(n, q_max)
    if list(vals) != series:
        raise PreconditionError("closed-form Betti numbers disagree with the series expansion")
    return BettiTable(n, vals)


@dataclass(frozen=True)
class MorseEntry:
    """One critical orbit's contribution: index, nullity, and the local count
    k_q of homology it can support in degree q (0 <= k_q, support inside
    [index, index + nullity])."""

    index: int
    nullity: int
    k: dict

    def __post_init__(self):
        if self.index < 0 or self.nullity < 0:
            raise PreconditionError("index and nullity must be nonnegative")
        for q, kq in self.k.items():
            if kq < 0:
                raise PreconditionError("local multiplicities must be nonnegative")
            if kq > 0 and not self.index <= q <= self.index + self.nullity:
                raise PreconditionError(
                    "local homology in degree %d outside [index, index+nullity]" % q
                )


@dataclass(frozen=True)
class MorseData:
    """A finite list of critical-orbit contributions for one degree window."""

    entries: tuple
    q_max: int

    def counts(self) -> list:
        M = [0] * (self.q_max + 1)
        for e in self.entries:
            for q, kq in e.k.items():
                if 0 <= q <= self.q_max:
                    M[q] += kq
        return M


def morse_inequality_check(data: MorseData, table: BettiTable, Q: int | None = None) -> dict:
    """Audit the Morse inequalities M_q >= b_q for q <= Q.

    Completeness of `data` up to degree Q (every critical orbit with
    index + nullity <= Q listed) is the caller's responsibility.  Returns
    the per-degree slack and the first violating degree, which is the
    contradiction degree in the counting proofs.
    """
    if table.n < 2:
        raise DomainError("dimension must be >= 2")
    q_max = min(data.q_max, len(table.values) - 1)
    if Q is not None:
        q_max = min(q_max, Q)
    M = data.counts()[: q_max + 1]
    b = list(table.values[: q_max + 1])
    slack = [M[q] - b[q] for q in range(q_max + 1)]
    first_fail = next((q for q, s in enumerate(slack) if s < 0), None)
    return {
        "pass": first_fail is None,
        "slack": slack,
        "first_violation_degree": first_fail,
    }


def _sqrt_exact(x):
    """Exact rational square root when it exists, float otherwise."""
    if isinstance(x, Rational):
        f = Fraction(x)
        rn = math.isqrt(f.numerator)
        rd = math.isqrt(f.denominator)
        if rn * rn == f.numerator and rd * rd == f.denominator:
            return Fraction(rn, rd)
    return math.sqrt(float(x))


@dataclass(frozen=True)
class CountingReport:
    """Output of the two-geodesic counting argument on the projective plane.

    bound_c1 bounds the length of the minimizer, bound_c2 the length of the
    second geodesic; branch records which parity case of N fired.
    """

    count: int
    N: int
    x: object
    bound_c1: float
    bound_c2: float
    branch: str
    closed_form: float

    def to_json_dict(self) -> dict:
        return {
            "N": self.N,
            "bound_c1": self.bound_c1,
            "bound_c2": self.bound_c2,
            "branch": self.branch,
        }


def _counting_hypotheses(delta, lam) -> None:
    lam_f = float(lam)
    if lam_f < 1.0:
        raise DomainError("reversibility must satisfy lambda >= 1")
    if not float(delta) <= 1.0:
        raise DomainError("curvature bound must satisfy delta <= 1")
    if not (lam_f / (lam_f + 1.0)) ** 2 < float(delta):
        raise DomainError("need delta > (lambda/(lambda+1))^2")


def thm1_counting(delta, lam) -> CountingReport:
    """Two distinct non-contractible geodesics on a pinched projective plane.

    With x = 1/(sqrt(delta)*(lam+1)/lam - 1) and N the integer with
    N-1 <= x < N, the minimizer has length <= pi/sqrt(delta) and a second
    geodesic lies below (N+1)*pi/sqrt(delta) for N even, N*pi/sqrt(delta)
    for N odd; both fall under the closed form (pi/sqrt(delta))*(2 + x).
    Exact rationals are used whenever sqrt(delta) is rational.
    """
    _counting_hypotheses(delta, lam)
    lam_f = Fraction(lam) if isinstance(lam, Rational) else float(lam)
    sd = _sqrt_exact(delta)
    pi = math.pi
    if isinstance(sd, Fraction) and isinstance(lam_f, Fraction):
        x = 1 / (sd * (lam_f + 1) / lam_f - 1)
        # N - 1 <= x < N, so integer x lands on N = x + 1
        N = x.numerator // x.denominator + 1
        inv = 1 / sd
        long_mult = (N + 1) if N % 2 == 0 else N
        bound_c1 = float(inv) * pi
        bound_c2 = float(inv * long_mult) * pi
        closed = float(inv * (2 + x)) * pi
    else:
        sdf = float(sd)
        x = 1.0 / (sdf * (float(lam_f) + 1.0) / float(lam_f) - 1.0)
        N = math.floor(x + 1e-12) + 1
        long_mult = (N + 1) if N % 2 == 0 else N
        bound_c1 = pi / sdf
        bound_c2 = long_mult * pi / sdf
        closed = (pi / sdf) * (2.0 + x)
    if bound_c2 > closed + 1e-12:
        raise PreconditionError("branch bound exceeds the closed-form bound")
    branch = "even" if N % 2 == 0 else "odd"
    return CountingReport(2, int(N), x, bound_c1, bound_c2, branch, closed)


def thm1_contradiction_data(delta, lam, q_max: int | None = None) -> dict:
    """MorseData for the one-geodesic contradiction on the projective plane.

    Assuming a single geodesic with mean index ihat = sqrt(delta)*(lam+1)/(2*lam),
    the m-th relevant iterate contributes in the smallest even degree
    >= (2m-1)*ihat - 1.  The audit degree is N when N is even, N - 1 otherwise;
    there the Morse count falls short of the Betti number.
    """
    rep = thm1_counting(delta, lam)
    N = rep.N
    Q = N if N % 2 == 0 else N - 1
    if q_max is None:
        q_max = Q
    sd = _sqrt_exact(delta)
    lam_v = Fraction(lam) if isinstance(lam, Rational) else float(lam)
    ihat = sd * (lam_v + 1) / (2 * lam_v) if isinstance(sd, Fraction) and isinstance(lam_v, Fraction) else float(sd) * (float(lam_v) + 1.0) / (2.0 * float(lam_v))
    entries = []
    m = 1
    while True:
        lower = (2 * m - 1) * ihat - 1
        q = _ceil_int(lower)
        if q % 2 == 1:
            q += 1
        if q > q_max:
            break
        entries.append(MorseEntry(index=q, nullity=0, k={q: 1}))
        m += 1
    data = MorseData(entries=tuple(entries), q_max=q_max)
    table = betti_table(2, q_max)
    check = morse_inequality_check(data, table)
    return {"data": data, "table": table, "check": check, "audit_degree": Q, "report": rep}


def _ceil_int(a) -> int:
    if isinstance(a, Rational):
        f = Fraction(a)
        return -((-f.numerator) // f.denominator)
    return math.ceil(a - 1e-12)


def standard_metric_index(m: int, n: int, p: int) -> int:
    """Quoted round-metric index of the m-th base-class iterate.

    On the p-sheeted quotient the iterates staying in the base free homotopy
    class are c^((m-1)p+1); this returns the displayed count p*(m-1)*(n-1)
    for that iterate.  Caution: the twisted Jacobi eigenvalue problem (and
    the discrete Hessian spectrum) give 2*(m-1)*(n-1) negative directions
    for every p, so the displayed count is only realized when p = 2.
    """
    if m < 1 or n < 2 or p < 2:
        raise PreconditionError("need m >= 1, n >= 2, p >= 2")
    return p * (m - 1) * (n - 1)


def index_sandwich_check(records, n: int | None = None) -> dict:
    """Check the critical-value sandwich i(c_k) <= 2k-2 <= i(c_k) + nu(c_k)
    on an energy-sorted list of geodesics.

    Each record may be a (index, nullity) pair or an object with index and
    nullity attributes.  When the ambient dimension n is given, fewer than n
    records raises the incomplete flag (not a failure).
    """
    results = []
    for k, rec in enumerate(records, start=1):
        if isinstance(rec, (tuple, list)):
            i, nu = int(rec[0]), int(rec[1])
        else:
            i, nu = int(rec.index), int(rec.nullity)
        ok = i <= 2 * k - 2 <= i + nu
        results.append({"k": k, "index": i, "nullity": nu, "pass": ok})
    complete = True if n is None else len(results) >= n
    return {
        "pass": all(r["pass"] for r in results),
        "complete": complete,
        "results": results,
    }


def thm3_count(n: int, p: int, lam, delta, rho) -> int:
    """Multiplicity lower bound on an odd-dimensional lens quotient.

    Requires n odd, rho > (lam/(lam+1))^2, and (lam/(lam+1))^2 <= delta <= 1.
    Returns n - floor((n-1)/(p*sqrt(rho)) + 1) + floor((n-1)*(lam+1)*sqrt(delta)/(2*lam*p) + 1).
    """
    if n % 2 == 0:
        raise DomainError("this count requires odd dimension")
    if p < 1:
        raise DomainError("deck order must be >= 1")
    lam_f = Fraction(lam) if isinstance(lam, Rational) else float(lam)
    if float(lam_f) < 1:
        raise DomainError("reversibility must satisfy lambda >= 1")
    thresh = (lam_f / (lam_f + 1)) ** 2
    if not float(rho) > float(thresh):
        raise DomainError("need rho > (lambda/(lambda+1))^2")
    if not float(thresh) <= float(delta) <= 1.0:
        raise DomainError("need (lambda/(lambda+1))^2 <= delta <= 1")
    s_rho = _sqrt_exact(rho)
    s_delta = _sqrt_exact(delta)
    if isinstance(s_rho, Fraction) and isinstance(s_delta, Fraction) and isinstance(lam_f, Fraction):
        a = Fraction(n - 1) / (p * s_rho) + 1
        b = Fraction(n - 1) * (lam_f + 1) * s_delta / (2 * lam_f * p) + 1
        return n - (a.numerator // a.denominator) + (b.numerator // b.denominator)
    a = (n - 1) / (p * float(s_rho)) + 1.0
    b = (n - 1) * (float(lam_f) + 1.0) * float(s_delta) / (2.0 * float(lam_f) * p) + 1.0
    return n - math.floor(a + 1e-12) + math.floor(b + 1e-12)
