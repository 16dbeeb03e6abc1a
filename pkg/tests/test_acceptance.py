"""End-to-end acceptance gate.

Each test covers one acceptance criterion and prints a single PASS line on
success (pytest shows the FAIL line otherwise):

  1. exact Betti numbers, closed form vs series, n in 2..10, q <= 200, < 1 s
  2. round-metric class-[h] minimizers of length 2*pi/p on four space forms
  3. numerical Morse index of in-class round iterates equals p(m-1)(n-1)
  4. index-iteration identities and growth bounds on 1000 random normal forms
  5. counting arithmetic plus the mechanized single-geodesic contradiction
  6. two distinct simple geodesics of the rotated Randers metric on RP^2
  7. symplectic/spectral properties of every emitted return map
  8. exact multiplicity count reproduces the floor-arithmetic examples
"""

import math
import time
from fractions import Fraction as F

import numpy as np
import pytest

from spaceforms import (
    MetricSpec,
    NormalForm,
    SpaceFormSpec,
    betti,
    find_geodesics,
    index_iterate,
    iterate_loop,
    mean_index,
    nullity_iterate,
    numerical_morse_index,
    poincare_map,
    poincare_map_from_initial,
    poincare_series_coeffs,
    reversibility,
    spectral_summary,
    standard_metric_index,
    thm1_contradiction_data,
    thm1_counting,
    thm3_count,
)
from spaceforms.errors import PreconditionError
from spaceforms.indexcalc import growth_constant, index_iterate_batch
from spaceforms.loops import resample_loop

from test_index_calculus import random_normal_form

KATOK_ALPHA = 0.1


def space_form(n: int, p: int) -> SpaceFormSpec:
    if p == 2 and n % 2 == 0:
        return SpaceFormSpec.projective(n)
    return SpaceFormSpec.lens(n, p)


@pytest.fixture(scope="module")
def katok_records():
    m = MetricSpec("randers", 2, KATOK_ALPHA)
    sf = SpaceFormSpec.projective(2)
    t0 = time.time()
    records = find_geodesics(m, sf, 1, N=256, seeds=40, rng_seed=0)
    return m, sf, records, time.time() - t0


def test_criterion_1_betti_exactness():
    t0 = time.time()
    for n in range(2, 11):
        series = poincare_series_coeffs(n, 200)
        for q in range(201):
            assert betti(n, q) == series[q], (n, q)
    elapsed = time.time() - t0
    assert elapsed < 1.0, f"betti sweep took {elapsed:.2f}s"
    print(f"\nPASS criterion 1: betti closed form == series for n=2..10, "
          f"q<=200 in {elapsed:.2f}s")


def test_criterion_2_round_metric_lengths():
    timings = []
    for n, p in [(2, 2), (3, 2), (3, 3), (3, 5)]:
        sf = space_form(n, p)
        m = MetricSpec("round", n, 0.0)
        t0 = time.time()
        recs = find_geodesics(m, sf, 1, N=256, seeds=3, rng_seed=0)
        elapsed = time.time() - t0
        assert elapsed < 60.0, f"(n={n},p={p}) took {elapsed:.1f}s"
        assert len(recs) == 1, f"(n={n},p={p}) found {len(recs)} classes"
        assert abs(recs[0].length - 2 * math.pi / p) < 1e-6
        timings.append(f"({n},{p}) {elapsed:.0f}s")
    print(f"\nPASS criterion 2: lengths 2*pi/p within 1e-6 at N=256 "
          f"[{', '.join(timings)}]")


def _iterate_index(metric, base, exponent):
    loop = iterate_loop(base, exponent) if exponent > 1 else base
    coarse = numerical_morse_index(metric, loop)["index"]
    fine = numerical_morse_index(metric, resample_loop(loop, (3 * loop.N) // 2))["index"]
    assert coarse == fine, ("refinement instability", exponent)
    return coarse


def test_criterion_3_round_metric_iterate_indices():
    # no fixed-point-free Z_3 acts on an even sphere, so (p,n)=(3,2) has no
    # space form; the constructor rejects it
    with pytest.raises(PreconditionError):
        space_form(2, 3)
    for p, n in [(2, 2), (2, 3), (3, 3)]:
        sf = space_form(n, p)
        metric = MetricSpec("round", n, 0.0)
        base = find_geodesics(metric, sf, 1, N=64, seeds=3, rng_seed=0)[0].loop
        for m in (1, 2, 3):
            # independent oracle: the twisted Jacobi eigenvalue problem
            # -J'' - J = mu J over length 2*pi*(p(m-1)+1)/p with rotation
            # holonomy 2*pi/p has exactly 2(m-1)(n-1) negative directions
            expected = 2 * (m - 1) * (n - 1)
            if p == 2:
                assert expected == standard_metric_index(m, n, p)
            got = _iterate_index(metric, base, p * (m - 1) + 1)
            assert got == expected, (p, n, m, got, expected)
    print("\nPASS criterion 3 (amended): numerical index of c^{p(m-1)+1} "
          "equals the twisted-Jacobi-field count 2(m-1)(n-1) on (p,n) in "
          "{(2,2),(2,3),(3,3)}, m in {1,2,3}, refinement-stable; this equals "
          "the quoted p(m-1)(n-1) exactly when p=2 [(3,2) excluded: no free "
          "Z_3 action on S^2 exists]")


@pytest.mark.xfail(strict=True, reason=(
    "the quoted in-class iterate index p(m-1)(n-1) is not attained for p=3: "
    "both the discrete Hessian spectrum and the exact twisted Jacobi-field "
    "count give 2(m-1)(n-1) negative directions regardless of p (the two "
    "expressions agree only at p=2); see the decision ledger"
))
def test_criterion_3_lens33_quoted_index_value():
    sf = space_form(3, 3)
    metric = MetricSpec("round", 3, 0.0)
    base = find_geodesics(metric, sf, 1, N=64, seeds=3, rng_seed=0)[0].loop
    got = _iterate_index(metric, base, 4)  # p=3, m=2
    assert got == standard_metric_index(2, 3, 3)  # quoted value 6; measured 4


def test_criterion_4_index_iteration_suite():
    rng = np.random.default_rng(2024)
    M_MAX = 10_000
    for trial in range(1000):
        nf = random_normal_form(rng, rational=True)
        # m = 1 reproduces the prime index and nullity
        assert index_iterate(nf, 1) == nf.i1
        assert nullity_iterate(nf, 1) == nf.nu1
        ihat = mean_index(nf)
        C = growth_constant(nf)
        I = index_iterate_batch(nf, M_MAX)
        # linear growth: |i(c^m) - m*ihat| <= C uniformly (exact rationals)
        num, den = ihat.numerator, ihat.denominator
        m = np.arange(1, M_MAX + 1, dtype=np.int64)
        dev_num = np.abs(I.astype(object) * den - m.astype(object) * num)
        assert int(max(dev_num)) <= C * den, trial
        # parity: odd iterates keep the prime parity on even-dimensional spheres
        if nf.n % 2 == 0:
            assert np.all((I[::2] - nf.i1) % 2 == 0), trial
        # rational/float agreement on a subsample
        nf_float = NormalForm(
            n=nf.n, i1=nf.i1, nu1=nf.nu1,
            p_minus=nf.p_minus, p_zero=nf.p_zero, p_plus=nf.p_plus,
            q_minus=nf.q_minus, q_zero=nf.q_zero, q_plus=nf.q_plus,
            thetas=tuple(float(a) for a in nf.thetas), r_prime=nf.r_prime,
            alphas=tuple(float(a) for a in nf.alphas), h_count=nf.h_count,
        )
        assert np.array_equal(index_iterate_batch(nf_float, 64), I[:64]), trial
    print("\nPASS criterion 4: m=1 identity, |i(c^m) - m*ihat| <= C up to "
          "m=10^4, odd-iterate parity, rational/float agreement on 1000 "
          "random normal forms")


def test_criterion_5_counting_engine():
    t0 = time.time()
    rep = thm1_counting(F(9, 16), 1)
    assert rep.N == 3
    assert rep.bound_c2 == pytest.approx(4 * math.pi, abs=1e-15)
    rep2 = thm1_counting(1, 1)
    assert rep2.N == 2
    assert rep2.bound_c2 == pytest.approx(3 * math.pi, abs=1e-15)
    # a single geodesic cannot carry the equivariant homology: the Morse
    # inequality must fail somewhere at or below the audit degree, at every
    # admissible (delta, lambda) on a 50x50 grid
    failures = 0
    for lam in np.linspace(1.0, 3.0, 50):
        lo = (lam / (lam + 1.0)) ** 2
        for delta in np.linspace(lo + 0.05 * (1.0 - lo), 1.0, 50):
            out = thm1_contradiction_data(delta, lam)
            assert not out["check"]["pass"], (delta, lam)
            assert out["check"]["first_violation_degree"] <= out["audit_degree"]
            failures += 1
    elapsed = time.time() - t0
    assert failures == 2500
    assert elapsed < 10.0, f"counting sweep took {elapsed:.2f}s"
    print(f"\nPASS criterion 5: N=3/4pi and N=2/3pi exact, contradiction "
          f"fires on all 2500 grid points in {elapsed:.2f}s")


def test_criterion_6_katok_two_geodesics(katok_records):
    m, _sf, records, elapsed = katok_records
    assert elapsed < 300.0, f"40-seed search took {elapsed:.0f}s"
    assert len(records) == 2, f"found {len(records)} distinct geodesics"
    lengths = sorted(r.length for r in records)
    expect = [math.pi / (1 + KATOK_ALPHA), math.pi / (1 - KATOK_ALPHA)]
    assert abs(lengths[0] - expect[0]) < 1e-4
    assert abs(lengths[1] - expect[1]) < 1e-4
    assert all(r.simple for r in records)
    # Theorem 1 length bounds with measured reversibility and certified
    # curvature pinch (the rotated metric has constant flag curvature 1)
    lam = reversibility(m)
    assert lam == pytest.approx(m.reversibility_exact, abs=1e-6)
    rep = thm1_counting(1, lam)
    assert lengths[0] <= rep.bound_c1 + 1e-9
    assert lengths[1] <= rep.bound_c2 + 1e-9
    print(f"\nPASS criterion 6: exactly two simple geodesics, lengths "
          f"{lengths[0]:.6f}/{lengths[1]:.6f} vs pi/(1+a), pi/(1-a), both "
          f"within the counting bounds, in {elapsed:.0f}s")


def test_criterion_7_poincare_map_properties(katok_records):
    m, _sf, records, _ = katok_records
    maps = [poincare_map(m, rec) for rec in records]
    # round great circle: the return map is the identity
    sphere = SpaceFormSpec.sphere(2)
    round2 = MetricSpec("round", 2, 0.0)
    pm = poincare_map_from_initial(round2, sphere, np.array([1.0, 0.0, 0.0]),
                                   np.array([0.0, 1.0, 0.0]), class_power=0,
                                   period_hint=2 * math.pi)
    assert np.max(np.abs(pm.matrix - np.eye(2))) < 1e-6
    maps.append(pm)
    for p in maps:
        assert p.symplectic_defect <= 1e-6
        ev = np.sort_complex(p.eigenvalues)
        assert np.max(np.abs(ev - np.sort_complex(1.0 / p.eigenvalues))) < 1e-5
        assert np.max(np.abs(ev - np.sort_complex(np.conj(p.eigenvalues)))) < 1e-5
        s = spectral_summary(p)
        assert s.e == len(p.eigenvalues)  # all tested orbits are elliptic
    print("\nPASS criterion 7: symplectic defect <= 1e-6 and reciprocal/"
          "conjugate spectral symmetry <= 1e-5 on all emitted maps; round "
          "great-circle map is the identity within 1e-6")


def test_criterion_8_multiplicity_count_examples():
    assert thm3_count(5, 2, 1, 1, 1) == 5
    assert thm3_count(5, 2, 1, 1, F(1, 2)) == 5
    assert thm3_count(3, 2, 2, F(9, 16), 1) == 2
    print("\nPASS criterion 8: exact floor arithmetic reproduces the three "
          "multiplicity-count examples including the symmetric cancellation "
          "value n")
