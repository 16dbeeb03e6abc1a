"""Equivariant Betti tables, Morse inequalities, and counting arithmetic."""

import math
import time
from fractions import Fraction as F

import numpy as np
import pytest

from spaceforms import (
    CountingReport,
    MorseData,
    MorseEntry,
    betti,
    betti_table,
    index_sandwich_check,
    morse_inequality_check,
    poincare_series_coeffs,
    standard_metric_index,
    thm1_contradiction_data,
    thm1_counting,
    thm3_count,
)
from spaceforms.errors import DomainError, PreconditionError


class TestBetti:
    def test_projective_plane_values(self):
        assert betti(2, 0) == 1
        assert betti(2, 2) == 2
        assert betti(2, 4) == 2
        assert betti(2, 3) == 0

    def test_odd_dimension_values(self):
        assert [betti(5, q) for q in range(9)] == [1, 0, 1, 0, 2, 0, 1, 0, 2]

    def test_even_dimension_values(self):
        assert betti(4, 6) == 2
        assert betti(4, 4) == 1
        assert betti(4, 12) == 2

    def test_series_odd_case(self):
        assert poincare_series_coeffs(3, 6) == [1, 0, 2, 0, 2, 0, 2]

    def test_series_even_case(self):
        assert poincare_series_coeffs(2, 4) == [1, 0, 2, 0, 2]

    def test_constant_term_is_one(self):
        for n in range(2, 11):
            assert poincare_series_coeffs(n, 0)[0] == 1

    def test_closed_form_matches_series_everywhere(self):
        t0 = time.time()
        for n in range(2, 11):
            coeffs = poincare_series_coeffs(n, 200)
            for q in range(201):
                assert betti(n, q) == coeffs[q], (n, q)
                assert q % 2 == 0 or betti(n, q) == 0
        assert time.time() - t0 < 1.0

    def test_betti_table_partial_sums(self):
        bt = betti_table(2, 6)
        assert bt.values == (1, 0, 2, 0, 2, 0, 2)
        assert bt.partial_sums[-1] == 7


class TestMorseInequality:
    def test_rich_data_passes(self):
        bt = betti_table(2, 4)
        entries = [
            MorseEntry(index=0, nullity=0, k={0: 1}),
            MorseEntry(index=2, nullity=0, k={2: 2}),
            MorseEntry(index=4, nullity=0, k={4: 2}),
        ]
        out = morse_inequality_check(MorseData(entries=entries, q_max=4), bt)
        assert out["pass"]
        assert out["first_violation_degree"] is None

    def test_starved_data_fails(self):
        bt = betti_table(2, 4)
        entries = [MorseEntry(index=0, nullity=0, k={0: 1})]
        out = morse_inequality_check(MorseData(entries=entries, q_max=4), bt)
        assert not out["pass"]
        assert out["first_violation_degree"] == 2

    def test_support_validation(self):
        with pytest.raises(PreconditionError):
            MorseEntry(index=3, nullity=0, k={5: 1})  # outside [i, i+nu]


class TestCounting:
    def test_rational_branch_example(self):
        rep = thm1_counting(F(9, 16), 1)
        assert rep.N == 3
        assert rep.x == 2
        assert rep.branch == "odd"
        assert rep.bound_c2 == pytest.approx(4 * math.pi, abs=1e-15)
        assert rep.bound_c1 == pytest.approx(math.pi / math.sqrt(9 / 16), abs=1e-15)

    def test_round_pinch_example(self):
        rep = thm1_counting(1, 1)
        assert rep.N == 2
        assert rep.branch == "even"
        assert rep.bound_c2 == pytest.approx(3 * math.pi, abs=1e-15)

    def test_json_keys(self):
        d = thm1_counting(1, 1).to_json_dict()
        assert set(d) == {"N", "bound_c1", "bound_c2", "branch"}

    def test_hypothesis_gates(self):
        with pytest.raises(DomainError):
            thm1_counting(F(9, 16), 0.5)  # lambda < 1
        with pytest.raises(DomainError):
            thm1_counting(2, 1)  # delta > 1
        with pytest.raises(DomainError):
            thm1_counting(F(1, 4), 1)  # delta at the excluded pinch corner

    def test_branch_bound_below_closed_form_on_grid(self):
        for lam in np.linspace(1.0, 3.0, 50):
            lo = (lam / (lam + 1.0)) ** 2
            for delta in np.linspace(lo + 1e-6, 1.0, 50):
                rep = thm1_counting(delta, lam)
                assert rep.bound_c2 <= rep.closed_form + 1e-12

    def test_contradiction_data_fails_at_audit_degree(self):
        out = thm1_contradiction_data(F(9, 16), 1)
        assert not out["check"]["pass"]
        assert out["check"]["first_violation_degree"] <= out["audit_degree"]


class TestStandardMetricFacts:
    def test_in_class_iterate_index(self):
        # the iterate c^{p(m-1)+1} of a round minimizer has index p(m-1)(n-1)
        assert standard_metric_index(1, 2, 2) == 0
        assert standard_metric_index(2, 2, 2) == 2
        assert standard_metric_index(3, 3, 3) == 12

    def test_index_sandwich_examples(self):
        out = index_sandwich_check([(0, 0)])
        assert out["pass"]
        out = index_sandwich_check([(0, 0), (3, 0)])
        assert not out["pass"]
        assert out["results"][1]["pass"] is False
        out = index_sandwich_check([(0, 0), (1, 2)])
        assert out["pass"]

    def test_sandwich_incompleteness_flag(self):
        out = index_sandwich_check([(0, 0)], n=3)
        assert out["pass"]
        assert not out["complete"]


class TestThm3Count:
    def test_symmetric_cancellation(self):
        assert thm3_count(5, 2, 1, 1, 1) == 5

    def test_floor_asymmetry(self):
        assert thm3_count(5, 2, 1, 1, F(1, 2)) == 5

    def test_mixed_example(self):
        assert thm3_count(3, 2, 2, F(9, 16), 1) == 2

    def test_hypothesis_gates(self):
        with pytest.raises(DomainError):
            thm3_count(4, 2, 1, 1, 1)  # n must be odd
        with pytest.raises(DomainError):
            thm3_count(3, 2, 1, F(1, 8), 1)  # delta below pinch
        with pytest.raises(DomainError):
            thm3_count(3, 2, 1, 1, F(1, 8))  # rho below pinch
