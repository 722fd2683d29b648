import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rkhs_dpp import (
    KernelMatrix,
    SiteRule,
    Toeplitz,
    TriplePartition,
    alpha_beta_limit_check,
    alpha_trace,
    beta_trace,
    conjugated_power_diagonal,
    doubling_schedule,
    finite_a,
    finite_b,
    identity,
    materialize,
    power_diagonal,
    symmetric,
    verify_ab,
)
from rkhs_dpp.errors import OverlappingSets, SiteNotInWindow
from rkhs_dpp.oracle import oracle_minimize
from rkhs_dpp.variational import (
    a2_support_residual,
    a_by_determinants,
    a_by_inverse_entry,
    a_by_schur,
    b_forms,
    objective,
)

from conftest import random_kernel, random_partition
from frozen_values import CONJ_ALPHA

TWO = KernelMatrix((0, 1), [[2.0, 1.0], [1.0, 2.0]])


class TestFiniteA:
    def test_two_by_two(self):
        res = finite_a(TWO, 0, (1,))
        assert res.value == pytest.approx(1.5, rel=1e-15)
        np.testing.assert_allclose(res.minimizer, [0.5], rtol=1e-15)

    def test_identity(self):
        res = finite_a(materialize(identity(), range(4)), 2, (0, 3))
        assert res.value == 1.0
        np.testing.assert_array_equal(res.minimizer, [0.0, 0.0])

    def test_empty_set(self, tri):
        res = finite_a(tri, 1, ())
        assert res.value == 2.0 and res.minimizer.size == 0

    def test_errors(self, tri):
        with pytest.raises(OverlappingSets):
            finite_a(tri, 1, (1, 2))
        with pytest.raises(SiteNotInWindow):
            finite_a(tri, 1, (7,))

    def test_objective_at_minimizer(self, rng):
        c = random_kernel(rng, 7)
        res = finite_a(c, 3, (0, 1, 5))
        sub = c.block((3, 0, 1, 5), (3, 0, 1, 5))
        assert objective(sub, res.minimizer) == pytest.approx(res.value, rel=1e-10)


class TestFiniteB:
    def test_two_by_two_empty(self):
        assert finite_b(TWO, 0, ()).value == pytest.approx(2 / 3, rel=1e-15)

    def test_tridiagonal(self, tri):
        assert finite_b(tri, 1, (2,)).value == pytest.approx(2 / 3, rel=1e-14)

    def test_identity(self):
        assert finite_b(materialize(identity(), range(3)), 0, (1, 2)).value == pytest.approx(1.0, rel=1e-15)


class TestVerifyAB:
    def test_tridiagonal(self, tri):
        assert verify_ab(tri, TriplePartition(1, (0,), (2,))) < 1e-15

    def test_identity(self):
        c = materialize(identity(), range(5))
        assert verify_ab(c, TriplePartition(2, (0, 4), (1, 3))) < 1e-15

    def test_partition_must_cover(self, tri):
        with pytest.raises(SiteNotInWindow):
            verify_ab(tri, TriplePartition(1, (0,), ()))

    def test_partition_disjoint(self):
        with pytest.raises(OverlappingSets):
            TriplePartition(1, (0, 2), (2,))

    def test_seeded_8x8(self):
        rng = np.random.default_rng(8)
        c = random_kernel(rng, 8)
        x0, r1, r2 = random_partition(rng, c.window)
        assert verify_ab(c, TriplePartition(x0, r1, r2)) <= 1e-10


@settings(max_examples=100, deadline=None)
@given(n=st.integers(2, 12), seed=st.integers(0, 2**32 - 1))
def test_ab_equals_one(n, seed):
    rng = np.random.default_rng(seed)
    c = random_kernel(rng, n)
    x0, r1, r2 = random_partition(rng, c.window)
    assert verify_ab(c, TriplePartition(x0, r1, r2)) <= 1e-10


@settings(max_examples=100, deadline=None)
@given(n=st.integers(2, 12), seed=st.integers(0, 2**32 - 1))
def test_three_forms_agree(n, seed):
    rng = np.random.default_rng(seed)
    c = random_kernel(rng, n)
    x0, r1, r2 = random_partition(rng, c.window)
    forms_a = [a_by_determinants(c, x0, r1), a_by_inverse_entry(c, x0, r1), a_by_schur(c, x0, r1)]
    np.testing.assert_allclose(forms_a, finite_a(c, x0, r1).value, rtol=1e-10)
    np.testing.assert_allclose(b_forms(c, x0, r2), finite_b(c, x0, r2).value, rtol=1e-10)


@settings(max_examples=100, deadline=None)
@given(n=st.integers(2, 12), seed=st.integers(0, 2**32 - 1))
def test_matches_normal_equations(n, seed):
    rng = np.random.default_rng(seed)
    c = random_kernel(rng, n)
    x0, r1, _ = random_partition(rng, c.window)
    got, ref = finite_a(c, x0, r1), oracle_minimize(c, x0, r1)
    assert got.value == pytest.approx(ref.value, rel=1e-10)
    np.testing.assert_allclose(got.minimizer, ref.minimizer, rtol=1e-8, atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(3, 9), seed=st.integers(0, 2**32 - 1))
def test_minimizer_is_first_order_optimal(n, seed):
    rng = np.random.default_rng(seed)
    c = random_kernel(rng, n)
    x0, r1, _ = random_partition(rng, c.window)
    if not r1:
        return
    res = finite_a(c, x0, r1)
    sub = c.block((x0, *res.sites), (x0, *res.sites))
    for i in range(len(r1)):
        for h in (1e-4, -1e-4):
            f = res.minimizer.copy()
            f[i] += h
            assert objective(sub, f) >= res.value - 1e-12 * res.value


class TestTraces:
    sched = doubling_schedule(1, 16)

    def test_alpha_diagonal_constant(self):
        tr = alpha_trace(power_diagonal(2), 1, SiteRule("even"), self.sched)
        np.testing.assert_array_equal(tr.values, 0.25)

    def test_identity_constant(self):
        assert set(alpha_trace(identity(), 0, SiteRule("odd"), self.sched).values) == {1.0}
        np.testing.assert_allclose(beta_trace(identity(), 0, SiteRule("odd"), self.sched).values, 1.0, rtol=1e-15)

    def test_beta_diagonal_constant(self):
        tr = beta_trace(power_diagonal(2), 2, SiteRule("odd"), self.sched)
        np.testing.assert_allclose(tr.values, 9.0, rtol=1e-14)

    def test_alpha_vanishing_symbol_closed_form(self):
        """Minimizing over all other sites of {-n..n} gives 2 / (n + 1)."""
        sched = doubling_schedule(0, 8)
        rule = SiteRule("not", inner=SiteRule("sites", sites=(0,)))
        tr = alpha_trace(Toeplitz((2, 1)), 0, rule, sched)
        ns = np.array([w[-1] for w in sched])
        np.testing.assert_allclose(tr.values, 2.0 / (ns + 1), rtol=1e-13)
        assert np.all(np.diff(tr.values) < 0)
        for w, v in zip(sched, tr.values):
            c = materialize(Toeplitz((2, 1)), w)
            assert v == pytest.approx(oracle_minimize(c, 0, rule.select(w)).value, rel=1e-12)

    def test_alpha_conjugated_frozen(self):
        tr = alpha_trace(conjugated_power_diagonal(), 0, SiteRule("odd"), doubling_schedule(1, 8))
        np.testing.assert_allclose(tr.values, [CONJ_ALPHA[n] for n in (1, 2, 4, 8)], rtol=1e-12)
        assert tr.is_monotone()

    def test_beta_matched_ambient_is_reciprocal(self):
        spec = conjugated_power_diagonal(band=16)
        w = symmetric(5)
        b = beta_trace(spec, 0, SiteRule("all"), [w], ambient_factor=1).final
        a = finite_a(materialize(spec, w), 0, ()).value
        assert a * b == pytest.approx(1.0, rel=1e-12)

    def test_beta_fixed_ambient_decreases(self):
        tr = beta_trace(Toeplitz((2, 1)), 0, SiteRule("even"), doubling_schedule(1, 8), 4, fixed_ambient=True)
        assert tr.monotone_dir == "decreasing"
        assert tr.is_monotone(rtol=1e-12)

    def test_limit_check_diagonal_exact(self):
        chk = alpha_beta_limit_check(power_diagonal(2), 0, SiteRule("odd"), self.sched)
        assert chk.residual <= 1e-15

    def test_limit_check_conjugated(self):
        chk = alpha_beta_limit_check(conjugated_power_diagonal(), 0, SiteRule("odd"), doubling_schedule(8, 64), 4)
        assert chk.residual <= 1e-3
        assert chk.alpha.is_monotone()

    def test_a2_residual_is_small_for_decaying_family(self):
        r = a2_support_residual(conjugated_power_diagonal(), 0, SiteRule("odd"), symmetric(16))
        assert 0 <= r < 1e-6
        assert a2_support_residual(power_diagonal(2), 0, SiteRule("odd"), symmetric(4)) == 0.0
