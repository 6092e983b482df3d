import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lowdisc import discrepancy as disc

FAMILIES = disc.FAMILIES


def naive_squared(spec, pts):
    """Direct double-sum evaluation of the squared discrepancy (oracle)."""
    pts = np.asarray(pts, dtype=np.float64)
    n, d = pts.shape
    fam = disc.KERNELS[spec.family]
    gam = spec.weights

    def bprod(x):
        tot = 1.0
        for j in range(d):
            bj = float(fam.b(np.float64(x[j])))
            tot *= (1.0 + gam[j] * bj) if gam else bj
        return tot

    def kprod(x, y):
        tot = 1.0
        for j in range(d):
            kj = float(fam.k(np.float64(x[j]), np.float64(y[j])))
            tot *= (1.0 + gam[j] * kj) if gam else kj
        return tot

    c1 = fam.c
    c0 = math.prod(1.0 + g * c1 for g in gam) if gam else c1**d
    bsum = sum(bprod(x) for x in pts)
    pair = sum(kprod(x, y) for x in pts for y in pts)
    return c0 - 2.0 * bsum / n + pair / n**2


def naive_all_prefixes(spec, pts):
    return np.array(
        [math.sqrt(max(naive_squared(spec, pts[:p]), 0.0)) for p in range(1, len(pts) + 1)]
    )


def random_specs(rng, d, weighted=False):
    for family in FAMILIES:
        if weighted:
            yield disc.KernelSpec(family, tuple(rng.uniform(0.05, 3.0, d)))
        else:
            yield disc.KernelSpec(family)


class TestKernelComponents:
    @pytest.mark.parametrize("family", FAMILIES)
    def test_b_matches_quadrature(self, family):
        quad = pytest.importorskip("scipy.integrate").quad
        fam = disc.KERNELS[family]
        rng = np.random.default_rng(2024)
        for x in rng.uniform(0, 1, 100):
            ref, err = quad(
                lambda y: float(fam.k(np.float64(x), np.float64(y))),
                0.0,
                1.0,
                points=[x, 0.5],  # kinks at y = x and (ctr) y = 1/2
                epsabs=1e-13,
                epsrel=1e-13,
            )
            assert float(fam.b(np.float64(x))) == pytest.approx(ref, abs=1e-10)

    @pytest.mark.parametrize("family", FAMILIES)
    def test_c_matches_quadrature(self, family):
        # nested adaptive quadrature with the diagonal kink as a breakpoint
        quad = pytest.importorskip("scipy.integrate").quad
        fam = disc.KERNELS[family]

        def inner(x):
            val, _ = quad(
                lambda y: float(fam.k(np.float64(x), np.float64(y))),
                0.0,
                1.0,
                points=[x, 0.5],
                epsabs=1e-13,
                epsrel=1e-13,
            )
            return val

        ref, _ = quad(
            inner, 0.0, 1.0, points=[0.5], epsabs=1e-12, epsrel=1e-12, limit=200
        )
        assert fam.c == pytest.approx(ref, abs=1e-10)

    @pytest.mark.parametrize("family", FAMILIES)
    @given(x=st.floats(0, 1), y=st.floats(0, 1))
    @settings(max_examples=50, deadline=None)
    def test_symmetry(self, family, x, y):
        fam = disc.KERNELS[family]
        assert float(fam.k(np.float64(x), np.float64(y))) == pytest.approx(
            float(fam.k(np.float64(y), np.float64(x))), abs=1e-15
        )

    @pytest.mark.parametrize("family", FAMILIES)
    def test_kdiag_consistent(self, family):
        fam = disc.KERNELS[family]
        x = np.linspace(0, 1, 17)
        np.testing.assert_allclose(fam.kdiag(x), fam.k(x, x), atol=1e-15)


class TestKernelEval:
    def test_star_origin(self):
        assert disc.kernel_eval(disc.KernelSpec("star"), [0.0], [0.0]) == 1.0

    def test_sym_opposite_corners(self):
        assert disc.kernel_eval(disc.KernelSpec("sym"), [0.0], [1.0]) == -0.25

    def test_ctr_midpoint(self):
        spec = disc.KernelSpec("ctr")
        assert disc.kernel_eval(spec, [0.5, 0.5], [0.5, 0.5]) == 0.0

    def test_weighted_form(self):
        spec = disc.KernelSpec("star", weights=(2.0, 0.5))
        x, y = [0.25, 0.5], [0.75, 0.125]
        expected = (1 + 2.0 * (1 - 0.75)) * (1 + 0.5 * (1 - 0.5))
        assert disc.kernel_eval(spec, x, y) == pytest.approx(expected, rel=1e-15)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            disc.kernel_eval(disc.KernelSpec("star"), [0.1], [0.1, 0.2])
        with pytest.raises(ValueError, match="weights"):
            disc.discrepancy_single(
                disc.KernelSpec("star", weights=(1.0,)), np.zeros((3, 2))
            )

    def test_bad_family_and_weights(self):
        with pytest.raises(ValueError, match="family"):
            disc.KernelSpec("l-infinity")
        with pytest.raises(ValueError, match="positive"):
            disc.KernelSpec("star", weights=(1.0, -2.0))


class TestDiscrepancySingle:
    def test_star_single_point_at_zero(self):
        # c=1/3, b(0)=1/2, k(0,0)=1 -> 1/3 - 1 + 1 = 1/3
        val = disc.discrepancy_single(disc.KernelSpec("star"), [[0.0]])
        assert val == pytest.approx(math.sqrt(1.0 / 3.0), rel=1e-12)

    def test_star_single_point_at_half(self):
        val = disc.discrepancy_single(disc.KernelSpec("star"), [[0.5]])
        assert val == pytest.approx(math.sqrt(1.0 / 12.0), rel=1e-12)

    @pytest.mark.parametrize("family", FAMILIES)
    def test_matches_naive(self, family):
        rng = np.random.default_rng(5)
        for trial in range(3):
            n, d = int(rng.integers(1, 40)), int(rng.integers(1, 5))
            pts = rng.uniform(0, 1, (n, d))
            spec = disc.KernelSpec(family)
            ref = math.sqrt(max(naive_squared(spec, pts), 0.0))
            assert disc.discrepancy_single(spec, pts) == pytest.approx(ref, rel=1e-10)

    def test_weighted_matches_naive(self):
        rng = np.random.default_rng(6)
        pts = rng.uniform(0, 1, (24, 3))
        for spec in random_specs(rng, 3, weighted=True):
            ref = math.sqrt(max(naive_squared(spec, pts), 0.0))
            assert disc.discrepancy_single(spec, pts) == pytest.approx(ref, rel=1e-10)

    @pytest.mark.parametrize("family", FAMILIES)
    def test_permutation_invariant(self, family):
        rng = np.random.default_rng(7)
        pts = rng.uniform(0, 1, (30, 3))
        spec = disc.KernelSpec(family)
        base = disc.discrepancy_single(spec, pts)
        shuffled = pts[rng.permutation(30)]
        assert disc.discrepancy_single(spec, shuffled) == pytest.approx(base, rel=1e-12)

    @pytest.mark.parametrize("family", FAMILIES)
    def test_nonnegative(self, family):
        rng = np.random.default_rng(8)
        for _ in range(5):
            pts = rng.uniform(0, 1, (int(rng.integers(1, 50)), 2))
            assert disc.discrepancy_single(disc.KernelSpec(family), pts) >= 0.0


class TestAllPrefixes:
    @pytest.mark.parametrize("family", FAMILIES)
    def test_matches_naive(self, family):
        rng = np.random.default_rng(11)
        pts = rng.uniform(0, 1, (40, 3))
        spec = disc.KernelSpec(family)
        got = disc.discrepancy_all_prefixes(spec, pts)
        ref = naive_all_prefixes(spec, pts)
        np.testing.assert_allclose(got, ref, rtol=1e-10, atol=1e-14)

    def test_weighted_matches_naive(self):
        rng = np.random.default_rng(12)
        pts = rng.uniform(0, 1, (24, 2))
        spec = disc.KernelSpec("sym", weights=(1.5, 0.25))
        np.testing.assert_allclose(
            disc.discrepancy_all_prefixes(spec, pts),
            naive_all_prefixes(spec, pts),
            rtol=1e-10,
        )

    @pytest.mark.parametrize("family", FAMILIES)
    def test_last_entry_is_single(self, family):
        rng = np.random.default_rng(13)
        pts = rng.uniform(0, 1, (57, 4))
        spec = disc.KernelSpec(family)
        curve = disc.discrepancy_all_prefixes(spec, pts)
        assert curve[-1] == pytest.approx(
            disc.discrepancy_single(spec, pts), rel=1e-12
        )


class TestPrefixWeights:
    def test_uniform_single_prefix(self):
        w = disc.PrefixWeights("uniform").resolve(2)
        np.testing.assert_array_equal(w, [1.0])

    def test_uniform_formula(self):
        w = disc.PrefixWeights("uniform").resolve(10)
        np.testing.assert_allclose(w, np.full(9, 1.0 / 8.0))

    def test_length_proportional_sums_to_one(self):
        for n in (2, 3, 17, 100):
            w = disc.PrefixWeights("length-proportional").resolve(n)
            assert w.sum() == pytest.approx(1.0, rel=1e-12)
            p = np.arange(2, n + 1)
            np.testing.assert_allclose(w, 2.0 * p / (n**2 + n - 2))

    def test_final_prefix_emphasis(self):
        # 2N/(N^2+N-2) > 1/(N-2) exactly when N^2 - 5N + 2 > 0, i.e. N >= 5
        for n in (5, 10, 256):
            uni = disc.PrefixWeights("uniform").resolve(n)[-1]
            prop = disc.PrefixWeights("length-proportional").resolve(n)[-1]
            assert prop > uni
        assert (
            disc.PrefixWeights("length-proportional").resolve(4)[-1]
            < disc.PrefixWeights("uniform").resolve(4)[-1]
        )

    def test_custom_validation(self):
        with pytest.raises(ValueError, match="custom"):
            disc.PrefixWeights("uniform", values=(1.0,))
        with pytest.raises(ValueError, match="nonnegative"):
            disc.PrefixWeights("custom", values=(1.0, -1.0))
        with pytest.raises(ValueError, match="length"):
            disc.PrefixWeights("custom", values=(1.0,)).resolve(5)


class TestPrefixLoss:
    def naive_loss(self, spec, weights, pts):
        w = weights.resolve(len(pts))
        return sum(
            wp * naive_squared(spec, pts[:p])
            for p, wp in zip(range(2, len(pts) + 1), w)
        )

    def test_two_points_equals_squared(self):
        rng = np.random.default_rng(20)
        pts = rng.uniform(0, 1, (2, 3))
        spec = disc.KernelSpec("star")
        loss = disc.prefix_loss(spec, disc.PrefixWeights("uniform"), pts)
        assert loss == pytest.approx(naive_squared(spec, pts), rel=1e-12)

    @pytest.mark.parametrize("family", FAMILIES)
    @pytest.mark.parametrize("scheme", ["uniform", "length-proportional"])
    def test_matches_naive(self, family, scheme):
        rng = np.random.default_rng(21)
        pts = rng.uniform(0, 1, (30, 3))
        spec = disc.KernelSpec(family)
        weights = disc.PrefixWeights(scheme)
        assert disc.prefix_loss(spec, weights, pts) == pytest.approx(
            self.naive_loss(spec, weights, pts), rel=1e-10
        )

    def test_weighted_kernel_matches_naive(self):
        rng = np.random.default_rng(22)
        pts = rng.uniform(0, 1, (20, 4))
        spec = disc.KernelSpec("sym", weights=(0.9, 0.1, 2.0, 1.0))
        weights = disc.PrefixWeights("length-proportional")
        assert disc.prefix_loss(spec, weights, pts) == pytest.approx(
            self.naive_loss(spec, weights, pts), rel=1e-10
        )

    def test_custom_matches_naive(self):
        rng = np.random.default_rng(23)
        pts = rng.uniform(0, 1, (12, 2))
        weights = disc.PrefixWeights("custom", values=tuple(rng.uniform(0, 2, 11)))
        spec = disc.KernelSpec("ctr")
        assert disc.prefix_loss(spec, weights, pts) == pytest.approx(
            self.naive_loss(spec, weights, pts), rel=1e-10
        )

    def test_not_permutation_invariant(self):
        rng = np.random.default_rng(24)
        pts = rng.uniform(0, 1, (16, 2))
        spec = disc.KernelSpec("star")
        weights = disc.PrefixWeights("uniform")
        base = disc.prefix_loss(spec, weights, pts)
        flipped = disc.prefix_loss(spec, weights, pts[::-1].copy())
        assert abs(base - flipped) > 1e-9

    def test_needs_two_points(self):
        with pytest.raises(ValueError, match="2 points"):
            disc.prefix_loss(
                disc.KernelSpec("star"), disc.PrefixWeights("uniform"), [[0.5]]
            )


class TestPrefixLossGrad:
    def fdiff(self, spec, weights, pts, h=1e-6):
        grad = np.zeros_like(pts)
        for m in range(pts.shape[0]):
            for t in range(pts.shape[1]):
                hi = pts.copy()
                lo = pts.copy()
                hi[m, t] += h
                lo[m, t] -= h
                grad[m, t] = (
                    disc.prefix_loss(spec, weights, hi)
                    - disc.prefix_loss(spec, weights, lo)
                ) / (2 * h)
        return grad

    @pytest.mark.parametrize("family", FAMILIES)
    @pytest.mark.parametrize("scheme", ["uniform", "length-proportional"])
    def test_matches_finite_differences(self, family, scheme):
        rng = np.random.default_rng(31)
        spec = disc.KernelSpec(family)
        weights = disc.PrefixWeights(scheme)
        pts = rng.uniform(0.02, 0.98, (16, 3))
        got = disc.prefix_loss_grad(spec, weights, pts)
        ref = self.fdiff(spec, weights, pts)
        np.testing.assert_allclose(got, ref, rtol=1e-5, atol=1e-10)

    def test_weighted_matches_finite_differences(self):
        rng = np.random.default_rng(32)
        spec = disc.KernelSpec("star", weights=(2.0, 0.3, 1.1))
        weights = disc.PrefixWeights("length-proportional")
        pts = rng.uniform(0.02, 0.98, (12, 3))
        np.testing.assert_allclose(
            disc.prefix_loss_grad(spec, weights, pts),
            self.fdiff(spec, weights, pts),
            rtol=1e-5,
            atol=1e-10,
        )

    def test_ctr_gradient_antisymmetric(self):
        # a configuration symmetric about 0.5 maps to itself under x -> 1-x,
        # and the ctr kernel is invariant, so the gradient flips sign
        pts = np.array([[0.2], [0.8], [0.35], [0.65]])
        spec = disc.KernelSpec("ctr")
        weights = disc.PrefixWeights("uniform")
        g = disc.prefix_loss_grad(spec, weights, pts)
        g_ref = disc.prefix_loss_grad(spec, weights, 1.0 - pts)
        np.testing.assert_allclose(g, -g_ref, atol=1e-12)

    def test_duplicate_points_finite(self):
        pts = np.array([[0.3, 0.7], [0.3, 0.7], [0.6, 0.1]])
        g = disc.prefix_loss_grad(
            disc.KernelSpec("sym"), disc.PrefixWeights("uniform"), pts
        )
        assert np.isfinite(g).all()

    def test_descent_direction(self):
        # a small step against the gradient must not increase the loss
        rng = np.random.default_rng(33)
        spec = disc.KernelSpec("star")
        weights = disc.PrefixWeights("uniform")
        for _ in range(20):
            pts = rng.uniform(0.05, 0.95, (10, 2))
            loss = disc.prefix_loss(spec, weights, pts)
            g = disc.prefix_loss_grad(spec, weights, pts)
            stepped = pts - 1e-7 * g
            assert disc.prefix_loss(spec, weights, stepped) <= loss + 1e-14


class TestWeightedArgminInvariance:
    def test_equal_weights_scale_objective_d1(self):
        # in d=1 the weighted squared discrepancy is exactly gamma times the
        # unweighted one, so argmin configurations coincide
        grid = np.linspace(0.01, 0.99, 41)
        plain = disc.KernelSpec("star")
        weighted = disc.KernelSpec("star", weights=(2.5,))
        vals_plain = np.empty((41, 41))
        vals_weighted = np.empty((41, 41))
        for a, x1 in enumerate(grid):
            for b, x2 in enumerate(grid):
                pts = np.array([[x1], [x2]])
                vals_plain[a, b] = disc.discrepancy_single(plain, pts) ** 2
                vals_weighted[a, b] = disc.discrepancy_single(weighted, pts) ** 2
        np.testing.assert_allclose(vals_weighted, 2.5 * vals_plain, rtol=1e-10, atol=1e-14)
        assert np.argmin(vals_plain) == np.argmin(vals_weighted)


class TestNumericalGuards:
    def test_radicand_clamp(self):
        # tiny negative radicands are clamped to zero rather than erroring
        assert disc._sqrt_clamped(np.array([-1e-13])) == 0.0

    def test_radicand_error(self):
        with pytest.raises(disc.NumericalError):
            disc._sqrt_clamped(np.array([-1e-9]))
