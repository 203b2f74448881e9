"""
概率距离服务模块测试
"""

import math

import numpy as np
import pytest
from scipy import integrate, special, stats

from cutofflab.models.laws import EmpiricalLaw, GaussianLaw, StableLawDescriptor
from cutofflab.models.scenario import MetricKind
from cutofflab.services import metrics
from cutofflab.utils.errors import (
    GridMismatch,
    MomentViolation,
    NotNormalized,
    NyquistViolation,
    SingularLimitLaw,
    TooLargeForExact,
    UnequalCounts,
    UnsupportedCase,
)

TV_ONE_SIGMA = 0.3829249225480262
TV_HALF_VARIANCE = 0.5204998778130465
STABLE_MEAN_ABS = 2.0 * special.gamma(1.0 / 3.0) / math.pi


class TestTotalVariation:
    """全变差测试"""

    def test_equal_variance_shift(self):
        """测试 N(1,1) 与 N(0,1)：erf(1/(2√2))"""
        tv = metrics.tv_gaussian(GaussianLaw.univariate(1.0, 1.0), GaussianLaw.univariate(0.0, 1.0))
        assert tv == pytest.approx(special.erf(1.0 / (2.0 * math.sqrt(2.0))), abs=1e-14)
        assert tv == pytest.approx(TV_ONE_SIGMA, abs=1e-12)

    def test_unequal_variance_against_quadrature(self):
        """测试 N(0,1) 与 N(0,4)：与数值积分比较"""
        crossing = math.sqrt(8.0 * math.log(2.0) / 3.0)
        oracle, _ = integrate.quad(
            lambda x: abs(stats.norm.pdf(x) - stats.norm.pdf(x, scale=2.0)),
            -40.0, 40.0, points=[-crossing, crossing], limit=200,
        )
        tv = metrics.tv_gaussian(GaussianLaw.univariate(0.0, 1.0), GaussianLaw.univariate(0.0, 4.0))
        assert tv == pytest.approx(0.5 * oracle, abs=1e-9)

    def test_unequal_variance_with_shift(self):
        """测试均值与方差均不同的情形与数值积分一致"""
        oracle, _ = integrate.quad(
            lambda x: abs(stats.norm.pdf(x, 0.7, 0.5) - stats.norm.pdf(x)), -30.0, 30.0, limit=400,
        )
        tv = metrics.tv_gaussian(GaussianLaw.univariate(0.7, 0.25), GaussianLaw.univariate(0.0, 1.0))
        assert tv == pytest.approx(0.5 * oracle, abs=1e-7)

    def test_multivariate_equal_covariance(self):
        """测试多元等协方差：马氏距离公式"""
        cov = np.array([[2.0, 0.5], [0.5, 1.0]])
        g1 = GaussianLaw(np.array([1.0, -1.0]), cov)
        g2 = GaussianLaw(np.zeros(2), cov)
        delta = metrics.mahalanobis(cov, np.array([1.0, -1.0]))
        assert metrics.tv_gaussian(g1, g2) == pytest.approx(special.erf(delta / (2.0 * math.sqrt(2.0))))

    def test_multivariate_unequal_covariance(self):
        """测试多元不等协方差不支持"""
        g1 = GaussianLaw(np.zeros(2), np.eye(2))
        g2 = GaussianLaw(np.zeros(2), np.diag([1.0, 4.0]))
        with pytest.raises(UnsupportedCase):
            metrics.tv_gaussian(g1, g2)

    def test_identical_laws(self):
        """测试相同分布距离为 0"""
        g = GaussianLaw.univariate(0.3, 2.0)
        assert metrics.tv_gaussian(g, g) == 0.0

    def test_pinsker_dominates(self):
        """测试 Pinsker 上界不小于 TV"""
        rng = np.random.default_rng(3)
        for _ in range(50):
            g1 = GaussianLaw.univariate(rng.normal(), rng.uniform(0.2, 3.0))
            g2 = GaussianLaw.univariate(rng.normal(), rng.uniform(0.2, 3.0))
            assert metrics.tv_gaussian(g1, g2) <= metrics.tv_pinsker_bound(g1, g2) + 1e-12

    def test_kl_shift(self):
        """测试 KL(N(0,1) ‖ N(1,1)) = 1/2"""
        kl = metrics.kl_gaussian(GaussianLaw.univariate(0.0, 1.0), GaussianLaw.univariate(1.0, 1.0))
        assert kl == pytest.approx(0.5)

    def test_kl_singular_reference(self):
        """测试参考分布奇异"""
        with pytest.raises(SingularLimitLaw):
            metrics.kl_gaussian(GaussianLaw.univariate(0.0, 1.0), GaussianLaw.univariate(0.0, 0.0))


class TestDensityTotalVariation:
    """网格密度全变差测试"""

    def test_identical(self):
        """测试相同密度"""
        grid = np.linspace(-12.0, 12.0, 4001)
        f = stats.norm.pdf(grid)
        assert metrics.tv_from_densities(grid, f, f) == 0.0

    def test_disjoint(self):
        """测试不相交的窄高斯"""
        grid = np.linspace(-2.0, 2.0, 40001)
        f1 = stats.norm.pdf(grid, -1.0, 0.01)
        f2 = stats.norm.pdf(grid, 1.0, 0.01)
        assert metrics.tv_from_densities(grid, f1, f2) == pytest.approx(1.0, abs=1e-6)

    def test_shifted_gaussians(self):
        """测试网格 [−10,11]、步长 1e-3 上的 N(1,1) 与 N(0,1)"""
        grid = np.linspace(-10.0, 11.0, 21001)
        tv = metrics.tv_from_densities(grid, stats.norm.pdf(grid, 1.0), stats.norm.pdf(grid))
        assert tv == pytest.approx(TV_ONE_SIGMA, abs=1e-5)

    def test_grid_mismatch(self):
        """测试形状不一致与非递增网格"""
        grid = np.linspace(-5.0, 5.0, 101)
        f = stats.norm.pdf(grid)
        with pytest.raises(GridMismatch):
            metrics.tv_from_densities(grid, f[:-1], f)
        with pytest.raises(GridMismatch):
            metrics.tv_from_densities(grid[::-1], f, f)

    def test_not_normalized(self):
        """测试未归一化密度"""
        grid = np.linspace(-5.0, 5.0, 1001)
        f = stats.norm.pdf(grid)
        with pytest.raises(NotNormalized):
            metrics.tv_from_densities(grid, 2.0 * f, f)


class TestDensityFromCf:
    """特征函数反演测试"""

    @pytest.fixture
    def law(self):
        return StableLawDescriptor(alpha=1.5, scale_c=1.0)

    def test_normalized_and_symmetric(self, law):
        """测试归一化与对称性"""
        grid = metrics.stable_grid(law)
        density = metrics.density_from_cf(law, grid)
        assert integrate.trapezoid(density, grid) == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(density, density[::-1], atol=1e-12)
        assert density.min() >= 0.0

    def test_density_at_origin(self, law):
        """测试 f(0) = Γ(1+1/α)/(π·c^{1/α})"""
        grid = metrics.stable_grid(law)
        density = metrics.density_from_cf(law, grid)
        expected = special.gamma(1.0 + 1.0 / law.alpha) / math.pi
        assert np.interp(0.0, grid, density) == pytest.approx(expected, abs=1e-4)

    def test_self_similarity(self, law):
        """测试 2X 的密度等于 f(x/2)/2"""
        wide = law.scaled(2.0)
        grid1 = metrics.stable_grid(law)
        grid2 = metrics.stable_grid(wide)
        f1 = metrics.density_from_cf(law, grid1)
        f2 = metrics.density_from_cf(wide, grid2)
        window = np.abs(grid2) < 5.0
        expected = 0.5 * np.interp(grid2[window] / 2.0, grid1, f1)
        np.testing.assert_allclose(f2[window], expected, atol=1e-4)

    def test_nyquist_violation(self):
        """测试粗网格上特征函数未衰减"""
        law = StableLawDescriptor(alpha=1.5, scale_c=0.01)
        grid = np.arange(16) - 7.5
        with pytest.raises(NyquistViolation):
            metrics.density_from_cf(law, grid)

    def test_grid_checks(self, law):
        """测试奇数点与非对称网格"""
        with pytest.raises(GridMismatch):
            metrics.density_from_cf(law, np.linspace(-5.0, 5.0, 101))
        with pytest.raises(GridMismatch):
            metrics.density_from_cf(law, np.linspace(-4.0, 6.0, 100))

    def test_tv_stable_shift_monotone(self, law):
        """测试平移越大 TV 越大"""
        small = metrics.tv_stable(law.shifted(0.1), law)
        large = metrics.tv_stable(law.shifted(1.0), law)
        assert 0.0 < small < large < 1.0


class TestWasserstein:
    """Wasserstein 距离测试"""

    def test_exact_shift(self):
        """测试平移 (3,4) 的距离为 5"""
        law = GaussianLaw(np.zeros(2), np.eye(2))
        assert metrics.wp_exact(law, [3.0, 4.0], 2.0) == pytest.approx(5.0)

    def test_exact_stable_moment_violation(self):
        """测试 p >= α 时不存在矩"""
        with pytest.raises(MomentViolation):
            metrics.wp_exact(StableLawDescriptor(alpha=1.5, scale_c=1.0), [1.0], 1.6)

    def test_empirical_shift_exact(self):
        """测试平移样本的经验距离"""
        rng = np.random.default_rng(11)
        sample = rng.normal(size=500)
        assert metrics.wp_empirical(sample + 1.0, sample, 1.0) == pytest.approx(1.0, abs=1e-12)
        cloud = rng.normal(size=(60, 2))
        assert metrics.wp_empirical(cloud + np.array([3.0, 4.0]), cloud, 2.0) == pytest.approx(5.0, abs=1e-9)

    def test_empirical_independent_samples(self):
        """测试 n=1e5 的独立样本：W1 ≈ 1"""
        rng = np.random.default_rng(5)
        a = rng.normal(1.0, 1.0, size=100_000)
        b = rng.normal(0.0, 1.0, size=100_000)
        assert metrics.wp_empirical(a, b, 1.0) == pytest.approx(1.0, abs=0.02)

    def test_empirical_errors(self):
        """测试样本数不一致与指派规模上限"""
        with pytest.raises(UnequalCounts):
            metrics.wp_empirical(np.zeros(10), np.zeros(11), 1.0)
        big = np.zeros((2049, 2))
        with pytest.raises(TooLargeForExact):
            metrics.wp_empirical(big, big, 1.0)

    def test_gaussian_scale_difference(self):
        """测试 N(0,1) 与 N(0,4)：p=2 为 1，p=1 为 √(2/π)"""
        g1 = GaussianLaw.univariate(0.0, 1.0)
        g2 = GaussianLaw.univariate(0.0, 4.0)
        value, err = metrics.wp_gaussian(g1, g2, 2.0)
        assert value == pytest.approx(1.0, abs=1e-12)
        assert err == 0.0
        value, _ = metrics.wp_gaussian(g1, g2, 1.0)
        assert value == pytest.approx(math.sqrt(2.0 / math.pi), abs=1e-12)

    @pytest.mark.parametrize(
        "mean, std, expected",
        [(1.0, 1.0, math.sqrt(2.0)), (10.0, 0.5, math.sqrt(100.25))],
    )
    def test_gaussian_second_moment(self, mean, std, expected):
        """测试 W_2 = (E|Δm + Δs·G|²)^{1/2}"""
        g1 = GaussianLaw.univariate(mean, (1.0 + std) ** 2)
        g2 = GaussianLaw.univariate(0.0, 1.0)
        value, _ = metrics.wp_gaussian(g1, g2, 2.0)
        assert value == pytest.approx(expected, rel=1e-9)

    def test_bures(self):
        """测试 diag(1,4) 与 I 的 Bures 距离为 1"""
        value, err = metrics.wp_gaussian(GaussianLaw(np.zeros(2), np.diag([1.0, 4.0])), GaussianLaw(np.zeros(2), np.eye(2)), 2.0)
        assert value == pytest.approx(1.0, abs=1e-10)
        assert err == 0.0

    def test_bracket(self):
        """测试多元 p≠2 的区间中点"""
        g1 = GaussianLaw(np.array([1.0, 0.0]), np.diag([1.0, 4.0]))
        g2 = GaussianLaw(np.zeros(2), np.eye(2))
        value, err = metrics.wp_gaussian(g1, g2, 1.0)
        upper = 1.0 + metrics.gaussian_norm_moment(2, 1.0)
        assert value - err == pytest.approx(1.0, abs=1e-10)
        assert value + err == pytest.approx(upper, abs=1e-10)

    def test_stable_absolute_moment(self):
        """测试 α=1.5, c=1：E|X| = 2Γ(1/3)/π"""
        assert metrics.stable_absolute_moment(1.5, 1.0, 1.0) == pytest.approx(STABLE_MEAN_ABS, rel=1e-12)

    def test_stable_moment_continuity(self):
        """测试 loc → 0 时与闭式一致"""
        closed = metrics.stable_absolute_moment(1.5, 1.0, 1.2)
        near = metrics.stable_absolute_moment(1.5, 1.0, 1.2, loc=1e-4)
        assert near == pytest.approx(closed, rel=1e-4)

    def test_stable_moment_with_location(self):
        """测试 |loc| <= E|loc + X| <= |loc| + E|X|"""
        value = metrics.stable_absolute_moment(1.5, 1.0, 1.0, loc=5.0)
        assert 5.0 <= value <= 5.0 + STABLE_MEAN_ABS

    def test_stable_moment_violation(self):
        """测试 p >= α"""
        with pytest.raises(MomentViolation):
            metrics.stable_absolute_moment(1.5, 1.0, 1.5)

    def test_wp_stable(self):
        """测试等尺度为位置差，纯尺度差为 |s1−s2|·E|L|"""
        l1 = StableLawDescriptor(1.5, 1.0, 0.3)
        l2 = StableLawDescriptor(1.5, 1.0, -0.2)
        assert metrics.wp_stable(l1, l2, 1.2) == pytest.approx(0.5)
        wide = StableLawDescriptor(1.5, 2.0 ** 1.5)
        assert metrics.wp_stable(wide, StableLawDescriptor(1.5, 1.0), 1.0) == pytest.approx(STABLE_MEAN_ABS, rel=1e-9)
        with pytest.raises(MomentViolation):
            metrics.wp_stable(l1, l2, 1.5)

    def test_shift_scaling_bound(self):
        """测试平移缩放上界在随机情形下成立"""
        rng = np.random.default_rng(17)
        moment = metrics.gaussian_norm_moment(2, 2.0)
        for _ in range(100):
            v1, v2 = rng.normal(size=2), rng.normal(size=2)
            M1, M2 = rng.normal(size=(2, 2)), rng.normal(size=(2, 2))
            actual, _ = metrics.wp_gaussian(GaussianLaw(v1, M1 @ M1.T), GaussianLaw(v2, M2 @ M2.T), 2.0)
            bound = metrics.wp_shift_scaling_bound(v1, v2, M1, M2, 2.0, moment)
            assert actual <= bound + 1e-8


class TestMetricAxioms:
    """距离公理测试"""

    PAIRS = [
        (GaussianLaw.univariate(1.0, 1.0), GaussianLaw.univariate(0.0, 1.0)),
        (GaussianLaw.univariate(0.5, 1.0), GaussianLaw.univariate(-0.3, 2.5)),
    ]

    @pytest.mark.parametrize("c", [-2.0, 0.5, 10.0])
    @pytest.mark.parametrize("pair", range(2))
    def test_tv_zero_homogeneity(self, c, pair):
        """测试 TV(cX, cY) = TV(X, Y)"""
        g1, g2 = self.PAIRS[pair]
        scaled = metrics.tv_gaussian(g1.scaled(c), g2.scaled(c))
        assert scaled == pytest.approx(metrics.tv_gaussian(g1, g2), abs=1e-10)

    def test_tv_zero_homogeneity_multivariate(self):
        """测试多元等协方差情形的零次齐次性"""
        cov = np.array([[2.0, 0.3], [0.3, 1.0]])
        g1, g2 = GaussianLaw(np.array([1.0, -1.0]), cov), GaussianLaw(np.zeros(2), cov)
        for c in (-2.0, 0.5, 10.0):
            assert metrics.tv_gaussian(g1.scaled(c), g2.scaled(c)) == pytest.approx(
                metrics.tv_gaussian(g1, g2), abs=1e-10
            )

    @pytest.mark.parametrize("shift", [-7.5, 0.25, 40.0])
    @pytest.mark.parametrize("pair", range(2))
    def test_translation_invariance(self, shift, pair):
        """测试 TV 与 W_p 在共同平移下不变"""
        g1, g2 = self.PAIRS[pair]
        a, b = g1.shifted([shift]), g2.shifted([shift])
        assert metrics.tv_gaussian(a, b) == pytest.approx(metrics.tv_gaussian(g1, g2), abs=1e-10)
        for p in (1.0, 2.0, 3.0):
            assert metrics.wp_gaussian(a, b, p)[0] == pytest.approx(metrics.wp_gaussian(g1, g2, p)[0], rel=1e-8)

    @pytest.mark.parametrize("c", [-2.0, 0.5, 10.0])
    @pytest.mark.parametrize("p", [1.0, 2.0, 3.0])
    def test_wp_one_homogeneity(self, c, p):
        """测试 W_p(cX, cY) = |c|·W_p(X, Y)"""
        for g1, g2 in self.PAIRS:
            base = metrics.wp_gaussian(g1, g2, p)[0]
            assert metrics.wp_gaussian(g1.scaled(c), g2.scaled(c), p)[0] == pytest.approx(abs(c) * base, rel=1e-8)

    def test_wp_one_homogeneity_empirical(self):
        """测试经验 W_p 的一次齐次性"""
        rng = np.random.default_rng(5)
        a, b = rng.normal(size=500), rng.normal(1.0, 2.0, size=500)
        for c in (-2.0, 0.5, 10.0):
            assert metrics.wp_empirical(c * a, c * b, 2.0) == pytest.approx(
                abs(c) * metrics.wp_empirical(a, b, 2.0), rel=1e-12
            )

    @pytest.mark.parametrize("sigma", [0.1, 1.0, 30.0])
    def test_displacement_at_infinity(self, sigma):
        """测试相距 12σ 的两个分布 TV >= 1 − 1e-6"""
        g = GaussianLaw.univariate(0.0, sigma ** 2)
        assert metrics.tv_gaussian(g.shifted([12.0 * sigma]), g) >= 1.0 - 1e-6
        cov = sigma ** 2 * np.eye(2)
        shift = 12.0 * sigma * np.array([0.6, 0.8])
        assert metrics.tv_gaussian(GaussianLaw(shift, cov), GaussianLaw(np.zeros(2), cov)) >= 1.0 - 1e-6

    def test_shift_additivity_independent_clouds(self):
        """测试独立样本云 W_2(v + X, Y) ≈ ‖v‖ = 5（3 个标准误内）"""
        rng = np.random.default_rng(20)
        v = np.array([3.0, 4.0])
        batch, batches = 1024, 98
        values = np.array([
            metrics.wp_empirical(v + rng.normal(size=(batch, 2)), rng.normal(size=(batch, 2)), 2.0)
            for _ in range(batches)
        ])
        stderr = values.std(ddof=1) / math.sqrt(batches)
        assert batch * batches >= 100_000
        assert abs(values.mean() - 5.0) <= 3.0 * stderr + 5e-3


class TestProfiles:
    """极限轮廓测试"""

    def test_tv_profile_values(self):
        """测试 R0=1/2 与 R0=1 在 r=0 的取值"""
        assert metrics.profile_tv(1.0, 1.0, 1.0, 0.5, 1, 0.0) == pytest.approx(TV_HALF_VARIANCE, abs=1e-12)
        assert metrics.profile_tv(1.0, 1.0, 1.0, 1.0, 1, 0.0) == pytest.approx(TV_ONE_SIGMA, abs=1e-12)

    def test_tv_profile_limits(self):
        """测试 r → ±∞ 的极限"""
        assert metrics.profile_tv(1.0, 1.0, 1.0, 0.5, 1, 50.0) == pytest.approx(0.0, abs=1e-12)
        assert metrics.profile_tv(1.0, 1.0, 1.0, 0.5, 1, -50.0) == pytest.approx(1.0, abs=1e-12)

    def test_tv_profile_monotone(self):
        """测试轮廓关于 r 递减"""
        values = [metrics.profile_tv(1.0, 1.0, 1.0, 0.5, 1, r) for r in np.linspace(-3.0, 3.0, 13)]
        assert all(b < a for a, b in zip(values, values[1:]))

    def test_tv_profile_multivariate(self):
        """测试多元极限分布与一元一致"""
        Z = GaussianLaw(np.zeros(2), 0.5 * np.eye(2))
        assert metrics.profile_tv(1.0, 1.0, [1.0, 0.0], Z, 1, 0.0) == pytest.approx(TV_HALF_VARIANCE, abs=1e-12)

    def test_tv_profile_jordan_factor(self):
        """测试 λ=2, ℓ=2 的 λ^{1−ℓ} 因子"""
        value = metrics.profile_tv(2.0, 1.0, 1.0, 0.5, 2, 0.0)
        assert value == pytest.approx(special.erf(0.25), abs=1e-12)

    def test_tv_profile_singular(self):
        """测试极限方差为零"""
        with pytest.raises(SingularLimitLaw):
            metrics.profile_tv(1.0, 1.0, 1.0, 0.0, 1, 0.0)

    def test_wp_profile(self):
        """测试 W_p 轮廓：2、2/e、1/2，且与 p 无关"""
        assert metrics.profile_wp(1.0, 1, 1.0, [0.0, 2.0], 0.0) == pytest.approx(2.0)
        assert metrics.profile_wp(1.0, 1, 1.0, [0.0, 2.0], 1.0) == pytest.approx(2.0 / math.e)
        assert metrics.profile_wp(2.0, 2, 1.0, 1.0, 0.0) == pytest.approx(0.5)
        assert metrics.profile_wp(1.0, 1, 1.0, 1.0, 0.7, p=1.0) == metrics.profile_wp(1.0, 1, 1.0, 1.0, 0.7, p=3.0)


class TestDistance:
    """分发测试"""

    def test_gaussian_tv(self):
        """测试高斯 TV 分发"""
        value, err = metrics.distance(GaussianLaw.univariate(1.0, 1.0), GaussianLaw.univariate(0.0, 1.0), MetricKind.TV)
        assert value == pytest.approx(TV_ONE_SIGMA)
        assert err == 0.0

    def test_empirical_wasserstein(self):
        """测试经验分布 W_p 分发，误差界未知"""
        rng = np.random.default_rng(2)
        sample = rng.normal(size=(200, 1))
        value, err = metrics.distance(EmpiricalLaw(sample + 0.5), EmpiricalLaw(sample), MetricKind.WASSERSTEIN, 1.0)
        assert value == pytest.approx(0.5, abs=1e-12)
        assert math.isnan(err)

    def test_empirical_tv_unsupported(self):
        """测试经验分布不计算 TV"""
        rng = np.random.default_rng(2)
        law = EmpiricalLaw(rng.normal(size=50))
        with pytest.raises(UnsupportedCase):
            metrics.distance(law, law, MetricKind.TV)
