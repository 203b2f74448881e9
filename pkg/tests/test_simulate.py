"""
模拟与边缘分布服务模块测试
"""

import math

import numpy as np
import pandas as pd
import pytest
from scipy import integrate, linalg, stats

from cutofflab.config import get_config
from cutofflab.models.processes import (
    CovarianceKernel,
    DriverKind,
    DriverSpec,
    KernelKind,
    PathEnsemble,
    TauKind,
    TauProfile,
)
from cutofflab.services import simulate
from cutofflab.utils.errors import (
    GridTooCoarse,
    InadmissibleRange,
    NoExactLaw,
    SlowDecay,
)

ROTATION = np.array([[1.0, -2.0], [2.0, 1.0]])
N_MC = 20_000


def within(estimate, expected, sd, n, sigmas=5.0):
    return abs(estimate - expected) <= sigmas * sd / math.sqrt(n)


class TestDrivers:
    """驱动过程测试"""

    def test_fgn_autocovariance_brownian(self):
        """测试 H=1/2 时增量不相关"""
        acov = simulate.fgn_autocovariance(0.5, 0.1, 5)
        np.testing.assert_allclose(acov, [0.1, 0.0, 0.0, 0.0, 0.0], atol=1e-15)

    @pytest.mark.parametrize("hurst", [0.3, 0.7])
    def test_fbm_gram_matrix(self, hurst):
        """测试分数布朗运动的完整 Gram 矩阵 (t = 0.25, 0.5, 0.75, 1)，5 倍标准误"""
        n = 100_000
        spec = DriverSpec(DriverKind.FBM, step=0.25, horizon=1.0, hurst=hurst)
        ensemble = simulate.sample_driver(spec, n, seed=42)
        paths = ensemble.values[:, :, 0]
        assert np.all(paths[:, 0] == 0.0)
        times = ensemble.times[1:]
        for i, s in enumerate(times, start=1):
            for j, t in enumerate(times[i - 1:], start=i):
                var_s, var_t = s ** (2 * hurst), t ** (2 * hurst)
                cov = 0.5 * (var_s + var_t - abs(t - s) ** (2 * hurst))
                product = paths[:, i] * paths[:, j]
                assert within(product.mean(), cov, math.sqrt(var_s * var_t + cov ** 2), n), (s, t)

    def test_stable_characteristic_function(self):
        """测试稳定驱动的经验特征函数"""
        spec = DriverSpec(DriverKind.STABLE, step=1.0, horizon=1.0, alpha=1.5)
        values = simulate.sample_driver(spec, N_MC, seed=7).values[:, 1, 0]
        psi = lambda z: math.exp(-abs(z) ** 1.5)  # noqa: E731
        for z in (0.5, 1.0, 2.0):
            sd = math.sqrt((1.0 + psi(2.0 * z)) / 2.0 - psi(z) ** 2)
            assert within(np.mean(np.cos(z * values)), psi(z), sd, N_MC)

    def test_stationary_gaussian_variance(self):
        """测试平稳高斯驱动的边缘方差"""
        kernel = CovarianceKernel(KernelKind.EXPONENTIAL, np.array([[2.0]]), rate=1.0)
        spec = DriverSpec(DriverKind.STATIONARY_GAUSSIAN, step=0.1, horizon=2.0, kernel=kernel)
        values = simulate.sample_driver(spec, N_MC, seed=9).values[:, -1, 0]
        assert within(np.mean(values ** 2), 2.0, math.sqrt(2.0) * 2.0, N_MC)

    def test_seed_determinism(self):
        """测试相同种子结果一致，不同种子结果不同"""
        spec = DriverSpec(DriverKind.BROWNIAN, step=0.1, horizon=1.0, dim=2)
        a = simulate.sample_driver(spec, 50, seed=1).values
        b = simulate.sample_driver(spec, 50, seed=1).values
        c = simulate.sample_driver(spec, 50, seed=2).values
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_thread_count_invariance(self, monkeypatch):
        """测试结果与线程数无关"""
        monkeypatch.setattr(get_config(), "block_size", 64)
        spec = DriverSpec(DriverKind.FBM, step=0.05, horizon=1.0, hurst=0.3)
        single = simulate.sample_driver(spec, 300, seed=5, threads=1).values
        multi = simulate.sample_driver(spec, 300, seed=5, threads=4).values
        np.testing.assert_array_equal(single, multi)

    def test_invalid_count(self):
        """测试路径数非正"""
        spec = DriverSpec(DriverKind.BROWNIAN, step=0.1, horizon=1.0)
        with pytest.raises(InadmissibleRange):
            simulate.sample_driver(spec, 0, seed=1)


class TestStochasticConvolution:
    """随机卷积测试"""

    def test_zero_driver(self):
        """测试零驱动得到零卷积"""
        times = 0.01 * np.arange(101)
        driver = PathEnsemble(np.zeros((3, 101, 1)), times, 0)
        result = simulate.stochastic_convolution(np.array([[1.0]]), driver)
        assert np.all(result.values == 0.0)

    def test_brownian_variance(self):
        """测试布朗驱动：Var(S_2) = (1 − e^{−4})/2"""
        spec = DriverSpec(DriverKind.BROWNIAN, step=0.01, horizon=2.0)
        S = simulate.stochastic_convolution(1.0, simulate.sample_driver(spec, N_MC, seed=3))
        expected = (1.0 - math.exp(-4.0)) / 2.0
        assert within(np.var(S.at(2.0)[:, 0]), expected, math.sqrt(2.0) * expected, N_MC)

    def test_linear_driver(self):
        """测试线性驱动 D_t = d·t：S_t = Λ^{−1}(I − e^{−Λt})d"""
        times = 0.01 * np.arange(301)
        d = np.array([1.0, 2.0])
        driver = PathEnsemble((times[:, None] * d)[None], times, 0)
        S = simulate.stochastic_convolution(ROTATION, driver)
        expected = np.linalg.solve(ROTATION, (np.eye(2) - linalg.expm(-3.0 * ROTATION)) @ d)
        np.testing.assert_allclose(S.values[0, -1], expected, atol=1e-3)

    def test_grid_too_coarse(self):
        """测试步长过粗"""
        times = 0.5 * np.arange(5)
        driver = PathEnsemble(np.zeros((1, 5, 1)), times, 0)
        with pytest.raises(GridTooCoarse):
            simulate.stochastic_convolution(1.0, driver)

    def test_stable_driver_explicit_sum(self):
        """测试跳跃驱动与显式求和一致"""
        lam, step = 1.0, 0.1
        spec = DriverSpec(DriverKind.STABLE, step=step, horizon=1.0, alpha=1.5)
        driver = simulate.sample_driver(spec, 5, seed=8)
        S = simulate.stochastic_convolution(lam, driver)
        jumps = np.diff(driver.values[:, :, 0], axis=1)
        K = jumps.shape[1]
        weights = np.exp(-lam * step * (K - 1 - np.arange(K))) * math.exp(-0.5 * lam * step)
        np.testing.assert_allclose(S.values[:, -1, 0], jumps @ weights, rtol=1e-10, atol=1e-12)

    def test_dimension_mismatch(self):
        """测试漂移与驱动维数不一致"""
        driver = PathEnsemble(np.zeros((1, 3, 1)), [0.0, 0.01, 0.02], 0)
        with pytest.raises(InadmissibleRange):
            simulate.stochastic_convolution(ROTATION, driver)


class TestFractionalOu:
    """分数 OU 测试"""

    def test_near_brownian_quadrature(self):
        """测试 H → 1/2 的数值积分与 e^{−t}/2 一致"""
        value = simulate.fou_stationary_covariance(1.0, 0.5000001, 1.0)
        assert value == pytest.approx(0.5 * math.exp(-1.0), abs=1e-6)

    def test_stationary_variance(self):
        """测试 λ=2, H=0.75：R(0) = λ^{−2H}Γ(2H+1)/2"""
        assert simulate.fou_stationary_covariance(2.0, 0.75, 0.0) == pytest.approx(0.2349964, abs=1e-7)

    def test_covariance_decreasing(self):
        """测试 H=0.7 协方差为正且递减"""
        values = [simulate.fou_stationary_covariance(1.0, 0.7, t) for t in (0.0, 0.5, 1.0, 2.0, 4.0)]
        assert all(v > 0 for v in values)
        assert all(b < a for a, b in zip(values, values[1:]))

    def test_invalid_hurst(self):
        """测试 H 越界"""
        with pytest.raises(InadmissibleRange):
            simulate.fou_stationary_covariance(1.0, 1.0, 0.5)

    def test_marginal_law(self):
        """测试 H=1/2 边缘分布"""
        law = simulate.fou_marginal_law(1.0, 0.5, 0.1, 1.0, 2.0)
        assert law.mean[0] == pytest.approx(math.exp(-2.0))
        assert law.variance == pytest.approx(0.01 * (1.0 - math.exp(-4.0)) / 2.0)
        limit = simulate.fou_marginal_law(1.0, 0.5, 0.1, 1.0, math.inf)
        assert limit.mean[0] == 0.0
        assert limit.variance == pytest.approx(0.005)

    def test_path_ensemble_moments(self):
        """测试路径集在 t=1 的均值与方差"""
        ens = simulate.fou_path_ensemble(1.0, 0.5, 1.0, 0.1, 0.01, 1.0, 4000, seed=21)
        law = simulate.fou_marginal_law(1.0, 0.5, 0.1, 1.0, 1.0)
        values = ens.at(1.0)[:, 0]
        sd = math.sqrt(law.variance)
        assert within(values.mean(), law.mean[0], sd, 4000)
        assert within(values.var(), law.variance, math.sqrt(2.0) * law.variance, 4000)

    def test_average_variance(self):
        """测试 N 条路径平均后方差缩小为 1/N"""
        ens = simulate.average_ensemble(1.0, 0.5, 0.0, 4, 0.01, 1.0, 4000, seed=13)
        expected = (1.0 - math.exp(-2.0)) / 2.0 / 4.0
        assert within(ens.at(1.0)[:, 0].var(), expected, math.sqrt(2.0) * expected, 4000)


class TestGeneralizedOu:
    """广义 OU 测试"""

    def test_matches_scalar_fou(self):
        """测试一元情形与分数 OU 协方差一致"""
        for t in (0.0, 1.0):
            general = simulate.generalized_ou_stationary_covariance([[2.0]], [[1.0]], 0.7, t)[0, 0]
            assert general == pytest.approx(simulate.fou_stationary_covariance(2.0, 0.7, t), rel=1e-5)

    def test_brownian_noise_covariance(self):
        """测试 H=1/2 噪声协方差等于 Σ − EΣE*"""
        sigma = simulate.lyapunov_covariance(ROTATION, np.eye(2))
        expected = simulate.multivariate_noise_covariance(ROTATION, sigma, 0.7)
        actual = simulate.generalized_ou_noise_covariance(ROTATION, np.eye(2), 0.5, 0.7)
        np.testing.assert_allclose(actual, expected, rtol=1e-10, atol=1e-12)

    def test_pathwise_relation(self):
        """测试逐路径 S_t = U_t − e^{−Λt}U_0"""
        S, U = simulate.generalized_ou_ensemble(ROTATION, np.eye(2), 0.5, 0.01, 1.0, 4, seed=3, burn_in=2.0)
        for k in (0, 37, 100):
            E = linalg.expm(-ROTATION * S.times[k])
            np.testing.assert_allclose(S.values[:, k], U.values[:, k] - U.values[:, 0] @ E.T, atol=1e-10)

    def test_samples_variance(self):
        """测试一元 H=1/2 的 S_1 方差"""
        samples = simulate.generalized_ou_samples([[1.0]], [[1.0]], 0.5, 0.01, [1.0], N_MC, seed=4, burn_in=0.5)
        assert samples.shape == (1, N_MC, 1)
        expected = (1.0 - math.exp(-2.0)) / 2.0
        assert within(samples[0, :, 0].var(), expected, math.sqrt(2.0) * expected, N_MC)

    def test_stationary_marginal_ks(self):
        """测试 S_t + e^{−Λt}U_0 的各坐标服从平稳 U 分布（KS 检验，1% 水平）"""
        hurst = 0.7
        S, U = simulate.generalized_ou_ensemble(ROTATION, np.eye(2), hurst, 0.01, 1.0, 2000, seed=31, burn_in=10.0)
        R = simulate.generalized_ou_stationary_covariance(ROTATION, np.eye(2), hurst, 0.0)
        k = S.times.size - 1
        E = linalg.expm(-ROTATION * S.times[k])
        X = S.values[:, k] + U.values[:, 0] @ E.T
        for i in range(2):
            result = stats.kstest(X[:, i] / math.sqrt(R[i, i]), "norm")
            assert result.pvalue > 0.01, (i, result.statistic)

    def test_l2_distance_decays_with_semigroup(self):
        """测试 ‖S_t − U_t‖_{L²} 按 ‖e^{−Λt}U_0‖_{L²} 衰减"""
        A = np.array([[1.0, 1.0], [0.0, 2.0]])
        n = 3000
        S, U = simulate.generalized_ou_ensemble(A, np.eye(2), 0.5, 0.02, 3.0, n, seed=32, burn_in=10.0)
        R = simulate.generalized_ou_stationary_covariance(A, np.eye(2), 0.5, 0.0)
        u0_l2 = math.sqrt(np.mean(np.sum(U.values[:, 0] ** 2, axis=1)))
        previous = math.inf
        for t in (0.5, 1.0, 2.0, 3.0):
            k = int(round(t / 0.02))
            E = linalg.expm(-A * S.times[k])
            l2 = math.sqrt(np.mean(np.sum((S.values[:, k] - U.values[:, k]) ** 2, axis=1)))
            assert l2 == pytest.approx(math.sqrt(np.trace(E @ R @ E.T)), rel=0.12)
            assert l2 <= np.linalg.norm(E, 2) * u0_l2 * (1.0 + 1e-6)
            assert l2 < previous
            previous = l2


class TestIteratedOu:
    """迭代 OU 测试"""

    def test_white_kernel(self):
        """测试白噪声核：Σ = C"""
        C = np.array([[2.0, 0.5], [0.5, 1.0]])
        sigma = simulate.iterated_ou_limit_covariance(ROTATION, CovarianceKernel(KernelKind.WHITE, C))
        np.testing.assert_allclose(sigma, C, atol=1e-12)

    def test_scalar_exponential(self):
        """测试一元指数核：θ/(θ+λ)"""
        kernel = CovarianceKernel(KernelKind.EXPONENTIAL, np.array([[1.0]]), rate=2.0)
        sigma = simulate.iterated_ou_limit_covariance([[1.0]], kernel)
        assert sigma[0, 0] == pytest.approx(2.0 / 3.0, abs=1e-8)

    def test_gaussian_kernel_against_double_integral(self):
        """测试一元高斯核与二重积分一致"""
        kernel = CovarianceKernel(KernelKind.GAUSSIAN, np.array([[1.0]]), rate=1.0)
        single, _ = integrate.quad(lambda u: math.exp(-u) * math.exp(-u * u), 0.0, 40.0)
        double, _ = integrate.dblquad(
            lambda v, u: math.exp(-u - v) * math.exp(-((u - v) ** 2)), 0.0, 40.0, 0.0, 40.0, epsabs=1e-11
        )
        oracle = 1.0 - 2.0 * single + double
        sigma = simulate.iterated_ou_limit_covariance([[1.0]], kernel)
        assert sigma[0, 0] == pytest.approx(oracle, abs=1e-6)

    def test_rotation_psd(self):
        """测试旋转漂移下极限协方差半正定"""
        kernel = CovarianceKernel(KernelKind.EXPONENTIAL, np.eye(2), rate=1.0)
        sigma = simulate.iterated_ou_limit_covariance(ROTATION, kernel)
        np.testing.assert_allclose(sigma, sigma.T)
        assert np.min(np.linalg.eigvalsh(sigma)) >= -1e-12

    def test_slow_decay(self):
        """测试协方差函数衰减过慢"""
        kernel = CovarianceKernel(KernelKind.EXPONENTIAL, np.array([[1.0]]), rate=0.1)
        with pytest.raises(SlowDecay):
            simulate.iterated_ou_limit_covariance([[1.0]], kernel)

    def test_finite_time(self):
        """测试 t=0 为零，t 大时趋于极限"""
        kernel = CovarianceKernel(KernelKind.EXPONENTIAL, np.array([[1.0]]), rate=2.0)
        np.testing.assert_allclose(simulate.iterated_ou_noise_covariance([[1.0]], kernel, 0.0), 0.0, atol=1e-14)
        late = simulate.iterated_ou_noise_covariance([[1.0]], kernel, 30.0)
        assert late[0, 0] == pytest.approx(2.0 / 3.0, abs=1e-6)


class TestClosedFormLaws:
    """闭式边缘分布测试"""

    def test_inhomogeneous_constant(self):
        """测试常数 τ：(1 − e^{−2λt})/(2λ)"""
        value, limit = simulate.inhomogeneous_variance(1.0, TauProfile(), 1.0)
        assert value == pytest.approx((1.0 - math.exp(-2.0)) / 2.0, abs=1e-10)
        assert limit == pytest.approx(0.5)

    def test_inhomogeneous_exponential_limit(self):
        """测试 τ(s) = 1 + e^{−s} 的极限只依赖 τ(∞)"""
        tau = TauProfile(TauKind.EXPONENTIAL, level=1.0, amplitude=1.0, rate=1.0)
        value, limit = simulate.inhomogeneous_variance(2.0, tau, 40.0)
        assert limit == pytest.approx(0.25)
        assert value == pytest.approx(limit, abs=1e-8)

    def test_integrated_variance_factor(self):
        """测试 ∫_0^1 (1 − e^{−u})² du"""
        assert simulate.integrated_variance_factor(1.0, 1.0) == pytest.approx(0.1680913, abs=1e-7)

    def test_integrated_stable_factor(self):
        """测试稳定因子趋于 1"""
        assert simulate.integrated_stable_factor(1.0, 1.5, 100.0) == pytest.approx(1.0, abs=2e-2)

    def test_integrated_limits(self):
        """测试积分 OU 的极限分布"""
        gaussian = simulate.integrated_ou_law(2.0, 1.0, 1.0, math.inf)
        assert gaussian.variance == pytest.approx(0.25)
        stable = simulate.integrated_ou_law(2.0, 1.0, 1.0, math.inf, driver="stable", alpha=1.5)
        assert stable.scale_c == pytest.approx(2.0 ** -1.5)
        with pytest.raises(InadmissibleRange):
            simulate.integrated_ou_law(2.0, 1.0, 1.0, 0.0)

    def test_no_exact_law(self):
        """测试 Σ − EΣE* 非半正定"""
        with pytest.raises(NoExactLaw):
            simulate.multivariate_noise_covariance(ROTATION, np.diag([1.0, 4.0]), 0.1)

    def test_lyapunov_limit(self):
        """测试旋转漂移的 Lyapunov 极限协方差"""
        sigma = simulate.lyapunov_covariance(ROTATION, np.eye(2))
        np.testing.assert_allclose(sigma, 0.5 * np.eye(2), atol=1e-12)
        cov = simulate.multivariate_noise_covariance(ROTATION, sigma, 1.0)
        np.testing.assert_allclose(cov, 0.5 * (1.0 - math.exp(-2.0)) * np.eye(2), atol=1e-12)


class TestExportEnsemble:
    """路径集导出测试"""

    @pytest.fixture
    def ensemble(self):
        values = np.arange(12, dtype=float).reshape(2, 3, 2)
        return PathEnsemble(values, [0.0, 0.5, 1.0], 99)

    def test_npz(self, ensemble, tmp_path):
        """测试 npz 导出"""
        path = simulate.export_ensemble(ensemble, tmp_path / "paths.npz")
        with np.load(path) as data:
            np.testing.assert_array_equal(data["values"], ensemble.values)
            np.testing.assert_array_equal(data["times"], ensemble.times)
            assert int(data["seed"]) == 99

    def test_csv(self, ensemble, tmp_path):
        """测试 csv 长表导出"""
        path = simulate.export_ensemble(ensemble, tmp_path / "out" / "paths.csv")
        assert path.read_text(encoding="utf-8").splitlines()[0] == "# seed=99"
        frame = pd.read_csv(path, comment="#")
        assert list(frame.columns) == ["path", "t", "coord", "value"]
        assert len(frame) == 12
        row = frame[(frame.path == 1) & (frame.t == 0.5) & (frame.coord == 1)]
        assert float(row.value.iloc[0]) == ensemble.values[1, 1, 1]

    def test_unknown_suffix(self, ensemble, tmp_path):
        """测试不支持的格式"""
        with pytest.raises(InadmissibleRange):
            simulate.export_ensemble(ensemble, tmp_path / "paths.txt")
