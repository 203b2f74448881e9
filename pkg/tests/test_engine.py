"""
截断实验引擎测试
"""

import math

import numpy as np
import pytest

from cutofflab.models.processes import ScaleFunction
from cutofflab.models.reports import NEGATIVE_TIME, CutoffClass, CutoffReport
from cutofflab.services import scenarios
from cutofflab.services.engine import CutoffEngine, classification_consistent, get_engine, karamata_check
from cutofflab.utils.errors import InadmissibleRange, NegativeTime, UnsupportedCase

TV_HALF_VARIANCE = 0.5204998778130465


@pytest.fixture
def engine():
    return CutoffEngine(threads=2)


@pytest.fixture
def fou05():
    return scenarios.builtin_scenario("fou-h05")


class TestProfileCurve:
    """理论轮廓测试"""

    def test_fou_profile(self, engine, fou05):
        """测试 r=0 处 erf(1/2)"""
        curve = engine.profile_curve(fou05, [-1.0, 0.0, 1.0])
        assert curve.is_theoretical_only
        assert curve.theoretical[1] == pytest.approx(TV_HALF_VARIANCE, abs=1e-12)
        assert curve.theoretical[0] > curve.theoretical[1] > curve.theoretical[2]
        assert curve.metric == "tv"

    def test_wasserstein_profile(self, engine):
        """测试 W_p 轮廓 e^{−r}|x|"""
        s = scenarios.build_scenario("fou_1d", {"lambda": 1.0, "x": 2.0}, metric="wasserstein")
        curve = engine.profile_curve(s, [0.0, 1.0])
        np.testing.assert_allclose(curve.theoretical, [2.0, 2.0 / math.e], rtol=1e-12)


class TestDistanceCurve:
    """实测曲线测试"""

    def test_fou_tracks_profile(self, engine, fou05):
        """测试 ε=1e-4 时实测与轮廓一致"""
        curve = engine.distance_curve(fou05, 1e-4, np.arange(-2.0, 2.5, 0.5))
        assert curve.sup_gap <= 1e-3
        assert curve.schedule.t_cut == pytest.approx(math.log(1e4))
        np.testing.assert_allclose(curve.times, curve.schedule.t_cut + curve.r_grid)

    @pytest.mark.parametrize("name", ["fou-h03", "fou-h05", "fou-h07"])
    def test_fou_gap_shrinks_with_epsilon(self, engine, name):
        """测试 ε = 10^−k (k=2..6) 时 sup-gap 严格下降，且 k=6 时不超过 5e-3"""
        s = scenarios.builtin_scenario(name)
        r_grid = np.arange(-3.0, 4.0)
        gaps = [engine.distance_curve(s, 10.0 ** -k, r_grid).sup_gap for k in range(2, 7)]
        assert all(later < earlier for earlier, later in zip(gaps, gaps[1:]))
        assert gaps[-1] <= 5e-3

    @pytest.mark.parametrize("hurst", [0.3, 0.7])
    def test_wasserstein_exact_independent_of_p(self, engine, hurst):
        """测试 ε=1e-6 时精确 W_p 实测曲线贴合轮廓且与 p 无关"""
        r_grid = np.arange(-3.0, 4.0)
        measured = []
        for p in (1.0, 2.0, 3.0):
            s = scenarios.build_scenario(
                "fou_1d", {"lambda": 1.0, "x": 1.0, "hurst": hurst, "epsilon": 1e-6}, metric="wasserstein", p=p,
            )
            curve = engine.distance_curve(s, 1e-6, r_grid)
            assert curve.sup_gap <= 5e-3
            measured.append(curve.measured)
        np.testing.assert_allclose(measured[1], measured[0], rtol=0, atol=1e-10)
        np.testing.assert_allclose(measured[2], measured[0], rtol=0, atol=1e-10)

    def test_wasserstein_exact(self, engine):
        """测试精确 W_1 曲线"""
        s = scenarios.build_scenario("fou_1d", {"lambda": 1.0, "x": 1.0, "epsilon": 1e-4}, metric="wasserstein")
        curve = engine.distance_curve(s, 1e-4, [-1.0, 0.0, 1.0])
        assert curve.sup_gap <= 1e-3

    def test_rotation_isotropic(self, engine):
        """测试旋转各向同性场景"""
        s = scenarios.builtin_scenario("rotation-isotropic")
        curve = engine.distance_curve(s, 1e-4, [-1.0, 0.0, 1.0])
        assert curve.sup_gap <= 1e-3

    def test_negative_time(self, engine, fou05):
        """测试 t <= 0 的单元"""
        with pytest.raises(NegativeTime):
            engine.distance_curve(fou05, 0.5, [-5.0, 0.0])
        curve = engine.distance_curve(fou05, 0.5, [-5.0, 0.0], allow_negative=True)
        assert math.isnan(curve.measured[0])
        assert curve.flags == (NEGATIVE_TIME, "")
        assert np.isfinite(curve.measured[1])

    def test_renormalize_invariance(self, engine, fou05):
        """测试 TV 对共同缩放不变"""
        normalized = engine.distance_curve(fou05, 1e-3, [0.0]).measured[0]
        raw = engine.distance_curve(fou05, 1e-3, [0.0], renormalize=False).measured[0]
        assert raw == pytest.approx(normalized, abs=1e-12)

    def test_to_frame_columns(self, engine, fou05):
        """测试曲线表格列"""
        frame = engine.distance_curve(fou05, 1e-3, [0.0, 1.0]).to_frame()
        assert list(frame.columns) == ["epsilon", "r", "t", "measured", "theoretical", "gap", "stderr"]
        assert len(frame) == 2


class TestMonteCarloCurve:
    """蒙特卡洛曲线测试"""

    @pytest.fixture
    def mc_scenario(self):
        return scenarios.build_scenario(
            "fou_1d", {"lambda": 1.0, "x": 1.0, "epsilon": 1e-2},
            metric="wasserstein", evaluation="monte-carlo", mc_paths=2000, seed=17,
        )

    def test_tracks_profile(self, engine, mc_scenario):
        """测试经验 W_1 接近 e^{−r}"""
        curve = engine.mc_distance_curve(mc_scenario, 1e-2, [0.0, 1.0], bootstrap=20)
        np.testing.assert_allclose(curve.measured, [1.0, math.exp(-1.0)], atol=0.1)
        assert np.all(curve.stderr > 0)

    def test_deterministic(self, engine, mc_scenario):
        """测试相同种子结果一致"""
        a = engine.distance_curve(mc_scenario, 1e-2, [0.0], eps_index=0)
        b = CutoffEngine(threads=1).distance_curve(mc_scenario, 1e-2, [0.0], eps_index=0)
        np.testing.assert_array_equal(a.measured, b.measured)
        np.testing.assert_array_equal(a.stderr, b.stderr)

    def test_averaging_gap_within_noise(self, engine):
        """
        测试平均过程 N ∈ {1e2, 1e4, 1e6} 的 W_1 曲线

        gap 已落在蒙特卡洛噪声水平上，下降只要求在 3 倍标准误内成立。
        """
        sigmas = 3.0
        gaps, errors = [], []
        for n_average in (100, 10 ** 4, 10 ** 6):
            s = scenarios.build_scenario(
                "averaging", {"lambda": 1.0, "x": 1.0, "N": n_average},
                metric="wasserstein", evaluation="monte-carlo", seed=23,
            )
            curve = engine.mc_distance_curve(s, s.epsilon, [-1.0, 0.0, 1.0], n=20000, bootstrap=20)
            gaps.append(curve.sup_gap)
            errors.append(float(np.nanmax(curve.stderr)))
        for k in range(len(gaps) - 1):
            tolerance = sigmas * max(errors[k], errors[k + 1])
            assert gaps[k + 1] <= gaps[k] + tolerance
        assert gaps[-1] <= 0.05

    def test_tv_unsupported(self, engine, fou05):
        """测试蒙特卡洛曲线不支持 TV"""
        with pytest.raises(UnsupportedCase):
            engine.mc_distance_curve(fou05, 1e-2, [0.0])


class TestClassification:
    """截断分类测试"""

    def test_scalar_profile(self, engine, fou05):
        """测试一元场景为 profile"""
        report = engine.cutoff_classification(fou05)
        assert report.classification == CutoffClass.PROFILE
        assert report.spread == 0.0

    def test_rotation_isotropic_profile(self, engine):
        """测试各向同性旋转为 profile"""
        report = engine.cutoff_classification(scenarios.builtin_scenario("rotation-isotropic"))
        assert report.classification == CutoffClass.PROFILE
        assert report.spread <= 1e-6

    def test_rotation_anisotropic_window(self, engine):
        """测试各向异性旋转为 window-only 并给出包络"""
        report = engine.cutoff_classification(scenarios.builtin_scenario("rotation-anisotropic"))
        assert report.classification == CutoffClass.WINDOW_ONLY
        assert report.spread > 1e-3
        assert np.all(report.liminf_profile <= report.limsup_profile)
        assert np.any(report.liminf_profile < report.limsup_profile - 1e-6)
        assert not np.allclose(report.v_check, report.v_hat)

    def test_rotation_anisotropic_spread_at_unit_rho(self, engine):
        """测试 ρ=1 时各向异性旋转的离差不小于 0.05"""
        report = engine.cutoff_classification(scenarios.builtin_scenario("rotation-anisotropic"), rho_grid=(1.0,))
        assert report.classification == CutoffClass.WINDOW_ONLY
        assert report.spread >= 0.05

    def test_wasserstein_rotation_profile(self, engine):
        """测试 W_p 下 ‖v‖ 恒定即为 profile"""
        s = scenarios.build_scenario(
            "multivariate_gaussian_linear",
            {"drift": [[1.0, -2.0], [2.0, 1.0]], "x": [1.0, 0.0], "limit_covariance": [[1.0, 0.0], [0.0, 4.0]]},
            metric="wasserstein",
        )
        assert engine.cutoff_classification(s).classification == CutoffClass.PROFILE

    def test_invalid_rho(self, engine, fou05):
        """测试非正 ρ"""
        with pytest.raises(InadmissibleRange):
            engine.cutoff_classification(fou05, rho_grid=(0.0, 1.0))


class TestClassificationConsistency:
    """分类一致性测试"""

    @staticmethod
    def window_report(spread=0.2, low=(0.1, 0.5), high=(0.3, 0.7)):
        return CutoffReport(
            scenario="synthetic", metric="tv", classification=CutoffClass.WINDOW_ONLY,
            spread=spread, tolerance=1e-6, envelope_r=np.array([0.0, 1.0]),
            liminf_profile=None if low is None else np.array(low),
            limsup_profile=None if high is None else np.array(high),
        )

    @pytest.mark.parametrize("name", ["rotation-isotropic", "rotation-anisotropic"])
    def test_engine_reports_consistent(self, engine, name):
        """测试引擎给出的分类与依据一致"""
        consistent, _ = classification_consistent(engine.cutoff_classification(scenarios.builtin_scenario(name)))
        assert consistent

    def test_valid_window(self):
        consistent, detail = classification_consistent(self.window_report())
        assert consistent
        assert detail == "window-only"

    def test_collapsed_envelope(self):
        """测试 liminf 与 limsup 处处相等"""
        consistent, detail = classification_consistent(self.window_report(low=(0.3, 0.5), high=(0.3, 0.5)))
        assert not consistent
        assert "collapsed" in detail

    def test_inverted_envelope(self):
        consistent, detail = classification_consistent(self.window_report(low=(0.4, 0.5), high=(0.3, 0.7)))
        assert not consistent
        assert "liminf above limsup" in detail

    def test_missing_envelope(self):
        consistent, detail = classification_consistent(self.window_report(low=None, high=None))
        assert not consistent
        assert "missing" in detail

    def test_window_with_small_spread(self):
        """测试离差在容差内却判为 window-only"""
        consistent, _ = classification_consistent(self.window_report(spread=1e-9))
        assert not consistent

    def test_unclassified(self):
        report = CutoffReport(scenario="synthetic", metric="tv")
        assert classification_consistent(report) == (False, "unclassified")


class TestConvergenceReport:
    """收敛报告测试"""

    def test_fou_monotone(self, engine, fou05):
        """测试 sup-gap 随 ε 单调下降"""
        report = engine.convergence_report(fou05, [1e-2, 1e-3, 1e-4], [-2.0, 0.0, 2.0])
        gaps = list(report.sup_gaps.values())
        assert len(gaps) == 3
        assert report.monotone
        assert report.inversions == 0
        assert gaps[-1] < gaps[0]
        assert len(report.curves) == 3
        assert report.to_dict()["classification"] == "profile"

    def test_negative_cells_recorded(self, engine, fou05):
        """测试 NegativeTime 单元被记录而不中断"""
        report = engine.convergence_report(fou05, [0.5, 1e-3], [-5.0, 0.0])
        assert (0.5, -5.0) in report.negative_time_cells

    def test_requires_decreasing(self, engine, fou05):
        """测试 ε 列表必须严格递减"""
        with pytest.raises(InadmissibleRange):
            engine.convergence_report(fou05, [1e-3, 1e-2], [0.0])


class TestKaramata:
    """慢变检查测试"""

    @pytest.mark.parametrize(
        "sigma",
        [ScaleFunction.one(), ScaleFunction.sqrt(), ScaleFunction.power(1.0 / 1.5)],
    )
    def test_slowly_varying(self, sigma):
        """测试常数与幂函数通过"""
        passed, table = karamata_check(sigma)
        assert passed
        assert set(table["check"]) == {"ratio", "subexponential"}

    def test_exponential_fails(self):
        """测试指数增长不通过"""
        passed, table = karamata_check(ScaleFunction.from_callable(lambda t: np.exp(0.5 * t), "exp"))
        assert not passed
        assert not table["passed"].all()


class TestVerify:
    """验证套件测试"""

    def test_fou_all_pass(self, engine, fou05):
        """测试 H=1/2 场景全部通过"""
        checks = engine.verify(fou05)
        names = {check.name for check in checks}
        assert {"hg_residual", "karamata", "limit_distance", "profile_right_end", "profile_left_end",
                "sup_gap_monotone", "sup_gap_small", "classification"} <= names
        failed = [check.name for check in checks if not check.passed]
        assert failed == []

    def test_classification_check_reflects_report(self, engine, fou05):
        """测试 classification 检查项的 passed 来自分类一致性"""
        check = next(c for c in engine.verify(fou05) if c.name == "classification")
        consistent, detail = classification_consistent(engine.cutoff_classification(fou05))
        assert check.passed == consistent
        assert check.note == detail

    def test_singleton(self):
        """测试引擎单例"""
        assert get_engine() is get_engine()
