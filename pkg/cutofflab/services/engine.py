"""
截断实验引擎

- 沿 t^cut_ε + r·w 的实测/理论距离曲线
- profile 与 window-only 截断分类（ω-极限集上的常值判据）
- 多个 ε 的收敛报告
- 尺度函数的慢变检查
- 单场景验证套件
"""

import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from cutofflab.config import get_config
from cutofflab.models.laws import GaussianLaw, StableLawDescriptor
from cutofflab.models.processes import ScaleFunction
from cutofflab.models.reports import NEGATIVE_TIME, CheckResult, CutoffClass, CutoffReport, ProfileCurve
from cutofflab.models.scenario import EvaluationKind, MetricKind, Scenario
from cutofflab.models.spectral import CutoffSchedule, DominantDecomposition
from cutofflab.services import metrics, scenarios, spectral
from cutofflab.utils.errors import (
    InadmissibleRange,
    NegativeTime,
    NumericalError,
    UnsupportedCase,
)
from cutofflab.utils.logger import get_logger
from cutofflab.utils.rng import parallel_map, stream

logger = get_logger(__name__)

DEFAULT_RHO_GRID = (0.5, 1.0, 2.0)
DEFAULT_TOL = 1e-6
DEFAULT_ENVELOPE_R = tuple(np.arange(-3.0, 3.5, 0.5))
BOOTSTRAP_KEY = 21
ASSIGNMENT_BATCH = 2048
GAP_FLOOR = 1e-10
ENVELOPE_SLACK = 1e-12


class CutoffEngine:
    """截断实验引擎"""

    def __init__(self, threads: Optional[int] = None):
        """
        初始化引擎

        Args:
            threads: 线程数上限，默认取配置
        """
        config = get_config()
        self.threads = threads or config.threads
        self.bootstrap_resamples = config.bootstrap_resamples

    # ------------------------------------------------------------ 基础数据

    def decomposition(self, s: Scenario) -> DominantDecomposition:
        return spectral.dominant_decomposition(s.drift, s.asymptotic_datum)

    def schedule(self, s: Scenario, epsilon: float, w: float, dec: Optional[DominantDecomposition] = None) -> CutoffSchedule:
        dec = dec or self.decomposition(s)
        return spectral.cutoff_time_scale(dec.rate, dec.block_size, s.scale, epsilon, w)

    def _profile_value(self, s: Scenario, dec: DominantDecomposition, v: np.ndarray, r: float, w: float) -> float:
        """极限轮廓在 v 处的取值"""
        if s.metric == MetricKind.WASSERSTEIN:
            return metrics.profile_wp(dec.rate, dec.block_size, w, v, r, s.p)
        Z = s.limit_law
        if isinstance(Z, GaussianLaw) and Z.dim == 1:
            return metrics.profile_tv(dec.rate, w, float(v[0]), Z.variance, dec.block_size, r)
        return metrics.profile_tv(dec.rate, w, v, Z, dec.block_size, r)

    # ------------------------------------------------------------ 曲线

    def profile_curve(self, s: Scenario, r_grid: Sequence[float], w: float = 1.0, resolution: int = 64) -> ProfileCurve:
        """
        仅含理论值的轮廓曲线，v 取 ω(x) 中 ‖v‖ 为中位数的样本

        Args:
            s: 场景
            r_grid: 窗口位置
            w: 窗口宽度
            resolution: ω(x) 采样分辨率

        Returns:
            ProfileCurve（measured 为空）
        """
        dec = self.decomposition(s)
        v = spectral.omega_limit_set(dec, resolution).representative()
        r_grid = np.asarray(r_grid, dtype=float)
        theoretical = np.array([self._profile_value(s, dec, v, float(r), w) for r in r_grid])
        return ProfileCurve(r_grid, theoretical, s.metric_tag, w)

    def _exact_cell(self, s: Scenario, t: float, renormalize: bool) -> Tuple[float, float]:
        law = scenarios.marginal_law(s, t)
        Z = s.limit_law
        if not renormalize:
            factor = s.epsilon * s.scale.checked(t)
            law, Z = law.scaled(factor), Z.scaled(factor)

        if s.metric == MetricKind.WASSERSTEIN:
            return metrics.distance(law, Z, MetricKind.WASSERSTEIN, s.p)
        if isinstance(law, GaussianLaw) and law.dim > 1 and not np.allclose(law.covariance, Z.covariance, rtol=0, atol=1e-12):
            # 以极限协方差代替有限时刻协方差，误差由 Pinsker 界给出
            proxy = Z.shifted(law.mean)
            return metrics.tv_gaussian(proxy, Z), metrics.tv_pinsker_bound(law, proxy)
        return metrics.distance(law, Z, MetricKind.TV)

    def distance_curve(
        self,
        s: Scenario,
        epsilon: float,
        r_grid: Sequence[float],
        w: float = 1.0,
        allow_negative: bool = False,
        renormalize: bool = True,
        eps_index: int = 0,
    ) -> ProfileCurve:
        """
        实测与理论距离曲线

        measured(r) = d(X^ε_t(x)/(ε·σ_t), Z)，t = t^cut_ε + r·w；theoretical(r) 为以
        v(t) 的主导轨迹计算的极限轮廓。

        Args:
            s: 场景
            epsilon: 噪声强度
            r_grid: 窗口位置
            w: 窗口宽度
            allow_negative: t <= 0 的单元记为 NaN 并标记，而不是抛出 NegativeTime
            renormalize: 是否按 1/(ε·σ_t) 归一化
            eps_index: ε 序号（蒙特卡洛随机流派生键）

        Returns:
            ProfileCurve
        """
        if s.evaluation == EvaluationKind.MONTE_CARLO:
            return self.mc_distance_curve(s, epsilon, r_grid, w, eps_index=eps_index, allow_negative=allow_negative)

        s_eps = scenarios.with_epsilon(s, epsilon)
        dec = self.decomposition(s)
        sched = self.schedule(s, epsilon, w, dec)
        r_grid = np.asarray(r_grid, dtype=float)
        times = np.array([sched.time_at(float(r)) for r in r_grid])
        self._check_times(times, r_grid, allow_negative)

        def cell(index: int) -> Tuple[float, float, float, str]:
            t, r = float(times[index]), float(r_grid[index])
            if t <= 0:
                return math.nan, math.nan, math.nan, NEGATIVE_TIME
            v = spectral.dominant_trajectory(dec, t)
            theoretical = self._profile_value(s, dec, v, r, w)
            measured, stderr = self._exact_cell(s_eps, t, renormalize)
            return measured, theoretical, stderr, ""

        cells = parallel_map(cell, list(range(len(r_grid))), self.threads)
        measured, theoretical, stderr, flags = (list(column) for column in zip(*cells))
        logger.debug(f"distance_curve: {s.name}, ε={epsilon:g}, {len(r_grid)} 个单元")
        return ProfileCurve(
            r_grid, np.array(theoretical), s.metric_tag, w,
            measured=np.array(measured), stderr=np.array(stderr), epsilon=epsilon,
            schedule=sched, times=times, flags=tuple(flags),
        )

    def _check_times(self, times: np.ndarray, r_grid: np.ndarray, allow_negative: bool) -> None:
        bad = r_grid[times <= 0]
        if bad.size == 0:
            return
        if not allow_negative:
            raise NegativeTime(f"t = t_cut + r·w 在 r = {bad.tolist()} 处非正，ε 过大")
        logger.warning(f"NegativeTime: r = {bad.tolist()} 的单元被跳过")

    def mc_distance_curve(
        self,
        s: Scenario,
        epsilon: float,
        r_grid: Sequence[float],
        w: float = 1.0,
        eps_index: int = 0,
        n: Optional[int] = None,
        bootstrap: Optional[int] = None,
        allow_negative: bool = False,
    ) -> ProfileCurve:
        """
        蒙特卡洛 W_p 曲线，误差条由 bootstrap 给出

        一元样本按排序耦合；多元样本分批（每批 <= 2048）精确指派后合并。
        """
        if s.metric != MetricKind.WASSERSTEIN:
            raise UnsupportedCase("蒙特卡洛曲线只支持 Wasserstein 距离")
        n = n or s.mc_paths
        bootstrap = bootstrap or self.bootstrap_resamples
        s_eps = scenarios.with_epsilon(s, epsilon)
        dec = self.decomposition(s)
        sched = self.schedule(s, epsilon, w, dec)
        r_grid = np.asarray(r_grid, dtype=float)
        times = np.array([sched.time_at(float(r)) for r in r_grid])
        self._check_times(times, r_grid, allow_negative)

        valid = np.flatnonzero(times > 0)
        samples = scenarios.noise_samples(s_eps, times[valid], n, key=(eps_index,), threads=self.threads)
        reference = scenarios.limit_samples(s_eps, n, key=(eps_index,), threads=self.threads)

        measured = np.full(len(r_grid), np.nan)
        stderr = np.full(len(r_grid), np.nan)
        theoretical = np.full(len(r_grid), np.nan)
        flags = [NEGATIVE_TIME] * len(r_grid)

        def cell(j: int) -> Tuple[float, float]:
            rng = stream(s.seed, BOOTSTRAP_KEY, eps_index, int(valid[j]))
            return _wp_with_bootstrap(samples[j], reference, s.p, bootstrap, rng)

        results = parallel_map(cell, list(range(valid.size)), self.threads)
        for j, (value, error) in zip(valid, results):
            t = float(times[j])
            measured[j], stderr[j] = value, error
            theoretical[j] = self._profile_value(s, dec, spectral.dominant_trajectory(dec, t), float(r_grid[j]), w)
            flags[j] = ""
        return ProfileCurve(
            r_grid, theoretical, s.metric_tag, w,
            measured=measured, stderr=stderr, epsilon=epsilon,
            schedule=sched, times=times, flags=tuple(flags),
        )

    # ------------------------------------------------------------ 分类与报告

    def _omega_distances(self, s: Scenario, samples: np.ndarray, rho: float) -> np.ndarray:
        """v ↦ d(ρv + Z, Z) 在 ω(x) 样本上的取值"""
        if s.metric == MetricKind.WASSERSTEIN:
            return rho * np.linalg.norm(samples, axis=1)
        Z = s.limit_law
        if isinstance(Z, StableLawDescriptor):
            return np.array([metrics.tv_stable(Z.shifted(rho * float(v[0])), Z) for v in samples])
        if Z.is_degenerate:
            raise NumericalError("极限分布协方差奇异，无法计算 TV 常值判据")
        return np.array([metrics.profile_tv(1.0, 1.0, rho * v, Z, 1, 0.0) for v in samples])

    def cutoff_classification(
        self,
        s: Scenario,
        rho_grid: Sequence[float] = DEFAULT_RHO_GRID,
        tol: float = DEFAULT_TOL,
        resolution: int = 64,
        envelope_r: Sequence[float] = DEFAULT_ENVELOPE_R,
        w: float = 1.0,
    ) -> CutoffReport:
        """
        profile / window-only 分类

        对每个 ρ 计算 ω(x) 上 d(ρv + Z, Z) 的极差，取 ρ 上的最大值为 spread；
        spread <= tol 时为 profile，否则为 window-only 并给出 liminf/limsup 包络。
        """
        if any(rho <= 0 for rho in rho_grid):
            raise InadmissibleRange("ρ 必须为正")
        dec = self.decomposition(s)
        omega = spectral.omega_limit_set(dec, resolution)
        samples = np.asarray(omega.samples)

        spread, rho_at_max = -1.0, float(rho_grid[0])
        v_check = v_hat = samples[0]
        for rho in rho_grid:
            values = self._omega_distances(s, samples, float(rho))
            current = float(values.max() - values.min())
            if current > spread:
                spread, rho_at_max = current, float(rho)
                v_check, v_hat = samples[int(np.argmin(values))], samples[int(np.argmax(values))]

        classification = CutoffClass.PROFILE if spread <= tol else CutoffClass.WINDOW_ONLY
        report = CutoffReport(
            scenario=s.name,
            metric=s.metric_tag,
            classification=classification,
            spread=max(spread, 0.0),
            tolerance=tol,
            rho_at_max=rho_at_max,
            v_check=np.array(v_check),
            v_hat=np.array(v_hat),
        )
        if classification == CutoffClass.WINDOW_ONLY:
            r_values = np.asarray(envelope_r, dtype=float)
            low, high = [], []
            for r in r_values:
                values = np.array([self._profile_value(s, dec, v, float(r), w) for v in samples])
                low.append(values.min())
                high.append(values.max())
            report.envelope_r = r_values
            report.liminf_profile = np.array(low)
            report.limsup_profile = np.array(high)
        logger.info(f"{s.name}: {classification.value} (spread={report.spread:.3e}, ω={omega.kind.value})")
        return report

    def convergence_report(
        self,
        s: Scenario,
        eps_list: Sequence[float],
        r_grid: Sequence[float],
        w: float = 1.0,
        rho_grid: Sequence[float] = DEFAULT_RHO_GRID,
        tol: float = DEFAULT_TOL,
    ) -> CutoffReport:
        """
        多个 ε 的收敛报告

        逐 ε 计算 sup_r |measured − theoretical|，检查其单调下降（蒙特卡洛允许一次逆序），
        NegativeTime 单元被标记而不中断。
        """
        eps_list = [float(e) for e in eps_list]
        if any(a <= b for a, b in zip(eps_list, eps_list[1:])):
            raise InadmissibleRange(f"ε 列表必须严格递减: {eps_list}")

        report = self.cutoff_classification(s, rho_grid, tol, w=w)
        for index, epsilon in enumerate(eps_list):
            curve = self.distance_curve(s, epsilon, r_grid, w, allow_negative=True, eps_index=index)
            report.curves.append(curve)
            report.sup_gaps[epsilon] = curve.sup_gap
            report.negative_time_cells.extend(
                (epsilon, float(r)) for r, flag in zip(curve.r_grid, curve.flags) if flag == NEGATIVE_TIME
            )

        gaps = [g for g in report.sup_gaps.values() if np.isfinite(g)]
        report.inversions = sum(1 for a, b in zip(gaps, gaps[1:]) if b > a + GAP_FLOOR)
        allowed = 1 if s.evaluation == EvaluationKind.MONTE_CARLO else 0
        report.monotone = report.inversions <= allowed
        if not report.monotone:
            logger.warning(f"{s.name}: sup-gap 非单调下降 ({report.inversions} 次逆序)")
        return report

    # ------------------------------------------------------------ 验证

    def verify(self, s: Scenario, w: float = 1.0) -> List[CheckResult]:
        """
        单场景验证套件

        Returns:
            检查结果列表
        """
        checks: List[CheckResult] = []
        dec = self.decomposition(s)

        t0, res_t0, res_2t0 = spectral.residual_threshold_time(s.drift, s.asymptotic_datum)
        checks.append(CheckResult("hg_residual", res_t0, 0.0, 1e-6, res_t0 <= 1e-6, f"T0={t0:g}"))
        rate_ok = res_2t0 <= 0.5 * res_t0 or res_2t0 <= 1e-12
        checks.append(CheckResult("hg_residual_decay", res_2t0, 0.5 * res_t0, 0.0, rate_ok, f"2T0={2 * t0:g}"))

        passed, table = karamata_check(s.scale)
        worst = float(table["deviation"].max())
        checks.append(CheckResult("karamata", worst, 0.0, 1e-3, passed, s.scale.tag))

        exact = s.evaluation == EvaluationKind.EXACT
        if exact:
            t_far = 40.0 / s.drift.spectral_margin
            far, _ = self._exact_cell(s, t_far, renormalize=True)
            checks.append(CheckResult("limit_distance", far, 0.0, 1e-3, far <= 1e-3, f"t={t_far:g}"))

            curve = self.distance_curve(s, 1e-6, [-8.0, 0.0, 8.0], w)
            low, mid, high = curve.measured
            checks.append(CheckResult("profile_right_end", high, 0.0, 1e-3, high <= 1e-3, "r=+8"))
            if s.metric == MetricKind.TV:
                checks.append(CheckResult("profile_left_end", low, 1.0, 1e-3, low >= 1.0 - 1e-3, "r=-8"))
                raw = self.distance_curve(s, 1e-6, [0.0], w, renormalize=False).measured[0]
                checks.append(CheckResult("tv_zero_homogeneity", raw, mid, 1e-12, abs(raw - mid) <= 1e-12))
            else:
                checks.append(CheckResult("wp_left_divergence", low, 10.0 * mid, 0.0, low > 10.0 * mid, "r=-8"))

            report = self.convergence_report(s, [1e-2, 1e-3, 1e-4], np.arange(-3.0, 3.5, 1.0), w)
            checks.append(CheckResult("sup_gap_monotone", float(report.inversions), 0.0, 0.0, bool(report.monotone)))
            if dec.block_size == 1:
                # ℓ >= 2 时前因子的收敛只有 ln(t*)/t* 阶
                last = list(report.sup_gaps.values())[-1]
                checks.append(CheckResult("sup_gap_small", last, 0.0, 5e-2, last <= 5e-2, "ε=1e-4"))
        else:
            eps = s.epsilon
            curves = [self.distance_curve(s, e, [0.0], w, eps_index=i) for i, e in enumerate((eps, eps / 10.0))]
            gaps = [float(c.gaps[0]) for c in curves]
            sigma = max(float(c.stderr[0]) for c in curves)
            ok = gaps[1] <= gaps[0] + 3.0 * sigma
            checks.append(CheckResult("mc_gap_decreasing", gaps[1], gaps[0], 3.0 * sigma, ok, "r=0"))

        report = self.cutoff_classification(s)
        consistent, detail = classification_consistent(report)
        checks.append(CheckResult("classification", report.spread, 0.0, report.tolerance, consistent, detail))
        for check in checks:
            log = logger.info if check.passed else logger.warning
            log(f"[verify] {check.name}: value={check.value:.6g} passed={check.passed}")
        return checks


def _wp_batches(a: np.ndarray, b: np.ndarray, p: float) -> np.ndarray:
    """多元样本分批精确指派，返回各批的 W_p^p"""
    n = a.shape[0]
    edges = list(range(0, n, ASSIGNMENT_BATCH)) + [n]
    return np.array([
        metrics.wp_empirical(a[lo:hi], b[lo:hi], p) ** p for lo, hi in zip(edges[:-1], edges[1:]) if hi - lo >= 2
    ])


def _wp_with_bootstrap(samples: np.ndarray, reference: np.ndarray, p: float, resamples: int, rng: np.random.Generator) -> Tuple[float, float]:
    """经验 W_p 与 bootstrap 标准误"""
    if samples.shape[1] == 1:
        a, b = samples[:, 0], reference[:, 0]
        value = metrics.wp_empirical(a, b, p)
        n = a.size
        boot = np.empty(resamples)
        for i in range(resamples):
            boot[i] = metrics.wp_empirical(a[rng.integers(0, n, n)], b[rng.integers(0, n, n)], p)
        return value, float(np.std(boot, ddof=1))

    batches = _wp_batches(samples, reference, p)
    value = float(np.mean(batches) ** (1.0 / p))
    if batches.size < 2:
        return value, math.nan
    # delta 方法：d(m^{1/p}) = m^{1/p−1}/p · dm
    se_mean = float(np.std(batches, ddof=1) / math.sqrt(batches.size))
    return value, float(np.mean(batches) ** (1.0 / p - 1.0) / p * se_mean)


def classification_consistent(report: CutoffReport) -> Tuple[bool, str]:
    """
    检查分类结论与其依据是否一致

    profile 要求 spread <= 容差；window-only 要求 spread > 容差，
    且包络满足 liminf <= limsup 并在至少一个 r 上严格分开。
    """
    if report.classification == CutoffClass.PROFILE:
        return bool(report.spread <= report.tolerance), "profile"
    if report.classification != CutoffClass.WINDOW_ONLY:
        return False, "unclassified"
    if report.spread <= report.tolerance:
        return False, "window-only: spread within tolerance"
    if report.liminf_profile is None or report.limsup_profile is None:
        return False, "window-only: missing envelope"
    low = np.asarray(report.liminf_profile, dtype=float)
    high = np.asarray(report.limsup_profile, dtype=float)
    if np.any(low > high + ENVELOPE_SLACK):
        return False, "window-only: liminf above limsup"
    if not np.any(low < high - ENVELOPE_SLACK):
        return False, "window-only: envelope collapsed"
    return True, "window-only"


def karamata_check(
    sigma: ScaleFunction,
    r_list: Sequence[float] = (-1.0, 1.0, 5.0),
    t_max: float = 1e6,
    c: float = 1e-2,
    tol: float = 1e-3,
) -> Tuple[bool, pd.DataFrame]:
    """
    尺度函数慢变检查

    σ_t/σ_{t+r} 在 t = t_max 处与 1 的偏差不超过 tol（双侧 r），且 σ_t·e^{−ct} → 0。

    Returns:
        (是否通过, 比值表)
    """
    rows = []
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        base = float(sigma(t_max))
        for r in r_list:
            ratio = base / float(sigma(t_max + r))
            deviation = abs(ratio - 1.0) if np.isfinite(ratio) else math.inf
            rows.append({"check": "ratio", "r": float(r), "t": t_max, "value": ratio, "deviation": deviation, "passed": deviation <= tol})
        growth = base * math.exp(-c * t_max) if np.isfinite(base) else math.inf
    rows.append({
        "check": "subexponential", "r": math.nan, "t": t_max, "value": growth,
        "deviation": growth, "passed": bool(np.isfinite(growth) and growth <= tol),
    })
    table = pd.DataFrame(rows)
    passed = bool(table["passed"].all())
    if not passed:
        logger.warning(f"慢变检查失败: σ = {sigma.tag}")
    return passed, table


# 全局引擎实例
_engine: Optional[CutoffEngine] = None


def get_engine() -> CutoffEngine:
    """
    获取引擎实例（单例模式）

    Returns:
        引擎实例
    """
    global _engine
    if _engine is None:
        _engine = CutoffEngine()
    return _engine
