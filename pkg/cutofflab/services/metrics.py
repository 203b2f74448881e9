"""
概率距离服务模块

精确与经验的全变差 (TV) 与 Wasserstein-p 距离，以及极限截断轮廓：
- 高斯分布间 TV（等协方差闭式、一元交点分段积分）
- 网格密度 TV（Scheffé）与特征函数 FFT 反演
- Wasserstein：平移可加、高斯精确值、稳定分布精确值、经验估计
- TV 与 W_p 极限轮廓
"""

import math
from typing import Optional, Tuple

import numpy as np
from scipy import fft as sp_fft
from scipy import integrate, linalg, special
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from cutofflab.models.laws import EmpiricalLaw, GaussianLaw, LawDescriptor, StableLawDescriptor
from cutofflab.models.scenario import MetricKind
from cutofflab.utils.errors import (
    GridMismatch,
    InadmissibleRange,
    MomentViolation,
    NegativeMass,
    NotNormalized,
    NyquistViolation,
    SingularLimitLaw,
    TooLargeForExact,
    UnequalCounts,
    UnsupportedCase,
)
from cutofflab.utils.logger import get_logger
from cutofflab.utils.quadrature import quad_checked

logger = get_logger(__name__)

EQUAL_COV_TOL = 1e-12
NORMALIZATION_TOL = 1e-6
NEGATIVE_MASS_TOL = 1e-4
CF_NYQUIST_TOL = 1e-10
MAX_EXACT_ASSIGNMENT = 2048
HERMITE_NODES = 80
SQRT2 = math.sqrt(2.0)


# ============================================
# 全变差
# ============================================

def _tv_from_mahalanobis(delta: float) -> float:
    """2Φ(δ/2) − 1 = erf(δ/(2√2))"""
    return float(special.erf(delta / (2.0 * SQRT2)))


def _same_covariance(c1: np.ndarray, c2: np.ndarray) -> bool:
    scale = max(1.0, float(np.max(np.abs(c1))), float(np.max(np.abs(c2))))
    return float(np.max(np.abs(c1 - c2))) <= EQUAL_COV_TOL * scale


def mahalanobis(covariance: np.ndarray, shift: np.ndarray) -> float:
    """
    ‖C^{-1/2}·shift‖；shift 不在 C 的值域内时返回 inf

    Args:
        covariance: 半正定矩阵
        shift: 向量

    Returns:
        马氏距离
    """
    shift = np.atleast_1d(np.asarray(shift, dtype=float))
    values, vectors = linalg.eigh(np.atleast_2d(covariance))
    coords = vectors.T @ shift
    scale = max(1.0, float(np.max(np.abs(values))))
    positive = values > EQUAL_COV_TOL * scale
    if np.any(np.abs(coords[~positive]) > 1e-12 * max(1.0, float(np.linalg.norm(shift)))):
        return math.inf
    return float(np.sqrt(np.sum(coords[positive] ** 2 / values[positive])))


def _normal_interval_mass(lo: float, hi: float) -> float:
    """P(lo < G < hi)，G ~ N(0,1)，两侧尾部均保持相对精度"""
    if lo >= 0.0:
        return float(special.ndtr(-lo) - special.ndtr(-hi))
    if hi <= 0.0:
        return float(special.ndtr(hi) - special.ndtr(lo))
    return float(1.0 - special.ndtr(lo) - special.ndtr(-hi))


def _crossings(a: float, b: float) -> Tuple[float, ...]:
    """N(a, b²) 与 N(0,1) 密度交点：(b²−1)z² + 2az − a² − 2b²·ln b = 0"""
    qa = b * b - 1.0
    qb = 2.0 * a
    qc = -a * a - 2.0 * b * b * math.log(b)
    if qa == 0.0:
        return (-qc / qb,) if qb != 0.0 else ()
    disc = qb * qb - 4.0 * qa * qc
    root = math.sqrt(max(disc, 0.0))
    if qb == 0.0:
        z = root / (2.0 * abs(qa))
        return (-z, z)
    q = -0.5 * (qb + math.copysign(root, qb))
    return tuple(sorted((q / qa, qc / q)))


def _tv_univariate(m1: float, v1: float, m2: float, v2: float) -> float:
    s1, s2 = math.sqrt(max(v1, 0.0)), math.sqrt(max(v2, 0.0))
    if s1 == 0.0 or s2 == 0.0:
        if s1 == 0.0 and s2 == 0.0:
            return 0.0 if m1 == m2 else 1.0
        return 1.0
    if abs(s1 - s2) <= EQUAL_COV_TOL * max(s1, s2):
        return _tv_from_mahalanobis(abs(m1 - m2) / s2)

    # 相对 g2 标准化：比较 N(a, b²) 与 N(0,1)
    a = (m1 - m2) / s2
    b = s1 / s2
    edges = (-math.inf,) + _crossings(a, b) + (math.inf,)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        p1 = _normal_interval_mass((lo - a) / b, (hi - a) / b)
        p2 = _normal_interval_mass(lo, hi)
        total += abs(p1 - p2)
    return float(min(1.0, 0.5 * total))


def tv_gaussian(g1: GaussianLaw, g2: GaussianLaw) -> float:
    """
    高斯分布间的全变差距离

    等协方差：2Φ(‖C^{-1/2}(m1−m2)‖/2) − 1；一元不等方差：Scheffé 积分
    (1/2)∫|f1 − f2| 在密度交点处分段，各段由正态分布函数精确求值。

    Args:
        g1: 高斯分布
        g2: 高斯分布

    Returns:
        TV ∈ [0,1]
    """
    if g1.dim != g2.dim:
        raise InadmissibleRange(f"维数不一致: {g1.dim} vs {g2.dim}")
    if g1.dim == 1:
        return _tv_univariate(g1.mean[0], g1.variance, g2.mean[0], g2.variance)
    if not _same_covariance(g1.covariance, g2.covariance):
        raise UnsupportedCase("多元不等协方差高斯的 TV 没有精确路径，请改用密度网格或蒙特卡洛")
    delta = mahalanobis(g2.covariance, g1.mean - g2.mean)
    return 1.0 if math.isinf(delta) else _tv_from_mahalanobis(delta)


def tv_from_densities(grid, f1, f2) -> float:
    """
    网格密度的全变差 (1/2)∫|f1 − f2|（梯形公式）

    Args:
        grid: 严格递增网格
        f1: 网格上的密度
        f2: 网格上的密度

    Returns:
        TV ∈ [0,1]
    """
    grid = np.asarray(grid, dtype=float)
    f1 = np.asarray(f1, dtype=float)
    f2 = np.asarray(f2, dtype=float)
    if grid.ndim != 1 or f1.shape != grid.shape or f2.shape != grid.shape:
        raise GridMismatch(f"密度与网格形状不一致: {grid.shape}, {f1.shape}, {f2.shape}")
    if grid.size < 2 or np.any(np.diff(grid) <= 0):
        raise GridMismatch("网格必须严格递增且至少两个点")
    for name, f in (("f1", f1), ("f2", f2)):
        if np.min(f) < -1e-12:
            raise NotNormalized(f"{name} 含负值")
        mass = float(integrate.trapezoid(f, grid))
        if abs(mass - 1.0) > NORMALIZATION_TOL:
            raise NotNormalized(f"{name} 在网格上的积分为 {mass:.9f}")

    # 端点密度反映截断误差
    tail = 0.5 * (grid[-1] - grid[0]) * max(f1[0], f1[-1], f2[0], f2[-1])
    logger.debug(f"tv_from_densities: n={grid.size}, 端点尾部量级 {tail:.3e}")
    value = 0.5 * float(integrate.trapezoid(np.abs(f1 - f2), grid))
    return float(min(1.0, max(0.0, value)))


def density_from_cf(law: StableLawDescriptor, grid) -> np.ndarray:
    """
    特征函数离散 Fourier 反演

    频率 z_j = (j − N/2)·dz，dz = 2π/(N·h)，最高频率 π/h；
    f(x_k) = (dz/2π)·(−1)^k·FFT[ψ(z_j)·e^{−i z_j x_0}]_k。

    Args:
        law: 稳定分布
        grid: 关于 0 对称的均匀网格（偶数个点）

    Returns:
        网格上的密度（截断负值并归一化）
    """
    grid = np.asarray(grid, dtype=float)
    n = grid.size
    if grid.ndim != 1 or n < 4 or n % 2:
        raise GridMismatch("网格需为一维且点数为偶数 (>= 4)")
    h = float(grid[1] - grid[0])
    if h <= 0 or np.max(np.abs(np.diff(grid) - h)) > 1e-9 * h:
        raise GridMismatch("网格必须均匀且递增")
    if abs(grid[0] + grid[-1]) > 1e-9 * max(1.0, abs(grid[0])):
        raise GridMismatch("网格必须关于 0 对称")

    z_max = math.pi / h
    edge = float(np.abs(law.cf(np.array([z_max])))[0])
    if edge > CF_NYQUIST_TOL:
        raise NyquistViolation(f"|ψ(π/h)| = {edge:.3e} > {CF_NYQUIST_TOL:g}，请减小网格步长 h={h:.3g}")

    dz = 2.0 * math.pi / (n * h)
    z = (np.arange(n) - n // 2) * dz
    g = law.cf(z) * np.exp(-1j * z * grid[0])
    signs = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    density = (dz / (2.0 * math.pi)) * signs * np.real(sp_fft.fft(g))

    negative = float(np.sum(np.clip(-density, 0.0, None)) * h)
    if negative > NEGATIVE_MASS_TOL:
        raise NegativeMass(f"截断负值移除质量 {negative:.3e} > {NEGATIVE_MASS_TOL:g}")
    density = np.clip(density, 0.0, None)
    mass = float(integrate.trapezoid(density, grid))
    if abs(mass - 1.0) > NORMALIZATION_TOL:
        raise NotNormalized(f"归一化修正 {abs(mass - 1.0):.3e} 超过 {NORMALIZATION_TOL:g}")
    return density / mass


def stable_grid(*laws: StableLawDescriptor, width: float = 2000.0, per_scale: int = 40, max_points: int = 1 << 22) -> np.ndarray:
    """
    为若干稳定分布选择对称反演网格

    半宽取 max|loc| + width·max(s)，步长不超过 min(s)/per_scale 且满足 Nyquist 条件。
    """
    s_min = min(law.sigma for law in laws)
    s_max = max(law.sigma for law in laws)
    alpha = min(law.alpha for law in laws)
    c_min = min(law.scale_c for law in laws)
    half = max(abs(law.loc) for law in laws) + width * s_max
    # c·(π/h)^α >= 30 ⇒ |ψ(π/h)| <= e^{-30}
    h_nyquist = math.pi / (30.0 / c_min) ** (1.0 / alpha)
    h = min(s_min / per_scale, h_nyquist)
    n = 1 << int(math.ceil(math.log2(2.0 * half / h)))
    n = min(n, max_points)
    h = 2.0 * half / n
    if h > h_nyquist:
        raise NyquistViolation(f"网格点数上限 {max_points} 不足以满足 Nyquist 条件")
    return (np.arange(n) - n // 2 + 0.5) * h


def tv_stable(l1: StableLawDescriptor, l2: StableLawDescriptor) -> float:
    """两个对称稳定分布（可平移）之间的 TV，经特征函数反演密度计算"""
    if l1.alpha != l2.alpha:
        raise UnsupportedCase("稳定指数不同的分布之间不计算 TV")
    grid = stable_grid(l1, l2)
    return tv_from_densities(grid, density_from_cf(l1, grid), density_from_cf(l2, grid))


# ============================================
# Wasserstein
# ============================================

def wp_exact(law: LawDescriptor, shift, p: float) -> float:
    """
    平移可加性 W_p(shift + Z, Z) = ‖shift‖

    Args:
        law: Z 的分布
        shift: 平移向量
        p: 阶数 >= 1

    Returns:
        ‖shift‖
    """
    if p < 1:
        raise InadmissibleRange(f"Wasserstein 阶数 p 必须 >= 1, 当前为 {p}")
    if isinstance(law, StableLawDescriptor) and p >= law.alpha:
        raise MomentViolation(f"稳定分布 α={law.alpha} 不存在 p={p} 阶矩")
    return float(np.linalg.norm(np.atleast_1d(np.asarray(shift, dtype=float))))


def wp_empirical(s1, s2, p: float) -> float:
    """
    经验 Wasserstein-p

    一元：排序单调耦合；多元：精确最小费用指派（n <= 2048）。
    """
    if p < 1:
        raise InadmissibleRange(f"Wasserstein 阶数 p 必须 >= 1, 当前为 {p}")
    a = np.asarray(s1, dtype=float)
    b = np.asarray(s2, dtype=float)
    if a.ndim == 2 and a.shape[1] == 1:
        a = a[:, 0]
    if b.ndim == 2 and b.shape[1] == 1:
        b = b[:, 0]
    if a.shape[0] != b.shape[0]:
        raise UnequalCounts(f"样本数不一致: {a.shape[0]} vs {b.shape[0]}")
    if a.ndim != b.ndim:
        raise GridMismatch("两组样本维数不一致")

    if a.ndim == 1:
        diff = np.abs(np.sort(a) - np.sort(b))
        return float(np.mean(diff ** p) ** (1.0 / p))

    n = a.shape[0]
    if n > MAX_EXACT_ASSIGNMENT:
        raise TooLargeForExact(f"多元精确指派要求 n <= {MAX_EXACT_ASSIGNMENT}, 当前为 {n}")
    cost = cdist(a, b) ** p
    rows, cols = linear_sum_assignment(cost)
    return float(np.mean(cost[rows, cols]) ** (1.0 / p))


def gaussian_norm_moment(dim: int, p: float) -> float:
    """(E‖G‖^p)^{1/p}，G ~ N(0, I_dim)"""
    log_moment = 0.5 * p * math.log(2.0) + special.gammaln(0.5 * (dim + p)) - special.gammaln(0.5 * dim)
    return float(math.exp(log_moment / p))


def _gaussian_abs_moment(a: float, b: float, p: float) -> float:
    """(E|a + b·G|^p)^{1/p}"""
    if b == 0.0:
        return abs(a)
    if a == 0.0:
        return abs(b) * gaussian_norm_moment(1, p)
    kappa = b / a
    if abs(kappa) < 0.1:
        # 折点 −a/b 远在尾部，(1 + κG)^p 在主体内光滑
        nodes, weights = np.polynomial.hermite_e.hermegauss(HERMITE_NODES)
        values = np.abs(1.0 + kappa * nodes) ** p
        mean = float(np.dot(weights, values) / math.sqrt(2.0 * math.pi))
        return abs(a) * mean ** (1.0 / p)

    kink = -a / b

    def integrand(g):
        return abs(a + b * g) ** p * math.exp(-0.5 * g * g) / math.sqrt(2.0 * math.pi)

    left = quad_checked(integrand, -math.inf, kink, epsabs=1e-13, epsrel=1e-12)
    right = quad_checked(integrand, kink, math.inf, epsabs=1e-13, epsrel=1e-12)
    return (left + right) ** (1.0 / p)


def wp_gaussian(g1: GaussianLaw, g2: GaussianLaw, p: float) -> Tuple[float, float]:
    """
    高斯分布间的 W_p

    一元为分位数耦合下的精确值；多元等协方差为 ‖Δm‖；多元 p=2 为 Bures 公式；
    其余多元情形返回区间 [‖Δm‖, ‖Δm‖ + ‖√C1 − √C2‖₂·(E‖G‖^p)^{1/p}] 的中点。

    Returns:
        (值, 误差界)
    """
    if p < 1:
        raise InadmissibleRange(f"Wasserstein 阶数 p 必须 >= 1, 当前为 {p}")
    if g1.dim != g2.dim:
        raise InadmissibleRange(f"维数不一致: {g1.dim} vs {g2.dim}")
    dm = g1.mean - g2.mean
    if g1.dim == 1:
        s1 = math.sqrt(max(g1.variance, 0.0))
        s2 = math.sqrt(max(g2.variance, 0.0))
        return _gaussian_abs_moment(float(dm[0]), s1 - s2, p), 0.0

    gap = float(np.linalg.norm(dm))
    if _same_covariance(g1.covariance, g2.covariance):
        return gap, 0.0
    root1 = np.real(linalg.sqrtm(g1.covariance))
    root2 = np.real(linalg.sqrtm(g2.covariance))
    if p == 2.0:
        cross = np.real(linalg.sqrtm(root2 @ g1.covariance @ root2))
        bures = float(np.trace(g1.covariance + g2.covariance - 2.0 * cross))
        return math.sqrt(gap ** 2 + max(bures, 0.0)), 0.0
    upper = gap + float(np.linalg.norm(root1 - root2, 2)) * gaussian_norm_moment(g1.dim, p)
    return 0.5 * (gap + upper), 0.5 * (upper - gap)


def stable_absolute_moment(alpha: float, scale_c: float, p: float, loc: float = 0.0) -> float:
    """
    E|loc + X|^p，X 的特征函数为 exp(−scale_c·|z|^α)，0 < p < α

    E|Y|^p = C_p∫_0^∞ (1 − Re ψ_Y(z)) z^{−1−p} dz，C_p = 2Γ(p+1)sin(πp/2)/π；
    分解为 |loc|^p 与 C_p∫ cos(loc·z)(1 − e^{−c z^α}) z^{−1−p} dz。
    """
    if not 0 < p < alpha:
        raise MomentViolation(f"稳定分布 α={alpha} 不存在 p={p} 阶矩")
    if scale_c == 0.0:
        return abs(loc) ** p
    c_p = 2.0 * special.gamma(p + 1.0) * math.sin(0.5 * math.pi * p) / math.pi

    if loc == 0.0:
        closed = 2.0 * special.gamma(p) * math.sin(0.5 * math.pi * p) * special.gamma(1.0 - p / alpha) / math.pi
        return float(closed * scale_c ** (p / alpha))

    def weight(z):
        return -math.expm1(-scale_c * z ** alpha) * z ** (-1.0 - p)

    split = 1.0 / abs(loc)
    head = quad_checked(lambda z: math.cos(loc * z) * weight(z), 0.0, split, epsabs=1e-12, epsrel=1e-10)
    tail = quad_checked(weight, split, math.inf, weight="cos", wvar=abs(loc), epsabs=1e-12)
    return float(abs(loc) ** p + c_p * (head + tail))


def wp_stable(l1: StableLawDescriptor, l2: StableLawDescriptor, p: float) -> float:
    """
    两个对称 α-稳定分布间的精确 W_p（同一单位稳定变量的单调耦合）

    W_p = (E|Δloc + (s1 − s2)·L|^p)^{1/p}，s = scale_c^{1/α}
    """
    if l1.alpha != l2.alpha:
        raise UnsupportedCase("稳定指数不同的分布之间不计算 W_p")
    if p < 1:
        raise InadmissibleRange(f"Wasserstein 阶数 p 必须 >= 1, 当前为 {p}")
    if p >= l1.alpha:
        raise MomentViolation(f"稳定分布 α={l1.alpha} 不存在 p={p} 阶矩")
    d_loc = l1.loc - l2.loc
    d_sigma = abs(l1.sigma - l2.sigma)
    if d_sigma == 0.0:
        return abs(d_loc)
    moment = stable_absolute_moment(l1.alpha, d_sigma ** l1.alpha, p, d_loc)
    return float(moment ** (1.0 / p))


def wp_shift_scaling_bound(v1, v2, M1, M2, p: float, norm_moment: float) -> float:
    """W_p(v1 + M1·X, v2 + M2·X) 的上界 ‖v1 − v2‖ + ‖M1 − M2‖₂·(E‖X‖^p)^{1/p}"""
    shift = np.linalg.norm(np.atleast_1d(np.asarray(v1, dtype=float) - np.asarray(v2, dtype=float)))
    spread = np.linalg.norm(np.atleast_2d(np.asarray(M1, dtype=float) - np.asarray(M2, dtype=float)), 2)
    return float(shift + spread * norm_moment)


# ============================================
# 散度界
# ============================================

def kl_gaussian(g1: GaussianLaw, g2: GaussianLaw) -> float:
    """KL(g1 ‖ g2)，g2 协方差需非奇异"""
    if g2.is_degenerate:
        raise SingularLimitLaw("KL 散度要求参考分布协方差非奇异")
    if g1.is_degenerate:
        return math.inf
    k = g1.dim
    factor = linalg.cho_factor(g2.covariance)
    dm = g1.mean - g2.mean
    trace = float(np.trace(linalg.cho_solve(factor, g1.covariance)))
    quad = float(dm @ linalg.cho_solve(factor, dm))
    _, logdet1 = np.linalg.slogdet(g1.covariance)
    _, logdet2 = np.linalg.slogdet(g2.covariance)
    return 0.5 * (trace + quad - k + logdet2 - logdet1)


def tv_pinsker_bound(g1: GaussianLaw, g2: GaussianLaw) -> float:
    """TV <= √(KL/2)，截断到 1"""
    kl = kl_gaussian(g1, g2)
    return float(min(1.0, math.sqrt(max(kl, 0.0) / 2.0)))


# ============================================
# 极限轮廓
# ============================================

def _profile_factor(lam: float, ell: int, w: float, r: float) -> float:
    """λ^{1−ℓ}·e^{−λrw}（上溢时返回 inf）"""
    exponent = -lam * r * w + (1 - ell) * math.log(lam)
    return math.inf if exponent > 700.0 else math.exp(exponent)


def profile_tv(lam: float, w: float, v, Z, ell: int, r: float) -> float:
    """
    TV 极限轮廓

    一元：erf(λ^{1−ℓ}e^{−λrw}|x|/(2√(2·R0)))，即 (2/√(2π))∫_0^{e^{−λrw}|x|/(2√R0)} e^{−y²/2} dy；
    多元：d_TV(λ^{1−ℓ}e^{−λrw}v + Z, Z)。

    Args:
        lam: 速率 λ
        w: 窗口宽度
        v: 标量 x 或 ω(x) 中的向量 v
        Z: 方差 R0（一元）或极限分布
        ell: Jordan 块长度
        r: 窗口位置

    Returns:
        轮廓值 ∈ [0,1]
    """
    factor = _profile_factor(lam, ell, w, r)
    if isinstance(Z, StableLawDescriptor):
        shift = factor * float(np.ravel(v)[0])
        if math.isinf(shift):
            return 1.0
        return tv_stable(Z.shifted(shift), Z)
    if not isinstance(Z, GaussianLaw):
        R0 = float(Z)
        if not R0 > 0:
            raise SingularLimitLaw(f"极限方差 R0 必须为正, 当前为 {R0}")
        Z = GaussianLaw.univariate(0.0, R0)
    if Z.is_degenerate:
        raise SingularLimitLaw("极限分布协方差奇异")
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if v.size != Z.dim:
        raise InadmissibleRange(f"v 维数 {v.size} 与 Z 维数 {Z.dim} 不一致")
    delta = factor * mahalanobis(Z.covariance, v) if factor > 0 else 0.0
    if math.isinf(delta) or math.isnan(delta):
        return 1.0
    return _tv_from_mahalanobis(delta)


def profile_wp(lam: float, ell: int, w: float, v, r: float, p: float = 1.0) -> float:
    """
    W_p 极限轮廓 λ^{1−ℓ}·e^{−λrw}·‖v‖（与 p 无关）
    """
    if p < 1:
        raise InadmissibleRange(f"Wasserstein 阶数 p 必须 >= 1, 当前为 {p}")
    norm = float(np.linalg.norm(np.atleast_1d(np.asarray(v, dtype=float))))
    return _profile_factor(lam, ell, w, r) * norm


# ============================================
# 分发
# ============================================

def distance(law1: LawDescriptor, law2: LawDescriptor, metric: MetricKind, p: float = 1.0) -> Tuple[float, float]:
    """
    按距离类型与分布类型分发

    Returns:
        (距离, 误差界)
    """
    if metric == MetricKind.TV:
        if isinstance(law1, GaussianLaw) and isinstance(law2, GaussianLaw):
            return tv_gaussian(law1, law2), 0.0
        if isinstance(law1, StableLawDescriptor) and isinstance(law2, StableLawDescriptor):
            return tv_stable(law1, law2), 0.0
        raise UnsupportedCase("TV 仅在精确分布或特征函数密度路径上计算")

    if isinstance(law1, GaussianLaw) and isinstance(law2, GaussianLaw):
        return wp_gaussian(law1, law2, p)
    if isinstance(law1, StableLawDescriptor) and isinstance(law2, StableLawDescriptor):
        return wp_stable(law1, law2, p), 0.0
    if isinstance(law1, EmpiricalLaw) and isinstance(law2, EmpiricalLaw):
        return wp_empirical(law1.samples, law2.samples, p), math.nan
    raise UnsupportedCase(f"不支持的分布组合: {type(law1).__name__} vs {type(law2).__name__}")
