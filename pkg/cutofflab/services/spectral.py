"""
谱分析服务模块

漂移矩阵的谱/Jordan 结构分析与全部确定性渐近量：
- Routh-Hurwitz 稳定性校验
- 主导分解 (λ, ℓ, m*, θ_j, v_j) 与主导轨迹 v(t;x)
- Hartman-Grobman 残差及其阈值时刻
- ω-极限集采样与分类
- 截断时间尺度与渐近前因子
"""

import math
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import linalg
from scipy.spatial.distance import pdist
from scipy.stats import qmc

from cutofflab.models.processes import ScaleFunction
from cutofflab.models.spectral import (
    CutoffSchedule,
    DominantDecomposition,
    OmegaKind,
    OmegaLimitSet,
    StableMatrix,
)
from cutofflab.utils.errors import (
    InadmissibleRange,
    InvalidEpsilon,
    IoError,
    NegativeTime,
    NotStable,
    NumericalError,
    Overflow,
    ZeroInitialDatum,
)
from cutofflab.utils.logger import get_logger

logger = get_logger(__name__)

STABILITY_TOL = 1e-10
REAL_PART_TOL = 1e-8
CLUSTER_TOL = 1e-5
EXCITED_TOL = 1e-10
CHAIN_TOL = 1e-7
ZERO_DATUM_TOL = 1e-14
RATIONAL_MAX_DENOMINATOR = 64
RATIONAL_TOL = 1e-9
# exp(709) 接近 float64 上限
MAX_EXPONENT = 700.0


# ============================================
# 稳定性与主导分解
# ============================================

def validate_stability(matrix) -> StableMatrix:
    """
    校验 −Λ 为 Routh-Hurwitz 矩阵

    Args:
        matrix: 实方阵 Λ

    Returns:
        StableMatrix，spectral_margin = min Re(μ)
    """
    entries = np.atleast_2d(np.asarray(matrix, dtype=float))
    if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
        raise InadmissibleRange(f"漂移矩阵必须为方阵, 当前形状 {entries.shape}")
    if not np.all(np.isfinite(entries)):
        raise InadmissibleRange("漂移矩阵含非有限元素")

    eigenvalues = linalg.eigvals(entries)
    margin = float(np.min(eigenvalues.real))
    if margin <= STABILITY_TOL:
        raise NotStable(f"−Λ 存在实部 >= −{STABILITY_TOL:g} 的特征值 (min Re μ = {margin:.3e})")
    return StableMatrix(entries=entries, spectral_margin=margin)


def _cluster_eigenvalues(eigenvalues: np.ndarray) -> List[Tuple[complex, int]]:
    """将数值上重合的特征值归并为 (中心, 代数重数)"""
    remaining = sorted(eigenvalues.tolist(), key=lambda z: (z.real, z.imag))
    clusters: List[List[complex]] = []
    for mu in remaining:
        for cluster in clusters:
            center = np.mean(cluster)
            if abs(mu - center) <= CLUSTER_TOL * (1.0 + abs(center)):
                cluster.append(mu)
                break
        else:
            clusters.append([mu])
    return [(complex(np.mean(c)), len(c)) for c in clusters]


def _spectral_projector(entries: np.ndarray, center: complex) -> np.ndarray:
    """
    广义特征空间上的谱投影

    复 Schur 分解将簇排到左上块，再由 Sylvester 方程 T11·Y − Y·T22 = −T12 块对角化。
    """
    n = entries.shape[0]
    radius = CLUSTER_TOL * (1.0 + abs(center))
    T, Z, k = linalg.schur(
        entries.astype(complex), output="complex", sort=lambda z: abs(z - center) <= radius
    )
    if k == n:
        return np.eye(n, dtype=complex)
    Y = linalg.solve_sylvester(T[:k, :k], -T[k:, k:], -T[:k, k:])
    block = np.zeros((n, n), dtype=complex)
    block[:k, :k] = np.eye(k)
    block[:k, k:] = -Y
    return Z @ block @ Z.conj().T


def _chain_depth(N: np.ndarray, y: np.ndarray, multiplicity: int) -> int:
    """最小的 d 使 N^d y = 0（相对容差）"""
    scale = max(1.0, float(np.linalg.norm(N, 2)))
    base = float(np.linalg.norm(y))
    z = y
    for depth in range(1, multiplicity + 1):
        z = N @ z
        if np.linalg.norm(z) <= CHAIN_TOL * base * scale ** depth:
            return depth
    return multiplicity


def dominant_decomposition(A: StableMatrix, x) -> DominantDecomposition:
    """
    计算初值 x 的主导分解

    λ 为被 x 激发的特征值中最小的实部，ℓ 为该实部上被激发的最长 Jordan 链长度；
    v_j 由 x 在对应广义特征空间上的投影确定：
    v_j = ((−1)^{ℓ−1}/(ℓ−1)!)·(Λ − μ_j)^{ℓ−1} P_j x，θ_j = −Im μ_j。

    Args:
        A: 稳定漂移矩阵
        x: 非零初值

    Returns:
        DominantDecomposition
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (A.dim,):
        raise InadmissibleRange(f"初值维数 {x.shape} 与矩阵维数 {A.dim} 不一致")
    x_norm = float(np.linalg.norm(x))
    if x_norm <= ZERO_DATUM_TOL:
        raise ZeroInitialDatum("初值 x 为零向量")

    entries = A.entries
    identity = np.eye(A.dim)
    excited = []
    for center, multiplicity in _cluster_eigenvalues(linalg.eigvals(entries)):
        y = _spectral_projector(entries, center) @ x
        if np.linalg.norm(y) <= EXCITED_TOL * x_norm:
            continue
        N = entries - center * identity
        excited.append((center, N, y, _chain_depth(N, y, multiplicity)))

    rate = min(c.real for c, _, _, _ in excited)
    dominant = [e for e in excited if abs(e[0].real - rate) < REAL_PART_TOL]
    block_size = max(d for _, _, _, d in dominant)

    factor = (-1.0) ** (block_size - 1) / math.factorial(block_size - 1)
    modes = []
    for center, N, y, depth in dominant:
        if depth != block_size:
            continue
        v = factor * (np.linalg.matrix_power(N, block_size - 1) @ y)
        theta = -center.imag
        if abs(theta) <= STABILITY_TOL:
            theta = 0.0
        modes.append((theta, v))

    thetas, vectors = _pair_modes(modes)
    matrix = np.array(vectors)
    rank = np.linalg.matrix_rank(matrix, tol=1e-10 * max(1.0, float(np.max(np.abs(matrix)))))
    if rank != len(vectors):
        logger.warning(f"主导模态向量秩亏: rank={rank}, m*={len(vectors)}")

    dec = DominantDecomposition(
        rate=float(rate),
        block_size=int(block_size),
        mode_count=len(vectors),
        angular_velocities=tuple(thetas),
        mode_vectors=matrix,
        initial_datum=x,
    )
    logger.debug(f"dominant decomposition: λ={dec.rate:.6g}, ℓ={dec.block_size}, m*={dec.mode_count}, θ={thetas}")
    return dec


def _pair_modes(modes: List[Tuple[float, np.ndarray]]) -> Tuple[List[float], List[np.ndarray]]:
    """排列模态：θ=0 在前，之后按 (θ, −θ) 成对，θ>0 在前"""
    zeros = [(th, np.real(v).astype(complex)) for th, v in modes if th == 0.0]
    positives = sorted([(th, v) for th, v in modes if th > 0.0], key=lambda m: -m[0])
    negatives = [(th, v) for th, v in modes if th < 0.0]

    thetas = [th for th, _ in zeros]
    vectors = [v for _, v in zeros]
    for theta, v in positives:
        if not negatives:
            raise NumericalError("复特征值缺少共轭配对")
        k = int(np.argmin([abs(th + theta) for th, _ in negatives]))
        negatives.pop(k)
        # 实矩阵实初值：共轭模态严格取共轭
        thetas.extend([theta, -theta])
        vectors.extend([v, np.conj(v)])
    if negatives:
        raise NumericalError("复特征值缺少共轭配对")
    return thetas, vectors


def _trajectory(dec: DominantDecomposition, phases: np.ndarray) -> np.ndarray:
    """phases 形状 (k, m*) → Σ_j e^{i·phase_j} v_j 的实部，形状 (k, m)"""
    values = np.exp(1j * phases) @ dec.mode_vectors
    return np.real(values)


def dominant_trajectory(dec: DominantDecomposition, t: float) -> np.ndarray:
    """
    主导轨迹 v(t;x) = Σ_j e^{iθ_j t} v_j

    Args:
        dec: 主导分解
        t: 时刻

    Returns:
        实向量（虚部残差 ≤ 1e-10 时截断）
    """
    theta = np.asarray(dec.angular_velocities)
    value = np.exp(1j * theta * t) @ dec.mode_vectors
    residue = float(np.max(np.abs(value.imag))) if value.size else 0.0
    if residue > 1e-10 * (1.0 + float(np.linalg.norm(value.real))):
        logger.warning(f"v(t;x) 虚部残差 {residue:.3e} 超出 1e-10")
    return np.real(value)


def hg_residual(A: StableMatrix, x, dec: DominantDecomposition, t: float) -> float:
    """
    Hartman-Grobman 残差 ‖(e^{λt}/t^{ℓ−1})·e^{−Λt}x − v(t;x)‖

    e^{λt}·e^{−Λt} 以 expm(−(Λ − λI)t)（Padé 13 缩放平方）整体求值。
    """
    if not t > 0:
        raise InadmissibleRange(f"t 必须为正, 当前为 {t}")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    # 低于 λ 的未激发分量按 e^{(λ − margin)t} 放大
    if (dec.rate - A.spectral_margin) * t > MAX_EXPONENT:
        raise Overflow(
            f"t={t:.6g} 时 e^{{(λ−margin)t}} 超出浮点范围, 请改用分解形式 (λ={dec.rate:.6g}, margin={A.spectral_margin:.6g})"
        )
    shifted = linalg.expm(-(A.entries - dec.rate * np.eye(A.dim)) * t)
    scaled = (shifted @ x) / t ** (dec.block_size - 1)
    if not np.all(np.isfinite(scaled)):
        raise Overflow(f"t={t:.6g} 时重标度指数溢出")
    return float(np.linalg.norm(scaled - dominant_trajectory(dec, t)))


def residual_threshold_time(
    A: StableMatrix,
    x,
    tol: float = 1e-6,
    t_start: float = 1.0,
    t_max: float = 1e9,
) -> Tuple[float, float, float]:
    """
    倍增 t 直到 hg_residual ≤ tol

    Returns:
        (T0, residual(T0), residual(2·T0))
    """
    dec = dominant_decomposition(A, x)
    t = t_start
    residual = hg_residual(A, x, dec, t)
    while residual > tol:
        t *= 2.0
        if t > t_max:
            raise NumericalError(f"残差在 t <= {t_max:g} 内未降至 {tol:g}")
        residual = hg_residual(A, x, dec, t)
    return t, residual, hg_residual(A, x, dec, 2.0 * t)


# ============================================
# ω-极限集
# ============================================

def _rational(value: float) -> Optional[Fraction]:
    """在分母 ≤ 64 内识别有理数"""
    frac = Fraction(value).limit_denominator(RATIONAL_MAX_DENOMINATOR)
    if abs(value - frac.numerator / frac.denominator) <= RATIONAL_TOL * max(1.0, abs(value)):
        return frac
    return None


def _frequency_classes(frequencies: Sequence[float]) -> List[Tuple[float, Dict[float, int]]]:
    """
    将正频率按有理关系分组

    每组 (基频 f, {ω: n})，组内 ω = n·f。
    """
    classes: List[Tuple[float, Dict[float, int]]] = []
    for omega in frequencies:
        for i, (base, members) in enumerate(classes):
            ratio = _rational(omega / base)
            if ratio is None:
                continue
            a, b = ratio.numerator, ratio.denominator
            scaled = {w: n * b for w, n in members.items()}
            scaled[omega] = a
            classes[i] = (base / b, scaled)
            break
        else:
            classes.append((omega, {omega: 1}))
    return classes


def omega_limit_set(dec: DominantDecomposition, resolution: int = 64, sampling: str = "continuous") -> OmegaLimitSet:
    """
    ω(x) 的采样与分类

    kind: 全部 θ_j = 0 为 point；非零 θ_j/(2π) 均为分母 ≤ 64 的有理数时为
    finite-orbit（整数时刻轨道有限）；否则为 torus-closure。

    Args:
        dec: 主导分解
        resolution: 采样分辨率（>= 16）
        sampling: "continuous" 采样 t ∈ ℝ 的闭包；"integer" 采样整数时刻轨道

    Returns:
        OmegaLimitSet
    """
    if resolution < 16:
        raise InadmissibleRange(f"resolution 必须 >= 16, 当前为 {resolution}")
    if sampling not in ("continuous", "integer"):
        raise InadmissibleRange(f"未知采样方式: {sampling}")

    thetas = np.asarray(dec.angular_velocities)
    frequencies = sorted({th for th in thetas if th > 0.0})
    if not frequencies:
        samples = dominant_trajectory(dec, 0.0)[None, :]
        return _finish_omega(OmegaKind.POINT, samples)

    ratios = [_rational(w / (2.0 * math.pi)) for w in frequencies]
    kind = OmegaKind.FINITE_ORBIT if all(r is not None for r in ratios) else OmegaKind.TORUS_CLOSURE

    if sampling == "integer":
        if kind == OmegaKind.FINITE_ORBIT:
            period = math.lcm(*(r.denominator for r in ratios))
            count = period
        else:
            count = resolution ** 2
        times = np.arange(count, dtype=float)
        samples = _trajectory(dec, np.outer(times, thetas))
        return _finish_omega(kind, samples)

    classes = _frequency_classes(frequencies)
    if len(classes) == 1:
        base, members = classes[0]
        count = 4 * resolution * max(members.values())
        coords = (2.0 * math.pi / count) * np.arange(count)[:, None]
    else:
        count = min(resolution ** len(classes), 1 << 14)
        coords = 2.0 * math.pi * qmc.Halton(d=len(classes), scramble=False).random(count)

    # 每个模态的相位 = ±n·(所在组的相位坐标)
    multipliers = np.zeros((len(classes), thetas.size))
    for j, th in enumerate(thetas):
        if th == 0.0:
            continue
        for c, (_, members) in enumerate(classes):
            omega = min(members, key=lambda w: abs(w - abs(th)))
            if abs(omega - abs(th)) <= RATIONAL_TOL * max(1.0, abs(th)):
                multipliers[c, j] = math.copysign(members[omega], th)
                break
    samples = _trajectory(dec, coords @ multipliers)
    return _finish_omega(kind, samples)


def _finish_omega(kind: OmegaKind, samples: np.ndarray) -> OmegaLimitSet:
    norms = np.linalg.norm(samples, axis=1)
    if float(norms.min()) <= 1e-8:
        raise NumericalError("ω(x) 采样包含零向量")
    diameter = float(pdist(samples).max()) if samples.shape[0] > 1 else 0.0
    return OmegaLimitSet(kind=kind, samples=samples, diameter=diameter)


# ============================================
# 截断时间尺度
# ============================================

def cutoff_time_scale(lam: float, ell: int, sigma: ScaleFunction, epsilon: float, w: float) -> CutoffSchedule:
    """
    截断时间尺度

    t*_ε = (1/λ)ln(1/ε)；t^cut_ε = t*_ε + ((ℓ−1)/λ)·ln(λ t*_ε) − (1/λ)·ln σ(t*_ε)

    Args:
        lam: 速率 λ
        ell: Jordan 块长度 ℓ
        sigma: 尺度函数
        epsilon: 噪声强度，(0,1)
        w: 窗口宽度

    Returns:
        CutoffSchedule
    """
    if not 0.0 < epsilon < 1.0:
        raise InvalidEpsilon(f"ε 必须在 (0,1) 内, 当前为 {epsilon}")
    if not lam > 0 or ell < 1 or not w > 0:
        raise InadmissibleRange(f"需要 λ > 0, ℓ >= 1, w > 0 (λ={lam}, ℓ={ell}, w={w})")

    t_star = math.log(1.0 / epsilon) / lam
    scale = sigma.checked(t_star)
    t_cut = t_star - math.log(scale) / lam
    if ell > 1:
        t_cut += (ell - 1) / lam * math.log(lam * t_star)
    return CutoffSchedule(t_star=t_star, t_cut=t_cut, epsilon=epsilon, window_w=w)


def asymptotic_prefactor(
    sched: CutoffSchedule,
    r: float,
    lam: float,
    ell: int,
    sigma: ScaleFunction,
) -> Tuple[float, float]:
    """
    渐近前因子

    Returns:
        (finite_value, limit_value) = (t^{ℓ−1}e^{−λt}/(ε·σ(t)), λ^{1−ℓ}e^{−λrw})，t = t^cut_ε + r·w
    """
    t = sched.time_at(r)
    if not t > 0:
        raise NegativeTime(f"t = t_cut + r·w = {t:.6g} 非正 (r={r})")
    log_finite = (ell - 1) * math.log(t) - lam * t - math.log(sched.epsilon) - math.log(sigma.checked(t))
    finite = math.exp(log_finite)
    limit = lam ** (1 - ell) * math.exp(-lam * r * sched.window_w)
    return finite, limit


# ============================================
# 输入输出
# ============================================

def load_matrix_csv(path) -> np.ndarray:
    """读取行优先 CSV 矩阵（# 开头为注释）"""
    try:
        frame = pd.read_csv(Path(path), header=None, comment="#", skipinitialspace=True)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise IoError(f"无法读取矩阵文件 {path}: {exc}")
    try:
        return frame.to_numpy(dtype=float)
    except ValueError:
        raise InadmissibleRange(f"矩阵文件 {path} 含非数值项")


def decomposition_record(
    A: StableMatrix,
    dec: DominantDecomposition,
    omega: Optional[OmegaLimitSet] = None,
) -> Dict[str, Any]:
    """JSON 兼容的谱分析记录"""
    record: Dict[str, Any] = {"matrix": A.to_dict(), "decomposition": dec.to_dict()}
    if omega is not None:
        record["omega_limit_set"] = omega.to_dict()
    return record


def _catalog_4x4() -> np.ndarray:
    blocks = linalg.block_diag([[0.5, -1.0], [1.0, 0.5]], [[1.0]], [[2.0]])
    S = np.array([
        [1.0, 0.5, 0.0, 0.0],
        [0.0, 1.0, 0.3, 0.0],
        [0.2, 0.0, 1.0, 0.4],
        [0.0, 0.1, 0.0, 1.0],
    ])
    return S @ blocks @ np.linalg.inv(S)


# 名称 → (Λ, x)
MATRIX_CATALOG: Dict[str, Tuple[np.ndarray, np.ndarray]] = {
    "diagonal": (np.diag([1.0, 2.0]), np.array([1.0, 1.0])),
    "jordan": (np.array([[1.0, -1.0], [0.0, 1.0]]), np.array([0.0, 1.0])),
    "rotation": (np.array([[1.0, -2.0], [2.0, 1.0]]), np.array([1.0, 0.0])),
    "mixed3": (
        np.array([[1.0, -1.0, 0.5], [0.0, 1.0, 0.3], [0.0, 0.0, 1.5]]),
        np.array([0.0, 1.0, 1.0]),
    ),
    "complex4": (_catalog_4x4(), np.array([1.0, 1.0, 1.0, 1.0])),
}
