"""
模拟与边缘分布服务模块

- 驱动过程精确网格模拟（布朗、分数布朗、对称稳定、平稳高斯）
- 随机卷积 S_t = D_t − e^{−Λt}D_0 − ∫_0^t Λe^{−Λ(t−s)}D_s ds
- 各过程族的闭式/数值积分边缘分布
- 路径集导出（.npz / CSV）
"""

import math
from functools import lru_cache
from pathlib import Path
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import fft as sp_fft
from scipy import linalg, signal, special

from cutofflab.models.laws import GaussianLaw, StableLawDescriptor
from cutofflab.models.processes import (
    CovarianceKernel,
    DriverKind,
    DriverSpec,
    KernelKind,
    PathEnsemble,
    TauProfile,
)
from cutofflab.models.spectral import StableMatrix
from cutofflab.utils.errors import (
    EmbeddingFailure,
    GridTooCoarse,
    InadmissibleRange,
    IoError,
    NoExactLaw,
    SlowDecay,
)
from cutofflab.utils.logger import get_logger
from cutofflab.utils.quadrature import quad_checked, quad_vec_checked
from cutofflab.utils.rng import blockwise

logger = get_logger(__name__)

EMBEDDING_TOL = 1e-10
CONVOLUTION_TOL = 1e-4
CHUNK = 256

# 随机数派生键前缀
DRIVER_KEY = 1
FOU_KEY = 2
AVERAGE_KEY = 3
GENERALIZED_KEY = 4

DriftLike = Union[StableMatrix, np.ndarray, float]


def _drift(A: DriftLike) -> np.ndarray:
    if isinstance(A, StableMatrix):
        return np.asarray(A.entries, dtype=float)
    return np.atleast_2d(np.asarray(A, dtype=float))


# ============================================
# 驱动过程
# ============================================

def fgn_autocovariance(hurst: float, step: float, lags: int) -> np.ndarray:
    """分数高斯噪声自协方差 γ(k) = (h^{2H}/2)(|k+1|^{2H} − 2|k|^{2H} + |k−1|^{2H})"""
    k = np.arange(lags, dtype=float)
    two_h = 2.0 * hurst
    gamma = 0.5 * (np.abs(k + 1) ** two_h - 2.0 * k ** two_h + np.abs(k - 1) ** two_h)
    return step ** two_h * gamma


class StationarySampler:
    """
    平稳高斯序列的精确网格采样器

    优先使用循环嵌入（特征值经 FFT 得到），嵌入非半正定时回退到
    Toeplitz 矩阵 Cholesky 分解。
    """

    def __init__(self, acov: np.ndarray):
        acov = np.asarray(acov, dtype=float)
        self.length = acov.size
        self.sqrt_eigs: Optional[np.ndarray] = None
        self.chol: Optional[np.ndarray] = None

        if self.length >= 2:
            row = np.concatenate([acov, acov[-2:0:-1]])
            eigs = np.real(sp_fft.fft(row))
            scale = max(float(np.max(np.abs(eigs))), 1e-300)
            if float(np.min(eigs)) >= -EMBEDDING_TOL * scale:
                self.sqrt_eigs = np.sqrt(np.clip(eigs, 0.0, None) / row.size)
                return
            logger.warning(f"循环嵌入非半正定 (最小特征值 {np.min(eigs):.3e})，回退到 Cholesky")

        try:
            self.chol = linalg.cholesky(linalg.toeplitz(acov), lower=True)
        except linalg.LinAlgError as exc:
            raise EmbeddingFailure(f"循环嵌入与 Cholesky 分解均失败: {exc}")

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """抽取 count 条长度为 length 的序列"""
        if self.sqrt_eigs is not None:
            size = self.sqrt_eigs.size
            noise = rng.standard_normal((count, size)) + 1j * rng.standard_normal((count, size))
            return np.real(sp_fft.fft(self.sqrt_eigs * noise, axis=-1))[:, : self.length]
        return rng.standard_normal((count, self.length)) @ self.chol.T


def stable_variates(rng: np.random.Generator, alpha: float, size) -> np.ndarray:
    """对称 α-稳定随机数（Chambers-Mallows-Stuck），E e^{izL} = e^{−|z|^α}"""
    phi = rng.uniform(-0.5 * np.pi, 0.5 * np.pi, size)
    w = rng.standard_exponential(size)
    return (np.cos((1.0 - alpha) * phi) / w) ** (1.0 / alpha - 1.0) * np.sin(alpha * phi) / np.cos(phi) ** (1.0 / alpha)


def _psd_sqrt(matrix: np.ndarray) -> np.ndarray:
    values, vectors = linalg.eigh(matrix)
    return (vectors * np.sqrt(np.clip(values, 0.0, None))) @ vectors.T


def _driver_sampler(spec: DriverSpec) -> Callable[[np.random.Generator, int], np.ndarray]:
    """构造 (rng, count) -> (count, K+1, m) 的驱动块采样器"""
    steps, h, m = spec.steps, spec.step, spec.dim

    if spec.kind == DriverKind.BROWNIAN:
        def sample(rng, count):
            increments = math.sqrt(h) * rng.standard_normal((count, steps, m))
            return _cumulate(increments)

    elif spec.kind == DriverKind.FBM:
        sampler = StationarySampler(fgn_autocovariance(spec.hurst, h, steps))

        def sample(rng, count):
            increments = sampler.sample(rng, count * m).reshape(count, m, steps).transpose(0, 2, 1)
            return _cumulate(increments)

    elif spec.kind == DriverKind.STABLE:
        factor = h ** (1.0 / spec.alpha)

        def sample(rng, count):
            increments = factor * stable_variates(rng, spec.alpha, (count, steps, m))
            return _cumulate(increments)

    else:
        kernel = spec.kernel
        sampler = StationarySampler(kernel.profile(h * np.arange(steps + 1)))
        root = _psd_sqrt(kernel.matrix)

        def sample(rng, count):
            series = sampler.sample(rng, count * m).reshape(count, m, steps + 1).transpose(0, 2, 1)
            return series @ root.T

    return sample


def _cumulate(increments: np.ndarray) -> np.ndarray:
    count, _, m = increments.shape
    return np.concatenate([np.zeros((count, 1, m)), np.cumsum(increments, axis=1)], axis=1)


def sample_driver(spec: DriverSpec, n: int, seed: int, threads: Optional[int] = None) -> PathEnsemble:
    """
    在均匀网格上精确模拟驱动过程

    Args:
        spec: 驱动规格
        n: 路径数
        seed: 种子
        threads: 线程数上限

    Returns:
        形状 (n, K+1, m) 的路径集
    """
    if n < 1:
        raise InadmissibleRange(f"路径数 n 必须 >= 1, 当前为 {n}")
    sampler = _driver_sampler(spec)
    logger.debug(f"sample_driver: {spec.kind.value}, n={n}, steps={spec.steps}, dim={spec.dim}")
    values = blockwise(n, seed, _chunked(sampler), threads=threads, key=(DRIVER_KEY,))
    meta = {"driver": spec.to_dict(), "jump": spec.is_jump}
    return PathEnsemble(values, spec.times, seed, meta)


def _chunked(sampler: Callable[[np.random.Generator, int], np.ndarray]) -> Callable[[np.random.Generator, int], np.ndarray]:
    """块内按固定大小分片顺序消耗同一随机流"""
    def run(rng, count):
        parts = [sampler(rng, min(CHUNK, count - start)) for start in range(0, count, CHUNK)]
        return np.concatenate(parts, axis=0)
    return run


# ============================================
# 随机卷积
# ============================================

def convolution_error_estimate(A: DriftLike, step: float) -> float:
    """
    复合梯形公式对 ∫_0^t Λe^{−Λ(t−s)} ds 的相对误差

    递推的稳态增益 (h/2)Λ(I + e^{−Λh})(I − e^{−Λh})^{−1} 与 I 之差。
    """
    lam = _drift(A)
    eye = np.eye(lam.shape[0])
    E = linalg.expm(-lam * step)
    gain = 0.5 * step * lam @ (eye + E) @ np.linalg.inv(eye - E)
    return float(np.linalg.norm(gain - eye, 2))


def _segments(lam: np.ndarray, D: np.ndarray, step: float, jump: bool) -> Tuple[np.ndarray, np.ndarray]:
    """返回 (e^{−Λh}, 每步增量 seg_k)，S_{k+1} = e^{−Λh}S_k + seg_k"""
    eye = np.eye(lam.shape[0])
    E = linalg.expm(-lam * step)
    if jump:
        half = linalg.expm(-0.5 * lam * step)
        return E, np.diff(D, axis=1) @ half.T
    M1 = (eye - 0.5 * step * lam).T
    M0 = ((eye + 0.5 * step * lam) @ E).T
    return E, D[:, 1:, :] @ M1 - D[:, :-1, :] @ M0


def _accumulate(E: np.ndarray, seg: np.ndarray) -> np.ndarray:
    """S_0 = 0，S_{k+1} = E·S_k + seg_k"""
    count, steps, m = seg.shape
    if m == 1:
        body = signal.lfilter([1.0], [1.0, -float(E[0, 0])], seg[:, :, 0], axis=1)[:, :, None]
    else:
        body = np.empty_like(seg)
        current = np.zeros((count, m))
        Et = E.T
        for k in range(steps):
            current = current @ Et + seg[:, k, :]
            body[:, k, :] = current
    return np.concatenate([np.zeros((count, 1, m)), body], axis=1)


def _convolve(lam: np.ndarray, D: np.ndarray, step: float, jump: bool) -> np.ndarray:
    E, seg = _segments(lam, D, step, jump)
    return _accumulate(E, seg)


def stochastic_convolution(A: DriftLike, driver: PathEnsemble) -> PathEnsemble:
    """
    逐路径计算随机卷积

    连续驱动：S_t = D_t − e^{−Λt}D_0 − ∫_0^t Λe^{−Λ(t−s)}D_s ds，积分按驱动网格的复合梯形公式，
    以精确指数递推实现；跳跃（稳定）驱动：S_{k+1} = e^{−Λh}S_k + e^{−Λh/2}ΔL_k。

    Args:
        A: 稳定漂移矩阵
        driver: 驱动路径集

    Returns:
        S 的路径集
    """
    lam = _drift(A)
    if lam.shape[0] != driver.dim:
        raise InadmissibleRange(f"漂移维数 {lam.shape[0]} 与驱动维数 {driver.dim} 不一致")
    jump = bool(driver.meta.get("jump", False))
    step = driver.step
    if not jump:
        error = convolution_error_estimate(lam, step)
        if error > CONVOLUTION_TOL:
            raise GridTooCoarse(f"卷积相对误差估计 {error:.3e} 超过 {CONVOLUTION_TOL:g}，请减小步长 h={step:g}")
    values = _convolve(lam, driver.values, step, jump)
    return PathEnsemble(values, driver.times, driver.seed, {**driver.meta, "convolution": True})


# ============================================
# 分数 OU
# ============================================

@lru_cache(maxsize=4096)
def fou_stationary_covariance(lam: float, hurst: float, t: float) -> float:
    """
    平稳分数 OU 协方差 R(t)

    R(0) = λ^{−2H}Γ(2H+1)/2；t > 0 时
    R(t) = R(0)·(2 sin(πH)/π)·λ^{2H}∫_0^∞ cos(ωt)ω^{1−2H}/(λ²+ω²) dω。

    Args:
        lam: 速率 λ > 0
        hurst: Hurst 指数 H ∈ (0,1)
        t: 时滞 >= 0

    Returns:
        R(t)
    """
    if not lam > 0:
        raise InadmissibleRange(f"λ 必须为正, 当前为 {lam}")
    if not 0.0 < hurst < 1.0:
        raise InadmissibleRange(f"Hurst 指数 H 必须在 (0,1) 内, 当前为 {hurst}")
    t = abs(float(t))
    r0 = lam ** (-2.0 * hurst) * special.gamma(2.0 * hurst + 1.0) / 2.0
    if t == 0.0:
        return float(r0)
    if hurst == 0.5:
        return float(r0 * math.exp(-lam * t))

    factor = r0 * 2.0 * math.sin(math.pi * hurst) / math.pi * lam ** (2.0 * hurst)
    exponent = 1.0 - 2.0 * hurst

    def density(omega):
        return omega ** exponent / (lam * lam + omega * omega)

    tol = 1e-10 / factor
    head = quad_checked(lambda w: math.cos(w * t) * density(w), 0.0, 1.0, epsabs=tol, epsrel=1e-12)
    tail = quad_checked(density, 1.0, math.inf, weight="cos", wvar=t, epsabs=tol)
    return float(factor * (head + tail))


def fou_marginal_law(lam: float, hurst: float, epsilon: float, x: float, t: float) -> GaussianLaw:
    """
    分数 OU 边缘分布

    均值 e^{−λt}x，方差 ε²(R(0) + e^{−2λt}R(0) − 2e^{−λt}R(t))；t = inf 时为 N(0, ε²R(0))。
    """
    r0 = fou_stationary_covariance(lam, hurst, 0.0)
    if math.isinf(t):
        return GaussianLaw.univariate(0.0, epsilon ** 2 * r0)
    if t < 0:
        raise InadmissibleRange(f"时间 t 必须 >= 0, 当前为 {t}")
    decay = math.exp(-lam * t)
    rt = fou_stationary_covariance(lam, hurst, t)
    variance = epsilon ** 2 * (r0 + decay * decay * r0 - 2.0 * decay * rt)
    return GaussianLaw.univariate(decay * x, max(variance, 0.0))


def _fou_block(lam: float, hurst: float, x: float, epsilon: float, step: float, horizon: float):
    spec = DriverSpec(DriverKind.FBM, step=step, horizon=horizon, hurst=hurst)
    sampler = _driver_sampler(spec)
    lam_matrix = np.array([[lam]])
    decay = np.exp(-lam * spec.times)[None, :, None] * x

    def sample(rng, count):
        D = sampler(rng, count)
        return decay + epsilon * _convolve(lam_matrix, D, step, jump=False)

    return spec, sample


def fou_path_ensemble(
    lam: float,
    hurst: float,
    x: float,
    epsilon: float,
    step: float,
    horizon: float,
    n: int,
    seed: int,
    threads: Optional[int] = None,
) -> PathEnsemble:
    """分数 OU 路径 X_t = e^{−λt}x + ε∫_0^t e^{−λ(t−s)} dB^H_s（精确网格驱动 + 卷积）"""
    spec, sample = _fou_block(lam, hurst, x, epsilon, step, horizon)
    if convolution_error_estimate(lam, step) > CONVOLUTION_TOL:
        raise GridTooCoarse(f"步长 h={step:g} 对 λ={lam:g} 过粗")
    values = blockwise(n, seed, _chunked(sample), threads=threads, key=(FOU_KEY,))
    meta = {"family": "fou", "lambda": lam, "hurst": hurst, "x": x, "epsilon": epsilon}
    return PathEnsemble(values, spec.times, seed, meta)


def average_ensemble(
    lam: float,
    hurst: float,
    x: float,
    n_average: int,
    step: float,
    horizon: float,
    replicas: int,
    seed: int,
    threads: Optional[int] = None,
) -> PathEnsemble:
    """
    平均过程 (1/N)Σ_j X^{H,j}，每个副本对 N 条独立分数 OU 路径取平均

    Returns:
        每个副本一条平均路径
    """
    if n_average < 1:
        raise InadmissibleRange(f"N 必须 >= 1, 当前为 {n_average}")
    spec, sample = _fou_block(lam, hurst, x, 1.0, step, horizon)

    def replica_block(rng, count):
        paths = _chunked(sample)(rng, count * n_average)
        return paths.reshape(count, n_average, *paths.shape[1:]).mean(axis=1)

    values = blockwise(replicas, seed, replica_block, threads=threads, key=(AVERAGE_KEY,))
    meta = {"family": "averaging", "lambda": lam, "hurst": hurst, "x": x, "N": n_average}
    return PathEnsemble(values, spec.times, seed, meta)


# ============================================
# 广义 OU
# ============================================

def lyapunov_covariance(A: DriftLike, Q) -> np.ndarray:
    """平稳协方差 Σ：ΛΣ + ΣΛ* = Q"""
    lam = _drift(A)
    sigma = linalg.solve_continuous_lyapunov(lam, np.atleast_2d(np.asarray(Q, dtype=float)))
    return 0.5 * (sigma + sigma.T)


def generalized_ou_stationary_covariance(A: DriftLike, noise_matrix, hurst: float, t: float = 0.0) -> np.ndarray:
    """
    平稳解 U 的协方差 R_U(t) = E[U_0 U_t*]

    H = 1/2 时 R_U(t) = Σ e^{−Λ*t}（Lyapunov）；否则谱积分
    R_U(t) = 2c_H∫_0^∞ Re[e^{−iωt}G(ω)BB*G(ω)*]ω^{1−2H} dω，G = (iωI + Λ)^{−1}，
    c_H = Γ(2H+1)sin(πH)/(2π)。
    """
    lam = _drift(A)
    B = np.atleast_2d(np.asarray(noise_matrix, dtype=float))
    Q = B @ B.T
    if hurst == 0.5:
        return lyapunov_covariance(lam, Q) @ linalg.expm(-lam.T * t)

    m = lam.shape[0]
    c_h = special.gamma(2.0 * hurst + 1.0) * math.sin(math.pi * hurst) / (2.0 * math.pi)
    exponent = 1.0 - 2.0 * hurst
    eye = np.eye(m)

    @lru_cache(maxsize=None)
    def spectral(omega: float) -> np.ndarray:
        G = np.linalg.inv(1j * omega * eye + lam)
        return G @ Q @ G.conj().T * omega ** exponent

    result = np.zeros((m, m))
    for i in range(m):
        for j in range(m):
            def re(w, i=i, j=j):
                return float(np.real(spectral(w)[i, j]))

            def im(w, i=i, j=j):
                return float(np.imag(spectral(w)[i, j]))

            # Re[e^{−iωt}M] = cos(ωt)Re M + sin(ωt)Im M
            value = quad_checked(lambda w: math.cos(w * t) * re(w) + math.sin(w * t) * im(w), 0.0, 1.0, epsabs=1e-11)
            if t == 0.0:
                value += quad_checked(re, 1.0, math.inf, epsabs=1e-11)
            else:
                value += quad_checked(re, 1.0, math.inf, weight="cos", wvar=t, epsabs=1e-11)
                value += quad_checked(im, 1.0, math.inf, weight="sin", wvar=t, epsabs=1e-11)
            result[i, j] = 2.0 * c_h * value
    return result


def generalized_ou_noise_covariance(A: DriftLike, noise_matrix, hurst: float, t: float) -> np.ndarray:
    """
    S_t = U_t − e^{−Λt}U_0 的协方差

    Var = R_U(0) + E R_U(0) E* − R_U(t)* E* − E R_U(t)，E = e^{−Λt}
    """
    lam = _drift(A)
    E = linalg.expm(-lam * t)
    r0 = generalized_ou_stationary_covariance(lam, noise_matrix, hurst, 0.0)
    rt = generalized_ou_stationary_covariance(lam, noise_matrix, hurst, t)
    cov = r0 + E @ r0 @ E.T - rt.T @ E.T - E @ rt
    return 0.5 * (cov + cov.T)


def _generalized_block(
    A: DriftLike, noise_matrix, hurst: float, step: float, burn_in: float, horizon: float
):
    lam = _drift(A)
    B = np.atleast_2d(np.asarray(noise_matrix, dtype=float))
    if B.shape[0] != lam.shape[0]:
        raise InadmissibleRange(f"噪声矩阵行数 {B.shape[0]} 与漂移维数 {lam.shape[0]} 不一致")
    burn_steps = int(math.ceil(burn_in / step))
    kind = DriverKind.BROWNIAN if hurst == 0.5 else DriverKind.FBM
    spec = DriverSpec(kind, step=step, horizon=(burn_steps + int(round(horizon / step))) * step, dim=B.shape[1], hurst=hurst)
    sampler = _driver_sampler(spec)

    def sample(rng, count):
        D = sampler(rng, count) @ B.T
        E, seg = _segments(lam, D, step, jump=False)
        V = _accumulate(E, seg)
        U = V[:, burn_steps:, :]
        S = _accumulate(E, seg[:, burn_steps:, :])
        return S, U

    return burn_steps, sample


def generalized_ou_ensemble(
    A: DriftLike,
    noise_matrix,
    hurst: float,
    step: float,
    horizon: float,
    n: int,
    seed: int,
    burn_in: Optional[float] = None,
    threads: Optional[int] = None,
) -> Tuple[PathEnsemble, PathEnsemble]:
    """
    广义 OU：以预烧期近似平稳初值，返回 (S, U) 两个路径集

    预烧期默认 20/谱间隙；S 与 U 共用同一组驱动增量，S_t = U_t − e^{−Λt}U_0 逐路径成立。
    """
    lam = _drift(A)
    if burn_in is None:
        margin = float(np.min(np.real(np.linalg.eigvals(lam))))
        burn_in = 20.0 / margin
    _, sample = _generalized_block(lam, noise_matrix, hurst, step, burn_in, horizon)

    def both(rng, count):
        S, U = sample(rng, count)
        return np.stack([S, U], axis=1)

    values = blockwise(n, seed, _chunked(both), threads=threads, key=(GENERALIZED_KEY,))
    times = step * np.arange(values.shape[2])
    meta = {"family": "generalized_ou", "hurst": hurst, "burn_in": burn_in}
    return (
        PathEnsemble(values[:, 0], times, seed, {**meta, "process": "S"}),
        PathEnsemble(values[:, 1], times, seed, {**meta, "process": "U"}),
    )


def generalized_ou_samples(
    A: DriftLike,
    noise_matrix,
    hurst: float,
    step: float,
    times: Sequence[float],
    n: int,
    seed: int,
    burn_in: Optional[float] = None,
    threads: Optional[int] = None,
    key: Tuple[int, ...] = (),
) -> np.ndarray:
    """
    仅在给定时刻抽取 S_t 的样本，形状 (len(times), n, m)

    逐块模拟后立即丢弃整条路径。
    """
    lam = _drift(A)
    if burn_in is None:
        margin = float(np.min(np.real(np.linalg.eigvals(lam))))
        burn_in = 20.0 / margin
    times = np.asarray(times, dtype=float)
    if np.any(times < 0):
        raise InadmissibleRange("采样时刻必须 >= 0")
    horizon = max(float(np.max(times)), step)
    _, sample = _generalized_block(lam, noise_matrix, hurst, step, burn_in, horizon)
    index = np.rint(times / step).astype(int)

    def at_times(rng, count):
        S, _ = sample(rng, count)
        return S[:, index, :]

    values = blockwise(n, seed, _chunked(at_times), threads=threads, key=(GENERALIZED_KEY,) + tuple(key))
    return np.transpose(values, (1, 0, 2))


# ============================================
# 迭代 OU
# ============================================

def _kernel_transform(lam: np.ndarray, kernel: CovarianceKernel, upper: float, tol: float) -> np.ndarray:
    """J = ∫_0^upper ρ(s) e^{−Λs} ds"""
    if kernel.kind == KernelKind.WHITE or upper <= 0:
        return np.zeros_like(lam)
    return quad_vec_checked(lambda s: kernel.profile(s) * linalg.expm(-lam * s), 0.0, upper, epsabs=tol * 1e-2)


def _lyapunov_gain(lam: np.ndarray, C: np.ndarray) -> np.ndarray:
    """P = ∫_0^∞ Λe^{−Λu} C e^{−Λ*u}Λ* du = ΛXΛ*，ΛX + XΛ* = C"""
    X = linalg.solve_continuous_lyapunov(lam, C)
    return lam @ X @ lam.T


def iterated_ou_limit_covariance(A: DriftLike, kernel: CovarianceKernel, horizon: float = 60.0, tol: float = 1e-8) -> np.ndarray:
    """
    迭代 OU 极限协方差

    记 K(u) = Λe^{−Λu}，R_D(s) = ρ(s)C。二重积分沿对角线化为一维：
    Σ = ρ(0)C − C J*Λ* − ΛJ C + J P + P J*，J = ∫_0^∞ ρ(s)e^{−Λs} ds，P = ∫_0^∞ K C K* du。

    Args:
        A: 漂移矩阵
        kernel: 驱动协方差函数
        horizon: 积分截断
        tol: 截断处尾部容差

    Returns:
        对称矩阵 Σ
    """
    lam = _drift(A)
    if kernel.dim != lam.shape[0]:
        raise InadmissibleRange("协方差函数维数与漂移维数不一致")
    tail = kernel.tail(horizon)
    if kernel.kind != KernelKind.WHITE and tail > tol:
        raise SlowDecay(f"‖R_D({horizon:g})‖ = {tail:.3e} 超过容差 {tol:g}")
    C = np.asarray(kernel.matrix)
    J = _kernel_transform(lam, kernel, horizon, tol)
    P = _lyapunov_gain(lam, C)
    cross = C @ J.T @ lam.T
    sigma = kernel.profile(0.0) * C - cross - cross.T + J @ P + P @ J.T
    return 0.5 * (sigma + sigma.T)


def iterated_ou_noise_covariance(A: DriftLike, kernel: CovarianceKernel, t: float, tol: float = 1e-8) -> np.ndarray:
    """
    迭代 OU 在有限时刻的 Var(S_t)

    Var = R(0) + E R(0) E* + G + G* − R(t)E* − E R(t)* − A_t − A_t* + E B_t* + B_t E*，
    E = e^{−Λt}，A_t = C J_t* Λ*，B_t = Λ∫_0^t e^{−Λu}ρ(t−u) du·C，
    G = ∫_0^t ρ(s) e^{−Λs} (P − E_{t−s} P E_{t−s}*) ds。
    """
    lam = _drift(A)
    if t < 0:
        raise InadmissibleRange(f"时间 t 必须 >= 0, 当前为 {t}")
    C = np.asarray(kernel.matrix)
    E = linalg.expm(-lam * t)
    rho0 = float(kernel.profile(0.0))
    rho_t = float(kernel.profile(t)) if t > 0 else rho0
    P = _lyapunov_gain(lam, C)

    if kernel.kind == KernelKind.WHITE or t == 0.0:
        J = np.zeros_like(lam)
        G = np.zeros_like(lam)
        Bt = np.zeros_like(lam)
    else:
        epsabs = tol * 1e-2
        J = _kernel_transform(lam, kernel, t, tol)

        def g_integrand(s):
            Es = linalg.expm(-lam * (t - s))
            return kernel.profile(s) * linalg.expm(-lam * s) @ (P - Es @ P @ Es.T)

        G = quad_vec_checked(g_integrand, 0.0, t, epsabs=epsabs)
        Bt = lam @ quad_vec_checked(lambda u: kernel.profile(t - u) * linalg.expm(-lam * u), 0.0, t, epsabs=epsabs) @ C

    cross = C @ J.T @ lam.T
    Rt = rho_t * C
    cov = (
        rho0 * C + rho0 * E @ C @ E.T + G + G.T
        - Rt @ E.T - E @ Rt.T
        - cross - cross.T
        + E @ Bt.T + Bt @ E.T
    )
    return 0.5 * (cov + cov.T)


# ============================================
# 非齐次与积分 OU
# ============================================

def inhomogeneous_variance(lam: float, tau: TauProfile, t: float) -> Tuple[float, float]:
    """
    非齐次 OU 方差 e^{−2λt}∫_0^t e^{2λs}τ(s)² ds 及其极限 τ(∞)²/(2λ)

    Returns:
        (value, limit)
    """
    if not lam > 0:
        raise InadmissibleRange(f"λ 必须为正, 当前为 {lam}")
    limit = tau.limit ** 2 / (2.0 * lam)
    if t <= 0:
        return 0.0, limit
    value = quad_checked(lambda s: math.exp(-2.0 * lam * (t - s)) * tau(s) ** 2, 0.0, t, epsabs=1e-13, epsrel=1e-11)
    return float(value), float(limit)


def integrated_variance_factor(lam: float, t: float) -> float:
    """∫_0^t (1 − e^{−λu})² du = t − 2(1 − e^{−λt})/λ + (1 − e^{−2λt})/(2λ)"""
    return t - 2.0 * (-math.expm1(-lam * t)) / lam + (-math.expm1(-2.0 * lam * t)) / (2.0 * lam)


def integrated_stable_factor(lam: float, alpha: float, t: float) -> float:
    """(1/t)∫_0^t (1 − e^{−λr})^α dr"""
    value = quad_checked(lambda r: (-math.expm1(-lam * r)) ** alpha, 0.0, t, epsabs=1e-12, epsrel=1e-10)
    return value / t


def integrated_ou_law(
    lam: float,
    epsilon: float,
    x: float,
    t: float,
    driver: str = "gaussian",
    alpha: Optional[float] = None,
    c_alpha: float = 1.0,
):
    """
    积分 OU 的标准化变量 Z_t = (Y_t − (y + x/λ))/σ_t 的分布

    gaussian：σ_t = √t，均值 −e^{−λt}x/(λ√t)，方差 (ε²/λ²)·factor/t；
    stable：σ_t = t^{1/α}，尺度 (ε^α C_α/λ^α)(1/t)∫_0^t(1 − e^{−λr})^α dr。
    t = inf 时返回极限分布。
    """
    if not t > 0:
        raise InadmissibleRange(f"时间 t 必须为正, 当前为 {t}")
    if driver == "gaussian":
        if math.isinf(t):
            return GaussianLaw.univariate(0.0, epsilon ** 2 / lam ** 2)
        mean = -math.exp(-lam * t) * x / (lam * math.sqrt(t))
        variance = epsilon ** 2 / lam ** 2 * integrated_variance_factor(lam, t) / t
        return GaussianLaw.univariate(mean, variance)
    if driver != "stable" or alpha is None:
        raise InadmissibleRange(f"未知的积分 OU 驱动: {driver}")
    base = epsilon ** alpha * c_alpha / lam ** alpha
    if math.isinf(t):
        return StableLawDescriptor(alpha, base)
    loc = -math.exp(-lam * t) * x / (lam * t ** (1.0 / alpha))
    return StableLawDescriptor(alpha, base * integrated_stable_factor(lam, alpha, t), loc)


def multivariate_noise_covariance(A: DriftLike, limit_covariance, t: float) -> np.ndarray:
    """
    Brownian 驱动线性系统在 t 时刻的噪声协方差 Σ − e^{−Λt}Σe^{−Λ*t}

    非半正定时抛出 NoExactLaw。
    """
    lam = _drift(A)
    sigma = np.atleast_2d(np.asarray(limit_covariance, dtype=float))
    E = linalg.expm(-lam * t)
    cov = sigma - E @ sigma @ E.T
    cov = 0.5 * (cov + cov.T)
    scale = max(1.0, float(np.max(np.abs(sigma))))
    if float(np.min(np.linalg.eigvalsh(cov))) < -1e-12 * scale:
        raise NoExactLaw(f"t={t:g} 时 Σ − e^{{−Λt}}Σe^{{−Λ*t}} 非半正定，该极限协方差不对应 Brownian 驱动")
    return cov


# ============================================
# 导出
# ============================================

def export_ensemble(ensemble: PathEnsemble, path: Union[str, Path]) -> Path:
    """
    导出路径集

    .npz：二进制列 values/times/seed；.csv：长表 path, t, coord, value。
    """
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix not in (".npz", ".csv"):
        raise InadmissibleRange(f"不支持的导出格式: {suffix or '(无扩展名)'}")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        if suffix == ".npz":
            np.savez_compressed(path, values=ensemble.values, times=ensemble.times, seed=np.uint64(ensemble.seed))
        else:
            n, k, m = ensemble.values.shape
            frame = pd.DataFrame({
                "path": np.repeat(np.arange(n), k * m),
                "t": np.tile(np.repeat(ensemble.times, m), n),
                "coord": np.tile(np.arange(m), n * k),
                "value": ensemble.values.reshape(-1),
            })
            with open(path, "w", encoding="utf-8") as handle:
                handle.write(f"# seed={ensemble.seed}\n")
                frame.to_csv(handle, index=False, float_format="%.17g")
    except OSError as exc:
        raise IoError(f"写入 {path} 失败: {exc}")
    logger.info(f"路径集已导出: {path}")
    return path
