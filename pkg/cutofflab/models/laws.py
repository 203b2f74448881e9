"""
概率分布描述模型

- GaussianLaw: 高斯分布（均值、协方差）
- StableLawDescriptor: 对称 α-稳定分布（特征函数参数）
- EmpiricalLaw: 经验分布（样本集）
"""

from dataclasses import dataclass
from typing import Any, Dict, Union

import numpy as np

from cutofflab.utils.errors import InadmissibleRange

SYMMETRY_TOL = 1e-12
PSD_TOL = 1e-12


def _freeze(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class GaussianLaw:
    """高斯分布 N(mean, covariance)"""
    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.covariance, dtype=float))
        if mean.ndim != 1 or cov.shape != (mean.size, mean.size):
            raise InadmissibleRange(f"均值维数 {mean.shape} 与协方差形状 {cov.shape} 不匹配")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise InadmissibleRange("高斯分布参数含非有限值")
        scale = max(1.0, float(np.max(np.abs(cov))))
        if np.max(np.abs(cov - cov.T)) > SYMMETRY_TOL * scale:
            raise InadmissibleRange("协方差矩阵不对称")
        cov = 0.5 * (cov + cov.T)
        if np.min(np.linalg.eigvalsh(cov)) < -PSD_TOL * scale:
            raise InadmissibleRange("协方差矩阵非半正定")
        object.__setattr__(self, "mean", _freeze(mean))
        object.__setattr__(self, "covariance", _freeze(cov))

    @classmethod
    def univariate(cls, mean: float, variance: float) -> "GaussianLaw":
        """构造一元高斯分布"""
        return cls(np.array([mean]), np.array([[variance]]))

    @property
    def dim(self) -> int:
        return int(self.mean.size)

    @property
    def variance(self) -> float:
        """一元情形的方差"""
        return float(self.covariance[0, 0])

    @property
    def is_degenerate(self) -> bool:
        """协方差是否奇异（含零方差的点质量）"""
        scale = max(1.0, float(np.max(np.abs(self.covariance))))
        return bool(np.min(np.linalg.eigvalsh(self.covariance)) <= PSD_TOL * scale)

    def scaled(self, factor: float) -> "GaussianLaw":
        """返回 factor·X 的分布"""
        return GaussianLaw(factor * self.mean, factor ** 2 * self.covariance)

    def shifted(self, shift: np.ndarray) -> "GaussianLaw":
        """返回 shift + X 的分布"""
        return GaussianLaw(self.mean + np.asarray(shift, dtype=float), self.covariance)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """抽取 n 个样本，形状 (n, dim)"""
        return rng.multivariate_normal(self.mean, self.covariance, size=n, method="eigh")

    def to_dict(self) -> Dict[str, Any]:
        return {"type": "gaussian", "mean": self.mean.tolist(), "covariance": self.covariance.tolist()}


@dataclass(frozen=True)
class StableLawDescriptor:
    """
    对称 α-稳定分布，特征函数 ψ(z) = exp(i·loc·z − scale_c·|z|^α)

    scale_c 已吸收常数 C_α。
    """
    alpha: float
    scale_c: float
    loc: float = 0.0

    def __post_init__(self):
        if not 1.0 < self.alpha < 2.0:
            raise InadmissibleRange(f"稳定指数 α 必须在 (1,2) 内, 当前为 {self.alpha}")
        if not self.scale_c > 0:
            raise InadmissibleRange(f"稳定尺度 scale_c 必须为正, 当前为 {self.scale_c}")
        if not np.isfinite(self.loc):
            raise InadmissibleRange("位置参数非有限")

    @property
    def dim(self) -> int:
        return 1

    @property
    def sigma(self) -> float:
        """标准化尺度 s = scale_c^{1/α}，X = loc + s·L, L 为单位稳定变量"""
        return float(self.scale_c ** (1.0 / self.alpha))

    def cf(self, z: np.ndarray) -> np.ndarray:
        """特征函数"""
        z = np.asarray(z, dtype=float)
        return np.exp(1j * self.loc * z - self.scale_c * np.abs(z) ** self.alpha)

    def scaled(self, factor: float) -> "StableLawDescriptor":
        return StableLawDescriptor(self.alpha, abs(factor) ** self.alpha * self.scale_c, factor * self.loc)

    def shifted(self, shift: float) -> "StableLawDescriptor":
        return StableLawDescriptor(self.alpha, self.scale_c, self.loc + float(np.ravel(shift)[0]))

    def to_dict(self) -> Dict[str, Any]:
        return {"type": "stable", "alpha": self.alpha, "scale_c": self.scale_c, "loc": self.loc}


@dataclass(frozen=True, eq=False)
class EmpiricalLaw:
    """经验分布，samples 形状 (n, dim)"""
    samples: np.ndarray

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim == 1:
            samples = samples[:, None]
        if samples.ndim != 2 or samples.shape[0] < 2:
            raise InadmissibleRange("经验分布至少需要 2 个样本")
        object.__setattr__(self, "samples", _freeze(samples))

    @property
    def dim(self) -> int:
        return int(self.samples.shape[1])

    @property
    def size(self) -> int:
        return int(self.samples.shape[0])

    def scaled(self, factor: float) -> "EmpiricalLaw":
        return EmpiricalLaw(factor * self.samples)

    def shifted(self, shift: np.ndarray) -> "EmpiricalLaw":
        return EmpiricalLaw(self.samples + np.asarray(shift, dtype=float))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "type": "empirical",
            "size": self.size,
            "mean": self.samples.mean(axis=0).tolist(),
            "covariance": np.atleast_2d(np.cov(self.samples, rowvar=False)).tolist(),
        }


LawDescriptor = Union[GaussianLaw, StableLawDescriptor, EmpiricalLaw]
