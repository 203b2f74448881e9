"""
谱分析结果模型

- StableMatrix: 通过 Routh-Hurwitz 校验的漂移矩阵
- DominantDecomposition: 初值 x 的主导渐近数据 (λ, ℓ, m*, θ_j, v_j)
- OmegaLimitSet: 振荡因子 v(t;x) 的 ω-极限集采样
- CutoffSchedule: 截断时间尺度
"""

from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Tuple

import numpy as np


def _frozen(array, dtype=float) -> np.ndarray:
    array = np.array(array, dtype=dtype)
    array.setflags(write=False)
    return array


def _complex_to_json(vector: np.ndarray) -> list:
    return [[float(z.real), float(z.imag)] for z in np.ravel(vector)]


@dataclass(frozen=True, eq=False)
class StableMatrix:
    """漂移矩阵 Λ，−Λ 的全部特征值实部 ≤ −spectral_margin < 0"""
    entries: np.ndarray
    spectral_margin: float

    def __post_init__(self):
        object.__setattr__(self, "entries", _frozen(self.entries))

    @property
    def dim(self) -> int:
        return int(self.entries.shape[0])

    def to_dict(self) -> Dict[str, Any]:
        return {"dim": self.dim, "entries": self.entries.tolist(), "spectral_margin": self.spectral_margin}


@dataclass(frozen=True, eq=False)
class DominantDecomposition:
    """
    主导分解

    e^{λt}/t^{ℓ−1} · e^{−Λt}x − Σ_j e^{iθ_j t} v_j → 0 (t → ∞)
    """
    rate: float
    block_size: int
    mode_count: int
    angular_velocities: Tuple[float, ...]
    mode_vectors: np.ndarray  # (m*, m) 复向量
    initial_datum: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "angular_velocities", tuple(float(th) for th in self.angular_velocities))
        object.__setattr__(self, "mode_vectors", _frozen(np.atleast_2d(self.mode_vectors), complex))
        object.__setattr__(self, "initial_datum", _frozen(self.initial_datum))

    @property
    def dim(self) -> int:
        return int(self.initial_datum.size)

    @property
    def mode_norm_sum(self) -> float:
        """Σ_j ‖v_j‖，v(t;x) 的上界"""
        return float(np.sum(np.linalg.norm(self.mode_vectors, axis=1)))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "rate": self.rate,
            "block_size": self.block_size,
            "mode_count": self.mode_count,
            "angular_velocities": list(self.angular_velocities),
            "mode_vectors": [_complex_to_json(v) for v in self.mode_vectors],
            "initial_datum": self.initial_datum.tolist(),
        }


class OmegaKind(str, Enum):
    """ω-极限集类型"""
    POINT = "point"
    FINITE_ORBIT = "finite-orbit"
    TORUS_CLOSURE = "torus-closure"


@dataclass(frozen=True, eq=False)
class OmegaLimitSet:
    """ω(x) 的稠密采样"""
    kind: OmegaKind
    samples: np.ndarray  # (k, m)
    diameter: float

    def __post_init__(self):
        object.__setattr__(self, "samples", _frozen(np.atleast_2d(self.samples)))

    @property
    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.samples, axis=1)

    def representative(self) -> np.ndarray:
        """取 ‖v‖ 为中位数的样本"""
        norms = self.norms
        order = np.argsort(norms, kind="stable")
        return np.array(self.samples[order[(len(order) - 1) // 2]])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind.value,
            "sample_count": int(self.samples.shape[0]),
            "diameter": self.diameter,
            "min_norm": float(self.norms.min()),
            "max_norm": float(self.norms.max()),
        }


@dataclass(frozen=True)
class CutoffSchedule:
    """截断时间尺度 t*_ε 与 t^cut_ε"""
    t_star: float
    t_cut: float
    epsilon: float
    window_w: float

    def time_at(self, r: float) -> float:
        """t = t^cut_ε + r·w"""
        return self.t_cut + r * self.window_w

    def to_dict(self) -> Dict[str, Any]:
        return {"t_star": self.t_star, "t_cut": self.t_cut, "epsilon": self.epsilon, "window_w": self.window_w}
