"""
过程与驱动模型

- ScaleFunction: 尺度函数 σ_t
- CovarianceKernel: 平稳高斯驱动的协方差函数 R_D(s)
- DriverSpec: 驱动过程规格（布朗、分数布朗、稳定、平稳高斯）
- PathEnsemble: 路径样本集
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, Optional, Tuple

import numpy as np

from cutofflab.utils.errors import InadmissibleRange, NonPositiveScale


class ScaleKind(str, Enum):
    """尺度函数类型"""
    ONE = "one"
    SQRT = "sqrt"
    POWER = "power"
    TABLE = "table"
    CALLABLE = "callable"


@dataclass(frozen=True, eq=False)
class ScaleFunction:
    """尺度函数 t ↦ σ_t > 0"""
    kind: ScaleKind = ScaleKind.ONE
    exponent: float = 0.0
    table: Optional[Tuple[Tuple[float, ...], Tuple[float, ...]]] = None
    func: Optional[Callable[[np.ndarray], np.ndarray]] = None
    label: str = ""

    def __post_init__(self):
        if self.kind == ScaleKind.TABLE:
            if self.table is None or len(self.table[0]) < 2 or len(self.table[0]) != len(self.table[1]):
                raise InadmissibleRange("表格尺度函数需要等长的 (t, σ) 两列且至少两行")
            times = np.asarray(self.table[0], dtype=float)
            if np.any(np.diff(times) <= 0):
                raise InadmissibleRange("表格尺度函数的时间列必须严格递增")
        if self.kind == ScaleKind.CALLABLE and self.func is None:
            raise InadmissibleRange("callable 尺度函数缺少 func")

    @classmethod
    def one(cls) -> "ScaleFunction":
        return cls(ScaleKind.ONE)

    @classmethod
    def sqrt(cls) -> "ScaleFunction":
        return cls(ScaleKind.SQRT, exponent=0.5)

    @classmethod
    def power(cls, exponent: float) -> "ScaleFunction":
        return cls(ScaleKind.POWER, exponent=float(exponent))

    @classmethod
    def from_table(cls, times, values) -> "ScaleFunction":
        return cls(ScaleKind.TABLE, table=(tuple(map(float, times)), tuple(map(float, values))))

    @classmethod
    def from_callable(cls, func: Callable[[np.ndarray], np.ndarray], label: str = "custom") -> "ScaleFunction":
        return cls(ScaleKind.CALLABLE, func=func, label=label)

    @property
    def tag(self) -> str:
        if self.kind == ScaleKind.POWER:
            return f"power({self.exponent:.12g})"
        if self.kind == ScaleKind.CALLABLE:
            return f"callable({self.label})"
        return self.kind.value

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == ScaleKind.ONE:
            value = np.ones_like(t)
        elif self.kind in (ScaleKind.SQRT, ScaleKind.POWER):
            value = np.power(t, self.exponent)
        elif self.kind == ScaleKind.TABLE:
            value = np.interp(t, self.table[0], self.table[1])
        else:
            value = np.asarray(self.func(t), dtype=float)
        return float(value) if value.ndim == 0 else value

    def checked(self, t: float) -> float:
        """求值并要求 σ_t > 0"""
        value = self(t)
        if not (np.isfinite(value) and value > 0):
            raise NonPositiveScale(f"σ({t:.6g}) = {value} 非正")
        return float(value)

    def to_dict(self) -> Dict[str, Any]:
        result: Dict[str, Any] = {"kind": self.kind.value}
        if self.kind == ScaleKind.POWER:
            result["exponent"] = self.exponent
        if self.kind == ScaleKind.TABLE:
            result["table"] = [list(self.table[0]), list(self.table[1])]
        if self.kind == ScaleKind.CALLABLE:
            result["label"] = self.label
        return result


class KernelKind(str, Enum):
    """协方差函数类型"""
    EXPONENTIAL = "exponential"  # C·exp(−θ|s|)
    GAUSSIAN = "gaussian"        # C·exp(−θ s²)
    WHITE = "white"              # C·1{s = 0}


@dataclass(frozen=True, eq=False)
class CovarianceKernel:
    """平稳协方差函数 R_D(s) = E[D_s D_0^*]"""
    kind: KernelKind
    matrix: np.ndarray
    rate: float = 1.0

    def __post_init__(self):
        matrix = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        if matrix.shape[0] != matrix.shape[1]:
            raise InadmissibleRange("协方差函数的矩阵系数必须为方阵")
        if np.max(np.abs(matrix - matrix.T)) > 1e-12 * max(1.0, np.max(np.abs(matrix))):
            raise InadmissibleRange("协方差函数的矩阵系数必须对称")
        if np.min(np.linalg.eigvalsh(matrix)) < -1e-12:
            raise InadmissibleRange("协方差函数的矩阵系数必须半正定")
        if self.kind != KernelKind.WHITE and not self.rate > 0:
            raise InadmissibleRange(f"协方差衰减率必须为正, 当前为 {self.rate}")
        matrix = np.array(matrix)
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[0])

    def profile(self, s) -> np.ndarray:
        """标量因子 ρ(s)，R_D(s) = ρ(s)·C"""
        s = np.abs(np.asarray(s, dtype=float))
        if self.kind == KernelKind.EXPONENTIAL:
            return np.exp(-self.rate * s)
        if self.kind == KernelKind.GAUSSIAN:
            return np.exp(-self.rate * s ** 2)
        return (s == 0).astype(float)

    def __call__(self, s) -> np.ndarray:
        """R_D(s)，标量输入返回 (m, m)，数组输入返回 (..., m, m)"""
        rho = self.profile(s)
        return rho[..., None, None] * self.matrix

    def tail(self, horizon: float) -> float:
        """‖R_D(horizon)‖₂"""
        return float(self.profile(horizon) * np.linalg.norm(self.matrix, 2))

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind.value, "matrix": self.matrix.tolist(), "rate": self.rate}


class DriverKind(str, Enum):
    """驱动过程类型"""
    BROWNIAN = "brownian"
    FBM = "fbm"
    STABLE = "stable"
    STATIONARY_GAUSSIAN = "stationary_gaussian"


@dataclass(frozen=True, eq=False)
class DriverSpec:
    """驱动过程规格，均匀网格 0 = t_0 < ... < t_K = T"""
    kind: DriverKind
    step: float
    horizon: float
    dim: int = 1
    hurst: float = 0.5
    alpha: float = 1.5
    kernel: Optional[CovarianceKernel] = None
    # V(t) 仅作为元数据记录
    variance_function: str = ""

    def __post_init__(self):
        if not (self.step > 0 and self.horizon > 0):
            raise InadmissibleRange("网格步长与时间跨度必须为正")
        if self.dim < 1:
            raise InadmissibleRange("驱动维数必须 >= 1")
        if self.kind == DriverKind.FBM and not 0.0 < self.hurst < 1.0:
            raise InadmissibleRange(f"Hurst 指数 H 必须在 (0,1) 内, 当前为 {self.hurst}")
        if self.kind == DriverKind.STABLE and not 1.0 < self.alpha < 2.0:
            raise InadmissibleRange(f"稳定指数 α 必须在 (1,2) 内, 当前为 {self.alpha}")
        if self.kind == DriverKind.STATIONARY_GAUSSIAN:
            if self.kernel is None:
                raise InadmissibleRange("平稳高斯驱动需要协方差函数 kernel")
            if self.kernel.dim != self.dim:
                raise InadmissibleRange("协方差函数维数与驱动维数不一致")

    @property
    def steps(self) -> int:
        return max(1, int(round(self.horizon / self.step)))

    @property
    def times(self) -> np.ndarray:
        return self.step * np.arange(self.steps + 1)

    @property
    def is_jump(self) -> bool:
        return self.kind == DriverKind.STABLE

    def to_dict(self) -> Dict[str, Any]:
        result: Dict[str, Any] = {
            "kind": self.kind.value,
            "step": self.step,
            "horizon": self.horizon,
            "dim": self.dim,
        }
        if self.kind == DriverKind.FBM:
            result["hurst"] = self.hurst
        if self.kind == DriverKind.STABLE:
            result["alpha"] = self.alpha
        if self.kernel is not None:
            result["kernel"] = self.kernel.to_dict()
        if self.variance_function:
            result["variance_function"] = self.variance_function
        return result


@dataclass(frozen=True, eq=False)
class PathEnsemble:
    """n 条路径 × 网格长度 × m 维"""
    values: np.ndarray
    times: np.ndarray
    seed: int
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 2:
            values = values[:, :, None]
        times = np.asarray(self.times, dtype=float)
        if values.ndim != 3 or values.shape[1] != times.size:
            raise InadmissibleRange(f"路径形状 {values.shape} 与网格长度 {times.size} 不匹配")
        if not np.all(np.isfinite(values)):
            raise InadmissibleRange("路径含非有限值")
        if times.size > 1 and np.any(np.diff(times) <= 0):
            raise InadmissibleRange("时间网格必须严格递增")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "times", times)

    @property
    def n_paths(self) -> int:
        return int(self.values.shape[0])

    @property
    def dim(self) -> int:
        return int(self.values.shape[2])

    @property
    def step(self) -> float:
        return float(self.times[1] - self.times[0]) if self.times.size > 1 else 0.0

    def at(self, t: float) -> np.ndarray:
        """最接近 t 的网格时刻上的截面，形状 (n, m)"""
        index = int(np.argmin(np.abs(self.times - t)))
        return self.values[:, index, :]


class TauKind(str, Enum):
    """非齐次噪声强度 τ(s) 的类型"""
    CONSTANT = "constant"        # τ ≡ level
    EXPONENTIAL = "exponential"  # τ(s) = level + amplitude·exp(−rate·s)
    TABLE = "table"              # 分段线性，末值为 τ(∞)


@dataclass(frozen=True)
class TauProfile:
    """连续正函数 τ(s) 及其极限 τ(∞)"""
    kind: TauKind = TauKind.CONSTANT
    level: float = 1.0
    amplitude: float = 0.0
    rate: float = 1.0
    table: Optional[Tuple[Tuple[float, ...], Tuple[float, ...]]] = None

    def __post_init__(self):
        if self.kind == TauKind.TABLE:
            if self.table is None or len(self.table[0]) < 2 or len(self.table[0]) != len(self.table[1]):
                raise InadmissibleRange("τ 表格需要等长的两列且至少两行")
            if min(self.table[1]) <= 0:
                raise InadmissibleRange("τ 必须为正")
        elif self.kind == TauKind.EXPONENTIAL:
            if not self.rate > 0:
                raise InadmissibleRange("τ 的衰减率必须为正")
            if self.level <= 0 or self.level + min(self.amplitude, 0.0) <= 0:
                raise InadmissibleRange("τ 必须为正")
        elif self.level <= 0:
            raise InadmissibleRange("τ 必须为正")

    @property
    def limit(self) -> float:
        """τ(∞)"""
        if self.kind == TauKind.TABLE:
            return float(self.table[1][-1])
        return float(self.level)

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == TauKind.CONSTANT:
            value = np.full_like(s, self.level)
        elif self.kind == TauKind.EXPONENTIAL:
            value = self.level + self.amplitude * np.exp(-self.rate * s)
        else:
            value = np.interp(s, self.table[0], self.table[1])
        return float(value) if value.ndim == 0 else value

    def to_dict(self) -> Dict[str, Any]:
        result: Dict[str, Any] = {"kind": self.kind.value, "level": self.level}
        if self.kind == TauKind.EXPONENTIAL:
            result.update(amplitude=self.amplitude, rate=self.rate)
        if self.kind == TauKind.TABLE:
            result["table"] = [list(self.table[0]), list(self.table[1])]
        return result
