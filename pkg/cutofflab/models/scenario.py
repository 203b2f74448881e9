"""
场景模型

- Scenario: 绑定参数、尺度函数 σ_t、极限分布 Z 与评估策略的不可变场景
- ScenarioFile 及各过程族参数模式（pydantic 校验）
"""

import hashlib
import json
from dataclasses import dataclass
from enum import Enum
from types import MappingProxyType
from typing import Any, Dict, List, Literal, Mapping, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from cutofflab.models.laws import LawDescriptor
from cutofflab.models.processes import ScaleFunction
from cutofflab.models.spectral import StableMatrix


class Family(str, Enum):
    """过程族"""
    FOU_1D = "fou_1d"
    MULTIVARIATE_GAUSSIAN_LINEAR = "multivariate_gaussian_linear"
    AVERAGING = "averaging"
    GENERALIZED_OU = "generalized_ou"
    ITERATED_OU = "iterated_ou"
    INHOMOGENEOUS = "inhomogeneous"
    INTEGRATED_OU_GAUSSIAN = "integrated_ou_gaussian"
    INTEGRATED_OU_STABLE = "integrated_ou_stable"


class MetricKind(str, Enum):
    """距离类型"""
    TV = "tv"
    WASSERSTEIN = "wasserstein"


class EvaluationKind(str, Enum):
    """评估策略"""
    EXACT = "exact"
    MONTE_CARLO = "monte-carlo"


@dataclass(frozen=True, eq=False)
class Scenario:
    """
    过程族场景

    X^ε_t(x) 的分布等于 e^{−Λt}x + ε·S_t；asymptotic_datum 为主导分解所用的初值
    （积分 OU 为 −x/λ，其余族为 x）。
    """
    name: str
    family: Family
    params: Mapping[str, Any]
    drift: StableMatrix
    initial_datum: np.ndarray
    asymptotic_datum: np.ndarray
    epsilon: float
    scale: ScaleFunction
    limit_law: LawDescriptor
    metric: MetricKind = MetricKind.TV
    p: float = 1.0
    evaluation: EvaluationKind = EvaluationKind.EXACT
    mc_paths: int = 100_000
    seed: int = 0xC0FFEE

    def __post_init__(self):
        object.__setattr__(self, "params", MappingProxyType(dict(self.params)))
        for name in ("initial_datum", "asymptotic_datum"):
            array = np.atleast_1d(np.array(getattr(self, name), dtype=float))
            array.setflags(write=False)
            object.__setattr__(self, name, array)

    @property
    def dim(self) -> int:
        return self.drift.dim

    @property
    def metric_tag(self) -> str:
        return "tv" if self.metric == MetricKind.TV else f"w{self.p:g}"

    def to_dict(self) -> Dict[str, Any]:
        """规范化记录（用于哈希与 JSON 输出）"""
        return {
            "name": self.name,
            "family": self.family.value,
            "params": _jsonable(dict(self.params)),
            "metric": self.metric.value,
            "p": self.p,
            "evaluation": self.evaluation.value,
            "mc_paths": self.mc_paths,
            "seed": self.seed,
        }

    def config_hash(self) -> str:
        """场景配置的 SHA-256（前 16 位）"""
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Enum):
        return value.value
    return value


# ============================================
# 场景文件模式
# ============================================

class ScenarioFile(BaseModel):
    """场景文件（JSON）"""
    model_config = ConfigDict(extra="forbid")

    family: Family = Field(..., description="过程族")
    name: Optional[str] = Field(None, description="场景名称")
    params: Dict[str, Any] = Field(default_factory=dict, description="过程族参数")
    metric: MetricKind = Field(MetricKind.TV, description="距离类型")
    p: float = Field(1.0, ge=1.0, description="Wasserstein 阶数")
    evaluation: Optional[EvaluationKind] = Field(None, description="评估策略，默认按过程族")
    mc_paths: Optional[int] = Field(None, ge=2, description="蒙特卡洛路径数")
    seed: Optional[int] = Field(None, ge=0, description="随机种子")


# ============================================
# 各过程族参数模式
# ============================================

class _Params(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    epsilon: float = Field(0.01, gt=0.0, lt=1.0, description="噪声强度 ε")


class _ScalarDriftParams(_Params):
    lam: float = Field(..., alias="lambda", gt=0.0, description="漂移率 λ")
    x: float = Field(..., description="初值 x")

    @field_validator("x")
    @classmethod
    def _nonzero(cls, value: float) -> float:
        if value == 0.0:
            raise ValueError("初值 x 不能为 0")
        return value


class _MatrixDriftParams(_Params):
    drift: List[List[float]] = Field(..., description="漂移矩阵 Λ（行优先）")
    x: List[float] = Field(..., min_length=1, description="初值向量 x")

    @model_validator(mode="after")
    def _shapes(self):
        m = len(self.drift)
        if m == 0 or any(len(row) != m for row in self.drift):
            raise ValueError("漂移矩阵必须为非空方阵")
        if len(self.x) != m:
            raise ValueError(f"初值维数 {len(self.x)} 与漂移矩阵维数 {m} 不一致")
        if not any(v != 0.0 for v in self.x):
            raise ValueError("初值 x 不能为零向量")
        return self


class Fou1dParams(_ScalarDriftParams):
    """分数 OU 过程参数"""
    hurst: float = Field(0.5, gt=0.0, lt=1.0, description="Hurst 指数 H")


class AveragingParams(BaseModel):
    """平均过程参数（以 N 为复杂度参数，ε_N = 1/√N）"""
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    lam: float = Field(..., alias="lambda", gt=0.0)
    x: float = Field(...)
    hurst: float = Field(0.5, gt=0.0, lt=1.0)
    n_average: int = Field(..., alias="N", ge=1, description="平均的独立副本数 N")

    @field_validator("x")
    @classmethod
    def _nonzero(cls, value: float) -> float:
        if value == 0.0:
            raise ValueError("初值 x 不能为 0")
        return value


class MultivariateGaussianParams(_MatrixDriftParams):
    """多元高斯线性过程参数"""
    noise_covariance: Optional[List[List[float]]] = Field(None, description="布朗驱动协方差 Q")
    limit_covariance: Optional[List[List[float]]] = Field(None, description="指定的极限协方差 Σ")

    @model_validator(mode="after")
    def _one_covariance(self):
        if self.noise_covariance is not None and self.limit_covariance is not None:
            raise ValueError("noise_covariance 与 limit_covariance 只能指定其一")
        return self


class GeneralizedOuParams(_MatrixDriftParams):
    """广义 OU 过程参数（分数布朗驱动，可带混合矩阵）"""
    hurst: float = Field(0.5, gt=0.0, lt=1.0)
    noise_matrix: Optional[List[List[float]]] = Field(None, description="驱动混合矩阵 B，D = B·B^H")
    step: Optional[float] = Field(None, gt=0.0, description="模拟网格步长")
    burn_in: Optional[float] = Field(None, gt=0.0, description="预热时长，默认 20/谱间隙")


class KernelParams(BaseModel):
    """协方差函数参数"""
    model_config = ConfigDict(extra="forbid")

    kind: Literal["exponential", "gaussian", "white"] = "exponential"
    matrix: Optional[List[List[float]]] = None
    rate: float = Field(1.0, gt=0.0)


class IteratedOuParams(_MatrixDriftParams):
    """迭代高斯 OU 过程参数"""
    kernel: KernelParams = Field(default_factory=KernelParams)
    horizon: float = Field(60.0, gt=0.0, description="积分截断")
    tol: float = Field(1e-8, gt=0.0, description="尾部容差")


class TauParams(BaseModel):
    """非齐次噪声强度参数"""
    model_config = ConfigDict(extra="forbid")

    kind: Literal["constant", "exponential", "table"] = "constant"
    level: float = Field(1.0, gt=0.0)
    amplitude: float = 0.0
    rate: float = Field(1.0, gt=0.0)
    table: Optional[List[List[float]]] = None


class InhomogeneousParams(_ScalarDriftParams):
    """非齐次方差 OU 过程参数"""
    tau: TauParams = Field(default_factory=TauParams)


class IntegratedOuGaussianParams(_ScalarDriftParams):
    """积分 OU（高斯驱动）参数"""
    y: float = Field(0.0, description="积分初值 y")


class IntegratedOuStableParams(IntegratedOuGaussianParams):
    """积分 OU（α-稳定驱动）参数"""
    alpha: float = Field(1.5, gt=1.0, lt=2.0, description="稳定指数 α")
    c_alpha: float = Field(1.0, gt=0.0, description="常数 C_α")


FAMILY_PARAMS = {
    Family.FOU_1D: Fou1dParams,
    Family.MULTIVARIATE_GAUSSIAN_LINEAR: MultivariateGaussianParams,
    Family.AVERAGING: AveragingParams,
    Family.GENERALIZED_OU: GeneralizedOuParams,
    Family.ITERATED_OU: IteratedOuParams,
    Family.INHOMOGENEOUS: InhomogeneousParams,
    Family.INTEGRATED_OU_GAUSSIAN: IntegratedOuGaussianParams,
    Family.INTEGRATED_OU_STABLE: IntegratedOuStableParams,
}
