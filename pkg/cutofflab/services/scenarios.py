"""
场景目录服务模块

将各过程族参数绑定为不可变 Scenario：
- 参数校验（pydantic）与错误映射
- 尺度函数 σ_t 与极限分布 Z
- 精确边缘分布 X^ε_t/(ε·σ_t) 与蒙特卡洛样本
- 场景文件加载（带行号的错误信息）与内置场景
"""

import dataclasses
import hashlib
import json
import math
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ValidationError
from scipy import linalg

from cutofflab.config import get_config
from cutofflab.models.laws import EmpiricalLaw, GaussianLaw, LawDescriptor, StableLawDescriptor
from cutofflab.models.processes import CovarianceKernel, KernelKind, ScaleFunction, TauKind, TauProfile
from cutofflab.models.scenario import (
    FAMILY_PARAMS,
    EvaluationKind,
    Family,
    MetricKind,
    Scenario,
    ScenarioFile,
)
from cutofflab.services import simulate
from cutofflab.services.spectral import validate_stability
from cutofflab.utils.errors import (
    InadmissibleRange,
    MissingParameter,
    MomentViolation,
    NoExactLaw,
    ScenarioFileError,
)
from cutofflab.utils.logger import get_logger
from cutofflab.utils.rng import blockwise

logger = get_logger(__name__)

BUILTIN_PREFIX = "builtin:"
NOISE_KEY = 11
LIMIT_KEY = 12

# 默认评估策略：广义 OU 以蒙特卡洛为主
DEFAULT_EVALUATION = {Family.GENERALIZED_OU: EvaluationKind.MONTE_CARLO}


# ============================================
# 参数校验
# ============================================

def _validation_message(exc: ValidationError) -> str:
    parts = []
    for error in exc.errors():
        loc = ".".join(str(item) for item in error["loc"])
        parts.append(f"{loc}: {error['msg']}" if loc else error["msg"])
    return "; ".join(parts)


def _validate_params(family: Family, params: Dict[str, Any]) -> BaseModel:
    """按过程族模式校验参数，缺失参数映射为 MissingParameter"""
    model = FAMILY_PARAMS[family]
    try:
        return model.model_validate(params)
    except ValidationError as exc:
        missing = [".".join(map(str, e["loc"])) for e in exc.errors() if e["type"] == "missing"]
        if missing:
            raise MissingParameter(f"{family.value} 缺少参数: {', '.join(missing)}") from exc
        raise InadmissibleRange(f"{family.value} 参数非法: {_validation_message(exc)}") from exc


def _family(family: Union[str, Family]) -> Family:
    try:
        return Family(family)
    except ValueError:
        known = ", ".join(f.value for f in Family)
        raise InadmissibleRange(f"未知过程族 {family!r}，可选: {known}")


def _kernel(params: BaseModel) -> CovarianceKernel:
    spec = params.kernel
    m = len(params.x)
    matrix = np.eye(m) if spec.matrix is None else np.asarray(spec.matrix, dtype=float)
    return CovarianceKernel(KernelKind(spec.kind), matrix, spec.rate)


def _tau(params: BaseModel) -> TauProfile:
    spec = params.tau
    table = None
    if spec.table is not None:
        if any(len(row) != 2 for row in spec.table):
            raise InadmissibleRange("τ 表格每行需为 [s, τ(s)]")
        table = (tuple(row[0] for row in spec.table), tuple(row[1] for row in spec.table))
    return TauProfile(TauKind(spec.kind), spec.level, spec.amplitude, spec.rate, table)


def _noise_matrix(params: BaseModel) -> np.ndarray:
    m = len(params.x)
    if params.noise_matrix is None:
        return np.eye(m)
    return np.asarray(params.noise_matrix, dtype=float)


def _limit_covariance(params: BaseModel, drift: np.ndarray) -> np.ndarray:
    """multivariate_gaussian_linear 的 Σ：指定值或 Lyapunov(Λ, Q)"""
    if params.limit_covariance is not None:
        sigma = np.asarray(params.limit_covariance, dtype=float)
        if sigma.shape != drift.shape:
            raise InadmissibleRange(f"极限协方差形状 {sigma.shape} 与漂移矩阵 {drift.shape} 不一致")
        return sigma
    Q = np.eye(drift.shape[0]) if params.noise_covariance is None else np.asarray(params.noise_covariance, dtype=float)
    if Q.shape != drift.shape:
        raise InadmissibleRange(f"噪声协方差形状 {Q.shape} 与漂移矩阵 {drift.shape} 不一致")
    return simulate.lyapunov_covariance(drift, Q)


# ============================================
# 场景构建
# ============================================

def _limit_law(family: Family, params: BaseModel, drift: np.ndarray) -> LawDescriptor:
    """ε 归一化后的极限分布 Z"""
    if family in (Family.FOU_1D, Family.AVERAGING):
        return GaussianLaw.univariate(0.0, simulate.fou_stationary_covariance(params.lam, params.hurst, 0.0))
    if family == Family.MULTIVARIATE_GAUSSIAN_LINEAR:
        return GaussianLaw(np.zeros(drift.shape[0]), _limit_covariance(params, drift))
    if family == Family.GENERALIZED_OU:
        cov = simulate.generalized_ou_stationary_covariance(drift, _noise_matrix(params), params.hurst, 0.0)
        return GaussianLaw(np.zeros(drift.shape[0]), 0.5 * (cov + cov.T))
    if family == Family.ITERATED_OU:
        sigma = simulate.iterated_ou_limit_covariance(drift, _kernel(params), params.horizon, params.tol)
        return GaussianLaw(np.zeros(drift.shape[0]), sigma)
    if family == Family.INHOMOGENEOUS:
        tau = _tau(params)
        return GaussianLaw.univariate(0.0, tau.limit ** 2 / (2.0 * params.lam))
    if family == Family.INTEGRATED_OU_GAUSSIAN:
        return GaussianLaw.univariate(0.0, 1.0 / params.lam ** 2)
    return StableLawDescriptor(params.alpha, params.c_alpha / params.lam ** params.alpha)


def _scale(family: Family, params: BaseModel) -> ScaleFunction:
    if family == Family.INTEGRATED_OU_GAUSSIAN:
        return ScaleFunction.sqrt()
    if family == Family.INTEGRATED_OU_STABLE:
        return ScaleFunction.power(1.0 / params.alpha)
    return ScaleFunction.one()


def build_scenario(
    family: Union[str, Family],
    params: Dict[str, Any],
    metric: Union[str, MetricKind] = MetricKind.TV,
    p: float = 1.0,
    evaluation: Optional[Union[str, EvaluationKind]] = None,
    mc_paths: Optional[int] = None,
    seed: Optional[int] = None,
    name: Optional[str] = None,
) -> Scenario:
    """
    构建并校验场景

    Args:
        family: 过程族
        params: 过程族参数
        metric: 距离类型
        p: Wasserstein 阶数
        evaluation: 评估策略，默认按过程族
        mc_paths: 蒙特卡洛路径数，默认取配置
        seed: 随机种子，默认取配置
        name: 场景名称

    Returns:
        Scenario
    """
    family = _family(family)
    metric = MetricKind(metric)
    model = _validate_params(family, dict(params))
    evaluation = EvaluationKind(evaluation) if evaluation is not None else DEFAULT_EVALUATION.get(family, EvaluationKind.EXACT)
    config = get_config()

    if p < 1:
        raise InadmissibleRange(f"Wasserstein 阶数 p 必须 >= 1, 当前为 {p}")
    if metric == MetricKind.TV and evaluation == EvaluationKind.MONTE_CARLO:
        raise InadmissibleRange("TV 只在精确分布上计算，蒙特卡洛场景请使用 wasserstein")
    if family == Family.INTEGRATED_OU_STABLE and metric == MetricKind.WASSERSTEIN and p >= model.alpha:
        raise MomentViolation(f"稳定驱动要求 p < α (p={p}, α={model.alpha})")
    if family == Family.AVERAGING and evaluation == EvaluationKind.MONTE_CARLO and model.n_average > 10_000:
        logger.info(f"averaging N={model.n_average}: 蒙特卡洛按分布等价 ε_N = 1/√N 抽样")

    if family in (Family.MULTIVARIATE_GAUSSIAN_LINEAR, Family.GENERALIZED_OU, Family.ITERATED_OU):
        drift = np.asarray(model.drift, dtype=float)
        x = np.asarray(model.x, dtype=float)
    else:
        drift = np.array([[model.lam]])
        x = np.array([model.x])
    stable = validate_stability(drift)

    if family == Family.AVERAGING:
        epsilon = 1.0 / math.sqrt(model.n_average)
    else:
        epsilon = model.epsilon
    asymptotic = -x / model.lam if family in (Family.INTEGRATED_OU_GAUSSIAN, Family.INTEGRATED_OU_STABLE) else x

    scenario = Scenario(
        name=name or family.value,
        family=family,
        params=model.model_dump(by_alias=True),
        drift=stable,
        initial_datum=x,
        asymptotic_datum=asymptotic,
        epsilon=epsilon,
        scale=_scale(family, model),
        limit_law=_limit_law(family, model, drift),
        metric=metric,
        p=float(p),
        evaluation=evaluation,
        mc_paths=int(mc_paths or config.mc_paths),
        seed=int(config.seed if seed is None else seed),
    )
    logger.debug(f"场景已构建: {scenario.name} ({family.value}, {scenario.metric_tag}, {evaluation.value})")
    return scenario


def with_epsilon(s: Scenario, epsilon: float) -> Scenario:
    """替换噪声强度 ε（平均过程对应 N = 1/ε²）"""
    return dataclasses.replace(s, epsilon=float(epsilon))


def scenario_limit_law(s: Scenario) -> LawDescriptor:
    """极限分布 Z（ε 归一化后）"""
    return s.limit_law


def scenario_hash(s: Scenario) -> str:
    """场景规范 JSON 的 SHA-256"""
    canonical = json.dumps(s.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _model(s: Scenario) -> BaseModel:
    return FAMILY_PARAMS[s.family].model_validate(dict(s.params))


# ============================================
# 边缘分布
# ============================================

def marginal_law(s: Scenario, t: float) -> LawDescriptor:
    """
    X^ε_t(x)/(ε·σ_t) 的精确分布

    Args:
        s: 场景
        t: 时间 >= 0（积分 OU 要求 t > 0）

    Returns:
        GaussianLaw 或 StableLawDescriptor
    """
    if t < 0:
        raise InadmissibleRange(f"时间 t 必须 >= 0, 当前为 {t}")
    params = _model(s)
    eps = s.epsilon
    drift = np.asarray(s.drift.entries)
    family = s.family

    if family in (Family.FOU_1D, Family.AVERAGING):
        return simulate.fou_marginal_law(params.lam, params.hurst, eps, params.x, t).scaled(1.0 / eps)
    if family == Family.INHOMOGENEOUS:
        value, _ = simulate.inhomogeneous_variance(params.lam, _tau(params), t)
        return GaussianLaw.univariate(math.exp(-params.lam * t) * params.x / eps, value)
    if family == Family.INTEGRATED_OU_GAUSSIAN:
        return simulate.integrated_ou_law(params.lam, eps, params.x, t).scaled(1.0 / eps)
    if family == Family.INTEGRATED_OU_STABLE:
        law = simulate.integrated_ou_law(params.lam, eps, params.x, t, "stable", params.alpha, params.c_alpha)
        return law.scaled(1.0 / eps)

    mean = linalg.expm(-drift * t) @ s.initial_datum / eps
    if family == Family.MULTIVARIATE_GAUSSIAN_LINEAR:
        cov = simulate.multivariate_noise_covariance(drift, s.limit_law.covariance, t)
    elif family == Family.ITERATED_OU:
        cov = simulate.iterated_ou_noise_covariance(drift, _kernel(params), t, params.tol)
    elif s.evaluation == EvaluationKind.EXACT:
        cov = simulate.generalized_ou_noise_covariance(drift, _noise_matrix(params), params.hurst, t)
    else:
        raise NoExactLaw(f"{s.name}: 蒙特卡洛场景没有精确边缘分布")
    return GaussianLaw(mean, cov)


def _law_sampler(law: LawDescriptor):
    if isinstance(law, GaussianLaw):
        return law.sample
    if isinstance(law, StableLawDescriptor):
        def sample(rng, count):
            return (law.loc + law.sigma * simulate.stable_variates(rng, law.alpha, count))[:, None]
        return sample
    raise NoExactLaw("经验分布不能再抽样")


def law_samples(law: LawDescriptor, n: int, seed: int, key: Tuple[int, ...] = (), threads: Optional[int] = None) -> np.ndarray:
    """按块派生随机流，从分布抽取 n 个样本，形状 (n, m)"""
    if isinstance(law, EmpiricalLaw):
        return np.array(law.samples)
    return blockwise(n, seed, _law_sampler(law), threads=threads, key=key)


def noise_samples(
    s: Scenario,
    times: Sequence[float],
    n: int,
    seed: Optional[int] = None,
    key: Tuple[int, ...] = (),
    threads: Optional[int] = None,
) -> np.ndarray:
    """
    X^ε_t/(ε·σ_t) 的蒙特卡洛样本，形状 (len(times), n, m)

    广义 OU 逐路径模拟 e^{−Λt}x/ε + S_t；其余过程族从精确分布抽样
    （平均过程按分布等价 ε_N = 1/√N）。
    """
    seed = s.seed if seed is None else seed
    times = np.asarray(times, dtype=float)
    if s.family == Family.GENERALIZED_OU:
        params = _model(s)
        step = params.step or 0.01
        drift = np.asarray(s.drift.entries)
        S = simulate.generalized_ou_samples(
            drift, _noise_matrix(params), params.hurst, step, times, n, seed,
            burn_in=params.burn_in, threads=threads, key=(NOISE_KEY,) + tuple(key),
        )
        means = np.stack([linalg.expm(-drift * t) @ s.initial_datum / s.epsilon for t in times])
        return S + means[:, None, :]

    exact = dataclasses.replace(s, evaluation=EvaluationKind.EXACT)
    return np.stack([
        law_samples(marginal_law(exact, float(t)), n, seed, key=(NOISE_KEY,) + tuple(key) + (i,), threads=threads)
        for i, t in enumerate(times)
    ])


def limit_samples(s: Scenario, n: int, seed: Optional[int] = None, key: Tuple[int, ...] = (), threads: Optional[int] = None) -> np.ndarray:
    """极限分布 Z 的样本，形状 (n, m)"""
    seed = s.seed if seed is None else seed
    return law_samples(s.limit_law, n, seed, key=(LIMIT_KEY,) + tuple(key), threads=threads)


# ============================================
# 场景文件
# ============================================

def _locate(text: str, loc: Sequence[Any]) -> Optional[int]:
    """按 pydantic 错误路径在 JSON 文本中定位行号"""
    position = 0
    found = None
    for item in loc:
        if not isinstance(item, str):
            continue
        index = text.find(f'"{item}"', position)
        if index < 0:
            break
        position = index
        found = index
    if found is None:
        return None
    return text.count("\n", 0, found) + 1


def scenario_from_dict(data: Dict[str, Any], text: str = "", path: Optional[str] = None) -> Scenario:
    """由场景字典构建场景，错误附带文件行号"""
    try:
        spec = ScenarioFile.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        raise ScenarioFileError(_validation_message(exc), path, _locate(text, first["loc"])) from exc

    try:
        return build_scenario(
            spec.family, spec.params, spec.metric, spec.p, spec.evaluation, spec.mc_paths, spec.seed, spec.name,
        )
    except (MissingParameter, InadmissibleRange) as exc:
        cause = exc.__cause__
        line = None
        if isinstance(cause, ValidationError):
            line = _locate(text, ("params",) + tuple(cause.errors()[0]["loc"]))
        elif path is not None:
            line = _locate(text, ("params",))
        if path is None:
            raise
        raise ScenarioFileError(str(exc), path, line) from exc


def load_scenario_file(path: Union[str, Path]) -> Scenario:
    """
    加载 JSON 场景文件

    Args:
        path: 文件路径

    Returns:
        Scenario
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioFileError(f"无法读取场景文件: {exc}", str(path))
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioFileError(f"JSON 语法错误: {exc.msg}", str(path), exc.lineno) from exc
    if not isinstance(data, dict):
        raise ScenarioFileError("场景文件顶层必须是对象", str(path), 1)
    logger.info(f"加载场景文件: {path}")
    return scenario_from_dict(data, text, str(path))


# ============================================
# 内置场景
# ============================================

ROTATION = [[1.0, -2.0], [2.0, 1.0]]

BUILTIN_SCENARIOS: Dict[str, Dict[str, Any]] = {
    "fou-h03": {"family": "fou_1d", "params": {"lambda": 1.0, "x": 1.0, "hurst": 0.3, "epsilon": 1e-4}},
    "fou-h05": {"family": "fou_1d", "params": {"lambda": 1.0, "x": 1.0, "hurst": 0.5, "epsilon": 1e-4}},
    "fou-h07": {"family": "fou_1d", "params": {"lambda": 1.0, "x": 1.0, "hurst": 0.7, "epsilon": 1e-4}},
    "rotation-isotropic": {
        "family": "multivariate_gaussian_linear",
        "params": {"drift": ROTATION, "x": [1.0, 0.0], "limit_covariance": [[1.0, 0.0], [0.0, 1.0]]},
    },
    "rotation-anisotropic": {
        "family": "multivariate_gaussian_linear",
        "params": {"drift": ROTATION, "x": [1.0, 0.0], "limit_covariance": [[1.0, 0.0], [0.0, 4.0]]},
    },
    "jordan": {
        "family": "multivariate_gaussian_linear",
        "params": {"drift": [[1.0, -1.0], [0.0, 1.0]], "x": [0.0, 1.0], "noise_covariance": [[1.0, 0.0], [0.0, 1.0]]},
    },
    "averaging": {
        "family": "averaging",
        "params": {"lambda": 1.0, "x": 1.0, "hurst": 0.7, "N": 10_000},
        "metric": "wasserstein",
    },
    "iterated-ou": {
        "family": "iterated_ou",
        "params": {"drift": [[1.0]], "x": [1.0], "kernel": {"kind": "exponential", "rate": 1.0}},
    },
    "inhomogeneous": {
        "family": "inhomogeneous",
        "params": {"lambda": 1.0, "x": 1.0, "tau": {"kind": "exponential", "level": 1.0, "amplitude": 1.0, "rate": 1.0}},
    },
    "integrated-gaussian": {"family": "integrated_ou_gaussian", "params": {"lambda": 1.0, "x": 1.0, "epsilon": 1e-3}},
    "integrated-stable": {
        "family": "integrated_ou_stable",
        "params": {"lambda": 1.0, "x": 1.0, "alpha": 1.5, "epsilon": 1e-3},
        "metric": "wasserstein",
    },
    "generalized-ou": {
        "family": "generalized_ou",
        "params": {"drift": [[1.0, -1.0], [0.0, 1.0]], "x": [0.0, 1.0], "hurst": 0.7, "step": 0.01, "epsilon": 1e-2},
        "metric": "wasserstein",
        "mc_paths": 2048,
    },
}


def builtin_scenario(name: str, seed: Optional[int] = None) -> Scenario:
    """按名称构建内置场景"""
    if name not in BUILTIN_SCENARIOS:
        raise InadmissibleRange(f"未知内置场景 {name!r}，可选: {', '.join(sorted(BUILTIN_SCENARIOS))}")
    data = dict(BUILTIN_SCENARIOS[name], name=name)
    if seed is not None:
        data["seed"] = seed
    return scenario_from_dict(data)


def resolve_scenario(reference: str, seed: Optional[int] = None) -> Scenario:
    """解析 `builtin:<name>` 或 JSON 文件路径"""
    if reference.startswith(BUILTIN_PREFIX):
        return builtin_scenario(reference[len(BUILTIN_PREFIX):], seed)
    scenario = load_scenario_file(reference)
    if seed is not None:
        scenario = dataclasses.replace(scenario, seed=int(seed))
    return scenario
