"""
带重试的数值积分

- 使用 tenacity 实现重试机制，每次重试将子区间上限扩大 4 倍
- 积分器报告失败且误差估计超出容差时抛出 QuadratureFailure
"""

from typing import Callable, Optional

import numpy as np
from scipy import integrate
from tenacity import retry, retry_if_exception_type, stop_after_attempt, wait_none

from cutofflab.utils.errors import QuadratureFailure
from cutofflab.utils.logger import get_logger

logger = get_logger(__name__)

MAX_ATTEMPTS = 3


def _tolerable(value: float, abserr: float, epsabs: float, epsrel: float) -> bool:
    return abserr <= 10.0 * max(epsabs, epsrel * abs(value))


def quad_checked(
    func: Callable[[float], float],
    a: float,
    b: float,
    epsabs: float = 1e-10,
    epsrel: float = 1e-10,
    limit: int = 200,
    weight: Optional[str] = None,
    wvar: Optional[float] = None,
) -> float:
    """
    一维自适应积分（QUADPACK）

    Args:
        func: 被积函数
        a: 下限（可为 -inf）
        b: 上限（可为 inf）
        epsabs: 绝对容差
        epsrel: 相对容差
        limit: 初始子区间上限
        weight: 可选权函数 ('cos' / 'sin')
        wvar: 权函数频率

    Returns:
        积分值
    """
    state = {"limit": limit}

    @retry(
        stop=stop_after_attempt(MAX_ATTEMPTS),
        wait=wait_none(),
        retry=retry_if_exception_type(QuadratureFailure),
        reraise=True,
    )
    def run() -> float:
        kwargs = {"epsabs": epsabs, "limit": state["limit"], "full_output": 1}
        if weight is not None:
            kwargs["weight"] = weight
            kwargs["wvar"] = wvar
            if not np.isinf(b):
                kwargs["epsrel"] = epsrel
        else:
            kwargs["epsrel"] = epsrel
        result = integrate.quad(func, a, b, **kwargs)
        value, abserr = float(result[0]), float(result[1])
        if len(result) > 3 and not _tolerable(value, abserr, epsabs, epsrel):
            logger.debug(f"积分未收敛 (limit={state['limit']}): {result[3]}")
            state["limit"] *= 4
            raise QuadratureFailure(f"积分 [{a}, {b}] 未达到容差: 误差估计 {abserr:.3e}")
        return value

    return run()


def quad_vec_checked(
    func: Callable[[float], np.ndarray],
    a: float,
    b: float,
    epsabs: float = 1e-10,
    epsrel: float = 1e-8,
    limit: int = 2000,
) -> np.ndarray:
    """
    向量值自适应积分，失败时按相同策略重试

    Returns:
        积分值数组
    """
    state = {"limit": limit}

    @retry(
        stop=stop_after_attempt(MAX_ATTEMPTS),
        wait=wait_none(),
        retry=retry_if_exception_type(QuadratureFailure),
        reraise=True,
    )
    def run() -> np.ndarray:
        value, abserr, info = integrate.quad_vec(
            func, a, b, epsabs=epsabs, epsrel=epsrel, limit=state["limit"], full_output=True
        )
        scale = float(np.max(np.abs(value))) if np.size(value) else 0.0
        if not info.success and not _tolerable(scale, float(abserr), epsabs, epsrel):
            state["limit"] *= 4
            raise QuadratureFailure(f"向量积分 [{a}, {b}] 未达到容差: 误差估计 {abserr:.3e}")
        return np.asarray(value)

    return run()
