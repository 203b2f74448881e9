"""
随机数流与并行执行工具

- 每个路径块使用由 (seed, 块序号) 派生的独立 Philox 流
- 线程池大小受 CUTOFFLAB_THREADS 限制
- 结果与线程数无关
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, Sequence, Tuple, TypeVar

import numpy as np

from cutofflab.config import get_config
from cutofflab.utils.logger import get_logger

logger = get_logger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def stream(seed: int, *key: int) -> np.random.Generator:
    """
    派生确定性随机数生成器

    Args:
        seed: 64 位种子
        *key: 派生键（如块序号、ε 序号、r 序号）

    Returns:
        独立的 numpy Generator
    """
    ss = np.random.SeedSequence(entropy=int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def path_blocks(n: int, block_size: Optional[int] = None) -> List[Tuple[int, int, int]]:
    """
    将 n 条路径切分为固定大小的块

    Returns:
        (块序号, 起始, 结束) 列表
    """
    size = block_size or get_config().block_size
    return [(i, start, min(start + size, n)) for i, start in enumerate(range(0, n, size))]


def parallel_map(func: Callable[[T], R], items: Sequence[T], threads: Optional[int] = None) -> List[R]:
    """
    在线程池中按顺序映射

    Args:
        func: 纯函数
        items: 输入序列
        threads: 线程数上限，默认取配置

    Returns:
        与输入顺序一致的结果列表
    """
    workers = max(1, min(threads or get_config().threads, len(items) or 1))
    if workers == 1:
        return [func(item) for item in items]
    logger.debug(f"parallel_map: {len(items)} tasks on {workers} threads")
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


def blockwise(
    n: int,
    seed: int,
    sampler: Callable[[np.random.Generator, int], np.ndarray],
    threads: Optional[int] = None,
    block_size: Optional[int] = None,
    key: Iterable[int] = (),
) -> np.ndarray:
    """
    分块生成 n 个样本并按路径顺序拼接

    Args:
        n: 样本（路径）数
        seed: 种子
        sampler: (rng, 块内数量) -> 数组，首轴为路径
        threads: 线程数上限
        block_size: 块大小
        key: 附加派生键

    Returns:
        拼接后的数组
    """
    prefix = tuple(key)
    blocks = path_blocks(n, block_size)

    def run(block: Tuple[int, int, int]) -> np.ndarray:
        index, start, stop = block
        return sampler(stream(seed, *prefix, index), stop - start)

    parts = parallel_map(run, blocks, threads)
    return np.concatenate(parts, axis=0)
