"""
配置管理模块

从环境变量加载配置，提供配置访问接口。
支持线程数、随机种子、蒙特卡洛规模、日志等配置。
"""

import os
from typing import Optional, Dict, Any

from dotenv import load_dotenv

from cutofflab.utils.errors import ConfigError

# 加载 .env 文件（如果存在）
load_dotenv()

DEFAULT_SEED = 0xC0FFEE


def _parse_int(name: str, raw: Optional[str], default: int, minimum: int = 0) -> int:
    """解析整数环境变量，支持十进制与 0x 十六进制"""
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw.strip(), 0)
    except ValueError:
        raise ConfigError(f"环境变量 {name} 不是整数: {raw!r}")
    if value < minimum:
        raise ConfigError(f"环境变量 {name} 必须 >= {minimum}, 当前为 {value}")
    return value


class Config:
    """应用配置类"""

    def __init__(self):
        """初始化配置，从环境变量加载所有配置项"""
        # 并行配置
        default_threads = min(os.cpu_count() or 1, 8)
        self.threads: int = _parse_int(
            "CUTOFFLAB_THREADS", os.getenv("CUTOFFLAB_THREADS"), default_threads, minimum=1
        )

        # 随机数配置
        self.seed: int = _parse_int("CUTOFFLAB_SEED", os.getenv("CUTOFFLAB_SEED"), DEFAULT_SEED)
        self.block_size: int = _parse_int(
            "CUTOFFLAB_BLOCK_SIZE", os.getenv("CUTOFFLAB_BLOCK_SIZE"), 4096, minimum=1
        )

        # 蒙特卡洛配置
        self.mc_paths: int = _parse_int(
            "CUTOFFLAB_MC_PATHS", os.getenv("CUTOFFLAB_MC_PATHS"), 100_000, minimum=2
        )
        self.bootstrap_resamples: int = _parse_int(
            "CUTOFFLAB_BOOTSTRAP", os.getenv("CUTOFFLAB_BOOTSTRAP"), 200, minimum=2
        )

        # 输出配置
        self.output_dir: str = os.getenv("CUTOFFLAB_OUTPUT_DIR", "output")

        # 日志配置
        self.log_level: str = os.getenv("LOG_LEVEL", "INFO").upper()
        self.log_file: Optional[str] = os.getenv("LOG_FILE") or None

    def get(self, key: str, default: Any = None) -> Any:
        """
        获取配置项

        Args:
            key: 配置键名
            default: 默认值

        Returns:
            配置值或默认值
        """
        return getattr(self, key, default)

    def to_dict(self) -> Dict[str, Any]:
        """将配置转换为字典"""
        return dict(self.__dict__)


# 全局配置实例
_config: Optional[Config] = None


def get_config() -> Config:
    """
    获取全局配置实例（单例模式）

    Returns:
        配置实例
    """
    global _config
    if _config is None:
        _config = Config()
    return _config


def reload_config() -> Config:
    """
    重新加载配置

    Returns:
        新的配置实例
    """
    global _config
    _config = Config()
    return _config
