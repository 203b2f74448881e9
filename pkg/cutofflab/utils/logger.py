"""
日志配置模块
提供统一的日志配置和管理

控制台输出写到 stderr，stdout 只打印产物路径。
"""
import logging
import sys
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Optional, Union

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"

# 绘图依赖在字体查找时会输出大量 DEBUG 日志
NOISY_LOGGERS = ("matplotlib", "PIL")

LevelLike = Union[int, str]


def resolve_level(level: LevelLike) -> int:
    """把 "debug"/"INFO" 等名称或整数转换为日志级别，未知名称按 INFO 处理"""
    if isinstance(level, int):
        return level
    resolved = logging.getLevelName(str(level).strip().upper())
    return resolved if isinstance(resolved, int) else logging.INFO


def set_level(logger: logging.Logger, level: LevelLike) -> logging.Logger:
    """同时调整记录器及其全部处理器的级别"""
    level = resolve_level(level)
    logger.setLevel(level)
    for handler in logger.handlers:
        handler.setLevel(level)
    return logger


def setup_logger(
    name: str = "cutofflab",
    level: LevelLike = logging.INFO,
    log_file: Optional[str] = None,
    max_bytes: int = 10 * 1024 * 1024,  # 10MB
    backup_count: int = 5
) -> logging.Logger:
    """
    设置日志记录器

    已配置过的记录器只调整级别，不重复添加处理器。

    Args:
        name: 日志记录器名称
        level: 日志级别（整数或名称）
        log_file: 日志文件路径，为空时只输出到控制台
        max_bytes: 单个日志文件最大字节数
        backup_count: 保留的备份文件数量

    Returns:
        配置好的日志记录器
    """
    logger = logging.getLogger(name)
    if logger.handlers:
        return set_level(logger, level)

    formatter = logging.Formatter(fmt=LOG_FORMAT, datefmt=DATE_FORMAT)
    handlers = [logging.StreamHandler(sys.stderr)]
    if log_file:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
        handlers.append(RotatingFileHandler(
            log_file,
            maxBytes=max_bytes,
            backupCount=backup_count,
            encoding="utf-8"
        ))
    for handler in handlers:
        handler.setFormatter(formatter)
        logger.addHandler(handler)

    for noisy in NOISY_LOGGERS:
        logging.getLogger(noisy).setLevel(logging.WARNING)
    return set_level(logger, level)


def get_logger(name: str) -> logging.Logger:
    """获取日志记录器（模块内用 get_logger(__name__)，挂在 cutofflab 之下）"""
    return logging.getLogger(name)
