"""
服务模块

提供截断实验的计算服务：
- 谱分析与距离计算
- 过程模拟与场景目录
- 实验引擎与产物导出
"""

from cutofflab.services.export_service import (
    ExportFormat,
    ExportService,
    get_export_service,
)

from cutofflab.services.engine import (
    CutoffEngine,
    get_engine,
    karamata_check,
)

__all__ = [
    "ExportFormat",
    "ExportService",
    "get_export_service",
    "CutoffEngine",
    "get_engine",
    "karamata_check",
]
