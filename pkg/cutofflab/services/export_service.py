"""
产物导出服务模块

将表格与曲线写为可复现的文件产物：
- CSV：表头行、小数点 '.'、17 位有效数字
- JSON：记录附带 `_provenance` 字段
- SVG：实测点（带误差条）与理论曲线
每个产物都携带配置哈希、种子与版本。
"""

import io
import json
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from cutofflab import __version__  # noqa: E402
from cutofflab.config import get_config  # noqa: E402
from cutofflab.models.reports import ProfileCurve  # noqa: E402
from cutofflab.utils.errors import IoError  # noqa: E402
from cutofflab.utils.logger import get_logger  # noqa: E402

logger = get_logger(__name__)

SVG_HASH_SALT = "cutofflab"


class ExportFormat(str, Enum):
    """导出格式枚举"""
    CSV = "csv"
    JSON = "json"
    SVG = "svg"


def provenance(config_hash: str, seed: int) -> Dict[str, Any]:
    """产物来源信息"""
    return {"config_hash": config_hash, "seed": int(seed), "version": __version__}


def provenance_line(meta: Dict[str, Any]) -> str:
    """单行来源注释正文"""
    return f"cutofflab {meta['version']} config_hash={meta['config_hash']} seed={meta['seed']}"


class ExportService:
    """产物导出服务类"""

    def __init__(self, output_dir: Optional[Union[str, Path]] = None):
        """
        初始化导出服务

        Args:
            output_dir: 默认输出目录
        """
        self.output_dir = Path(output_dir) if output_dir is not None else None

    def _target(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        if not path.is_absolute() and self.output_dir is not None:
            path = self.output_dir / path
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise IoError(f"无法创建输出目录 {path.parent}: {exc}")
        return path

    def _write(self, path: Path, text: str) -> Path:
        try:
            with open(path, "w", encoding="utf-8", newline="\n") as handle:
                handle.write(text)
        except OSError as exc:
            raise IoError(f"写入 {path} 失败: {exc}")
        logger.info(f"产物已写入: {path}")
        return path

    def emit_csv(self, table: pd.DataFrame, path: Union[str, Path], meta: Dict[str, Any]) -> Path:
        """
        写出 CSV 表格

        Args:
            table: 非空数据表
            path: 目标文件
            meta: 来源信息

        Returns:
            写出的文件路径
        """
        if table is None or table.empty:
            raise IoError("表格为空，未写出文件")
        body = table.to_csv(index=False, float_format="%.17g", lineterminator="\n")
        return self._write(self._target(path), f"# {provenance_line(meta)}\n{body}")

    def emit_json(self, record: Any, path: Union[str, Path], meta: Dict[str, Any]) -> Path:
        """写出 JSON 记录，来源信息置于 `_provenance` 字段"""
        if record is None or (hasattr(record, "__len__") and len(record) == 0):
            raise IoError("记录为空，未写出文件")
        payload = {"_provenance": meta, "data": record}
        text = json.dumps(payload, indent=2, ensure_ascii=False, allow_nan=False, default=_json_default)
        return self._write(self._target(path), text + "\n")

    def emit_plot(self, curves: Sequence[ProfileCurve], path: Union[str, Path], meta: Dict[str, Any]) -> Path:
        """
        写出 SVG 曲线图：每个 ε 一组带误差条的实测点，外加一条理论曲线

        Args:
            curves: 非空曲线列表
            path: 目标文件
            meta: 来源信息

        Returns:
            写出的文件路径
        """
        if not curves:
            raise IoError("曲线为空，未写出文件")

        with plt.rc_context({"svg.hashsalt": SVG_HASH_SALT, "svg.fonttype": "none"}):
            fig, ax = plt.subplots(figsize=(6.4, 4.0))
            for curve in curves:
                if curve.measured is None:
                    continue
                label = "measured" if curve.epsilon is None else f"measured ε={curve.epsilon:g}"
                yerr = None if curve.stderr is None or not np.any(np.isfinite(curve.stderr)) else np.nan_to_num(curve.stderr)
                ax.errorbar(curve.r_grid, curve.measured, yerr=yerr, fmt="o", markersize=3, capsize=2, label=label)
            reference = curves[-1]
            ax.plot(reference.r_grid, reference.theoretical, "-", color="black", label=f"profile ({reference.metric})")
            ax.set_xlabel("r")
            ax.set_ylabel("distance")
            ax.legend(loc="best", fontsize="small")
            fig.tight_layout()
            buffer = io.StringIO()
            fig.savefig(buffer, format="svg", metadata={"Date": None, "Creator": f"cutofflab {meta['version']}"})
            plt.close(fig)

        svg = buffer.getvalue()
        head, _, rest = svg.partition("\n")
        text = f"{head}\n<!-- {provenance_line(meta)} -->\n{rest}"
        return self._write(self._target(path), text)

    def emit(self, fmt: ExportFormat, stem: str, meta: Dict[str, Any], table: Optional[pd.DataFrame] = None,
             record: Any = None, curves: Optional[List[ProfileCurve]] = None,
             output_dir: Optional[Union[str, Path]] = None) -> Path:
        """按格式分发，output_dir 覆盖服务的默认输出目录"""
        fmt = ExportFormat(fmt)
        path = Path(f"{stem}.{fmt.value}")
        if output_dir is not None:
            path = Path(output_dir).resolve() / path
        if fmt == ExportFormat.CSV:
            return self.emit_csv(table, path, meta)
        if fmt == ExportFormat.JSON:
            return self.emit_json(record, path, meta)
        if not curves:
            raise IoError("该命令没有可绘制的曲线，请使用 csv 或 json 格式")
        return self.emit_plot(curves, path, meta)


def _json_default(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Enum):
        return value.value
    raise TypeError(f"无法序列化类型 {type(value).__name__}")


# 全局服务实例
_export_service: Optional[ExportService] = None


def get_export_service() -> ExportService:
    """获取导出服务实例（默认输出目录取自配置）"""
    global _export_service
    if _export_service is None:
        _export_service = ExportService(get_config().output_dir)
    return _export_service
