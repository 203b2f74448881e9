"""
实验结果模型

- ProfileCurve: r ↦ 距离的采样曲线（实测与理论）
- CutoffReport: 截断收敛与 profile/window 分类报告
- CheckResult: 验证套件中的单项检查
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from cutofflab.models.spectral import CutoffSchedule

NEGATIVE_TIME = "negative_time"


@dataclass(frozen=True, eq=False)
class ProfileCurve:
    """沿 t^cut_ε + r·w 的距离曲线"""
    r_grid: np.ndarray
    theoretical: np.ndarray
    metric: str
    window_w: float
    measured: Optional[np.ndarray] = None
    stderr: Optional[np.ndarray] = None
    epsilon: Optional[float] = None
    schedule: Optional[CutoffSchedule] = None
    times: Optional[np.ndarray] = None
    flags: Tuple[str, ...] = ()

    def __post_init__(self):
        n = len(self.r_grid)
        for name in ("r_grid", "theoretical", "measured", "stderr", "times"):
            value = getattr(self, name)
            if value is None:
                continue
            array = np.asarray(value, dtype=float)
            if array.shape != (n,):
                raise ValueError(f"曲线字段 {name} 长度 {array.shape} 与 r 网格长度 {n} 不一致")
            object.__setattr__(self, name, array)
        if self.flags and len(self.flags) != n:
            raise ValueError("曲线标记长度与 r 网格不一致")
        if self.measured is not None:
            finite = self.measured[np.isfinite(self.measured)]
            if np.any(finite < 0) or (self.metric == "tv" and np.any(finite > 1 + 1e-12)):
                raise ValueError(f"实测距离超出 {self.metric} 的取值范围")

    @property
    def is_theoretical_only(self) -> bool:
        return self.measured is None

    @property
    def gaps(self) -> np.ndarray:
        if self.measured is None:
            return np.full(len(self.r_grid), np.nan)
        return np.abs(self.measured - self.theoretical)

    @property
    def sup_gap(self) -> float:
        """sup_r |measured − theoretical|（跳过 NegativeTime 单元）"""
        gaps = self.gaps
        valid = gaps[np.isfinite(gaps)]
        return float(valid.max()) if valid.size else float("nan")

    def to_frame(self) -> pd.DataFrame:
        """列: epsilon, r, t, measured, theoretical, gap, stderr"""
        n = len(self.r_grid)
        nan = np.full(n, np.nan)
        return pd.DataFrame({
            "epsilon": np.full(n, np.nan if self.epsilon is None else self.epsilon),
            "r": self.r_grid,
            "t": nan if self.times is None else self.times,
            "measured": nan if self.measured is None else self.measured,
            "theoretical": self.theoretical,
            "gap": self.gaps,
            "stderr": nan if self.stderr is None else self.stderr,
        })

    def to_dict(self) -> Dict[str, Any]:
        frame = self.to_frame()
        return {
            "metric": self.metric,
            "window_w": self.window_w,
            "epsilon": self.epsilon,
            "schedule": None if self.schedule is None else self.schedule.to_dict(),
            "flags": list(self.flags),
            "rows": json_rows(frame),
        }


class CutoffClass(str, Enum):
    """截断类型"""
    PROFILE = "profile"
    WINDOW_ONLY = "window-only"


@dataclass(eq=False)
class CutoffReport:
    """截断报告"""
    scenario: str
    metric: str
    classification: Optional[CutoffClass] = None
    spread: float = 0.0
    tolerance: float = 0.0
    rho_at_max: Optional[float] = None
    v_check: Optional[np.ndarray] = None
    v_hat: Optional[np.ndarray] = None
    sup_gaps: Dict[float, float] = field(default_factory=dict)
    monotone: Optional[bool] = None
    inversions: int = 0
    negative_time_cells: List[Tuple[float, float]] = field(default_factory=list)
    envelope_r: Optional[np.ndarray] = None
    liminf_profile: Optional[np.ndarray] = None
    limsup_profile: Optional[np.ndarray] = None
    curves: List[ProfileCurve] = field(default_factory=list)

    def __post_init__(self):
        if self.classification == CutoffClass.PROFILE and self.spread > self.tolerance:
            raise ValueError("profile 分类要求常值离差不超过容差")

    def gap_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "epsilon": list(self.sup_gaps.keys()),
            "sup_gap": list(self.sup_gaps.values()),
        })

    def envelope_frame(self) -> pd.DataFrame:
        if self.envelope_r is None:
            return pd.DataFrame(columns=["r", "liminf", "limsup"])
        return pd.DataFrame({"r": self.envelope_r, "liminf": self.liminf_profile, "limsup": self.limsup_profile})

    def to_dict(self) -> Dict[str, Any]:
        def vec(v):
            return None if v is None else np.asarray(v).tolist()

        return {
            "scenario": self.scenario,
            "metric": self.metric,
            "classification": None if self.classification is None else self.classification.value,
            "spread": self.spread,
            "tolerance": self.tolerance,
            "rho_at_max": self.rho_at_max,
            "v_check": vec(self.v_check),
            "v_hat": vec(self.v_hat),
            "sup_gaps": [{"epsilon": e, "sup_gap": g} for e, g in self.sup_gaps.items()],
            "monotone": self.monotone,
            "inversions": self.inversions,
            "negative_time_cells": [list(cell) for cell in self.negative_time_cells],
            "envelope": json_rows(self.envelope_frame()),
        }


@dataclass(frozen=True)
class CheckResult:
    """验证套件中的单项检查"""
    name: str
    value: float
    expected: float
    tolerance: float
    passed: bool
    note: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "value": self.value,
            "expected": self.expected,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "note": self.note,
        }


def json_rows(frame: pd.DataFrame) -> List[Dict[str, Any]]:
    """DataFrame → JSON 兼容行（NaN 记为 None）"""
    records = frame.astype(object).where(pd.notna(frame), None).to_dict(orient="records")
    return [{k: (float(v) if isinstance(v, (float, np.floating)) else v) for k, v in row.items()} for row in records]
