"""
命令行入口

子命令：
- analyze   漂移矩阵谱分析（λ, ℓ, m*, θ, ω(x) 类型）
- profile   理论极限轮廓
- curve     实测与理论距离曲线
- classify  profile / window-only 截断分类
- verify    单场景验证套件

退出码：0 成功；1 配置错误；2 数值失败或验证未通过。
"""

import argparse
import hashlib
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from cutofflab import __version__
from cutofflab.config import get_config
from cutofflab.models.reports import CutoffReport
from cutofflab.models.scenario import MetricKind, Scenario
from cutofflab.services import scenarios, spectral
from cutofflab.services.engine import DEFAULT_RHO_GRID, DEFAULT_TOL, get_engine
from cutofflab.services.export_service import ExportFormat, get_export_service, provenance
from cutofflab.utils.errors import ConfigError, CutoffLabError, IoError
from cutofflab.utils.logger import get_logger, set_level, setup_logger

logger = get_logger(__name__)

COMMANDS = ("analyze", "profile", "curve", "classify", "verify")
DEFAULT_R_GRID = "-3:3:0.5"
METRIC_ALIASES = {"tv": MetricKind.TV, "wp": MetricKind.WASSERSTEIN, "wasserstein": MetricKind.WASSERSTEIN}


class _Parser(argparse.ArgumentParser):
    """用法错误按配置错误处理（退出码 1）"""

    def error(self, message: str):
        raise ConfigError(f"{self.prog}: {message}")


@dataclass
class RunConfig:
    """一次命令行运行的完整配置"""
    command: str
    scenario: Optional[str] = None
    out: str = "output"
    seed: Optional[int] = None
    format: ExportFormat = ExportFormat.CSV
    epsilon: List[float] = field(default_factory=list)
    r_grid: List[float] = field(default_factory=list)
    metric: Optional[str] = None
    p: Optional[float] = None
    w: float = 1.0
    rho: List[float] = field(default_factory=lambda: list(DEFAULT_RHO_GRID))
    tol: float = DEFAULT_TOL
    matrix: Optional[str] = None
    x: Optional[List[float]] = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"未知子命令 {self.command!r}")
        self.format = ExportFormat(self.format)
        if self.w <= 0:
            raise ConfigError(f"窗口宽度 w 必须为正, 当前为 {self.w}")
        if self.command == "analyze":
            if self.scenario is None and self.matrix is None:
                raise ConfigError("analyze 需要 --scenario 或 --matrix")
            if self.matrix is not None and self.x is None:
                raise ConfigError("--matrix 需要同时给出 --x")
        elif self.scenario is None:
            raise ConfigError(f"{self.command} 需要 --scenario")

    def config_hash(self, subject: Dict[str, Any]) -> str:
        """运行配置与场景记录的 SHA-256（前 16 位）"""
        record = asdict(self)
        record["format"] = self.format.value
        record.pop("out")
        canonical = json.dumps({"run": record, "subject": subject}, sort_keys=True, separators=(",", ":"), default=str)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def parse_float_list(text: str) -> List[float]:
    """解析逗号分隔的浮点列表"""
    try:
        values = [float(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise ConfigError(f"无法解析数值列表: {text!r}")
    if not values:
        raise ConfigError("数值列表为空")
    return values


def parse_r_grid(text: str) -> List[float]:
    """
    解析 "a:b:step" 形式的 r 网格（含端点 b）

    Args:
        text: 网格描述

    Returns:
        r 值列表
    """
    parts = text.split(":")
    try:
        if len(parts) == 1:
            return [float(parts[0])]
        if len(parts) != 3:
            raise ValueError
        a, b, step = (float(part) for part in parts)
    except ValueError:
        raise ConfigError(f"r 网格格式应为 a:b:step, 当前为 {text!r}")
    if step <= 0 or b < a:
        raise ConfigError(f"r 网格需要 step > 0 且 b >= a: {text!r}")
    count = int(np.floor((b - a) / step + 1e-9)) + 1
    return [round(a + i * step, 12) for i in range(count)]


def _seed(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"种子必须是整数: {text!r}")
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("种子必须在 [0, 2^64) 内")
    return value


def build_parser() -> argparse.ArgumentParser:
    """构建命令行解析器"""
    parser = _Parser(prog="cutofflab", description="小噪声截断现象数值实验室")
    parser.add_argument("--version", action="version", version=f"cutofflab {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)

    for command in COMMANDS:
        sub = subparsers.add_parser(command)
        sub.add_argument("--scenario", help="场景 JSON 文件或 builtin:<name>")
        sub.add_argument("--out", help="输出目录")
        sub.add_argument("--seed", type=_seed, help="随机种子（十进制或 0x 十六进制）")
        sub.add_argument("--format", choices=[f.value for f in ExportFormat], default=ExportFormat.CSV.value)
        sub.add_argument("--epsilon", type=parse_float_list, default=[], help="逗号分隔的 ε 列表")
        sub.add_argument("--r-grid", default=DEFAULT_R_GRID, help="r 网格 a:b:step")
        sub.add_argument("--metric", choices=sorted(METRIC_ALIASES), help="距离类型")
        sub.add_argument("--p", type=float, help="Wasserstein 阶数")
        sub.add_argument("--w", type=float, default=1.0, help="窗口宽度")
        sub.add_argument("--rho", type=parse_float_list, default=list(DEFAULT_RHO_GRID), help="ρ 网格")
        sub.add_argument("--tol", type=float, default=DEFAULT_TOL, help="常值判据容差")
        sub.add_argument("--log-level", help="日志级别")
        if command == "analyze":
            sub.add_argument("--matrix", help="行优先 CSV 漂移矩阵")
            sub.add_argument("--x", type=parse_float_list, help="初值，逗号分隔")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    """命令行参数 → RunConfig"""
    return RunConfig(
        command=args.command,
        scenario=args.scenario,
        out=args.out or get_config().output_dir,
        seed=args.seed,
        format=args.format,
        epsilon=list(args.epsilon),
        r_grid=parse_r_grid(args.r_grid),
        metric=args.metric,
        p=args.p,
        w=args.w,
        rho=list(args.rho),
        tol=args.tol,
        matrix=getattr(args, "matrix", None),
        x=getattr(args, "x", None),
    )


# ============================================
# 场景准备
# ============================================

def _load_scenario(config: RunConfig) -> Scenario:
    s = scenarios.resolve_scenario(config.scenario, config.seed)
    if config.metric is None and config.p is None:
        return s
    metric = METRIC_ALIASES[config.metric] if config.metric else s.metric
    p = config.p if config.p is not None else s.p
    return scenarios.build_scenario(
        s.family, dict(s.params), metric=metric, p=p, evaluation=s.evaluation,
        mc_paths=s.mc_paths, seed=s.seed, name=s.name,
    )


# ============================================
# 子命令
# ============================================

def _analyze(config: RunConfig) -> Tuple[str, Dict[str, Any], Dict[str, Any]]:
    if config.matrix is not None:
        drift, x, name = spectral.load_matrix_csv(config.matrix), np.asarray(config.x, dtype=float), Path(config.matrix).stem
        seed = get_config().seed if config.seed is None else config.seed
    else:
        s = _load_scenario(config)
        drift, x, name, seed = s.drift.entries, s.asymptotic_datum, s.name, s.seed
    A = spectral.validate_stability(drift)
    if x.shape != (A.dim,):
        raise ConfigError(f"初值维数 {x.shape} 与矩阵维数 {A.dim} 不一致")
    dec = spectral.dominant_decomposition(A, x)
    omega = spectral.omega_limit_set(dec)
    record = spectral.decomposition_record(A, dec, omega)
    t0, res_t0, res_2t0 = spectral.residual_threshold_time(A, x)
    record["residual"] = {"T0": t0, "residual_T0": res_t0, "residual_2T0": res_2t0}
    logger.info(f"analyze {name}: λ={dec.rate:g}, ℓ={dec.block_size}, m*={dec.mode_count}, ω={omega.kind.value}")

    table = pd.DataFrame({
        "mode": np.arange(dec.mode_count),
        "theta": np.asarray(dec.angular_velocities, dtype=float),
        "rate": dec.rate,
        "block_size": dec.block_size,
        "mode_count": dec.mode_count,
        "omega_kind": omega.kind.value,
        "mode_norm": np.linalg.norm(dec.mode_vectors, axis=1),
    })
    meta = provenance(config.config_hash(record["matrix"]), seed)
    return f"analyze-{name}", meta, {"table": table, "record": record}


def _profile(config: RunConfig, s: Scenario) -> Dict[str, Any]:
    curve = get_engine().profile_curve(s, config.r_grid, config.w)
    table = curve.to_frame()[["r", "theoretical"]]
    return {"table": table, "record": curve.to_dict(), "curves": [curve]}


def _curve(config: RunConfig, s: Scenario) -> Dict[str, Any]:
    engine = get_engine()
    eps_list = config.epsilon or [s.epsilon]
    curves = [
        engine.distance_curve(s, e, config.r_grid, config.w, allow_negative=True, eps_index=i)
        for i, e in enumerate(eps_list)
    ]
    table = pd.concat([c.to_frame() for c in curves], ignore_index=True)
    return {"table": table, "record": [c.to_dict() for c in curves], "curves": curves}


def _report_table(report: CutoffReport) -> pd.DataFrame:
    base = {
        "classification": report.classification.value,
        "spread": report.spread,
        "tolerance": report.tolerance,
        "rho_at_max": report.rho_at_max,
    }
    if not report.sup_gaps:
        return pd.DataFrame([base])
    return pd.DataFrame([
        dict(base, epsilon=e, sup_gap=g, monotone=report.monotone) for e, g in report.sup_gaps.items()
    ])


def _classify(config: RunConfig, s: Scenario) -> Dict[str, Any]:
    engine = get_engine()
    if config.epsilon:
        report = engine.convergence_report(s, config.epsilon, config.r_grid, config.w, config.rho, config.tol)
    else:
        report = engine.cutoff_classification(s, config.rho, config.tol, w=config.w)
    return {"table": _report_table(report), "record": report.to_dict(), "curves": report.curves}


def _verify(config: RunConfig, s: Scenario) -> Dict[str, Any]:
    checks = get_engine().verify(s, config.w)
    table = pd.DataFrame([check.to_dict() for check in checks])
    return {"table": table, "record": [check.to_dict() for check in checks], "passed": all(c.passed for c in checks)}


HANDLERS = {"profile": _profile, "curve": _curve, "classify": _classify, "verify": _verify}


def run(config: RunConfig) -> int:
    """
    执行一次运行并写出产物

    Args:
        config: 运行配置

    Returns:
        退出码
    """
    out = Path(config.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"输出目录不可写: {out}: {exc}")
    exporter = get_export_service()

    if config.command == "analyze":
        stem, meta, result = _analyze(config)
    else:
        s = _load_scenario(config)
        result = HANDLERS[config.command](config, s)
        stem = f"{config.command}-{s.name}"
        meta = provenance(config.config_hash(s.to_dict()), s.seed)

    path = exporter.emit(
        config.format, stem, meta,
        table=result["table"], record=result["record"], curves=result.get("curves"), output_dir=out,
    )
    print(path)
    if not result.get("passed", True):
        failed = [row["name"] for row in result["record"] if not row["passed"]]
        logger.error(f"验证未通过: {', '.join(failed)}")
        return 2
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    """命令行主函数"""
    config = get_config()
    root = setup_logger("cutofflab", config.log_level, config.log_file)
    try:
        args = build_parser().parse_args(argv)
        if args.log_level:
            set_level(root, args.log_level)
        return run(config_from_args(args))
    except CutoffLabError as exc:
        logger.error(f"{type(exc).__name__}: {exc}")
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
