"""
错误类型模块

所有模块错误均继承 CutoffLabError，分为配置类错误（CLI 退出码 1）
与数值类错误（CLI 退出码 2）两支。
"""

from typing import Optional


class CutoffLabError(Exception):
    """cutofflab 错误基类"""

    exit_code: int = 2


class ConfigurationError(CutoffLabError):
    """配置或输入错误"""

    exit_code = 1


class NumericalError(CutoffLabError):
    """数值计算失败"""

    exit_code = 2


# ---------------------------------------------------------------- 配置类

class ConfigError(ConfigurationError, ValueError):
    """环境变量或运行配置非法"""


class MissingParameter(ConfigurationError, KeyError):
    """场景缺少必需参数"""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "missing parameter"


class InadmissibleRange(ConfigurationError, ValueError):
    """参数超出允许范围"""


class ScenarioFileError(ConfigurationError, ValueError):
    """场景文件解析或校验失败"""

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        self.path = path
        self.line = line
        location = ""
        if path is not None:
            location = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(f"{location}{message}")


class UnsupportedCase(ConfigurationError, ValueError):
    """精确公式不覆盖的情形"""


class NoExactLaw(ConfigurationError, ValueError):
    """该过程族没有精确边缘分布"""


class InvalidEpsilon(ConfigurationError, ValueError):
    """噪声强度 ε 不在 (0,1) 内"""


class ZeroInitialDatum(ConfigurationError, ValueError):
    """初值为零向量"""


class GridMismatch(ConfigurationError, ValueError):
    """两个密度不在同一网格上"""


class UnequalCounts(ConfigurationError, ValueError):
    """两组样本数量不同"""


class TooLargeForExact(ConfigurationError, ValueError):
    """多元精确指派问题规模过大"""


class MomentViolation(ConfigurationError, ValueError):
    """稳定分布的 p 阶矩不存在 (p >= α)"""


class IoError(ConfigurationError, OSError):
    """产物写入失败"""


# ---------------------------------------------------------------- 数值类

class NotStable(NumericalError, ValueError):
    """漂移矩阵不满足 Routh-Hurwitz 条件"""


class Overflow(NumericalError, OverflowError):
    """指数放大超出浮点表示范围"""


class NonPositiveScale(NumericalError, ValueError):
    """尺度函数取值非正"""


class NotNormalized(NumericalError, ValueError):
    """密度在网格上积分不为 1"""


class NyquistViolation(NumericalError, ValueError):
    """网格步长不满足 Nyquist 条件"""


class NegativeMass(NumericalError, ValueError):
    """特征函数反演出现过多负质量"""


class SingularLimitLaw(NumericalError, ValueError):
    """极限分布协方差奇异"""


class EmbeddingFailure(NumericalError, ArithmeticError):
    """循环嵌入与 Cholesky 均失败"""


class QuadratureFailure(NumericalError, ArithmeticError):
    """数值积分未达到容差"""


class GridTooCoarse(NumericalError, ValueError):
    """卷积网格过粗"""


class SlowDecay(NumericalError, ArithmeticError):
    """协方差函数在截断处的尾部超出容差"""


class NegativeTime(NumericalError, ValueError):
    """t = t_cut + r·w 非正"""
