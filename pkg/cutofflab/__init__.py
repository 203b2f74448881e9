"""
cutofflab - 小噪声截断现象数值实验室

提供漂移矩阵谱分析、全变差与 Wasserstein 距离、截断时间尺度与极限轮廓、
以及各类线性过程族的模拟与验证。
"""

__version__ = "0.1.0"
