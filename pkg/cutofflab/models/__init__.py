"""
数据模型包
"""

from cutofflab.models.laws import EmpiricalLaw, GaussianLaw, LawDescriptor, StableLawDescriptor
from cutofflab.models.processes import (
    CovarianceKernel,
    DriverKind,
    DriverSpec,
    KernelKind,
    PathEnsemble,
    ScaleFunction,
    ScaleKind,
    TauKind,
    TauProfile,
)
from cutofflab.models.reports import CheckResult, CutoffClass, CutoffReport, ProfileCurve
from cutofflab.models.scenario import EvaluationKind, Family, MetricKind, Scenario, ScenarioFile
from cutofflab.models.spectral import (
    CutoffSchedule,
    DominantDecomposition,
    OmegaKind,
    OmegaLimitSet,
    StableMatrix,
)

__all__ = [
    "CheckResult",
    "CovarianceKernel",
    "CutoffClass",
    "CutoffReport",
    "CutoffSchedule",
    "DominantDecomposition",
    "DriverKind",
    "DriverSpec",
    "EmpiricalLaw",
    "EvaluationKind",
    "Family",
    "GaussianLaw",
    "KernelKind",
    "LawDescriptor",
    "MetricKind",
    "OmegaKind",
    "OmegaLimitSet",
    "PathEnsemble",
    "ProfileCurve",
    "ScaleFunction",
    "ScaleKind",
    "Scenario",
    "ScenarioFile",
    "StableLawDescriptor",
    "StableMatrix",
    "TauKind",
    "TauProfile",
]
