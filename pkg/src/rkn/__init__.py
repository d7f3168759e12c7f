"""Random-kernel networks: layered kernels from deterministic composition,
with Monte Carlo sampling only in the outermost layer."""

from rkn.kernel_core import A3Witness, KernelSpec, logistic, relu
from rkn.param_measure import ParamBatch, ParamMixture, ParamPoint, UniformComponent
from rkn.layered_kernel import LayeredKernelCtx, SliceConstants

__all__ = [
    "A3Witness",
    "KernelSpec",
    "LayeredKernelCtx",
    "ParamBatch",
    "ParamMixture",
    "ParamPoint",
    "SliceConstants",
    "UniformComponent",
    "logistic",
    "relu",
]

__version__ = "0.1.0"
