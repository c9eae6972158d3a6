"""Trajectory learning from demonstrations with GMR-based multi-output
Gaussian processes: mixture fitting, Gaussian mixture regression, a
non-stationary multi-output kernel, via-point adaptation and LQR tracking."""

from .gmm import (
    DemonstrationSet,
    EmConfig,
    GaussianComponent,
    GmmModel,
    fit_gmm,
    joint_log_pdf,
    responsibilities,
    sample_joint,
)
from .gmr import GmrPrediction, component_conditional, gmr_predict, gmr_predict_batch
from .gp import (
    GpModel,
    ObservationSet,
    OptConfig,
    OptResult,
    PosteriorPrediction,
    condition,
    log_marginal_likelihood,
    optimize_hyperparams,
    predict,
    predict_batch,
    sample,
)
from .kernels import GmrKernel, LmcKernel, Matern52Params, gram, matern52
from .trajectory import GmrGpModel, ViaPoint, adapt, build, predict_trajectory

__all__ = [
    "DemonstrationSet",
    "EmConfig",
    "GaussianComponent",
    "GmmModel",
    "fit_gmm",
    "joint_log_pdf",
    "responsibilities",
    "sample_joint",
    "GmrPrediction",
    "component_conditional",
    "gmr_predict",
    "gmr_predict_batch",
    "GpModel",
    "ObservationSet",
    "OptConfig",
    "OptResult",
    "PosteriorPrediction",
    "condition",
    "log_marginal_likelihood",
    "optimize_hyperparams",
    "predict",
    "predict_batch",
    "sample",
    "GmrKernel",
    "LmcKernel",
    "Matern52Params",
    "gram",
    "matern52",
    "GmrGpModel",
    "ViaPoint",
    "adapt",
    "build",
    "predict_trajectory",
]

__version__ = "0.1.0"
