"""The composed trajectory model: a GP whose prior mean is the GMR conditional
mean and whose kernel is the non-stationary mixture kernel. Demonstrations are
used once to fit hyperparameters and then discarded; only via-points enter the
conditioning set.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, replace

import numpy as np

from . import gp
from .exceptions import DuplicateViaInputError, NonPositiveParamError
from .gmm import DemonstrationSet, GmmModel, responsibilities
from .gmr import component_conditionals, gmr_mean_batch
from .kernels import GmrKernel, LmcKernel, Matern52Params

__all__ = [
    "ViaPoint",
    "GmrGpModel",
    "build",
    "adapt",
    "predict_trajectory",
    "sample_trajectories",
    "set_component_lengthscale",
    "set_noise",
    "stationary_mogp",
    "trajectory_to_csv",
]

_DUP_INPUT_TOL = 1e-12
_DUP_OUTPUT_TOL = 1e-9


@dataclass(frozen=True)
class ViaPoint:
    """A desired (input, output) constraint treated as a GP observation."""

    input: np.ndarray
    output: np.ndarray
    noise_override: float | np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "input", np.asarray(self.input, float).ravel())
        object.__setattr__(self, "output", np.asarray(self.output, float).ravel())


def _gmr_mean_fn(gmm: GmmModel):
    def mean_fn(xs):
        return gmr_mean_batch(gmm, xs)

    return mean_fn


@dataclass(frozen=True)
class GmrGpModel:
    """GMR-based GP with via-point conditioning state.

    noise : shared scalar variance, or one scalar per mixture component.
    """

    gmm: GmmModel
    lengthscales: np.ndarray  # (C,)
    noise: float | np.ndarray
    via_points: tuple[ViaPoint, ...]
    engine: gp.GpModel

    @property
    def kernel(self) -> GmrKernel:
        return self.engine.kernel

    @property
    def per_component_noise(self) -> bool:
        return np.ndim(self.noise) > 0


def _via_noise(model_noise, gmm: GmmModel, vp: ViaPoint, output_dim: int) -> np.ndarray:
    """D x D noise covariance for one via-point (override takes precedence)."""
    if vp.noise_override is not None:
        override = vp.noise_override
        if np.ndim(override) == 0:
            return float(override) * np.eye(output_dim)
        return np.asarray(override, float)
    if np.ndim(model_noise) > 0:
        # per-component noise weighted by squared responsibilities, matching
        # the responsibility weighting of the kernel terms
        h = responsibilities(gmm, vp.input)
        return float(np.sum(h**2 * np.asarray(model_noise, float))) * np.eye(output_dim)
    return float(model_noise) * np.eye(output_dim)


def _merge_via_points(via_points: tuple[ViaPoint, ...]) -> tuple[ViaPoint, ...]:
    """Merge via-points sharing an input; conflicting zero-noise demands fail."""
    merged: list[list[ViaPoint]] = []
    for vp in via_points:
        for group in merged:
            if np.linalg.norm(vp.input - group[0].input) <= _DUP_INPUT_TOL:
                group.append(vp)
                break
        else:
            merged.append([vp])
    out = []
    for group in merged:
        if len(group) == 1:
            out.append(group[0])
            continue
        outputs = np.array([vp.output for vp in group])
        spread = np.max(np.abs(outputs - outputs[0]))
        overrides = [vp.noise_override for vp in group]
        zero_noise = all(
            o is not None and np.all(np.asarray(o) == 0) for o in overrides
        )
        if spread > _DUP_OUTPUT_TOL and zero_noise:
            raise DuplicateViaInputError(
                f"conflicting outputs at input {group[0].input} with zero noise"
            )
        out.append(
            ViaPoint(group[0].input, outputs.mean(axis=0), group[0].noise_override)
        )
    return tuple(out)


def _conditioned(
    gmm: GmmModel,
    lengthscales: np.ndarray,
    noise,
    via_points: tuple[ViaPoint, ...],
) -> GmrGpModel:
    kernel = GmrKernel(gmm, lengthscales)
    prior = gp.GpModel(mean_fn=_gmr_mean_fn(gmm), kernel=kernel)
    via_points = _merge_via_points(via_points)
    if via_points:
        obs = gp.ObservationSet(
            inputs=np.array([vp.input for vp in via_points]),
            outputs=np.array([vp.output for vp in via_points]),
            noise=np.array(
                [_via_noise(noise, gmm, vp, gmm.output_dim) for vp in via_points]
            ),
        )
        engine = gp.condition(prior, obs)
    else:
        engine = prior
    return GmrGpModel(gmm, np.asarray(lengthscales, float), noise, via_points, engine)


def build(
    gmm: GmmModel,
    demos: DemonstrationSet | None = None,
    config: gp.OptConfig | None = None,
    lengthscales=None,
    noise: float | np.ndarray | None = None,
) -> GmrGpModel:
    """Construct the trajectory model from a fitted GMM.

    With ``lengthscales`` and ``noise`` given, hyperparameter fitting is
    skipped. Otherwise the demonstrations are used as likelihood data (GMR
    prior mean subtracted) to estimate the per-component lengthscales and the
    shared noise variance; the demonstrations are then discarded and the
    returned model holds zero via-points.
    """
    c = gmm.num_components
    if lengthscales is not None and noise is not None:
        ls = np.broadcast_to(np.asarray(lengthscales, float), (c,)).copy()
        return _conditioned(gmm, ls, noise, ())
    if demos is None:
        raise ValueError("demonstrations required when hyperparameters are not fixed")
    if config is None:
        input_range = float(np.ptp(demos.inputs)) or 1.0
        config = gp.default_opt_config(input_range, c)

    mean_fn = _gmr_mean_fn(gmm)

    def template(theta):
        return gp.GpModel(mean_fn=mean_fn, kernel=GmrKernel(gmm, theta[:-1]))

    data = gp.ObservationSet(demos.inputs, demos.outputs)
    result = gp.optimize_hyperparams(template, data, config)
    return _conditioned(gmm, result.params[:-1], float(result.params[-1]), ())


def adapt(model: GmrGpModel, via_points) -> GmrGpModel:
    """Return a new model conditioned on exactly the supplied via-points.

    The prior (mean, kernel, hyperparameters) is unchanged.
    """
    via_points = tuple(via_points)
    return _conditioned(model.gmm, model.lengthscales, model.noise, via_points)


def predict_trajectory(model: GmrGpModel, xs: np.ndarray) -> list[gp.PosteriorPrediction]:
    """Posterior mean and covariance at each query input."""
    return gp.predict_batch(model.engine, xs)


def sample_trajectories(model: GmrGpModel, xs: np.ndarray, count: int, seed: int) -> np.ndarray:
    """(count, M, D) joint draws over the query set."""
    return gp.sample(model.engine, xs, count, seed)


def set_component_lengthscale(model: GmrGpModel, k: int, value: float) -> GmrGpModel:
    """Re-parameterize one component kernel; conditioning state is recomputed."""
    if not 0 <= k < model.gmm.num_components:
        raise IndexError(f"component index {k} out of range")
    if value <= 0:
        raise NonPositiveParamError(f"lengthscale must be positive, got {value}")
    ls = model.lengthscales.copy()
    ls[k] = value
    return _conditioned(model.gmm, ls, model.noise, model.via_points)


def set_noise(model: GmrGpModel, noise: float | np.ndarray) -> GmrGpModel:
    """Set the shared or per-component noise variance; reconditions via-points."""
    arr = np.asarray(noise, float)
    if np.any(arr < 0) or (arr.ndim > 0 and arr.size != model.gmm.num_components):
        raise NonPositiveParamError(f"invalid noise specification: {noise}")
    value = float(arr) if arr.ndim == 0 else arr
    return _conditioned(model.gmm, model.lengthscales, value, model.via_points)


def stationary_mogp(
    gmm: GmmModel,
    lengthscales=None,
    variances=None,
) -> gp.GpModel:
    """Zero-mean stationary MOGP baseline with a sum-of-separable kernel.

    One separable term per mixture component: the coregionalization matrices
    are the component conditional output covariances, the scalar kernels
    Matérn-5/2. Condition it on demonstrations or via-points as needed.
    """
    c = gmm.num_components
    ls = np.broadcast_to(
        np.asarray(lengthscales if lengthscales is not None else 1.0, float), (c,)
    )
    var = np.broadcast_to(
        np.asarray(variances if variances is not None else 1.0, float), (c,)
    )
    kernel = LmcKernel(
        coregionalization=component_conditionals(gmm),
        scalar_kernels=[
            Matern52Params(variance=v, lengthscale=s) for v, s in zip(var, ls)
        ],
    )

    def zero_mean(xs):
        return np.zeros((np.atleast_2d(xs).shape[0], gmm.output_dim))

    return gp.GpModel(mean_fn=zero_mean, kernel=kernel)


def model_to_dict(model: GmrGpModel) -> dict:
    noise = model.noise
    return {
        "gmm": model.gmm.to_dict(),
        "kernel": model.kernel.config_dict(),
        "noise": noise if np.ndim(noise) == 0 else np.asarray(noise).tolist(),
        "via_points": [
            {
                "input": vp.input.tolist(),
                "output": vp.output.tolist(),
                "noise": None
                if vp.noise_override is None
                else (
                    vp.noise_override
                    if np.ndim(vp.noise_override) == 0
                    else np.asarray(vp.noise_override).tolist()
                ),
            }
            for vp in model.via_points
        ],
    }


def model_from_dict(doc: dict) -> GmrGpModel:
    gmm = GmmModel.from_dict(doc["gmm"])
    noise = doc["noise"]
    if isinstance(noise, list):
        noise = np.asarray(noise, float)
    via_points = tuple(
        ViaPoint(
            np.asarray(vp["input"], float),
            np.asarray(vp["output"], float),
            None
            if vp.get("noise") is None
            else (
                vp["noise"]
                if np.ndim(vp["noise"]) == 0
                else np.asarray(vp["noise"], float)
            ),
        )
        for vp in doc["via_points"]
    )
    return _conditioned(gmm, np.asarray(doc["kernel"]["lengthscales"], float), noise, via_points)


def model_to_json(model: GmrGpModel) -> str:
    return json.dumps(model_to_dict(model))


def model_from_json(text: str) -> GmrGpModel:
    return model_from_dict(json.loads(text))


def trajectory_to_csv(xs: np.ndarray, predictions: list[gp.PosteriorPrediction]) -> str:
    """Rows: inputs, mean, row-major covariance, per-dimension 2-sigma bounds."""
    xs = np.atleast_2d(np.asarray(xs, float))
    din = xs.shape[1]
    d = predictions[0].mean.size if predictions else 0
    buf = io.StringIO()
    header = (
        [f"x{i}" for i in range(din)]
        + [f"mean{i}" for i in range(d)]
        + [f"cov{i}{j}" for i in range(d) for j in range(d)]
        + [f"lo{i}" for i in range(d)]
        + [f"hi{i}" for i in range(d)]
    )
    buf.write(",".join(header) + "\n")
    for x, p in zip(xs, predictions):
        two_sigma = 2.0 * np.sqrt(np.clip(np.diag(p.covariance), 0.0, None))
        row = (
            list(x)
            + list(p.mean)
            + list(p.covariance.ravel())
            + list(p.mean - two_sigma)
            + list(p.mean + two_sigma)
        )
        buf.write(",".join(repr(float(v)) for v in row) + "\n")
    return buf.getvalue()
