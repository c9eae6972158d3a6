"""Generic multi-output GP machinery: exact conditioning, prediction, joint
sampling, log marginal likelihood and multi-start hyperparameter fitting.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.optimize import minimize

from .exceptions import (
    AllStartsFailedError,
    DimensionMismatchError,
    FactorizationFailureError,
)
from .kernels import MatrixKernel

__all__ = [
    "ObservationSet",
    "PosteriorPrediction",
    "GpModel",
    "OptConfig",
    "OptResult",
    "condition",
    "predict",
    "predict_batch",
    "sample",
    "log_marginal_likelihood",
    "optimize_hyperparams",
]


@dataclass(frozen=True)
class ObservationSet:
    """Noisy observations conditioning a GP.

    noise : shared scalar variance, one shared (D, D) covariance, or a
            (V, D, D) stack with one covariance per observation.
    """

    inputs: np.ndarray  # (V, Din)
    outputs: np.ndarray  # (V, D)
    noise: float | np.ndarray = 0.0

    def __post_init__(self):
        inputs = np.atleast_2d(np.asarray(self.inputs, dtype=float))
        outputs = np.atleast_2d(np.asarray(self.outputs, dtype=float))
        if inputs.shape[0] != outputs.shape[0]:
            raise DimensionMismatchError(
                f"{inputs.shape[0]} inputs vs {outputs.shape[0]} outputs"
            )
        noise = self.noise
        if np.ndim(noise) == 0:
            noise = float(noise)
            if noise < 0:
                raise ValueError("noise variance must be >= 0")
        else:
            noise = np.asarray(noise, float)
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "outputs", outputs)
        object.__setattr__(self, "noise", noise)

    @property
    def count(self) -> int:
        return self.inputs.shape[0]

    @property
    def output_dim(self) -> int:
        return self.outputs.shape[1]

    def noise_matrix(self) -> np.ndarray:
        """(V*D, V*D) observation-noise covariance, block diagonal."""
        v, d = self.count, self.output_dim
        out = np.zeros((v * d, v * d))
        if np.ndim(self.noise) == 0:
            np.fill_diagonal(out, self.noise)
        elif self.noise.ndim == 2:
            for i in range(v):
                out[i * d : (i + 1) * d, i * d : (i + 1) * d] = self.noise
        else:
            for i in range(v):
                out[i * d : (i + 1) * d, i * d : (i + 1) * d] = self.noise[i]
        return out


@dataclass(frozen=True)
class PosteriorPrediction:
    """Mean and full covariance of the (prior or posterior) process at one input."""

    mean: np.ndarray  # (D,)
    covariance: np.ndarray  # (D, D)


@dataclass(frozen=True)
class GpModel:
    """An immutable GP: mean function, matrix-valued kernel and, after
    :func:`condition`, a cached factorization of the observation system."""

    mean_fn: Callable[[np.ndarray], np.ndarray]  # (M, Din) -> (M, D)
    kernel: MatrixKernel
    observations: ObservationSet | None = None
    chol: tuple | None = field(default=None, compare=False)
    alpha: np.ndarray | None = field(default=None, compare=False)

    @property
    def output_dim(self) -> int:
        return self.kernel.output_dim


def _add_noise_inplace(mat: np.ndarray, obs: ObservationSet) -> None:
    v, d = obs.count, obs.output_dim
    if np.ndim(obs.noise) == 0:
        if obs.noise:
            mat[np.diag_indices_from(mat)] += obs.noise
    elif obs.noise.ndim == 2:
        for i in range(v):
            mat[i * d : (i + 1) * d, i * d : (i + 1) * d] += obs.noise
    else:
        for i in range(v):
            mat[i * d : (i + 1) * d, i * d : (i + 1) * d] += obs.noise[i]


def _factor_obs_system(model: GpModel, obs: ObservationSet):
    """Cholesky of K_obs + noise with deterministic jitter escalation.

    The factorization overwrites its input to avoid a second copy of large
    systems; each retry rebuilds the matrix and escalates the jitter x10
    (3 retries), then fails.
    """

    def build():
        mat = model.kernel.gram(obs.inputs)
        _add_noise_inplace(mat, obs)
        return mat

    mat = build()
    size = mat.shape[0]
    base = 1e-6 * np.trace(mat) / size
    for attempt in range(4):
        if attempt > 0:
            mat = build()
            jitter = base * 10.0 ** (attempt - 1) if base > 0 else 10.0 ** (attempt - 13)
            mat[np.diag_indices_from(mat)] += jitter
        try:
            # mat is symmetric, so its C-contiguous buffer doubles as the
            # Fortran-contiguous mat.T; passing the view avoids a LAPACK copy
            return cho_factor(mat.T, lower=True, overwrite_a=True, check_finite=False)
        except np.linalg.LinAlgError:
            continue
    raise FactorizationFailureError(
        f"observation system of size {size} not positive definite after jitter escalation"
    )


def condition(model: GpModel, observations: ObservationSet) -> GpModel:
    """Return a new model conditioned on ``observations``; the original is unchanged."""
    if observations.count == 0:
        return replace(model, observations=None, chol=None, alpha=None)
    if observations.output_dim != model.output_dim:
        raise DimensionMismatchError(
            f"observation output dim {observations.output_dim} != model {model.output_dim}"
        )
    factor = _factor_obs_system(model, observations)
    residual = (observations.outputs - model.mean_fn(observations.inputs)).ravel()
    alpha = cho_solve(factor, residual, check_finite=False)
    return replace(model, observations=observations, chol=factor, alpha=alpha)


def _prior_blocks(model: GpModel, xs: np.ndarray) -> np.ndarray:
    d = model.output_dim
    out = np.empty((xs.shape[0], d, d))
    for i, x in enumerate(xs):
        out[i] = model.kernel.gram(x[None, :])
    return out


def predict_batch(model: GpModel, xs: np.ndarray) -> list[PosteriorPrediction]:
    """Posterior (or prior, if unconditioned) mean and D x D covariance per query."""
    xs = np.atleast_2d(np.asarray(xs, float))
    d = model.output_dim
    mu = np.asarray(model.mean_fn(xs), float).reshape(xs.shape[0], d)
    prior = _prior_blocks(model, xs)
    if model.observations is None:
        return [
            PosteriorPrediction(mu[i], prior[i]) for i in range(xs.shape[0])
        ]
    k_cross = model.kernel.gram(xs, model.observations.inputs)  # (M*D, V*D)
    mean = mu + (k_cross @ model.alpha).reshape(xs.shape[0], d)
    w = cho_solve(model.chol, k_cross.T, check_finite=False)  # (V*D, M*D)
    out = []
    for i in range(xs.shape[0]):
        sl = slice(i * d, (i + 1) * d)
        cov = prior[i] - k_cross[sl] @ w[:, sl]
        cov = 0.5 * (cov + cov.T)
        diag = np.diag(cov).copy()
        if np.any(diag < 0):
            cov = cov + np.diag(np.clip(-diag, 0.0, None))
        out.append(PosteriorPrediction(mean[i], cov))
    return out


def predict(model: GpModel, x: np.ndarray) -> PosteriorPrediction:
    """Single-query :func:`predict_batch`."""
    return predict_batch(model, np.atleast_2d(np.asarray(x, float)))[0]


def joint_distribution(model: GpModel, xs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Stacked mean (M*D,) and covariance (M*D, M*D) over a query set."""
    xs = np.atleast_2d(np.asarray(xs, float))
    d = model.output_dim
    mean = np.asarray(model.mean_fn(xs), float).reshape(-1)
    cov = model.kernel.gram(xs)
    if model.observations is not None:
        k_cross = model.kernel.gram(xs, model.observations.inputs)
        mean = mean + k_cross @ model.alpha
        cov = cov - k_cross @ cho_solve(model.chol, k_cross.T, check_finite=False)
        cov = 0.5 * (cov + cov.T)
    return mean, cov


def sample(model: GpModel, xs: np.ndarray, count: int, seed: int) -> np.ndarray:
    """``count`` joint draws over the query set, shape (count, M, D).

    Uses a symmetric eigendecomposition square root with eigenvalues clipped
    at zero; deterministic per seed.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    xs = np.atleast_2d(np.asarray(xs, float))
    mean, cov = joint_distribution(model, xs)
    vals, vecs = np.linalg.eigh(cov)
    root = vecs * np.sqrt(np.clip(vals, 0.0, None))
    rng = np.random.default_rng(seed)
    draws = mean + rng.standard_normal((count, mean.size)) @ root.T
    return draws.reshape(count, xs.shape[0], model.output_dim)


def log_marginal_likelihood(model: GpModel, data: ObservationSet) -> float:
    """Log density of the stacked residuals under N(0, K + noise)."""
    if data.count == 0:
        raise ValueError("log marginal likelihood needs nonempty data")
    factor = _factor_obs_system(model, data)
    residual = (data.outputs - model.mean_fn(data.inputs)).ravel()
    alpha = cho_solve(factor, residual, check_finite=False)
    logdet = 2.0 * np.sum(np.log(np.diag(factor[0])))
    n = residual.size
    return float(-0.5 * (residual @ alpha + logdet + n * np.log(2.0 * np.pi)))


@dataclass(frozen=True)
class OptConfig:
    """Multi-start likelihood-maximization settings.

    bounds : (P, 2) array of bounds in natural units; the last parameter is
             always the observation-noise variance.
    """

    bounds: np.ndarray
    starts: int = 8
    max_evals: int = 200
    max_points: int = 500
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "bounds", np.atleast_2d(np.asarray(self.bounds, float)))


@dataclass(frozen=True)
class OptResult:
    params: np.ndarray
    log_likelihood: float
    start_log_likelihoods: tuple[float, ...]


def default_opt_config(
    input_range: float, num_lengthscales: int, **kwargs
) -> OptConfig:
    """Lengthscale bounds scale with the input range; noise in [1e-8, 1]."""
    lo, hi = 1e-2 * input_range, 1e2 * input_range
    bounds = [(lo, hi)] * num_lengthscales + [(1e-8, 1.0)]
    return OptConfig(bounds=np.array(bounds), **kwargs)


def subsample(data: ObservationSet, max_points: int) -> ObservationSet:
    """Stride the observations down to at most ``max_points`` rows."""
    if data.count <= max_points:
        return data
    step = int(np.ceil(data.count / max_points))
    return replace(data, inputs=data.inputs[::step], outputs=data.outputs[::step])


def optimize_hyperparams(
    model_template: Callable[[np.ndarray], GpModel],
    data: ObservationSet,
    config: OptConfig,
) -> OptResult:
    """Maximize the log marginal likelihood over positive hyperparameters.

    ``model_template`` maps a parameter vector (kernel parameters followed by
    the noise variance, natural units) to a prior GpModel. The search runs
    Nelder-Mead over log-parameters from ``config.starts`` starting points
    (first at the log-midpoint of the bounds, the rest log-uniform);
    deterministic given ``config.seed``. The returned likelihood is at least
    that of every start.
    """
    if data.count == 0:
        raise ValueError("optimization needs nonempty data")
    data = subsample(data, config.max_points)
    log_lo = np.log(config.bounds[:, 0])
    log_hi = np.log(config.bounds[:, 1])

    def objective(log_theta):
        clipped = np.clip(log_theta, log_lo, log_hi)
        penalty = 1e4 * np.sum((log_theta - clipped) ** 2)
        theta = np.exp(clipped)
        model = model_template(theta)
        obs = replace(data, noise=theta[-1])
        try:
            return -log_marginal_likelihood(model, obs) + penalty
        except FactorizationFailureError:
            return np.inf

    rng = np.random.default_rng(config.seed)
    starts = [0.5 * (log_lo + log_hi)]
    for _ in range(config.starts - 1):
        starts.append(rng.uniform(log_lo, log_hi))

    best = None
    start_lls = []
    n_failed = 0
    for idx, start in enumerate(starts):
        f0 = objective(start)
        if not np.isfinite(f0):
            n_failed += 1
            start_lls.append(-np.inf)
            continue
        start_lls.append(-f0)
        res = minimize(
            objective,
            start,
            method="Nelder-Mead",
            options={"maxfev": config.max_evals, "xatol": 1e-4, "fatol": 1e-6},
        )
        value = min(res.fun, f0)
        point = res.x if res.fun <= f0 else start
        if best is None or value < best[0] - 0.0:
            best = (value, np.clip(point, log_lo, log_hi), idx)
    if best is None:
        raise AllStartsFailedError(f"all {len(starts)} starts failed to factorize")
    return OptResult(
        params=np.exp(best[1]),
        log_likelihood=-best[0],
        start_log_likelihoods=tuple(start_lls),
    )
