"""Gaussian mixture models over joint input-output data.

The mixture encodes the joint density of (input, output) samples gathered from
demonstrations. Fitting is done with Expectation-Maximization; all density
evaluations run in log-space.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cholesky, solve_triangular
from scipy.special import logsumexp

from .exceptions import (
    DegenerateComponentError,
    DimensionMismatchError,
    EmptyDataError,
    NonFiniteInputError,
    ResponsibilityUnderflowWarning,
)

__all__ = [
    "DemonstrationSet",
    "GaussianComponent",
    "GmmModel",
    "EmConfig",
    "fit_gmm",
    "joint_log_pdf",
    "responsibilities",
    "responsibilities_batch",
    "sample_joint",
]


@dataclass(frozen=True)
class DemonstrationSet:
    """Aligned demonstration samples.

    inputs : (N, Din) array of input vectors (e.g. time stamps).
    outputs : (N, D) array of output vectors (e.g. Cartesian positions).
    demo_boundaries : tuple of (start, end) index pairs partitioning [0, N).
    """

    inputs: np.ndarray
    outputs: np.ndarray
    demo_boundaries: tuple[tuple[int, int], ...]

    def __post_init__(self):
        inputs = np.atleast_2d(np.asarray(self.inputs, dtype=float))
        outputs = np.atleast_2d(np.asarray(self.outputs, dtype=float))
        if inputs.shape[0] != outputs.shape[0]:
            raise DimensionMismatchError(
                f"inputs ({inputs.shape[0]}) and outputs ({outputs.shape[0]}) differ in length"
            )
        if inputs.shape[0] == 0:
            raise EmptyDataError("demonstration set has no samples")
        bounds = tuple((int(a), int(b)) for a, b in self.demo_boundaries)
        covered = sorted(bounds)
        pos = 0
        for a, b in covered:
            if a != pos or b <= a:
                raise ValueError(f"demo_boundaries do not partition [0, N): {bounds}")
            pos = b
        if pos != inputs.shape[0]:
            raise ValueError("demo_boundaries do not cover all samples")
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "outputs", outputs)
        object.__setattr__(self, "demo_boundaries", bounds)

    @property
    def num_samples(self) -> int:
        return self.inputs.shape[0]

    @property
    def input_dim(self) -> int:
        return self.inputs.shape[1]

    @property
    def output_dim(self) -> int:
        return self.outputs.shape[1]

    @property
    def num_demos(self) -> int:
        return len(self.demo_boundaries)

    def joint(self) -> np.ndarray:
        """Stacked (N, Din + D) joint samples."""
        return np.hstack([self.inputs, self.outputs])

    def demo(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        a, b = self.demo_boundaries[i]
        return self.inputs[a:b], self.outputs[a:b]

    @staticmethod
    def from_demos(demos: list[tuple[np.ndarray, np.ndarray]]) -> "DemonstrationSet":
        """Build from a list of (inputs, outputs) pairs, one per demonstration."""
        bounds = []
        pos = 0
        for x, y in demos:
            n = np.atleast_2d(x).shape[0]
            bounds.append((pos, pos + n))
            pos += n
        inputs = np.vstack([np.atleast_2d(np.asarray(x, float)) for x, _ in demos])
        outputs = np.vstack([np.atleast_2d(np.asarray(y, float)) for _, y in demos])
        return DemonstrationSet(inputs, outputs, tuple(bounds))


@dataclass(frozen=True)
class GaussianComponent:
    """One weighted Gaussian over the joint input-output space."""

    weight: float
    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).ravel()
        cov = np.asarray(self.covariance, dtype=float)
        if cov.shape != (mean.size, mean.size):
            raise DimensionMismatchError(
                f"covariance shape {cov.shape} does not match mean size {mean.size}"
            )
        object.__setattr__(self, "weight", float(self.weight))
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)

    def blocks(self, input_dim: int):
        """Partition mean/covariance into input and output blocks.

        Returns (mu_x, mu_y, s_xx, s_xy, s_yx, s_yy).
        """
        d = input_dim
        return (
            self.mean[:d],
            self.mean[d:],
            self.covariance[:d, :d],
            self.covariance[:d, d:],
            self.covariance[d:, :d],
            self.covariance[d:, d:],
        )


@dataclass(frozen=True)
class GmmModel:
    """A fitted mixture over the joint (input, output) space."""

    components: tuple[GaussianComponent, ...]
    input_dim: int
    output_dim: int
    log_likelihoods: tuple[float, ...] = field(default=(), compare=False)

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValueError("model needs at least one component")
        dim = self.input_dim + self.output_dim
        for c in comps:
            if c.mean.size != dim:
                raise DimensionMismatchError(
                    f"component dimension {c.mean.size} != input_dim + output_dim = {dim}"
                )
        total = sum(c.weight for c in comps)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"component weights sum to {total}, expected 1")
        object.__setattr__(self, "components", comps)

    @property
    def num_components(self) -> int:
        return len(self.components)

    @property
    def weights(self) -> np.ndarray:
        return np.array([c.weight for c in self.components])

    def to_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "output_dim": self.output_dim,
            "components": [
                {
                    "weight": c.weight,
                    "mean": c.mean.tolist(),
                    "covariance": c.covariance.tolist(),
                }
                for c in self.components
            ],
        }

    @staticmethod
    def from_dict(doc: dict) -> "GmmModel":
        comps = tuple(
            GaussianComponent(c["weight"], np.array(c["mean"]), np.array(c["covariance"]))
            for c in doc["components"]
        )
        return GmmModel(comps, int(doc["input_dim"]), int(doc["output_dim"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @staticmethod
    def from_json(text: str) -> "GmmModel":
        return GmmModel.from_dict(json.loads(text))


@dataclass(frozen=True)
class EmConfig:
    """Expectation-Maximization settings."""

    tol: float = 1e-6
    max_iter: int = 200
    reg: float = 1e-6
    seed: int = 0
    init: str = "auto"  # "auto" | "time-bins" | "kmeans++"


def _chol_lower(cov: np.ndarray) -> np.ndarray:
    return cholesky(cov, lower=True, check_finite=False)


def _gaussian_logpdf(points: np.ndarray, mean: np.ndarray, cov: np.ndarray) -> np.ndarray:
    """Log density of N(mean, cov) at each row of `points`, via Cholesky."""
    points = np.atleast_2d(points)
    dim = mean.size
    chol_l = _chol_lower(cov)
    diff = (points - mean).T
    sol = solve_triangular(chol_l, diff, lower=True, check_finite=False)
    logdet = 2.0 * np.sum(np.log(np.diag(chol_l)))
    # astronomically distant points overflow the squared distance to inf;
    # the resulting -inf log density is exactly what callers expect
    with np.errstate(over="ignore"):
        return -0.5 * (dim * np.log(2.0 * np.pi) + logdet + np.sum(sol**2, axis=0))


def _regularize(cov: np.ndarray, reg: float) -> np.ndarray:
    dim = cov.shape[0]
    return cov + reg * np.trace(cov) / dim * np.eye(dim)


def _init_time_bins(data: np.ndarray, input_dim: int, num_components: int, reg: float):
    """Equal input-range bins along the (scalar) input axis, per-bin moments."""
    t = data[:, 0]
    edges = np.linspace(t.min(), t.max(), num_components + 1)
    edges[-1] = np.inf
    means, covs, weights = [], [], []
    for k in range(num_components):
        mask = (t >= edges[k]) & (t < edges[k + 1])
        if mask.sum() < 2:
            # degenerate bin: fall back to equal-count split
            order = np.argsort(t)
            chunks = np.array_split(order, num_components)
            mask = np.zeros_like(mask)
            mask[chunks[k]] = True
        pts = data[mask]
        means.append(pts.mean(axis=0))
        covs.append(_regularize(np.atleast_2d(np.cov(pts.T)) + 1e-12 * np.eye(data.shape[1]), max(reg, 1e-6)))
        weights.append(mask.sum())
    weights = np.asarray(weights, float)
    return np.array(means), np.array(covs), weights / weights.sum()


def _init_kmeanspp(data: np.ndarray, num_components: int, reg: float, seed: int):
    """k-means++ seeding followed by one assignment pass for per-cluster moments."""
    rng = np.random.default_rng(seed)
    n = data.shape[0]
    centers = [data[rng.integers(n)]]
    for _ in range(num_components - 1):
        d2 = np.min(
            [np.sum((data - c) ** 2, axis=1) for c in centers], axis=0
        )
        probs = d2 / d2.sum() if d2.sum() > 0 else np.full(n, 1.0 / n)
        centers.append(data[rng.choice(n, p=probs)])
    centers = np.array(centers)
    labels = np.argmin(
        np.sum((data[:, None, :] - centers[None, :, :]) ** 2, axis=2), axis=1
    )
    means, covs, weights = [], [], []
    global_cov = np.atleast_2d(np.cov(data.T)) + 1e-12 * np.eye(data.shape[1])
    for k in range(num_components):
        pts = data[labels == k]
        if pts.shape[0] < 2:
            means.append(centers[k])
            covs.append(_regularize(global_cov, max(reg, 1e-6)))
            weights.append(1.0)
        else:
            means.append(pts.mean(axis=0))
            covs.append(_regularize(np.atleast_2d(np.cov(pts.T)), max(reg, 1e-6)))
            weights.append(pts.shape[0])
    weights = np.asarray(weights, float)
    return np.array(means), np.array(covs), weights / weights.sum()


def fit_gmm(
    data: DemonstrationSet, num_components: int, config: EmConfig | None = None
) -> GmmModel:
    """Fit a joint GMM to demonstration data with EM.

    The per-iteration total log-likelihood is non-decreasing (up to 1e-9
    slack); iteration stops on relative log-likelihood change below
    ``config.tol`` or after ``config.max_iter`` iterations.
    """
    config = config or EmConfig()
    if num_components < 1:
        raise ValueError("num_components must be >= 1")
    joint = data.joint()
    n, dim = joint.shape
    if n == 0:
        raise EmptyDataError("no samples")
    if not np.all(np.isfinite(joint)):
        raise NonFiniteInputError("demonstration data contains non-finite values")
    if n < num_components:
        raise ValueError(f"need at least {num_components} samples, got {n}")

    time_driven = data.input_dim == 1
    if config.init == "time-bins" or (config.init == "auto" and time_driven):
        means, covs, weights = _init_time_bins(joint, data.input_dim, num_components, config.reg)
    else:
        means, covs, weights = _init_kmeanspp(joint, num_components, config.reg, config.seed)

    history = []
    prev_ll = -np.inf
    prev_params = None
    for _ in range(config.max_iter):
        # E-step in log space
        log_probs = np.empty((n, num_components))
        for k in range(num_components):
            try:
                log_probs[:, k] = np.log(weights[k]) + _gaussian_logpdf(joint, means[k], covs[k])
            except np.linalg.LinAlgError as exc:
                raise DegenerateComponentError(
                    f"component {k} covariance not positive definite"
                ) from exc
        log_norm = logsumexp(log_probs, axis=1)
        ll = float(log_norm.sum())
        if ll < prev_ll:
            # the M-step regularizer perturbed the likelihood more than EM
            # improved it: converged at the regularization floor
            weights, means, covs = prev_params
            break
        history.append(ll)
        prev_params = (weights.copy(), means.copy(), covs.copy())
        resp = np.exp(log_probs - log_norm[:, None])

        # M-step
        counts = resp.sum(axis=0)
        if np.any(counts < 1e-10):
            raise DegenerateComponentError(
                "a component lost all responsibility during EM"
            )
        weights = counts / n
        means = (resp.T @ joint) / counts[:, None]
        for k in range(num_components):
            diff = joint - means[k]
            cov = (resp[:, k, None] * diff).T @ diff / counts[k]
            covs[k] = _regularize(0.5 * (cov + cov.T), config.reg)

        if np.isfinite(prev_ll) and abs(ll - prev_ll) < config.tol * max(1.0, abs(ll)):
            break
        prev_ll = ll

    weights = weights / weights.sum()
    comps = tuple(
        GaussianComponent(weights[k], means[k], covs[k]) for k in range(num_components)
    )
    return GmmModel(comps, data.input_dim, data.output_dim, tuple(history))


def joint_log_pdf(model: GmmModel, point: np.ndarray) -> float:
    """Log mixture density at a joint point, via log-sum-exp over components."""
    point = np.asarray(point, float).ravel()
    dim = model.input_dim + model.output_dim
    if point.size != dim:
        raise DimensionMismatchError(f"point has dimension {point.size}, expected {dim}")
    terms = [
        np.log(c.weight) + _gaussian_logpdf(point[None, :], c.mean, c.covariance)[0]
        for c in model.components
    ]
    return float(logsumexp(terms))


def _input_log_densities(model: GmmModel, xs: np.ndarray) -> np.ndarray:
    """(M, C) array of log(pi_k) + log N(x; mu_x_k, S_xx_k)."""
    xs = np.atleast_2d(xs)
    if xs.shape[1] != model.input_dim:
        raise DimensionMismatchError(
            f"input dimension {xs.shape[1]}, expected {model.input_dim}"
        )
    out = np.empty((xs.shape[0], model.num_components))
    for k, c in enumerate(model.components):
        mu_x, _, s_xx, *_ = c.blocks(model.input_dim)
        out[:, k] = np.log(c.weight) + _gaussian_logpdf(xs, mu_x, s_xx)
    return out


def _mahalanobis_fallback(model: GmmModel, x: np.ndarray) -> np.ndarray:
    dists = []
    for c in model.components:
        mu_x, _, s_xx, *_ = c.blocks(model.input_dim)
        chol_l = _chol_lower(s_xx)
        sol = solve_triangular(chol_l, x - mu_x, lower=True, check_finite=False)
        # scaled norm: plain sum of squares overflows exactly in the regime
        # where this fallback runs
        scale = np.max(np.abs(sol))
        dists.append(0.0 if scale == 0 else scale * np.sqrt(np.sum((sol / scale) ** 2)))
    resp = np.zeros(model.num_components)
    resp[int(np.argmin(dists))] = 1.0
    return resp


def responsibilities(model: GmmModel, x: np.ndarray, return_flag: bool = False):
    """Posterior component probabilities h(x) for an input vector.

    Computed in log-space and normalized with log-sum-exp. If every marginal
    log-density is non-finite (input astronomically far from all components),
    the responsibility of the nearest component by Mahalanobis distance is
    returned instead and a ``ResponsibilityUnderflowWarning`` is issued.
    """
    x = np.asarray(x, float).ravel()
    log_dens = _input_log_densities(model, x[None, :])[0]
    underflow = not np.any(np.isfinite(log_dens))
    if underflow:
        warnings.warn(
            "all component densities underflowed; using nearest-component fallback",
            ResponsibilityUnderflowWarning,
        )
        resp = _mahalanobis_fallback(model, x)
    else:
        resp = np.exp(log_dens - logsumexp(log_dens))
        resp = resp / resp.sum()
    return (resp, underflow) if return_flag else resp


def responsibilities_batch(model: GmmModel, xs: np.ndarray) -> np.ndarray:
    """(M, C) responsibilities for a batch of inputs (vectorized over rows)."""
    xs = np.atleast_2d(np.asarray(xs, float))
    log_dens = _input_log_densities(model, xs)
    finite = np.any(np.isfinite(log_dens), axis=1)
    out = np.empty_like(log_dens)
    if np.any(finite):
        ld = log_dens[finite]
        resp = np.exp(ld - logsumexp(ld, axis=1, keepdims=True))
        out[finite] = resp / resp.sum(axis=1, keepdims=True)
    if not np.all(finite):
        warnings.warn(
            "all component densities underflowed for some inputs; "
            "using nearest-component fallback",
            ResponsibilityUnderflowWarning,
        )
        for i in np.nonzero(~finite)[0]:
            out[i] = _mahalanobis_fallback(model, xs[i])
    return out


def sample_joint(model: GmmModel, count: int, seed: int) -> np.ndarray:
    """Draw i.i.d. joint samples: component by weight, then a Gaussian draw."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    labels = rng.choice(model.num_components, size=count, p=model.weights)
    dim = model.input_dim + model.output_dim
    out = np.empty((count, dim))
    for k, c in enumerate(model.components):
        mask = labels == k
        m = int(mask.sum())
        if m == 0:
            continue
        chol_l = _chol_lower(c.covariance)
        out[mask] = c.mean + rng.standard_normal((m, dim)) @ chol_l.T
    return out
