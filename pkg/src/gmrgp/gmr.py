"""Gaussian mixture regression: conditional output distributions from a joint GMM."""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .exceptions import DimensionMismatchError, SingularInputBlockError
from .gmm import GmmModel, responsibilities

__all__ = [
    "GmrPrediction",
    "component_conditional",
    "component_conditionals",
    "gmr_predict",
    "gmr_predict_batch",
    "predictions_to_csv",
]

_PSD_JITTER = 1e-10


@dataclass(frozen=True)
class GmrPrediction:
    """Conditional output moments at one input."""

    mean: np.ndarray  # (D,)
    covariance: np.ndarray  # (D, D), symmetric PSD after repair
    responsibilities: np.ndarray  # (C,)


def _make_psd(cov: np.ndarray) -> np.ndarray:
    """Symmetrize, clip negative eigenvalues to zero, add a tiny diagonal."""
    sym = 0.5 * (cov + cov.T)
    vals, vecs = np.linalg.eigh(sym)
    if vals.min() < 0.0:
        sym = (vecs * np.clip(vals, 0.0, None)) @ vecs.T
        sym = 0.5 * (sym + sym.T)
    return sym + _PSD_JITTER * np.eye(sym.shape[0])


def _input_block_factor(model: GmmModel, k: int):
    comp = model.components[k]
    _, _, s_xx, *_ = comp.blocks(model.input_dim)
    try:
        return cho_factor(s_xx, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise SingularInputBlockError(
            f"input covariance block of component {k} is not positive definite"
        ) from exc


def component_conditional(
    model: GmmModel, k: int, x: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Conditional mean and covariance of outputs for component ``k`` at ``x``.

    The covariance is the Schur complement of the input block and does not
    depend on ``x``. Solves go through a Cholesky factor of the input block;
    no explicit inverse is formed.
    """
    if not 0 <= k < model.num_components:
        raise IndexError(f"component index {k} out of range [0, {model.num_components})")
    x = np.asarray(x, float).ravel()
    if x.size != model.input_dim:
        raise DimensionMismatchError(
            f"input has dimension {x.size}, expected {model.input_dim}"
        )
    comp = model.components[k]
    mu_x, mu_y, _, s_xy, s_yx, s_yy = comp.blocks(model.input_dim)
    factor = _input_block_factor(model, k)
    mean = mu_y + s_yx @ cho_solve(factor, x - mu_x, check_finite=False)
    cov = s_yy - s_yx @ cho_solve(factor, s_xy, check_finite=False)
    return mean, 0.5 * (cov + cov.T)


def component_conditionals(model: GmmModel) -> np.ndarray:
    """(C, D, D) stack of the x-independent conditional covariances."""
    d = model.output_dim
    out = np.empty((model.num_components, d, d))
    for k in range(model.num_components):
        _, out[k] = component_conditional(model, k, model.components[k].mean[: model.input_dim])
    return out


def gmr_predict(model: GmmModel, x: np.ndarray) -> GmrPrediction:
    """Conditional output distribution at ``x`` via the laws of total mean
    and covariance over the responsibility-weighted component conditionals."""
    x = np.asarray(x, float).ravel()
    h = responsibilities(model, x)
    d = model.output_dim
    mean = np.zeros(d)
    second_moment = np.zeros((d, d))
    for k in range(model.num_components):
        if h[k] == 0.0:
            continue
        m_k, cov_k = component_conditional(model, k, x)
        mean += h[k] * m_k
        second_moment += h[k] * (cov_k + np.outer(m_k, m_k))
    cov = second_moment - np.outer(mean, mean)
    return GmrPrediction(mean, _make_psd(cov), h)


def gmr_predict_batch(model: GmmModel, xs: np.ndarray) -> list[GmrPrediction]:
    """Elementwise :func:`gmr_predict`, order preserving."""
    xs = np.atleast_2d(np.asarray(xs, float))
    if xs.size == 0:
        return []
    out = []
    for i, x in enumerate(xs):
        try:
            out.append(gmr_predict(model, x))
        except Exception as exc:
            raise type(exc)(f"query index {i}: {exc}") from exc
    return out


def gmr_mean_batch(model: GmmModel, xs: np.ndarray) -> np.ndarray:
    """(M, D) conditional means; shares the gmr_predict code path."""
    return np.array([p.mean for p in gmr_predict_batch(model, xs)])


def predictions_to_csv(xs: np.ndarray, predictions: list[GmrPrediction]) -> str:
    """One row per query: inputs, mean entries, row-major covariance entries."""
    xs = np.atleast_2d(np.asarray(xs, float))
    din = xs.shape[1]
    d = predictions[0].mean.size if predictions else 0
    buf = io.StringIO()
    header = (
        [f"x{i}" for i in range(din)]
        + [f"mean{i}" for i in range(d)]
        + [f"cov{i}{j}" for i in range(d) for j in range(d)]
    )
    buf.write(",".join(header) + "\n")
    for x, p in zip(xs, predictions):
        row = list(x) + list(p.mean) + list(p.covariance.ravel())
        buf.write(",".join(repr(float(v)) for v in row) + "\n")
    return buf.getvalue()
