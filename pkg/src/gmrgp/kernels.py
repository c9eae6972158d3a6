"""Matrix-valued kernels: Matérn-5/2, stationary sums of separable kernels
(linear model of coregionalization), and the non-stationary mixture-based
kernel whose coregionalization varies with the input through the GMM
responsibilities.

All matrix-valued kernels share one contract: ``kernel(x, x2)`` returns the
D x D cross-covariance block between two inputs, and ``kernel.gram(xs, xs2)``
the (M*D) x (M'*D) block matrix with outputs interleaved per input point
(block row per input).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .exceptions import DimensionMismatchError
from .gmm import GmmModel, responsibilities_batch
from .gmr import component_conditionals

__all__ = [
    "Matern52Params",
    "matern52",
    "matern52_matrix",
    "MatrixKernel",
    "LmcKernel",
    "GmrKernel",
    "gram",
]

_SQRT5 = np.sqrt(5.0)


@dataclass(frozen=True)
class Matern52Params:
    """Scalar Matérn-5/2 parameters."""

    variance: float = 1.0
    lengthscale: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.variance) and self.variance > 0):
            raise ValueError(f"variance must be positive and finite, got {self.variance}")
        if not (np.isfinite(self.lengthscale) and self.lengthscale > 0):
            raise ValueError(
                f"lengthscale must be positive and finite, got {self.lengthscale}"
            )


def matern52_matrix(params: Matern52Params, r: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
    """Matérn-5/2 values for an array of Euclidean distances ``r``.

    With ``out`` given, the result is accumulated in place to avoid large
    temporaries on big Gram builds.
    """
    s = _SQRT5 / params.lengthscale
    if out is None:
        sr = s * np.asarray(r, float)
        return params.variance * (1.0 + sr + sr**2 / 3.0) * np.exp(-sr)
    np.multiply(r, s, out=out)
    poly = 1.0 + out + out**2 / 3.0
    np.negative(out, out=out)
    np.exp(out, out=out)
    np.multiply(out, poly, out=out)
    out *= params.variance
    return out


def matern52(params: Matern52Params, x: np.ndarray, x2: np.ndarray) -> float:
    """Scalar Matérn-5/2 kernel between two input vectors."""
    x = np.asarray(x, float).ravel()
    x2 = np.asarray(x2, float).ravel()
    if x.size != x2.size:
        raise DimensionMismatchError(f"input dimensions differ: {x.size} vs {x2.size}")
    r = np.linalg.norm(x - x2)
    return float(matern52_matrix(params, np.array(r)))


_CHUNK_ELEMS = 5_000_000


def _row_chunks(m: int, m2: int):
    """(lo, hi) row ranges keeping per-chunk scratch arrays around 40 MB."""
    rows = max(1, _CHUNK_ELEMS // max(1, m2))
    return [(lo, min(lo + rows, m)) for lo in range(0, m, rows)]


class MatrixKernel:
    """Base contract for matrix-valued kernels."""

    output_dim: int
    input_dim: int | None = None

    def __call__(self, x: np.ndarray, x2: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def gram(self, xs: np.ndarray, xs2: np.ndarray | None = None) -> np.ndarray:
        """Block Gram matrix; generic blockwise fallback."""
        xs = np.atleast_2d(np.asarray(xs, float))
        xs2 = xs if xs2 is None else np.atleast_2d(np.asarray(xs2, float))
        d = self.output_dim
        out = np.empty((xs.shape[0] * d, xs2.shape[0] * d))
        for i, x in enumerate(xs):
            for j, x2 in enumerate(xs2):
                out[i * d : (i + 1) * d, j * d : (j + 1) * d] = self(x, x2)
        return out

    def config_dict(self) -> dict:
        raise NotImplementedError


class LmcKernel(MatrixKernel):
    """Stationary sum of separable kernels: sum_q Upsilon_q * k_q(x, x').

    coregionalization : (Q, D, D) stack of symmetric PSD matrices.
    scalar_kernels : Q Matérn-5/2 parameter sets.
    """

    def __init__(self, coregionalization, scalar_kernels):
        coreg = np.asarray(coregionalization, float)
        if coreg.ndim == 2:
            coreg = coreg[None, :, :]
        kernels = tuple(scalar_kernels)
        if coreg.shape[0] != len(kernels):
            raise DimensionMismatchError(
                f"{coreg.shape[0]} coregionalization matrices for {len(kernels)} kernels"
            )
        for q, mat in enumerate(coreg):
            if not np.allclose(mat, mat.T, atol=1e-12):
                raise ValueError(f"coregionalization matrix {q} is not symmetric")
            if np.linalg.eigvalsh(mat).min() < -1e-10:
                raise ValueError(f"coregionalization matrix {q} is not PSD")
        self.coregionalization = coreg
        self.scalar_kernels = kernels
        self.output_dim = coreg.shape[1]

    def __call__(self, x, x2):
        x = np.atleast_1d(np.asarray(x, float))
        x2 = np.atleast_1d(np.asarray(x2, float))
        if x.size != x2.size:
            raise DimensionMismatchError(f"input dimensions differ: {x.size} vs {x2.size}")
        r = np.linalg.norm(x - x2)
        out = np.zeros((self.output_dim, self.output_dim))
        for ups, params in zip(self.coregionalization, self.scalar_kernels):
            out += float(matern52_matrix(params, np.array(r))) * ups
        return out

    def gram(self, xs, xs2=None):
        """Vectorized build, accumulating separable terms in row chunks so the
        peak footprint stays close to the (M*D) x (M'*D) result itself."""
        xs = np.atleast_2d(np.asarray(xs, float))
        xs2 = xs if xs2 is None else np.atleast_2d(np.asarray(xs2, float))
        m, m2 = xs.shape[0], xs2.shape[0]
        d = self.output_dim
        out = np.zeros((m * d, m2 * d))
        view = out.reshape(m, d, m2, d)
        for lo, hi in _row_chunks(m, m2):
            r = cdist(xs[lo:hi], xs2)
            for ups, params in zip(self.coregionalization, self.scalar_kernels):
                buf = matern52_matrix(params, r)
                for a in range(d):
                    for b in range(d):
                        if ups[a, b] == 0.0:
                            continue
                        view[lo:hi, a, :, b] += ups[a, b] * buf
        return out

    def config_dict(self):
        return {
            "type": "lmc",
            "variances": [k.variance for k in self.scalar_kernels],
            "lengthscales": [k.lengthscale for k in self.scalar_kernels],
            "coregionalization": self.coregionalization.tolist(),
        }


class GmrKernel(MatrixKernel):
    """Non-stationary kernel built from a fitted joint GMM.

    k(x, x') = sum_l h_l(x) h_l(x') S_l k_l(x, x'), where h_l are the GMM
    responsibilities, S_l the component conditional output covariances and
    k_l Matérn-5/2 kernels with variance pinned at 1 (the S_l already carry
    the output scale).
    """

    def __init__(self, model: GmmModel, lengthscales):
        lengthscales = np.broadcast_to(
            np.asarray(lengthscales, float), (model.num_components,)
        ).copy()
        if np.any(lengthscales <= 0) or not np.all(np.isfinite(lengthscales)):
            raise ValueError("lengthscales must be positive and finite")
        self.model = model
        self.component_kernels = tuple(
            Matern52Params(variance=1.0, lengthscale=s) for s in lengthscales
        )
        self.conditional_covs = component_conditionals(model)
        self.output_dim = model.output_dim
        self.input_dim = model.input_dim

    @property
    def lengthscales(self) -> np.ndarray:
        return np.array([k.lengthscale for k in self.component_kernels])

    def __call__(self, x, x2):
        block = self.gram(np.atleast_2d(np.asarray(x, float)), np.atleast_2d(np.asarray(x2, float)))
        return block

    def gram(self, xs, xs2=None):
        xs = np.atleast_2d(np.asarray(xs, float))
        symmetric = xs2 is None
        xs2 = xs if symmetric else np.atleast_2d(np.asarray(xs2, float))
        if xs.shape[1] != self.input_dim or xs2.shape[1] != self.input_dim:
            raise DimensionMismatchError(
                f"inputs must have dimension {self.input_dim}"
            )
        # responsibilities are computed once per distinct input set per build
        h1 = responsibilities_batch(self.model, xs)
        h2 = h1 if symmetric else responsibilities_batch(self.model, xs2)
        m, m2 = xs.shape[0], xs2.shape[0]
        d = self.output_dim
        out = np.zeros((m * d, m2 * d))
        view = out.reshape(m, d, m2, d)
        for lo, hi in _row_chunks(m, m2):
            r = cdist(xs[lo:hi], xs2)
            for k, params in enumerate(self.component_kernels):
                buf = matern52_matrix(params, r)
                buf *= np.outer(h1[lo:hi, k], h2[:, k])
                cov = self.conditional_covs[k]
                for a in range(d):
                    for b in range(d):
                        if cov[a, b] == 0.0:
                            continue
                        view[lo:hi, a, :, b] += cov[a, b] * buf
        return out

    def config_dict(self):
        return {
            "type": "gmr",
            "variances": [1.0] * len(self.component_kernels),
            "lengthscales": [k.lengthscale for k in self.component_kernels],
        }


class Matern52MatrixKernel(MatrixKernel):
    """Single-output wrapper exposing a scalar Matérn-5/2 through the matrix contract."""

    def __init__(self, params: Matern52Params):
        self.params = params
        self.output_dim = 1

    def __call__(self, x, x2):
        return np.array([[matern52(self.params, x, x2)]])

    def gram(self, xs, xs2=None):
        xs = np.atleast_2d(np.asarray(xs, float))
        xs2 = xs if xs2 is None else np.atleast_2d(np.asarray(xs2, float))
        return matern52_matrix(self.params, cdist(xs, xs2))

    def config_dict(self):
        return {
            "type": "matern52",
            "variances": [self.params.variance],
            "lengthscales": [self.params.lengthscale],
        }


def gram(kernel: MatrixKernel, xs: np.ndarray, xs2: np.ndarray | None = None) -> np.ndarray:
    """Block Gram matrix of a matrix-valued kernel (delegates to the kernel)."""
    return kernel.gram(xs, xs2)
