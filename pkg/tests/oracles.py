"""Independent reference implementations used to cross-check the library:
naive density summation, blockwise Gram assembly, explicit-inverse GP
formulas and Monte-Carlo conditioning."""

import numpy as np

from gmrgp.gmm import GaussianComponent, GmmModel, sample_joint


def random_gmm(rng, input_dim, output_dim, num_components, spread=3.0):
    dim = input_dim + output_dim
    weights = rng.dirichlet(np.ones(num_components) * 5.0)
    comps = []
    for k in range(num_components):
        mean = spread * rng.standard_normal(dim)
        a = rng.standard_normal((dim, dim))
        cov = a @ a.T / dim + 0.3 * np.eye(dim)
        comps.append(GaussianComponent(weights[k], mean, cov))
    return GmmModel(tuple(comps), input_dim, output_dim)


def naive_mixture_pdf(model, point):
    """Direct (non-log-space) weighted sum of component densities."""
    point = np.asarray(point, float)
    total = 0.0
    for c in model.components:
        diff = point - c.mean
        inv = np.linalg.inv(c.covariance)
        det = np.linalg.det(c.covariance)
        norm = 1.0 / np.sqrt((2 * np.pi) ** point.size * det)
        total += c.weight * norm * np.exp(-0.5 * diff @ inv @ diff)
    return total


def naive_gram(kernel, xs, xs2=None):
    """Blockwise Gram assembly through single-pair kernel evaluations."""
    xs = np.atleast_2d(xs)
    xs2 = xs if xs2 is None else np.atleast_2d(xs2)
    d = kernel.output_dim
    out = np.empty((xs.shape[0] * d, xs2.shape[0] * d))
    for i, x in enumerate(xs):
        for j, x2 in enumerate(xs2):
            out[i * d : (i + 1) * d, j * d : (j + 1) * d] = np.atleast_2d(kernel(x, x2))
    return out


def dense_posterior(mean_fn, kernel, obs_inputs, obs_outputs, noise_matrix, query):
    """Posterior mean/covariance at one query via explicit matrix inversion."""
    query = np.atleast_2d(query)
    k_obs = naive_gram(kernel, obs_inputs)
    inv = np.linalg.inv(k_obs + noise_matrix)
    k_star = naive_gram(kernel, query, obs_inputs)
    residual = (np.atleast_2d(obs_outputs) - mean_fn(np.atleast_2d(obs_inputs))).ravel()
    mean = mean_fn(query).ravel() + k_star @ inv @ residual
    cov = naive_gram(kernel, query) - k_star @ inv @ k_star.T
    return mean, cov


def dense_log_marginal_likelihood(mean_fn, kernel, obs_inputs, obs_outputs, noise_matrix):
    """Log marginal likelihood via explicit determinant and inverse."""
    k_obs = naive_gram(kernel, obs_inputs) + noise_matrix
    residual = (np.atleast_2d(obs_outputs) - mean_fn(np.atleast_2d(obs_inputs))).ravel()
    sign, logdet = np.linalg.slogdet(k_obs)
    assert sign > 0
    inv = np.linalg.inv(k_obs)
    n = residual.size
    return -0.5 * (residual @ inv @ residual + logdet + n * np.log(2 * np.pi))


def mc_conditional(model, x, band, count, seed):
    """Banded Monte-Carlo estimate of the conditional output moments at x.

    Returns (mean, cov, mean_se, cov_se, n_kept).
    """
    x = np.asarray(x, float).ravel()
    samples = sample_joint(model, count, seed)
    din = model.input_dim
    mask = np.all(np.abs(samples[:, :din] - x) < band, axis=1)
    kept = samples[mask, din:]
    m = kept.shape[0]
    assert m > 100, f"band too narrow: only {m} samples kept"
    mean = kept.mean(axis=0)
    cov = np.atleast_2d(np.cov(kept.T))
    mean_se = kept.std(axis=0, ddof=1) / np.sqrt(m)
    diag = np.diag(cov)
    cov_se = np.sqrt((np.outer(diag, diag) + cov**2) / m)
    return mean, cov, mean_se, cov_se, m
