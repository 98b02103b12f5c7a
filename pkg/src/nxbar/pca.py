"""Principal component analysis for input dimensionality reduction.

Fitted on training data only; keeps the smallest number of components whose
cumulative explained variance reaches the requested fraction.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray
    components: np.ndarray  # (k, D), orthonormal rows, descending variance
    explained_variance_ratio: np.ndarray

    @property
    def n_components(self):
        return self.components.shape[0]


def fit(data, variance_target=0.90):
    """PCA of the rows of ``data`` keeping >= variance_target of the variance.

    Principal axes come from the eigendecomposition of the sample covariance
    ((n-1) denominator). Component signs are fixed by making each row's
    largest-magnitude entry positive, so fits are deterministic.
    """
    xs = np.asarray(data, dtype=np.float64)
    if xs.ndim != 2 or xs.shape[0] < 2:
        raise ValueError("need a (samples, features) matrix with at least 2 samples")
    if not 0.0 < variance_target <= 1.0:
        raise ValueError("variance_target must lie in (0, 1]")
    mean = xs.mean(axis=0)
    centered = xs - mean
    cov = (centered.T @ centered) / (xs.shape[0] - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    eigvals = np.maximum(eigvals[order], 0.0)
    total = eigvals.sum()
    if total == 0.0:
        raise ValueError("degenerate data: all samples identical")
    ratios = eigvals / total
    cumulative = np.cumsum(ratios)
    k = int(np.searchsorted(cumulative, variance_target - 1e-12) + 1)
    k = min(k, len(eigvals))
    components = eigvecs[:, order[:k]].T.copy()
    for row in components:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    return PcaModel(mean=mean, components=components, explained_variance_ratio=ratios[:k])


def transform(model, x):
    """Project onto the principal axes: components @ (x - mean)."""
    xs = np.asarray(x, dtype=np.float64)
    if xs.shape[-1] != model.mean.shape[0]:
        raise ValueError(
            "input dimension %d does not match fit dimension %d"
            % (xs.shape[-1], model.mean.shape[0])
        )
    return (xs - model.mean) @ model.components.T


def inverse_transform(model, z):
    """Back-projection into the original space (exact for full-rank models)."""
    zs = np.asarray(z, dtype=np.float64)
    return zs @ model.components + model.mean
