"""Scikit-learn style estimators: descriptor extraction, KL reduction, LDA.

All three follow the fit/transform/predict conventions (``get_params``,
trailing-underscore fitted attributes, ``clone``-compatible constructors)
so they compose with pipelines and model-selection tooling from the wider
ecosystem.  Fitted models are immutable in practice: prediction and
projection never mutate state and are safe to call concurrently.
"""

from __future__ import annotations

import json

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import prism
from .validation import check_feature_matrix, check_labels

MODEL_SCHEMA_VERSION = 1

DEFAULT_EXPONENTS = tuple(round(1.0 + 0.1 * i, 10) for i in range(9))  # 1.0 .. 1.8


class DegenerateClassError(ValueError):
    """Raised when a class has too few samples to estimate its statistics."""


def covariance(X) -> np.ndarray:
    """Sample covariance of the columns of ``X``.

    Columns are mean-centered and the sum of outer products is divided by
    ``n_samples - 1``.  The result is explicitly symmetrized so that
    ``C[i, j] == C[j, i]`` holds exactly, not just up to BLAS rounding.
    """
    X = check_feature_matrix(X, min_rows=2)
    centered = X - X.mean(axis=0)
    cov = centered.T @ centered / (X.shape[0] - 1)
    return (cov + cov.T) / 2.0


class KLTransform(BaseEstimator, TransformerMixin):
    """Karhunen-Loeve transform: projection onto covariance eigenvectors.

    Fitting eigendecomposes the sample covariance of the training data and
    stores the eigenvectors as columns sorted by descending eigenvalue.
    Transforming mean-centers rows with the training mean and projects
    onto the first ``n_components`` columns.  Earlier components carry
    more variance, so truncating the projection is the dimensionality
    reduction.

    Parameters
    ----------
    n_components : int or None
        Number of leading components kept by ``transform``.  ``None``
        keeps all of them.

    Attributes
    ----------
    mean_ : ndarray of shape (n_features,)
        Per-feature training means.
    basis_ : ndarray of shape (n_features, n_features)
        Orthonormal eigenvector matrix, one component per column.  Each
        column's sign is fixed so its largest-magnitude entry is
        positive, making fitted bases reproducible.
    eigenvalues_ : ndarray of shape (n_features,)
        Descending eigenvalues, clamped at zero.
    """

    def __init__(self, n_components: int | None = None):
        self.n_components = n_components

    def fit(self, X, y=None):
        X = check_feature_matrix(X, min_rows=2)
        self.mean_ = X.mean(axis=0)
        eigenvalues, eigenvectors = np.linalg.eigh(covariance(X))
        order = np.argsort(eigenvalues)[::-1]
        eigenvalues = eigenvalues[order]
        eigenvectors = eigenvectors[:, order]
        anchor = np.argmax(np.abs(eigenvectors), axis=0)
        flip = eigenvectors[anchor, np.arange(eigenvectors.shape[1])] < 0
        eigenvectors[:, flip] *= -1.0
        self.eigenvalues_ = np.maximum(eigenvalues, 0.0)
        self.basis_ = eigenvectors
        self.n_features_in_ = X.shape[1]
        return self

    def _resolve_components(self) -> int:
        k = self.n_features_in_ if self.n_components is None else int(self.n_components)
        if not 1 <= k <= self.n_features_in_:
            raise ValueError(
                f"n_components must lie in [1, {self.n_features_in_}], got {self.n_components}"
            )
        return k

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "basis_")
        X = check_feature_matrix(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, model was fitted with {self.n_features_in_}"
            )
        k = self._resolve_components()
        return (X - self.mean_) @ self.basis_[:, :k]

    def inverse_transform(self, Z) -> np.ndarray:
        check_is_fitted(self, "basis_")
        Z = check_feature_matrix(Z)
        k = self._resolve_components()
        if Z.shape[1] != k:
            raise ValueError(f"Z has {Z.shape[1]} columns, expected {k}")
        return Z @ self.basis_[:, :k].T + self.mean_


class LinearDiscriminantClassifier(BaseEstimator, ClassifierMixin):
    """Gaussian LDA with a shared, ridge-stabilized pooled covariance.

    Each class is modeled as a Gaussian with its own mean and a common
    covariance, estimated by pooling the within-class scatter.  A ridge
    term ``ridge * I`` guards against singularity when the feature count
    approaches the per-class sample count.

    Parameters
    ----------
    ridge : float or None
        Ridge added to the pooled covariance diagonal.  ``None`` selects
        ``1e-6 * trace(pooled) / n_features``.

    Prediction returns the class maximizing the linear discriminant
    ``x @ inv(C) @ mu_c - mu_c @ inv(C) @ mu_c / 2 + log(prior_c)``;
    exact ties go to the class listed first in ``classes_``.
    """

    def __init__(self, ridge: float | None = None):
        self.ridge = ridge

    def fit(self, X, y):
        X = check_feature_matrix(X, min_rows=2)
        y = check_labels(y, X.shape[0])
        if self.ridge is not None and self.ridge < 0:
            raise ValueError(f"ridge must be >= 0, got {self.ridge}")
        self.classes_, y_idx = np.unique(y, return_inverse=True)
        if self.classes_.size < 2:
            raise DegenerateClassError("need at least 2 classes")
        counts = np.bincount(y_idx)
        if counts.min() < 2:
            lonely = self.classes_[int(np.argmin(counts))]
            raise DegenerateClassError(f"class {lonely!r} has fewer than 2 samples")

        n_samples, n_features = X.shape
        means = np.empty((self.classes_.size, n_features))
        for c in range(self.classes_.size):
            means[c] = X[y_idx == c].mean(axis=0)
        centered = X - means[y_idx]
        pooled = centered.T @ centered / (n_samples - self.classes_.size)
        pooled = (pooled + pooled.T) / 2.0

        # Proportional default ridge, with an absolute floor so a fully
        # degenerate (all-constant-features) fit still yields a usable,
        # chance-level classifier instead of a singular solve.
        self.ridge_ = (
            float(self.ridge)
            if self.ridge is not None
            else max(1e-6 * float(np.trace(pooled)) / n_features, 1e-12)
        )
        self.means_ = means
        self.priors_ = counts / n_samples
        self.covariance_ = pooled + self.ridge_ * np.eye(n_features)
        self.n_features_in_ = n_features
        # Linear discriminant weights; solving once here makes predict O(n*k).
        weights = np.linalg.solve(self.covariance_, means.T)
        self.coef_ = weights.T
        self.intercept_ = -0.5 * np.einsum("cf,cf->c", means, weights.T) + np.log(self.priors_)
        return self

    def decision_function(self, X) -> np.ndarray:
        check_is_fitted(self, "coef_")
        X = check_feature_matrix(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, model was fitted with {self.n_features_in_}"
            )
        return X @ self.coef_.T + self.intercept_

    def predict(self, X) -> np.ndarray:
        scores = self.decision_function(X)
        return self.classes_[np.argmax(scores, axis=1)]


class PrismDescriptorExtractor(BaseEstimator, TransformerMixin):
    """Transformer mapping a sequence of images to descriptor rows.

    ``fit`` resolves the scale schedule from the first image (all images
    in one matrix must share dimensions so rows are comparable);
    ``transform`` stacks one log-area descriptor per image.

    Parameters
    ----------
    exponents : sequence of float
        Area-sum exponents, ascending.
    scale_mode : {"powers_of_two", "linear"}
        Schedule family used when ``scales`` is not given explicitly.
    max_scale : int or None
        Upper cap on the schedule.
    scales : sequence of int or None
        Explicit schedule override; bypasses ``scale_mode``.
    """

    def __init__(
        self,
        exponents=DEFAULT_EXPONENTS,
        scale_mode: str = "powers_of_two",
        max_scale: int | None = None,
        scales=None,
    ):
        self.exponents = exponents
        self.scale_mode = scale_mode
        self.max_scale = max_scale
        self.scales = scales

    def _schedule_for(self, img) -> list[int]:
        if self.scales is not None:
            return [int(s) for s in self.scales]
        if self.scale_mode == "powers_of_two":
            return prism.power_of_two_scales(img, self.max_scale)
        if self.scale_mode == "linear":
            return prism.linear_scales(img, self.max_scale)
        raise ValueError(f"unknown scale_mode {self.scale_mode!r}")

    def fit(self, X, y=None):
        images = list(X)
        if not images:
            raise ValueError("need at least one image to resolve the scale schedule")
        self.scales_ = self._schedule_for(images[0])
        return self

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "scales_")
        rows = [prism.descriptor_vector(img, self.scales_, self.exponents) for img in X]
        return np.vstack(rows)

    def get_feature_names_out(self, input_features=None) -> np.ndarray:
        check_is_fitted(self, "scales_")
        return np.asarray(prism.descriptor_feature_names(self.scales_, self.exponents))


# ---------------------------------------------------------------------------
# Model serialization (documented JSON schema, see README)
# ---------------------------------------------------------------------------


def model_to_dict(model) -> dict:
    """Serialize a fitted KLTransform or LinearDiscriminantClassifier."""
    if isinstance(model, KLTransform):
        check_is_fitted(model, "basis_")
        return {
            "schema_version": MODEL_SCHEMA_VERSION,
            "model": "kl_transform",
            "n_components": model.n_components,
            "mean": model.mean_.tolist(),
            "basis": model.basis_.tolist(),
            "eigenvalues": model.eigenvalues_.tolist(),
        }
    if isinstance(model, LinearDiscriminantClassifier):
        check_is_fitted(model, "coef_")
        return {
            "schema_version": MODEL_SCHEMA_VERSION,
            "model": "lda_classifier",
            "ridge": model.ridge_,
            "classes": model.classes_.tolist(),
            "class_means": model.means_.tolist(),
            "pooled_covariance": (model.covariance_ - model.ridge_ * np.eye(model.n_features_in_)).tolist(),
            "priors": model.priors_.tolist(),
        }
    raise TypeError(f"cannot serialize {type(model).__name__}")


def model_from_dict(payload: dict):
    """Rebuild a fitted estimator from ``model_to_dict`` output."""
    version = payload.get("schema_version")
    if version != MODEL_SCHEMA_VERSION:
        raise ValueError(f"unsupported model schema version {version!r}")
    kind = payload.get("model")
    if kind == "kl_transform":
        model = KLTransform(n_components=payload["n_components"])
        model.mean_ = np.asarray(payload["mean"], dtype=np.float64)
        model.basis_ = np.asarray(payload["basis"], dtype=np.float64)
        model.eigenvalues_ = np.asarray(payload["eigenvalues"], dtype=np.float64)
        model.n_features_in_ = model.basis_.shape[0]
        return model
    if kind == "lda_classifier":
        model = LinearDiscriminantClassifier(ridge=payload["ridge"])
        model.classes_ = np.asarray(payload["classes"])
        model.means_ = np.asarray(payload["class_means"], dtype=np.float64)
        model.priors_ = np.asarray(payload["priors"], dtype=np.float64)
        model.ridge_ = float(payload["ridge"])
        pooled = np.asarray(payload["pooled_covariance"], dtype=np.float64)
        model.n_features_in_ = pooled.shape[0]
        model.covariance_ = pooled + model.ridge_ * np.eye(model.n_features_in_)
        weights = np.linalg.solve(model.covariance_, model.means_.T)
        model.coef_ = weights.T
        model.intercept_ = -0.5 * np.einsum(
            "cf,cf->c", model.means_, weights.T
        ) + np.log(model.priors_)
        return model
    raise ValueError(f"unknown model kind {kind!r}")


def save_model(model, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
