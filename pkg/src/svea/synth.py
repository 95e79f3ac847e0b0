"""Gaussian class-conditional generators, presets SD1-SD5 and the Bayes oracle.

Both classes share one covariance ``sigma``; ``p = P(Y = +1)``. Sampling is
reproducible across implementations: labels come from the SplitMix64 stream
keyed ``(seed, 0)`` (``+1`` iff ``u < p``), features from Box–Muller normals
on the stream keyed ``(seed, 1)`` laid out row-major, transformed as
``x = mu_y + L z`` with ``L`` the lower Cholesky factor of ``sigma``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import streams
from .data import Dataset
from .errors import InputError, NumericalError
from .game import train_classifier, full_mask

JITTER = 1e-10


@dataclass(frozen=True, eq=False)
class GaussianClassSpec:
    p: float
    mu_plus: np.ndarray
    mu_minus: np.ndarray
    sigma: np.ndarray
    name: str = ""

    def __post_init__(self):
        mu_p = np.array(self.mu_plus, dtype=float).reshape(-1)
        mu_m = np.array(self.mu_minus, dtype=float).reshape(-1)
        sigma = np.array(self.sigma, dtype=float)
        n = mu_p.size
        if not 0.0 < self.p < 1.0:
            raise InputError(f"class prior p must lie in (0, 1), got {self.p}")
        if mu_m.size != n or sigma.shape != (n, n):
            raise InputError("mean vectors and covariance have inconsistent sizes")
        if not np.allclose(sigma, sigma.T, atol=1e-12, rtol=0.0):
            raise InputError("covariance matrix is not symmetric")
        for arr in (mu_p, mu_m, sigma):
            arr.setflags(write=False)
        object.__setattr__(self, "mu_plus", mu_p)
        object.__setattr__(self, "mu_minus", mu_m)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "_chol", psd_cholesky(sigma))

    @property
    def n(self) -> int:
        return self.mu_plus.size

    @property
    def cholesky(self) -> np.ndarray:
        return self._chol


def psd_cholesky(sigma: np.ndarray, jitter: float = JITTER) -> np.ndarray:
    """Lower factor ``L`` with ``L L^T = sigma`` for positive semi-definite ``sigma``.

    A pivot that is zero up to ``jitter`` (relative to the largest diagonal)
    zeroes its column instead of failing, so degenerate covariances such as
    the zero matrix are allowed. A clearly negative pivot raises.
    """
    sigma = np.asarray(sigma, dtype=float)
    n = sigma.shape[0]
    scale = max(float(np.max(np.abs(np.diag(sigma)), initial=0.0)), 1.0)
    tol = jitter * scale
    low = np.zeros((n, n))
    for j in range(n):
        pivot = sigma[j, j] - low[j, :j] @ low[j, :j]
        if pivot < -tol:
            raise NumericalError(f"covariance is not positive semi-definite (pivot {j + 1} = {pivot:.3g})")
        if pivot <= tol:
            continue
        low[j, j] = np.sqrt(pivot)
        low[j + 1:, j] = (sigma[j + 1:, j] - low[j + 1:, :j] @ low[j, :j]) / low[j, j]
    return low


def sample(spec: GaussianClassSpec, m: int, seed: int) -> Dataset:
    """Draw ``m`` labelled rows."""
    if m < 1:
        raise InputError(f"sample size must be positive, got {m}")
    u = streams.uniform(streams.derive_key(seed, 0), m)
    labels = np.where(u < spec.p, 1.0, -1.0)
    z = streams.standard_normal(streams.derive_key(seed, 1), m * spec.n).reshape(m, spec.n)
    means = np.where(labels[:, None] > 0, spec.mu_plus, spec.mu_minus)
    return Dataset(means + z @ spec.cholesky.T, labels)


def _sd3_sigma() -> np.ndarray:
    s = np.diag([5.0, 0.001, 5.0, 0.001, 0.002, 5.0])
    for (i, j), val in {(1, 3): 0.9, (1, 6): 2.6, (3, 6): 2.0}.items():
        s[i - 1, j - 1] = s[j - 1, i - 1] = val
    return s


def _sd5_sigma() -> np.ndarray:
    s = np.diag([25.0, 25.0, 35.0, 35.0, 25.0, 35.0, 25.0])
    off = {(1, 3): 5, (2, 5): 5, (5, 7): 5, (1, 6): 4, (2, 7): 4, (3, 6): 4,
           (1, 7): 2, (6, 7): 0.1, (3, 7): 8, (4, 7): 1}
    for (i, j), val in off.items():
        s[i - 1, j - 1] = s[j - 1, i - 1] = val
    return s


def preset(name: str) -> GaussianClassSpec:
    """Parameters of the synthetic benchmarks ``SD1`` .. ``SD5``."""
    key = name.upper()
    if key == "SD1":
        return GaussianClassSpec(0.5, [0.3, 0.0], [-0.3, 0.0], np.diag([0.1, 0.001]), "SD1")
    if key == "SD2":
        return GaussianClassSpec(0.5, [2, 0.2, 0.3, 1.8, 1], [-2, 0.2, 0.3, -1.8, 1],
                                 10.0 * np.eye(5), "SD2")
    if key == "SD3":
        return GaussianClassSpec(0.4, [2.5, 0, 2.1, 0, 0, 2.6], [-2.5, 0, -2.1, 0, 0, -2.6],
                                 _sd3_sigma(), "SD3")
    if key == "SD4":
        return GaussianClassSpec(0.65, [2, 0.4, 2.15, 1, 1.1, 2.05],
                                 [-2, 0.4, -2.15, 1, 1.1, -2.05], _sd3_sigma(), "SD4")
    if key == "SD5":
        return GaussianClassSpec(0.5, [5, 2.8, 4, 7, 2.8, 3.6, 7.5],
                                 [-5, 2.8, 3.5, -7, 3.8, 3.5, -7.5], _sd5_sigma(), "SD5")
    raise InputError(f"unknown preset {name!r}; choose one of {', '.join(PRESETS)}")


PRESETS = ("SD1", "SD2", "SD3", "SD4", "SD5")


@dataclass(frozen=True)
class EtaCoefficients:
    """``eta(x) = 1 / (1 + prior_factor * exp(-(weights . x)))``."""

    prior_factor: float
    weights: np.ndarray

    @property
    def log_offset(self) -> float:
        """Log-odds at ``x = 0``, i.e. ``-log(prior_factor)``."""
        return -float(np.log(self.prior_factor))


def eta_coefficients(spec: GaussianClassSpec) -> EtaCoefficients:
    """Closed form of the in-class probability under a shared covariance."""
    try:
        chol = np.linalg.cholesky(spec.sigma + JITTER * np.eye(spec.n))
    except np.linalg.LinAlgError:
        raise NumericalError("covariance is singular; the in-class probability is undefined") from None
    if np.min(np.diag(chol)) ** 2 < 1e3 * JITTER:
        raise NumericalError("covariance is singular; the in-class probability is undefined")

    def inv_apply(v):
        return np.linalg.solve(chol.T, np.linalg.solve(chol, v))

    weights = inv_apply(spec.mu_plus - spec.mu_minus)
    quad = spec.mu_plus @ inv_apply(spec.mu_plus) - spec.mu_minus @ inv_apply(spec.mu_minus)
    factor = (1.0 - spec.p) / spec.p * np.exp(0.5 * quad)
    return EtaCoefficients(float(factor), weights)


def log_odds(spec: GaussianClassSpec, x) -> np.ndarray:
    coef = eta_coefficients(spec)
    return np.atleast_2d(np.asarray(x, dtype=float)) @ coef.weights + coef.log_offset


def eta(spec: GaussianClassSpec, x) -> np.ndarray:
    """``P(Y = +1 | x)`` for each row of ``x``."""
    t = log_odds(spec, x)
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    et = np.exp(t[~pos])
    out[~pos] = et / (1.0 + et)
    return out


def bayes_predict(spec: GaussianClassSpec, x) -> np.ndarray:
    """``+1`` where ``eta >= 1/2`` (ties go to ``+1``), else ``-1``."""
    return np.where(log_odds(spec, x) >= 0.0, 1.0, -1.0)


@dataclass(frozen=True)
class BayesReport:
    eta: np.ndarray
    bayes_accuracy: float
    classifier_accuracy: float

    @property
    def error1(self) -> float:
        """Positive when the trained classifier is worse than the Bayes rule."""
        return self.bayes_accuracy - self.classifier_accuracy


def error1(spec: GaussianClassSpec, train: Dataset, test: Dataset, predictor=None) -> BayesReport:
    """Compare the hinge-LP classifier trained on ``train`` with the Bayes rule on ``test``.

    ``predictor`` overrides the trained classifier: a callable mapping a
    feature matrix to labels.
    """
    if predictor is None:
        clf = train_classifier(train, full_mask(train.n))
        predictor = clf.predict
    bayes = bayes_predict(spec, test.features)
    mine = np.asarray(predictor(test.features))
    return BayesReport(eta(spec, test.features),
                       float(np.mean(bayes == test.labels)),
                       float(np.mean(mine == test.labels)))
