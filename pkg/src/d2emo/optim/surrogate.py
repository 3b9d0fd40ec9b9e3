"""Per-objective Gaussian-process regression with an RBF kernel.

The kernel is k(x, x') = gamma * exp(-||x - x'||^2 / ell), so ell carries
squared-distance units. Targets are standardized before fitting and the
prior mean is zero in standardized space. Hyperparameters (gamma, ell) are
chosen by maximizing the log marginal likelihood with multi-start L-BFGS-B
on log-parameters inside [1e-5, 1e5]^2. The most likely optimum whose mean
reproduces the training targets to 1e-6 is kept; when none does, ell is
shortened until it does.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import linalg
from scipy.optimize import minimize
from scipy.spatial.distance import cdist

from d2emo.errors import ContractViolation, FitError
from d2emo.optim.core import EPS_DUP, Bounds, is_duplicate

logger = logging.getLogger(__name__)

PARAM_MIN = 1e-5
PARAM_MAX = 1e5
JITTER_START = 1e-8
JITTER_MAX = 1e-2
STD_FLOOR = 1e-12
N_STARTS = 8
MAX_EVALS = 200
INTERP_ATOL = 1e-6


@dataclass(frozen=True)
class KernelParams:
    gamma: float
    ell: float
    sigma_n: float = 0.0

    def __post_init__(self) -> None:
        for name in ("gamma", "ell"):
            value = getattr(self, name)
            # small slack for values returned from log-space optimization at the box edge
            if not (PARAM_MIN * (1 - 1e-9) <= value <= PARAM_MAX * (1 + 1e-9)):
                msg = f"{name}={value} outside the search box [{PARAM_MIN}, {PARAM_MAX}]"
                raise ContractViolation(msg)
        if self.sigma_n != 0.0:
            msg = "inputs are noiseless: sigma_n must be 0 (jitter is handled separately)"
            raise ContractViolation(msg)


@dataclass(frozen=True)
class GpSurrogate:
    params: KernelParams
    X: np.ndarray
    f: np.ndarray
    y_mean: float
    y_std: float
    alpha: np.ndarray
    chol: np.ndarray
    jitter: float

    @property
    def n(self) -> int:
        return int(self.X.shape[1])

    def to_dict(self) -> dict:
        return {
            "kernel": "rbf",
            "params": {"gamma": self.params.gamma, "ell": self.params.ell, "sigma_n": self.params.sigma_n},
            "X": self.X.tolist(),
            "f": self.f.tolist(),
            "y_mean": self.y_mean,
            "y_std": self.y_std,
            "jitter": self.jitter,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> GpSurrogate:
        if raw.get("kernel", "rbf") != "rbf":
            msg = f"unsupported kernel '{raw['kernel']}'"
            raise ContractViolation(msg)
        p = raw["params"]
        return condition(
            np.asarray(raw["X"], dtype=float),
            np.asarray(raw["f"], dtype=float),
            KernelParams(gamma=p["gamma"], ell=p["ell"], sigma_n=p.get("sigma_n", 0.0)),
            y_mean=raw["y_mean"],
            y_std=raw["y_std"],
            jitter=raw.get("jitter"),
        )


def kernel(x: np.ndarray, x2: np.ndarray, params: KernelParams) -> float:
    x = np.asarray(x, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if x.shape != x2.shape:
        msg = f"kernel inputs differ in length: {x.size} vs {x2.size}"
        raise ContractViolation(msg)
    return float(params.gamma * np.exp(-np.sum((x - x2) ** 2) / params.ell))


def kernel_matrix(A: np.ndarray, B: np.ndarray, params: KernelParams) -> np.ndarray:
    return params.gamma * np.exp(-cdist(A, B, "sqeuclidean") / params.ell)


def _standardize(f: np.ndarray) -> tuple[np.ndarray, float, float]:
    mean = float(np.mean(f))
    std = float(np.std(f))
    if std < STD_FLOOR:
        return np.zeros_like(f), mean, 1.0
    return (f - mean) / std, mean, std


def _factor(K: np.ndarray, gamma: float, jitter: float | None = None) -> tuple[np.ndarray, float]:
    """Cholesky of K + jitter*I, escalating jitter x10 from 1e-8*gamma up to 1e-2*gamma."""
    eye = np.eye(len(K))
    if jitter is not None:
        levels = [jitter]
    else:
        levels = []
        rel = JITTER_START
        while rel <= JITTER_MAX * (1 + 1e-9):
            levels.append(rel * gamma)
            rel *= 10
    for level in levels:
        try:
            return linalg.cholesky(K + level * eye, lower=True), level
        except linalg.LinAlgError:
            logger.debug("cholesky failed at jitter %.1e, escalating", level)
    msg = f"covariance not positive-definite after jitter escalation to {levels[-1]:.1e} (gamma={gamma:.3e})"
    raise FitError(msg)


def _check_training_data(X: np.ndarray, f: np.ndarray, minimum: int = 2) -> None:
    if X.ndim != 2 or f.ndim != 1 or len(X) != len(f):
        msg = f"training data must be X (N, n) and f (N,), got {X.shape} and {f.shape}"
        raise ContractViolation(msg)
    if len(X) < minimum:
        msg = f"GP fitting needs at least {minimum} training points, got {len(X)}"
        raise ContractViolation(msg)
    if not np.all(np.isfinite(f)):
        msg = "training targets must be finite"
        raise ContractViolation(msg)
    if len(X) > 1:
        span = np.ptp(X, axis=0)
        data_bounds = Bounds(X.min(axis=0), X.min(axis=0) + np.where(span > 0, span, 1.0))
        for i in range(1, len(X)):
            if is_duplicate(X[i], X[:i], data_bounds):
                msg = f"training input {i} duplicates an earlier row within {EPS_DUP:g} (range-normalized)"
                raise ContractViolation(msg)


def _lml_and_grad(theta: np.ndarray, sqdist: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
    gamma, ell = np.exp(theta)
    R = np.exp(-sqdist / ell)
    L, jitter = _factor(gamma * R, gamma)
    cho = (L, True)
    alpha = linalg.cho_solve(cho, y)
    n = len(y)
    lml = -0.5 * float(y @ alpha) - float(np.sum(np.log(np.diag(L)))) - 0.5 * n * np.log(2 * np.pi)
    inner = np.outer(alpha, alpha) - linalg.cho_solve(cho, np.eye(n))
    dK_dgamma = gamma * R + jitter * np.eye(n)
    dK_dell = gamma * R * (sqdist / ell)
    grad = 0.5 * np.array([np.sum(inner * dK_dgamma), np.sum(inner * dK_dell)])
    return lml, grad


def log_marginal_likelihood(params: KernelParams, X: np.ndarray, f: np.ndarray) -> float:
    """GP log marginal likelihood of the standardized targets."""
    X = np.asarray(X, dtype=float)
    f = np.asarray(f, dtype=float)
    _check_training_data(X, f)
    y, _, _ = _standardize(f)
    theta = np.log([params.gamma, params.ell])
    lml, _ = _lml_and_grad(theta, cdist(X, X, "sqeuclidean"), y)
    return lml


def condition(
    X: np.ndarray,
    f: np.ndarray,
    params: KernelParams,
    *,
    y_mean: float | None = None,
    y_std: float | None = None,
    jitter: float | None = None,
) -> GpSurrogate:
    """Build the posterior for fixed hyperparameters (no optimization)."""
    X = np.array(X, dtype=float)
    f = np.array(f, dtype=float)
    _check_training_data(X, f, minimum=1)
    if y_mean is None or y_std is None:
        _, y_mean, y_std = _standardize(f)
    y = (f - y_mean) / y_std
    L, used = _factor(kernel_matrix(X, X, params), params.gamma, jitter)
    alpha = linalg.cho_solve((L, True), y)
    for arr in (X, f, alpha, L):
        arr.setflags(write=False)
    return GpSurrogate(
        params=params, X=X, f=f, y_mean=float(y_mean), y_std=float(y_std), alpha=alpha, chol=L, jitter=used
    )


def _starts(sqdist: np.ndarray) -> list[np.ndarray]:
    off_diag = sqdist[np.triu_indices(len(sqdist), k=1)]
    scale = float(np.median(off_diag)) if off_diag.size else 1.0
    ells = np.clip(scale * np.logspace(-2, 2, N_STARTS), PARAM_MIN, PARAM_MAX)
    return [np.log([1.0, ell]) for ell in ells]


def fit(X: np.ndarray, f: np.ndarray, *, n_starts: int = N_STARTS, max_evals: int = MAX_EVALS) -> GpSurrogate:
    """Fit one GP by maximizing the log marginal likelihood from deterministic starts."""
    X = np.asarray(X, dtype=float)
    f = np.asarray(f, dtype=float)
    _check_training_data(X, f)
    y, y_mean, y_std = _standardize(f)
    sqdist = cdist(X, X, "sqeuclidean")

    if not np.any(y):
        # constant targets: any hyperparameters reproduce the mean exactly
        scale = float(np.clip(np.median(sqdist[np.triu_indices(len(X), k=1)]), PARAM_MIN, PARAM_MAX))
        return condition(X, f, KernelParams(gamma=1.0, ell=scale), y_mean=y_mean, y_std=y_std)

    def objective(theta: np.ndarray) -> tuple[float, np.ndarray]:
        try:
            lml, grad = _lml_and_grad(theta, sqdist, y)
        except FitError:
            return 1e25, np.zeros(2)
        if not np.isfinite(lml):
            return 1e25, np.zeros(2)
        return -lml, -grad

    box = [(np.log(PARAM_MIN), np.log(PARAM_MAX))] * 2
    optima: list[tuple[float, np.ndarray]] = []
    for theta0 in _starts(sqdist)[:n_starts]:
        result = minimize(
            objective, theta0, jac=True, method="L-BFGS-B", bounds=box, options={"maxfun": max_evals}
        )
        if np.isfinite(result.fun) and result.fun < 1e25:
            optima.append((float(result.fun), np.clip(result.x, box[0][0], box[0][1])))

    if not optima:
        msg = f"all {n_starts} hyperparameter starts failed positive-definiteness (N={len(X)}, n={X.shape[1]})"
        raise FitError(msg)

    # stable sort keeps the lowest-index start on ties
    optima.sort(key=lambda item: item[0])
    tolerance = INTERP_ATOL * max(1.0, y_std)
    for value, theta in optima:
        gamma, ell = np.exp(theta)
        model = _try_condition(X, f, KernelParams(gamma=float(gamma), ell=float(ell)), y_mean, y_std)
        if model is not None and _interpolation_error(model) <= tolerance:
            if model.jitter > JITTER_START * model.params.gamma:
                params = model.params
                logger.warning("GP fit needed jitter %.1e (gamma=%.3e, ell=%.3e)", model.jitter, params.gamma, params.ell)
            logger.debug("GP fit: gamma=%.4e ell=%.4e lml=%.4f", model.params.gamma, model.params.ell, -value)
            return model
    return _shorten_length_scale(X, f, optima[0][1], y_mean, y_std, tolerance)


def _try_condition(
    X: np.ndarray, f: np.ndarray, params: KernelParams, y_mean: float, y_std: float
) -> GpSurrogate | None:
    try:
        return condition(X, f, params, y_mean=y_mean, y_std=y_std)
    except FitError:
        return None


def _interpolation_error(model: GpSurrogate) -> float:
    return float(np.max(np.abs(predict_mean(model, model.X) - model.f)))


def _shorten_length_scale(
    X: np.ndarray, f: np.ndarray, theta: np.ndarray, y_mean: float, y_std: float, tolerance: float
) -> GpSurrogate:
    """Divide ell by 10 from the likelihood optimum until the mean reproduces the targets.

    A long length scale makes the covariance nearly singular; the escalated
    jitter then smooths the mean away from the training targets.
    """
    gamma, ell = (float(v) for v in np.exp(theta))
    fallback: GpSurrogate | None = None
    while True:
        model = _try_condition(X, f, KernelParams(gamma=gamma, ell=ell), y_mean, y_std)
        if model is not None:
            if fallback is None:
                fallback = model
            if _interpolation_error(model) <= tolerance:
                logger.debug("GP fit: ell shortened to %.4e for interpolation (gamma=%.4e)", ell, gamma)
                return model
        if ell <= PARAM_MIN:
            break
        ell = max(ell / 10.0, PARAM_MIN)
    if fallback is None:
        msg = f"no length scale gives a positive-definite covariance (N={len(X)}, n={X.shape[1]})"
        raise FitError(msg)
    logger.warning(
        "GP fit misses the training targets by %.1e (gamma=%.3e, ell=%.3e, jitter %.1e)",
        _interpolation_error(fallback),
        fallback.params.gamma,
        fallback.params.ell,
        fallback.jitter,
    )
    return fallback


def _as_rows(model: GpSurrogate, z: np.ndarray) -> tuple[np.ndarray, bool]:
    Z = np.asarray(z, dtype=float)
    single = Z.ndim == 1
    Z = np.atleast_2d(Z)
    if Z.shape[1] != model.n:
        msg = f"query dimension {Z.shape[1]} does not match model dimension {model.n}"
        raise ContractViolation(msg)
    return Z, single


def predict_mean(model: GpSurrogate, z: np.ndarray) -> float | np.ndarray:
    """De-standardized predictive mean at one point (n,) or many points (P, n)."""
    Z, single = _as_rows(model, z)
    mean = model.y_mean + model.y_std * (kernel_matrix(Z, model.X, model.params) @ model.alpha)
    return float(mean[0]) if single else mean


def predict_variance(model: GpSurrogate, z: np.ndarray) -> float | np.ndarray:
    Z, single = _as_rows(model, z)
    Ks = kernel_matrix(Z, model.X, model.params)
    v = linalg.solve_triangular(model.chol, Ks.T, lower=True)
    var = np.maximum(model.params.gamma - np.sum(v**2, axis=0), 0.0) * model.y_std**2
    return float(var[0]) if single else var


def grad_mean(model: GpSurrogate, z: np.ndarray) -> np.ndarray:
    """Analytic gradient of predict_mean: (n,) for one point, (P, n) for many.

    d k(z, x_i) / dz = -(2 / ell) * (z - x_i) * k(z, x_i).
    """
    Z, single = _as_rows(model, z)
    weighted = kernel_matrix(Z, model.X, model.params) * model.alpha
    grad = (-2.0 / model.params.ell) * model.y_std * (weighted.sum(axis=1)[:, None] * Z - weighted @ model.X)
    return grad[0] if single else grad


def dump_model(model: GpSurrogate, path: Path) -> None:
    path.write_text(json.dumps(model.to_dict(), indent=2))


def load_model(path: Path) -> GpSurrogate:
    return GpSurrogate.from_dict(json.loads(path.read_text()))
