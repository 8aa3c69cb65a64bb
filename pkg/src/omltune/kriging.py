"""Ordinary Kriging surrogate with MLE length-scales, plus design helpers.

The correlation model is the anisotropic Gaussian kernel

    R_ij = exp(-sum_k 10^theta_k * (x_ik - x_jk)^2)

with the activity parameters ``theta`` searched on a log10 scale in
[-3, 2] and inputs normalized to the unit cube.  A nugget ``lam``
inflates the diagonal: fixed at 1e-10 for deterministic responses (pure
conditioning), or estimated by maximum likelihood in [1e-8, 1] for noisy
ones.  With a vanishing nugget the predictor interpolates the training
responses exactly.

Fitting maximizes the concentrated log-likelihood

    -(n/2) ln sigma2_hat - (1/2) ln det(R + lam*I)

over theta (and optionally lam) by multi-start compass search, which is
derivative-free and robust to the likelihood's plateaus.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

THETA_LOG10_BOUNDS = (-3.0, 2.0)
NUGGET_LOG10_BOUNDS = (-8.0, 0.0)
FIXED_NUGGET = 1e-10

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
_erf_vec = np.vectorize(math.erf, otypes=[float])


class FitError(RuntimeError):
    """Raised when no positive-definite correlation matrix can be built."""


def norm_cdf(z: float) -> float:
    return 0.5 * (1.0 + math.erf(z / _SQRT2))


def norm_pdf(z: float) -> float:
    return _INV_SQRT_2PI * math.exp(-0.5 * z * z)


def latin_hypercube(k: int, d: int, rng) -> np.ndarray:
    """k stratified points in [0, 1]^d: one per stratum per dimension."""
    if k < 1 or d < 1:
        raise ValueError("k and d must be positive")
    rng = np.random.default_rng(rng)
    out = np.empty((k, d), dtype=float)
    for j in range(d):
        out[:, j] = (rng.permutation(k) + rng.uniform(size=k)) / k
    return out


def correlation_matrix(x: np.ndarray, theta: np.ndarray) -> np.ndarray:
    scale = 10.0 ** np.asarray(theta, dtype=float)
    diff = x[:, None, :] - x[None, :, :]
    return np.exp(-np.einsum("ijd,d->ij", diff * diff, scale))


def cho_solve(chol: np.ndarray, b: np.ndarray) -> np.ndarray:
    z = np.linalg.solve(chol, b)
    return np.linalg.solve(chol.T, z)


@dataclass
class KrigingModel:
    x: np.ndarray  # (n, d) design, normalized to [0, 1]^d
    y: np.ndarray  # (n,) responses
    theta: np.ndarray  # (d,) log10 activity parameters
    lam: float  # nugget
    mu: float  # fitted constant mean
    sigma2: float  # fitted process variance
    chol: np.ndarray  # Cholesky factor of R + lam*I
    alpha: np.ndarray  # (R + lam*I)^{-1} (y - mu)
    kinv_ones: np.ndarray  # (R + lam*I)^{-1} 1
    log_likelihood: float

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]

    def _corr_vec(self, points: np.ndarray) -> np.ndarray:
        """Correlations of query points against the design, (m, n)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        scale = 10.0**self.theta
        diff = pts[:, None, :] - self.x[None, :, :]
        return np.exp(-np.einsum("mnd,d->mn", diff * diff, scale))

    def predict(self, point) -> tuple[float, float]:
        mean, var = self.predict_batch(np.atleast_2d(point))
        return float(mean[0]), float(var[0])

    def predict_batch(self, points) -> tuple[np.ndarray, np.ndarray]:
        """Ordinary-kriging mean and variance (clamped at zero)."""
        r = self._corr_vec(points)  # (m, n)
        mean = self.mu + r @ self.alpha
        # var = sigma2 * (1 - r' K^-1 r + (1 - 1' K^-1 r)^2 / (1' K^-1 1))
        kinv_r = cho_solve(self.chol, r.T)  # (n, m)
        quad = np.einsum("mn,nm->m", r, kinv_r)
        ones_term = 1.0 - self.kinv_ones @ r.T
        denom = float(np.sum(self.kinv_ones))
        var = self.sigma2 * (1.0 - quad + ones_term**2 / denom)
        return mean, np.maximum(var, 0.0)

    def params_dict(self) -> dict:
        return {
            "theta": self.theta.tolist(),
            "lam": self.lam,
            "mu": self.mu,
            "sigma2": self.sigma2,
            "x": self.x.tolist(),
            "y": self.y.tolist(),
            "log_likelihood": self.log_likelihood,
        }


def _nll_factory(x: np.ndarray, y: np.ndarray):
    """Concentrated negative log-likelihood with precomputed distances."""
    n, d = x.shape
    diff = x[:, None, :] - x[None, :, :]
    dist2 = np.ascontiguousarray(np.moveaxis(diff * diff, -1, 0))  # (d, n, n)
    ones = np.ones(n)
    eye = np.eye(n)

    def evaluate(theta, lam, full: bool = False):
        scale = 10.0 ** np.asarray(theta, dtype=float)
        k = np.exp(-np.tensordot(scale, dist2, axes=1)) + lam * eye
        try:
            chol = np.linalg.cholesky(k)
        except np.linalg.LinAlgError:
            return None
        kinv_ones = cho_solve(chol, ones)
        kinv_y = cho_solve(chol, y)
        mu = float(ones @ kinv_y) / float(ones @ kinv_ones)
        res = y - mu
        sigma2 = float(res @ cho_solve(chol, res)) / n
        log_det = 2.0 * float(np.sum(np.log(np.diag(chol))))
        nll = 0.5 * n * math.log(max(sigma2, 1e-300)) + 0.5 * log_det
        if not full:
            return nll
        return nll, chol, mu, sigma2, kinv_ones

    return evaluate


def _compass_search(objective, start, lower, upper, max_iter=200, tol=1e-6):
    """Derivative-free pattern search inside a box, minimizing `objective`.

    One iteration polls every coordinate in both directions and moves
    greedily; the step halves after a sweep without improvement.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    width = upper - lower
    point = np.clip(np.asarray(start, dtype=float), lower, upper)
    best = objective(point)
    if best is None:
        return None, None
    step = 0.25
    for _ in range(max_iter):
        if step <= tol:
            break
        improved = False
        for j in range(point.size):
            if width[j] == 0.0:
                continue
            for sign in (1.0, -1.0):
                trial = point.copy()
                trial[j] = min(max(point[j] + sign * step * width[j], lower[j]), upper[j])
                if trial[j] == point[j]:
                    continue
                value = objective(trial)
                if value is not None and value < best:
                    best, point = value, trial
                    improved = True
                    break
        if not improved:
            step *= 0.5
    return point, best


def fit_kriging(x, y, noise: bool = False, seed: int = 0, n_starts: int = 10) -> KrigingModel:
    """Fit the surrogate by multi-start MLE over the activity parameters.

    ``noise=False`` pins the nugget at a tiny conditioning value so the
    model interpolates; ``noise=True`` adds log10(nugget) in [-8, 0] as an
    extra MLE parameter.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2:
        raise FitError("need at least two design points")
    if y.shape != (x.shape[0],):
        raise FitError("responses must align with the design")
    if not np.all(np.isfinite(y)):
        raise FitError("responses must be finite")
    d = x.shape[1]
    rng = np.random.default_rng(seed)
    nll = _nll_factory(x, y)

    # dimensions with no design variation leave the likelihood flat in
    # their theta; pin them at the least-active bound instead of letting
    # the search park them anywhere
    active = np.ptp(x, axis=0) > 0.0

    def full_theta(reduced):
        theta = np.full(d, THETA_LOG10_BOUNDS[0])
        theta[active] = reduced
        return theta

    n_active = int(np.sum(active))
    lo = np.full(n_active, THETA_LOG10_BOUNDS[0])
    hi = np.full(n_active, THETA_LOG10_BOUNDS[1])
    if noise:
        lo = np.append(lo, NUGGET_LOG10_BOUNDS[0])
        hi = np.append(hi, NUGGET_LOG10_BOUNDS[1])

    def split_params(p):
        if noise:
            return full_theta(p[:n_active]), 10.0 ** p[n_active]
        return full_theta(p), FIXED_NUGGET

    def objective(p):
        theta, lam = split_params(p)
        return nll(theta, lam)

    if lo.size == 0:
        starts = np.zeros((1, 0))
    else:
        starts = lo + latin_hypercube(n_starts, lo.size, rng) * (hi - lo)
    best_point = None
    best_value = math.inf
    for s in starts:
        point, value = _compass_search(objective, s, lo, hi)
        if point is not None and value < best_value:
            best_point, best_value = point, value

    if best_point is None:
        raise FitError("correlation matrix is not positive definite for any start")

    theta, lam = split_params(best_point)
    result = nll(theta, lam, full=True)
    if result is None:
        # escalate the nugget until the factorization succeeds
        for bump in (1e-8, 1e-6, 1e-4):
            result = nll(theta, lam + bump, full=True)
            if result is not None:
                lam = lam + bump
                break
        else:
            raise FitError("Cholesky factorization failed even with an inflated nugget")
    value, chol, mu, sigma2, kinv_ones = result
    alpha = cho_solve(chol, y - mu)
    return KrigingModel(
        x=x.copy(),
        y=y.copy(),
        theta=np.asarray(theta, dtype=float).copy(),
        lam=float(lam),
        mu=mu,
        sigma2=sigma2,
        chol=chol,
        alpha=alpha,
        kinv_ones=kinv_ones,
        log_likelihood=-value,
    )


def rebuild_kriging(params: dict) -> KrigingModel:
    """Reconstruct a fitted model from its serialized parameters."""
    x = np.asarray(params["x"], dtype=float)
    y = np.asarray(params["y"], dtype=float)
    theta = np.asarray(params["theta"], dtype=float)
    lam = float(params["lam"])
    result = _nll_factory(x, y)(theta, lam, full=True)
    if result is None:
        raise FitError("stored surrogate parameters are not positive definite")
    value, chol, mu, sigma2, kinv_ones = result
    alpha = cho_solve(chol, y - mu)
    return KrigingModel(
        x=x, y=y, theta=theta, lam=lam, mu=mu, sigma2=sigma2, chol=chol,
        alpha=alpha, kinv_ones=kinv_ones, log_likelihood=-value,
    )


def expected_improvement(model: KrigingModel, point, f_best: float) -> float:
    """EI under minimization; zero wherever the predictive spread vanishes."""
    mean, var = model.predict(point)
    return _ei_from_moments(mean, math.sqrt(var), f_best)


def expected_improvement_batch(model: KrigingModel, points, f_best: float) -> np.ndarray:
    mean, var = model.predict_batch(points)
    s = np.sqrt(var)
    out = np.zeros_like(mean)
    pos = s > 0.0
    z = (f_best - mean[pos]) / s[pos]
    cdf = 0.5 * (1.0 + _erf_vec(z / _SQRT2))
    pdf = _INV_SQRT_2PI * np.exp(-0.5 * z * z)
    out[pos] = (f_best - mean[pos]) * cdf + s[pos] * pdf
    return np.maximum(out, 0.0)


def _ei_from_moments(mean: float, s: float, f_best: float) -> float:
    if s <= 0.0:
        return 0.0
    z = (f_best - mean) / s
    return max((f_best - mean) * norm_cdf(z) + s * norm_pdf(z), 0.0)
