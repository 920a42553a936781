"""Direct maximization of the mixture log-likelihood, the baseline every estimator is compared with."""
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from . import _kernels
from .model import MixtureParams
from .numerics import Tolerance

MLE_TOL = Tolerance(abs_tol=1e-8, rel_tol=0.0, max_eval=2000)


@dataclass(frozen=True)
class MLEResult:
    params: MixtureParams
    loglik: float
    converged: bool
    n_eval: int


def _unpack(u, k, weights, weights_known):
    # means: theta_1 followed by log gaps, so theta_1 < theta_2 < ... always
    means = u[0] + np.concatenate(([0.0], np.cumsum(np.exp(u[1:k]))))
    if weights_known:
        return means, weights
    eta = np.concatenate((u[k:], [0.0]))
    w = np.exp(eta - eta.max())
    return means, w / w.sum()


def _pack(params, weights_known):
    order = np.argsort(params.means, kind="stable")
    means = params.means[order]
    gaps = np.diff(means)
    if np.any(gaps <= 0):
        raise ValueError("initial means must be distinct")
    u = [means[:1], np.log(gaps)]
    w = params.weights[order]
    if not weights_known:
        u.append(np.log(w[:-1] / w[-1]))
    return np.concatenate(u), w


def maximize_loglik(sample, init, weights_known=True, tol=MLE_TOL):
    """Local maximizer of the log-likelihood started from ``init``.

    Means are kept ordered (reparametrized by log gaps).  With
    ``weights_known`` the weights of ``init`` are held fixed, otherwise they
    are optimized through free logits.  BFGS with the analytic gradient.
    """
    x = np.ascontiguousarray(sample, dtype=float)
    n = x.size
    if n == 0:
        raise ValueError("empty sample")
    k = init.k
    u0, w0 = _pack(init, weights_known)
    if k == 1:
        mean = float(x.mean())
        ll = float(_kernels.loglik(x, np.array([mean]), np.zeros(1)))
        return MLEResult(MixtureParams([mean], [1.0]), ll, True, 1)

    def objective(u):
        means, w = _unpack(u, k, w0, weights_known)
        with np.errstate(divide="ignore"):
            logw = np.log(w)
        rsum, rxsum, ll = _kernels.em_accumulate(x, means, logw)
        g_theta = rxsum - means * rsum
        grad = np.empty_like(u)
        grad[0] = g_theta.sum()
        # theta_l depends on gap j for every l > j
        tail = np.cumsum(g_theta[::-1])[::-1]
        grad[1:k] = np.exp(u[1:k]) * tail[1:]
        if not weights_known:
            grad[k:] = rsum[:-1] - n * w[:-1]
        return -ll / n, -grad / n

    res = optimize.minimize(objective, u0, jac=True, method="BFGS",
                            options={"gtol": 1e-9, "maxiter": tol.max_eval})
    u, converged, n_eval = _newton_polish(objective, res.x, tol)
    n_eval += int(res.nfev)
    means, w = _unpack(u, k, w0, weights_known)
    ll = -objective(u)[0] * n
    return MLEResult(MixtureParams(means, w / w.sum()), float(ll), converged, n_eval)


def _newton_polish(objective, u, tol, max_steps=20, h=1e-5):
    """Newton steps with a central-difference Hessian of the analytic gradient.

    BFGS stalls on line-search precision near the optimum; the Newton step
    length is what certifies the parameter-change tolerance.
    """
    d = u.size
    n_eval = 0
    for _ in range(max_steps):
        f0, g = objective(u)
        hess = np.empty((d, d))
        for j in range(d):
            e = np.zeros(d)
            e[j] = h
            hess[:, j] = (objective(u + e)[1] - objective(u - e)[1]) / (2 * h)
        n_eval += 1 + 2 * d
        hess = 0.5 * (hess + hess.T)
        try:
            step = -np.linalg.solve(hess, g)
        except np.linalg.LinAlgError:
            return u, False, n_eval
        if not np.all(np.linalg.eigvalsh(hess) > 0):
            return u, False, n_eval
        # backtrack if the full step does not improve
        scale = 1.0
        while scale > 1e-4 and objective(u + scale * step)[0] > f0 + 1e-15 * abs(f0):
            scale *= 0.5
            n_eval += 1
        u = u + scale * step
        if np.max(np.abs(scale * step)) < tol.abs_tol:
            return u, True, n_eval
    return u, False, n_eval
