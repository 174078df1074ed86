"""Transparent reparameterization of the saturated model.

The forward map sends theta = (alpha, beta, gamma, delta) to the directly
learnable block phi = (epsilon, zeta, eta, xi) plus lam = delta:

    epsilon = Pr(R=1)
    zeta[x] = Pr(cell x | R=0)      eta[x] = Pr(cell x | R=1)
    xi[x]   = Pr(Y=1 | cell x, R=1)

and the inverse reconstructs theta from (phi, lam). Free coordinates strip
the simplex redundancies (the first element of each of zeta and eta is
dropped and rebuilt as one minus the rest), giving a square map of
dimension 2^(p+2) - 1 whose Jacobian log-determinant is estimated by
central finite differences.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit, logit

from .errors import OutOfImageError
from .models.saturated import SatPhiLambda, SatPhiLambdaSample, SatTheta, gamma_star
from .numdiff import batch_jacobian_logdet, jacobian_logdet

#: alpha components at or below this are treated as outside the image of h.
ALPHA_FLOOR = 1e-300


def free_dim(p: int) -> int:
    """Number of unconstrained coordinates for p covariates: 2^(p+2) - 1."""
    return (1 << (p + 2)) - 1


def forward_tp(theta: SatTheta) -> SatPhiLambda:
    """Map theta to (phi, lam); rejects degenerate missingness.

    Raises:
        ValueError: Pr(R=1) is 0 or 1 under theta, or some cell has zero
            probability of being observed (xi undefined there).
    """
    theta.validate()
    a, b, c = theta.alpha, theta.beta, theta.gamma
    gstar = gamma_star(c, theta.delta)
    eps = float(np.sum(a * gstar * b) + np.sum(a * c * (1.0 - b)))
    if not 0.0 < eps < 1.0:
        raise ValueError(f"degenerate missingness: Pr(R=1) = {eps}")
    eta_unnorm = a * (b * gstar + (1.0 - b) * c)
    if np.any(eta_unnorm == 0.0):
        raise ValueError("some cell is never observed: xi undefined")
    zeta = a * (b * (1.0 - gstar) + (1.0 - b) * (1.0 - c)) / (1.0 - eps)
    eta = eta_unnorm / eps
    xi = b * a * gstar / (eta * eps)
    return SatPhiLambda(eps, zeta, eta, xi, theta.delta.copy())


def inverse_tp(pl: SatPhiLambda) -> SatTheta:
    """Map (phi, lam) back to theta; rejects points outside the image of h.

    Raises:
        OutOfImageError: the reconstruction leaves the legal domain (some
            alpha underflows, or beta/gamma leaves (0,1)). Callers doing
            importance sampling must assign such draws weight zero rather
            than clamp.
    """
    pl.validate()
    eps, zeta, eta, xi, lam = pl.epsilon, pl.zeta, pl.eta, pl.xi, pl.lam
    alpha = eps * eta + (1.0 - eps) * zeta
    if np.any(alpha <= ALPHA_FLOOR):
        raise OutOfImageError("alpha underflow: draw outside the image of h")
    beta = (expit(logit(xi) - lam) * (1.0 - eps) * zeta + xi * eps * eta) / alpha
    if np.any((beta <= 0.0) | (beta >= 1.0)):
        raise OutOfImageError("beta outside (0,1): draw outside the image of h")
    gamma = (1.0 - xi) * eta * eps / ((1.0 - beta) * alpha)
    if np.any((gamma <= 0.0) | (gamma >= 1.0)):
        raise OutOfImageError("gamma outside (0,1): draw outside the image of h")
    return SatTheta(alpha, beta, gamma, lam.copy())


# ---------------------------------------------------------------------------
# Free coordinates
# ---------------------------------------------------------------------------
# Order (frozen): [epsilon, zeta[1:], eta[1:], xi, lam]; dropped simplex
# heads are rebuilt as 1 - sum(rest). Theta-side order: [alpha[1:], beta,
# gamma, delta].


def free_coords(pl: SatPhiLambda) -> np.ndarray:
    """Pack (phi, lam) into the unconstrained coordinate vector."""
    return np.concatenate(([pl.epsilon], pl.zeta[1:], pl.eta[1:], pl.xi, pl.lam))


def phi_lambda_from_free(x: np.ndarray, p: int) -> SatPhiLambda:
    """Unpack :func:`free_coords` output back into a SatPhiLambda."""
    x = np.asarray(x, dtype=float)
    if x.size != free_dim(p):
        raise ValueError(f"expected {free_dim(p)} coordinates for p={p}, got {x.size}")
    k = 1 << p
    eps = x[0]
    zeta_rest = x[1:k]
    eta_rest = x[k : 2 * k - 1]
    xi = x[2 * k - 1 : 3 * k - 1]
    lam = x[3 * k - 1 :]
    zeta = np.concatenate(([1.0 - zeta_rest.sum()], zeta_rest))
    eta = np.concatenate(([1.0 - eta_rest.sum()], eta_rest))
    return SatPhiLambda(eps, zeta, eta, xi, lam)


def free_coords_batch(sample: SatPhiLambdaSample) -> np.ndarray:
    """(m, d) free-coordinate matrix for a batch of draws."""
    return np.hstack(
        [sample.epsilon[:, None], sample.zeta[:, 1:], sample.eta[:, 1:], sample.xi, sample.lam]
    )


def _inverse_free_batch(x: np.ndarray) -> np.ndarray:
    """Vectorized inverse map on free coordinates; NaN instead of raising.

    Maps (n, 4K-1) phi-lambda coordinates to (n, 4K-1) theta coordinates
    (alpha[1:], beta, gamma, delta). Invalid inputs propagate NaN so the
    finite-difference Jacobian can flag boundary points.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    k = (x.shape[1] + 1) // 4
    eps = x[:, :1]
    zeta_rest = x[:, 1:k]
    eta_rest = x[:, k : 2 * k - 1]
    xi = x[:, 2 * k - 1 : 3 * k - 1]
    lam = x[:, 3 * k - 1 :]
    zeta = np.hstack([1.0 - zeta_rest.sum(axis=1, keepdims=True), zeta_rest])
    eta = np.hstack([1.0 - eta_rest.sum(axis=1, keepdims=True), eta_rest])
    with np.errstate(all="ignore"):
        alpha = eps * eta + (1.0 - eps) * zeta
        xi_safe = np.where((xi > 0.0) & (xi < 1.0), xi, np.nan)
        beta = (expit(logit(xi_safe) - lam) * (1.0 - eps) * zeta + xi * eps * eta) / alpha
        gamma = (1.0 - xi) * eta * eps / ((1.0 - beta) * alpha)
    return np.hstack([alpha[:, 1:], beta, gamma, lam])


def jacobian_logdet_inverse(coords: np.ndarray, step: float = 1e-6) -> float:
    """log |det grad h^-1| at the given free coordinates.

    Central differences with per-coordinate step max(step, step*|x_i|);
    the simplex heads are rebuilt inside the differentiated map, so the
    Jacobian is square of size 2^(p+2) - 1.

    Raises:
        SingularJacobianError: non-finite entries (boundary proximity) or
            |det| below 1e-250.
    """
    coords = np.asarray(coords, dtype=float)
    return jacobian_logdet(lambda v: _inverse_free_batch(v[None, :])[0], coords, step)


def batch_jacobian_logdet_inverse(
    coords: np.ndarray, step: float = 1e-6, chunk: int = 2048
) -> tuple[np.ndarray, np.ndarray]:
    """Batched :func:`jacobian_logdet_inverse`; flags instead of raising."""
    return batch_jacobian_logdet(_inverse_free_batch, coords, step=step, chunk=chunk)
