"""Central-difference Jacobians and their log-determinants.

These supply the change-of-variables factor |det grad h^-1| that corrects
importance weights drawn in a reparameterized space. The determinant is
taken through an LU factorization with partial pivoting (numpy slogdet).
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import SingularJacobianError

#: log |det| below this is treated as numerically singular (|det| < 1e-250).
LOGDET_FLOOR = float(np.log(1e-250))


def fd_steps(x: np.ndarray, step: float) -> np.ndarray:
    """Per-coordinate central-difference steps h_i = max(step, step * |x_i|)."""
    return np.maximum(step, step * np.abs(x))


def jacobian(f: Callable[[np.ndarray], np.ndarray], x: np.ndarray, step: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian J[i, j] = d f_i / d x_j at ``x``."""
    x = np.asarray(x, dtype=float)
    h = fd_steps(x, step)
    cols = []
    for j in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp[j] += h[j]
        xm[j] -= h[j]
        cols.append((np.asarray(f(xp), dtype=float) - np.asarray(f(xm), dtype=float)) / (2.0 * h[j]))
    return np.column_stack(cols)


def jacobian_logdet(f: Callable[[np.ndarray], np.ndarray], x: np.ndarray, step: float = 1e-6) -> float:
    """log |det J| of a square map at ``x``.

    Raises:
        SingularJacobianError: non-finite Jacobian entries (the evaluation
            point is too close to a domain boundary for the step) or a
            determinant below the 1e-250 floor.
    """
    jac = jacobian(f, x, step)
    if jac.shape[0] != jac.shape[1]:
        raise ValueError(f"map is not square: Jacobian shape {jac.shape}")
    if not np.all(np.isfinite(jac)):
        raise SingularJacobianError("non-finite Jacobian entries (boundary proximity)")
    _, logdet = np.linalg.slogdet(jac)
    if not np.isfinite(logdet) or logdet < LOGDET_FLOOR:
        raise SingularJacobianError(f"near-singular Jacobian: log|det| = {logdet}")
    return float(logdet)


def batch_jacobian_logdet(
    f_batch: Callable[[np.ndarray], np.ndarray],
    x: np.ndarray,
    step: float = 1e-6,
    chunk: int = 2048,
) -> tuple[np.ndarray, np.ndarray]:
    """log |det J| for many points at once.

    ``f_batch`` maps an (n, d) array of points to an (n, d) array of images
    and must return NaN rather than raise for invalid inputs. Points whose
    Jacobian has non-finite entries or an underflowing determinant are
    flagged rather than raised, since callers assign them weight zero.

    Returns:
        (logdet, ok): (n,) float array (NaN where flagged) and (n,) bool mask.
    """
    x = np.asarray(x, dtype=float)
    n, d = x.shape
    logdet = np.full(n, np.nan)
    ok = np.zeros(n, dtype=bool)
    for start in range(0, n, chunk):
        xb = x[start : start + chunk]
        nb = xb.shape[0]
        h = fd_steps(xb, step)
        jac = np.empty((nb, d, d))
        with np.errstate(all="ignore"):
            for j in range(d):
                xp = xb.copy()
                xm = xb.copy()
                xp[:, j] += h[:, j]
                xm[:, j] -= h[:, j]
                jac[:, :, j] = (f_batch(xp) - f_batch(xm)) / (2.0 * h[:, j : j + 1])
        finite = np.all(np.isfinite(jac), axis=(1, 2))
        ld = np.full(nb, np.nan)
        if np.any(finite):
            _, ld_f = np.linalg.slogdet(jac[finite])
            ld[finite] = ld_f
        good = finite & np.isfinite(ld) & (ld >= LOGDET_FLOOR)
        logdet[start : start + chunk] = np.where(good, ld, np.nan)
        ok[start : start + chunk] = good
    return logdet, ok
