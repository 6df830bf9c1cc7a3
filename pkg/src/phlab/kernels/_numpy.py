"""Pure-numpy implementations of the perturbation kernels.

These are the hot inner loops of every experiment: each map evaluation,
Jacobian, graph solve and orbit step funnels through ``pert_eval`` /
``pert_jac``.  The compiled extension in ``_ckern.pyx`` implements the
same contracts; this module is the fallback selected at import when the
extension is unavailable.
"""

from __future__ import annotations

import numpy as np

BACKEND = "numpy"

# Cutoff profile: identically 1 for t <= 1/2, identically 0 for t >= 1,
# C-infinity transition built from exp(-1/u) in between.


def _sigma(u: np.ndarray) -> np.ndarray:
    out = np.zeros_like(u)
    pos = u > 1e-12
    out[pos] = np.exp(-1.0 / u[pos])
    return out


def _sigma_prime(u: np.ndarray) -> np.ndarray:
    out = np.zeros_like(u)
    pos = u > 1e-12
    out[pos] = np.exp(-1.0 / u[pos]) / (u[pos] * u[pos])
    return out


def bump_value(t) -> np.ndarray:
    """Cutoff value at radius ``t`` (vectorized)."""
    t = np.asarray(t, dtype=float)
    u = 2.0 * (1.0 - t)
    s_u = _sigma(np.clip(u, 0.0, 1.0))
    s_1u = _sigma(np.clip(1.0 - u, 0.0, 1.0))
    mid = s_u / (s_u + s_1u + 1e-300)
    return np.where(t <= 0.5, 1.0, np.where(t >= 1.0, 0.0, mid))


def bump_deriv(t) -> np.ndarray:
    """Derivative of the cutoff with respect to ``t``."""
    t = np.asarray(t, dtype=float)
    u = np.clip(2.0 * (1.0 - t), 0.0, 1.0)
    s_u = _sigma(u)
    s_1u = _sigma(1.0 - u)
    sp_u = _sigma_prime(u)
    sp_1u = _sigma_prime(1.0 - u)
    denom = (s_u + s_1u) ** 2 + 1e-300
    s_prime = (sp_u * s_1u + s_u * sp_1u) / denom
    inside = (t > 0.5) & (t < 1.0)
    return np.where(inside, -2.0 * s_prime, 0.0)


def _monomials(y: np.ndarray, exps: np.ndarray) -> np.ndarray:
    # y: (N, k); exps: (T, k) -> (N, T)
    return np.prod(y[:, None, :] ** exps[None, :, :], axis=2)


def pert_eval(y: np.ndarray, coeffs: np.ndarray, exps: np.ndarray,
              comps: np.ndarray) -> np.ndarray:
    """Perturbation values at a batch of points.

    ``y`` is (N, k); each term adds ``coeff * phi(|y|) * y**exps`` to the
    output component ``comps[t]``.  Exactly zero outside the unit ball.
    """
    y = np.asarray(y, dtype=float)
    n, k = y.shape
    out = np.zeros((n, k))
    if coeffs.size == 0:
        return out
    r = np.linalg.norm(y, axis=1)
    phi = bump_value(r)
    live = phi > 0.0
    if not np.any(live):
        return out
    mono = _monomials(y[live], exps)
    vals = phi[live, None] * mono * coeffs[None, :]
    for t in range(coeffs.size):
        out[live, comps[t]] += vals[:, t]
    return out


def pert_jac(y: np.ndarray, coeffs: np.ndarray, exps: np.ndarray,
             comps: np.ndarray) -> np.ndarray:
    """Perturbation Jacobians at a batch of points; (N, k, k)."""
    y = np.asarray(y, dtype=float)
    n, k = y.shape
    out = np.zeros((n, k, k))
    if coeffs.size == 0:
        return out
    r = np.linalg.norm(y, axis=1)
    phi = bump_value(r)
    live = phi > 0.0
    if not np.any(live):
        return out
    yl = y[live]
    rl = r[live]
    phil = phi[live]
    dphil = bump_deriv(rl)
    mono = _monomials(yl, exps)                      # (M, T)
    # Direction of the radial derivative; r > 0.5 wherever dphi != 0.
    safe_r = np.maximum(rl, 1e-300)
    rdir = yl / safe_r[:, None]                      # (M, k)
    for t in range(coeffs.size):
        c = coeffs[t]
        comp = comps[t]
        e = exps[t]
        # d/dy_j of the monomial
        grad = np.zeros_like(yl)
        for j in range(k):
            if e[j] == 0:
                continue
            rest = yl ** e[None, :]
            rest[:, j] = yl[:, j] ** (e[j] - 1)
            grad[:, j] = e[j] * np.prod(rest, axis=1)
        term = (dphil * mono[:, t])[:, None] * rdir + phil[:, None] * grad
        out[live, comp, :] += c * term
    return out
