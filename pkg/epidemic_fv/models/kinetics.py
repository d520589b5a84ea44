"""
Reaction kinetics: the incidence term, the treatment term and the per-equation
reaction rates of the base SIR and SARS schemes.

All functions accept scalars or numpy arrays of matching shape.
"""
import numpy as np

from ..schemas.params import ModelParams


def incidence(u, v, w, alpha: float):
    """
    sigma(u, v, w) = alpha * u+ v+ / (u+ + v+ + w+), and 0 when all positive parts vanish.
    """
    up = np.maximum(u, 0.0)
    vp = np.maximum(v, 0.0)
    wp = np.maximum(w, 0.0)
    total = up + vp + wp
    numerator = alpha * up * vp
    if np.ndim(total) == 0:
        return float(numerator / total) if total > 0.0 else 0.0
    return np.divide(numerator, total, out=np.zeros_like(total, dtype=float), where=total > 0.0)


def treatment(v, r: float):
    """H(v) = r if v > 0, 0 otherwise"""
    if np.ndim(v) == 0:
        return float(r) if v > 0.0 else 0.0
    return np.where(np.asarray(v) > 0.0, float(r), 0.0)


def reaction_rates(params: ModelParams, u1, u2, u3, u1_lag, u2_lag):
    """
    Right-hand sides of the three scheme equations.

    u1_lag is the time-n susceptible value entering sigma in the infected equation,
    u2_lag the time-n infected value entering gamma*u2 in the recovered equation.
    """
    alpha, mu, gamma = params.alpha_incidence, params.mu, params.gamma
    sigma_1 = incidence(u1, u2, u3, alpha)
    sigma_2 = incidence(u1_lag, u2, u3, alpha)
    f1 = -sigma_1 - mu * u1
    f2 = sigma_2 - (gamma + mu) * u2
    f3 = gamma * u2_lag
    if params.is_sars:
        h = treatment(u2, params.r)
        f1 = params.A + f1
        f2 = f2 - h
        f3 = f3 + h - mu * u3
    return f1, f2, f3
