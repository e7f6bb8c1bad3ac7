"""Radar/WPT performance metrics for a transmit covariance matrix."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class MetricReport:
    """Evaluated losses and powers for one covariance at one weight rho."""

    radar_loss: float          # W^2, beampattern matching MSE
    wpt_loss: float            # W^4, squared power mismatch
    per_user_power: np.ndarray  # W, harvested power per user
    sum_power: float           # W
    alpha: float               # beampattern scaling used for radar_loss
    objective: float           # (1-rho)*radar_loss + rho*wpt_loss
    rho: float


def beampattern(R, steering):
    """Transmit power density ``a(theta)^H R a(theta)`` over the angle grid.

    ``R`` is (N, N) Hermitian, ``steering`` is (N, L); the (tiny) imaginary
    residue of each quadratic form is discarded.
    """
    R = np.asarray(R)
    A = np.asarray(steering)
    if R.ndim != 2 or R.shape[0] != R.shape[1]:
        raise ValueError(f"covariance must be square, got {R.shape}")
    if A.ndim != 2 or A.shape[0] != R.shape[0]:
        raise ValueError(f"steering matrix shape {A.shape} does not match covariance {R.shape}")
    return np.einsum("il,il->l", A.conj(), R @ A).real


def optimal_alpha(pattern, desired):
    """Least-squares pattern scaling: the unique minimizer of sum((a*d - p)^2)."""
    p = np.asarray(pattern, dtype=float)
    d = np.asarray(desired, dtype=float)
    denom = float(d @ d)
    if denom == 0.0:
        raise ValueError("desired pattern is identically zero; scaling is undefined")
    return float(d @ p) / denom


def radar_loss(R, scenario, alpha=None):
    """Beampattern matching loss ``mean(|alpha*d - a^H R a|^2)`` and the alpha used.

    With ``alpha=None`` the scaling is jointly optimized in closed form;
    passing a number evaluates the loss at that fixed scaling.
    """
    p = beampattern(R, scenario.steering)
    d = scenario.desired
    if alpha is None:
        alpha = optimal_alpha(p, d)
    resid = alpha * d - p
    return float(np.mean(resid**2)), float(alpha)


def harvested_power(R, channel, efficiency):
    """Received power ``efficiency * g R g^H`` of one user (real for PSD R)."""
    g = np.asarray(channel).reshape(-1)
    R = np.asarray(R)
    if R.shape != (g.size, g.size):
        raise ValueError(f"channel length {g.size} does not match covariance {R.shape}")
    return float(efficiency * np.real(g @ R @ g.conj()))


def per_user_powers(R, channels, efficiency):
    """Harvested power of every user, vectorized over channel rows."""
    G = np.asarray(channels)
    if G.ndim != 2 or G.shape[1] != np.asarray(R).shape[0]:
        raise ValueError(f"channel matrix shape {G.shape} does not match covariance")
    return efficiency * np.einsum("mi,mi->m", G @ R, G.conj()).real


def wpt_loss(R, targets, channels, efficiency, normalized=False):
    """Power mismatch ``mean(|P*_m - P_m(R)|^2)`` against the target powers.

    ``normalized=True`` divides each term by ``(P*_m)^2`` (dimensionless,
    intended for plotting only); the default is the literal squared-watts
    mismatch.
    """
    targets = np.asarray(targets, dtype=float)
    powers = per_user_powers(R, channels, efficiency)
    if targets.shape != powers.shape:
        raise ValueError(f"expected {powers.shape[0]} targets, got {targets.shape}")
    resid = (targets - powers) ** 2
    if normalized:
        resid = resid / targets**2
    return float(np.mean(resid))


def objective(R, rho, scenario, targets, alpha=None, normalized=False):
    """Weighted design objective and the full metric report.

    The radar loss uses the jointly-optimal (least squares) scaling unless a
    fixed ``alpha`` is supplied.
    """
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho must lie in [0, 1], got {rho}")
    L_r, alpha_used = radar_loss(R, scenario, alpha=alpha)
    powers = per_user_powers(R, scenario.channels, scenario.config.efficiency)
    L_e = wpt_loss(R, targets, scenario.channels, scenario.config.efficiency,
                   normalized=normalized)
    return MetricReport(
        radar_loss=L_r,
        wpt_loss=L_e,
        per_user_power=powers,
        sum_power=float(np.sum(powers)),
        alpha=alpha_used,
        objective=float((1.0 - rho) * L_r + rho * L_e),
        rho=float(rho),
    )
