"""Beamforming design procedures and beamformer recovery.

Four designs are provided: the globally optimal rank-relaxed design with
exact rank-1 beamformer reconstruction, the low-complexity design restricted
to MRT-plus-orthogonal-complement structure (with triangular/QR recovery of
the beamformer matrix), a randomized rank-1 baseline, and the radar-only /
WPT-only boundary designs. All of them return covariances with the exact
per-antenna diagonal and an explicit beamformer set realizing the covariance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from . import linalg, metrics, solver
from .scenario import RANDOMIZATION_STREAM, standard_complex_gaussian, uniform_generator


class SolverFailure(Exception):
    """The convex solve did not reach a usable solution."""


class RecoveryError(Exception):
    """Structured beamformer recovery violated its identities beyond tolerance."""

    def __init__(self, message, covariance_residual, channel_residual):
        super().__init__(message)
        self.covariance_residual = covariance_residual
        self.channel_residual = channel_residual


@dataclass
class DesignResult:
    method: str                      # optimal | suboptimal | randomized | radar-only | wpt-only
    R: np.ndarray                    # (N, N) Hermitian PSD, diag = Pt/N
    W: np.ndarray                    # (N, N) beamformer columns, sum_n w_n w_n^H = R
    metrics: metrics.MetricReport
    solver_report: solver.SolverReport
    targets: np.ndarray              # desired per-user powers P*
    lam: Optional[np.ndarray] = None  # per-user beam gains (structured design only)


def beamformer_covariance(W):
    """Covariance realized by a beamformer set: sum of column outer products."""
    W = np.asarray(W)
    return W @ W.conj().T


def _require_solved(report):
    if report.status == "optimal" or (report.status == "max_iters" and report.polished):
        return
    raise SolverFailure(f"solver finished with status {report.status!r} "
                        f"(primal {report.primal_residual:.2e}, dual {report.dual_residual:.2e})")


def _finalize_covariance(X, total_power):
    """Exact feasibility cleanup: PSD clip plus per-antenna diagonal repair.

    A congruence with a positive diagonal keeps the matrix PSD while moving
    every diagonal entry exactly onto Pt/N; the scaling is within rounding of
    the identity for a converged solve.
    """
    N = X.shape[0]
    c = total_power / N
    R = 0.5 * (X + X.conj().T)
    w, U = np.linalg.eigh(R)
    if w[0] < 0:
        R = (U * np.maximum(w, 0.0)) @ U.conj().T
        R = 0.5 * (R + R.conj().T)
    diag = np.diagonal(R).real.copy()
    if np.any(diag <= 0.5 * c):
        raise SolverFailure(f"covariance diagonal collapsed: min entry {diag.min():.3e} vs {c:.3e}")
    s = np.sqrt(c / diag)
    R = R * np.outer(s, s)
    idx = np.arange(N)
    R[idx, idx] = c
    return R


def _power_matrix(scenario):
    """Hermitian Q with <Q, R> equal to the summed received power."""
    cfg = scenario.config
    Q = np.zeros((cfg.antennas, cfg.antennas), dtype=complex)
    for g in scenario.channels:
        Q += np.outer(g.conj(), g)
    return cfg.efficiency * Q


class TargetsSolution(NamedTuple):
    targets: np.ndarray      # desired per-user powers P*, exactly achievable
    covariance: np.ndarray   # the sum-power-maximizing covariance
    report: solver.SolverReport


def wpt_power_targets(scenario, settings=None):
    """Per-user power targets from the sum-power-maximizing covariance.

    Solves max sum_m P_m(R) subject to the per-antenna power constraint and
    returns the achieved powers (exactly feasible by construction, so every
    design evaluated later compares against attainable targets) together with
    the maximizing covariance.
    """
    cfg = scenario.config
    N = cfg.antennas
    per_antenna = cfg.total_power / N
    equalities = []
    for n in range(N):
        A_eq = np.zeros((N, N), dtype=complex)
        A_eq[n, n] = 1.0
        equalities.append(solver.AffineFunctional(matrix_coefficient=A_eq, offset=-per_antenna))
    problem = solver.LsSdpProblem(
        dim=N,
        equalities=equalities,
        linear_cost=solver.AffineFunctional(matrix_coefficient=-_power_matrix(scenario)),
    )
    sol = solver.solve(problem, settings)
    _require_solved(sol.report)
    R_wpt = _finalize_covariance(sol.X, cfg.total_power)
    targets = metrics.per_user_powers(R_wpt, scenario.channels, cfg.efficiency)
    return TargetsSolution(targets=targets, covariance=R_wpt, report=sol.report)


def solve_relaxed(scenario, rho, targets, settings=None):
    """Optimal covariance of the rank-relaxed design problem.

    At rho = 1 the objective reduces to the power mismatch alone, whose
    minimum of zero is attained by the sum-power-maximizing covariance the
    targets were derived from; that covariance is returned directly (it is an
    exact optimum, and iterative refinement cannot match its accuracy on this
    degenerate geometry). The shortcut only applies when the supplied targets
    really are that covariance's powers.
    """
    if rho == 1.0:
        wpt_targets, R_wpt, _ = wpt_power_targets(scenario, settings)
        if np.allclose(wpt_targets, targets, rtol=1e-9, atol=1e-300):
            report = solver.SolverReport(
                status="optimal", iterations=0, primal_residual=0.0,
                dual_residual=0.0,
                objective_value=metrics.wpt_loss(R_wpt, targets, scenario.channels,
                                                 scenario.config.efficiency),
                polished=True,
            )
            return R_wpt, 0.0, report
    problem = solver.build_relaxed_problem(scenario, rho, targets)
    sol = solver.solve(problem, settings)
    _require_solved(sol.report)
    R_hat = _finalize_covariance(sol.X, scenario.config.total_power)
    return R_hat, sol.alpha, sol.report


def rank1_reconstruct(R_hat):
    """Exact rank-1 beamformer set realizing a relaxed-optimal covariance.

    The columns of the Hermitian square root of R sum their outer products
    back to R, so the set attains the relaxed optimum with rank-1 per-beam
    covariances (no randomization loss).
    """
    return linalg.hermitian_sqrt(R_hat)


def optimal_design(scenario, rho, targets=None, settings=None, method_tag="optimal"):
    """Relaxed solve plus exact rank-1 reconstruction."""
    if targets is None:
        targets, _, _ = wpt_power_targets(scenario, settings)
    R_hat, _, report = solve_relaxed(scenario, rho, targets, settings)
    W = rank1_reconstruct(R_hat)
    report_metrics = metrics.objective(R_hat, rho, scenario, targets)
    return DesignResult(method=method_tag, R=R_hat, W=W, metrics=report_metrics,
                        solver_report=report, targets=np.asarray(targets, dtype=float))


def recover_structured_beamformers(R, channels, lam):
    """Beamformer matrix with MRT structure realizing ``R``.

    Factor R = D D^H, take the full QR of (G D)^H so that G D = [L, 0] U,
    build H = [G G^H diag(lam), 0] with its own QR H = [L_H, 0] U_H, and set
    W = D U^H U_H. Under the nonnegative-real-diagonal QR convention both L
    factors are the triangular factor of the same Gram matrix G R G^H, so
    G W = H while W W^H = R holds by unitarity alone.
    """
    G = np.asarray(channels)
    M, N = G.shape
    D = linalg.psd_factor(R)
    Q, _ = linalg.qr_full((G @ D).conj().T)
    K = G @ G.conj().T
    H = np.hstack([K * np.asarray(lam)[np.newaxis, :], np.zeros((M, N - M))])
    Q_H, _ = linalg.qr_full(H.conj().T)
    W = D @ Q @ Q_H.conj().T
    cov_res = np.linalg.norm(W @ W.conj().T - R)
    chan_res = np.linalg.norm(G @ W - H)
    return W, H, cov_res, chan_res


def suboptimal_design(scenario, rho, targets=None, settings=None):
    """Low-complexity design over MRT-structured beamformer sets."""
    cfg = scenario.config
    if targets is None:
        targets, _, _ = wpt_power_targets(scenario, settings)
    problem = solver.build_suboptimal_problem(scenario, rho, targets)
    sol = solver.solve(problem, settings)
    _require_solved(sol.report)
    R = _finalize_covariance(sol.X, cfg.total_power)
    gamma = np.maximum(sol.gamma, 0.0)
    lam = np.sqrt(gamma)

    cov_tol = 1e-7 * max(np.linalg.norm(R), 1e-30)
    W, H, cov_res, chan_res = recover_structured_beamformers(R, scenario.channels, lam)
    if cov_res > cov_tol or chan_res > 1e-6 * max(1.0, np.linalg.norm(H)):
        # degenerate gamma can break the shared-triangular-factor identity on
        # the null space; retry once with a tiny inflation
        gamma = gamma + 1e-10 * gamma.max(initial=0.0)
        lam = np.sqrt(gamma)
        W, H, cov_res, chan_res = recover_structured_beamformers(R, scenario.channels, lam)
        if cov_res > cov_tol or chan_res > 1e-6 * max(1.0, np.linalg.norm(H)):
            raise RecoveryError(
                f"beamformer recovery failed: covariance residual {cov_res:.3e}, "
                f"channel residual {chan_res:.3e}",
                covariance_residual=cov_res, channel_residual=chan_res,
            )

    report_metrics = metrics.objective(R, rho, scenario, targets)
    return DesignResult(method="suboptimal", R=R, W=W, metrics=report_metrics,
                        solver_report=sol.report, targets=np.asarray(targets, dtype=float),
                        lam=lam)


def repair_scaling(diagonal, per_antenna):
    """Diagonal scaling that restores exact per-antenna powers after sampling."""
    diagonal = np.asarray(diagonal, dtype=float)
    if np.any(diagonal <= 0):
        raise ValueError("cannot repair a candidate with a nonpositive diagonal entry")
    return np.sqrt(per_antenna / diagonal)


def randomization_baseline(scenario, rho, samples, seed=None, targets=None, settings=None):
    """Rank-1 approximation baseline: sample beamformer sets around the relaxed optimum.

    Each candidate draws i.i.d. CN(0, 1) columns through the square root of
    the relaxed covariance (so the pre-repair candidate covariance matches it
    in expectation), repairs the per-antenna powers by diagonal scaling and
    keeps the best weighted objective.
    """
    if samples < 1:
        raise ValueError(f"need at least one sample, got {samples}")
    cfg = scenario.config
    if seed is None:
        seed = cfg.seed
    if targets is None:
        targets, _, _ = wpt_power_targets(scenario, settings)
    R_hat, _, report = solve_relaxed(scenario, rho, targets, settings)

    N = cfg.antennas
    per_antenna = cfg.total_power / N
    B = linalg.hermitian_sqrt(R_hat)
    rng = uniform_generator(seed, RANDOMIZATION_STREAM)
    best = None
    for _ in range(samples):
        xi = standard_complex_gaussian(rng, (N, N))
        W_cand = B @ xi / math.sqrt(N)
        diag = np.einsum("ij,ij->i", W_cand, W_cand.conj()).real
        if np.any(diag <= 0):
            continue
        W_cand = repair_scaling(diag, per_antenna)[:, np.newaxis] * W_cand
        R_cand = W_cand @ W_cand.conj().T
        idx = np.arange(N)
        R_cand[idx, idx] = per_antenna
        cand_metrics = metrics.objective(R_cand, rho, scenario, targets)
        if best is None or cand_metrics.objective < best[0].objective:
            best = (cand_metrics, R_cand, W_cand)
    if best is None:
        raise SolverFailure("all randomization candidates were discarded")
    cand_metrics, R_best, W_best = best
    return DesignResult(method="randomized", R=R_best, W=W_best, metrics=cand_metrics,
                        solver_report=report, targets=np.asarray(targets, dtype=float))


def radar_only(scenario, targets=None, settings=None):
    """Boundary design: beampattern matching alone (weight 0)."""
    return optimal_design(scenario, 0.0, targets=targets, settings=settings,
                          method_tag="radar-only")


def wpt_only(scenario, targets=None, settings=None):
    """Boundary design: power delivery alone (weight 1)."""
    return optimal_design(scenario, 1.0, targets=targets, settings=settings,
                          method_tag="wpt-only")
