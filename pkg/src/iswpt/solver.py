"""Operator-splitting solver for least-squares semidefinite programs.

Problem class: minimize a weighted sum of squared affine functionals of a
complex Hermitian PSD matrix ``X``, a nonnegative auxiliary vector ``gamma``
and an optional free scalar ``alpha`` (plus an optional linear cost), subject
to affine equality constraints.

The Hermitian variable is kept complex; it is carried internally as a real
vector through the isometry ``svec`` (diagonal entries, then sqrt(2)-scaled
real/imaginary parts of the upper triangle), under which the real pairing
``<A, B> = Re tr(A^H B)`` becomes the Euclidean dot product.

The algorithm alternates (a) an equality-constrained least-squares update
solved through a cached factorization of a fixed KKT system, (b) projection
of the matrix block onto the PSD cone and clipping of gamma to the
nonnegative orthant, (c) a scaled dual update, with over-relaxation and
residual-balancing penalty adaptation. A converged iterate is refined by a
final polish step: an exact KKT solve restricted to the active face of the
cone, accepted only when it verifies as feasible and no worse than the
iterate it started from.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple, Optional

import numpy as np
import scipy.linalg

_SQRT2 = math.sqrt(2.0)


class SolverError(Exception):
    """Solver could not produce a usable iterate."""


# ---------------------------------------------------------------------------
# real <-> Hermitian vectorization


@lru_cache(maxsize=None)
def _triu_indices(n):
    iu, ju = np.triu_indices(n, k=1)
    return iu, ju


def svec(A):
    """Isometric real vectorization of a Hermitian matrix (length n^2)."""
    A = np.asarray(A)
    n = A.shape[0]
    iu, ju = _triu_indices(n)
    v = np.empty(n * n)
    v[:n] = np.diagonal(A).real
    off = A[iu, ju]
    v[n::2] = _SQRT2 * off.real
    v[n + 1 :: 2] = _SQRT2 * off.imag
    return v


def smat(v, n):
    """Inverse of :func:`svec`."""
    v = np.asarray(v, dtype=float)
    A = np.zeros((n, n), dtype=complex)
    idx = np.arange(n)
    A[idx, idx] = v[:n]
    iu, ju = _triu_indices(n)
    off = (v[n::2] + 1j * v[n + 1 :: 2]) / _SQRT2
    A[iu, ju] = off
    A[ju, iu] = off.conj()
    return A


def _svec_stack(A):
    """Apply :func:`svec` across a stack of Hermitian matrices, shape (m, n, n)."""
    m, n, _ = A.shape
    iu, ju = _triu_indices(n)
    out = np.empty((m, n * n))
    out[:, :n] = np.einsum("mii->mi", A).real
    off = A[:, iu, ju]
    out[:, n::2] = _SQRT2 * off.real
    out[:, n + 1 :: 2] = _SQRT2 * off.imag
    return out


def _congruence_matrix(V):
    """Real matrix of the map svec_r(Y) -> svec_N(V Y V^H) for V of shape (N, r).

    For unitary V this is orthogonal; for V with orthonormal columns the
    columns of the result are orthonormal (an isometric face embedding).
    """
    N, r = V.shape
    # images of the Hermitian basis elements: T[i, j] = V E_ij V^H
    T = np.einsum("ai,bj->ijab", V, V.conj())
    iu, ju = _triu_indices(r)
    stack = np.empty((r * r, N, N), dtype=complex)
    stack[:r] = T[np.arange(r), np.arange(r)]
    stack[r::2] = (T[iu, ju] + T[ju, iu]) / _SQRT2
    stack[r + 1 :: 2] = (1j * T[iu, ju] - 1j * T[ju, iu]) / _SQRT2
    return _svec_stack(stack).T  # (N^2, r^2), column k = svec(image of basis k)


# ---------------------------------------------------------------------------
# problem description


@dataclass
class AffineFunctional:
    """Affine functional of (X, gamma, alpha).

    value = <matrix_coefficient, X> + gamma_coefficients . gamma
            + alpha_coefficient * alpha + offset,
    with the real pairing <A, X> = Re tr(A^H X); ``matrix_coefficient`` must
    be Hermitian so the pairing is real by construction.
    """

    matrix_coefficient: Optional[np.ndarray] = None
    gamma_coefficients: Optional[np.ndarray] = None
    alpha_coefficient: float = 0.0
    offset: float = 0.0

    def value(self, X, gamma=None, alpha=0.0):
        out = self.offset
        if self.matrix_coefficient is not None:
            out += float(np.trace(np.asarray(self.matrix_coefficient).conj().T @ X).real)
        if self.gamma_coefficients is not None and gamma is not None:
            out += float(np.dot(self.gamma_coefficients, gamma))
        out += self.alpha_coefficient * alpha
        return out


@dataclass
class LsSdpProblem:
    """Weighted least-squares objective over the PSD cone with equalities.

    ``residuals`` holds (weight, functional) pairs contributing
    weight * functional(z)^2; ``equalities`` are functionals required to
    vanish; ``linear_cost`` (optional) is added to the objective as-is, which
    is how pure linear (e.g. negated maximization) objectives enter.
    """

    dim: int
    gamma_len: int = 0
    has_alpha: bool = False
    residuals: list = field(default_factory=list)
    equalities: list = field(default_factory=list)
    linear_cost: Optional[AffineFunctional] = None

    def __post_init__(self):
        if not self.residuals and self.linear_cost is None:
            raise ValueError("problem needs at least one residual or a linear cost")
        for w, _ in self.residuals:
            if w < 0:
                raise ValueError(f"residual weights must be nonnegative, got {w}")


@dataclass
class SolverSettings:
    eps_abs: float = 1e-8
    eps_rel: float = 1e-6
    max_iters: int = 50000
    penalty: float = 1.0              # ADMM penalty, self-adaptive by default
    over_relaxation: float = 1.6
    adaptive_penalty: bool = True
    polish: bool = True

    def __post_init__(self):
        if self.eps_abs <= 0 or self.eps_rel <= 0 or self.penalty <= 0 or self.over_relaxation <= 0:
            raise ValueError("solver settings must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")


@dataclass
class SolverReport:
    status: str                 # optimal | max_iters | infeasible_suspected
    iterations: int
    primal_residual: float
    dual_residual: float
    objective_value: float
    polished: bool = False


class SolveSolution(NamedTuple):
    X: np.ndarray
    gamma: np.ndarray
    alpha: float
    report: SolverReport


# ---------------------------------------------------------------------------
# compilation to real matrices


class _Compiled:
    """Real-valued problem data, column-equilibrated per variable block.

    Internally the solver works on ``z' = z / tvec`` where ``tvec`` is one
    common positive scale for the whole svec block (the PSD cone is invariant
    under a uniform scalar), one scale per gamma coordinate (the orthant is
    invariant per coordinate) and one for alpha. ``split`` undoes the scaling.
    """

    def __init__(self, problem):
        n = problem.dim
        self.n = n
        self.n_x = n * n
        self.n_gamma = problem.gamma_len
        self.has_alpha = bool(problem.has_alpha)
        self.dim = self.n_x + self.n_gamma + (1 if self.has_alpha else 0)
        self.sl_x = slice(0, self.n_x)
        self.sl_gamma = slice(self.n_x, self.n_x + self.n_gamma)
        self.idx_alpha = self.n_x + self.n_gamma if self.has_alpha else None

        rows = [self._row(f) for _, f in problem.residuals]
        self.F = np.array(rows) if rows else np.zeros((0, self.dim))
        self.weights = np.array([w for w, _ in problem.residuals])
        self.res_offsets = np.array([f.offset for _, f in problem.residuals])

        eq_rows = [self._row(f) for f in problem.equalities]
        self.E = np.array(eq_rows) if eq_rows else np.zeros((0, self.dim))
        self.h = -np.array([f.offset for f in problem.equalities]) if eq_rows else np.zeros(0)
        self.n_eq = self.E.shape[0]

        if problem.linear_cost is not None:
            self.q_lin = self._row(problem.linear_cost)
            self.c_lin = problem.linear_cost.offset
        else:
            self.q_lin = np.zeros(self.dim)
            self.c_lin = 0.0

        self.tvec = self._equilibrate()
        self.F = self.F * self.tvec[np.newaxis, :]
        self.E = self.E * self.tvec[np.newaxis, :]
        self.q_lin = self.q_lin * self.tvec
        # normalize equality rows for conditioning (scales both sides of = 0)
        if self.E.size:
            norms = np.linalg.norm(self.E, axis=1)
            keep = norms > 1e-30
            self.E[keep] = self.E[keep] / norms[keep, None]
            self.h[keep] = self.h[keep] / norms[keep]

        if self.F.size:
            WF = self.weights[:, None] * self.F
            self.P = 2.0 * self.F.T @ WF
            self.q = 2.0 * self.F.T @ (self.weights * self.res_offsets) + self.q_lin
            self.obj_const = float(self.weights @ self.res_offsets**2) + self.c_lin
            self.weighted_offset_energy = float(self.weights @ self.res_offsets**2)
        else:
            self.P = np.zeros((self.dim, self.dim))
            self.q = self.q_lin.copy()
            self.obj_const = self.c_lin
            self.weighted_offset_energy = 0.0
        self.pure_least_squares = problem.linear_cost is None

    def _equilibrate(self):
        tvec = np.ones(self.dim)
        if self.n_gamma == 0 and not self.has_alpha:
            return tvec
        stacked = []
        if self.F.size:
            stacked.append(np.sqrt(self.weights)[:, None] * self.F)
        if self.E.size:
            norms = np.linalg.norm(self.E, axis=1)
            stacked.append(self.E / np.maximum(norms, 1e-30)[:, None])
        if not stacked:
            return tvec
        S = np.vstack(stacked)
        col = np.linalg.norm(S, axis=0)
        # reference scale: the svec block stays untouched
        ref = np.median(col[self.sl_x][col[self.sl_x] > 0]) if np.any(col[self.sl_x] > 0) else 1.0
        for j in range(self.n_x, self.dim):
            if col[j] > 0:
                tvec[j] = float(np.clip(ref / col[j], 1e-4, 1e6))
        return tvec

    def _row(self, f):
        row = np.zeros(self.dim)
        A = f.matrix_coefficient
        if A is not None:
            A = np.asarray(A)
            if A.shape != (self.n, self.n):
                raise ValueError(f"matrix coefficient has shape {A.shape}, expected square dim {self.n}")
            dev = np.max(np.abs(A - A.conj().T))
            if dev > 1e-9 * max(1.0, np.max(np.abs(A))):
                raise ValueError(f"matrix coefficient is not Hermitian (max deviation {dev:.3e})")
            row[self.sl_x] = svec(A)
        g = f.gamma_coefficients
        if g is not None:
            g = np.asarray(g, dtype=float)
            if g.shape != (self.n_gamma,):
                raise ValueError(f"gamma coefficients have shape {g.shape}, expected ({self.n_gamma},)")
            row[self.sl_gamma] = g
        if f.alpha_coefficient:
            if not self.has_alpha:
                raise ValueError("functional uses alpha but the problem has no alpha variable")
            row[self.idx_alpha] = f.alpha_coefficient
        return row

    def objective(self, z):
        return float(0.5 * z @ self.P @ z + self.q @ z + self.obj_const)

    def project_cone(self, z):
        out = z.copy()
        X = smat(z[self.sl_x], self.n)
        w, U = np.linalg.eigh(X)
        if w[0] < 0:
            X = (U * np.maximum(w, 0.0)) @ U.conj().T
            out[self.sl_x] = svec(X)
        if self.n_gamma:
            np.maximum(out[self.sl_gamma], 0.0, out=out[self.sl_gamma])
        return out

    def split(self, z):
        zu = z * self.tvec
        X = smat(zu[self.sl_x], self.n)
        gamma = zu[self.sl_gamma].copy()
        alpha = float(zu[self.idx_alpha]) if self.has_alpha else 0.0
        return X, gamma, alpha


def _kkt_factor(comp, sigma):
    d, p = comp.dim, comp.n_eq
    K = np.zeros((d + p, d + p))
    K[:d, :d] = comp.P
    K[:d, :d][np.diag_indices(d)] += sigma
    if p:
        K[:d, d:] = comp.E.T
        K[d:, :d] = comp.E
    return scipy.linalg.lu_factor(K, check_finite=False)


# ---------------------------------------------------------------------------
# polish


def _face_map(comp, V_r, free_gamma):
    """Orthonormal embedding of (face of PSD cone) x (free gammas) x alpha."""
    r = V_r.shape[1]
    cols = r * r + len(free_gamma) + (1 if comp.has_alpha else 0)
    Z = np.zeros((comp.dim, cols))
    if r:
        Z[comp.sl_x, :r * r] = _congruence_matrix(V_r)
    for j, gi in enumerate(free_gamma):
        Z[comp.n_x + gi, r * r + j] = 1.0
    if comp.has_alpha:
        Z[comp.idx_alpha, cols - 1] = 1.0
    return Z


def _polish_face(comp, z_ref, V_r, free_gamma):
    """Anchored KKT solve restricted to one face; None when it fails to verify.

    Solves the stationarity-plus-feasibility system of the problem restricted
    to ``X = V_r Y V_r^H`` (Y Hermitian, unconstrained) with the listed gamma
    coordinates free and the rest pinned to zero, as a minimal-norm step away
    from ``z_ref``. The candidate is accepted only if it is exactly feasible,
    inside the cone up to clipping distance, and finite.
    """
    Z = _face_map(comp, V_r, free_gamma)
    p_face = Z.shape[1]
    t0 = Z.T @ z_ref
    P_f = Z.T @ comp.P @ Z
    q_f = Z.T @ comp.q
    E_f = comp.E @ Z if comp.n_eq else np.zeros((0, p_face))

    K = np.zeros((p_face + comp.n_eq, p_face + comp.n_eq))
    K[:p_face, :p_face] = P_f
    if comp.n_eq:
        K[:p_face, p_face:] = E_f.T
        K[p_face:, :p_face] = E_f
    rhs = np.concatenate([-(q_f + P_f @ t0), comp.h - E_f @ t0 if comp.n_eq else np.zeros(0)])

    # symmetric diagonal equilibration before the least-squares solve
    norms = np.sqrt(np.maximum(np.linalg.norm(K, axis=1), 1e-30))
    D = 1.0 / norms
    Ks = K * D[:, None] * D[None, :]
    try:
        sol, *_ = np.linalg.lstsq(Ks, D * rhs, rcond=None)
    except np.linalg.LinAlgError:
        return None
    delta = D[:p_face] * sol[:p_face]
    if not np.all(np.isfinite(delta)):
        return None
    z_pol = Z @ (t0 + delta)

    # clean the cone blocks, rejecting anything beyond clipping distance
    X = smat(z_pol[comp.sl_x], comp.n)
    wp, Up = np.linalg.eigh(X)
    lam_top = max(wp[-1] if wp.size else 0.0, 0.0)
    if wp.size and wp[0] < -1e-9 * max(1.0, lam_top):
        return None
    if wp.size and wp[0] < 0:
        X = (Up * np.maximum(wp, 0.0)) @ Up.conj().T
    gamma = z_pol[comp.sl_gamma]
    g_scale = max(z_ref[comp.sl_gamma].max(initial=0.0), 1.0)
    if comp.n_gamma and gamma.min(initial=0.0) < -1e-9 * g_scale:
        return None
    gamma = np.maximum(gamma, 0.0)

    z_out = z_pol.copy()
    z_out[comp.sl_x] = svec(X)
    z_out[comp.sl_gamma] = gamma
    if comp.n_eq:
        viol = np.max(np.abs(comp.E @ z_out - comp.h))
        if viol > 1e-9 * max(1.0, np.max(np.abs(comp.h), initial=0.0)):
            return None
    if np.linalg.norm(z_out) > 100.0 * (np.linalg.norm(z_ref) + 1.0):
        return None
    return z_out


def _gamma_variants(comp, z_ref):
    if comp.n_gamma == 0:
        return [[]]
    gamma_ref = z_ref[comp.sl_gamma]
    g_scale = max(gamma_ref.max(initial=0.0), 1e-12)
    thresholded = [i for i in range(comp.n_gamma) if gamma_ref[i] > 1e-7 * g_scale]
    everything = list(range(comp.n_gamma))
    return [thresholded] if thresholded == everything else [thresholded, everything]


def _face_ladder_polish(comp, z_ref, obj_ref):
    """Fallback polish: try faces of decreasing rank anchored at the iterate."""
    best = None
    best_obj = obj_ref + 1e-6 * max(1.0, abs(obj_ref))
    X_ref = smat(z_ref[comp.sl_x], comp.n)
    w, V = np.linalg.eigh(X_ref)
    V_sorted = V[:, np.argsort(w)[::-1]]
    variants = _gamma_variants(comp, z_ref)
    for r in range(comp.n, -1, -1):
        face_dim = r * r + (1 if comp.has_alpha else 0)
        if face_dim + comp.n_gamma < comp.n_eq:
            break  # too few unknowns to meet the equalities
        for free_gamma in variants:
            cand = _polish_face(comp, z_ref, V_sorted[:, :r], free_gamma)
            if cand is None:
                continue
            obj = comp.objective(cand)
            if obj < best_obj:
                best, best_obj = cand, obj
    return best


def _projection_jacobian(comp, w, mu):
    """Smoothed Jacobian of the cone projection at ``w`` (d x d, dense).

    The PSD block uses the Loewner divided-difference formula in the
    eigenframe of the matrix iterate, with the positive-part function
    smoothed as phi(t) = (t + sqrt(t^2 + 4 mu^2))/2; the orthant block gets
    the matching scalar derivative and the free scalar passes through.
    ``mu -> 0`` recovers a generalized Jacobian of the exact projection.
    """
    d = comp.dim
    J = np.zeros((d, d))
    W = smat(w[comp.sl_x], comp.n)
    lam, U = np.linalg.eigh(W)
    phi = 0.5 * (lam + np.sqrt(lam * lam + 4.0 * mu * mu))
    dphi = 0.5 * (1.0 + lam / np.sqrt(lam * lam + 4.0 * mu * mu)) if mu > 0 else (lam > 0).astype(float)
    denom = lam[:, None] - lam[None, :]
    num = phi[:, None] - phi[None, :]
    scale = max(np.max(np.abs(lam)), 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        omega = np.where(np.abs(denom) > 1e-14 * scale, num / denom, 0.0)
    same = np.abs(denom) <= 1e-14 * scale
    pair_avg = 0.5 * (dphi[:, None] + dphi[None, :])
    omega[same] = pair_avg[same]
    # Hadamard multiplication by (real symmetric) omega is diagonal in svec
    # coordinates, so the whole operator is Q diag(dvec) Q^T with Q the
    # congruence matrix of the eigenvector frame
    n = comp.n
    iu, ju = _triu_indices(n)
    dvec = np.empty(comp.n_x)
    dvec[:n] = np.diagonal(omega)
    dvec[n::2] = omega[iu, ju]
    dvec[n + 1 :: 2] = omega[iu, ju]
    Q = _congruence_matrix(U)
    J[: comp.n_x, : comp.n_x] = (Q * dvec[np.newaxis, :]) @ Q.T
    if comp.n_gamma:
        g = w[comp.sl_gamma]
        idx = np.arange(comp.n_x, comp.n_x + comp.n_gamma)
        if mu > 0:
            J[idx, idx] = 0.5 * (1.0 + g / np.sqrt(g * g + 4.0 * mu * mu))
        else:
            J[idx, idx] = (g > 0).astype(float)
    if comp.has_alpha:
        J[comp.idx_alpha, comp.idx_alpha] = 1.0
    return J


def _newton_polish(comp, z0, nu0, max_steps=60):
    """Smoothing-Newton refinement of the projected KKT equation.

    Solves G(z, nu) = [z - Pi(z - (Pz + q + E^T nu)); Ez - h] = 0, which
    characterizes optimality exactly. The Jacobian uses a smoothed projection
    derivative whose smoothing parameter is tied to the current residual, and
    steps are Levenberg-Marquardt damped: both guards matter at degenerate
    optima, where the exact generalized Jacobian is singular. This takes the
    operator-splitting iterate to machine accuracy, including along weakly
    curved directions where first-order residuals are blind.

    Returns ``(z, kkt_residual, equality_violation)``; the point is the
    exactly-cone-feasible side of the projection pair.
    """
    d, p = comp.dim, comp.n_eq
    z = z0.copy()
    nu = nu0.copy() if nu0 is not None and nu0.shape == (p,) else np.zeros(p)

    def residual(z, nu):
        grad = comp.P @ z + comp.q
        if p:
            grad = grad + comp.E.T @ nu
        w = z - grad
        proj = comp.project_cone(w)
        top = z - proj
        bottom = comp.E @ z - comp.h if p else np.zeros(0)
        return np.concatenate([top, bottom]), w, proj

    G, w, proj = residual(z, nu)
    norm_G = np.linalg.norm(G)
    tol = 1e-13 * max(1.0, np.linalg.norm(z))
    lm = 1e-10
    for _ in range(max_steps):
        if norm_G <= tol or not np.isfinite(norm_G):
            break
        mu = min(1e-2, 0.25 * norm_G)
        DPi = _projection_jacobian(comp, w, mu)
        J = np.zeros((d + p, d + p))
        J[:d, :d] = np.eye(d) - DPi @ (np.eye(d) - comp.P)
        if p:
            J[:d, d:] = DPi @ comp.E.T
            J[d:, :d] = comp.E
        JtJ = J.T @ J
        JtG = J.T @ G
        diag_scale = max(np.trace(JtJ) / (d + p), 1e-12)
        accepted = False
        for _ in range(12):
            A = JtJ + (lm * diag_scale) * np.eye(d + p)
            try:
                step = -scipy.linalg.cho_solve(scipy.linalg.cho_factor(A, check_finite=False),
                                               JtG, check_finite=False)
            except np.linalg.LinAlgError:
                lm = min(lm * 10.0, 1e10)
                continue
            if not np.all(np.isfinite(step)):
                lm = min(lm * 10.0, 1e10)
                continue
            z_t = z + step[:d]
            nu_t = nu + step[d:] if p else nu
            G_t, w_t, proj_t = residual(z_t, nu_t)
            norm_t = np.linalg.norm(G_t)
            if norm_t < norm_G:
                z, nu, G, w, proj, norm_G = z_t, nu_t, G_t, w_t, proj_t, norm_t
                lm = max(lm / 5.0, 1e-14)
                accepted = True
                break
            lm = min(lm * 10.0, 1e10)
        if not accepted:
            break

    z_out = proj
    if not np.all(np.isfinite(z_out)):
        return None, float("inf"), float("inf")
    viol = np.max(np.abs(comp.E @ z_out - comp.h)) if p else 0.0
    return z_out, float(norm_G), float(viol)


def _polish(comp, z_ref, obj_ref, nu_ref):
    """Refine the iterate; returns ``(z, certified, kkt_residual, eq_violation)``.

    ``certified`` means the smoothing-Newton step drove the full KKT residual
    below its acceptance threshold, i.e. the returned point is an optimum up
    to roundoff; otherwise the face-ladder fallback result (or None) is
    returned and the caller keeps the operator-splitting status.
    """
    scale = max(1.0, np.linalg.norm(z_ref))
    cand, kkt_res, viol = _newton_polish(comp, z_ref, nu_ref)
    if (
        cand is not None
        and kkt_res <= 1e-11 * scale
        and viol <= 1e-9 * max(1.0, np.max(np.abs(comp.h), initial=0.0))
        and comp.objective(cand) <= obj_ref + 1e-6 * max(1.0, abs(obj_ref))
    ):
        return cand, True, kkt_res, viol
    fallback = _face_ladder_polish(comp, z_ref, obj_ref)
    if fallback is not None:
        viol = np.max(np.abs(comp.E @ fallback - comp.h)) if comp.n_eq else 0.0
        return fallback, False, float("nan"), float(viol)
    return None, False, float("nan"), float("nan")


# ---------------------------------------------------------------------------
# main entry point


def solve(problem, settings=None):
    """Solve an :class:`LsSdpProblem`; returns ``(X, gamma, alpha, report)``.

    Deterministic: no randomized steps, so repeated calls on the same problem
    yield identical results.
    """
    settings = settings or SolverSettings()
    comp = _Compiled(problem)
    d = comp.dim

    sigma = settings.penalty
    beta = settings.over_relaxation
    lu = _kkt_factor(comp, sigma)
    need_refactor = False

    # start from the cone projection of the minimum-norm equality solution
    if comp.n_eq:
        z0, *_ = np.linalg.lstsq(comp.E, comp.h, rcond=None)
        z_tilde = comp.project_cone(z0)
    else:
        z_tilde = np.zeros(d)
    u = np.zeros(d)
    rhs = np.empty(d + comp.n_eq)
    if comp.n_eq:
        rhs[d:] = comp.h

    status = "max_iters"
    iters = settings.max_iters
    r_prim = r_dual = float("inf")
    nu = np.zeros(comp.n_eq)
    best_ratio = float("inf")
    last_progress = 0
    polish_attempts = 0
    z_final = None
    polished = False

    for k in range(1, settings.max_iters + 1):
        if need_refactor:
            lu = _kkt_factor(comp, sigma)
            need_refactor = False

        rhs[:d] = sigma * (z_tilde - u) - comp.q
        sol = scipy.linalg.lu_solve(lu, rhs, check_finite=False)
        z = sol[:d]
        if not np.all(np.isfinite(z)):
            status = "infeasible_suspected"
            iters = k
            break
        if comp.n_eq:
            nu = sol[d:]

        z_hat = beta * z + (1.0 - beta) * z_tilde
        z_tilde_new = comp.project_cone(z_hat + u)
        u += z_hat - z_tilde_new

        r_prim = np.linalg.norm(z - z_tilde_new)
        r_dual = sigma * np.linalg.norm(z_tilde_new - z_tilde)
        z_tilde = z_tilde_new

        eps_prim = settings.eps_abs + settings.eps_rel * max(
            np.linalg.norm(z), np.linalg.norm(z_tilde)
        )
        eps_dual = settings.eps_abs + settings.eps_rel * max(
            sigma * np.linalg.norm(u), np.linalg.norm(comp.P @ z_tilde), np.linalg.norm(comp.q)
        )
        if r_prim <= eps_prim and r_dual <= eps_dual:
            status = "optimal"
            iters = k
            break

        # stall handling: when residuals go flat the tail is crawling along
        # weakly-curved directions; try to finish with the Newton polish, and
        # only keep sweeping if that refinement does not certify optimality
        ratio = max(r_prim / eps_prim, r_dual / eps_dual)
        if ratio < 0.98 * best_ratio:
            best_ratio = ratio
            last_progress = k
        elif k - last_progress >= 400:
            if settings.polish and polish_attempts < 8:
                polish_attempts += 1
                cand = comp.project_cone(z_tilde)
                refined, certified, kkt_res, viol = _polish(comp, cand, comp.objective(cand), nu)
                if refined is not None and certified:
                    z_final = refined
                    polished = True
                    status = "optimal"
                    r_prim = max(viol, 0.0)
                    r_dual = kkt_res
                    iters = k
                    break
                best_ratio = ratio
                last_progress = k
            else:
                iters = k
                break

        if settings.adaptive_penalty and k % 25 == 0:
            # residual balancing on normalized residuals, factor-2 steps
            rp_rel = r_prim / max(np.linalg.norm(z), np.linalg.norm(z_tilde), 1e-12)
            rd_rel = r_dual / max(sigma * np.linalg.norm(u),
                                  np.linalg.norm(comp.P @ z_tilde), np.linalg.norm(comp.q), 1e-12)
            new_sigma = sigma
            if rp_rel > 4.0 * rd_rel:
                new_sigma = min(sigma * 2.0, 1e4)
            elif rd_rel > 4.0 * rp_rel:
                new_sigma = max(sigma / 2.0, 1e-4)
            if new_sigma != sigma:
                u *= sigma / new_sigma
                sigma = new_sigma
                need_refactor = True
            if comp.n_eq:
                eq_viol = np.max(np.abs(comp.E @ z - comp.h))
                if not np.isfinite(eq_viol) or eq_viol > 1e-6 * (1.0 + np.max(np.abs(comp.h))):
                    status = "infeasible_suspected"
                    iters = k
                    break

    if z_final is None:
        z_final = comp.project_cone(z_tilde)
        if settings.polish and status != "infeasible_suspected":
            refined, certified, kkt_res, viol = _polish(comp, z_final, comp.objective(z_final), nu)
            if refined is not None:
                z_final = refined
                polished = True
                if certified:
                    # the refined point satisfies the full KKT system to
                    # roundoff: report it as optimal with certified residuals
                    status = "optimal"
                    r_prim = max(viol, 0.0)
                    r_dual = kkt_res

    X, gamma, alpha = comp.split(z_final)
    report = SolverReport(
        status=status,
        iterations=iters,
        primal_residual=float(r_prim),
        dual_residual=float(r_dual),
        objective_value=comp.objective(z_final),
        polished=polished,
    )
    return SolveSolution(X=X, gamma=gamma, alpha=alpha, report=report)


# ---------------------------------------------------------------------------
# problem builders for the beamforming designs


def build_relaxed_problem(scenario, rho, targets):
    """Rank-relaxed weighted design problem over a single PSD covariance.

    Residuals: L beampattern-matching terms with weight (1-rho)/L and M
    power-mismatch terms with weight rho/M (zero-weight terms are kept, so
    the problem shape does not depend on rho); equalities pin each diagonal
    entry of the covariance to Pt/N. The pattern scaling enters as the free
    alpha variable.
    """
    cfg = scenario.config
    N = cfg.antennas
    targets = np.asarray(targets, dtype=float)
    if targets.shape != (cfg.users,):
        raise ValueError(f"expected {cfg.users} targets, got shape {targets.shape}")
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho must lie in [0, 1], got {rho}")

    A = scenario.steering
    L = A.shape[1]
    residuals = []
    w_radar = (1.0 - rho) / L
    for l in range(L):
        a = A[:, l]
        residuals.append(
            (w_radar, AffineFunctional(
                matrix_coefficient=-np.outer(a, a.conj()),
                alpha_coefficient=float(scenario.desired[l]),
            ))
        )
    w_wpt = rho / cfg.users
    for m in range(cfg.users):
        g = scenario.channels[m]
        residuals.append(
            (w_wpt, AffineFunctional(
                matrix_coefficient=-cfg.efficiency * np.outer(g.conj(), g),
                offset=float(targets[m]),
            ))
        )

    equalities = []
    per_antenna = cfg.total_power / N
    for n in range(N):
        A_eq = np.zeros((N, N), dtype=complex)
        A_eq[n, n] = 1.0
        equalities.append(AffineFunctional(matrix_coefficient=A_eq, offset=-per_antenna))

    return LsSdpProblem(dim=N, gamma_len=0, has_alpha=True,
                        residuals=residuals, equalities=equalities)


def build_suboptimal_problem(scenario, rho, targets):
    """Design problem restricted to covariances realizable by MRT-plus-complement beams.

    Adds M nonnegative auxiliaries gamma_m (squared per-user beam gains) and
    the M^2 real equality functionals coupling them to the covariance:
    g_p R g_q^H = sum_m (GG^H)_{pm} gamma_m (GG^H)_{mq} for all p <= q,
    split into real and imaginary parts.
    """
    cfg = scenario.config
    G = scenario.channels
    M = cfg.users
    sv = np.linalg.svd(G, compute_uv=False)
    if sv.size < M or sv[-1] <= 1e-10 * sv[0]:
        raise ValueError("channel matrix must have full row rank for the structured design")

    base = build_relaxed_problem(scenario, rho, targets)
    K = G @ G.conj().T
    equalities = list(base.equalities)
    for p in range(M):
        for q in range(p, M):
            B = np.outer(G[q].conj(), G[p])      # <B, X> pairing yields g_p X g_q^H
            coeff = K[p, :] * K[:, q]            # gamma weights, complex
            A_re = 0.5 * (B + B.conj().T)
            equalities.append(AffineFunctional(
                matrix_coefficient=A_re, gamma_coefficients=-coeff.real))
            if q > p:
                A_im = (B - B.conj().T) / 2j
                equalities.append(AffineFunctional(
                    matrix_coefficient=A_im, gamma_coefficients=-coeff.imag))

    return LsSdpProblem(dim=cfg.antennas, gamma_len=M, has_alpha=True,
                        residuals=base.residuals, equalities=equalities)
