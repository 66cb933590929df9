"""Polynomial-interaction solver in moment space.

For an interaction of degree 2n the convolution drift depends on a
candidate measure only through its first 2n-1 moments, so the
density-level self-consistency problem collapses onto a map on R^{2n-1}:
a moment vector m determines an effective potential W_m, and the moments
of the Gibbs density of W_m must reproduce m.  This module builds W_m with
exact coefficient arithmetic, evaluates the moment map by quadrature, and
locates its symmetric and outlying fixed points.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from math import factorial

import numpy as np
from numpy.polynomial import Polynomial

from .errors import NotConverged
from .model import ConditionReport, ModelSpec, outlying_condition
from .quadrature import DEFAULT_TOL, GibbsDensity, gibbs_moments, gibbs_quadrature

#: damping weight for the fixed-point iteration
DAMPING = 0.5
MAX_DAMPED = 500
MAX_NEWTON = 100
#: finite-difference step for the fallback Jacobian
FD_STEP = 1e-6


@dataclass(frozen=True)
class FixedPointReport:
    """Outcome of a moment fixed-point solve."""

    m_star: np.ndarray
    residual: float
    iterations: int
    converged: bool
    branch: str                      # "symmetric", "plus" or "minus"
    condition: ConditionReport = None
    warnings: tuple[str, ...] = ()
    meta: dict = field(default_factory=dict)


def moment_count(spec: ModelSpec) -> int:
    return 2 * spec.n - 1


def mirror_moments(m) -> np.ndarray:
    """Moment vector of the space-reflected measure: m_k -> (-1)^k m_k."""
    m = np.asarray(m, dtype=float)
    signs = np.array([(-1.0) ** k for k in range(1, len(m) + 1)])
    return signs * m


def effective_potential(spec: ModelSpec, m) -> Polynomial:
    """W_m = V + F(x - a) + sum_p ((-1)^p / p!) (m_p - a^p) F^(p)(x).

    Pure coefficient arithmetic; the only inputs are the moment vector and
    exact derivatives of F.  For m_p = a^p every correction term vanishes.
    """
    m = np.asarray(m, dtype=float)
    k = moment_count(spec)
    if len(m) != k:
        raise ValueError(f"moment vector must have length {k}, got {len(m)}")
    a = spec.a
    z = spec.F.poly(Polynomial([-a, 1.0]))
    for p in range(1, k + 1):
        z += ((-1.0) ** p / factorial(p)) * (m[p - 1] - a**p) * spec.F.deriv(p)
    return spec.V.poly + z


def moment_map(spec: ModelSpec, epsilon: float, m,
               tol: float = DEFAULT_TOL) -> np.ndarray:
    """Moments 1..2n-1 of the Gibbs density built from the moment vector m.

    The measure encoded by m is invariant exactly when this map returns m.
    """
    return gibbs_moments(effective_potential(spec, m), epsilon,
                         moment_count(spec), tol=tol)


@dataclass(frozen=True)
class CramerReport:
    tau: np.ndarray            # numeric linear solve
    closed_form: np.ndarray    # k a^{k-1} (a V'''(a) - (k-1) V''(a)) / (4 a V''(a)(alpha + V''(a)))
    max_discrepancy: float


def cramer_tau(spec: ModelSpec) -> CramerReport:
    """First-order moment corrections, solved two independent ways.

    The linear system couples all 2n-1 corrections through the interaction
    derivatives at a; it is solved numerically and compared against the
    closed form, which exists because the system matrix is a rank-one
    update of the identity.
    """
    a = spec.a
    k = moment_count(spec)
    v2 = float(spec.V.deriv(2)(a))
    v3 = float(spec.V.deriv(3)(a))
    alpha = spec.alpha

    c1 = np.array([j * a ** (j - 1) for j in range(1, k + 1)])
    c2 = np.array([((-1.0) ** j / factorial(j)) * float(spec.F.deriv(j + 1)(a))
                   for j in range(1, k + 1)])
    A = (alpha + v2) * np.eye(k) + np.outer(c1, c2)
    rhs = np.array([j * a ** (j - 1) * (v3 / (4.0 * (alpha + v2)) - (j - 1) / (4.0 * a))
                    for j in range(1, k + 1)])
    tau = np.linalg.solve(A, rhs)

    closed = np.array([j * a ** (j - 1) * (a * v3 - (j - 1) * v2)
                       / (4.0 * a * v2 * (alpha + v2)) for j in range(1, k + 1)])
    return CramerReport(tau=tau, closed_form=closed,
                        max_discrepancy=float(np.max(np.abs(tau - closed))))


def predicted_outlying_moments(spec: ModelSpec, epsilon: float) -> np.ndarray:
    """First-order predictor (a^k - tau_k eps) of the plus-branch moments."""
    tau = cramer_tau(spec).closed_form
    a_pow = np.array([spec.a**k for k in range(1, moment_count(spec) + 1)])
    return a_pow - tau * epsilon


def _initializer(spec: ModelSpec, epsilon: float) -> np.ndarray:
    pred = predicted_outlying_moments(spec, epsilon)
    a_pow = np.array([spec.a**k for k in range(1, moment_count(spec) + 1)])
    # noise too large for the first-order shift to be plausible: start at the
    # zero-noise point instead
    if np.any(np.abs(pred - a_pow) > 0.5 * np.abs(a_pow)):
        return a_pow
    return pred


def _localization_flags(spec: ModelSpec, epsilon: float, m: np.ndarray,
                        branch: str) -> dict:
    eta = math.sqrt(epsilon)
    delta = 0.5
    a = spec.a
    k = moment_count(spec)
    tau = cramer_tau(spec).closed_form
    signs = np.array([(-1.0) ** j for j in range(1, k + 1)]) if branch == "minus" \
        else np.ones(k)
    a_pow = np.array([a**j for j in range(1, k + 1)])
    refined_center = signs * (a_pow - tau * epsilon)
    refined_half = delta * np.abs(tau) * epsilon
    coarse_half = delta * np.array([j * a ** (j - 1) for j in range(1, k + 1)]) * eta
    return {
        "eta": eta,
        "delta": delta,
        "inside_refined_band": bool(np.all(np.abs(m - refined_center) <= refined_half)),
        "inside_coarse_box": bool(np.all(np.abs(m - signs * a_pow) <= coarse_half)),
    }


def _damped_then_newton(map_fn, m0: np.ndarray, tol: float, omega: float,
                        max_damped: int, max_newton: int):
    """Damped iteration m <- (1-w) m + w Phi(m); quasi-Newton on stagnation."""
    m = np.array(m0, dtype=float)
    best_m, best_res = m.copy(), math.inf
    history: list[float] = []
    iterations = 0

    for _ in range(max_damped):
        phi = map_fn(m)
        res = float(np.max(np.abs(phi - m)))
        iterations += 1
        history.append(res)
        if res < best_res:
            best_res, best_m = res, m.copy()
        if res <= tol:
            return best_m, best_res, iterations, True
        # slower than a factor-2 drop per 10 sweeps counts as stagnation
        if len(history) > 12 and history[-1] > 0.5 * history[-11]:
            break
        m = (1.0 - omega) * m + omega * phi

    m = best_m.copy()
    dim = len(m)
    for _ in range(max_newton):
        g = map_fn(m) - m
        res = float(np.max(np.abs(g)))
        iterations += 1
        if res < best_res:
            best_res, best_m = res, m.copy()
        if res <= tol:
            return best_m, best_res, iterations, True
        jac = np.empty((dim, dim))
        for j in range(dim):
            mj = m.copy()
            mj[j] += FD_STEP
            jac[:, j] = (map_fn(mj) - mj - g) / FD_STEP
        try:
            step = np.linalg.solve(jac, -g)
        except np.linalg.LinAlgError:
            break
        # backtrack if the full step makes things worse
        for _ in range(6):
            trial = m + step
            trial_res = float(np.max(np.abs(map_fn(trial) - trial)))
            iterations += 1
            if trial_res < res:
                break
            step *= 0.5
        m = m + step
    return best_m, best_res, iterations, best_res <= tol


def find_outlying_moments(spec: ModelSpec, epsilon: float, tol: float = 1e-9,
                          max_iter: int = MAX_DAMPED, branch: str = "plus",
                          omega: float = DAMPING,
                          quad_tol: float = DEFAULT_TOL) -> FixedPointReport:
    """Locate the asymmetric fixed point concentrated near +a (or -a).

    Starts from the first-order predictor, runs the damped iteration with a
    quasi-Newton fallback, and reports the localization diagnostics.  The
    existence condition is sufficient, not necessary, so a violated
    condition only tags the report with a warning and the solve still runs.
    This is a local search seeded near the wells; fixed points elsewhere,
    if any exist, are out of its reach by construction.
    """
    if branch not in ("plus", "minus"):
        raise ValueError("branch must be 'plus' or 'minus'")
    cond = outlying_condition(spec)
    warnings = []
    if not cond.holds:
        warnings.append(
            f"condition-violated: sum of interaction derivatives {cond.lhs:.6g} "
            f"not below alpha + V''(a) = {cond.rhs:.6g}; searching anyway")

    m0 = _initializer(spec, epsilon)
    if branch == "minus":
        m0 = mirror_moments(m0)

    def phi(m):
        return moment_map(spec, epsilon, m, tol=quad_tol)

    m_star, residual, iterations, converged = _damped_then_newton(
        phi, m0, tol, omega, max_iter, MAX_NEWTON)
    meta = _localization_flags(spec, epsilon, m_star, branch)
    return FixedPointReport(m_star=m_star, residual=residual, iterations=iterations,
                            converged=converged, branch=branch, condition=cond,
                            warnings=tuple(warnings), meta=meta)


def mirror_report(spec: ModelSpec, epsilon: float, report: FixedPointReport,
                  quad_tol: float = DEFAULT_TOL) -> FixedPointReport:
    """Reflect a solved branch and re-verify the fixed-point residual."""
    m = mirror_moments(report.m_star)
    residual = float(np.max(np.abs(moment_map(spec, epsilon, m, tol=quad_tol) - m)))
    branch = "minus" if report.branch == "plus" else "plus"
    meta = _localization_flags(spec, epsilon, m, branch)
    return FixedPointReport(m_star=m, residual=residual, iterations=0,
                            converged=residual <= max(report.residual, 10 * quad_tol),
                            branch=branch, condition=report.condition,
                            warnings=report.warnings, meta=meta)


@dataclass(frozen=True)
class SymmetricMapPoint:
    """One evaluation of the scalar even-moment map for a quartic interaction."""

    m2_out: float
    chi: float          # m2_out - m2_in
    chi_prime: float    # -(3 beta / eps) Var(x^2) - 1, via the variance identity
    variance: float     # Var of x^2 under the candidate density


def quartic_interaction_coeffs(spec: ModelSpec) -> tuple[float, float]:
    """(alpha, beta) for F = beta x^4/4 + alpha x^2/2 (any valid n = 2 F)."""
    if spec.n != 2:
        raise ValueError("quartic helpers need deg F = 4")
    beta = float(spec.F.deriv(4)(0.0)) / 6.0
    return spec.alpha, beta


def symmetric_scalar_map(spec: ModelSpec, epsilon: float, m2: float,
                         quad_tol: float = DEFAULT_TOL) -> SymmetricMapPoint:
    """Second-moment map for the quartic interaction's symmetric measure.

    The symmetric candidate with second moment m2 has effective potential
    V + F + (3 beta m2 / 2) x^2; the map sends m2 to the second moment of
    its Gibbs density.  Differentiating the tilt gives the derivative
    through the variance of x^2, so the map is strictly decreasing whenever
    beta > 0.
    """
    alpha, beta = quartic_interaction_coeffs(spec)
    w = spec.V.poly + spec.F.poly + Polynomial([0.0, 0.0, 1.5 * beta * m2])
    res = gibbs_quadrature(w, epsilon, kmax=4, tol=quad_tol)
    m2_out = float(res.ratios[2])
    var = float(res.ratios[4] - m2_out**2)
    return SymmetricMapPoint(m2_out=m2_out, chi=m2_out - m2,
                             chi_prime=-(3.0 * beta / epsilon) * var - 1.0,
                             variance=var)


def _symmetric_even_iteration(spec: ModelSpec, epsilon: float, tol: float,
                              quad_tol: float):
    k = moment_count(spec)
    even_idx = [i for i in range(k) if (i + 1) % 2 == 0]
    base = spec.V.poly + spec.F.poly
    init_even = gibbs_moments(base, epsilon, k, tol=quad_tol)[even_idx]

    def embed(even_vals):
        m = np.zeros(k)
        m[even_idx] = even_vals
        return m

    def phi(even_vals):
        return moment_map(spec, epsilon, embed(even_vals), tol=quad_tol)[even_idx]

    ev, residual, iterations, converged = _damped_then_newton(
        phi, init_even, tol, DAMPING, MAX_DAMPED, MAX_NEWTON)
    return embed(ev), residual, iterations, converged


def symmetric_invariant(spec: ModelSpec, epsilon: float, tol: float = 1e-9,
                        quad_tol: float = DEFAULT_TOL) -> FixedPointReport:
    """Symmetric fixed point: odd moments pinned to 0, even ones solved.

    n = 1 needs no iteration (the even-moment space is empty); the quartic
    interaction reduces to a strictly decreasing scalar map whose unique
    root is bracketed and bisected; higher degrees run the damped
    iteration on the even components.
    """
    k = moment_count(spec)
    if spec.n == 1:
        m = np.zeros(1)
        residual = float(np.max(np.abs(moment_map(spec, epsilon, m, tol=quad_tol) - m)))
        return FixedPointReport(m_star=m, residual=residual, iterations=0,
                                converged=residual <= max(tol, 10 * quad_tol),
                                branch="symmetric")

    if spec.n == 2:
        lo, f_lo = 0.0, symmetric_scalar_map(spec, epsilon, 0.0, quad_tol).chi
        if f_lo < 0.0:
            raise NotConverged("scalar map negative at 0; no bracket")
        hi = max(2.0 * spec.a**2, 1.0)
        f_hi = symmetric_scalar_map(spec, epsilon, hi, quad_tol).chi
        grow = 0
        while f_hi > 0.0 and grow < 60:
            hi *= 2.0
            f_hi = symmetric_scalar_map(spec, epsilon, hi, quad_tol).chi
            grow += 1
        if f_hi > 0.0:
            raise NotConverged("could not bracket the scalar map root")
        iterations = 0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            fm = symmetric_scalar_map(spec, epsilon, mid, quad_tol).chi
            iterations += 1
            if abs(fm) <= tol or hi - lo <= tol:
                break
            if fm > 0.0:
                lo = mid
            else:
                hi = mid
        m = np.zeros(k)
        m[1] = mid
        residual = float(np.max(np.abs(moment_map(spec, epsilon, m, tol=quad_tol) - m)))
        return FixedPointReport(m_star=m, residual=residual, iterations=iterations,
                                converged=residual <= max(tol, 10 * quad_tol),
                                branch="symmetric")

    m, residual, iterations, converged = _symmetric_even_iteration(
        spec, epsilon, tol, quad_tol)
    return FixedPointReport(m_star=m, residual=residual, iterations=iterations,
                            converged=converged, branch="symmetric")


def fixed_point_density(spec: ModelSpec, epsilon: float, m,
                        quad_tol: float = DEFAULT_TOL) -> GibbsDensity:
    """Gibbs density encoded by a (candidate) fixed-point moment vector."""
    return GibbsDensity.from_potential(effective_potential(spec, m), epsilon,
                                       tol=quad_tol)
