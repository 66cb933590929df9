"""Closed-form small-noise expansions of exponentially weighted integrals.

Each evaluator expands an integral or moment ratio of the form
``int f exp(-2 U / eps)`` around the unique nondegenerate global minimum of
the polynomial phase U, to first order in the small parameter, using exact
polynomial derivatives.  The quadrature module provides the independent
reference that every formula here is tested against.

Validity is a convergence-order diagnostic, not a certified error bound:
the dropped terms carry no explicit constants.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial

from . import polys
from .errors import (BoundaryMinimum, DegenerateMinimum, OddOrderContact,
                     ZeroMinimizer)
from .quadrature import _require_confining

#: two minima closer than this (relative to 1 + |min value|) flag degeneracy
DEGENERACY_TOL = 1e-10
#: curvature below this at the argmin also flags degeneracy
CURVATURE_TOL = 1e-12


@dataclass(frozen=True)
class MinimizerReport:
    x_star: float
    second_deriv: float
    degenerate: bool
    reason: str = ""


@dataclass(frozen=True)
class ExpansionResult:
    """First-order expansion  value = leading + first_order_coeff * param."""

    leading: float
    first_order_coeff: float
    minimizer: float
    param: float
    valid: bool = True
    reason: str = ""

    @property
    def value(self) -> float:
        return self.leading + self.first_order_coeff * self.param


def global_minimizer(w) -> MinimizerReport:
    """Argmin over the real critical points of a confining polynomial.

    The report is flagged degenerate when a second critical point attains
    the minimum within DEGENERACY_TOL * (1 + |min|) or when the curvature
    at the argmin is below CURVATURE_TOL (symmetric double wells, flat
    bottoms); expansion formulas silently break in those cases.
    """
    p = _require_confining(w)
    crit = np.asarray(polys.distinct_real_roots(p.deriv()))
    vals = p(crit)
    order = np.argsort(vals)
    x_star = float(crit[order[0]])
    w_star = float(vals[order[0]])
    w2 = float(p.deriv(2)(x_star))
    scale = DEGENERACY_TOL * (1.0 + abs(w_star))
    if len(crit) > 1 and float(vals[order[1]]) - w_star <= scale:
        return MinimizerReport(x_star, w2, True,
                               "two critical points attain the global minimum")
    if w2 <= CURVATURE_TOL:
        return MinimizerReport(x_star, w2, True, "vanishing curvature at the minimum")
    return MinimizerReport(x_star, w2, False)


def _nondegenerate_min(u) -> MinimizerReport:
    rep = global_minimizer(u)
    if rep.degenerate:
        raise DegenerateMinimum(rep.reason)
    return rep


def tail_equivalent(u, x: float) -> float:
    """Leading equivalent of the upper tail  int_x^inf exp(-U): e^{-U(x)}/U'(x)."""
    p = polys.as_poly(u)
    d = float(p.deriv()(x))
    if d <= 0.0:
        raise ValueError(f"U'(x) must be positive at x={x}, got {d}")
    return math.exp(-float(p(x))) / d


def contact_order(u, x_min: float) -> int:
    """Order of the first nonvanishing derivative of u at x_min (>= 2).

    Derivatives below 1e-9 times the coefficient scale count as zero, so a
    numerically flat quadratic term defers to the next genuine one.
    """
    p = polys.as_poly(u)
    dscale = polys.poly_scale(p)
    for r in range(2, polys.degree(p) + 1):
        if abs(polys.deriv_at(p, x_min, r)) > 1e-9 * dscale:
            return r
    raise DegenerateMinimum("all derivatives vanish at the minimum")


def flat_minimum_integral(u, epsilon: float, a: float, b: float) -> float:
    """Limit of  int_a^b exp(-U/eps)  for an interior minimum of even contact order.

    With 2 k0 the order of the first nonvanishing derivative at the interior
    argmin, the value is
    (1/k0) (eps (2 k0)! / U^(2k0)(x_min))^(1/(2 k0)) Gamma(1/(2 k0)) e^{-U(x_min)/eps}.

    Guards fire in order: boundary argmin, tied interior minima, odd contact
    order.  (For exact polynomials the last one is impossible at a true
    interior minimum; it protects the tolerance regime where a tiny even
    derivative is classified as zero.)
    """
    p = polys.as_poly(u)
    if not b > a:
        raise ValueError("need b > a")
    crit = [x for x in polys.distinct_real_roots(p.deriv()) if a < x < b]
    candidates = crit + [a, b]
    vals = [float(p(x)) for x in candidates]
    i = int(np.argmin(vals))
    x_min, u_min = candidates[i], vals[i]
    scale = DEGENERACY_TOL * (1.0 + abs(u_min))
    if x_min in (a, b) or min(abs(x_min - a), abs(b - x_min)) <= 1e-12 * (b - a):
        raise BoundaryMinimum(f"argmin of U on [{a}, {b}] is at the boundary")
    ties = [x for x, v in zip(candidates, vals) if v - u_min <= scale]
    if len(ties) > 1:
        raise DegenerateMinimum("minimum attained at more than one point")

    order = contact_order(p, x_min)
    if order % 2 != 0:
        raise OddOrderContact(f"first nonzero derivative has odd order {order}")
    k0 = order // 2
    u2k = polys.deriv_at(p, x_min, order)
    return (1.0 / k0) * (epsilon * math.factorial(order) / u2k) ** (1.0 / order) \
        * math.gamma(1.0 / order) * math.exp(-u_min / epsilon)


def _derivs(p: Polynomial, x: float, orders) -> dict[int, float]:
    return {k: polys.deriv_at(p, x, k) for k in orders}


def laplace_integral_o2(u, f, epsilon: float) -> ExpansionResult:
    """Second-order estimate of  int f(x) exp(-2 U(x)/eps) dx  over the line.

    leading           = sqrt(pi eps / U2) e^{-2U(x0)/eps} f(x0)
    first_order_coeff = same prefactor times
        f(x0) (5 U3^2 / (48 U2^3) - U4 / (16 U2^2))
        - f'(x0) U3 / (4 U2^2) + f''(x0) / (4 U2),
    with Uk the exact k-th derivative of U at the minimizer x0.
    """
    p = _require_confining(u)
    fp = polys.as_poly(f)
    rep = _nondegenerate_min(p)
    x0 = rep.x_star
    U = _derivs(p, x0, (2, 3, 4))
    pref = math.sqrt(math.pi * epsilon / U[2]) * math.exp(-2.0 * float(p(x0)) / epsilon)
    f0 = float(fp(x0))
    gamma0 = (f0 * (5.0 * U[3] ** 2 / (48.0 * U[2] ** 3) - U[4] / (16.0 * U[2] ** 2))
              - polys.deriv_at(fp, x0, 1) * U[3] / (4.0 * U[2] ** 2)
              + polys.deriv_at(fp, x0, 2) / (4.0 * U[2]))
    return ExpansionResult(leading=pref * f0, first_order_coeff=pref * gamma0,
                           minimizer=x0, param=epsilon)


def laplace_moment_ratio(u, f, n: int, epsilon: float) -> ExpansionResult:
    """First-order expansion of the tilted moment ratio

        int t^n e^{f(t)} e^{-2U(t)/eps} dt / int e^{f(t)} e^{-2U(t)/eps} dt
        = x^n - (n x^{n-2} / (4 U2)) [x U3/U2 - n + 1 - 2 x f'(x)] eps + o(eps)

    at the minimizer x of U.  For n = 1 the x^{n-2} factor cancels
    algebraically; for n >= 2 a vanishing minimizer is refused because the
    formula's behavior there is not defined.
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    p = _require_confining(u)
    fp = polys.as_poly(f)
    rep = _nondegenerate_min(p)
    x = rep.x_star
    U = _derivs(p, x, (2, 3))
    fprime = polys.deriv_at(fp, x, 1)
    if n == 1:
        coeff = -(U[3] / U[2] - 2.0 * fprime) / (4.0 * U[2])
    else:
        if abs(x) <= 1e-12:
            raise ZeroMinimizer(f"moment ratio with n={n} at minimizer ~0")
        coeff = -(n * x ** (n - 2) / (4.0 * U[2])) \
            * (x * U[3] / U[2] - n + 1.0 - 2.0 * x * fprime)
    return ExpansionResult(leading=x ** n, first_order_coeff=float(coeff),
                           minimizer=x, param=epsilon)


def perturbed_minimizer(u, g, mu: float, eta: float) -> dict[str, float]:
    """Argmin of U + eta mu G: exact (root isolation) and first-order prediction.

    predicted = x0 - mu G'(x0)/U''(x0) * eta  around the unperturbed argmin x0.
    """
    p = _require_confining(u)
    gp = polys.as_poly(g)
    rep = _nondegenerate_min(p)
    x0 = rep.x_star
    predicted = x0 - mu * polys.deriv_at(gp, x0, 1) / rep.second_deriv * eta
    tilted = p + (eta * mu) * gp
    exact = global_minimizer(tilted)
    if exact.degenerate:
        raise DegenerateMinimum(f"perturbed potential: {exact.reason}")
    return {"exact": exact.x_star, "predicted": float(predicted)}


def perturbed_ratio(u, g_list, mu_list, f, eta: float) -> ExpansionResult:
    """First-order Gibbs-ratio prediction under a small multi-term tilt.

    For the potential U + eta sum_i mu_i G_i the ratio of f-weighted to
    plain Gibbs integrals is
        f(x0) - (f'(x0) sum_i mu_i G_i'(x0) / U''(x0)) eta + o(eta).
    """
    if len(g_list) != len(mu_list):
        raise ValueError(f"length mismatch: {len(g_list)} tilts vs {len(mu_list)} weights")
    p = _require_confining(u)
    fp = polys.as_poly(f)
    rep = _nondegenerate_min(p)
    x0 = rep.x_star
    drift = sum(mu * polys.deriv_at(polys.as_poly(g), x0, 1)
                for g, mu in zip(g_list, mu_list))
    coeff = -polys.deriv_at(fp, x0, 1) * drift / rep.second_deriv
    return ExpansionResult(leading=float(fp(x0)), first_order_coeff=float(coeff),
                           minimizer=x0, param=eta)
