"""Gibbs-integral engine: integrals of f(x) exp(-2 W(x) / eps) over the line.

W is any real polynomial with positive even-degree leading coefficient.
The mass concentrates in O(sqrt(eps)) windows around the minima of W, so
panels are laid out geometrically around every critical point of W and the
per-panel rule order is doubled until two successive refinements agree.

Two interchangeable per-panel rule families are provided (Gauss-Legendre
and tanh-sinh); the second exists so results can be cross-checked against
an independent rule on the same decomposition.

All work happens after subtracting min W from the exponent, so the
integrand lives in [0, 1] and no overflow is possible regardless of the
size of min W.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial

from . import polys
from .errors import NonconfiningPotential, ToleranceNotReached

DEFAULT_TOL = 1e-10
#: tail mass target used when choosing the truncation radius
TAIL_FLOOR = 1e-300
_NODE_LADDER = (16, 32, 64, 128, 256, 512)
_RULES = ("legendre", "tanhsinh")


def _require_confining(w) -> Polynomial:
    p = Polynomial(polys.coeffs_trimmed(w))
    d = polys.degree(p)
    if d < 2 or d % 2 != 0:
        raise NonconfiningPotential(f"degree must be even and >= 2, got {d}")
    if polys.leading_coeff(p) <= 0.0:
        raise NonconfiningPotential("leading coefficient must be positive")
    return p


def _critical_points(w: Polynomial) -> np.ndarray:
    pts = polys.distinct_real_roots(w.deriv())
    if not pts:
        # odd-degree derivative always has a real root; guard anyway
        return np.array([0.0])
    return np.asarray(pts)


def potential_minimum(w) -> tuple[float, float]:
    """Location and value of the global minimum of a confining polynomial."""
    p = _require_confining(w)
    crit = _critical_points(p)
    vals = p(crit)
    i = int(np.argmin(vals))
    return float(crit[i]), float(vals[i])


def _truncation_bounds(w: Polynomial, wmin: float, epsilon: float, kmax: int,
                       radius_scale: float) -> tuple[float, float]:
    # need 2 (W(x) - wmin)/eps - kmax log(1 + x^2) >= log(1/TAIL_FLOOR)
    target = math.log(1.0 / TAIL_FLOOR)
    crit = _critical_points(w)
    base = max(1.0, 1.25 * float(np.max(np.abs(crit))) + 1.0)

    def far_enough(x):
        margin = 2.0 * (float(w(x)) - wmin) / epsilon - kmax * math.log1p(x * x)
        return margin >= target

    lo, hi = -base, base
    for _ in range(80):
        if far_enough(hi):
            break
        hi *= 2.0
    for _ in range(80):
        if far_enough(lo):
            break
        lo *= 2.0
    return lo * radius_scale, hi * radius_scale


def _window_width(w: Polynomial, c: float, side: float, epsilon: float,
                  limit: float) -> float:
    """Distance from critical point c (towards `side`) over which W moves by ~eps."""
    w2 = abs(float(w.deriv(2)(c)))
    h = math.sqrt(epsilon / w2) if w2 > 1e-12 else epsilon ** 0.25
    h = min(h, limit)
    wc = float(w(c))
    for _ in range(200):
        if abs(float(w(c + side * h)) - wc) >= 0.5 * epsilon or h >= limit:
            break
        h *= 2.0
    for _ in range(200):
        if abs(float(w(c + side * 0.5 * h)) - wc) < 0.5 * epsilon or h <= 1e-13 * (1 + abs(c)):
            break
        h *= 0.5
    return min(h, limit)


def _panel_edges(w: Polynomial, epsilon: float, lo: float, hi: float) -> np.ndarray:
    edges = {lo, hi}
    span = hi - lo
    for c in _critical_points(w):
        if not lo < c < hi:
            continue
        edges.add(float(c))
        for side in (-1.0, 1.0):
            limit = (hi - c) if side > 0 else (c - lo)
            h = _window_width(w, float(c), side, epsilon, limit)
            x = h
            while x < limit:
                edges.add(float(c + side * x))
                x *= 2.0
    arr = np.array(sorted(edges))
    keep = np.concatenate([[True], np.diff(arr) > 1e-12 * span])
    return arr[keep]


@functools.lru_cache(maxsize=None)
def _leggauss(n: int):
    return np.polynomial.legendre.leggauss(n)


@functools.lru_cache(maxsize=None)
def _tanhsinh_rule(n: int, t_max: float = 4.0):
    # trapezoid in t; substitution x = tanh((pi/2) sinh t) on [-1, 1]
    t = np.linspace(-t_max, t_max, n)
    dt = t[1] - t[0]
    s = 0.5 * math.pi * np.sinh(t)
    x = np.tanh(s)
    wt = 0.5 * math.pi * np.cosh(t) / np.cosh(s) ** 2 * dt
    wt[0] *= 0.5
    wt[-1] *= 0.5
    return x, wt


def _power_integrals(w: Polynomial, epsilon: float, wmin: float,
                     edges: np.ndarray, n_nodes: int, kmax: int,
                     rule: str) -> np.ndarray:
    """S_k = int x^k exp(-2 (W - wmin)/eps) dx for k = 0..kmax."""
    xr, wr = _leggauss(n_nodes) if rule == "legendre" else _tanhsinh_rule(n_nodes)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    x = (mid[:, None] + half[:, None] * xr[None, :]).ravel()
    wt = (half[:, None] * wr[None, :]).ravel()
    dens = np.exp(-2.0 * (w(x) - wmin) / epsilon)
    base = wt * dens
    out = np.empty(kmax + 1)
    xp = np.ones_like(x)
    for k in range(kmax + 1):
        out[k] = float(np.dot(base, xp))
        if k < kmax:
            xp = xp * x
    return out


@dataclass(frozen=True)
class QuadratureResult:
    """Converged shifted integrals S_k and their normalized ratios."""

    shifted: np.ndarray        # S_k = int x^k exp(-2 (W - wmin)/eps)
    ratios: np.ndarray         # S_k / S_0 for k = 0..kmax
    wmin: float
    error_estimate: float
    nodes_used: int


def gibbs_quadrature(w, epsilon: float, kmax: int = 0, tol: float = DEFAULT_TOL,
                     rule: str = "legendre", radius_scale: float = 1.0) -> QuadratureResult:
    """Converge S_0..S_kmax by doubling the per-panel rule order.

    Convergence demands both the normalization and every moment ratio to be
    stable between two successive refinements within ``tol`` (relative for
    the normalization, relative-or-absolute for ratios, which can vanish).
    """
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    if rule not in _RULES:
        raise ValueError(f"unknown rule {rule!r}, expected one of {_RULES}")
    p = _require_confining(w)
    _, wmin = potential_minimum(p)
    lo, hi = _truncation_bounds(p, wmin, epsilon, kmax, radius_scale)
    edges = _panel_edges(p, epsilon, lo, hi)

    prev = None
    for n_nodes in _NODE_LADDER:
        cur = _power_integrals(p, epsilon, wmin, edges, n_nodes, kmax, rule)
        if cur[0] <= 0.0 or not np.all(np.isfinite(cur)):
            prev = cur
            continue
        if prev is not None and prev[0] > 0.0:
            dnorm = abs(cur[0] - prev[0]) / cur[0]
            r_cur = cur / cur[0]
            r_prev = prev / prev[0]
            dratio = np.abs(r_cur - r_prev) / np.maximum(1.0, np.abs(r_cur))
            err = max(dnorm, float(np.max(dratio)) if kmax else 0.0)
            if err <= tol:
                return QuadratureResult(shifted=cur, ratios=r_cur, wmin=wmin,
                                        error_estimate=err, nodes_used=n_nodes)
        prev = cur
    raise ToleranceNotReached(
        f"quadrature stalled at {_NODE_LADDER[-1]} nodes/panel (tol={tol:g})")


def gibbs_log_norm(w, epsilon: float, tol: float = DEFAULT_TOL,
                   rule: str = "legendre", radius_scale: float = 1.0) -> float:
    """log of the normalization  int exp(-2 W(x)/eps) dx."""
    res = gibbs_quadrature(w, epsilon, kmax=0, tol=tol, rule=rule,
                           radius_scale=radius_scale)
    return math.log(res.shifted[0]) - 2.0 * res.wmin / epsilon


def gibbs_moments(w, epsilon: float, kmax: int, tol: float = DEFAULT_TOL,
                  rule: str = "legendre", radius_scale: float = 1.0) -> np.ndarray:
    """Normalized moments [m_1, ..., m_kmax] of the Gibbs density of W."""
    res = gibbs_quadrature(w, epsilon, kmax=kmax, tol=tol, rule=rule,
                           radius_scale=radius_scale)
    return res.ratios[1:].copy()


def gibbs_moment(w, epsilon: float, k: int, tol: float = DEFAULT_TOL,
                 rule: str = "legendre", radius_scale: float = 1.0) -> float:
    """Normalized moment  int x^k dGibbs(W, eps)."""
    if k == 0:
        return 1.0
    return float(gibbs_moments(w, epsilon, k, tol=tol, rule=rule,
                               radius_scale=radius_scale)[k - 1])


def gibbs_expectation(w, epsilon: float, f, tol: float = DEFAULT_TOL,
                      rule: str = "legendre") -> float:
    """Expectation of a polynomial f under the Gibbs density of W."""
    fc = polys.coeffs_trimmed(f)
    if len(fc) == 1:
        return float(fc[0])
    moments = gibbs_moments(w, epsilon, len(fc) - 1, tol=tol, rule=rule)
    return float(fc[0] + np.dot(fc[1:], moments))


@dataclass(frozen=True, eq=False)
class GibbsDensity:
    """Normalized density exp(-2 W(x)/eps - log_norm)."""

    w: Polynomial
    epsilon: float
    log_norm: float

    @classmethod
    def from_potential(cls, w, epsilon: float, tol: float = DEFAULT_TOL) -> "GibbsDensity":
        p = _require_confining(w)
        return cls(w=p, epsilon=float(epsilon),
                   log_norm=gibbs_log_norm(p, epsilon, tol=tol))

    def logpdf(self, x):
        return -2.0 * self.w(np.asarray(x, dtype=float)) / self.epsilon - self.log_norm

    def pdf(self, x):
        return np.exp(self.logpdf(x))

    def moment(self, k: int, tol: float = DEFAULT_TOL) -> float:
        return gibbs_moment(self.w, self.epsilon, k, tol=tol)

    def moments(self, kmax: int, tol: float = DEFAULT_TOL) -> np.ndarray:
        return gibbs_moments(self.w, self.epsilon, kmax, tol=tol)

    def norm_residual(self, tol: float = DEFAULT_TOL) -> float:
        """|int pdf - 1|, recomputed from scratch as a self-check."""
        return abs(math.exp(gibbs_log_norm(self.w, self.epsilon, tol=tol) - self.log_norm) - 1.0)

    def support_bounds(self) -> tuple[float, float]:
        _, wmin = potential_minimum(self.w)
        return _truncation_bounds(self.w, wmin, self.epsilon, 0, 1.0)

    def cdf(self, x) -> np.ndarray:
        """Cumulative distribution on a dense grid (for empirical comparisons)."""
        lo, hi = self.support_bounds()
        grid = np.linspace(lo, hi, 1 << 15)
        pdf = self.pdf(grid)
        steps = np.diff(grid) * 0.5 * (pdf[1:] + pdf[:-1])
        cum = np.concatenate([[0.0], np.cumsum(steps)])
        cum /= cum[-1]
        return np.interp(np.asarray(x, dtype=float), grid, cum, left=0.0, right=1.0)
