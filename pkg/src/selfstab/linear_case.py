"""Quadratic-interaction solver: self-consistent means and their count.

With F'(x) = alpha x the whole fixed-point problem collapses onto the first
moment m: a candidate mean produces the tilted potential
W_m = V + alpha x^2/2 - alpha m x, and m parameterizes an invariant measure
exactly when the Gibbs mean of W_m reproduces m.  This module evaluates the
scalar map, its zero set, the small-noise limit map built from the
minimizer of W_m, and the fully closed-form curve for the reference quartic
double well.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial

from . import polys
from .errors import DegenerateMinimum, WrongPotential
from .laplace import global_minimizer
from .model import ModelSpec
from .quadrature import DEFAULT_TOL, GibbsDensity, gibbs_quadrature

#: lower end of the positive root search grid; keeps the m = 0 root out
GRID_MIN = 1e-4
#: |chi| dips below this without a sign change -> near-root diagnostic
NEAR_ROOT_TOL = 1e-8


@dataclass(frozen=True)
class LinearCaseConfig:
    """Solver configuration; F must be exactly quadratic with alpha > 0."""

    spec: ModelSpec
    epsilon: float
    m_grid: int = 400
    tol_zero: float = 1e-10
    quad_tol: float = DEFAULT_TOL

    def __post_init__(self):
        if self.spec.n != 1:
            raise ValueError("linear case needs a quadratic interaction (deg F = 2)")
        if self.spec.alpha <= 0.0:
            raise ValueError("linear case needs alpha > 0")
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be positive")


@dataclass(frozen=True)
class InvariantMeanSet:
    """All located fixed points of the mean map, symmetric about 0."""

    means: tuple[float, ...]
    symmetric_included: bool
    stability: tuple[str, ...] = ()      # aligned with means; sign of chi'
    warnings: tuple[str, ...] = ()
    near_roots: tuple[float, ...] = ()


def tilted_potential(cfg: LinearCaseConfig, m: float) -> Polynomial:
    """W_m = V + alpha x^2 / 2 - alpha m x."""
    alpha = cfg.spec.alpha
    return cfg.spec.V.poly + Polynomial([0.0, -alpha * m, 0.5 * alpha])


def psi(cfg: LinearCaseConfig, m: float) -> float:
    """Gibbs mean of the tilted potential; fixed points are invariant means."""
    res = gibbs_quadrature(tilted_potential(cfg, m), cfg.epsilon, kmax=1,
                           tol=cfg.quad_tol)
    return float(res.ratios[1])


def chi(cfg: LinearCaseConfig, m: float) -> float:
    return psi(cfg, m) - m


def chi0(cfg: LinearCaseConfig, m: float) -> float:
    """Zero-noise limit map x_m - m, with x_m the minimizer of W_m (m > 0)."""
    if m <= 0.0:
        raise ValueError("chi0 is defined for m > 0 (odd extension elsewhere)")
    rep = global_minimizer(tilted_potential(cfg, m))
    if rep.degenerate:
        raise DegenerateMinimum(rep.reason)
    return rep.x_star - m


def chi_prime_from_potential(w, epsilon: float, alpha: float,
                             quad_tol: float = DEFAULT_TOL) -> float:
    """Variance identity on an arbitrary tilted potential (test hook)."""
    res = gibbs_quadrature(w, epsilon, kmax=2, tol=quad_tol)
    var = float(res.ratios[2] - res.ratios[1] ** 2)
    return 2.0 * alpha / epsilon * var - 1.0


def chi_prime(cfg: LinearCaseConfig, m: float) -> float:
    """Derivative of chi through the variance identity.

    chi'(m) = (2 alpha / eps) Var(Gibbs(W_m)) - 1; never computed by
    differencing psi.
    """
    return chi_prime_from_potential(tilted_potential(cfg, m), cfg.epsilon,
                                    cfg.spec.alpha, cfg.quad_tol)


def _bisect(f, lo: float, hi: float, flo: float, tol: float) -> float:
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo <= tol:
            return mid
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm > 0.0) == (flo > 0.0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def find_invariant_means(cfg: LinearCaseConfig) -> InvariantMeanSet:
    """Scan chi on (0, a+1], refine every sign change, mirror, and add 0.

    Grid scan brackets each sign change of chi, bisection refines it to
    tol_zero, and the returned set is {0} union {+-roots}.  Each mean
    carries the sign of chi' there (negative = attracting for the scalar
    self-consistency iteration; the label says nothing about the dynamics
    of the underlying measures).  Grazing near-zeros are reported, not
    counted, and more than one positive root raises a warning flag.
    """
    a = cfg.spec.a
    grid = np.linspace(GRID_MIN, a + 1.0, cfg.m_grid)
    vals = np.array([chi(cfg, m) for m in grid])

    roots: list[float] = []
    near: list[float] = []
    for i in range(len(grid) - 1):
        if vals[i] == 0.0:
            roots.append(float(grid[i]))
        elif vals[i] * vals[i + 1] < 0.0:
            roots.append(_bisect(lambda m: chi(cfg, m), float(grid[i]),
                                 float(grid[i + 1]), float(vals[i]), cfg.tol_zero))
    for i in range(1, len(grid) - 1):
        dips = abs(vals[i]) < NEAR_ROOT_TOL
        local_min = abs(vals[i]) <= abs(vals[i - 1]) and abs(vals[i]) <= abs(vals[i + 1])
        no_cross = vals[i - 1] * vals[i + 1] > 0.0
        if dips and local_min and no_cross:
            near.append(float(grid[i]))

    warnings = []
    if len(roots) > 1:
        warnings.append(f"found {len(roots)} positive roots; expected at most one")

    means = sorted([-r for r in roots] + [0.0] + roots)
    stability = tuple("attracting" if chi_prime(cfg, m) < 0.0 else "repelling"
                      for m in means)
    return InvariantMeanSet(means=tuple(means), symmetric_included=True,
                            stability=stability, warnings=tuple(warnings),
                            near_roots=tuple(near))


@dataclass(frozen=True)
class FirstOrderMean:
    """First-order small-noise location of the positive invariant mean."""

    tau0: float
    a: float

    def predict(self, epsilon: float) -> float:
        return self.a - self.tau0 * epsilon


def first_order_mean(spec: ModelSpec) -> FirstOrderMean:
    """tau0 = V'''(a) / (4 V''(a) (alpha + V''(a))); mean ~ a - tau0 eps."""
    if spec.n != 1:
        raise ValueError("first_order_mean applies to the quadratic interaction")
    a = spec.a
    v2 = float(spec.V.deriv(2)(a))
    v3 = float(spec.V.deriv(3)(a))
    return FirstOrderMean(tau0=v3 / (4.0 * v2 * (spec.alpha + v2)), a=a)


REFERENCE_QUARTIC = (0.0, 0.0, -0.5, 0.0, 0.25)  # x^4/4 - x^2/2


@dataclass(frozen=True)
class ClosedFormPoint:
    chi0_value: float
    branch: str          # "cardano" or "trig"
    delta: float         # cubic discriminant at m
    m0: float            # branch switch point (0 when alpha >= 1)
    m_c: float           # location of the maximum of chi0 on m > 0
    c: float             # positive zero of V''


def example_closed_forms(alpha: float, m: float, V=None) -> ClosedFormPoint:
    """Closed-form chi0 for V = x^4/4 - x^2/2 (minimizer from the cubic).

    The minimizer solves X^3 + (alpha - 1) X = alpha m; its discriminant
    delta = alpha^2 m^2 / 4 + (alpha - 1)^3 / 27 selects the branch:
    delta >= 0 gives the single real root in Cardano form, delta < 0 (only
    possible for alpha < 1 and |m| < m0) the trigonometric form.  The value
    is computed at |m| and odd-extended, which is also how the sub-branch
    of the trigonometric form is pinned down.
    """
    if alpha <= 0.0:
        raise ValueError("alpha must be positive")
    if m == 0.0:
        raise ValueError("branch formulas need m != 0; chi0(0) = 0 by oddness")
    if V is not None:
        coeffs = polys.coeffs_trimmed(V)
        ref = np.asarray(REFERENCE_QUARTIC)
        if len(coeffs) != len(ref) or not np.allclose(coeffs, ref, rtol=0.0, atol=1e-14):
            raise WrongPotential("closed forms cover only V = x^4/4 - x^2/2")

    c = 1.0 / math.sqrt(3.0)
    m_c = (3.0 * alpha - 2.0) / (3.0 * math.sqrt(3.0) * alpha)
    m0 = 0.0 if alpha >= 1.0 else 2.0 * (1.0 - alpha) ** 1.5 / (3.0 * alpha * math.sqrt(3.0))

    q = abs(m)
    delta = alpha**2 * q**2 / 4.0 + (alpha - 1.0) ** 3 / 27.0
    if delta >= 0.0:
        root = math.sqrt(delta)
        x = np.cbrt(alpha * q / 2.0 + root) + np.cbrt(alpha * q / 2.0 - root)
        branch = "cardano"
    else:
        arg = (alpha * q / 2.0) * math.sqrt(27.0 / (1.0 - alpha) ** 3)
        x = 2.0 * math.sqrt((1.0 - alpha) / 3.0) * math.cos(math.acos(min(arg, 1.0)) / 3.0)
        branch = "trig"
    value = (x - q) if m > 0 else -(x - q)
    return ClosedFormPoint(chi0_value=float(value), branch=branch, delta=float(delta),
                           m0=float(m0), m_c=float(m_c), c=float(c))


@dataclass(frozen=True)
class DensityReport:
    density: GibbsDensity
    residual: float      # |Gibbs mean of W_m - m|, the fixed-point defect


def invariant_density(cfg: LinearCaseConfig, m: float) -> DensityReport:
    """Gibbs density of W_m together with its self-consistency residual."""
    w = tilted_potential(cfg, m)
    res = gibbs_quadrature(w, cfg.epsilon, kmax=1, tol=cfg.quad_tol)
    log_norm = math.log(res.shifted[0]) - 2.0 * res.wmin / cfg.epsilon
    density = GibbsDensity(w=w, epsilon=cfg.epsilon, log_norm=log_norm)
    return DensityReport(density=density, residual=abs(float(res.ratios[1]) - m))
