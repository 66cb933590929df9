"""Model layer: even polynomials, structural validation, derived constants.

The environment potential V must be an even double-well polynomial (two
symmetric wells at +-a, barrier at 0, quartic-or-faster growth) and the
interaction F an even convex polynomial whose gradient is convex on the
positive half line.  Validation certifies these shape assumptions instead
of assuming them; all downstream solvers require a validated ``ModelSpec``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from numpy.polynomial import Polynomial

from . import polys
from .errors import InvalidModel

PolyLike = Union["EvenPolynomial", Polynomial, Sequence[float]]


@dataclass(frozen=True)
class EvenPolynomial:
    """Even polynomial p(x) = sum c_i x^i with exact odd coefficients 0.

    Derivatives of any order are exact (coefficient arithmetic); instances
    are immutable and safe to share across threads.
    """

    coeffs: tuple[float, ...]

    def __init__(self, coeffs: Sequence[float]):
        c = tuple(float(v) for v in coeffs)
        if any(c[i] != 0.0 for i in range(1, len(c), 2)):
            raise ValueError("odd-index coefficients must be exactly zero")
        trimmed = polys.coeffs_trimmed(np.asarray(c))
        d = len(trimmed) - 1
        if d < 2 or d % 2 != 0:
            raise ValueError(f"degree must be even and >= 2, got {d}")
        object.__setattr__(self, "coeffs", c)

    @property
    def poly(self) -> Polynomial:
        return Polynomial(np.asarray(self.coeffs))

    @property
    def degree(self) -> int:
        return polys.degree(self.poly)

    def deriv(self, k: int = 1) -> Polynomial:
        return polys.deriv(self.poly, k)

    def __call__(self, x):
        return self.poly(x)


@dataclass(frozen=True)
class PotentialReport:
    a: float
    theta: float
    ok: bool
    violations: tuple[str, ...]


@dataclass(frozen=True)
class InteractionReport:
    alpha: float
    n: int
    ok: bool
    violations: tuple[str, ...]


@dataclass(frozen=True)
class ConditionReport:
    lhs: float
    rhs: float
    holds: bool


def _coerce_even(p: PolyLike, what: str):
    """Return (EvenPolynomial | None, violations) without raising."""
    if isinstance(p, EvenPolynomial):
        return p, []
    coeffs = p.coef if isinstance(p, Polynomial) else np.asarray(p, dtype=float)
    try:
        return EvenPolynomial(list(coeffs)), []
    except ValueError as exc:
        return None, [f"{what}: {exc}"]


def validate_potential(V: PolyLike) -> PotentialReport:
    """Certify the double-well shape of V and extract a and theta.

    ok requires: V(0) = 0, even degree >= 4 with positive leading
    coefficient, V' with exactly the three real roots {-a, 0, a}, well
    curvature V''(a) > 0 and barrier curvature V''(0) < 0.  theta is the
    exact maximum of -V'' (attained at a critical point of V'').
    """
    even, violations = _coerce_even(V, "potential")
    if even is None:
        return PotentialReport(a=np.nan, theta=np.nan, ok=False, violations=tuple(violations))

    p = even.poly
    if even.coeffs[0] != 0.0:
        violations.append("potential: constant term must be zero")
    if polys.degree(p) < 4:
        violations.append("potential: degree must be >= 4 for quartic growth")
    if polys.leading_coeff(p) <= 0.0:
        violations.append("potential: leading coefficient must be positive")

    d1 = p.deriv()
    d2 = p.deriv(2)
    roots = polys.distinct_real_roots(d1)
    a = np.nan
    scale = 1.0 + max((abs(r) for r in roots), default=0.0)
    if len(roots) != 3:
        violations.append(
            f"potential: gradient must have exactly three real roots, found {len(roots)}"
        )
    else:
        neg, mid, pos = roots
        if abs(mid) > 1e-9 * scale or pos <= 0.0 or abs(neg + pos) > 1e-8 * scale:
            violations.append("potential: gradient roots must be {-a, 0, a} with a > 0")
        else:
            a = pos
            if d2(a) <= 0.0:
                violations.append("potential: curvature at the well bottom must be positive")
            if d2(0.0) >= 0.0:
                violations.append("potential: curvature at the barrier top must be negative")

    theta = np.nan
    if not violations:
        crits = polys.distinct_real_roots(p.deriv(3))
        theta = max((-float(d2(x)) for x in crits), default=-float(d2(0.0)))
    return PotentialReport(a=float(a), theta=float(theta), ok=not violations,
                           violations=tuple(violations))


def validate_interaction(F: PolyLike) -> InteractionReport:
    """Certify that F is an even convex polynomial attraction.

    ok requires: F even with F(0) = 0, F'' >= 0 on the whole line and
    F''' >= 0 on the positive half line (decided through root
    multiplicities, exact for polynomials).  Returns alpha = F''(0) and
    n = deg(F)/2.
    """
    even, violations = _coerce_even(F, "interaction")
    if even is None:
        return InteractionReport(alpha=np.nan, n=0, ok=False, violations=tuple(violations))

    p = even.poly
    if even.coeffs[0] != 0.0:
        violations.append("interaction: constant term must be zero")
    if not polys.nonneg_on_line(p.deriv(2)):
        violations.append("interaction: second derivative must be nonnegative everywhere")
    if not polys.nonneg_on_halfline(p.deriv(3)):
        violations.append("interaction: third derivative must be nonnegative on x >= 0")
    alpha = float(p.deriv(2)(0.0))
    if alpha < 0.0:
        violations.append("interaction: curvature at zero must be nonnegative")
    n = polys.degree(p) // 2
    return InteractionReport(alpha=alpha, n=n, ok=not violations, violations=tuple(violations))


@dataclass(frozen=True)
class ModelSpec:
    """Validated (V, F) pair plus the derived constants a, theta, alpha, n.

    Note on moments: every candidate measure built from a polynomial
    effective potential with positive leading coefficient has all moments
    finite, so no separate initial-moment condition is tracked at runtime.
    """

    V: EvenPolynomial
    F: EvenPolynomial
    a: float
    theta: float
    alpha: float
    n: int
    potential_report: PotentialReport = field(repr=False, compare=False, default=None)
    interaction_report: InteractionReport = field(repr=False, compare=False, default=None)


def build_model(V: PolyLike, F: PolyLike) -> ModelSpec:
    """Validate V and F and assemble a ModelSpec; raises InvalidModel."""
    pr = validate_potential(V)
    ir = validate_interaction(F)
    violations = list(pr.violations) + list(ir.violations)
    if violations:
        raise InvalidModel(violations)
    V_even = V if isinstance(V, EvenPolynomial) else _coerce_even(V, "potential")[0]
    F_even = F if isinstance(F, EvenPolynomial) else _coerce_even(F, "interaction")[0]
    return ModelSpec(V=V_even, F=F_even, a=pr.a, theta=pr.theta, alpha=ir.alpha, n=ir.n,
                     potential_report=pr, interaction_report=ir)


def model_from_config(doc: dict) -> ModelSpec:
    """Build a ModelSpec from a parsed config document.

    Expected layout: ``{"V": {"coeffs": [c0, ..., cd]}, "F": {"coeffs": [...]}}``
    with decimal coefficients and zero odd entries.
    """
    try:
        v_coeffs = doc["V"]["coeffs"]
        f_coeffs = doc["F"]["coeffs"]
    except (KeyError, TypeError) as exc:
        raise KeyError("config must provide V.coeffs and F.coeffs") from exc
    return build_model(list(v_coeffs), list(f_coeffs))


def outlying_condition(spec: ModelSpec) -> ConditionReport:
    """Sufficient condition for asymmetric measures concentrated near +-a.

    lhs = sum_{p=0}^{2n-2} |F^(p+2)(a)| a^p / p!, rhs = alpha + V''(a);
    holds when lhs < rhs.  For a purely quadratic interaction lhs = alpha
    exactly, so the condition reduces to V''(a) > 0.
    """
    from math import factorial

    a = spec.a
    lhs = 0.0
    for p in range(0, 2 * spec.n - 1):
        lhs += abs(float(spec.F.deriv(p + 2)(a))) * a**p / factorial(p)
    rhs = spec.alpha + float(spec.V.deriv(2)(a))
    return ConditionReport(lhs=float(lhs), rhs=float(rhs), holds=bool(lhs < rhs))
