"""Polynomial helpers: coercion, exact calculus, real-root isolation.

Everything downstream manipulates ``numpy.polynomial.Polynomial`` objects.
Roots come from the companion matrix and are grouped into clusters so that
a numerically split multiple root is still recognized as one root with a
multiplicity.
"""
from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np
from numpy.polynomial import Polynomial

#: separation below which companion-matrix roots are treated as one root
ROOT_CLUSTER_TOL = 1e-10
#: coarser tolerance used when deciding root multiplicities (sign tests)
MULTIPLICITY_TOL = 1e-8


def as_poly(p) -> Polynomial:
    """Coerce a coefficient sequence / Polynomial / wrapper with ``.poly``."""
    if isinstance(p, Polynomial):
        return p
    inner = getattr(p, "poly", None)
    if isinstance(inner, Polynomial):
        return inner
    return Polynomial(np.asarray(p, dtype=float))


def coeffs_trimmed(p) -> np.ndarray:
    """Coefficient array with trailing (near-)zero entries removed."""
    c = as_poly(p).coef.astype(float)
    scale = np.max(np.abs(c)) if c.size else 0.0
    if scale == 0.0:
        return np.zeros(1)
    keep = len(c)
    while keep > 1 and abs(c[keep - 1]) <= 1e-14 * scale:
        keep -= 1
    return c[:keep]


def degree(p) -> int:
    return len(coeffs_trimmed(p)) - 1


def leading_coeff(p) -> float:
    return float(coeffs_trimmed(p)[-1])


def deriv(p, k: int = 1) -> Polynomial:
    return as_poly(p).deriv(k) if k > 0 else as_poly(p)


def deriv_at(p, x: float, k: int = 1) -> float:
    return float(deriv(p, k)(x))


def shifted(p, c: float) -> Polynomial:
    """Return the polynomial x -> p(x + c), by exact composition."""
    return as_poly(p)(Polynomial([c, 1.0]))


def poly_scale(p) -> float:
    """Magnitude used to make root/value tolerances relative."""
    c = coeffs_trimmed(p)
    return max(float(np.max(np.abs(c))), 1e-300)


def real_roots(p, cluster_tol: float = ROOT_CLUSTER_TOL) -> list[tuple[float, int]]:
    """Real roots of ``p`` as ``(location, multiplicity)`` pairs, ascending.

    All companion-matrix roots are clustered by mutual distance
    ``cluster_tol * (1 + max |root|)``; a cluster whose centroid sits on the
    real axis (within the same tolerance) counts as a real root whose
    multiplicity is the cluster size.  This keeps a double root that the
    eigensolver split into a tight conjugate pair from being lost, while a
    genuinely complex pair (e.g. +-i) never collapses onto the axis.
    """
    c = coeffs_trimmed(p)
    if len(c) == 1:
        return []
    roots = Polynomial(c).roots()
    if roots.size == 0:
        return []
    scale = 1.0 + float(np.max(np.abs(roots)))
    tol = cluster_tol * scale

    order = np.argsort(roots.real, kind="stable")
    roots = roots[order]
    # union-find over pairwise proximity (degrees are tiny here)
    parent = list(range(len(roots)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(roots)):
        for j in range(i + 1, len(roots)):
            if roots[j].real - roots[i].real > tol:
                break
            if abs(roots[i] - roots[j]) <= tol:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[rj] = ri

    clusters: dict[int, list[complex]] = {}
    for i in range(len(roots)):
        clusters.setdefault(find(i), []).append(roots[i])

    out = []
    poly = Polynomial(c)
    dpoly = poly.deriv()
    for members in clusters.values():
        centroid = complex(np.mean(members))
        if abs(centroid.imag) > tol:
            continue
        x = centroid.real
        if len(members) == 1:
            # polish simple roots with a few Newton steps
            for _ in range(3):
                d = dpoly(x)
                if abs(d) < 1e-300:
                    break
                step = poly(x) / d
                if not np.isfinite(step):
                    break
                x -= step
        out.append((float(x), len(members)))
    out.sort(key=lambda t: t[0])
    return out


def distinct_real_roots(p, cluster_tol: float = ROOT_CLUSTER_TOL) -> list[float]:
    return [x for x, _ in real_roots(p, cluster_tol)]


def nonneg_on_line(p, cluster_tol: float = MULTIPLICITY_TOL) -> bool:
    """Decide p(x) >= 0 for all real x.

    Exact for polynomials: requires even degree, positive leading
    coefficient, and even multiplicity at every real root.
    """
    c = coeffs_trimmed(p)
    if len(c) == 1:
        return c[0] >= -1e-14
    if (len(c) - 1) % 2 != 0 or c[-1] <= 0.0:
        return False
    return all(mult % 2 == 0 for _, mult in real_roots(c, cluster_tol))


def nonneg_on_halfline(p, cluster_tol: float = MULTIPLICITY_TOL) -> bool:
    """Decide p(x) >= 0 for all x >= 0.

    Sign changes on (0, inf) happen only at odd-multiplicity roots there,
    and the sign at +inf is the leading coefficient's; a root at 0 itself is
    harmless either way.
    """
    c = coeffs_trimmed(p)
    if len(c) == 1:
        return c[0] >= -1e-14
    if c[-1] <= 0.0:
        return False
    roots = real_roots(c, cluster_tol)
    scale = 1.0 + max((abs(x) for x, _ in roots), default=0.0)
    return all(mult % 2 == 0 for x, mult in roots if x > cluster_tol * scale)


def is_even_coeffs(coeffs: Sequence[float]) -> bool:
    c = np.asarray(coeffs, dtype=float)
    return bool(np.all(c[1::2] == 0.0))


def poly_from_even(coeffs: Iterable[float]) -> Polynomial:
    return Polynomial(np.asarray(list(coeffs), dtype=float))
