import numpy as np
import pytest

from selfstab import LinearCaseConfig, build_model

# reference quartic double well x^4/4 - x^2/2 (wells at +-1, theta = 1)
QUARTIC_V = [0.0, 0.0, -0.5, 0.0, 0.25]
# same shape scaled by 10 (steep wells, theta = 10)
STEEP_V = [0.0, 0.0, -5.0, 0.0, 2.5]
QUAD_F = [0.0, 0.0, 0.5]                  # x^2/2, alpha = 1
QUARTIC_F = [0.0, 0.0, 0.5, 0.0, 0.25]    # x^4/4 + x^2/2, alpha = 1, n = 2


@pytest.fixture(scope="session")
def quartic_spec():
    return build_model(QUARTIC_V, QUAD_F)


@pytest.fixture(scope="session")
def steep_spec():
    return build_model(STEEP_V, QUARTIC_F)


@pytest.fixture(scope="session")
def quartic_quartic_spec():
    return build_model(QUARTIC_V, QUARTIC_F)


@pytest.fixture
def linear_cfg(quartic_spec):
    return LinearCaseConfig(spec=quartic_spec, epsilon=0.25)


def riemann_moment(w_coeffs, epsilon, k, lo=-6.0, hi=6.0, panels=1_000_000):
    """Midpoint-rule oracle for Gibbs moments, independent of the library."""
    w = np.polynomial.Polynomial(np.asarray(w_coeffs, dtype=float))
    x = lo + (np.arange(panels) + 0.5) * (hi - lo) / panels
    vals = w(x)
    weight = np.exp(-2.0 * (vals - vals.min()) / epsilon)
    return float(np.sum(x**k * weight) / np.sum(weight))


def random_valid_spec(rng):
    """Random double well lam*(x^4/4 - (a^2/2) x^2) and convex even F."""
    lam = float(rng.uniform(0.5, 5.0))
    a = float(rng.uniform(0.5, 2.0))
    V = [0.0, 0.0, -0.5 * lam * a**2, 0.0, 0.25 * lam]
    n = int(rng.integers(1, 5))   # deg F in {2, 4, 6, 8}
    coeffs = [0.0]
    for _ in range(n):
        coeffs += [0.0, float(rng.uniform(0.0, 2.0))]
    coeffs[2 * n] = max(coeffs[2 * n], 0.1)   # keep deg F = 2n
    return build_model(V, coeffs)
