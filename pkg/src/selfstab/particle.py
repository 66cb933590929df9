"""Euler-Maruyama simulation of the mean-field interacting particle system.

Each of N particles feels the environment gradient V', an attraction
(1/N) sum_j F'(X_i - X_j) toward the ensemble, and independent noise of
intensity sqrt(eps).  The pairwise attraction is never formed explicitly:
for polynomial F' it re-expands through the empirical moments of the
ensemble, which costs O(N deg F) per step and is exact (a Taylor identity,
checked against the O(N^2) sum in the tests).

Reproducibility: the counter-based Philox generator is seeded once and one
block of N standard normals is consumed per time step, in step order, so a
rerun with the same seed is bit-identical in this sequential reference
implementation.  (Any parallel variant would need one Philox stream per
particle to keep that property; only the sequential path is provided.)

Metastability note: at small eps a finite ensemble started inside one well
stays there for exponentially long times, so initializing all particles at
+-a is the intended way to sample an asymmetric measure; runs are not
expected to hop wells.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from math import factorial
from typing import Optional, Sequence, Union

import numpy as np
from numpy.polynomial import Polynomial
from numpy.polynomial import polynomial as npoly

from . import polys
from .errors import Blowup, InvalidConfig
from .model import ModelSpec
from .quadrature import GibbsDensity

#: particles beyond this magnitude abort the run (time step too large)
BLOWUP_LIMIT = 1e6


@dataclass(frozen=True)
class SimConfig:
    """Simulation parameters.

    Either ``spec`` (validated model) or raw ``V``/``F`` polynomials
    (unchecked test mode, e.g. a single-well potential with no interaction)
    must be provided.  ``x0`` is one common start or one value per particle.
    """

    N: int
    epsilon: float
    T: float
    x0: Union[float, Sequence[float]] = 0.0
    seed: int = 0
    dt: Optional[float] = None
    burn_in: Optional[float] = None
    spec: Optional[ModelSpec] = None
    V: object = None
    F: object = None
    record_every: int = 1
    n_batches: int = 30
    hist_bins: int = 101

    def __post_init__(self):
        if self.N < 1:
            raise InvalidConfig("need at least one particle")
        if self.epsilon <= 0.0:
            raise InvalidConfig("epsilon must be positive")
        if self.resolved_dt <= 0.0:
            raise InvalidConfig("dt must be positive")
        if not (0.0 <= self.resolved_burn_in < self.T):
            raise InvalidConfig("need T > burn_in >= 0")
        if self.spec is None and self.V is None:
            raise InvalidConfig("provide a model spec or a raw potential")
        if self.record_every < 1:
            raise InvalidConfig("record_every must be >= 1")

    @property
    def resolved_dt(self) -> float:
        # explicit scheme: keep the step well under the quartic drift scale
        return self.dt if self.dt is not None else min(0.01, 0.1 * self.epsilon)

    @property
    def resolved_burn_in(self) -> float:
        return self.burn_in if self.burn_in is not None else self.T / 5.0

    def potentials(self) -> tuple[Polynomial, Polynomial]:
        if self.spec is not None:
            return self.spec.V.poly, self.spec.F.poly
        v = polys.as_poly(self.V)
        f = polys.as_poly(self.F) if self.F is not None else Polynomial([0.0])
        return v, f

    def moment_orders(self) -> int:
        """How many empirical moments to track (at least 2, for variances)."""
        if self.spec is not None:
            return max(2, 2 * self.spec.n - 1)
        _, f = self.potentials()
        return max(2, polys.degree(f) - 1 if polys.degree(f) >= 2 else 1)


@dataclass(frozen=True)
class SimOutput:
    times: np.ndarray               # recorded times, every frame
    moment_series: np.ndarray       # (frames, n_mom) ensemble moments 1..n_mom
    stationary_moments: np.ndarray  # time averages over t >= burn_in
    stderr: np.ndarray              # batch-means errors of the same averages
    histogram_edges: np.ndarray
    histogram_counts: np.ndarray    # accumulated over stationary frames
    histogram_frames: int
    meta: dict = field(default_factory=dict)


def interaction_drift_coeffs(dF: Polynomial, moments: np.ndarray) -> np.ndarray:
    """Coefficients of x -> mean_j F'(x - X_j) from empirical moments.

    Taylor identity: F'(x - y) = sum_r F'^(r)(x) (-y)^r / r!, so averaging
    over the ensemble replaces y^r by the empirical moment M_r.
    """
    d = polys.degree(dF)
    out = np.zeros(d + 1)
    for r in range(d + 1):
        c = dF.deriv(r).coef if r > 0 else dF.coef
        out[: len(c)] += ((-1.0) ** r * moments[r] / factorial(r)) * c
    return out


def pairwise_drift(dF: Polynomial, x: np.ndarray) -> np.ndarray:
    """Naive O(N^2) attraction term, used to cross-check the moment route."""
    return np.array([np.mean(dF(xi - x)) for xi in x])


def simulate(cfg: SimConfig, noise: Optional[np.ndarray] = None) -> SimOutput:
    """Run the explicit scheme and collect moment series plus a histogram.

    ``noise`` overrides the generator with a prescribed (steps, N) array of
    standard normals (test hook for exact symmetry checks).
    """
    v, f = cfg.potentials()
    dv = v.deriv()
    df = f.deriv()
    df_deg = polys.degree(df)
    has_interaction = not (df_deg == 0 and abs(df.coef[0]) == 0.0)

    dt = cfg.resolved_dt
    burn_in = cfg.resolved_burn_in
    steps = int(round(cfg.T / dt))
    n_mom = cfg.moment_orders()

    x = np.full(cfg.N, float(cfg.x0)) if np.isscalar(cfg.x0) \
        else np.asarray(cfg.x0, dtype=float).copy()
    if x.shape != (cfg.N,):
        raise InvalidConfig(f"x0 must be scalar or length {cfg.N}")

    rng = np.random.Generator(np.random.Philox(cfg.seed))
    if noise is not None and noise.shape != (steps, cfg.N):
        raise InvalidConfig(f"noise must have shape {(steps, cfg.N)}")
    sig = math.sqrt(cfg.epsilon * dt)

    times = []
    series = []
    hist_edges = None
    hist_counts = None
    hist_frames = 0

    def record(t, xcur):
        nonlocal hist_edges, hist_counts, hist_frames
        times.append(t)
        series.append([np.mean(xcur**k) for k in range(1, n_mom + 1)])
        if t >= burn_in:
            if hist_edges is None:
                spread = 4.0 * max(float(np.std(xcur)), 1e-3)
                hist_edges = np.linspace(float(np.min(xcur)) - spread,
                                         float(np.max(xcur)) + spread,
                                         cfg.hist_bins + 1)
                hist_counts = np.zeros(cfg.hist_bins, dtype=np.int64)
            clipped = np.clip(xcur, hist_edges[0], hist_edges[-1])
            hist_counts += np.histogram(clipped, bins=hist_edges)[0]
            hist_frames += 1

    record(0.0, x)
    for step in range(steps):
        drift = dv(x)
        if has_interaction:
            mom = np.empty(df_deg + 1)
            mom[0] = 1.0
            xp = np.ones_like(x)
            for r in range(1, df_deg + 1):
                xp = xp * x
                mom[r] = np.mean(xp)
            drift = drift + npoly.polyval(x, interaction_drift_coeffs(df, mom))
        xi = noise[step] if noise is not None else rng.standard_normal(cfg.N)
        x = x - drift * dt + sig * xi
        if np.max(np.abs(x)) > BLOWUP_LIMIT:
            raise Blowup(f"particle escaped past {BLOWUP_LIMIT:g} at t={step * dt:.3f}; "
                         "reduce dt")
        if (step + 1) % cfg.record_every == 0:
            record((step + 1) * dt, x)

    times = np.asarray(times)
    series = np.asarray(series)
    stat = times >= burn_in
    stat_series = series[stat]
    means = stat_series.mean(axis=0)
    stderr = _batch_means_stderr(stat_series, cfg.n_batches)
    return SimOutput(times=times, moment_series=series, stationary_moments=means,
                     stderr=stderr, histogram_edges=hist_edges,
                     histogram_counts=hist_counts, histogram_frames=hist_frames,
                     meta={"dt": dt, "burn_in": burn_in, "steps": steps,
                           "seed": cfg.seed, "N": cfg.N, "epsilon": cfg.epsilon})


def _batch_means_stderr(stat_series: np.ndarray, n_batches: int) -> np.ndarray:
    frames, n_mom = stat_series.shape
    nb = max(2, min(n_batches, frames))
    length = frames // nb
    trimmed = stat_series[frames - nb * length:]
    batches = trimmed.reshape(nb, length, n_mom).mean(axis=1)
    return batches.std(axis=0, ddof=1) / math.sqrt(nb)


@dataclass(frozen=True)
class ComparisonReport:
    moment_distances: np.ndarray
    sup_cdf_distance: float


def empirical_vs_density(out: SimOutput, density: GibbsDensity) -> ComparisonReport:
    """Distances between stationary simulation statistics and a solver density."""
    n_mom = len(out.stationary_moments)
    exact = density.moments(n_mom)
    dist = np.abs(out.stationary_moments - exact)
    cum = np.concatenate([[0.0], np.cumsum(out.histogram_counts)]).astype(float)
    cum /= cum[-1]
    sup = float(np.max(np.abs(cum - density.cdf(out.histogram_edges))))
    return ComparisonReport(moment_distances=dist, sup_cdf_distance=sup)
