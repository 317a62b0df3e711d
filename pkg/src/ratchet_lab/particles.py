"""Particle-level Monte Carlo of the two-state switching diffusion.

Attached particles follow ``dX = -kappa psi'(X) dt + sqrt(2 sigma) dW``,
detached ones ``dX = sqrt(2 varsigma) dW``; Euler-Maruyama steps, reflection
at 0 and 1, and a Bernoulli switch per step with probability ``eta(X) dt``
(attached -> detached) or ``nu(X) dt`` (detached -> attached).

Particles are processed in fixed blocks.  Block ``b`` draws from
``PCG64(SeedSequence(seed, spawn_key=(b,)))``, so results do not depend on
how blocks are distributed over workers.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numba
import numpy as np

from .model import ModelError, RatchetParams, well_integrals
from .stationary import DensityPair

RNG_ALGORITHM = "PCG64 via numpy SeedSequence(seed, spawn_key=(block,))"
BLOCK_SIZE = 4096
N_BINS = 100


@numba.njit(nogil=True, cache=True)
def _interp(values, h, x):
    pos = x / h
    j = int(pos)
    if j >= values.size - 1:
        j = values.size - 2
    th = pos - j
    return values[j] + th * (values[j + 1] - values[j])


@numba.njit(nogil=True, cache=True)
def _advance_block(x, attached, gen, n_steps, dt, h, slope, nu, eta, kappa, sigma, varsigma):
    s_att = np.sqrt(2.0 * sigma * dt)
    s_det = np.sqrt(2.0 * varsigma * dt)
    for i in range(x.size):
        xi = x[i]
        att = attached[i]
        for _ in range(n_steps):
            if att:
                xi += -kappa * _interp(slope, h, xi) * dt + s_att * gen.standard_normal()
            else:
                xi += s_det * gen.standard_normal()
            while xi < 0.0 or xi > 1.0:
                if xi < 0.0:
                    xi = -xi
                if xi > 1.0:
                    xi = 2.0 - xi
            rate = _interp(eta, h, xi) if att else _interp(nu, h, xi)
            if gen.random() < rate * dt:
                att = not att
        x[i] = xi
        attached[i] = att


@dataclass
class ParticleEnsemble:
    positions: np.ndarray
    states: np.ndarray  # True = attached
    rng_seed: int

    def check(self):
        if np.any(self.positions < 0) or np.any(self.positions > 1):
            raise ModelError("particle left [0, 1]")


@dataclass
class ParticleHistograms:
    """Normalized histograms of a particle ensemble."""

    k: int
    n_particles: int
    p_wells: np.ndarray
    P_wells: np.ndarray
    bin_edges: np.ndarray
    p_density: np.ndarray
    P_density: np.ndarray
    ensemble: ParticleEnsemble | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def wells(self) -> np.ndarray:
        return np.concatenate([self.p_wells, self.P_wells])


def histograms(ensemble: ParticleEnsemble, k: int, n_bins: int = N_BINS) -> ParticleHistograms:
    x, att = ensemble.positions, ensemble.states
    n = x.size
    well = np.minimum((x * k).astype(int), k - 1)
    p_w = np.bincount(well[att], minlength=k) / n
    P_w = np.bincount(well[~att], minlength=k) / n
    edges = np.linspace(0.0, 1.0, n_bins + 1)
    width = 1.0 / n_bins
    p_d = np.histogram(x[att], bins=edges)[0] / (n * width)
    P_d = np.histogram(x[~att], bins=edges)[0] / (n * width)
    return ParticleHistograms(k, n, p_w, P_w, edges, p_d, P_d, ensemble)


def worker_count() -> int:
    env = os.environ.get("RATCHET_LAB_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def simulate_particles(
    params: RatchetParams,
    n_particles: int,
    t_end: float,
    dt: float,
    seed: int,
    workers: int | None = None,
) -> ParticleHistograms:
    """Run the ensemble from a uniform start (each particle attached with probability 1/2)."""
    if n_particles < 1:
        raise ModelError("need at least one particle")
    if not (dt > 0 and t_end > 0):
        raise ModelError("dt and t_end must be positive")
    rmax = max(params.nu.values.max(), params.eta.values.max())
    if rmax * dt >= 0.1:
        raise ModelError(f"switching probability per step {rmax * dt:.3f} is not below 0.1; reduce dt")
    if params.psi_alt is not None:
        raise ModelError("particle oracle covers the randomly flashing ratchet only")
    n_steps = int(round(t_end / dt))
    grid = params.grid
    slope = np.ascontiguousarray(params.potential.slope())
    nu = np.ascontiguousarray(params.nu.values)
    eta = np.ascontiguousarray(params.eta.values)
    n_blocks = -(-n_particles // BLOCK_SIZE)
    x = np.empty(n_particles)
    att = np.empty(n_particles, dtype=np.bool_)

    def run_block(b):
        lo, hi = b * BLOCK_SIZE, min((b + 1) * BLOCK_SIZE, n_particles)
        gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(b,))))
        xb = gen.random(hi - lo)
        ab = gen.random(hi - lo) < 0.5
        _advance_block(xb, ab, gen, n_steps, dt, grid.h, slope, nu, eta,
                       params.kappa, params.sigma, params.varsigma)
        x[lo:hi], att[lo:hi] = xb, ab

    n_workers = min(workers or worker_count(), n_blocks)
    if n_workers > 1:
        with ThreadPoolExecutor(n_workers) as pool:
            list(pool.map(run_block, range(n_blocks)))
    else:
        for b in range(n_blocks):
            run_block(b)
    ensemble = ParticleEnsemble(x, att, seed)
    ensemble.check()
    hist = histograms(ensemble, params.k)
    hist.metadata = {
        "rng": RNG_ALGORITHM,
        "seed": seed,
        "dt": dt,
        "t_end": n_steps * dt,
        "block_size": BLOCK_SIZE,
    }
    return hist


@dataclass(frozen=True)
class HistogramComparison:
    deviations: np.ndarray
    standard_errors: np.ndarray
    max_well_deviation: float
    passed: bool


def reference_wells(reference, k: int) -> np.ndarray:
    if isinstance(reference, ParticleHistograms):
        return reference.wells
    if isinstance(reference, DensityPair):
        return np.concatenate([well_integrals(reference.p, k), well_integrals(reference.P, k)])
    return np.asarray(reference, dtype=float)


def compare_histogram(empirical: ParticleHistograms, reference, k: int, n_se: float = 3.0) -> HistogramComparison:
    """Per-well deviations of attached and detached masses, flagged at ``n_se`` standard errors."""
    if empirical.k != k:
        raise ModelError("histograms were built for a different k")
    ref = reference_wells(reference, k)
    dev = empirical.wells - ref
    se = np.sqrt(ref * (1.0 - ref) / empirical.n_particles)
    passed = bool(np.all(np.abs(dev) <= n_se * se))
    return HistogramComparison(dev, se, float(np.max(np.abs(dev))), passed)
