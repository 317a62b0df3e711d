"""Reference instances shared by the tests, the self-test and the scripts."""

from __future__ import annotations

import numpy as np

from .model import (
    Grid,
    RatchetParams,
    conjugate_eta,
    make_constant_rate,
    make_peaked_rate,
    make_smooth_rate,
    make_smoothed_sawtooth,
)

# transport fixture: first (largest sigma, smallest kappa) pair of the default
# lattice with strict chains, frozen from `ratchet-lab sweep configs/transport_sweep.toml`
TRANSPORT_SIGMA = 0.1
TRANSPORT_KAPPA = 1.0


def sawtooth_params(
    k: int = 2,
    a: float = 0.15,
    s_star: float = 0.35,
    width: float = 0.05,
    base: float = 0.1,
    mass: float = 1.0,
    sigma: float = TRANSPORT_SIGMA,
    kappa: float = TRANSPORT_KAPPA,
    varsigma: float = 1.0,
    eta: float = 1.0,
    depth: float = 1.0,
    n: int | None = None,
) -> RatchetParams:
    """Sawtooth with minimum ``a``, peaked attachment at ``s_star`` and constant detachment."""
    g = Grid.for_teeth(k) if n is None else Grid(n)
    pot = make_smoothed_sawtooth(k, a, depth, g)
    nu = make_peaked_rate(k, s_star, width, base, mass, g)
    return RatchetParams(sigma, varsigma, kappa, pot, nu, make_constant_rate(eta, k, g))


def transport_fixture(n: int | None = None) -> RatchetParams:
    return sawtooth_params(n=n)


def symmetric_params(k: int = 2, a: float = 0.2, sigma: float = 0.01, kappa: float = 1.0, n=None) -> RatchetParams:
    """Attachment bump centred in each well, so ``S = 1/(2k)``."""
    return sawtooth_params(k=k, a=a, s_star=0.5 / k, sigma=sigma, kappa=kappa, n=n)


def conjugate_params(k: int = 3, a: float = 0.1, sigma: float = 0.5, kappa: float = 1.0, n=None) -> RatchetParams:
    g = Grid.for_teeth(k) if n is None else Grid(n)
    pot = make_smoothed_sawtooth(k, a, 1.0, g)
    nu = make_peaked_rate(k, 0.6 / k, 0.05 / k, 0.2, 1.0, g)
    return RatchetParams(sigma, 1.0, kappa, pot, nu, conjugate_eta(pot, nu, kappa, sigma))


def random_params(rng: np.random.Generator, sigma: float = 0.1, kappa: float = 1.0) -> RatchetParams:
    """A random admissible instance: k in 2..4, peaked attachment, cosine detachment."""
    k = int(rng.integers(2, 5))
    g = Grid.for_teeth(k)
    period = 1.0 / k
    a = rng.uniform(0.1, 0.9) * period
    s = rng.uniform(0.1, 0.9) * period
    w = rng.uniform(0.02, 0.1) * period
    base, mass = rng.uniform(0.05, 0.5), rng.uniform(0.5, 3.0)
    pot = make_smoothed_sawtooth(k, a, 1.0, g)
    nu = make_peaked_rate(k, s, w, base, mass, g)
    eta = make_smooth_rate(k, rng.uniform(0.5, 2.0), rng.uniform(0.0, 0.8), rng.uniform(0.0, period), g)
    return RatchetParams(sigma, rng.uniform(0.2, 2.0), kappa, pot, nu, eta)
