"""Seeded random kicked systems for sweeps and statistical checks."""
from __future__ import annotations

import numpy as np

from .floquet import TWO_PI, KickedSystem
from .flow import FlowGrid, holonomy, track_flow


def random_system(rng: np.random.Generator, dim: int, period_T: float = 1.0, separated: bool = False) -> KickedSystem:
    """Random diagonal ``h0`` with a dense kick vector.

    By default energies are uniform over one quasienergy zone and ``v`` is a
    normalized complex Gaussian vector.  With ``separated`` the energies are
    equally spaced with a jitter of at most a quarter spacing and every
    component of ``v`` has magnitude in [0.5, 1] before normalization, which
    keeps avoided crossings broad.
    """
    zone = TWO_PI / period_T
    if separated:
        energies = (np.arange(dim) + rng.uniform(-0.25, 0.25, dim)) * zone / dim
        v = rng.uniform(0.5, 1.0, dim) * np.exp(1j * rng.uniform(0.0, TWO_PI, dim))
    else:
        while True:
            energies = np.sort(rng.uniform(0.0, zone, dim))
            gaps = np.diff(np.concatenate([energies, [energies[0] + zone]]))
            if gaps.min() * period_T > 1e-6:
                break
        v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return KickedSystem.from_diagonal(energies, v, period_T, normalize=True)


def holonomy_sweep(seed: int, count: int, dims=range(2, 9), points: int = 512):
    """Track ``count`` random systems; yield one summary dict per system."""
    rng = np.random.default_rng(seed)
    dims = list(dims)
    for k in range(count):
        dim = dims[k % len(dims)]
        sys = random_system(rng, dim)
        hol = holonomy(track_flow(sys, FlowGrid.uniform(points)))
        yield {
            "index": k,
            "dim": dim,
            "permutation": list(hol.permutation),
            "nu": hol.nu,
            "sum_delta_E": float(np.sum(hol.delta_E)),
            "sum_rule_residual": hol.sum_rule_residual(sys.period_T),
        }
