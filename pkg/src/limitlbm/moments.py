"""Hydrodynamic moments of populations and the Newtonian stress target.

Population arrays carry the velocity index first: ``f`` has shape
``(q,) + S`` for a single node (``S = ()``) or a whole grid.  All sums over
``i`` run in ascending order so results do not depend on how nodes are
partitioned between workers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDensityError, DomainError
from .lattice import Stencil
from .scaling import ScalingParams


@dataclass(frozen=True)
class MomentSet:
    n: np.ndarray
    u: np.ndarray
    P: np.ndarray
    p: np.ndarray


class _CompensatedSum:
    """Running sum with an error-free TwoSum correction, applied in call order."""

    def __init__(self, first):
        self.s = np.array(first, dtype=np.float64)
        self.c = np.zeros_like(self.s)

    def add(self, x):
        t = self.s + x
        bp = t - self.s
        self.c += (self.s - (t - bp)) + (x - bp)
        self.s = t

    def result(self) -> np.ndarray:
        return self.s + self.c


def density(f: np.ndarray) -> np.ndarray:
    """``sum_i f_i`` in ascending ``i`` with compensation, so that e.g. the
    stencil weights sum to exactly 1."""
    acc = _CompensatedSum(f[0])
    for i in range(1, f.shape[0]):
        acc.add(f[i])
    return acc.result()


def lattice_momentum(f: np.ndarray, s: Stencil) -> np.ndarray:
    """``sum_i e_i f_i`` with shape ``(d,) + S``."""
    j = np.empty((s.d,) + f.shape[1:])
    for a in range(s.d):
        acc = _CompensatedSum(np.zeros(f.shape[1:]))
        for i in range(s.q):
            c = s.e[i, a]
            if c == 1:
                acc.add(f[i])
            elif c == -1:
                acc.add(-f[i])
        j[a] = acc.result()
    return j


def _check_density(n: np.ndarray) -> None:
    bad = ~(n > 0)
    if np.any(bad):
        node = np.argwhere(bad)[0] if n.ndim else None
        raise DegenerateDensityError("non-positive density", node)


def lattice_moments(f: np.ndarray, s: Stencil) -> tuple[np.ndarray, np.ndarray]:
    """Density and lattice velocity ``h u`` (no scaling parameters needed)."""
    n = density(f)
    _check_density(n)
    return n, lattice_momentum(f, s) / n


def macroscopic_moments(f, s: Stencil, sc: ScalingParams) -> tuple[np.ndarray, np.ndarray]:
    """``n = sum_i f_i`` and ``u = sum_i v_i f_i / n`` with ``v_i = e_i / h``."""
    f = np.asarray(f, dtype=np.float64)
    if f.shape[0] != s.q:
        raise DomainError(f"expected {s.q} populations, got {f.shape[0]}")
    n, u_lat = lattice_moments(f, s)
    return n, u_lat / sc.h


def stress_tensor(f, s: Stencil, sc: ScalingParams) -> np.ndarray:
    """Centered second moment ``sum_i (v_i - u) (x) (v_i - u) f_i`` (m = 1).

    Returned with shape ``(d, d) + S``.
    """
    f = np.asarray(f, dtype=np.float64)
    n, u_lat = lattice_moments(f, s)
    P = np.zeros((s.d, s.d) + f.shape[1:])
    c = [None] * s.d
    for i in range(s.q):
        for a in range(s.d):
            c[a] = s.e[i, a] - u_lat[a]
        for a in range(s.d):
            for b in range(a, s.d):
                P[a, b] += c[a] * c[b] * f[i]
    for a in range(s.d):
        for b in range(a):
            P[a, b] = P[b, a]
    return P / (sc.h * sc.h)


def pressure(P: np.ndarray) -> np.ndarray:
    d = P.shape[0]
    return np.trace(P, axis1=0, axis2=1) / d


def deviatoric(P: np.ndarray) -> np.ndarray:
    d = P.shape[0]
    out = P.copy()
    p = pressure(P)
    for a in range(d):
        out[a, a] -= p
    return out


def moment_set(f, s: Stencil, sc: ScalingParams) -> MomentSet:
    n, u = macroscopic_moments(f, s, sc)
    P = stress_tensor(f, s, sc)
    return MomentSet(n, u, P, pressure(P))


def newtonian_target(p, rho, nu: float, D: np.ndarray) -> np.ndarray:
    """Newtonian stress ``p I - 2 nu rho D`` for a symmetric rate of strain ``D``.

    ``D`` has shape ``(d, d) + S``; ``p`` and ``rho`` broadcast over ``S``.
    """
    D = np.asarray(D, dtype=np.float64)
    asym = np.max(np.abs(D - np.swapaxes(D, 0, 1)), initial=0.0)
    scale = np.max(np.abs(D), initial=0.0)
    if asym > 1e-12 * max(scale, 1e-300):
        raise DomainError(f"rate of strain must be symmetric (asymmetry {asym:.3e})")
    d = D.shape[0]
    out = -2.0 * nu * np.asarray(rho) * D
    for a in range(d):
        out[a, a] = out[a, a] + p
    return out
