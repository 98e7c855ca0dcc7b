"""Maxwellian equilibria: full h-parametrized, order-two truncated, and lattice.

All brackets are evaluated in prefactored units, i.e. with the lattice
vectors ``e_i = h v_i`` and the lattice velocity ``h u``, so every term is
O(1) regardless of ``h``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionMismatchError, DomainError
from .lattice import Stencil, d2q9, d3q19
from .orders import slope_or_exact
from .scaling import ScalingParams, make_scaling


@dataclass(frozen=True)
class MacroState:
    """Particle density ``n`` and velocity ``u`` (physical units).

    ``n`` may be a scalar or an array of node values; ``u`` then carries the
    component axis first, shape ``(d, ...)``.
    """

    n: float | np.ndarray
    u: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "u", np.asarray(self.u, dtype=np.float64))
        n = np.asarray(self.n, dtype=np.float64)
        if np.any(n <= 0):
            raise DomainError("density must be positive")
        if not np.all(np.isfinite(self.u)):
            raise DomainError("velocity must be finite")

    @property
    def d(self) -> int:
        return self.u.shape[0]


def _gauss_prefactor(n, h: float, d: int):
    return n * h**d / ((2.0 / 3.0) * math.pi) ** (d / 2)


def _dot(a: np.ndarray, b: np.ndarray):
    """Contract the leading (component) axis."""
    return np.einsum("a...,a...->...", a, b)


def maxwellian_full(state: MacroState, v, s: ScalingParams, d: int):
    """h-parametrized Maxwellian at continuous velocity ``v`` (shape ``(d, ...)``)."""
    v = np.asarray(v, dtype=np.float64)
    u = state.u.reshape(state.u.shape + (1,) * (v.ndim - state.u.ndim))
    w = (v - u) * s.h
    return _gauss_prefactor(state.n, s.h, d) * np.exp(-1.5 * _dot(w, w))


def maxwellian_truncated(state: MacroState, vtil, s: ScalingParams, d: int):
    """Second-order expansion of the Maxwellian in ``h`` at fixed ``vtil = h v``."""
    vtil = np.asarray(vtil, dtype=np.float64)
    h = s.h
    u = state.u.reshape(state.u.shape + (1,) * (vtil.ndim - state.u.ndim))
    vu = _dot(vtil, u)
    uu = _dot(u, u)
    bracket = 1.0 + 3.0 * h * vu - 1.5 * h * h * uu + 4.5 * h * h * vu * vu
    return _gauss_prefactor(state.n, h, d) * np.exp(-1.5 * _dot(vtil, vtil)) * bracket


def equilibrium_lattice_units(n, u_lat, s: Stencil) -> np.ndarray:
    """Lattice Maxwellian from density and lattice velocity ``u_lat = h u``.

    ``n`` has shape ``S`` and ``u_lat`` shape ``(d,) + S``; returns ``(q,) + S``.
    """
    n = np.asarray(n, dtype=np.float64)
    u_lat = np.asarray(u_lat, dtype=np.float64)
    usq = 1.5 * _dot(u_lat, u_lat)
    out = np.empty((s.q,) + n.shape)
    for i in range(s.q):
        eu = np.zeros(n.shape)
        for a in range(s.d):
            if s.e[i, a]:
                eu = eu + s.e[i, a] * u_lat[a]
        out[i] = s.t[i] * n * (1.0 + 3.0 * eu + 4.5 * eu * eu - usq)
    return out


def lattice_equilibrium(state: MacroState, s: Stencil, sc: ScalingParams) -> np.ndarray:
    if state.d != s.d:
        raise DimensionMismatchError(f"state has {state.d} components, stencil is {s.d}-dimensional")
    return equilibrium_lattice_units(state.n, sc.h * state.u, s)


def weight_function(vtil, sc: ScalingParams, d: int):
    """``((2/3) pi)^{d/2} h^{-d} exp(1.5 |vtil|^2)``.

    Multiplying a continuous distribution at ``v_i`` by ``t_i * w(vtil_i)``
    yields the population ``f_i``.
    """
    vtil = np.asarray(vtil, dtype=np.float64)
    return ((2.0 / 3.0) * math.pi) ** (d / 2) * sc.h ** (-d) * np.exp(1.5 * _dot(vtil, vtil))


@dataclass(frozen=True)
class RemainderProbe:
    """Sampled remainders and fitted log-log slopes.

    Keys: ``"a"`` pointwise ``|M - M_trunc|``; ``"b"`` relative density
    error ``|n - sum_i w_i M(v_i)| / n``; ``"c"`` relative momentum error
    ``|n u - sum_i w_i v_i M(v_i)| / n``.
    """

    hs: tuple[float, ...]
    errors: dict[str, tuple[float, ...]]
    slopes: dict[str, float | str]


def remainder_probe(
    state: MacroState,
    vtil,
    d: int,
    h_list: Sequence[float],
    stencil: Stencil | None = None,
    nu: float = 1.0,
) -> RemainderProbe:
    hs = tuple(float(h) for h in h_list)
    if len(hs) < 3 or any(b >= a for a, b in zip(hs, hs[1:])) or hs[-1] <= 0:
        raise DomainError("h_list needs at least three strictly decreasing positive entries")
    if stencil is None:
        stencil = d2q9() if d == 2 else d3q19()
    vtil = np.asarray(vtil, dtype=np.float64)
    errs: dict[str, list[float]] = {"a": [], "b": [], "c": []}
    n = float(state.n)
    for h in hs:
        sc = make_scaling(nu, h)
        # same value as maxwellian_full(state, vtil / h, ...) without the
        # round trip through v, so u = 0 compares bit-equal
        w = vtil - h * state.u
        full = _gauss_prefactor(n, h, d) * np.exp(-1.5 * _dot(w, w))
        trunc = maxwellian_truncated(state, vtil, sc, d)
        errs["a"].append(float(abs(full - trunc)))

        # w_i M(v_i) = t_i n exp(3 e.hu - 1.5 |hu|^2), formed without the
        # h^{+-d} prefactors that would otherwise cancel numerically
        e = stencil.e.T.astype(np.float64)
        hu = h * state.u
        weighted = stencil.t * n * np.exp(3.0 * (hu @ e) - 1.5 * (hu @ hu))
        errs["b"].append(abs(n - math.fsum(weighted)) / n)
        mom = np.array([math.fsum(weighted * e[a] / h) for a in range(d)])
        errs["c"].append(float(np.max(np.abs(n * state.u - mom))) / n)
    slopes = {k: slope_or_exact(hs, v) for k, v in errs.items()}
    return RemainderProbe(hs, {k: tuple(v) for k, v in errs.items()}, slopes)
