"""Closed-form reference flows and first-order Chapman-Enskog populations.

Coordinates are passed component-first, ``x`` of shape ``(d,) + S``; every
evaluator returns arrays over ``S`` (scalars), ``(d,) + S`` (vectors) or
``(d, d) + S`` (tensors).  Velocity gradients use ``G[a, b] = d u_a / d x_b``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .equilibrium import equilibrium_lattice_units
from .errors import DomainError
from .lattice import Stencil
from .scaling import ScalingParams


class AnalyticFlow:
    """Base class: constant-density, force-free flow on a periodic box."""

    name = "flow"

    def __init__(self, d: int, nu: float, U: float, L: float):
        self.d = d
        self.nu = nu
        self.U = U
        self.L = L
        self.k = 2.0 * math.pi / L

    def rho(self, t, x):
        return np.ones(np.shape(x)[1:])

    def grad_rho(self, t, x):
        return np.zeros(np.shape(x))

    def drho_dt(self, t, x):
        return np.zeros(np.shape(x)[1:])

    def pressure(self, t, x):
        """Kinematic pressure ``p / rho`` balancing the momentum equation."""
        return np.zeros(np.shape(x)[1:])

    def u(self, t, x):
        raise NotImplementedError

    def grad_u(self, t, x):
        raise NotImplementedError

    def dudt(self, t, x):
        raise NotImplementedError

    def force(self, t, x):
        return np.zeros(np.shape(x))

    def strain(self, t, x):
        G = self.grad_u(t, x)
        return 0.5 * (G + np.swapaxes(G, 0, 1))

    def divergence(self, t, x):
        G = self.grad_u(t, x)
        return sum(G[a, a] for a in range(self.d))

    def lattice_density(self, t, x, h: float):
        """Particle density including the ideal-gas pressure fluctuation.

        With ``p = n RT`` and ``RT = 1/(3 h^2)`` a kinematic pressure ``p'``
        is carried by ``n = rho (1 + 3 h^2 p')``.
        """
        return self.rho(t, x) * (1.0 + 3.0 * h * h * self.pressure(t, x))

    def __repr__(self):
        return f"{type(self).__name__}(d={self.d}, U={self.U}, L={self.L}, nu={self.nu})"


class TaylorGreen2D(AnalyticFlow):
    name = "taylor_green_2d"

    def __init__(self, U: float, L: float, nu: float):
        super().__init__(2, nu, U, L)

    def _decay(self, t):
        return math.exp(-2.0 * self.nu * self.k**2 * t)

    def u(self, t, x):
        kx, ky = self.k * x[0], self.k * x[1]
        amp = self.U * self._decay(t)
        return np.stack([-amp * np.cos(kx) * np.sin(ky), amp * np.sin(kx) * np.cos(ky)])

    def grad_u(self, t, x):
        kx, ky = self.k * x[0], self.k * x[1]
        a = self.U * self.k * self._decay(t)
        sx_sy = np.sin(kx) * np.sin(ky)
        cx_cy = np.cos(kx) * np.cos(ky)
        return np.stack([
            np.stack([a * sx_sy, -a * cx_cy]),
            np.stack([a * cx_cy, -a * sx_sy]),
        ])

    def dudt(self, t, x):
        return -2.0 * self.nu * self.k**2 * self.u(t, x)

    def pressure(self, t, x):
        kx, ky = self.k * x[0], self.k * x[1]
        return -0.25 * self.U**2 * self._decay(t) ** 2 * (np.cos(2 * kx) + np.cos(2 * ky))


class ShearWave(AnalyticFlow):
    """``u_y = A sin(k x) exp(-nu k^2 t)``; every other component vanishes."""

    name = "shear_wave"

    def __init__(self, A: float, k: float, nu: float, d: int = 3):
        super().__init__(d, nu, A, 2.0 * math.pi / k)
        self.k = k

    def _decay(self, t):
        return math.exp(-self.nu * self.k**2 * t)

    def u(self, t, x):
        out = np.zeros(np.shape(x))
        out[1] = self.U * np.sin(self.k * x[0]) * self._decay(t)
        return out

    def grad_u(self, t, x):
        out = np.zeros((self.d,) + np.shape(x))
        out[1, 0] = self.U * self.k * np.cos(self.k * x[0]) * self._decay(t)
        return out

    def dudt(self, t, x):
        return -self.nu * self.k**2 * self.u(t, x)

    def amplitude(self, t):
        return self.U * self._decay(t)


class UniformFlow(AnalyticFlow):
    name = "uniform"

    def __init__(self, d: int, nu: float, u0=None, L: float = 1.0):
        u0 = np.zeros(d) if u0 is None else np.asarray(u0, dtype=np.float64)
        super().__init__(d, nu, float(np.linalg.norm(u0)), L)
        self.u0 = u0

    def u(self, t, x):
        shape = np.shape(x)
        return np.broadcast_to(self.u0.reshape((self.d,) + (1,) * (len(shape) - 1)), shape).copy()

    def grad_u(self, t, x):
        return np.zeros((self.d,) + np.shape(x))

    def dudt(self, t, x):
        return np.zeros(np.shape(x))


def taylor_green_2d(U: float, L: float, nu: float) -> TaylorGreen2D:
    _positive(U=U, L=L, nu=nu)
    return TaylorGreen2D(U, L, nu)


def shear_wave(A: float, k: float, nu: float, d: int = 3) -> ShearWave:
    _positive(A=A, k=k, nu=nu)
    if d not in (2, 3):
        raise DomainError("shear wave needs d in {2, 3}")
    return ShearWave(A, k, nu, d)


def uniform_flow(d: int, nu: float, u0=None, L: float = 1.0) -> UniformFlow:
    return UniformFlow(d, nu, u0, L)


def _positive(**kw):
    for name, value in kw.items():
        if not value > 0:
            raise DomainError(f"{name} must be positive, got {value!r}")


@dataclass(frozen=True)
class MaterialTerms:
    """Per-velocity terms of ``D/Dt M_eq = (-a + b + c + d + e) M_eq``.

    Each field has shape ``(q,) + S``.
    """

    a: np.ndarray
    b: np.ndarray
    c_term: np.ndarray
    d_term: np.ndarray
    e: np.ndarray

    def bracket(self) -> np.ndarray:
        return -self.a + self.b + self.c_term + self.d_term + self.e


def material_derivative_terms(flow: AnalyticFlow, t: float, x, v_i, sc: ScalingParams,
                              m: float = 1.0) -> MaterialTerms:
    """Evaluate the five material-derivative terms at discrete velocities ``v_i``.

    ``v_i`` are physical velocities, shape ``(q, d)``; ``c = v_i - u(t, x)``.
    """
    x = np.asarray(x, dtype=np.float64)
    v_i = np.asarray(v_i, dtype=np.float64)
    S = x.shape[1:]
    d = flow.d
    h2 = sc.h * sc.h
    u = flow.u(t, x)
    rho = flow.rho(t, x)
    grad_rho = flow.grad_rho(t, x)
    G = flow.grad_u(t, x)
    dudt = flow.dudt(t, x)
    F = flow.force(t, x)
    div = flow.divergence(t, x)

    q = v_i.shape[0]
    a = np.broadcast_to(div, (q,) + S).copy()
    b = np.empty((q,) + S)
    c_t = np.empty((q,) + S)
    d_t = np.empty((q,) + S)
    e = np.empty((q,) + S)
    for i in range(q):
        c = [v_i[i, al] - u[al] for al in range(d)]
        b[i] = sum(c[al] * grad_rho[al] for al in range(d)) / rho
        c_t[i] = 3.0 * h2 * sum(c[al] * dudt[al] for al in range(d))
        d_t[i] = 3.0 * h2 * sum(c[al] * sum(v_i[i, be] * G[al, be] for be in range(d))
                                for al in range(d))
        e[i] = 3.0 * h2 / m * sum(c[al] * F[al] for al in range(d))
    return MaterialTerms(a, b, c_t, d_t, e)


def ce_population_values(flow: AnalyticFlow, t: float, x, s: Stencil, sc: ScalingParams,
                         with_pressure: bool = False) -> np.ndarray:
    """``M_eq [1 - 3 nu h^2 (-a + b + c + d + e)]`` at points ``x``; shape ``(q,) + S``."""
    eq = equilibrium_values(flow, t, x, s, sc, with_pressure)
    terms = material_derivative_terms(flow, t, x, s.velocities(sc.h), sc)
    return eq * (1.0 - 3.0 * sc.nu * sc.h**2 * terms.bracket())


def equilibrium_values(flow: AnalyticFlow, t: float, x, s: Stencil, sc: ScalingParams,
                       with_pressure: bool = False) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    n = flow.lattice_density(t, x, sc.h) if with_pressure else flow.rho(t, x)
    return equilibrium_lattice_units(n, sc.h * flow.u(t, x), s)


def ce_populations(flow: AnalyticFlow, t: float, grid, s: Stencil, sc: ScalingParams,
                   with_pressure: bool = False):
    """Chapman-Enskog populations of ``flow`` sampled at the nodes of ``grid``."""
    from .grid import PopulationField, node_coordinates

    x = node_coordinates(grid)
    return PopulationField(grid, ce_population_values(flow, t, x, s, sc, with_pressure))
