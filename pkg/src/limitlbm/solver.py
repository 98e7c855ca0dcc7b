"""BGK collision and the collide-then-stream lattice Boltzmann update.

One step realizes ``f_i(t + h^2, x + e_i h) = f_i - omega (f_i - M_eq_i)`` with
``omega = 1/(3 nu + 1/2)``.  The half-step shift of the equilibrium is already
folded into ``omega``, so there is no implicit solve.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np

from .equilibrium import equilibrium_lattice_units
from .errors import DegenerateDensityError, DomainError, InstabilityError
from .grid import PopulationField, _check_dims, stream_velocity
from .lattice import Stencil
from .moments import lattice_moments
from .scaling import ScalingParams

MAX_STEPS = 10**9


def collide(f, s: Stencil, sc: ScalingParams) -> np.ndarray:
    """Post-collision populations; ``f`` has shape ``(q,) + S``."""
    return _collide_block(np.asarray(f, dtype=np.float64), s, sc.omega)


def _collide_block(f: np.ndarray, s: Stencil, omega: float) -> np.ndarray:
    n, u_lat = lattice_moments(f, s)
    eq = equilibrium_lattice_units(n, u_lat, s)
    # written about eq so that omega = 1 and f = eq are both reproduced bit for bit
    return eq + (1.0 - omega) * (f - eq)


def _node_slices(N: int, workers: int) -> list[slice]:
    workers = max(1, min(workers, N))
    bounds = np.linspace(0, N, workers + 1).astype(int)
    return [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:])]


def step(f: PopulationField, s: Stencil, sc: ScalingParams, workers: int = 1) -> PopulationField:
    """Collide on every node, then stream; advances time by ``h^2``.

    Work is split over slabs of the first grid axis.  Every node is updated
    by the same elementwise arithmetic, so results are bitwise independent
    of ``workers``.
    """
    _check_dims(f, s)
    post = np.empty_like(f.data)
    out = np.empty_like(f.data)

    def collide_slab(sl: slice):
        try:
            post[:, sl] = _collide_block(f.data[:, sl], s, sc.omega)
        except DegenerateDensityError as exc:
            node = np.array(exc.node)
            node[0] += sl.start
            raise DegenerateDensityError("non-positive density", node) from None

    def stream_one(i: int):
        out[i] = stream_velocity(post[i], s.e[i])

    slabs = _node_slices(f.grid.N, workers)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            list(pool.map(collide_slab, slabs))
            list(pool.map(stream_one, range(s.q)))
    else:
        for sl in slabs:
            collide_slab(sl)
        for i in range(s.q):
            stream_one(i)
    return PopulationField(f.grid, out)


@dataclass
class Observer:
    """Calls ``fn(step, t, field)`` every ``stride`` steps (including step 0)."""

    stride: int
    fn: Callable[[int, float, PopulationField], Any]
    name: str = "observer"


@dataclass
class ObserverRecord:
    name: str
    step: int
    t: float
    value: Any


def step_count(t_end: float, dt: float) -> int:
    if t_end < 0:
        raise DomainError(f"t_end must be non-negative, got {t_end}")
    ratio = t_end / dt + 0.5
    if not ratio < MAX_STEPS + 1:
        raise DomainError(f"t_end={t_end} needs more than {MAX_STEPS} steps of dt={dt}")
    return int(math.floor(ratio))


def run_until(
    f: PopulationField,
    s: Stencil,
    sc: ScalingParams,
    t_end: float,
    observers: Sequence[Observer] = (),
    workers: int = 1,
    check_every: int = 50,
    blowup_factor: float = 1e6,
) -> tuple[PopulationField, list[ObserverRecord]]:
    """Advance ``floor(t_end/dt + 1/2)`` steps.

    Raises :class:`InstabilityError` when the field stops being finite or its
    max-norm exceeds ``blowup_factor`` times the initial one.
    """
    dt = f.grid.dt
    nsteps = step_count(t_end, dt)
    log: list[ObserverRecord] = []
    norm0 = float(np.max(np.abs(f.data)))

    def observe(k: int, field: PopulationField):
        for obs in observers:
            if k % obs.stride == 0:
                log.append(ObserverRecord(obs.name, k, k * dt, obs.fn(k, k * dt, field)))

    observe(0, f)
    for k in range(1, nsteps + 1):
        f = step(f, s, sc, workers)
        if k % check_every == 0 or k == nsteps:
            norm = float(np.max(np.abs(f.data)))
            if not math.isfinite(norm) or norm > blowup_factor * norm0:
                raise InstabilityError(f"field blew up at step {k} (max |f| = {norm:.3e})", k)
        observe(k, f)
    return f, log
