"""Periodic Cartesian grid with diffusive time step and exact streaming.

Populations are stored structure-of-arrays: one contiguous ``N**d`` block
per velocity index, array shape ``(q, N, ..., N)``.
"""

from __future__ import annotations

import csv
import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateDensityError, DimensionMismatchError, DomainError
from .lattice import Stencil
from .manufactured import AnalyticFlow, ce_population_values, equilibrium_values
from .scaling import ScalingParams


@dataclass(frozen=True)
class Grid:
    d: int
    N: int
    extent: float

    @property
    def dx(self) -> float:
        return self.extent / self.N

    @property
    def dt(self) -> float:
        return self.dx * self.dx

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.d

    @property
    def num_nodes(self) -> int:
        return self.N**self.d


def make_grid(d: int, N: int, extent: float) -> Grid:
    if d not in (2, 3):
        raise DomainError(f"dimension must be 2 or 3, got {d}")
    if int(N) != N or N < 4:
        raise DomainError(f"need an integer N >= 4, got {N!r}")
    if not extent > 0:
        raise DomainError(f"extent must be positive, got {extent!r}")
    return Grid(d, int(N), float(extent))


def node_coordinates(grid: Grid) -> np.ndarray:
    """Node positions ``x = index * dx``, shape ``(d,) + grid.shape``."""
    axis = np.arange(grid.N) * grid.dx
    return np.stack(np.meshgrid(*([axis] * grid.d), indexing="ij"))


@dataclass
class PopulationField:
    grid: Grid
    data: np.ndarray

    def __post_init__(self):
        if self.data.shape[1:] != self.grid.shape:
            raise DimensionMismatchError(
                f"population data {self.data.shape} does not match grid {self.grid.shape}")

    @property
    def q(self) -> int:
        return self.data.shape[0]

    def copy(self) -> "PopulationField":
        return PopulationField(self.grid, self.data.copy())

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.data).all())


def _check_dims(f: PopulationField, s: Stencil) -> None:
    if s.d != f.grid.d or s.q != f.q:
        raise DimensionMismatchError(
            f"{s!r} does not fit a {f.grid.d}-d field with {f.q} populations")


def stream_velocity(values: np.ndarray, e_i) -> np.ndarray:
    """Shift one population block so that ``out(x) = values(x - e_i)``."""
    shift = tuple(int(c) for c in e_i)
    if not any(shift):
        return values.copy()
    return np.roll(values, shift, axis=tuple(range(len(shift))))


def stream(f: PopulationField, s: Stencil, workers: int = 1) -> PopulationField:
    """Pull streaming with periodic wrap into a fresh buffer.

    A pure permutation of values; no arithmetic is performed.
    """
    _check_dims(f, s)
    out = np.empty_like(f.data)

    def one(i):
        out[i] = stream_velocity(f.data[i], s.e[i])

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            list(pool.map(one, range(s.q)))
    else:
        for i in range(s.q):
            one(i)
    return PopulationField(f.grid, out)


INIT_MODES = ("equilibrium", "chapman_enskog")


def init_from_macro(grid: Grid, s: Stencil, sc: ScalingParams, flow: AnalyticFlow,
                    t0: float = 0.0, mode: str = "equilibrium",
                    with_pressure: bool = True) -> PopulationField:
    """Populations of ``flow`` at time ``t0`` on every node.

    ``with_pressure`` folds the flow's pressure into the particle density
    (see :meth:`AnalyticFlow.lattice_density`).
    """
    if flow.d != grid.d or s.d != grid.d:
        raise DimensionMismatchError("flow, stencil and grid dimensions differ")
    if abs(sc.h - grid.dx) > 1e-12 * grid.dx:
        raise DomainError(f"scaling h={sc.h} differs from grid spacing {grid.dx}")
    x = node_coordinates(grid)
    if mode == "equilibrium":
        data = equilibrium_values(flow, t0, x, s, sc, with_pressure)
    elif mode == "chapman_enskog":
        data = ce_population_values(flow, t0, x, s, sc, with_pressure)
    else:
        raise DomainError(f"unknown init mode {mode!r}; expected one of {INIT_MODES}")
    field = PopulationField(grid, data)
    if not np.all(data.sum(axis=0) > 0):
        raise DegenerateDensityError("initial density not positive")
    return field


def write_snapshot_csv(f: PopulationField, path) -> Path:
    """Row-major node order; header ``ix,iy[,iz],f0,...,f{q-1}``."""
    path = Path(path)
    d, q = f.grid.d, f.q
    header = ["ix", "iy", "iz"][:d] + [f"f{i}" for i in range(q)]
    flat = f.data.reshape(q, -1)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for k, idx in enumerate(itertools.product(range(f.grid.N), repeat=d)):
            writer.writerow(list(idx) + [f"{v:.17g}" for v in flat[:, k]])
    return path


def read_snapshot_csv(path, grid: Grid) -> PopulationField:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        q = len(header) - grid.d
        data = np.empty((q,) + grid.shape)
        for row in reader:
            idx = tuple(int(v) for v in row[:grid.d])
            data[(slice(None),) + idx] = [float(v) for v in row[grid.d:]]
    return PopulationField(grid, data)


def write_snapshot_binary(f: PopulationField, path) -> Path:
    """Raw little-endian float64, velocity-major (``f0`` block first)."""
    path = Path(path)
    f.data.astype("<f8").tofile(path)
    return path


def read_snapshot_binary(path, grid: Grid, q: int) -> PopulationField:
    data = np.fromfile(path, dtype="<f8").reshape((q,) + grid.shape)
    return PopulationField(grid, data)
