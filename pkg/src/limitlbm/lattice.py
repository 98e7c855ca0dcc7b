"""Discrete velocity sets and their Gauss-Hermite quadrature properties."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import DomainError


@dataclass(frozen=True, eq=False)
class Stencil:
    """A DdQq velocity set.

    ``e`` holds the integer lattice vectors (shape ``(q, d)``) and ``t`` the
    normalized weights ``w_i / w``.  Physical velocities are ``e_i / h``.
    """

    name: str
    e: np.ndarray
    t: np.ndarray
    exact_weights: tuple[Fraction, ...] | None = None
    shell: np.ndarray = field(init=False, repr=False)
    opposite: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        e = np.array(self.e, dtype=np.int64)
        t = np.array(self.t, dtype=np.float64)
        if e.ndim != 2 or t.shape != (e.shape[0],):
            raise DomainError("need e of shape (q, d) and t of shape (q,)")
        shell = (e * e).sum(axis=1)
        opposite = np.full(e.shape[0], -1, dtype=np.int64)
        for i, ei in enumerate(e):
            match = np.flatnonzero((e == -ei).all(axis=1))
            if match.size:
                opposite[i] = match[0]
        for name, arr in (("e", e), ("t", t), ("shell", shell), ("opposite", opposite)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def d(self) -> int:
        return self.e.shape[1]

    @property
    def q(self) -> int:
        return self.e.shape[0]

    @property
    def cs2(self) -> float:
        return 1.0 / 3.0

    def velocities(self, h: float) -> np.ndarray:
        """Physical velocities ``v_i = e_i / h``."""
        return self.e / h

    def negated(self) -> "Stencil":
        return Stencil(f"{self.name}-reversed", -self.e, self.t, self.exact_weights)

    def with_weights(self, t) -> "Stencil":
        """Same velocities with replacement weights (used to probe corrupted sets)."""
        return Stencil(self.name, self.e, t)

    def __repr__(self):
        return f"Stencil({self.name}, d={self.d}, q={self.q})"


def _build(name: str, vectors, weight_of_shell: dict[int, Fraction]) -> Stencil:
    e = np.array(vectors, dtype=np.int64)
    exact = tuple(weight_of_shell[int(v @ v)] for v in e)
    return Stencil(name, e, np.array([float(w) for w in exact]), exact)


def d2q9() -> Stencil:
    vectors = [(0, 0), (1, 0), (0, 1), (-1, 0), (0, -1),
               (1, 1), (-1, 1), (-1, -1), (1, -1)]
    return _build("D2Q9", vectors, {0: Fraction(4, 9), 1: Fraction(1, 9), 2: Fraction(1, 36)})


def d3q19() -> Stencil:
    # rest, 6 axis velocities, 12 face diagonals; opposite pairs are adjacent
    vectors = [(0, 0, 0),
               (1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1),
               (1, 1, 0), (-1, -1, 0), (1, 0, 1), (-1, 0, -1), (0, 1, 1), (0, -1, -1),
               (1, -1, 0), (-1, 1, 0), (1, 0, -1), (-1, 0, 1), (0, 1, -1), (0, -1, 1)]
    return _build("D3Q19", vectors, {0: Fraction(1, 3), 1: Fraction(1, 18), 2: Fraction(1, 36)})


STENCILS = {"d2q9": d2q9, "d3q19": d3q19}


def get_stencil(name: str) -> Stencil:
    try:
        return STENCILS[name.lower()]()
    except KeyError:
        raise DomainError(f"unknown stencil {name!r}; expected one of {sorted(STENCILS)}") from None


def gaussian_moment(order: int, d: int, cs2: float = 1.0 / 3.0) -> np.ndarray:
    """Moment tensor of the centered normal distribution with covariance ``cs2 * I``."""
    if order == 0:
        return np.array(1.0)
    shape = (d,) * order
    out = np.zeros(shape)
    if order % 2:
        return out
    for idx in itertools.product(range(d), repeat=order):
        # Isserlis: sum over perfect pairings of the indices
        out[idx] = _pairings(list(idx)) * cs2 ** (order // 2)
    return out


def _pairings(idx: list[int]) -> int:
    if not idx:
        return 1
    first, rest = idx[0], idx[1:]
    total = 0
    for j, other in enumerate(rest):
        if other == first:
            total += _pairings(rest[:j] + rest[j + 1:])
    return total


def lattice_moment(s: Stencil, order: int) -> np.ndarray:
    """``sum_i t_i e_i^{(x) order}`` as a dense tensor."""
    e = s.e.astype(np.float64)
    tensor = s.t
    for _ in range(order):
        tensor = tensor[..., None] * e.reshape((s.q,) + (1,) * (tensor.ndim - 1) + (s.d,))
    return tensor.sum(axis=0)


@dataclass(frozen=True)
class QuadratureReport:
    stencil: str
    deviations: dict[int, float]

    def passed(self, tol: float = 1e-14) -> bool:
        return all(v <= tol for v in self.deviations.values())

    def lines(self, tol: float = 1e-14) -> list[str]:
        out = []
        for order, dev in sorted(self.deviations.items()):
            status = "ok" if dev <= tol else "FAIL"
            out.append(f"{self.stencil} order {order}: max deviation {dev:.3e} [{status}]")
        return out


def verify_quadrature(s: Stencil, max_order: int = 4) -> QuadratureReport:
    """Compare lattice moments of orders ``0..max_order`` with Gaussian ones.

    Never raises on a bad stencil; the deviations carry the verdict.
    """
    devs = {}
    for order in range(max_order + 1):
        diff = lattice_moment(s, order) - gaussian_moment(order, s.d, s.cs2)
        devs[order] = float(np.max(np.abs(diff)))
    return QuadratureReport(s.name, devs)
