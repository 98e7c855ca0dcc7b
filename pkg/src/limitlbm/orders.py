"""Order-of-convergence estimators."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .errors import DomainError, FitError

EXACT = "exact"


def _check_hs(hs: Sequence[float]) -> None:
    if any(h <= 0 for h in hs):
        raise DomainError("h values must be positive")
    if any(b >= a for a, b in zip(hs, hs[1:])):
        raise DomainError("h values must be strictly decreasing")


def eoc(errors: Sequence[float], hs: Sequence[float]) -> list[float]:
    """Pairwise experimental orders ``log(e_j/e_{j+1}) / log(h_j/h_{j+1})``.

    Raises :class:`DomainError` on non-positive errors; callers that expect
    exact results should test for zeros first and report :data:`EXACT`.
    """
    if len(errors) != len(hs) or len(hs) < 2:
        raise DomainError("need equally many errors and h values, at least two")
    _check_hs(hs)
    if any(not (e > 0) for e in errors):
        raise DomainError("errors must be positive to form an order")
    return [
        math.log(errors[j] / errors[j + 1]) / math.log(hs[j] / hs[j + 1])
        for j in range(len(hs) - 1)
    ]


def eoc_or_exact(errors: Sequence[float], hs: Sequence[float]) -> list[float | str]:
    """Like :func:`eoc`, but pairs with a zero error yield :data:`EXACT`."""
    out: list[float | str] = []
    for j in range(len(hs) - 1):
        e1, e2 = errors[j], errors[j + 1]
        if e1 == 0 or e2 == 0:
            out.append(EXACT)
        else:
            out.extend(eoc([e1, e2], [hs[j], hs[j + 1]]))
    return out


def fit_slope(hs: Sequence[float], errors: Sequence[float]) -> float:
    """Least-squares slope of ``log|error|`` against ``log h``.

    Raises :class:`FitError` if any error is exactly zero.
    """
    errs = np.abs(np.asarray(errors, dtype=float))
    if len(errs) < 2:
        raise FitError("need at least two samples")
    if np.any(errs == 0):
        raise FitError(EXACT)
    slope, _ = np.polyfit(np.log(np.asarray(hs, dtype=float)), np.log(errs), 1)
    return float(slope)


def slope_or_exact(hs: Sequence[float], errors: Sequence[float]) -> float | str:
    try:
        return fit_slope(hs, errors)
    except FitError as exc:
        if str(exc) == EXACT:
            return EXACT
        raise
