"""Diffusive h-parametrization of the BGK model.

The sound speed is tied to the sequencing parameter by ``c_s = 1/h`` and the
relaxation time to the viscosity by ``tau = 3 nu h**2``.  On the lattice the
same ``h`` is the grid spacing and ``h**2`` the time step.
"""

from __future__ import annotations

import math
import numbers
from dataclasses import dataclass

from .errors import DomainError

#: ``Re * Kn / Ma`` under the mean-free-path assignment ``l_f = sqrt(24/pi) nu h``.
RE_KN_MA_RATIO = math.sqrt(24.0 / math.pi)


def _require_positive(**values: float) -> None:
    for name, value in values.items():
        ok = isinstance(value, numbers.Real) and not isinstance(value, bool)
        if not (ok and math.isfinite(value) and value > 0):
            raise DomainError(f"{name} must be a finite positive number, got {value!r}")


@dataclass(frozen=True)
class ScalingParams:
    """Parameter bundle tying relaxation to discretization.

    Construct with :func:`make_scaling`; the derived fields are not checked
    again here.
    """

    h: float
    nu: float
    tau: float
    omega: float
    c_s: float
    RT: float
    m: float = 1.0

    @property
    def lattice_viscosity(self) -> float:
        """``(1/omega - 1/2)/3``, equal to ``nu`` in lattice units."""
        return (1.0 / self.omega - 0.5) / 3.0


def relaxation_rate(nu: float) -> float:
    """LBE relaxation rate ``1/(3 nu + 1/2)``."""
    _require_positive(nu=nu)
    return 1.0 / (3.0 * nu + 0.5)


def make_scaling(nu: float, h: float) -> ScalingParams:
    _require_positive(nu=nu, h=h)
    return ScalingParams(
        h=float(h),
        nu=float(nu),
        tau=3.0 * nu * h * h,
        omega=relaxation_rate(nu),
        c_s=1.0 / h,
        RT=1.0 / (3.0 * h * h),
    )


@dataclass(frozen=True)
class FlowCharacteristics:
    U: float
    L: float
    Kn: float
    Ma: float
    Re: float
    l_f: float
    c_bar: float


def nondimensional_numbers(U: float, L: float, nu: float, h: float) -> FlowCharacteristics:
    """Knudsen, Mach and Reynolds numbers of the h-scaled gas.

    ``Ma = U h`` and ``Kn = sqrt(24/pi) nu h / L`` both vanish with ``h``
    while ``Re = U L / nu`` stays fixed.
    """
    _require_positive(U=U, L=L, nu=nu, h=h)
    l_f = RE_KN_MA_RATIO * nu * h
    return FlowCharacteristics(
        U=float(U),
        L=float(L),
        Kn=l_f / L,
        Ma=U * h,
        Re=U * L / nu,
        l_f=l_f,
        c_bar=math.sqrt(8.0 / (3.0 * math.pi)) / h,
    )
