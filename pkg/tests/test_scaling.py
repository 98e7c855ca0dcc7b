import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from limitlbm.errors import DomainError
from limitlbm.scaling import RE_KN_MA_RATIO, make_scaling, nondimensional_numbers, relaxation_rate


def test_unit_relaxation_at_one_sixth():
    sc = make_scaling(1 / 6, 0.1)
    assert sc.omega == pytest.approx(1.0, abs=1e-15)
    assert sc.tau == pytest.approx(0.005, rel=1e-14)


def test_gas_constant_from_h():
    sc = make_scaling(0.02, 0.05)
    assert sc.RT == pytest.approx(400 / 3, rel=1e-14)
    assert sc.c_s == pytest.approx(20.0)


def test_lattice_viscosity_recovers_nu():
    for nu in (1e-3, 0.02, 1 / 6, 3.0):
        assert make_scaling(nu, 0.1).lattice_viscosity == pytest.approx(nu, rel=1e-13)


def test_re_kn_over_ma():
    for nu, h in ((0.1, 0.01), (0.3, 0.2), (2.0, 0.05)):
        fc = nondimensional_numbers(1.0, 1.0, nu, h)
        assert fc.Re * fc.Kn / fc.Ma == pytest.approx(2.763953, rel=1e-6)
    assert RE_KN_MA_RATIO == pytest.approx(math.sqrt(24 / math.pi))


def test_reynolds_and_mach():
    assert nondimensional_numbers(1.0, 1.0, 0.1, 0.01).Re == pytest.approx(10.0)
    a = nondimensional_numbers(2.0, 1.0, 0.1, 0.02)
    b = nondimensional_numbers(2.0, 1.0, 0.1, 0.01)
    assert b.Ma == pytest.approx(a.Ma / 2)


def test_relaxation_rate_monotone_and_limits():
    nus = np.geomspace(1e-8, 1e8, 400)
    omegas = [relaxation_rate(nu) for nu in nus]
    assert all(b < a for a, b in zip(omegas, omegas[1:]))
    assert omegas[0] == pytest.approx(2.0, abs=1e-6)
    assert omegas[-1] < 1e-7


@pytest.mark.parametrize("nu,h", [(0.0, 0.1), (-1.0, 0.1), (0.1, 0.0), (0.1, -0.5),
                                  (math.nan, 0.1), (0.1, math.inf), (True, 0.1)])
def test_rejects_non_positive(nu, h):
    with pytest.raises(DomainError):
        make_scaling(nu, h)


@given(st.floats(1e-4, 10.0), st.floats(1e-3, 0.5))
def test_tau_omega_relation(nu, h):
    sc = make_scaling(nu, h)
    # omega is the BGK rate tau / dt shifted by half a step
    assert sc.omega == pytest.approx(1.0 / (sc.tau / h**2 + 0.5), rel=1e-12)
    assert sc.RT * sc.h**2 == pytest.approx(1 / 3, rel=1e-14)
