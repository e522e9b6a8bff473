import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mqbqr.errors import DomainError
from mqbqr.formulas import (SizingSpec, device_stress_report, duty_for_output, gain_from_balance,
                            ideal_gain, min_snubber_inductance, size_components,
                            topology_comparison, zcs_turnoff_instant)


def test_gain_values():
    assert ideal_gain(0.4) * 20 == pytest.approx(52.0, abs=1e-12)
    assert ideal_gain(0.0) == 3.0 and ideal_gain(1.0) == 2.0
    with pytest.raises(DomainError):
        ideal_gain(1.5)


def test_duty_for_output():
    assert duty_for_output(20, 52) == pytest.approx(0.4, abs=1e-12)
    assert duty_for_output(20, 41) == pytest.approx(0.95, abs=1e-12)
    with pytest.raises(DomainError, match=r"\(40, 60\)"):
        duty_for_output(20, 60)


@given(st.floats(0.001, 0.999))
def test_duty_inverts_gain(D):
    assert duty_for_output(10.0, ideal_gain(D) * 10.0) == pytest.approx(D, abs=1e-12)


def test_gain_from_balance():
    assert gain_from_balance(0.5) == pytest.approx(ideal_gain(0.5), abs=1e-12)
    assert gain_from_balance(0.4) == pytest.approx(2.6, abs=1e-12)
    D = np.random.default_rng(0).uniform(0, 1, 1000)
    assert max(abs(gain_from_balance(d) - (3 - d)) for d in D) < 1e-12


def test_stress_currents():
    r = device_stress_report(0.5, 1.0, 20.0, 12.0, 50.0)
    assert r.I_Q == pytest.approx(3.5, abs=1e-12)
    assert r.I_D["D2"] == pytest.approx(5.0, abs=1e-12)
    z = device_stress_report(0.5, 0.0, 20.0, 12.0, 50.0)
    assert all(v == 0 for v in z.currents().values())


def test_stress_flags_conflicts():
    r = device_stress_report(0.5, 1.0, 20.0, 12.0, 50.0)
    assert r.voltages()["V_D7"] < 0 and "V_D7" in r.flags
    assert "V_D3" in r.alternates and "V_D6" in r.alternates


def _spec(**kw):
    base = dict(Vin=20, Vo=52, D=0.4, fs=50e3, R=1000, d_iL1=0.2, d_iL2=0.2, d_iL3=0.01,
                d_iL4=0.01, d_vC1=0.1, d_vC2=0.1, d_vCo=0.52)
    base.update(kw)
    return SizingSpec(**base)


def test_sizing():
    assert size_components(_spec(D=0.5))["L1"] == pytest.approx(1e-3)
    assert size_components(_spec())["Co"] == pytest.approx(1.111e-6, rel=1e-3)
    with pytest.raises(ZeroDivisionError):
        _spec(d_iL1=0.0)


def test_snubber():
    L = min_snubber_inductance(20, 50e-9, 0.5, 3.5)
    assert L == pytest.approx(0.2857e-6, rel=1e-4)
    assert min_snubber_inductance(20, 50e-9, 1.0, 3.5) == pytest.approx(L / 2)
    with pytest.raises(ZeroDivisionError):
        min_snubber_inductance(20, 50e-9, 0.5, 0.0)


def test_zcs_instant():
    assert zcs_turnoff_instant(1e-6, 0.0, 10e-6, 1, 20) == 1e-6
    assert zcs_turnoff_instant(1e-6, 2.0, 10e-6, 1, 20) == pytest.approx(5e-6)
    d1 = zcs_turnoff_instant(0, 2.0, 10e-6, 1, 20)
    assert zcs_turnoff_instant(0, 2.0, 20e-6, 1, 20) == pytest.approx(2 * d1)


def test_comparison():
    rows = {r.entry.name: r for r in topology_comparison(0.5)}
    assert len(rows) == 7
    assert rows["Ref[6]"].gain == pytest.approx(6.0)
    assert rows["Proposed"].gain == pytest.approx(2.5, abs=1e-12)
    assert not rows["Ref[11]"].valid and "invalid" in rows["Ref[11]"].gain_cell
    assert topology_comparison(0.2)[3].valid
