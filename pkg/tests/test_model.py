import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mqbqr.model import (DIODES, IL1, IL2, IL3, VC1, VCO, ConverterParams, ModelVariant,
                         Parasitics, SourceInputs, SwitchPhase, build_phase_model,
                         conduction_set, discrepancy_report, energy_rate, phase_models,
                         state_derivative, variant_diff_cells)

ON, OFF = SwitchPhase.ON, SwitchPhase.OFF
LIT, REC = ModelVariant.PAPER_LITERAL, ModelVariant.RECONCILED


def test_on_phase_l3_entry(t3):
    m = build_phase_model(t3, ON, REC)
    assert m.A[2, 4] == pytest.approx(1 / 0.150)
    assert m.A[2, 4] == pytest.approx(6.667, rel=1e-3)


def test_off_phase_l2_entry(t3):
    for v in (LIT, REC):
        assert build_phase_model(t3, OFF, v).A[1, 4] == pytest.approx(-500.0)


def test_output_cap_sign(t3):
    assert build_phase_model(t3, OFF, REC).A[6, 6] == pytest.approx(-10.0)
    assert build_phase_model(t3, OFF, LIT).A[6, 6] == pytest.approx(10.0)


def test_derivative_zero_and_linear(t3):
    m = build_phase_model(t3.with_(Vbat=0.0), ON, REC)
    u0 = SourceInputs(0.0)
    assert np.all(state_derivative(m, np.zeros(7), u0) == 0)
    x = np.arange(1.0, 8.0)
    np.testing.assert_allclose(state_derivative(m, 2 * x, u0), 2 * state_derivative(m, x, u0))


def test_derivative_il3_hand_value(t3):
    m = build_phase_model(t3, ON, REC)
    x = np.zeros(7)
    x[VC1] = 20.0
    assert state_derivative(m, x, SourceInputs.from_params(t3))[IL3] == pytest.approx(20 / 0.150)


def test_conduction_partition():
    on, off = conduction_set(ON).conducting, conduction_set(OFF).conducting
    assert on == {"D1", "D3", "D5", "Do"}
    assert off == {"D2", "D4", "D6", "D7"}
    assert not on & off and on | off == set(DIODES)


def test_models_are_deterministic(t3):
    a, b = phase_models(t3), phase_models(t3)
    for x, y in zip(a, b):
        assert np.array_equal(x.A, y.A) and np.array_equal(x.B, y.B) and np.array_equal(x.f, y.f)


_pos = st.floats(1e-4, 1.0)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-100, 100), min_size=7, max_size=7),
       st.sampled_from([ON, OFF]), _pos, _pos)
def test_reconciled_is_passive(x, phase, L, C):
    # sources off, ideal parts: stored energy can only leave through R
    p = ConverterParams(L, 2 * L, 50 * L, 70 * L, C, 2 * C, 3 * C, 100.0, 0.0, 0.0, 5e4, 0.4)
    m = build_phase_model(p, phase, REC)
    assert energy_rate(p, m, x, SourceInputs(0.0)) <= 1e-9 * (1 + np.abs(x).max() ** 2 / L)


def test_literal_violates_passivity(t3):
    p = t3.with_(Vpv=0.0, Vbat=0.0)
    x = np.zeros(7)
    x[VCO] = 10.0
    m = build_phase_model(p, OFF, LIT)
    assert energy_rate(p, m, x, SourceInputs(0.0)) > 0


def test_parasitics_add_damping(t3):
    p = t3.with_(parasitics=Parasitics(RL_copper=0.1))
    a = build_phase_model(p, ON, REC).A
    b = build_phase_model(t3, ON, REC).A
    assert a[IL1, IL1] == pytest.approx(b[IL1, IL1] - 0.1 / t3.L1)


def test_invalid_params_named():
    with pytest.raises(ValueError, match="D"):
        ConverterParams(1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1.2)


def test_report_has_output_cap_entry(t3):
    cells = {e.affected_matrix_entry for e in discrepancy_report(t3)}
    assert ("A_off", VCO, VCO) in cells


def test_self_diff_is_empty(t3):
    assert variant_diff_cells(t3, LIT, LIT) == set()


def test_report_cells_equal_matrix_diff(t3):
    rep = {e.affected_matrix_entry for e in discrepancy_report(t3) if e.kind == "variant"}
    diff = variant_diff_cells(t3, LIT, REC)
    assert rep == diff
    on, off = phase_models(t3, LIT), phase_models(t3, REC)
    for mat, r, c in rep:
        i = 0 if mat.endswith("on") else 1
        assert on[i].A[r, c] != off[i].A[r, c]


def test_report_fields_populated(t3):
    for e in discrepancy_report(t3):
        assert e.location and e.paper_literal_form and e.reconciled_form
    assert any(e.affected_matrix_entry == ("A_on", IL1, VC1) for e in discrepancy_report(t3))
    assert IL2 == 1
