import warnings

import numpy as np
import pytest

from mqbqr import printed
from mqbqr.errors import DomainError
from mqbqr.model import ModelVariant, SourceInputs, SwitchPhase, build_phase_model, printed_mismatch_cells
from mqbqr.small_signal import (TFInput, assemble_averaged, dc_gain_direct, equilibrium,
                                faddeev_leverrier, frequency_response, identified_reference_eval,
                                identified_state_space_tf, input_column, transfer_function)

LIT, REC = ModelVariant.PAPER_LITERAL, ModelVariant.RECONCILED


@pytest.fixture(scope="module")
def avg(t3):
    return assemble_averaged(t3)


@pytest.fixture(scope="module")
def tf(avg, t3):
    u = SourceInputs.from_params(t3)
    return transfer_function(avg, TFInput.SOURCE_VOLTAGE, equilibrium(avg, u), u)


def test_full_duty_is_on_model(t3):
    # D = 1 itself is outside the parameter domain; approach it instead
    a = assemble_averaged(t3.with_(D=0.999999999))
    on = build_phase_model(t3, SwitchPhase.ON)
    np.testing.assert_allclose(a.A_av, on.A, atol=1e-6 * np.abs(on.A).max())


def test_printed_row_entries(t3):
    # literal transcription keeps the printed 1/L1, independent of D
    for D in (0.2, 0.7):
        assert assemble_averaged(t3.with_(D=D), LIT).A_av[0, 4] == pytest.approx(1 / t3.L1)
    for v in (LIT, REC):
        assert assemble_averaged(t3.with_(D=0.5), v).A_av[1, 4] == pytest.approx(-250.0)


def test_zero_forcing_equilibrium(t3):
    a = assemble_averaged(t3.with_(Vbat=0.0))
    assert np.abs(equilibrium(a, SourceInputs(0.0))).max() == 0


def test_equilibrium_residual(avg, t3):
    u = SourceInputs.from_params(t3)
    x = equilibrium(avg, u)
    r = avg.A_av @ x + avg.B_av @ u.as_array() + avg.f_av
    assert np.linalg.norm(r) < 1e-9 * np.linalg.norm(avg.B_av @ u.as_array())


def test_orbit_mean_matches_equilibrium(avg, t3, t3_ss):
    x = equilibrium(avg, SourceInputs.from_params(t3))
    m = t3_ss.measurements.avg_state
    big = np.abs(x) > 1e-6 * np.abs(x).max()
    assert np.all(np.abs(m[big] - x[big]) <= 0.05 * np.abs(x[big]))


def test_faddeev_matches_det(avg):
    c, _ = faddeev_leverrier(avg.A_av)
    rng = np.random.default_rng(3)
    for s in rng.normal(size=5) * 100 + 1j * rng.normal(size=5) * 100:
        det = np.linalg.det(s * np.eye(7) - avg.A_av)
        assert abs(np.polyval(c, s) - det) <= 1e-8 * abs(det)


def test_dc_gain_identity_and_fd(avg, tf, t3):
    b = input_column(avg, TFInput.SOURCE_VOLTAGE)
    assert tf.dc_gain() == pytest.approx(dc_gain_direct(avg, b), rel=1e-9)
    dv = 1e-3
    x0 = equilibrium(avg, SourceInputs(t3.Vpv))
    x1 = equilibrium(avg, SourceInputs(t3.Vpv + dv))
    assert tf.dc_gain() == pytest.approx((x1[6] - x0[6]) / dv, rel=1e-6)


def test_conjugate_symmetry(tf):
    s = 2j * np.pi * 37.0
    assert tf(-s) == pytest.approx(np.conj(tf(s)))
    assert tf.solve_eval(-s) == pytest.approx(np.conj(tf.solve_eval(s)))


def test_low_frequency_limit(tf):
    assert abs(tf(1e-3j)) == pytest.approx(abs(tf.dc_gain()), rel=1e-4)


def test_solve_vs_poly(tf):
    f = np.logspace(-1, 5, 50)
    a = frequency_response(tf, f, "solve")
    b = frequency_response(tf, f, "poly")
    assert np.max(np.abs(a - b) / np.abs(a)) < 1e-6


def test_duty_input_units(avg, t3):
    u = SourceInputs.from_params(t3)
    g = transfer_function(avg, TFInput.DUTY, equilibrium(avg, u), u)
    assert g.units == "V/duty" and g.dc_gain() > 0
    with pytest.raises(ValueError):
        input_column(avg, TFInput.DUTY)


def test_frequency_must_be_positive(tf):
    with pytest.raises(DomainError):
        frequency_response(tf, [0.0])


def test_identified_reference():
    assert abs(identified_reference_eval(2j * np.pi)) == pytest.approx(9.27e-4, rel=1e-3)
    z = printed.IDENTIFIED_TF_NUM[1] * -1 / printed.IDENTIFIED_TF_NUM[0]
    assert z == pytest.approx(8.410e-4, rel=1e-3)
    assert identified_reference_eval(z) == 0
    assert identified_reference_eval(-1j) == pytest.approx(np.conj(identified_reference_eval(1j)))


def test_identified_state_space_is_degree_four():
    assert len(identified_state_space_tf().den) == 5


def test_printed_mismatch_cells_pinned(t3):
    # regression: where the printed average and the printed modes disagree
    assert printed_mismatch_cells(t3) == [(2, 5), (3, 4), (3, 5), (3, 6), (4, 2), (6, 3), (6, 6)]
    assert printed_mismatch_cells(t3, "B_av") == [(3, 0)]
