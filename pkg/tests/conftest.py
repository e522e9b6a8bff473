import pytest

from mqbqr.config import load, preset_path
from mqbqr.model import ConverterParams


@pytest.fixture(scope="session")
def t3() -> ConverterParams:
    return load(preset_path("table3_sim")).params


@pytest.fixture(scope="session")
def t3_ss(t3):
    import warnings
    from mqbqr.simulator import find_steady_state
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return find_steady_state(t3)


@pytest.fixture(scope="session")
def loop52(t3):
    """PID run to 52 V, an ANFIS cloned from it, and the ANFIS run; wall time included."""
    import time
    from mqbqr.control import AnfisController, clone_pid, closed_loop_simulate, nominal_pid
    t0 = time.perf_counter()
    pid = nominal_pid(t3, 52.0)
    pid_run = closed_loop_simulate(t3, pid, 52.0, 2.0)
    model, hist, data = clone_pid(t3, 52.0, 2.0, seed=0, pid_run=pid_run)
    an_run = closed_loop_simulate(t3, AnfisController(model), 52.0, 2.0)
    return dict(pid=pid, pid_run=pid_run, model=model, hist=hist, data=data, anfis_run=an_run,
                seconds=time.perf_counter() - t0)
