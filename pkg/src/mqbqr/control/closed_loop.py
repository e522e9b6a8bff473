"""Cycle-by-cycle closed-loop simulation of the switched converter."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm
from scipy.optimize import brentq

from ..csvio import write_csv
from ..errors import DivergedError
from ..model import ConverterParams, ModelVariant, SourceInputs, SwitchPhase, build_phase_model
from ..simulator import SimConfig, find_steady_state
from .anfis import DEFAULT_LR, AnfisModel, TrainingSample, anfis_infer, anfis_train, default_model
from .pid import PidController

_BLOWUP = 1e6

# gains found by a spectral-radius scan of the per-cycle linearisation at 52 V
NOMINAL_PID_GAINS = dict(Kp=1e-3, Ki=1e-2, Kd=1e-6)
NOMINAL_ANFIS_SCALES = dict(e_scale=25.0, de_scale=3000.0)


@dataclass
class AnfisController:
    """Wraps an ANFIS so it can be stepped like the PID."""

    model: AnfisModel
    D_min: float = 0.05
    D_max: float = 0.95
    prev_error: float | None = None

    def reset(self):
        self.prev_error = None

    def step(self, e: float, dt: float) -> float:
        de = 0.0 if self.prev_error is None else (e - self.prev_error) / dt
        self.prev_error = e
        d = anfis_infer(self.model, e, de)
        return min(max(d, self.D_min), self.D_max)


@dataclass(frozen=True)
class ProfileStep:
    t: float
    changes: dict   # ConverterParams field -> new value (e.g. R, Vpv, Vbat)


@dataclass
class ClosedLoopResult:
    t: np.ndarray
    Vo: np.ndarray
    duty: np.ndarray
    e: np.ndarray
    de: np.ndarray
    Vref: float
    settling_time: float
    overshoot: float
    steady_state_error: float

    def samples(self):
        return [TrainingSample(float(a), float(b), float(c))
                for a, b, c in zip(self.e, self.de, self.duty)]


def closed_loop_metrics(t, Vo, Vref, band=0.02, tail=0.1):
    """Settling time (+-band), overshoot (% of Vref) and steady-state error (V).

    Steady-state error is the mean deviation over the last ``tail`` fraction
    of the run.
    """
    t = np.asarray(t)
    Vo = np.asarray(Vo)
    outside = np.nonzero(np.abs(Vo - Vref) > band * abs(Vref))[0]
    if len(outside) == 0:
        ts = float(t[0])
    elif outside[-1] == len(Vo) - 1:
        ts = float("inf")
    else:
        ts = float(t[outside[-1] + 1])
    overshoot = max(0.0, (float(np.max(Vo)) - Vref) / abs(Vref) * 100.0)
    n_tail = max(1, int(round(tail * len(Vo))))
    sse = float(abs(np.mean(Vo[-n_tail:]) - Vref))
    return ts, overshoot, sse


class _Plant:
    """Augmented phase matrices for one parameter set; only the duty varies."""

    def __init__(self, params, variant):
        self.params = params
        u = SourceInputs.from_params(params)
        n = 7
        self.M = []
        for phase in (SwitchPhase.ON, SwitchPhase.OFF):
            m = build_phase_model(params, phase, variant)
            M = np.zeros((n + 1, n + 1))
            M[:n, :n] = m.A
            M[:n, n] = m.drive(u)
            self.M.append(M)

    def step(self, x, D):
        Ts = self.params.Ts
        E1 = expm(self.M[0] * (D * Ts))
        E2 = expm(self.M[1] * ((1 - D) * Ts))
        y = E1[:7, :7] @ x + E1[:7, 7]
        return E2[:7, :7] @ y + E2[:7, 7]


def closed_loop_simulate(params: ConverterParams, controller, Vref: float, horizon: float,
                         profile=(), variant=ModelVariant.RECONCILED, x0=None,
                         de_clip: float | None = None) -> ClosedLoopResult:
    """Run ``controller`` once per switching period for ``horizon`` seconds.

    The plant starts on its periodic orbit at ``params.D`` unless ``x0`` is
    given.  ``Vo`` is sampled at the start of each period, before the update.
    """
    if x0 is None:
        x0 = find_steady_state(params, variant, with_measurements=False).x_periodic
    x = np.asarray(x0, dtype=float).copy()
    Ts = params.Ts
    n = int(round(horizon / Ts))
    steps = sorted(profile, key=lambda s: s.t)
    cur = params
    t = np.arange(n) * Ts
    Vo = np.empty(n)
    duty = np.empty(n)
    err = np.empty(n)
    derr = np.empty(n)
    prev_e = None
    si = 0
    plant = None
    for k in range(n):
        while si < len(steps) and steps[si].t <= t[k]:
            cur = cur.with_(**steps[si].changes)
            plant = None
            si += 1
        if plant is None:
            plant = _Plant(cur, variant)
        e = Vref - x[6]
        de = 0.0 if prev_e is None else (e - prev_e) / Ts
        if de_clip is not None:
            de = float(np.clip(de, -de_clip, de_clip))
        prev_e = e
        d = controller.step(e, Ts)
        Vo[k], duty[k], err[k], derr[k] = x[6], d, e, de
        x = plant.step(x, d)
        if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > _BLOWUP:
            raise DivergedError("Off", t[k], f"closed loop diverged; last stable time {t[k]:.6g} s")
    ts, os_, sse = closed_loop_metrics(t, Vo, Vref)
    return ClosedLoopResult(t, Vo, duty, err, derr, Vref, ts, os_, sse)


CLOSED_LOOP_HEADER = ["t", "Vo", "duty", "e"]


def write_closed_loop_csv(res: ClosedLoopResult, path, stride: int = 1):
    idx = range(0, len(res.t), stride)
    return write_csv(path, CLOSED_LOOP_HEADER,
                     [(res.t[i], res.Vo[i], res.duty[i], res.e[i]) for i in idx])


def feedforward_duty(params: ConverterParams, Vref: float, variant=ModelVariant.RECONCILED,
                     bracket=(0.05, 0.95)) -> float:
    """Duty whose periodic steady state has average output ``Vref``."""
    cfg = SimConfig(steps_per_phase=8)

    def f(D):
        return find_steady_state(params.with_(D=D), variant, cfg=cfg).measurements.avg_Vo - Vref

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return float(brentq(f, *bracket, xtol=1e-12))


# ---------------------------------------------------------------------------
# behaviour-cloning data

@dataclass(frozen=True)
class Scenario:
    Vref: float
    horizon: float
    profile: tuple = ()
    D0: float | None = None   # starting duty (defaults to params.D)


def build_training_set(params: ConverterParams, pid: PidController, scenarios, seed: int = 0,
                       max_samples: int = 2000, de_clip: float | None = None):
    """(e, de, duty) tuples from PID closed-loop runs, subsampled reproducibly."""
    runs = []
    for sc in scenarios:
        p = params if sc.D0 is None else params.with_(D=sc.D0)
        ctrl = pid.copy()
        ctrl.reset()
        try:
            res = closed_loop_simulate(p, ctrl, sc.Vref, sc.horizon, sc.profile, de_clip=de_clip)
        except DivergedError as exc:
            warnings.warn(f"scenario skipped: {exc}", RuntimeWarning, stacklevel=2)
            continue
        runs.append(res)
    return samples_from_runs(runs, seed, max_samples)


def samples_from_runs(runs, seed: int = 0, max_samples: int = 2000):
    """Pool the (e, de, duty) records of finished runs and subsample them."""
    out = [s for r in runs for s in r.samples()]
    if len(out) > max_samples:
        rng = np.random.default_rng(seed)
        keep = np.sort(rng.choice(len(out), size=max_samples, replace=False))
        out = [out[i] for i in keep]
    return out


def nominal_pid(params: ConverterParams, Vref: float, gains=None) -> PidController:
    """PID with the nominal gains and a feedforward duty for ``Vref``."""
    g = dict(NOMINAL_PID_GAINS)
    g.update(gains or {})
    nominal = g.pop("nominal", None)
    if nominal is None:
        nominal = feedforward_duty(params, Vref)
    return PidController(nominal=nominal, **g)


def clone_pid(params: ConverterParams, Vref: float, horizon: float, seed: int = 0,
              pid_run: ClosedLoopResult | None = None, epochs: int = 200, K: int = 5,
              max_samples: int = 2000, scales=None):
    """Behaviour-clone the nominal PID into an ANFIS.

    Returns ``(model, rmse_history, samples)``.  Pass ``pid_run`` to reuse a
    finished PID simulation instead of running a new one.
    """
    pid = nominal_pid(params, Vref)
    if pid_run is None:
        pid_run = closed_loop_simulate(params, pid, Vref, horizon)
    data = samples_from_runs([pid_run], seed, max_samples)
    sc = dict(NOMINAL_ANFIS_SCALES)
    sc.update(scales or {})
    model = default_model(K, pid.nominal, **sc)
    model, hist = anfis_train(model, data, epochs, DEFAULT_LR)
    return model, hist, data


TRAINING_HEADER = ["e", "de", "duty"]


def write_training_csv(samples, path):
    return write_csv(path, TRAINING_HEADER, [(s.e, s.de, s.duty) for s in samples])


def write_rmse_csv(history, path):
    return write_csv(path, ["epoch", "rmse"], [(i + 1, r) for i, r in enumerate(history)])
