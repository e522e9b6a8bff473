"""Two-phase switched simulation, periodic steady state and waveform statistics.

Each phase is affine LTI, so it is propagated exactly with the matrix
exponential of the augmented system ``[[A, g], [0, 0]]`` (``g = B u + f``).
The cycle map ``x(Ts) = Phi x(0) + d`` is therefore affine and its fixed point
is solved directly.
"""
from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .csvio import write_csv
from .errors import DivergedError, MarginalStabilityError, UnstableOrbitError
from .model import (DIODES, N_STATES, STATE_NAMES, ConverterParams, ModelVariant,
                    PhaseModel, SourceInputs, SwitchPhase, build_phase_model,
                    capacitor_currents, device_currents, device_voltages,
                    switch_current)


class Propagation(enum.Enum):
    EXACT = "ExactExponential"
    RK4 = "RK4"


@dataclass(frozen=True)
class SimConfig:
    steps_per_phase: int = 64
    n_max_cycles: int = 100_000
    fp_tol: float = 1e-9
    propagation: Propagation = Propagation.EXACT
    rk4_substeps: int = 10_000  # per phase, RK4 only
    invariant_tol: float = 1e-10

    def __post_init__(self):
        if self.steps_per_phase < 4:
            raise ValueError("steps_per_phase must be >= 4")
        if not self.fp_tol > 0:
            raise ValueError("fp_tol must be > 0")
        if self.n_max_cycles < 0 or self.rk4_substeps < 1:
            raise ValueError("cycle and substep counts must be positive")


# ---------------------------------------------------------------------------
# propagation

def _augmented(A, g):
    n = A.shape[0]
    M = np.zeros((n + 1, n + 1))
    M[:n, :n] = A
    M[:n, n] = g
    return M


def phase_propagator(A, g, tau):
    """Return ``(Phi, gamma)`` with ``x(tau) = Phi x0 + gamma``."""
    n = A.shape[0]
    E = expm(_augmented(A, g) * tau)
    return E[:n, :n], E[:n, n]


def _rk4(A, g, x, tau, nsteps):
    h = tau / nsteps
    x = np.array(x, dtype=float)
    for _ in range(nsteps):
        k1 = A @ x + g
        k2 = A @ (x + 0.5 * h * k1) + g
        k3 = A @ (x + 0.5 * h * k2) + g
        k4 = A @ (x + h * k3) + g
        x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return x


def propagate_phase(model: PhaseModel, x0, u: SourceInputs, tau: float,
                    method: Propagation = Propagation.EXACT, rk4_steps: int = 10_000):
    if tau < 0:
        raise ValueError("tau must be >= 0")
    x0 = np.asarray(x0, dtype=float)
    if tau == 0:
        return x0.copy()
    g = model.drive(u)
    if method is Propagation.RK4:
        return _rk4(model.A, g, x0, tau, rk4_steps)
    Phi, gamma = phase_propagator(model.A, g, tau)
    return Phi @ x0 + gamma


def integral_operator(A, g, tau):
    """``(P, q)`` with ``int_0^tau x(t) dt = P x0 + q`` (Van Loan block exponential)."""
    n = A.shape[0]
    M = _augmented(A, g)
    big = np.zeros((2 * (n + 1), 2 * (n + 1)))
    big[:n + 1, :n + 1] = M
    big[:n + 1, n + 1:] = np.eye(n + 1)
    W = expm(big * tau)[:n + 1, n + 1:]
    return W[:n, :n], W[:n, n]


# ---------------------------------------------------------------------------
# trajectories

@dataclass
class Segment:
    phase: SwitchPhase
    t: np.ndarray   # (n+1,)
    x: np.ndarray   # (n+1, 7)
    model: PhaseModel

    @property
    def duration(self):
        return float(self.t[-1] - self.t[0])


@dataclass
class Trajectory:
    """Phase-aligned samples; each segment starts and ends on a phase boundary."""

    segments: list
    params: ConverterParams
    u: SourceInputs

    @property
    def t(self):
        return np.concatenate([s.t for s in self.segments])

    @property
    def x(self):
        return np.vstack([s.x for s in self.segments])

    @property
    def phase_labels(self):
        return sum(([s.phase.value] * len(s.t) for s in self.segments), [])

    @property
    def I_Q(self):
        return np.concatenate([switch_current(s.x, s.phase) for s in self.segments])

    @property
    def x_start(self):
        return self.segments[0].x[0].copy()

    @property
    def x_end(self):
        return self.segments[-1].x[-1].copy()

    def device_currents(self):
        per = [device_currents(s.x, s.phase) for s in self.segments]
        return {k: np.concatenate([p[k] for p in per]) for k in per[0]}

    def device_voltages(self):
        per = [device_voltages(s.x, s.phase, self.params) for s in self.segments]
        return {k: np.concatenate([p[k] for p in per]) for k in per[0]}

    def capacitor_currents(self):
        return np.vstack([capacitor_currents(s.model, s.x, self.u, self.params)
                          for s in self.segments])

    def time_integral(self, values_per_segment):
        """Trapezoid integral over the cycle of a per-segment sample list."""
        return sum(np.trapezoid(v, s.t, axis=0) for v, s in zip(values_per_segment, self.segments))


def _phase_samples(model, x0, u, tau, n, cfg, t0):
    g = model.drive(u)
    t = t0 + tau * np.arange(n + 1) / n
    X = np.empty((n + 1, N_STATES))
    X[0] = x0
    if cfg.propagation is Propagation.RK4:
        sub = max(1, int(np.ceil(cfg.rk4_substeps / n)))
        for k in range(n):
            X[k + 1] = _rk4(model.A, g, X[k], tau / n, sub)
    else:
        Phi_h, gam_h = phase_propagator(model.A, g, tau / n)
        for k in range(n):
            X[k + 1] = Phi_h @ X[k] + gam_h
    if not np.all(np.isfinite(X)):
        bad = int(np.argmax(~np.all(np.isfinite(X), axis=1)))
        raise DivergedError(model.phase.value, float(t[bad]))
    return t, X


def _models(params, variant):
    return (build_phase_model(params, SwitchPhase.ON, variant),
            build_phase_model(params, SwitchPhase.OFF, variant))


def integrate_cycle(params: ConverterParams, variant: ModelVariant, u: SourceInputs,
                    x0, cfg: SimConfig = SimConfig(), t0: float = 0.0):
    """One switching period: On for D*Ts then Off for (1-D)*Ts."""
    x0 = np.asarray(x0, dtype=float)
    segs = []
    x = x0
    t = t0
    for model in _models(params, variant):
        tau = model.phase.duration(params)
        ts, X = _phase_samples(model, x, u, tau, cfg.steps_per_phase, cfg, t)
        segs.append(Segment(model.phase, ts, X, model))
        x = X[-1]
        t = ts[-1]
    traj = Trajectory(segs, params, u)
    return traj.x_end, traj


def cycle_map(params, variant, u, cfg: SimConfig = SimConfig()):
    """Recover ``(Phi, d)`` of the affine cycle map from 8 probe integrations."""
    on, off = _models(params, variant)
    taus = [on.phase.duration(params), off.phase.duration(params)]

    def once(x0):
        x = x0
        for m, tau in zip((on, off), taus):
            x = propagate_phase(m, x, u, tau, cfg.propagation, cfg.rk4_substeps)
        if not np.all(np.isfinite(x)):
            raise DivergedError("Off")
        return x

    d = once(np.zeros(N_STATES))
    Phi = np.empty((N_STATES, N_STATES))
    for j in range(N_STATES):
        e = np.zeros(N_STATES)
        e[j] = 1.0
        Phi[:, j] = once(e) - d
    return Phi, d


def iterate_cycles(params, variant, u, x0, n_cycles: int):
    """Brute-force repeated application of the switched cycle (no sampling)."""
    on, off = _models(params, variant)
    P1, g1 = phase_propagator(on.A, on.drive(u), on.phase.duration(params))
    P2, g2 = phase_propagator(off.A, off.drive(u), off.phase.duration(params))
    x = np.asarray(x0, dtype=float).copy()
    for k in range(n_cycles):
        x = P2 @ (P1 @ x + g1) + g2
        if not np.all(np.isfinite(x)):
            raise DivergedError("Off", (k + 1) * params.Ts)
    return x


# ---------------------------------------------------------------------------
# invariants and steady state

def conserved_directions(params, variant, u, tol: float = 1e-10) -> np.ndarray:
    """Linear functionals ``c`` with ``c . x`` exactly constant along both phases.

    Returned as rows in natural state units.  Lossless networks (ideal parts)
    with current loops that never see a resistor have such invariants, which
    makes the cycle map carry an exact eigenvalue 1.
    """
    on, off = _models(params, variant)
    S = params.storage[:, None]
    blocks = [S * on.A, S * off.A, S * on.drive(u)[:, None], S * off.drive(u)[:, None]]
    M = np.hstack(blocks)
    colscale = np.max(np.abs(M), axis=0)
    colscale[colscale == 0] = 1.0
    M = M / colscale
    U, s, _ = np.linalg.svd(M)
    smax = s[0] if s.size and s[0] > 0 else 1.0
    null = U[:, s <= tol * smax]
    # convert left null vectors of S*A into functionals on x
    C = (null * S).T
    return C


@dataclass
class Measurements:
    avg_Vo: float
    avg_state: np.ndarray
    ripple_iL: np.ndarray
    ripple_vC: np.ndarray
    device_avg: dict
    device_rms: dict
    device_peak: dict
    device_peak_voltage: dict
    cap_rms: np.ndarray
    zcs_residual: float
    ccm: bool

    def as_rows(self):
        rows = [("avg_Vo", self.avg_Vo), ("zcs_residual", self.zcs_residual),
                ("ccm", self.ccm)]
        rows += [(f"avg_{n}", v) for n, v in zip(STATE_NAMES, self.avg_state)]
        rows += [(f"ripple_iL{k + 1}", v) for k, v in enumerate(self.ripple_iL)]
        rows += [(f"ripple_{n}", v) for n, v in zip(("vC1", "vC2", "vCo"), self.ripple_vC)]
        for name in ("Q",) + DIODES:
            rows += [(f"{name}_avg", self.device_avg[name]), (f"{name}_rms", self.device_rms[name]),
                     (f"{name}_peak", self.device_peak[name]),
                     (f"{name}_vpeak", self.device_peak_voltage[name])]
        rows += [(f"rms_i{n}", v) for n, v in zip(("C1", "C2", "Co"), self.cap_rms)]
        return rows


@dataclass
class SteadyStateResult:
    x_periodic: np.ndarray
    cycle: Trajectory
    measurements: Measurements | None
    params: ConverterParams
    variant: ModelVariant
    u: SourceInputs
    Phi: np.ndarray
    d: np.ndarray
    rho: float
    invariants: np.ndarray = field(default_factory=lambda: np.zeros((0, N_STATES)))
    residual: float = 0.0


def spectral_radius(Phi, k_exclude):
    ev = np.linalg.eigvals(Phi)
    if k_exclude:
        order = np.argsort(np.abs(ev - 1.0))
        ev = ev[order[k_exclude:]]
    return float(np.max(np.abs(ev))) if ev.size else 0.0


def solve_fixed_point(Phi, d, C=None, x_ref=None):
    """Fixed point of ``x -> Phi x + d``, pinning ``C x = C x_ref`` when invariants exist."""
    n = Phi.shape[0]
    Isub = np.eye(n) - Phi
    if C is None or len(C) == 0:
        return np.linalg.solve(Isub, d)
    x_ref = np.zeros(n) if x_ref is None else np.asarray(x_ref, dtype=float)
    Cn = C / np.linalg.norm(C, axis=1, keepdims=True)
    K = np.vstack([Isub, Cn])
    rhs = np.concatenate([d, Cn @ x_ref])
    x, *_ = np.linalg.lstsq(K, rhs, rcond=None)
    return x


def find_steady_state(params: ConverterParams, variant: ModelVariant = ModelVariant.RECONCILED,
                      u: SourceInputs | None = None, cfg: SimConfig = SimConfig(),
                      x_ref=None, with_measurements: bool = True) -> SteadyStateResult:
    """Periodic orbit as the fixed point of the affine cycle map.

    When the two phases share exact conserved quantities (see
    :func:`conserved_directions`) the orbit is a family; the member with the
    same conserved values as ``x_ref`` (the all-zero state by default) is
    returned.
    """
    u = SourceInputs.from_params(params) if u is None else u
    Phi, d = cycle_map(params, variant, u, cfg)
    C = conserved_directions(params, variant, u, cfg.invariant_tol)
    rho = spectral_radius(Phi, len(C))
    if rho >= 1.0:
        raise UnstableOrbitError(rho)
    if len(C) == 0:
        sv = np.linalg.svd(np.eye(N_STATES) - Phi, compute_uv=False)
        if sv[-1] <= 1e-14 * max(sv[0], 1.0):
            raise MarginalStabilityError("I - Phi is singular: orbit is marginally stable")
    x_star = solve_fixed_point(Phi, d, C, x_ref)
    x_end, traj = integrate_cycle(params, variant, u, x_star, cfg)
    residual = float(np.linalg.norm(x_end - x_star) / (1 + np.linalg.norm(x_star)))
    ss = SteadyStateResult(x_star, traj, None, params, variant, u, Phi, d, rho, C, residual)
    if with_measurements:
        ss.measurements = measure(ss, params)
    return ss


# ---------------------------------------------------------------------------
# statistics

def _seg_stats(traj: Trajectory, series_per_seg):
    Ts = sum(s.duration for s in traj.segments)
    avg = traj.time_integral(series_per_seg) / Ts
    ms = traj.time_integral([v * v for v in series_per_seg]) / Ts
    peak = max(float(np.max(np.abs(v))) for v in series_per_seg)
    return avg, np.sqrt(np.maximum(ms, 0.0)), peak


def measure(ss: SteadyStateResult, params: ConverterParams) -> Measurements:
    traj = ss.cycle
    X = traj.x
    ripple = X.max(axis=0) - X.min(axis=0)
    avg_state, _, _ = _seg_stats(traj, [s.x for s in traj.segments])
    cur = [device_currents(s.x, s.phase) for s in traj.segments]
    vol = [device_voltages(s.x, s.phase, params) for s in traj.segments]
    d_avg, d_rms, d_peak, d_vpk = {}, {}, {}, {}
    for name in cur[0]:
        a, r, p = _seg_stats(traj, [c[name] for c in cur])
        d_avg[name], d_rms[name], d_peak[name] = float(a), float(r), p
        d_vpk[name] = max(float(np.max(np.abs(v[name]))) for v in vol)
    icap = [capacitor_currents(s.model, s.x, traj.u, params) for s in traj.segments]
    _, cap_rms, _ = _seg_stats(traj, icap)
    on = next(s for s in traj.segments if s.phase is SwitchPhase.ON)
    zcs = float(abs(switch_current(on.x[-1], SwitchPhase.ON)[0]))
    ccm = bool(np.all(X[:, :4] >= 0))
    if not ccm:
        warnings.warn("inductor current went negative during the cycle; the converter is "
                      "entering DCM, which this model does not represent", RuntimeWarning,
                      stacklevel=2)
    return Measurements(
        avg_Vo=float(avg_state[6]), avg_state=avg_state,
        ripple_iL=ripple[:4], ripple_vC=ripple[4:],
        device_avg=d_avg, device_rms=d_rms, device_peak=d_peak, device_peak_voltage=d_vpk,
        cap_rms=cap_rms, zcs_residual=zcs, ccm=ccm,
    )


@dataclass
class BalanceReport:
    volt_sec: np.ndarray       # per inductor, V*s
    charge: np.ndarray         # per capacitor, A*s
    volt_sec_scale: np.ndarray
    charge_scale: np.ndarray
    endpoint_volt_sec: np.ndarray
    endpoint_charge: np.ndarray

    @property
    def relative(self):
        vs = np.abs(self.volt_sec) / np.where(self.volt_sec_scale > 0, self.volt_sec_scale, 1.0)
        q = np.abs(self.charge) / np.where(self.charge_scale > 0, self.charge_scale, 1.0)
        return np.concatenate([vs, q])


def balance_check(ss: SteadyStateResult, x0=None) -> BalanceReport:
    """Volt-second and charge residuals over one cycle starting at ``x0``.

    Integrals are exact (block matrix exponential), not sampled.  Each
    residual is scaled by the cycle magnitude ``int |v_L| dt`` (or
    ``int |i_C| dt``), taken by trapezoid over the sampled cycle.
    """
    params, u = ss.params, ss.u
    x = ss.x_periodic if x0 is None else np.asarray(x0, dtype=float)
    x_start = x.copy()
    S = params.storage
    total = np.zeros(N_STATES)
    for model in _models(params, ss.variant):
        tau = model.phase.duration(params)
        g = model.drive(u)
        P, q = integral_operator(model.A, g, tau)
        total += S * (model.A @ (P @ x + q) + g * tau)
        x = propagate_phase(model, x, u, tau)
    endpoint = S * (x - x_start)
    traj = ss.cycle if x0 is None else integrate_cycle(params, ss.variant, u, x_start)[1]
    rates = [np.abs(S * (seg.x @ seg.model.A.T + seg.model.drive(u))) for seg in traj.segments]
    scale = traj.time_integral(rates)
    return BalanceReport(total[:4], total[4:], scale[:4], scale[4:], endpoint[:4], endpoint[4:])


# ---------------------------------------------------------------------------
# sweeps and export

@dataclass
class SweepRow:
    D: float
    measurements: Measurements | None
    gain_observed: float
    gain_formula: float
    deviation: float
    error: str = ""


def sweep(params: ConverterParams, duty_list, variant=ModelVariant.RECONCILED,
          cfg: SimConfig = SimConfig()) -> list[SweepRow]:
    rows = []
    for D in duty_list:
        D = float(D)
        formula = 3.0 - D
        try:
            p = params.with_(D=D)
            ss = find_steady_state(p, variant, SourceInputs.from_params(p), cfg)
            m = ss.measurements
            gain = m.avg_Vo / p.Vpv
            rows.append(SweepRow(D, m, gain, formula, abs(gain - formula) / formula))
        except Exception as exc:  # recorded per row; the sweep carries on
            rows.append(SweepRow(D, None, float("nan"), formula, float("nan"),
                                 f"{type(exc).__name__}: {exc}"))
    return rows


SWEEP_HEADER = ["D", "avg_Vo", "gain_observed", "gain_formula", "deviation", "error"]


def write_sweep_csv(rows, path):
    return write_csv(path, SWEEP_HEADER, [
        (r.D, r.measurements.avg_Vo if r.measurements else float("nan"),
         r.gain_observed, r.gain_formula, r.deviation, r.error) for r in rows])


WAVEFORM_HEADER = ["t"] + list(STATE_NAMES) + ["I_Q", "phase"]


def waveform_rows(traj: Trajectory):
    for s in traj.segments:
        iq = switch_current(s.x, s.phase)
        for k in range(len(s.t)):
            yield [s.t[k], *s.x[k], iq[k], s.phase.value]


def write_waveform_csv(traj: Trajectory, path):
    return write_csv(path, WAVEFORM_HEADER, waveform_rows(traj))
