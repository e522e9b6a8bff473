"""Positional PID with output clamp and conditional-integration anti-windup."""
from __future__ import annotations

from dataclasses import dataclass


@dataclass
class PidController:
    Kp: float
    Ki: float
    Kd: float = 0.0
    nominal: float = 0.5
    D_min: float = 0.05
    D_max: float = 0.95
    integrator: float = 0.0
    prev_error: float | None = None

    def __post_init__(self):
        if not (0 < self.D_min < self.D_max < 1):
            raise ValueError("clamp must satisfy 0 < D_min < D_max < 1")

    def reset(self):
        self.integrator = 0.0
        self.prev_error = None

    def step(self, e: float, dt: float) -> float:
        if not dt > 0:
            raise ValueError("dt must be > 0")
        de = 0.0 if self.prev_error is None else (e - self.prev_error) / dt
        self.prev_error = e
        trial = self.integrator + e * dt
        raw = self.nominal + self.Kp * e + self.Ki * trial + self.Kd * de
        if self.D_min <= raw <= self.D_max:
            self.integrator = trial
            return raw
        # saturated: freeze the integrator and clamp
        out = self.nominal + self.Kp * e + self.Ki * self.integrator + self.Kd * de
        return min(max(out, self.D_min), self.D_max)

    def copy(self) -> "PidController":
        return PidController(self.Kp, self.Ki, self.Kd, self.nominal, self.D_min, self.D_max,
                             self.integrator, self.prev_error)


def pid_step(ctrl: PidController, e: float, dt: float) -> float:
    return ctrl.step(e, dt)
