"""Duty-weighted averaged model, its equilibrium and transfer functions."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import printed
from .csvio import write_csv
from .errors import DomainError, SingularEquilibriumError
from .model import (ConverterParams, ModelVariant, PhaseModel,
                    SourceInputs, SwitchPhase, build_phase_model)

C_VO = np.array([[0, 0, 0, 0, 0, 0, 1.0]])


class TFInput(enum.Enum):
    SOURCE_VOLTAGE = "SourceVoltage"
    SOURCE_CURRENT = "SourceCurrent"
    DUTY = "Duty"


@dataclass(frozen=True, eq=False)
class AveragedModel:
    A_av: np.ndarray
    B_av: np.ndarray
    C_av: np.ndarray
    f_av: np.ndarray
    D_value: float
    variant: ModelVariant
    on: PhaseModel
    off: PhaseModel

    @property
    def n(self):
        return self.A_av.shape[0]


def assemble_averaged(params: ConverterParams, variant=ModelVariant.RECONCILED) -> AveragedModel:
    on = build_phase_model(params, SwitchPhase.ON, variant)
    off = build_phase_model(params, SwitchPhase.OFF, variant)
    D = params.D
    return AveragedModel(
        A_av=D * on.A + (1 - D) * off.A,
        B_av=D * on.B + (1 - D) * off.B,
        C_av=C_VO.copy(),
        f_av=D * on.f + (1 - D) * off.f,
        D_value=D, variant=variant, on=on, off=off,
    )


def _left_null(A, S=None, tol=1e-10):
    """Left null space of ``A`` (rows), computed on the storage-scaled matrix."""
    M = A if S is None else S[:, None] * A
    colscale = np.max(np.abs(M), axis=0)
    colscale[colscale == 0] = 1.0
    U, s, _ = np.linalg.svd(M / colscale)
    null = U[:, s <= tol * max(s[0], 1e-300)]
    C = (null * (S[:, None] if S is not None else 1.0)).T
    return C


def _storage_guess(avg: AveragedModel):
    # the inverse of each row's largest magnitude stands in for L or C
    row = np.max(np.abs(avg.on.A) + np.abs(avg.off.A) + np.abs(avg.on.B).sum(1)[:, None], axis=1)
    row[row == 0] = 1.0
    return 1.0 / row


def conserved_directions(avg: AveragedModel, tol=1e-10) -> np.ndarray:
    return _left_null(avg.A_av, _storage_guess(avg), tol)


def equilibrium(avg: AveragedModel, u: SourceInputs, x_ref=None, tol=1e-10) -> np.ndarray:
    """Solve ``A_av x + B_av u + f_av = 0``.

    If ``A_av`` is singular but the forcing has no component along its left
    null space, the equilibrium is a family; the member sharing the conserved
    quantities of ``x_ref`` (zero by default) is returned.
    """
    g = avg.B_av @ u.as_array() + avg.f_av
    C = conserved_directions(avg, tol)
    if len(C) == 0:
        x = np.linalg.solve(avg.A_av, -g)
    else:
        Cn = C / np.linalg.norm(C, axis=1, keepdims=True)
        scale = np.max(np.abs(avg.A_av), axis=1, keepdims=True)
        scale[scale == 0] = 1.0
        forcing = np.abs(Cn @ (g / scale[:, 0]))
        if np.any(forcing > 1e-9 * (1 + np.linalg.norm(g / scale[:, 0]))):
            raise SingularEquilibriumError(
                "A_av is singular and the forcing excites its null space: no equilibrium")
        xr = np.zeros(avg.n) if x_ref is None else np.asarray(x_ref, dtype=float)
        K = np.vstack([avg.A_av / scale, Cn])
        rhs = np.concatenate([-g / scale[:, 0], Cn @ xr])
        x, *_ = np.linalg.lstsq(K, rhs, rcond=None)
    res = np.linalg.norm(avg.A_av @ x + g)
    ref = np.linalg.norm(np.abs(avg.A_av) @ np.abs(x)) + np.linalg.norm(g)
    if res > 1e-10 * max(ref, 1e-300):
        raise SingularEquilibriumError(f"equilibrium residual {res:.3g} too large")
    return x


# ---------------------------------------------------------------------------
# transfer functions

def faddeev_leverrier(A):
    """Characteristic polynomial and adjugate coefficients of ``sI - A``.

    Returns ``(c, Ms)`` with ``det(sI - A) = sum c[k] s^(n-k)`` (``c[0] = 1``)
    and ``adj(sI - A) = sum Ms[k] s^(n-1-k)``.
    """
    n = A.shape[0]
    M = np.eye(n)
    Ms = [M]
    c = [1.0]
    for k in range(1, n + 1):
        AM = A @ M
        ck = -np.trace(AM) / k
        c.append(ck)
        M = AM + ck * np.eye(n)
        if k < n:
            Ms.append(M)
    return np.array(c), Ms


@dataclass(frozen=True, eq=False)
class RationalTF:
    num: np.ndarray          # descending powers of s
    den: np.ndarray
    units: str = "V/V"
    n_origin_cancel: int = 0  # common s-factors (conserved quantities)
    A: np.ndarray | None = None
    b: np.ndarray | None = None
    C: np.ndarray | None = None
    d: float = 0.0

    def __call__(self, s):
        return np.polyval(self.num, s) / np.polyval(self.den, s)

    def dc_gain(self):
        k = self.n_origin_cancel
        num = self.num[:len(self.num) - k] if k else self.num
        den = self.den[:len(self.den) - k] if k else self.den
        return float(num[-1] / den[-1])

    def solve_eval(self, s):
        """Evaluate ``C (sI - A)^-1 b + d`` by a direct linear solve."""
        n = self.A.shape[0]
        return complex((self.C @ np.linalg.solve(s * np.eye(n) - self.A, self.b.astype(complex)))[0]) + self.d


def input_column(avg: AveragedModel, which: TFInput, x_op=None, u_op: SourceInputs | None = None):
    if which is TFInput.SOURCE_VOLTAGE:
        return avg.B_av[:, 0].copy()
    if which is TFInput.SOURCE_CURRENT:
        return avg.B_av[:, 1].copy()
    if x_op is None or u_op is None:
        raise ValueError("Duty input needs x_op and u_op")
    x = np.asarray(x_op, dtype=float)
    uu = u_op.as_array()
    return ((avg.on.A - avg.off.A) @ x + (avg.on.B - avg.off.B) @ uu + (avg.on.f - avg.off.f))


def transfer_function(avg: AveragedModel, which: TFInput = TFInput.SOURCE_VOLTAGE,
                      x_op=None, u_op: SourceInputs | None = None) -> RationalTF:
    b = input_column(avg, which, x_op, u_op)
    c, Ms = faddeev_leverrier(avg.A_av)
    C = avg.C_av
    num = np.array([(C @ M @ b).item() for M in Ms])
    k = len(conserved_directions(avg))
    units = "V/duty" if which is TFInput.DUTY else ("V/A" if which is TFInput.SOURCE_CURRENT else "V/V")
    return RationalTF(num=num, den=c, units=units, n_origin_cancel=k, A=avg.A_av, b=b, C=C)


def dc_gain_direct(avg: AveragedModel, b) -> float:
    """``-C A_av^-1 b`` (pinned when ``A_av`` is singular)."""
    x = equilibrium_for_forcing(avg, np.asarray(b, dtype=float))
    return float((avg.C_av @ x)[0])


def equilibrium_for_forcing(avg: AveragedModel, g):
    C = conserved_directions(avg)
    if len(C) == 0:
        return np.linalg.solve(avg.A_av, -g)
    Cn = C / np.linalg.norm(C, axis=1, keepdims=True)
    K = np.vstack([avg.A_av, Cn])
    x, *_ = np.linalg.lstsq(K, np.concatenate([-g, np.zeros(len(Cn))]), rcond=None)
    return x


def frequency_response(tf: RationalTF, freqs_hz, method: str = "solve") -> np.ndarray:
    """Complex response at ``s = j 2 pi f``; ``method`` is "solve" or "poly"."""
    freqs = np.asarray(freqs_hz, dtype=float)
    if np.any(freqs <= 0):
        raise DomainError("frequencies must be > 0")
    s = 2j * np.pi * freqs
    if method == "poly" or tf.A is None:
        return tf(s)
    return np.array([tf.solve_eval(si) for si in s])


BODE_HEADER = ["freq_hz", "re", "im", "mag_db", "phase_deg"]


def bode_rows(freqs_hz, G):
    G = np.asarray(G)
    return [(f, g.real, g.imag, 20 * np.log10(abs(g)), np.degrees(np.angle(g)))
            for f, g in zip(freqs_hz, G)]


def write_bode_csv(freqs_hz, G, path):
    return write_csv(path, BODE_HEADER, bode_rows(freqs_hz, G))


# ---------------------------------------------------------------------------
# printed identified model (reference constants only)

def identified_reference_eval(s) -> complex:
    """Printed second-order Vo/V transfer function."""
    den = np.polyval(printed.IDENTIFIED_TF_DEN, s)
    if den == 0:
        raise DomainError(f"s = {s!r} is a pole of the identified transfer function")
    return np.polyval(printed.IDENTIFIED_TF_NUM, s) / den


def identified_state_space_tf() -> RationalTF:
    """Degree-4 transfer function implied by the printed identified (A, B, C, D)."""
    A = printed.IDENTIFIED_A
    b = printed.IDENTIFIED_B[:, 0]
    C = printed.IDENTIFIED_C
    c, Ms = faddeev_leverrier(A)
    num = np.array([(C @ M @ b).item() for M in Ms])
    d = float(printed.IDENTIFIED_D[0, 0])
    if d:
        num = np.polyadd(num, d * c)
    return RationalTF(num=num, den=c, A=A, b=b, C=C, d=d)
