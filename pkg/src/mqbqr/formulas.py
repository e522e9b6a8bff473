"""Closed-form steady-state relations: gain, duty, stresses, sizing, soft switching."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .csvio import fmt, write_csv
from .errors import DomainError


def ideal_gain(D):
    """Vo/Vpv = 3 - D."""
    if not (0.0 <= D <= 1.0):
        raise DomainError(f"D must lie in [0, 1], got {D!r}")
    return 3.0 - D


def duty_for_output(Vin, Vo):
    if not Vin > 0:
        raise DomainError(f"Vin must be > 0, got {Vin!r}")
    D = (3.0 * Vin - Vo) / Vin
    if not (0.0 < D < 1.0):
        raise DomainError(
            f"Vo={Vo!r} is not reachable from Vin={Vin!r}: required D={D:.6g} is outside (0, 1); "
            f"feasible Vo interval is ({2 * Vin:.6g}, {3 * Vin:.6g})")
    return D


def gain_from_balance(D):
    """Solve the averaged volt-second chain for Vo/Vpv (Vpv normalised to 1).

    Unknowns ``[Vc1, Vc2, Vo]``::

        Vc1                 = Vpv
        (1-D) Vc1 - Vc2     = -2 Vpv
              Vc2 - Vo      = 0
    """
    if not (0.0 < D < 1.0):
        raise DomainError(f"D must lie in (0, 1), got {D!r}")
    K = np.array([[1.0, 0.0, 0.0],
                  [1.0 - D, -1.0, 0.0],
                  [0.0, 1.0, -1.0]])
    rhs = np.array([1.0, -2.0, 0.0])
    return float(np.linalg.solve(K, rhs)[2])


# ---------------------------------------------------------------------------
# device stresses

@dataclass
class StressReport:
    V_switch: float
    V_D: dict           # "D1".."D7" -> V, as printed
    I_in: float
    I_L: dict           # "L1".."L4" -> A
    I_Q: float
    I_D: dict           # "D1".."D7", "Do" -> A
    alternates: dict = field(default_factory=dict)  # quantity -> competing printed value
    flags: dict = field(default_factory=dict)       # quantity -> explanation

    def currents(self) -> dict:
        out = {"I_in": self.I_in, "I_Q": self.I_Q}
        out.update({f"I_{k}": v for k, v in self.I_L.items()})
        out.update({f"I_{k}": v for k, v in self.I_D.items()})
        return out

    def voltages(self) -> dict:
        out = {"V_switch": self.V_switch}
        out.update({f"V_{k}": v for k, v in self.V_D.items()})
        return out


def device_stress_report(D, Io, Vpv, Vbat, Vo) -> StressReport:
    """Blocking voltages and current stresses exactly as printed.

    Where the printed lines contradict each other both values are kept: the
    first in the report, the other in ``alternates``, with a note in ``flags``.
    """
    if not (0 < D < 1):
        raise DomainError(f"D must lie in (0, 1), got {D!r}")
    if Io < 0:
        raise DomainError(f"Io must be >= 0, got {Io!r}")
    Vc1 = Vpv           # V_switch = Vc1 = Vpv
    Vc2 = Vo            # Vc2 = Vpv (3 - D) = Vo from the balance chain
    V_D = {
        "D1": Vpv,
        "D2": Vpv - Vc1,
        "D3": Vpv / 2,
        "D4": Vpv / 2,
        "D5": Vo / 2,
        "D6": Vo / 2,
        "D7": (Vbat - Vo) / 2,
    }
    alternates = {"V_D3": Vc1, "V_D4": Vc1, "V_D6": Vc2 - Vbat}
    flags = {
        "V_D3": "printed as Vc1 = Vpv/2 while V_switch = Vc1 = Vpv on the line above",
        "V_D4": "printed as Vc1 = Vpv/2 while V_switch = Vc1 = Vpv on the line above",
        "V_D6": "printed twice: Vo/2 and Vc2 - Vbat",
        "V_D2": "Vpv - Vc1 vanishes once Vc1 = Vpv",
    }
    if V_D["D7"] < 0:
        flags["V_D7"] = f"(Vbat - Vo)/2 is negative ({V_D['D7']:.6g} V); magnitude is the blocking stress"

    I_in = Io * (3 - D)
    I_L = {"L1": I_in, "L2": I_in, "L3": (2 - D) * Io, "L4": Io}
    I_Q = (4 - D) * Io
    I_D = {
        "D1": I_L["L2"],
        "D2": 2 * Io * (3 - D),
        "D3": I_L["L1"],
        "D4": I_Q,
        "D5": Io,
        "D6": Io,
        "D7": Io,
        "Do": Io,
    }
    flags["I_in"] = "I_in = I_L1 = I_L2 although both inductors draw from the source in parallel"
    flags["I_Do"] = "printed as I_D8; taken to be the output diode Do"
    return StressReport(Vpv, V_D, I_in, I_L, I_Q, I_D, alternates, flags)


# ---------------------------------------------------------------------------
# sizing and soft switching

@dataclass(frozen=True)
class SizingSpec:
    Vin: float
    Vo: float
    D: float
    fs: float
    R: float
    d_iL1: float
    d_iL2: float
    d_iL3: float
    d_iL4: float
    d_vC1: float
    d_vC2: float
    d_vCo: float

    def __post_init__(self):
        for name in ("d_iL1", "d_iL2", "d_iL3", "d_iL4", "d_vC1", "d_vC2", "d_vCo"):
            v = getattr(self, name)
            if v == 0:
                raise ZeroDivisionError(f"ripple target {name} is zero")
            if v < 0:
                raise DomainError(f"ripple target {name} must be > 0")
        if not (0 < self.D < 1):
            raise DomainError("D must lie in (0, 1)")


def size_components(spec: SizingSpec) -> dict:
    Vin, Vo, D, fs, R = spec.Vin, spec.Vo, spec.D, spec.fs, spec.R
    return {
        "L1": Vin * D / (spec.d_iL1 * fs),
        "L2": Vin * D / (spec.d_iL2 * fs),
        "L3": Vin * D ** 2 / (spec.d_iL3 * fs * (1 - D)),
        "L4": Vin * D ** 2 / (spec.d_iL4 * fs * (1 - D)),
        "C1": Vo * D / (spec.d_vC1 * fs * R * (1 - D)),
        "C2": Vo * D / (spec.d_vC2 * fs * R),
        "Co": Vo / (spec.d_vCo * fs * 3 * (1 - D) * R),
    }


def min_snubber_inductance(V_Q_off, t_r, gamma_i, i_Q_on):
    if gamma_i == 0 or i_Q_on == 0:
        raise ZeroDivisionError("gamma_i and i_Q_on must be nonzero")
    if min(V_Q_off, t_r, gamma_i, i_Q_on) <= 0:
        raise DomainError("all arguments must be > 0")
    return V_Q_off * t_r / (2 * gamma_i * i_Q_on)


def zcs_turnoff_instant(t_zVT, I_L_t2, Leq, n, Vin):
    """Instant at which the resonant inductor current returns to zero."""
    if n * Vin == 0:
        raise ZeroDivisionError("n * Vin is zero")
    if n < 0 or Vin < 0:
        raise DomainError("n and Vin must be > 0")
    return t_zVT + 4 * I_L_t2 * Leq / (n * Vin)


# ---------------------------------------------------------------------------
# topology comparison

def ref14_gain(D1, D2):
    """Two-duty gain (1 + D1)/(1 - D1 - D2)."""
    return (1 + D1) / (1 - D1 - D2)


@dataclass(frozen=True)
class TopologyEntry:
    name: str
    switches: int
    diodes: int
    inductors: int
    capacitors: int
    gain: object                 # callable D -> gain
    valid: object                # callable D -> (bool, reason)
    efficiency_reported: float   # percent
    power_reported: float        # W
    fs: float                    # Hz
    formula: str = ""


def _always(D):
    return True, ""


def _ref11_domain(D):
    return (D < 1 / 3), "D >= 1/3 makes 1 - 3D non-positive"


TOPOLOGIES = (
    TopologyEntry("Ref[6]", 1, 4, 2, 3, lambda D: (2 - D) / (1 - D) ** 2, _always,
                  91.2, 500, 118e3, "(2-D)/(1-D)^2"),
    TopologyEntry("Ref[8]", 1, 2, 3, 2, lambda D: (D / (1 - D)) ** 2, _always,
                  95.9, 100, 50e3, "(D/D1)^2, D1 = 1-D"),
    TopologyEntry("Ref[9]", 1, 5, 2, 4, lambda D, n=1.0: (1 + n) / (1 - D) ** 2, _always,
                  92.0, 200, 40e3, "(1+n)/(1-D)^2, n = 1"),
    TopologyEntry("Ref[11]", 2, 4, 2, 3, lambda D: (3 - D) / (1 - 3 * D), _ref11_domain,
                  93.2, 200, 50e3, "(3-D)/(1-3D)"),
    TopologyEntry("Ref[14]", 3, 2, 2, 1, lambda D: ref14_gain(D, 0.0),
                  lambda D: (D < 1, "D1 + D2 >= 1"),
                  93.6, 200, 50e3, "(1+D1)/(1-D1-D2), D1 = D, D2 = 0"),
    TopologyEntry("Ref[15]", 1, 3, 2, 3, lambda D: (3 + D) / (2 * (1 - D)), _always,
                  92.2, 250, 100e3, "(3+D)/(2(1-D))"),
    TopologyEntry("Proposed", 1, 8, 4, 3, lambda D: 3 - D, _always,
                  96.7, 200, 50e3, "3-D"),
)


@dataclass(frozen=True)
class ComparisonRow:
    entry: TopologyEntry
    D: float
    gain: float | None
    valid: bool
    note: str = ""

    @property
    def gain_cell(self):
        return self.gain if self.valid else f"invalid ({self.note})"


def topology_comparison(D) -> list[ComparisonRow]:
    if not (0 < D < 1):
        raise DomainError(f"D must lie in (0, 1), got {D!r}")
    rows = []
    for e in TOPOLOGIES:
        ok, why = e.valid(D)
        rows.append(ComparisonRow(e, D, float(e.gain(D)) if ok else None, ok, why))
    return rows


COMPARISON_HEADER = ["name", "switches", "diodes", "L", "C", "fs", "gain_at_D",
                     "efficiency_reported", "power_reported"]


def _comparison_cells(r: ComparisonRow):
    e = r.entry
    return [e.name, e.switches, e.diodes, e.inductors, e.capacitors, e.fs, r.gain_cell,
            e.efficiency_reported, e.power_reported]


def comparison_csv(rows, path):
    return write_csv(path, COMPARISON_HEADER, [_comparison_cells(r) for r in rows])


def comparison_markdown(rows) -> str:
    lines = ["| " + " | ".join(COMPARISON_HEADER) + " |",
             "|" + "---|" * len(COMPARISON_HEADER)]
    for r in rows:
        lines.append("| " + " | ".join(fmt(c) for c in _comparison_cells(r)) + " |")
    return "\n".join(lines) + "\n"
