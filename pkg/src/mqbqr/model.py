"""Converter domain types and per-phase state-space models.

State ordering is fixed: ``[iL1, iL2, iL3, iL4, vC1, vC2, vCo]``.
Inputs are ``u = [v_src, i_src]``; the battery voltage enters through the
affine offset ``f``.

Two variants are built.  ``PAPER_LITERAL`` transcribes the published
per-mode derivative equations verbatim, including the ones that make the
network non-passive.  ``RECONCILED`` is a power-conserving interpretation of
the same switch network; every cell where it departs from the literal model
is listed by :func:`discrepancy_report`.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import printed

IL1, IL2, IL3, IL4, VC1, VC2, VCO = range(7)
STATE_NAMES = ("iL1", "iL2", "iL3", "iL4", "vC1", "vC2", "vCo")
N_STATES = 7

DIODES = ("D1", "D2", "D3", "D4", "D5", "D6", "D7", "Do")


class SwitchPhase(enum.Enum):
    ON = "On"
    OFF = "Off"

    def duration(self, params: "ConverterParams") -> float:
        Ts = 1.0 / params.fs
        return params.D * Ts if self is SwitchPhase.ON else (1.0 - params.D) * Ts


class ModelVariant(enum.Enum):
    PAPER_LITERAL = "PaperLiteral"
    RECONCILED = "Reconciled"


@dataclass(frozen=True)
class Parasitics:
    Rds_on: float = 0.0
    Vf_diode: float = 0.0
    RL_copper: float = 0.0
    esr_cap: float = 0.0

    @property
    def is_ideal(self) -> bool:
        return all(getattr(self, f.name) == 0 for f in fields(self))


@dataclass(frozen=True)
class ConverterParams:
    L1: float
    L2: float
    L3: float
    L4: float
    C1: float
    C2: float
    Co: float
    R: float
    Vpv: float
    Vbat: float
    fs: float
    D: float
    parasitics: Parasitics = field(default_factory=Parasitics)

    def __post_init__(self):
        problems = self.problems()
        if problems:
            raise ValueError("; ".join(f"{p}: {msg}" for p, msg in problems))

    def problems(self) -> list[tuple[str, str]]:
        """Return ``(field path, message)`` for each violated invariant."""
        out = []
        for name in ("L1", "L2", "L3", "L4", "C1", "C2", "Co", "R", "fs"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                out.append((name, f"must be > 0, got {v!r}"))
        for name in ("Vpv", "Vbat"):
            if not np.isfinite(getattr(self, name)):
                out.append((name, "must be finite"))
        if not (0 < self.D < 1):
            out.append(("D", f"must satisfy 0 < D < 1, got {self.D!r}"))
        for f_ in fields(self.parasitics):
            v = getattr(self.parasitics, f_.name)
            if not (np.isfinite(v) and v >= 0):
                out.append((f"parasitics.{f_.name}", f"must be >= 0, got {v!r}"))
        return out

    @property
    def Ts(self) -> float:
        return 1.0 / self.fs

    @property
    def inductances(self) -> np.ndarray:
        return np.array([self.L1, self.L2, self.L3, self.L4])

    @property
    def capacitances(self) -> np.ndarray:
        return np.array([self.C1, self.C2, self.Co])

    @property
    def storage(self) -> np.ndarray:
        """Per-state storage coefficient (L for currents, C for voltages)."""
        return np.concatenate([self.inductances, self.capacitances])

    def with_(self, **changes) -> "ConverterParams":
        return replace(self, **changes)

    def ideal(self) -> "ConverterParams":
        return replace(self, parasitics=Parasitics())


@dataclass(frozen=True)
class SourceInputs:
    v_src: float
    i_src: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.v_src, self.i_src], dtype=float)

    @classmethod
    def from_params(cls, params: ConverterParams) -> "SourceInputs":
        return cls(v_src=params.Vpv)


@dataclass(frozen=True, eq=False)
class PhaseModel:
    """``dx/dt = A x + B u + f`` for one switch phase."""

    A: np.ndarray
    B: np.ndarray
    f: np.ndarray
    phase: SwitchPhase
    variant: ModelVariant

    def drive(self, u: SourceInputs) -> np.ndarray:
        return self.B @ u.as_array() + self.f


@dataclass(frozen=True)
class DiodeSet:
    conducting: frozenset

    def __contains__(self, name):
        return name in self.conducting

    def flags(self) -> dict[str, bool]:
        return {d: d in self.conducting for d in DIODES}


_ON_SET = frozenset({"D1", "D3", "D5", "Do"})
_OFF_SET = frozenset({"D2", "D4", "D6", "D7"})


def conduction_set(phase: SwitchPhase) -> DiodeSet:
    return DiodeSet(_ON_SET if phase is SwitchPhase.ON else _OFF_SET)


# Which inductor current each conducting device carries, per phase.  Used for
# device waveforms, diode forward drops and the switch resistance path.
DEVICE_CURRENT_MAP = {
    SwitchPhase.ON: {
        "Q": (IL1, IL2, IL3),
        "D1": (IL2,),
        "D3": (IL1,),
        "D5": (IL3,),
        "Do": (IL4,),
    },
    SwitchPhase.OFF: {
        "D2": (IL1, IL2),
        "D4": (IL3,),
        "D6": (IL4,),
        "D7": (IL4,),
    },
}


def _diode_drops(phase: SwitchPhase) -> np.ndarray:
    """Number of forward-biased diodes in series with each inductor."""
    n = np.zeros(4)
    for name, idx in DEVICE_CURRENT_MAP[phase].items():
        if name == "Q":
            continue
        for k in idx:
            n[k] += 1
    return n


def _literal(p: ConverterParams, phase: SwitchPhase):
    A = np.zeros((7, 7))
    B = np.zeros((7, 2))
    f = np.zeros(7)
    if phase is SwitchPhase.ON:
        A[IL1, VC1] = 1 / p.L1
        B[IL1, 0] = 1 / p.L1
        B[IL2, 0] = 1 / p.L2
        A[IL3, VC1] = 1 / p.L3
        f[IL4] = p.Vbat / p.L4
        A[IL4, VC2] = 1 / p.L4
        A[IL4, VCO] = -1 / p.L4
        A[VC1, IL1] = 1 / p.C1
        A[VC1, IL2] = -1 / p.C1
        B[VC1, 1] = 1 / p.C1
        B[VC2, 1] = 1 / p.C2
        A[VC2, IL4] = -1 / p.C2
        A[VCO, IL4] = 1 / p.Co
        A[VCO, VCO] = -1 / (p.R * p.Co)
    else:
        A[IL1, VC1] = 1 / p.L1
        A[IL2, VC1] = -1 / p.L2
        A[IL3, VC1] = 1 / p.L3
        A[IL3, VC2] = 1 / p.L3
        A[IL4, VC2] = -1 / p.L4
        A[IL4, VCO] = 1 / p.L4
        A[VC1, IL1] = 1 / p.C1
        A[VC1, IL3] = -1 / p.C1
        A[VC2, IL3] = 1 / p.C2
        A[VC2, IL4] = -1 / p.C2
        A[VCO, VCO] = 1 / (p.R * p.Co)
    return A, B, f


def _reconciled(p: ConverterParams, phase: SwitchPhase):
    # Inductor rows are loop voltages; capacitor rows are their KCL duals, so
    # the lossless part of diag(L, C) @ A is skew-symmetric in each phase.
    A = np.zeros((7, 7))
    B = np.zeros((7, 2))
    f = np.zeros(7)
    if phase is SwitchPhase.ON:
        B[IL1, 0] = 1 / p.L1
        B[IL2, 0] = 1 / p.L2
        A[IL3, VC1] = 1 / p.L3
        f[IL4] = p.Vbat / p.L4
        A[IL4, VC2] = 1 / p.L4
        A[IL4, VCO] = -1 / p.L4
        A[VC1, IL3] = -1 / p.C1
        B[VC1, 1] = 1 / p.C1
        B[VC2, 1] = 1 / p.C2
        A[VC2, IL4] = -1 / p.C2
        A[VCO, IL4] = 1 / p.Co
        A[VCO, VCO] = -1 / (p.R * p.Co)
    else:
        A[IL1, VC1] = -1 / p.L1
        A[IL2, VC1] = -1 / p.L2
        A[IL3, VC1] = 1 / p.L3
        A[IL3, VC2] = -1 / p.L3
        A[IL4, VC2] = 1 / p.L4
        A[IL4, VCO] = -1 / p.L4
        A[VC1, IL1] = 1 / p.C1
        A[VC1, IL2] = 1 / p.C1
        A[VC1, IL3] = -1 / p.C1
        A[VC2, IL3] = 1 / p.C2
        A[VC2, IL4] = -1 / p.C2
        A[VCO, IL4] = 1 / p.Co
        A[VCO, VCO] = -1 / (p.R * p.Co)
    return A, B, f


def _add_parasitics(p: ConverterParams, phase: SwitchPhase, A, f):
    par = p.parasitics
    L = p.inductances
    for k in range(4):
        A[k, k] -= par.RL_copper / L[k]
    if phase is SwitchPhase.ON and par.Rds_on:
        path = DEVICE_CURRENT_MAP[phase]["Q"]
        for k in path:
            for j in path:
                A[k, j] -= par.Rds_on / L[k]
    if par.Vf_diode:
        f[:4] -= par.Vf_diode * _diode_drops(phase) / L


def build_phase_model(params: ConverterParams, phase: SwitchPhase,
                      variant: ModelVariant = ModelVariant.RECONCILED) -> PhaseModel:
    if variant is ModelVariant.PAPER_LITERAL:
        A, B, f = _literal(params, phase)
    else:
        A, B, f = _reconciled(params, phase)
    _add_parasitics(params, phase, A, f)
    return PhaseModel(A=A, B=B, f=f, phase=phase, variant=variant)


def phase_models(params: ConverterParams, variant: ModelVariant = ModelVariant.RECONCILED):
    return (build_phase_model(params, SwitchPhase.ON, variant),
            build_phase_model(params, SwitchPhase.OFF, variant))


def state_derivative(model: PhaseModel, x, u: SourceInputs) -> np.ndarray:
    return model.A @ np.asarray(x, dtype=float) + model.drive(u)


def stored_energy(params: ConverterParams, x) -> float:
    x = np.asarray(x, dtype=float)
    return 0.5 * float(np.sum(params.storage * x * x))


def energy_rate(params: ConverterParams, model: PhaseModel, x, u: SourceInputs) -> float:
    """dE/dt along the trajectory through ``x``."""
    x = np.asarray(x, dtype=float)
    return float(np.sum(params.storage * x * state_derivative(model, x, u)))


# ---------------------------------------------------------------------------
# device waveforms

def switch_current(x, phase: SwitchPhase) -> np.ndarray:
    x = np.atleast_2d(x)
    if phase is SwitchPhase.OFF:
        return np.zeros(x.shape[0])
    return x[:, list(DEVICE_CURRENT_MAP[phase]["Q"])].sum(axis=1)


def device_currents(x, phase: SwitchPhase) -> dict[str, np.ndarray]:
    """Current through Q and every diode for samples ``x`` taken in ``phase``."""
    x = np.atleast_2d(x)
    zero = np.zeros(x.shape[0])
    out = {name: zero.copy() for name in ("Q",) + DIODES}
    for name, idx in DEVICE_CURRENT_MAP[phase].items():
        out[name] = x[:, list(idx)].sum(axis=1)
    return out


def device_voltages(x, phase: SwitchPhase, params: ConverterParams) -> dict[str, np.ndarray]:
    """Blocking voltages of the non-conducting devices.

    A device that conducts in one phase blocks the difference between the
    loop voltages its inductor sees in the two phases.
    """
    x = np.atleast_2d(x)
    v1, v2 = x[:, VC1], x[:, VC2]
    front = params.Vpv + v1
    zero = np.zeros(x.shape[0])
    out = {name: zero.copy() for name in ("Q",) + DIODES}
    if phase is SwitchPhase.OFF:
        out["Q"] = front
        out["D1"] = front
        out["D3"] = front
        out["D5"] = v2.copy()
        out["Do"] = np.full(x.shape[0], params.Vbat)
    else:
        out["D2"] = front
        out["D4"] = v2.copy()
        out["D6"] = np.full(x.shape[0], params.Vbat / 2)
        out["D7"] = np.full(x.shape[0], params.Vbat / 2)
    return out


def capacitor_currents(model: PhaseModel, x, u: SourceInputs, params: ConverterParams) -> np.ndarray:
    x = np.atleast_2d(x)
    dx = x @ model.A.T + model.drive(u)
    return dx[:, 4:] * params.capacitances


# ---------------------------------------------------------------------------
# reconciliation ledger

@dataclass(frozen=True)
class DiscrepancyEntry:
    location: str
    paper_literal_form: str
    reconciled_form: str
    affected_matrix_entry: tuple  # (matrix name, row, col)
    kind: str = "variant"         # "variant" or "printed"


# (matrix, row, col, location, literal text, reconciled text)
_VARIANT_FIXES = (
    ("A_on", IL1, VC1, "On-phase iL1 row: source KVL", "+vC1/L1", "0 (vL1 = Vpv while Q conducts)"),
    ("A_on", VC1, IL1, "On-phase vC1 row", "+iL1/C1", "0 (C1 feeds L3 only while Q conducts)"),
    ("A_on", VC1, IL2, "On-phase vC1 row", "-iL2/C1", "0"),
    ("A_on", VC1, IL3, "On-phase vC1 row vs iL3 row", "0", "-iL3/C1 (KCL dual of +vC1/L3)"),
    ("A_off", IL1, VC1, "Off-phase iL1 row vs iL2 row", "+vC1/L1", "-vC1/L1 (L1 discharges into C1 like L2)"),
    ("A_off", IL3, VC2, "Off-phase iL3 row vs printed A_av row 3", "+vC2/L3", "-vC2/L3"),
    ("A_off", IL4, VC2, "Off-phase iL4 row vs On-phase iL4 row", "-vC2/L4", "+vC2/L4"),
    ("A_off", IL4, VCO, "Off-phase iL4 row, output polarity", "+vCo/L4", "-vCo/L4"),
    ("A_off", VC1, IL2, "Off-phase vC1 row", "0", "+iL2/C1 (KCL dual of -vC1/L2)"),
    ("A_off", VCO, IL4, "Off-phase vCo row vs On-phase vCo row", "0", "+iL4/Co (KCL dual of -vCo/L4)"),
    ("A_off", VCO, VCO, "Off-phase vCo row", "+vCo/(R*Co)", "-vCo/(R*Co) (passive load)"),
)


def _assembled_literal_A_av(params: ConverterParams, D: float) -> np.ndarray:
    p = params.with_(D=D).ideal()
    on, off = phase_models(p, ModelVariant.PAPER_LITERAL)
    return D * on.A + (1 - D) * off.A


def _assembled_literal_B_av(params: ConverterParams, D: float) -> np.ndarray:
    p = params.with_(D=D).ideal()
    on, off = phase_models(p, ModelVariant.PAPER_LITERAL)
    return D * on.B + (1 - D) * off.B


_PROBE_DUTIES = (0.2, 0.4, 0.55, 0.8)


def printed_mismatch_cells(params: ConverterParams, matrix: str = "A_av") -> list[tuple[int, int]]:
    """Cells where the printed average differs from duty-weighting the printed modes.

    Cells are compared as functions of D (at several probe duties), so a
    coincidental equality at one duty does not hide a mismatch.
    """
    cells = set()
    for D in _PROBE_DUTIES:
        if matrix == "A_av":
            got = _assembled_literal_A_av(params, D)
            ref = printed.printed_A_av(params.L1, params.L2, params.L3, params.L4,
                                       params.C1, params.C2, params.Co, params.R, D)
        else:
            got = _assembled_literal_B_av(params, D)
            ref = printed.printed_B_av(params.L1, params.L2, params.L4, params.C1, params.C2, D)
        scale = np.maximum(np.abs(got), np.abs(ref))
        bad = np.abs(got - ref) > 1e-12 * np.maximum(scale, 1e-300)
        cells.update(zip(*map(lambda a: a.tolist(), np.nonzero(bad))))
    return sorted(cells)


def _assembly_text(params: ConverterParams, cell) -> str:
    r, c = cell
    names = STATE_NAMES
    on, off = phase_models(params.ideal(), ModelVariant.PAPER_LITERAL)
    return f"D*A_on[{names[r]},{names[c]}] + (1-D)*A_off[{names[r]},{names[c]}] = " \
           f"D*({on.A[r, c]:.6g}) + (1-D)*({off.A[r, c]:.6g})"


def discrepancy_report(params: ConverterParams) -> list[DiscrepancyEntry]:
    entries = [
        DiscrepancyEntry(loc, lit, rec, (mat, r, c), "variant")
        for mat, r, c, loc, lit, rec in _VARIANT_FIXES
    ]
    for cell in printed_mismatch_cells(params, "A_av"):
        entries.append(DiscrepancyEntry(
            location=f"printed A_av row {cell[0] + 1}, column {cell[1] + 1}",
            paper_literal_form=printed.PRINTED_A_AV_TEXT.get(cell, "0"),
            reconciled_form=_assembly_text(params, cell),
            affected_matrix_entry=("A_av", *cell),
            kind="printed",
        ))
    for cell in printed_mismatch_cells(params, "B_av"):
        entries.append(DiscrepancyEntry(
            location=f"printed B_av row {cell[0] + 1} vs On-phase Vbat offset",
            paper_literal_form=printed.PRINTED_B_AV_TEXT.get(cell, "0"),
            reconciled_form="0 (Vbat/L4 carried by the affine offset f)",
            affected_matrix_entry=("B_av", *cell),
            kind="printed",
        ))
    return entries


def variant_diff_cells(params: ConverterParams, a: ModelVariant, b: ModelVariant) -> set:
    """Every (matrix, row, col) at which the two variants' phase models differ."""
    out = set()
    for phase, tag in ((SwitchPhase.ON, "on"), (SwitchPhase.OFF, "off")):
        ma = build_phase_model(params, phase, a)
        mb = build_phase_model(params, phase, b)
        for name in ("A", "B"):
            diff = getattr(ma, name) != getattr(mb, name)
            for r, c in zip(*np.nonzero(diff)):
                out.add((f"{name}_{tag}", int(r), int(c)))
        for r in np.nonzero(ma.f != mb.f)[0]:
            out.add((f"f_{tag}", int(r), 0))
    return out
