"""Single-diode PV panel fitted to datasheet points."""
from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.optimize import brentq

from ..errors import DomainError


@dataclass(frozen=True)
class PvPanel:
    Vmp: float = 36.3
    Imp: float = 7.35
    Pmax: float = 213.0
    Isc: float = 8.3
    Voc: float = 37.8

    @property
    def pmax_conflict(self) -> float:
        """Vmp*Imp minus the rated Pmax (W); nonzero means the sheet is inconsistent."""
        return self.Vmp * self.Imp - self.Pmax


@dataclass(frozen=True)
class PvFit:
    I0: float
    a: float           # n * Vt (V)
    residual: float    # |I(Vmp) - Imp| / Imp


def _current(panel, I0, a, V):
    return panel.Isc - I0 * math.expm1(V / a)


def fit_panel(panel: PvPanel) -> PvFit:
    """I(0) = Isc by construction; I0 and n*Vt chosen so I(Voc) = 0 and I(Vmp) = Imp."""

    def i0(a):
        # Isc / expm1(Voc/a), written to stay finite for small a
        return panel.Isc * math.exp(-panel.Voc / a) / -math.expm1(-panel.Voc / a)

    def g(a):
        ratio = (math.exp((panel.Vmp - panel.Voc) / a)
                 * math.expm1(-panel.Vmp / a) / math.expm1(-panel.Voc / a))
        return panel.Isc * (1 - ratio) - panel.Imp

    a = brentq(g, 1e-3 * panel.Voc, 10 * panel.Voc, xtol=1e-14, rtol=1e-14)
    I0 = i0(a)
    res = abs(_current(panel, I0, a, panel.Vmp) - panel.Imp) / panel.Imp
    return PvFit(I0, a, res)


def pv_operating_point(panel: PvPanel, V: float, fit: PvFit | None = None) -> float:
    if V > panel.Voc or V < 0:
        raise DomainError(f"V must lie in [0, Voc={panel.Voc}], got {V!r}")
    fit = fit or fit_panel(panel)
    return _current(panel, fit.I0, fit.a, V)
