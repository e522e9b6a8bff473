"""Modelling lab for a modified quadratic-boost quasi-resonant multiport converter."""
from .model import (ConverterParams, ModelVariant, Parasitics, SourceInputs, SwitchPhase,
                    build_phase_model, conduction_set, discrepancy_report, state_derivative)
from .simulator import SimConfig, find_steady_state, integrate_cycle, propagate_phase

__version__ = "0.1.0"
