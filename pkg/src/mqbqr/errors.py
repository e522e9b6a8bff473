"""Exception types shared across the package."""


class ConverterError(Exception):
    """Base class."""


class DomainError(ConverterError, ValueError):
    pass


class NumericalError(ConverterError):
    """Raised for diverged, unstable or singular numerical problems."""


class DivergedError(NumericalError):
    def __init__(self, phase, t=None, msg=None):
        self.phase = phase
        self.t = t
        where = f" at t={t:.6g} s" if t is not None else ""
        super().__init__(msg or f"state became non-finite during the {phase} phase{where}")


class UnstableOrbitError(NumericalError):
    def __init__(self, rho):
        self.rho = float(rho)
        super().__init__(f"cycle map is not contractive: spectral radius {self.rho:.12g} >= 1")


class MarginalStabilityError(NumericalError):
    pass


class SingularEquilibriumError(NumericalError):
    pass


class CoverageError(ConverterError):
    pass
