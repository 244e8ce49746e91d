"""Exception hierarchy shared by all modules."""


class VacMirrorError(Exception):
    """Base class for every error raised by this package."""


class PoleError(VacMirrorError, ZeroDivisionError):
    """Evaluation exactly on a real-axis pole of a susceptibility."""

    def __init__(self, frequency, what="susceptibility"):
        self.frequency = frequency
        super().__init__(f"{what} has a pole at omega = {frequency!r}")


class SupportError(VacMirrorError, ValueError):
    """Tabulated model queried outside its reconstructed support."""


class DivergenceError(VacMirrorError, ArithmeticError):
    """A frequency integral diverges for the requested configuration."""


class StabilityError(VacMirrorError):
    """The coupled configuration fails the passivity/stability checks."""

    def __init__(self, report):
        self.report = report
        super().__init__(f"unstable configuration: {', '.join(report.flags) or 'failed checks'}")


class ParityError(VacMirrorError, ValueError):
    """A spectral function does not have the parity an operation requires."""


class ConvergenceError(VacMirrorError, RuntimeError):
    """An iterative solver did not converge."""


class ResolutionError(VacMirrorError, ValueError):
    """A grid is too coarse for the structure it must resolve."""


class FitError(VacMirrorError, ValueError):
    """A fit was declined because its window is outside the valid regime."""


class ConfigError(VacMirrorError, ValueError):
    """Invalid scenario configuration."""


class SynthesisError(VacMirrorError, ValueError):
    """A target spectrum cannot be realized on the requested sampling grid."""
