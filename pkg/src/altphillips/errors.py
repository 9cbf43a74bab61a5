"""Exception hierarchy with machine-readable codes."""


class AltPhillipsError(Exception):
    """Base class. ``code`` is a stable identifier written into reports."""

    code = "error"

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details


class ParameterError(AltPhillipsError, ValueError):
    code = "parameter_error"


class ContractError(AltPhillipsError, ValueError):
    code = "contract_violation"


class StencilError(AltPhillipsError, IndexError):
    code = "stencil_error"


class DomainError(AltPhillipsError, ValueError):
    code = "domain_error"


class ConvergenceError(AltPhillipsError, RuntimeError):
    code = "convergence_error"


class DivergenceError(ConvergenceError):
    code = "divergence_error"


class DegenerateDataError(AltPhillipsError, ValueError):
    code = "degenerate_data"


class OracleError(AltPhillipsError, RuntimeError):
    code = "oracle_error"


class ValidationError(AltPhillipsError, ValueError):
    code = "validation_error"


class ManifestError(AltPhillipsError, ValueError):
    code = "manifest_error"
