import typing as t


class DeconvolutionError(Exception):
    """Base exception for all deconvolution errors"""

    def __init__(
        self,
        code: str,
        message: str,
        detail: t.Any = None
    ):
        """
        Initialize the base deconvolution exception.

        Args:
            code: Machine-readable error code, printed by the CLI
            message: Human-readable error message
            detail: Optional structured context (offending value, index, ...)
        """
        self.code = code
        self.message = message
        self.detail = detail
        super().__init__(self._format())

    def _format(self) -> str:
        return f"[{self.code}] {self.message}"

    def add_context(self, note: str) -> 'DeconvolutionError':
        """Append context (e.g. a replication index) to the message and return self."""
        self.message = f"{self.message} ({note})"
        self.args = (self._format(),)
        return self

    def __repr__(self):
        return f"{self.__class__.__name__}(code={self.code}, message='{self.message}', detail={self.detail!r})"


class DomainError(DeconvolutionError):
    """Invalid parameter values"""

    def __init__(self, message: str = "Parameter outside its domain", detail: t.Any = None):
        super().__init__(code="DOMAIN_ERROR", message=message, detail=detail)


class DegenerateObservationError(DeconvolutionError):
    """Zero observations cannot be log-transformed"""

    def __init__(self, message: str = "Observation equal to zero", detail: t.Any = None):
        super().__init__(code="DEGENERATE_OBSERVATION", message=message, detail=detail)


class NumericalError(DeconvolutionError):
    """Quadrature, root finding or symmetry checks failed"""

    def __init__(
        self,
        message: str = "Numerical procedure failed",
        detail: t.Any = None,
        code: str = "NUMERICAL_ERROR"
    ):
        super().__init__(code=code, message=message, detail=detail)


class IllPosednessError(NumericalError):
    """The noise Fourier transform underflows inside the spectral window"""

    def __init__(self, message: str = "Noise characteristic function underflows; use a smaller m", detail: t.Any = None):
        super().__init__(message=message, detail=detail, code="ILL_POSED")


class RangeOverflowError(NumericalError):
    """A spectral quantity overflows double precision"""

    def __init__(self, message: str = "Value overflows; cap m at the admissible bound m_n", detail: t.Any = None):
        super().__init__(message=message, detail=detail, code="RANGE_OVERFLOW")


class AdmissibilityError(DeconvolutionError):
    """Model index exceeds the admissible bound m_n"""

    def __init__(self, message: str = "Model index exceeds m_n", detail: t.Any = None):
        super().__init__(code="INADMISSIBLE_MODEL", message=message, detail=detail)


class InfeasibleCollectionError(DeconvolutionError):
    """No model of the grid is admissible"""

    def __init__(self, message: str = "Model collection is empty; use a finer grid step", detail: t.Any = None):
        super().__init__(code="INFEASIBLE_COLLECTION", message=message, detail=detail)


class StationarityError(DeconvolutionError):
    """Process parameters violate the stationarity condition"""

    def __init__(self, message: str = "Process is not stationary", detail: t.Any = None):
        super().__init__(code="NONSTATIONARY", message=message, detail=detail)


class SimulationError(DeconvolutionError):
    """The volatility recursion produced a nonfinite or degenerate state"""

    def __init__(self, message: str = "Simulation produced an invalid state", index: t.Optional[int] = None):
        self.index = index
        if index is not None:
            message = f"{message} at index {index}"
        super().__init__(code="SIMULATION_ERROR", message=message, detail=index)
