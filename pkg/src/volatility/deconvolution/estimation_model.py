import dataclasses
import typing as t

import numpy as np

from volatility.deconvolution.deconvolution_exceptions import DomainError, NumericalError

if t.TYPE_CHECKING:
    from volatility.deconvolution.noise_models import NoiseModel


@dataclasses.dataclass(frozen=True)
class ModelIndex:
    """Spectral cutoff pi*m and coefficient truncation |j| <= k_n"""
    m: float
    k_n: int

    def __post_init__(self):
        if not np.isfinite(self.m) or self.m <= 0:
            raise DomainError(f"model index m must be positive, got {self.m}")
        if int(self.k_n) != self.k_n or self.k_n < 1:
            raise DomainError(f"truncation k_n must be an integer >= 1, got {self.k_n}")

    @property
    def cutoff(self) -> float:
        return float(np.pi * self.m)

    def to_dict(self) -> dict:
        return {"m": self.m, "k_n": self.k_n}

    @classmethod
    def from_dict(cls, data: dict) -> 'ModelIndex':
        return cls(m=float(data["m"]), k_n=int(data["k_n"]))


@dataclasses.dataclass(frozen=True, eq=False)
class CoefficientVector:
    """Coefficients a_{m,j}, j = -k_n..k_n, in the sinc basis of one model"""
    index: ModelIndex
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=float)
        if coeffs.shape != (2 * self.index.k_n + 1,):
            raise DomainError(
                f"expected {2 * self.index.k_n + 1} coefficients for k_n={self.index.k_n}, got shape {coeffs.shape}"
            )
        if not np.all(np.isfinite(coeffs)):
            raise NumericalError("coefficient vector has nonfinite entries")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def m(self) -> float:
        return self.index.m

    @property
    def j(self) -> np.ndarray:
        return np.arange(-self.index.k_n, self.index.k_n + 1)

    def coefficient(self, j: int) -> float:
        if abs(j) > self.index.k_n:
            return 0.0
        return float(self.coeffs[j + self.index.k_n])

    def squared_norm(self) -> float:
        return float(np.dot(self.coeffs, self.coeffs))

    def to_dict(self) -> dict:
        return {
            "index": self.index.to_dict(),
            "coeffs": self.coeffs.tolist()
        }

    @classmethod
    def zeros(cls, index: ModelIndex) -> 'CoefficientVector':
        return cls(index=index, coeffs=np.zeros(2 * index.k_n + 1))


@dataclasses.dataclass(frozen=True, eq=False)
class Sample:
    """Log-squared observations Z_t = ln(Y_t^2)"""
    z: np.ndarray

    def __post_init__(self):
        z = np.array(self.z, dtype=float).ravel()
        if z.size < 1:
            raise DomainError("sample must contain at least one observation")
        if not np.all(np.isfinite(z)):
            raise DomainError("sample contains nonfinite values")
        z.setflags(write=False)
        object.__setattr__(self, "z", z)

    @property
    def n(self) -> int:
        return int(self.z.size)

    def to_dict(self) -> dict:
        return {"n": self.n, "z": self.z.tolist()}


@dataclasses.dataclass(frozen=True, eq=False)
class DeconvEstimate:
    """Minimum-contrast estimate in one projection space"""
    coeffs: CoefficientVector
    contrast: float
    noise_label: str

    @property
    def m(self) -> float:
        return self.coeffs.m

    def evaluate(self, grid: t.Sequence[float]) -> np.ndarray:
        from volatility.deconvolution.projection import reconstruct
        return reconstruct(self.coeffs, grid)

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "k_n": self.coeffs.index.k_n,
            "contrast": self.contrast,
            "noise": self.noise_label
        }


@dataclasses.dataclass(frozen=True)
class PenaltyRow:
    m: float
    delta: float
    delta_half: float
    gamma: float
    penalty: float

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclasses.dataclass(frozen=True, eq=False)
class PenaltyProfile:
    """Penalty ingredients for one noise model, sample size and tuning constant"""
    a: float
    noise: 'NoiseModel'
    n: int
    m_n: float
    lambda1: float
    lambda3: float
    rows: t.Tuple[PenaltyRow, ...]

    @property
    def values(self) -> t.Dict[float, t.Tuple[float, float, float, float]]:
        return {row.m: (row.delta, row.delta_half, row.gamma, row.penalty) for row in self.rows}

    def to_dict(self) -> dict:
        return {
            "a": self.a,
            "noise": self.noise.label,
            "n": self.n,
            "m_n": self.m_n,
            "lambda1": self.lambda1,
            "lambda3": self.lambda3,
            "rows": [row.to_dict() for row in self.rows]
        }


@dataclasses.dataclass(frozen=True, eq=False)
class SelectionResult:
    """Outcome of the penalized model choice over a grid"""
    m_hat: float
    criterion: t.Dict[float, float]
    contrasts: t.Dict[float, float]
    penalties: t.Dict[float, float]
    estimate: DeconvEstimate
    candidates: t.Dict[float, DeconvEstimate] = dataclasses.field(default_factory=dict)

    def table(self) -> t.List[dict]:
        return [
            {
                "m": m,
                "contrast": self.contrasts[m],
                "penalty": self.penalties[m],
                "criterion": self.criterion[m]
            }
            for m in sorted(self.criterion)
        ]

    def to_dict(self) -> dict:
        return {
            "m_hat": self.m_hat,
            "estimate": self.estimate.to_dict(),
            "table": self.table()
        }
