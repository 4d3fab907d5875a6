import dataclasses
import typing as t

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import special, stats

from volatility.deconvolution.deconvolution_exceptions import DomainError


# ---------- Innovation laws ----------

@dataclasses.dataclass(frozen=True, eq=False)
class InnovationLaw:
    """Zero-mean, unit-variance law of eta with a density"""
    label: str
    distribution: t.Any  # frozen scipy.stats distribution
    df: t.Optional[float] = None  # degrees of freedom for student_t

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.asarray(self.distribution.rvs(size=size, random_state=rng), dtype=float)

    def has_moment(self, order: float) -> bool:
        """Whether E|eta|^order is finite."""
        return self.df is None or order < self.df

    def expect(self, fn: t.Callable[[np.ndarray], np.ndarray]) -> float:
        return float(self.distribution.expect(fn))

    def to_dict(self) -> dict:
        return {"label": self.label}


def standard_normal() -> InnovationLaw:
    return InnovationLaw(label='standard_normal', distribution=stats.norm())


def student_t(df: float) -> InnovationLaw:
    """Student t with df > 2 degrees of freedom rescaled to unit variance."""
    if not df > 2:
        raise DomainError(f"student_t needs df > 2 for a finite variance, got {df}")
    return InnovationLaw(
        label=f'student_t:{df:g}',
        distribution=stats.t(df, scale=np.sqrt((df - 2.0) / df)),
        df=float(df)
    )


def uniform_symmetric() -> InnovationLaw:
    """Uniform on [-sqrt 3, sqrt 3]."""
    half_width = np.sqrt(3.0)
    return InnovationLaw(label='uniform_symmetric', distribution=stats.uniform(loc=-half_width, scale=2.0 * half_width))


# ---------- ARCH(inf) coefficient families ----------

@dataclasses.dataclass(frozen=True)
class FiniteCoefficients:
    """a_1, ..., a_J given explicitly"""
    values: t.Tuple[float, ...]

    def __post_init__(self):
        if any(v < 0 for v in self.values):
            raise DomainError("ARCH(inf) coefficients must be nonnegative")

    def coefficients(self, count: int) -> np.ndarray:
        out = np.zeros(count)
        k = min(count, len(self.values))
        out[:k] = self.values[:k]
        return out

    def total(self) -> float:
        return float(sum(self.values))

    def tail(self, k: int) -> float:
        """sum_{j > k} a_j"""
        return float(sum(self.values[k:]))

    def truncation_lag(self, tol: float) -> int:
        return len(self.values)

    def to_dict(self) -> dict:
        return {"family": "finite", "values": list(self.values)}


@dataclasses.dataclass(frozen=True)
class GeometricCoefficients:
    """a_j = C b^j, 0 < b < 1"""
    scale: float
    rate: float

    def __post_init__(self):
        if self.scale < 0 or not 0 < self.rate < 1:
            raise DomainError(f"geometric family needs C >= 0 and 0 < b < 1, got C={self.scale}, b={self.rate}")

    def coefficients(self, count: int) -> np.ndarray:
        return self.scale * np.power(self.rate, np.arange(1, count + 1))

    def total(self) -> float:
        return self.scale * self.rate / (1.0 - self.rate)

    def tail(self, k: int) -> float:
        return self.scale * self.rate ** (k + 1) / (1.0 - self.rate)

    def truncation_lag(self, tol: float) -> int:
        if self.scale == 0:
            return 1
        lag = np.log(tol * (1.0 - self.rate) / self.scale) / np.log(self.rate) - 1.0
        return max(1, int(np.ceil(lag)))

    def to_dict(self) -> dict:
        return {"family": "geometric", "scale": self.scale, "rate": self.rate}


@dataclasses.dataclass(frozen=True)
class PolynomialCoefficients:
    """a_j = C j^-b, b > 1"""
    scale: float
    exponent: float

    def __post_init__(self):
        if self.scale < 0 or not self.exponent > 1:
            raise DomainError(f"polynomial family needs C >= 0 and b > 1, got C={self.scale}, b={self.exponent}")

    def coefficients(self, count: int) -> np.ndarray:
        return self.scale * np.power(np.arange(1, count + 1, dtype=float), -self.exponent)

    def total(self) -> float:
        return float(self.scale * special.zeta(self.exponent, 1))

    def tail(self, k: int) -> float:
        # Hurwitz zeta gives the exact tail sum_{j >= k+1} j^-b
        return float(self.scale * special.zeta(self.exponent, k + 1))

    def tail_bound(self, k: int) -> float:
        """Integral bound C k^(1-b) / (b-1) on the tail."""
        return self.scale * k ** (1.0 - self.exponent) / (self.exponent - 1.0)

    def truncation_lag(self, tol: float) -> int:
        if self.scale == 0:
            return 1
        lag = (tol * (self.exponent - 1.0) / self.scale) ** (1.0 / (1.0 - self.exponent))
        return max(1, int(np.ceil(lag)))

    def to_dict(self) -> dict:
        return {"family": "polynomial", "scale": self.scale, "exponent": self.exponent}


CoefficientFamily = t.Union[FiniteCoefficients, GeometricCoefficients, PolynomialCoefficients]


# ---------- Volatility transforms for augmented GARCH ----------

@dataclasses.dataclass(frozen=True, eq=False)
class VolatilityTransform:
    """Increasing continuous Lambda on (0, inf) with its inverse"""
    label: str
    forward: t.Callable[[float], float]
    inverse: t.Callable[[float], float]

    def to_dict(self) -> dict:
        return {"label": self.label}


IDENTITY = VolatilityTransform('identity', lambda v: v, lambda v: v)
LOG = VolatilityTransform('log', np.log, np.exp)


# ---------- Process specifications ----------

@dataclasses.dataclass(frozen=True)
class ARCH1:
    """sigma_t^2 = a + b Y_{t-1}^2"""
    a: float
    b: float
    label: t.ClassVar[str] = 'arch1'

    def to_dict(self) -> dict:
        return {"model": self.label, "a": self.a, "b": self.b}


@dataclasses.dataclass(frozen=True)
class GARCH:
    """sigma_t^2 = a + sum_i alpha_i Y_{t-i}^2 + sum_j beta_j sigma_{t-j}^2"""
    a: float
    alpha: t.Tuple[float, ...]
    beta: t.Tuple[float, ...] = ()
    label: t.ClassVar[str] = 'garch'

    @property
    def persistence(self) -> float:
        return float(sum(self.alpha) + sum(self.beta))

    def to_dict(self) -> dict:
        return {"model": self.label, "a": self.a, "alpha": list(self.alpha), "beta": list(self.beta)}


@dataclasses.dataclass(frozen=True)
class ARCHInf:
    """sigma_t^2 = a + sum_{j >= 1} a_j Y_{t-j}^2"""
    a: float
    coefficients: CoefficientFamily
    max_lag: int = 2000
    label: t.ClassVar[str] = 'archinf'

    def to_dict(self) -> dict:
        return {"model": self.label, "a": self.a, "coefficients": self.coefficients.to_dict(), "max_lag": self.max_lag}


@dataclasses.dataclass(frozen=True)
class ThresholdARCH:
    """sigma_t = a + b sigma_{t-1} eta_{t-1} 1{eta > 0} - c sigma_{t-1} eta_{t-1} 1{eta < 0}"""
    a: float
    b: float
    c: float
    label: t.ClassVar[str] = 'tarch'

    def to_dict(self) -> dict:
        return {"model": self.label, "a": self.a, "b": self.b, "c": self.c}


@dataclasses.dataclass(frozen=True, eq=False)
class NonlinearARCH:
    """sigma_t = f(sigma_{t-1} eta_{t-1}) with a declared bound on limsup |f(x)/x|"""
    f: t.Callable[[float], float]
    lipschitz_bound: float
    label: t.ClassVar[str] = 'nonlinear'

    def to_dict(self) -> dict:
        return {"model": self.label, "lipschitz_bound": self.lipschitz_bound}


@dataclasses.dataclass(frozen=True, eq=False)
class AugmentedGARCH:
    """Lambda(sigma_t^2) = c(eta_{t-1}) Lambda(sigma_{t-1}^2) + h(eta_{t-1}), c and h polynomial"""
    transform: VolatilityTransform
    c_coeffs: t.Tuple[float, ...]  # ascending powers of eta
    h_coeffs: t.Tuple[float, ...]
    label: t.ClassVar[str] = 'augmented'

    def c(self, eta):
        return P.polyval(eta, self.c_coeffs)

    def h(self, eta):
        return P.polyval(eta, self.h_coeffs)

    def to_dict(self) -> dict:
        return {
            "model": self.label,
            "transform": self.transform.label,
            "c": list(self.c_coeffs),
            "h": list(self.h_coeffs)
        }


ProcessSpec = t.Union[ARCH1, GARCH, ARCHInf, ThresholdARCH, NonlinearARCH, AugmentedGARCH]


@dataclasses.dataclass(frozen=True)
class StationarityCheck:
    passed: bool
    condition: str
    reason: t.Optional[str] = None

    def __bool__(self) -> bool:
        return self.passed

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclasses.dataclass(frozen=True, eq=False)
class SimulatedPath:
    """Simulated (Y_t, sigma_t) with X_t = ln sigma_t^2 and the innovations eta_t"""
    y: np.ndarray
    sigma: np.ndarray
    x: np.ndarray
    eta: np.ndarray

    def __iter__(self):
        return iter((self.y, self.sigma, self.x))

    @property
    def n(self) -> int:
        return int(self.y.size)

    def rows(self) -> t.Iterator[t.Tuple[int, float, float, float, float]]:
        for i in range(self.n):
            yield i, float(self.y[i]), float(self.sigma[i]), float(self.x[i]), float(self.eta[i])
