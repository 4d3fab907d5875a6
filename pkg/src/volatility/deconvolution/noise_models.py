"""
Known error densities f_eps for the log-volatility deconvolution problem.

A NoiseModel carries the Fourier transform f_eps*(x) = E exp(i x eps), its
complex logarithm where an overflow-safe form exists, the supremum of the
density and the smoothness constants (gamma, mu, delta, kappa0, kappa0')
of the sandwich

    kappa0 (x^2+1)^(-gamma/2) exp(-mu |x|^delta) <= |f_eps*(x)|
        <= kappa0' (x^2+1)^(-gamma/2) exp(-mu |x|^delta).
"""

import dataclasses
import logging
import typing as t

import numpy as np
from scipy import special

from volatility.deconvolution.config import ConfigurationError
from volatility.deconvolution.deconvolution_exceptions import DomainError

logger = logging.getLogger(__name__)

LN2 = float(np.log(2.0))
LOG_SQRT_PI = 0.5 * float(np.log(np.pi))

# relative violations below this are rounding, not a broken sandwich
SANDWICH_ROUNDING = 1e-12

ArrayFn = t.Callable[[np.ndarray], np.ndarray]
Sampler = t.Callable[[np.random.Generator, int], np.ndarray]


@dataclasses.dataclass(frozen=True)
class SmoothnessParams:
    gamma: float
    mu: float
    delta: float
    kappa0: float
    kappa0_prime: float

    def __post_init__(self):
        for name in ('gamma', 'mu', 'delta'):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise DomainError(f"{name} must be finite and >= 0, got {value}")
        if not self.kappa0 > 0 or not self.kappa0_prime > 0:
            raise DomainError("kappa0 and kappa0_prime must be positive")
        if self.kappa0 > self.kappa0_prime:
            raise DomainError(f"kappa0={self.kappa0} exceeds kappa0_prime={self.kappa0_prime}")
        if self.delta == 0 and self.gamma <= 0.5:
            raise DomainError(f"ordinary smooth noise needs gamma > 1/2, got {self.gamma}")
        if self.delta > 0 and self.mu <= 0:
            raise DomainError("super smooth noise (delta > 0) needs mu > 0")

    @property
    def super_smooth(self) -> bool:
        return self.delta > 0

    def log_envelope(self, x: np.ndarray) -> np.ndarray:
        """log of (x^2+1)^(-gamma/2) exp(-mu |x|^delta)"""
        x = np.abs(np.asarray(x, dtype=float))
        value = -0.5 * self.gamma * np.log1p(x * x)
        if self.mu > 0:
            value = value - self.mu * np.power(x, self.delta)
        return value

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> 'SmoothnessParams':
        return cls(
            gamma=float(data.get('gamma', 0.0)),
            mu=float(data.get('mu', 0.0)),
            delta=float(data.get('delta', 0.0)),
            kappa0=float(data.get('kappa0', 1.0)),
            kappa0_prime=float(data.get('kappa0_prime', 1.0))
        )


@dataclasses.dataclass(frozen=True, eq=False)
class NoiseModel:
    """A known error density, addressed by label (e.g. 'laplace:1.0')"""
    label: str
    charfn: ArrayFn
    density_sup: float
    smoothness: SmoothnessParams
    log_charfn_fn: t.Optional[ArrayFn] = None
    sampler: t.Optional[Sampler] = None

    def __post_init__(self):
        if not self.density_sup > 0:
            raise DomainError(f"density_sup must be positive, got {self.density_sup}")

    def log_charfn(self, x: t.Union[float, np.ndarray]) -> np.ndarray:
        """Complex logarithm of f_eps*; the real part is log |f_eps*|."""
        x = np.asarray(x, dtype=float)
        if self.log_charfn_fn is not None:
            return np.asarray(self.log_charfn_fn(x), dtype=complex)
        with np.errstate(divide='ignore'):
            return np.log(np.asarray(self.charfn(x), dtype=complex))

    def log_modulus(self, x: t.Union[float, np.ndarray]) -> np.ndarray:
        return np.real(self.log_charfn(x))

    def modulus(self, x: t.Union[float, np.ndarray]) -> np.ndarray:
        return np.exp(self.log_modulus(x))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.sampler is None:
            raise DomainError(f"noise model '{self.label}' has no sampler")
        return self.sampler(rng, size)

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "density_sup": self.density_sup,
            "smoothness": self.smoothness.to_dict()
        }


@dataclasses.dataclass(frozen=True)
class SandwichReport:
    """Worst relative violation of either sandwich inequality on a grid"""
    max_violation: float
    worst_x: float
    side: t.Optional[str]  # 'lower' | 'upper' | None

    @property
    def holds(self) -> bool:
        return self.max_violation == 0.0

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _from_log(log_fn: ArrayFn) -> ArrayFn:
    def charfn(x):
        return np.exp(log_fn(np.asarray(x, dtype=float)))
    return charfn


def _log_chi_squared_log_charfn(x: np.ndarray) -> np.ndarray:
    # |f*| = (cosh pi x)^(-1/2), written to stay finite for large |x|
    ax = np.abs(x)
    log_mod = 0.5 * LN2 - 0.5 * np.pi * ax - 0.5 * np.log1p(np.exp(-2.0 * np.pi * ax))
    phase = x * LN2 + np.imag(special.loggamma(0.5 + 1j * x))
    return log_mod + 1j * phase


def log_chi_squared() -> NoiseModel:
    """Law of ln(eta^2) for a standard normal eta."""
    log_fn = _log_chi_squared_log_charfn
    return NoiseModel(
        label='log_chi_squared',
        charfn=_from_log(log_fn),
        density_sup=float((2.0 * np.pi * np.e) ** -0.5),
        smoothness=SmoothnessParams(gamma=0.0, mu=np.pi / 2.0, delta=1.0, kappa0=1.0, kappa0_prime=float(np.sqrt(2.0))),
        log_charfn_fn=log_fn,
        sampler=lambda rng, size: np.log(np.square(rng.standard_normal(size)))
    )


def laplace(scale: float = 1.0) -> NoiseModel:
    _check_scale('laplace', scale)
    b2 = scale * scale
    log_fn = lambda x: -np.log1p(b2 * np.square(x)) + 0j
    return NoiseModel(
        label=f'laplace:{scale:g}',
        charfn=lambda x: 1.0 / (1.0 + b2 * np.square(np.asarray(x, dtype=float))) + 0j,
        density_sup=1.0 / (2.0 * scale),
        smoothness=SmoothnessParams(
            gamma=2.0, mu=0.0, delta=0.0, kappa0=min(1.0, 1.0 / b2), kappa0_prime=max(1.0, 1.0 / b2)
        ),
        log_charfn_fn=log_fn,
        sampler=lambda rng, size: rng.laplace(0.0, scale, size)
    )


def gaussian(sd: float = 1.0) -> NoiseModel:
    _check_scale('gaussian', sd)
    mu = 0.5 * sd * sd
    log_fn = lambda x: -mu * np.square(x) + 0j
    return NoiseModel(
        label=f'gaussian:{sd:g}',
        charfn=_from_log(log_fn),
        density_sup=1.0 / (sd * np.sqrt(2.0 * np.pi)),
        smoothness=SmoothnessParams(gamma=0.0, mu=mu, delta=2.0, kappa0=1.0, kappa0_prime=1.0),
        log_charfn_fn=log_fn,
        sampler=lambda rng, size: rng.normal(0.0, sd, size)
    )


def cauchy(scale: float = 1.0) -> NoiseModel:
    _check_scale('cauchy', scale)
    log_fn = lambda x: -scale * np.abs(x) + 0j
    return NoiseModel(
        label=f'cauchy:{scale:g}',
        charfn=_from_log(log_fn),
        density_sup=1.0 / (np.pi * scale),
        smoothness=SmoothnessParams(gamma=0.0, mu=scale, delta=1.0, kappa0=1.0, kappa0_prime=1.0),
        log_charfn_fn=log_fn,
        sampler=lambda rng, size: scale * rng.standard_cauchy(size)
    )


def _check_scale(name: str, scale: float) -> None:
    if not np.isfinite(scale) or scale <= 0:
        raise DomainError(f"{name} scale must be positive, got {scale}")


_BUILTINS: t.Dict[str, t.Callable[..., NoiseModel]] = {
    'log_chi_squared': log_chi_squared,
    'laplace': laplace,
    'gaussian': gaussian,
    'cauchy': cauchy,
}


def builtin_noise(label: str, scale: t.Optional[float] = None) -> NoiseModel:
    """
    Build one of the builtin noise models.

    Args:
        label: log_chi_squared, laplace, gaussian or cauchy
        scale: Scale (laplace, cauchy) or standard deviation (gaussian); default 1

    Returns:
        NoiseModel: exact characteristic function and smoothness constants

    Raises:
        ConfigurationError: unknown label
        DomainError: nonpositive scale
    """
    factory = _BUILTINS.get(label.strip().lower())
    if factory is None:
        raise ConfigurationError(
            f"Unknown noise model '{label}'. Supported: {', '.join(sorted(_BUILTINS))}"
        )
    if factory is log_chi_squared:
        if scale is not None:
            raise ConfigurationError("log_chi_squared takes no scale parameter")
        return factory()
    return factory(1.0 if scale is None else float(scale))


def parse_noise(label: str) -> NoiseModel:
    """Parse a CLI/config label such as 'laplace:1.0' or 'log_chi_squared'."""
    name, _, argument = label.partition(':')
    scale = None
    if argument.strip():
        try:
            scale = float(argument)
        except ValueError:
            raise ConfigurationError(f"Invalid noise parameter in '{label}'")
    return builtin_noise(name, scale)


def tabulated_noise(
    label: str,
    grid: t.Sequence[float],
    values: t.Sequence[complex],
    smoothness: SmoothnessParams,
    density_sup: float
) -> NoiseModel:
    """
    Noise model from tabulated f_eps* values on a nonnegative grid.

    Values are interpolated linearly (real and imaginary parts separately) and
    extended to negative x by Hermitian symmetry. Gate the result with
    validate_sandwich before use.
    """
    grid = np.asarray(grid, dtype=float)
    values = np.asarray(values, dtype=complex)
    if grid.ndim != 1 or grid.size < 2 or grid.shape != values.shape:
        raise DomainError("tabulated noise needs matching 1-d grid and value arrays of length >= 2")
    if grid[0] != 0.0 or np.any(np.diff(grid) <= 0):
        raise DomainError("tabulated noise grid must start at 0 and increase strictly")
    if abs(values[0] - 1.0) > 1e-12:
        raise DomainError(f"tabulated charfn(0) must be 1, got {values[0]}")
    if np.any(np.abs(values) == 0):
        raise DomainError("tabulated charfn vanishes on the grid")
    x_max = grid[-1]

    def charfn(x):
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        if np.any(ax > x_max):
            raise DomainError(f"tabulated noise '{label}' is only known on |x| <= {x_max}")
        value = np.interp(ax, grid, values.real) + 1j * np.interp(ax, grid, values.imag)
        return np.where(x < 0, np.conj(value), value)

    return NoiseModel(label=label, charfn=charfn, density_sup=float(density_sup), smoothness=smoothness)


def validate_sandwich(nm: NoiseModel, grid: t.Sequence[float]) -> SandwichReport:
    """
    Check the smoothness sandwich of a noise model on a grid.

    The relative violation of the lower bound is 1 - |f*|/lower and of the upper bound
    |f*|/upper - 1, both computed in log space.

    Returns:
        SandwichReport: worst violation, 0 when the sandwich holds on the grid
    """
    x = np.asarray(grid, dtype=float).ravel()
    if x.size == 0:
        raise DomainError("sandwich grid must be nonempty")
    sp = nm.smoothness
    log_mod = nm.log_modulus(x)
    log_env = sp.log_envelope(x)
    lower_gap = (np.log(sp.kappa0) + log_env) - log_mod
    upper_gap = log_mod - (np.log(sp.kappa0_prime) + log_env)
    lower = np.where(lower_gap > 0, -np.expm1(-lower_gap), 0.0)
    upper = np.where(upper_gap > 0, np.expm1(upper_gap), 0.0)
    lower[lower < SANDWICH_ROUNDING] = 0.0
    upper[upper < SANDWICH_ROUNDING] = 0.0

    i_low, i_up = int(np.argmax(lower)), int(np.argmax(upper))
    if lower[i_low] == 0 and upper[i_up] == 0:
        return SandwichReport(max_violation=0.0, worst_x=float(x[0]), side=None)
    if lower[i_low] >= upper[i_up]:
        report = SandwichReport(max_violation=float(lower[i_low]), worst_x=float(x[i_low]), side='lower')
    else:
        report = SandwichReport(max_violation=float(upper[i_up]), worst_x=float(x[i_up]), side='upper')
    logger.warning(
        f"Noise '{nm.label}' violates the {report.side} sandwich bound by {report.max_violation:.3g} at x={report.worst_x:g}"
    )
    return report
