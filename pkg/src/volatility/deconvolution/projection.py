"""
Sinc (Shannon) projection spaces and the spectral quadrature engine.

S_m is spanned by phi_{m,j}(x) = sqrt(m) sinc(m x - j), whose Fourier transforms are
m^(-1/2) exp(i x j / m) on [-pi m, pi m]. Coefficients are therefore spectral integrals

    a_{m,j} = 1 / (2 pi sqrt(m)) * int_{-pi m}^{pi m} exp(-i x j / m) h(x) dx,

computed for every |j| <= k_n in one sweep: h is interpolated linearly on a uniform
lattice, the exponential is integrated exactly (Filon weights) and the j-sweep is an
FFT. Successive lattice halvings are combined by Richardson extrapolation until the
coefficient vector stops moving.
"""

import dataclasses
import logging
import math
import typing as t

import numpy as np

from volatility.deconvolution.deconvolution_exceptions import DomainError, NumericalError
from volatility.deconvolution.estimation_model import CoefficientVector, ModelIndex

logger = logging.getLogger(__name__)

Spectrum = t.Callable[[np.ndarray], np.ndarray]

# raw coefficients may carry this much imaginary residue relative to their norm
IMAGINARY_RTOL = 1e-6

# rows of the sinc matrix evaluated at once in reconstruct()
_RECONSTRUCT_CHUNK = 256


@dataclasses.dataclass(frozen=True)
class QuadratureSettings:
    """
    Spectral quadrature settings.

    Attributes:
        base_nodes: Lattice intervals on [-pi, pi] at the coarsest level
        rtol: Relative change between successive extrapolated levels that counts as converged
        max_refinements: Maximum number of lattice halvings
    """
    base_nodes: int = 4096
    rtol: float = 1e-9
    max_refinements: int = 6

    def __post_init__(self):
        if self.base_nodes < 16:
            raise DomainError(f"base_nodes must be >= 16, got {self.base_nodes}")
        if not 0 < self.rtol < 1:
            raise DomainError(f"rtol must lie in (0, 1), got {self.rtol}")
        if self.max_refinements < 1:
            raise DomainError("max_refinements must be >= 1")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


DEFAULT_SETTINGS = QuadratureSettings()


@dataclasses.dataclass(frozen=True)
class SpectralLattice:
    """
    Nested uniform lattices on [0, pi m] shared by every m that is a multiple of `unit`.

    Level l has spacing pi * unit / (nodes_per_unit * 2^l); the half range [0, pi m]
    holds (m / unit) * nodes_per_unit * 2^l intervals.
    """
    unit: float
    nodes_per_unit: int

    @classmethod
    def for_unit(cls, unit: float, settings: QuadratureSettings = DEFAULT_SETTINGS) -> 'SpectralLattice':
        if not unit > 0:
            raise DomainError(f"lattice unit must be positive, got {unit}")
        nodes = max(8, int(math.ceil(unit * settings.base_nodes / 2.0)))
        return cls(unit=float(unit), nodes_per_unit=nodes)

    @classmethod
    def shared(
        cls,
        models: t.Sequence[float],
        settings: QuadratureSettings = DEFAULT_SETTINGS,
        unit: t.Optional[float] = None
    ) -> t.Optional['SpectralLattice']:
        """Lattice common to all models, or None when they are not multiples of one unit."""
        if not models:
            return None
        unit = float(min(models) if unit is None else unit)
        lattice = cls.for_unit(unit, settings)
        if all(lattice.is_multiple(m) for m in models):
            return lattice
        return None

    def is_multiple(self, m: float) -> bool:
        q = m / self.unit
        return round(q) >= 1 and abs(q - round(q)) <= 1e-9 * max(1.0, q)

    def multiple(self, m: float) -> int:
        if not self.is_multiple(m):
            raise DomainError(f"m={m} is not a multiple of the lattice unit {self.unit}")
        return int(round(m / self.unit))

    def spacing(self, level: int) -> float:
        return np.pi * self.unit / self.nodes_per_unit / 2.0 ** level

    def half_count(self, m: float, level: int) -> int:
        return self.multiple(m) * self.nodes_per_unit * 2 ** level

    def half_nodes(self, m: float, level: int) -> np.ndarray:
        return np.arange(self.half_count(m, level) + 1) * self.spacing(level)


def romberg(
    level_value: t.Callable[[int], np.ndarray],
    settings: QuadratureSettings,
    what: str
) -> np.ndarray:
    """
    Richardson-extrapolate a sequence of lattice halvings.

    Args:
        level_value: Returns the raw quadrature value (scalar or vector) at a level
        settings: Tolerance and maximum number of halvings
        what: Description used in log and error messages

    Returns:
        np.ndarray: Extrapolated value at the first converged level

    Raises:
        NumericalError: If the value still moves after max_refinements halvings
    """
    previous: t.Optional[t.List[np.ndarray]] = None
    change = scale = float('nan')
    for level in range(settings.max_refinements + 1):
        row = [np.atleast_1d(np.asarray(level_value(level)))]
        for p in range(1, level + 1):
            row.append(row[p - 1] + (row[p - 1] - previous[p - 1]) / (4.0 ** p - 1.0))
        if previous is not None:
            change = float(np.linalg.norm(row[-1] - previous[-1]))
            scale = float(np.linalg.norm(row[-1]))
            logger.debug(f"{what}: level {level} relative change {change / scale if scale else change:.3e}")
            if change <= settings.rtol * scale or change == 0.0:
                return row[-1]
        previous = row
    raise NumericalError(
        f"{what} did not converge after {settings.max_refinements} node doublings "
        f"(last relative change {change / scale if scale else change:.3e})",
        detail={"change": change, "scale": scale}
    )


def _filon_edge_weight(theta: np.ndarray) -> np.ndarray:
    """int_0^1 (1-u) exp(-i theta u) du"""
    theta = np.asarray(theta, dtype=float)
    out = np.empty(theta.shape, dtype=complex)
    small = np.abs(theta) < 0.1
    ts = theta[small]
    series = np.zeros(ts.shape, dtype=complex)
    term = np.ones(ts.shape, dtype=complex)
    for n in range(9):
        series += term / math.factorial(n + 2)
        term = term * (-1j * ts)
    out[small] = series
    tl = theta[~small]
    out[~small] = 1.0 / (1j * tl) + (1.0 - np.exp(-1j * tl)) / (tl * tl)
    return out


def filon_sweep(half_values: np.ndarray, spacing: float, k_n: int) -> np.ndarray:
    """
    Integrate exp(-i x j / m) h(x) over [-X, X] for j = -k_n..k_n.

    h is Hermitian (h(-x) = conj h(x)) and given on the half lattice x_k = k * spacing,
    k = 0..Q, with X = Q * spacing = pi m, so that j / m * spacing = 2 pi j / (2Q).
    The product with the piecewise-linear interpolant of h is integrated exactly.
    """
    half = np.asarray(half_values, dtype=complex)
    q = half.size - 1
    size = 2 * q
    full = np.concatenate([np.conj(half[:0:-1]), half])
    folded = full[:size].copy()
    folded[0] += full[size]
    spectrum = np.fft.fft(folded)

    js = np.arange(-k_n, k_n + 1)
    theta = 2.0 * np.pi * js / size
    s2 = np.square(np.sinc(theta / (2.0 * np.pi)))
    edge = _filon_edge_weight(theta)
    sign = np.where(js % 2 == 0, 1.0, -1.0)
    return spacing * sign * (s2 * spectrum[js % size] + (edge - s2) * full[0] + (np.conj(edge) - s2) * full[size])


def real_coefficients(raw: np.ndarray, what: str) -> np.ndarray:
    """Drop the imaginary residue of Hermitian spectral integrals after checking it."""
    raw = np.asarray(raw, dtype=complex)
    real = raw.real.copy()
    residue = float(np.max(np.abs(raw.imag))) if raw.size else 0.0
    norm = float(np.linalg.norm(real))
    if residue > IMAGINARY_RTOL * max(norm, np.finfo(float).tiny):
        raise NumericalError(
            f"{what}: imaginary residue {residue:.3e} exceeds {IMAGINARY_RTOL:g} x coefficient norm {norm:.3e}",
            detail={"residue": residue, "norm": norm}
        )
    return real


def spectral_coefficients(
    half_values: t.Callable[[np.ndarray, int], np.ndarray],
    index: ModelIndex,
    lattice: SpectralLattice,
    settings: QuadratureSettings,
    what: str
) -> CoefficientVector:
    """
    Coefficients (1 / (2 pi sqrt m)) int exp(-i x j / m) h(x) dx for |j| <= k_n.

    Args:
        half_values: (nodes, level) -> h on the nonnegative lattice nodes
        index: Model index (m, k_n)
        lattice: Lattice on which m is a multiple of the unit
        settings: Quadrature settings
        what: Description for messages
    """
    norm = 1.0 / (2.0 * np.pi * np.sqrt(index.m))

    def level_value(level: int) -> np.ndarray:
        nodes = lattice.half_nodes(index.m, level)
        return norm * filon_sweep(half_values(nodes, level), lattice.spacing(level), index.k_n)

    raw = romberg(level_value, settings, what)
    return CoefficientVector(index=index, coeffs=real_coefficients(raw, what))


def half_range_integral(
    integrand: t.Callable[[np.ndarray], np.ndarray],
    upper: float,
    settings: QuadratureSettings,
    what: str,
    lattice: t.Optional[SpectralLattice] = None,
    m: t.Optional[float] = None
) -> float:
    """int_0^upper of a smooth integrand by Romberg on the spectral lattice."""
    if lattice is None or m is None:
        m = upper / np.pi
        lattice = SpectralLattice.for_unit(m, settings)

    def level_value(level: int) -> np.ndarray:
        nodes = lattice.half_nodes(m, level)
        values = np.asarray(integrand(nodes), dtype=float)
        return lattice.spacing(level) * (np.sum(values) - 0.5 * (values[0] + values[-1]))

    return float(romberg(level_value, settings, what)[0])


def phi_eval(index: ModelIndex, j: int, x: t.Union[float, np.ndarray]) -> t.Union[float, np.ndarray]:
    """phi_{m,j}(x) = sqrt(m) sin(pi(mx - j)) / (pi(mx - j)), equal to sqrt(m) at mx = j."""
    value = np.sqrt(index.m) * np.sinc(index.m * np.asarray(x, dtype=float) - j)
    return float(value) if np.ndim(value) == 0 else value


@dataclasses.dataclass(frozen=True, eq=False)
class TabulatedDensity:
    """A density known by its values on a uniform grid (trapezoid Fourier transform)"""
    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if grid.ndim != 1 or grid.shape != values.shape or grid.size < 2:
            raise DomainError("tabulated density needs matching 1-d grid and values")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    def charfn(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        weights = np.empty_like(self.values)
        steps = np.diff(self.grid)
        weights[:-1] = 0.5 * steps
        weights[1:] += 0.5 * steps
        weighted = weights * self.values
        out = np.empty(x.shape, dtype=complex)
        chunk = max(1, 2_000_000 // self.grid.size)
        for start in range(0, x.size, chunk):
            stop = start + chunk
            out[start:stop] = np.exp(1j * np.multiply.outer(x[start:stop], self.grid)) @ weighted
        return out


def _as_spectrum(g: t.Union[Spectrum, TabulatedDensity]) -> Spectrum:
    if isinstance(g, TabulatedDensity):
        return g.charfn
    if callable(g):
        return g
    raise DomainError("density must be given by its Fourier transform or as a TabulatedDensity")


def project_true_density(
    g: t.Union[Spectrum, TabulatedDensity],
    index: ModelIndex,
    settings: QuadratureSettings = DEFAULT_SETTINGS,
    lattice: t.Optional[SpectralLattice] = None
) -> CoefficientVector:
    """
    Coefficients a_{m,j}(g) = <phi_{m,j}, g> of a density with known Fourier transform.

    Args:
        g: Fourier transform g*(x) = int exp(ixt) g(t) dt, or a TabulatedDensity
        index: Model index (m, k_n)
        settings: Quadrature settings
        lattice: Optional shared lattice (m must be a multiple of its unit)

    Returns:
        CoefficientVector: a_{m,j}(g), j = -k_n..k_n

    Raises:
        NumericalError: If the node doublings do not converge
    """
    spectrum = _as_spectrum(g)
    lattice = lattice or SpectralLattice.for_unit(index.m, settings)
    return spectral_coefficients(
        lambda nodes, level: spectrum(nodes),
        index,
        lattice,
        settings,
        what=f"projection at m={index.m:g}"
    )


def reconstruct(cv: CoefficientVector, grid: t.Sequence[float]) -> np.ndarray:
    """Pointwise sum_j coeffs[j] phi_{m,j}(x) on a grid."""
    x = np.atleast_1d(np.asarray(grid, dtype=float))
    m = cv.m
    j = cv.j.astype(float)
    out = np.empty(x.shape, dtype=float)
    for start in range(0, x.size, _RECONSTRUCT_CHUNK):
        block = x[start:start + _RECONSTRUCT_CHUNK]
        out[start:start + _RECONSTRUCT_CHUNK] = np.sinc(np.subtract.outer(m * block, j)) @ cv.coeffs
    return np.sqrt(m) * out


def l2_norm_sq(
    spectrum: Spectrum,
    m: float,
    settings: QuadratureSettings = DEFAULT_SETTINGS
) -> float:
    """(1 / 2 pi) int_{-pi m}^{pi m} |h(x)|^2 dx for a Hermitian spectrum h."""
    return half_range_integral(
        lambda nodes: np.square(np.abs(spectrum(nodes))),
        np.pi * m,
        settings,
        what=f"squared norm at m={m:g}"
    ) / np.pi


def band_limited_density(
    spectrum: Spectrum,
    m: float,
    grid: t.Sequence[float],
    settings: QuadratureSettings = DEFAULT_SETTINGS
) -> np.ndarray:
    """g_m(x) = (1 / 2 pi) int_{-pi m}^{pi m} exp(-itx) g*(t) dt on a grid."""
    x = np.atleast_1d(np.asarray(grid, dtype=float))
    lattice = SpectralLattice.for_unit(m, settings)

    def level_value(level: int) -> np.ndarray:
        nodes = lattice.half_nodes(m, level)
        weights = np.full(nodes.size, lattice.spacing(level))
        weights[0] *= 0.5
        weights[-1] *= 0.5
        weighted = weights * np.asarray(spectrum(nodes), dtype=complex)
        out = np.empty(x.shape, dtype=float)
        chunk = max(1, 2_000_000 // nodes.size)
        for start in range(0, x.size, chunk):
            phase = np.exp(-1j * np.multiply.outer(x[start:start + chunk], nodes))
            out[start:start + chunk] = np.real(phase @ weighted)
        return out / np.pi

    return romberg(level_value, settings, f"band-limited density at m={m:g}")
