import logging
import typing as t

import numpy as np

from volatility.deconvolution.deconvolution_exceptions import (
    DegenerateObservationError,
    DomainError,
    IllPosednessError
)
from volatility.deconvolution.estimation_model import (
    CoefficientVector,
    DeconvEstimate,
    ModelIndex,
    Sample
)
from volatility.deconvolution.noise_models import NoiseModel
from volatility.deconvolution.projection import (
    DEFAULT_SETTINGS,
    QuadratureSettings,
    SpectralLattice,
    spectral_coefficients
)

logger = logging.getLogger(__name__)

# |f_eps*| below this inside [-pi m, pi m] makes the division meaningless
ILL_POSED_FLOOR = 1e-300
_LOG_ILL_POSED_FLOOR = float(np.log(ILL_POSED_FLOOR))

# complex exponentials evaluated per chunk (nodes x observations)
_ECF_CHUNK_ELEMENTS = 2_000_000


def log_square_transform(y: t.Sequence[float]) -> Sample:
    """
    Map returns Y_t to Z_t = ln(Y_t^2).

    Raises:
        DegenerateObservationError: If any observation is exactly zero
        DomainError: If any observation is not finite
    """
    y = np.asarray(y, dtype=float).ravel()
    zeros = np.flatnonzero(y == 0)
    if zeros.size:
        raise DegenerateObservationError(
            f"observation {int(zeros[0])} is zero; ln(Y^2) is undefined",
            detail={"indices": zeros[:10].tolist()}
        )
    if not np.all(np.isfinite(y)):
        raise DomainError("observations must be finite")
    return Sample(z=np.log(np.square(y)))


def empirical_charfn(s: Sample, x: t.Union[float, np.ndarray]) -> t.Union[complex, np.ndarray]:
    """(1/n) sum_t exp(i x Z_t), scalar or elementwise over an array of x."""
    xs = np.asarray(x, dtype=float)
    values = _empirical_charfn(s.z, np.atleast_1d(xs).ravel())
    if xs.ndim == 0:
        return complex(values[0])
    return values.reshape(xs.shape)


def _empirical_charfn(z: np.ndarray, nodes: np.ndarray) -> np.ndarray:
    out = np.empty(nodes.size, dtype=complex)
    chunk = max(1, _ECF_CHUNK_ELEMENTS // z.size)
    for start in range(0, nodes.size, chunk):
        block = nodes[start:start + chunk]
        out[start:start + chunk] = np.exp(1j * np.multiply.outer(block, z)).mean(axis=1)
    return out


class EmpiricalCharfnTable:
    """
    Empirical characteristic function of a sample cached on a SpectralLattice.

    Values are kept per lattice level on the nonnegative nodes k * spacing(level),
    grown on demand. Even nodes of a level are copied from the coarser level, so a
    selection sweep pays for each distinct node once.
    """

    def __init__(self, sample: Sample, lattice: SpectralLattice):
        self.sample = sample
        self.lattice = lattice
        self._levels: t.Dict[int, np.ndarray] = {}

    def values(self, level: int, count: int) -> np.ndarray:
        """ECF at k * spacing(level) for k = 0..count."""
        cached = self._levels.get(level)
        have = 0 if cached is None else cached.size
        if have > count:
            return cached[:count + 1]

        ks = np.arange(have, count + 1)
        fresh = np.empty(ks.size, dtype=complex)
        missing = np.ones(ks.size, dtype=bool)
        coarse = self._levels.get(level - 1)
        if coarse is not None:
            reuse = (ks % 2 == 0) & (ks // 2 < coarse.size)
            fresh[reuse] = coarse[ks[reuse] // 2]
            missing = ~reuse
        if np.any(missing):
            nodes = ks[missing] * self.lattice.spacing(level)
            fresh[missing] = _empirical_charfn(self.sample.z, nodes)

        table = fresh if cached is None else np.concatenate([cached, fresh])
        self._levels[level] = table
        logger.debug(f"ECF table level {level}: {table.size} nodes ({int(np.count_nonzero(missing))} evaluated)")
        return table[:count + 1]


def _reciprocal_on_nodes(nm: NoiseModel, nodes: np.ndarray, m: float) -> np.ndarray:
    log_cf = nm.log_charfn(nodes)
    worst = float(np.min(log_cf.real))
    if not worst >= _LOG_ILL_POSED_FLOOR:
        raise IllPosednessError(
            f"|f_eps*| of '{nm.label}' drops below {ILL_POSED_FLOOR:g} inside [-pi m, pi m] for m={m:g}; use a smaller m",
            detail={"m": m, "log_modulus": worst}
        )
    return np.exp(-log_cf)


def estimate_coefficients(
    s: Sample,
    index: ModelIndex,
    nm: NoiseModel,
    settings: QuadratureSettings = DEFAULT_SETTINGS,
    table: t.Optional[EmpiricalCharfnTable] = None
) -> CoefficientVector:
    """
    Deconvolution coefficients of the sinc basis.

    a_hat_{m,j} = (1 / (2 pi sqrt m)) int_{-pi m}^{pi m} exp(-i x j / m) ecf(x) / f_eps*(x) dx
    for every |j| <= k_n, with ecf the empirical characteristic function of Z.

    Args:
        s: Log-squared observations
        index: Model index (m, k_n)
        nm: Noise model
        settings: Quadrature settings
        table: Optional ECF table shared across models (m must sit on its lattice)

    Returns:
        CoefficientVector: real coefficients

    Raises:
        IllPosednessError: If |f_eps*| underflows inside the window
        NumericalError: On quadrature non-convergence or imaginary residue
    """
    if table is None or not table.lattice.is_multiple(index.m):
        table = EmpiricalCharfnTable(s, SpectralLattice.for_unit(index.m, settings))

    def half_values(nodes: np.ndarray, level: int) -> np.ndarray:
        return table.values(level, nodes.size - 1) * _reciprocal_on_nodes(nm, nodes, index.m)

    return spectral_coefficients(
        half_values,
        index,
        table.lattice,
        settings,
        what=f"coefficients at m={index.m:g} ({nm.label})"
    )


def estimate_density(
    s: Sample,
    index: ModelIndex,
    nm: NoiseModel,
    settings: QuadratureSettings = DEFAULT_SETTINGS,
    table: t.Optional[EmpiricalCharfnTable] = None
) -> DeconvEstimate:
    """Minimum-contrast estimate in S_m with contrast -sum_j a_hat_j^2."""
    cv = estimate_coefficients(s, index, nm, settings=settings, table=table)
    return DeconvEstimate(coeffs=cv, contrast=-cv.squared_norm(), noise_label=nm.label)


class DeconvolutionEstimator:
    """
    Projection deconvolution estimator for one noise model.

    Holds the quadrature settings and the truncation policy (k_n = n unless
    overridden) so that callers only pass a sample and a model index m.

    Example:
        estimator = DeconvolutionEstimator(parse_noise('laplace:1'))
        estimate = estimator.estimate(log_square_transform(y), m=1.0)
    """

    def __init__(
        self,
        noise: NoiseModel,
        settings: QuadratureSettings = DEFAULT_SETTINGS,
        kn: t.Optional[int] = None
    ):
        if kn is not None and kn < 1:
            raise DomainError(f"k_n must be >= 1, got {kn}")
        self.noise = noise
        self.settings = settings
        self.kn = kn

    def index_for(self, sample: Sample, m: float) -> ModelIndex:
        k_n = sample.n if self.kn is None else self.kn
        if k_n < sample.n:
            logger.warning(f"k_n={k_n} is below n={sample.n}; high-order coefficients are truncated")
        return ModelIndex(m=float(m), k_n=k_n)

    def table(self, sample: Sample, unit: float) -> EmpiricalCharfnTable:
        return EmpiricalCharfnTable(sample, SpectralLattice.for_unit(unit, self.settings))

    def coefficients(
        self,
        sample: Sample,
        m: float,
        table: t.Optional[EmpiricalCharfnTable] = None
    ) -> CoefficientVector:
        return estimate_coefficients(sample, self.index_for(sample, m), self.noise, self.settings, table)

    def estimate(
        self,
        sample: Sample,
        m: float,
        table: t.Optional[EmpiricalCharfnTable] = None
    ) -> DeconvEstimate:
        return estimate_density(sample, self.index_for(sample, m), self.noise, self.settings, table)
