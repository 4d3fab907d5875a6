"""
Penalized model selection over a grid of spectral cutoffs.

The criterion for a model m is the empirical contrast -sum_j a_hat_{m,j}^2 plus

    pen(m) = low * a * Delta(m) / n                                   if delta < 1/3
    pen(m) = high * a * lambda3 * Delta(m) * m^min((3 delta/2 - 1/2)+, delta) / n   otherwise

where Delta(m) = (1 / 2 pi) int_{-pi m}^{pi m} |f_eps*(x)|^-2 dx. The 'theoretical' preset uses
low = 192, high = 64 with the lambda3 factor; the 'practical' preset keeps the shape of the
penalty with unit leading constants and no lambda3 factor.
"""

import dataclasses
import logging
import math
import typing as t

import numpy as np

from volatility.deconvolution.config import ConfigurationError
from volatility.deconvolution.deconvolution_exceptions import (
    AdmissibilityError,
    DomainError,
    InfeasibleCollectionError,
    RangeOverflowError
)
from volatility.deconvolution.estimation_model import (
    DeconvEstimate,
    ModelIndex,
    PenaltyProfile,
    PenaltyRow,
    Sample,
    SelectionResult
)
from volatility.deconvolution.estimator import EmpiricalCharfnTable, estimate_density
from volatility.deconvolution.noise_models import NoiseModel
from volatility.deconvolution.projection import (
    DEFAULT_SETTINGS,
    QuadratureSettings,
    SpectralLattice,
    half_range_integral
)

logger = logging.getLogger(__name__)

LOG_FLOAT_MAX = float(np.log(np.finfo(float).max))

DEFAULT_GRID_STEP = 0.25


@dataclasses.dataclass(frozen=True)
class PenaltyConstants:
    """Leading constants of the penalty"""
    low: float = 192.0
    high: float = 64.0
    use_lambda3: bool = True

    def __post_init__(self):
        if not self.low > 0 or not self.high > 0:
            raise DomainError("penalty constants must be positive")

    @classmethod
    def preset(cls, name: str) -> 'PenaltyConstants':
        name = name.strip().lower()
        if name == 'theoretical':
            return cls()
        if name == 'practical':
            return cls(low=1.0, high=1.0, use_lambda3=False)
        raise ConfigurationError(f"Unknown penalty preset '{name}'. Supported: theoretical, practical")

    def replace(self, **changes) -> 'PenaltyConstants':
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> 'PenaltyConstants':
        return cls(
            low=float(data.get('low', 192.0)),
            high=float(data.get('high', 64.0)),
            use_lambda3=bool(data.get('use_lambda3', True))
        )


THEORETICAL_CONSTANTS = PenaltyConstants()


@dataclasses.dataclass(frozen=True)
class BoundCheck:
    """Empirical check of Delta(m) <= 2 lambda1 Gamma(m) on a grid"""
    m1: t.Optional[float]
    upper_ratios: t.Dict[float, float]
    lower_ratios: t.Dict[float, float]

    def to_dict(self) -> dict:
        return {
            "m1": self.m1,
            "upper_ratios": dict(self.upper_ratios),
            "lower_ratios": dict(self.lower_ratios)
        }


def _check_m(m: float) -> None:
    if not np.isfinite(m) or m <= 0:
        raise DomainError(f"model index m must be positive, got {m}")


def _inverse_modulus_integral(nm: NoiseModel, m: float, power: float, settings: QuadratureSettings, what: str) -> float:
    def integrand(nodes: np.ndarray) -> np.ndarray:
        exponent = -power * nm.log_modulus(nodes)
        if float(np.max(exponent)) > LOG_FLOAT_MAX - 20.0:
            raise RangeOverflowError(
                f"{what} overflows for '{nm.label}' at m={m:g}; cap m at the admissible bound m_n",
                detail={"m": m}
            )
        return np.exp(exponent)

    return half_range_integral(integrand, np.pi * m, settings, what=f"{what} at m={m:g}") / np.pi


def delta(nm: NoiseModel, m: float, settings: QuadratureSettings = DEFAULT_SETTINGS) -> float:
    """Delta(m) = (1 / 2 pi) int_{-pi m}^{pi m} |f_eps*(x)|^-2 dx."""
    _check_m(m)
    return _inverse_modulus_integral(nm, m, 2.0, settings, "Delta")


def delta_half(nm: NoiseModel, m: float, settings: QuadratureSettings = DEFAULT_SETTINGS) -> float:
    """Delta_1/2(m) = (1 / 2 pi) int_{-pi m}^{pi m} |f_eps*(x)|^-1 dx."""
    _check_m(m)
    return _inverse_modulus_integral(nm, m, 1.0, settings, "Delta_1/2")


def log_gamma_fn(nm: NoiseModel, m: float) -> float:
    _check_m(m)
    sp = nm.smoothness
    x = np.pi * m
    value = sp.gamma * math.log1p(x * x) + (1.0 - sp.delta) * math.log(x)
    if sp.mu > 0:
        value += 2.0 * sp.mu * x ** sp.delta
    return value


def gamma_fn(nm: NoiseModel, m: float) -> float:
    """Gamma(m) = (1 + (pi m)^2)^gamma (pi m)^(1 - delta) exp(2 mu (pi m)^delta)."""
    log_value = log_gamma_fn(nm, m)
    if log_value > LOG_FLOAT_MAX:
        raise RangeOverflowError(f"Gamma(m) overflows for '{nm.label}' at m={m:g}", detail={"m": m})
    return math.exp(log_value)


def lambda1(nm: NoiseModel, kappa: t.Optional[float] = None) -> float:
    """lambda1 = 1 / (kappa^2 pi R), R = 1 if delta = 0 else 2 mu delta; kappa defaults to kappa0."""
    sp = nm.smoothness
    kappa = sp.kappa0 if kappa is None else kappa
    r = 1.0 if sp.delta == 0 else 2.0 * sp.mu * sp.delta
    return 1.0 / (kappa * kappa * np.pi * r)


def lambda3(nm: NoiseModel) -> float:
    """Known constant of the penalty for delta >= 1/3 (equal to 1 when mu = 0)."""
    sp = nm.smoothness
    if sp.mu == 0:
        return 1.0
    lam = lambda1(nm)
    lam_prime = lambda1(nm, sp.kappa0_prime)
    lead = 32.0 * sp.mu * np.pi ** sp.delta / lam_prime
    if sp.delta <= 1:
        factor = (np.sqrt(2.0) + 8.0) * nm.density_sup / sp.kappa0 * np.sqrt(lam)
    else:
        factor = 2.0 * lam
    return float(1.0 + lead * factor)


def penalty_exponent(nm: NoiseModel) -> float:
    d = nm.smoothness.delta
    return min(max(1.5 * d - 0.5, 0.0), d)


def max_model_bound(nm: NoiseModel, n: int) -> float:
    """Upper bound on pi * m_n."""
    if n < 1:
        raise DomainError(f"sample size must be >= 1, got {n}")
    sp = nm.smoothness
    if sp.delta == 0:
        return float(n) ** (1.0 / (2.0 * sp.gamma + 1.0))
    lead = math.log(n) / (2.0 * sp.mu)
    if lead <= 0:
        return 0.0
    inner = lead + (2.0 * sp.gamma + 1.0 - sp.delta) / (2.0 * sp.delta * sp.mu) * math.log(lead)
    if inner <= 0:
        return 0.0
    return inner ** (1.0 / sp.delta)


def max_model_index(nm: NoiseModel, n: int, grid_step: float = DEFAULT_GRID_STEP) -> float:
    """
    Largest grid m with pi * m <= the admissibility bound.

    Raises:
        InfeasibleCollectionError: If the bound is below pi * grid_step
    """
    if not grid_step > 0:
        raise DomainError(f"grid step must be positive, got {grid_step}")
    bound = max_model_bound(nm, n)
    count = math.floor(bound / (np.pi * grid_step) * (1.0 + 1e-12))
    if count < 1:
        raise InfeasibleCollectionError(
            f"no admissible model for '{nm.label}' at n={n}: pi*m_n bound {bound:.4g} is below pi*step "
            f"({np.pi * grid_step:.4g}); use a finer grid step",
            detail={"bound": bound, "step": grid_step}
        )
    return count * grid_step


def model_grid(grid_step: float, m_max: float) -> t.List[float]:
    """The grid {step, 2 step, ...} up to m_max."""
    count = int(math.floor(m_max / grid_step * (1.0 + 1e-12)))
    return [k * grid_step for k in range(1, count + 1)]


def kappa_a(a: float) -> float:
    if a <= 1:
        raise DomainError(f"a must be > 1, got {a}")
    return (a + 1.0) / (a - 1.0)


def c_a(a: float) -> float:
    """Leading constant of the adaptive risk bound, max(kappa_a^2, 2 kappa_a)."""
    k = kappa_a(a)
    return max(k * k, 2.0 * k)


def oracle_bound(terms: t.Mapping[float, float], a: float) -> float:
    """C_a times the smallest per-model risk term."""
    if not terms:
        raise InfeasibleCollectionError("oracle bound needs at least one model")
    return c_a(a) * min(terms.values())


class ModelSelector:
    """
    Penalized model choice for one noise model.

    Delta(m) values are cached per m; one empirical characteristic function table
    is shared by every candidate model of a selection sweep.

    Example:
        selector = ModelSelector(parse_noise('laplace:1'), a=2.0)
        result = selector.select(sample)
        print(result.m_hat)
    """

    def __init__(
        self,
        noise: NoiseModel,
        a: float = 2.0,
        grid_step: float = DEFAULT_GRID_STEP,
        grid_max: t.Optional[float] = None,
        constants: PenaltyConstants = THEORETICAL_CONSTANTS,
        settings: QuadratureSettings = DEFAULT_SETTINGS,
        kn: t.Optional[int] = None
    ):
        kappa_a(a)
        if not grid_step > 0:
            raise DomainError(f"grid step must be positive, got {grid_step}")
        self.noise = noise
        self.a = float(a)
        self.grid_step = float(grid_step)
        self.grid_max = grid_max
        self.constants = constants
        self.settings = settings
        self.kn = kn
        self._delta_cache: t.Dict[float, float] = {}
        self._lambda3 = lambda3(noise)

    def delta(self, m: float) -> float:
        if m not in self._delta_cache:
            self._delta_cache[m] = delta(self.noise, m, self.settings)
        return self._delta_cache[m]

    def max_model_index(self, n: int) -> float:
        return max_model_index(self.noise, n, self.grid_step)

    def grid(self, n: int) -> t.List[float]:
        m_n = self.max_model_index(n)
        if self.grid_max is not None:
            if self.grid_max < self.grid_step:
                raise InfeasibleCollectionError(
                    f"grid_max={self.grid_max:g} is below the grid step {self.grid_step:g}"
                )
            m_n = min(m_n, self.grid_max)
        return model_grid(self.grid_step, m_n)

    def penalty(self, m: float, n: int) -> float:
        _check_m(m)
        bound = max_model_bound(self.noise, n)
        if np.pi * m > bound * (1.0 + 1e-12):
            raise AdmissibilityError(
                f"m={m:g} exceeds the admissible bound (pi*m_n <= {bound:.4g}) for '{self.noise.label}' at n={n}",
                detail={"m": m, "bound": bound}
            )
        value = self.a * self.delta(m) / n
        if self.noise.smoothness.delta < 1.0 / 3.0:
            return self.constants.low * value
        factor = self._lambda3 if self.constants.use_lambda3 else 1.0
        return self.constants.high * factor * value * m ** penalty_exponent(self.noise)

    def profile(self, n: int, grid: t.Optional[t.Sequence[float]] = None) -> PenaltyProfile:
        models = self._admissible(grid, n)
        rows = tuple(
            PenaltyRow(
                m=m,
                delta=self.delta(m),
                delta_half=delta_half(self.noise, m, self.settings),
                gamma=gamma_fn(self.noise, m),
                penalty=self.penalty(m, n)
            )
            for m in models
        )
        return PenaltyProfile(
            a=self.a,
            noise=self.noise,
            n=n,
            m_n=self.max_model_index(n),
            lambda1=lambda1(self.noise),
            lambda3=self._lambda3,
            rows=rows
        )

    def _admissible(self, grid: t.Optional[t.Sequence[float]], n: int) -> t.List[float]:
        if grid is None:
            return self.grid(n)
        bound = max_model_bound(self.noise, n)
        models = sorted(float(m) for m in grid)
        admissible = [m for m in models if m > 0 and np.pi * m <= bound * (1.0 + 1e-12)]
        if len(admissible) < len(models):
            logger.warning(
                f"Dropped {len(models) - len(admissible)} grid models above the admissible bound "
                f"(pi*m_n <= {bound:.4g}) for '{self.noise.label}' at n={n}"
            )
        if not admissible:
            raise InfeasibleCollectionError(
                f"no admissible model in the grid for '{self.noise.label}' at n={n}",
                detail={"bound": bound}
            )
        return admissible

    def select(self, sample: Sample, grid: t.Optional[t.Sequence[float]] = None) -> SelectionResult:
        """
        Choose m_hat = argmin over the grid of -sum_j a_hat_{m,j}^2 + pen(m).

        Ties go to the smaller m.
        """
        models = self._admissible(grid, sample.n)
        k_n = sample.n if self.kn is None else self.kn
        if k_n < sample.n:
            logger.warning(f"k_n={k_n} is below n={sample.n}; high-order coefficients are truncated")
        lattice = SpectralLattice.shared(models, self.settings, unit=self.grid_step) \
            or SpectralLattice.shared(models, self.settings)
        table = EmpiricalCharfnTable(sample, lattice) if lattice is not None else None

        criterion: t.Dict[float, float] = {}
        contrasts: t.Dict[float, float] = {}
        penalties: t.Dict[float, float] = {}
        candidates: t.Dict[float, DeconvEstimate] = {}
        best: t.Optional[float] = None
        for m in models:
            estimate = estimate_density(sample, ModelIndex(m=m, k_n=k_n), self.noise, self.settings, table)
            pen = self.penalty(m, sample.n)
            candidates[m] = estimate
            contrasts[m] = estimate.contrast
            penalties[m] = pen
            criterion[m] = estimate.contrast + pen
            logger.debug(f"m={m:g}: contrast={estimate.contrast:.6g} pen={pen:.6g}")
            if best is None or criterion[m] < criterion[best]:
                best = m

        logger.debug(f"Selected m_hat={best:g} among {len(models)} models")
        return SelectionResult(
            m_hat=best,
            criterion=criterion,
            contrasts=contrasts,
            penalties=penalties,
            estimate=candidates[best],
            candidates=candidates
        )

    def bound_check(self, grid: t.Sequence[float]) -> BoundCheck:
        return delta_upper_bound_check(self.noise, grid, self.settings)


def penalty(
    nm: NoiseModel,
    m: float,
    n: int,
    a: float = 2.0,
    constants: PenaltyConstants = THEORETICAL_CONSTANTS,
    settings: QuadratureSettings = DEFAULT_SETTINGS
) -> float:
    """
    pen(m) for a noise model, sample size n and tuning constant a > 1.

    Raises:
        AdmissibilityError: If pi * m exceeds the admissible bound
    """
    if n < 1:
        raise DomainError(f"sample size must be >= 1, got {n}")
    return ModelSelector(nm, a=a, constants=constants, settings=settings).penalty(m, n)


def penalty_profile(
    nm: NoiseModel,
    n: int,
    a: float = 2.0,
    grid: t.Optional[t.Sequence[float]] = None,
    grid_step: float = DEFAULT_GRID_STEP,
    constants: PenaltyConstants = THEORETICAL_CONSTANTS,
    settings: QuadratureSettings = DEFAULT_SETTINGS
) -> PenaltyProfile:
    return ModelSelector(nm, a=a, grid_step=grid_step, constants=constants, settings=settings).profile(n, grid)


def select_model(
    s: Sample,
    nm: NoiseModel,
    a: float = 2.0,
    grid: t.Optional[t.Sequence[float]] = None,
    grid_step: float = DEFAULT_GRID_STEP,
    constants: PenaltyConstants = THEORETICAL_CONSTANTS,
    settings: QuadratureSettings = DEFAULT_SETTINGS,
    kn: t.Optional[int] = None
) -> SelectionResult:
    """
    Penalized choice of the model index.

    Args:
        s: Log-squared observations
        nm: Noise model
        a: Penalty tuning constant, a > 1
        grid: Candidate models (default: the grid up to m_n)
        grid_step: Step of the default grid and of the shared spectral lattice
        constants: Penalty leading constants
        settings: Quadrature settings
        kn: Coefficient truncation (default n)

    Returns:
        SelectionResult: m_hat, criterion table and the winning estimate

    Raises:
        InfeasibleCollectionError: If no grid model is admissible
    """
    selector = ModelSelector(nm, a=a, grid_step=grid_step, constants=constants, settings=settings, kn=kn)
    return selector.select(s, grid)


def delta_upper_bound_check(
    nm: NoiseModel,
    grid: t.Sequence[float],
    settings: QuadratureSettings = DEFAULT_SETTINGS
) -> BoundCheck:
    """
    Report the smallest grid m1 from which Delta(m) <= 2 lambda1 Gamma(m) holds on the rest
    of the grid, together with Delta / (lambda1 Gamma) and Delta / (lambda1' Gamma) ratios.
    """
    models = sorted(float(m) for m in grid)
    lam = lambda1(nm)
    lam_prime = lambda1(nm, nm.smoothness.kappa0_prime)
    upper: t.Dict[float, float] = {}
    lower: t.Dict[float, float] = {}
    for m in models:
        log_delta = math.log(delta(nm, m, settings))
        log_g = log_gamma_fn(nm, m)
        upper[m] = math.exp(log_delta - math.log(lam) - log_g)
        lower[m] = math.exp(log_delta - math.log(lam_prime) - log_g)

    m1: t.Optional[float] = None
    for m in reversed(models):
        if upper[m] <= 2.0:
            m1 = m
        else:
            break
    if m1 is None:
        logger.warning(f"Delta <= 2 lambda1 Gamma fails at the top of the grid for '{nm.label}'")
    return BoundCheck(m1=m1, upper_ratios=upper, lower_ratios=lower)
