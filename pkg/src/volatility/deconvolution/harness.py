"""
Monte Carlo risk harness.

A scenario is either a known density g observed through i.i.d. X + eps, or an ARCH-type
process whose log-volatility density is approximated from a long pilot path. For every
sample size and replication the adaptive estimate and every grid model are scored by
their integrated squared error, giving the per-model risk table, the empirical oracle
m_breve and the adaptive-vs-oracle summary.

Example:
    cfg = ExperimentConfig.from_file('experiment.ini')
    report = run_experiment(cfg)
    for row in report.summary_rows():
        print(row)
"""

import dataclasses
import logging
import math
import typing as t
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
from scipy import integrate, stats

from volatility.deconvolution.config import Config, ConfigurationError
from volatility.deconvolution.deconvolution_exceptions import DeconvolutionError, DomainError
from volatility.deconvolution.estimation_model import CoefficientVector, DeconvEstimate, ModelIndex, Sample
from volatility.deconvolution.estimator import log_square_transform
from volatility.deconvolution.noise_models import NoiseModel, parse_noise
from volatility.deconvolution.process_model import InnovationLaw, ProcessSpec
from volatility.deconvolution.processes import derive_seed, parse_law, parse_model, simulate
from volatility.deconvolution.projection import (
    QuadratureSettings,
    TabulatedDensity,
    band_limited_density,
    l2_norm_sq,
    project_true_density
)
from volatility.deconvolution.selection import ModelSelector

logger = logging.getLogger(__name__)

DIRECT = 'direct'
PROCESS = 'process'
SCENARIOS = (DIRECT, PROCESS)

PILOT_SEED_INDEX = 2 ** 32
PILOT_BIN_WIDTH = 0.01

# relative change of the grid ISE under a step change that flags the grid as too coarse
COARSE_GRID_RTOL = 0.01
# relative disagreement between spectral and grid ISE reported on the cross-check
CROSSCHECK_RTOL = 0.01
_CROSSCHECK_ATOL = 1e-6

_WEIGHTED_CHUNK = 2_000_000


# ---------- Reference densities ----------

@dataclasses.dataclass(frozen=True)
class GaussianReference:
    """N(mean, sd^2) as the known density g of X"""
    mean: float = 0.0
    sd: float = 1.0
    approximate: t.ClassVar[bool] = False

    def __post_init__(self):
        if not self.sd > 0:
            raise DomainError(f"reference sd must be positive, got {self.sd}")

    @property
    def label(self) -> str:
        return f"normal:{self.mean:g},{self.sd:g}"

    def charfn(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.exp(1j * self.mean * x - 0.5 * (self.sd * x) ** 2)

    def pdf(self, x: np.ndarray) -> np.ndarray:
        return stats.norm.pdf(x, loc=self.mean, scale=self.sd)

    def norm_sq(self, settings: t.Optional[QuadratureSettings] = None) -> float:
        """||g||^2 = 1 / (2 sd sqrt(pi))"""
        return 1.0 / (2.0 * self.sd * math.sqrt(math.pi))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.normal(self.mean, self.sd, size)

    def tabulate(self, grid: np.ndarray, settings: t.Optional[QuadratureSettings] = None) -> TabulatedDensity:
        return TabulatedDensity(grid=grid, values=self.pdf(grid))

    def tail_mass(
        self,
        lo: float,
        hi: float,
        settings: t.Optional[QuadratureSettings] = None,
        tabulated: t.Optional[TabulatedDensity] = None
    ) -> float:
        """int g^2 outside [lo, hi]; g^2 is norm_sq times the N(mean, sd^2 / 2) density."""
        half = stats.norm(loc=self.mean, scale=self.sd / math.sqrt(2.0))
        return self.norm_sq() * float(half.cdf(lo) + half.sf(hi))


@dataclasses.dataclass(frozen=True, eq=False)
class EmpiricalReference:
    """
    Approximate density of X from a pilot sample: a fine histogram whose Fourier transform
    is kept on [-pi m, pi m] only, i.e. the histogram smoothed by the sinc projection at m.
    """
    centers: np.ndarray
    probabilities: np.ndarray
    bin_width: float
    pilot_m: float
    approximate: t.ClassVar[bool] = True

    @classmethod
    def from_sample(cls, x: np.ndarray, pilot_m: float, bin_width: float = PILOT_BIN_WIDTH) -> 'EmpiricalReference':
        x = np.asarray(x, dtype=float)
        if x.size < 2 or not np.all(np.isfinite(x)):
            raise DomainError("pilot sample must hold at least two finite values")
        lo = math.floor(float(x.min()) / bin_width) * bin_width
        hi = math.ceil(float(x.max()) / bin_width) * bin_width
        edges = lo + bin_width * np.arange(int(round((hi - lo) / bin_width)) + 2)
        counts, _ = np.histogram(x, bins=edges)
        keep = counts > 0
        centers = 0.5 * (edges[:-1] + edges[1:])
        return cls(
            centers=centers[keep],
            probabilities=counts[keep] / float(x.size),
            bin_width=float(bin_width),
            pilot_m=float(pilot_m)
        )

    @property
    def label(self) -> str:
        return f"pilot histogram smoothed at m={self.pilot_m:g}"

    def charfn(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros(x.shape, dtype=complex)
        inside = np.abs(x) <= np.pi * self.pilot_m * (1.0 + 1e-12)
        nodes = x[inside]
        values = np.empty(nodes.size, dtype=complex)
        chunk = max(1, _WEIGHTED_CHUNK // self.centers.size)
        for start in range(0, nodes.size, chunk):
            block = nodes[start:start + chunk]
            values[start:start + chunk] = np.exp(1j * np.multiply.outer(block, self.centers)) @ self.probabilities
        # each bin is spread uniformly over its width
        out[inside] = values * np.sinc(nodes * self.bin_width / (2.0 * np.pi))
        return out

    def norm_sq(self, settings: QuadratureSettings) -> float:
        return l2_norm_sq(self.charfn, self.pilot_m, settings)

    def tabulate(self, grid: np.ndarray, settings: QuadratureSettings) -> TabulatedDensity:
        return TabulatedDensity(grid=grid, values=band_limited_density(self.charfn, self.pilot_m, grid, settings))

    def tail_mass(
        self,
        lo: float,
        hi: float,
        settings: QuadratureSettings,
        tabulated: t.Optional[TabulatedDensity] = None
    ) -> float:
        """norm_sq minus the grid integral of g^2 (tabulated on [lo, hi] unless given)."""
        if tabulated is None:
            grid = np.arange(lo, hi + 0.5 * PILOT_BIN_WIDTH, PILOT_BIN_WIDTH)
            tabulated = self.tabulate(grid, settings)
        inside = _trapezoid(np.square(tabulated.values), tabulated.grid)
        return max(0.0, self.norm_sq(settings) - inside)


ReferenceDensity = t.Union[GaussianReference, EmpiricalReference]


def parse_density(label: str) -> GaussianReference:
    """Parse 'normal' or 'normal:mean,sd'."""
    head, _, body = label.strip().partition(':')
    if head.strip().lower() not in ('normal', 'gaussian'):
        raise ConfigurationError(f"Unknown reference density '{label}'. Supported: normal:mean,sd")
    if not body.strip():
        return GaussianReference()
    try:
        values = [float(v) for v in body.split(',')]
    except ValueError:
        raise ConfigurationError(f"Invalid parameters in reference density '{label}'")
    if len(values) != 2:
        raise ConfigurationError(f"normal takes mean,sd; got '{label}'")
    return GaussianReference(mean=values[0], sd=values[1])


# ---------- ISE ----------

@dataclasses.dataclass(frozen=True)
class IseResult:
    """Grid ISE with the reference tail mass already added and the coarse-grid flag"""
    value: float
    tail_mass: float
    coarse_step_value: float
    warning: t.Optional[str] = None

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _trapezoid(values: np.ndarray, grid: np.ndarray) -> float:
    return float(integrate.trapezoid(values, grid))


def ise(est: DeconvEstimate, g_ref: TabulatedDensity, tail_mass: float = 0.0) -> IseResult:
    """
    Integrated squared error of an estimate against a tabulated reference.

    The trapezoid integral of (estimate - g_ref)^2 over the reference grid plus the
    reference mass int g_ref^2 outside the grid. The same integral on every other grid
    point is the coarse-grid check: a relative change above 1% is reported as a warning.

    Args:
        est: Estimate to score
        g_ref: Reference density on a uniform grid
        tail_mass: int g_ref^2 outside the grid

    Returns:
        IseResult: ISE value (>= 0) and the check
    """
    grid = g_ref.grid
    sq = np.square(est.evaluate(grid) - g_ref.values)
    value = _trapezoid(sq, grid) + tail_mass
    coarse = value
    warning = None
    if grid.size >= 5:
        coarse = _trapezoid(sq[::2], grid[::2]) + tail_mass
        if abs(coarse - value) > COARSE_GRID_RTOL * max(value, np.finfo(float).tiny):
            warning = (
                f"ISE grid step {grid[1] - grid[0]:g} looks too coarse at m={est.m:g}: "
                f"{value:.6g} vs {coarse:.6g} at twice the step"
            )
            logger.warning(warning)
    return IseResult(value=max(value, 0.0), tail_mass=tail_mass, coarse_step_value=coarse, warning=warning)


def spectral_ise(est: CoefficientVector, reference: CoefficientVector, norm_sq: float) -> float:
    """||g_hat - g||^2 = ||g||^2 - 2 sum_j a_hat_j a_j(g) + sum_j a_hat_j^2, clipped at 0."""
    value = norm_sq - 2.0 * float(np.dot(est.coeffs, reference.coeffs)) + est.squared_norm()
    return max(value, 0.0)


def batch_means_standard_error(values: t.Sequence[float], batches: t.Optional[int] = None) -> float:
    """
    Standard error of the mean of a dependent series from nonoverlapping batch means.

    Args:
        values: Series
        batches: Number of batches (default floor(sqrt(N)))

    Returns:
        float: std(batch means) / sqrt(batches)
    """
    x = np.asarray(values, dtype=float)
    batches = int(math.isqrt(x.size)) if batches is None else int(batches)
    if batches < 2 or x.size < 2 * batches:
        raise DomainError(f"need at least two batches of two values, got {x.size} values in {batches} batches")
    size = x.size // batches
    means = x[:batches * size].reshape(batches, size).mean(axis=1)
    return float(np.std(means, ddof=1) / math.sqrt(batches))


def standard_error(values: t.Sequence[float]) -> float:
    """std / sqrt(R) of independent replications (0 for a single one)."""
    x = np.asarray(values, dtype=float)
    if x.size < 2:
        return 0.0
    return float(stats.sem(x))


# ---------- Experiment configuration ----------

@dataclasses.dataclass(frozen=True, eq=False)
class ExperimentConfig:
    """
    One Monte Carlo scenario.

    Attributes:
        name: Scenario label used in reports
        scenario: 'direct' (known g, i.i.d. X) or 'process' (ARCH-type path)
        noise: Noise model label (e.g. 'laplace:1')
        n_values: Sample sizes
        replications: Replications R per sample size
        seed: Master seed (None draws fresh entropy at run time)
        density: Reference density label of a direct scenario
        model: Process label of a process scenario
        law: Innovation law label of a process scenario
        settings: Numerical and selection settings
    """
    name: str
    noise: str
    n_values: t.Tuple[int, ...]
    replications: int
    scenario: str = DIRECT
    seed: t.Optional[int] = None
    density: str = 'normal:0,1'
    model: t.Optional[str] = None
    law: str = 'normal'
    settings: Config = dataclasses.field(default_factory=Config)

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigurationError(f"scenario must be one of {', '.join(SCENARIOS)}, got '{self.scenario}'")
        if self.replications < 1:
            raise ConfigurationError(f"replications must be >= 1, got {self.replications}")
        if not self.n_values or any(n < 2 for n in self.n_values):
            raise ConfigurationError(f"every sample size must be >= 2, got {list(self.n_values)}")
        if self.scenario == PROCESS and not self.model:
            raise ConfigurationError("a process scenario needs a model label")
        if self.seed is not None and self.seed < 0:
            raise ConfigurationError(f"seed must be >= 0, got {self.seed}")

    def noise_model(self) -> NoiseModel:
        return parse_noise(self.noise)

    def process(self) -> t.Tuple[ProcessSpec, InnovationLaw]:
        return parse_model(self.model), parse_law(self.law)

    def with_seed(self, seed: t.Optional[int]) -> 'ExperimentConfig':
        return dataclasses.replace(self, seed=seed)

    def to_dict(self) -> dict:
        data = {
            "name": self.name,
            "scenario": self.scenario,
            "noise": self.noise,
            "n": list(self.n_values),
            "replications": self.replications,
            "seed": self.seed
        }
        if self.scenario == DIRECT:
            data["density"] = self.density
        else:
            data["model"] = self.model
            data["law"] = self.law
        data["settings"] = self.settings.to_dict()
        return data

    @classmethod
    def from_dict(
        cls,
        data: t.Mapping[str, t.Any],
        name: t.Optional[str] = None,
        base: t.Optional[Config] = None
    ) -> 'ExperimentConfig':
        """
        Build a scenario from flat key/value pairs.

        Keys: scenario, name, noise, n (comma-separated), replications, seed, density,
        model, law, plus any Config setting. Settings not given fall back to `base`.
        """
        settings, rest = Config.split_settings(data)
        known = {'name', 'scenario', 'noise', 'n', 'replications', 'seed', 'density', 'model', 'law'}
        unknown = set(rest) - known
        if unknown:
            raise ConfigurationError(f"Unknown experiment keys: {', '.join(sorted(unknown))}")
        settings.pop('seed', None)
        if 'noise' not in rest or 'n' not in rest:
            raise ConfigurationError("an experiment needs at least 'noise' and 'n'")
        try:
            n_values = tuple(int(v) for v in str(rest['n']).split(',') if v.strip())
            replications = int(rest.get('replications', 1))
            seed = data.get('seed')
            seed = None if seed in (None, '') else int(seed)
        except ValueError as e:
            raise ConfigurationError(f"Invalid experiment value: {e}")
        scenario = str(rest.get('scenario', PROCESS if rest.get('model') else DIRECT)).strip().lower()
        return cls(
            name=str(rest.get('name') or name or scenario),
            scenario=scenario,
            noise=str(rest['noise']),
            n_values=n_values,
            replications=replications,
            seed=seed,
            density=str(rest.get('density', 'normal:0,1')),
            model=rest.get('model'),
            law=str(rest.get('law', 'normal')),
            settings=base.replace(**settings) if base is not None else Config(**settings)
        )

    @classmethod
    def from_file(
        cls,
        config_file: t.Union[str, Path],
        environment: str = 'DEFAULT',
        base: t.Optional[Config] = None
    ) -> 'ExperimentConfig':
        """
        Read a flat key = value experiment file (or one section of an INI file).

        A file without the requested section is read from DEFAULT, so one --environment can
        select a section of the configuration file and leave flat experiment files alone.
        """
        data = Config.read_file(config_file, environment, section_optional=True)
        return cls.from_dict(data, name=Path(config_file).stem, base=base)


# ---------- Results ----------

@dataclasses.dataclass(frozen=True)
class ReplicationResult:
    n: int
    replication: int
    m_hat: float
    adaptive_ise: float
    ise_by_m: t.Tuple[float, ...]
    crosscheck: t.Optional[IseResult] = None


@dataclasses.dataclass(frozen=True, eq=False)
class SampleSizeRisk:
    """Per-model risk table and adaptive results at one sample size"""
    n: int
    models: t.Tuple[float, ...]
    ise_table: np.ndarray  # replications x models
    adaptive_ise: np.ndarray
    m_hats: t.Tuple[float, ...]

    @property
    def replications(self) -> int:
        return int(self.adaptive_ise.size)

    @property
    def mean_ise(self) -> t.Dict[float, float]:
        return dict(zip(self.models, self.ise_table.mean(axis=0).tolist()))

    @property
    def se_ise(self) -> t.Dict[float, float]:
        return {m: standard_error(self.ise_table[:, k]) for k, m in enumerate(self.models)}

    @property
    def oracle_m(self) -> float:
        """Empirical oracle: argmin of the mean ISE, ties to the smaller m."""
        return self.models[int(np.argmin(self.ise_table.mean(axis=0)))]

    @property
    def oracle_ise(self) -> np.ndarray:
        return self.ise_table[:, self.models.index(self.oracle_m)]

    @property
    def histogram(self) -> t.Dict[float, int]:
        counts = {m: 0 for m in self.models}
        for m in self.m_hats:
            counts[m] += 1
        return counts

    def summary(self) -> dict:
        adaptive_mean = float(self.adaptive_ise.mean())
        oracle_mean = float(self.oracle_ise.mean())
        adaptive_median = float(np.median(self.adaptive_ise))
        oracle_median = float(np.median(self.oracle_ise))
        return {
            "n": self.n,
            "adaptive_mean_ise": adaptive_mean,
            "adaptive_se": standard_error(self.adaptive_ise),
            "adaptive_median_ise": adaptive_median,
            "oracle_m": self.oracle_m,
            "oracle_mean_ise": oracle_mean,
            "oracle_se": standard_error(self.oracle_ise),
            "oracle_median_ise": oracle_median,
            "mean_ratio": adaptive_mean / oracle_mean if oracle_mean > 0 else math.inf,
            "median_ratio": adaptive_median / oracle_median if oracle_median > 0 else math.inf,
            "min_mean_ise": float(self.ise_table.mean(axis=0).min())
        }


@dataclasses.dataclass(frozen=True, eq=False)
class RiskReport:
    """Monte Carlo risk of one scenario over its sample sizes"""
    scenario: str
    noise: str
    reference: str
    approximate_reference: bool
    seed: int
    risks: t.Tuple[SampleSizeRisk, ...]
    warnings: t.Tuple[str, ...] = ()

    def risk(self, n: int) -> SampleSizeRisk:
        for risk in self.risks:
            if risk.n == n:
                return risk
        raise KeyError(n)

    def report_rows(self) -> t.List[dict]:
        rows = []
        for risk in self.risks:
            mean, se = risk.mean_ise, risk.se_ise
            for m in risk.models:
                rows.append({"scenario": self.scenario, "n": risk.n, "m": m, "mean_ise": mean[m], "se": se[m]})
        return rows

    def selection_rows(self) -> t.List[dict]:
        return [
            {"scenario": self.scenario, "n": risk.n, "m": m, "count": count}
            for risk in self.risks
            for m, count in risk.histogram.items()
        ]

    def summary_rows(self) -> t.List[dict]:
        rows = []
        for risk in self.risks:
            row = {"scenario": self.scenario}
            row.update(risk.summary())
            row["reference"] = "approximate" if self.approximate_reference else "exact"
            rows.append(row)
        return rows


# ---------- Runner ----------

class _ScenarioRunner:
    """Holds everything shared by the replications of one scenario"""

    def __init__(self, cfg: ExperimentConfig, seed: int):
        self.cfg = cfg
        self.seed = seed
        self.settings = cfg.settings.quadrature()
        self.noise = cfg.noise_model()
        self.selector: ModelSelector = cfg.settings.selector(self.noise)
        self.warnings: t.List[str] = []
        self.process: t.Optional[t.Tuple[ProcessSpec, InnovationLaw]] = None
        if cfg.scenario == PROCESS:
            self.process = cfg.process()
            self.reference: ReferenceDensity = self._pilot_reference()
        else:
            self.reference = parse_density(cfg.density)
        self.norm_sq = self.reference.norm_sq(self.settings)
        lo, hi, step = cfg.settings.ise_grid
        self.ise_grid = np.arange(int(round((hi - lo) / step)) + 1) * step + lo
        self._tabulated: t.Optional[TabulatedDensity] = None
        self._tail_mass = 0.0
        self._projections: t.Dict[t.Tuple[float, int], CoefficientVector] = {}

    def _pilot_reference(self) -> EmpiricalReference:
        spec, law = self.process
        length = self.cfg.settings.pilot_length
        logger.info(f"Simulating a pilot path of length {length} for the reference density")
        path = simulate(spec, law, length, self.cfg.settings.burn_in, derive_seed(self.seed, PILOT_SEED_INDEX))
        reference = EmpiricalReference.from_sample(path.x, self.cfg.settings.pilot_m)
        message = f"reference density of '{self.cfg.name}' is approximate ({reference.label})"
        logger.warning(message)
        self.warnings.append(message)
        return reference

    def models(self, n: int) -> t.List[float]:
        models = self.selector.grid(n)
        if isinstance(self.reference, EmpiricalReference):
            capped = [m for m in models if m <= self.reference.pilot_m]
            if len(capped) < len(models):
                message = f"models above the pilot cutoff m={self.reference.pilot_m:g} dropped at n={n}"
                logger.warning(message)
                self.warnings.append(message)
            models = capped
        if not models:
            raise ConfigurationError(f"no model left on the grid at n={n}")
        return models

    def prepare(self, n: int, models: t.Sequence[float]) -> None:
        """Fill the caches shared by the replications before they run concurrently."""
        k_n = n if self.cfg.settings.kn is None else self.cfg.settings.kn
        for m in models:
            self.selector.delta(m)
            self.projection(m, k_n)

    def projection(self, m: float, k_n: int) -> CoefficientVector:
        key = (m, k_n)
        if key not in self._projections:
            self._projections[key] = project_true_density(
                self.reference.charfn, ModelIndex(m=m, k_n=k_n), self.settings
            )
        return self._projections[key]

    def tabulated(self) -> t.Tuple[TabulatedDensity, float]:
        if self._tabulated is None:
            self._tabulated = self.reference.tabulate(self.ise_grid, self.settings)
            self._tail_mass = self.reference.tail_mass(
                self.ise_grid[0], self.ise_grid[-1], self.settings, self._tabulated
            )
        return self._tabulated, self._tail_mass

    def draw(self, n: int, seed: int) -> Sample:
        if self.process is not None:
            spec, law = self.process
            path = simulate(spec, law, n, self.cfg.settings.burn_in, seed)
            return log_square_transform(path.y)
        rng = np.random.default_rng(seed)
        x = self.reference.sample(rng, n)
        return Sample(z=x + self.noise.sample(rng, n))

    def replicate(self, n_index: int, n: int, replication: int, models: t.Sequence[float]) -> ReplicationResult:
        seed = derive_seed(self.seed, n_index * self.cfg.replications + replication)
        try:
            sample = self.draw(n, seed)
            result = self.selector.select(sample, models)
            scores = []
            for m in models:
                coeffs = result.candidates[m].coeffs
                scores.append(spectral_ise(coeffs, self.projection(m, coeffs.index.k_n), self.norm_sq))
            adaptive = scores[list(models).index(result.m_hat)]
            crosscheck = None
            if replication == 0:
                tabulated, tail = self.tabulated()
                crosscheck = ise(result.estimate, tabulated, tail)
        except DeconvolutionError as e:
            raise e.add_context(f"replication {replication}, n={n}")
        logger.debug(f"n={n} replication {replication}: m_hat={result.m_hat:g} ISE={adaptive:.6g}")
        return ReplicationResult(
            n=n,
            replication=replication,
            m_hat=result.m_hat,
            adaptive_ise=adaptive,
            ise_by_m=tuple(scores),
            crosscheck=crosscheck
        )

    def check(self, result: ReplicationResult) -> None:
        if result.crosscheck is None:
            return
        if result.crosscheck.warning:
            self.warnings.append(result.crosscheck.warning)
        grid_value = result.crosscheck.value
        if abs(grid_value - result.adaptive_ise) > CROSSCHECK_RTOL * max(result.adaptive_ise, 0.0) + _CROSSCHECK_ATOL:
            message = (
                f"grid ISE {grid_value:.6g} and spectral ISE {result.adaptive_ise:.6g} disagree at n={result.n}; "
                f"widen the ISE grid"
            )
            logger.warning(message)
            self.warnings.append(message)


def _resolve_seed(seed: t.Optional[int]) -> int:
    if seed is not None:
        return int(seed)
    fresh = int(np.random.SeedSequence().entropy) & 0xFFFFFFFFFFFFFFFF
    logger.info(f"No master seed given; drew {fresh}")
    return fresh


def _run(cfg: ExperimentConfig) -> t.Tuple[_ScenarioRunner, t.List[SampleSizeRisk]]:
    runner = _ScenarioRunner(cfg, _resolve_seed(cfg.seed))
    workers = cfg.settings.workers
    risks = []
    for n_index, n in enumerate(cfg.n_values):
        models = runner.models(n)
        runner.prepare(n, models)
        logger.info(f"Scenario '{cfg.name}': n={n}, {cfg.replications} replications over {len(models)} models")

        def work(replication: int, n_index=n_index, n=n, models=models) -> ReplicationResult:
            return runner.replicate(n_index, n, replication, models)

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(work, range(cfg.replications)))
        else:
            results = [work(r) for r in range(cfg.replications)]

        for result in results:
            runner.check(result)
        risks.append(SampleSizeRisk(
            n=n,
            models=tuple(models),
            ise_table=np.array([r.ise_by_m for r in results], dtype=float),
            adaptive_ise=np.array([r.adaptive_ise for r in results], dtype=float),
            m_hats=tuple(r.m_hat for r in results)
        ))
    return runner, risks


def empirical_oracle(cfg: ExperimentConfig) -> t.List[t.Tuple[int, t.Dict[float, float], float]]:
    """
    Per-model mean ISE over the replications and its argmin m_breve, for every n.

    Returns:
        list: (n, {m: mean ISE}, m_breve) per sample size
    """
    _, risks = _run(cfg)
    return [(risk.n, risk.mean_ise, risk.oracle_m) for risk in risks]


def run_experiment(cfg: ExperimentConfig) -> RiskReport:
    """
    Run every replication of a scenario and aggregate them in replication order.

    Args:
        cfg: Scenario

    Returns:
        RiskReport: per-model risks, selection histogram and adaptive-vs-oracle summary

    Raises:
        DeconvolutionError: From any replication, with its index in the message
    """
    runner, risks = _run(cfg)
    return RiskReport(
        scenario=cfg.name,
        noise=runner.noise.label,
        reference=runner.reference.label,
        approximate_reference=runner.reference.approximate,
        seed=runner.seed,
        risks=tuple(risks),
        warnings=tuple(dict.fromkeys(runner.warnings))
    )
