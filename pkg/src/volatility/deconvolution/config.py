"""
Configuration module for the deconvolution library and CLI.

This module provides centralized configuration management with support for:
- INI files with a DEFAULT section and optional environment sections
- Flat key = value experiment files (read as the DEFAULT section)
- Environment variables as a fallback for the master seed and run options
- Factory methods for creating pre-configured estimators and selectors

Environment Variables:
    DECONV_SEED: Fallback master seed (every explicit setting or flag wins)
    DECONV_CONFIG_FILE: Default configuration file for the CLI
    DECONV_WORKERS: Number of worker threads for Monte Carlo replications
    DECONV_PENALTY_PRESET: Penalty calibration preset (theoretical or practical)
    DECONV_GRID_STEP: Model grid step
    DEBUG: Enable debug logging (true/false)
"""

import configparser
import logging
import os
import typing as t
from pathlib import Path

from volatility.deconvolution.deconvolution_exceptions import DeconvolutionError

logger = logging.getLogger(__name__)


class ConfigurationError(DeconvolutionError):
    """Raised when configuration is missing or invalid"""

    def __init__(self, message: str = "Invalid configuration", detail: t.Any = None):
        super().__init__(code="CONFIGURATION_ERROR", message=message, detail=detail)


PENALTY_PRESETS = ('theoretical', 'practical')


class Config:
    """
    Configuration manager for deconvolution runs.

    Loads settings from INI files or environment variables and provides factory methods
    for creating pre-configured quadrature settings, penalty constants, estimators and
    model selectors.

    Example from INI file:
        config = Config.from_file('config.ini', environment='FAST')
        selector = config.selector(parse_noise('laplace:1'))
        result = selector.select(sample)

    Example from environment variables:
        os.environ['DECONV_SEED'] = '1234'
        config = Config.from_env()
    """

    KEYS = (
        'quadrature_base_nodes', 'quadrature_rtol', 'quadrature_max_refinements',
        'grid_step', 'grid_max', 'a', 'penalty_preset', 'penalty_low', 'penalty_high',
        'penalty_lambda3', 'kn', 'burn_in', 'ise_grid_min', 'ise_grid_max', 'ise_grid_step',
        'pilot_length', 'pilot_m', 'workers', 'seed', 'debug'
    )

    def __init__(
        self,
        quadrature_base_nodes: t.Optional[t.Union[int, str]] = None,
        quadrature_rtol: t.Optional[t.Union[float, str]] = None,
        quadrature_max_refinements: t.Optional[t.Union[int, str]] = None,
        grid_step: t.Optional[t.Union[float, str]] = None,
        grid_max: t.Optional[t.Union[float, str]] = None,
        a: t.Optional[t.Union[float, str]] = None,
        penalty_preset: t.Optional[str] = None,
        penalty_low: t.Optional[t.Union[float, str]] = None,
        penalty_high: t.Optional[t.Union[float, str]] = None,
        penalty_lambda3: t.Optional[t.Union[bool, str]] = None,
        kn: t.Optional[t.Union[int, str]] = None,
        burn_in: t.Optional[t.Union[int, str]] = None,
        ise_grid_min: t.Optional[t.Union[float, str]] = None,
        ise_grid_max: t.Optional[t.Union[float, str]] = None,
        ise_grid_step: t.Optional[t.Union[float, str]] = None,
        pilot_length: t.Optional[t.Union[int, str]] = None,
        pilot_m: t.Optional[t.Union[float, str]] = None,
        workers: t.Optional[t.Union[int, str]] = None,
        seed: t.Optional[t.Union[int, str]] = None,
        debug: t.Optional[t.Union[bool, str]] = None
    ):
        """
        Initialize configuration with validation.

        Args:
            quadrature_base_nodes: Spectral nodes on [-pi, pi] at the coarsest level
            quadrature_rtol: Relative tolerance between successive node doublings
            quadrature_max_refinements: Maximum number of node doublings
            grid_step: Step of the model grid {step, 2*step, ...}
            grid_max: Optional upper cap on the model grid (below m_n)
            a: Penalty tuning constant, a > 1
            penalty_preset: 'theoretical' or 'practical' leading penalty constants
            penalty_low: Leading constant of the penalty when delta < 1/3
            penalty_high: Leading constant of the penalty when delta >= 1/3
            penalty_lambda3: Whether the delta >= 1/3 penalty carries lambda_3
            kn: Coefficient truncation k_n (None means k_n = n)
            burn_in: Simulation burn-in length
            ise_grid_min: Left end of the spatial ISE grid
            ise_grid_max: Right end of the spatial ISE grid
            ise_grid_step: Step of the spatial ISE grid
            pilot_length: Path length of the pilot reference for ARCH scenarios
            pilot_m: Spectral cutoff of the pilot reference density
            workers: Worker threads for Monte Carlo replications
            seed: Master seed (None draws fresh entropy)
            debug: Enable debug mode
        """
        self._base_nodes = self._as_int('quadrature_base_nodes', quadrature_base_nodes, 4096, minimum=16)
        self._rtol = self._as_float('quadrature_rtol', quadrature_rtol, 1e-9, positive=True)
        self._max_refinements = self._as_int('quadrature_max_refinements', quadrature_max_refinements, 6, minimum=1)
        self._grid_step = self._as_float('grid_step', grid_step, 0.25, positive=True)
        self._grid_max = self._as_float('grid_max', grid_max, None, positive=True)
        self._a = self._as_float('a', a, 2.0)
        self._penalty_preset = (penalty_preset or 'theoretical').strip().lower()
        self._penalty_low = self._as_float('penalty_low', penalty_low, None, positive=True)
        self._penalty_high = self._as_float('penalty_high', penalty_high, None, positive=True)
        self._penalty_lambda3 = self._as_bool('penalty_lambda3', penalty_lambda3, None)
        self._kn = self._as_int('kn', kn, None, minimum=1)
        self._burn_in = self._as_int('burn_in', burn_in, 5000, minimum=0)
        self._ise_grid_min = self._as_float('ise_grid_min', ise_grid_min, -10.0)
        self._ise_grid_max = self._as_float('ise_grid_max', ise_grid_max, 10.0)
        self._ise_grid_step = self._as_float('ise_grid_step', ise_grid_step, 0.01, positive=True)
        self._pilot_length = self._as_int('pilot_length', pilot_length, 1_000_000, minimum=1000)
        self._pilot_m = self._as_float('pilot_m', pilot_m, 8.0, positive=True)
        self._workers = self._as_int('workers', workers, 1, minimum=1)
        self._seed = self._as_int('seed', seed, None, minimum=0)
        self._debug = bool(self._as_bool('debug', debug, False))

        self._validate_config()

        # Cached collaborators
        self._quadrature = None
        self._penalty_constants = None

    def _validate_config(self):
        """Validate cross-field constraints"""
        if self._a <= 1:
            raise ConfigurationError(f"a must be > 1, got {self._a}. Set it in the config file or pass to Config()")
        if self._penalty_preset not in PENALTY_PRESETS:
            raise ConfigurationError(
                f"penalty_preset must be one of {', '.join(PENALTY_PRESETS)}, got '{self._penalty_preset}'. "
                f"Set DECONV_PENALTY_PRESET environment variable or pass to Config()"
            )
        if self._rtol >= 1:
            raise ConfigurationError(f"quadrature_rtol must be < 1, got {self._rtol}")
        if self._ise_grid_min >= self._ise_grid_max:
            raise ConfigurationError("ise_grid_min must be smaller than ise_grid_max")

    @staticmethod
    def _env_var(name: str) -> str:
        return f"DECONV_{name.upper()}"

    @classmethod
    def _as_float(cls, name: str, value: t.Any, default: t.Optional[float], positive: bool = False) -> t.Optional[float]:
        if value is None or value == '':
            return default
        try:
            number = float(value)
        except (TypeError, ValueError):
            raise ConfigurationError(
                f"{name} must be a number, got '{value}'. Set {cls._env_var(name)} or pass to Config()"
            )
        if positive and not number > 0:
            raise ConfigurationError(f"{name} must be positive, got {number}")
        return number

    @classmethod
    def _as_int(cls, name: str, value: t.Any, default: t.Optional[int], minimum: int = 0) -> t.Optional[int]:
        if value is None or value == '':
            return default
        if isinstance(value, bool):
            raise ConfigurationError(f"{name} must be an integer, got '{value}'")
        try:
            number = int(str(value).strip()) if not isinstance(value, int) else value
        except ValueError:
            raise ConfigurationError(
                f"{name} must be an integer, got '{value}'. Set {cls._env_var(name)} or pass to Config()"
            )
        if number < minimum:
            raise ConfigurationError(f"{name} must be >= {minimum}, got {number}")
        return number

    @staticmethod
    def _as_bool(name: str, value: t.Any, default: t.Optional[bool]) -> t.Optional[bool]:
        if value is None or value == '':
            return default
        if isinstance(value, bool):
            return value
        parsed = Config._parse_config_value(str(value))
        if not isinstance(parsed, bool):
            raise ConfigurationError(f"{name} must be a boolean, got '{value}'")
        return parsed

    # Property accessors

    @property
    def grid_step(self) -> float:
        return self._grid_step

    @property
    def grid_max(self) -> t.Optional[float]:
        return self._grid_max

    @property
    def a(self) -> float:
        return self._a

    @property
    def penalty_preset(self) -> str:
        return self._penalty_preset

    @property
    def kn(self) -> t.Optional[int]:
        """Coefficient truncation; None means k_n = n"""
        return self._kn

    @property
    def burn_in(self) -> int:
        return self._burn_in

    @property
    def ise_grid(self) -> t.Tuple[float, float, float]:
        return (self._ise_grid_min, self._ise_grid_max, self._ise_grid_step)

    @property
    def pilot_length(self) -> int:
        return self._pilot_length

    @property
    def pilot_m(self) -> float:
        return self._pilot_m

    @property
    def workers(self) -> int:
        return self._workers

    @property
    def seed(self) -> t.Optional[int]:
        return self._seed

    @property
    def debug(self) -> bool:
        return self._debug

    def to_dict(self) -> dict:
        return {
            'quadrature_base_nodes': self._base_nodes,
            'quadrature_rtol': self._rtol,
            'quadrature_max_refinements': self._max_refinements,
            'grid_step': self._grid_step,
            'grid_max': self._grid_max,
            'a': self._a,
            'penalty_preset': self._penalty_preset,
            'penalty_low': self._penalty_low,
            'penalty_high': self._penalty_high,
            'penalty_lambda3': self._penalty_lambda3,
            'kn': self._kn,
            'burn_in': self._burn_in,
            'ise_grid_min': self._ise_grid_min,
            'ise_grid_max': self._ise_grid_max,
            'ise_grid_step': self._ise_grid_step,
            'pilot_length': self._pilot_length,
            'pilot_m': self._pilot_m,
            'workers': self._workers,
            'seed': self._seed,
            'debug': self._debug
        }

    def replace(self, **overrides) -> 'Config':
        """Return a copy with the given settings overridden (None values are ignored)."""
        values = self.to_dict()
        values.update({key: value for key, value in overrides.items() if value is not None})
        return Config(**values)

    # Factory class methods for creating Config instances

    @classmethod
    def from_file(cls, config_file: t.Union[str, Path], environment: str = 'DEFAULT') -> 'Config':
        """
        Create Config instance from an INI configuration file.

        Example INI format with multiple environments:
        [DEFAULT]
        grid_step = 0.25
        a = 2.0

        [FAST]
        quadrature_base_nodes = 1024
        penalty_preset = practical

        A file without any section header is read as the DEFAULT section.

        Args:
            config_file: Path to configuration file (.ini, .cfg or .conf)
            environment: Section name to load from INI file (default: 'DEFAULT')

        Returns:
            Config: Initialized Config instance

        Raises:
            ConfigurationError: If file cannot be read or parsed, or holds unknown keys
            FileNotFoundError: If config file doesn't exist
        """
        config_data = cls.read_file(config_file, environment)
        settings, unknown = cls.split_settings(config_data)
        if unknown:
            raise ConfigurationError(
                f"Unknown configuration keys in {config_file}: {', '.join(sorted(unknown))}"
            )
        return cls(**settings)

    @classmethod
    def read_file(
        cls,
        config_file: t.Union[str, Path],
        environment: str = 'DEFAULT',
        section_optional: bool = False
    ) -> dict:
        """
        Read raw key/value pairs from a configuration file.

        With section_optional, a file that lacks the requested section is read from DEFAULT.
        """
        config_path = Path(config_file)

        if not config_path.exists():
            raise FileNotFoundError(f"Configuration file not found: {config_path}")

        ext = config_path.suffix.lower()

        try:
            if ext in ('.ini', '.cfg', '.conf', '.txt'):
                return cls._load_ini_config(config_path, environment, section_optional)
            raise ConfigurationError(
                f"Unsupported config file format: {ext}. "
                f"Supported formats: .ini, .cfg, .conf, .txt"
            )
        except Exception as e:
            if isinstance(e, (ConfigurationError, FileNotFoundError)):
                raise
            raise ConfigurationError(f"Failed to load configuration from {config_path}: {e}")

    @classmethod
    def split_settings(cls, data: t.Mapping[str, t.Any]) -> t.Tuple[dict, dict]:
        """Split raw file data into Config settings and remaining keys."""
        settings = {key: value for key, value in data.items() if key in cls.KEYS}
        rest = {key: value for key, value in data.items() if key not in cls.KEYS}
        return settings, rest

    @classmethod
    def from_env(cls) -> 'Config':
        """
        Create Config instance from environment variables.

        Example usage:
            import os
            os.environ['DECONV_SEED'] = '42'
            config = Config.from_env()

        Returns:
            Config: Initialized Config instance
        """
        return cls(
            seed=os.getenv('DECONV_SEED'),
            workers=os.getenv('DECONV_WORKERS'),
            penalty_preset=os.getenv('DECONV_PENALTY_PRESET'),
            grid_step=os.getenv('DECONV_GRID_STEP'),
            debug=os.getenv('DEBUG', '').lower() in ('true', '1', 'yes', 'on')
        )

    @staticmethod
    def _load_ini_config(config_path: Path, environment: str = 'DEFAULT', section_optional: bool = False) -> dict:
        """
        Load configuration from INI file for specified environment.

        Values from the specified environment section override values from the
        DEFAULT section. Files without section headers are read as DEFAULT.

        Args:
            config_path: Path to the INI configuration file
            environment: Section name to load (default: 'DEFAULT')

        Returns:
            dict: Configuration data merged from DEFAULT and environment section
        """
        text = config_path.read_text(encoding='utf-8')
        parser = configparser.ConfigParser(inline_comment_prefixes=('#', ';'))
        try:
            parser.read_string(text, source=str(config_path))
        except configparser.MissingSectionHeaderError:
            parser.read_string('[DEFAULT]\n' + text, source=str(config_path))

        config_data = {}

        if parser.defaults():
            for key, value in parser.defaults().items():
                config_data[key] = Config._parse_config_value(value)

        if environment != 'DEFAULT':
            if not parser.has_section(environment):
                if section_optional:
                    logger.debug(f"No [{environment}] section in {config_path}; reading DEFAULT")
                    return config_data
                raise ConfigurationError(f"Section [{environment}] not found in {config_path}")
            # items() already resolves section values over DEFAULT
            for key, value in parser.items(environment):
                config_data[key] = Config._parse_config_value(value)

        return config_data

    @staticmethod
    def _parse_config_value(value: str) -> t.Union[bool, str]:
        """Parse configuration value from string"""
        if value.lower() in ('true', 'yes', 'on'):
            return True
        elif value.lower() in ('false', 'no', 'off'):
            return False
        return value

    # Instance methods for creating collaborators

    def quadrature(self):
        """Get or create QuadratureSettings instance"""
        from volatility.deconvolution.projection import QuadratureSettings

        if self._quadrature is None:
            self._quadrature = QuadratureSettings(
                base_nodes=self._base_nodes,
                rtol=self._rtol,
                max_refinements=self._max_refinements
            )
        return self._quadrature

    def penalty_constants(self):
        """Get or create PenaltyConstants instance (preset plus explicit overrides)"""
        from volatility.deconvolution.selection import PenaltyConstants

        if self._penalty_constants is None:
            constants = PenaltyConstants.preset(self._penalty_preset)
            overrides = {
                'low': self._penalty_low,
                'high': self._penalty_high,
                'use_lambda3': self._penalty_lambda3
            }
            self._penalty_constants = constants.replace(
                **{key: value for key, value in overrides.items() if value is not None}
            )
        return self._penalty_constants

    def estimator(self, noise):
        """Create a DeconvolutionEstimator for the given noise model"""
        from volatility.deconvolution.estimator import DeconvolutionEstimator

        return DeconvolutionEstimator(noise=noise, settings=self.quadrature(), kn=self._kn)

    def selector(self, noise):
        """Create a ModelSelector for the given noise model"""
        from volatility.deconvolution.selection import ModelSelector

        return ModelSelector(
            noise=noise,
            a=self._a,
            grid_step=self._grid_step,
            grid_max=self._grid_max,
            constants=self.penalty_constants(),
            settings=self.quadrature(),
            kn=self._kn
        )
