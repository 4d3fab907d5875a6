"""
Example script demonstrating the volatility deconvolution library.

This script simulates an ARCH-type path, estimates the log-volatility density with a
penalized choice of the cutoff, inspects the dependence and rate theory of the model and
runs a small Monte Carlo experiment. Settings come from the FAST section of
config.example.ini, or from DECONV_CONFIG_FILE when it is set.
"""

import logging
import os
from pathlib import Path

import numpy as np

from volatility.deconvolution import dependence, rates
from volatility.deconvolution.config import Config, ConfigurationError
from volatility.deconvolution.deconvolution_exceptions import (
    AdmissibilityError,
    DegenerateObservationError,
    StationarityError
)
from volatility.deconvolution.estimator import log_square_transform
from volatility.deconvolution.harness import ExperimentConfig, run_experiment
from volatility.deconvolution.noise_models import log_chi_squared
from volatility.deconvolution.processes import parse_model, simulate

logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

SAMPLE_DIR = Path(__file__).parent
CONFIG_FILE = os.getenv('DECONV_CONFIG_FILE') or str(SAMPLE_DIR.parent.parent / 'config.example.ini')
EXPERIMENT_FILE = SAMPLE_DIR / 'experiment.ini'

config: Config


def initialize_config():
    """Initialize Config from the configuration file"""
    global config
    try:
        config = Config.from_file(CONFIG_FILE, 'FAST').replace(seed=20240611)
        logger.info(f"Configuration loaded from {CONFIG_FILE} [FAST section]")
        return True
    except FileNotFoundError:
        logger.error(f"{CONFIG_FILE} not found")
        return False
    except ConfigurationError as e:
        logger.error(f"Configuration error: {e}")
        return False


def example_adaptive_estimate():
    """Example: simulate GARCH(1,1) returns and estimate the density of ln(sigma^2)"""
    print("\n" + "=" * 60)
    print("ADAPTIVE ESTIMATE")
    print("=" * 60)

    path = simulate(parse_model('garch:0.1,0.1,0.8'), n=2000, burn_in=config.burn_in, seed=config.seed)
    sample = log_square_transform(path.y)
    result = config.selector(log_chi_squared()).select(sample)

    print(f"Selected m = {result.m_hat}")
    for m, value in sorted(result.criterion.items()):
        print(f"  m={m:<5} crit={value:.6f}")

    grid = np.linspace(-3.0, 2.0, 11)
    for x, value in zip(grid, result.estimate.evaluate(grid)):
        print(f"  g_hat({x:+.1f}) = {value:.4f}")


def example_dependence_and_rates():
    """Example: mixing class of an ARCH(inf) model and the rate of a smoothness class"""
    print("\n" + "=" * 60)
    print("DEPENDENCE AND RATES")
    print("=" * 60)

    spec = parse_model('archinf-geometric:0.1,0.8,0.5')
    profile = dependence.classify_mixing(spec)
    print(f"{spec.label}: {profile.kind} ({profile.condition})")
    for row in dependence.dependence_table(spec, [10, 100, 1000]):
        print(f"  n={row['n']:<5} delta_n={row['delta_n']:.3e} ({dependence.RATE_LABEL})")

    oracle = rates.oracle_m_theoretical(rates.SmoothnessSpec(s=2.0), log_chi_squared(), 10_000)
    print(f"Sobolev s=2, n=10000: m={oracle.m:.4f}, rate {oracle.structure}")


def example_monte_carlo():
    """Example: Monte Carlo risk of the adaptive estimator against the oracle"""
    print("\n" + "=" * 60)
    print("MONTE CARLO RISK")
    print("=" * 60)

    cfg = ExperimentConfig.from_file(EXPERIMENT_FILE, base=config)
    report = run_experiment(cfg)
    for row in report.summary_rows():
        print(
            f"  n={row['n']:<5} adaptive={row['adaptive_mean_ise']:.5f} "
            f"oracle(m={row['oracle_m']})={row['oracle_mean_ise']:.5f} ratio={row['mean_ratio']:.2f}"
        )
    for warning in report.warnings:
        logger.warning(warning)


def example_error_handling():
    """Example: the errors raised for invalid inputs"""
    print("\n" + "=" * 60)
    print("ERROR HANDLING")
    print("=" * 60)

    try:
        log_square_transform([0.3, 0.0, -1.1])
    except DegenerateObservationError as ex:
        logger.info(f"Caught {ex.code}: {ex.message}")

    try:
        simulate(parse_model('arch1:1,1'), n=10)
    except StationarityError as ex:
        logger.info(f"Caught {ex.code}: {ex.message}")

    try:
        config.selector(log_chi_squared()).penalty(5.0, 100)
    except AdmissibilityError as ex:
        logger.info(f"Caught {ex.code}: {ex.message}")


if __name__ == "__main__":
    print("=" * 60)
    print("VOLATILITY DECONVOLUTION EXAMPLES")
    print("=" * 60)
    print(f"Using config file: {CONFIG_FILE}")

    if not initialize_config():
        print("\nFailed to initialize configuration. Exiting.")
        exit(1)

    example_adaptive_estimate()
    example_dependence_and_rates()
    example_error_handling()
    # Takes a few minutes
    # example_monte_carlo()

    print("\n" + "=" * 60)
    print("EXAMPLES COMPLETED")
    print("=" * 60)
