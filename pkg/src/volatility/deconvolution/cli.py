"""
Command line entry point: vol-deconv {simulate, estimate, select, dependence, rates, mise}.

Exit status is 0 on success, 2 on a usage error (argparse) and 1 on any library error,
which is reported as one 'CODE: message' line on stderr.
"""

import argparse
import logging
import os
import sys
import typing as t
from pathlib import Path

import numpy as np

from volatility.deconvolution import dependence, rates, reporting
from volatility.deconvolution.config import Config
from volatility.deconvolution.deconvolution_exceptions import DeconvolutionError
from volatility.deconvolution.estimation_model import Sample
from volatility.deconvolution.estimator import log_square_transform
from volatility.deconvolution.harness import ExperimentConfig, run_experiment
from volatility.deconvolution.noise_models import parse_noise
from volatility.deconvolution.processes import parse_law, parse_model, simulate

logger = logging.getLogger(__name__)

REPORT_COLUMNS = ('scenario', 'n', 'm', 'mean_ise', 'se')
SELECTION_COLUMNS = ('scenario', 'n', 'm', 'count')
SUMMARY_COLUMNS = (
    'scenario', 'n', 'adaptive_mean_ise', 'adaptive_se', 'adaptive_median_ise', 'oracle_m',
    'oracle_mean_ise', 'oracle_se', 'oracle_median_ise', 'mean_ratio', 'median_ratio', 'min_mean_ise', 'reference'
)
DELTA_COLUMN = 'delta_n (up to O-constant)'
TAU_COLUMN = 'tau (up to O-constant)'


def _common_arguments() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help="Configuration file (default: $DECONV_CONFIG_FILE)")
    common.add_argument(
        '--environment', default='DEFAULT', help="Configuration file section (experiment files without it are read whole)"
    )
    common.add_argument('--output-dir', type=Path, help="Directory for CSV outputs (created if absent)")
    common.add_argument('--seed', type=int, help="Master seed (overrides config and $DECONV_SEED)")
    common.add_argument('--debug', action='store_true', help="Debug logging")
    return common


def _input_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('input', type=Path, help="CSV file with returns (column 'y') or a headerless column")
    parser.add_argument('--noise', required=True, help="Noise model label, e.g. log_chi_squared or laplace:1")
    parser.add_argument('--column', help="Column to read (default y, or z with --pre-logged)")
    parser.add_argument('--pre-logged', action='store_true', help="Input already holds Z = ln(Y^2)")
    parser.add_argument('--kn', type=int, help="Coefficient truncation k_n (default n)")


def build_parser() -> argparse.ArgumentParser:
    common = _common_arguments()
    parser = argparse.ArgumentParser(
        prog='vol-deconv',
        description="Adaptive deconvolution estimation of the log-volatility density of ARCH-type models"
    )
    commands = parser.add_subparsers(dest='command', required=True)

    p = commands.add_parser('simulate', parents=[common], help="Simulate an ARCH-type path")
    p.add_argument('--model', required=True, help="Model label, e.g. garch:0.1,0.1,0.8 or arch1:1,0")
    p.add_argument('--law', default='normal', help="Innovation law: normal, t:<df> or uniform")
    p.add_argument('--n', type=int, default=1000, help="Path length")
    p.add_argument('--burn-in', type=int, help="Burn-in length (default from config)")

    p = commands.add_parser('estimate', parents=[common], help="Deconvolution estimate at a fixed m")
    _input_arguments(p)
    p.add_argument('--m', type=float, required=True, help="Model index m")

    p = commands.add_parser('select', parents=[common], help="Penalized choice of m and the adaptive estimate")
    _input_arguments(p)
    p.add_argument('--a', type=float, help="Penalty tuning constant a > 1")
    p.add_argument('--grid-step', type=float, help="Model grid step")
    p.add_argument('--grid-max', type=float, help="Cap on the model grid")
    p.add_argument('--penalty-preset', choices=('theoretical', 'practical'), help="Penalty calibration")

    p = commands.add_parser('dependence', parents=[common], help="Mixing class and coupling bounds of a model")
    p.add_argument('--model', required=True, help="Model label")
    p.add_argument('--law', default='normal', help="Innovation law")
    p.add_argument('--n', default='10,100,1000,10000', help="Comma-separated horizons")
    p.add_argument('--rho', type=float, default=0.0, help="Density blow-up exponent near 0")
    p.add_argument('--alpha', type=float, default=1.0, help="Log exponent near 0")
    p.add_argument('--noise', help="Noise model for the risk bound hypothesis check")

    p = commands.add_parser('rates', parents=[common], help="Rate-optimal cutoff and rate for a smoothness class")
    p.add_argument('--s', type=float, default=0.0, help="Sobolev exponent s")
    p.add_argument('--r', type=float, default=0.0, help="Analytic exponent r")
    p.add_argument('--b', type=float, default=0.0, help="Analytic scale b (> 0 when r > 0)")
    p.add_argument('--C1', type=float, default=2.0 * np.pi, help="Radius of the smoothness ball")
    p.add_argument('--M2', type=float, default=1.0, help="Bound on int x^2 g^2")
    p.add_argument('--noise', required=True, help="Noise model label")
    p.add_argument('--n', type=int, required=True, help="Sample size")

    p = commands.add_parser('mise', parents=[common], help="Monte Carlo risk experiment")
    p.add_argument('experiments', nargs='+', type=Path, help="Experiment files (flat key = value)")
    p.add_argument('--workers', type=int, help="Worker threads for replications")
    return parser


def load_config(args: argparse.Namespace) -> Config:
    """Config from --config (or $DECONV_CONFIG_FILE), else from the environment."""
    config_file = args.config or os.getenv('DECONV_CONFIG_FILE')
    if config_file:
        config = Config.from_file(config_file, args.environment)
        if config.seed is None:
            config = config.replace(seed=os.getenv('DECONV_SEED') or None)
    else:
        config = Config.from_env()
    debug = args.debug or os.getenv('DEBUG', '').lower() in ('true', '1', 'yes', 'on')
    return config.replace(debug=True if debug else None)


def resolve_seed(*candidates: t.Optional[int]) -> int:
    """First seed given, else fresh entropy (logged so the run can be repeated)."""
    for seed in candidates:
        if seed is not None:
            return int(seed)
    fresh = int(np.random.SeedSequence().entropy) & 0xFFFFFFFFFFFFFFFF
    logger.info(f"No seed given; using {fresh}")
    return fresh


def _output_dir(args: argparse.Namespace) -> Path:
    return args.output_dir if args.output_dir is not None else Path('.')


def _emit(**values: t.Any) -> None:
    for key, value in values.items():
        print(f"{key}={reporting.format_value(value)}")


def _read_sample(args: argparse.Namespace) -> Sample:
    series = reporting.read_series(args.input, column=args.column, pre_logged=args.pre_logged)
    if args.pre_logged:
        return Sample(z=series)
    return log_square_transform(series)


def _write_density(path: Path, estimate, config: Config) -> Path:
    lo, hi, step = config.ise_grid
    grid = lo + step * np.arange(int(round((hi - lo) / step)) + 1)
    values = estimate.evaluate(grid)
    return reporting.write_csv(path, ({'x': x, 'density': v} for x, v in zip(grid, values)), ('x', 'density'))


def cmd_simulate(args: argparse.Namespace, config: Config) -> int:
    seed = resolve_seed(args.seed, config.seed)
    burn_in = config.burn_in if args.burn_in is None else args.burn_in
    path = simulate(parse_model(args.model), parse_law(args.law), args.n, burn_in, seed)
    written = reporting.write_path(_output_dir(args) / 'simulate.csv', path)
    _emit(n=path.n, seed=seed, output=written)
    return 0


def cmd_estimate(args: argparse.Namespace, config: Config) -> int:
    config = config.replace(kn=args.kn)
    sample = _read_sample(args)
    estimate = config.estimator(parse_noise(args.noise)).estimate(sample, args.m)
    out = _output_dir(args)
    cv = estimate.coeffs
    reporting.write_csv(
        out / 'coefficients.csv',
        ({'j': int(j), 'coefficient': c} for j, c in zip(cv.j, cv.coeffs)),
        ('j', 'coefficient')
    )
    _write_density(out / 'density.csv', estimate, config)
    _emit(m=estimate.m, n=sample.n, contrast=estimate.contrast)
    return 0


def cmd_select(args: argparse.Namespace, config: Config) -> int:
    config = config.replace(
        kn=args.kn, a=args.a, grid_step=args.grid_step, grid_max=args.grid_max, penalty_preset=args.penalty_preset
    )
    sample = _read_sample(args)
    result = config.selector(parse_noise(args.noise)).select(sample)
    out = _output_dir(args)
    reporting.write_csv(out / 'selection.csv', result.table(), ('m', 'contrast', 'penalty', 'criterion'))
    _write_density(out / 'density.csv', result.estimate, config)
    _emit(m_hat=result.m_hat, n=sample.n, models=len(result.criterion))
    return 0


def cmd_dependence(args: argparse.Namespace, config: Config) -> int:
    spec, law = parse_model(args.model), parse_law(args.law)
    n_values = [int(v) for v in args.n.split(',') if v.strip()]
    profile = dependence.classify_mixing(spec, law, rho=args.rho, alpha=args.alpha)
    _emit(kind=profile.kind, condition=profile.condition, rate=profile.rate_description, note=dependence.RATE_LABEL)
    if args.noise:
        check = dependence.theorem_cases(profile, parse_noise(args.noise))
        _emit(cases=','.join(str(c) for c in check.cases) or 'none', reason=check.reason)
    rows = dependence.dependence_table(spec, n_values, law, rho=args.rho, alpha=args.alpha)
    for row in rows:
        _emit(n=row['n'], delta_n=row['delta_n'], tau=row['tau'])
    if args.output_dir is not None:
        reporting.write_csv(
            args.output_dir / 'dependence.csv',
            ({'n': r['n'], DELTA_COLUMN: r['delta_n'], TAU_COLUMN: r['tau']} for r in rows),
            ('n', DELTA_COLUMN, TAU_COLUMN)
        )
    return 0


def cmd_rates(args: argparse.Namespace, config: Config) -> int:
    spec = rates.SmoothnessSpec(s=args.s, r=args.r, b=args.b, C1=args.C1, M2=args.M2)
    oracle = rates.oracle_m_theoretical(spec, parse_noise(args.noise), args.n)
    _emit(
        case=oracle.case,
        pi_m=oracle.pi_m,
        m=oracle.m,
        rate=oracle.rate,
        structure=oracle.structure,
        rate_exponent=oracle.rate_exponent,
        log_exponent=oracle.log_exponent,
        residual=oracle.residual
    )
    if args.output_dir is not None:
        row = oracle.to_dict()
        reporting.write_csv(args.output_dir / 'rates.csv', [row], tuple(row))
    return 0


def cmd_mise(args: argparse.Namespace, config: Config) -> int:
    config = config.replace(workers=args.workers)
    reports = []
    for experiment in args.experiments:
        cfg = ExperimentConfig.from_file(experiment, args.environment, base=config)
        cfg = cfg.with_seed(resolve_seed(args.seed, cfg.seed, config.seed))
        report = run_experiment(cfg)
        for warning in report.warnings:
            logger.warning(f"{report.scenario}: {warning}")
        reports.append(report)

    out = _output_dir(args)
    reporting.write_csv(out / 'report.csv', (row for r in reports for row in r.report_rows()), REPORT_COLUMNS)
    reporting.write_csv(out / 'selection.csv', (row for r in reports for row in r.selection_rows()), SELECTION_COLUMNS)
    summary = [row for r in reports for row in r.summary_rows()]
    reporting.write_csv(out / 'summary.csv', summary, SUMMARY_COLUMNS)
    for row in summary:
        _emit(
            scenario=row['scenario'],
            n=row['n'],
            adaptive_mean_ise=row['adaptive_mean_ise'],
            oracle_m=row['oracle_m'],
            oracle_mean_ise=row['oracle_mean_ise']
        )
    return 0


COMMANDS: t.Dict[str, t.Callable[[argparse.Namespace, Config], int]] = {
    'simulate': cmd_simulate,
    'estimate': cmd_estimate,
    'select': cmd_select,
    'dependence': cmd_dependence,
    'rates': cmd_rates,
    'mise': cmd_mise,
}


def main(argv: t.Optional[t.Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args)
        logging.basicConfig(
            level=logging.DEBUG if config.debug else logging.INFO,
            format='%(asctime)s %(levelname)s %(name)s: %(message)s'
        )
        return COMMANDS[args.command](args, config)
    except DeconvolutionError as e:
        print(f"{e.code}: {e.message}", file=sys.stderr)
        return 1
    except FileNotFoundError as e:
        print(f"FILE_NOT_FOUND: {e}", file=sys.stderr)
        return 1


if __name__ == '__main__':
    sys.exit(main())
