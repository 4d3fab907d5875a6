import math
import unittest
from collections import Counter
from pathlib import Path
from unittest import mock

import numpy as np
from scipy import special

from volatility.deconvolution.config import Config, ConfigurationError
from volatility.deconvolution.deconvolution_exceptions import DomainError
from volatility.deconvolution.estimation_model import CoefficientVector, DeconvEstimate, ModelIndex
from volatility.deconvolution.harness import (
    EmpiricalReference,
    ExperimentConfig,
    GaussianReference,
    batch_means_standard_error,
    empirical_oracle,
    ise,
    parse_density,
    run_experiment,
    spectral_ise,
    standard_error
)
from volatility.deconvolution.projection import QuadratureSettings, TabulatedDensity, project_true_density
from volatility.deconvolution.selection import ModelSelector

RESOURCES = Path(__file__).parent / 'resources'

# Fast numerical settings shared by the small scenarios
FAST = Config(
    quadrature_base_nodes=256,
    quadrature_rtol=1e-6,
    penalty_preset='practical',
    ise_grid_min=-8,
    ise_grid_max=8,
    ise_grid_step=0.02
)

# Settings of the consistency and oracle runs
ACCEPTANCE = Config(quadrature_base_nodes=512, quadrature_rtol=1e-8, penalty_preset='practical', workers=2)


def _estimate(m, coeffs):
    k_n = (len(coeffs) - 1) // 2
    return DeconvEstimate(
        coeffs=CoefficientVector(index=ModelIndex(m, k_n), coeffs=np.asarray(coeffs, dtype=float)),
        contrast=0.0,
        noise_label='test'
    )


class TestIse(unittest.TestCase):
    """Integrated squared errors"""

    def test_exact_match(self):
        """Test that an estimate equal to the reference has zero ISE"""
        grid = np.linspace(-20.0, 20.0, 4001)
        est = _estimate(1.0, [0.0, 1.0, 0.0])
        result = ise(est, TabulatedDensity(grid, np.sinc(grid)))
        self.assertAlmostEqual(result.value, 0.0, places=14)
        self.assertIsNone(result.warning)

    def test_zero_estimate_gives_squared_norm(self):
        """Test that the zero estimate scores ||g||^2 = 1 / (2 sqrt pi) for N(0,1)"""
        reference = GaussianReference()
        grid = np.linspace(-10.0, 10.0, 2001)
        tail = reference.tail_mass(-10.0, 10.0)
        result = ise(_estimate(1.0, [0.0, 0.0, 0.0]), reference.tabulate(grid), tail)
        self.assertAlmostEqual(result.value, 1.0 / (2.0 * math.sqrt(math.pi)), places=10)
        self.assertAlmostEqual(reference.norm_sq(), 0.28209479, places=8)

    def test_reflection_invariance(self):
        """Test ISE(g_hat(x), g(x)) = ISE(g_hat(-x), g(-x))"""
        grid = np.linspace(-10.0, 10.0, 2001)
        coeffs = np.array([0.05, 0.1, 0.3, 0.2, -0.02])
        forward = ise(_estimate(1.0, coeffs), GaussianReference(0.5, 1.0).tabulate(grid))
        mirrored = ise(_estimate(1.0, coeffs[::-1]), GaussianReference(-0.5, 1.0).tabulate(grid))
        self.assertAlmostEqual(forward.value, mirrored.value, places=12)

    def test_coarse_grid_warning(self):
        """Test that a grid too coarse for the estimate is reported"""
        grid = np.linspace(-5.0, 5.0, 101)
        with self.assertLogs('volatility.deconvolution.harness', level='WARNING'):
            result = ise(_estimate(8.0, [0.0, 1.0, 0.0]), TabulatedDensity(grid, np.zeros_like(grid)))
        self.assertIsNotNone(result.warning)
        self.assertGreater(abs(result.coarse_step_value - result.value), 0.01 * result.value)

    def test_spectral_ise(self):
        """Test the coefficient form of the ISE"""
        reference = GaussianReference()
        settings = QuadratureSettings(base_nodes=256, rtol=1e-10)
        projection = project_true_density(reference.charfn, ModelIndex(1.0, 40), settings)
        bias = spectral_ise(projection, projection, reference.norm_sq())
        # ||g - g_1||^2 = ||g||^2 - (1/2pi) int_{-pi}^{pi} e^{-x^2} dx
        expected = (1.0 - special.erf(math.pi)) / (2.0 * math.sqrt(math.pi))
        self.assertAlmostEqual(bias, expected, places=7)
        zero = CoefficientVector.zeros(projection.index)
        self.assertAlmostEqual(spectral_ise(zero, projection, reference.norm_sq()), reference.norm_sq())

    def test_gaussian_tail_mass(self):
        """Test the mass of g^2 outside a window"""
        reference = GaussianReference()
        self.assertAlmostEqual(reference.tail_mass(-1e6, 1e6), 0.0)
        self.assertAlmostEqual(reference.tail_mass(0.0, 1e6), 0.5 * reference.norm_sq())

    def test_parse_density(self):
        """Test reference density labels"""
        self.assertEqual(parse_density('normal').label, 'normal:0,1')
        self.assertEqual(parse_density('normal:1,2').sd, 2.0)
        with self.assertRaises(ConfigurationError):
            parse_density('laplace:1')
        with self.assertRaises(DomainError):
            parse_density('normal:0,-1')


class TestEmpiricalReference(unittest.TestCase):
    """Pilot histogram reference"""

    def test_charfn_of_pilot_sample(self):
        """Test the histogram characteristic function against N(0,1) and its cutoff"""
        x = np.random.default_rng(1).normal(size=200_000)
        reference = EmpiricalReference.from_sample(x, pilot_m=2.0)
        self.assertAlmostEqual(float(reference.probabilities.sum()), 1.0, places=12)
        values = reference.charfn(np.array([0.0, 1.0, 7.0]))
        self.assertAlmostEqual(values[0].real, 1.0, places=12)
        self.assertAlmostEqual(abs(values[1]), math.exp(-0.5), delta=0.01)
        self.assertEqual(values[2], 0.0)
        self.assertTrue(reference.approximate)

    def test_needs_two_values(self):
        """Test that a degenerate pilot sample is rejected"""
        with self.assertRaises(DomainError):
            EmpiricalReference.from_sample(np.array([1.0]), pilot_m=1.0)


class TestStandardErrors(unittest.TestCase):
    """Monte Carlo standard errors"""

    def test_batch_means(self):
        """Test batch means on a small series"""
        self.assertAlmostEqual(batch_means_standard_error([0, 0, 1, 1], batches=2), 0.5)
        self.assertEqual(batch_means_standard_error(np.ones(100)), 0.0)
        with self.assertRaises(DomainError):
            batch_means_standard_error([1.0, 2.0, 3.0], batches=2)

    def test_batch_means_on_iid_series(self):
        """Test that batch means agree with the iid standard error on independent data"""
        x = np.random.default_rng(2).normal(size=40_000)
        self.assertAlmostEqual(batch_means_standard_error(x) / (1.0 / math.sqrt(x.size)), 1.0, delta=0.25)

    def test_standard_error(self):
        """Test std / sqrt(R) and the single-replication case"""
        self.assertEqual(standard_error([3.0]), 0.0)
        self.assertAlmostEqual(standard_error([1.0, 3.0]), 1.0)


class TestExperimentConfig(unittest.TestCase):
    """Scenario parsing and validation"""

    def test_from_dict(self):
        """Test flat key/value scenarios with settings"""
        cfg = ExperimentConfig.from_dict({
            'noise': 'laplace:1', 'n': '250, 1000', 'replications': '5', 'seed': '7', 'grid_step': '0.5'
        }, name='demo')
        self.assertEqual(cfg.name, 'demo')
        self.assertEqual(cfg.scenario, 'direct')
        self.assertEqual(cfg.n_values, (250, 1000))
        self.assertEqual(cfg.replications, 5)
        self.assertEqual(cfg.seed, 7)
        self.assertEqual(cfg.settings.grid_step, 0.5)

    def test_process_scenario_inferred(self):
        """Test that a model label makes a process scenario"""
        cfg = ExperimentConfig.from_dict({'noise': 'log_chi_squared', 'n': '500', 'model': 'arch1:1,0.5'})
        self.assertEqual(cfg.scenario, 'process')
        spec, law = cfg.process()
        self.assertEqual(spec.b, 0.5)
        self.assertEqual(law.label, 'standard_normal')

    def test_invalid_scenarios(self):
        """Test rejected scenarios"""
        bad = [
            {'noise': 'laplace:1'},
            {'noise': 'laplace:1', 'n': '100', 'colour': 'red'},
            {'noise': 'laplace:1', 'n': '100', 'replications': '0'},
            {'noise': 'laplace:1', 'n': '1'},
            {'noise': 'laplace:1', 'n': 'many'},
            {'noise': 'laplace:1', 'n': '100', 'scenario': 'process'},
            {'noise': 'laplace:1', 'n': '100', 'scenario': 'bootstrap'},
        ]
        for data in bad:
            with self.assertRaises(ConfigurationError, msg=str(data)):
                ExperimentConfig.from_dict(data)

    def test_from_file_sections(self):
        """Test reading scenarios from the DEFAULT and an environment section"""
        direct = ExperimentConfig.from_file(RESOURCES / 'experiment.ini')
        self.assertEqual(direct.name, 'laplace-small')
        self.assertEqual(direct.n_values, (200, 400))
        self.assertEqual(direct.settings.penalty_preset, 'practical')
        process = ExperimentConfig.from_file(RESOURCES / 'experiment.ini', 'PROCESS')
        self.assertEqual(process.scenario, 'process')
        self.assertEqual(process.settings.pilot_length, 20000)
        self.assertEqual(process.seed, 20240611)

    def test_from_file_missing_section_reads_default(self):
        """Test that a section the experiment file lacks falls back to DEFAULT"""
        cfg = ExperimentConfig.from_file(RESOURCES / 'experiment.ini', 'FAST')
        self.assertEqual(cfg.name, 'laplace-small')
        self.assertEqual(cfg.scenario, 'direct')
        with self.assertRaises(ConfigurationError):
            Config.read_file(RESOURCES / 'experiment.ini', 'FAST')

    def test_base_settings(self):
        """Test that base settings fill in what the scenario leaves out"""
        base = Config(workers=3, a=3.0)
        cfg = ExperimentConfig.from_dict({'noise': 'laplace:1', 'n': '100', 'a': '2.5'}, base=base)
        self.assertEqual(cfg.settings.workers, 3)
        self.assertEqual(cfg.settings.a, 2.5)


class TestRunExperiment(unittest.TestCase):
    """Small Monte Carlo runs"""

    def _config(self, **changes):
        values = dict(name='small', noise='laplace:1', n_values=(200,), replications=4, seed=11, settings=FAST)
        values.update(changes)
        return ExperimentConfig(**values)

    def test_deterministic_for_a_seed(self):
        """Test that a seed fixes every ISE and selected model"""
        first = run_experiment(self._config())
        second = run_experiment(self._config())
        np.testing.assert_array_equal(first.risks[0].ise_table, second.risks[0].ise_table)
        self.assertEqual(first.risks[0].m_hats, second.risks[0].m_hats)
        self.assertEqual(first.summary_rows(), second.summary_rows())

    def test_workers_do_not_change_results(self):
        """Test that concurrent replications aggregate in replication order"""
        serial = run_experiment(self._config())
        threaded = run_experiment(self._config(settings=FAST.replace(workers=3)))
        np.testing.assert_array_equal(serial.risks[0].ise_table, threaded.risks[0].ise_table)
        np.testing.assert_array_equal(serial.risks[0].adaptive_ise, threaded.risks[0].adaptive_ise)

    def test_single_replication_reproducible(self):
        """Test that R=1 runs are reproducible and report zero standard errors"""
        first = run_experiment(self._config(replications=1))
        second = run_experiment(self._config(replications=1))
        self.assertEqual(first.summary_rows(), second.summary_rows())
        self.assertEqual(first.summary_rows()[0]['adaptive_se'], 0.0)

    def test_accounting(self):
        """Test table shapes, histogram counts and the empirical oracle"""
        report = run_experiment(self._config(n_values=(200, 400), replications=3))
        self.assertEqual([risk.n for risk in report.risks], [200, 400])
        for risk in report.risks:
            self.assertEqual(risk.ise_table.shape, (3, len(risk.models)))
            self.assertEqual(sum(risk.histogram.values()), 3)
            means = risk.mean_ise
            self.assertEqual(means[risk.oracle_m], min(means.values()))
            self.assertTrue(np.all(risk.ise_table >= 0.0))
            for k, m_hat in enumerate(risk.m_hats):
                self.assertEqual(risk.adaptive_ise[k], risk.ise_table[k, risk.models.index(m_hat)])
        self.assertEqual(len(report.report_rows()), sum(len(risk.models) for risk in report.risks))
        self.assertEqual(len(report.summary_rows()), 2)
        self.assertEqual(report.summary_rows()[0]['reference'], 'exact')
        self.assertEqual(report.seed, 11)

    def test_empirical_oracle(self):
        """Test that m_breve minimizes the per-model mean ISE"""
        for n, means, m_breve in empirical_oracle(self._config()):
            self.assertEqual(n, 200)
            self.assertEqual(m_breve, min(means, key=lambda m: (means[m], m)))

    def test_fresh_seed_is_reported(self):
        """Test that a run without a seed reports the seed it drew"""
        report = run_experiment(self._config(seed=None, replications=1))
        self.assertIsInstance(report.seed, int)
        again = run_experiment(self._config(seed=report.seed, replications=1))
        np.testing.assert_array_equal(report.risks[0].ise_table, again.risks[0].ise_table)

    def test_replication_errors_carry_context(self):
        """Test that a failing replication names itself"""
        with mock.patch.object(ModelSelector, 'select', side_effect=DomainError('boom')):
            with self.assertRaises(DomainError) as ctx:
                run_experiment(self._config())
        self.assertIn('replication 0, n=200', ctx.exception.message)

    def test_process_scenario(self):
        """Test a GARCH scenario scored against the pilot reference"""
        cfg = ExperimentConfig.from_file(RESOURCES / 'experiment.ini', 'PROCESS')
        report = run_experiment(cfg)
        self.assertTrue(report.approximate_reference)
        self.assertTrue(any('approximate' in w for w in report.warnings))
        self.assertEqual(report.summary_rows()[0]['reference'], 'approximate')
        risk = report.risk(400)
        self.assertEqual(risk.models, (0.25, 0.5))
        self.assertTrue(np.all(np.isfinite(risk.ise_table)))


class TestConsistencyAndOracle(unittest.TestCase):
    """Monte Carlo consistency of the adaptive estimator and its oracle behaviour"""

    @classmethod
    def setUpClass(cls):
        """Run the Laplace and ln(eta^2) scenarios once for all checks"""
        cls.laplace = run_experiment(ExperimentConfig(
            name='laplace', noise='laplace:1', n_values=(250, 1000, 4000), replications=100,
            seed=20240611, settings=ACCEPTANCE
        ))
        cls.log_chi = run_experiment(ExperimentConfig(
            name='log-chi', noise='log_chi_squared', n_values=(1000,), replications=100,
            seed=20240612, settings=ACCEPTANCE
        ))

    def test_mean_ise_decreases(self):
        """Test that the adaptive MISE decreases in n and halves from 250 to 4000"""
        mise = [float(risk.adaptive_ise.mean()) for risk in self.laplace.risks]
        self.assertGreater(mise[0], mise[1])
        self.assertGreater(mise[1], mise[2])
        self.assertLess(mise[2], 0.5 * mise[0])

    def test_adaptive_close_to_oracle(self):
        """Test median and mean ISE of the adaptive estimate against the grid oracle"""
        for report in (self.laplace, self.log_chi):
            for row in report.summary_rows():
                label = f"{report.scenario} n={row['n']}"
                self.assertLessEqual(row['adaptive_median_ise'], 5.0 * row['oracle_median_ise'], msg=label)
                self.assertLessEqual(
                    row['adaptive_mean_ise'], 9.0 * row['min_mean_ise'] + 20.0 / row['n'], msg=label
                )

    def test_selection_mode_inside_grid(self):
        """Test that at n=2000 the most selected model is neither grid end"""
        report = run_experiment(ExperimentConfig(
            name='laplace-2000', noise='laplace:1', n_values=(2000,), replications=100,
            seed=20240613, settings=ACCEPTANCE
        ))
        risk = report.risks[0]
        mode, _ = Counter(risk.m_hats).most_common(1)[0]
        self.assertNotIn(mode, (risk.models[0], risk.models[-1]))
        summary = risk.summary()
        self.assertLessEqual(summary['adaptive_median_ise'], 5.0 * summary['oracle_median_ise'])


if __name__ == '__main__':
    unittest.main()
