import math
import unittest

import numpy as np
from scipy import integrate

from volatility.deconvolution.config import ConfigurationError
from volatility.deconvolution.deconvolution_exceptions import DomainError
from volatility.deconvolution.noise_models import (
    NoiseModel,
    SmoothnessParams,
    builtin_noise,
    cauchy,
    gaussian,
    laplace,
    log_chi_squared,
    parse_noise,
    tabulated_noise,
    validate_sandwich
)


def _log_chi_density(x):
    return math.exp(0.5 * x - 0.5 * math.exp(x)) / math.sqrt(2.0 * math.pi)


class TestBuiltinNoise(unittest.TestCase):
    """Builtin noise models and their smoothness constants"""

    def test_log_chi_squared_smoothness(self):
        """Test that ln(eta^2) is super smooth with gamma=0, mu=pi/2, delta=1"""
        sp = log_chi_squared().smoothness
        self.assertEqual(sp.gamma, 0.0)
        self.assertAlmostEqual(sp.mu, math.pi / 2.0)
        self.assertEqual(sp.delta, 1.0)
        self.assertTrue(sp.super_smooth)

    def test_laplace_is_ordinary_smooth(self):
        """Test that Laplace noise has gamma=2 and mu=delta=0"""
        sp = laplace(1.0).smoothness
        self.assertEqual((sp.gamma, sp.mu, sp.delta), (2.0, 0.0, 0.0))
        self.assertFalse(sp.super_smooth)

    def test_charfn_at_zero_is_one(self):
        """Test that every builtin characteristic function equals 1 at 0"""
        for nm in (log_chi_squared(), laplace(1.0), gaussian(1.0), cauchy(0.5)):
            value = complex(np.asarray(nm.charfn(np.array([0.0])))[0])
            self.assertAlmostEqual(value.real, 1.0, places=12, msg=nm.label)
            self.assertAlmostEqual(value.imag, 0.0, places=12, msg=nm.label)

    def test_log_chi_squared_modulus_at_one(self):
        """Test |f*(1)| = (cosh pi)^(-1/2) for ln(eta^2)"""
        value = abs(complex(np.asarray(log_chi_squared().charfn(np.array([1.0])))[0]))
        self.assertAlmostEqual(value, math.cosh(math.pi) ** -0.5, places=12)
        self.assertAlmostEqual(value, 0.2939, places=4)

    def test_log_chi_squared_matches_density_quadrature(self):
        """Test the characteristic function against quadrature of the explicit density"""
        nm = log_chi_squared()
        for x in (0.3, 1.0, 2.5):
            re, _ = integrate.quad(lambda t: math.cos(x * t) * _log_chi_density(t), -60.0, 6.0, limit=400)
            im, _ = integrate.quad(lambda t: math.sin(x * t) * _log_chi_density(t), -60.0, 6.0, limit=400)
            value = complex(np.asarray(nm.charfn(np.array([x])))[0])
            self.assertAlmostEqual(value.real, re, places=7)
            self.assertAlmostEqual(value.imag, im, places=7)

    def test_hermitian_symmetry(self):
        """Test charfn(-x) = conj(charfn(x)) for every builtin"""
        x = np.linspace(0.0, 8.0, 41)
        for nm in (log_chi_squared(), laplace(2.0), gaussian(0.5), cauchy(1.0)):
            diff = np.abs(nm.charfn(-x) - np.conj(nm.charfn(x)))
            self.assertLess(float(diff.max()), 1e-12, msg=nm.label)

    def test_log_chi_squared_density_sup(self):
        """Test the sup of the ln(eta^2) density is its mode value (2 pi e)^(-1/2)"""
        self.assertAlmostEqual(log_chi_squared().density_sup, (2.0 * math.pi * math.e) ** -0.5, places=10)
        self.assertAlmostEqual(log_chi_squared().density_sup, _log_chi_density(0.0), places=12)

    def test_log_modulus_stays_finite_far_out(self):
        """Test the log modulus of ln(eta^2) is finite where the modulus itself underflows"""
        log_mod = log_chi_squared().log_modulus(np.array([500.0]))
        self.assertTrue(np.isfinite(log_mod).all())
        self.assertAlmostEqual(float(log_mod[0]), 0.5 * math.log(2.0) - 250.0 * math.pi, places=8)

    def test_unknown_label(self):
        """Test that an unknown label is a configuration error"""
        with self.assertRaises(ConfigurationError):
            builtin_noise('student')

    def test_nonpositive_scale(self):
        """Test that a nonpositive scale is a domain error"""
        with self.assertRaises(DomainError):
            laplace(0.0)
        with self.assertRaises(DomainError):
            builtin_noise('gaussian', -1.0)

    def test_parse_noise_labels(self):
        """Test parsing of CLI labels"""
        self.assertEqual(parse_noise('laplace:2').label, 'laplace:2')
        self.assertEqual(parse_noise('log_chi_squared').label, 'log_chi_squared')
        self.assertEqual(parse_noise('gaussian').label, 'gaussian:1')
        with self.assertRaises(ConfigurationError):
            parse_noise('laplace:abc')

    def test_samplers_match_laws(self):
        """Test that builtin samplers draw from the declared law"""
        rng = np.random.default_rng(7)
        eps = log_chi_squared().sample(rng, 200_000)
        # E ln(eta^2) = -gamma_euler - ln 2
        self.assertAlmostEqual(float(eps.mean()), -np.euler_gamma - math.log(2.0), delta=0.02)
        eps = laplace(1.0).sample(rng, 200_000)
        self.assertAlmostEqual(float(eps.var()), 2.0, delta=0.05)


class TestSandwich(unittest.TestCase):
    """Validation of the smoothness sandwich"""

    def test_laplace_holds(self):
        """Test that Laplace(1) satisfies its sandwich exactly"""
        report = validate_sandwich(laplace(1.0), np.linspace(-10.0, 10.0, 201))
        self.assertEqual(report.max_violation, 0.0)
        self.assertTrue(report.holds)

    def test_log_chi_squared_holds(self):
        """Test that ln(eta^2) lies between e^(-pi|x|/2) and sqrt(2) e^(-pi|x|/2)"""
        report = validate_sandwich(log_chi_squared(), np.linspace(-20.0, 20.0, 401))
        self.assertEqual(report.max_violation, 0.0)

    def test_wrong_metadata_is_flagged(self):
        """Test that a gaussian declared with gamma=1 violates the sandwich"""
        nm = gaussian(1.0)
        wrong = NoiseModel(
            label='gaussian-wrong',
            charfn=nm.charfn,
            density_sup=nm.density_sup,
            smoothness=SmoothnessParams(gamma=1.0, mu=0.5, delta=2.0, kappa0=1.0, kappa0_prime=1.0),
            log_charfn_fn=nm.log_charfn_fn
        )
        with self.assertLogs('volatility.deconvolution.noise_models', level='WARNING'):
            report = validate_sandwich(wrong, np.linspace(-5.0, 5.0, 101))
        self.assertGreater(report.max_violation, 0.0)
        self.assertEqual(report.side, 'upper')

    def test_empty_grid(self):
        """Test that an empty grid is rejected"""
        with self.assertRaises(DomainError):
            validate_sandwich(laplace(1.0), [])

    def test_smoothness_validation(self):
        """Test invalid smoothness parameters"""
        with self.assertRaises(DomainError):
            SmoothnessParams(gamma=0.4, mu=0.0, delta=0.0, kappa0=1.0, kappa0_prime=1.0)
        with self.assertRaises(DomainError):
            SmoothnessParams(gamma=0.0, mu=0.0, delta=1.0, kappa0=1.0, kappa0_prime=1.0)
        with self.assertRaises(DomainError):
            SmoothnessParams(gamma=2.0, mu=0.0, delta=0.0, kappa0=2.0, kappa0_prime=1.0)


class TestTabulatedNoise(unittest.TestCase):
    """Custom noise models from tabulated characteristic functions"""

    def setUp(self):
        """Tabulate the Laplace(1) characteristic function"""
        self.grid = np.linspace(0.0, 20.0, 2001)
        self.values = 1.0 / (1.0 + self.grid ** 2)
        self.smoothness = laplace(1.0).smoothness

    def test_interpolates_and_extends(self):
        """Test linear interpolation and Hermitian extension"""
        nm = tabulated_noise('tab', self.grid, self.values, self.smoothness, 0.5)
        x = np.array([-3.005, 0.0, 1.2345])
        np.testing.assert_allclose(nm.charfn(x).real, 1.0 / (1.0 + x ** 2), rtol=1e-4)
        report = validate_sandwich(nm, np.linspace(-10.0, 10.0, 101))
        self.assertLess(report.max_violation, 1e-4)

    def test_outside_grid(self):
        """Test that values beyond the tabulated range are refused"""
        nm = tabulated_noise('tab', self.grid, self.values, self.smoothness, 0.5)
        with self.assertRaises(DomainError):
            nm.charfn(np.array([25.0]))

    def test_invalid_tables(self):
        """Test that malformed tables are rejected"""
        with self.assertRaises(DomainError):
            tabulated_noise('tab', self.grid[1:], self.values[1:], self.smoothness, 0.5)
        with self.assertRaises(DomainError):
            tabulated_noise('tab', self.grid, 2.0 * self.values, self.smoothness, 0.5)


if __name__ == '__main__':
    unittest.main()
