import math
import unittest

import numpy as np

from volatility.deconvolution.deconvolution_exceptions import DomainError
from volatility.deconvolution.dependence import (
    GEOMETRIC_BETA,
    GEOMETRIC_TAU,
    POLYNOMIAL_TAU,
    SUBGEOMETRIC_TAU,
    UNKNOWN,
    DependenceProfile,
    arch_inf_delta_n,
    arch_inf_delta_n_argmin,
    classify_mixing,
    coupling_bound,
    dependence_table,
    markov_delta_n,
    tau_from_delta,
    theorem_cases
)
from volatility.deconvolution.noise_models import gaussian, laplace, log_chi_squared
from volatility.deconvolution.process_model import FiniteCoefficients, GeometricCoefficients, PolynomialCoefficients
from volatility.deconvolution.processes import parse_model


def r_squared(x, y):
    slope, intercept = np.polyfit(x, y, 1)
    residuals = y - (slope * x + intercept)
    return 1.0 - float(np.sum(residuals ** 2)) / float(np.sum((y - y.mean()) ** 2)), slope


class TestCouplingBounds(unittest.TestCase):
    """delta_n for ARCH(inf) and Markov models"""

    def test_geometric_coefficients_example(self):
        """Test a_j = 0.8 * 2^-j at n=100: the minimum sits at k=5"""
        family = GeometricCoefficients(0.8, 0.5)
        value, k = arch_inf_delta_n_argmin(family.total(), family.tail, 100)
        self.assertEqual(k, 5)
        self.assertAlmostEqual(value, 0.8 ** 20 + 0.8 * 2.0 ** -5, places=12)
        self.assertAlmostEqual(value, 0.0365, places=4)

    def test_single_lag_is_exactly_geometric(self):
        """Test that one nonzero lag gives delta_n = c^n"""
        family = FiniteCoefficients((0.5,))
        for n in (1, 10, 100, 1000):
            value = arch_inf_delta_n(family.total(), family.tail, n)
            self.assertAlmostEqual(math.log(value), n * math.log(0.5), places=10)

    def test_arch_inf_bound_nonincreasing_in_n(self):
        """Test that delta_n never grows with n for fixed coefficients"""
        families = (
            GeometricCoefficients(0.8, 0.5),
            FiniteCoefficients((0.3, 0.2, 0.1)),
            PolynomialCoefficients(0.3, 3.0),
        )
        for family in families:
            values = [arch_inf_delta_n(family.total(), family.tail, n) for n in range(1, 301)]
            for n, (earlier, later) in enumerate(zip(values, values[1:]), start=1):
                self.assertLessEqual(later, earlier, msg=f"{family} n={n}")

    def test_tau_increasing_below_e_minus_2(self):
        """Test that the tau rate increases with delta_n on (0, e^-2) when rho=0, alpha <= 1"""
        deltas = np.geomspace(1e-12, 0.999 * math.exp(-2.0), 200)
        for alpha in (0.0, 0.5, 1.0):
            profile = DependenceProfile(kind=UNKNOWN, condition='', rho=0.0, alpha=alpha)
            values = [tau_from_delta(float(d), profile) for d in deltas]
            for smaller, larger in zip(values, values[1:]):
                self.assertLess(smaller, larger, msg=f"alpha={alpha}")

    def test_invalid_arguments(self):
        """Test domain checks of the bounds"""
        with self.assertRaises(DomainError):
            arch_inf_delta_n(1.0, lambda k: 0.0, 10)
        with self.assertRaises(DomainError):
            arch_inf_delta_n(0.5, lambda k: 0.0, 0)
        with self.assertRaises(DomainError):
            markov_delta_n(1.0, 1.0, 5)
        with self.assertRaises(DomainError):
            markov_delta_n(0.5, 0.0, 5)

    def test_markov_example(self):
        """Test delta_n = 4 E sigma^2 kappa^n"""
        self.assertAlmostEqual(markov_delta_n(0.9, 2.0, 10), 8.0 * 0.9 ** 10, places=12)
        self.assertAlmostEqual(markov_delta_n(0.9, 2.0, 10), 2.789, places=3)

    def test_tau_example(self):
        """Test the tau rate at delta_n = e^-4 with rho=0, alpha=1"""
        value = tau_from_delta(math.exp(-4.0), DependenceProfile(kind=UNKNOWN, condition=''))
        self.assertAlmostEqual(value, math.exp(-2.0) * 4.0, places=12)
        self.assertAlmostEqual(value, 0.5413, places=4)
        with self.assertRaises(DomainError):
            tau_from_delta(1.0, DependenceProfile(kind=UNKNOWN, condition=''))

    def test_subgeometric_decay_is_linear_in_sqrt_n(self):
        """Test that ln delta_n is linear in sqrt(n) for geometric coefficients"""
        family = GeometricCoefficients(0.8, 0.5)
        ns = np.array([100, 200, 500, 1000, 2000, 5000, 10_000])
        logs = np.array([math.log(arch_inf_delta_n(family.total(), family.tail, int(n))) for n in ns])
        r2, slope = r_squared(np.sqrt(ns), logs)
        self.assertGreater(r2, 0.99)
        self.assertLess(slope, 0.0)

    def test_markov_decay_is_linear_in_n(self):
        """Test that ln delta_n of GARCH(1,1) is linear in n with slope ln kappa"""
        spec = parse_model('garch:0.1,0.1,0.8')
        ns = np.array([10, 20, 50, 100, 200])
        logs = np.array([math.log(coupling_bound(spec, int(n))) for n in ns])
        r2, slope = r_squared(ns.astype(float), logs)
        self.assertGreater(r2, 0.99)
        self.assertAlmostEqual(slope, math.log(0.9), places=10)

    def test_coupling_bound_special_cases(self):
        """Test coupling bounds without a formula or without feedback"""
        self.assertEqual(coupling_bound(parse_model('arch1:1,0'), 10), 0.0)
        self.assertIsNone(coupling_bound(parse_model('arch1:1,1'), 10))
        self.assertIsNone(coupling_bound(parse_model('tarch:1,0.5,0.4'), 10))


class TestClassification(unittest.TestCase):
    """Mixing classes and the dependence hypotheses"""

    def test_markov_models_are_beta_mixing(self):
        """Test that stationary Markov models are geometrically beta mixing"""
        for label in ('arch1:1,0.5', 'garch:0.1,0.1,0.8', 'tarch:1,0.5,0.4', 'augmented:log:0.9/0,0.1'):
            self.assertEqual(classify_mixing(parse_model(label)).kind, GEOMETRIC_BETA, msg=label)
        self.assertEqual(classify_mixing(parse_model('arch1:1,1')).kind, UNKNOWN)

    def test_arch_inf_families(self):
        """Test the tau classes of ARCH(inf) coefficient families"""
        self.assertEqual(classify_mixing(parse_model('archinf:0.1,0.3,0.2')).kind, GEOMETRIC_TAU)
        self.assertEqual(classify_mixing(parse_model('archinf-geometric:0.1,0.8,0.5')).kind, SUBGEOMETRIC_TAU)
        profile = classify_mixing(parse_model('archinf-polynomial:0.1,0.5,2'))
        self.assertEqual(profile.kind, POLYNOMIAL_TAU)
        self.assertAlmostEqual(profile.rate_exponent, 1.0)
        self.assertAlmostEqual(profile.log_exponent, 4.0)

    def test_density_exponents(self):
        """Test that rho and alpha enter the polynomial exponents"""
        profile = classify_mixing(parse_model('archinf-polynomial:0.1,0.5,3'), rho=0.5, alpha=0.0)
        self.assertAlmostEqual(profile.rate_exponent, 3.0 * 0.5 / 1.5)
        self.assertAlmostEqual(profile.log_exponent, 2.5)
        with self.assertRaises(DomainError):
            DependenceProfile(kind=UNKNOWN, condition='', rho=1.0)

    def test_theorem_cases(self):
        """Test which hypotheses of the risk bound hold"""
        beta = classify_mixing(parse_model('garch:0.1,0.1,0.8'))
        self.assertEqual(theorem_cases(beta, laplace(1.0)).cases, (1,))
        finite = classify_mixing(parse_model('archinf:0.1,0.3,0.2'))
        self.assertEqual(theorem_cases(finite, laplace(1.0)).cases, (2,))
        self.assertEqual(theorem_cases(finite, gaussian(1.0)).cases, (3,))
        slow = classify_mixing(parse_model('archinf-polynomial:0.1,0.5,2'))
        self.assertFalse(theorem_cases(slow, log_chi_squared()).applicable)
        fast = classify_mixing(parse_model('archinf-polynomial:0.1,0.5,10'))
        self.assertEqual(theorem_cases(fast, log_chi_squared()).cases, (3,))
        self.assertEqual(theorem_cases(fast, laplace(1.0)).cases, (2,))

    def test_dependence_table(self):
        """Test the rows of the dependence table"""
        rows = dependence_table(parse_model('arch1:1,0.5'), [1, 10])
        self.assertEqual(rows[0]['n'], 1)
        self.assertAlmostEqual(rows[0]['delta_n'], 4.0)
        self.assertIsNone(rows[0]['tau'])
        self.assertAlmostEqual(rows[1]['delta_n'], 8.0 * 0.5 ** 10)
        self.assertIsNotNone(rows[1]['tau'])


if __name__ == '__main__':
    unittest.main()
