import math
import unittest

import numpy as np

from volatility.deconvolution.deconvolution_exceptions import DomainError, NumericalError
from volatility.deconvolution.noise_models import laplace, log_chi_squared
from volatility.deconvolution.rates import (
    ORDINARY_ANALYTIC,
    ORDINARY_SOBOLEV,
    SUPER_SMOOTH_ANALYTIC,
    SUPER_SMOOTH_SOBOLEV,
    SmoothnessSpec,
    bias_bound,
    oracle_m_theoretical,
    residual,
    risk_bound
)


class TestBounds(unittest.TestCase):
    """Bias and risk bounds"""

    def test_bias_bound(self):
        """Test the bias bound on Sobolev and analytic classes"""
        self.assertAlmostEqual(bias_bound(SmoothnessSpec(), 1.0), 1.0)
        self.assertAlmostEqual(bias_bound(SmoothnessSpec(s=1.0), 0.5), 1.0 / (1.0 + math.pi ** 2 / 4.0))
        self.assertAlmostEqual(
            bias_bound(SmoothnessSpec(r=1.0, b=0.5), 1.0), math.exp(-math.pi), places=12
        )
        with self.assertRaises(DomainError):
            bias_bound(SmoothnessSpec(), 0.0)

    def test_bias_bound_decreases(self):
        """Test that the bias bound decreases in m"""
        spec = SmoothnessSpec(s=2.0)
        values = [bias_bound(spec, m) for m in (0.25, 0.5, 1.0, 2.0)]
        self.assertEqual(values, sorted(values, reverse=True))

    def test_spec_validation(self):
        """Test invalid smoothness classes"""
        with self.assertRaises(DomainError):
            SmoothnessSpec(s=-1.0)
        with self.assertRaises(DomainError):
            SmoothnessSpec(r=1.0, b=0.0)
        with self.assertRaises(DomainError):
            SmoothnessSpec(C1=0.0)
        spec = SmoothnessSpec.from_dict({'s': '2', 'r': 0})
        self.assertEqual(spec.s, 2.0)
        self.assertAlmostEqual(spec.C1, 2.0 * math.pi)


class TestTheoreticalOracle(unittest.TestCase):
    """Rate-optimal cutoffs of the four cases"""

    def test_ordinary_sobolev(self):
        """Test pi m = n^(1/(2s+2gamma+1)) for s=2 and Laplace noise"""
        oracle = oracle_m_theoretical(SmoothnessSpec(s=2.0), laplace(1.0), 10_000)
        self.assertEqual(oracle.case, ORDINARY_SOBOLEV)
        self.assertAlmostEqual(oracle.pi_m, 10.0 ** (4.0 / 9.0), places=10)
        self.assertAlmostEqual(oracle.pi_m, 2.783, places=3)
        self.assertAlmostEqual(oracle.m, oracle.pi_m / math.pi)
        self.assertAlmostEqual(oracle.rate_exponent, -4.0 / 9.0)
        self.assertAlmostEqual(oracle.rate, 10_000 ** (-4.0 / 9.0))
        self.assertEqual(oracle.structure, 'n^-0.444444')

    def test_super_smooth_sobolev(self):
        """Test the logarithmic cutoff for ln(eta^2) noise on a Sobolev class"""
        oracle = oracle_m_theoretical(SmoothnessSpec(s=2.0), log_chi_squared(), 10_000)
        self.assertEqual(oracle.case, SUPER_SMOOTH_SOBOLEV)
        self.assertAlmostEqual(oracle.pi_m, math.log(10_000) / (math.pi + 1.0), places=10)
        self.assertAlmostEqual(oracle.log_exponent, -4.0)
        self.assertIsNone(oracle.rate_exponent)
        self.assertAlmostEqual(oracle.rate, math.log(10_000) ** -4.0)

    def test_ordinary_analytic(self):
        """Test the near-parametric rate for Laplace noise on an analytic class"""
        oracle = oracle_m_theoretical(SmoothnessSpec(r=1.0, b=1.0), laplace(1.0), 10_000)
        self.assertEqual(oracle.case, ORDINARY_ANALYTIC)
        self.assertAlmostEqual(oracle.pi_m, math.log(10_000) / 2.0)
        self.assertEqual(oracle.rate_exponent, -1.0)
        self.assertAlmostEqual(oracle.log_exponent, 5.0)
        self.assertAlmostEqual(oracle.rate, math.log(10_000) ** 5 / 10_000)

    def test_super_smooth_analytic(self):
        """Test the implicit cutoff where the equation is linear in m"""
        # s=0, gamma=0, r=delta=1: (pi^2 + pi b') m = ln n with b' = 2b = 1
        oracle = oracle_m_theoretical(SmoothnessSpec(r=1.0, b=0.5), log_chi_squared(), 10_000)
        self.assertEqual(oracle.case, SUPER_SMOOTH_ANALYTIC)
        self.assertAlmostEqual(oracle.m, math.log(10_000) / (math.pi ** 2 + math.pi), places=7)
        self.assertLess(oracle.residual, 1e-6)
        self.assertEqual(oracle.structure, 'bias(m) + Gamma(m)/n')

    def test_residual(self):
        """Test the relative error of the implicit equation"""
        spec = SmoothnessSpec(r=1.0, b=0.5)
        m = math.log(500) / (math.pi ** 2 + math.pi)
        self.assertAlmostEqual(residual(spec, log_chi_squared(), 500, m), 0.0, places=10)
        self.assertAlmostEqual(residual(spec, log_chi_squared(), 500, 2.0 * m), 499.0, places=6)

    def test_no_root(self):
        """Test that an implicit equation without a root above the lower end fails"""
        with self.assertRaises(NumericalError):
            oracle_m_theoretical(SmoothnessSpec(r=3.0, b=1.0), log_chi_squared(), 3)

    def test_small_n(self):
        """Test that n < 3 is rejected"""
        with self.assertRaises(DomainError):
            oracle_m_theoretical(SmoothnessSpec(s=1.0), laplace(1.0), 2)

    def test_rate_decreases_with_n(self):
        """Test that the rate improves with the sample size"""
        spec = SmoothnessSpec(s=1.0)
        rates = [oracle_m_theoretical(spec, laplace(1.0), n).rate for n in (100, 1000, 10_000)]
        self.assertEqual(rates, sorted(rates, reverse=True))

    def test_cutoff_nondecreasing_in_n(self):
        """Test that m_breve never shrinks as n grows, in all four cases"""
        cases = (
            (SmoothnessSpec(s=2.0), laplace(1.0)),
            (SmoothnessSpec(s=2.0), log_chi_squared()),
            (SmoothnessSpec(r=1.0, b=1.0), laplace(1.0)),
            (SmoothnessSpec(r=1.0, b=0.5), log_chi_squared()),
        )
        for spec, nm in cases:
            cutoffs = [oracle_m_theoretical(spec, nm, n).m for n in (50, 500, 5000, 50_000, 500_000)]
            for smaller, larger in zip(cutoffs, cutoffs[1:]):
                self.assertLessEqual(smaller, larger, msg=f"{spec} {nm.label}")

    def test_cutoff_nearly_minimizes_risk_bound(self):
        """Test that the risk bound at m_breve is within a constant of its minimum over m"""
        spec = SmoothnessSpec(s=2.0)
        nm = laplace(1.0)
        n = 10_000
        oracle = oracle_m_theoretical(spec, nm, n)
        grid = np.linspace(0.05, 5.0, 400)
        best = min(risk_bound(spec, nm, float(m), n) for m in grid)
        self.assertLessEqual(risk_bound(spec, nm, oracle.m, n) / best, 10.0)

    def test_risk_bound_components(self):
        """Test the risk bound as bias plus variance terms"""
        spec = SmoothnessSpec(s=1.0, M2=1.0)
        nm = laplace(1.0)
        expected = (
            1.0 / (1.0 + math.pi ** 2)
            + 2.0 / 100
            + 2.0 / math.pi * (1.0 + math.pi ** 2) ** 2 * math.pi / 100
        )
        self.assertAlmostEqual(risk_bound(spec, nm, 1.0, 100), expected, places=10)
        with self.assertRaises(DomainError):
            risk_bound(spec, nm, 1.0, 0)


if __name__ == '__main__':
    unittest.main()
