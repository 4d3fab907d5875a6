"""
Test package for the volatility deconvolution library.

This package contains tests for:
- Noise models, spectral projection and the deconvolution estimator
- Penalized model selection and the theoretical rates
- ARCH-type simulation and dependence bounds
- The Monte Carlo risk harness, configuration management and the CLI
"""
