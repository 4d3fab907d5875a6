"""Sample scripts and experiment files for the volatility deconvolution library."""
