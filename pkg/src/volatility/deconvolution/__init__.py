"""
Adaptive deconvolution estimation of the log-volatility density of ARCH-type models.

Observed returns Y_t = sigma_t eta_t are turned into Z_t = ln(Y_t^2) = X_t + eps_t with
X_t = ln(sigma_t^2) and eps_t = ln(eta_t^2) of known law. The density of X is estimated
by projection on sinc spaces with a penalized choice of the spectral cutoff.

Modules:
    noise_models: Known error laws and their smoothness constants
    projection: Sinc spaces and the spectral quadrature engine
    estimator: Deconvolution coefficients from the empirical characteristic function
    selection: Penalty, admissible models and the penalized choice of m
    processes: ARCH-type simulators and stationarity checks
    dependence: Mixing classes and coupling bounds
    rates: Theoretical cutoffs and rates
    harness: Monte Carlo risk experiments
    cli: The vol-deconv command
"""
