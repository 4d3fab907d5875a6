"""
Dependence bounds for ARCH-type models.

Every value here is a rate "up to the O-constant": coupling bounds delta_n, the
induced tau rate of (X_t, Z_t) and the mixing class of a specification. They feed
documentation and the hypothesis check of the adaptive risk bound, never the estimator.
"""

import dataclasses
import logging
import math
import typing as t

import numpy as np

from volatility.deconvolution.deconvolution_exceptions import DomainError
from volatility.deconvolution.noise_models import NoiseModel
from volatility.deconvolution.process_model import (
    ARCH1,
    ARCHInf,
    AugmentedGARCH,
    FiniteCoefficients,
    GARCH,
    GeometricCoefficients,
    InnovationLaw,
    NonlinearARCH,
    PolynomialCoefficients,
    ProcessSpec,
    ThresholdARCH
)
from volatility.deconvolution.processes import (
    check_stationarity,
    markov_contraction,
    stationary_mean_sigma2
)

logger = logging.getLogger(__name__)

GEOMETRIC_BETA = 'geometric_beta'
GEOMETRIC_TAU = 'geometric_tau'
SUBGEOMETRIC_TAU = 'subgeometric_tau'
POLYNOMIAL_TAU = 'polynomial_tau'
UNKNOWN = 'unknown'

RATE_LABEL = 'up to O-constant'


@dataclasses.dataclass(frozen=True)
class DependenceProfile:
    """Mixing class of a model plus the density exponents near 0 (rho, alpha)"""
    kind: str
    condition: str
    rho: float = 0.0
    alpha: float = 1.0
    rate_exponent: t.Optional[float] = None  # tau(n) = O(n^-rate_exponent (ln n)^log_exponent)
    log_exponent: t.Optional[float] = None
    rate_description: t.Optional[str] = None

    def __post_init__(self):
        if not 0 <= self.rho < 1:
            raise DomainError(f"rho must lie in [0, 1), got {self.rho}")
        if self.alpha < 0:
            raise DomainError(f"alpha must be >= 0, got {self.alpha}")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclasses.dataclass(frozen=True)
class TheoremCheck:
    """Which hypotheses (1: beta mixing, 2: tau with ordinary smooth noise, 3: tau with super smooth noise) hold"""
    cases: t.Tuple[int, ...]
    reason: str

    @property
    def applicable(self) -> bool:
        return bool(self.cases)

    def to_dict(self) -> dict:
        return {"cases": list(self.cases), "applicable": self.applicable, "reason": self.reason}


def arch_inf_delta_n_argmin(c: float, tail: t.Callable[[int], float], n: int) -> t.Tuple[float, int]:
    """Minimum over k = 1..n of c^(n/k) + tail(k), with the minimizing k."""
    if not 0 < c < 1:
        raise DomainError(f"c must lie in (0, 1), got {c}")
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    ks = np.arange(1, n + 1)
    values = np.power(c, n / ks) + np.array([tail(int(k)) for k in ks], dtype=float)
    best = int(np.argmin(values))
    return float(values[best]), int(ks[best])


def arch_inf_delta_n(c: float, tail: t.Callable[[int], float], n: int) -> float:
    """
    Coupling bound for ARCH(inf): min over k = 1..n of c^(n/k) + sum_{i > k} a_i.

    Args:
        c: sum_j a_j, in (0, 1)
        tail: k -> sum_{i > k} a_i, nonincreasing
        n: Horizon

    Returns:
        float: delta_n (up to the O-constant)
    """
    return arch_inf_delta_n_argmin(c, tail, n)[0]


def tau_from_delta(delta_n: float, profile: DependenceProfile) -> float:
    """tau rate delta_n^((1-rho)/(2-rho)) |ln delta_n|^((1+alpha)/(2-rho)) (up to the O-constant)."""
    if not 0 < delta_n < 1:
        raise DomainError(f"delta_n must lie in (0, 1), got {delta_n}")
    rho, alpha = profile.rho, profile.alpha
    return delta_n ** ((1.0 - rho) / (2.0 - rho)) * abs(math.log(delta_n)) ** ((1.0 + alpha) / (2.0 - rho))


def markov_delta_n(kappa: float, sigma0_sq_mean: float, n: int) -> float:
    """delta_n = 4 E(sigma_0^2) kappa^n for a Lipschitz Markov chain."""
    if not 0 < kappa < 1:
        raise DomainError(f"kappa must lie in (0, 1), got {kappa}")
    if not sigma0_sq_mean > 0:
        raise DomainError(f"E sigma_0^2 must be positive, got {sigma0_sq_mean}")
    if n < 0:
        raise DomainError(f"n must be >= 0, got {n}")
    return 4.0 * sigma0_sq_mean * kappa ** n


def classify_mixing(
    spec: ProcessSpec,
    law: t.Optional[InnovationLaw] = None,
    rho: float = 0.0,
    alpha: float = 1.0
) -> DependenceProfile:
    """
    Mixing class of a specification.

    Args:
        spec: Process specification
        law: Innovation law (all supported laws have a density positive around 0)
        rho: Density blow-up exponent near 0 (default 0, bounded densities)
        alpha: Log exponent near 0 (default 1, bounded densities)

    Returns:
        DependenceProfile: class, cited condition and polynomial rate exponents when relevant
    """
    check = check_stationarity(spec, law)

    def profile(kind: str, condition: str, **extra) -> DependenceProfile:
        return DependenceProfile(kind=kind, condition=condition, rho=rho, alpha=alpha, **extra)

    if isinstance(spec, ARCHInf):
        if not check.passed:
            return profile(UNKNOWN, f"condition fails: {check.reason}")
        family = spec.coefficients
        if isinstance(family, FiniteCoefficients):
            return profile(GEOMETRIC_TAU, "a_j = 0 beyond a finite lag", rate_description="geometric")
        if isinstance(family, GeometricCoefficients):
            return profile(SUBGEOMETRIC_TAU, "a_j = O(b^j), b < 1", rate_description="kappa^sqrt(n)")
        if isinstance(family, PolynomialCoefficients):
            b = family.exponent
            return profile(
                POLYNOMIAL_TAU,
                "a_j = O(j^-b), b > 1",
                rate_exponent=b * (1.0 - rho) / (2.0 - rho),
                log_exponent=(b + 2.0) * (1.0 + alpha) / 2.0,
                rate_description=f"n^-{b * (1.0 - rho) / (2.0 - rho):g} (ln n)^{(b + 2.0) * (1.0 + alpha) / 2.0:g}"
            )
    conditions = {
        ARCH1: "0 <= b < 1",
        GARCH: "sum a_i + sum b_j < 1",
        ThresholdARCH: "max(b, c) < 1",
        NonlinearARCH: "limsup |f(x)/x| < 1 and eta density positive near 0",
        AugmentedGARCH: "polynomial c, h with |c(0)| < 1, E|c(eta)|^s < 1, E|h(eta)|^s < inf",
    }
    for kind, condition in conditions.items():
        if isinstance(spec, kind):
            if check.passed:
                return profile(GEOMETRIC_BETA, condition, rate_description="geometric")
            return profile(UNKNOWN, f"condition fails: {check.reason}")
    return profile(UNKNOWN, "no classification rule for this model")


def coupling_bound(spec: ProcessSpec, n: int, law: t.Optional[InnovationLaw] = None) -> t.Optional[float]:
    """
    delta_n for the specification, or None when no formula applies.

    ARCH(inf) models use the infimum bound; ARCH(1), GARCH(1,1) and identity-transform
    augmented GARCH models use the Markov contraction bound.
    """
    if not check_stationarity(spec, law).passed:
        return None
    if isinstance(spec, ARCHInf):
        family = spec.coefficients
        return arch_inf_delta_n(family.total(), family.tail, n)
    kappa = markov_contraction(spec, law)
    mean = stationary_mean_sigma2(spec, law)
    if kappa is None or mean is None:
        return None
    if kappa == 0:
        return 0.0
    return markov_delta_n(kappa, mean, n)


def theorem_cases(profile: DependenceProfile, nm: NoiseModel) -> TheoremCheck:
    """
    Report which dependence hypotheses of the adaptive risk bound hold.

    Case 1 needs beta(k) = O(k^-(1+theta)) with theta > 3. Case 2 needs delta = 0,
    gamma >= 3/2 and tau(k) = O(k^-(1+theta)) with theta > 3 + 2/(1+2 gamma). Case 3
    needs delta > 0 and tau(k) = O(k^-(1+theta)) with theta > 3.
    """
    sp = nm.smoothness
    if profile.kind == GEOMETRIC_BETA:
        return TheoremCheck(cases=(1,), reason="geometric beta mixing")
    if profile.kind in (GEOMETRIC_TAU, SUBGEOMETRIC_TAU):
        theta_ok = True
        why = "tau decays faster than any power"
    elif profile.kind == POLYNOMIAL_TAU and profile.rate_exponent is not None:
        theta = profile.rate_exponent - 1.0
        threshold = 3.0 if sp.delta > 0 else 3.0 + 2.0 / (1.0 + 2.0 * sp.gamma)
        theta_ok = theta > threshold
        why = f"theta = {theta:g} vs required > {threshold:g}"
    else:
        return TheoremCheck(cases=(), reason="dependence class unknown")

    if not theta_ok:
        return TheoremCheck(cases=(), reason=why)
    if sp.delta > 0:
        return TheoremCheck(cases=(3,), reason=why)
    if sp.gamma >= 1.5:
        return TheoremCheck(cases=(2,), reason=why)
    return TheoremCheck(cases=(), reason=f"{why}; ordinary smooth noise needs gamma >= 3/2")


def dependence_table(
    spec: ProcessSpec,
    n_values: t.Sequence[int],
    law: t.Optional[InnovationLaw] = None,
    rho: float = 0.0,
    alpha: float = 1.0
) -> t.List[dict]:
    """Rows (n, delta_n, tau) for a specification; tau is empty when delta_n is not in (0, 1)."""
    profile = classify_mixing(spec, law, rho=rho, alpha=alpha)
    rows = []
    for n in n_values:
        bound = coupling_bound(spec, int(n), law)
        tau = None
        if bound is not None and 0 < bound < 1:
            tau = tau_from_delta(bound, profile)
        rows.append({"n": int(n), "delta_n": bound, "tau": tau})
    return rows
