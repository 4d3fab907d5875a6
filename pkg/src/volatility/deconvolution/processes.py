"""
Simulators for ARCH-type volatility models Y_t = sigma_t eta_t.

Every model is checked against its stationarity condition before simulation.
Recursions start from the stationary mean of sigma_t^2 where it has a closed form,
run for burn_in + n steps and drop the burn-in. Innovations are drawn up front, so
sigma_t only depends on eta_s for s < t.
"""

import logging
import math
import typing as t

import numpy as np

from volatility.deconvolution.config import ConfigurationError
from volatility.deconvolution.deconvolution_exceptions import (
    DomainError,
    SimulationError,
    StationarityError
)
from volatility.deconvolution.process_model import (
    ARCH1,
    ARCHInf,
    AugmentedGARCH,
    FiniteCoefficients,
    GARCH,
    GeometricCoefficients,
    IDENTITY,
    InnovationLaw,
    LOG,
    NonlinearARCH,
    PolynomialCoefficients,
    ProcessSpec,
    SimulatedPath,
    StationarityCheck,
    ThresholdARCH,
    standard_normal,
    student_t,
    uniform_symmetric
)

logger = logging.getLogger(__name__)

# ARCH(inf) sums are cut where the remaining coefficient mass drops below this
ARCH_INF_TAIL_TOL = 1e-12

SEED_MIX = 0x9E3779B97F4A7C15
_MASK64 = 0xFFFFFFFFFFFFFFFF

# moment orders tried for the augmented GARCH condition E|c(eta)|^s < 1
_AUGMENTED_ORDERS = (1, 2, 3, 4)


def derive_seed(master: int, index: int) -> int:
    """Seed of work item `index`: master XOR (index * 0x9E3779B97F4A7C15 mod 2^64)."""
    return (int(master) & _MASK64) ^ ((int(index) * SEED_MIX) & _MASK64)


# ---------- Stationarity ----------

def _augmented_moment_order(spec: AugmentedGARCH, law: InnovationLaw) -> t.Tuple[t.Optional[int], str]:
    c0 = float(spec.c(0.0))
    if abs(c0) >= 1:
        return None, f"|c(0)| = {abs(c0):.4g} >= 1"
    deg_c = max(len(spec.c_coeffs) - 1, 0)
    deg_h = max(len(spec.h_coeffs) - 1, 0)
    last = "no moment order s with E|c(eta)|^s < 1"
    for s in _AUGMENTED_ORDERS:
        if not (law.has_moment(s * deg_c) and law.has_moment(s * deg_h)):
            last = f"E|c(eta)|^{s} or E|h(eta)|^{s} is infinite under {law.label}"
            break
        moment = law.expect(lambda e, s=s: np.abs(spec.c(e)) ** s)
        if moment < 1:
            return s, f"E|c(eta)|^{s} = {moment:.4g} < 1"
        last = f"E|c(eta)|^{s} = {moment:.4g} >= 1"
    return None, last


def check_stationarity(spec: ProcessSpec, law: t.Optional[InnovationLaw] = None) -> StationarityCheck:
    """
    Check the stationarity condition of a model.

    Args:
        spec: Process specification
        law: Innovation law (needed for the augmented GARCH moment condition)

    Returns:
        StationarityCheck: pass/fail, the condition checked and why it failed
    """
    if isinstance(spec, ARCH1):
        condition = "a > 0, 0 <= b < 1"
        if spec.a <= 0:
            return StationarityCheck(False, condition, f"a = {spec.a:g} <= 0")
        if not 0 <= spec.b < 1:
            return StationarityCheck(False, condition, f"b = {spec.b:g} outside [0, 1)")
        return StationarityCheck(True, condition)

    if isinstance(spec, GARCH):
        condition = "a > 0, coefficients >= 0, sum a_i + sum b_j < 1"
        if spec.a <= 0:
            return StationarityCheck(False, condition, f"a = {spec.a:g} <= 0")
        if any(v < 0 for v in spec.alpha + spec.beta):
            return StationarityCheck(False, condition, "negative coefficient")
        if not spec.alpha:
            return StationarityCheck(False, condition, "at least one ARCH coefficient is required")
        if spec.persistence >= 1:
            return StationarityCheck(False, condition, f"sum a_i + sum b_j = {spec.persistence:.4g} >= 1")
        return StationarityCheck(True, condition)

    if isinstance(spec, ARCHInf):
        condition = "a > 0, sum_j a_j < 1"
        if spec.a <= 0:
            return StationarityCheck(False, condition, f"a = {spec.a:g} <= 0")
        total = spec.coefficients.total()
        if total >= 1:
            return StationarityCheck(False, condition, f"sum_j a_j = {total:.4g} >= 1")
        return StationarityCheck(True, condition)

    if isinstance(spec, ThresholdARCH):
        condition = "a, b, c > 0 and max(b, c) < 1"
        if min(spec.a, spec.b, spec.c) <= 0:
            return StationarityCheck(False, condition, "a, b and c must be positive")
        if max(spec.b, spec.c) >= 1:
            return StationarityCheck(False, condition, f"max(b, c) = {max(spec.b, spec.c):g} >= 1")
        return StationarityCheck(True, condition)

    if isinstance(spec, NonlinearARCH):
        condition = "declared limsup |f(x)/x| < 1"
        if not 0 <= spec.lipschitz_bound < 1:
            return StationarityCheck(False, condition, f"declared bound {spec.lipschitz_bound:g} is not < 1")
        return StationarityCheck(True, condition)

    if isinstance(spec, AugmentedGARCH):
        condition = "|c(0)| < 1 and E|c(eta)|^s < 1, E|h(eta)|^s < inf for some integer s >= 1"
        order, reason = _augmented_moment_order(spec, law or standard_normal())
        if order is None:
            return StationarityCheck(False, condition, reason)
        return StationarityCheck(True, condition)

    raise DomainError(f"unsupported process specification {type(spec).__name__}")


def stationary_mean_sigma2(spec: ProcessSpec, law: t.Optional[InnovationLaw] = None) -> t.Optional[float]:
    """E sigma^2 when it has a closed form, else None."""
    if isinstance(spec, ARCH1):
        return spec.a / (1.0 - spec.b)
    if isinstance(spec, GARCH):
        return spec.a / (1.0 - spec.persistence)
    if isinstance(spec, ARCHInf):
        return spec.a / (1.0 - spec.coefficients.total())
    if isinstance(spec, AugmentedGARCH) and spec.transform is IDENTITY:
        law = law or standard_normal()
        mean_c = law.expect(spec.c)
        if mean_c < 1:
            return law.expect(spec.h) / (1.0 - mean_c)
    return None


def markov_contraction(spec: ProcessSpec, law: t.Optional[InnovationLaw] = None) -> t.Optional[float]:
    """kappa with E|f(x, eta)^2 - f(y, eta)^2| <= kappa |x^2 - y^2|, when one is available."""
    if isinstance(spec, ARCH1):
        return spec.b
    if isinstance(spec, GARCH) and len(spec.alpha) == 1 and len(spec.beta) <= 1:
        return spec.persistence
    if isinstance(spec, AugmentedGARCH) and spec.transform is IDENTITY:
        law = law or standard_normal()
        return law.expect(lambda e: np.abs(spec.c(e)))
    return None


# ---------- Simulation ----------

def _fail_if_invalid(value: float, index: int, burn_in: int) -> None:
    if not math.isfinite(value) or value <= 0:
        raise SimulationError(
            f"volatility state {value!r} is not a finite positive variance",
            index=index - burn_in
        )


def _simulate_arch1(spec: ARCH1, eta: t.List[float], burn_in: int) -> np.ndarray:
    sigma2 = np.empty(len(eta))
    s2 = spec.a / (1.0 - spec.b)
    for i, e in enumerate(eta):
        _fail_if_invalid(s2, i, burn_in)
        sigma2[i] = s2
        y = math.sqrt(s2) * e
        s2 = spec.a + spec.b * y * y
    return np.sqrt(sigma2)


def _simulate_garch(spec: GARCH, eta: t.List[float], burn_in: int) -> np.ndarray:
    p, q = len(spec.alpha), len(spec.beta)
    mean = spec.a / (1.0 - spec.persistence)
    y2_hist = [mean] * p  # most recent first
    s2_hist = [mean] * max(q, 1)
    sigma2 = np.empty(len(eta))
    for i, e in enumerate(eta):
        s2 = spec.a
        for k in range(p):
            s2 += spec.alpha[k] * y2_hist[k]
        for k in range(q):
            s2 += spec.beta[k] * s2_hist[k]
        _fail_if_invalid(s2, i, burn_in)
        sigma2[i] = s2
        y = math.sqrt(s2) * e
        y2_hist.insert(0, y * y)
        y2_hist.pop()
        s2_hist.insert(0, s2)
        s2_hist.pop()
    return np.sqrt(sigma2)


def _arch_inf_lags(spec: ARCHInf) -> t.Tuple[np.ndarray, float]:
    family = spec.coefficients
    lag = family.truncation_lag(ARCH_INF_TAIL_TOL)
    intercept = spec.a
    if lag > spec.max_lag:
        residual = family.tail(spec.max_lag)
        mean = spec.a / (1.0 - family.total())
        intercept = spec.a + residual * mean
        logger.warning(
            f"ARCH(inf) truncation lag {lag} capped at {spec.max_lag}; "
            f"tail mass {residual:.3g} folded into the intercept"
        )
        lag = spec.max_lag
    return family.coefficients(lag), intercept


def _simulate_arch_inf(spec: ARCHInf, eta: t.List[float], burn_in: int) -> np.ndarray:
    coeffs, intercept = _arch_inf_lags(spec)
    lag = coeffs.size
    mean = spec.a / (1.0 - spec.coefficients.total())
    total = len(eta)
    # y2[lag + i] holds Y_i^2; the first lag entries are the initial history
    y2 = np.empty(lag + total)
    y2[:lag] = mean
    reversed_coeffs = coeffs[::-1].copy()
    sigma2 = np.empty(total)
    for i, e in enumerate(eta):
        s2 = intercept + float(np.dot(reversed_coeffs, y2[i:i + lag]))
        _fail_if_invalid(s2, i, burn_in)
        sigma2[i] = s2
        y = math.sqrt(s2) * e
        y2[lag + i] = y * y
    return np.sqrt(sigma2)


def _simulate_threshold(spec: ThresholdARCH, eta: t.List[float], burn_in: int) -> np.ndarray:
    sigma = np.empty(len(eta))
    s = math.sqrt(spec.a)
    for i, e in enumerate(eta):
        _fail_if_invalid(s, i, burn_in)
        sigma[i] = s
        if e > 0:
            s = spec.a + spec.b * s * e
        elif e < 0:
            s = spec.a - spec.c * s * e
        else:
            s = spec.a
    return sigma


def _simulate_nonlinear(spec: NonlinearARCH, eta: t.List[float], burn_in: int) -> np.ndarray:
    sigma = np.empty(len(eta))
    start = float(spec.f(0.0))
    s = start if start > 0 else 1.0
    for i, e in enumerate(eta):
        if not math.isfinite(s) or s == 0:
            raise SimulationError(f"volatility state {s!r} is degenerate", index=i - burn_in)
        sigma[i] = s
        s = float(spec.f(s * e))
    return sigma


def _simulate_augmented(spec: AugmentedGARCH, eta: t.List[float], burn_in: int) -> np.ndarray:
    c_values = spec.c(np.asarray(eta)).tolist()
    h_values = spec.h(np.asarray(eta)).tolist()
    c0, h0 = float(spec.c(0.0)), float(spec.h(0.0))
    level = h0 / (1.0 - c0)
    try:
        s2 = float(spec.transform.inverse(level))
    except (ValueError, OverflowError, ArithmeticError):
        s2 = float('nan')
    if not math.isfinite(s2) or s2 <= 0:
        s2 = 1.0
        level = float(spec.transform.forward(1.0))
    sigma2 = np.empty(len(eta))
    for i in range(len(eta)):
        _fail_if_invalid(s2, i, burn_in)
        sigma2[i] = s2
        level = c_values[i] * level + h_values[i]
        with np.errstate(all='ignore'):
            s2 = float(spec.transform.inverse(level))
    return np.sqrt(sigma2)


_SIMULATORS = (
    (ARCH1, _simulate_arch1),
    (GARCH, _simulate_garch),
    (ARCHInf, _simulate_arch_inf),
    (ThresholdARCH, _simulate_threshold),
    (NonlinearARCH, _simulate_nonlinear),
    (AugmentedGARCH, _simulate_augmented),
)


def simulate(
    spec: ProcessSpec,
    law: t.Optional[InnovationLaw] = None,
    n: int = 1000,
    burn_in: int = 5000,
    seed: t.Optional[int] = None
) -> SimulatedPath:
    """
    Simulate Y_t = sigma_t eta_t.

    Args:
        spec: Process specification
        law: Innovation law (default standard normal)
        n: Number of points kept
        burn_in: Number of leading points dropped
        seed: Seed of the numpy Generator

    Returns:
        SimulatedPath: y, sigma, x = ln sigma^2 and eta

    Raises:
        StationarityError: If the stationarity condition fails
        SimulationError: If the recursion leaves the finite positive range
    """
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if burn_in < 0:
        raise DomainError(f"burn_in must be >= 0, got {burn_in}")
    law = law or standard_normal()
    check = check_stationarity(spec, law)
    if not check.passed:
        raise StationarityError(
            f"{spec.label} refused: {check.reason} (requires {check.condition})",
            detail=check.to_dict()
        )

    rng = np.random.default_rng(seed)
    eta = law.sample(rng, burn_in + n)
    for kind, simulator in _SIMULATORS:
        if isinstance(spec, kind):
            sigma = simulator(spec, eta.tolist(), burn_in)
            break
    else:
        raise DomainError(f"unsupported process specification {type(spec).__name__}")

    sigma = sigma[burn_in:]
    eta = eta[burn_in:]
    logger.debug(f"Simulated {spec.label}: n={n}, burn_in={burn_in}, seed={seed}")
    return SimulatedPath(y=sigma * eta, sigma=sigma, x=np.log(np.square(sigma)), eta=eta)


# ---------- Labels ----------

def _numbers(label: str, text: str) -> t.List[float]:
    try:
        return [float(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise ConfigurationError(f"Invalid numeric parameters in model label '{label}'")


def parse_model(label: str) -> ProcessSpec:
    """
    Parse a model label.

    Supported forms:
        arch1:a,b
        garch:a,a1,b1                      GARCH(1,1)
        garch(p,q):a,a1..ap,b1..bq
        archinf:a,a1,a2,...                finite lag list
        archinf-geometric:a,C,b            a_j = C b^j
        archinf-polynomial:a,C,b           a_j = C j^-b
        tarch:a,b,c
        augmented:identity:c0,c1,c2/h0,... polynomial c and h in ascending powers of eta
        augmented:log:c0,.../h0,...
    """
    head, _, body = label.strip().partition(':')
    head = head.strip().lower()
    if head == 'arch1':
        values = _numbers(label, body)
        if len(values) != 2:
            raise ConfigurationError(f"arch1 takes a,b; got '{label}'")
        return ARCH1(a=values[0], b=values[1])
    if head.startswith('garch'):
        values = _numbers(label, body)
        p, q = 1, 1
        if head != 'garch':
            try:
                p, q = (int(v) for v in head[len('garch'):].strip('()').split(','))
            except ValueError:
                raise ConfigurationError(f"Invalid GARCH orders in '{label}'")
        if len(values) != 1 + p + q:
            raise ConfigurationError(f"GARCH({p},{q}) takes {1 + p + q} parameters; got '{label}'")
        return GARCH(a=values[0], alpha=tuple(values[1:1 + p]), beta=tuple(values[1 + p:]))
    if head == 'archinf':
        values = _numbers(label, body)
        if len(values) < 2:
            raise ConfigurationError(f"archinf takes a,a1,...; got '{label}'")
        return ARCHInf(a=values[0], coefficients=FiniteCoefficients(tuple(values[1:])))
    if head in ('archinf-geometric', 'archinf-polynomial'):
        values = _numbers(label, body)
        if len(values) != 3:
            raise ConfigurationError(f"{head} takes a,C,b; got '{label}'")
        family = GeometricCoefficients(values[1], values[2]) if head.endswith('geometric') \
            else PolynomialCoefficients(values[1], values[2])
        return ARCHInf(a=values[0], coefficients=family)
    if head == 'tarch':
        values = _numbers(label, body)
        if len(values) != 3:
            raise ConfigurationError(f"tarch takes a,b,c; got '{label}'")
        return ThresholdARCH(a=values[0], b=values[1], c=values[2])
    if head == 'augmented':
        kind, _, polys = body.partition(':')
        transforms = {'identity': IDENTITY, 'log': LOG}
        if kind.strip().lower() not in transforms or '/' not in polys:
            raise ConfigurationError(f"augmented takes identity|log:c0,c1,.../h0,...; got '{label}'")
        c_text, h_text = polys.split('/', 1)
        return AugmentedGARCH(
            transform=transforms[kind.strip().lower()],
            c_coeffs=tuple(_numbers(label, c_text)),
            h_coeffs=tuple(_numbers(label, h_text))
        )
    raise ConfigurationError(
        f"Unknown model '{label}'. Supported: arch1, garch, garch(p,q), archinf, archinf-geometric, "
        f"archinf-polynomial, tarch, augmented"
    )


def parse_law(label: str) -> InnovationLaw:
    """Parse 'normal', 't:5' / 'student_t:5' or 'uniform'."""
    head, _, argument = label.strip().partition(':')
    head = head.strip().lower()
    if head in ('normal', 'standard_normal', 'gaussian'):
        return standard_normal()
    if head in ('uniform', 'uniform_symmetric'):
        return uniform_symmetric()
    if head in ('t', 'student_t', 'student'):
        try:
            return student_t(float(argument))
        except ValueError:
            raise ConfigurationError(f"student_t needs degrees of freedom, e.g. 't:5'; got '{label}'")
    raise ConfigurationError(f"Unknown innovation law '{label}'. Supported: normal, t:<df>, uniform")
