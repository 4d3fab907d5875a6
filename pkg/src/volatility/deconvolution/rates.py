"""
Theoretical rates for g in the smoothness class S_{s,r,b}(C1).

The class holds densities with int |g*(x)|^2 (x^2 + 1)^s exp(2 b |x|^r) dx <= C1. The
functions below give the bias bound of the projection on S_m, the rate-optimal cutoff
m_breve for a noise model and the rate it achieves. All rates are orders of magnitude
(up to the O-constant) evaluated at the given n.
"""

import dataclasses
import logging
import math
import typing as t

from scipy import optimize

from volatility.deconvolution.deconvolution_exceptions import DomainError, NumericalError
from volatility.deconvolution.noise_models import NoiseModel
from volatility.deconvolution.selection import gamma_fn, lambda1

logger = logging.getLogger(__name__)

ORDINARY_SOBOLEV = 'r=0,delta=0'
SUPER_SMOOTH_SOBOLEV = 'r=0,delta>0'
ORDINARY_ANALYTIC = 'r>0,delta=0'
SUPER_SMOOTH_ANALYTIC = 'r>0,delta>0'

ROOT_LOWER = 1e-6
ROOT_XTOL = 1e-12
_MAX_DOUBLINGS = 200


@dataclasses.dataclass(frozen=True)
class SmoothnessSpec:
    """Smoothness class S_{s,r,b}(C1) of g and the moment bound int x^2 g^2 <= M2"""
    s: float = 0.0
    r: float = 0.0
    b: float = 0.0
    C1: float = 2.0 * math.pi
    M2: float = 1.0

    def __post_init__(self):
        for name in ('s', 'r', 'b'):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise DomainError(f"{name} must be finite and >= 0, got {value}")
        if self.r > 0 and not self.b > 0:
            raise DomainError(f"r > 0 needs b > 0, got b={self.b}")
        if not self.C1 > 0 or not self.M2 > 0:
            raise DomainError("C1 and M2 must be positive")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> 'SmoothnessSpec':
        return cls(
            s=float(data.get('s', 0.0)),
            r=float(data.get('r', 0.0)),
            b=float(data.get('b', 0.0)),
            C1=float(data.get('C1', 2.0 * math.pi)),
            M2=float(data.get('M2', 1.0))
        )


@dataclasses.dataclass(frozen=True)
class TheoreticalOracle:
    """
    Rate-optimal cutoff and its rate.

    rate_exponent is the power of n in the rate and log_exponent the power of ln n;
    both are None in the implicit case, where the rate is bias_bound(m) + Gamma(m) / n.
    residual is the relative error of the implicit equation at the root (0 otherwise).
    """
    case: str
    pi_m: float
    m: float
    rate: float
    n: int
    rate_exponent: t.Optional[float] = None
    log_exponent: t.Optional[float] = None
    residual: float = 0.0

    @property
    def structure(self) -> str:
        if self.rate_exponent is None and self.log_exponent is None:
            return "bias(m) + Gamma(m)/n"
        parts = []
        if self.rate_exponent:
            parts.append(f"n^{self.rate_exponent:.6g}")
        if self.log_exponent:
            parts.append(f"(ln n)^{self.log_exponent:.6g}")
        return " ".join(parts) or "1"

    def to_dict(self) -> dict:
        data = dataclasses.asdict(self)
        data["structure"] = self.structure
        return data


def bias_bound(spec: SmoothnessSpec, m: float) -> float:
    """
    ||g - g_m||^2 <= C1 / (2 pi) (m^2 pi^2 + 1)^-s exp(-2 b pi^r m^r).

    The exponential factor is 1 on a Sobolev ball (r = 0).
    """
    if not m > 0:
        raise DomainError(f"m must be positive, got {m}")
    log_value = math.log(spec.C1 / (2.0 * math.pi)) - spec.s * math.log1p((math.pi * m) ** 2)
    if spec.r > 0:
        log_value -= 2.0 * spec.b * (math.pi * m) ** spec.r
    return math.exp(log_value)


def risk_bound(spec: SmoothnessSpec, nm: NoiseModel, m: float, n: int) -> float:
    """Upper bound bias + m^2 (M2 + 1) / n + 2 lambda1 Gamma(m) / n on the MISE of one model (k_n >= n)."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    return (
        bias_bound(spec, m)
        + m * m * (spec.M2 + 1.0) / n
        + 2.0 * lambda1(nm) * gamma_fn(nm, m) / n
    )


def _implicit_log_lhs(spec: SmoothnessSpec, nm: NoiseModel, m: float) -> float:
    sp = nm.smoothness
    power = 2.0 * spec.s + 2.0 * sp.gamma + 1.0 - spec.r
    return (
        power * math.log(m)
        + 2.0 * sp.mu * (math.pi * m) ** sp.delta
        + 2.0 * spec.b * math.pi ** spec.r * m ** spec.r
    )


def residual(spec: SmoothnessSpec, nm: NoiseModel, n: int, m: float) -> float:
    """Relative error |lhs(m) / n - 1| of m^(2s+2gamma+1-r) exp(2 mu (pi m)^delta + 2 b pi^r m^r) = n."""
    return abs(math.expm1(_implicit_log_lhs(spec, nm, m) - math.log(n)))


def _solve_implicit(spec: SmoothnessSpec, nm: NoiseModel, n: int) -> float:
    target = math.log(n)

    def excess(m: float) -> float:
        return _implicit_log_lhs(spec, nm, m) - target

    lo = ROOT_LOWER
    if excess(lo) > 0:
        raise NumericalError(
            f"implicit cutoff equation has no root above {lo:g} for n={n}",
            detail={"n": n, "lower": lo}
        )
    hi = 1.0
    for _ in range(_MAX_DOUBLINGS):
        if excess(hi) >= 0:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise NumericalError(f"could not bracket the implicit cutoff equation for n={n}", detail={"n": n, "upper": hi})

    try:
        root = optimize.brentq(excess, lo, hi, xtol=ROOT_XTOL, maxiter=500)
    except (RuntimeError, ValueError) as e:
        raise NumericalError(f"implicit cutoff equation did not converge for n={n}: {e}", detail={"n": n})
    logger.debug(f"implicit cutoff for n={n}: m={root:.10g} bracketed by [{lo:.10g}, {hi:.10g}]")
    return root


def oracle_m_theoretical(spec: SmoothnessSpec, nm: NoiseModel, n: int) -> TheoreticalOracle:
    """
    Rate-optimal cutoff m_breve and the rate it achieves.

    Args:
        spec: Smoothness class of g
        nm: Noise model (its gamma, mu, delta select the case)
        n: Sample size (>= 3)

    Returns:
        TheoreticalOracle: case label, pi m_breve, m_breve, rate value and its structure

    Raises:
        DomainError: If n < 3
        NumericalError: If the implicit equation cannot be bracketed
    """
    if n < 3:
        raise DomainError(f"n must be >= 3, got {n}")
    sp = nm.smoothness
    s, r, b = spec.s, spec.r, spec.b
    ln_n = math.log(n)

    if r == 0 and sp.delta == 0:
        denom = 2.0 * s + 2.0 * sp.gamma + 1.0
        pi_m = n ** (1.0 / denom)
        exponent = -2.0 * s / denom
        return TheoreticalOracle(ORDINARY_SOBOLEV, pi_m, pi_m / math.pi, n ** exponent, n, rate_exponent=exponent)

    if r == 0:
        # (2 mu + 1) as tabulated, although the variance term alone suggests 2 mu
        pi_m = (ln_n / (2.0 * sp.mu + 1.0)) ** (1.0 / sp.delta)
        log_exponent = -2.0 * s / sp.delta
        return TheoreticalOracle(
            SUPER_SMOOTH_SOBOLEV, pi_m, pi_m / math.pi, ln_n ** log_exponent, n, log_exponent=log_exponent
        )

    if sp.delta == 0:
        pi_m = (ln_n / (2.0 * b)) ** (1.0 / r)
        log_exponent = (2.0 * sp.gamma + 1.0) / r
        return TheoreticalOracle(
            ORDINARY_ANALYTIC, pi_m, pi_m / math.pi, ln_n ** log_exponent / n, n,
            rate_exponent=-1.0, log_exponent=log_exponent
        )

    m = _solve_implicit(spec, nm, n)
    rate = bias_bound(spec, m) + gamma_fn(nm, m) / n
    return TheoreticalOracle(
        SUPER_SMOOTH_ANALYTIC, math.pi * m, m, rate, n, residual=residual(spec, nm, n, m)
    )
