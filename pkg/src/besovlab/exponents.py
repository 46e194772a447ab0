"""Exact rational arithmetic for the regularity bootstrap exponents.

Every quantity here is a fractions.Fraction; no floating point enters any
computation. Floats are rejected at the boundary so that a silently
inexact alpha can never leak into an exactness claim.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

HALF = Fraction(1, 2)
ONE = Fraction(1)
ALPHA_HALF_DEFAULT_DROP = Fraction(1, 64)  # documented default at alpha = 1/2


class DomainError(ValueError):
    """Argument outside the admissible range of a formula."""


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"exact rational required, got {type(x).__name__} (pass Fraction, int, or 'num/den')")


def gain_factor(alpha) -> Fraction:
    """Integrability gain m = (1 - a)/(1 - 2a), > 1 on 0 < a < 1/2."""
    a = as_fraction(alpha)
    if not 0 < a < HALF:
        raise DomainError(f"gain factor needs 0 < alpha < 1/2, got {a}")
    m = (1 - a) / (1 - 2 * a)
    assert m > 1
    return m


@dataclass(frozen=True)
class QRange:
    """Open interval (p, m*p) of admissible target integrabilities."""

    alpha: Fraction
    p: Fraction
    lo: Fraction
    hi: Fraction

    def contains(self, q) -> bool:
        q = as_fraction(q)
        return self.lo < q < self.hi


def q_range(alpha, p) -> QRange:
    a = as_fraction(alpha)
    p = as_fraction(p)
    if p < 2:
        raise DomainError(f"need p >= 2, got {p}")
    m = gain_factor(a)
    return QRange(alpha=a, p=p, lo=p, hi=m * p)


def sign_chain(alpha, p, q) -> dict:
    """The sign conditions that admissible (p, q) must satisfy.

    Returns the four exponent values
      e1 = -a (1 - p/q)            (< 0)
      e2 = 1 - a (1 - p/q)         (> 0)
      e3 = 1 - a - p/q - a (1 - p/q)   (-a < e3 < 0)
      e4 = 3 - a - p/q - a (1 - p/q)   (> 0)
    together with a boolean 'ok'.
    """
    a = as_fraction(alpha)
    p = as_fraction(p)
    q = as_fraction(q)
    r = p / q
    e1 = -a * (1 - r)
    e2 = 1 - a * (1 - r)
    e3 = 1 - a - r - a * (1 - r)
    e4 = 3 - a - r - a * (1 - r)
    ok = (e1 < 0) and (e2 > 0) and (-a < e3 < 0) and (e4 > 0)
    return {"e1": e1, "e2": e2, "e3": e3, "e4": e4, "ok": ok}


def epsilon_alpha(alpha) -> Fraction:
    """Half the minimum of the two admissible epsilon bounds; positive on (0, 1/2)."""
    a = as_fraction(alpha)
    if not 0 < a < HALF:
        raise DomainError(f"epsilon formula needs 0 < alpha < 1/2, got {a}")
    first = a * a / (2 - 3 * a)
    second = (1 - 2 * a) * (2 - 3 * a - a * a) / ((1 - a) * (2 - 3 * a))
    eps = HALF * min(first, second)
    assert eps > 0
    return eps


def epsilon_conditions(alpha) -> dict:
    """The four bounds an admissible epsilon must satisfy, evaluated at eps_a.

    Two upper bounds are binding (strict by a factor-2 margin); the two
    lower bounds are negative, hence slack for any positive epsilon.
    """
    a = as_fraction(alpha)
    eps = epsilon_alpha(a)
    upper1 = a * a / (2 - 3 * a)
    lower2 = -(2 - 3 * a - a * a) / (2 - 3 * a)
    upper3 = (1 - 2 * a) * (2 - 3 * a - a * a) / ((1 - a) * (2 - 3 * a))
    lower4 = -(2 - 3 * a + a * a - 2 * a**3) / ((1 - a) * (2 - 3 * a))
    positivity = (2 - 3 * a - a * a > 0) and (2 - 3 * a + a * a - 2 * a**3 > 0)
    return {
        "eps": eps,
        "upper1": upper1,
        "lower2": lower2,
        "upper3": upper3,
        "lower4": lower4,
        "strict": eps < upper1 and eps < upper3,
        "slack": eps > lower2 and eps > lower4,
        "auxiliary_positive": positivity,
    }


def p_star(alpha, d: int) -> Fraction:
    """Target integrability p = 2d / (eps_a (1 + m)); always >= 4d."""
    a = as_fraction(alpha)
    if d not in (2, 3):
        raise DomainError(f"dimension must be 2 or 3, got {d}")
    value = 2 * d / (epsilon_alpha(a) * (1 + gain_factor(a)))
    assert value >= 4 * d
    return value


@dataclass(frozen=True)
class BootstrapPlan:
    """Exact record of one bootstrap: exponents, target, and iteration schedule."""

    alpha: Fraction
    d: int
    branch: str  # "low-alpha" | "high-alpha"
    m: Fraction | None = None
    eps: Fraction | None = None
    p_star: Fraction | None = None
    schedule: tuple = ()  # ((p_k, q_k), ...)
    iterations: int = 0
    final_p: Fraction | None = None
    # high-alpha branch extras
    p_even: int | None = None
    alpha_p: Fraction | None = None
    eps_p: Fraction | None = None
    target_index: Fraction | None = None
    alpha_sum_ok: bool | None = None

    def __post_init__(self):
        for p_k, q_k in self.schedule:
            if not (p_k < q_k < self.m * p_k):
                raise DomainError(f"step ({p_k}, {q_k}) leaves the open interval (p, m p)")


def bootstrap_schedule(alpha, d: int) -> BootstrapPlan:
    """Iterate q = p (1 + m)/2 from p = 2 until p >= p_star(alpha, d).

    The iteration count is confirmed exactly against the geometric growth:
    r^count >= p_star/2 > r^(count-1) with r = (1 + m)/2.
    """
    a = as_fraction(alpha)
    m = gain_factor(a)
    eps = epsilon_alpha(a)
    target = p_star(a, d)
    ratio = (1 + m) / 2
    schedule = []
    p = Fraction(2)
    while p < target:
        q = p * ratio
        schedule.append((p, q))
        p = q
    count = len(schedule)
    assert ratio**count >= target / 2
    assert count == 0 or ratio ** (count - 1) < target / 2
    return BootstrapPlan(
        alpha=a, d=d, branch="low-alpha", m=m, eps=eps, p_star=target,
        schedule=tuple(schedule), iterations=count, final_p=p,
    )


def high_alpha_plan(alpha, d: int) -> BootstrapPlan:
    """Even integrability target for 1/2 < alpha < 1.

    Picks the smallest even integer p strictly above (4 + d)/(2 alpha - 1),
    and records alpha_p = (1 - 2/p) alpha, eps_p = (4 alpha + d)/p, the
    target index 2 alpha - eps_p (> 1 by the choice of p), and the tail
    convergence condition alpha + alpha_p > 1.
    """
    a = as_fraction(alpha)
    if not HALF < a < 1:
        raise DomainError(
            f"high branch needs 1/2 < alpha < 1, got {a}"
            + (" (reduce alpha = 1/2 through effective_alpha first)" if a == HALF else "")
        )
    if d not in (2, 3):
        raise DomainError(f"dimension must be 2 or 3, got {d}")
    threshold = Fraction(4 + d) / (2 * a - 1)
    p = 2 * (threshold.numerator // (2 * threshold.denominator)) + 2
    assert p > threshold and p % 2 == 0
    alpha_p = (1 - Fraction(2, p)) * a
    eps_p = (4 * a + d) / p
    target_index = 2 * a - eps_p
    assert target_index > 1
    return BootstrapPlan(
        alpha=a, d=d, branch="high-alpha",
        p_even=p, alpha_p=alpha_p, eps_p=eps_p,
        target_index=target_index, alpha_sum_ok=bool(a + alpha_p > 1),
    )


def effective_alpha(alpha) -> tuple:
    """Branch dispatch: alpha = 1/2 drops to 31/64, other values pass through."""
    a = as_fraction(alpha)
    if not 0 < a < 1:
        raise DomainError(f"alpha must lie in (0, 1), got {a}")
    if a < HALF:
        return a, "low-alpha"
    if a == HALF:
        return HALF - ALPHA_HALF_DEFAULT_DROP, "low-alpha"
    return a, "high-alpha"


@dataclass(frozen=True)
class MqgPlan:
    """Admissible q/p window for the modified SQG dissipation order beta."""

    alpha: Fraction
    beta: Fraction
    p: Fraction
    threshold: Fraction
    ratio_lo: Fraction | None
    ratio_hi: Fraction | None
    q_lo: Fraction | None
    q_hi: Fraction | None
    valid: bool
    guards: dict = field(default_factory=dict)
    known_range: bool = False  # alpha > (beta-1)/2: previously established case


def mqg_plan(alpha, beta, p=Fraction(2)) -> MqgPlan:
    a = as_fraction(alpha)
    b = as_fraction(beta)
    p = as_fraction(p)
    if not 1 < b < 2:
        raise DomainError(f"dissipation order must satisfy 1 < beta < 2, got {b}")
    if p < 2:
        raise DomainError(f"need p >= 2, got {p}")
    threshold = min((2 - b) / 2, (b - 1) / 2)
    guards = {
        "alpha_above_threshold": threshold < a,
        "alpha_below_one": a < 1,
        "lower_denominator_positive": b - 1 - a > 0,  # needs alpha < beta - 1
        "upper_denominator_positive": b / 2 - 2 * a > 0,  # needs alpha < beta/4
    }
    valid = all(guards.values())
    ratio_lo = ratio_hi = q_lo = q_hi = None
    if guards["lower_denominator_positive"] and guards["upper_denominator_positive"]:
        ratio_lo = (b / 2 - a) / (b - 1 - a)
        ratio_hi = (b / 2 - a) / (b / 2 - 2 * a)
        q_lo, q_hi = ratio_lo * p, ratio_hi * p
        valid = valid and ratio_lo < ratio_hi
    return MqgPlan(
        alpha=a, beta=b, p=p, threshold=threshold,
        ratio_lo=ratio_lo, ratio_hi=ratio_hi, q_lo=q_lo, q_hi=q_hi,
        valid=valid, guards=guards, known_range=bool(a > (b - 1) / 2),
    )


# ---------------------------------------------------------------------------
# JSON rendering: rationals as {"num", "den"} strings plus a decimal

def fraction_jsonable(x: Fraction) -> dict:
    return {"num": str(x.numerator), "den": str(x.denominator), "decimal": float(x)}


def _jsonable(value):
    if isinstance(value, Fraction):
        return fraction_jsonable(value)
    if isinstance(value, tuple):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    return value


def plan_jsonable(plan) -> dict:
    out = {}
    for name, value in vars(plan).items():
        if value is None:
            continue
        out[name] = _jsonable(value)
    return out
