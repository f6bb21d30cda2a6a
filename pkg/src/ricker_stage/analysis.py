"""Fixed points, eigenvalues and the named parameter inequalities.

All functions expect normalized parameters (``c = 1``); see :func:`core.normalize`.
Roots are found by bisection on sign-change brackets. ``h`` is unimodal for
``lam > 1``, so the brackets on either side of its maximum are always valid.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

from .core import ModelParams

__all__ = [
    "Classification",
    "Condition",
    "ConditionReport",
    "FirstOrderReport",
    "FixedPointReport",
    "IntervalCondition",
    "UnsupportedAnalysis",
    "allee_sensitivity",
    "bisect",
    "conditions",
    "eigenvalues_at",
    "first_order_points",
    "fixed_points",
    "h_eval",
    "rho",
]

XTOL = 1e-12
TANGENT_TOL = 1e-9
MAX_DOUBLINGS = 50


class UnsupportedAnalysis(ValueError):
    pass


class Classification(enum.Enum):
    NO_POSITIVE_FP = "NoPositiveFP"
    TANGENT_FP = "TangentFP"
    UNSTABLE = "Unstable"
    REPELLING_NODE = "RepellingNode"


def bisect(g: Callable[[float], float], lo: float, hi: float, xtol: float = XTOL) -> float:
    """Root of ``g`` in ``[lo, hi]`` given ``g(lo)`` and ``g(hi)`` of opposite sign.

    Stops at width ``xtol`` for roots of order one and above, and at relative width
    ``xtol`` below that, where ``h`` is steep and an absolute width would leave a
    visible residual.
    """
    glo, ghi = g(lo), g(hi)
    if glo == 0.0:
        return lo
    if ghi == 0.0:
        return hi
    if (glo > 0) == (ghi > 0):
        raise ValueError(f"no sign change on [{lo}, {hi}]")
    while hi - lo > xtol * min(1.0, 0.5 * (abs(lo) + abs(hi))):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        gm = g(mid)
        if gm == 0.0:
            return mid
        if (gm > 0) == (glo > 0):
            lo, glo = mid, gm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _expand(g: Callable[[float], float], start: float) -> float:
    """Double ``start`` until ``g`` turns negative."""
    hi = start
    for _ in range(MAX_DOUBLINGS):
        hi *= 2.0
        if g(hi) < 0:
            return hi
    raise ArithmeticError(f"bracket expansion failed after {MAX_DOUBLINGS} doublings from {start}")


def _require_normalized(params: ModelParams) -> None:
    if params.c != 1.0:
        raise ValueError("parameters must be normalized (c = 1); call normalize() first")


def _require_autonomous(params: ModelParams) -> None:
    if not params.is_autonomous:
        raise ValueError("fixed-point analysis needs autonomous parameters")


def h_eval(params: ModelParams, x: float) -> float:
    """``h(x) = x**(lam-1) exp(a - (b+1) x)``; nonzero fixed points solve ``h(x) = 1 - s``."""
    _require_normalized(params)
    if x <= 0:
        raise ValueError(f"x must be positive, got {x}")
    return math.exp((params.lam - 1.0) * math.log(x) + params.a - (params.b + 1.0) * x)


def rho(params: ModelParams) -> float:
    """Side of the square of initial values that always go extinct (needs ``lam > 1``)."""
    _require_normalized(params)
    if params.lam <= 1:
        raise UnsupportedAnalysis("rho is defined only for lam > 1")
    return math.exp(-(params.a_sup - math.log(1.0 - params.s_sup)) / (params.lam - 1.0))


def _log_h_gap(lam: float, a: float, b: float, s: float) -> Callable[[float], float]:
    log_target = math.log(1.0 - s)

    def g(x: float) -> float:
        if x <= 0:
            return -math.inf
        return (lam - 1.0) * math.log(x) + a - (b + 1.0) * x - log_target

    return g


def _two_roots(lam: float, a: float, b: float, s: float) -> tuple[float, float]:
    g = _log_h_gap(lam, a, b, s)
    x_max = (lam - 1.0) / (b + 1.0)
    lower = bisect(g, 0.0, x_max)
    upper = bisect(g, x_max, _expand(g, x_max))
    return lower, upper


def eigenvalues_at(params: ModelParams, x: float) -> tuple[float, float]:
    """Roots of ``u^2 - F_x u - F_y`` at the equilibrium ``(x, x)``, larger first.

    ``F(x, y) = s x + y**lam exp(a - b x - y)``. Complex pairs are reported by
    their real part; this cannot happen at the Allee point.
    """
    lam, a, b, s = params.lam, params.a, params.b, params.s_seq[0]
    e = math.exp(a - b * x - x)
    fx = s - b * x**lam * e
    fy = (lam - x) * x ** (lam - 1.0) * e
    disc = fx * fx + 4.0 * fy
    root = math.sqrt(max(disc, 0.0))
    return (fx + root) / 2.0, (fx - root) / 2.0


@dataclass(frozen=True)
class FixedPointReport:
    x_max: float
    count: int
    x_star: float | None
    x_bar: float | None
    eig_plus: float | None
    eig_minus: float | None
    classification: Classification
    fxp_margin: float
    discriminant: float | None = None
    eig_bar: tuple[float, float] | None = None


def _allee_eigenvalues(lam: float, b: float, s: float, x: float) -> tuple[float, float, float]:
    t = s - (1.0 - s) * b * x
    disc = t * t + 4.0 * (1.0 - s) * (lam - x)
    root = math.sqrt(disc)
    return (t + root) / 2.0, (t - root) / 2.0, disc


def fixed_points(params: ModelParams) -> FixedPointReport:
    """Positive equilibria of the autonomous recursion and the stability of ``x*``."""
    _require_normalized(params)
    _require_autonomous(params)
    lam, a, b, s = params.lam, params.a, params.b, params.s_seq[0]
    if lam <= 1:
        raise UnsupportedAnalysis(f"fixed-point analysis needs lam > 1, got {lam}")
    x_max = (lam - 1.0) / (b + 1.0)
    margin = a - (math.log(1.0 - s) + (lam - 1.0) * (1.0 + math.log(b + 1.0) - math.log(lam - 1.0)))
    if abs(margin) < TANGENT_TOL:
        ep, em, disc = _allee_eigenvalues(lam, b, s, x_max)
        return FixedPointReport(x_max, 1, x_max, None, ep, em, Classification.TANGENT_FP, margin, disc)
    if margin < 0:
        return FixedPointReport(x_max, 0, None, None, None, None, Classification.NO_POSITIVE_FP, margin)
    x_star, x_bar = _two_roots(lam, a, b, s)
    ep, em, disc = _allee_eigenvalues(lam, b, s, x_star)
    if s == 0.0 or (b > 0 and x_star * b * (1.0 - s) > s):
        cls = Classification.REPELLING_NODE
    else:
        cls = Classification.UNSTABLE
    return FixedPointReport(
        x_max, 2, x_star, x_bar, ep, em, cls, margin, disc, eig_bar=eigenvalues_at(params, x_bar)
    )


@dataclass(frozen=True)
class FirstOrderReport:
    lam: float
    a: float
    u_star: float | None
    u_bar: float | None
    u_lower_star: float | None
    f_at_lambda: float

    def f(self, u: float) -> float:
        return 0.0 if u == 0 else math.exp(self.lam * math.log(u) + self.a - u)


def first_order_points(lam: float, a: float) -> FirstOrderReport:
    """Fixed points of ``f(u) = u**lam exp(a - u)`` and the preimage ``u_* > lam`` of ``u*``."""
    if lam <= 1:
        raise UnsupportedAnalysis(f"first-order analysis needs lam > 1, got {lam}")
    log_f_lam = lam * math.log(lam) + a - lam
    f_lam = math.exp(log_f_lam) if log_f_lam < 709.0 else math.inf
    margin = a - (lam - 1.0) * (1.0 - math.log(lam - 1.0))
    if margin <= -TANGENT_TOL:
        return FirstOrderReport(lam, a, None, None, None, f_lam)
    if abs(margin) < TANGENT_TOL:
        u_star = u_bar = lam - 1.0
    else:
        u_star, u_bar = _two_roots(lam, a, 0.0, 0.0)
    # u* underflows to 0 for very large a; then (lam-1) ln u* = u* - a reduces to -a
    log_us = math.log(u_star) if u_star > 0 else -a / (lam - 1.0)

    def g(u: float) -> float:
        return lam * math.log(u) + a - u - log_us

    u_low = bisect(g, lam, _expand(g, lam))
    return FirstOrderReport(lam, a, u_star, u_bar, u_low, f_lam)


@dataclass(frozen=True)
class Condition:
    """``lhs <relation> rhs`` with ``margin = lhs - rhs``."""

    name: str
    relation: str
    lhs: float
    rhs: float
    holds: bool

    @property
    def margin(self) -> float:
        return self.lhs - self.rhs


@dataclass(frozen=True)
class IntervalCondition:
    """``lower <op> value <op> upper``; margins are ``value - lower`` and ``upper - value``."""

    name: str
    lower: float
    value: float
    upper: float
    closed: bool
    holds: bool

    @property
    def nonempty(self) -> bool:
        return self.lower <= self.upper if self.closed else self.lower < self.upper

    @property
    def margin_lower(self) -> float:
        return self.value - self.lower

    @property
    def margin_upper(self) -> float:
        return self.upper - self.value


_OPS = {
    "<": lambda l, r: l < r,
    "<=": lambda l, r: l <= r,
    ">": lambda l, r: l > r,
    ">=": lambda l, r: l >= r,
}


def _cond(name: str, lhs: float, relation: str, rhs: float) -> Condition:
    return Condition(name, relation, lhs, rhs, _OPS[relation](lhs, rhs))


@dataclass(frozen=True)
class ConditionReport:
    lam: float
    a: float
    b: float
    s: float
    autonomous: bool
    rho: float
    cond_b: Condition
    cond_fxp: Condition
    fxp_status: str
    cond_ac0: Condition
    cond_fup: Condition
    cond_nac0: Condition
    cond_ubar: Condition
    cond_lam4: Condition
    cond_fxp0: IntervalCondition
    cond_fxp1: IntervalCondition
    lam1_lhs: float
    lam1_rhs: float

    def all_conditions(self) -> list[Condition | IntervalCondition]:
        return [
            self.cond_b, self.cond_fxp, self.cond_ac0, self.cond_fup, self.cond_nac0,
            self.cond_ubar, self.cond_fxp0, self.cond_fxp1, self.cond_lam4,
        ]


def conditions(params: ModelParams) -> ConditionReport:
    """Evaluate every named inequality. ``a`` and ``s`` are the sups over one period."""
    _require_normalized(params)
    lam, b = params.lam, params.b
    if lam <= 1:
        raise UnsupportedAnalysis(f"condition analysis needs lam > 1, got {lam}")
    a, s = params.a_sup, params.s_sup
    l1 = lam - 1.0
    base = l1 * (1.0 - math.log(l1))
    top = lam - l1 * math.log(lam)
    fxp_rhs = math.log(1.0 - s) + l1 * (1.0 + math.log(b + 1.0) - math.log(l1))
    fxp = _cond("fxp", a, ">=", fxp_rhs)
    if abs(fxp.margin) < TANGENT_TOL:
        status = "equality"
    else:
        status = "strict" if fxp.margin > 0 else "fails"
    hi0 = base + l1 * math.log(b + 1.0)
    return ConditionReport(
        lam=lam, a=a, b=b, s=s,
        autonomous=params.is_autonomous,
        rho=rho(params),
        cond_b=_cond("b", a, "<", math.log(1.0 - s) + base),
        cond_fxp=fxp,
        fxp_status=status,
        cond_ac0=_cond("ac0", a, "<", base),
        cond_fup=_cond("fup", a, ">", base),
        cond_nac0=_cond("nac0", a, ">=", base),
        cond_ubar=_cond("ubar", a, "<=", top),
        cond_lam4=_cond("lam4", b, "<=", (l1 / lam) * math.exp(1.0 / l1) - 1.0),
        cond_fxp0=IntervalCondition("fxp0", base, a, hi0, False, base < a < hi0),
        cond_fxp1=IntervalCondition("fxp1", hi0, a, top, True, hi0 <= a <= top),
        lam1_lhs=base,
        lam1_rhs=top,
    )


def allee_sensitivity(params: ModelParams) -> float:
    """``dx*/db = x*^2 / (lam - 1 - (b+1) x*)``; positive whenever two fixed points exist."""
    rep = fixed_points(params)
    if rep.count != 2:
        raise ValueError(f"allee_sensitivity needs two positive fixed points, found {rep.count}")
    x = rep.x_star
    return x * x / (params.lam - 1.0 - (params.b + 1.0) * x)
