"""Parameters, single-step maps and orbit simulation.

The adult/juvenile system

    x[n+1] = s[n] x[n] + s'[n] y[n]
    y[n+1] = x[n]**lam * exp(r[n] - b x[n+1] - c x[n])

folds into the scalar second-order recursion

    x[n+1] = s[n] x[n] + x[n-1]**lam * exp(a[n] - b x[n] - c x[n-1]),
    a[n] = r[n-1] + ln s'[n],

which is what :func:`step_scalar` and :func:`simulate` iterate.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

__all__ = [
    "EXP_CAP",
    "Certificate",
    "Limits",
    "ModelParams",
    "OrbitRecord",
    "Verdict",
    "fold_initials",
    "iterate",
    "normalize",
    "simulate",
    "simulate_planar",
    "step_planar",
    "step_scalar",
    "unfold_juveniles",
]

#: Exponent arguments above this are clamped; exp(EXP_CAP) is the saturation sentinel.
EXP_CAP = 700.0

#: Consecutive sub-threshold steps required by the heuristic decay tag.
DECAY_LEVEL = 1e-12
DECAY_RUN = 10


class Verdict(enum.IntEnum):
    EXTINCT = 0
    SURVIVE = 1
    UNDECIDED = 2

    @property
    def label(self) -> str:
        return {0: "ExtinctCertified", 1: "SurviveCertified", 2: "Undecided"}[self.value]


class Certificate(enum.IntEnum):
    NONE = 0
    RHO_RECTANGLE = 1
    USTAR_MONOTONE = 2
    CROSS_REGION = 3
    SPLIT_SURVIVAL = 4
    NUMERIC_DECAY = 5

    @property
    def label(self) -> str:
        return _CERT_LABELS[self]


_CERT_LABELS = {
    Certificate.NONE: "None",
    Certificate.RHO_RECTANGLE: "RhoRectangle",
    Certificate.USTAR_MONOTONE: "UStarMonotone",
    Certificate.CROSS_REGION: "CrossRegion",
    Certificate.SPLIT_SURVIVAL: "SplitSurvival",
    Certificate.NUMERIC_DECAY: "NumericDecay",
}


def _as_tuple(name: str, value) -> tuple[float, ...]:
    if isinstance(value, (int, float)):
        value = (value,)
    out = tuple(float(v) for v in value)
    if not out:
        raise ValueError(f"{name}: sequence must contain at least one value")
    for v in out:
        if not math.isfinite(v):
            raise ValueError(f"{name}: entries must be finite, got {v!r}")
    return out


@dataclass(frozen=True)
class ModelParams:
    """Full parameter set. Periodic sequences are cycled with period ``len(seq)``.

    ``a_seq[n]`` is the exponent of the folded scalar equation,
    ``a[n] = r[n-1] + ln s'[n]``; use :meth:`from_r` to start from ``r``.
    """

    lam: float
    b: float = 0.0
    c: float = 1.0
    s_seq: tuple[float, ...] = (0.0,)
    sp_seq: tuple[float, ...] = (1.0,)
    a_seq: tuple[float, ...] = (0.0,)

    def __post_init__(self):
        for name in ("lam", "b", "c"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ValueError(f"{name}: must be a finite real, got {v!r}")
            object.__setattr__(self, name, float(v))
        if self.lam <= 0:
            raise ValueError(f"lam: must be > 0, got {self.lam}")
        if self.b < 0:
            raise ValueError(f"b: must be >= 0, got {self.b}")
        if self.c <= 0:
            raise ValueError(f"c: must be > 0, got {self.c}")
        s_seq = _as_tuple("s_seq", self.s_seq)
        sp_seq = _as_tuple("sp_seq", self.sp_seq)
        a_seq = _as_tuple("a_seq", self.a_seq)
        for i, v in enumerate(s_seq):
            if not 0.0 <= v < 1.0:
                raise ValueError(f"s_seq[{i}]: must lie in [0, 1), got {v}")
        for i, v in enumerate(sp_seq):
            if not 0.0 < v <= 1.0:
                raise ValueError(f"sp_seq[{i}]: must lie in (0, 1], got {v}")
        object.__setattr__(self, "s_seq", s_seq)
        object.__setattr__(self, "sp_seq", sp_seq)
        object.__setattr__(self, "a_seq", a_seq)

    @classmethod
    def autonomous(cls, lam, a, b=0.0, s=0.0, sp=1.0, c=1.0) -> "ModelParams":
        return cls(lam=lam, b=b, c=c, s_seq=(s,), sp_seq=(sp,), a_seq=(a,))

    @classmethod
    def from_r(cls, lam, r_seq, b=0.0, c=1.0, s_seq=(0.0,), sp_seq=(1.0,)) -> "ModelParams":
        """Build from the juvenile exponents ``r[n]``; ``a[n] = r[n-1] + ln s'[n]``."""
        r = _as_tuple("r_seq", r_seq)
        sp = _as_tuple("sp_seq", sp_seq)
        if any(not 0.0 < v <= 1.0 for v in sp):
            raise ValueError("sp_seq: entries must lie in (0, 1]")
        period = math.lcm(len(r), len(sp))
        a = tuple(r[(n - 1) % len(r)] + math.log(sp[n % len(sp)]) for n in range(period))
        return cls(lam=lam, b=b, c=c, s_seq=s_seq, sp_seq=sp, a_seq=a)

    def s_at(self, n: int) -> float:
        return self.s_seq[n % len(self.s_seq)]

    def sp_at(self, n: int) -> float:
        return self.sp_seq[n % len(self.sp_seq)]

    def a_at(self, n: int) -> float:
        return self.a_seq[n % len(self.a_seq)]

    def r_at(self, n: int) -> float:
        return self.a_at(n + 1) - math.log(self.sp_at(n + 1))

    @property
    def s_sup(self) -> float:
        return max(self.s_seq)

    @property
    def a_sup(self) -> float:
        return max(self.a_seq)

    @property
    def sp_inf(self) -> float:
        return min(self.sp_seq)

    @property
    def is_autonomous(self) -> bool:
        return all(len(set(q)) == 1 for q in (self.s_seq, self.sp_seq, self.a_seq))

    @property
    def is_semelparous(self) -> bool:
        return all(v == 0.0 for v in self.s_seq)

    @property
    def a(self) -> float:
        """The constant exponent of an autonomous system."""
        if len(set(self.a_seq)) != 1:
            raise ValueError("a: parameters are not autonomous")
        return self.a_seq[0]


def normalize(params: ModelParams) -> ModelParams:
    """Return the conjugate system with ``c = 1`` under ``x -> c x``.

    Substituting ``X = c x`` gives ``b -> b/c`` and ``a -> a - (lam - 1) ln c``.
    """
    if params.c == 1.0:
        return params
    shift = (params.lam - 1.0) * math.log(params.c)
    return replace(
        params,
        c=1.0,
        b=params.b / params.c,
        a_seq=tuple(a - shift for a in params.a_seq),
    )


def _check_state(*values: float) -> None:
    for v in values:
        if not isinstance(v, (int, float)) or math.isnan(v) or v < 0:
            raise ValueError(f"state values must be non-negative reals, got {v!r}")


def _growth(x: float, lam: float, expo: float) -> tuple[float, bool]:
    """``x**lam * exp(expo)`` with ``0**lam = 0``; returns ``(value, clamped)``."""
    if x == 0.0:
        return 0.0, False
    arg = lam * math.log(x) + expo
    if arg > EXP_CAP:
        return math.exp(EXP_CAP), True
    return math.exp(arg), False


def step_scalar(params: ModelParams, n: int, x_prev: float, x_curr: float) -> float:
    """One step of the folded recursion, returning ``x[n+1]``.

    With ``c = 1`` this is ``s[n] x[n] + x[n-1]**lam exp(a[n] - b x[n] - x[n-1])``.
    An overflowing exponential saturates at ``exp(EXP_CAP)``.
    """
    _check_state(x_prev, x_curr)
    g, _ = _growth(x_prev, params.lam, params.a_at(n) - params.b * x_curr - params.c * x_prev)
    return params.s_at(n) * x_curr + g


def step_planar(params: ModelParams, n: int, x: float, y: float) -> tuple[float, float]:
    """One step of the adult/juvenile system, ``(x[n], y[n]) -> (x[n+1], y[n+1])``."""
    _check_state(x, y)
    x_next = params.s_at(n) * x + params.sp_at(n) * y
    y_next, _ = _growth(x, params.lam, params.r_at(n) - params.b * x_next - params.c * x)
    return x_next, y_next


def fold_initials(params: ModelParams, x0: float, y0: float) -> tuple[float, float]:
    _check_state(x0, y0)
    return x0, params.s_at(0) * x0 + params.sp_at(0) * y0


def unfold_juveniles(params: ModelParams, x_series: Sequence[float]) -> list[float]:
    """Recover ``y[n] = (x[n+1] - s[n] x[n]) / s'[n]`` for ``n < len(x_series) - 1``.

    Raises ValueError when a recovered value is negative, i.e. ``x_series`` is not
    an orbit of ``params``. Rounding noise below 1e-12 relative is clipped to zero.
    """
    ys = []
    for n in range(len(x_series) - 1):
        diff = x_series[n + 1] - params.s_at(n) * x_series[n]
        if diff < 0:
            if diff < -1e-12 * max(1.0, x_series[n + 1]):
                raise ValueError(f"negative juvenile density at n={n}: not an orbit of these parameters")
            diff = 0.0
        ys.append(diff / params.sp_at(n))
    return ys


@dataclass(frozen=True)
class Limits:
    max_steps: int = 5000
    overflow_cap: float = EXP_CAP
    heuristic: bool = False

    def __post_init__(self):
        if self.max_steps < 1:
            raise ValueError(f"max_steps: must be >= 1, got {self.max_steps}")
        if not 0 < self.overflow_cap <= EXP_CAP:
            raise ValueError(f"overflow_cap: must lie in (0, {EXP_CAP}]")


@dataclass(frozen=True)
class OrbitRecord:
    params: ModelParams
    x_series: tuple[float, ...]
    verdict: Verdict
    certificate: Certificate = Certificate.NONE
    cert_step: int | None = None
    y_series: tuple[float, ...] | None = None
    overflow: bool = False
    nonfinite: bool = False

    def with_juveniles(self) -> "OrbitRecord":
        return replace(self, y_series=tuple(unfold_juveniles(self.params, self.x_series)))


@dataclass(frozen=True)
class _Certifier:
    """Theorem-backed tests on consecutive pairs, in normalized (c = 1) coordinates."""

    rho: float | None = None
    u_star: float | None = None
    u_bar: float | None = None
    x_star: float | None = None
    lam: float = 0.0
    a: float = 0.0
    b: float = 0.0
    notes: tuple[str, ...] = field(default=())

    def extinct(self, p: float, q: float) -> Certificate:
        if self.rho is not None and p < self.rho and q < self.rho:
            return Certificate.RHO_RECTANGLE
        if self.u_star is not None and p < self.u_star and q < self.u_star:
            return Certificate.USTAR_MONOTONE
        return Certificate.NONE

    def survive(self, p: float, q: float) -> Certificate:
        xs = self.x_star
        if xs is not None:
            lam = self.lam
            if (xs <= p <= lam and q <= xs) or (p <= xs and xs <= q <= lam):
                return Certificate.CROSS_REGION
        if self.u_bar is not None:
            if self._split(p, q) or self._split(q, p):
                return Certificate.SPLIT_SURVIVAL
        return Certificate.NONE

    def _split(self, big: float, small: float) -> bool:
        # big parity stays in (u*, u_bar) while the small parity decays geometrically
        if not self.u_star < big < self.u_bar:
            return False
        if small == 0.0:
            return True
        delta = math.exp((self.lam - 1.0) * math.log(small) + self.a)
        if delta >= 1.0:
            return False
        f_big = math.exp(self.lam * math.log(big) + self.a - big)
        return f_big * math.exp(-self.b * small / (1.0 - delta)) > self.u_star


def _certifier(params: ModelParams) -> _Certifier:
    # deferred import: analysis depends on core
    from . import analysis

    p = normalize(params)
    lam = p.lam
    if lam <= 1.0:
        return _Certifier()
    kw: dict = {"lam": lam, "b": p.b}
    kw["rho"] = analysis.rho(p)
    if p.is_semelparous:
        a_sup = p.a_sup
        fo = analysis.first_order_points(lam, a_sup)
        if fo.u_star is not None:
            kw["u_star"] = fo.u_star
            kw["a"] = a_sup
        if p.is_autonomous:
            cond = analysis.conditions(p)
            if fo.u_star is not None and cond.cond_fup.holds and cond.cond_ubar.holds:
                kw["u_bar"] = fo.u_bar
            if cond.cond_lam4.holds and cond.cond_fxp1.holds:
                fp = analysis.fixed_points(p)
                if fp.x_star is not None:
                    kw["x_star"] = fp.x_star
    return _Certifier(**kw)


def simulate(params: ModelParams, x0: float, x1: float, limits: Limits | None = None) -> OrbitRecord:
    """Iterate the scalar recursion from ``(x0, x1)`` until a certificate fires.

    After each step the latest pair ``(x[n], x[n+1])`` is tested, extinction
    certificates first. Without a certificate the verdict is Undecided after
    ``limits.max_steps`` steps. Any overflow clamp or non-finite value stops the
    run as Undecided.
    """
    limits = limits or Limits()
    _check_state(x0, x1)
    cert = _certifier(params)
    lam, b, c = params.lam, params.b, params.c
    cap = limits.overflow_cap
    s_seq, a_seq = params.s_seq, params.a_seq
    ns, na = len(s_seq), len(a_seq)
    xs = [float(x0), float(x1)]
    has_certs = cert.rho is not None

    def done(verdict, tag, step, **kw):
        return OrbitRecord(params, tuple(xs), verdict, tag, step, **kw)

    run = 0
    for n in range(0, limits.max_steps + 1):
        p, q = xs[n], xs[n + 1]
        if has_certs:
            tag = cert.extinct(c * p, c * q)
            if tag:
                return done(Verdict.EXTINCT, tag, n)
            tag = cert.survive(c * p, c * q)
            if tag:
                return done(Verdict.SURVIVE, tag, n)
        if limits.heuristic:
            run = run + 1 if q < DECAY_LEVEL else 0
            if run >= DECAY_RUN:
                return done(Verdict.EXTINCT, Certificate.NUMERIC_DECAY, n)
        if n == limits.max_steps:
            break
        # x[n+2] from (x[n], x[n+1]) uses the coefficients at index n+1
        k = n + 1
        if p == 0.0:
            g = 0.0
        else:
            arg = lam * math.log(p) + (a_seq[k % na] - b * q - c * p)
            if arg > cap:
                xs.append(s_seq[k % ns] * q + math.exp(cap))
                return done(Verdict.UNDECIDED, Certificate.NONE, None, overflow=True)
            g = math.exp(arg)
        x_new = s_seq[k % ns] * q + g
        xs.append(x_new)
        if not math.isfinite(x_new):
            return done(Verdict.UNDECIDED, Certificate.NONE, None, nonfinite=True)
    return done(Verdict.UNDECIDED, Certificate.NONE, None)


def iterate(params: ModelParams, x0: float, x1: float, steps: int) -> list[float]:
    """Plain orbit ``x[0..steps+1]`` of the scalar recursion, no certificates."""
    xs = [float(x0), float(x1)]
    for n in range(1, steps + 1):
        xs.append(step_scalar(params, n, xs[n - 1], xs[n]))
    return xs


def simulate_planar(params: ModelParams, x0: float, y0: float, steps: int) -> OrbitRecord:
    """Iterate the adult/juvenile map directly for ``steps`` steps (no certificates)."""
    _check_state(x0, y0)
    xs, ys = [float(x0)], [float(y0)]
    for n in range(steps):
        x, y = step_planar(params, n, xs[-1], ys[-1])
        xs.append(x)
        ys.append(y)
    return OrbitRecord(params, tuple(xs), Verdict.UNDECIDED, y_series=tuple(ys))
