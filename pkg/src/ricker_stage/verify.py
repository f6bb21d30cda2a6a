"""Randomized property suites, one per extinction/survival result.

Every suite draws its inputs up front from a seeded generator, so a result
(including its counterexamples) replays exactly from ``(seed, trials)``.
Suites raise :class:`HypothesesUnmet` instead of running outside the
hypotheses of the result they check.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import analysis
from .core import Limits, ModelParams, Verdict, iterate, normalize, simulate, step_scalar

__all__ = [
    "HypothesesUnmet",
    "SuiteResult",
    "explore_conjecture",
    "run_all",
    "suite_bounded",
    "suite_eoz",
    "suite_global_extinction",
    "suite_no_fp_survival",
    "suite_period2",
    "suite_proposition_rectangles",
    "suite_rho_extinction",
]

LONG_RUN = 10_000
SHORT_RUN = 20
ZERO = 1e-10
ZERO_RUN = 10


class HypothesesUnmet(ValueError):
    pass


@dataclass(frozen=True)
class SuiteResult:
    name: str
    trials: int
    failures: tuple
    seed: int | None = None

    @property
    def status(self) -> str:
        return "pass" if not self.failures else "fail"

    def summary(self) -> str:
        return f"{self.name}: {self.status} ({self.trials} trials, {len(self.failures)} failures, seed={self.seed})"


def _run(name: str, check: Callable, cases: Sequence, seed, workers: int = 1) -> SuiteResult:
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(check, cases, chunksize=max(1, len(cases) // (4 * workers))))
    else:
        outcomes = [check(c) for c in cases]
    failures = tuple(sorted((o for o in outcomes if o is not None), key=repr))
    return SuiteResult(name, len(cases), failures, seed)


def _converges(params: ModelParams, x0: float, x1: float, max_steps: int = LONG_RUN) -> bool:
    """Certificate fires, or ``x[n] < 1e-10`` for 10 consecutive steps."""
    rec = simulate(params, x0, x1, Limits(max_steps=max_steps))
    if rec.verdict == Verdict.EXTINCT:
        return True
    if rec.verdict == Verdict.SURVIVE:
        return False
    run = 0
    for v in iterate(params, x0, x1, max_steps):
        run = run + 1 if v < ZERO else 0
        if run >= ZERO_RUN:
            return True
    return False


def _periodic(rng, lo, hi, max_period=3) -> tuple[float, ...]:
    k = int(rng.integers(1, max_period + 1))
    return tuple(float(v) for v in rng.uniform(lo, hi, size=k))


# -- eventual boundedness -----------------------------------------------------

def bound_of(params: ModelParams) -> float:
    p = normalize(params)
    lam = p.lam
    return 1.0 + math.exp(lam * math.log(lam) + p.a_sup - lam) / (1.0 - p.s_sup)


def burn_in(params: ModelParams) -> int:
    """First index from which the eventual bound is asserted."""
    s = params.s_sup
    if s == 0.0:
        return 2
    return 1 + math.ceil(math.log(1e-6) / math.log(s))


def _check_bounded(case):
    params, x0, x1, tail = case
    start = burn_in(params)
    xs = iterate(params, x0, x1, start + tail)
    limit = bound_of(params) / params.c
    if any(v < 0 or not math.isfinite(v) for v in xs):
        return ("negative or non-finite", params, x0, x1)
    worst = max(xs[start:])
    if worst > limit:
        return ("bound exceeded", params, x0, x1, worst, limit)
    return None


def suite_bounded(params: ModelParams | None = None, trials: int = 200, seed: int = 0,
                  tail: int = 500, workers: int = 1) -> SuiteResult:
    """Orbits eventually stay below ``1 + lam**lam e^(A - lam) / (1 - s)``."""
    rng = np.random.default_rng(seed)
    cases = []
    for _ in range(trials):
        p = params
        if p is None:
            p = ModelParams(
                lam=float(rng.uniform(0.2, 5.0)),
                b=float(rng.uniform(0.0, 2.0)),
                s_seq=_periodic(rng, 0.0, 0.9),
                sp_seq=_periodic(rng, 0.05, 1.0),
                a_seq=_periodic(rng, -3.0, 3.0),
            )
        x0, x1 = rng.uniform(0.0, 20.0, size=2)
        cases.append((p, float(x0), float(x1), tail))
    return _run("bounded", _check_bounded, cases, seed, workers)


# -- extinction below rho -----------------------------------------------------

def _check_rho(case):
    params, x0, x1 = case
    rec = simulate(params, x0, x1, Limits(max_steps=1))
    if rec.verdict != Verdict.EXTINCT or rec.cert_step != 0:
        return ("no certificate below rho", params, x0, x1)
    xs = iterate(params, x0, x1, LONG_RUN)
    env = [max(xs[2 * k], xs[2 * k + 1]) for k in range(len(xs) // 2)]
    for k in range(1, len(env)):
        if env[k] > env[k - 1] * (1 + 1e-12):
            return ("envelope increased", params, x0, x1, k)
    if env[-1] >= ZERO:
        return ("no decay", params, x0, x1, env[-1])
    return None


def suite_rho_extinction(params: ModelParams | None = None, trials: int = 200, seed: int = 0,
                         workers: int = 1) -> SuiteResult:
    """Initial values below ``rho`` are certified and their pair envelope decays."""
    if params is not None and normalize(params).lam <= 1:
        raise HypothesesUnmet("rho extinction needs lam > 1")
    rng = np.random.default_rng(seed)
    cases = []
    for _ in range(trials):
        p = params
        if p is None:
            p = ModelParams(
                lam=float(rng.uniform(1.2, 5.0)),
                b=float(rng.uniform(0.0, 2.0)),
                s_seq=_periodic(rng, 0.0, 0.8),
                sp_seq=_periodic(rng, 0.1, 1.0),
                a_seq=_periodic(rng, -2.0, 2.0),
            )
        r = analysis.rho(normalize(p)) / p.c
        x0, x1 = rng.uniform(0.0, 1.0, size=2) * r
        cases.append((p, float(x0), float(x1)))
    return _run("rho_extinction", _check_rho, cases, seed, workers)


# -- global extinction ----------------------------------------------------------

def _check_global(case):
    params, x0, x1 = case
    if not _converges(params, x0, x1):
        return ("did not converge", params, x0, x1)
    return None


def suite_global_extinction(params: ModelParams | None = None, trials: int = 200, seed: int = 0,
                            workers: int = 1) -> SuiteResult:
    """When ``A < ln(1-s) + (lam-1)(1 - ln(lam-1))`` every orbit goes extinct."""
    if params is not None:
        p = normalize(params)
        if p.lam <= 1 or not analysis.conditions(p).cond_b.holds:
            raise HypothesesUnmet("global extinction needs lam > 1 and A below the extinction bound")
    rng = np.random.default_rng(seed)
    cases = []
    for _ in range(trials):
        p = params
        if p is None:
            lam = float(rng.uniform(1.2, 5.0))
            s_seq = _periodic(rng, 0.0, 0.8)
            top = math.log(1 - max(s_seq)) + (lam - 1) * (1 - math.log(lam - 1))
            a_seq = tuple(top - float(m) for m in rng.uniform(0.05, 2.0, size=int(rng.integers(1, 4))))
            p = ModelParams(lam=lam, b=float(rng.uniform(0.0, 2.0)), s_seq=s_seq,
                            sp_seq=_periodic(rng, 0.1, 1.0), a_seq=a_seq)
        x0, x1 = rng.uniform(0.0, 50.0, size=2)
        cases.append((p, float(x0), float(x1)))
    return _run("global_extinction", _check_global, cases, seed, workers)


# -- monotone decay below u* ------------------------------------------------------

def iterate_varying_b(lam: float, a_seq, b_seq, x0: float, x1: float, steps: int) -> list[float]:
    """``x[n+1] = x[n-1]**lam exp(a[n] - b[n] x[n] - x[n-1])`` with periodic ``a``, ``b``."""
    xs = [x0, x1]
    for n in range(1, steps + 1):
        p, q = xs[n - 1], xs[n]
        if p == 0.0:
            xs.append(0.0)
            continue
        arg = lam * math.log(p) + (a_seq[n % len(a_seq)] - b_seq[n % len(b_seq)] * q - p)
        xs.append(math.exp(arg))
    return xs


def _check_eoz(case):
    lam, a_seq, b_seq, x0, x1, u_star = case
    xs = iterate_varying_b(lam, a_seq, b_seq, x0, x1, LONG_RUN)
    sub = xs[0::2]
    for k in range(1, len(sub)):
        if sub[k - 1] == 0.0:
            break
        if not sub[k] < sub[k - 1]:
            return ("not strictly decreasing", lam, a_seq, b_seq, x0, x1, k)
    if sub[-1] >= ZERO:
        return ("no decay", lam, a_seq, b_seq, x0, x1, sub[-1])
    return None


def suite_eoz(params: ModelParams | None = None, trials: int = 200, seed: int = 0,
              b_seq: Sequence[float] | None = None, workers: int = 1) -> SuiteResult:
    """With ``s = 0`` a term below ``u*`` starts a strictly decreasing parity subsequence."""
    rng = np.random.default_rng(seed)
    if params is not None:
        p = normalize(params)
        if p.lam <= 1 or not p.is_semelparous or not analysis.conditions(p).cond_nac0.holds:
            raise HypothesesUnmet("monotone decay needs lam > 1, s = 0 and a >= (lam-1)(1 - ln(lam-1))")
    cases = []
    for _ in range(trials):
        if params is None:
            lam = float(rng.uniform(1.2, 5.0))
            top = (lam - 1) * (1 - math.log(lam - 1)) + float(rng.uniform(0.05, 2.0))
            a_seq = (top,) + tuple(top - float(d) for d in rng.uniform(0.0, 2.0, size=int(rng.integers(0, 3))))
            bs = _periodic(rng, 0.0, 2.0)
        else:
            lam, a_seq = p.lam, p.a_seq
            top = p.a_sup
            bs = tuple(b_seq) if b_seq is not None else (p.b,)
        u_star = analysis.first_order_points(lam, top).u_star
        x0 = float(rng.uniform(0.0, 1.0)) * u_star
        x1 = float(rng.uniform(0.0, 3.0 * lam))
        cases.append((lam, tuple(a_seq), bs, x0, x1, u_star))
    return _run("eoz", _check_eoz, cases, seed, workers)


# -- survival without positive fixed points ------------------------------------

def _check_no_fp(case):
    params, x0, x1, u_star, u_bar, delta = case
    rec = simulate(params, x0, x1, Limits(max_steps=LONG_RUN))
    if rec.verdict != Verdict.SURVIVE:
        return ("not certified", x0, x1, rec.verdict.label)
    xs = iterate(params, x0, x1, LONG_RUN)
    big, small = xs[0::2], xs[1::2]
    # the parity converges to u_bar, which it may hit in floating point
    if not all(u_star < v <= u_bar * (1 + 1e-12) for v in big):
        return ("left (u*, u_bar)", x0, x1)
    for k in range(1, len(small)):
        if small[k - 1] > 0 and not small[k] <= delta * small[k - 1]:
            return ("small parity not contracting", x0, x1, k)
    if small[-1] >= ZERO:
        return ("small parity did not decay", x0, x1)
    if max(big[-1000:]) <= u_star / 2:
        return ("big parity collapsed", x0, x1)
    return None


def suite_no_fp_survival(lam: float, a: float, b: float, trials: int = 20, seed: int = 0,
                         eps0: float = 0.1, workers: int = 1) -> SuiteResult:
    """No positive equilibria, yet orbits built as in the existence proof persist.

    ``x0`` in ``(u*, u_bar)``; ``x1`` below both ``e^{-(a+eps0)/(lam-1)}`` and the
    level that keeps ``e^{-b x1/(1-delta)} f(x0) > u*`` with ``delta = e^{-eps0}``.
    """
    params = ModelParams.autonomous(lam, a, b=b)
    if lam <= 1:
        raise HypothesesUnmet("survival without fixed points needs lam > 1")
    cond = analysis.conditions(params)
    if not cond.cond_fxp0.holds:
        raise HypothesesUnmet(
            f"a={a} outside ({cond.cond_fxp0.lower:.6g}, {cond.cond_fxp0.upper:.6g}) for b={b}")
    if not cond.cond_ubar.holds:
        raise HypothesesUnmet(f"a={a} above lam - (lam-1) ln lam = {cond.cond_ubar.rhs:.6g}")
    fo = analysis.first_order_points(lam, a)
    us, ub = fo.u_star, fo.u_bar
    delta = math.exp(-eps0)
    rng = np.random.default_rng(seed)
    cases = []
    for _ in range(trials):
        x0 = us + float(rng.uniform(0.05, 0.95)) * (ub - us)
        cap = math.exp(-(a + eps0) / (lam - 1))
        if b > 0:
            cap = min(cap, (1 - delta) * math.log(fo.f(x0) / us) / b)
        x1 = float(rng.uniform(0.1, 0.9)) * cap
        cases.append((params, x0, x1, us, ub, delta))
    return _run("no_fp_survival", _check_no_fp, cases, seed, workers)


# -- unstable period-2 orbits ----------------------------------------------------

def _check_period2(case):
    params, u_star, eps, eps_p = case
    for x0, x1 in ((0.0, u_star), (u_star, 0.0)):
        # residual of the exact sequence over two periods
        for n in range(1, 5):
            prev, curr, nxt = (x0, x1, x0) if n % 2 else (x1, x0, x1)
            if abs(step_scalar(params, n, prev, curr) - nxt) > 1e-9:
                return ("not a 2-periodic solution", x0, x1, n)
        # u* repels, so rounding in u* only stays below 1e-9 over a short run
        xs = iterate(params, x0, x1, SHORT_RUN)
        for k, v in enumerate(xs):
            if abs(v - (x0, x1)[k % 2]) > 1e-9:
                return ("forward orbit left the 2-cycle", x0, x1, k, v)
    if not _converges(params, eps, u_star - eps_p):
        return ("perturbation did not converge", eps, eps_p)
    if not _converges(params, u_star - eps_p, eps):
        return ("mirrored perturbation did not converge", eps, eps_p)
    return None


def suite_period2(lam: float, a: float, b: float, trials: int = 10, seed: int = 0,
                  workers: int = 1) -> SuiteResult:
    """``{0, u*, 0, u*, ...}`` is a solution, and small perturbations of it go extinct."""
    params = ModelParams.autonomous(lam, a, b=b)
    if lam <= 1 or not analysis.conditions(params).cond_nac0.holds:
        raise HypothesesUnmet("period-2 orbit needs lam > 1 and a >= (lam-1)(1 - ln(lam-1))")
    u_star = analysis.first_order_points(lam, a).u_star
    rng = np.random.default_rng(seed)
    cases = [(params, u_star, 1e-3, 1e-3)]
    for _ in range(trials - 1):
        e, ep = 10.0 ** rng.uniform(-4, -2, size=2)
        cases.append((params, u_star, float(e), float(ep)))
    return _run("period2", _check_period2, cases, seed, workers)


# -- extinction rectangles past u_* -------------------------------------------------

def _check_rect(case):
    params, name, x0, x1 = case
    if not _converges(params, x0, x1):
        return ("did not converge", name, x0, x1)
    return None


def suite_proposition_rectangles(params: ModelParams, trials: int = 200, seed: int = 0,
                                 workers: int = 1) -> SuiteResult:
    """Initial values in ``R01``, ``R10``, ``R11`` (truncated at ``u_* + 20``) go extinct."""
    p = normalize(params)
    if p.lam <= 1 or not p.is_semelparous or not p.is_autonomous:
        raise HypothesesUnmet("rectangle result needs lam > 1 and autonomous s = 0")
    if not analysis.conditions(p).cond_fup.holds:
        raise HypothesesUnmet("rectangle result needs a > (lam-1)(1 - ln(lam-1))")
    fo = analysis.first_order_points(p.lam, p.a)
    us, ul = fo.u_star, fo.u_lower_star
    top = ul + 20.0
    boxes = {"R01": ((0.0, us), (ul, top)), "R10": ((ul, top), (0.0, us)), "R11": ((ul, top), (ul, top))}
    names = sorted(boxes)
    rng = np.random.default_rng(seed)
    cases = []
    for _ in range(trials):
        name = names[int(rng.integers(0, 3))]
        (xa, xb), (ya, yb) = boxes[name]
        cases.append((p, name, float(rng.uniform(xa, xb)), float(rng.uniform(ya, yb))))
    return _run("proposition_rectangles", _check_rect, cases, seed, workers)


# -- exploratory --------------------------------------------------------------------

def explore_conjecture(lam: float, a: float, b: float, trials: int = 200, seed: int = 0,
                       steps: int = 5000, extent: float | None = None) -> dict[str, int]:
    """Tally how often each parity subsequence looks extinct. Reported, never asserted."""
    params = ModelParams.autonomous(lam, a, b=b)
    extent = extent or 2.0 * lam
    rng = np.random.default_rng(seed)
    tally = {"both_decay": 0, "one_decays": 0, "neither_decays": 0}
    for _ in range(trials):
        x0, x1 = rng.uniform(0.0, extent, size=2)
        xs = iterate(params, float(x0), float(x1), steps)
        tail = xs[-200:]
        decayed = [max(tail[k::2]) < ZERO for k in (0, 1)]
        tally[("neither_decays", "one_decays", "both_decay")[sum(decayed)]] += 1
    return tally


def run_all(params: ModelParams, trials: int = 200, seed: int = 0, workers: int = 1):
    """Run every suite on ``params``; returns ``[(name, SuiteResult | reason-string)]``."""
    p = normalize(params)
    out = []

    def attempt(name, fn, *args, **kw):
        try:
            out.append((name, fn(*args, **kw)))
        except HypothesesUnmet as exc:
            out.append((name, f"hypotheses unmet: {exc}"))

    common = {"trials": trials, "seed": seed, "workers": workers}
    attempt("bounded", suite_bounded, params, **common)
    attempt("rho_extinction", suite_rho_extinction, params, **common)
    attempt("global_extinction", suite_global_extinction, params, **common)
    attempt("eoz", suite_eoz, params, **common)
    scalar_ok = p.lam > 1 and p.is_autonomous and p.is_semelparous
    for name, fn in (("no_fp_survival", suite_no_fp_survival), ("period2", suite_period2)):
        if scalar_ok:
            attempt(name, fn, p.lam, p.a, p.b, trials=min(trials, 20), seed=seed, workers=workers)
        else:
            out.append((name, "hypotheses unmet: needs lam > 1 and autonomous s = 0"))
    attempt("proposition_rectangles", suite_proposition_rectangles, params, **common)
    return out
