"""Command-line front end: ``simulate``, ``fixpoints``, ``region``, ``verify``.

Configuration is a JSON document::

    {
      "model": {"lambda": 3, "a": 0.7936, "b": 0.0891, "c": 1, "s": 0, "sp": 1},
      "grid": {"x_range": [0, 6.9], "y_range": [0, 6.9], "nx": 200, "ny": 200},
      "limits": {"max_steps": 5000, "overflow_cap": 700},
      "initial": {"x0": 0.3, "y0": 0.3},
      "heuristic": false, "seed": 0, "trials": 200, "workers": 1, "out": "."
    }

``a``, ``s`` and ``sp`` accept a number or a list (one period). ``r`` may be
given instead of ``a``. Everything except ``model.lambda`` and ``model.a``/``r``
is optional. Exit codes: 0 success, 1 suite failure, 2 configuration error.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, replace

from . import analysis, regions, verify
from .core import Certificate, Limits, ModelParams, Verdict, fold_initials, simulate, step_scalar, unfold_juveniles

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

PGM_LEVELS = {Verdict.EXTINCT: 64, Verdict.UNDECIDED: 160, Verdict.SURVIVE: 255}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    params: ModelParams
    grid: regions.GridSpec | None = None
    limits: Limits = Limits()
    heuristic: bool = False
    seed: int = 0
    trials: int = 200
    workers: int = 1
    out: str = "."
    x0: float | None = None
    y0: float | None = None


def _seq(section: dict, key: str, where: str, default=None):
    v = section.get(key, default)
    if v is None:
        return None
    if isinstance(v, bool) or not isinstance(v, (int, float, list)):
        raise ConfigError(f"{where}.{key}: expected a number or a list of numbers")
    vals = v if isinstance(v, list) else [v]
    for i, item in enumerate(vals):
        if isinstance(item, bool) or not isinstance(item, (int, float)):
            raise ConfigError(f"{where}.{key}[{i}]: expected a number, got {item!r}")
    return tuple(float(x) for x in vals)


def _number(section: dict, key: str, where: str, default=None, kind=float):
    v = section.get(key, default)
    if v is None:
        return None
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}.{key}: expected a number, got {v!r}")
    if kind is int and int(v) != v:
        raise ConfigError(f"{where}.{key}: expected an integer, got {v!r}")
    return kind(v)


def config_from_dict(doc: dict) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config: top level must be an object")
    model = doc.get("model")
    if not isinstance(model, dict):
        raise ConfigError("model: missing or not an object")
    lam = _number(model, "lambda", "model")
    if lam is None:
        raise ConfigError("model.lambda: required")
    a = _seq(model, "a", "model")
    r = _seq(model, "r", "model")
    if (a is None) == (r is None):
        raise ConfigError("model: give exactly one of 'a' or 'r'")
    kw = dict(
        lam=lam,
        b=_number(model, "b", "model", 0.0),
        c=_number(model, "c", "model", 1.0),
        s_seq=_seq(model, "s", "model", 0.0),
        sp_seq=_seq(model, "sp", "model", 1.0),
    )
    try:
        if a is not None:
            params = ModelParams(a_seq=a, **kw)
        else:
            params = ModelParams.from_r(kw.pop("lam"), r, **kw)
    except ValueError as exc:
        # field names in messages follow the config keys
        msg = str(exc).replace("lam:", "lambda:").replace("_seq:", ":").replace("_seq[", "[")
        raise ConfigError(f"model.{msg}") from None

    grid = None
    if "grid" in doc:
        g = doc["grid"]
        if not isinstance(g, dict):
            raise ConfigError("grid: expected an object")
        try:
            grid = regions.GridSpec(
                tuple(_seq(g, "x_range", "grid")), tuple(_seq(g, "y_range", "grid")),
                _number(g, "nx", "grid", 200, int), _number(g, "ny", "grid", 200, int),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"grid.{exc}") from None

    lim = doc.get("limits", {})
    if not isinstance(lim, dict):
        raise ConfigError("limits: expected an object")
    heuristic = doc.get("heuristic", False)
    if not isinstance(heuristic, bool):
        raise ConfigError("heuristic: expected true or false")
    try:
        limits = Limits(
            max_steps=_number(lim, "max_steps", "limits", 5000, int),
            overflow_cap=_number(lim, "overflow_cap", "limits", 700.0),
            heuristic=heuristic,
        )
    except ValueError as exc:
        raise ConfigError(f"limits.{exc}") from None

    init = doc.get("initial", {})
    if not isinstance(init, dict):
        raise ConfigError("initial: expected an object")
    out = doc.get("out", ".")
    if not isinstance(out, str):
        raise ConfigError("out: expected a path string")
    cfg = RunConfig(
        params=params, grid=grid, limits=limits, heuristic=heuristic,
        seed=_number(doc, "seed", "config", 0, int),
        trials=_number(doc, "trials", "config", 200, int),
        workers=_number(doc, "workers", "config", 1, int),
        out=out,
        x0=_number(init, "x0", "initial"),
        y0=_number(init, "y0", "initial"),
    )
    for name in ("x0", "y0"):
        v = getattr(cfg, name)
        if v is not None and (v < 0 or not math.isfinite(v)):
            raise ConfigError(f"initial.{name}: must be a finite non-negative number")
    if cfg.trials < 1 or cfg.workers < 1:
        raise ConfigError("config.trials/workers: must be >= 1")
    return cfg


def parse_config(text: str) -> RunConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON ({exc})") from None
    return config_from_dict(doc)


def config_to_dict(cfg: RunConfig) -> dict:
    p = cfg.params
    doc = {
        "model": {
            "lambda": p.lam, "a": list(p.a_seq), "b": p.b, "c": p.c,
            "s": list(p.s_seq), "sp": list(p.sp_seq),
        },
        "limits": {"max_steps": cfg.limits.max_steps, "overflow_cap": cfg.limits.overflow_cap},
        "heuristic": cfg.heuristic,
        "seed": cfg.seed,
        "trials": cfg.trials,
        "workers": cfg.workers,
        "out": cfg.out,
    }
    if cfg.grid is not None:
        g = cfg.grid
        doc["grid"] = {"x_range": list(g.x_range), "y_range": list(g.y_range), "nx": g.nx, "ny": g.ny}
    init = {k: getattr(cfg, k) for k in ("x0", "y0") if getattr(cfg, k) is not None}
    if init:
        doc["initial"] = init
    return doc


def serialize_config(cfg: RunConfig) -> str:
    return json.dumps(config_to_dict(cfg), indent=2, sort_keys=True) + "\n"


def _num(v: float) -> str:
    """Shortest round-trip decimal."""
    return repr(float(v))


def _write(cfg: RunConfig, name: str, text: str) -> str:
    os.makedirs(cfg.out, exist_ok=True)
    path = os.path.join(cfg.out, name)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)
    return path


# -- simulate -------------------------------------------------------------------

def orbit_csv(cfg: RunConfig) -> str:
    """One row per step; the certificate column names the certificate on the step
    it fired and the final row carries the verdict."""
    p = cfg.params
    rec = simulate(p, *fold_initials(p, cfg.x0, cfg.y0), cfg.limits)
    xs = list(rec.x_series)
    if rec.overflow or rec.nonfinite:
        rows = len(xs) - 1
        ys = [(xs[n + 1] - p.s_at(n) * xs[n]) / p.sp_at(n) for n in range(rows)]
    else:
        # one extra step so the last row also has a juvenile density
        rows = len(xs)
        xs.append(step_scalar(p, rows - 1, xs[-2], xs[-1]))
        ys = unfold_juveniles(p, xs)
    lines = ["n,x,y,certificate"]
    for n in range(rows):
        tag = ""
        if n == rows - 1:
            tag = rec.verdict.label
        elif rec.cert_step == n and rec.certificate != Certificate.NONE:
            tag = rec.certificate.label
        lines.append(f"{n},{_num(xs[n])},{_num(ys[n])},{tag}")
    return "\n".join(lines) + "\n"


def cmd_simulate(cfg: RunConfig) -> int:
    if cfg.x0 is None or cfg.y0 is None:
        print("config error: simulate needs --x0 and --y0 (or initial.x0/y0)", file=sys.stderr)
        return EXIT_CONFIG
    text = orbit_csv(cfg)
    path = _write(cfg, "orbit.csv", text)
    print(f"wrote {path}; final row: {text.splitlines()[-1]}")
    return EXIT_OK


# -- fixpoints ------------------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return _num(v)
    return str(v)


def fixpoint_rows(params: ModelParams) -> list[tuple[str, object]]:
    from .core import normalize

    p = normalize(params)
    rows: list[tuple[str, object]] = []
    cond = analysis.conditions(p)
    if p.is_autonomous:
        fp = analysis.fixed_points(p)
        rows += [
            ("x_max", fp.x_max), ("count", fp.count), ("x_star", fp.x_star), ("x_bar", fp.x_bar),
            ("eig_plus", fp.eig_plus), ("eig_minus", fp.eig_minus),
            ("classification", fp.classification.value),
            ("eig_bar_plus", fp.eig_bar[0] if fp.eig_bar else None),
            ("eig_bar_minus", fp.eig_bar[1] if fp.eig_bar else None),
        ]
        if fp.count == 2:
            rows.append(("dxstar_db", analysis.allee_sensitivity(p)))
    fo = analysis.first_order_points(p.lam, p.a_sup)
    rows += [
        ("u_star", fo.u_star), ("u_bar", fo.u_bar), ("u_lower_star", fo.u_lower_star),
        ("f_at_lambda", fo.f_at_lambda), ("rho", cond.rho), ("fxp_status", cond.fxp_status),
    ]
    for c in cond.all_conditions():
        if isinstance(c, analysis.IntervalCondition):
            rows += [
                (f"cond_{c.name}", c.holds), (f"cond_{c.name}_lower", c.lower),
                (f"cond_{c.name}_upper", c.upper), (f"cond_{c.name}_margin_lower", c.margin_lower),
                (f"cond_{c.name}_margin_upper", c.margin_upper),
            ]
        else:
            rows += [(f"cond_{c.name}", c.holds), (f"cond_{c.name}_margin", c.margin)]
    return rows


def cmd_fixpoints(cfg: RunConfig) -> int:
    try:
        rows = fixpoint_rows(cfg.params)
    except analysis.UnsupportedAnalysis as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    width = max(len(k) for k, _ in rows)
    for k, v in rows:
        print(f"{k:<{width}}  {_fmt(v)}")
    path = _write(cfg, "fixpoints.csv", "quantity,value\n" + "".join(f"{k},{_fmt(v)}\n" for k, v in rows))
    print(f"wrote {path}")
    return EXIT_OK


# -- region ---------------------------------------------------------------------

def pgm_text(r: regions.RegionRaster) -> str:
    lines = ["P2", f"{r.spec.nx} {r.spec.ny}", "255"]
    for row in r.cells[::-1]:
        lines.append(" ".join(str(PGM_LEVELS[Verdict(int(v))]) for v in row))
    return "\n".join(lines) + "\n"


def region_csv(r: regions.RegionRaster) -> str:
    xs, ys = r.spec.x_centers(), r.spec.y_centers()
    lines = ["i,j,x0,y0,verdict,certificate"]
    for j in range(r.spec.ny):
        for i in range(r.spec.nx):
            lines.append(
                f"{i},{j},{_num(xs[i])},{_num(ys[j])},"
                f"{Verdict(int(r.cells[j, i])).label},{Certificate(int(r.cert_tags[j, i])).label}"
            )
    return "\n".join(lines) + "\n"


def region_meta(r: regions.RegionRaster, default_extent: bool) -> dict:
    p = r.params
    try:
        base = int(regions.base_component(r).sum())
    except ValueError:
        base = None
    notes = list(r.notes)
    if default_extent:
        notes.append("plot extents are implementation defaults: [0, u_*+1] x [0, (u_*+1)/sp0]")
    return {
        "model": {"lambda": p.lam, "a": list(p.a_seq), "b": p.b, "c": p.c,
                  "s": list(p.s_seq), "sp": list(p.sp_seq)},
        "grid": {"x_range": list(r.spec.x_range), "y_range": list(r.spec.y_range),
                 "nx": r.spec.nx, "ny": r.spec.ny, "sampling": "cell-center"},
        "limits": {"max_steps": r.limits.max_steps, "overflow_cap": r.limits.overflow_cap,
                   "heuristic": r.limits.heuristic},
        "image": {"row0": "top = y_max", "levels": {"Extinct": 64, "Undecided": 160, "Survive": 255}},
        "counts": {v.label: r.count(v) for v in Verdict},
        "certificates": r.certificate_counts(),
        "base_component_cells": base,
        "extinct_components": regions.extinct_components(r)[1],
        "oracle_contradictions": regions.oracle_contradictions(r),
        "notes": notes,
    }


def cmd_region(cfg: RunConfig) -> int:
    spec = cfg.grid or regions.default_grid(cfg.params)
    r = regions.raster(cfg.params, spec, replace(cfg.limits, heuristic=cfg.heuristic), workers=cfg.workers)
    _write(cfg, "region.pgm", pgm_text(r))
    _write(cfg, "region.csv", region_csv(r))
    meta = region_meta(r, cfg.grid is None)
    _write(cfg, "region.meta", json.dumps(meta, indent=2, sort_keys=True) + "\n")
    print(f"wrote region.pgm, region.csv, region.meta to {cfg.out}")
    print(json.dumps(meta["counts"]), f"base component: {meta['base_component_cells']} cells")
    return EXIT_OK


# -- verify ---------------------------------------------------------------------

def verify_text(cfg: RunConfig) -> tuple[str, bool]:
    lines, ok = [], True
    for name, res in verify.run_all(cfg.params, trials=cfg.trials, seed=cfg.seed, workers=cfg.workers):
        if isinstance(res, str):
            lines.append(f"{name}: skipped ({res})")
        else:
            lines.append(res.summary())
            ok &= res.status == "pass"
            for f in res.failures[:5]:
                lines.append(f"  counterexample: {f!r}")
    return "\n".join(lines) + "\n", ok


def cmd_verify(cfg: RunConfig) -> int:
    text, ok = verify_text(cfg)
    sys.stdout.write(text)
    _write(cfg, "verify.txt", text)
    return EXIT_OK if ok else EXIT_FAIL


COMMANDS = {"simulate": cmd_simulate, "fixpoints": cmd_fixpoints, "region": cmd_region, "verify": cmd_verify}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ricker-stage", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="JSON configuration file")
        sp.add_argument("--out", help="output directory (overrides config)")
        sp.add_argument("--workers", type=int, help="parallel workers (output does not depend on it)")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--heuristic", action="store_true", default=None,
                        help="mark sustained numeric decay as Extinct")
        if name == "simulate":
            sp.add_argument("--x0", type=float)
            sp.add_argument("--y0", type=float)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with open(args.config) as fh:
            cfg = parse_config(fh.read())
        overrides = {k: getattr(args, k) for k in ("out", "workers", "seed", "heuristic", "x0", "y0")
                     if getattr(args, k, None) is not None}
        cfg = replace(cfg, **overrides)
        if cfg.workers < 1:
            raise ConfigError("--workers: must be >= 1")
        for k in ("x0", "y0"):
            v = getattr(cfg, k)
            if v is not None and (v < 0 or not math.isfinite(v)):
                raise ConfigError(f"--{k}: must be a finite non-negative number")
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return COMMANDS[args.command](cfg)


if __name__ == "__main__":
    sys.exit(main())
