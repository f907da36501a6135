"""Command-line front end: simulate | price | surface | validate | bench.

One JSON config describes a model (curve, family, phi) plus per-command
parameters. Output files are deterministic for a fixed config and seed,
down to the byte: every file starts with comment lines naming the units
and a hash of the config+seed, floats print with 17 significant digits,
and Monte Carlo streams are derived per row index so threading cannot
reorder randomness.

Exit codes: 0 ok, 1 config error, 2 numerical failure, 3 validation
failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence

import numpy as np

from .curve import (
    QuadratureSettings,
    RateModel,
    bond_price,
    forward_rate,
    risk_aversion,
    risk_premium,
    short_rate,
)
from .errors import ConfigError, DomainError, NumericalError, UnsupportedModelError
from .levy import family_from_config, sample_path, spawn_stream
from .martingales import ModelState, phi_from_config
from .options import OptionSpec, price_call, price_call_mc
from .termstructure import FlatYieldCurve, TermStructure, validate_term_structure
from .validation import run_validation

__all__ = ["main", "model_from_config", "load_config", "config_hash"]


# -- config ------------------------------------------------------------------


def load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    return cfg


def curve_from_config(cfg: dict) -> TermStructure:
    if not isinstance(cfg, dict) or "form" not in cfg:
        raise ConfigError("curve config needs a 'form' tag, e.g. {\"form\": \"flat\", \"yield\": 0.02}")
    form = str(cfg["form"]).lower()
    if form == "flat":
        extras = set(cfg) - {"form", "yield"}
        if extras:
            raise ConfigError(f"unexpected curve parameters: {sorted(extras)}")
        try:
            return FlatYieldCurve(y=float(cfg["yield"]))
        except KeyError as exc:
            raise ConfigError(f"flat curve is missing parameter {exc}") from exc
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad flat-curve parameter: {exc}") from exc
    raise ConfigError(f"unknown curve form {cfg['form']!r}; supported: flat")


def quadrature_from_config(cfg: Optional[dict]) -> QuadratureSettings:
    if cfg is None:
        return QuadratureSettings()
    extras = set(cfg) - {"rel_tol", "tail_epsilon", "max_subdivisions"}
    if extras:
        raise ConfigError(f"unexpected quadrature parameters: {sorted(extras)}")
    try:
        return QuadratureSettings(
            rel_tol=float(cfg.get("rel_tol", 1e-10)),
            tail_epsilon=float(cfg.get("tail_epsilon", 1e-12)),
            max_subdivisions=int(cfg.get("max_subdivisions", 2000)),
        )
    except (TypeError, ValueError, DomainError) as exc:
        raise ConfigError(f"bad quadrature settings: {exc}") from exc


def model_from_config(cfg: dict) -> RateModel:
    """Assemble a RateModel from the curve/family/phi blocks of a config."""
    for key in ("curve", "family", "phi"):
        if key not in cfg:
            raise ConfigError(f"config is missing the '{key}' block")
    ts = curve_from_config(cfg["curve"])
    fam = family_from_config(cfg["family"])
    phi = phi_from_config(cfg["phi"])
    quad = quadrature_from_config(cfg.get("quadrature"))
    try:
        return RateModel(ts=ts, fam=fam, phi=phi, quad=quad)
    except DomainError as exc:
        raise ConfigError(f"model rejected: {exc}") from exc


def config_hash(cfg: dict, seed: int) -> str:
    """Stable 16-hex-digit digest of the config document and seed."""
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":")) + f"|seed={seed}"
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def _clone(model: RateModel) -> RateModel:
    # fresh evaluator cache so worker threads never share mutable panels
    return RateModel(ts=model.ts, fam=model.fam, phi=model.phi, quad=model.quad)


# -- output ------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    return format(float(v), ".17g")


def _write_lines(out: Optional[str], lines: Sequence[str]) -> None:
    text = "\n".join(lines) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _csv_lines(header: Sequence[str], columns: Sequence[str], rows) -> List[str]:
    lines = [f"# {h}" for h in header]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    return lines


_UNITS = "units: time in years, rates per annum, prices as a fraction of unit notional"


# -- subcommands -------------------------------------------------------------


def cmd_simulate(cfg: dict, seed: int, out: Optional[str], args) -> int:
    model = model_from_config(cfg)
    blk = cfg.get("simulate")
    if not isinstance(blk, dict):
        raise ConfigError("config needs a 'simulate' block with maturity and steps")
    extras = set(blk) - {"maturity", "steps"}
    if extras:
        raise ConfigError(f"unexpected simulate parameters: {sorted(extras)}")
    try:
        maturity = float(blk["maturity"])
        steps = int(blk["steps"])
    except KeyError as exc:
        raise ConfigError(f"simulate block is missing {exc}") from exc
    if maturity <= 0.0 or steps < 1:
        raise ConfigError("simulate needs maturity > 0 and steps >= 1")
    if maturity >= model.s_max:
        raise ConfigError(
            f"simulate maturity {maturity} is beyond the curve's usable horizon {model.s_max:.1f}"
        )

    rng = spawn_stream(seed, 0)
    times = np.linspace(0.0, maturity, steps + 1)
    x = np.concatenate([[0.0], sample_path(model.fam, times[1:], rng)])
    rows = []
    for t_k, x_k in zip(times, x):
        st = ModelState(t=float(t_k), xi=float(x_k))
        rows.append(
            (float(t_k), float(x_k), bond_price(model, st, maturity), short_rate(model, st))
        )
    header = [
        "levyrates simulate: one driver path with the bond and short-rate processes",
        _UNITS,
        f"config_hash={config_hash(cfg, seed)} seed={seed}",
    ]
    _write_lines(out, _csv_lines(header, ["time", "X", "bond_price_to_T", "short_rate"], rows))
    return 0


def _option_entry(
    model: RateModel,
    spec: OptionSpec,
    use_mc: bool,
    paths: int,
    rng_index: int,
    seed: int,
) -> Dict[str, object]:
    res = price_call(model, spec)
    entry: Dict[str, object] = {
        "expiry": spec.expiry,
        "maturity": spec.maturity,
        "strike": spec.strike,
        "price": res.price,
        "status": res.status,
    }
    if res.critical is not None:
        entry["xi_star"] = res.critical.xi_star
        entry["residual"] = res.critical.residual
    if use_mc:
        mc, se = price_call_mc(model, spec, paths, spawn_stream(seed, rng_index))
        entry["mc_price"] = mc
        entry["mc_std_error"] = se
    return entry


def cmd_price(cfg: dict, seed: int, out: Optional[str], args) -> int:
    model = model_from_config(cfg)
    blk = cfg.get("price")
    if not isinstance(blk, dict):
        raise ConfigError("config needs a 'price' block")
    known = {"t", "xi", "maturities", "forward_maturities", "premium_maturities", "options"}
    extras = set(blk) - known
    if extras:
        raise ConfigError(f"unexpected price parameters: {sorted(extras)}")
    t = float(blk.get("t", 0.0))
    xi = float(blk.get("xi", 0.0))
    state = ModelState(t=t, xi=xi)
    maturities = [float(v) for v in blk.get("maturities", [])]
    fwd_mats = [float(v) for v in blk.get("forward_maturities", maturities)]
    prem_mats = [float(v) for v in blk.get("premium_maturities", [])]

    doc: Dict[str, object] = {
        "config_hash": config_hash(cfg, seed),
        "seed": seed,
        "state": {"t": t, "xi": xi},
        "bonds": [
            {"maturity": T, "price": bond_price(model, state, T)} for T in maturities
        ],
        "short_rate": short_rate(model, state),
        "forwards": [
            {"maturity": T, "rate": forward_rate(model, state, T)} for T in fwd_mats
        ],
        "risk_aversion": risk_aversion(model, state),
        "risk_premiums": [
            {"maturity": T, "premium": risk_premium(model, state, T)} for T in prem_mats
        ],
    }
    entries = []
    for i, o in enumerate(blk.get("options", [])):
        try:
            spec = OptionSpec(
                expiry=float(o["expiry"]), maturity=float(o["maturity"]), strike=float(o["strike"])
            )
        except (KeyError, TypeError, ValueError, DomainError) as exc:
            raise ConfigError(f"bad option entry {o!r}: {exc}") from exc
        entries.append(_option_entry(model, spec, args.mc, args.paths, i, seed))
    doc["options"] = entries
    _write_lines(out, [json.dumps(doc, indent=2, sort_keys=True)])
    return 0


def cmd_surface(cfg: dict, seed: int, out: Optional[str], args) -> int:
    model = model_from_config(cfg)
    blk = cfg.get("surface")
    if not isinstance(blk, dict):
        raise ConfigError("config needs a 'surface' block")
    extras = set(blk) - {"bond_maturity", "expiries", "strikes"}
    if extras:
        raise ConfigError(f"unexpected surface parameters: {sorted(extras)}")
    try:
        T = float(blk["bond_maturity"])
        expiries = [float(v) for v in blk["expiries"]]
        strikes = [float(v) for v in blk["strikes"]]
    except KeyError as exc:
        raise ConfigError(f"surface block is missing {exc}") from exc
    if not expiries or not strikes:
        raise ConfigError("surface needs nonempty expiries and strikes")

    tasks = [(i, e, k) for i, (e, k) in enumerate((e, k) for e in expiries for k in strikes)]

    def price_expiry(chunk) -> List[tuple]:
        local = _clone(model)
        rows = []
        for i, e, k in chunk:
            spec = OptionSpec(expiry=e, maturity=T, strike=k)
            entry = _option_entry(local, spec, args.mc, args.paths, i, seed)
            row = [e, k, entry["price"], entry["status"]]
            row.append(entry.get("xi_star", math.nan))
            row.append(entry.get("residual", math.nan))
            if args.mc:
                row.extend([entry["mc_price"], entry["mc_std_error"]])
            rows.append((i, tuple(row)))
        return rows

    # fan out whole expiries; each worker owns a model clone, assembly is
    # ordered by row index so threading never changes the file
    by_expiry = [[rec for rec in tasks if rec[1] == e] for e in expiries]
    results: List[tuple] = []
    if args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            for rows in pool.map(price_expiry, by_expiry):
                results.extend(rows)
    else:
        for chunk in by_expiry:
            results.extend(price_expiry(chunk))
    results.sort(key=lambda rec: rec[0])

    columns = ["expiry", "strike", "price", "status", "xi_star", "residual"]
    if args.mc:
        columns += ["mc_price", "mc_std_error"]
    header = [
        "levyrates surface: European calls on one bond over an expiry x strike grid",
        f"bond_maturity={_fmt(T)}",
        _UNITS,
        f"config_hash={config_hash(cfg, seed)} seed={seed}",
    ]
    _write_lines(out, _csv_lines(header, columns, [r for _, r in results]))
    return 0


def cmd_validate(cfg: dict, seed: int, out: Optional[str], args) -> int:
    # vet the curve alone first: a curve that breaks its own contract (say
    # a negative flat yield) should yield a failing report, not a crash
    # while assembling the model around it
    if "curve" not in cfg:
        raise ConfigError("config is missing the 'curve' block")
    ts = curve_from_config(cfg["curve"])
    quad = quadrature_from_config(cfg.get("quadrature"))
    curve_report = validate_term_structure(ts, quad.tail_epsilon)
    if not curve_report.passed:
        lines = [
            "# levyrates validate: model invariant suite",
            f"# config_hash={config_hash(cfg, seed)} seed={seed}",
        ]
        for c in curve_report.checks:
            tag = "PASS" if c.passed else "FAIL"
            lines.append(f"{tag}  curve_{c.name}: measured={c.worst:.6g}  ({c.detail})")
        lines.append("FAILED: the initial curve violates its contract; model checks skipped")
        _write_lines(out, lines)
        return 3
    model = model_from_config(cfg)
    report = run_validation(model, seed=seed, paths=args.paths)
    lines = [
        "# levyrates validate: model invariant suite",
        f"# config_hash={config_hash(cfg, seed)} seed={seed}",
    ] + report.lines()
    _write_lines(out, lines)
    if out is not None:
        sys.stdout.write(("OK" if report.passed else "FAILED") + f": report written to {out}\n")
    return 0 if report.passed else 3


# Same market setting as the surface demo configs: flat 3% curve and an
# exponentially decaying tilt (sign flipped for the gamma driver, whose
# support is one-sided).
_BENCH_MODELS = {
    "gbm": {
        "curve": {"form": "flat", "yield": 0.03},
        "family": {"family": "gbm"},
        "phi": {"c": 1.0, "b": 0.02},
    },
    "jd": {
        "curve": {"form": "flat", "yield": 0.03},
        "family": {"family": "jd", "lambda": 5.0, "mu": 0.0, "delta": 1.0},
        "phi": {"c": 1.0, "b": 0.02},
    },
    "gamma": {
        "curve": {"form": "flat", "yield": 0.03},
        "family": {"family": "gamma", "m": 1.0, "kappa": 0.5},
        "phi": {"c": -1.0, "b": 0.02},
    },
    "vg": {
        "curve": {"form": "flat", "yield": 0.03},
        "family": {"family": "vg", "mu": 0.02, "sigma": 0.3, "m": 20.0},
        "phi": {"c": 1.0, "b": 0.02},
    },
}


def bench_grid(cfg: Optional[dict]):
    """(expiries, strike factors, tenor) for the benchmark, 100 points."""
    blk = (cfg or {}).get("bench") or {}
    extras = set(blk) - {"expiries", "strike_factors", "tenor"}
    if extras:
        raise ConfigError(f"unexpected bench parameters: {sorted(extras)}")
    # the gamma driver's one-sided support caps bond prices from below at
    # P(t,T,0) ~ 0.996 x forward on this grid, so the default strike band
    # hugs the forward to keep every strike attainable for every family
    expiries = [float(v) for v in blk.get("expiries", np.linspace(0.5, 3.0, 10))]
    factors = [float(v) for v in blk.get("strike_factors", np.linspace(0.998, 1.030, 10))]
    tenor = float(blk.get("tenor", 2.0))
    return expiries, factors, tenor


def cmd_bench(cfg: Optional[dict], seed: int, out: Optional[str], args) -> int:
    """Time 100 analytic call prices for each driver family.

    Timings go to stdout; the optional output file carries only the price
    values so reruns stay byte-identical.
    """
    expiries, factors, tenor = bench_grid(cfg)
    n = len(expiries) * len(factors)
    rows = []
    timings = []
    for name, mcfg in _BENCH_MODELS.items():
        model = model_from_config(mcfg)
        P0 = model.ts.discount_factor
        jobs = []
        for e in expiries:
            fwd = float(P0(e + tenor)) / float(P0(e))
            for f in factors:
                jobs.append(OptionSpec(expiry=e, maturity=e + tenor, strike=f * fwd))
        t0 = time.perf_counter()
        prices = [price_call(model, spec).price for spec in jobs]
        elapsed = time.perf_counter() - t0
        timings.append((name, elapsed, 1e3 * elapsed / n))
        for spec, p in zip(jobs, prices):
            rows.append((name, spec.expiry, spec.maturity, spec.strike, p))

    sys.stdout.write(f"{'family':<8}{'prices':>8}{'seconds':>12}{'ms/price':>12}\n")
    for name, elapsed, per in timings:
        sys.stdout.write(f"{name:<8}{n:>8}{elapsed:>12.3f}{per:>12.2f}\n")
    slowest = max(timings, key=lambda r: r[1])[0]
    sys.stdout.write(f"slowest: {slowest}\n")

    if out is not None:
        header = [
            "levyrates bench: analytic call prices on the benchmark grid",
            _UNITS,
            f"config_hash={config_hash(cfg or {}, seed)} seed={seed}",
        ]
        _write_lines(
            out,
            _csv_lines(header, ["family", "expiry", "maturity", "strike", "price"], rows),
        )
    return 0


# -- entry point ---------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="levyrates",
        description="Rational term-structure models driven by exponential Levy martingales",
    )
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("simulate", "simulate one driver path with bond and short-rate columns (CSV)"),
        ("price", "price bonds, rates, and options at one state (JSON)"),
        ("surface", "price a call option grid over expiries and strikes (CSV)"),
        ("validate", "run the model invariant suite"),
        ("bench", "time 100 analytic call prices per family"),
    ):
        q = sub.add_parser(name, help=help_text)
        q.add_argument("--config", help="path to the JSON config")
        q.add_argument("--seed", type=int, default=0, help="random seed (unsigned 64-bit)")
        q.add_argument("--out", help="output file path (default: stdout)")
        q.add_argument("--mc", action="store_true", help="add Monte Carlo price columns")
        q.add_argument("--paths", type=int, default=100_000, help="Monte Carlo path count")
        q.add_argument("--threads", type=int, default=1, help="worker threads for grids")
    return p


_DISPATCH = {
    "simulate": cmd_simulate,
    "price": cmd_price,
    "surface": cmd_surface,
    "validate": cmd_validate,
    "bench": cmd_bench,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if not (0 <= args.seed < 2**64):
            raise ConfigError(f"seed must fit in an unsigned 64-bit integer, got {args.seed}")
        if args.paths < 1000:
            raise ConfigError(f"--paths must be at least 1000, got {args.paths}")
        if args.threads < 1:
            raise ConfigError(f"--threads must be positive, got {args.threads}")
        if args.command == "bench":
            cfg = load_config(args.config) if args.config else None
        else:
            if not args.config:
                raise ConfigError(f"{args.command} requires --config")
            cfg = load_config(args.config)
        return _DISPATCH[args.command](cfg, args.seed, args.out, args)
    except (ConfigError, UnsupportedModelError) as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 1
    except DomainError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 1
    except NumericalError as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return 2
    except OSError as exc:
        sys.stderr.write(f"i/o error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
