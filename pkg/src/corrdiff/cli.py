"""``corrdiff`` command line: expansions, approximations and three-tier validation.

Exit codes: 0 success, 2 rejected distribution, 3 numerical failure, 4 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Any, Sequence

from . import _mc
from .expansion import (
    ExpansionConfig,
    ExpansionReport,
    beta_series,
    delta_max,
    evaluate_mean_max,
    kappa_table,
    ladder_series,
    mean_max_series,
    resolve_drift,
    tail_approx,
)
from .increments import ModelError, StripError, conjugate_theta1, make_model
from .kernels import KernelConfig
from .mcoracle import McBudgetError, overshoot_transform, z_stat
from .pseries import SeriesError
from .quadrature import QuadConfig, QuadratureError, I_direct, rho_direct, s_direct

EXIT_OK = 0
EXIT_MODEL = 2
EXIT_NUMERIC = 3
EXIT_USAGE = 4

COMMANDS = ("expand", "cumulants", "mean-max", "ladder", "tail", "rho", "validate")

DEFAULTS: dict[str, Any] = {
    "dist": None,
    "order": 5,
    "n_max": 3,
    "j_max": 3,
    "delta": None,
    "theta0": None,
    "mu": None,
    "theta": None,
    "b": None,
    "x": None,
    "mc": 100_000,
    "seed": 0,
    "mc_level": 50.0,
    "tol": 1e-12,
    "direct_tol": 1e-12,
    "lambda0": 0.5,
    "Lambda": 1e6,
    "taylor_order": 96,
    "format": "json",
    "out": None,
}

# (low, high) inclusive bounds for numeric knobs
BOUNDS = {
    "order": (1, 8),
    "n_max": (1, 6),
    "j_max": (0, 6),
    "mc": (2, 10**8),
    "seed": (0, 2**64 - 1),
    "mc_level": (1.0, 1e4),
    "tol": (1e-15, 1e-4),
    "direct_tol": (1e-15, 1e-4),
    "lambda0": (0.05, 1.0),
    "Lambda": (1e2, 1e8),
    "taylor_order": (24, 200),
}


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="corrdiff", description="Corrected diffusion approximations for random walk maxima.",
                allow_abbrev=False)
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="JSON file of defaults; explicit flags win")
    p.add_argument("--dist", help="distribution spec, e.g. gaussian or shifted_gamma:shape=4")
    p.add_argument("--order", type=int, help="expansion order")
    p.add_argument("--n-max", dest="n_max", type=int, help="highest cumulant (cumulants)")
    p.add_argument("--j-max", dest="j_max", type=int, help="highest theta-derivative (cumulants)")
    drift = p.add_argument_group("drift (give one)")
    drift.add_argument("--delta", type=float)
    drift.add_argument("--theta0", type=float)
    drift.add_argument("--mu", type=float)
    p.add_argument("--theta", type=float, help="tilt for rho")
    p.add_argument("--b", type=float, help="transform argument for rho")
    p.add_argument("--x", type=float, help="level for tail")
    p.add_argument("--mc", type=int, help="Monte Carlo paths (validate)")
    p.add_argument("--seed", type=int)
    p.add_argument("--mc-level", dest="mc_level", type=float, help="level x used for overshoot simulation")
    p.add_argument("--tol", type=float, help="quadrature tolerance for coefficient integrals")
    p.add_argument("--direct-tol", dest="direct_tol", type=float, help="quadrature tolerance for direct rho")
    p.add_argument("--lambda0", type=float, help="Taylor/numeric switch radius")
    p.add_argument("--Lambda", dest="Lambda", type=float, help="upper end of the panel range")
    p.add_argument("--taylor-order", dest="taylor_order", type=int)
    p.add_argument("--format", choices=("json", "csv", "text"))
    p.add_argument("--out", help="write the report here instead of standard output")
    return p


def resolve_config(ns: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    if ns.config:
        try:
            with open(ns.config, encoding="utf-8") as fh:
                filecfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {ns.config!r}: {exc}") from exc
        if not isinstance(filecfg, dict):
            raise UsageError("config file must hold a JSON object")
        unknown = set(filecfg) - set(DEFAULTS)
        if unknown:
            raise UsageError(f"unknown config keys {sorted(unknown)}")
        cfg.update(filecfg)
    for k in DEFAULTS:
        v = getattr(ns, k, None)
        if v is not None:
            cfg[k] = v
    cfg["command"] = ns.command
    if cfg["dist"] is None:
        raise UsageError("--dist is required")
    for k, (lo, hi) in BOUNDS.items():
        v = cfg[k]
        if not isinstance(v, (int, float)) or isinstance(v, bool) or not lo <= v <= hi:
            raise UsageError(f"{k}={v!r} outside [{lo:g}, {hi:g}]")
    for k in ("order", "n_max", "j_max", "mc", "seed", "taylor_order"):
        if int(cfg[k]) != cfg[k]:
            raise UsageError(f"{k} must be an integer")
        cfg[k] = int(cfg[k])
    if cfg["format"] not in ("json", "csv", "text"):
        raise UsageError("format must be json, csv or text")
    return cfg


def _exp_config(cfg: dict) -> ExpansionConfig:
    return ExpansionConfig(
        kernel=KernelConfig(switch=cfg["lambda0"], taylor_order=cfg["taylor_order"]),
        quad=QuadConfig(tol=cfg["tol"], direct_tol=cfg["direct_tol"], Lambda=cfg["Lambda"]),
    )


def _drift(cfg: dict):
    given = {k: cfg[k] for k in ("delta", "theta0", "mu") if cfg[k] is not None}
    if len(given) != 1:
        raise UsageError("give exactly one of --delta, --theta0, --mu")
    if cfg["delta"] is not None and not cfg["delta"] > 0:
        raise UsageError("delta must be > 0")
    if cfg["theta0"] is not None and not cfg["theta0"] < 0:
        raise UsageError("theta0 must be < 0")
    if cfg["mu"] is not None and not cfg["mu"] > 0:
        raise UsageError("mu must be > 0")
    return given


def _report(coefs, errors=None, config=None, diagnostics=None) -> dict:
    names = [n for n, _ in coefs]
    errs = errors if errors is not None else [0.0] * len(coefs)
    return {
        "coefficients": [{"name": n, "value": v} for n, v in coefs],
        "error_bounds": [{"name": n, "bound": e} for n, e in zip(names, errs)],
        "config": config or {},
        "diagnostics": diagnostics or {},
    }


def _from_expansion(rep: ExpansionReport, cfg: dict, extra_diag=None) -> dict:
    d = rep.as_dict()
    d["config"] = {**cfg, **d["config"]}
    if extra_diag:
        d["diagnostics"].update(extra_diag)
    return d


def cmd_expand(model, cfg):
    rep = beta_series(model, cfg["order"], _exp_config(cfg))
    return _from_expansion(rep, cfg, {"beta1 (= -r1)": rep.diagnostics.pop("beta1")})


def cmd_cumulants(model, cfg):
    tab = kappa_table(model, cfg["n_max"], cfg["j_max"], _exp_config(cfg))
    keys = sorted(tab.values)
    return _report(
        [(f"kappa{n}^({j})(0)", float(tab.values[(n, j)])) for n, j in keys],
        [float(tab.errors[(n, j)]) for n, j in keys],
        cfg,
    )


def cmd_mean_max(model, cfg):
    rep = mean_max_series(model, cfg["order"], _exp_config(cfg))
    extra = {}
    drift = {k: cfg[k] for k in ("delta", "theta0", "mu") if cfg[k] is not None}
    if drift:
        _drift(cfg)
        D, _, _ = resolve_drift(model, **drift)
        extra = {"delta": D, "mean_max_at_delta": evaluate_mean_max(rep, D)}
    return _from_expansion(rep, cfg, extra)


def cmd_ladder(model, cfg):
    if not model.symmetric:
        raise UsageError(f"ladder series needs a symmetric law; {model.spec} is not")
    rep = ladder_series(model, cfg["order"], _exp_config(cfg))
    return _from_expansion(rep, cfg)


def cmd_tail(model, cfg):
    given = _drift(cfg)
    if cfg["x"] is None or not cfg["x"] > 0:
        raise UsageError("--x must be given and > 0")
    ecfg = _exp_config(cfg)
    beta = beta_series(model, cfg["order"], ecfg)
    dm = delta_max(model)
    t = tail_approx(model, cfg["x"], cfg["order"], cfg=ecfg, beta=beta, dmax=dm, **given)
    N = cfg["order"]
    coefs = [("diffusion", t["diffusion"]), ("corrected_order_1", t["corrected_order_1"]),
             (f"corrected_order_{N}", t[f"corrected_order_{N}"])]
    errs = [0.0, abs(t["corrected_order_1"]) * beta.error("r1") * t["delta"],
            abs(t[f"corrected_order_{N}"]) * t["series_error_bound"]]
    diags = {k: t[k] for k in ("delta", "theta0", "theta1", "mu", "sigma2", "warnings")}
    diags["delta_max"] = dm
    return _report(coefs, errs, cfg, diags)


def cmd_rho(model, cfg):
    if cfg["b"] is None or not cfg["b"] > 0:
        raise UsageError("--b must be given and > 0")
    theta = cfg["theta"]
    if theta is None:
        if cfg["delta"] is None:
            raise UsageError("give --theta or --delta")
        theta = conjugate_theta1(model, cfg["delta"])
    q = _exp_config(cfg).quad
    r = rho_direct(model, theta, cfg["b"], q)
    if not r.converged:
        raise QuadratureError("; ".join(r.diagnostics))
    return _report([("rho", r.value), ("transform", math.exp(r.value))], [r.error, math.exp(r.value) * r.error], cfg,
                   {"theta": theta, "panels": r.panels, "tail_error": r.tail_error})


def validation_table(model, delta: float, order: int, n_mc: int, seed: int, ecfg: ExpansionConfig,
                     mc_level: float = 50.0) -> dict:
    """Series vs direct quadrature vs Monte Carlo at ``(theta1(D), D)`` for ``D in (2d, d, d/2)``."""
    beta = beta_series(model, order, ecfg)
    r = beta.values
    q = ecfg.quad
    deltas = [2 * delta, delta, delta / 2]
    rows: dict[str, Any] = {"deltas": deltas, "series": [], "direct": [], "direct_error": [],
                            "series_gap": [], "identity_residual": []}
    for D in deltas:
        t1 = conjugate_theta1(model, D)
        rd = rho_direct(model, t1, D, q)
        sd = s_direct(model, D, q)
        idir = I_direct(model, t1, D, q)
        for res in (rd, sd, idir):
            if not res.converged:
                raise QuadratureError("; ".join(res.diagnostics))
        ser = sum(c * D ** (n + 1) for n, c in enumerate(r))
        rows["series"].append(ser)
        rows["direct"].append(rd.value)
        rows["direct_error"].append(rd.error)
        rows["series_gap"].append(abs(ser - rd.value))
        rows["identity_residual"].append(abs(rd.value - sd.value - idir.value))
    gaps = rows["series_gap"]
    floor = 10 * max(rows["direct_error"])
    orders = []
    for a, c in zip(gaps, gaps[1:]):
        orders.append(math.log2(a / c) if a > floor and c > floor else None)
    rows["convergence_order"] = orders
    rows["gap_floor"] = floor
    t1 = conjugate_theta1(model, delta)
    mc = overshoot_transform(model, t1, delta, x=mc_level, n=n_mc, seed=seed)
    direct_mid = math.exp(rows["direct"][1])
    series_mid = math.exp(rows["series"][1])
    rows["mc"] = mc.as_dict()
    rows["z_mc_vs_direct"] = z_stat(mc.mean, mc.stderr, direct_mid)
    rows["z_mc_vs_series"] = z_stat(mc.mean, mc.stderr, series_mid)
    rows["z_mc_stationarity"] = mc.diagnostics.get("z_diag")
    rows["beta"] = dict(zip(beta.names, beta.values))
    rows["beta_error"] = dict(zip(beta.names, beta.errors))
    return rows


def cmd_validate(model, cfg):
    if cfg["delta"] is None or not cfg["delta"] > 0:
        raise UsageError("validate needs --delta > 0")
    if cfg["theta0"] is not None or cfg["mu"] is not None:
        raise UsageError("validate takes --delta only")
    t = validation_table(model, cfg["delta"], cfg["order"], cfg["mc"], cfg["seed"], _exp_config(cfg),
                         cfg["mc_level"])
    coefs, errs = [], []
    for D, s, d, de in zip(t["deltas"], t["series"], t["direct"], t["direct_error"]):
        coefs += [(f"series_r[{D:g}]", s), (f"direct_rho[{D:g}]", d)]
        errs += [float(sum(e * D ** (n + 1) for n, e in enumerate(t["beta_error"].values()))), de]
    coefs.append((f"mc_transform[{cfg['delta']:g}]", t["mc"]["mean"]))
    errs.append(t["mc"]["stderr"])
    diags = {k: t[k] for k in ("series_gap", "identity_residual", "convergence_order", "gap_floor",
                               "z_mc_vs_direct", "z_mc_vs_series", "z_mc_stationarity", "beta", "mc")}
    zs = [t["z_mc_vs_direct"], t["z_mc_vs_series"]]
    diags["all_z_le_3"] = all(z <= 3 for z in zs)
    known = [o for o in t["convergence_order"] if o is not None]
    diags["min_convergence_order"] = min(known) if known else None
    return _report(coefs, errs, cfg, diags)


HANDLERS = {
    "expand": cmd_expand,
    "cumulants": cmd_cumulants,
    "mean-max": cmd_mean_max,
    "ladder": cmd_ladder,
    "tail": cmd_tail,
    "rho": cmd_rho,
    "validate": cmd_validate,
}


# -- rendering ------------------------------------------------------------------


def _clean(v):
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if hasattr(v, "item") and not isinstance(v, (str, bytes)):
        v = v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    return v


def render(report: dict, fmt: str = "json") -> bytes:
    """Serialize a report; identical reports give identical bytes."""
    rep = _clean(report)
    rep.setdefault("coefficients", [])
    rep.setdefault("error_bounds", [])
    rep.setdefault("config", {})
    rep.setdefault("diagnostics", {})
    if fmt == "json":
        return (json.dumps(rep, indent=2, sort_keys=False) + "\n").encode()
    bounds = {e["name"]: e["bound"] for e in rep["error_bounds"]}
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["name", "value", "error_bound"])
        for c in rep["coefficients"]:
            w.writerow([c["name"], repr(c["value"]), repr(bounds.get(c["name"], 0.0))])
        return buf.getvalue().encode()
    if fmt == "text":
        lines = []
        width = max([len(c["name"]) for c in rep["coefficients"]] + [4])
        lines.append(f"{'name':<{width}}  {'value':>24}  {'error bound':>12}")
        for c in rep["coefficients"]:
            lines.append(f"{c['name']:<{width}}  {c['value']:>24.16g}  {bounds.get(c['name'], 0.0):>12.3g}")
        cfg = rep["config"]
        lines.append("")
        lines.append("config: " + ", ".join(f"{k}={cfg[k]}" for k in cfg))
        for k, v in rep["diagnostics"].items():
            lines.append(f"{k}: {json.dumps(v)}")
        return ("\n".join(lines) + "\n").encode()
    raise ValueError(f"unknown format {fmt!r}")


def run(argv: Sequence[str] | None = None, stdout=None) -> int:
    stdout = stdout if stdout is not None else sys.stdout.buffer
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = resolve_config(ns)
        try:
            model = make_model(cfg["dist"])
        except ModelError as exc:
            print(f"corrdiff: rejected distribution: {exc}", file=sys.stderr)
            return EXIT_MODEL
        cfg["mc_backend"] = _mc.backend().NAME
        report = HANDLERS[cfg["command"]](model, cfg)
    except (UsageError, StripError) as exc:
        print(f"corrdiff: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (QuadratureError, McBudgetError, SeriesError, FloatingPointError) as exc:
        print(f"corrdiff: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"corrdiff: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    data = render(report, cfg["format"])
    if cfg["out"]:
        with open(cfg["out"], "wb") as fh:
            fh.write(data)
    else:
        stdout.write(data)
        stdout.flush()
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
