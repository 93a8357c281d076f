"""Command-line front end: constants, scans and verifications over parameter grids."""
from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .constants import QuadratureFailure, constant_A, constant_A_argmin, constant_A_search, constant_C, constant_Cp, constant_D, phi
from .functionals import TestFunction, bump, verify_hardy, verify_hsm_halfspace, verify_interval
from .geometry import (
    HalfSpace, dist_boundary, halfspace_m_rho_ratio, m_rho, m_rho_prefactor, parse_domain, verify_hsm_general,
)
from .model import FractionalParams, Regime, RegimeError, validate
from .pointwise import ScanGrid, Variant, scan_prop
from .quadrature import Method, QuadratureSpec

SCHEMA_VERSION = "1.0"
COMMANDS = ("constants", "phi", "apb", "pointwise-scan", "verify-hardy", "verify-hsm", "verify-interval", "mrho", "sweep")
EXIT_PASS, EXIT_VIOLATION, EXIT_NONCONVERGED, EXIT_CONFIG = 0, 1, 2, 3


class ConfigError(ValueError):
    """The run configuration is invalid; maps to exit code 3."""


@dataclass
class RunConfig:
    command: str
    grid: dict = field(default_factory=dict)  # d, s, p, alpha, beta -> lists
    regime: str | None = None
    domain: str | None = None
    spec: dict = field(default_factory=dict)  # rel_tol, abs_tol, mc_budget, method
    out: str | None = None
    format: str = "json"
    seed: int = 20240917
    workers: int = 1
    options: dict = field(default_factory=dict)  # command-specific settings

    def quadrature_spec(self, d: int | None = None) -> QuadratureSpec | None:
        """None keeps the library defaults unless a tolerance or seed was given."""
        if not self.spec and self.seed == QuadratureSpec().seed:
            return None
        kw = dict(seed=self.seed)
        if "rel_tol" in self.spec:
            kw["rel_tol"] = self.spec["rel_tol"]
        elif d is not None:
            kw["rel_tol"] = 1e-7 if d == 1 else 1e-5
        if "abs_tol" in self.spec:
            kw["abs_tol"] = self.spec["abs_tol"]
        elif d is not None:
            kw["abs_tol"] = 1e-13
        if "mc_budget" in self.spec:
            kw["mc_budget"] = int(self.spec["mc_budget"])
        if "method" in self.spec:
            kw["method"] = Method(self.spec["method"])
        return QuadratureSpec(**kw)

    def points(self):
        g = self.grid
        axes = [g.get(k, [default]) for k, default in
                (("d", 1), ("s", 0.5), ("p", 1.5), ("alpha", 0.0), ("beta", 0.0))]
        return list(itertools.product(*axes))


# ---------------------------------------------------------------------------
# parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _floats(text: str) -> list:
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse number list {text!r}") from exc


def _ints(text: str) -> list:
    vals = _floats(text)
    if any(v != int(v) for v in vals):
        raise ConfigError(f"dimensions must be integers: {text!r}")
    return [int(v) for v in vals]


def read_config_file(path: str) -> dict:
    """``key = value`` lines; ``#`` starts a comment; keys use flag names."""
    out = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{n}: expected key = value")
        out[key.strip().lstrip("-").replace("_", "-")] = value.strip()
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="frachardy", description=__doc__)
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="key = value file; flags override it")
    for flag in ("d", "s", "p", "alpha", "beta", "regime", "domain", "rel-tol", "abs-tol", "mc-budget", "seed",
                 "out", "format", "workers", "method",
                 # command-specific
                 "r", "x", "rho", "samples", "variant", "factor", "support", "profile", "amplitude",
                 "interval", "remainder-factor", "normalization", "what"):
        ap.add_argument(f"--{flag}", default=None)
    return ap


_GRID_KEYS = {"d": _ints, "s": _floats, "p": _floats, "alpha": _floats, "beta": _floats}


def parse_config(argv) -> RunConfig:
    ap = build_parser()
    ns = ap.parse_args(argv)
    merged = read_config_file(ns.config) if ns.config else {}
    for k, v in vars(ns).items():
        if k in ("command", "config") or v is None:
            continue
        merged[k.replace("_", "-")] = v
    unknown = set(merged) - {a.dest.replace("_", "-") for a in ap._actions}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    cfg = RunConfig(ns.command)
    for key, conv in _GRID_KEYS.items():
        if key in merged:
            cfg.grid[key] = conv(merged.pop(key))
            if not cfg.grid[key]:
                raise ConfigError(f"empty grid axis {key}")
    for key in ("regime", "domain", "out"):
        if key in merged:
            setattr(cfg, key, merged.pop(key))
    fmt = merged.pop("format", "json").lower()
    if fmt not in ("json", "csv"):
        raise ConfigError("format must be json or csv")
    cfg.format = fmt
    try:
        if "seed" in merged:
            cfg.seed = int(merged.pop("seed"))
        if "workers" in merged:
            cfg.workers = max(1, int(merged.pop("workers")))
        for key, name, conv in (("rel-tol", "rel_tol", float), ("abs-tol", "abs_tol", float),
                                ("mc-budget", "mc_budget", int), ("method", "method", str)):
            if key in merged:
                cfg.spec[name] = conv(merged.pop(key))
        if "method" in cfg.spec:
            Method(cfg.spec["method"])
        QuadratureSpec(**{k: v for k, v in cfg.spec.items() if k != "method"})
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    cfg.options = merged
    _check_global_ranges(cfg)
    return cfg


def _check_global_ranges(cfg: RunConfig):
    """Ranges every command shares; per-regime hypotheses are checked per instance instead."""
    g = cfg.grid
    if any(d < 1 for d in g.get("d", [])):
        raise ConfigError("d must be >= 1")
    if any(not 0.0 < s < 1.0 for s in g.get("s", [])):
        raise ConfigError("s must lie in (0, 1)")
    if any(not 1.0 < p < 2.0 for p in g.get("p", [])):
        raise ConfigError("p must lie in (1, 2)")
    if cfg.regime is not None:
        try:
            if cfg.regime not in ("(0,1)", "(-1,1)"):
                Regime.parse(cfg.regime)
        except ValueError as exc:
            raise ConfigError(f"unknown regime {cfg.regime!r}") from exc
    if cfg.domain is not None:
        try:
            parse_domain(cfg.domain, (g.get("d") or [None])[0])
        except (ValueError, TypeError, IndexError) as exc:
            raise ConfigError(f"cannot parse domain {cfg.domain!r}") from exc


# ---------------------------------------------------------------------------
# records


def _params_dict(params):
    d, s, p, a, b = params
    return {"d": int(d), "s": s, "p": p, "alpha": a, "beta": b}


def _term(value=None, error=None, converged=None):
    return {"value": value, "error": error, "converged": converged}


def _record(index, params, regime, status, terms=None, constants=None, slack=None, extras=None, reason=None):
    base_terms = {k: None for k in ("energy", "hardy", "remainder", "sobolev")}
    base_terms.update(terms or {})
    base_const = {k: None for k in ("C_or_D", "Cp", "rem_const", "A")}
    base_const.update(constants or {})
    rec = {"index": index, "params": _params_dict(params), "regime": regime, "terms": base_terms,
           "constants": base_const, "slack": slack, "status": status, "extras": extras or {}}
    if reason is not None:
        rec["reason"] = reason
    return rec


def _from_report(index, params, report):
    d = report.as_dict()
    terms = {k: (None if v is None else {"value": v["value"], "error": v["error"], "converged": v["converged"],
                                           "statistical": v["statistical"]})
             for k, v in d["terms"].items()}
    extras = dict(d["extras"])
    extras["tol_total"] = d["tol_total"]
    extras["passed"] = d["passed"]
    if d["constants"].get("A") is None:
        d["constants"]["A"] = constant_A(report.params.p, report.params.alpha, report.params.beta)
    return _record(index, params, d["regime"], d["status"], terms, d["constants"], d["slack"], extras)


def _default_support(regime: str, d: int, domain=None) -> str:
    if regime == "interval11":
        return "slab:-0.8,0.8"
    if regime == "interval01":
        return "slab:0.2,0.8"
    if domain is not None and not isinstance(domain, HalfSpace):
        V = domain.vertices()
        c = V.mean(axis=0) if V.shape[0] else np.zeros(d)
        r = 0.5 * float(domain.dist_boundary(c))
        return "ball:" + ",".join(repr(float(v)) for v in c) + f",{r!r}"
    if d == 1:
        return "slab:0.5,1.5"
    if regime == Regime.FULL_SPACE.value:
        return "ball:1.5," + ",".join(["0"] * (d - 1)) + ",0.5"
    return "ball:" + ",".join(["0"] * (d - 1)) + ",1.5,0.5"


def _test_function(opts, regime, d, domain=None) -> TestFunction:
    desc = opts.get("support") or _default_support(regime, d, domain)
    return bump(desc, float(opts.get("amplitude", 1.0)), opts.get("profile", "even"))


# ---------------------------------------------------------------------------
# one instance per grid point


def _run_constants(i, pt, cfg):
    regime = Regime.parse(cfg.regime or "halfspace")
    params = FractionalParams(*pt)
    validate(params, regime)
    spec = cfg.quadrature_spec() or QuadratureSpec()
    fn = constant_C if regime is Regime.FULL_SPACE else constant_D
    try:
        K = fn(params, spec)
    except QuadratureFailure as exc:
        return _record(i, pt, regime.value, "non-converged", reason=str(exc))
    q = K.quadrature
    return _record(i, pt, regime.value, "pass", terms={"constant": _term(q.value, q.error_estimate, q.converged)},
                   constants={"C_or_D": K.value, "Cp": constant_Cp(params.p), "rem_const": params.p - 1.0,
                              "A": constant_A(params.p, params.alpha, params.beta)})


def _run_phi(i, pt, cfg):
    params = FractionalParams(*pt)
    rs = _floats(cfg.options.get("r", "0,0.5,0.9"))
    vals, status = {}, "pass"
    for r in rs:
        try:
            vals[repr(r)] = phi(params, r, cfg.quadrature_spec())
        except QuadratureFailure:
            vals[repr(r)], status = None, "non-converged"
    return _record(i, pt, "phi", status, extras={"phi": vals})


def _run_apb(i, pt, cfg):
    _, _, p, a, b = pt
    A = constant_A(p, a, b)
    search = constant_A_search(p, a, b)
    # compare only when the minimizer sits well inside the searched range; near the
    # boundary ((p-1) a - b)((p-1) b - a) = 0 it runs off to 0 or infinity
    tau = constant_A_argmin(p, a, b)
    interior = tau is not None and 1e-6 <= tau <= 1e6
    agree = abs(A - search) <= 1e-8 * max(1.0, A)
    status = "pass" if (agree or not interior) else "violation"
    return _record(i, pt, "apb", status, constants={"A": A},
                   extras={"A_search": search, "interior_minimum": bool(interior), "abs_gap": abs(A - search)})


def _run_verify_hardy(i, pt, cfg):
    regime = Regime.parse(cfg.regime or "halfspace")
    params = FractionalParams(*pt)
    validate(params, regime)
    u = _test_function(cfg.options, regime.value, params.d)
    rf = float(cfg.options.get("remainder-factor", 1.0))
    rep = verify_hardy(u, params, regime, cfg.quadrature_spec(params.d), remainder_factor=rf)
    return _from_report(i, pt, rep)


def _run_verify_hsm(i, pt, cfg):
    params = FractionalParams(*pt)
    spec = cfg.quadrature_spec(params.d)
    if cfg.domain is None or cfg.domain.startswith("halfspace"):
        if Regime.parse(cfg.regime or "hsm-halfspace") is not Regime.HSM_GENERAL:
            validate(params, Regime.HSM_HALF_SPACE)
            u = _test_function(cfg.options, Regime.HALF_SPACE.value, params.d)
            return _from_report(i, pt, verify_hsm_halfspace(u, params, spec))
    dom = parse_domain(cfg.domain or "halfspace", params.d)
    validate(params, Regime.HSM_GENERAL)
    u = _test_function(cfg.options, Regime.HSM_GENERAL.value, params.d, dom)
    norm = cfg.options.get("normalization", "printed")
    return _from_report(i, pt, verify_hsm_general(u, params, dom, spec, norm))


def _run_verify_interval(i, pt, cfg):
    params = FractionalParams(*pt)
    interval = cfg.options.get("interval") or cfg.regime or "(-1,1)"
    kind = "interval01" if interval.replace(" ", "") in ("(0,1)", "01", "interval01") else "interval11"
    u = _test_function(cfg.options, kind, params.d)
    return _from_report(i, pt, verify_interval(u, params, interval, cfg.quadrature_spec(params.d)))


def _run_mrho(i, pt, cfg):
    d = int(pt[0])
    if d < 2:
        raise RegimeError("m_rho needs d >= 2")
    dom = parse_domain(cfg.domain or "halfspace", d)
    rho = float(cfg.options["rho"]) if "rho" in cfg.options else pt[1] * pt[2]
    norm = cfg.options.get("normalization", "printed")
    xs = cfg.options.get("x") or ";".join(",".join(["0"] * (d - 1) + [repr(v)]) for v in (0.5, 1.0, 2.0))
    values = []
    for chunk in xs.split(";"):
        x = np.array(_floats(chunk))
        m = m_rho(x, rho, dom, cfg.quadrature_spec(), norm)
        db = dist_boundary(x, dom)
        values.append({"x": x.tolist(), "m_rho": m, "dist": db, "ratio": m / db})
    extras = {"points": values, "rho": rho, "normalization": norm,
              "prefactor": m_rho_prefactor(d, rho, norm),
              "halfspace_ratio_closed_form": halfspace_m_rho_ratio(d, rho, norm)}
    return _record(i, pt, "mrho", "pass", extras=extras)


RUNNERS = {
    "constants": _run_constants,
    "phi": _run_phi,
    "apb": _run_apb,
    "verify-hardy": _run_verify_hardy,
    "verify-hsm": _run_verify_hsm,
    "verify-interval": _run_verify_interval,
    "mrho": _run_mrho,
}


def _run_instance(task):
    command, i, pt, cfg = task
    try:
        return RUNNERS[command](i, pt, cfg)
    except RegimeError as exc:
        return _record(i, pt, cfg.regime or command, "skipped", reason=str(exc))
    except QuadratureFailure as exc:
        return _record(i, pt, cfg.regime or command, "non-converged", reason=str(exc))


def _scan_records(cfg: RunConfig):
    ps = cfg.grid.get("p") or [round(1.1 + 0.1 * k, 10) for k in range(9)]
    variant = Variant(cfg.options.get("variant", Variant.ALL_REAL_CP.value))
    factor = float(cfg.options.get("factor", 1.0))
    samples = int(float(cfg.options.get("samples", 1_000_000)))
    t_count, t_log = 201, 40
    per_p = max(samples / len(ps), 1.0)
    a_total = max(int(math.ceil(per_p / (t_count + t_log))), 8)
    lo = 0.0 if variant is Variant.NONNEG_PMINUS1 else -50.0
    grid = ScanGrid(a_range=(lo, 50.0), a_count=max(int(0.6 * a_total), 2), t_count=t_count,
                    p_list=tuple(ps), a_log_count=max(int(0.2 * a_total), 2), t_log_count=t_log)
    rep = scan_prop(grid, variant, factor, seed=cfg.seed, workers=cfg.workers)
    status = ("pass" if rep.passed else "violation") if factor == 1.0 else "constant-probe"
    d = rep.as_dict()
    d.pop("status")
    pt = (1, float("nan"), ps[0], 0.0, 0.0)
    rec = _record(0, pt, "pointwise", status, constants={"Cp": None}, slack=rep.worst_slack, extras=d)
    rec["params"] = {"d": None, "s": None, "p": list(ps), "alpha": None, "beta": None}
    return [rec]


def run_records(cfg: RunConfig) -> list:
    command = cfg.command
    if command == "sweep":
        command = cfg.options.get("what", "constants")
        if command not in RUNNERS and command != "pointwise-scan":
            raise ConfigError(f"sweep cannot run {command!r}")
    if command == "pointwise-scan":
        return _scan_records(cfg)
    tasks = [(command, i, pt, cfg) for i, pt in enumerate(cfg.points())]
    if cfg.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(cfg.workers) as ex:
            records = list(ex.map(_run_instance, tasks))
    else:
        records = [_run_instance(t) for t in tasks]
    return sorted(records, key=lambda r: r["index"])


def exit_code(records) -> int:
    statuses = [r["status"] for r in records]
    if "non-converged" in statuses:
        return EXIT_NONCONVERGED
    if "violation" in statuses:
        return EXIT_VIOLATION
    return EXIT_PASS


# ---------------------------------------------------------------------------
# report files


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def make_report(cfg: RunConfig, records, timestamp: str | None = None) -> dict:
    spec = cfg.quadrature_spec()
    if spec is None:
        default = "library default: 1e-10 for constants, 1e-7 for d = 1 functionals, 1e-5 for d = 2"
        tolerances = {"rel_tol": default, "abs_tol": QuadratureSpec().abs_tol, "mc_budget": QuadratureSpec().mc_budget}
    else:
        tolerances = {"rel_tol": spec.rel_tol, "abs_tol": spec.abs_tol, "mc_budget": spec.mc_budget}
    return _jsonable({
        "schema_version": SCHEMA_VERSION,
        "seed": cfg.seed,
        "metadata": {
            "command": cfg.command,
            "seed": cfg.seed,
            "tolerances": tolerances,
            "timestamp": timestamp or datetime.now(timezone.utc).isoformat(),
        },
        "instances": records,
    })


def dumps_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def loads_report(text: str) -> dict:
    return json.loads(text)


def payload(report: dict) -> str:
    """The report without its timestamp, for reproducibility comparisons."""
    clone = json.loads(json.dumps(report))
    clone.get("metadata", {}).pop("timestamp", None)
    return dumps_report(clone)


def _flatten(obj, prefix=""):
    out = {}
    if isinstance(obj, dict):
        for k, v in obj.items():
            out.update(_flatten(v, f"{prefix}{k}."))
    elif isinstance(obj, list):
        out[prefix[:-1]] = json.dumps(obj, sort_keys=True)
    else:
        out[prefix[:-1]] = obj
    return out


def to_csv(report: dict) -> str:
    rows = []
    for rec in report["instances"]:
        row = {"schema_version": report["schema_version"], "seed": report["seed"]}
        row.update(_flatten(rec))
        rows.append(row)
    cols = sorted({k for r in rows for k in r})
    first = [c for c in ("schema_version", "seed", "index", "status") if c in cols]
    cols = first + [c for c in cols if c not in first]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def run(cfg: RunConfig, timestamp: str | None = None) -> tuple[int, dict]:
    records = run_records(cfg)
    report = make_report(cfg, records, timestamp)
    text = dumps_report(report) if cfg.format == "json" else to_csv(report)
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return exit_code(records), report


def main(argv=None) -> int:
    try:
        cfg = parse_config(sys.argv[1:] if argv is None else argv)
        code, _ = run(cfg)
        return code
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
