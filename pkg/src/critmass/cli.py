"""Command-line front end: classify | constant | simulate | sweep | verify.

Configuration is a JSON file (``--config``); ``--override KEY=VALUE`` sets
dotted keys on top of it. Exit codes: 0 ok, 1 verify failure, 2 config
error, 3 maximizer non-convergence, 4 missing constants, 5 numerical
overflow. The log level comes from the CRITMASS_LOG environment variable.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from . import criteria as cr
from .errors import CritmassError, MissingConstants, NoConvergence, NonFiniteState
from .initdata import DataSpec, make, negative_energy_pair
from .model import Parameters
from .radial import RadialGrid, free_energy, lp_norm
from .solver import StopReason, SolverConfig, format_float, run
from .variational import (Kind, ObjectiveSpec, default_alpha_beta, estimate_constant,
                          maximize_multi, seed_pairs)

log = logging.getLogger("critmass")

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_NOCONV, EXIT_CONSTANTS, EXIT_OVERFLOW = range(6)
SCHEMA = "critmass.cli/1"

DEFAULTS = {
    "params": {"d": 3, "m1": 4.0 / 3.0, "m2": 4.0 / 3.0, "c_d": None},
    "grid": {"n": 512, "r_max": 10.0},
    "solver": {"epsilon": 0.0, "dt_init": 1e-2, "dt_min": 1e-12, "t_end": 1.0, "cfl": 0.4,
               "blowup_linf_factor": 1e4, "diag_every": 20},
    "constant": {"kind": "CStar", "alpha": None, "beta": None, "theta0": None, "n": 512,
                 "r_max": 10.0, "max_iter": 10000, "tol": 1e-8, "random_seeds": 0,
                 "include_profiles": False},
    "theta_scan": cr.DEFAULT_THETA_SCAN,
    "tol": cr.BOUNDARY_TOL,
    "check_regime": True,
    "mu": 0.35,
    "verify": {"n": 512, "c_d": None, "only": None},
}

HELP_DEFAULTS = "\n".join(f"  {k}: {json.dumps(v)}" for k, v in DEFAULTS.items())


class ConfigError(CritmassError):
    pass


# ---------------------------------------------------------------------------
# config plumbing


def _merge(base: dict, extra: dict) -> dict:
    out = dict(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_override(cfg: dict, item: str) -> None:
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not KEY=VALUE")
    key, value = item.split("=", 1)
    parts = key.strip().split(".")
    node = cfg
    for p in parts[:-1]:
        node = node.setdefault(p, {})
        if not isinstance(node, dict):
            raise ConfigError(f"override path {key!r} crosses a non-object value")
    node[parts[-1]] = _parse_value(value)


def load_config(path, overrides) -> dict:
    user = {}
    if path:
        try:
            with open(path) as fh:
                user = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(user, dict):
            raise ConfigError("config root must be a JSON object")
    cfg = _merge(DEFAULTS, user)
    for item in overrides or ():
        apply_override(cfg, item)
    return cfg


def _params(cfg) -> Parameters:
    p = cfg["params"]
    return Parameters(int(p["d"]), float(p["m1"]), float(p["m2"]), p.get("c_d"))


def _grid(cfg, d) -> RadialGrid:
    g = cfg["grid"]
    n = int(g["n"])
    if n < 8:
        raise ConfigError("grid.n must be at least 8")
    return RadialGrid.uniform(n, float(g["r_max"]), d)


def _solver_cfg(cfg, params, grid) -> SolverConfig:
    s = dict(cfg["solver"])
    known = {"epsilon", "dt_init", "dt_min", "t_end", "cfl", "blowup_linf_factor", "diag_every",
             "steady_tol", "max_steps", "energy_tol"}
    extra = set(s) - known
    if extra:
        raise ConfigError(f"unknown solver keys {sorted(extra)}")
    if "diag_every" in s:
        s["diag_every"] = int(s["diag_every"])
    if "max_steps" in s:
        s["max_steps"] = int(s["max_steps"])
    return SolverConfig(params, grid, **s)


def _out_dir(args) -> Path | None:
    if not args.out:
        return None
    p = Path(args.out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _emit(args, name: str, payload: dict) -> None:
    text = json.dumps(_jsonable(payload), indent=2, sort_keys=True)
    print(text)
    out = _out_dir(args)
    if out:
        (out / name).write_text(text + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    if isinstance(obj, float) and not np.isfinite(obj):
        return str(obj)
    return obj


def verdict_dict(v: cr.Verdict) -> dict:
    return {"schema": SCHEMA, "outcome": v.outcome.value, "theorem": v.theorem.value,
            "evidence": v.evidence}


# ---------------------------------------------------------------------------
# constants


def _random_seed_widths(seed: int, count: int):
    rng = np.random.default_rng(seed)
    return [tuple(float(x) for x in np.round(rng.uniform(0.3, 1.5, size=2), 3))
            for _ in range(count)]


def _objective_spec(cfg, params: Parameters) -> ObjectiveSpec:
    c = cfg["constant"]
    kind = c.get("kind", "CStar")
    try:
        kind = Kind(kind)
    except ValueError:
        raise ConfigError(f"constant.kind must be one of {[k.value for k in Kind]}") from None
    if kind is Kind.CSTAR:
        return ObjectiveSpec.cstar(params.d)
    if kind is Kind.PI:
        if c.get("theta0") is None:
            raise ConfigError("kind=Pi needs constant.theta0")
        return ObjectiveSpec.pi(float(c["theta0"]), params.d)
    return ObjectiveSpec.lam(params, c.get("alpha"), c.get("beta"))


def compute_constant(spec: ObjectiveSpec, cfg: dict, seed: int = 0):
    c = cfg["constant"]
    n, r_max = int(c["n"]), float(c["r_max"])
    seeds = None
    extra = int(c.get("random_seeds") or 0)
    if extra:
        widths = ([(1.0, 1.0), (0.5, 0.5)] if spec.kind is Kind.CSTAR
                  else [(1.0, 1.0), (0.5, 0.5), (0.35, 1.4), (1.4, 0.35)])
        widths += _random_seed_widths(seed, extra)
        seeds = widths
    opts = dict(max_iter=int(c["max_iter"]), tol=float(c["tol"]))
    if seeds is None:
        return estimate_constant(spec, n=n, r_max=r_max, **opts)
    d = spec.params.d
    coarse_grid = RadialGrid.uniform(n, r_max, d)
    fine_grid = RadialGrid.uniform(2 * n, r_max, d)
    coarse = maximize_multi(spec, coarse_grid, seeds=seed_pairs(coarse_grid, seeds), **opts)
    fine = maximize_multi(spec, fine_grid, seeds=seed_pairs(fine_grid, seeds), **opts)
    fine.error_bar = abs(fine.constant - coarse.constant)
    fine.coarse_constant = coarse.constant
    return fine


def result_dict(res, spec: ObjectiveSpec, include_profiles=False) -> dict:
    out = {
        "schema": SCHEMA, "kind": res.kind.value, "constant": res.constant,
        "error_bar": res.error_bar, "coarse_constant": res.coarse_constant,
        "converged": res.converged, "iterations": res.iterations, "residual": res.residual,
        "seed": res.seed, "seed_values": res.seed_values, "n": res.grid.n,
        "profile_r_max": res.grid.r_max, "d": spec.params.d,
        "m1": spec.params.m1, "m2": spec.params.m2,
        "alpha": spec.alpha, "beta": spec.beta, "theta0": spec.theta0,
    }
    if include_profiles:
        out["r"] = res.grid.r.tolist()
        out["h1"] = res.h1.values.tolist()
        out["h2"] = res.h2.values.tolist()
    return out


def cmd_constant(args, cfg) -> int:
    params = _params(cfg)
    spec = _objective_spec(cfg, params)
    res = compute_constant(spec, cfg, args.seed)
    _emit(args, "constant.json", result_dict(res, spec, cfg["constant"].get("include_profiles")))
    if not res.converged:
        log.warning("maximizer did not reach the tolerance; result is a lower bound")
        return EXIT_NOCONV
    return EXIT_OK


# ---------------------------------------------------------------------------
# classify


def _data_pair(cfg, params):
    data = cfg.get("data")
    if not data:
        return None
    grid = _grid(_merge(cfg, {"grid": data.get("grid", {})}), params.d)
    if "negative_energy" in data:
        ne = data["negative_energy"]
        M1, M2 = float(ne["M1"]), float(ne["M2"])
        res = _intersection_maximizer(cfg, params, M1, M2)
        u1, u2, _ = negative_energy_pair(M1, M2, res, float(ne.get("mu", cfg["mu"])), grid,
                                         params)
        return u1, u2
    try:
        u1 = make(DataSpec.from_dict(data["u1"]), grid)
        u2 = make(DataSpec.from_dict(data["u2"]), grid)
    except KeyError as exc:
        raise ConfigError(f"data needs {exc.args[0]!r}") from None
    return u1, u2


def _intersection_maximizer(cfg, params, M1, M2):
    """C_* maximizer for equal masses, Π*_θ0 maximizer otherwise."""
    theta0 = cr.theta0_of(M1, M2, params)
    if abs(theta0 - 0.5) < 1e-12:
        spec = ObjectiveSpec.cstar(params.d)
    else:
        spec = ObjectiveSpec.pi(theta0, params.d)
    c = cfg["constant"]
    return estimate_constant(spec, n=int(c["n"]), r_max=float(c["r_max"]),
                             max_iter=int(c["max_iter"]), tol=float(c["tol"]))


def _constants(cfg) -> dict | str:
    c = cfg.get("constants")
    if c is None:
        return {}
    if c == "compute":
        return "compute"
    if not isinstance(c, dict):
        raise ConfigError("constants must be an object or the string 'compute'")
    return c


def _pi_star(cfg, params, M1, M2):
    consts = _constants(cfg)
    theta0 = cr.theta0_of(M1, M2, params)
    if consts == "compute":
        return _intersection_maximizer(cfg, params, M1, M2).constant
    if consts.get("pi_star") is not None:
        return float(consts["pi_star"])
    if consts.get("c_star") is not None and abs(theta0 - 0.5) < 1e-12:
        return float(consts["c_star"])
    raise MissingConstants("pi_star (or c_star for equal masses) is required; "
                           "set constants or use \"constants\": \"compute\"")


def _lambda_star(cfg, params, alpha, beta):
    consts = _constants(cfg)
    if consts == "compute":
        spec = ObjectiveSpec.lam(params, alpha, beta)
        c = cfg["constant"]
        return estimate_constant(spec, n=int(c["n"]), r_max=float(c["r_max"]),
                                 max_iter=int(c["max_iter"]), tol=float(c["tol"])).constant
    if consts.get("lambda_star") is not None:
        return float(consts["lambda_star"])
    raise MissingConstants("lambda_star is required; set constants or use \"compute\"")


def classify(cfg) -> cr.Verdict:
    params = _params(cfg)
    pair = _data_pair(cfg, params)
    if pair is not None:
        u1, u2 = pair
        M1, M2 = u1.mass, u2.mass
        n1 = lp_norm(u1, params.m1) ** params.m1
        n2 = lp_norm(u2, params.m2) ** params.m2
        F0 = free_energy(u1, u2, params).F
    else:
        try:
            M1, M2 = (float(x) for x in cfg["masses"])
        except (KeyError, TypeError, ValueError):
            raise ConfigError("classify needs 'masses': [M1, M2] or a 'data' block") from None
        norms = cfg.get("norms")
        n1 = n2 = None
        if norms is not None:
            n1, n2 = (float(x) for x in norms)
        F0 = cfg.get("F0")
    if params.is_intersection:
        return cr.theorem13_verdict(M1, M2, _pi_star(cfg, params, M1, M2), params,
                                    tol=float(cfg["tol"]))
    if n1 is None or F0 is None:
        raise ConfigError("off the intersection point classify needs 'norms' and 'F0' or 'data'")
    alpha, beta = cfg.get("alpha"), cfg.get("beta")
    if alpha is None:
        alpha, beta = default_alpha_beta(params)
    elif beta is None:
        beta = cr.beta_from_alpha(float(alpha), params)
    lam = _lambda_star(cfg, params, alpha, beta)
    return cr.theorem12_verdict(M1, M2, n1, n2, float(F0), params, float(alpha), float(beta),
                                lambda_star=lam, theta_scan=int(cfg["theta_scan"]),
                                tol=float(cfg["tol"]), check_regime=bool(cfg["check_regime"]))


def cmd_classify(args, cfg) -> int:
    _emit(args, "verdict.json", verdict_dict(classify(cfg)))
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate


def cmd_simulate(args, cfg) -> int:
    params = _params(cfg)
    grid = _grid(cfg, params.d)
    if not cfg.get("data"):
        raise ConfigError("simulate needs a 'data' block")
    cfg = _merge(cfg, {"data": {"grid": cfg["grid"]}})
    u1, u2 = _data_pair(cfg, params)
    traj = run(u1, u2, _solver_cfg(cfg, params, grid))
    out = _out_dir(args)
    if out:
        traj.to_csv(out / "trajectory.csv")
        traj.to_json(out / "summary.json")
    print(json.dumps(_jsonable(traj.summary()), indent=2, sort_keys=True))
    return EXIT_OVERFLOW if traj.nonfinite else EXIT_OK


# ---------------------------------------------------------------------------
# sweep

SWEEP_COLUMNS = ("d", "m1", "m2", "M1", "M2", "mu", "predicted", "theorem", "sigma", "ratio_R_x0",
                 "observed", "t_final", "linf_ratio", "agreement")


def _sweep_points(cfg):
    sw = cfg.get("sweep")
    if not isinstance(sw, dict):
        raise ConfigError("sweep needs a 'sweep' object")
    p = cfg["params"]
    pts = []
    if "M1" in sw or "M2" in sw:
        for M1 in sw.get("M1", []):
            for M2 in sw.get("M2", []):
                pts.append((float(p["m1"]), float(p["m2"]), float(M1), float(M2)))
    elif "points" in sw:
        for M1, M2 in sw["points"]:
            pts.append((float(p["m1"]), float(p["m2"]), float(M1), float(M2)))
    elif "m1" in sw or "m2" in sw:
        M1, M2 = (float(x) for x in sw.get("masses", [1.0, 1.0]))
        for m1 in sw.get("m1", []):
            for m2 in sw.get("m2", []):
                pts.append((float(m1), float(m2), M1, M2))
    if not pts:
        raise ConfigError("sweep grid is empty")
    if any(not (M1 > 0 and M2 > 0) for *_, M1, M2 in pts):
        raise ConfigError("sweep masses must be positive")
    return sorted(set(pts))


def _observed_label(traj) -> str:
    return traj.stop_reason.value


def _agrees(predicted: str, traj) -> str:
    blew = traj.stop_reason is StopReason.BLOWUP
    if predicted == "Global":
        return "true" if not blew else "false"
    if predicted == "BlowUp":
        return "true" if blew else "false"
    return ""


def _sweep_point(job):
    cfg, point, maximizers = job
    m1, m2, M1, M2 = point
    cfg = _merge(cfg, {"params": {"m1": m1, "m2": m2}})
    params = _params(cfg)
    grid = _grid(cfg, params.d)
    row = dict(d=params.d, m1=m1, m2=m2, M1=M1, M2=M2, sigma="", ratio_R_x0="", mu="")
    if params.is_intersection:
        res = maximizers[cr.theta0_of(M1, M2, params)]
        consts = _constants(cfg)
        pi = consts.get("pi_star") if isinstance(consts, dict) else None
        verdict = cr.theorem13_verdict(M1, M2, float(pi) if pi else res.constant, params,
                                       tol=float(cfg["tol"]))
        row["sigma"] = verdict.evidence["sigma"]
        # widen the scale factor if the rescaled pair would not fit in r_max/2
        widest = max(res.h1.support_radius(), res.h2.support_radius())
        mu = max(float(cfg["mu"]), widest / (0.45 * grid.r_max))
        row["mu"] = mu
        if verdict.outcome is cr.Outcome.BLOWUP:
            u1, u2, _ = negative_energy_pair(M1, M2, res, mu, grid, params)
        else:
            u1 = make(DataSpec.rescaled_maximizer(res.h1, mu, M1), grid)
            u2 = make(DataSpec.rescaled_maximizer(res.h2, mu, M2), grid)
    else:
        data = cfg.get("data") or {"u1": {"family": "Gaussian", "sigma": 0.6},
                                   "u2": {"family": "Gaussian", "sigma": 0.6}}
        u1 = make(DataSpec.from_dict(dict(data["u1"], mass=M1)), grid)
        u2 = make(DataSpec.from_dict(dict(data["u2"], mass=M2)), grid)
        a, b = default_alpha_beta(params)
        lam = _lambda_star(cfg, params, a, b)
        n1 = lp_norm(u1, m1) ** m1
        n2 = lp_norm(u2, m2) ** m2
        verdict = cr.theorem12_verdict(M1, M2, n1, n2, free_energy(u1, u2, params).F, params,
                                       a, b, lambda_star=lam, tol=float(cfg["tol"]),
                                       check_regime=bool(cfg["check_regime"]))
        row["ratio_R_x0"] = verdict.evidence["R"] / verdict.evidence["x0"]
    traj = run(u1, u2, _solver_cfg(cfg, params, grid))
    s = traj.summary()
    row.update(predicted=verdict.outcome.value, theorem=verdict.theorem.value,
               observed=_observed_label(traj), t_final=s["t_final"],
               linf_ratio=s["final_linf"] / s["initial_linf"] if s["initial_linf"] else 0.0,
               agreement=_agrees(verdict.outcome.value, traj))
    return point, row


def _fmt(v):
    if isinstance(v, float):
        return format_float(v)
    return str(v)


def sweep_rows(cfg, parallel: int = 1):
    points = _sweep_points(cfg)
    params = _params(cfg)
    maximizers = {}
    if params.is_intersection:
        for _, _, M1, M2 in points:
            th = cr.theta0_of(M1, M2, params)
            if th not in maximizers:
                maximizers[th] = _intersection_maximizer(cfg, params, M1, M2)
    jobs = [(cfg, pt, maximizers) for pt in points]
    if parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            results = list(pool.map(_sweep_point, jobs))
    else:
        results = [_sweep_point(j) for j in jobs]
    results.sort(key=lambda pr: pr[0])
    return [row for _, row in results]


def sweep_csv(rows) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(SWEEP_COLUMNS)
    for row in rows:
        wr.writerow([_fmt(row[c]) for c in SWEEP_COLUMNS])
    return buf.getvalue()


def cmd_sweep(args, cfg) -> int:
    if args.parallel < 1:
        raise ConfigError("--parallel must be >= 1")
    text = sweep_csv(sweep_rows(cfg, args.parallel))
    out = _out_dir(args)
    if out:
        (out / "sweep.csv").write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify


def cmd_verify(args, cfg) -> int:
    from .checks import BatteryContext, run_battery
    v = cfg["verify"]
    c_d = cfg.get("c_d", v.get("c_d"))
    ctx = BatteryContext(d=int(cfg["params"]["d"]), c_d=None if c_d is None else float(c_d),
                         n=int(v["n"]), seed=args.seed)
    results = run_battery(ctx, only=v.get("only"))
    width = max(len(r.name) for r in results)
    lines = []
    for r in results:
        line = f"{r.name:<{width}}  {'PASS' if r.ok else 'FAIL'}"
        if args.verbose:
            line += "  " + json.dumps(_jsonable(r.detail), sort_keys=True)
        lines.append(line)
    failed = sum(not r.ok for r in results)
    lines.append(f"{len(results) - failed}/{len(results)} passed")
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    out = _out_dir(args)
    if out:
        (out / "verify.txt").write_text(text)
    return EXIT_VERIFY if failed else EXIT_OK


# ---------------------------------------------------------------------------


COMMANDS = {"classify": cmd_classify, "constant": cmd_constant, "simulate": cmd_simulate,
            "sweep": cmd_sweep, "verify": cmd_verify}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON configuration file")
    common.add_argument("--out", metavar="DIR", help="directory for CSV/JSON outputs")
    common.add_argument("--seed", type=int, default=0, help="seed for extra maximizer seeds")
    common.add_argument("--parallel", type=int, default=1, help="worker processes for sweep")
    common.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                        help="set a dotted config key; VALUE is parsed as JSON when possible")
    common.add_argument("-v", "--verbose", action="store_true")
    parser = argparse.ArgumentParser(
        prog="critmass", formatter_class=argparse.RawDescriptionHelpFormatter,
        description="Critical-mass criteria, sharp constants and simulations for the "
                    "two-species degenerate Keller-Segel system.",
        epilog="config defaults:\n" + HELP_DEFAULTS)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=(fn.__doc__ or "").strip() or None,
                       formatter_class=argparse.RawDescriptionHelpFormatter,
                       epilog="config defaults:\n" + HELP_DEFAULTS)
    return parser


def _setup_logging():
    level = os.environ.get("CRITMASS_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = load_config(args.config, args.override)
        return COMMANDS[args.command](args, cfg)
    except MissingConstants as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONSTANTS
    except NoConvergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOCONV
    except NonFiniteState as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OVERFLOW
    except (CritmassError, KeyError, TypeError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
