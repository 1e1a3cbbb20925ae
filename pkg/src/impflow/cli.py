"""Command-line front end: ``impflow {simulate,entropy,check,quotient,example}``.

Every run resolves its settings (config file, then flags) into one JSON
object whose hash, together with the library version and seed, is written
into every output file.  Exit status is 0 on success, 2 for configuration
errors and 3 for numerical failures.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import os
import re
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .entropy import MODES, entropy_sweep, sweep_csv
from .errors import ConsistencyError, DomainError, GrazingError
from .examples import ExampleSpec, get_example, list_examples
from .impulsive import ImpulsiveSystem, check_conditions, impulsive_orbit, in_x_xi
from .quotient import distance_table, distance_table_csv

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
OUTPUT_ENV = "IMPFLOW_OUTPUT_DIR"
COMMANDS = ("simulate", "entropy", "check", "quotient", "example")
SYSTEM_CONSTANTS = ("xi0", "eta", "a", "s0", "xi")

PARAM_KEYS = {
    "simulate": {"start", "T", "dt", "seed"},
    "entropy": {"mode", "T_grid", "epsilon_grid", "delta_grid", "samples", "sampler",
                "time_function", "step", "seed"},
    "check": {"samples", "seed"},
    "quotient": {"pairs", "pool", "pool_on_d", "max_chain", "seed"},
    "example": {"action", "name"},
}


class ConfigError(Exception):
    def __init__(self, msg: str, line: int | None = None, source: str = "<flags>"):
        super().__init__(msg)
        self.line = line
        self.source = source

    def __str__(self) -> str:
        where = self.source if self.line is None else f"{self.source}:{self.line}"
        return f"{where}: {self.args[0]}"


# -- config ------------------------------------------------------------------------


def _key_line(text: str, key: str) -> int | None:
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return None if m is None else text.count("\n", 0, m.start()) + 1


def load_config(path: str) -> dict:
    """Parse a JSON config, reporting syntax and schema errors with line numbers."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", source=path) from None
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg} (column {exc.colno})", exc.lineno,
                          path) from None
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object", 1, path)
    try:
        _validate(cfg)
    except ConfigError as exc:
        key = getattr(exc, "key", None)
        raise ConfigError(exc.args[0], _key_line(text, key) if key else 1, path) from None
    return cfg


def _fail(msg: str, key: str | None = None):
    err = ConfigError(msg)
    err.key = key
    raise err


def _validate(cfg: dict) -> None:
    extra = set(cfg) - {"command", "system", "params"}
    if extra:
        k = sorted(extra)[0]
        _fail(f"unknown top-level key {k!r}", k)
    cmd = cfg.get("command")
    if cmd is not None and cmd not in COMMANDS:
        _fail(f"command must be one of {list(COMMANDS)}", "command")
    system = cfg.get("system")
    if system is not None:
        if isinstance(system, dict):
            bad = set(system) - {"example", "constants"}
            if bad:
                k = sorted(bad)[0]
                _fail(f"unknown system key {k!r}", k)
            if "example" not in system:
                _fail("inline system needs an 'example' base", "system")
            for k in system.get("constants", {}):
                if k not in SYSTEM_CONSTANTS:
                    _fail(f"unknown system constant {k!r}", k)
        elif not isinstance(system, str):
            _fail("system must be an example name or an object", "system")
    params = cfg.get("params", {})
    if not isinstance(params, dict):
        _fail("params must be an object", "params")
    allowed = set().union(*PARAM_KEYS.values()) if cmd is None else PARAM_KEYS[cmd]
    for k in params:
        if k not in allowed:
            _fail(f"unknown parameter {k!r} for command {cmd!r}", k)
    for k in ("T_grid", "epsilon_grid", "delta_grid"):
        if k in params:
            _check_grid(params[k], k)


def _check_grid(values, key: str) -> list[float]:
    if not isinstance(values, list) or not values or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in values):
        _fail(f"{key} must be a nonempty list of numbers", key)
    v = [float(x) for x in values]
    if any(not math.isfinite(x) or x <= 0 for x in v):
        _fail(f"{key} entries must be positive and finite", key)
    d = np.diff(v)
    if len(v) > 1 and not (np.all(d > 0) or np.all(d < 0)):
        _fail(f"{key} must be strictly monotone", key)
    return v


def _floats(text: str, key: str) -> list[float]:
    try:
        return [float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        _fail(f"--{key} expects comma-separated numbers, got {text!r}", key)


def resolve(args: argparse.Namespace) -> dict:
    """Merge a config file with command-line flags (flags win)."""
    cfg = load_config(args.config) if args.config else {}
    if cfg.get("command") not in (None, args.command):
        raise ConfigError(f"config is for {cfg['command']!r}, not {args.command!r}",
                          source=args.config)
    system = cfg.get("system")
    if args.example:
        system = args.example
    params = dict(cfg.get("params", {}))
    flag_map = {
        "seed": "seed", "mode": "mode", "samples": "samples", "sampler": "sampler",
        "time_function": "time_function", "step": "step", "dt": "dt", "pairs": "pairs",
        "pool": "pool", "pool_on_d": "pool_on_d", "max_chain": "max_chain",
    }
    for attr, key in flag_map.items():
        v = getattr(args, attr, None)
        if v is not None:
            params[key] = v
    if getattr(args, "start", None) is not None:
        params["start"] = _floats(args.start, "start")
    if getattr(args, "T", None) is not None:
        T = _floats(args.T, "T")
        if args.command == "simulate":
            if len(T) != 1:
                _fail("simulate takes a single --T", "T")
            params["T"] = T[0]
        else:
            params["T_grid"] = T
    if getattr(args, "eps", None) is not None:
        params["epsilon_grid"] = _floats(args.eps, "eps")
    if getattr(args, "delta", None) is not None:
        params["delta_grid"] = _floats(args.delta, "delta")
    if args.command == "example":
        params["action"] = args.action
        if args.name:
            params["name"] = args.name
    cfg = {"command": args.command, "system": system, "params": params}
    _validate(cfg)
    return cfg


def config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def build_system(system) -> tuple[ExampleSpec, object]:
    if system is None:
        _fail("no system given; use --example or a config 'system'", "system")
    name = system if isinstance(system, str) else system["example"]
    try:
        ex = get_example(name)
    except DomainError as exc:
        _fail(str(exc), "system")
    sys_obj = ex.system
    if isinstance(system, dict) and system.get("constants"):
        if not isinstance(sys_obj, ImpulsiveSystem):
            _fail(f"{name} has no impulsive constants to override", "constants")
        try:
            sys_obj = dataclasses.replace(sys_obj, **system["constants"])
        except DomainError as exc:
            _fail(str(exc), "constants")
    return ex, sys_obj


# -- output --------------------------------------------------------------------------


def _g(v: float) -> str:
    return format(float(v), ".12g")


def _round(obj):
    """Floats to 12 significant digits for stable, readable JSON."""
    if isinstance(obj, float):
        return obj if not math.isfinite(obj) else float(_g(obj))
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return _round(obj.item())
    return obj


def _header(cfg: dict) -> dict:
    return {"version": __version__, "config_hash": config_hash(cfg),
            "seed": cfg["params"].get("seed", 0), "config": cfg}


def _preamble(cfg: dict) -> list[str]:
    h = _header(cfg)
    return [f"impflow {h['version']}", f"config_hash {h['config_hash']}", f"seed {h['seed']}"]


def _write(out: Path, name: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(text)
    return path


def _dump(payload: dict) -> str:
    return json.dumps(_round(payload), indent=2, sort_keys=True, allow_nan=True) + "\n"


# -- commands ------------------------------------------------------------------------


def cmd_simulate(cfg: dict, out: Path) -> dict:
    ex, system = build_system(cfg["system"])
    p = cfg["params"]
    if "start" not in p:
        _fail("simulate needs --start", "start")
    x = np.asarray(p["start"], dtype=float)
    space = ex.space
    if x.shape != (space.dimension,) or not space.contains(x):
        _fail(f"start {tuple(p['start'])} is not a point of {space.space_id}", "start")
    T = float(p.get("T", 10.0))
    dt = float(p.get("dt", 0.05))
    if T <= 0 or dt <= 0:
        _fail("T and dt must be positive", "T")
    grid = np.arange(int(math.floor(T / dt + 1e-9)) + 1) * dt
    if isinstance(system, ImpulsiveSystem):
        orbit = impulsive_orbit(system, x, T)
        jumps = np.asarray(orbit.impulse_times)
        times = np.union1d(grid, jumps)
        values = orbit.evaluate(times)
        flags = np.isin(times, jumps).astype(int)
    else:
        jumps = np.empty(0)
        times = grid
        values = ex.flow.evolve_array(times, x[None, :])
        flags = np.zeros(times.size, dtype=int)
    lines = [f"# {s}" for s in _preamble(cfg)]
    lines.append(",".join(["t"] + [f"x{k}" for k in range(space.dimension)] + ["impulse"]))
    for t, v, f in zip(times, values, flags):
        lines.append(",".join([_g(t)] + [_g(c) for c in v] + [str(f)]))
    path = _write(out, "orbit.csv", "\n".join(lines) + "\n")
    summary = {**_header(cfg), "impulse_times": jumps.tolist(), "rows": int(times.size),
               "files": [path.name]}
    _write(out, "orbit.json", _dump(summary))
    return summary


def _entropy_points(ex: ExampleSpec, p: dict) -> np.ndarray:
    n = int(p.get("samples", ex.defaults.get("samples", 4096)))
    if n < 1:
        _fail("samples must be positive", "samples")
    sampler = p.get("sampler", "grid")
    if sampler == "grid":
        return ex.grid(n)
    if sampler == "random":
        return ex.space.sample(n, int(p.get("seed", 0)))
    _fail("sampler must be 'grid' or 'random'", "sampler")


def cmd_entropy(cfg: dict, out: Path) -> dict:
    ex, system = build_system(cfg["system"])
    p = cfg["params"]
    mode = p.get("mode", "classical")
    if mode not in MODES:
        _fail(f"mode must be one of {list(MODES)}", "mode")
    T_grid = sorted(_check_grid(p.get("T_grid", ex.defaults.get("T_grid")), "T_grid"))
    eps = sorted(_check_grid(p.get("epsilon_grid", [ex.defaults.get("epsilon", 0.1)]),
                             "epsilon_grid"), reverse=True)
    delta = sorted(_check_grid(p.get("delta_grid", [ex.defaults.get("delta", 0.2)]),
                               "delta_grid"), reverse=True)
    fn_name = p.get("time_function", ex.default_time_function)
    if fn_name not in ex.time_functions:
        _fail(f"time function must be one of {list(ex.time_functions)}", "time_function")
    points = _entropy_points(ex, p)
    if isinstance(system, ImpulsiveSystem) and system.d_set is not None:
        system_arg = system
    else:
        system_arg = ex.system
    result = entropy_sweep(system_arg, points, T_grid, eps, delta, mode,
                           ex.time_functions[fn_name], p.get("step"))
    csv_path = _write(out, "entropy.csv", sweep_csv(result.estimates, _preamble(cfg)))
    summary = {**_header(cfg), **result.to_dict(), "example": ex.name, "mode": mode,
               "time_function": fn_name if mode == "tau" else None,
               "slope": result.estimate, "n_points": int(len(points)),
               "files": [csv_path.name, "entropy.json"]}
    _write(out, "entropy.json", _dump(summary))
    return summary


def _impulsive(cfg: dict) -> tuple[ExampleSpec, ImpulsiveSystem]:
    ex, system = build_system(cfg["system"])
    if not isinstance(system, ImpulsiveSystem) or system.d_set is None:
        _fail(f"{ex.name} has no impulses", "system")
    return ex, system


def cmd_check(cfg: dict, out: Path) -> dict:
    _, system = _impulsive(cfg)
    p = cfg["params"]
    report = check_conditions(system, int(p.get("samples", 24)), int(p.get("seed", 0)))
    summary = {**_header(cfg), **report.to_dict(), "a": report.a,
               "lipschitz": report.lipschitz, "files": ["check.json"]}
    _write(out, "check.json", _dump(summary))
    return summary


def _x_xi_samples(system: ImpulsiveSystem, n: int, rng) -> np.ndarray:
    out = []
    while len(out) < n:
        for c in system.space.sample(4 * n, int(rng.integers(2**31))):
            if len(out) < n and in_x_xi(system, c):
                out.append(c)
    return np.array(out)


def cmd_quotient(cfg: dict, out: Path) -> dict:
    _, system = _impulsive(cfg)
    p = cfg["params"]
    seed = int(p.get("seed", 0))
    n_pairs, n_pool = int(p.get("pairs", 20)), int(p.get("pool", 200))
    on_d = int(p.get("pool_on_d", n_pool // 2))
    max_chain = int(p.get("max_chain", 3))
    if min(n_pairs, n_pool, max_chain) < 1 or not 0 <= on_d <= n_pool:
        _fail("pairs, pool and max_chain must be positive, 0 <= pool_on_d <= pool", "pool")
    rng = np.random.default_rng(seed)
    X = _x_xi_samples(system, 2 * n_pairs, rng)
    pool = system.space.sample(n_pool - on_d, int(rng.integers(2**31)))
    if on_d:
        lo, hi = system.d_set.param_interval
        pool = np.concatenate([pool, system.d_set.parametrize(rng.uniform(lo, hi, on_d))])
    rows = distance_table(system, list(zip(X[:n_pairs], X[n_pairs:])), max_chain, pool)
    csv_path = _write(out, "quotient.csv", distance_table_csv(rows, _preamble(cfg)))
    gaps = [r["d_quotient"] - r["d_chain"] for r in rows]
    summary = {
        **_header(cfg),
        "pairs": len(rows),
        "quotient_le_d": all(r["d_quotient"] <= r["d"] + 1e-12 for r in rows),
        "chain_matches_pair_formula": all(abs(g) <= 1e-9 for g in gaps),
        "max_pair_minus_chain": max(gaps),
        "files": [csv_path.name, "quotient.json"],
    }
    _write(out, "quotient.json", _dump(summary))
    return summary


def cmd_example(cfg: dict, out: Path) -> dict:
    p = cfg["params"]
    if p.get("action") == "list":
        return {"examples": list_examples()}
    name = p.get("name") or cfg.get("system")
    if not name:
        _fail("example describe needs a name", "name")
    try:
        return get_example(name if isinstance(name, str) else name["example"]).describe()
    except DomainError as exc:
        _fail(str(exc), "name")


HANDLERS = {"simulate": cmd_simulate, "entropy": cmd_entropy, "check": cmd_check,
            "quotient": cmd_quotient, "example": cmd_example}


# -- argument parsing --------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="impflow", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"impflow {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, example=True):
        if example:
            p.add_argument("--example", help="built-in system name")
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV} or .)")
        p.add_argument("--seed", type=int)

    p = sub.add_parser("simulate", help="write one orbit as CSV")
    common(p)
    p.add_argument("--start", help="initial point, comma separated")
    p.add_argument("--T", help="time horizon")
    p.add_argument("--dt", type=float, help="sampling step")

    p = sub.add_parser("entropy", help="separated-set growth rates")
    common(p)
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--T", help="comma-separated horizons")
    p.add_argument("--eps", help="comma-separated epsilons")
    p.add_argument("--delta", help="comma-separated deltas (tau mode)")
    p.add_argument("--samples", type=int)
    p.add_argument("--sampler", choices=("grid", "random"))
    p.add_argument("--time-function", dest="time_function")
    p.add_argument("--step", type=float, help="time grid step")

    p = sub.add_parser("check", help="verify the hypotheses of an impulsive system")
    common(p)
    p.add_argument("--samples", type=int)

    p = sub.add_parser("quotient", help="quotient distance tables")
    common(p)
    p.add_argument("--pairs", type=int)
    p.add_argument("--pool", type=int)
    p.add_argument("--pool-on-d", dest="pool_on_d", type=int)
    p.add_argument("--max-chain", dest="max_chain", type=int)

    p = sub.add_parser("example", help="list or describe built-in systems")
    common(p, example=False)
    p.add_argument("action", choices=("list", "describe"))
    p.add_argument("name", nargs="?")
    p.set_defaults(example=None)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    out = Path(args.out or os.environ.get(OUTPUT_ENV) or ".")
    try:
        cfg = resolve(args)
        result = HANDLERS[args.command](cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (GrazingError, ConsistencyError) as exc:
        witness = getattr(exc, "witness", None)
        if witness is None and isinstance(exc, GrazingError):
            witness = {"time": exc.time, "point": exc.point}
        print(f"numerical error: {exc}\nwitness: {witness}", file=sys.stderr)
        return EXIT_NUMERIC
    except DomainError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(_dump(result), end="")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
