"""Command-line front end.

    oligosim <command> --config <path> [--out <path>] [--set key=value ...] [--seed <n>]

Market keys (N, I, W, U0, gamma, lambda_max, tol_C) and command options
share one flat YAML/JSON mapping; ``--set`` entries override the file.
Exit status is 0 on success, 2 for configuration errors and 3 for
numerical failures.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np
import yaml

from . import dynamics, figures, pricing, regulation
from .errors import ConfigError, InvalidParameterError, OligosimError
from .market import (CONFIG_KEYS, MarketConfig, PriceProfile, market_from_mapping, parse_yaml,
                     read_config_file)
from .stationary import stationary_point

COMMANDS = ("simulate", "stationary", "best-response", "equilibrium", "sweep", "figure")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

# option -> commands that use it; keys outside this table and CONFIG_KEYS are rejected
OPTIONS = {
    "prices": {"simulate", "stationary", "best-response"},
    "initial_state": {"simulate"},
    "dt": {"simulate"},
    "t_max": {"simulate"},
    "settle_tol": {"simulate"},
    "record_every": {"simulate"},
    "operator": {"best-response"},
    "initial_prices": {"equilibrium"},
    "schedule": {"equilibrium", "sweep"},
    "br_tol": {"equilibrium"},
    "max_rounds": {"equilibrium"},
    "mode": {"equilibrium", "sweep"},
    "parameter": {"sweep"},
    "grid": {"sweep"},
    "displayed_formula": {"sweep"},
    "objective": {"sweep"},
    "target": {"sweep"},
    "bracket": {"sweep"},
    "figure": {"figure"},
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="oligosim", description=__doc__.split("\n")[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("figure_id", nargs="?", help="figure id for the figure command")
    p.add_argument("--config", help="YAML or JSON config file")
    p.add_argument("--out", help="output CSV path (default: stdout)")
    p.add_argument("--set", dest="overrides", action="append", default=[],
                   metavar="KEY=VALUE", help="override a config entry (repeatable)")
    p.add_argument("--seed", type=int, help="seed for a random initial state (simulate)")
    return p


def parse_overrides(items) -> dict:
    out = {}
    for item in items:
        key, sep, raw = item.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(item, "expected KEY=VALUE")
        try:
            out[key] = parse_yaml(raw)
        except yaml.YAMLError:
            raise ConfigError(key, f"cannot parse value {raw!r}") from None
    return out


def _options(command: str, data: dict) -> dict:
    opts = {}
    for key, value in data.items():
        if key in CONFIG_KEYS:
            continue
        if key not in OPTIONS:
            raise ConfigError(key, "unknown config key")
        # one config file may serve several commands; foreign options are ignored
        if command in OPTIONS[key]:
            opts[key] = value
    return opts


def _float(opts, key, default=None):
    v = opts.get(key, default)
    if v is None:
        raise ConfigError(key, "missing required option")
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(key, f"expected a number, got {v!r}")
    return float(v)


def _int(opts, key, default):
    v = opts.get(key, default)
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(key, f"expected an integer, got {v!r}")
    return v


def _vector(opts, key, length):
    v = opts.get(key)
    if v is None:
        raise ConfigError(key, "missing required option")
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        v = [v] * length
    if not isinstance(v, list) or len(v) != length:
        raise ConfigError(key, f"expected a list of {length} numbers, got {v!r}")
    if any(isinstance(a, bool) or not isinstance(a, (int, float)) for a in v):
        raise ConfigError(key, f"entries must be numbers: {v!r}")
    return [float(a) for a in v]


def _prices(opts, cfg: MarketConfig) -> PriceProfile:
    try:
        return PriceProfile(tuple(_vector(opts, "prices", cfg.I)), cfg.lambda_max)
    except InvalidParameterError as exc:
        raise ConfigError("prices", str(exc)) from None


def _schedule(opts, I: int):
    s = opts.get("schedule", "round-robin")
    if s == "round-robin":
        return pricing.round_robin(I)
    if isinstance(s, str) and s.startswith("first:"):
        try:
            k = int(s.split(":", 1)[1])
        except ValueError:
            raise ConfigError("schedule", f"bad operator in {s!r}") from None
        if not 1 <= k <= I:
            raise ConfigError("schedule", f"operator {k} outside 1..{I}")
        return pricing.first_mover(k - 1, I)
    if isinstance(s, list) and s and all(isinstance(k, int) and 1 <= k <= I for k in s):
        return [k - 1 for k in s]
    raise ConfigError("schedule", f"use 'round-robin', 'first:k' or a list of operators, got {s!r}")


def _grid(opts):
    g = opts.get("grid")
    if isinstance(g, dict):
        try:
            start, stop, num = float(g["start"]), float(g["stop"]), int(g["num"])
        except (KeyError, TypeError, ValueError):
            raise ConfigError("grid", "mapping form needs numeric start, stop, num") from None
        return [float(v) for v in np.linspace(start, stop, num)]
    if isinstance(g, list) and g and all(isinstance(v, (int, float)) for v in g):
        return [float(v) for v in g]
    raise ConfigError("grid", f"expected a list or {{start, stop, num}}, got {g!r}")


def _emit(writer, obj, path, stdout):
    writer(obj, path if path else stdout)


# -- commands ----------------------------------------------------------------

def cmd_simulate(cfg, opts, args, stdout):
    prices = _prices(opts, cfg)
    if "initial_state" in opts:
        try:
            start = dynamics.PopulationState.from_array(_vector(opts, "initial_state", cfg.I + 1))
        except InvalidParameterError as exc:
            raise ConfigError("initial_state", str(exc)) from None
    elif args.seed is not None:
        rng = np.random.default_rng(args.seed)
        start = dynamics.PopulationState.from_array(rng.dirichlet(np.ones(cfg.I + 1)))
    else:
        start = dynamics.PopulationState.uniform(cfg.I)
    traj = dynamics.integrate(
        start, prices, cfg,
        dt=_float(opts, "dt", dynamics.DEFAULT_DT),
        t_max=_float(opts, "t_max", dynamics.DEFAULT_T_MAX),
        settle_tol=_float(opts, "settle_tol", dynamics.DEFAULT_SETTLE_TOL),
        record_every=_int(opts, "record_every", 1))
    _emit(dynamics.write_trajectory_csv, traj, args.out, stdout)
    final = traj.final
    msg = f"t={traj.t[-1]:g} settled={traj.settled} x={list(final.x)} x0={final.x0:.6g}"
    print(msg, file=stdout if args.out else sys.stderr)


def cmd_stationary(cfg, opts, args, stdout):
    prices = _prices(opts, cfg)
    point = stationary_point(prices, None, cfg)
    x = ", ".join(f"{v:.6g}" for v in point.state.x)
    U = ", ".join(f"{v:.6g}" for v in point.utilities)
    stdout.write(f"case {point.case_label.value}: S={point.S:.6g} x=({x}) "
                 f"x0={point.state.x0:.5f} U=({U})\n")


def cmd_best_response(cfg, opts, args, stdout):
    prices = _prices(opts, cfg)
    k = _int(opts, "operator", 1)
    if not 1 <= k <= cfg.I:
        raise ConfigError("operator", f"operator {k} outside 1..{cfg.I}")
    i = k - 1
    others = prices.others(i)
    out = pricing.best_response(i, others, cfg.alpha, cfg.lambda_max)
    rev = pricing.revenue(i, prices.with_price(i, out.price), cfg.alpha, cfg.N)
    stdout.write(f"operator {k}: price={out.price:.10g} branch={out.branch} "
                 f"mu*={out.mu_star:.10g} l0={out.l0:.10g} revenue={rev:.10g}\n")


def _summary(eq: pricing.EquilibriumResult) -> str:
    lam = ", ".join(f"{v:.10g}" for v in eq.prices.lam)
    R = ", ".join(f"{v:.10g}" for v in eq.revenues)
    tag = f" interval={eq.interval}" if eq.interval else ""
    if eq.unique is not None:
        tag += f" unique={eq.unique}"
    return (f"prices=({lam}) revenues=({R}) total={eq.total_revenue:.10g} "
            f"region={eq.region.region.value} rounds={eq.rounds} "
            f"converged={eq.converged}{tag}\n")


def cmd_equilibrium(cfg, opts, args, stdout):
    mode = opts.get("mode", "dynamics")
    if mode == "symmetric":
        eq = pricing.symmetric_ne(cfg.alpha, cfg.I, cfg.N, cfg.tol_C)
    elif mode == "dynamics":
        start = _vector(opts, "initial_prices", cfg.I) if "initial_prices" in opts else [1.0] * cfg.I
        eq = pricing.best_response_dynamics(
            start, cfg.alpha, cfg.N, order=_schedule(opts, cfg.I),
            br_tol=_float(opts, "br_tol", pricing.DEFAULT_BR_TOL),
            max_rounds=_int(opts, "max_rounds", pricing.DEFAULT_MAX_ROUNDS),
            lambda_max=cfg.lambda_max, tol_C=cfg.tol_C)
    else:
        raise ConfigError("mode", f"use 'dynamics' or 'symmetric', got {mode!r}")
    if args.out:
        pricing.write_trace_csv(eq, args.out)
    stdout.write(_summary(eq))


def cmd_sweep(cfg, opts, args, stdout):
    parameter = opts.get("parameter", "alpha")
    if parameter not in regulation.SWEEP_PARAMETERS:
        raise ConfigError("parameter", f"use one of {regulation.SWEEP_PARAMETERS}")
    if "target" in opts:
        objective = opts.get("objective", "total_revenue")
        if objective not in regulation.OBJECTIVES:
            raise ConfigError("objective", f"use one of {regulation.OBJECTIVES}")
        bracket = _vector(opts, "bracket", 2)
        value = regulation.find_parameter(cfg, parameter, objective, _float(opts, "target"),
                                          tuple(bracket))
        tuned = regulation.with_parameter(cfg, parameter, value)
        rep = regulation.efficiency_report(tuned, param_value=value)
        stdout.write(f"{parameter}={value:.12g} alpha={rep.alpha:.12g} region={rep.region} "
                     f"R_total={rep.R_total:.12g} U_agg={rep.U_agg:.12g} J0={rep.J0:.12g}\n")
        return
    mode = opts.get("mode", "symmetric")
    if mode not in ("symmetric", "dynamics"):
        raise ConfigError("mode", f"use 'symmetric' or 'dynamics', got {mode!r}")
    order = _schedule(opts, cfg.I) if mode == "dynamics" else None
    try:
        series = regulation.sweep(cfg, parameter, _grid(opts), mode=mode, order=order,
                                  displayed_formula=bool(opts.get("displayed_formula", False)))
    except InvalidParameterError as exc:
        if "grid" in str(exc):
            raise ConfigError("grid", str(exc)) from None
        raise
    _emit(regulation.write_sweep_csv, series, args.out, stdout)


def cmd_figure(name, args, stdout):
    if name not in figures.FIGURES:
        raise ConfigError("figure", f"unknown figure {name!r}; choose from {figures.FIGURES}")
    _emit(figures.write_figure_csv, figures.figure(name), args.out, stdout)


HANDLERS = {"simulate": cmd_simulate, "stationary": cmd_stationary,
            "best-response": cmd_best_response, "equilibrium": cmd_equilibrium,
            "sweep": cmd_sweep}


def run(argv=None, stdout=None) -> int:
    stdout = stdout if stdout is not None else sys.stdout
    args = build_parser().parse_args(argv)
    try:
        data = read_config_file(args.config) if args.config else {}
        data.update(parse_overrides(args.overrides))
        if args.command == "figure":
            name = args.figure_id or data.get("figure")
            if name is None:
                raise ConfigError("figure", f"give a figure id, one of {figures.FIGURES}")
            cmd_figure(name, args, stdout)
            return EXIT_OK
        if args.figure_id is not None:
            raise ConfigError(args.figure_id, f"unexpected argument for {args.command}")
        if not args.config and not data:
            raise ConfigError("config", f"{args.command} needs --config or --set entries")
        cfg = market_from_mapping(data)
        opts = _options(args.command, data)
        HANDLERS[args.command](cfg, opts, args, stdout)
    except ConfigError as exc:
        print(f"oligosim: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvalidParameterError as exc:
        where = f"{exc.key}: " if exc.key else ""
        print(f"oligosim: invalid parameter: {where}{exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OligosimError as exc:
        print(f"oligosim: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"oligosim: cannot write output: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
