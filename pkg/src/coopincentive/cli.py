"""Command-line front end: theory tables, ODE runs, Monte Carlo ensembles,
protocol comparisons and initial-condition sweeps.

Parameters come from an INI file with one section per concern
(``[game]``, ``[selection]``, ``[model]``, ``[target]``, ``[graph]``,
``[ode]``, ``[mc]``, ``[run]``, ``[compare]``, ``[sweep]``); command-line
flags override the file. Every output is a deterministic function of the
configuration and master seed.
"""

from __future__ import annotations

import argparse
import ast
import configparser
import json
import logging
import math
import operator
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .game import GameParams, Incentive, IncentiveKind, Selection
from .graphs import FAMILIES, GraphSpec, generate
from .mc import SimulationConfig, ensemble, run
from .meanfield import ModelParams, UpdateRule, cooperation_threshold, drift_rate, integrate
from .optimal import (
    KINDS,
    NoInteriorOptimum,
    Target,
    UnreachableTarget,
    cost_constant,
    cost_closed_form,
    optimal_mu,
    theory,
)

log = logging.getLogger("coopincentive")

EXIT_OK, EXIT_CONFIG, EXIT_UNREACHABLE = 0, 2, 3
MODES = ("theory", "ode", "mc", "compare", "sweep-p0")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    mode: str
    params: ModelParams
    target: Target
    graph: GraphSpec
    rule: UpdateRule | None = None
    inc: Incentive = field(default_factory=Incentive)
    seed: int = 0
    runs: int = 200
    parallelism: int = 1
    mc_t_max: float = 5000.0
    record_stride: float = 1.0
    ode_dt: float = 0.01
    ode_t_max: float = 2000.0
    full_pair: bool = False
    protocols: list[str] = field(default_factory=list)
    p0_grid: list[float] = field(default_factory=list)
    sweep_mc: bool = False
    out: str = "out/"

    def sim_config(self, inc: Incentive, p0: float | None = None) -> SimulationConfig:
        return SimulationConfig(
            graph=self.graph, rule=self.rule or UpdateRule.DB, game=self.params.game, inc=inc,
            sel=self.params.sel, p0=self.target.p0 if p0 is None else p0, delta=self.target.delta,
            t_max=self.mc_t_max, seed=self.seed, record_stride=self.record_stride,
        )


# --- config parsing -----------------------------------------------------------------------


def _floats(text: str) -> list[float]:
    """``0.1, 0.2, 0.3`` or ``start:stop:step`` (stop inclusive)."""
    text = text.strip()
    if not text:
        return []
    if ":" in text and "," not in text:
        start, stop, step = (float(x) for x in text.split(":"))
        if step <= 0:
            raise ConfigError("grid step must be positive")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 12) for i in range(n)]
    return [float(x) for x in text.split(",") if x.strip()]


def _protocol_list(text: str) -> list[str]:
    return [p.strip() for p in text.replace("\n", ",").split(",") if p.strip()]


def load_config(args: argparse.Namespace) -> RunConfig:
    cp = configparser.ConfigParser()
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        cp.read(path)

    def get(section, key, conv=str, default=None):
        if cp.has_option(section, key):
            raw = cp.get(section, key)
            try:
                return conv(raw)
            except ValueError as exc:
                raise ConfigError(f"[{section}] {key} = {raw!r}: {exc}") from None
        return default

    def boolean(raw):
        key = raw.strip().lower()
        if key not in cp.BOOLEAN_STATES:
            raise ValueError("not a boolean")
        return cp.BOOLEAN_STATES[key]

    game = GameParams(b=get("game", "b", float, 2.0), c=get("game", "c", float, 1.0))
    sel = Selection(omega=get("selection", "omega", float, 0.01))
    params = ModelParams(game, sel, k=get("model", "k", int, 4), n=get("model", "n", int, 100))
    target = Target(p0=get("target", "p0", float, 0.5), delta=get("target", "delta", float, 0.01))

    family = get("graph", "family", str, "lattice2d")
    if family not in FAMILIES:
        raise ConfigError(f"[graph] family must be one of {FAMILIES}, got {family!r}")
    graph = GraphSpec(
        family=family,
        n=get("graph", "n", int, params.n),
        L=get("graph", "L", int, 10),
        k=get("graph", "k", int, params.k),
        mean_degree=get("graph", "mean_degree", float, 4.0),
        base_degree=get("graph", "base_degree", int, 4),
        rewire_p=get("graph", "rewire_p", float, 0.1),
        m0=get("graph", "m0", int, 6),
        m=get("graph", "m", int, 2),
        seed=get("graph", "seed", int, 0),
    )
    graph.validate()

    rule = args.rule or get("run", "rule", str)
    inc_text = args.incentive or get("run", "incentive", str)
    cfg = RunConfig(
        mode=args.mode,
        params=params,
        target=target,
        graph=graph,
        rule=UpdateRule.parse(rule) if rule else None,
        inc=Incentive.parse(inc_text) if inc_text else Incentive(),
        seed=args.seed if args.seed is not None else get("mc", "seed", int, 0),
        runs=args.runs if args.runs is not None else get("mc", "runs", int, 200),
        parallelism=get("mc", "parallelism", int, 1),
        mc_t_max=get("mc", "t_max", float, 5000.0),
        record_stride=get("mc", "record_stride", float, 1.0),
        ode_dt=get("ode", "dt", float, 0.01),
        ode_t_max=get("ode", "t_max", float, 2000.0),
        full_pair=get("ode", "full_pair", boolean, False),
        protocols=args.protocol or get("compare", "protocols", _protocol_list, []),
        p0_grid=get("sweep", "p0", _floats, []) or _floats("0.1:0.9:0.1"),
        sweep_mc=get("sweep", "mc", boolean, False),
        out=args.out if args.out is not None else get("run", "out", str, "out/"),
    )
    if cfg.runs < 1:
        raise ConfigError("runs must be >= 1")
    if cfg.parallelism < 1:
        raise ConfigError("parallelism must be >= 1")
    return cfg


# --- protocol expressions -----------------------------------------------------------------

_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv}


def _eval(node, names):
    if isinstance(node, ast.Expression):
        return _eval(node.body, names)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return float(node.value)
    if isinstance(node, ast.Name) and node.id in names:
        return names[node.id]
    if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
        return _OPS[type(node.op)](_eval(node.left, names), _eval(node.right, names))
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
        return -_eval(node.operand, names)
    raise ConfigError("protocol amounts may use numbers, + - * /, mu_star and threshold")


def parse_protocol(text: str, rule: UpdateRule, params: ModelParams) -> Incentive:
    """``reward:1.5*mu_star`` -> Incentive. ``mu_star`` and ``threshold`` refer to ``rule``."""
    kind, sep, expr = text.partition(":")
    if not sep:
        raise ConfigError(f"protocol {text!r} must look like reward:AMOUNT or punish:AMOUNT")
    names = {"threshold": cooperation_threshold(rule, params)}
    try:
        names["mu_star"] = optimal_mu(rule, params)
    except NoInteriorOptimum:
        if "mu_star" in expr:
            raise
    try:
        tree = ast.parse(expr.strip(), mode="eval")
    except SyntaxError:
        raise ConfigError(f"cannot parse protocol amount {expr!r}") from None
    return Incentive.parse(f"{kind}:{_eval(tree, names)!r}")


# --- commands -----------------------------------------------------------------------------


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    log.info("wrote %s", path)


def _out(cfg: RunConfig, name: str) -> Path:
    p = cfg.out
    return Path(p + name) if not p.endswith(("/", "\\")) else Path(p) / name


def _g(v) -> str:
    return "" if v is None else f"{v:.10g}"


def cmd_theory(cfg: RunConfig) -> int:
    rules = [cfg.rule] if cfg.rule else list(UpdateRule)
    header = "rule,kind,threshold,mu_star,beta,J,t_f,note"
    rows = [header]
    for rule in rules:
        res = theory(rule, cfg.params, cfg.target)
        for kind in KINDS:
            J = res.j_reward if kind is IncentiveKind.REWARD else res.j_punish
            rows.append(",".join([rule.value, kind.value, _g(res.threshold), _g(res.mu_star),
                                  _g(res.beta), _g(J), _g(res.t_f), _csv_text(res.note)]))
    text = "\n".join(rows) + "\n"
    sys.stdout.write(text)
    _write(_out(cfg, "theory.csv"), text)
    return EXIT_OK


def _csv_text(s: str) -> str:
    return '"' + s.replace('"', "'") + '"' if s else ""


def _require_reachable(rule: UpdateRule, inc: Incentive, params: ModelParams) -> None:
    if drift_rate(rule, inc.mu, params) <= 0:
        raise UnreachableTarget(
            f"{inc} under {rule.name}: incentive must exceed threshold {cooperation_threshold(rule, params):g}"
        )


def cmd_ode(cfg: RunConfig) -> int:
    rule = cfg.rule or UpdateRule.DB
    _require_reachable(rule, cfg.inc, cfg.params)
    traj = integrate(rule, cfg.inc, cfg.target.p0, cfg.params, full_pair=cfg.full_pair,
                     dt=cfg.ode_dt, t_max=cfg.ode_t_max, delta=cfg.target.delta)
    _write(_out(cfg, "ode.csv"), traj.to_csv())
    print(f"rule={rule.value} incentive={cfg.inc} reached={traj.reached} t_end={traj.t_end:.10g}")
    if not traj.reached:
        log.warning("target not reached before t_max=%g", cfg.ode_t_max)
    return EXIT_OK


def cmd_mc(cfg: RunConfig) -> int:
    sim = cfg.sim_config(cfg.inc)
    g = sim.build_graph()
    if cfg.runs == 1:
        traj = run(sim, g)
        _write(_out(cfg, "mc_trajectory.csv"), traj.to_csv())
        print(f"outcome={traj.outcome.value} t_end={traj.t_end:.10g} cost={traj.cumulative_cost[-1]:.10g}")
        return EXIT_OK
    summary = ensemble(sim, cfg.runs, cfg.parallelism, graph=g)
    _write(_out(cfg, "mc_binned.csv"), summary.binned_csv())
    _write(_out(cfg, "mc_summary.txt"), summary.summary_text())
    _write(_out(cfg, "mc_summary.json"), json.dumps(summary.as_dict(), indent=2, allow_nan=True) + "\n")
    sys.stdout.write(summary.summary_text())
    return EXIT_OK


def _label(inc: Incentive) -> str:
    return f"{inc.kind.value}_{inc.mu:.6g}".replace(".", "p")


def cmd_compare(cfg: RunConfig) -> int:
    rule = cfg.rule or UpdateRule.DB
    if len(cfg.protocols) < 2:
        raise ConfigError("compare needs at least two protocols ([compare] protocols or --protocol)")
    incs = [parse_protocol(p, rule, cfg.params) for p in cfg.protocols]
    bad = [str(i) for i in incs if i.kind is IncentiveKind.NONE or drift_rate(rule, i.mu, cfg.params) <= 0]
    if bad:
        raise UnreachableTarget(
            f"protocols at or below the {rule.name} threshold "
            f"{cooperation_threshold(rule, cfg.params):g}: {', '.join(bad)}"
        )
    g = generate(cfg.graph)
    if g.n != cfg.params.n:
        log.warning("graph has N=%d but [model] n=%d; theory costs use the model value", g.n, cfg.params.n)
    rows = ["protocol,kind,mu,ode_t_f,theory_cost,mc_success_rate,mc_mean_tf,mc_sd_tf,mc_mean_cost,mc_sd_cost"]
    records = []
    for i, inc in enumerate(incs):
        tag = f"compare_{i}_{_label(inc)}"
        traj = integrate(rule, inc, cfg.target.p0, cfg.params, dt=cfg.ode_dt, t_max=cfg.ode_t_max,
                         delta=cfg.target.delta)
        _write(_out(cfg, f"{tag}_ode.csv"), traj.to_csv())
        # same master seed for every protocol: paired ensembles
        summary = ensemble(cfg.sim_config(inc), cfg.runs, cfg.parallelism, graph=g)
        _write(_out(cfg, f"{tag}_mc.csv"), summary.binned_csv())
        j = float(cost_constant(rule, inc.kind, inc.mu, cfg.params, cfg.target))
        rows.append(",".join([cfg.protocols[i], inc.kind.value, _g(inc.mu), _g(traj.t_end), _g(j),
                              _g(summary.success_rate), _g(summary.mean_tf), _g(summary.sd_tf),
                              _g(summary.mean_cost), _g(summary.sd_cost)]))
        records.append({"protocol": cfg.protocols[i], "kind": inc.kind.value, "mu": inc.mu,
                        "ode_t_f": traj.t_end, "theory_cost": j, **summary.as_dict()})
    text = "\n".join(rows) + "\n"
    _write(_out(cfg, "compare_summary.csv"), text)
    _write(_out(cfg, "compare_summary.json"), json.dumps(records, indent=2) + "\n")
    sys.stdout.write(text)
    return EXIT_OK


def cmd_sweep_p0(cfg: RunConfig) -> int:
    rule = cfg.rule or UpdateRule.DB
    delta = cfg.target.delta
    optimal_mu(rule, cfg.params)
    header = "p0,J_reward,J_punish" + (",mc_J_reward,mc_J_punish" if cfg.sweep_mc else "")
    rows = [header]
    for p0 in cfg.p0_grid:
        try:
            target = Target(p0, delta)
        except ValueError as exc:
            log.warning("skipping p0=%g: %s", p0, exc)
            continue
        jr = cost_closed_form(rule, IncentiveKind.REWARD, cfg.params, target)
        jp = cost_closed_form(rule, IncentiveKind.PUNISH, cfg.params, target)
        vals = [p0, jr, jp]
        if cfg.sweep_mc:
            mu = optimal_mu(rule, cfg.params)
            for kind in KINDS:
                try:
                    s = ensemble(cfg.sim_config(Incentive(kind, mu), p0), cfg.runs, cfg.parallelism)
                    vals.append(s.mean_cost)
                except ValueError as exc:
                    log.warning("skipping MC at p0=%g: %s", p0, exc)
                    vals.append(math.nan)
        rows.append(",".join(_g(v) for v in vals))
    text = "\n".join(rows) + "\n"
    _write(_out(cfg, "sweep_p0.csv"), text)
    sys.stdout.write(text)
    print(f"# crossover at p0 = delta = {delta:g}: punishment cheaper for p0 > delta, reward for p0 < delta")
    return EXIT_OK


COMMANDS = {"theory": cmd_theory, "ode": cmd_ode, "mc": cmd_mc, "compare": cmd_compare, "sweep-p0": cmd_sweep_p0}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="coopincentive", description=__doc__.split("\n\n")[0])
    ap.add_argument("mode", choices=MODES)
    ap.add_argument("--config", help="INI parameter file")
    ap.add_argument("--rule", choices=[r.value for r in UpdateRule])
    ap.add_argument("--incentive", help="reward:MU, punish:MU or none")
    ap.add_argument("--seed", type=int, help="master seed for Monte Carlo")
    ap.add_argument("--runs", type=int, help="Monte Carlo ensemble size")
    ap.add_argument("--out", help="output path prefix (a trailing / means a directory)")
    ap.add_argument("--protocol", action="append", help="compare protocol, e.g. reward:1.5*mu_star (repeatable)")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args)
        return COMMANDS[cfg.mode](cfg)
    except UnreachableTarget as exc:
        log.error("unreachable target: %s", exc)
        return EXIT_UNREACHABLE
    except (ValueError, configparser.Error) as exc:
        log.error("invalid configuration: %s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
