"""Command-line entry point: ``funclingam {generate,discover,evaluate,benchmark,diagnose}``.

Exit codes: 0 success, 1 runtime or numerical failure, 2 usage or validation
error.  Settings resolve as flags > ``--config`` JSON file > built-in
defaults, and the resolved settings are embedded in every JSON artifact.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from . import io
from .discovery import DiscoveryConfig, discover
from .exceptions import DataError, FuncLingamError, InvalidArgumentError
from .metrics import benchmark, evaluate, gaussianity_scan
from .synthgen import SynthConfig, generate

log = logging.getLogger("funclingam")

DEFAULTS = {
    "n": 300,
    "p": 5,
    "w": 1000,
    "seed": 0,
    "law": "squared",
    "graph": "chain",
    "trials": 50,
    "basis": "bspline",
    "basis_l": 20,
    "basis_order": 4,
    "evr": 0.99,
    "m": None,
    "measure": "hsic",
    "hsic_subsample": 2000,
    "tau": 0.3,
    "ridge": 1e-8,
    "figures": True,
}

# keys that belong in the embedded run config for each command
COMMAND_KEYS = {
    "generate": ["n", "p", "w", "seed", "law", "graph", "out"],
    "discover": ["in", "out", "seed", "basis", "basis_l", "basis_order", "evr", "m",
                 "measure", "hsic_subsample", "tau", "ridge"],
    "evaluate": ["report", "truth", "out"],
    "benchmark": ["n", "p", "w", "trials", "seed", "law", "graph", "basis", "basis_l",
                  "basis_order", "evr", "m", "measure", "hsic_subsample", "tau", "ridge", "out"],
    "diagnose": ["in", "out"],
}


class UsageError(Exception):
    pass


def _int_list(text: str) -> List[int]:
    try:
        vals = [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _add_discovery_flags(sp):
    g = sp.add_argument_group("discovery")
    g.add_argument("--basis", choices=["bspline", "fourier"])
    g.add_argument("--basis-l", type=int, help="number of basis functions L (default 20)")
    g.add_argument("--basis-order", type=int, help="B-spline order (default 4, cubic)")
    g.add_argument("--evr", type=float, help="explained-variance ratio for choosing M (default 0.99)")
    g.add_argument("--m", type=int, help="fixed number of components; overrides --evr")
    g.add_argument("--measure", help="dependence measure (default hsic)")
    g.add_argument("--hsic-subsample", type=int, help="row cap for kernel matrices (default 2000)")
    g.add_argument("--tau", type=float, help="edge threshold on ||T_ij||_F/sqrt(M) (default 0.3)")
    g.add_argument("--ridge", type=float, help="relative ridge in every regression (default 1e-8)")


def _add_synth_flags(sp, multi=False):
    kind = _int_list if multi else int
    sp.add_argument("--n", type=kind, help="sample size" + (" (comma list)" if multi else ""))
    sp.add_argument("--p", type=kind, help="number of functions" + (" (comma list)" if multi else ""))
    sp.add_argument("--w", type=int, help="time points per curve (default 1000)")
    sp.add_argument("--law", choices=["squared", "gaussian"], help="coefficient law")
    sp.add_argument("--graph", choices=["chain", "random"],
                    help="truth DAG; 'random' is experimental")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="funclingam", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON file of defaults; flags take precedence")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", required=False, help="output directory")

    sp = sub.add_parser("generate", help="write a synthetic panel and its ground truth")
    common(sp)
    _add_synth_flags(sp)

    sp = sub.add_parser("discover", help="estimate the causal order and summary graph")
    common(sp)
    sp.add_argument("--in", dest="in", help="panel CSV (sidecar JSON alongside) or its directory")
    _add_discovery_flags(sp)
    sp.add_argument("--no-figures", dest="figures", action="store_false", default=None)

    sp = sub.add_parser("evaluate", help="score a report against a truth file")
    common(sp)
    sp.add_argument("--report", "--in", dest="report", help="report.json from discover")
    sp.add_argument("--truth", help="truth.json from generate")

    sp = sub.add_parser("benchmark", help="repeat generate/discover/evaluate over a grid")
    common(sp)
    _add_synth_flags(sp, multi=True)
    sp.add_argument("--trials", type=int)
    _add_discovery_flags(sp)
    sp.add_argument("--no-figures", dest="figures", action="store_false", default=None)

    sp = sub.add_parser("diagnose", help="marginal normality scan of a panel")
    common(sp)
    sp.add_argument("--in", dest="in", help="panel CSV or its directory")
    sp.add_argument("--no-figures", dest="figures", action="store_false", default=None)
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults, the optional config file and explicit flags."""
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        try:
            filecfg = io.read_json(args.config)
        except DataError as exc:
            raise UsageError(str(exc))
        if not isinstance(filecfg, dict):
            raise UsageError("--config must hold a JSON object")
        # embedded run configs nest under "run_config"
        filecfg = filecfg.get("run_config", filecfg)
        cfg.update({k.replace("-", "_"): v for k, v in filecfg.items() if k != "command"})
    for k, v in vars(args).items():
        if v is not None and k not in ("config", "verbose"):
            cfg[k] = v
    cfg["command"] = args.command
    if args.command == "benchmark":
        for key in ("n", "p"):
            val = cfg[key]
            cfg[key] = [int(val)] if isinstance(val, int) else [int(x) for x in val]
    return cfg


def run_config(cfg: dict) -> dict:
    out = {"command": cfg["command"]}
    for k in COMMAND_KEYS[cfg["command"]]:
        v = cfg.get(k)
        out[k] = str(v) if isinstance(v, Path) else v
    return out


def _require(cfg, *keys):
    for k in keys:
        if cfg.get(k) in (None, ""):
            raise UsageError(f"--{k.replace('_', '-')} is required for {cfg['command']}")


def discovery_config(cfg: dict) -> DiscoveryConfig:
    return DiscoveryConfig(
        basis=cfg["basis"],
        L=int(cfg["basis_l"]),
        order=int(cfg["basis_order"]),
        evr=float(cfg["evr"]),
        M=None if cfg.get("m") is None else int(cfg["m"]),
        tau=float(cfg["tau"]),
        ridge=float(cfg["ridge"]),
        measure=cfg["measure"],
        hsic_subsample=int(cfg["hsic_subsample"]),
        seed=int(cfg["seed"]),
    )


def cmd_generate(cfg: dict) -> int:
    _require(cfg, "out")
    sc = SynthConfig(n=int(cfg["n"]), p=int(cfg["p"]), w=int(cfg["w"]), seed=int(cfg["seed"]),
                     law=cfg["law"], graph=cfg["graph"])
    panel, truth = generate(sc)
    out = Path(cfg["out"])
    rc = run_config(cfg)
    io.write_panel(panel, out / "panel.csv", config=rc)
    io.write_truth(truth, out / "truth.json", config=rc)
    log.info("wrote panel of shape %s to %s", panel.values.shape, out)
    return 0


def cmd_discover(cfg: dict) -> int:
    _require(cfg, "in", "out")
    dc = discovery_config(cfg)
    panel = io.read_panel(cfg["in"])
    report = discover(panel, dc)
    rc = run_config(cfg)
    io.write_report(report, cfg["out"], run_config=rc)
    if cfg["figures"]:
        from .plotting import plot_block_norms

        plot_block_norms(report, Path(cfg["out"]) / "blocks.png")
    print(" -> ".join(report.variable_names[k] for k in report.order.order))
    return 0


def cmd_evaluate(cfg: dict) -> int:
    _require(cfg, "report", "truth", "out")
    pred = io.read_graph(cfg["report"])
    truth = io.read_graph(cfg["truth"])
    if pred.p != truth.p:
        raise UsageError(f"report has p={pred.p} but truth has p={truth.p}")
    m = evaluate(pred, truth)
    obj = m.to_dict()
    obj["run_config"] = run_config(cfg)
    io.write_json(Path(cfg["out"]) / "metrics.json", obj)
    print(f"precision={m.precision:.3f} recall={m.recall:.3f} f1={m.f1:.3f} shd={m.shd}")
    return 0


def cmd_benchmark(cfg: dict) -> int:
    _require(cfg, "out")
    dc = discovery_config(cfg)
    trials = int(cfg["trials"])
    grid = [(n, p) for n in cfg["n"] for p in cfg["p"]]
    synth = {"w": int(cfg["w"]), "law": cfg["law"], "graph": cfg["graph"]}
    # validate the synthetic settings before the long run
    for n, p in grid:
        SynthConfig(n=n, p=p, **synth)
    table = benchmark(grid, trials, seed=int(cfg["seed"]), config=dc, synth=synth,
                      progress=lambda msg: print(msg, file=sys.stderr))
    rc = run_config(cfg)
    io.write_table(table, cfg["out"], run_config=rc)
    if cfg["figures"]:
        from .plotting import plot_benchmark

        plot_benchmark(table, Path(cfg["out"]) / "table.png")
    for c in table.cells:
        s = c.summary()
        print(f"n={c.n} p={c.p} " + " ".join(f"{k}={m:.3f}±{sd:.3f}" for k, (m, sd) in s.items()))
    if table.failed:
        print("error: a cell exceeded the 10% trial failure rate", file=sys.stderr)
        return 1
    return 0


def cmd_diagnose(cfg: dict) -> int:
    _require(cfg, "in", "out")
    panel = io.read_panel(cfg["in"])
    scan = gaussianity_scan(panel)
    io.write_gaussianity(scan, panel, cfg["out"], run_config=run_config(cfg))
    if cfg["figures"]:
        from .plotting import plot_gaussianity

        plot_gaussianity(scan, panel, Path(cfg["out"]) / "gaussianity.png")
    print(f"rejection fraction at 0.05: {scan.rejection_fraction(0.05):.3f}")
    if scan.degenerate.any():
        print(f"degenerate columns: {int(scan.degenerate.sum())}", file=sys.stderr)
    return 0


COMMANDS = {
    "generate": cmd_generate,
    "discover": cmd_discover,
    "evaluate": cmd_evaluate,
    "benchmark": cmd_benchmark,
    "diagnose": cmd_diagnose,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve(args)
        return COMMANDS[args.command](cfg)
    except (UsageError, InvalidArgumentError, DataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FuncLingamError, OSError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
