"""``gm`` command line: run an experiment and write its CSV."""
from __future__ import annotations

import argparse
import json
import sys

from . import harness
from .errors import ComplexMomentumError, UnknownPreset


def _parse_grid(items) -> dict:
    """``--grid name=v1,v2,...`` or ``--grid name=lin:start:stop:n``."""
    import numpy as np

    grids = {}
    for item in items or []:
        key, _, spec = item.partition("=")
        if not key or not spec:
            raise UnknownPreset(f"bad --grid {item!r}")
        if spec.startswith(("lin:", "log:")):
            kind, a, b, n = spec.split(":")
            fn = np.linspace if kind == "lin" else np.logspace
            grids[key] = fn(harness.parse_number(a), harness.parse_number(b), int(n)).tolist()
        else:
            grids[key] = [harness.parse_number(v) for v in spec.split(",") if v]
    return grids


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gm", description="Complex momentum experiments for differentiable games.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, game="dirac"):
        sp.add_argument("--game", default=game, help="dirac | bilinear:<n> | interp:<n>:<gamma_max>:<seed>")
        sp.add_argument("--alpha", type=float, default=None, help="step size")
        sp.add_argument("--grid", action="append", metavar="NAME=VALUES", help="override a sweep grid")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", default=None, help="CSV path (stdout if omitted)")
        sp.add_argument("--option", action="append", metavar="KEY=JSON", help="runner option")
        sp.add_argument("--max-evals", type=int, default=None)
        sp.add_argument("--tol-rel", type=float, default=None)

    sp = sub.add_parser("trajectory", help="iterates of one optimizer")
    common(sp)
    sp.add_argument("--opt", default="cm:0.9:pi/8")
    sp.add_argument("--steps", type=int, default=500)

    sp = sub.add_parser("heatmap", help="convergence over |beta| x arg beta")
    common(sp)
    sp.add_argument("--mode", choices=["simultaneous", "alternating"], default="simultaneous")
    sp.add_argument("--metric", choices=["steps", "grad_evals"], default="steps")

    sp = sub.add_parser("spectrum", help="roots of the augmented dynamics over a grid")
    common(sp, game="bilinear:1")

    sp = sub.add_parser("sweep", help="cooperative to adversarial method comparison")
    common(sp)
    sp.add_argument("--methods", default=",".join(harness.SWEEP_METHODS))
    sp.add_argument("--n", type=int, default=10)

    sp = sub.add_parser("corollary", help="check the two bilinear existence selections")
    sp.add_argument("--out", default=None)

    sp = sub.add_parser("rerun", help="re-execute the config embedded in a CSV")
    sp.add_argument("path")
    sp.add_argument("--out", default=None)
    return p


def config_from_args(ns) -> harness.ExperimentConfig:
    options = {}
    for item in getattr(ns, "option", None) or []:
        key, _, val = item.partition("=")
        try:
            options[key] = json.loads(val)
        except json.JSONDecodeError:
            options[key] = val
    stop = {}
    if getattr(ns, "max_evals", None) is not None:
        stop["max_evals"] = ns.max_evals
    if getattr(ns, "tol_rel", None) is not None:
        stop["tol_rel"] = ns.tol_rel
    cfg = harness.ExperimentConfig(
        experiment=ns.command,
        game=getattr(ns, "game", "bilinear:1"),
        alpha=getattr(ns, "alpha", None),
        grids=_parse_grid(getattr(ns, "grid", None)),
        stop=stop,
        seed=getattr(ns, "seed", 0),
        out=ns.out,
        options=options,
    )
    if ns.command == "trajectory":
        cfg.optimizers = [ns.opt]
        cfg.stop["max_steps"] = ns.steps
    elif ns.command == "heatmap":
        cfg.options.setdefault("mode", ns.mode)
        cfg.options.setdefault("metric", ns.metric)
    elif ns.command == "sweep":
        cfg.optimizers = [m for m in ns.methods.split(",") if m]
        cfg.options.setdefault("n", ns.n)
    return cfg


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        if ns.command == "rerun":
            result = harness.rerun(ns.path, ns.out)
        else:
            cfg = config_from_args(ns)
            result = harness.RUNNERS[cfg.experiment](cfg)
    except (ComplexMomentumError, OSError) as exc:
        print(f"gm: {exc}", file=sys.stderr)
        return 2
    if not result.config.out:
        sys.stdout.write(result.to_csv())
    if result.config.experiment == "corollary" and not result.summary.get("passed", False):
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
