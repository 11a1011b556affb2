"""Command-line entry point: ``ccest {run,preset,plot,diag}``.

Failures print one line ``error: kind=<Type> message=<json string>`` to
stderr and exit nonzero (2 for bad input, 1 for failed runs).
"""
import argparse
import json
import logging
import sys

from .. import bases as bz
from .. import solvers
from ..mcframe import make_cp_ofdm
from . import config as cfgmod
from . import plot, presets, sweep


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _u64(text):
    v = int(text, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def _positive(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser():
    p = _Parser(prog="ccest", description="Compressive doubly selective channel estimation experiments.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a sweep from a config file")
    r.add_argument("--config", required=True)
    r.add_argument("--seed", type=_u64)
    r.add_argument("--workers", type=_positive)
    r.add_argument("--out")

    s = sub.add_parser("preset", help="run (or dump) a named preset")
    s.add_argument("--name", required=True, choices=sorted(presets.PRESETS))
    s.add_argument("--seed", type=_u64)
    s.add_argument("--workers", type=_positive)
    s.add_argument("--trials", type=_positive, help="override the preset trial count")
    s.add_argument("--out")
    s.add_argument("--dump", action="store_true", help="print the preset config and exit")

    g = sub.add_parser("plot", help="SVG line chart from a sweep CSV")
    g.add_argument("--in", dest="inp", required=True)
    g.add_argument("--out", required=True)
    g.add_argument("--metric", default="mse_db", choices=("mse_db", "ber", "ref_ber"))

    d = sub.add_parser("diag", help="coherence and pilot-count bound for a config")
    d.add_argument("--config")
    d.add_argument("--preset", choices=sorted(presets.PRESETS))
    d.add_argument("--gamma", type=float, default=0.5, help="RIP constant")
    d.add_argument("--eta", type=float, default=0.01, help="failure probability")
    d.add_argument("--C", type=float, default=1.0, help="universal constant of the bound")
    return p


def _overrides(cfg, args):
    upd = {}
    if getattr(args, "seed", None) is not None:
        upd["sweep.seed"] = args.seed
    if getattr(args, "workers", None) is not None:
        upd["sweep.workers"] = args.workers
    if getattr(args, "trials", None) is not None:
        upd["sweep.trials"] = args.trials
    if getattr(args, "out", None):
        upd["output.path"] = args.out
    return cfg.with_values(upd) if upd else cfg


def _run(cfg, out):
    table = sweep.run_sweep(cfg)
    path = sweep.emit_csv(table, cfg["output.path"])
    print(f"wrote {path} rows={len(table.rows)} trials={table.total} aborted={table.aborted}", file=out)
    return 0


def _diag(cfg, args, out):
    frame = make_cp_ofdm(cfg.K, cfg.N, cfg["system.L"])
    J = cfg["system.L"] // cfg["system.delta_L"]
    D = cfg.K // cfg["system.delta_K"]
    Q = cfg["pilots.count"]
    S = cfg["solver.sparsity"] or solvers.sparsity_estimate(Q, J * D)
    print(f"J={J} D={D} pilots={Q} S={S}", file=out)
    nu_max = cfg["channel.nu_max_k"] / cfg.K
    for name in cfg["estimator.bases"]:
        if name == "combined":
            cb = bz.combined_basis(frame.N_r, nu_max, cfg["basis.J1"])
            print(f"basis=combined J={cb.J} coherence=n/a", file=out)
            continue
        if name == "dft":
            fam = bz.dft_basis(J, D)
        else:
            built = sweep.build_bases(cfg.with_values({"estimator.bases": (name,)}), cfg["channel.nu_max_k"])
            fam = built[name]
        mu = fam.coherence()
        bound = solvers.pilot_count_bound(S, J, D, mu, args.gamma, args.eta, args.C)
        print(f"basis={name} coherence={mu:.6g} pilot_count_bound={bound:.6g}", file=out)
    return 0


def _fail(kind, message, code):
    print(f"error: kind={kind} message={json.dumps(str(message))}", file=sys.stderr)
    return code


def main(argv=None, out=None):
    out = sys.stdout if out is None else out
    try:
        args = build_parser().parse_args(argv)
    except _UsageError as exc:
        return _fail("UsageError", exc, 2)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            return _run(_overrides(cfgmod.load(args.config), args), out)
        if args.command == "preset":
            cfg = _overrides(presets.get(args.name), args)
            if args.dump:
                out.write(cfg.to_text())
                return 0
            return _run(cfg, out)
        if args.command == "plot":
            print(f"wrote {plot.plot_csv(args.inp, args.out, args.metric)}", file=out)
            return 0
        if args.command == "diag":
            if args.config and args.preset:
                raise _UsageError("give --config or --preset, not both")
            if args.config:
                cfg = cfgmod.load(args.config)
            elif args.preset:
                cfg = presets.get(args.preset)
            else:
                cfg = cfgmod.ExperimentConfig()
            return _diag(cfg, args, out)
    except _UsageError as exc:
        return _fail("UsageError", exc, 2)
    except (cfgmod.ConfigError, FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        return _fail(type(exc).__name__, exc, 2)
    except sweep.SweepError as exc:
        return _fail("SweepError", exc, 1)
    except (ValueError, OSError) as exc:
        return _fail(type(exc).__name__, exc, 1)
    return _fail("UsageError", f"unknown command {args.command!r}", 2)


if __name__ == "__main__":
    sys.exit(main())
