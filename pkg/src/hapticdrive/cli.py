"""Command-line interface.

Subcommands: generate-track, collect, train, exp1, exp2, report, serve.
Config files are JSON; see README for examples.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

from . import __version__
from .config import (SessionConfig, load_session_config,
                     session_config_from_dict)
from .experiments import (CampaignSpec, CollectSpec, EXP1_PATH, EXP2_PATH,
                          collect_corpus, run_guidance_comparison,
                          run_skill_comparison, train_from_corpus)
from .metrics import format_report_table, metrics_report, write_reports_csv
from .runlog import load_log
from .skillnet import (DidNotConverge, TrainConfig, load_skillnet,
                       save_skillnet, STEER_TOLERANCE, ACCEL_TOLERANCE)
from .track import (build_training_path, generate_random_path, parse_track,
                    save_track)


def _cmd_generate_track(args) -> int:
    if args.sweep_deg is not None:
        path = build_training_path(math.radians(args.sweep_deg))
    else:
        path = generate_random_path(args.seed, args.length)
    save_track(path, args.out)
    print(f"wrote {args.out}: {len(path.segments)} segments, "
          f"{path.total_length:.1f} m")
    return 0


def _cmd_collect(args) -> int:
    spec = CollectSpec()
    if args.config:
        with open(args.config) as fh:
            spec = CollectSpec(**json.load(fh))
    if args.trials is not None:
        spec = CollectSpec(**{**spec.__dict__, "trials_per_path": args.trials})
    os.makedirs(args.out_dir, exist_ok=True)
    logs = collect_corpus(spec, out_dir=args.out_dir)
    print(f"collected {len(logs)} runs into {args.out_dir}")
    return 0


def _load_corpus(corpus_dir: str):
    with open(os.path.join(corpus_dir, "manifest.json")) as fh:
        manifest = json.load(fh)
    return [load_log(os.path.join(corpus_dir, entry["file"]))
            for entry in manifest["runs"]]


def _cmd_train(args) -> int:
    logs = _load_corpus(args.corpus)
    channel = "steer" if args.channel == "s" else "accel"
    tol = args.tolerance if args.tolerance is not None else \
        (STEER_TOLERANCE if channel == "steer" else ACCEL_TOLERANCE)
    cfg = TrainConfig(tolerance=tol, max_epochs=args.max_epochs,
                      seed=args.seed, strict=False)
    net = train_from_corpus(logs, channel, cfg, stride=args.stride)
    save_skillnet(net, args.out)
    h = net.history
    state = "converged" if h.converged else "NOT converged"
    print(f"{channel}: {state} after {len(h.train_costs)} epochs, "
          f"best validation cost {min(h.val_costs):.4%} -> {args.out}")
    return 0 if h.converged else 1


def _load_nets(nets_dir: str):
    return (load_skillnet(os.path.join(nets_dir, "steer.npz")),
            load_skillnet(os.path.join(nets_dir, "accel.npz")))


def _cmd_exp1(args) -> int:
    net_s, net_a = _load_nets(args.nets)
    os.makedirs(args.out, exist_ok=True)
    spec = CampaignSpec(path=EXP1_PATH, n_agents=args.agents)
    reports = run_skill_comparison(net_s, net_a, spec, out_dir=args.out)
    print(format_report_table(reports))
    return 0


def _cmd_exp2(args) -> int:
    net_s, net_a = _load_nets(args.nets)
    os.makedirs(args.out, exist_ok=True)
    spec = CampaignSpec(path=EXP2_PATH, n_agents=args.agents, base_seed=7000)
    reports = run_guidance_comparison(net_s, net_a, spec, out_dir=args.out)
    print(format_report_table(reports))
    return 0


def _cmd_report(args) -> int:
    net_s = net_a = None
    if args.nets:
        net_s, net_a = _load_nets(args.nets)
    reports = []
    for filename in args.runs:
        log = load_log(filename)
        track_text = log.manifest.get("track")
        if track_text is None:
            print(f"{filename}: manifest lacks track text", file=sys.stderr)
            return 1
        path = parse_track(track_text)
        reports.append(metrics_report(log, path, net_s, net_a,
                                      label=os.path.basename(filename)))
    print(format_report_table(reports))
    if args.out:
        write_reports_csv(reports, args.out)
    return 0


def _cmd_serve(args) -> int:
    from .service import serve
    cfg = load_session_config(args.config) if args.config else SessionConfig()
    net_s = net_a = None
    if args.nets:
        net_s, net_a = _load_nets(args.nets)
    print(f"serving on ws://{args.bind}/drive (pacing={args.pacing})")
    serve(args.bind, cfg, net_s, net_a, pacing=args.pacing)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="hapticdrive")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate-track", help="write a track file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--length", type=float, default=4000.0)
    p.add_argument("--sweep-deg", type=float, default=None,
                   help="make a three-piece training path instead")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_generate_track)

    p = sub.add_parser("collect", help="run the data-acquisition roster")
    p.add_argument("--config", help="JSON CollectSpec")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_collect)

    p = sub.add_parser("train", help="train one skill model from a corpus")
    p.add_argument("--corpus", required=True, help="collect output directory")
    p.add_argument("--channel", choices=("s", "a"), required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--tolerance", type=float, default=None)
    p.add_argument("--max-epochs", type=int, default=8000)
    p.add_argument("--stride", type=int, default=24)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("exp1", help="skill-comparison campaign")
    p.add_argument("--nets", required=True, help="directory with steer.npz/accel.npz")
    p.add_argument("--agents", type=int, default=10)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_exp1)

    p = sub.add_parser("exp2", help="guidance-comparison campaign")
    p.add_argument("--nets", required=True)
    p.add_argument("--agents", type=int, default=6)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_exp2)

    p = sub.add_parser("report", help="recompute metrics for saved logs")
    p.add_argument("runs", nargs="+")
    p.add_argument("--nets")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("serve", help="run the live-drive WebSocket service")
    p.add_argument("--bind", default="127.0.0.1:8700")
    p.add_argument("--config", help="JSON SessionConfig")
    p.add_argument("--nets")
    p.add_argument("--pacing", choices=("wall", "lockstep"), default="wall")
    p.set_defaults(func=_cmd_serve)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
