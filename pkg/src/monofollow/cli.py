"""Command-line entry point: ``monofollow <command> [--flags]``.

Exit status: 0 success, 1 input or validation error, 2 numerical failure,
3 I/O error.  Failures print one diagnostic line on stderr.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

from .depth_target import Source, TargetEstimate
from .errors import InvalidConfig, MonoFollowError
from .fusion import FusionConfig, Tracker
from .geometry import CameraIntrinsics, Point3, load_depth, load_intrinsics, save_pfm
from .metrics import depth_metrics
from .pnp import load_correspondences, solve_pnp
from .plot import runlog_svg
from .sim import LogRow, RunLog, generate_scenario, load_scenario, run_closed_loop, run_open_loop, write_frames
from .vnl import TripletConstraints, vnl_between_depth_maps

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit 2, which is reserved for numerical failures
        raise _UsageError(f"{self.prog}: {message}")


def _write_text(path, text: str) -> None:
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _dump_json(obj, path) -> None:
    _write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def cmd_simulate(args) -> int:
    scen, fusion, _ = load_scenario(args.config, seed=args.seed)
    frames = generate_scenario(scen)
    log = run_open_loop(frames, scen, fusion, use_network=not args.no_network)
    log.write_csv(args.out)
    if args.frames:
        write_frames(args.frames, frames)
    if args.depth_dir:
        out = Path(args.depth_dir)
        out.mkdir(parents=True, exist_ok=True)
        for i, rec in enumerate(frames):
            if rec.depth_map is not None:
                save_pfm(out / f"frame_{i:05d}.pfm", rec.depth_map)
    return EXIT_OK


def cmd_track(args) -> int:
    scen, fusion, ctrl = load_scenario(args.config, seed=args.seed)
    if args.duration is not None:
        scen = replace(scen, duration=args.duration)
    log = run_closed_loop(scen, fusion, ctrl)
    log.write_csv(args.out)
    if args.trajectory:
        lines = ["t,x,z,heading"] + [",".join(f"{v:.9g}" for v in row) for row in log.follower]
        Path(args.trajectory).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return EXIT_OK


def _fusion_config(args) -> FusionConfig:
    if args.config:
        _, fusion, _ = load_scenario(args.config)
    else:
        fusion = FusionConfig()
    if args.pnp_period is not None:
        fusion = replace(fusion, pnp_period=args.pnp_period)
    return fusion


def cmd_fuse(args) -> int:
    """Replay network/PnP measurements through the tracker."""
    log = RunLog.read_csv(args.input)
    tracker = Tracker(_fusion_config(args))
    out = RunLog()
    rows = [r for r in log.rows if r.src in ("network", "pnp") and not r.failed and r.est is not None]
    for i, r in enumerate(rows):
        tracker.add(TargetEstimate(Point3(*r.est), r.t, Source(r.src)))
        last_at_t = i + 1 == len(rows) or rows[i + 1].t != r.t
        if last_at_t:
            est = tracker.fused_estimate(r.t)
            out.add(LogRow(r.t, "fused", r.gt, tuple(est.position)))
    text = out.to_csv()
    if not args.keep_columns:
        text = "\n".join(",".join(line.split(",")[:8]) for line in text.splitlines()) + "\n"
    _write_text(args.output, text)
    return EXIT_OK


def _intrinsics(path) -> CameraIntrinsics:
    return load_intrinsics(path) if path else CameraIntrinsics(1.0, 1.0, 0.0, 0.0)


def cmd_pnp_solve(args) -> int:
    groups = load_correspondences(args.input)
    intr = _intrinsics(args.intrinsics)
    result = {}
    for which in ("fg", "bg"):
        corrs = groups[which]
        if not corrs and (which == "bg" or groups["bg"]):
            continue
        sol = solve_pnp(corrs, intr, refine=args.refine)
        result[which] = {
            "rotation": sol.pose.rotation.tolist(),
            "translation": sol.pose.translation.tolist(),
            "reprojection_rms": sol.reprojection_rms,
            "points_used": sol.points_used,
        }
    _dump_json(result, args.output)
    return EXIT_OK


def cmd_eval_depth(args) -> int:
    gt = load_depth(args.gt)
    pred = load_depth(args.pred)
    result = depth_metrics(gt, pred, args.threshold, conventional_sq_rel=args.conventional_sq_rel).as_dict()
    if args.vnl:
        if not args.intrinsics:
            raise InvalidConfig("--vnl needs --intrinsics")
        c = TripletConstraints(math.radians(args.beta), math.radians(args.alpha), args.theta)
        result["vnl"] = vnl_between_depth_maps(load_intrinsics(args.intrinsics), pred, gt, c, args.groups, args.seed)
    _dump_json(result, args.output)
    return EXIT_OK


def cmd_plot(args) -> int:
    log = RunLog.read_csv(args.input)
    _write_text(args.output, runlog_svg(log, args.title))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="monofollow", description="Monocular target following: depth fusion, PnP, control, simulation.")
    sub = p.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("simulate", help="open-loop scenario run: RunLog CSV plus frame dump")
    s.add_argument("--config", required=True, help="scenario file")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True, help="RunLog CSV path")
    s.add_argument("--frames", help="frame record JSON-lines path")
    s.add_argument("--depth-dir", help="directory for network-tick depth maps (PFM)")
    s.add_argument("--no-network", action="store_true", help="fuse PnP only (seeded from ground truth)")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("fuse", help="fuse recorded network/PnP measurements (RunLog CSV) into a fused CSV")
    s.add_argument("--input", required=True)
    s.add_argument("--output", default="-")
    s.add_argument("--config", help="scenario file whose [fusion] section sets the filter")
    s.add_argument("--pnp-period", type=float, help="PnP period for timestamp matching (s)")
    s.add_argument("--keep-columns", action="store_true", help="also emit src_failed, steering, speed")
    s.set_defaults(func=cmd_fuse)

    s = sub.add_parser("pnp-solve", help="DLT pose from correspondence JSON-lines")
    s.add_argument("--input", required=True)
    s.add_argument("--intrinsics", help="camera file with fx, fy, cx, cy (default: normalized coordinates)")
    s.add_argument("--refine", action="store_true", help="polish the DLT pose on reprojection error")
    s.add_argument("--output", default="-")
    s.set_defaults(func=cmd_pnp_solve)

    s = sub.add_parser("eval-depth", help="error metrics between two depth maps")
    s.add_argument("--gt", required=True)
    s.add_argument("--pred", required=True)
    s.add_argument("--threshold", type=float, default=1.25, help="ratio threshold for accuracy")
    s.add_argument("--conventional-sq-rel", action="store_true", help="use (gt - pred)^2 / gt for sq_rel")
    s.add_argument("--vnl", action="store_true", help="add the virtual-normal score")
    s.add_argument("--intrinsics", help="camera file (required with --vnl)")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--groups", type=int, default=100)
    s.add_argument("--theta", type=float, default=0.6, help="minimum pairwise distance (m)")
    s.add_argument("--beta", type=float, default=30.0, help="minimum triplet angle (deg)")
    s.add_argument("--alpha", type=float, default=120.0, help="maximum triplet angle (deg)")
    s.add_argument("--output", default="-")
    s.set_defaults(func=cmd_eval_depth)

    s = sub.add_parser("track", help="closed-loop following run")
    s.add_argument("--config", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--duration", type=float, help="override the scenario duration (s)")
    s.add_argument("--out", required=True, help="RunLog CSV path")
    s.add_argument("--trajectory", help="follower trajectory CSV path")
    s.set_defaults(func=cmd_track)

    s = sub.add_parser("plot", help="SVG chart of depth vs time per source")
    s.add_argument("--input", required=True, help="RunLog CSV")
    s.add_argument("--output", required=True, help="SVG path")
    s.add_argument("--title", default="target depth")
    s.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except MonoFollowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL if exc.kind == "numerical" else EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc.strerror or exc}: {exc.filename or ''}".rstrip(": "), file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
