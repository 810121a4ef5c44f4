"""Command line interface.

    guarreach scenario list
    guarreach scenario show --scenario quadrocopter
    guarreach gvs --scenario academic3d --x-norm 0.5 --out out/
    guarreach reach --scenario academic3d --which all --T 0.05 0.2 0.5 --out out/
    guarreach contains --scenario quadrocopter --target -15 -10 --T 0.25
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from . import gvs, reach, scenarios
from .hull import hull2d
from .surrogate import Kind, SurrogateSystem

log = logging.getLogger("guarreach")

SYSTEMS = ("ball", "polygon", "truth")


def _scenario(args) -> scenarios.ScenarioConfig:
    if args.config:
        return scenarios.load_scenario(Path(args.config))
    return scenarios.load_scenario(args.scenario or "quadrocopter")


def _overrides(args) -> dict:
    over = {}
    for key, attr in (("seed", "seed"), ("n_trajectories", "trajectories"), ("dt", "dt"),
                      ("input_hold", "input_hold")):
        val = getattr(args, attr, None)
        if val is not None:
            over[key] = val
    return over


def _reach_config(cfg: scenarios.ScenarioConfig, horizon: float, overrides: dict | None) -> reach.ReachConfig:
    # the scenario's hold belongs to its own horizon; rescale unless overridden
    return cfg.reach.replace(**{"horizon": horizon, "input_hold": None, **(overrides or {})})


def _fmt_t(t: float) -> str:
    return f"{t:g}"


def _system(cfg: scenarios.ScenarioConfig, which: str):
    if which == "truth":
        truth = cfg.truth()
        if truth is None:
            raise scenarios.ScenarioError(
                f"scenario {cfg.name!r} has no true dynamics; 'truth' is unsupported", "true_dynamics"
            )
        return truth
    return SurrogateSystem(Kind(which), cfg.snapshot)


# -- gvs ------------------------------------------------------------------------

def cmd_gvs(cfg: scenarios.ScenarioConfig, x_norm: float, out: Path, dims=(0, 1), segments: int = 256) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    snap = cfg.snapshot
    geom = gvs.geometry(snap)
    stem = f"{cfg.name}_gvs_s{_fmt_t(x_norm)}"
    written = []
    plane = gvs.default_plane(geom, dims)
    if x_norm >= geom.validity_radius:
        if x_norm > geom.validity_radius:
            warnings.warn(
                f"|x| = {x_norm} exceeds the validity radius {geom.validity_radius:.6g}; "
                "the velocity set degenerates to {f(0)}"
            )
        c = plane @ snap.f0
        for kind in ("ball", "advanced"):
            p = out / f"{stem}_{kind}.csv"
            gvs.write_polyline_csv(p, [0.0], [c])
            written.append(p)
        lines = None
    else:
        lines = gvs.boundary_polyline(geom, snap, x_norm, plane, segments)
        for kind, pts in (("ball", lines.ball), ("advanced", lines.advanced)):
            p = out / f"{stem}_{kind}.csv"
            gvs.write_polyline_csv(p, lines.theta, pts)
            written.append(p)
    table = gvs.gain_table(geom, snap)
    if lines is not None:
        table["k_of_theta"] = {"theta": lines.theta.tolist(), "K": lines.k_values.tolist(), "x_norm": x_norm}
    p = out / f"{cfg.name}_gains.json"
    gvs.write_gain_table(p, table)
    written.append(p)
    p = out / f"{cfg.name}_gains.csv"
    gvs.write_gain_table(p, table)
    written.append(p)
    return written


# -- reach ----------------------------------------------------------------------

def cmd_reach(cfg: scenarios.ScenarioConfig, which: str, horizons, out: Path, *, overrides: dict | None = None,
              dims=(0, 1), workers: int = 1, truth_factor: int = 10) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    if which == "all":
        kinds = ["ball", "polygon"] + (["truth"] if cfg.true_dynamics is not None else [])
    else:
        kinds = [which]
    written = []
    for T in horizons:
        rcfg = _reach_config(cfg, T, overrides)
        meta = {"scenario": cfg.to_dict(), "horizon": T, "dims": list(dims), "systems": {}}
        for kind in kinds:
            sys_ = _system(cfg, kind)
            kcfg = rcfg.replace(n_trajectories=rcfg.n_trajectories * truth_factor) if kind == "truth" else rcfg
            cloud = reach.monte_carlo_reach(sys_, cfg.x0, kcfg, workers=workers)
            stem = f"{cfg.name}_T{_fmt_t(T)}_{kind}"
            pc = out / f"{stem}_cloud.csv"
            pc.write_text(reach.cloud_to_csv(cloud))
            ph = out / f"{stem}_hull.csv"
            ph.write_text(reach.hull_to_csv(hull2d(reach.project(cloud, dims))))
            written += [pc, ph]
            meta["systems"][kind] = {"reach": kcfg.to_dict(), "points": len(cloud),
                                     "cloud": pc.name, "hull": ph.name}
        pm = out / f"{cfg.name}_T{_fmt_t(T)}_meta.json"
        pm.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
        written.append(pm)
    return written


# -- contains -------------------------------------------------------------------

def cmd_contains(cfg: scenarios.ScenarioConfig, target, horizon: float, *, dims=(0, 1),
                 overrides: dict | None = None, workers: int = 1, stream=None) -> tuple[int, dict]:
    stream = stream or sys.stdout
    target = np.asarray(target, dtype=np.float64)
    if target.shape[0] != len(dims):
        raise scenarios.ScenarioError(f"target has {target.shape[0]} entries but dims has {len(dims)}", "target")
    rcfg = _reach_config(cfg, horizon, overrides)
    report = {}
    for kind in ("ball", "polygon"):
        sys_ = SurrogateSystem(Kind(kind), cfg.snapshot)
        cloud = reach.monte_carlo_reach(sys_, cfg.x0, rcfg.replace(collect_intermediate=True), workers=workers)
        res = reach.contains(cloud, target, dims)
        report[kind] = {
            "certified_by_steering": res.certified_by_steering,
            "in_hull": res.in_hull,
            "first_reach_time": res.reach_time,
        }
        print(
            f"{kind:8s} certified_by_steering={res.certified_by_steering} "
            f"in_hull(monte carlo)={res.in_hull} first_reach_time={res.reach_time}",
            file=stream,
        )
    print("note: a steering certificate proves guaranteed reachability; a failed "
          "steer or hull miss proves nothing", file=stream)
    code = 0 if any(r["certified_by_steering"] for r in report.values()) else 1
    return code, report


# -- argument parsing -----------------------------------------------------------

def _common(p: argparse.ArgumentParser):
    p.add_argument("--scenario", help="builtin scenario id (academic3d, quadrocopter)")
    p.add_argument("--config", help="scenario JSON file")
    p.add_argument("--seed", type=int)
    p.add_argument("--trajectories", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--input-hold", type=float)
    p.add_argument("--dims", type=int, nargs=2, default=[0, 1])
    p.add_argument("--workers", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="guarreach", description=__doc__.split("\n")[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)

    sc = sub.add_parser("scenario", help="list or show scenarios")
    sc.add_argument("action", choices=["list", "show"])
    sc.add_argument("--scenario")
    sc.add_argument("--config")

    g = sub.add_parser("gvs", help="velocity-set boundaries and gain tables")
    _common(g)
    g.add_argument("--x-norm", type=float, default=0.0)
    g.add_argument("--segments", type=int, default=256)
    g.add_argument("--out", default="out")

    r = sub.add_parser("reach", help="Monte Carlo reachable-set clouds and hulls")
    _common(r)
    r.add_argument("--which", choices=SYSTEMS + ("all",), default="all")
    r.add_argument("--T", type=float, nargs="+")
    r.add_argument("--truth-factor", type=int, default=10,
                   help="trajectory budget multiplier for the true dynamics")
    r.add_argument("--out", default="out")

    c = sub.add_parser("contains", help="is a target state guaranteed reachable?")
    _common(c)
    c.add_argument("--target", type=float, nargs="+", required=True)
    c.add_argument("--T", type=float)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        if args.cmd == "scenario":
            if args.action == "list":
                for name in sorted(scenarios.BUILTINS):
                    print(name)
                return 0
            cfg = _scenario(args)
            print(json.dumps(cfg.to_dict(), indent=2))
            return 0
        cfg = _scenario(args)
        dims = tuple(args.dims)
        if args.cmd == "gvs":
            for p in cmd_gvs(cfg, args.x_norm, Path(args.out), dims, args.segments):
                print(p)
            return 0
        if args.cmd == "reach":
            horizons = args.T or [cfg.reach.horizon]
            for p in cmd_reach(cfg, args.which, horizons, Path(args.out), overrides=_overrides(args), dims=dims,
                               workers=args.workers, truth_factor=args.truth_factor):
                print(p)
            return 0
        if args.cmd == "contains":
            T = args.T if args.T is not None else cfg.reach.horizon
            code, _ = cmd_contains(cfg, args.target, T, dims=dims, overrides=_overrides(args),
                                   workers=args.workers)
            return code
    except (scenarios.ScenarioError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
