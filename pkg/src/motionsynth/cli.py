"""Command line driver: evolve a curve, factor it, sample its trajectory.

Exit codes: 0 success, 1 input error, 2 no convergence, 3 non-generic
factorization.
"""
from __future__ import annotations

import argparse
import itertools
import json
import logging
import math
import sys
from dataclasses import asdict
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from motionsynth import __version__
from motionsynth.dualquat import DQPolynomial, dqpoly_norm
from motionsynth.errors import (
    IdenticalChains,
    MotionSynthError,
    NonGeneric,
    NotInvertible,
    NotRealNorm,
    ResidualTooLarge,
)
from motionsynth.evolution import (
    EvolutionConfig,
    TargetSet,
    compute_footpoints,
    default_ranges,
    default_window,
    evolve,
    random_init,
)
from motionsynth.factorization import all_factorizations, make_linkage, quadratic_factors, verify_chain
from motionsynth.formats import load_targets, parse_number, shape_table, write_csv, write_json
from motionsynth.kinematics import FeatureCloud, pose_error
from motionsynth.motioncurve import FactorizedCurve, curve_eval, curve_pose, expand

logger = logging.getLogger("motionsynth")

EXIT_OK, EXIT_INPUT, EXIT_NOT_CONVERGED, EXIT_NONGENERIC = 0, 1, 2, 3


class InputError(Exception):
    pass


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _load_config(path, seed=None, lambda_rule=None) -> EvolutionConfig:
    if path is None:
        cfg = EvolutionConfig()
    else:
        p = Path(path)
        if not p.is_file():
            raise InputError(f"config file not found: {p}")
        try:
            cfg = EvolutionConfig.load(p)
        except (ValueError, TypeError) as exc:
            raise InputError(f"bad config {p}: {exc}") from exc
    if seed is not None:
        cfg.seed = seed
    if lambda_rule is not None:
        cfg.lambda_rule = lambda_rule
    return cfg


def _load_targets(path) -> TargetSet:
    p = Path(path)
    if not p.is_file():
        raise InputError(f"pose file not found: {p}")
    try:
        targets = load_targets(p)
    except (ValueError, MotionSynthError) as exc:
        raise InputError(f"bad pose file {p}: {exc}") from exc
    if len(targets) < 2:
        raise InputError(f"need at least 2 target poses, got {len(targets)}")
    return targets


def _read_json(path, what: str):
    p = Path(path)
    if not p.is_file():
        raise InputError(f"{what} file not found: {p}")
    try:
        return json.loads(p.read_text())
    except ValueError as exc:
        raise InputError(f"bad {what} file {p}: {exc}") from exc


def _load_curve(path) -> FactorizedCurve:
    doc = _read_json(path, "shape")
    try:
        c = FactorizedCurve.from_json(doc)
    except (ValueError, KeyError, TypeError, MotionSynthError) as exc:
        raise InputError(f"bad shape file {path}: {exc}") from exc
    if c.n == 0:
        raise InputError("curve has no factors")
    return c


def _load_motion_polynomial(path) -> DQPolynomial:
    """Expanded curve from a shape file, or ``{"polynomial": [[8 coeffs], ...]}`` (highest degree first)."""
    doc = _read_json(path, "shape")
    if not (isinstance(doc, dict) and "polynomial" in doc):
        return expand(_load_curve(path))
    try:
        coeffs = np.array([[parse_number(v) for v in row] for row in doc["polynomial"]], dtype=float)
        if coeffs.ndim != 2 or coeffs.shape[1] != 8 or coeffs.shape[0] < 2:
            raise ValueError("need at least two rows of 8 coefficients")
    except (ValueError, TypeError) as exc:
        raise InputError(f"bad polynomial in {path}: {exc}") from exc
    return DQPolynomial(coeffs)


def _is_identity(targets: TargetSet, k: int) -> bool:
    return bool(np.allclose(targets.embeddings[k], np.r_[np.eye(3).ravel(), np.zeros(3)], atol=1e-12))


def _error_rows(c: FactorizedCurve, targets: TargetSet, cloud: FeatureCloud, ordered: bool):
    feet = compute_footpoints(c, targets, cloud, ordered)
    rows = []
    for k, f in enumerate(feet):
        if k == 0 and _is_identity(targets, 0):
            # the start pose is the curve's limit pose; nothing to report
            continue
        err = pose_error(targets.pose(k), curve_pose(c, f.t))
        rows.append([k + 1, f.t, err.angle, err.distance, f.distance, int(f.clamped)])
    return rows


def run_evolve(targets: TargetSet, cfg: EvolutionConfig, out: Path, inputs: dict) -> tuple[int, float, FactorizedCurve]:
    out.mkdir(parents=True, exist_ok=True)
    started = _now()
    cloud = cfg.feature_cloud()
    ranges = {**default_ranges(targets), **(cfg.init_ranges or {})}
    c0 = FactorizedCurve.from_shape(random_init(cfg.seed, ranges))
    c, trace = evolve(c0, targets, cfg, cloud)
    ordered = cfg.ordering == "successive" and len(trace) > cfg.provisional_iters
    rows = _error_rows(c, targets, cloud, ordered)
    obj = float(sum(r[4] ** 2 for r in rows)) if rows else 0.0
    write_json(out / "shape_parameters.json", shape_table(c))
    trace.to_csv(out / "trace.csv")
    write_csv(out / "errors.csv", ["target", "t", "angle", "distance", "metric_distance", "clamped"], rows)
    write_json(
        out / "manifest.json",
        {
            "tool": "motionsynth",
            "version": __version__,
            "command": "evolve",
            "inputs": inputs,
            "config": asdict(cfg),
            "seed": cfg.seed,
            "output_dir": str(out),
            "status": trace.status,
            "iterations": len(trace),
            "final_objective": trace.records[-1].objective if trace.records else math.nan,
            "started": started,
            "finished": _now(),
        },
    )
    logger.info("seed %d: %s after %d iterations", cfg.seed, trace.status, len(trace))
    code = EXIT_OK if trace.status == "converged" else EXIT_NOT_CONVERGED
    return code, obj, c


def run_factor(P: DQPolynomial, out: Path, samples: int = 50) -> int:
    out.mkdir(parents=True, exist_ok=True)
    try:
        N = dqpoly_norm(P)
        quads = quadratic_factors(N)
        chains = all_factorizations(P)
    except (NonGeneric, NotInvertible, NotRealNorm, ResidualTooLarge) as exc:
        print(f"error: non-generic motion polynomial: {exc}", file=sys.stderr)
        return EXIT_NONGENERIC
    write_json(
        out / "quadratic_factors.json",
        {
            "leading": float(N[0]),
            "norm_polynomial": N.tolist(),
            "factors": [{"b": q.b, "c": q.c, "vertex": q.vertex} for q in quads],
        },
    )
    residuals = [verify_chain(ch, P, samples) for ch in chains]
    write_json(
        out / "chains.json",
        {"chains": [{**ch.to_json(), "residual": r} for ch, r in zip(chains, residuals)]},
    )
    linkages, rejected = [], []
    for a, b in itertools.combinations(chains, 2):
        try:
            linkages.append(make_linkage(a, b, samples).to_json())
        except (IdenticalChains, ResidualTooLarge) as exc:
            rejected.append({"chain_a": list(a.order), "chain_b": list(b.order), "reason": str(exc)})
    write_json(out / "linkages.json", {"linkages": linkages, "rejected": rejected})
    logger.info("%d chains, %d linkages", len(chains), len(linkages))
    return EXIT_OK


def run_trajectory(c: FactorizedCurve, t_range, samples: int, cloud: FeatureCloud, out: Path) -> int:
    out.mkdir(parents=True, exist_ok=True)
    lo, hi = t_range if t_range is not None else default_window(c)
    tcp = cloud.barycenter
    rows = []
    for t in np.linspace(lo, hi, samples):
        q = curve_eval(c, float(t))
        pose = curve_pose(c, float(t))
        p = q.primal / np.linalg.norm(q.primal)
        if p[0] < 0:
            p = -p
        rows.append([float(t), *pose.apply(tcp), *p])
    write_csv(out / "trajectory.csv", ["t", "x", "y", "z", "qw", "qx", "qy", "qz"], rows)
    return EXIT_OK


def cmd_evolve(args) -> int:
    targets = _load_targets(args.poses)
    cfg = _load_config(args.config, args.seed, args.lambda_rule)
    code, _, _ = run_evolve(targets, cfg, Path(args.out), {"poses": str(args.poses), "config": args.config})
    return code


def cmd_factor(args) -> int:
    return run_factor(_load_motion_polynomial(args.shape), Path(args.out))


def cmd_trajectory(args) -> int:
    c = _load_curve(args.shape)
    if args.samples < 1:
        raise InputError("--samples must be positive")
    cloud = _load_config(args.config).feature_cloud()
    return run_trajectory(c, args.t_range, args.samples, cloud, Path(args.out))


def cmd_synthesize(args) -> int:
    targets = _load_targets(args.poses)
    base = _load_config(args.config, args.seed, args.lambda_rule)
    out = Path(args.out)
    inputs = {"poses": str(args.poses), "config": args.config}
    runs = []
    for k in range(args.seeds):
        cfg = EvolutionConfig(**{**asdict(base), "seed": base.seed + k})
        run_dir = out / f"seed_{cfg.seed}" if args.seeds > 1 else out
        code, obj, c = run_evolve(targets, cfg, run_dir, inputs)
        runs.append((code != EXIT_OK, obj, cfg.seed, c, run_dir))
    failed, obj, seed, c, run_dir = min(runs, key=lambda r: (r[0], r[1], r[2]))
    if args.seeds > 1:
        write_json(out / "shape_parameters.json", shape_table(c))
        write_json(
            out / "selection.json",
            {"best_seed": seed, "converged": not failed, "objective": obj, "run_dir": str(run_dir),
             "runs": [{"seed": s, "converged": not f, "objective": o} for f, o, s, _, _ in runs]},
        )
    code = run_factor(expand(c), out)
    if code != EXIT_OK:
        return code
    return EXIT_NOT_CONVERGED if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="motionsynth", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def evolution_flags(p):
        p.add_argument("--poses", required=True, help="JSON list of 8-element Study parameter vectors")
        p.add_argument("--config", help="EvolutionConfig JSON")
        p.add_argument("--out", required=True)
        p.add_argument("--seed", type=int)
        p.add_argument("--lambda-rule", choices=["paper", "clamped"])

    p = sub.add_parser("evolve", help="fit a cubic factorized curve to target poses")
    evolution_flags(p)
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("factor", help="factor a curve into revolute chains and 6R linkages")
    p.add_argument("--shape", required=True, help="shape JSON, or {\"polynomial\": [[8 coefficients], ...]}")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_factor)

    p = sub.add_parser("trajectory", help="sample TCP position and orientation along a curve")
    p.add_argument("--shape", required=True)
    p.add_argument("--t-range", nargs=2, type=float, metavar=("LO", "HI"))
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--config", help="EvolutionConfig JSON (only the feature cloud is used)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_trajectory)

    p = sub.add_parser("synthesize", help="evolve over several seeds, then factor the best curve")
    evolution_flags(p)
    p.add_argument("--seeds", type=int, default=1)
    p.set_defaults(func=cmd_synthesize)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if getattr(args, "seeds", 1) < 1:
        print("error: --seeds must be positive", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
