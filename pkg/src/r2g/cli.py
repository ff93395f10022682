"""Command-line pipeline: align, grasps, generate, eval, serve, report, stats.

Exit codes: 0 success, 2 validation error, 3 runtime failure. Verbosity via
the R2G_LOG environment variable (debug / info / warning / error).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .errors import InvalidArgumentError, R2GError

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

logger = logging.getLogger("r2g")

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3


def _load_config(path: str | Path) -> dict:
    path = Path(path)
    if not path.exists():
        raise InvalidArgumentError(f"config file not found: {path}")
    if path.suffix.lower() == ".toml":
        return tomllib.loads(path.read_text())
    return json.loads(path.read_text())


@dataclass
class PipelineConfig:
    """Validated pipeline inputs shared by the orchestration commands."""

    mesh_dir: Path | None = None
    grasp_dir: Path | None = None
    task: Path | None = None
    out_root: Path | None = None
    n_meshes: int = 1
    n_demos: int = 1
    seeds: tuple[int, ...] = (0,)
    scale_correction: float = 1.0

    def validate(self) -> None:
        for name in ("mesh_dir", "grasp_dir", "task"):
            p = getattr(self, name)
            if p is not None and not Path(p).exists():
                raise InvalidArgumentError(f"{name} does not exist: {p}")
        if self.n_meshes < 1:
            raise InvalidArgumentError("n_meshes must be >= 1")
        if self.n_demos < 1:
            raise InvalidArgumentError("n_demos must be >= 1")
        if self.scale_correction <= 0:
            raise InvalidArgumentError("scale_correction must be positive")


def _parse_seeds(text: str) -> tuple[int, ...]:
    return tuple(int(s) for s in text.split(",") if s.strip() != "")


# ---------------------------------------------------------------------------
# align


def _load_reference(entry: dict, base: Path):
    from .alignment import (ReferenceObservation, camera_from_json,
                            load_descriptors)
    from .geometry import DepthImage

    for key in ("camera", "depth", "descriptors"):
        if key not in entry:
            raise InvalidArgumentError(f"reference entry missing {key!r}")
        p = base / entry[key]
        if not p.exists():
            raise InvalidArgumentError(f"reference file not found: {p}")
    camera = camera_from_json(json.loads((base / entry["camera"]).read_text()))
    depth = DepthImage.load(base / entry["depth"])
    descriptors = load_descriptors(base / entry["descriptors"])
    if "mask" in entry:
        mask_img = DepthImage.load(base / entry["mask"])
        mask = np.isfinite(mask_img.depth) & (mask_img.depth > 0.5)
    else:
        mask = np.isfinite(depth.depth)
    return ReferenceObservation(depth, camera, descriptors, mask)


def cmd_align(args) -> int:
    from .alignment import (RansacParams, ViewBundle, ViewRenderConfig,
                            build_correspondences, canonicalize_mesh,
                            load_descriptors, ransac_umeyama, render_views,
                            score_views)
    from .errors import (AlignmentFailedError, DegenerateConfigurationError,
                         InsufficientCorrespondencesError)
    from .geometry import load_obj, save_obj

    cfg = _load_config(args.config)
    base = Path(args.config).parent
    entries = cfg.get("meshes", [])
    if not entries:
        raise InvalidArgumentError("align config lists no meshes")
    out_dir = Path(args.out or base / cfg.get("out_dir", "aligned"))
    out_dir.mkdir(parents=True, exist_ok=True)
    render_cfg = ViewRenderConfig(
        n_views=int(cfg.get("n_views", 41)),
        **{k: v for k, v in cfg.get("render", {}).items()})
    top_k = int(cfg.get("top_k", 30))
    ransac = RansacParams(**cfg.get("ransac", {}))
    scale_correction = float(args.scale_correction
                             if args.scale_correction is not None
                             else cfg.get("scale_correction", 1.0))
    pipeline = PipelineConfig(n_meshes=len(entries),
                              scale_correction=scale_correction)
    pipeline.validate()

    reports = {}
    matched = 0
    for entry in entries:
        mesh_path = base / entry["mesh"]
        views_dir = base / entry["views_dir"]
        if not mesh_path.exists():
            raise InvalidArgumentError(f"mesh file not found: {mesh_path}")
        if not views_dir.exists():
            raise InvalidArgumentError(f"descriptor directory not found: {views_dir}")
        mesh = load_obj(mesh_path)
        reference = _load_reference(entry["reference"], base)
        rendered = render_views(mesh, render_cfg)
        bundles = []
        for i, (direction, camera, depth) in enumerate(rendered):
            desc_path = views_dir / f"view_{i:03d}.json"
            if not desc_path.exists():
                raise InvalidArgumentError(f"missing view descriptor file: {desc_path}")
            bundles.append(ViewBundle(i, direction, camera, depth,
                                      load_descriptors(desc_path)))
        try:
            best, _scores = score_views(bundles, reference.descriptors, top_k)
            corr = build_correspondences(bundles[best], reference, top_k)
            transform, inliers = ransac_umeyama(corr, ransac)
        except (AlignmentFailedError, InsufficientCorrespondencesError,
                DegenerateConfigurationError) as exc:
            logger.warning("mesh %s unmatched: %s", mesh.id, exc)
            reports[mesh.id] = {"matched": False, "reason": str(exc)}
            continue
        residual = float(np.linalg.norm(
            corr.target[inliers] - transform.apply(corr.source[inliers]),
            axis=1).mean())
        metric = canonicalize_mesh(mesh, transform, scale_correction)
        save_obj(metric, out_dir / f"{mesh.id}.obj")
        arr = transform.rotation if transform.rotation[0] >= 0 else -transform.rotation
        report = {
            "matched": True,
            "best_view": int(best),
            "scale": transform.scale,
            "quaternion_wxyz": arr.tolist(),
            "translation": transform.translation.tolist(),
            "inliers": int(len(inliers)),
            "mean_residual_m": residual,
        }
        (out_dir / f"{mesh.id}.report.json").write_text(
            json.dumps(report, sort_keys=True) + "\n")
        reports[mesh.id] = report
        matched += 1
    summary = {"matched": matched, "unmatched": len(entries) - matched,
               "meshes": reports}
    (out_dir / "align_summary.json").write_text(
        json.dumps(summary, sort_keys=True) + "\n")
    print(json.dumps({"matched": matched, "unmatched": len(entries) - matched}))
    return EXIT_OK if matched > 0 else EXIT_RUNTIME


# ---------------------------------------------------------------------------
# grasps


def cmd_grasps(args) -> int:
    from .errors import EmptyGraspSetError
    from .geometry import load_obj
    from .grasping import GraspConfig, GripperModel, precompute_grasps, save_grasps

    mesh_dir = Path(args.mesh_dir)
    if not mesh_dir.exists():
        raise InvalidArgumentError(f"mesh directory not found: {mesh_dir}")
    out_dir = Path(args.out or mesh_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    gripper = GripperModel()
    config = GraspConfig(n_samples=args.samples, friction_coefficient=args.friction,
                         top_n=args.top_n, seed=args.seed)
    meshes = sorted(mesh_dir.glob("*.obj"))
    if not meshes:
        raise InvalidArgumentError(f"no .obj meshes in {mesh_dir}")
    usable = 0
    flagged = []
    for path in meshes:
        mesh = load_obj(path)
        try:
            grasp_set = precompute_grasps(mesh, config, gripper)
        except EmptyGraspSetError as exc:
            logger.warning("%s", exc)
            flagged.append(mesh.id)
            continue
        save_grasps(grasp_set, out_dir / f"{mesh.id}.grasps.json")
        usable += 1
    print(json.dumps({"usable": usable, "unusable": flagged}))
    return EXIT_OK if usable > 0 else EXIT_RUNTIME


# ---------------------------------------------------------------------------
# generate / eval / serve


def _gen_config(args):
    from .demogen import GenConfig

    kwargs = {}
    for name in ("cloud_size", "render_width", "render_height", "control_step",
                 "max_steps"):
        value = getattr(args, name, None)
        if value is not None:
            kwargs[name] = value
    return GenConfig(**kwargs)


def _load_world_inputs(args):
    from .demogen import MeshPool, load_task

    pipeline = PipelineConfig(mesh_dir=Path(args.mesh_dir),
                              grasp_dir=Path(args.grasp_dir) if args.grasp_dir else None,
                              task=Path(args.task),
                              n_demos=getattr(args, "n_demos", 1) or 1)
    pipeline.validate()
    task = load_task(args.task)
    pool = MeshPool.from_dirs(args.mesh_dir, args.grasp_dir or args.mesh_dir)
    return task, pool


def cmd_generate(args) -> int:
    from .demogen import generate_dataset

    task, pool = _load_world_inputs(args)
    config = _gen_config(args)
    out_root = Path(args.out)
    jobs = args.jobs if args.jobs is not None else (os.cpu_count() or 1)
    stats = generate_dataset(task, args.n_demos, pool, args.seed, out_root,
                             config, jobs=jobs)
    (out_root / "generation_stats.json").write_text(
        json.dumps(stats.to_json(), sort_keys=True) + "\n")
    print(json.dumps({"written": stats.written, "attempts": stats.attempts,
                      "success_fraction": stats.success_fraction}))
    return EXIT_OK


def cmd_eval(args) -> int:
    from .demogen import ScriptedExpertController, evaluate_policy

    task, pool = _load_world_inputs(args)
    config = _gen_config(args)
    seeds = _parse_seeds(args.seeds)
    if not seeds:
        raise InvalidArgumentError("no seeds given")
    report = evaluate_policy(ScriptedExpertController, task, pool, list(seeds),
                             args.episodes, config, render=False)
    csv_text = report.to_csv()
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(csv_text)
    sys.stdout.write(csv_text)
    return EXIT_OK


def cmd_serve(args) -> int:
    from .demogen import KinematicEnv, serve_stdio, serve_tcp

    task, pool = _load_world_inputs(args)
    config = _gen_config(args)
    env = KinematicEnv(task, pool, config, render=True,
                       criteria=args.criteria)
    if args.port is not None:
        if args.stdio:
            raise InvalidArgumentError("choose either --stdio or --port")
        serve_tcp(env, args.host, args.port, args.max_connections)
    else:
        serve_stdio(env)
    return EXIT_OK


# ---------------------------------------------------------------------------
# report / stats


def cmd_report(args) -> int:
    cfg = _load_config(args.config)
    base = Path(args.config).parent
    out_dir = Path(args.out or base / cfg.get("out_dir", "report"))
    out_dir.mkdir(parents=True, exist_ok=True)

    def read_eval(path: Path) -> tuple[float, float]:
        mean = std = None
        for line in path.read_text().splitlines():
            cells = line.split(",")
            if cells[0] == "mean":
                mean = float(cells[3])
            elif cells[0] == "std":
                std = float(cells[3])
        if mean is None or std is None:
            raise InvalidArgumentError(f"{path}: not an eval CSV (missing aggregate)")
        return mean, std

    lines = ["label,mean_success_rate,std"]
    for entry in cfg.get("evals", []):
        path = base / entry["csv"]
        if not path.exists():
            raise InvalidArgumentError(f"eval csv not found: {path}")
        mean, std = read_eval(path)
        lines.append(f"{entry['label']},{mean:.6f},{std:.6f}")
    (out_dir / "table.csv").write_text("\n".join(lines) + "\n")

    for ablation in cfg.get("ablations", []):
        rows = []
        for entry in ablation["entries"]:
            path = base / entry["csv"]
            if not path.exists():
                raise InvalidArgumentError(f"eval csv not found: {path}")
            mean, std = read_eval(path)
            rows.append((float(entry["x"]), mean, std))
        rows.sort(key=lambda r: r[0])
        name = ablation["name"]
        csv = [f"{ablation.get('x_label', 'x')},mean_success_rate,std"]
        csv += [f"{x:g},{m:.6f},{s:.6f}" for x, m, s in rows]
        (out_dir / f"ablation_{name}.csv").write_text("\n".join(csv) + "\n")
        _plot_ablation(rows, ablation, out_dir / f"ablation_{name}.png")
    print(json.dumps({"out_dir": str(out_dir)}))
    return EXIT_OK


def _plot_ablation(rows, ablation, path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    x = [r[0] for r in rows]
    m = [100 * r[1] for r in rows]
    s = [100 * r[2] for r in rows]
    fig, ax = plt.subplots(figsize=(4, 3))
    ax.errorbar(x, m, yerr=s, marker="o")
    ax.set_xlabel(ablation.get("x_label", "x"))
    ax.set_ylabel("success rate [%]")
    ax.set_title(ablation["name"])
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def cmd_stats(args) -> int:
    from .dataset import dataset_stats

    print(json.dumps(dataset_stats(args.root), sort_keys=True, indent=1))
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="r2g",
        description="Demonstration generation pipeline: mesh alignment, grasp "
                    "synthesis, kinematic rollouts, datasets, and evaluation.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("align", help="align canonical meshes to the demonstration")
    p.add_argument("--config", required=True, help="align config (JSON/TOML)")
    p.add_argument("--out", help="output directory for metric meshes + reports")
    p.add_argument("--scale-correction", type=float, dest="scale_correction",
                   help="extra scale factor applied to aligned meshes")
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("grasps", help="precompute antipodal grasps per mesh")
    p.add_argument("--mesh-dir", required=True)
    p.add_argument("--out", help="output directory (defaults to mesh dir)")
    p.add_argument("--samples", type=int, default=512)
    p.add_argument("--friction", type=float, default=0.5)
    p.add_argument("--top-n", type=int, default=256, dest="top_n")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_grasps)

    def world_args(p):
        p.add_argument("--task", required=True, help="task spec (JSON/TOML)")
        p.add_argument("--mesh-dir", required=True)
        p.add_argument("--grasp-dir", help="defaults to mesh dir")
        p.add_argument("--cloud-size", type=int, dest="cloud_size")
        p.add_argument("--render-width", type=int, dest="render_width")
        p.add_argument("--render-height", type=int, dest="render_height")
        p.add_argument("--control-step", type=float, dest="control_step")
        p.add_argument("--max-steps", type=int, dest="max_steps")

    p = sub.add_parser("generate", help="generate a demonstration dataset")
    world_args(p)
    p.add_argument("--out", required=True, help="dataset root directory")
    p.add_argument("--n-demos", type=int, required=True, dest="n_demos")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, help="parallel workers (default: cores)")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("eval", help="evaluate the scripted expert")
    world_args(p)
    p.add_argument("--seeds", default="0,1,2", help="comma-separated seeds")
    p.add_argument("--episodes", type=int, default=100)
    p.add_argument("--out", help="CSV output path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("serve", help="serve the stepping protocol")
    world_args(p)
    p.add_argument("--stdio", action="store_true",
                   help="serve over stdin/stdout (the default)")
    p.add_argument("--port", type=int, help="TCP port instead of stdio")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--max-connections", type=int, dest="max_connections")
    p.add_argument("--criteria", choices=["generation", "evaluation"],
                   default="evaluation")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("report", help="render success tables and ablation curves")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("stats", help="summarize a dataset root")
    p.add_argument("--root", required=True)
    p.set_defaults(func=cmd_stats)
    return parser


def main(argv=None) -> int:
    level = os.environ.get("R2G_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(asctime)s %(name)s %(levelname)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InvalidArgumentError as exc:
        logger.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except R2GError as exc:
        logger.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
