"""Command-line entry point: scene synthesis, pipeline runs, gradient
checks, and benchmarks.

Exit codes: 0 success, 1 usage error, 2 I/O error, 3 validation failure.
The PARTGRAPH_SEED environment variable overrides the default seed of any
subcommand; an explicit --seed flag wins over both.
"""

import argparse
import json
import os
import sys

from . import kernels
from .errors import InvalidInputError, PipelineStageError, PlacementError, SceneLoadError
from .evaluate import evaluate_scenes
from .gradcheck import run_suite
from .pipeline import MATCHERS, PipelineConfig, benchmark, run_pipeline
from .render import render_parsing
from .synth import NoiseSpec, generate_scene, load_scene, perturb_targets, render_targets, save_scene

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_VALIDATION = 3

_NOISE_KEYS = {"offset": "offset_sigma", "drop": "drop_prob", "heat": "heatmap_sigma", "seed": "seed"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse variant that reports usage problems via exit code 1."""

    def error(self, message):
        raise UsageError(message)


def _default_seed():
    raw = os.environ.get("PARTGRAPH_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError as exc:
        raise UsageError(f"PARTGRAPH_SEED must be an integer, got {raw!r}") from exc


def _parse_size(text):
    try:
        w, h = text.lower().split("x")
        width, height = int(w), int(h)
    except ValueError as exc:
        raise UsageError(f"--size expects WIDTHxHEIGHT, got {text!r}") from exc
    if width <= 0 or height <= 0:
        raise UsageError("--size dimensions must be positive")
    return width, height


def _parse_noise(text):
    """'offset=3,drop=0.1' -> NoiseSpec; unknown keys are usage errors."""
    kwargs = {}
    for item in filter(None, text.split(",")):
        key, _, value = item.partition("=")
        if key not in _NOISE_KEYS or not value:
            raise UsageError(
                f"bad --noise entry {item!r}; expected key=value with key in {sorted(_NOISE_KEYS)}"
            )
        try:
            kwargs[_NOISE_KEYS[key]] = int(value) if key == "seed" else float(value)
        except ValueError as exc:
            raise UsageError(f"bad --noise value in {item!r}") from exc
    return NoiseSpec(**kwargs)


def _build_parser():
    parser = _Parser(prog="partgraph", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a synthetic scene")
    p.add_argument("--persons", type=int, default=2)
    p.add_argument("--size", default="256x256", metavar="WxH")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="output scene JSON path")
    p.add_argument("--no-sidecars", action="store_true", help="skip binary field dumps")

    p = sub.add_parser("run", help="run the parsing pipeline on a scene")
    p.add_argument("--scene", required=True, help="scene JSON path")
    p.add_argument("--matcher", choices=MATCHERS, default="pgd")
    p.add_argument("--noise", default="", metavar="offset=3,drop=0.1")
    p.add_argument("--report", default=None, help="write a run report JSON here")
    p.add_argument("--render", default=None, metavar="DIR", help="write PPM renderings here")
    p.add_argument("--keypoint-threshold", type=float, default=None)
    p.add_argument("--jobs", type=int, default=1, help="reserved; single scene runs use 1")

    p = sub.add_parser("gradcheck", help="finite-difference gradient checks")
    p.add_argument("--seed", type=int, action="append", default=None)
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--step", type=float, default=1e-5)
    p.add_argument("--report", default=None)

    p = sub.add_parser("bench", help="pipeline timing benchmark")
    p.add_argument("--size", action="append", default=None, metavar="WxH")
    p.add_argument("--persons", type=int, action="append", default=None)
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--compare-backends", action="store_true")
    p.add_argument("--report", default=None)
    return parser


def _write_json(path, doc):
    try:
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=1, sort_keys=True)
    except OSError as exc:
        raise _IoFailure(f"cannot write {path}: {exc}") from exc


class _IoFailure(Exception):
    pass


def cmd_synth(args):
    if args.persons < 0:
        raise UsageError("--persons must be nonnegative")
    width, height = _parse_size(args.size)
    seed = _default_seed() if args.seed is None else args.seed
    scene = generate_scene(args.persons, width, height, seed)
    try:
        save_scene(scene, args.out, sidecars=not args.no_sidecars)
    except OSError as exc:
        raise _IoFailure(f"cannot write {args.out}: {exc}") from exc
    print(f"wrote {args.out} ({args.persons} persons, {width}x{height}, seed {seed})")
    return EXIT_OK


def cmd_run(args):
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    if not os.path.exists(args.scene):
        raise _IoFailure(f"scene file not found: {args.scene}")
    noise = _parse_noise(args.noise)
    scene = load_scene(args.scene)
    targets = render_targets(scene)
    if noise != NoiseSpec():
        targets = perturb_targets(targets, noise)
    cfg = PipelineConfig(matcher=args.matcher)
    if args.keypoint_threshold is not None:
        cfg.keypoint_threshold = args.keypoint_threshold
    parsing, diag = run_pipeline(targets, cfg)
    report = evaluate_scenes([(scene, parsing)])

    artifacts = []
    if args.render is not None:
        try:
            os.makedirs(args.render, exist_ok=True)
            pred_path = os.path.join(args.render, "parsing.ppm")
            gt_path = os.path.join(args.render, "ground_truth.ppm")
            render_parsing(pred_path, parsing.part_labels, parsing.instance_ids)
            render_parsing(gt_path, scene.part_labels, scene.instance_ids)
        except OSError as exc:
            raise _IoFailure(f"cannot write renderings to {args.render}: {exc}") from exc
        artifacts += [pred_path, gt_path]

    doc = {
        "config": {
            "scene": args.scene,
            "matcher": args.matcher,
            "noise": {
                "offset_sigma": noise.offset_sigma,
                "heatmap_sigma": noise.heatmap_sigma,
                "drop_prob": noise.drop_prob,
                "seed": noise.seed,
            },
            "keypoint_threshold": cfg.keypoint_threshold,
            "jobs": args.jobs,
        },
        "eval": report.to_json_dict(),
        "diagnostics": {
            "counts": diag.counts,
            "timings": diag.timings,
            "max_lp_gap": max(diag.lp_gaps, default=0.0),
        },
        "artifacts": artifacts,
    }
    if args.report is not None:
        _write_json(args.report, doc)
        artifacts.append(args.report)
    print(
        "miou={miou:.4f} ap_p.50={ap:.4f} pose_map={pm:.4f} poses={poses}".format(
            miou=report.miou,
            ap=report.ap_p[0.5],
            pm=report.pose_map,
            poses=diag.counts.get("poses", 0),
        )
    )
    return EXIT_OK


def cmd_gradcheck(args):
    seeds = args.seed if args.seed else [_default_seed()]
    if args.tol <= 0 or args.step <= 0:
        raise UsageError("--tol and --step must be positive")
    results, passed = run_suite(seeds=seeds, tol=args.tol, step=args.step)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(
            f"{r.name} seed={r.seed} max_rel_error={r.max_rel_error:.3e} "
            f"tol={r.tolerance:.1e} {status}"
        )
    if args.report is not None:
        _write_json(args.report, {"checks": [r.to_json_dict() for r in results], "passed": passed})
    return EXIT_OK if passed else EXIT_VALIDATION


def cmd_bench(args):
    if args.repeats < 10:
        raise UsageError("--repeats must be >= 10")
    sizes = [_parse_size(s) for s in (args.size or ["256x256"])]
    persons = args.persons or [1, 6]
    seed = _default_seed() if args.seed is None else args.seed
    backends = ("numba", "numpy") if args.compare_backends else (kernels.active_backend(),)
    tables = {}
    for backend in backends:
        kernels.use(backend)
        rows = benchmark(sizes, persons, repeats=args.repeats, seed=seed)
        tables[kernels.active_backend()] = rows
        for row in rows:
            print(
                f"[{kernels.active_backend()}] {row['width']}x{row['height']} "
                f"persons={row['persons']} median={row['median_s'] * 1e3:.2f} ms "
                f"(min {row['min_s'] * 1e3:.2f}, max {row['max_s'] * 1e3:.2f})"
            )
    for backend, rows in tables.items():
        medians = [r["median_s"] for r in rows]
        if len(medians) > 1 and min(medians) > 0:
            print(f"[{backend}] median spread across configs: {max(medians) / min(medians):.2f}x")
    if args.report is not None:
        _write_json(args.report, {"seed": seed, "repeats": args.repeats, "results": tables})
    return EXIT_OK


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required (synth, run, gradcheck, bench)")
        handler = {
            "synth": cmd_synth,
            "run": cmd_run,
            "gradcheck": cmd_gradcheck,
            "bench": cmd_bench,
        }[args.command]
        return handler(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _IoFailure as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (SceneLoadError, InvalidInputError, PlacementError, PipelineStageError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
