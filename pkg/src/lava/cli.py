"""``lava`` command line: simulate, fuse, evaluate, reproduce, attribute.

Exit status: 0 success, 1 failed acceptance checks, 2 bad input.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .attribution import SCENARIO_LABELS
from .fusion import GateConfig, OffsetMeasure
from .io import (
    RunManifest,
    SchemaError,
    read_dataset,
    read_fused,
    write_dataset,
    write_fused,
    write_keyvalue,
    write_reports,
    report_rows_text,
    fmt,
)
from .pipeline import Variant, evaluate_arrays, process_videos
from .reproduce import TABLE_IDS, default_manifest, run_table
from .simulate import (
    AUDIO_NOISE_PRESETS,
    SEVERITY_PRESETS,
    AudioNoise,
    AvOffset,
    CompressionCollapse,
    Stretch,
    apply_distortions,
    generate_benchmark_with_scenarios,
)

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


def _load_manifest(path) -> RunManifest:
    if path is None:
        return RunManifest()
    try:
        return RunManifest.load(path)
    except (OSError, json.JSONDecodeError, ValueError, TypeError) as e:
        raise InputError(f"{path}: invalid manifest: {e}") from e


def _override(manifest: RunManifest, args) -> RunManifest:
    """Apply the flags that mirror manifest fields."""
    bench, pipe = manifest.benchmark, manifest.pipeline
    b = {}
    if getattr(args, "seed", None) is not None:
        b["seed"] = args.seed
    if getattr(args, "video_count", None) is not None:
        b["video_count"] = args.video_count
    if getattr(args, "frames", None) is not None:
        b["frames_per_video"] = args.frames
    p = {}
    if getattr(args, "tau", None) is not None:
        p["gate"] = GateConfig(args.tau)
    if getattr(args, "measure", None) is not None:
        p["measure"] = OffsetMeasure(args.measure)
    if getattr(args, "split_seed", None) is not None:
        p["split_seed"] = args.split_seed
    if getattr(args, "validation_fraction", None) is not None:
        p["validation_fraction"] = args.validation_fraction
    try:
        manifest.benchmark = replace(bench, **b)
        manifest.pipeline = replace(pipe, **p)
    except ValueError as e:
        raise InputError(str(e)) from e
    if getattr(args, "out", None):
        manifest.output_dir = args.out
    return manifest


def _extra_distortions(args) -> list:
    out = []
    if getattr(args, "offset", None) is not None:
        out.append(AvOffset(args.offset))
    if getattr(args, "severity", None):
        out.append(CompressionCollapse.preset(args.severity))
    if getattr(args, "audio_noise", None):
        out.append(AudioNoise.preset(args.audio_noise))
    if getattr(args, "stretch", None) is not None:
        out.append(Stretch(args.stretch))
    return out


def cmd_simulate(args) -> int:
    manifest = _override(_load_manifest(args.manifest), args)
    if args.condition is not None and args.condition not in manifest.conditions:
        raise InputError(f"condition {args.condition!r} not in manifest ({sorted(manifest.conditions)})")
    distortions = list(manifest.conditions.get(args.condition, [])) + _extra_distortions(args)
    pairs = generate_benchmark_with_scenarios(manifest.benchmark)
    records = [apply_distortions(r, distortions) for r, _ in pairs]
    scenarios = {r.id: s.value for r, s in pairs}
    out = Path(manifest.output_dir)
    condition = (args.condition or "custom") if distortions else "clean"
    write_dataset(out, records, scenarios, {"seed": manifest.benchmark.seed, "condition": condition})
    (out / "manifest.json").write_text(manifest.to_json(), encoding="utf-8")
    print(f"wrote {len(records)} videos to {out}")
    return EXIT_OK


def _read_inputs(path):
    try:
        return read_dataset(path)
    except SchemaError as e:
        raise InputError(str(e)) from e


def cmd_fuse(args) -> int:
    manifest = _override(_load_manifest(args.manifest), args)
    records, _, info = _read_inputs(args.dataset)
    variant = Variant(args.variant)
    batch = process_videos(records, manifest.pipeline, variant, attribute_videos=True)
    split = {i: "validation" for i in batch.validation_ids}
    split.update({i: "test" for i in batch.test_ids if i not in split})
    condition = args.condition or info.get("condition", "clean")
    write_fused(manifest.output_dir, batch.outputs.values(), split, batch.calibration, condition, variant.value)
    print(f"fused {len(records)} videos ({variant.value}) into {manifest.output_dir}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    manifest = _override(_load_manifest(args.manifest), args)
    reports = []
    for d in args.fused:
        try:
            frames, videos, info = read_fused(d)
        except SchemaError as e:
            raise InputError(str(e)) from e
        ids = sorted(v for v, row in videos.items() if row["split"] == "test" or args.all_videos)
        missing = [v for v in ids if v not in frames]
        if missing:
            raise InputError(f"{d}: no frame rows for {missing[:5]}")
        reports.append(
            evaluate_arrays(
                [frames[v]["fused"] for v in ids],
                [frames[v]["probs"] for v in ids],
                [frames[v]["labels"] for v in ids],
                info.get("condition", "clean"),
                info.get("variant", "?"),
                manifest.pipeline,
            )
        )
    if args.report:
        write_reports(args.report, reports)
    else:
        sys.stdout.write(report_rows_text(reports))
    return EXIT_OK


def cmd_reproduce(args) -> int:
    if args.manifest:
        manifest = _load_manifest(args.manifest)
    else:
        manifest = default_manifest(args.table, 0 if args.seed is None else args.seed)
    manifest = _override(manifest, args)
    if args.dump_manifest:
        sys.stdout.write(manifest.to_json())
        return EXIT_OK
    result = run_table(args.table, manifest)
    out = Path(manifest.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_reports(out / f"{args.table}.csv", result.reports)
    summary = result.summary() + "\n"
    (out / f"{args.table}-summary.txt").write_text(summary, encoding="utf-8")
    sys.stdout.write(summary)
    return EXIT_OK if result.passed else EXIT_FAIL


def cmd_attribute(args) -> int:
    manifest = _override(_load_manifest(args.manifest), args)
    records, scenarios, _ = _read_inputs(args.dataset)
    cfg = manifest.pipeline if not args.oracle_calibration else replace(manifest.pipeline, oracle_calibration=True)
    batch = process_videos(records, cfg, Variant.LAVA, attribute_videos=True)
    rows = ["video_id,gate,attribution,visual_evidence,audio_evidence,low_confidence,scenario\n"]
    hits = total = 0
    for vid, o in sorted(batch.outputs.items()):
        v = o.verdict
        truth = scenarios.get(vid, "")
        rows.append(f"{vid},{o.gate.g},{v.label.value},{fmt(v.visual_mean)},{fmt(v.audio_mean)},{int(v.low_confidence)},{truth}\n")
        if truth in SCENARIO_LABELS:
            total += 1
            hits += SCENARIO_LABELS[truth] is v.label
    out = Path(manifest.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "attribution.csv").write_text("".join(rows), encoding="utf-8")
    if total:
        write_keyvalue(out / "attribution-summary.txt", {"videos": total, "accuracy": fmt(hits / total)})
        print(f"attribution accuracy {hits / total:.4f} over {total} labelled videos")
    return EXIT_OK


def _add_common(p, manifest_positional=True):
    if manifest_positional:
        p.add_argument("manifest", nargs="?", help="run manifest (JSON); defaults apply when omitted")
    else:
        p.add_argument("--manifest", help="run manifest (JSON)")
    p.add_argument("--out", help="output directory (manifest output_dir)")
    p.add_argument("--seed", type=int, help="benchmark seed")
    p.add_argument("--split-seed", type=int)
    p.add_argument("--validation-fraction", type=float)
    p.add_argument("--tau", type=float, help="reliability gate threshold")
    p.add_argument("--measure", choices=[m.value for m in OffsetMeasure])


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lava", description="Layered audio-visual watermark score fusion.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic score benchmark")
    _add_common(p)
    p.add_argument("--video-count", type=int)
    p.add_argument("--frames", type=int, help="frames per video")
    p.add_argument("--condition", help="apply this manifest condition's distortions")
    p.add_argument("--severity", choices=sorted(SEVERITY_PRESETS), help="visual compression preset")
    p.add_argument("--audio-noise", choices=sorted(AUDIO_NOISE_PRESETS), help="audio degradation preset")
    p.add_argument("--offset", type=float, help="A/V offset in seconds")
    p.add_argument("--stretch", type=float, help="audio stretch factor")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fuse", help="run one pipeline variant over a dataset")
    p.add_argument("dataset", help="dataset directory or dataset.txt")
    _add_common(p, manifest_positional=False)
    p.add_argument("--variant", default=Variant.LAVA.value, choices=[v.value for v in Variant])
    p.add_argument("--condition", help="condition label recorded with the output")
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("evaluate", help="score fused outputs")
    p.add_argument("fused", nargs="+", help="output directories written by 'fuse'")
    _add_common(p, manifest_positional=False)
    p.add_argument("--report", help="CSV path (default: stdout)")
    p.add_argument("--all-videos", action="store_true", help="include the validation split")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("reproduce", help="run a table experiment and check its pattern")
    p.add_argument("table", choices=TABLE_IDS)
    _add_common(p, manifest_positional=False)
    p.add_argument("--dump-manifest", action="store_true", help="print the effective manifest and exit")
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("attribute", help="attribute manipulation type per video")
    p.add_argument("dataset")
    _add_common(p, manifest_positional=False)
    p.add_argument("--oracle-calibration", action="store_true")
    p.set_defaults(func=cmd_attribute)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_INPUT
    try:
        return args.func(args)
    except (InputError, SchemaError, ValueError, OSError) as e:
        print(f"lava {args.command}: error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
