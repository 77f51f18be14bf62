"""Command-line surface: library building, matching, transmission, scheduling, eval.

Exit codes: 0 success, 1 domain failure (e.g. `match --require` without a
match, malformed input files), 2 usage errors. Noisy commands require an
explicit --seed so runs are reproducible.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from pathlib import Path

from . import bglib, channel, dynbg, pipeline, scheduler
from .errors import SemtxError
from .features import describe, detect_keypoints
from .imaging import apply_mask, load_image, load_mask, save_image
from .segmentation import BackgroundDiffSegmenter, LandmarkSet, ProvidedMaskSegmenter


def _fraction(text: str):
    """Accept plain floats and 'a/b' fractions for flags like --mu."""
    if "/" in text:
        num, den = text.split("/", 1)
        return float(num) / float(den)
    return float(text)


def _add_channel_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--snr-db", type=float, required=True, help="channel SNR in dB")
    p.add_argument("--seed", type=int, required=True, help="noise PRNG seed")
    p.add_argument("--mu", type=_fraction, default=1.0 / 3.0,
                   help="symbol budget ratio (default 1/3)")


def _add_matching_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--t", type=int, default=64, help="Hamming match threshold (bits)")
    p.add_argument("--n-min", type=int, default=15, help="minimum matches to accept a background")
    p.add_argument("--fast-threshold", type=int, default=20, help="FAST corner threshold")
    p.add_argument("--max-keypoints", type=int, default=500, help="keypoint cap per image")


def _add_segmenter_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--landmarks", help="JSON landmark file for the hull shield")
    p.add_argument("--mask", help="foreground mask PNG (0 = foreground)")
    p.add_argument("--diff-background", help="known background PNG for difference segmentation")
    p.add_argument("--diff-threshold", type=int, default=30,
                   help="per-channel difference threshold for --diff-background")


def _segmenter_from_args(args):
    if args.mask:
        return ProvidedMaskSegmenter(load_mask(args.mask))
    if args.diff_background:
        return BackgroundDiffSegmenter(load_image(args.diff_background), args.diff_threshold)
    return None


def _knobs_from_args(args) -> pipeline.PipelineKnobs:
    return pipeline.PipelineKnobs(
        t=args.t,
        n_min=args.n_min,
        max_pixels=args.max_pixels,
        fast_threshold=args.fast_threshold,
        max_keypoints=args.max_keypoints,
        mask_composite=getattr(args, "mask_composite", False),
    )


def _numbered_pngs(directory: str) -> list[Path]:
    files = sorted(
        (p for p in Path(directory).iterdir() if p.suffix.lower() == ".png"),
        key=lambda p: [int(s) if s.isdigit() else s for s in re.split(r"(\d+)", p.name)],
    )
    if not files:
        raise SemtxError(f"no PNG frames in {directory}")
    return files


def _load_sequence(frames_dir: str, masks_dir: str) -> dynbg.FrameSequence:
    frame_paths = _numbered_pngs(frames_dir)
    mask_paths = _numbered_pngs(masks_dir)
    if len(frame_paths) != len(mask_paths):
        raise SemtxError(
            f"{len(frame_paths)} frames but {len(mask_paths)} masks"
        )
    frames = tuple(load_image(p) for p in frame_paths)
    masks = tuple(load_mask(p) for p in mask_paths)
    return dynbg.FrameSequence(frames, masks)


def _cmd_bglib_build(args) -> int:
    masks = list(args.masks or [])
    if masks and len(masks) != len(args.images):
        raise SemtxError("--masks must list one mask per image")
    entries = []
    for i, image_path in enumerate(args.images):
        mask = load_mask(masks[i]) if masks else None
        entries.append(
            bglib.build_entry(i, load_image(image_path), mask,
                              args.fast_threshold, args.max_keypoints)
        )
    bglib.save(bglib.BackgroundLibrary(entries), args.out)
    print(f"wrote {len(entries)} entries to {args.out}", file=sys.stderr)
    return 0


def _cmd_bglib_build_dynamic(args) -> int:
    seq = _load_sequence(args.frames, args.masks)
    segments = dynbg.split_scenes(
        list(seq.frames), list(seq.masks), args.sim_threshold, args.t,
        args.fast_threshold, args.max_keypoints, masked=not args.raw_similarity,
    )
    entries = []
    for i, seg in enumerate(segments):
        sub = dynbg.FrameSequence(
            seq.frames[seg.start:seg.end], seq.masks[seg.start:seg.end]
        )
        stitched = dynbg.stitch(sub, args.aggregator)
        entries.append(bglib.build_entry(i, stitched.image,
                                         fast_threshold=args.fast_threshold,
                                         max_keypoints=args.max_keypoints))
    bglib.save(bglib.BackgroundLibrary(entries), args.out)
    print(f"wrote {len(entries)} segment backgrounds to {args.out}", file=sys.stderr)
    return 0


def _cmd_match(args) -> int:
    img = load_image(args.image)
    lib = bglib.load(args.lib)
    landmarks = LandmarkSet.from_json(args.landmarks) if args.landmarks else None
    segmenter = _segmenter_from_args(args)
    mask = pipeline.matching_mask(img, landmarks, segmenter)
    query = apply_mask(img, mask, keep=1) if mask is not None else img
    kps = detect_keypoints(query, args.fast_threshold, args.max_keypoints)
    outcome = bglib.best_match(describe(query, kps), lib, args.t, args.n_min)
    result = {
        "matched": outcome.matched,
        "background_id": outcome.background_id,
        "match_count": outcome.match_count,
    }
    text = json.dumps(result, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    if args.require and not outcome.matched:
        print("no background matched", file=sys.stderr)
        return 1
    return 0


def _report_dict(report: pipeline.TransmitReport) -> dict:
    rect = report.rect
    return {
        "mode": report.mode,
        "psnr_db": report.psnr_vs_original,
        "symbols_sent": report.symbols_sent,
        "compression_factor": report.compression_factor,
        "background_id": report.background_id,
        "match_count": report.match_count,
        "rect": [rect.x1, rect.y1, rect.x2, rect.y2] if rect else None,
        "scale": report.scale,
    }


def _cmd_transmit(args) -> int:
    img = load_image(args.image)
    lib = bglib.load(args.lib) if args.lib else bglib.BackgroundLibrary([])
    cfg = channel.ChannelConfig(snr_db=args.snr_db, mu=args.mu, seed=args.seed)
    landmarks = LandmarkSet.from_json(args.landmarks) if args.landmarks else None
    report = pipeline.transmit_image(
        img, lib, cfg, _knobs_from_args(args),
        landmarks=landmarks, segmenter=_segmenter_from_args(args),
    )
    save_image(report.reconstructed, args.out)
    if args.wire:
        frame = pipeline.build_wire_frame(report, cfg, img)
        Path(args.wire).write_bytes(pipeline.frame_encode(frame))
    if args.report:
        Path(args.report).write_text(
            json.dumps(_report_dict(report), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
    print(f"{report.mode}: psnr={report.psnr_vs_original:.2f} dB, "
          f"symbols={report.symbols_sent}, x{report.compression_factor:.1f} compression",
          file=sys.stderr)
    return 0


def _cmd_transmit_video(args) -> int:
    seq = _load_sequence(args.frames, args.masks)
    cfg = channel.ChannelConfig(snr_db=args.snr_db, mu=args.mu, seed=args.seed)
    reports, libraries = pipeline.transmit_video(
        seq, cfg, _knobs_from_args(args),
        sim_threshold=args.sim_threshold, warmup_fraction=args.warmup,
    )
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for i, report in enumerate(reports):
        save_image(report.reconstructed, out_dir / f"recon_{i:04d}.png")
        rows.append((i, report.mode, report.psnr_vs_original,
                     report.symbols_sent, report.compression_factor))
    for i, lib in enumerate(libraries):
        bglib.save(lib, out_dir / f"segment_{i:02d}.bgl")
    with open(out_dir / "report.csv", "w", encoding="utf-8") as fh:
        fh.write("frame,mode,psnr_db,symbols,compression_factor\n")
        for row in rows:
            fh.write(",".join(str(v) for v in row) + "\n")
    n_key = sum(1 for r in reports if r.mode == "keyinfo")
    print(f"{len(reports)} frames ({n_key} keyinfo), {len(libraries)} segments "
          f"-> {out_dir}", file=sys.stderr)
    return 0


def _cmd_schedule(args) -> int:
    with open(args.job, "r", encoding="utf-8") as fh:
        job = json.load(fh)
    try:
        users = [
            scheduler.UserRequest(u["id"], u["d_direct_bits"], u["d_keyinfo_bits"], u["noise"])
            for u in job["users"]
        ]
        params = scheduler.SchedulerParams(
            gain=job["gain"], loss=job["loss"], deadline=job["deadline_s"],
            p_max=job["p_max"], alpha=job["alpha"], p_quantum=job["p_quantum"],
        )
    except (KeyError, TypeError) as exc:
        raise SemtxError(f"job file missing field: {exc}") from exc
    plan = scheduler.optimize(users, params)
    payload = {
        "decisions": [
            {"id": d.user_id, "x": d.x, "power": d.power, "quality": d.quality}
            for d in plan.decisions
        ],
        "total_quality": plan.total_quality,
        "total_power": plan.total_power,
    }
    text = json.dumps(payload, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return 0


def _cmd_eval(args) -> int:
    with open(args.scenes, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    scenes = []
    for entry in manifest["scenes"]:
        scenes.append(pipeline.EvalScene(
            name=entry["name"],
            image=load_image(entry["image"]),
            mask=load_mask(entry["mask"]) if entry.get("mask") else None,
            landmarks=LandmarkSet.from_json(entry["landmarks"])
            if entry.get("landmarks") else None,
        ))
    lib = bglib.load(args.lib)
    snr_list = [float(s) for s in args.snrs.split(",")]
    seeds = [int(s) for s in args.seeds.split(",")]
    rows = pipeline.eval_sweep(scenes, lib, snr_list, seeds, mu=args.mu,
                               knobs=_knobs_from_args(args), jobs=args.jobs)
    pipeline.write_csv(rows, args.out)
    print(f"wrote {len(rows)} rows to {args.out}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semtx",
        description="Semantic-aware image/video transmission simulator",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    lib_parser = sub.add_parser("bglib", help="background library tools")
    lib_sub = lib_parser.add_subparsers(dest="bglib_command", required=True)

    p = lib_sub.add_parser("build", help="build a library from background images",
                           formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--images", nargs="+", required=True)
    p.add_argument("--masks", nargs="*", help="optional person masks, one per image")
    p.add_argument("--out", required=True)
    p.add_argument("--fast-threshold", type=int, default=20)
    p.add_argument("--max-keypoints", type=int, default=500)
    p.set_defaults(func=_cmd_bglib_build)

    p = lib_sub.add_parser("build-dynamic", help="stitch per-scene backgrounds from video",
                           formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--frames", required=True, help="directory of numbered frame PNGs")
    p.add_argument("--masks", required=True, help="directory of matching mask PNGs")
    p.add_argument("--out", required=True)
    p.add_argument("--sim-threshold", type=int, default=20,
                   help="matches required to stay in the same scene")
    p.add_argument("--t", type=int, default=64)
    p.add_argument("--aggregator", choices=("first", "mean"), default="mean")
    p.add_argument("--raw-similarity", action="store_true",
                   help="compare scenes on raw frames instead of person-masked ones")
    p.add_argument("--fast-threshold", type=int, default=20)
    p.add_argument("--max-keypoints", type=int, default=500)
    p.set_defaults(func=_cmd_bglib_build_dynamic)

    p = sub.add_parser("match", help="query the library for one image",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--image", required=True)
    p.add_argument("--lib", required=True)
    p.add_argument("--out", help="write the outcome JSON here instead of stdout")
    p.add_argument("--require", action="store_true", help="exit 1 when nothing matches")
    _add_matching_flags(p)
    _add_segmenter_flags(p)
    p.set_defaults(func=_cmd_match)

    p = sub.add_parser("transmit", help="transmit one image",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--image", required=True)
    p.add_argument("--lib", help="background library (omit to force direct mode)")
    p.add_argument("--out", required=True, help="reconstructed PNG path")
    p.add_argument("--wire", help="also write the binary wire frame here")
    p.add_argument("--report", help="also write a JSON report here")
    p.add_argument("--max-pixels", type=int, default=pipeline.DEFAULT_MAX_PIXELS,
                   help="resolution gate before channel coding")
    p.add_argument("--mask-composite", action="store_true",
                   help="composite only foreground crop pixels onto the background")
    _add_channel_flags(p)
    _add_matching_flags(p)
    _add_segmenter_flags(p)
    p.set_defaults(func=_cmd_transmit)

    p = sub.add_parser("transmit-video", help="transmit a frame directory",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--frames", required=True)
    p.add_argument("--masks", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--sim-threshold", type=int, default=20)
    p.add_argument("--warmup", type=float, default=pipeline.DEFAULT_WARMUP_FRACTION,
                   help="fraction of each segment transmitted directly to build its background")
    p.add_argument("--max-pixels", type=int, default=pipeline.DEFAULT_MAX_PIXELS)
    _add_channel_flags(p)
    _add_matching_flags(p)
    p.set_defaults(func=_cmd_transmit_video)

    p = sub.add_parser("schedule", help="solve a base-station power allocation job",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--job", required=True, help="JSON job description")
    p.add_argument("--out", help="write the plan JSON here instead of stdout")
    p.set_defaults(func=_cmd_schedule)

    p = sub.add_parser("eval", help="PSNR sweep: proposed pipeline vs direct baseline",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--scenes", required=True, help="scene manifest JSON")
    p.add_argument("--lib", required=True)
    p.add_argument("--snrs", required=True, help="comma-separated SNR list in dB")
    p.add_argument("--seeds", required=True, help="comma-separated seed list")
    p.add_argument("--out", required=True, help="CSV output path")
    p.add_argument("--mu", type=_fraction, default=1.0 / 3.0)
    p.add_argument("--max-pixels", type=int, default=pipeline.DEFAULT_MAX_PIXELS)
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    _add_matching_flags(p)
    p.set_defaults(func=_cmd_eval)

    return parser


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except SemtxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
