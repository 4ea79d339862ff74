"""Command-line interface.

One subcommand per pipeline stage: model evaluation (gain), threshold
fitting (fit), stimulus synthesis (stimulus gabor/rsvp), foveated
filtering (foveate), quality prediction (predict), inverse slope search
(optimize-slope), bandwidth sweeps (bandwidth), staircase simulation
(simulate-staircase) and the live study service (serve).
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import data, kvformat
from .bandwidth import gain_sweep, sweep_to_csv
from .csf import (
    AttentionLevel,
    DEFAULT_CONDITION_MODELS,
    DEFAULT_UNIFIED_MODEL,
    attention_gain,
)
from .fitting import ThresholdSample, fit_per_condition, fit_unified
from .foveation import FoveationConfig, MarModel, foveate_image
from .geometry import DisplayGeometry, study_geometry
from .quality import PredictorConfig, optimize_mar_slope, predict_quality
from .quest import SimulatedObserver, Staircase, StaircaseConfig, run_staircase
from .sample_images import sample_image
from .stimulus import GaborSpec, RSVPSpec, encode_display, gabor_image, rsvp_sequence


def _load_geometry(path: str | None) -> DisplayGeometry:
    if path is None:
        return study_geometry()
    return DisplayGeometry.from_kv(Path(path).read_text())


def _load_luminance(path: str, geom: DisplayGeometry) -> np.ndarray:
    from PIL import Image

    from .stimulus import decode_display

    arr = np.asarray(Image.open(path).convert("L"))
    return decode_display(arr, geom)


def _save_png(frame: np.ndarray, path: str) -> None:
    from PIL import Image

    Image.fromarray(frame, mode="L" if frame.ndim == 2 else "RGB").save(path)


def cmd_gain(args) -> int:
    models = DEFAULT_CONDITION_MODELS
    eccs = [float(v) for v in args.eccentricity.split(",")]
    print("attention,eccentricity_deg,threshold,gain")
    for e in eccs:
        try:
            attention = AttentionLevel.parse(args.attention)
            t = models[attention].threshold(e)
            g = attention_gain(models, attention, e)
            label = attention.value
        except ValueError:
            a_c = float(args.attention)
            t = DEFAULT_UNIFIED_MODEL.threshold(e, a_c)
            g = t / DEFAULT_UNIFIED_MODEL.threshold(e, 0.0)
            label = f"a_c={a_c:g}"
        print(f"{label},{e:g},{t:.6g},{g:.6g}")
    return 0


def _read_samples(path: str) -> list[ThresholdSample]:
    samples = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            samples.append(ThresholdSample(
                eccentricity=float(row["eccentricity_deg"]),
                attention=AttentionLevel.parse(row["attention"]),
                contrast=float(row["contrast"]),
                subject_id=row.get("subject", ""),
                repetition=int(row.get("repetition", 0) or 0),
            ))
    return samples


def cmd_fit(args) -> int:
    samples = _read_samples(args.input) if args.input else data.threshold_samples()
    reports = {}
    if args.model == "per-condition":
        for attention in AttentionLevel:
            if any(s.attention is attention for s in samples):
                reports[attention.value] = fit_per_condition(samples, attention)
    else:
        reports["unified"] = fit_unified(samples)

    out_lines = []
    residual_rows = []
    for name, report in reports.items():
        record = {f"{name}.{k}": v for k, v in asdict(report.parameters).items()
                  if not isinstance(v, AttentionLevel)}
        record[f"{name}.r_squared"] = report.r_squared
        record[f"{name}.dof_adjusted_r_squared"] = report.dof_adjusted_r_squared
        out_lines.append(kvformat.dumps(record))
        residual_rows.extend((name, i, float(r)) for i, r in enumerate(report.residuals))

    text = "".join(out_lines)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if args.residuals:
        with open(args.residuals, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["fit", "sample_index", "residual"])
            writer.writerows(residual_rows)
    return 0


def cmd_stimulus_gabor(args) -> int:
    geom = _load_geometry(args.geometry)
    spec = GaborSpec(
        center_x_deg=args.eccentricity,
        center_y_deg=0.0,
        sigma_deg=args.sigma,
        frequency_cpd=args.frequency,
        contrast=args.contrast,
        orientation_deg=args.orientation,
        phase_deg=args.phase,
    )
    frame = encode_display(gabor_image(spec, geom), geom)
    _save_png(frame, args.out)
    print(f"wrote {args.out} ({frame.shape[1]}x{frame.shape[0]}, "
          f"{geom.pixels_per_degree:.1f} ppd)")
    return 0


def cmd_stimulus_rsvp(args) -> int:
    spec = RSVPSpec(n_letters=args.letters)
    schedule = rsvp_sequence(spec, seed=args.seed)
    print("index,letter,color,onset_ms,offset_ms")
    for i, item in enumerate(schedule):
        print(f"{i},{item.letter},{item.color},{item.onset_ms:.3f},{item.offset_ms:.3f}")
    return 0


def cmd_foveate(args) -> int:
    geom = _load_geometry(args.geometry)
    img = _load_luminance(args.image, geom)
    h, w = img.shape
    geom = DisplayGeometry(
        pixel_pitch_m=geom.pixel_pitch_m,
        viewing_distance_m=geom.viewing_distance_m,
        resolution=(w, h),
        gamma=geom.gamma,
        luminance_min=geom.luminance_min,
        luminance_max=geom.luminance_max,
        background_luminance=geom.background_luminance,
    )
    gaze = tuple(float(v) for v in args.gaze.split(",")) if args.gaze else None
    cfg = FoveationConfig(gaze_center_px=gaze)
    out = foveate_image(img, geom, MarModel(slope=args.slope), cfg)
    _save_png(encode_display(out, geom), args.out)
    print(f"wrote {args.out}")
    return 0


def _predictor_config(args, geom) -> PredictorConfig:
    return PredictorConfig(attention=AttentionLevel.parse(args.attention))


def cmd_predict(args) -> int:
    geom = _load_geometry(args.geometry)
    ref = _load_luminance(args.ref, geom)
    h, w = ref.shape
    geom = DisplayGeometry.from_ppd(geom.pixels_per_degree, geom.viewing_distance_m,
                                    (w, h), gamma=geom.gamma,
                                    luminance_min=geom.luminance_min,
                                    luminance_max=geom.luminance_max,
                                    background_luminance=geom.background_luminance)
    test = _load_luminance(args.test, geom)
    score = predict_quality(ref, test, geom, _predictor_config(args, geom))
    print(f"jod = {score.jod:.4f}")
    return 0


def cmd_optimize_slope(args) -> int:
    geom = _load_geometry(args.geometry)
    if args.image in ("tulips", "city", "mountain", "forest") and not Path(args.image).exists():
        w, h = geom.resolution
        ref = sample_image(args.image, (h, w))
    else:
        ref = _load_luminance(args.image, geom)
        h, w = ref.shape
        geom = DisplayGeometry.from_ppd(geom.pixels_per_degree, geom.viewing_distance_m,
                                        (w, h), gamma=geom.gamma,
                                        luminance_min=geom.luminance_min,
                                        luminance_max=geom.luminance_max,
                                        background_luminance=geom.background_luminance)
    cfg = _predictor_config(args, geom)
    print("m,quality")
    trace = []

    from .quality import InfeasibleThresholdError

    try:
        m = optimize_mar_slope(ref, geom, cfg, args.qthr,
                               bracket=(args.m_lo, args.m_hi))
    except InfeasibleThresholdError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 1
    for mm in np.linspace(args.m_lo, max(m * 1.5, args.m_lo + 1e-3), 8):
        q = predict_quality(
            ref, foveate_image(ref, geom, MarModel(slope=float(mm)), FoveationConfig()),
            geom, cfg)
        trace.append((float(mm), q.jod))
        print(f"{mm:.5f},{q.jod:.4f}")
    print(f"optimal_slope = {m:.5f}")
    return 0


def cmd_bandwidth(args) -> int:
    slopes = {}
    for name in args.slopes.split(","):
        name = name.strip()
        if name in ("low", "medium", "high"):
            slopes[name] = MarModel(slope=data.MEAN_MAR_SLOPES[AttentionLevel.parse(name)])
        else:
            slopes[name] = MarModel(slope=float(name))
    fovs = list(np.arange(args.fov_min, args.fov_max + 1e-9, args.fov_step))
    ppds = [float(v) for v in args.ppd.split(",")]
    rows = gain_sweep(fovs, ppds, slopes)
    text = sweep_to_csv(rows)
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {args.out} ({len(rows)} rows)")
    else:
        sys.stdout.write(text)
    return 0


def cmd_simulate_staircase(args) -> int:
    staircase = Staircase(StaircaseConfig(max_trials=args.trials))
    observer = SimulatedObserver(true_threshold=args.true_threshold, seed=args.seed)
    run_staircase(staircase, observer)
    est = staircase.estimate()
    print("trial,intensity,correct")
    for i, (intensity, correct) in enumerate(staircase.history):
        print(f"{i},{intensity:.6g},{int(correct)}")
    print(f"estimate = {est['threshold']:.6g}")
    print(f"sd_log10 = {est['sd_log10']:.4g}")
    print(f"true = {args.true_threshold:g}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    geom = _load_geometry(args.geometry)
    app = create_app(data_dir=args.data_dir, geometry=geom)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="attnfov")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gain", help="evaluate threshold and attention gain")
    p.add_argument("--attention", required=True,
                   help="low|medium|high or a continuous a_c in [0,1]")
    p.add_argument("--eccentricity", required=True, help="degrees, comma separated")
    p.set_defaults(func=cmd_gain)

    p = sub.add_parser("fit", help="fit threshold models to a CSV of measurements")
    p.add_argument("--input", help="CSV (subject,eccentricity_deg,attention,contrast,repetition); "
                                   "defaults to the packaged study means")
    p.add_argument("--model", choices=("per-condition", "unified"), default="per-condition")
    p.add_argument("--out", help="write the fit report here instead of stdout")
    p.add_argument("--residuals", help="write per-sample residuals CSV here")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("stimulus", help="stimulus synthesis")
    stim_sub = p.add_subparsers(dest="stimulus_command", required=True)
    g = stim_sub.add_parser("gabor", help="render a Gabor patch PNG")
    g.add_argument("--eccentricity", type=float, default=21.0)
    g.add_argument("--sigma", type=float, default=1.0)
    g.add_argument("--frequency", type=float, default=2.0)
    g.add_argument("--contrast", type=float, default=0.5)
    g.add_argument("--orientation", type=float, default=0.0)
    g.add_argument("--phase", type=float, default=0.0)
    g.add_argument("--geometry", help="geometry kv file (default: study display)")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_stimulus_gabor)
    r = stim_sub.add_parser("rsvp", help="print a letter schedule")
    r.add_argument("--letters", type=int, default=6)
    r.add_argument("--seed", type=int, default=0)
    r.set_defaults(func=cmd_stimulus_rsvp)

    p = sub.add_parser("foveate", help="apply eccentricity-dependent blur to a PNG")
    p.add_argument("--image", required=True)
    p.add_argument("--slope", type=float, required=True)
    p.add_argument("--gaze", help="cx,cy in pixels (default: image center)")
    p.add_argument("--geometry")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_foveate)

    p = sub.add_parser("predict", help="quality score between two PNGs")
    p.add_argument("--ref", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--attention", default="low")
    p.add_argument("--geometry")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("optimize-slope", help="largest acceptable MAR slope")
    p.add_argument("--image", required=True,
                   help="PNG path or one of tulips|city|mountain|forest")
    p.add_argument("--attention", default="high")
    p.add_argument("--qthr", type=float, required=True)
    p.add_argument("--m-lo", type=float, default=0.0)
    p.add_argument("--m-hi", type=float, default=0.2)
    p.add_argument("--geometry")
    p.set_defaults(func=cmd_optimize_slope)

    p = sub.add_parser("bandwidth", help="computational gain sweep CSV")
    p.add_argument("--fov-min", type=float, default=10.0)
    p.add_argument("--fov-max", type=float, default=180.0)
    p.add_argument("--fov-step", type=float, default=10.0)
    p.add_argument("--ppd", default="20,60")
    p.add_argument("--slopes", default="low,medium,high")
    p.add_argument("--out")
    p.set_defaults(func=cmd_bandwidth)

    p = sub.add_parser("simulate-staircase", help="closed-loop staircase run")
    p.add_argument("--true-threshold", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=40)
    p.set_defaults(func=cmd_simulate_staircase)

    p = sub.add_parser("serve", help="run the study HTTP service")
    p.add_argument("--data-dir", default=None)
    p.add_argument("--geometry")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
