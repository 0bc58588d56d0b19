"""Command-line front end.

Subcommands: synth, run-study, stream-sim, analyze-smr, analyze-mrcp,
dump-defaults. Every command is deterministic given (config, seed); exit
codes are 0 on success, 1 on a property failure (stream-sim equivalence),
2 on usage or I/O errors.
"""

from __future__ import annotations

import argparse
import json
import queue
import sys
import threading
from pathlib import Path

import numpy as np

from .container import read_markers, read_recording, write_markers, write_recording
from .data import LEFT, REST, RIGHT, ChannelKind
from .errors import ValidationError
from .ica import ica_apply
from .spectral import export_tfr_csv
from .streaming import (
    batch_causal_decode,
    frames_from_bytes,
    online_emg_decode,
    stream_producer,
)
from .study import (
    ExperimentConfig,
    Session,
    driving_markers_from_stream,
    export_csp_patterns_csv,
    export_mrcp_csv,
    fit_artifact_ica,
    mrcp_averages,
    preprocess_eeg_mrcp,
    preprocess_eeg_smr,
    run_transfer_study,
    smr_tfr_maps,
    synthesize_sessions,
    train_emg_model,
)

SESSIONS = ("calibration", "driving")


def _load_config(args: argparse.Namespace) -> ExperimentConfig:
    if args.config:
        config = ExperimentConfig.from_json(Path(args.config).read_text())
    else:
        config = ExperimentConfig()
    if args.seed is not None:
        config.seed = args.seed
    if args.out is not None:
        config.out_dir = args.out
    return config


def _load_sessions(out_dir: Path) -> dict[str, Session]:
    sessions = {}
    for name in SESSIONS:
        rec_path = out_dir / f"{name}.mbr1"
        mark_path = out_dir / f"{name}.markers.jsonl"
        if not rec_path.exists() or not mark_path.exists():
            raise FileNotFoundError(
                f"missing session files for {name!r} in {out_dir} "
                f"(run `mockbci synth` first)")
        sessions[name] = Session(read_recording(rec_path),
                                 read_markers(mark_path))
    return sessions


def cmd_dump_defaults(args: argparse.Namespace) -> int:
    print(ExperimentConfig().to_json())
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    config = _load_config(args)
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cal, drv = synthesize_sessions(config)
    for name, session in (("calibration", cal), ("driving", drv)):
        write_recording(out / f"{name}.mbr1", session.recording)
        write_markers(out / f"{name}.markers.jsonl", session.markers)
        (out / f"{name}.truth.json").write_text(
            json.dumps(session.truth.to_json_dict(), indent=2, sort_keys=True)
            + "\n")
    (out / "config.json").write_text(config.to_json() + "\n")
    print(f"wrote calibration + driving sessions to {out}")
    return 0


def cmd_run_study(args: argparse.Namespace) -> int:
    from . import plots

    config = _load_config(args)
    out = Path(config.out_dir)
    sessions = _load_sessions(out)
    cal, drv = sessions["calibration"], sessions["driving"]

    cal_filtered = preprocess_eeg_smr(cal.recording, config)
    drv_filtered = preprocess_eeg_smr(drv.recording, config)
    ica = fit_artifact_ica(cal_filtered, config)
    result = run_transfer_study(cal, drv, config, ica=ica,
                                cal_filtered=cal_filtered,
                                drv_filtered=drv_filtered)

    report = {"seed": config.seed, **result.to_json_dict()}
    (out / "report.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n")

    for name, bank, session in (("calibration", result.cal_bank, cal),
                                ("driving", result.drv_bank, drv)):
        export_csp_patterns_csv(bank, session.recording.channels,
                                out / f"csp_patterns_{name}.csv")
        plots.save_csp_patterns_figure(bank, session.recording.channels,
                                       f"CSP patterns {name}",
                                       out / f"csp_patterns_{name}.png")
    for name in ("calibration", "driving", "transfer"):
        plots.save_confusion_figure(getattr(result, name),
                                    f"{name}", out / f"confusion_{name}.png")
    plots.save_f1_summary_figure(
        {name: getattr(result, name).macro_f1
         for name in ("calibration", "driving", "transfer")},
        out / "f1_summary.png")

    _write_smr(out, config, cal, drv, cal_filtered, drv_filtered, result)
    _write_mrcp(out, config, cal, drv, result)
    print(f"macro-F1 calibration={result.calibration.macro_f1:.3f} "
          f"driving={result.driving.macro_f1:.3f} "
          f"transfer={result.transfer.macro_f1:.3f}")
    print(f"report and artifacts written to {out}")
    return 0


def _result_driving_markers(config, result):
    from .paradigm import runs_to_markers, segment_driving

    times, stream = result.prediction_stream
    runs = segment_driving(times, stream, min_duration_s=config.min_run_s)
    return runs_to_markers(runs)


def _write_smr(out, config, cal, drv, cal_filtered, drv_filtered, result):
    from . import plots

    drv_markers = _result_driving_markers(config, result)
    cal_clean = ica_apply(result.ica, cal_filtered)
    drv_clean = ica_apply(result.ica, drv_filtered)
    for name, clean, markers in (("calibration", cal_clean, cal.markers),
                                 ("driving", drv_clean, drv_markers)):
        maps = smr_tfr_maps(clean, markers, config)
        for label in (LEFT, RIGHT):
            per_channel = {ch: maps[(lab, ch)] for (lab, ch) in maps
                           if lab == label}
            for ch, tfr in per_channel.items():
                export_tfr_csv(tfr, out / f"tfr_{name}_{label.lower()}_{ch}.csv")
            plots.save_tfr_figure(per_channel, f"{name} {label}",
                                  out / f"tfr_{name}_{label.lower()}.png")


def _write_mrcp(out, config, cal, drv, result):
    from . import plots

    drv_markers = _result_driving_markers(config, result)
    for name, session, markers in (("calibration", cal, cal.markers),
                                   ("driving", drv, drv_markers)):
        clean = preprocess_eeg_mrcp(session.recording, config, result.ica)
        traces = mrcp_averages(clean, markers, config)
        for ch, per_class in traces.items():
            export_mrcp_csv(per_class, out / f"mrcp_{name}_{ch}.csv")
        plots.save_mrcp_figure(traces, name, out / f"mrcp_{name}.png")


def cmd_analyze_smr(args: argparse.Namespace) -> int:
    from . import plots

    config = _load_config(args)
    out = Path(config.out_dir)
    sessions = _load_sessions(out)
    cal, drv = sessions["calibration"], sessions["driving"]
    emg_model, _ = train_emg_model(cal, config)
    drv_markers = driving_markers_from_stream(drv, emg_model, config)
    cal_filtered = preprocess_eeg_smr(cal.recording, config)
    drv_filtered = preprocess_eeg_smr(drv.recording, config)
    ica = fit_artifact_ica(cal_filtered, config)
    for name, filtered, markers in (("calibration", cal_filtered, cal.markers),
                                    ("driving", drv_filtered, drv_markers)):
        clean = ica_apply(ica, filtered)
        maps = smr_tfr_maps(clean, markers, config)
        for label in (LEFT, RIGHT):
            per_channel = {ch: maps[(lab, ch)] for (lab, ch) in maps
                           if lab == label}
            for ch, tfr in per_channel.items():
                export_tfr_csv(tfr, out / f"tfr_{name}_{label.lower()}_{ch}.csv")
            plots.save_tfr_figure(per_channel, f"{name} {label}",
                                  out / f"tfr_{name}_{label.lower()}.png")
    print(f"time-frequency maps written to {out}")
    return 0


def cmd_analyze_mrcp(args: argparse.Namespace) -> int:
    from . import plots

    config = _load_config(args)
    out = Path(config.out_dir)
    sessions = _load_sessions(out)
    cal, drv = sessions["calibration"], sessions["driving"]
    emg_model, _ = train_emg_model(cal, config)
    drv_markers = driving_markers_from_stream(drv, emg_model, config)
    cal_filtered = preprocess_eeg_smr(cal.recording, config)
    ica = fit_artifact_ica(cal_filtered, config)
    for name, session, markers in (("calibration", cal, cal.markers),
                                   ("driving", drv, drv_markers)):
        clean = preprocess_eeg_mrcp(session.recording, config, ica)
        traces = mrcp_averages(clean, markers, config)
        for ch, per_class in traces.items():
            export_mrcp_csv(per_class, out / f"mrcp_{name}_{ch}.csv")
        plots.save_mrcp_figure(traces, name, out / f"mrcp_{name}.png")
    print(f"slow-potential averages written to {out}")
    return 0


def cmd_stream_sim(args: argparse.Namespace) -> int:
    config = _load_config(args)
    out = Path(config.out_dir)
    sessions = _load_sessions(out)
    cal, drv = sessions["calibration"], sessions["driving"]
    emg_model, _ = train_emg_model(cal, config)

    raw = drv.recording.pick_kind(ChannelKind.EMG)
    decoder_cfg = config.emg_decoder_config(raw.fs)

    # producer and decoder as independent workers over a bounded channel
    channel: queue.Queue = queue.Queue(maxsize=64)
    SENTINEL = None

    def produce() -> None:
        for chunk in stream_producer(raw, drv.markers,
                                     chunk_samples=args.chunk_samples,
                                     pacing=args.pacing):
            channel.put(chunk)
        channel.put(SENTINEL)

    def byte_chunks():
        while True:
            item = channel.get()
            if item is SENTINEL:
                return
            yield item

    worker = threading.Thread(target=produce, daemon=True)
    worker.start()
    decoder = None
    if args.tamper:
        from .streaming import EmgDecoder

        decoder = EmgDecoder(emg_model, decoder_cfg,
                             n_channels=raw.n_channels)
        decoder.enable_tamper(at_emission=50)
    times, labels = online_emg_decode(frames_from_bytes(byte_chunks()),
                                      emg_model, decoder_cfg, decoder=decoder)
    worker.join()

    lines = ["time_s,class"] + [f"{t!r},{lab}" for t, lab in zip(times, labels)]
    (out / "predictions.csv").write_text("\n".join(lines) + "\n")

    ref_times, ref_labels = batch_causal_decode(raw, emg_model, decoder_cfg)
    identical = (len(times) == len(ref_times)
                 and np.array_equal(times, ref_times)
                 and np.array_equal(labels, ref_labels))
    if identical:
        print(f"PASS: online stream matches the offline oracle "
              f"({len(times)} predictions)")
        return 0
    n = min(len(labels), len(ref_labels))
    diff = int(np.sum(labels[:n] != ref_labels[:n])) + abs(len(labels)
                                                           - len(ref_labels))
    print(f"FAIL: online stream deviates from the offline oracle "
          f"({diff} differing predictions)")
    return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mockbci",
        description="Synthetic calibration-to-control BCI pipeline")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file "
                        "(see `mockbci dump-defaults`)")
    common.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
    common.add_argument("--out", default=None,
                        help="override the config output directory")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("dump-defaults", parents=[common],
                   help="print the fully populated default config"
                   ).set_defaults(func=cmd_dump_defaults)
    sub.add_parser("synth", parents=[common],
                   help="generate calibration + driving session files"
                   ).set_defaults(func=cmd_synth)
    sub.add_parser("run-study", parents=[common],
                   help="run the full offline study on session files"
                   ).set_defaults(func=cmd_run_study)
    sub.add_parser("analyze-smr", parents=[common],
                   help="time-frequency maps for both sessions"
                   ).set_defaults(func=cmd_analyze_smr)
    sub.add_parser("analyze-mrcp", parents=[common],
                   help="slow-potential averages for both sessions"
                   ).set_defaults(func=cmd_analyze_mrcp)
    sim = sub.add_parser("stream-sim", parents=[common],
                         help="stream the driving session through the online "
                         "decoder and verify it against the offline oracle")
    sim.add_argument("--chunk-samples", type=int, default=32)
    sim.add_argument("--pacing", type=float, default=0.0)
    sim.add_argument("--tamper", action="store_true", help=argparse.SUPPRESS)
    sim.set_defaults(func=cmd_stream_sim)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, FileNotFoundError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
