"""Command-line entry points: analyze, synth, serve, replay.

Exit codes: 0 success, 1 runtime error, 2 usage error. Every analysis
parameter is a flag with the documented default and is echoed into
report.txt, so runs are self-describing and reproducible.
"""

from __future__ import annotations

import argparse
import json
import signal
import sys
import threading
import time
from pathlib import Path

import numpy as np

from . import geometry, ingest, perf, pupil, scan, stats, synth
from .model import (OTH, AoiConfigError, LogParseError, Segment,
                    default_aoi_model, dump_aoi_model, load_aoi_model,
                    load_segments)


def _load_model(path: str | None):
    if path is None:
        return default_aoi_model()
    return load_aoi_model(Path(path).read_text())


def _fmt(x) -> str:
    if x is None:
        return ""
    return f"{x:.9g}"


# --------------------------------------------------------------------------
# analyze

def _add_analyze_parser(sub) -> None:
    p = sub.add_parser("analyze", help="offline analysis of a recorded session")
    p.add_argument("--gaze", required=True, help="gaze CSV path")
    p.add_argument("--flight", required=True, help="flight CSV path")
    p.add_argument("--aoi", required=True, help="AOI config JSON path")
    p.add_argument("--segments", required=True, help="segments JSON path")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--segment", help="restrict outputs to one named segment")
    p.add_argument("--gaze-offset-ms", type=int, default=0)
    p.add_argument("--quality-floor", type=float, default=0.2)
    p.add_argument("--dispersion-deg", type=float, default=scan.DEFAULT_DISPERSION_DEG)
    p.add_argument("--min-fixation-ms", type=float, default=scan.DEFAULT_MIN_FIXATION_MS)
    p.add_argument("--gap-tolerance-ms", type=float, default=0.0)
    p.add_argument("--bin-px", type=int, default=scan.DEFAULT_BIN_PX)
    p.add_argument("--heat-mode", choices=("fixation", "sample"),
                   default="fixation",
                   help="fixation maps from fixation centroids (default) "
                        "or per-sample accumulation")
    p.add_argument("--resample-hz", type=float, default=pupil.DEFAULT_RESAMPLE_HZ)
    p.add_argument("--welch-seg", type=int, default=pupil.DEFAULT_WELCH_SEG)
    p.add_argument("--welch-overlap", type=float, default=pupil.DEFAULT_WELCH_OVERLAP)
    p.add_argument("--hp-cutoff-hz", type=float, default=pupil.DEFAULT_HP_CUTOFF_HZ)
    p.add_argument("--hp-order", type=int, default=pupil.DEFAULT_HP_ORDER)
    p.add_argument("--smooth-n", type=int, default=pupil.DEFAULT_SMOOTH_N)
    p.add_argument("--closed-threshold", type=float, default=pupil.DEFAULT_CLOSED_THRESHOLD)
    p.add_argument("--piw-threshold", type=float, default=perf.DEFAULT_MOTION_THRESHOLD)
    p.add_argument("--pf-window-s", type=float, default=perf.DEFAULT_PF_WINDOW_S)
    p.add_argument("--pf-hop-s", type=float, default=perf.DEFAULT_PF_HOP_S)
    p.add_argument("--compare", default="OTW,PFD,EICAS",
                   help="comma list of top-level AOIs for the PDT comparison "
                        "harness (per-segment values as replicates)")


def _segment_samples(classified, segment):
    return [c for c in classified if segment.t_start_ms <= c.sample.t_ms <= segment.t_end_ms]


def _surface_of(aoi_id: str) -> str:
    return aoi_id.split(".", 1)[0]


def cmd_analyze(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        model = _load_model(args.aoi)
        with open(args.gaze) as fh:
            gaze = ingest.parse_gaze_log(fh)
        with open(args.flight) as fh:
            flight = ingest.parse_flight_log(fh)
        segments = load_segments(Path(args.segments).read_text())
    except (AoiConfigError, LogParseError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1

    session = ingest.align_streams(gaze, flight, args.gaze_offset_ms, segments)
    name = Path(args.gaze).stem
    if args.segment:
        segments = [s for s in segments if s.name == args.segment]
        if not segments:
            print(f"error: no segment named {args.segment!r}", file=sys.stderr)
            return 1
    span = Segment(name="ALL", t_start_ms=session.gaze[0].t_ms,
                   t_end_ms=session.gaze[-1].t_ms)
    report_segments = ([span] if not args.segment else []) + segments

    gaze_rows = session.gaze
    if args.segment:
        only = segments[0]
        gaze_rows = [s for s in gaze_rows
                     if only.t_start_ms <= s.t_ms <= only.t_end_ms]
    classified = geometry.classify_stream(gaze_rows, model, args.quality_floor)
    fixations = scan.detect_fixations(classified, args.dispersion_deg,
                                      args.min_fixation_ms)
    visits = scan.segment_dwells(classified, args.gap_tolerance_ms)

    # pdt.csv
    pdt_rows = ["session,segment,aoi_id,pdt_percent"]
    pdt_by_segment = {}
    for seg in report_segments:
        table = scan.pdt(visits, seg)
        pdt_by_segment[seg.name] = table
        for aoi in sorted(table):
            pdt_rows.append(f"{name},{seg.name},{aoi},{_fmt(table[aoi])}")
    (out / "pdt.csv").write_text("\n".join(pdt_rows) + "\n")

    # fixation maps
    fixmap_files = []
    for surface in model.surfaces:
        if args.heat_mode == "sample":
            fmap = scan.sample_heat_map(classified, model, surface.id, args.bin_px)
        else:
            fmap = scan.fixation_map(fixations, model, surface.id, args.bin_px)
        (out / f"fixmap_{surface.id}.csv").write_text(scan.fixation_map_csv(fmap))
        (out / f"fixmap_{surface.id}.pgm").write_text(scan.fixation_map_pgm(fmap))
        fixmap_files.append(f"fixmap_{surface.id}.csv")

    # bands.csv: workload + fatigue metrics per report segment
    band_rows = ["session,segment,lf_mean,hf_mean,ratio,fluctuation_index,closure_fraction"]
    for seg in report_segments:
        seg_samples = [c.sample for c in _segment_samples(classified, seg)]
        lf = hf = ratio = flux = closure = None
        lids = [(s.t_ms, s.eyelid_open) for s in seg_samples if s.eyelid_open is not None]
        if lids:
            closure = pupil.eye_closure_fraction([t for t, _ in lids],
                                                 [v for _, v in lids],
                                                 args.closed_threshold)
        try:
            spectrum = pupil.workload_spectrum(seg_samples, args.resample_hz,
                                               args.welch_seg, args.welch_overlap)
            (out / f"spectrum_{seg.name}.csv").write_text(
                pupil.spectrum_csv(spectrum))
            bands = pupil.lf_hf_ratio(spectrum)
            lf, hf, ratio = bands.lf_mean, bands.hf_mean, bands.ratio
        except ValueError:
            pass
        try:
            fat = pupil.fatigue_spectrum(seg_samples, args.resample_hz,
                                         args.smooth_n, args.hp_cutoff_hz,
                                         args.hp_order, args.welch_seg,
                                         args.welch_overlap)
            flux = fat.fluctuation_index
        except ValueError:
            pass
        band_rows.append(f"{name},{seg.name},{_fmt(lf)},{_fmt(hf)},{_fmt(ratio)},"
                         f"{_fmt(flux)},{_fmt(closure)}")
    (out / "bands.csv").write_text("\n".join(band_rows) + "\n")

    # perf.csv
    perf_rep = perf.perf_report(session.flight, segments, args.piw_threshold,
                                args.pf_window_s, args.pf_hop_s)
    perf_rows = ["session,segment,metric,axis,value"]
    for sp in perf_rep.segments:
        for axis in sorted(sp.rmse):
            perf_rows.append(f"{name},{sp.segment},rmse,{axis},{_fmt(sp.rmse[axis])}")
        for axis in perf.INCEPTOR_AXES:
            if axis in sp.piw:
                perf_rows.append(f"{name},{sp.segment},piw_aggressiveness,{axis},"
                                 f"{_fmt(sp.piw[axis].aggressiveness)}")
                perf_rows.append(f"{name},{sp.segment},piw_duty_cycle,{axis},"
                                 f"{_fmt(sp.piw[axis].duty_cycle)}")
            if axis in sp.power_freq and len(sp.power_freq[axis][1]):
                perf_rows.append(f"{name},{sp.segment},power_frequency_mean_hz,{axis},"
                                 f"{_fmt(float(np.mean(sp.power_freq[axis][1])))}")
    (out / "perf.csv").write_text("\n".join(perf_rows) + "\n")

    # power-frequency series detail
    pf_rows = ["segment,axis,t_s,power_frequency_hz"]
    for sp in perf_rep.segments:
        for axis in perf.INCEPTOR_AXES:
            if axis not in sp.power_freq:
                continue
            for t_s, hz in zip(*sp.power_freq[axis]):
                pf_rows.append(f"{sp.segment},{axis},{_fmt(t_s)},{_fmt(hz)}")
    (out / "powerfreq.csv").write_text("\n".join(pf_rows) + "\n")

    # stats.csv: PDT comparison across top-level AOIs, per-segment replicates
    stats_rows = ["comparison,statistic,value,p,effect_size"]
    compare_ids = [s.strip() for s in args.compare.split(",") if s.strip()]
    groups = []
    for aoi in compare_ids:
        values = []
        for seg in segments:
            table = pdt_by_segment.get(seg.name) or scan.pdt(visits, seg)
            total = sum(v for k, v in table.items() if _surface_of(k) == aoi)
            values.append(total)
        groups.append(values)
    if len(segments) >= 2 and len(groups) >= 2:
        label = "pdt:" + "+".join(compare_ids)
        for aoi, values in zip(compare_ids, groups):
            if len(values) >= 8:
                try:
                    ad = stats.anderson_darling_normal(values)
                    stats_rows.append(f"{label}/{aoi},anderson_darling_a2adj,"
                                      f"{_fmt(ad.a2_adjusted)},"
                                      f"{'reject' if ad.reject_at_0_05 else 'ok'},")
                except ValueError:
                    pass
        try:
            anova = stats.one_way_anova(groups)
            stats_rows.append(f"{label},anova_f,{_fmt(anova.f_stat)},"
                              f"{_fmt(anova.p_value)},{_fmt(anova.eta_squared)}")
            tukey = stats.tukey_hsd(groups)
            for pair in tukey.pairs:
                pa, pb = compare_ids[pair.group_a], compare_ids[pair.group_b]
                stats_rows.append(f"{label}/{pa}-vs-{pb},tukey_q,{_fmt(pair.q_stat)},"
                                  f"{_fmt(pair.p_value)},")
            if len(groups) >= 2:
                tt = stats.t_test(groups[0], groups[1])
                stats_rows.append(
                    f"{label}/{compare_ids[0]}-vs-{compare_ids[1]},t_pooled,"
                    f"{_fmt(tt.t_stat)},{_fmt(tt.p_value)},{_fmt(tt.cohens_d)}")
        except ValueError as e:
            stats_rows.append(f"{label},error,\"{e}\",,")
    (out / "stats.csv").write_text("\n".join(stats_rows) + "\n")

    # report.txt
    lines = [
        f"session: {name}",
        f"gaze samples: {len(session.gaze)}   flight samples: {len(session.flight)}",
        f"fixations: {len(fixations)}   dwell visits: {len(visits)}",
        "",
        "parameters:",
    ]
    for key in ("gaze_offset_ms", "quality_floor", "dispersion_deg",
                "min_fixation_ms", "gap_tolerance_ms", "bin_px", "heat_mode",
                "resample_hz", "welch_seg", "welch_overlap", "hp_cutoff_hz",
                "hp_order", "smooth_n", "closed_threshold", "piw_threshold",
                "pf_window_s", "pf_hop_s", "compare"):
        lines.append(f"  {key} = {getattr(args, key)}")
    lines.append("")
    for seg in report_segments:
        table = pdt_by_segment[seg.name]
        top = sorted(table.items(), key=lambda kv: -kv[1])[:6]
        lines.append(f"segment {seg.name} [{seg.t_start_ms}..{seg.t_end_ms} ms] "
                     "PDT top: " + ", ".join(f"{a} {v:.2f}%" for a, v in top))
    lines.append("")
    lines.append("files: pdt.csv bands.csv perf.csv powerfreq.csv stats.csv "
                 + " ".join(fixmap_files))
    (out / "report.txt").write_text("\n".join(lines) + "\n")
    print(f"analysis written to {out}")
    return 0


# --------------------------------------------------------------------------
# synth

def _add_synth_parser(sub) -> None:
    p = sub.add_parser("synth", help="generate a synthetic scenario")
    p.add_argument("--scenario", required=True,
                   help="nominal | stall | lowvis | path to a script JSON")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--aoi", help="AOI config (default: shipped layout)")


def cmd_synth(args) -> int:
    try:
        model = _load_model(args.aoi)
        if args.scenario in synth.PRESETS:
            script = synth.preset(args.scenario, args.seed)
        elif Path(args.scenario).exists():
            script = synth.load_script(args.scenario)
            script.seed = args.seed
        else:
            print(f"error: unknown scenario {args.scenario!r}; "
                  f"valid: {', '.join(synth.PRESETS)} or a script path",
                  file=sys.stderr)
            return 1
        result = synth.generate(script, model)
        synth.write_outputs(result, args.out, model)
    except (AoiConfigError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    print(f"scenario {script.name!r} (seed {script.seed}) written to {args.out}")
    return 0


# --------------------------------------------------------------------------
# serve / replay

def _add_serve_parser(sub) -> None:
    p = sub.add_parser("serve", help="run the live evaluator backend")
    p.add_argument("--ingest", default="127.0.0.1:9870", help="host:port for TCP gaze ingest")
    p.add_argument("--push-port", type=int, default=9871)
    p.add_argument("--push-host", default="127.0.0.1")
    p.add_argument("--aoi", help="AOI config (default: shipped layout)")
    p.add_argument("--out", default="sessions", help="recordings directory")
    p.add_argument("--ui-dir", help="serve this directory as the console UI")
    p.add_argument("--autostart", action="store_true",
                   help="open a session immediately")


def _add_replay_parser(sub) -> None:
    p = sub.add_parser("replay", help="replay a recorded session")
    p.add_argument("--session", required=True, help="recorded session directory")
    p.add_argument("--speed", type=float, default=1.0)
    p.add_argument("--push-port", type=int, default=9871)
    p.add_argument("--push-host", default="127.0.0.1")
    p.add_argument("--aoi", help="AOI config (default: the session's aoi.json)")
    p.add_argument("--out", default="sessions", help="recordings directory")
    p.add_argument("--ui-dir", help="serve this directory as the console UI")
    p.add_argument("--once", action="store_true",
                   help="exit when the replay completes")
    p.add_argument("--no-autostart", action="store_true",
                   help="wait for a control start instead of replaying immediately")


def _run_until_interrupt(hub, handles, done=None) -> int:
    stop_flag = {"stop": False}

    def _sigint(_sig, _frame):
        stop_flag["stop"] = True

    old = None
    if threading.current_thread() is threading.main_thread():
        old = signal.signal(signal.SIGINT, _sigint)
    try:
        while not stop_flag["stop"]:
            if done is not None and done():
                break
            time.sleep(0.1)
    except KeyboardInterrupt:
        pass
    finally:
        if old is not None:
            signal.signal(signal.SIGINT, old)
        if hub.status == "running":
            hub.stop()
        for h in handles:
            h()
    return 0


def cmd_serve(args) -> int:
    from . import service, stream
    try:
        model = _load_model(args.aoi)
        host, _, port = args.ingest.partition(":")
        hub = stream.SessionHub(model, args.out)
        ingest_server = stream.IngestServer(hub, host or "127.0.0.1", int(port or 0))
        handle = service.serve_hub(hub, args.push_host, args.push_port,
                                   ui_dir=args.ui_dir)
    except (AoiConfigError, OSError, RuntimeError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    ingest_server.start()
    if args.autostart:
        hub.start()
    print(f"ingest on {args.ingest}  push/control on "
          f"http://{args.push_host}:{args.push_port}  recordings in {args.out}")
    return _run_until_interrupt(hub, [ingest_server.close, handle.stop])


def cmd_replay(args) -> int:
    from . import service, stream
    session_dir = Path(args.session)
    try:
        aoi_path = args.aoi or (session_dir / "aoi.json")
        model = load_aoi_model(Path(aoi_path).read_text())
        hub = stream.SessionHub(model, args.out)
        state = {"replayer": None}

        def launch_replay():
            state["replayer"] = stream.Replayer(hub, session_dir, args.speed)
            state["replayer"].start()

        hub.on_start = launch_replay
        handle = service.serve_hub(hub, args.push_host, args.push_port,
                                   ui_dir=args.ui_dir)
    except (AoiConfigError, LogParseError, OSError, RuntimeError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    if not args.no_autostart:
        hub.start()
    print(f"replaying {session_dir} at {args.speed}x  push/control on "
          f"http://{args.push_host}:{args.push_port}")

    def done():
        if not args.once:
            return False
        rep = state["replayer"]
        return rep is not None and not rep._thread.is_alive()

    def abort_replay():
        if state["replayer"] is not None:
            state["replayer"].abort()

    return _run_until_interrupt(hub, [abort_replay, handle.stop], done=done)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="gazeflight",
        description="Cockpit eye-gaze and flight-telemetry analytics")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_analyze_parser(sub)
    _add_synth_parser(sub)
    _add_serve_parser(sub)
    _add_replay_parser(sub)
    args = parser.parse_args(argv)
    commands = {"analyze": cmd_analyze, "synth": cmd_synth,
                "serve": cmd_serve, "replay": cmd_replay}
    return commands[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
