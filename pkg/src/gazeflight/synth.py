"""Synthetic scenario generator with known ground truth.

Produces gaze and flight logs in the ingest CSV formats plus a truth
record (schedule proportions, injected tones, injected tracking error)
so every downstream metric can be verified without human data. White
noise comes from the Philox 4x64 counter-based generator, so identical
(script, seed) pairs reproduce logs byte for byte.

Three presets mirror the study profiles: ``nominal`` (take-off to
landing with out-the-window-dominated scanning), ``stall`` (6000 ft
climb, AOA/ROC-heavy scanning, a recovery segment), and ``lowvis``
(same circuit with the schedule shifted onto the head-down displays).
The preset proportions are illustrative, not claims about behaviour.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .geometry import aoi_centre, normalize
from .model import OTH, AoiModel, Segment, Vec3

PRESETS = ("nominal", "stall", "lowvis")

DEFAULT_GAZE_RATE_HZ = 40.0
DEFAULT_FLIGHT_RATE_HZ = 20.0
DEFAULT_JITTER_DEG = 0.3
#: Direction used for scheduled OTH dwells; aims at the dead zone between
#: the out-the-window screen and the instrument panel, left of the
#: autopilot panel, so saccades to it stay short.
OTH_DIR: Vec3 = normalize((-0.42, -0.05, 0.9))

SACCADE_MIN_MS = 40.0
SACCADE_MAX_MS = 60.0


@dataclass(frozen=True)
class PupilModel:
    baseline_mm: float = 4.0
    tones: tuple[tuple[float, float], ...] = ()   # (freq_hz, amplitude_mm)
    noise_sd: float = 0.01


@dataclass(frozen=True)
class EyelidModel:
    # closure episodes: (onset_ms from segment start, duration_ms, open_level)
    episodes: tuple[tuple[float, float, float], ...] = ()


@dataclass
class FlightProfile:
    """Per-segment flight trace: linear base values plus error tones."""

    alt_start_ft: float
    alt_end_ft: float
    spd_start_kt: float
    spd_end_kt: float
    hdg_start_deg: float
    hdg_end_deg: float
    error_tones: dict[str, tuple[tuple[float, float], ...]] = field(default_factory=dict)
    inceptor_tones: dict[str, tuple[tuple[float, float], ...]] = field(default_factory=dict)


@dataclass
class SegmentScript:
    segment: Segment
    schedule: list[tuple[str, int]]         # (aoi_id, dwell_ms)
    flight: FlightProfile
    pupil: PupilModel = PupilModel()
    eyelid: EyelidModel = EyelidModel()


@dataclass
class ScenarioScript:
    seed: int
    segments: list[SegmentScript]
    gaze_rate_hz: float = DEFAULT_GAZE_RATE_HZ
    flight_rate_hz: float = DEFAULT_FLIGHT_RATE_HZ
    eye_origin: Vec3 = (0.0, 0.0, 0.0)
    jitter_deg: float = DEFAULT_JITTER_DEG
    name: str = "custom"


@dataclass
class SynthResult:
    gaze_csv: str
    flight_csv: str
    segments_json: str
    truth: dict


def validate_script(script: ScenarioScript, model: AoiModel) -> None:
    known = set(model.aoi_ids()) | {OTH}
    for ss in script.segments:
        for aoi, _ in ss.schedule:
            if aoi not in known:
                raise ValueError(f"schedule references unknown AOI {aoi!r}")
        total = sum(ms for _, ms in ss.schedule)
        if total != ss.segment.duration_ms:
            raise ValueError(
                f"segment {ss.segment.name!r}: schedule sums to {total} ms, "
                f"expected {ss.segment.duration_ms} ms")
        if any(f >= script.gaze_rate_hz / 2 for f, _ in ss.pupil.tones):
            raise ValueError("pupil tone above the gaze-stream Nyquist rate")


def _jittered(rng, base: Vec3, sigma_deg: float) -> Vec3:
    if sigma_deg <= 0:
        return base
    # two small rotations about axes orthogonal to the base direction
    ref = (0.0, 1.0, 0.0) if abs(base[1]) < 0.9 else (1.0, 0.0, 0.0)
    u = np.cross(base, ref)
    u /= np.linalg.norm(u)
    v = np.cross(base, u)
    a1, a2 = rng.normal(0.0, math.radians(sigma_deg), size=2)
    d = np.asarray(base) + math.tan(a1) * u + math.tan(a2) * v
    return normalize((float(d[0]), float(d[1]), float(d[2])))


def _lerp_dir(a: Vec3, b: Vec3, s: float) -> Vec3:
    d = tuple(a[i] + (b[i] - a[i]) * s for i in range(3))
    return normalize(d)


def _fmt(x: Optional[float]) -> str:
    return "" if x is None else f"{x:.6f}"


def generate(script: ScenarioScript, model: AoiModel) -> SynthResult:
    """Render a scenario to gaze/flight CSV text plus the truth record."""
    validate_script(script, model)
    rng = np.random.Generator(np.random.Philox(script.seed))

    # timeline of scheduled dwells with per-transition saccade sweeps
    dwells = []  # (t_start, t_end, aoi, base_dir)
    for ss in script.segments:
        t = ss.segment.t_start_ms
        for aoi, ms in ss.schedule:
            base = OTH_DIR if aoi == OTH else normalize(tuple(
                np.asarray(aoi_centre(model, aoi)) - np.asarray(script.eye_origin)))
            dwells.append((t, t + ms, aoi, base))
            t += ms
    sweeps = rng.uniform(SACCADE_MIN_MS, SACCADE_MAX_MS, size=len(dwells))

    t_end = script.segments[-1].segment.t_end_ms
    gaze_step = 1000.0 / script.gaze_rate_hz
    n_gaze = int(math.floor(t_end / gaze_step)) + 1
    seg_bounds = [(ss.segment.t_start_ms, ss.segment.t_end_ms, ss)
                  for ss in script.segments]

    gaze_lines = ["t_ms,ox,oy,oz,dx,dy,dz,pupil_mm,eyelid,quality"]
    dwell_idx = 0
    seg_idx = 0
    for i in range(n_gaze):
        t = i * gaze_step
        t_ms = int(round(t))
        while dwell_idx + 1 < len(dwells) and t >= dwells[dwell_idx + 1][0]:
            dwell_idx += 1
        while seg_idx + 1 < len(seg_bounds) and t >= seg_bounds[seg_idx][1]:
            seg_idx += 1
        d_start, d_end, _, base = dwells[dwell_idx]
        # saccade sweeps are centred on dwell boundaries so the carved time
        # splits evenly between the outgoing and incoming AOI
        if dwell_idx > 0 and t < d_start + sweeps[dwell_idx] / 2:
            prev_base = dwells[dwell_idx - 1][3]
            s = 0.5 + (t - d_start) / sweeps[dwell_idx]
            base = _lerp_dir(prev_base, base, s)
        elif dwell_idx + 1 < len(dwells) and t >= d_end - sweeps[dwell_idx + 1] / 2:
            next_base = dwells[dwell_idx + 1][3]
            s = (t - (d_end - sweeps[dwell_idx + 1] / 2)) / sweeps[dwell_idx + 1]
            base = _lerp_dir(base, next_base, s)
        direction = _jittered(rng, base, script.jitter_deg)

        ss = seg_bounds[seg_idx][2]
        ts = (t - ss.segment.t_start_ms) / 1000.0
        pm = ss.pupil
        pupil = pm.baseline_mm + sum(a * math.sin(2 * math.pi * f * ts)
                                     for f, a in pm.tones)
        if pm.noise_sd > 0:
            pupil += rng.normal(0.0, pm.noise_sd)
        pupil = min(10.0, max(1.0, pupil))
        eyelid = 1.0
        rel = t - ss.segment.t_start_ms
        for onset, dur, level in ss.eyelid.episodes:
            if onset <= rel < onset + dur:
                eyelid = level
                break
        o = script.eye_origin
        gaze_lines.append(
            f"{t_ms},{_fmt(o[0])},{_fmt(o[1])},{_fmt(o[2])},"
            f"{_fmt(direction[0])},{_fmt(direction[1])},{_fmt(direction[2])},"
            f"{_fmt(pupil)},{_fmt(eyelid)},{_fmt(1.0)}")

    flight_step = 1000.0 / script.flight_rate_hz
    n_flight = int(math.floor(t_end / flight_step)) + 1
    flight_lines = ["t_ms,altitude_ft,airspeed_kt,heading_deg,bank_deg,pitch_deg,"
                    "pitch_in,roll_in,rudder_in,throttle_in"]
    injected: dict[str, dict[str, list[float]]] = {
        ss.segment.name: {"altitude_ft": [], "airspeed_kt": [], "heading_deg": []}
        for ss in script.segments}
    seg_idx = 0
    for i in range(n_flight):
        t = i * flight_step
        t_ms = int(round(t))
        while seg_idx + 1 < len(seg_bounds) and t >= seg_bounds[seg_idx][1]:
            seg_idx += 1
        ss = seg_bounds[seg_idx][2]
        fp = ss.flight
        seg = ss.segment
        frac = (t - seg.t_start_ms) / seg.duration_ms
        ts = (t - seg.t_start_ms) / 1000.0

        def tone_sum(axis: str) -> float:
            return sum(a * math.sin(2 * math.pi * f * ts)
                       for f, a in fp.error_tones.get(axis, ()))

        e_alt = tone_sum("altitude_ft")
        e_spd = tone_sum("airspeed_kt")
        e_hdg = tone_sum("heading_deg")
        alt = fp.alt_start_ft + (fp.alt_end_ft - fp.alt_start_ft) * frac + e_alt
        spd = fp.spd_start_kt + (fp.spd_end_kt - fp.spd_start_kt) * frac + e_spd
        hdg = (fp.hdg_start_deg + (fp.hdg_end_deg - fp.hdg_start_deg) * frac + e_hdg) % 360.0
        injected[seg.name]["altitude_ft"].append(e_alt)
        injected[seg.name]["airspeed_kt"].append(e_spd)
        injected[seg.name]["heading_deg"].append(e_hdg)
        pitch = math.degrees(math.atan2(
            (fp.alt_end_ft - fp.alt_start_ft) / max(seg.duration_ms / 1000.0, 1e-9),
            max(spd, 1.0) * 101.3))  # ft/s over kt->ft/s, display plausibility only
        bank = (fp.hdg_end_deg - fp.hdg_start_deg) / (seg.duration_ms / 1000.0) * 8.0
        bank = max(-25.0, min(25.0, bank))

        def inceptor(axis: str, base: float) -> float:
            v = base + sum(a * math.sin(2 * math.pi * f * ts)
                           for f, a in fp.inceptor_tones.get(axis, ()))
            lo = 0.0 if axis == "throttle" else -1.0
            return min(1.0, max(lo, v))

        flight_lines.append(
            f"{t_ms},{alt:.6f},{spd:.6f},{hdg:.6f},{bank:.6f},{pitch:.6f},"
            f"{inceptor('pitch', 0.0):.6f},{inceptor('roll', 0.0):.6f},"
            f"{inceptor('rudder', 0.0):.6f},{inceptor('throttle', 0.6):.6f}")

    truth_segments = []
    for ss in script.segments:
        seg = ss.segment
        expected_pdt: dict[str, float] = {}
        for aoi, ms in ss.schedule:
            expected_pdt[aoi] = expected_pdt.get(aoi, 0.0) + 100.0 * ms / seg.duration_ms
        entry = {
            "name": seg.name,
            "t_start_ms": seg.t_start_ms,
            "t_end_ms": seg.t_end_ms,
            "targets": seg.targets,
            "schedule": [[aoi, ms] for aoi, ms in ss.schedule],
            "scheduled_dwells": len(ss.schedule),
            "expected_pdt": expected_pdt,
            "pupil_tones": [[f, a] for f, a in ss.pupil.tones],
        }
        if seg.targets:
            entry["injected_rmse"] = {
                axis: float(np.sqrt(np.mean(np.square(vals))))
                for axis, vals in injected[seg.name].items() if vals}
        truth_segments.append(entry)

    truth = {
        "scenario": script.name,
        "seed": script.seed,
        "gaze_rate_hz": script.gaze_rate_hz,
        "flight_rate_hz": script.flight_rate_hz,
        "jitter_deg": script.jitter_deg,
        "rng": "philox4x64",
        "segments": truth_segments,
    }
    segments_json = json.dumps([
        {"name": ss.segment.name, "t_start_ms": ss.segment.t_start_ms,
         "t_end_ms": ss.segment.t_end_ms,
         **({"targets": ss.segment.targets} if ss.segment.targets else {})}
        for ss in script.segments], indent=2)
    return SynthResult(gaze_csv="\n".join(gaze_lines) + "\n",
                       flight_csv="\n".join(flight_lines) + "\n",
                       segments_json=segments_json,
                       truth=truth)


def write_outputs(result: SynthResult, out_dir: str | Path,
                  model: AoiModel) -> None:
    from .model import dump_aoi_model
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "gaze.csv").write_text(result.gaze_csv)
    (out / "flight.csv").write_text(result.flight_csv)
    (out / "segments.json").write_text(result.segments_json)
    (out / "truth.json").write_text(json.dumps(result.truth, indent=2))
    (out / "aoi.json").write_text(dump_aoi_model(model))


# --------------------------------------------------------------------------
# preset scripts

def _build_schedule(duration_ms: int, slots: Sequence[tuple[str, float]],
                    round_ms: int = 12000) -> list[tuple[str, int]]:
    """Fill a segment by repeating a weighted round of dwells.

    Slot weights are proportions of one round; the final dwell is trimmed
    or stretched so the schedule sums exactly to the segment duration.
    """
    total_w = sum(w for _, w in slots)
    round_plan = [(aoi, max(300, int(round(round_ms * w / total_w))))
                  for aoi, w in slots]
    schedule: list[tuple[str, int]] = []
    acc = 0
    while acc < duration_ms:
        for aoi, ms in round_plan:
            ms = min(ms, duration_ms - acc)
            if ms <= 0:
                break
            if schedule and schedule[-1][0] == aoi:
                schedule[-1] = (aoi, schedule[-1][1] + ms)
            else:
                schedule.append((aoi, ms))
            acc += ms
    # avoid a trailing sliver that is too short to fixate on
    if len(schedule) > 1 and schedule[-1][1] < 250:
        aoi, ms = schedule.pop()
        prev_aoi, prev_ms = schedule[-1]
        schedule[-1] = (prev_aoi, prev_ms + ms)
    return schedule


# Round patterns: interleaved (aoi, weight) slots; weights echo the study's
# reported nominal/stall proportions, with OTH absorbing the remainder.
_NOMINAL_LEVEL = [("OTW", 15.3), ("PFD.A3", 5.4), ("OTH", 8.0), ("PFD.A2", 7.75),
                  ("OTW", 15.3), ("PFD.A5", 4.43), ("OTH", 8.0), ("PFD.A1", 3.87),
                  ("PFD.A3", 5.4), ("EICAS.A1", 2.97), ("OTH", 7.0)]
_NOMINAL_CLIMB = [("PFD.A2", 10.0), ("PFD.A3", 8.0), ("OTW", 12.0), ("PFD.A1", 6.0),
                  ("OTH", 6.0), ("EICAS.A1", 4.0), ("PFD.A2", 8.0), ("OTH", 6.0)]
_TAKEOFF = [("OTW", 20.0), ("PFD.A1", 5.0), ("OTW", 15.0), ("EICAS.A1", 4.0),
            ("OTH", 6.0)]
_LANDING = [("OTW", 18.0), ("PFD.A1", 5.0), ("PFD.A2", 4.0), ("OTW", 14.0),
            ("GEAR", 2.5), ("OTH", 6.0)]
_STALL_LEVEL = [("PFD.A4", 7.0), ("PFD.A6", 6.0), ("EICAS.A1", 6.0), ("OTW", 8.0),
                ("PFD.A2", 9.0), ("EICAS.A3", 2.5), ("PFD.A3", 8.0), ("OTH", 8.0),
                ("PFD.A5", 6.0), ("OTH", 6.0)]
_LOWVIS_LEVEL = [("PFD.A3", 11.0), ("PFD.A2", 10.0), ("OTH", 6.0), ("PFD.A1", 8.0),
                 ("PFD.A5", 8.0), ("OTW", 5.0), ("EICAS.A1", 4.0), ("PFD.A3", 9.0),
                 ("OTH", 6.0)]

_LEVEL_TONES = {
    "altitude_ft": ((0.031, 18.0), (0.013, 9.0)),
    "airspeed_kt": ((0.047, 2.4), (0.019, 1.2)),
    "heading_deg": ((0.027, 1.6), (0.011, 0.8)),
}
_INCEPTOR_TONES = {
    "pitch": ((0.21, 0.05), (0.73, 0.02)),
    "roll": ((0.17, 0.04), (0.61, 0.015)),
    "rudder": ((0.11, 0.01),),
    "throttle": ((0.05, 0.03),),
}


def _seg(name, t0_s, t1_s, schedule_slots, flight, targets=None,
         pupil=PupilModel(tones=((0.1, 0.1),)), eyelid=EyelidModel()):
    segment = Segment(name=name, t_start_ms=int(t0_s * 1000),
                      t_end_ms=int(t1_s * 1000), targets=targets)
    return SegmentScript(
        segment=segment,
        schedule=_build_schedule(segment.duration_ms, schedule_slots),
        flight=flight, pupil=pupil, eyelid=eyelid)


def _profile(alt0, alt1, spd0, spd1, hdg0, hdg1, level=False):
    return FlightProfile(
        alt_start_ft=alt0, alt_end_ft=alt1, spd_start_kt=spd0, spd_end_kt=spd1,
        hdg_start_deg=hdg0, hdg_end_deg=hdg1,
        error_tones=_LEVEL_TONES if level else {},
        inceptor_tones=_INCEPTOR_TONES)


#: Presets keep angular jitter below the default so scheduled dwells map
#: one-to-one onto detected fixations at the 1 degree dispersion setting.
PRESET_JITTER_DEG = 0.15


def preset(name: str, seed: int = 0) -> ScenarioScript:
    if name == "nominal":
        segments = [
            _seg("takeoff", 0, 40, _TAKEOFF, _profile(0, 1500, 0, 120, 90, 90)),
            _seg("climb", 40, 100, _NOMINAL_CLIMB, _profile(1500, 4000, 120, 130, 90, 90)),
            _seg("level1", 100, 160, _NOMINAL_LEVEL,
                 _profile(4000, 4000, 130, 130, 90, 90, level=True),
                 targets={"altitude_ft": 4000.0, "airspeed_kt": 130.0,
                          "heading_deg": 90.0}),
            _seg("turn1", 160, 200, _NOMINAL_LEVEL, _profile(4000, 4000, 130, 130, 90, 270)),
            _seg("level2", 200, 260, _NOMINAL_LEVEL,
                 _profile(4000, 4000, 130, 130, 270, 270, level=True),
                 targets={"altitude_ft": 4000.0, "airspeed_kt": 130.0,
                          "heading_deg": 270.0}),
            _seg("descent", 260, 320, _LANDING, _profile(4000, 0, 130, 70, 270, 270)),
        ]
    elif name == "stall":
        segments = [
            _seg("takeoff", 0, 40, _TAKEOFF, _profile(0, 1500, 0, 120, 90, 90)),
            _seg("climb6000", 40, 110, _NOMINAL_CLIMB, _profile(1500, 6000, 120, 130, 90, 90)),
            _seg("level1", 110, 170, _STALL_LEVEL,
                 _profile(6000, 6000, 130, 130, 90, 90, level=True),
                 targets={"altitude_ft": 6000.0, "airspeed_kt": 130.0,
                          "heading_deg": 90.0},
                 pupil=PupilModel(tones=((0.1, 0.12),))),
            _seg("stall", 170, 230, _STALL_LEVEL, _profile(6000, 5600, 130, 90, 90, 90),
                 pupil=PupilModel(tones=((0.1, 0.15),))),
            _seg("descend4000", 230, 280, _NOMINAL_CLIMB, _profile(5600, 4000, 90, 130, 90, 270)),
            _seg("level2", 280, 340, _STALL_LEVEL,
                 _profile(4000, 4000, 130, 130, 270, 270, level=True),
                 targets={"altitude_ft": 4000.0, "airspeed_kt": 130.0,
                          "heading_deg": 270.0}),
            _seg("descent", 340, 400, _LANDING, _profile(4000, 0, 130, 70, 270, 270)),
        ]
    elif name == "lowvis":
        segments = [
            _seg("takeoff", 0, 40, _TAKEOFF, _profile(0, 1500, 0, 120, 90, 90)),
            _seg("climb", 40, 100, _LOWVIS_LEVEL, _profile(1500, 4000, 120, 130, 90, 90)),
            _seg("level1", 100, 160, _LOWVIS_LEVEL,
                 _profile(4000, 4000, 130, 130, 90, 90, level=True),
                 targets={"altitude_ft": 4000.0, "airspeed_kt": 130.0,
                          "heading_deg": 90.0},
                 pupil=PupilModel(tones=((0.1, 0.11),))),
            _seg("turn1", 160, 200, _LOWVIS_LEVEL, _profile(4000, 4000, 130, 130, 90, 270)),
            _seg("level2", 200, 260, _LOWVIS_LEVEL,
                 _profile(4000, 4000, 130, 130, 270, 270, level=True),
                 targets={"altitude_ft": 4000.0, "airspeed_kt": 130.0,
                          "heading_deg": 270.0}),
            _seg("descent", 260, 320, _LOWVIS_LEVEL, _profile(4000, 0, 130, 70, 270, 270)),
        ]
    else:
        raise ValueError(f"unknown scenario {name!r}; valid: {', '.join(PRESETS)}")
    return ScenarioScript(seed=seed, segments=segments, name=name,
                          jitter_deg=PRESET_JITTER_DEG)


def load_script(path: str | Path) -> ScenarioScript:
    """Load a scenario script from JSON (see docs for the schema)."""
    doc = json.loads(Path(path).read_text())
    segments = []
    for e in doc["segments"]:
        seg = Segment(name=e["name"], t_start_ms=int(e["t_start_ms"]),
                      t_end_ms=int(e["t_end_ms"]), targets=e.get("targets"))
        fp = e.get("flight", {})
        profile = FlightProfile(
            alt_start_ft=float(fp.get("alt_start_ft", 4000)),
            alt_end_ft=float(fp.get("alt_end_ft", 4000)),
            spd_start_kt=float(fp.get("spd_start_kt", 130)),
            spd_end_kt=float(fp.get("spd_end_kt", 130)),
            hdg_start_deg=float(fp.get("hdg_start_deg", 90)),
            hdg_end_deg=float(fp.get("hdg_end_deg", 90)),
            error_tones={k: tuple(tuple(t) for t in v)
                         for k, v in fp.get("error_tones", {}).items()},
            inceptor_tones={k: tuple(tuple(t) for t in v)
                            for k, v in fp.get("inceptor_tones", {}).items()})
        pm = e.get("pupil", {})
        pupil = PupilModel(baseline_mm=float(pm.get("baseline_mm", 4.0)),
                           tones=tuple(tuple(t) for t in pm.get("tones", [])),
                           noise_sd=float(pm.get("noise_sd", 0.01)))
        eyelid = EyelidModel(episodes=tuple(
            tuple(ep) for ep in e.get("eyelid_episodes", [])))
        segments.append(SegmentScript(
            segment=seg, schedule=[(a, int(ms)) for a, ms in e["schedule"]],
            flight=profile, pupil=pupil, eyelid=eyelid))
    return ScenarioScript(
        seed=int(doc.get("seed", 0)), segments=segments,
        gaze_rate_hz=float(doc.get("gaze_rate_hz", DEFAULT_GAZE_RATE_HZ)),
        flight_rate_hz=float(doc.get("flight_rate_hz", DEFAULT_FLIGHT_RATE_HZ)),
        jitter_deg=float(doc.get("jitter_deg", DEFAULT_JITTER_DEG)),
        name=str(doc.get("name", "custom")))
