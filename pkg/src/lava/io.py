"""Text formats: per-video score CSVs, the dataset manifest, fused outputs,
report rows and the JSON run manifest.

Floats are written with ``repr`` so every file parses back bit-for-bit.
"""

from __future__ import annotations

import configparser
import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .attribution import AttributionConfig
from .calibration import CalibrationConfig, CalibrationModel
from .core import FrameLabels, Modality, ScoreSequence, VideoMeta, VideoRecord
from .fusion import ConfidenceConfig, GateConfig, OffsetBank, OffsetMeasure
from .pipeline import STAGE_ORDER, EvalReport, PipelineConfig, check_stage_order
from .simulate import (
    AudioNoise,
    AvOffset,
    CompressionCollapse,
    GenConfig,
    Stretch,
    AUDIO_NOISE_PRESETS,
    SEVERITY_PRESETS,
)

SCORE_COLUMNS = ("video_id", "frame_index", "visual_score", "audio_score", "label")
FRAME_COLUMNS = ("video_id", "frame_index", "visual_score", "audio_score", "fused", "calibrated_p", "label")
VIDEO_COLUMNS = (
    "video_id",
    "split",
    "gate",
    "visual_mean",
    "offset_seconds",
    "temperature",
    "attribution",
    "visual_evidence",
    "audio_evidence",
    "low_confidence",
)
REPORT_COLUMNS = ("condition", "variant", "ap", "iou", "ece", "fpr", "auc")
DATASET_FILE = "dataset.txt"


class SchemaError(ValueError):
    """Malformed input file; carries the file name and 1-based line number."""

    def __init__(self, path, line: Optional[int], message: str):
        where = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{where}: {message}")
        self.path = str(path)
        self.line = line


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    return repr(x)


def _write_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def _read_csv(path: Path, header) -> list:
    """Rows as (line_number, dict); checks the header and the column count."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise SchemaError(path, None, f"cannot read: {e}") from e
    reader = csv.reader(io.StringIO(text))
    try:
        got = next(reader)
    except StopIteration:
        raise SchemaError(path, 1, "empty file") from None
    if tuple(got) != tuple(header):
        raise SchemaError(path, 1, f"expected header {','.join(header)}, got {','.join(got)}")
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise SchemaError(path, lineno, f"expected {len(header)} columns, got {len(row)}")
        rows.append((lineno, dict(zip(header, row))))
    return rows


def _num(path, lineno, row, key, kind=float):
    try:
        return kind(row[key])
    except ValueError:
        raise SchemaError(path, lineno, f"column {key}: cannot parse {row[key]!r}") from None


# -- score files and dataset manifest ---------------------------------------


def write_score_file(path, record: VideoRecord) -> None:
    rows = (
        (record.id, t, fmt(v), fmt(a), int(y))
        for t, (v, a, y) in enumerate(zip(record.visual.values, record.audio.values, record.labels.values))
    )
    _write_csv(path, SCORE_COLUMNS, rows)


def read_score_file(path, meta: VideoMeta, video_id: Optional[str] = None) -> VideoRecord:
    rows = _read_csv(path, SCORE_COLUMNS)
    vis, aud, lab = [], [], []
    for expected, (lineno, row) in enumerate(rows):
        if video_id is not None and row["video_id"] != video_id:
            raise SchemaError(path, lineno, f"video_id {row['video_id']!r} != {video_id!r}")
        video_id = row["video_id"]
        if _num(path, lineno, row, "frame_index", int) != expected:
            raise SchemaError(path, lineno, f"frame_index must be {expected}")
        v, a = _num(path, lineno, row, "visual_score"), _num(path, lineno, row, "audio_score")
        y = _num(path, lineno, row, "label", int)
        for name, val in (("visual_score", v), ("audio_score", a)):
            if not 0.0 <= val <= 1.0:
                raise SchemaError(path, lineno, f"{name} {val!r} outside [0, 1]")
        if y not in (0, 1):
            raise SchemaError(path, lineno, f"label must be 0 or 1, got {y}")
        vis.append(v)
        aud.append(a)
        lab.append(y)
    if len(vis) != meta.frame_count:
        raise SchemaError(path, None, f"{len(vis)} frames, manifest says {meta.frame_count}")
    return VideoRecord(
        video_id,
        meta,
        ScoreSequence(Modality.VISUAL, vis),
        ScoreSequence(Modality.AUDIO, aud),
        FrameLabels(lab),
    )


def write_dataset(out_dir, records, scenarios: Optional[dict] = None, extra: Optional[dict] = None) -> Path:
    """Write ``dataset.txt`` plus ``scores/<id>.csv`` for every record, sorted by id."""
    out = Path(out_dir)
    (out / "scores").mkdir(parents=True, exist_ok=True)
    cp = configparser.ConfigParser(interpolation=None)
    cp["dataset"] = {"format": "lava-scores/1", "video_count": str(len(records))}
    for k, v in (extra or {}).items():
        cp["dataset"][k] = str(v)
    for rec in sorted(records, key=lambda r: r.id):
        rel = f"scores/{rec.id}.csv"
        write_score_file(out / rel, rec)
        section = {
            "file": rel,
            "frame_count": str(rec.meta.frame_count),
            "frame_rate": fmt(rec.meta.frame_rate),
            "audio_sample_count": str(rec.meta.audio_sample_count),
            "audio_sample_rate": fmt(rec.meta.audio_sample_rate),
        }
        if scenarios and rec.id in scenarios:
            section["scenario"] = str(scenarios[rec.id])
        cp[rec.id] = section
    with open(out / DATASET_FILE, "w", encoding="utf-8", newline="\n") as fh:
        cp.write(fh)
    return out / DATASET_FILE


def read_dataset(path) -> tuple[list, dict, dict]:
    """Returns (records, scenarios by id, dataset-level keys)."""
    path = Path(path)
    if path.is_dir():
        path = path / DATASET_FILE
    cp = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as e:
        raise SchemaError(path, None, f"cannot parse dataset manifest: {e}") from e
    if "dataset" not in cp:
        raise SchemaError(path, None, "missing [dataset] section")
    records, scenarios = [], {}
    for vid in cp.sections():
        if vid == "dataset":
            continue
        sec = cp[vid]
        try:
            meta = VideoMeta(
                int(sec["frame_count"]),
                float(sec["frame_rate"]),
                int(sec["audio_sample_count"]),
                float(sec["audio_sample_rate"]),
            )
            rel = sec["file"]
        except (KeyError, ValueError) as e:
            raise SchemaError(path, None, f"[{vid}]: bad or missing metadata ({e})") from e
        records.append(read_score_file(path.parent / rel, meta, vid))
        if "scenario" in sec:
            scenarios[vid] = sec["scenario"]
    return records, scenarios, dict(cp["dataset"])


# -- fused outputs -----------------------------------------------------------


def write_fused(out_dir, outputs, split_of: dict, model: Optional[CalibrationModel], condition: str, variant: str) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    frame_rows, video_rows = [], []
    for o in sorted(outputs, key=lambda o: o.record.id):
        r = o.record
        for t in range(r.meta.frame_count):
            frame_rows.append(
                (r.id, t, fmt(r.visual.values[t]), fmt(r.audio.values[t]), fmt(o.fused[t]), fmt(o.probs[t]), int(r.labels.values[t]))
            )
        v = o.verdict
        video_rows.append(
            (
                r.id,
                split_of[r.id],
                o.gate.g,
                fmt(o.gate.visual_mean),
                fmt(o.offset_seconds),
                fmt(model.temperature) if model else "",
                v.label.value if v else "",
                fmt(v.visual_mean) if v else "",
                fmt(v.audio_mean) if v else "",
                int(v.low_confidence) if v else "",
            )
        )
    _write_csv(out / "frames.csv", FRAME_COLUMNS, frame_rows)
    _write_csv(out / "videos.csv", VIDEO_COLUMNS, video_rows)
    info = {"condition": condition, "variant": variant}
    if model is not None:
        info.update(temperature=fmt(model.temperature), achieved_ece=fmt(model.achieved_ece))
    write_keyvalue(out / "run.txt", info)


def read_fused(out_dir) -> tuple[dict, dict, dict]:
    """Returns (per-video frame arrays, per-video rows, run info)."""
    out = Path(out_dir)
    info = read_keyvalue(out / "run.txt")
    videos = {row["video_id"]: row for _, row in _read_csv(out / "videos.csv", VIDEO_COLUMNS)}
    frames: dict = {}
    for lineno, row in _read_csv(out / "frames.csv", FRAME_COLUMNS):
        vid = row["video_id"]
        if vid not in videos:
            raise SchemaError(out / "frames.csv", lineno, f"video {vid!r} missing from videos.csv")
        d = frames.setdefault(vid, {"fused": [], "probs": [], "labels": []})
        d["fused"].append(_num(out / "frames.csv", lineno, row, "fused"))
        d["probs"].append(_num(out / "frames.csv", lineno, row, "calibrated_p"))
        d["labels"].append(_num(out / "frames.csv", lineno, row, "label", int))
    return frames, videos, info


def write_keyvalue(path, data: dict) -> None:
    Path(path).write_text("".join(f"{k} = {v}\n" for k, v in data.items()), encoding="utf-8")


def read_keyvalue(path) -> dict:
    path = Path(path)
    out = {}
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise SchemaError(path, None, f"cannot read: {e}") from e
    for lineno, line in enumerate(lines, start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        if "=" not in line:
            raise SchemaError(path, lineno, "expected 'key = value'")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def calibration_to_text(model: CalibrationModel) -> str:
    return f"temperature = {fmt(model.temperature)}\nachieved_ece = {fmt(model.achieved_ece)}\n"


def calibration_from_text(text: str) -> CalibrationModel:
    kv = dict(line.split("=", 1) for line in text.splitlines() if "=" in line)
    kv = {k.strip(): v.strip() for k, v in kv.items()}
    return CalibrationModel(float(kv["temperature"]), float(kv["achieved_ece"]))


# -- report rows ------------------------------------------------------------


def report_rows_text(reports: Iterable[EvalReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for r in reports:
        w.writerow((r.condition_label, r.variant, fmt(r.ap), fmt(r.temporal_iou), fmt(r.ece), fmt(r.fpr), fmt(r.auc)))
    return buf.getvalue()


def write_reports(path, reports) -> None:
    Path(path).write_text(report_rows_text(reports), encoding="utf-8")


def read_reports(path) -> list:
    out = []
    for lineno, row in _read_csv(path, REPORT_COLUMNS):
        vals = {k: _num(path, lineno, row, k) for k in ("ap", "iou", "ece", "fpr", "auc")}
        out.append(
            EvalReport(vals["ap"], vals["iou"], vals["ece"], vals["fpr"], row["condition"], row["variant"], vals["auc"])
        )
    return out


# -- distortions and run manifest -------------------------------------------


def distortion_to_dict(d) -> dict:
    if isinstance(d, Stretch):
        return {"kind": "stretch", "factor": d.factor}
    if isinstance(d, CompressionCollapse):
        return {"kind": "compression", "severity": d.severity, "noise_std": d.noise_std, "seed": d.seed}
    if isinstance(d, AvOffset):
        return {"kind": "offset", "delta_seconds": d.delta_seconds}
    if isinstance(d, AudioNoise):
        return {"kind": "audio-noise", "std": d.std, "seed": d.seed}
    raise TypeError(f"unknown distortion {d!r}")


def distortion_from_dict(d: dict):
    d = dict(d)
    kind = d.pop("kind", None)
    try:
        if kind == "stretch":
            return Stretch(**d)
        if kind == "compression":
            if "preset" in d:
                return CompressionCollapse.preset(d.pop("preset"), **d)
            return CompressionCollapse(**d)
        if kind == "offset":
            return AvOffset(**d)
        if kind == "audio-noise":
            if "preset" in d:
                return AudioNoise.preset(d.pop("preset"), **d)
            return AudioNoise(**d)
    except (TypeError, KeyError) as e:
        raise ValueError(f"bad {kind} distortion: {e}") from e
    raise ValueError(f"unknown distortion kind {kind!r}; presets: {sorted(SEVERITY_PRESETS) + sorted(AUDIO_NOISE_PRESETS)}")


@dataclass
class RunManifest:
    benchmark: GenConfig = field(default_factory=GenConfig)
    conditions: dict = field(default_factory=lambda: {"clean": []})
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    stages: tuple = STAGE_ORDER
    output_dir: str = "lava-out"

    def __post_init__(self):
        self.stages = check_stage_order(self.stages)

    def to_dict(self) -> dict:
        p = self.pipeline
        return {
            "benchmark": asdict(self.benchmark),
            "conditions": {k: [distortion_to_dict(d) for d in v] for k, v in self.conditions.items()},
            "pipeline": {
                "tau": p.gate.tau,
                "offsets_seconds": list(p.bank.offsets_seconds),
                "half_window": p.confidence.half_window,
                "calibration": asdict(p.calibration),
                "attribution": asdict(p.attribution),
                "measure": p.measure.value,
                "decision_threshold": p.decision_threshold,
                "oracle_calibration": p.oracle_calibration,
                "stretch_correction": p.stretch_correction,
                "per_video_ap": p.per_video_ap,
            },
            "split": {"seed": p.split_seed, "validation_fraction": p.validation_fraction},
            "stages": list(self.stages),
            "output_dir": self.output_dir,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunManifest":
        known = {"benchmark", "conditions", "pipeline", "split", "stages", "output_dir"}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown manifest keys: {sorted(unknown)}")
        bench = dict(d.get("benchmark", {}))
        for key in ("tamper_fraction_range", "scenario_weights"):
            if key in bench:
                bench[key] = tuple(bench[key])
        p = dict(d.get("pipeline", {}))
        split = d.get("split", {})
        pipeline = PipelineConfig(
            gate=GateConfig(p.get("tau", 0.1)),
            bank=OffsetBank(tuple(p.get("offsets_seconds", OffsetBank().offsets_seconds))),
            confidence=ConfidenceConfig(p.get("half_window", 3)),
            calibration=CalibrationConfig(**p.get("calibration", {})),
            attribution=AttributionConfig(**p.get("attribution", {})),
            measure=OffsetMeasure(p.get("measure", OffsetMeasure.ORACLE_AP.value)),
            decision_threshold=p.get("decision_threshold", 0.5),
            validation_fraction=split.get("validation_fraction", 0.3),
            split_seed=split.get("seed", 0),
            oracle_calibration=p.get("oracle_calibration", False),
            stretch_correction=p.get("stretch_correction"),
            per_video_ap=p.get("per_video_ap", False),
        )
        conditions = {k: [distortion_from_dict(x) for x in v] for k, v in d.get("conditions", {"clean": []}).items()}
        return cls(
            benchmark=GenConfig(**bench),
            conditions=conditions,
            pipeline=pipeline,
            stages=tuple(d.get("stages", STAGE_ORDER)),
            output_dir=d.get("output_dir", "lava-out"),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path) -> "RunManifest":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))
