"""Paired-corpus assembly and the on-disk corpus format.

A corpus is an ordered list of records, each holding a signal-matrix
window, the matching ground-truth displacement window, and the scene
metadata that produced it.

On disk (one directory per corpus):

    manifest.json       corpus-level metadata + ordered record ids
    <id>.json           per-record header: shapes, dtype, byte order,
                        frame rate, bin spacing, scene metadata, seed
    <id>.i.f32          I plane,  raw little-endian float32, row-major,
                        fast-time leading
    <id>.q.f32          Q plane,  same layout
    <id>.gt.f32         ground-truth displacement, one float per frame
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterator, List, Sequence

import numpy as np

from .synth import subject_bin, synth_matrix
from .types import ComplexMatrix, RadarConfig, Scene, n_frames_for

FORMAT_NAME = "resprad-corpus-v1"


@dataclass
class Record:
    matrix: ComplexMatrix
    truth: np.ndarray
    meta: dict


@dataclass
class Dataset:
    records: List[Record] = field(default_factory=list)
    frame_rate: float = 50.0
    bin_spacing: float = 0.0999308193
    window_s: float = 20.0

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[Record]:
        return iter(self.records)

    def __getitem__(self, idx: int) -> Record:
        return self.records[idx]


def scene_meta(scene: Scene, window_index: int, scene_index: int) -> dict:
    """JSON-serializable scene summary stored with each record."""
    return {
        "scene_index": scene_index,
        "window_index": window_index,
        "rng_seed": int(scene.rng_seed),
        "subject_distance_m": scene.subject_distance,
        "subject_amplitude": scene.subject_amplitude,
        "duration_s": scene.duration,
        "respiration": {
            "kind": scene.respiration.kind,
            "rate_hz": scene.respiration.rate,
            "depth_m": scene.respiration.depth,
            "inhale_fraction": scene.respiration.inhale_fraction,
            "apnea_spans": [list(s) for s in scene.respiration.apnea_spans],
        },
        "motion_kind": scene.motion.kind,
        "bin_spread": scene.motion.bin_spread,
        "static_clutter": [list(c) for c in scene.static_clutter],
    }


def make_dataset(
    scenes: Sequence[Scene],
    config: RadarConfig,
    window_s: float = 20.0,
    dtype=np.float32,
) -> Dataset:
    """Synthesize scenes and slice them into non-overlapping windows.

    Every record stores the matrix window, the aligned ground-truth
    window and the scene metadata. Ordering is deterministic: scenes in
    the order given, windows left to right.
    """
    frames_f = window_s * config.frame_rate
    window_frames = int(round(frames_f))
    if abs(frames_f - window_frames) > 1e-9 or window_frames < 1:
        raise ValueError("window_s * frame_rate must be a positive integer")

    ds = Dataset(
        frame_rate=config.frame_rate,
        bin_spacing=config.bin_spacing,
        window_s=window_s,
    )
    for scene_index, scene in enumerate(scenes):
        matrix, truth = synth_matrix(scene, config)
        n_windows = matrix.n_frames // window_frames
        if n_windows < 1:
            raise ValueError(
                f"scene {scene_index} is {scene.duration} s, shorter than "
                f"one {window_s} s window"
            )
        for w in range(n_windows):
            lo, hi = w * window_frames, (w + 1) * window_frames
            meta = scene_meta(scene, w, scene_index)
            meta["subject_bin"] = subject_bin(scene, config)
            ds.records.append(
                Record(
                    matrix=matrix.slice_frames(lo, hi).astype(dtype),
                    truth=truth[lo:hi].astype(dtype),
                    meta=meta,
                )
            )
    return ds


def save_corpus(ds: Dataset, path) -> None:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    ids = []
    for idx, rec in enumerate(ds.records):
        rec_id = f"rec{idx:05d}"
        ids.append(rec_id)
        header = {
            "id": rec_id,
            "shape": list(rec.matrix.i_plane.shape),
            "truth_length": int(len(rec.truth)),
            "dtype": "float32",
            "byte_order": "little",
            "order": "row-major, fast-time leading",
            "frame_rate": ds.frame_rate,
            "bin_spacing": ds.bin_spacing,
            "seed": rec.meta.get("rng_seed"),
            "scene": rec.meta,
        }
        (path / f"{rec_id}.json").write_text(_dumps(header))
        (path / f"{rec_id}.i.f32").write_bytes(
            np.ascontiguousarray(rec.matrix.i_plane, dtype="<f4").tobytes()
        )
        (path / f"{rec_id}.q.f32").write_bytes(
            np.ascontiguousarray(rec.matrix.q_plane, dtype="<f4").tobytes()
        )
        (path / f"{rec_id}.gt.f32").write_bytes(
            np.ascontiguousarray(rec.truth, dtype="<f4").tobytes()
        )
    manifest = {
        "format": FORMAT_NAME,
        "n_records": len(ids),
        "frame_rate": ds.frame_rate,
        "bin_spacing": ds.bin_spacing,
        "window_s": ds.window_s,
        "records": ids,
    }
    (path / "manifest.json").write_text(_dumps(manifest))


def load_corpus(path) -> Dataset:
    path = Path(path)
    manifest = json.loads((path / "manifest.json").read_text())
    if manifest.get("format") != FORMAT_NAME:
        raise ValueError(f"not a {FORMAT_NAME} corpus: {path}")
    ds = Dataset(
        frame_rate=manifest["frame_rate"],
        bin_spacing=manifest["bin_spacing"],
        window_s=manifest["window_s"],
    )
    for rec_id in manifest["records"]:
        header = json.loads((path / f"{rec_id}.json").read_text())
        bins, frames = header["shape"]
        i_plane = _read_f32(path / f"{rec_id}.i.f32", (bins, frames))
        q_plane = _read_f32(path / f"{rec_id}.q.f32", (bins, frames))
        truth = _read_f32(path / f"{rec_id}.gt.f32", (header["truth_length"],))
        ds.records.append(
            Record(
                matrix=ComplexMatrix(
                    i_plane, q_plane, header["frame_rate"], header["bin_spacing"]
                ),
                truth=truth,
                meta=header["scene"],
            )
        )
    return ds


def _read_f32(file: Path, shape) -> np.ndarray:
    data = np.frombuffer(file.read_bytes(), dtype="<f4")
    expected = int(np.prod(shape))
    if data.size != expected:
        raise ValueError(f"{file}: expected {expected} float32 values, got {data.size}")
    return data.reshape(shape).copy()


def _dumps(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"
