"""End-to-end experiments: synthesize, localize, train, evaluate, report.

One ExperimentConfig fully determines an experiment; the report and
every artifact written for it are byte-identical across reruns with the
same config (no timestamps, no global RNG, canonical JSON).
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import numpy as np
import torch

from ..baselines import EllipseFitError, bandpass_baseline, fit_ellipse_arctan, project_phase
from ..biomarkers import detect_cycles, estimate_rate_fft
from ..model import (
    NetworkConfig,
    TrainConfig,
    TwoStreamRecoveryNet,
    infer_batch,
    save_checkpoint,
    stack_windows,
    train,
)
from ..pipeline import (
    CfarParams,
    SlowTimeWindow,
    augment,
    cfar_detect,
    extract_window,
    remove_clutter,
    slow_time_statistic,
)
from ..sim import (
    MOTION_KINDS,
    RadarConfig,
    RespirationProfile,
    Scene,
    make_motion,
    subject_bin,
    synth_matrix,
)
from .metrics import MetricSet, centered_cosine, rate_error_bpm, timing_errors

METHODS = ("net", "bandpass", "ellipse_arctan")


def _default_network() -> NetworkConfig:
    # lean ladder for CPU-only experiments; tests and the CLI can swap in
    # the full-width architecture when they have the budget for it
    return NetworkConfig(
        input_channels=3,
        frames=1000,
        encoder_channels=(8, 16, 32, 64, 128),
        decoder_channels=(128, 64, 32, 16, 8),
        latent_dim=16,
    )


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one experiment depends on."""

    name: str = "experiment"
    motion_kinds: Tuple[str, ...] = MOTION_KINDS
    train_scenes_per_kind: int = 4
    eval_scenes_per_kind: int = 2
    duration_s: float = 20.0
    window_s: float = 20.0
    frame_rate: float = 50.0
    fast_time_bins: int = 48
    noise_std: float = 0.45
    half_width: int = 1
    augment_count: int = 1
    rng_seed: int = 0
    network: NetworkConfig = field(default_factory=_default_network)
    train: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self) -> None:
        object.__setattr__(self, "motion_kinds", tuple(self.motion_kinds))
        unknown = [k for k in self.motion_kinds if k not in MOTION_KINDS]
        if unknown or not self.motion_kinds:
            raise ValueError(f"motion_kinds must be non-empty and drawn from {MOTION_KINDS}")
        if self.train_scenes_per_kind < 1 or self.eval_scenes_per_kind < 1:
            raise ValueError("need at least one scene per kind on both splits")
        frames = self.window_s * self.frame_rate
        if abs(frames - round(frames)) > 1e-9:
            raise ValueError("window_s * frame_rate must be an integer frame count")
        if self.network.frames != int(round(frames)):
            raise ValueError(
                f"network expects {self.network.frames} frames per window, "
                f"config produces {int(round(frames))}"
            )
        if self.network.input_channels != 2 * self.half_width + 1:
            raise ValueError(
                f"network expects {self.network.input_channels} channels, "
                f"half_width {self.half_width} produces {2 * self.half_width + 1}"
            )
        if self.duration_s < self.window_s:
            raise ValueError("scenes shorter than one window")
        if self.augment_count < 1:
            raise ValueError("augment_count must be >= 1 (1 = no augmentation)")

    @property
    def window_frames(self) -> int:
        return int(round(self.window_s * self.frame_rate))

    def radar(self) -> RadarConfig:
        return RadarConfig(
            frame_rate=self.frame_rate,
            fast_time_bins=self.fast_time_bins,
            noise_std=self.noise_std,
        )

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        if "network" in d:
            d["network"] = NetworkConfig(**d["network"])
        if "train" in d:
            d["train"] = TrainConfig(**d["train"])
        if "motion_kinds" in d:
            d["motion_kinds"] = tuple(d["motion_kinds"])
        return cls(**d)

    def hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def locate_subject(
    matrix, params: CfarParams = CfarParams()
) -> Tuple[int, List[int]]:
    """Range-localize the subject on the clutter-removed matrix.

    Returns (bin, detections). The bin is the strongest CFAR detection
    when there is one; with nothing over threshold (weak target, heavy
    noise) it falls back to the largest slow-time statistic, which keeps
    the pipeline running at the cost of a soft decision.
    """
    _, residual = remove_clutter(matrix)
    hits = cfar_detect(residual, params)
    if hits:
        return hits[0], hits
    stat = slow_time_statistic(residual)
    return int(np.argmax(stat)), hits


def sample_scenes(
    kinds: Sequence[str],
    per_kind: int,
    seed: int,
    duration_s: float,
    radar: RadarConfig,
    stage: int = 0,
) -> List[Tuple[str, Scene]]:
    """Deterministic scene draws; stages (train=0, eval=1) never overlap.

    Every scene gets its own SeedSequence keyed by (stage, global kind
    index, scene index), so changing counts or the kind subset never
    reshuffles the other scenes.
    """
    out: List[Tuple[str, Scene]] = []
    for kind in kinds:
        if kind not in MOTION_KINDS:
            raise ValueError(f"unknown motion kind {kind!r}")
        ki = MOTION_KINDS.index(kind)
        for i in range(per_kind):
            ss = np.random.SeedSequence(entropy=seed, spawn_key=(stage, ki, i))
            draw, noise = ss.spawn(2)
            rng = np.random.default_rng(draw)
            noise_seed = int(noise.generate_state(1, np.uint64)[0] % (2**63))
            out.append((kind, _sample_scene(kind, rng, duration_s, radar, noise_seed)))
    return out


def build_scenes(
    cfg: ExperimentConfig,
    per_kind: int,
    stage: int,
    kinds: Sequence[str] | None = None,
) -> List[Tuple[str, Scene]]:
    return sample_scenes(
        tuple(kinds) if kinds is not None else cfg.motion_kinds,
        per_kind,
        cfg.rng_seed,
        cfg.duration_s,
        cfg.radar(),
        stage,
    )


def _sample_scene(
    kind: str,
    rng: np.random.Generator,
    duration_s: float,
    radar: RadarConfig,
    noise_seed: int,
) -> Scene:
    resp = RespirationProfile(
        kind="sinusoid" if rng.uniform() < 0.5 else "asymmetric",
        rate=float(rng.uniform(0.18, 0.55)),
        depth=float(rng.uniform(0.003, 0.008)),
        inhale_fraction=float(rng.uniform(0.30, 0.45)),
    )
    motion = make_motion(kind, duration_s, radar.frame_rate, rng)
    n_clutter = int(rng.integers(1, 3))
    max_clutter_m = 0.95 * (radar.fast_time_bins - 1) * radar.bin_spacing
    clutter = tuple(
        (float(rng.uniform(0.3, min(4.0, max_clutter_m))), float(rng.uniform(0.2, 0.6)))
        for _ in range(n_clutter)
    )
    return Scene(
        subject_distance=float(rng.uniform(0.8, 1.6)),
        respiration=resp,
        motion=motion,
        static_clutter=clutter,
        duration=duration_s,
        rng_seed=noise_seed,
        subject_amplitude=float(rng.uniform(0.8, 1.25)),
    )


def collect_windows(
    scenes: Sequence[Tuple[str, Scene]],
    radar: RadarConfig,
    window_frames: int,
    half_width: int,
    cfar: CfarParams = CfarParams(),
):
    """Synthesize scene by scene and keep only the located submatrices.

    Matrices are discarded as soon as their windows are cut, so memory
    stays proportional to the number of windows, not scenes x bins.
    """
    pairs: List[Tuple[SlowTimeWindow, np.ndarray]] = []
    metas: List[dict] = []
    for kind, scene in scenes:
        matrix, truth = synth_matrix(scene, radar)
        center, hits = locate_subject(matrix, cfar)
        center = int(np.clip(center, half_width, radar.fast_time_bins - 1 - half_width))
        full = extract_window(matrix, center, half_width)
        for w in range(full.n_frames // window_frames):
            sl = slice(w * window_frames, (w + 1) * window_frames)
            pairs.append(
                (
                    SlowTimeWindow(
                        full.i_channels[:, sl],
                        full.q_channels[:, sl],
                        center,
                        radar.frame_rate,
                    ),
                    truth[sl],
                )
            )
            metas.append(
                {
                    "kind": kind,
                    "rate_hz": scene.respiration.rate,
                    "located_bin": center,
                    "true_bin": subject_bin(scene, radar),
                    "cfar_hit": len(hits) > 0,
                }
            )
    return pairs, metas


def augment_pairs(pairs, count: int):
    """Rotation-expand (window, truth) pairs; truth rides along unchanged."""
    if count <= 1:
        return list(pairs)
    out = []
    for win, truth in pairs:
        for rotated in augment(win, count):
            out.append((rotated, truth))
    return out


def _safe_cosine(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(a)) or np.std(a) == 0.0:
        return 0.0
    return centered_cosine(a, b)


def evaluate_windows(
    pairs,
    metas,
    net: TwoStreamRecoveryNet,
    frame_rate: float,
) -> Dict[str, MetricSet]:
    """Score the network and both baselines on the same windows."""
    sets = {m: MetricSet() for m in METHODS}
    i_arr, q_arr, t_arr = stack_windows(pairs)
    preds = infer_batch(i_arr, q_arr, net)

    for k, (win, _) in enumerate(pairs):
        gt = t_arr[k]
        ev_gt = detect_cycles(gt, frame_rate)
        rate_true = metas[k]["rate_hz"]

        trace = win.subject_trace()
        bp = bandpass_baseline(trace, frame_rate)
        try:
            _, el = fit_ellipse_arctan(trace)
        except EllipseFitError:
            el = project_phase(trace)
            sets["ellipse_arctan"].n_failures += 1

        for method, w in (("net", preds[k]), ("bandpass", bp), ("ellipse_arctan", el)):
            cos = _safe_cosine(w, gt)
            rate_err = None
            timing = None
            if np.std(w) > 0 and np.all(np.isfinite(w)):
                try:
                    rate_err = rate_error_bpm(
                        estimate_rate_fft(w, frame_rate).hz, rate_true
                    )
                except ValueError:
                    rate_err = None
                ev = detect_cycles(np.asarray(w, dtype=float), frame_rate)
                timing = timing_errors(ev.peak_times, ev_gt.peak_times)
            sets[method].add_window(cos, rate_err, timing)
    return sets


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> dict:
    """Train on mixed-kind scenes, evaluate per kind, write the report.

    Returns the report dict; when out_dir is given, also writes
    report.json, metrics.csv and a checkpoint/ directory there. Reruns
    with an identical config produce byte-identical files.
    """
    torch.set_num_threads(1)
    radar = cfg.radar()

    train_scenes = build_scenes(cfg, cfg.train_scenes_per_kind, stage=0)
    train_pairs, train_metas = collect_windows(
        train_scenes, radar, cfg.window_frames, cfg.half_width
    )
    expanded = augment_pairs(train_pairs, cfg.augment_count)
    data = stack_windows(expanded)

    net = TwoStreamRecoveryNet(cfg.network, init_seed=cfg.rng_seed)
    history = train(data, net, cfg.train)

    eval_scenes = build_scenes(cfg, cfg.eval_scenes_per_kind, stage=1)
    results: Dict[str, dict] = {}
    all_sets = {m: MetricSet() for m in METHODS}
    for kind in cfg.motion_kinds:
        kind_scenes = [s for s in eval_scenes if s[0] == kind]
        pairs, metas = collect_windows(kind_scenes, radar, cfg.window_frames, cfg.half_width)
        sets = evaluate_windows(pairs, metas, net, cfg.frame_rate)
        results[kind] = {
            "n_windows": len(pairs),
            "cfar_hit_rate": float(np.mean([m["cfar_hit"] for m in metas])),
            "bin_hit_rate": float(
                np.mean([abs(m["located_bin"] - m["true_bin"]) <= 1 for m in metas])
            ),
        }
        for m in METHODS:
            results[kind][m] = sets[m].as_dict()
            all_sets[m].cosines.extend(sets[m].cosines)
            all_sets[m].rate_errors_bpm.extend(sets[m].rate_errors_bpm)
            all_sets[m].timing_errors_s.extend(sets[m].timing_errors_s)
            all_sets[m].n_reference_peaks += sets[m].n_reference_peaks
            all_sets[m].n_matched_peaks += sets[m].n_matched_peaks
            all_sets[m].n_failures += sets[m].n_failures

    report = {
        "name": cfg.name,
        "config": cfg.to_dict(),
        "config_hash": cfg.hash(),
        "n_train_windows": len(train_pairs),
        "n_train_examples": len(expanded),
        "train_cfar_hit_rate": float(np.mean([m["cfar_hit"] for m in train_metas])),
        "train_bin_hit_rate": float(
            np.mean([abs(m["located_bin"] - m["true_bin"]) <= 1 for m in train_metas])
        ),
        "loss_first": history.epochs[0].as_row() if len(history) else None,
        "loss_final": history.epochs[-1].as_row() if len(history) else None,
        "results": results,
        "overall": {m: all_sets[m].as_dict() for m in METHODS},
    }

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(
            json.dumps(report, indent=1, sort_keys=True) + "\n"
        )
        (out / "metrics.csv").write_text(_metrics_csv(report))
        save_checkpoint(out / "checkpoint", net, cfg.train, history)
    return report


_CSV_COLUMNS = (
    "n_windows",
    "mean_cosine",
    "median_cosine",
    "median_rate_error_bpm",
    "median_peak_timing_error_s",
    "peak_match_rate",
    "n_failures",
)


def _metrics_csv(report: dict) -> str:
    lines = ["kind,method," + ",".join(_CSV_COLUMNS)]
    for kind in sorted(report["results"]):
        row = report["results"][kind]
        for m in METHODS:
            cells = [kind, m]
            for col in _CSV_COLUMNS:
                v = row[m][col]
                # float() strips numpy scalar types, whose repr does not parse
                cells.append("" if v is None else (repr(float(v)) if isinstance(v, float) else str(v)))
            lines.append(",".join(cells))
    return "\n".join(lines) + "\n"
