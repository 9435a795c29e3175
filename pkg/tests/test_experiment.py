"""Experiment harness: config plumbing, scene sampling, end-to-end runs.

The end-to-end tests run a deliberately tiny configuration (one static
scene, two epochs, a two-stage network) so the whole file stays in the
seconds range while still exercising synthesis, localization, training,
evaluation against both baselines, and artifact writing.
"""

import json

import numpy as np
import pytest

from resprad.harness import (
    ExperimentConfig,
    build_scenes,
    collect_windows,
    evaluate_windows,
    locate_subject,
    run_experiment,
    sample_scenes,
)
from resprad.harness.experiment import METHODS, augment_pairs
from resprad.model import NetworkConfig, TrainConfig, TwoStreamRecoveryNet
from resprad.sim import (
    MOTION_KINDS,
    ComplexMatrix,
    RadarConfig,
    RespirationProfile,
    Scene,
    make_motion,
    subject_bin,
    synth_matrix,
)


def tiny_cfg(**over):
    base = dict(
        name="tiny",
        motion_kinds=("static",),
        train_scenes_per_kind=1,
        eval_scenes_per_kind=1,
        duration_s=10.0,
        window_s=5.0,
        fast_time_bins=24,
        noise_std=0.2,
        half_width=1,
        augment_count=2,
        rng_seed=0,
        network=NetworkConfig(
            input_channels=3,
            frames=250,
            encoder_channels=(4, 8),
            decoder_channels=(8, 4),
            latent_dim=6,
        ),
        train=TrainConfig(epochs=2, batch_size=4, learning_rate=1e-4, rng_seed=0),
    )
    base.update(over)
    return ExperimentConfig(**base)


class TestConfig:
    def test_defaults_are_valid(self):
        cfg = ExperimentConfig()
        assert cfg.window_frames == 1000
        assert cfg.radar().fast_time_bins == cfg.fast_time_bins

    def test_dict_roundtrip_preserves_config_and_hash(self):
        cfg = tiny_cfg(noise_std=0.35, augment_count=3)
        again = ExperimentConfig.from_dict(cfg.to_dict())
        assert again == cfg
        assert again.hash() == cfg.hash()

    def test_hash_tracks_every_knob(self):
        cfg = tiny_cfg()
        assert tiny_cfg(rng_seed=1).hash() != cfg.hash()
        assert tiny_cfg(noise_std=0.25).hash() != cfg.hash()
        assert tiny_cfg(train=TrainConfig(epochs=3, learning_rate=1e-4)).hash() != cfg.hash()

    def test_rejects_unknown_motion_kind(self):
        with pytest.raises(ValueError, match="motion_kinds"):
            tiny_cfg(motion_kinds=("static", "jogging"))

    def test_rejects_empty_kinds(self):
        with pytest.raises(ValueError, match="motion_kinds"):
            tiny_cfg(motion_kinds=())

    def test_rejects_zero_scenes(self):
        with pytest.raises(ValueError, match="scene"):
            tiny_cfg(train_scenes_per_kind=0)

    def test_rejects_fractional_window_frames(self):
        with pytest.raises(ValueError, match="integer"):
            tiny_cfg(window_s=5.01)

    def test_rejects_network_frame_mismatch(self):
        with pytest.raises(ValueError, match="frames"):
            tiny_cfg(window_s=6.0, duration_s=12.0)

    def test_rejects_half_width_channel_mismatch(self):
        with pytest.raises(ValueError, match="channels"):
            tiny_cfg(half_width=2)

    def test_rejects_scene_shorter_than_window(self):
        with pytest.raises(ValueError, match="shorter"):
            tiny_cfg(duration_s=4.0)

    def test_rejects_zero_augment(self):
        with pytest.raises(ValueError, match="augment_count"):
            tiny_cfg(augment_count=0)


def _scene_keys(scenes):
    return [
        (kind, s.subject_distance, s.respiration.rate, s.rng_seed)
        for kind, s in scenes
    ]


class TestSceneSampling:
    def test_same_seed_same_scenes(self):
        cfg = tiny_cfg(motion_kinds=MOTION_KINDS)
        a = build_scenes(cfg, per_kind=2, stage=0)
        b = build_scenes(cfg, per_kind=2, stage=0)
        assert _scene_keys(a) == _scene_keys(b)

    def test_stages_draw_disjoint_scenes(self):
        cfg = tiny_cfg(motion_kinds=MOTION_KINDS)
        trn = {d for _, d, _, _ in _scene_keys(build_scenes(cfg, 3, stage=0))}
        evl = {d for _, d, _, _ in _scene_keys(build_scenes(cfg, 3, stage=1))}
        assert not trn & evl

    def test_scene_count_and_kind_order(self):
        cfg = tiny_cfg(motion_kinds=("static", "slow-roll"))
        scenes = build_scenes(cfg, per_kind=3, stage=0)
        assert [k for k, _ in scenes] == ["static"] * 3 + ["slow-roll"] * 3

    def test_growing_per_kind_keeps_earlier_draws(self):
        cfg = tiny_cfg(motion_kinds=MOTION_KINDS)
        one = _scene_keys(build_scenes(cfg, 1, stage=0))
        three = _scene_keys(build_scenes(cfg, 3, stage=0))
        for ki, key in enumerate(one):
            assert three[3 * ki] == key

    def test_kind_subset_reproduces_full_run_draws(self):
        cfg = tiny_cfg(motion_kinds=MOTION_KINDS)
        full = _scene_keys(build_scenes(cfg, 2, stage=1))
        sway = _scene_keys(build_scenes(cfg, 2, stage=1, kinds=("periodic-sway",)))
        assert sway == [k for k in full if k[0] == "periodic-sway"]

    def test_rejects_unknown_kind(self):
        with pytest.raises(ValueError, match="unknown"):
            sample_scenes(("hovercraft",), 1, 0, 20.0, RadarConfig())

    def test_scene_fields_within_sampler_ranges(self):
        cfg = tiny_cfg(motion_kinds=MOTION_KINDS)
        for _, s in build_scenes(cfg, 2, stage=0):
            assert 0.8 <= s.subject_distance <= 1.6
            assert 0.18 <= s.respiration.rate <= 0.55
            assert 0.003 <= s.respiration.depth <= 0.008
            assert 1 <= len(s.static_clutter) <= 2


class TestLocateSubject:
    def test_finds_static_subject_within_one_bin(self):
        radar = RadarConfig(fast_time_bins=32, noise_std=0.1)
        scene = Scene(
            subject_distance=1.2,
            respiration=RespirationProfile(rate=0.3, depth=0.005),
            motion=make_motion("static", 20.0, radar.frame_rate, np.random.default_rng(3)),
            static_clutter=((0.6, 0.5),),
            duration=20.0,
            rng_seed=3,
        )
        matrix, _ = synth_matrix(scene, radar)
        found, hits = locate_subject(matrix)
        assert hits
        assert abs(found - subject_bin(scene, radar)) <= 1

    def test_featureless_matrix_falls_back_to_argmax(self):
        flat = ComplexMatrix.from_complex(
            np.full((24, 200), 2.0 + 1.0j), 50.0, 0.1
        )
        found, hits = locate_subject(flat)
        assert hits == []
        assert found == 0


class TestCollectWindows:
    def test_window_shapes_and_metadata(self):
        cfg = tiny_cfg()
        scenes = build_scenes(cfg, 2, stage=0)
        pairs, metas = collect_windows(
            scenes, cfg.radar(), cfg.window_frames, cfg.half_width
        )
        assert len(pairs) == len(metas) == 2 * 2  # 2 scenes x 10 s / 5 s
        for (win, truth), meta in zip(pairs, metas):
            assert win.i_channels.shape == (3, 250)
            assert win.q_channels.shape == (3, 250)
            assert truth.shape == (250,)
            assert meta["kind"] == "static"
            assert cfg.half_width <= win.center_bin <= cfg.fast_time_bins - 1 - cfg.half_width
            assert isinstance(meta["cfar_hit"], bool)

    def test_located_bin_matches_truth_on_clean_scenes(self):
        cfg = tiny_cfg(noise_std=0.05)
        scenes = build_scenes(cfg, 3, stage=0)
        _, metas = collect_windows(scenes, cfg.radar(), cfg.window_frames, cfg.half_width)
        assert all(abs(m["located_bin"] - m["true_bin"]) <= 1 for m in metas)


class TestAugmentPairs:
    def test_count_one_is_identity(self):
        cfg = tiny_cfg()
        pairs, _ = collect_windows(
            build_scenes(cfg, 1, stage=0), cfg.radar(), cfg.window_frames, cfg.half_width
        )
        assert augment_pairs(pairs, 1) == list(pairs)

    def test_expansion_factor_and_shared_truth(self):
        cfg = tiny_cfg()
        pairs, _ = collect_windows(
            build_scenes(cfg, 1, stage=0), cfg.radar(), cfg.window_frames, cfg.half_width
        )
        out = augment_pairs(pairs, 4)
        assert len(out) == 4 * len(pairs)
        for k, (win, truth) in enumerate(out):
            src_win, src_truth = pairs[k // 4]
            assert truth is src_truth
            np.testing.assert_allclose(
                np.hypot(win.i_channels, win.q_channels),
                np.hypot(src_win.i_channels, src_win.q_channels),
                rtol=1e-6,
            )


class TestEvaluateWindows:
    def test_scores_every_method_on_every_window(self):
        cfg = tiny_cfg()
        pairs, metas = collect_windows(
            build_scenes(cfg, 1, stage=1), cfg.radar(), cfg.window_frames, cfg.half_width
        )
        net = TwoStreamRecoveryNet(cfg.network, init_seed=0)
        sets = evaluate_windows(pairs, metas, net, cfg.frame_rate)
        assert set(sets) == set(METHODS)
        for m in METHODS:
            d = sets[m].as_dict()
            assert d["n_windows"] == len(pairs)
            assert -1.0 <= d["mean_cosine"] <= 1.0


class TestRunExperiment:
    def test_report_structure_and_rerun_is_byte_identical(self, tmp_path):
        cfg = tiny_cfg()
        rep1 = run_experiment(cfg, tmp_path / "a")
        rep2 = run_experiment(cfg, tmp_path / "b")

        assert rep1["config_hash"] == cfg.hash()
        assert rep1["n_train_windows"] == 2
        assert rep1["n_train_examples"] == 2 * cfg.augment_count
        assert set(rep1["results"]) == {"static"}
        assert set(rep1["overall"]) == set(METHODS)
        assert rep1["loss_final"] is not None

        for name in ("report.json", "metrics.csv"):
            a = (tmp_path / "a" / name).read_bytes()
            b = (tmp_path / "b" / name).read_bytes()
            assert a == b, f"{name} differs between identical reruns"
        ck_a = sorted(p.name for p in (tmp_path / "a" / "checkpoint").iterdir())
        ck_b = sorted(p.name for p in (tmp_path / "b" / "checkpoint").iterdir())
        assert ck_a == ck_b and ck_a
        for name in ck_a:
            assert (tmp_path / "a" / "checkpoint" / name).read_bytes() == (
                tmp_path / "b" / "checkpoint" / name
            ).read_bytes()

        assert rep2 == rep1

    def test_report_json_matches_returned_dict(self, tmp_path):
        cfg = tiny_cfg(name="roundtrip")
        rep = run_experiment(cfg, tmp_path)
        on_disk = json.loads((tmp_path / "report.json").read_text())
        assert on_disk == json.loads(json.dumps(rep))

    def test_metrics_csv_cells_parse(self, tmp_path):
        cfg = tiny_cfg()
        run_experiment(cfg, tmp_path)
        lines = (tmp_path / "metrics.csv").read_text().splitlines()
        header = lines[0].split(",")
        assert header[:2] == ["kind", "method"]
        assert len(lines) == 1 + len(METHODS)  # one kind
        for line in lines[1:]:
            cells = line.split(",")
            assert len(cells) == len(header)
            assert cells[0] == "static"
            assert cells[1] in METHODS
            for cell in cells[2:]:
                if cell:
                    float(cell)

    def test_config_changes_change_the_report(self, tmp_path):
        rep_a = run_experiment(tiny_cfg())
        rep_b = run_experiment(tiny_cfg(rng_seed=7))
        assert rep_a["config_hash"] != rep_b["config_hash"]
        assert rep_a["results"] != rep_b["results"]
