"""Corpus assembly and the on-disk format: determinism, round trips."""

import json

import numpy as np
import pytest

from resprad.sim import (
    RadarConfig,
    RespirationProfile,
    Scene,
    load_corpus,
    make_dataset,
    make_motion,
    save_corpus,
)
from resprad.sim.corpus import FORMAT_NAME


def scenes(n, duration=20.0, seed=0, kind="static"):
    radar = RadarConfig(fast_time_bins=32)
    out = []
    for k in range(n):
        rng = np.random.default_rng(seed + k)
        out.append(
            Scene(
                subject_distance=rng.uniform(0.9, 1.6),
                respiration=RespirationProfile(
                    kind="sinusoid",
                    rate=rng.uniform(0.2, 0.4),
                    depth=rng.uniform(0.003, 0.008),
                ),
                motion=make_motion(kind, duration, radar.frame_rate,
                                   np.random.default_rng(seed + 100 + k)),
                duration=duration,
                rng_seed=seed + 1000 + k,
            )
        )
    return out, radar


class TestMakeDataset:
    def test_sixty_seconds_gives_three_records(self):
        sc, radar = scenes(1, duration=60.0)
        ds = make_dataset(sc, radar)
        assert len(ds) == 3
        assert [r.meta["window_index"] for r in ds] == [0, 1, 2]
        assert all(r.matrix.n_frames == 1000 for r in ds)
        assert all(len(r.truth) == 1000 for r in ds)

    def test_windows_tile_the_scene(self):
        sc, radar = scenes(1, duration=60.0)
        ds = make_dataset(sc, radar)
        from resprad.sim import synth_matrix

        full, truth = synth_matrix(sc[0], radar)
        for w, rec in enumerate(ds):
            lo = w * 1000
            assert np.array_equal(
                rec.matrix.i_plane, full.i_plane[:, lo:lo + 1000].astype(np.float32)
            )
            assert np.array_equal(rec.truth, truth[lo:lo + 1000].astype(np.float32))

    def test_identical_scenes_give_identical_records(self):
        sc, radar = scenes(1)
        a = make_dataset(sc, radar)
        b = make_dataset(sc, radar)
        assert a[0].matrix == b[0].matrix
        assert np.array_equal(a[0].truth, b[0].truth)

    def test_scene_shorter_than_window_rejected(self):
        sc, radar = scenes(1, duration=10.0)
        with pytest.raises(ValueError, match="shorter"):
            make_dataset(sc, radar)

    def test_non_integer_window_rejected(self):
        sc, radar = scenes(1)
        with pytest.raises(ValueError, match="integer"):
            make_dataset(sc, radar, window_s=0.7501)

    def test_meta_fields(self):
        sc, radar = scenes(2, kind="periodic-sway")
        ds = make_dataset(sc, radar)
        meta = ds[0].meta
        assert meta["scene_index"] == 0
        assert meta["motion_kind"] == "periodic-sway"
        assert 0 <= meta["subject_bin"] < radar.fast_time_bins
        assert meta["respiration"]["kind"] == "sinusoid"
        json.dumps(meta)  # must be JSON-serializable as stored

    def test_records_are_float32(self):
        sc, radar = scenes(1)
        ds = make_dataset(sc, radar)
        assert ds[0].matrix.i_plane.dtype == np.float32
        assert ds[0].truth.dtype == np.float32


class TestDiskFormat:
    def test_roundtrip_exact(self, tmp_path):
        sc, radar = scenes(2, duration=40.0)
        ds = make_dataset(sc, radar)
        save_corpus(ds, tmp_path / "c")
        back = load_corpus(tmp_path / "c")
        assert len(back) == len(ds) == 4
        assert back.frame_rate == ds.frame_rate
        assert back.window_s == ds.window_s
        for a, b in zip(ds, back):
            assert np.array_equal(a.matrix.i_plane, b.matrix.i_plane)
            assert np.array_equal(a.matrix.q_plane, b.matrix.q_plane)
            assert np.array_equal(a.truth, b.truth)
            assert a.meta == b.meta

    def test_expected_files_exist(self, tmp_path):
        sc, radar = scenes(1)
        save_corpus(make_dataset(sc, radar), tmp_path / "c")
        names = sorted(p.name for p in (tmp_path / "c").iterdir())
        assert names == [
            "manifest.json",
            "rec00000.gt.f32",
            "rec00000.i.f32",
            "rec00000.json",
            "rec00000.q.f32",
        ]

    def test_save_twice_is_byte_identical(self, tmp_path):
        sc, radar = scenes(2)
        ds = make_dataset(sc, radar)
        save_corpus(ds, tmp_path / "a")
        save_corpus(ds, tmp_path / "b")
        for p in sorted((tmp_path / "a").iterdir()):
            assert p.read_bytes() == (tmp_path / "b" / p.name).read_bytes(), p.name

    def test_manifest_format_checked(self, tmp_path):
        sc, radar = scenes(1)
        save_corpus(make_dataset(sc, radar), tmp_path / "c")
        mf = tmp_path / "c" / "manifest.json"
        payload = json.loads(mf.read_text())
        payload["format"] = "other-format"
        mf.write_text(json.dumps(payload))
        with pytest.raises(ValueError, match=FORMAT_NAME):
            load_corpus(tmp_path / "c")

    def test_truncated_plane_detected(self, tmp_path):
        sc, radar = scenes(1)
        save_corpus(make_dataset(sc, radar), tmp_path / "c")
        f = tmp_path / "c" / "rec00000.i.f32"
        f.write_bytes(f.read_bytes()[:-8])
        with pytest.raises(ValueError, match="expected"):
            load_corpus(tmp_path / "c")

    def test_manifest_is_canonical_json(self, tmp_path):
        sc, radar = scenes(1)
        save_corpus(make_dataset(sc, radar), tmp_path / "c")
        text = (tmp_path / "c" / "manifest.json").read_text()
        assert text.endswith("\n")
        payload = json.loads(text)
        assert text == json.dumps(payload, indent=1, sort_keys=True) + "\n"
        assert payload["format"] == FORMAT_NAME
        assert payload["records"] == ["rec00000"]


class TestScale:
    def test_eight_thousand_record_assembly(self):
        # the published training-set size; tiny bins and short windows
        # keep the full slicing path affordable in a unit test
        radar = RadarConfig(fast_time_bins=8, noise_std=0.0)
        sc = []
        for k in range(100):
            rng = np.random.default_rng(k)
            sc.append(
                Scene(
                    subject_distance=rng.uniform(0.5, 0.6),
                    respiration=RespirationProfile(rate=0.25, depth=0.004),
                    motion=make_motion("static", 80.0, radar.frame_rate,
                                       np.random.default_rng(k + 1)),
                    duration=80.0,
                    rng_seed=k,
                )
            )
        ds = make_dataset(sc, radar, window_s=1.0)
        assert len(ds) == 8000
        assert ds[0].matrix.n_frames == 50
        assert {r.meta["scene_index"] for r in ds} == set(range(100))
