"""Architecture contracts: shapes, determinism, init, checkpointing."""

import numpy as np
import pytest
import torch

from resprad.model import (
    NetworkConfig,
    TwoStreamRecoveryNet,
    init_xavier_uniform,
    load_checkpoint,
    save_checkpoint,
)
from resprad.model.network import StreamEncoder, WaveformDecoder

TINY = NetworkConfig(
    input_channels=3,
    frames=64,
    encoder_channels=(4, 6),
    decoder_channels=(6, 4),
    latent_dim=4,
)


def batch(cfg, n=2, seed=0):
    gen = torch.Generator().manual_seed(seed)
    return torch.randn(n, cfg.input_channels, cfg.frames, generator=gen)


class TestConfig:
    def test_default_shape_arithmetic(self):
        cfg = NetworkConfig()
        assert cfg.n_stages == 5
        assert cfg.total_downsample == 32
        assert cfg.padded_frames == 1024  # 1000 padded to the ladder multiple
        assert cfg.feature_frames == 32

    def test_published_architecture_defaults(self):
        cfg = NetworkConfig()
        assert cfg.encoder_channels == (32, 64, 128, 256, 512)
        assert cfg.decoder_channels == (512, 256, 128, 64, 32)
        assert cfg.latent_dim == 64
        assert (cfg.kernel_size, cfg.stride, cfg.padding, cfg.scale_factor) == (3, 1, 1, 2)

    def test_stage_count_mismatch_rejected(self):
        with pytest.raises(ValueError):
            NetworkConfig(encoder_channels=(8, 16), decoder_channels=(16, 8, 4))

    def test_divisible_frames_not_padded(self):
        assert TINY.padded_frames == 64
        assert TINY.feature_frames == 16


class TestEncoder:
    def test_latent_shape(self):
        enc = StreamEncoder(TINY)
        g = enc(batch(TINY))
        assert g.mean.shape == (2, 4)
        assert g.log_var.shape == (2, 4)

    def test_deterministic(self):
        net = TwoStreamRecoveryNet(TINY, init_seed=3)
        x = batch(TINY)
        a = net.encode_i(x)
        b = net.encode_i(x)
        assert torch.equal(a.mean, b.mean)
        assert torch.equal(a.log_var, b.log_var)

    def test_eval_mode_rows_independent(self):
        net = TwoStreamRecoveryNet(TINY, init_seed=3).eval()
        x = batch(TINY)
        single = net.encode_i(x[:1]).mean
        doubled = net.encode_i(torch.cat([x[:1], x[:1]])).mean
        assert torch.allclose(doubled[0], single[0], atol=1e-6)
        assert torch.allclose(doubled[1], single[0], atol=1e-6)

    def test_wrong_shape_rejected(self):
        enc = StreamEncoder(TINY)
        with pytest.raises(ValueError):
            enc(torch.zeros(2, 5, 64))


class TestDecoder:
    def test_output_shape_and_crop(self):
        net = TwoStreamRecoveryNet(TINY, init_seed=0)
        z = torch.zeros(2, 4)
        assert net.decode(z).shape == (2, 64)
        assert net.decode(z, out_len=50).shape == (2, 50)

    def test_single_vector_squeeze(self):
        net = TwoStreamRecoveryNet(TINY, init_seed=0)
        assert net.decode(torch.zeros(4)).shape == (64,)

    def test_published_ladder_shapes(self):
        cfg = NetworkConfig(input_channels=17, frames=1000)
        dec = WaveformDecoder(cfg)
        out = dec(torch.zeros(1, 64))
        assert out.shape == (1, 1, 1024)

    def test_zero_weights_give_zero_output(self):
        net = TwoStreamRecoveryNet(TINY, init_seed=0)
        with torch.no_grad():
            for p in net.parameters():
                p.zero_()
        out = net.decode(torch.ones(1, 4))
        assert torch.all(out == 0)

    def test_wrong_latent_rejected(self):
        net = TwoStreamRecoveryNet(TINY, init_seed=0)
        with pytest.raises(ValueError):
            net.decode(torch.zeros(2, 5))


class TestPadding:
    def test_pad_to_ladder_multiple(self):
        cfg = NetworkConfig(input_channels=3, frames=1000,
                            encoder_channels=(4, 6), decoder_channels=(6, 4),
                            latent_dim=4)
        net = TwoStreamRecoveryNet(cfg, init_seed=0)
        x = torch.ones(1, 3, 1000)
        padded = net.pad_frames(x)
        assert padded.shape[-1] == cfg.padded_frames
        assert torch.all(padded[..., 1000:] == 0)
        assert torch.equal(padded[..., :1000], x)

    def test_too_long_rejected(self):
        net = TwoStreamRecoveryNet(TINY, init_seed=0)
        with pytest.raises(ValueError):
            net.pad_frames(torch.zeros(1, 3, 65))

    def test_full_roundtrip_length(self):
        cfg = NetworkConfig(input_channels=3, frames=997,
                            encoder_channels=(4, 6), decoder_channels=(6, 4),
                            latent_dim=4)
        net = TwoStreamRecoveryNet(cfg, init_seed=0)
        x = torch.zeros(1, 3, 997)
        g = net.encode_i(x)
        out = net.decode(g.mean, out_len=997)
        assert out.shape == (1, 997)


class TestInit:
    def test_same_seed_same_weights(self):
        a = TwoStreamRecoveryNet(TINY, init_seed=11)
        b = TwoStreamRecoveryNet(TINY, init_seed=11)
        for pa, pb in zip(a.parameters(), b.parameters()):
            assert torch.equal(pa, pb)

    def test_different_seed_different_weights(self):
        a = TwoStreamRecoveryNet(TINY, init_seed=11)
        b = TwoStreamRecoveryNet(TINY, init_seed=12)
        assert any(not torch.equal(pa, pb) for pa, pb in zip(a.parameters(), b.parameters()))

    def test_xavier_bounds_and_zero_bias(self):
        net = TwoStreamRecoveryNet(TINY, init_seed=5)
        for m in net.modules():
            if isinstance(m, (torch.nn.Conv1d, torch.nn.ConvTranspose1d, torch.nn.Linear)):
                w = m.weight.detach()
                receptive = int(np.prod(w.shape[2:])) if w.ndim > 2 else 1
                bound = np.sqrt(6.0 / ((w.shape[0] + w.shape[1]) * receptive))
                assert float(w.abs().max()) <= bound + 1e-7
                assert float(w.std()) > 0.1 * bound  # actually randomized
                assert torch.all(m.bias == 0)

    def test_independent_of_global_rng_state(self):
        torch.manual_seed(77)
        a = TwoStreamRecoveryNet(TINY, init_seed=1)
        torch.manual_seed(12345)
        b = TwoStreamRecoveryNet(TINY, init_seed=1)
        for pa, pb in zip(a.parameters(), b.parameters()):
            assert torch.equal(pa, pb)


class TestForward:
    def test_training_path_shapes(self):
        net = TwoStreamRecoveryNet(TINY, init_seed=0)
        x = batch(TINY)
        noise = torch.zeros(2, 4)
        out, g_i, g_q = net(x, x, noise, noise)
        assert out.shape == (2, 64)
        assert g_i.mean.shape == (2, 4)
        assert g_q.mean.shape == (2, 4)

    def test_latent_sum_is_commutative(self):
        net = TwoStreamRecoveryNet(TINY, init_seed=0).eval()
        x = batch(TINY)
        g_i = net.encode_i(x)
        g_q = net.encode_q(x)
        a = net.decode(g_i.mean + g_q.mean)
        b = net.decode(g_q.mean + g_i.mean)
        assert torch.equal(a, b)


class TestCheckpoint:
    def test_roundtrip_bitexact(self, tmp_path):
        net = TwoStreamRecoveryNet(TINY, init_seed=9)
        save_checkpoint(tmp_path / "ck", net)
        loaded, manifest = load_checkpoint(tmp_path / "ck")
        assert manifest["network"]["latent_dim"] == 4
        sd_a = net.state_dict()
        sd_b = loaded.state_dict()
        assert set(sd_a) == set(sd_b)
        for k in sd_a:
            assert torch.equal(sd_a[k].float(), sd_b[k].float()), k

    def test_loaded_net_reproduces_outputs(self, tmp_path):
        net = TwoStreamRecoveryNet(TINY, init_seed=9).eval()
        x = batch(TINY)
        save_checkpoint(tmp_path / "ck", net)
        loaded, _ = load_checkpoint(tmp_path / "ck")
        a = net.decode(net.encode_i(x).mean + net.encode_q(x).mean)
        b = loaded.decode(loaded.encode_i(x).mean + loaded.encode_q(x).mean)
        assert torch.allclose(a, b, atol=1e-6)

    def test_wrong_format_rejected(self, tmp_path):
        (tmp_path / "ck").mkdir()
        (tmp_path / "ck" / "manifest.json").write_text('{"format": "something-else"}')
        with pytest.raises(ValueError, match="checkpoint"):
            load_checkpoint(tmp_path / "ck")

    def test_integer_buffers_survive(self, tmp_path):
        net = TwoStreamRecoveryNet(TINY, init_seed=0)
        x = batch(TINY)
        net.train()
        net(x, x, torch.zeros(2, 4), torch.zeros(2, 4))  # bumps BN counters
        save_checkpoint(tmp_path / "ck", net)
        loaded, _ = load_checkpoint(tmp_path / "ck")
        key = next(k for k in net.state_dict() if "num_batches_tracked" in k)
        assert loaded.state_dict()[key].dtype == net.state_dict()[key].dtype
        assert int(loaded.state_dict()[key]) == int(net.state_dict()[key]) == 1
