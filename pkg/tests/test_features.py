import numpy as np
import pytest

from seld3d import features, geom, scenegen, wavio
from seld3d.errors import EmptyClip, ShapeMismatch
from seld3d.features import FoaClip


def ten_second_clip(rng):
    return FoaClip(rng.standard_normal((4, 240000)) * 0.1)


def test_stft_frame_count(rng):
    spec = features.stft(ten_second_clip(rng))
    # 10 s * 24 kHz / 480-sample hop
    assert spec.shape == (4, 500, 513)


def test_stft_zero_clip():
    spec = features.stft(FoaClip(np.zeros((4, 24000))))
    assert spec.shape == (4, 50, 513)
    assert not spec.any()


def test_stft_empty():
    with pytest.raises(EmptyClip):
        features.stft(FoaClip(np.zeros((4, 100))))


def test_stft_sine_peak():
    t = np.arange(48000) / 24000.0
    x = np.zeros((4, t.size))
    x[0] = np.sin(2 * np.pi * 1000.0 * t)
    spec = features.stft(FoaClip(x))
    energy = (np.abs(spec[0]) ** 2).sum(axis=0)
    assert int(np.argmax(energy)) == round(1000 * 1024 / 24000)   # bin 43


def test_mel_filterbank_shape_and_coverage():
    bank = features.mel_filterbank()
    assert bank.shape == (513, 64)
    assert np.all(bank.max(axis=0) > 0)     # every band hits at least one FFT bin
    freqs = np.arange(513) * 24000 / 1024
    assert not bank[freqs < 50].any() and not bank[freqs > 12000].any()


def test_hz_mel_roundtrip():
    f = np.array([0.0, 50.0, 1000.0, 12000.0])
    np.testing.assert_allclose(features.mel_to_hz(features.hz_to_mel(f)), f, atol=1e-9)
    assert features.hz_to_mel(700.0) == pytest.approx(2595.0 * np.log10(2.0))


def test_log_mel_zero_is_floor():
    lm = features.log_mel(np.zeros((4, 10, 513), dtype=complex))
    assert lm.shape == (4, 10, 64)
    assert np.all(lm == np.log(1e-8))


def test_log_mel_scaling(rng):
    x = rng.standard_normal((4, 48000))
    a = features.log_mel(features.stft(FoaClip(x)))
    b = features.log_mel(features.stft(FoaClip(10 * x)))
    well = a > np.log(1e-8) + 10
    assert well.mean() > 0.9
    np.testing.assert_allclose((b - a)[well], 2 * np.log(10), atol=1e-6)


def test_iv_zero_signal():
    iv = features.intensity_vectors(np.zeros((4, 5, 513), dtype=complex))
    assert iv.shape == (3, 5, 64)
    assert np.all(np.isfinite(iv)) and not iv.any()


def test_iv_norm_bounded(rng):
    iv = features.intensity_vectors(features.stft(FoaClip(rng.standard_normal((4, 24000)))))
    assert np.all(np.linalg.norm(iv, axis=0) <= 1 + 1e-12)


def test_iv_z_sign_flip(rng):
    x = rng.standard_normal((4, 24000))
    iv = features.intensity_vectors(features.stft(FoaClip(x)))
    y = x.copy()
    y[2] *= -1
    iv2 = features.intensity_vectors(features.stft(FoaClip(y)))
    assert np.array_equal(iv2[2], -iv[2])
    assert np.array_equal(iv2[:2], iv[:2])


def test_iv_points_at_source(single_source_scene):
    spec = single_source_scene(30.0, 0.0)
    clip = scenegen.render_audio(spec)
    iv = features.intensity_vectors(features.stft(clip))
    az, el = features.estimate_doa_from_ivs(iv)
    assert geom.direction_error_deg(az, el, 30.0, 0.0) <= 1.0


def test_iv_direction_oracle_50_sources(rng):
    errs = []
    for i in range(50):
        az = rng.uniform(-180, 180)
        el = rng.uniform(-80, 80)
        spec = scenegen.SceneSpec(100 + i, 3, 2.0, [
            scenegen.SceneEvent(int(rng.integers(3)), 0.2, 1.8, az, el, rng.uniform(0.5, 5))])
        iv = features.intensity_vectors(features.stft(scenegen.render_audio(spec)))
        errs.append(geom.direction_error_deg(*features.estimate_doa_from_ivs(iv), az, el))
    assert np.mean(errs) <= 2.0


def test_stack_and_shapes(rng):
    stack = features.audio_features(ten_second_clip(rng))
    assert stack.shape == (7, 500, 64)
    assert np.all(np.isfinite(stack))
    spec = features.stft(ten_second_clip(rng))
    lm, iv = features.log_mel(spec), features.intensity_vectors(spec)
    st = features.stack_audio_features(lm, iv)
    assert np.array_equal(st[5], iv[1])
    assert np.array_equal(st[:4], lm)
    with pytest.raises(ShapeMismatch):
        features.stack_audio_features(lm, iv[:, :-1])


def test_repeat_visual():
    v = np.arange(100 * 49, dtype=float).reshape(100, 49)
    r = features.repeat_visual(v)
    assert r.shape == (500, 49)
    for k in range(5):
        assert np.array_equal(r[k], v[0])
    assert np.array_equal(r.reshape(100, 5, 49), np.repeat(v[:, None], 5, axis=1))
    with pytest.raises(ShapeMismatch):
        features.repeat_visual(np.zeros((100, 48)))


def test_pool_constant():
    out = features.pool_audio_to_video_rate(np.full((500, 3), 1.5))
    assert out.shape == (100, 3)
    assert np.all(out == 3.0)


def test_pool_ramp_window():
    a = np.tile(np.array([1.0, 2, 3, 4, 5])[:, None], (1, 4))
    assert np.all(features.pool_audio_to_video_rate(a) == 8.0)


def test_pool_matches_loop(rng):
    a = rng.standard_normal((40, 6))
    out = features.pool_audio_to_video_rate(a)
    for t in range(8):
        for d in range(6):
            w = [a[5 * t + i, d] for i in range(5)]
            assert out[t, d] == pytest.approx(sum(w) / 5 + max(w), abs=1e-14)
    with pytest.raises(ShapeMismatch):
        features.pool_audio_to_video_rate(a[:39])


def test_features_finite_on_extreme_input(rng):
    x = rng.standard_normal((4, 4800)) * 1e6
    x[:, :2400] = 0.0
    assert np.all(np.isfinite(features.audio_features(FoaClip(x))))


@pytest.mark.parametrize("bits", [16, 32])
def test_wav_roundtrip(tmp_path, rng, bits):
    x = np.clip(rng.standard_normal((4, 1000)) * 0.2, -0.99, 0.99)
    wavio.write_wav(tmp_path / "a.wav", x, 24000, bits=bits)
    y, sr = wavio.read_wav(tmp_path / "a.wav")
    assert sr == 24000 and y.shape == (4, 1000)
    np.testing.assert_allclose(y, x, atol=2.0 ** (1 - bits))
