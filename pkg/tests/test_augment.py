import numpy as np
import pytest

from seld3d import augment, features, geom, scenegen
from seld3d.augment import SpatialTransform
from seld3d.codec import Event, FrameEvents
from seld3d.errors import BadAspect

ALL = augment.canonical_transforms()
WITH_REFLECT = [SpatialTransform.from_id(i, reflect=r) for i in range(8) for r in (False, True)]


def iv_doa(clip):
    return features.estimate_doa_from_ivs(features.intensity_vectors(features.stft(clip)))


def test_ids_roundtrip():
    assert [t.id for t in ALL] == list(range(8))
    assert ALL[5] == SpatialTransform(90, True)


def test_rot180_involution(rng):
    x = rng.standard_normal((4, 1000))
    t = SpatialTransform(180)
    assert augment.acs_audio(augment.acs_audio(x, t), t).tobytes() == x.tobytes()


@pytest.mark.parametrize("t1", WITH_REFLECT)
@pytest.mark.parametrize("t2", WITH_REFLECT)
def test_group_law_bitwise(t1, t2, rng):
    x = rng.standard_normal((4, 64))
    twice = augment.acs_audio(augment.acs_audio(x, t1), t2)
    once = augment.acs_audio(x, augment.compose(t1, t2))
    assert twice.tobytes() == once.tobytes()
    az, el = rng.uniform(-180, 180), rng.uniform(-90, 90)
    a2 = augment.transform_direction(*augment.transform_direction(az, el, t1), t2)
    a1 = augment.transform_direction(az, el, augment.compose(t1, t2))
    assert geom.direction_error_deg(*a1, *a2) < 1e-9


def test_w_channel_invariant(rng):
    x = rng.standard_normal((4, 100))
    for t in WITH_REFLECT:
        assert np.array_equal(augment.acs_audio(x, t)[0], x[0])


def test_gains_transform_like_labels(rng):
    # encoding gains of a direction, channel-swapped, equal gains of the mapped direction
    for t in WITH_REFLECT:
        for _ in range(20):
            az, el = rng.uniform(-180, 180), rng.uniform(-90, 90)
            g = scenegen.foa_gains(az, el)[:, None]
            np.testing.assert_allclose(augment.acs_audio(g, t)[:, 0],
                                       scenegen.foa_gains(*augment.transform_direction(az, el, t)),
                                       atol=1e-12)


def test_rotate_90_moves_source(single_source_scene):
    clip = scenegen.render_audio(single_source_scene(30.0, 0.0))
    az, el = iv_doa(augment.acs_audio(clip, SpatialTransform(90)))
    assert geom.direction_error_deg(az, el, 120.0, 0.0) <= 2.0


def test_elevation_flip(single_source_scene):
    clip = scenegen.render_audio(single_source_scene(-70.0, 20.0))
    az, el = iv_doa(augment.acs_audio(clip, SpatialTransform(0, True)))
    assert geom.direction_error_deg(az, el, -70.0, -20.0) <= 2.0


def test_labels():
    f = FrameEvents(3, [Event(0, 30.0, 10.0, 2.0), Event(1, 150.0, -5.0, 1.0)])
    out = augment.acs_labels(f, SpatialTransform(90))
    assert out.entries[0] == Event(0, 120.0, 10.0, 2.0)
    assert out.entries[1].azimuth == pytest.approx(-120.0)
    for t in WITH_REFLECT:
        g = augment.acs_labels([f], t)[0]
        assert [e.distance for e in g.entries] == [2.0, 1.0]
        assert g.frame_index == 3
    assert augment.acs_labels(f, SpatialTransform(0, True)).entries[0].elevation == -10.0


def test_frame_rotation_identity_and_mirror(rng):
    img = rng.integers(0, 256, (18, 36, 3), dtype=np.uint8)
    assert np.array_equal(augment.avps_frame(img, SpatialTransform(0)), img)
    assert np.array_equal(np.roll(img, -36, axis=1), img)    # shift by W is identity
    t = SpatialTransform(0, True)
    assert np.array_equal(augment.avps_frame(augment.avps_frame(img, t), t), img)
    with pytest.raises(BadAspect):
        augment.avps_frame(np.zeros((10, 30, 3)), t)


@pytest.mark.parametrize("t", WITH_REFLECT)
def test_frame_pixel_follows_labels(t):
    w, h = 360, 180
    col, row = geom.angle_to_pixel(30.0, 10.0, w, h)
    img = np.zeros((h, w, 3), dtype=np.uint8)
    img[row, col] = 255
    src = geom.pixel_to_angle(col, row, w, h)
    out = augment.avps_frame(img, t)
    rr, cc = np.argwhere(out[..., 0] == 255)[0]
    want = geom.angle_to_pixel(*augment.transform_direction(src.azimuth, src.elevation, t), w, h)
    assert (cc, rr) == want


def test_frame_example_30_10_plus_90():
    w, h = 1920, 960
    col, row = geom.angle_to_pixel(30.0, 10.0, w, h)
    img = np.zeros((h, w, 3), dtype=np.uint8)
    img[row, col] = 255
    rr, cc = np.argwhere(augment.avps_frame(img, SpatialTransform(90))[..., 0])[0]
    assert (cc, rr) == geom.angle_to_pixel(120.0, 10.0, w, h)


def test_visual_features_rules(rng):
    v = rng.random((4, 49))
    assert np.array_equal(augment.avps_visual_features(v, SpatialTransform(0)), v)
    t = SpatialTransform(0, True)
    assert np.array_equal(augment.avps_visual_features(augment.avps_visual_features(v, t), t), v)
    maps = v.reshape(4, 7, 7)
    # round-half-up: 90 -> 2, 180 -> 4, 270 -> 5 columns
    for rot, shift in ((90, 2), (180, 4), (270, 5)):
        out = augment.avps_visual_features(v, SpatialTransform(rot)).reshape(4, 7, 7)
        assert np.array_equal(out, np.roll(maps, -shift, axis=2))


def test_visual_features_agree_with_downsampled_frames(rng):
    # 7x7 block images: frame transform then block-average equals 7x7 transform
    # whenever the pixel shift is a whole number of blocks (rot 0 and flips)
    img = np.repeat(np.repeat(rng.random((7, 7)), 4, axis=0), 8, axis=1)[..., None].repeat(3, axis=2)
    img = img[:28, :56]
    for t in (SpatialTransform(0), SpatialTransform(0, True), SpatialTransform(0, False, True)):
        f = augment.avps_frame(img, t)[..., 0].reshape(7, 4, 7, 8).mean(axis=(1, 3))
        v = augment.avps_visual_features(img[..., 0].reshape(7, 4, 7, 8).mean(axis=(1, 3)).reshape(1, 49), t)
        np.testing.assert_allclose(f.reshape(1, 49), v, atol=1e-12)


def test_ppm_roundtrip(tmp_path, rng):
    img = rng.integers(0, 256, (9, 18, 3), dtype=np.uint8)
    augment.write_ppm(tmp_path / "a.ppm", img)
    assert np.array_equal(augment.read_ppm(tmp_path / "a.ppm"), img)
    (tmp_path / "c.ppm").write_bytes(b"P6\n# comment\n2 1\n255\n" + bytes(range(6)))
    assert augment.read_ppm(tmp_path / "c.ppm").shape == (1, 2, 3)


@pytest.mark.parametrize("t", WITH_REFLECT)
def test_feature_acs_equals_audio_acs(t, rng):
    x = rng.standard_normal((4, 9600))
    direct = features.audio_features(augment.acs_audio(features.FoaClip(x), t))
    via = augment.acs_features(features.audio_features(features.FoaClip(x)), t)
    np.testing.assert_allclose(via, direct, rtol=1e-9, atol=1e-12)


@pytest.mark.parametrize("t", WITH_REFLECT)
def test_target_transform_matches_labels(t, rng):
    from seld3d import codec
    az, el, d = rng.uniform(-180, 180), rng.uniform(-80, 80), rng.uniform(0.5, 5)
    _, tgt = codec.encode(FrameEvents(0, [Event(0, az, el, d)]), 1)
    _, want = codec.encode(augment.acs_labels(FrameEvents(0, [Event(0, az, el, d)]), t), 1)
    np.testing.assert_allclose(augment.transform_targets(tgt, t), want, atol=1e-12)
