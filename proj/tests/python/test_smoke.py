import math

import numpy as np
import pytest

import peavs


def test_accuracy_and_bins():
    assert peavs.binary_sync_accuracy(39, 227, 4, 130) == pytest.approx(0.4225, abs=0)
    assert peavs.bin_score(5.0) == 21
    assert peavs.bin_score(4.76) == 20


def test_frechet_matches_closed_form_for_diagonal():
    rng = np.random.default_rng(0)
    va, vb = rng.uniform(0.1, 2.0, 5), rng.uniform(0.1, 2.0, 5)
    ma, mb = rng.normal(size=5), rng.normal(size=5)
    want = np.sum((ma - mb) ** 2) + np.sum(va + vb - 2 * np.sqrt(va * vb))
    got = peavs.frechet_distance(ma, np.diag(va), mb, np.diag(vb))
    assert got == pytest.approx(want, rel=1e-9)


def test_alpha_and_disagreement():
    assert peavs.krippendorff_alpha([[2, 2, 2], [5, 5], [1, 1]]) == 1.0
    assert peavs.classify_disagreement([1, 4, 5]) == "qa_required"
    assert peavs.classify_disagreement([3, 3, 4]) == "agreement"


def test_clip_distort_extract_and_favd():
    clip = peavs.make_clip("c1", 5, seconds=3.0)
    assert clip.frame_count == 75
    assert len(peavs.kind_names()) == 9
    shifted = clip.distort(1, 10)
    assert math.isclose(shifted.video_seconds, clip.video_seconds)
    audio, video = peavs.extract_features(clip, audio_dim=16, video_dim=32)
    assert audio.shape == (3, 16) and video.shape == (3, 32)
    assert audio.dtype == np.float32
    ref = [peavs.extract_features(peavs.make_clip(f"r{i}", i, 3.0), 16, 32) for i in range(4)]
    assert peavs.favd_score(ref, ref, "favd") == pytest.approx(0.0, abs=1e-6)


def test_errors_surface_as_peavs_error():
    clip = peavs.make_clip("c2", 1, seconds=2.0)
    with pytest.raises(peavs.PeavsError):
        clip.distort(1, 11)
    with pytest.raises(peavs.PeavsError):
        peavs.extract_features(peavs.make_clip("tiny", 1, seconds=0.5))
