import json

import numpy as np
import pytest

from r2g_policy import NoDataError, ShapeError
from r2g_policy.archive import (action_chunks, load_dataset, observation_at,
                                read_episode)


@pytest.fixture(scope="module")
def episodes(mini_dataset):
    return load_dataset(mini_dataset)


def test_reads_all_episodes(episodes):
    assert len(episodes) == 6
    for ep in episodes:
        assert ep.clouds.dtype == np.float32
        assert ep.clouds.shape[1:] == (256, 3)
        assert ep.proprio.shape == (len(ep), 8)
        assert ep.meta["success"] is True


def test_proprio_quaternions_unit_norm(episodes):
    for ep in episodes:
        norms = np.linalg.norm(ep.proprio[:, 3:7], axis=1)
        assert np.abs(norms - 1.0).max() < 1e-5  # float32 storage


def test_observation_window(episodes):
    ep = episodes[0]
    clouds, proprio = observation_at(ep, 0)
    assert clouds.shape == (2, 256, 3)
    assert np.array_equal(clouds[0], clouds[1])  # first frame duplicates
    assert np.array_equal(proprio[:8], proprio[8:])
    clouds, proprio = observation_at(ep, 3)
    assert np.array_equal(clouds[0], ep.clouds[2])
    assert np.array_equal(clouds[1], ep.clouds[3])


def test_chunks_match_generator_reference(mini_dataset, episodes):
    """The action-extraction convention must agree with the generator's
    reference extractor (cross-package contract check)."""
    r2g_dataset = pytest.importorskip("r2g.dataset")
    paths = sorted(p for p in mini_dataset.iterdir()
                   if p.is_dir() and (p / "frames.bin").exists())
    for p, ep in zip(paths, episodes):
        ours = action_chunks(ep, horizon=5)
        theirs = r2g_dataset.extract_action_chunks(
            r2g_dataset.read_episode(p), horizon=5)
        assert np.array_equal(ours, theirs)


def test_truncated_archive_rejected(mini_dataset, tmp_path):
    src = next(p for p in sorted(mini_dataset.iterdir()) if p.is_dir())
    dst = tmp_path / "broken"
    dst.mkdir()
    (dst / "meta.json").write_text((src / "meta.json").read_text())
    raw = (src / "frames.bin").read_bytes()
    (dst / "frames.bin").write_bytes(raw[:-4])
    with pytest.raises(ShapeError):
        read_episode(dst)


def test_empty_root_rejected(tmp_path):
    with pytest.raises(NoDataError):
        load_dataset(tmp_path)


def test_meta_matches_binary(mini_dataset, episodes):
    for p, ep in zip(sorted(d for d in mini_dataset.iterdir() if d.is_dir()),
                     episodes):
        meta = json.loads((p / "meta.json").read_text())
        assert meta["frame_count"] == len(ep)
        assert meta["points_per_cloud"] == ep.cloud_size
