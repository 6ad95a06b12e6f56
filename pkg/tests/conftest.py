import numpy as np
import pytest

import tdc


def random_timeline(rng, frames, visual_tokens=6, audio_tokens=4, dim=8):
    """Small random timeline for format and oracle tests."""
    return tdc.VideoTimeline(
        rng.standard_normal((frames, visual_tokens, dim)).astype(np.float32),
        rng.standard_normal((frames, audio_tokens, dim)).astype(np.float32),
        rng.standard_normal((frames, dim)).astype(np.float32),
    )


def brute_force_cuts(similarities, tau, max_scenes):
    """Independent segmentation oracle: sort-based threshold-then-cap rule."""
    ranked = sorted(
        (float(s), i) for i, s in enumerate(similarities) if float(s) < tau
    )
    kept = ranked[: max_scenes - 1]
    return tuple(sorted(i + 1 for _, i in kept))


def walk_stream_counts(stream):
    """Counting oracle: tally tokens per window by scanning the stream records."""
    counts = {}
    for w in stream.window_index:
        counts[int(w)] = counts.get(int(w), 0) + 1
    return tuple(counts[w] for w in sorted(counts))


@pytest.fixture(scope="session")
def three_scene_timeline():
    return tdc.synth_generate(tdc.SynthSpec(seed=7, frames=60, boundaries=(20, 40)))


@pytest.fixture(scope="session")
def single_scene_timeline():
    return tdc.synth_generate(tdc.SynthSpec(seed=3, frames=60))


@pytest.fixture(scope="session")
def default_params():
    return tdc.init_params(tdc.QFormerConfig(seed=1))
