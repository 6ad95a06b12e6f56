"""Scene segmentation from consecutive-frame descriptor similarities.

A cut at frame index c means frame c starts a new scene.  Candidate cuts
are the positions whose similarity falls below the threshold; when more
candidates exist than the scene cap allows, the lowest-similarity ones are
kept, ties broken toward the earlier index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, DegenerateInputError
from .kernels import cosine_sim
from .timeline import VideoTimeline

DEFAULT_MAX_SCENES = 24
DEFAULT_TAU = 0.85


@dataclass(frozen=True)
class SegmenterConfig:
    max_scenes: int = DEFAULT_MAX_SCENES
    tau: float = DEFAULT_TAU
    descriptor_source: str = "stored"  # or "pooled"

    def __post_init__(self):
        if self.max_scenes < 1:
            raise ArgumentError(f"max_scenes must be >= 1, got {self.max_scenes}")
        # tau = 1 is allowed on purpose: it makes every dip a candidate, so the
        # scene cap alone decides (cap-only mode).
        if not -1.0 <= self.tau <= 1.0:
            raise ArgumentError(f"tau must be in [-1, 1], got {self.tau}")


@dataclass(frozen=True)
class ScenePartition:
    """Sorted cut indices partitioning [0, frame_count) into scenes."""

    frame_count: int
    boundaries: tuple[int, ...]

    def __post_init__(self):
        if self.frame_count < 1:
            raise ArgumentError(f"frame_count must be >= 1, got {self.frame_count}")
        if list(self.boundaries) != sorted(set(self.boundaries)):
            raise ArgumentError(f"boundaries must be strictly increasing, got {self.boundaries}")
        for b in self.boundaries:
            if not 0 < b < self.frame_count:
                raise ArgumentError(f"boundary {b} outside (0, {self.frame_count})")

    @property
    def scene_count(self) -> int:
        return len(self.boundaries) + 1

    @property
    def scenes(self) -> tuple[tuple[int, int], ...]:
        edges = (0, *self.boundaries, self.frame_count)
        return tuple((edges[i], edges[i + 1]) for i in range(len(edges) - 1))


def frame_similarities(tl: VideoTimeline, source: str = "stored") -> np.ndarray:
    """Cosine similarity of each consecutive descriptor pair; length T-1."""
    desc = tl.effective_descriptors(source)
    t_total = desc.shape[0]
    norms = np.linalg.norm(desc, axis=1)
    if np.any(norms == 0.0):
        bad = int(np.flatnonzero(norms == 0.0)[0])
        raise DegenerateInputError(f"frame {bad} has a zero-norm descriptor")
    return np.array([cosine_sim(desc[t], desc[t + 1]) for t in range(t_total - 1)])


def select_cuts(similarities: np.ndarray, cfg: SegmenterConfig) -> tuple[int, ...]:
    """Apply the threshold-then-cap rule to a similarity vector."""
    sims = np.asarray(similarities, dtype=np.float64)
    candidates = np.flatnonzero(sims < cfg.tau)
    if candidates.size > cfg.max_scenes - 1:
        # stable sort on similarity keeps the earlier index first among ties
        order = np.argsort(sims[candidates], kind="stable")
        candidates = candidates[order[: cfg.max_scenes - 1]]
    return tuple(sorted(int(i) + 1 for i in candidates))


def segment_scenes(tl: VideoTimeline, cfg: SegmenterConfig | None = None) -> ScenePartition:
    """Partition the timeline into at most cfg.max_scenes consistent scenes."""
    cfg = cfg or SegmenterConfig()
    sims = frame_similarities(tl, cfg.descriptor_source)
    return ScenePartition(tl.frame_count, select_cuts(sims, cfg))
