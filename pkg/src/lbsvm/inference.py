"""Latent-maximized scoring and the argmax inferences used in training.

All maximizations over selection masks are exhaustive. Ties break
deterministically: smallest label first, then lexicographically smallest
mask (mask enumeration order), then earliest pool entry for sub-window
maximization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .featmap import SelectionMask, mask_index_array, pool_all_masks, sample_frames_uniform
from .seqdata import FrameSequence
from .subseq import SubseqSpec, adaptive_margin


@dataclass
class ModelParams:
    """Weight vector organized as one block of dimension d per class."""

    w: np.ndarray
    K: int
    d: int

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=np.float64).ravel()
        if self.w.shape[0] != self.K * self.d:
            raise ValueError(
                f"weight length {self.w.shape[0]} != K*d = {self.K * self.d}"
            )

    @property
    def blocks(self) -> np.ndarray:
        """View of w as a (K, d) matrix, one row per class."""
        return self.w.reshape(self.K, self.d)

    @classmethod
    def zeros(cls, K: int, d: int) -> "ModelParams":
        return cls(np.zeros(K * d), K, d)


@dataclass
class ScoredPrediction:
    label: int
    mask: SelectionMask
    score: float


def _check_frames(model: ModelParams, frames_sampled: np.ndarray) -> np.ndarray:
    frames_sampled = np.asarray(frames_sampled, dtype=np.float64)
    if frames_sampled.ndim != 2 or frames_sampled.shape[1] != model.d:
        raise ValueError(
            f"sampled frames must be (l, {model.d}), got {frames_sampled.shape}"
        )
    return frames_sampled


def _mask_at(l: int, k: int, idx: int) -> SelectionMask:
    return SelectionMask(tuple(mask_index_array(l, k)[idx]))


def score(model: ModelParams, frames_sampled: np.ndarray, y: int, k: int,
          pooling: str = "max") -> tuple[float, SelectionMask]:
    """Best score of class y over all k-of-l selection masks.

    Returns (max score, lexicographically smallest maximizing mask).
    """
    frames_sampled = _check_frames(model, frames_sampled)
    if not 0 <= y < model.K:
        raise ValueError(f"label {y} out of range [0, {model.K})")
    l = frames_sampled.shape[0]
    pooled = pool_all_masks(frames_sampled, l, k, pooling)  # (C, d)
    scores = pooled @ model.blocks[y]
    best = int(np.argmax(scores))  # first occurrence = lexicographic tie-break
    return float(scores[best]), _mask_at(l, k, best)


def best_mask_true(model: ModelParams, frames_sampled: np.ndarray, y_true: int,
                   k: int, pooling: str = "max") -> tuple[SelectionMask, float]:
    """Maximizing mask and score for the true label (same search as score)."""
    s, mask = score(model, frames_sampled, y_true, k, pooling)
    return mask, s


def best_wrong_label(model: ModelParams, frames_sampled: np.ndarray, y_true: int,
                     k: int, pooling: str = "max") -> tuple[int, SelectionMask, float]:
    """Best (label, mask) over all labels except y_true."""
    if model.K < 2:
        raise ValueError("need K >= 2 to have a wrong label")
    frames_sampled = _check_frames(model, frames_sampled)
    l = frames_sampled.shape[0]
    pooled = pool_all_masks(frames_sampled, l, k, pooling)  # (C, d)
    scores = pooled @ model.blocks.T  # (C, K)
    scores[:, y_true] = -np.inf
    per_label = scores.max(axis=0)
    y = int(np.argmax(per_label))  # first max = smallest label
    best = int(np.argmax(scores[:, y]))
    return y, _mask_at(l, k, best), float(scores[best, y])


def best_contained_subseq(model: ModelParams, video: FrameSequence,
                          parent: SubseqSpec, pool: list[SubseqSpec], y_true: int,
                          l: int, k: int, pooling: str = "max"):
    """Maximize true-label score plus length margin over strictly contained
    sub-windows of the parent, jointly with the mask.

    Returns (child spec, mask, value-with-margin), or None when the parent
    has no strictly contained child in the pool.
    """
    best = None
    for child in pool:
        if not parent.contains(child):
            continue
        idx = sample_frames_uniform(child, l)
        s, mask = score(model, video.frames[idx], y_true, k, pooling)
        value = s + adaptive_margin(parent.length, child.length)
        if best is None or value > best[2]:
            best = (child, mask, value)
    return best


def predict(model: ModelParams, video: FrameSequence, l: int, k: int,
            pooling: str = "max") -> ScoredPrediction:
    """Jointly maximize label and mask on l frames sampled from the full video."""
    if video.d != model.d:
        raise ValueError(f"video dimension {video.d} != model d={model.d}")
    idx = sample_frames_uniform(SubseqSpec(0, video.n_frames), l)
    frames_sampled = video.frames[idx]
    pooled = pool_all_masks(frames_sampled, l, k, pooling)  # (C, d)
    scores = pooled @ model.blocks.T  # (C, K)
    per_label = scores.max(axis=0)
    y = int(np.argmax(per_label))
    best = int(np.argmax(scores[:, y]))
    return ScoredPrediction(label=y, mask=_mask_at(l, k, best),
                            score=float(scores[best, y]))


def sampled_frame_indices(video: FrameSequence, l: int) -> np.ndarray:
    """The video frame indices predict() scores (full-interval uniform sample)."""
    return sample_frames_uniform(SubseqSpec(0, video.n_frames), l)
