"""Frame sampling, selection-mask enumeration, pooling, and the joint feature map."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .subseq import SubseqSpec

POOLING_KINDS = ("max", "mean")


@dataclass(frozen=True)
class SelectionMask:
    """Which k of the l sampled frames represent a subsequence."""

    selected: tuple[int, ...]

    def __post_init__(self):
        sel = tuple(int(i) for i in self.selected)
        if not sel:
            raise ValueError("selection must be non-empty")
        if list(sel) != sorted(set(sel)) or sel[0] < 0:
            raise ValueError(f"selection must be sorted distinct indices >= 0: {sel}")
        object.__setattr__(self, "selected", sel)

    def __len__(self):
        return len(self.selected)


def sample_frames_uniform(spec: SubseqSpec, l: int) -> np.ndarray:
    """Indices of l frames spread uniformly over the window, endpoints included.

    Index j maps to spec.start + floor(j*(length-1)/(l-1)); indices repeat when
    the window is shorter than l.
    """
    if l < 2:
        raise ValueError("l must be >= 2")
    j = np.arange(l)
    return spec.start + (j * (spec.length - 1)) // (l - 1)


def enumerate_masks(l: int, k: int) -> list[SelectionMask]:
    """All C(l, k) selections of k of l frames, in lexicographic order."""
    if not 1 <= k <= l:
        raise ValueError(f"need 1 <= k <= l, got k={k} l={l}")
    return [SelectionMask(c) for c in itertools.combinations(range(l), k)]


@lru_cache(maxsize=None)
def mask_index_array(l: int, k: int) -> np.ndarray:
    """The same enumeration as enumerate_masks, as a (C, k) int array."""
    if not 1 <= k <= l:
        raise ValueError(f"need 1 <= k <= l, got k={k} l={l}")
    return np.array(list(itertools.combinations(range(l), k)), dtype=np.intp)


def pool(frames: list | np.ndarray, mask: SelectionMask, kind: str) -> np.ndarray:
    """Elementwise max or arithmetic mean over the selected frames."""
    if kind not in POOLING_KINDS:
        raise ValueError(f"unknown pooling kind {kind!r}")
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim != 2:
        raise ValueError("frames must be a (n, d) array or list of vectors")
    sel = list(mask.selected)
    if sel[-1] >= frames.shape[0]:
        raise ValueError(f"mask index {sel[-1]} out of range for {frames.shape[0]} frames")
    chosen = frames[sel]
    return chosen.max(axis=0) if kind == "max" else chosen.mean(axis=0)


def pool_all_masks(frames_sampled: np.ndarray, l: int, k: int, kind: str) -> np.ndarray:
    """Pooled vectors for every mask at once: (C(l,k), d).

    Row order matches enumerate_masks(l, k).
    """
    if kind not in POOLING_KINDS:
        raise ValueError(f"unknown pooling kind {kind!r}")
    frames_sampled = np.asarray(frames_sampled, dtype=np.float64)
    gathered = frames_sampled[mask_index_array(l, k)]  # (C, k, d)
    return gathered.max(axis=1) if kind == "max" else gathered.mean(axis=1)


def joint_feature(x_pooled: np.ndarray, y: int, K: int) -> np.ndarray:
    """Class-blocked embedding: zeros except block y, which holds x_pooled."""
    x_pooled = np.asarray(x_pooled, dtype=np.float64)
    if not 0 <= y < K:
        raise ValueError(f"label {y} out of range [0, {K})")
    d = x_pooled.shape[0]
    out = np.zeros(K * d)
    out[y * d:(y + 1) * d] = x_pooled
    return out
