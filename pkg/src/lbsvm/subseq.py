"""Multi-scale subsequence enumeration, containment, and the adaptive margin."""

from __future__ import annotations

from dataclasses import dataclass

DEFAULT_START_STRIDE = 2
DEFAULT_NUM_SCALES = 10


@dataclass(frozen=True, order=True)
class SubseqSpec:
    """A contiguous frame interval: start index (0-based) and frame count."""

    start: int
    length: int

    def __post_init__(self):
        if self.start < 0:
            raise ValueError(f"start must be >= 0, got {self.start}")
        if self.length < 1:
            raise ValueError(f"length must be >= 1, got {self.length}")

    @property
    def end(self) -> int:
        """One past the last frame index."""
        return self.start + self.length

    def contains(self, other: "SubseqSpec") -> bool:
        """Strict interval containment: other fits inside and is shorter."""
        return (
            self.start <= other.start
            and other.end <= self.end
            and other.length < self.length
        )


def default_scales(n_frames: int) -> tuple[int, ...]:
    """The 10 proportional window lengths round(n*k/10), k=1..10, deduplicated.

    For a 100-frame video this is 10, 20, ..., 100.
    """
    if n_frames < 1:
        raise ValueError("n_frames must be >= 1")
    scales = []
    for k in range(1, DEFAULT_NUM_SCALES + 1):
        s = max(1, round(n_frames * k / DEFAULT_NUM_SCALES))
        if s not in scales:
            scales.append(s)
    return tuple(scales)


@dataclass(frozen=True)
class SamplingScheme:
    """Window lengths and start stride for subsequence enumeration.

    scales=None means the proportional per-video default (default_scales).
    """

    scales: tuple[int, ...] | None = None
    start_stride: int = DEFAULT_START_STRIDE

    def __post_init__(self):
        if self.start_stride < 1:
            raise ValueError("start_stride must be >= 1")
        if self.scales is not None:
            scales = tuple(self.scales)
            if not scales or any(s < 1 for s in scales):
                raise ValueError("scales must be a non-empty list of lengths >= 1")
            if list(scales) != sorted(set(scales)):
                raise ValueError("scales must be strictly ascending")
            object.__setattr__(self, "scales", scales)

    def scales_for(self, n_frames: int) -> tuple[int, ...]:
        if self.scales is not None:
            return self.scales
        return default_scales(n_frames)


def enumerate_subsequences(n_frames: int, scheme: SamplingScheme) -> list[SubseqSpec]:
    """All windows of each scale <= n_frames, starts stepping by the stride.

    Ordered by (scale ascending, start ascending). Raises if every scale
    exceeds the video length.
    """
    scales = scheme.scales_for(n_frames)
    if n_frames < min(scales):
        raise ValueError(
            f"video of {n_frames} frames is shorter than every scale {scales}"
        )
    out = []
    for s in scales:
        if s > n_frames:
            continue
        for start in range(0, n_frames - s + 1, scheme.start_stride):
            out.append(SubseqSpec(start, s))
    return out


def contained_pairs(pool: list[SubseqSpec]) -> list[tuple[int, int]]:
    """All (parent_index, child_index) pairs with strict interval containment."""
    pairs = []
    for t, parent in enumerate(pool):
        for j, child in enumerate(pool):
            if parent.contains(child):
                pairs.append((t, j))
    return pairs


def children_of(pool: list[SubseqSpec], parent_index: int) -> list[int]:
    """Indices of pool entries strictly contained in pool[parent_index]."""
    parent = pool[parent_index]
    return [j for j, child in enumerate(pool) if parent.contains(child)]


def adaptive_margin(parent_len: int, child_len: int) -> float:
    """Required score gap between a window and a strictly shorter sub-window:
    1 - child_len/parent_len, in (0, 1]."""
    if not 0 < child_len < parent_len:
        raise ValueError(
            f"need 0 < child_len < parent_len, got child={child_len} parent={parent_len}"
        )
    return 1.0 - child_len / parent_len
