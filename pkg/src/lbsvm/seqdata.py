"""Dataset model, on-disk format, and a synthetic sequence generator.

A "video" is an ordered sequence of fixed-dimension frame feature vectors.
The synthetic generator places each class on a circular trajectory inside a
class-specific 2-plane of feature space, so that contiguous subsequences of
a video correspond to partial views of the object, and corrupts a fraction
of frames with draws from a single class-independent occluder cluster.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

# Geometry of the synthetic feature space. Class centers sit CENTER_SPREAD
# from the origin along mutually orthogonal directions (for K <= d), and each
# class traces a circle of radius ARC_RADIUS around its center. Occluder
# frames are drawn around a shared all-positive vector whose entries are
# comparable to CENTER_SPREAD, so elementwise max pooling over a contaminated
# selection wipes out the class coordinate.
CENTER_SPREAD = 2.0
ARC_RADIUS = 1.0
OCCLUDER_BASE_RANGE = (0.6, 1.1)  # entries of the occluder center, x CENTER_SPREAD
OCCLUDER_SIGMA = 0.25
TEST_ARC_RANGE = (0.2, 0.6)  # test-video arc length as a fraction of the circle


class DatasetFormatError(ValueError):
    """Raised when an on-disk dataset is malformed; names the file (and line)."""


@dataclass
class FrameSequence:
    """Ordered frames of one video, stored as an (n_frames, d) float array."""

    frames: np.ndarray

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.float64)
        if self.frames.ndim != 2 or self.frames.shape[0] < 1:
            raise ValueError("frames must be a non-empty (n_frames, d) array")

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def d(self) -> int:
        return self.frames.shape[1]

    def prefix(self, n: int) -> "FrameSequence":
        """First n frames as a new sequence (n clamped to [1, n_frames])."""
        n = max(1, min(n, self.n_frames))
        return FrameSequence(self.frames[:n].copy())

    def __eq__(self, other):
        if not isinstance(other, FrameSequence):
            return NotImplemented
        return self.frames.shape == other.frames.shape and np.array_equal(
            self.frames, other.frames
        )


@dataclass
class LabeledVideo:
    id: str
    sequence: FrameSequence
    label: int
    split: str  # "train" | "test"

    def __post_init__(self):
        if self.split not in ("train", "test"):
            raise ValueError(f"split must be 'train' or 'test', got {self.split!r}")


@dataclass
class Dataset:
    K: int
    d: int
    videos: list[LabeledVideo] = field(default_factory=list)

    def __post_init__(self):
        for v in self.videos:
            if not 0 <= v.label < self.K:
                raise ValueError(f"video {v.id!r}: label {v.label} not in [0, {self.K})")
            if v.sequence.d != self.d:
                raise ValueError(
                    f"video {v.id!r}: dimension {v.sequence.d} != dataset d={self.d}"
                )

    @property
    def train_videos(self) -> list[LabeledVideo]:
        return [v for v in self.videos if v.split == "train"]

    @property
    def test_videos(self) -> list[LabeledVideo]:
        return [v for v in self.videos if v.split == "test"]


@dataclass(frozen=True)
class GeneratorConfig:
    K: int
    d: int
    videos_per_class_train: int = 1
    videos_per_class_test: int = 20
    frames_train: int = 100
    frames_test_range: tuple[int, int] = (60, 100)
    noise_sigma: float = 0.25
    bad_frame_rate: float = 0.0
    seed: int = 0

    def validate(self):
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.d < 2:
            raise ValueError("d must be >= 2")
        if self.videos_per_class_train < 0 or self.videos_per_class_test < 0:
            raise ValueError("videos per class must be >= 0")
        if self.frames_train < 1:
            raise ValueError("frames_train must be >= 1")
        lo, hi = self.frames_test_range
        if lo < 1 or hi < lo:
            raise ValueError(f"bad frames_test_range {self.frames_test_range}")
        if not 0.0 <= self.bad_frame_rate <= 1.0:
            raise ValueError("bad_frame_rate must be in [0, 1]")
        if self.noise_sigma < 0.0:
            raise ValueError("noise_sigma must be >= 0")


def class_prototypes(config: GeneratorConfig) -> np.ndarray:
    """Per-class trajectory centers, shape (K, d).

    Deterministic given the seed; identical to the centers used by
    generate_synthetic. For K <= d the centers are mutually orthogonal,
    which guarantees nearest-center separation of clean frames.
    """
    config.validate()
    rng = np.random.default_rng(config.seed)
    return _geometry(rng, config)[0]


def _geometry(rng: np.random.Generator, config: GeneratorConfig):
    K, d = config.K, config.d
    if K <= d:
        # orthogonal centers: scaled axes under a random permutation
        axes = rng.permutation(d)[:K]
        centers = np.zeros((K, d))
        centers[np.arange(K), axes] = CENTER_SPREAD
    else:
        g = rng.standard_normal((K, d))
        centers = CENTER_SPREAD * g / np.linalg.norm(g, axis=1, keepdims=True)
    # per-class orthonormal arc plane (u, v)
    planes = np.empty((K, 2, d))
    for c in range(K):
        u = rng.standard_normal(d)
        u /= np.linalg.norm(u)
        v = rng.standard_normal(d)
        v -= (v @ u) * u
        v /= np.linalg.norm(v)
        planes[c, 0], planes[c, 1] = u, v
    lo, hi = OCCLUDER_BASE_RANGE
    occluder_base = CENTER_SPREAD * rng.uniform(lo, hi, size=d)
    return centers, planes, occluder_base


def _make_video(rng, config, centers, planes, occluder_base, label, n_frames,
                arc_start, arc_length):
    theta = arc_start + arc_length * np.linspace(0.0, 1.0, n_frames)
    circle = np.stack([np.cos(theta), np.sin(theta)], axis=1)  # (n, 2)
    frames = centers[label] + ARC_RADIUS * (circle @ planes[label])
    if config.noise_sigma > 0:
        frames = frames + config.noise_sigma * rng.standard_normal(frames.shape)
    bad = rng.random(n_frames) < config.bad_frame_rate
    n_bad = int(bad.sum())
    if n_bad:
        frames[bad] = occluder_base + OCCLUDER_SIGMA * rng.standard_normal(
            (n_bad, config.d)
        )
    return frames


def generate_synthetic(config: GeneratorConfig) -> Dataset:
    """Generate a deterministic synthetic dataset.

    Training videos sweep the full circle of their class trajectory from a
    random start angle; test videos cover a random partial arc and have a
    random length drawn from config.frames_test_range. Each frame is the
    trajectory point plus isotropic Gaussian noise, and is replaced with
    probability config.bad_frame_rate by a draw from the shared occluder
    cluster.
    """
    config.validate()
    rng = np.random.default_rng(config.seed)
    centers, planes, occluder_base = _geometry(rng, config)
    videos = []
    two_pi = 2.0 * np.pi
    for c in range(config.K):
        for j in range(config.videos_per_class_train):
            frames = _make_video(
                rng, config, centers, planes, occluder_base, c,
                config.frames_train,
                arc_start=rng.uniform(0.0, two_pi), arc_length=two_pi,
            )
            videos.append(LabeledVideo(
                id=f"train-c{c:02d}-v{j:03d}",
                sequence=FrameSequence(frames), label=c, split="train",
            ))
    lo, hi = config.frames_test_range
    arc_lo, arc_hi = TEST_ARC_RANGE
    for c in range(config.K):
        for j in range(config.videos_per_class_test):
            n_frames = int(rng.integers(lo, hi + 1))
            frames = _make_video(
                rng, config, centers, planes, occluder_base, c, n_frames,
                arc_start=rng.uniform(0.0, two_pi),
                arc_length=two_pi * rng.uniform(arc_lo, arc_hi),
            )
            videos.append(LabeledVideo(
                id=f"test-c{c:02d}-v{j:03d}",
                sequence=FrameSequence(frames), label=c, split="test",
            ))
    return Dataset(K=config.K, d=config.d, videos=videos)


def _format_row(row: np.ndarray) -> str:
    # repr round-trips float64 exactly and is deterministic
    return " ".join(repr(float(x)) for x in row)


def save_dataset(ds: Dataset, dir_path: str) -> None:
    """Write manifest.json plus one text file per video under dir_path."""
    vid_dir = os.path.join(dir_path, "videos")
    os.makedirs(vid_dir, exist_ok=True)
    entries = []
    for v in ds.videos:
        rel = os.path.join("videos", f"{v.id}.txt")
        with open(os.path.join(dir_path, rel), "w") as f:
            f.write(f"{v.sequence.n_frames} {ds.d}\n")
            for row in v.sequence.frames:
                f.write(_format_row(row) + "\n")
        entries.append({
            "id": v.id, "label": v.label, "split": v.split,
            "path": rel, "num_frames": v.sequence.n_frames,
        })
    manifest = {"K": ds.K, "d": ds.d, "videos": entries}
    with open(os.path.join(dir_path, "manifest.json"), "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")


def load_video_file(path: str) -> FrameSequence:
    """Parse one per-video text file ("num_frames d" header, one row per frame)."""
    try:
        with open(path) as f:
            lines = f.read().splitlines()
    except OSError as e:
        raise DatasetFormatError(f"{path}: cannot read video file: {e}") from e
    if not lines:
        raise DatasetFormatError(f"{path}:1: empty video file")
    header = lines[0].split()
    if len(header) != 2:
        raise DatasetFormatError(f"{path}:1: expected header 'num_frames d'")
    try:
        n_frames, d = int(header[0]), int(header[1])
    except ValueError as e:
        raise DatasetFormatError(f"{path}:1: non-integer header: {e}") from e
    if n_frames < 1 or d < 1:
        raise DatasetFormatError(f"{path}:1: invalid header values {n_frames} {d}")
    if len(lines) - 1 < n_frames:
        raise DatasetFormatError(
            f"{path}: header promises {n_frames} frames, found {len(lines) - 1}"
        )
    frames = np.empty((n_frames, d))
    for i in range(n_frames):
        parts = lines[1 + i].split()
        if len(parts) != d:
            raise DatasetFormatError(
                f"{path}:{i + 2}: expected {d} columns, found {len(parts)}"
            )
        try:
            frames[i] = [float(p) for p in parts]
        except ValueError as e:
            raise DatasetFormatError(f"{path}:{i + 2}: bad float: {e}") from e
    return FrameSequence(frames)


def load_dataset(dir_path: str) -> Dataset:
    """Load a dataset directory written by save_dataset."""
    manifest_path = os.path.join(dir_path, "manifest.json")
    try:
        with open(manifest_path) as f:
            manifest = json.load(f)
    except OSError as e:
        raise DatasetFormatError(f"{manifest_path}: cannot read manifest: {e}") from e
    except json.JSONDecodeError as e:
        raise DatasetFormatError(
            f"{manifest_path}:{e.lineno}: malformed JSON: {e.msg}"
        ) from e
    for key in ("K", "d", "videos"):
        if key not in manifest:
            raise DatasetFormatError(f"{manifest_path}: missing field {key!r}")
    K, d = int(manifest["K"]), int(manifest["d"])
    videos = []
    for entry in manifest["videos"]:
        for key in ("id", "label", "split", "path", "num_frames"):
            if key not in entry:
                raise DatasetFormatError(
                    f"{manifest_path}: video entry missing field {key!r}"
                )
        path = os.path.join(dir_path, entry["path"])
        if not os.path.exists(path):
            raise DatasetFormatError(f"{manifest_path}: missing frame file {path}")
        seq = load_video_file(path)
        if seq.d != d:
            raise DatasetFormatError(
                f"{path}: dimension {seq.d} does not match manifest d={d}"
            )
        if seq.n_frames != int(entry["num_frames"]):
            raise DatasetFormatError(
                f"{path}: {seq.n_frames} frames, manifest says {entry['num_frames']}"
            )
        videos.append(LabeledVideo(
            id=entry["id"], sequence=seq,
            label=int(entry["label"]), split=entry["split"],
        ))
    return Dataset(K=K, d=d, videos=videos)
