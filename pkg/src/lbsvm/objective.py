"""The regularized bi-constraint risk, its subgradient, and ablation flags.

The risk over training windows is

    R(w) = sum_i sum_t [ C1 * max(0, R1_it) + C2 * max(0, R2_it) ]

where R1_it is the margin violation of the best wrong label on window t of
video i, and R2_it is the violation of the requirement that the window's
true-label score exceed every strictly contained sub-window's score by the
length margin. Both inner maximizations run jointly over selection masks.

RiskEvaluator precomputes the pooled feature of every (window, mask) pair
once (it does not depend on w), which turns each risk or subgradient
evaluation into a handful of matrix products per video.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .featmap import mask_index_array, pool_all_masks, sample_frames_uniform
from .inference import ModelParams
from .seqdata import Dataset, LabeledVideo
from .subseq import SamplingScheme, SubseqSpec, adaptive_margin, contained_pairs

VARIANT_NAMES = ("scsvm", "bsvm", "lbsvm")


@dataclass(frozen=True)
class VariantFlags:
    """Ablation switches: full model is (True, True)."""

    monotonicity_on: bool = True
    latent_on: bool = True

    @classmethod
    def lbsvm(cls):
        return cls(True, True)

    @classmethod
    def bsvm(cls):
        return cls(True, False)

    @classmethod
    def scsvm(cls):
        return cls(False, False)

    @classmethod
    def from_name(cls, name: str) -> "VariantFlags":
        try:
            return {"scsvm": cls.scsvm, "bsvm": cls.bsvm, "lbsvm": cls.lbsvm}[name]()
        except KeyError:
            raise ValueError(f"unknown variant {name!r}") from None

    @property
    def name(self) -> str:
        if self.monotonicity_on and self.latent_on:
            return "lbsvm"
        if self.monotonicity_on:
            return "bsvm"
        if not self.latent_on:
            return "scsvm"
        raise ValueError("latent selection without monotonicity has no variant name")


@dataclass(frozen=True)
class Hyperparams:
    c1: float = 0.5e-4
    c2: float = 0.5e-4
    epsilon: float = 0.01
    l: int = 10
    k: int = 5
    max_iter: int = 300

    def __post_init__(self):
        if self.c1 < 0 or self.c2 < 0:
            raise ValueError("c1 and c2 must be >= 0")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be > 0")
        if self.l < 2:
            raise ValueError("l must be >= 2")
        if not 1 <= self.k <= self.l:
            raise ValueError(f"need 1 <= k <= l, got k={self.k} l={self.l}")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")

    def effective_k(self, flags: VariantFlags) -> int:
        """Mask size actually used: all l sampled frames when latents are off."""
        return self.k if flags.latent_on else self.l


@dataclass
class TermRecord:
    video_index: int
    subseq_index: int
    r1: float
    r1_active: bool
    alpha: float
    r2: float | None  # None when the window has no contained child or R2 is off
    r2_active: bool
    beta: float


@dataclass
class RiskTerms:
    r1_sum: float
    r2_sum: float
    terms: list[TermRecord] = field(default_factory=list)
    n_r1_active: int = 0
    n_r2_active: int = 0


class _VideoData:
    """Per-video precomputation: pooled features and containment structure."""

    def __init__(self, video: LabeledVideo, pool: list[SubseqSpec], l: int, k: int,
                 pooling: str):
        self.label = video.label
        self.pool = pool
        T = len(pool)
        self.T = T
        self.C = mask_index_array(l, k).shape[0]
        d = video.sequence.d
        pooled = np.empty((T * self.C, d))
        for t, spec in enumerate(pool):
            idx = sample_frames_uniform(spec, l)
            pooled[t * self.C:(t + 1) * self.C] = pool_all_masks(
                video.sequence.frames[idx], l, k, pooling
            )
        self.pooled = pooled
        # containment as contiguous per-parent segments (pairs are emitted
        # parent-major by contained_pairs)
        pairs = contained_pairs(pool)
        if pairs:
            parents = np.array([p for p, _ in pairs], dtype=np.intp)
            self.pair_child = np.array([c for _, c in pairs], dtype=np.intp)
            self.pair_delta = np.array(
                [adaptive_margin(pool[p].length, pool[c].length) for p, c in pairs]
            )
            boundary = np.flatnonzero(np.diff(parents)) + 1
            self.seg_starts = np.concatenate(([0], boundary))
            self.seg_parents = parents[self.seg_starts]
            self.seg_lens = np.diff(np.append(self.seg_starts, len(pairs)))
        else:
            self.pair_child = np.empty(0, dtype=np.intp)
            self.pair_delta = np.empty(0)
            self.seg_starts = np.empty(0, dtype=np.intp)
            self.seg_parents = np.empty(0, dtype=np.intp)
            self.seg_lens = np.empty(0, dtype=np.intp)


class RiskEvaluator:
    """Evaluates the C-weighted risk and its subgradient at a given w.

    All latent and loss-augmented argmaxes are recomputed from scratch at
    every call. Per-video contributions are reduced in fixed video order, so
    results do not depend on the number of worker threads.
    """

    def __init__(self, train_videos: list[LabeledVideo], pools: list[list[SubseqSpec]],
                 flags: VariantFlags, hp: Hyperparams, K: int, d: int,
                 pooling: str = "max", threads: int = 1):
        if len(train_videos) != len(pools):
            raise ValueError("one subsequence pool per training video is required")
        self.flags = flags
        self.hp = hp
        self.K = K
        self.d = d
        self.pooling = pooling
        self.threads = max(1, threads)
        k_eff = hp.effective_k(flags)
        self._videos = [
            _VideoData(v, pool, hp.l, k_eff, pooling)
            for v, pool in zip(train_videos, pools)
        ]

    @classmethod
    def from_dataset(cls, dataset: Dataset, pools: list[list[SubseqSpec]],
                     flags: VariantFlags, hp: Hyperparams, pooling: str = "max",
                     threads: int = 1) -> "RiskEvaluator":
        return cls(dataset.train_videos, pools, flags, hp, dataset.K, dataset.d,
                   pooling=pooling, threads=threads)

    def _eval_video(self, i: int, W: np.ndarray, want_grad: bool):
        vd = self._videos[i]
        y = vd.label
        T, C = vd.T, vd.C
        S = (vd.pooled @ W.T).reshape(T, C, self.K)
        M = S.max(axis=1)  # (T, K) best-mask score per label
        A = S.argmax(axis=1)  # first max = lexicographically smallest mask
        true = M[:, y]
        Mw = M.copy()
        Mw[:, y] = -np.inf
        wrong_lab = Mw.argmax(axis=1)  # first max = smallest wrong label
        r1 = Mw.max(axis=1) + 1.0 - true
        act1 = r1 >= 0.0  # Heaviside with H(0) = 1

        if self.flags.monotonicity_on and len(vd.seg_parents):
            child_vals = true[vd.pair_child] + vd.pair_delta
            seg_max = np.maximum.reduceat(child_vals, vd.seg_starts)
            r2 = seg_max - true[vd.seg_parents]
            # earliest pool entry among tied maximizing children
            pos = np.where(child_vals == np.repeat(seg_max, vd.seg_lens),
                           np.arange(len(child_vals)), len(child_vals))
            first = np.minimum.reduceat(pos, vd.seg_starts)
            best_child = vd.pair_child[first]
            act2 = r2 >= 0.0
        else:
            r2 = np.empty(0)
            best_child = np.empty(0, dtype=np.intp)
            act2 = np.empty(0, dtype=bool)

        grad = None
        if want_grad:
            rows = np.arange(T)
            p_true = vd.pooled[rows * C + A[rows, y]]  # (T, d)
            grad = np.zeros((self.K, self.d))
            if act1.any():
                p_wrong = vd.pooled[rows * C + A[rows, wrong_lab]]
                np.add.at(grad, wrong_lab[act1], self.hp.c1 * p_wrong[act1])
                grad[y] -= self.hp.c1 * p_true[act1].sum(axis=0)
            if act2.any():
                tp = vd.seg_parents[act2]
                cb = best_child[act2]
                p_child = vd.pooled[cb * C + A[cb, y]]
                grad[y] += self.hp.c2 * (p_child - p_true[tp]).sum(axis=0)
        return r1, act1, r2, act2, grad

    def _evaluate(self, model: ModelParams, want_grad: bool, want_terms: bool):
        if model.K != self.K or model.d != self.d:
            raise ValueError("model dimensions do not match the training data")
        W = model.blocks
        n = len(self._videos)
        if self.threads > 1 and n > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as ex:
                results = list(ex.map(
                    lambda i: self._eval_video(i, W, want_grad), range(n)
                ))
        else:
            results = [self._eval_video(i, W, want_grad) for i in range(n)]

        r1_sum = r2_sum = 0.0
        n1 = n2 = 0
        grad_total = np.zeros((self.K, self.d)) if want_grad else None
        terms = [] if want_terms else None
        for i, (r1, act1, r2, act2, grad) in enumerate(results):
            r1_sum += float(np.maximum(r1, 0.0).sum())
            r2_sum += float(np.maximum(r2, 0.0).sum())
            n1 += int(act1.sum())
            n2 += int(act2.sum())
            if want_grad:
                grad_total += grad
            if want_terms:
                vd = self._videos[i]
                r2_by_t = {int(t): float(v) for t, v in zip(vd.seg_parents, r2)}
                a2_by_t = {int(t): bool(a) for t, a in zip(vd.seg_parents, act2)}
                for t in range(vd.T):
                    r2_t = r2_by_t.get(t) if self.flags.monotonicity_on else None
                    terms.append(TermRecord(
                        video_index=i, subseq_index=t,
                        r1=float(r1[t]), r1_active=bool(act1[t]),
                        alpha=max(0.0, float(r1[t])),
                        r2=r2_t, r2_active=a2_by_t.get(t, False),
                        beta=max(0.0, r2_t) if r2_t is not None else 0.0,
                    ))
        risk = self.hp.c1 * r1_sum + self.hp.c2 * r2_sum
        rt = RiskTerms(r1_sum=r1_sum, r2_sum=r2_sum, terms=terms or [],
                       n_r1_active=n1, n_r2_active=n2)
        return risk, rt, (grad_total.ravel() if want_grad else None)

    def risk_terms(self, model: ModelParams) -> RiskTerms:
        return self._evaluate(model, want_grad=False, want_terms=True)[1]

    def risk(self, model: ModelParams) -> float:
        """C-weighted risk value R(w)."""
        return self._evaluate(model, want_grad=False, want_terms=False)[0]

    def subgradient(self, model: ModelParams) -> np.ndarray:
        return self._evaluate(model, want_grad=True, want_terms=False)[2]

    def risk_and_subgradient(self, model: ModelParams):
        """One-pass (risk value, RiskTerms without records, subgradient)."""
        risk, rt, grad = self._evaluate(model, want_grad=True, want_terms=False)
        return risk, rt, grad


def _evaluator(model, dataset_train, pools, flags, hp, pooling, threads=1):
    return RiskEvaluator(dataset_train.train_videos, pools, flags, hp,
                         model.K, model.d, pooling=pooling, threads=threads)


def risk_terms(model: ModelParams, dataset_train: Dataset,
               pools: list[list[SubseqSpec]], flags: VariantFlags, hp: Hyperparams,
               pooling: str = "max") -> RiskTerms:
    """Per-window hinge terms of both constraint families at the given w."""
    return _evaluator(model, dataset_train, pools, flags, hp, pooling).risk_terms(model)


def objective_value(model: ModelParams, terms: RiskTerms, hp: Hyperparams) -> float:
    """0.5 ||w||^2 + C1 * sum(alpha) + C2 * sum(beta)."""
    return (0.5 * float(model.w @ model.w)
            + hp.c1 * terms.r1_sum + hp.c2 * terms.r2_sum)


def subgradient(model: ModelParams, dataset_train: Dataset,
                pools: list[list[SubseqSpec]], flags: VariantFlags, hp: Hyperparams,
                pooling: str = "max") -> np.ndarray:
    """Subgradient of the C-weighted risk at w, with fresh argmax inference."""
    return _evaluator(model, dataset_train, pools, flags, hp, pooling).subgradient(model)


def build_pools(dataset: Dataset, scheme: SamplingScheme) -> list[list[SubseqSpec]]:
    """One subsequence pool per training video."""
    from .subseq import enumerate_subsequences

    return [enumerate_subsequences(v.sequence.n_frames, scheme)
            for v in dataset.train_videos]
