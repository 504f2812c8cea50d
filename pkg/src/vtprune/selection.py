"""Dual-level token selection: combine-then-filter plus ablation variants.

The selector keeps a budget of visual tokens per frame.  The main (dual)
strategy follows a minimal-redundancy-maximal-relevance recipe:

1. top-k by semantic (prefill) scores and top-k by estimated action scores,
   both at the full budget;
2. union the two candidate sets (relevance-maximizing pool);
3. reduce the pool back to the budget by greedy max-min diversity filtering
   over cosine distances between patch embeddings.

Ablation variants select by a single level, by a min-max-normalized weighted
score fusion, or by diversity alone over all patches.

Everything here is deterministic: every tie (equal scores, equal distances)
resolves to the lowest index.  All functions are pure; frames from distinct
episodes may be processed concurrently.  Indices are 0-based throughout.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InvalidValueError, ShapeMismatchError
from .estimator import EstimatorState

logger = logging.getLogger(__name__)

COSINE_DISTANCE_MAX = 2.0  # antipodal unit vectors


class Variant(str, enum.Enum):
    DUAL = "dual"
    PREFILL_ONLY = "prefill-only"
    ACTION_ONLY = "action-only"
    SCORE_FUSION = "score-fusion"
    DIVERSITY_ONLY = "diversity-only"


class WarmupPolicy(str, enum.Enum):
    RETAIN_ALL = "retain-all"
    PREFILL_ONLY = "prefill-only"


@dataclass(frozen=True)
class PruneConfig:
    budget: int  # retained-token count per frame
    prune_layer: int = 3
    variant: Variant = Variant.DUAL
    fusion_weight: float = 0.5  # SCORE_FUSION only: weight on the semantic level
    warmup: WarmupPolicy = WarmupPolicy.RETAIN_ALL

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        object.__setattr__(self, "warmup", WarmupPolicy(self.warmup))
        if self.budget < 1:
            raise ConfigError(f"budget must be >= 1, got {self.budget}")
        if self.prune_layer < 1:
            raise ConfigError(f"prune_layer must be >= 1, got {self.prune_layer}")
        if not 0.0 <= self.fusion_weight <= 1.0:
            raise ConfigError(f"fusion_weight must be in [0, 1], got {self.fusion_weight}")

    @classmethod
    def from_ratio(cls, ratio: float, m_visual: int, **kwargs) -> "PruneConfig":
        """Budget = floor(ratio * M), clamped to >= 1.

        The small epsilon guards against IEEE products like 0.29 * 100
        landing at 28.999...996 and flooring one token short.
        """
        if not 0.0 < ratio <= 1.0:
            raise ConfigError(f"ratio must be in (0, 1], got {ratio}")
        budget = max(1, int(ratio * m_visual + 1e-9))
        return cls(budget=budget, **kwargs)


@dataclass(frozen=True)
class SelectionResult:
    """Retained indices plus diagnostics for one frame.

    ``retained`` is sorted ascending.  ``min_pairwise_distance`` is the
    minimum cosine distance within the retained set (0.0 when fewer than two
    tokens are retained).  ``semantic_topk`` / ``action_topk`` are the
    per-level candidate sets, ``pool_size`` the size of the candidate pool the
    final reduction ran on.
    """

    retained: tuple[int, ...]
    pool_size: int
    semantic_topk: tuple[int, ...]
    action_topk: tuple[int, ...]
    min_pairwise_distance: float
    warmup_applied: bool = False

    def to_dict(self) -> dict:
        return {
            "retained": list(self.retained),
            "pool_size": self.pool_size,
            "semantic_topk": list(self.semantic_topk),
            "action_topk": list(self.action_topk),
            "min_pairwise_distance": self.min_pairwise_distance,
            "warmup_applied": self.warmup_applied,
        }


def _check_scores(scores: np.ndarray, what: str) -> np.ndarray:
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 1:
        raise ShapeMismatchError(what, "1-D vector", scores.shape)
    if not np.isfinite(scores).all():
        raise InvalidValueError(f"{what} contains non-finite entries")
    return scores


def top_k_indices(scores: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k largest scores, ties to the lower index, sorted ascending."""
    scores = _check_scores(scores, "scores")
    m = scores.shape[0]
    if not 1 <= k <= m:
        raise ConfigError(f"k must be in [1, {m}], got {k}")
    # stable sort on negated scores keeps equal scores in index order
    order = np.argsort(-scores, kind="stable")
    return np.sort(order[:k])


def cosine_distance(u: np.ndarray, v: np.ndarray) -> float:
    """1 - cos(u, v), clamped to [0, 2].  Zero-norm inputs are an error."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise ShapeMismatchError("cosine distance operands", u.shape, v.shape)
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise InvalidValueError("cosine distance undefined for zero-norm vector")
    d = 1.0 - float(np.dot(u, v) / (nu * nv))
    return min(max(d, 0.0), COSINE_DISTANCE_MAX)


def pairwise_cosine_distances(emb: np.ndarray) -> np.ndarray:
    """Cosine distance matrix over embedding rows, clamped to [0, 2].

    Zero-norm rows get distance 0 to everything (maximally redundant), with a
    warning: a degenerate row must never crowd out informative ones.
    """
    emb = np.asarray(emb, dtype=np.float64)
    if emb.ndim != 2:
        raise ShapeMismatchError("embeddings", "2-D (rows, dim)", emb.shape)
    if not np.isfinite(emb).all():
        raise InvalidValueError("embeddings contain non-finite entries")
    norms = np.linalg.norm(emb, axis=1)
    zero = norms == 0.0
    if zero.any():
        logger.warning(
            "%d zero-norm embedding row(s); treating their pairwise distance as 0",
            int(zero.sum()),
        )
    safe = np.where(zero, 1.0, norms)
    unit = emb / safe[:, None]
    d = 1.0 - unit @ unit.T
    np.clip(d, 0.0, COSINE_DISTANCE_MAX, out=d)
    d[zero, :] = 0.0
    d[:, zero] = 0.0
    np.fill_diagonal(d, 0.0)
    return d


def min_pairwise_distance(emb: np.ndarray, indices) -> float:
    """Minimum pairwise cosine distance within a set; 0.0 if fewer than 2."""
    idx = np.asarray(sorted(indices), dtype=int)
    if idx.size < 2:
        return 0.0
    d = pairwise_cosine_distances(np.asarray(emb)[idx])
    iu = np.triu_indices(idx.size, k=1)
    return float(d[iu].min())


def _second_nearest(distances: np.ndarray) -> np.ndarray:
    """Per row: the second-smallest off-diagonal distance (seeding rule).

    With a single neighbour the smallest stands in; with none, the distance
    ceiling.  Only pools of size >= 2 reach this code.
    """
    n = distances.shape[0]
    if n == 1:
        return np.full(1, COSINE_DISTANCE_MAX)
    off = distances[~np.eye(n, dtype=bool)].reshape(n, n - 1)
    off.sort(axis=1)
    col = 1 if n >= 3 else 0
    return off[:, col]


def min_redundancy_filter(emb: np.ndarray, pool, target: int) -> np.ndarray:
    """Greedy max-min diversity reduction of ``pool`` down to ``target`` tokens.

    Pools not larger than the target pass through unchanged.  Otherwise the
    seed is the pool element whose second-nearest distance within the pool is
    maximal (which escapes the local optimum a plain farthest-pair seed hits
    on clustered inputs), and each step appends the unselected element whose
    minimum distance to the selected set is largest.  Ties go to the lower
    index.  Returns sorted indices.
    """
    pool = np.asarray(sorted(set(int(i) for i in pool)), dtype=int)
    if pool.size == 0:
        raise ConfigError("candidate pool is empty")
    if target < 1:
        raise ConfigError(f"target must be >= 1, got {target}")
    emb = np.asarray(emb, dtype=np.float64)
    if pool[0] < 0 or pool[-1] >= emb.shape[0]:
        raise ShapeMismatchError("pool indices", f"within [0, {emb.shape[0]})", (pool[0], pool[-1]))
    if pool.size <= target:
        return pool.copy()

    d = pairwise_cosine_distances(emb[pool])
    seed = int(np.argmax(_second_nearest(d)))  # argmax takes the first (lowest) on ties
    selected = [seed]
    min_dist = d[seed].copy()
    min_dist[seed] = -np.inf  # exclude already-selected from the argmax
    while len(selected) < target:
        nxt = int(np.argmax(min_dist))
        selected.append(nxt)
        min_dist = np.minimum(min_dist, d[nxt])
        min_dist[nxt] = -np.inf
    return np.sort(pool[selected])


def _minmax_normalize(scores: np.ndarray) -> np.ndarray:
    """Scale to [0, 1]; a constant vector maps to all zeros."""
    lo = scores.min()
    hi = scores.max()
    if hi == lo:
        return np.zeros_like(scores)
    return (scores - lo) / (hi - lo)


def _full_result(m: int, emb: np.ndarray, warmup: bool) -> SelectionResult:
    all_idx = tuple(range(m))
    return SelectionResult(
        retained=all_idx,
        pool_size=m,
        semantic_topk=all_idx,
        action_topk=all_idx,
        min_pairwise_distance=min_pairwise_distance(emb, all_idx),
        warmup_applied=warmup,
    )


def select_dual(
    semantic_scores: np.ndarray,
    action_estimate: np.ndarray,
    emb: np.ndarray,
    cfg: PruneConfig,
) -> SelectionResult:
    """Combine-then-filter selection at ``cfg.budget`` tokens.

    Budgets at or above M return every index untouched (no pruning).
    """
    s_sem = _check_scores(semantic_scores, "semantic scores")
    s_act = _check_scores(action_estimate, "action score estimate")
    emb = np.asarray(emb, dtype=np.float64)
    m = s_sem.shape[0]
    if s_act.shape[0] != m:
        raise ShapeMismatchError("action score estimate", (m,), s_act.shape)
    if emb.shape[0] != m:
        raise ShapeMismatchError("embeddings", (m, "dim"), emb.shape)
    if cfg.budget >= m:
        return _full_result(m, emb, warmup=False)

    c_sem = top_k_indices(s_sem, cfg.budget)
    c_act = top_k_indices(s_act, cfg.budget)
    pool = np.union1d(c_sem, c_act)
    retained = min_redundancy_filter(emb, pool, cfg.budget)
    return SelectionResult(
        retained=tuple(int(i) for i in retained),
        pool_size=int(pool.size),
        semantic_topk=tuple(int(i) for i in c_sem),
        action_topk=tuple(int(i) for i in c_act),
        min_pairwise_distance=min_pairwise_distance(emb, retained),
        warmup_applied=False,
    )


def select_variant(
    semantic_scores: np.ndarray,
    action_estimate: np.ndarray,
    emb: np.ndarray,
    cfg: PruneConfig,
) -> SelectionResult:
    """Dispatch on ``cfg.variant``; DUAL routes to select_dual."""
    if cfg.variant is Variant.DUAL:
        return select_dual(semantic_scores, action_estimate, emb, cfg)

    s_sem = _check_scores(semantic_scores, "semantic scores")
    s_act = _check_scores(action_estimate, "action score estimate")
    emb = np.asarray(emb, dtype=np.float64)
    m = s_sem.shape[0]
    if s_act.shape[0] != m:
        raise ShapeMismatchError("action score estimate", (m,), s_act.shape)
    if emb.shape[0] != m:
        raise ShapeMismatchError("embeddings", (m, "dim"), emb.shape)
    if cfg.budget >= m:
        return _full_result(m, emb, warmup=False)

    c_sem = top_k_indices(s_sem, cfg.budget)
    c_act = top_k_indices(s_act, cfg.budget)
    if cfg.variant is Variant.PREFILL_ONLY:
        retained, pool_size = c_sem, cfg.budget
    elif cfg.variant is Variant.ACTION_ONLY:
        retained, pool_size = c_act, cfg.budget
    elif cfg.variant is Variant.SCORE_FUSION:
        lam = cfg.fusion_weight
        fused = lam * _minmax_normalize(s_sem) + (1.0 - lam) * _minmax_normalize(s_act)
        retained, pool_size = top_k_indices(fused, cfg.budget), cfg.budget
    elif cfg.variant is Variant.DIVERSITY_ONLY:
        retained = min_redundancy_filter(emb, np.arange(m), cfg.budget)
        pool_size = m
    else:  # pragma: no cover
        raise ConfigError(f"unknown variant {cfg.variant}")
    return SelectionResult(
        retained=tuple(int(i) for i in retained),
        pool_size=pool_size,
        semantic_topk=tuple(int(i) for i in c_sem),
        action_topk=tuple(int(i) for i in c_act),
        min_pairwise_distance=min_pairwise_distance(emb, retained),
        warmup_applied=False,
    )


def select_frame(
    semantic_scores: np.ndarray,
    emb: np.ndarray,
    estimator: EstimatorState,
    cfg: PruneConfig,
) -> SelectionResult:
    """Select one frame's retained tokens, honoring the warm-up policy.

    Before the estimator has a full window of history, RETAIN_ALL keeps every
    token and PREFILL_ONLY falls back to semantic-only top-k.  Once warm, the
    configured estimator produces the action estimate and the configured
    variant runs.  The caller must observe() the frame's decode scores into
    the estimator *after* selecting, never before: decode attention for the
    current frame does not exist yet at prune time.
    """
    s_sem = _check_scores(semantic_scores, "semantic scores")
    m = s_sem.shape[0]
    if not estimator.is_warm():
        if cfg.warmup is WarmupPolicy.RETAIN_ALL:
            res = _full_result(m, np.asarray(emb, dtype=np.float64), warmup=True)
            return res
        fallback = PruneConfig(
            budget=cfg.budget,
            prune_layer=cfg.prune_layer,
            variant=Variant.PREFILL_ONLY,
            fusion_weight=cfg.fusion_weight,
            warmup=cfg.warmup,
        )
        res = select_variant(s_sem, np.zeros(m), emb, fallback)
        return SelectionResult(
            retained=res.retained,
            pool_size=res.pool_size,
            semantic_topk=res.semantic_topk,
            action_topk=(),
            min_pairwise_distance=res.min_pairwise_distance,
            warmup_applied=True,
        )
    return select_variant(s_sem, estimator.estimate(), emb, cfg)
