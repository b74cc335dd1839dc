"""Evaluation metrics and embedding-space analysis tools.

Agents are scored against reference draft logs (top-1 accuracy, mean rank of
the logged pick, accuracy by pick position). Card statistics, a tie-aware
rank correlation, seeded k-means, cluster purity by color identity, and a
deterministic 2D projection support the embedding-quality checks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .agents import Agent
from .cards import CardDatabase
from .cpr import EmbeddingModel, SiameseAgent, TrainConfig, train_model
from .dataio import (
    DatasetSplit,
    DirectoryShards,
    SingleFileShards,
    extract_pick_events,
    split_drafts,
)
from .draft import DraftLog


@dataclass
class EvaluationReport:
    """How an agent's rankings line up with the picks in reference logs."""

    agent_name: str
    n_drafts: int
    n_events: int
    top1_hits: int
    rank_sum: int
    pick_hits: dict[int, int] = field(default_factory=dict)
    pick_totals: dict[int, int] = field(default_factory=dict)

    @property
    def mtta(self) -> float:
        """Mean top-one accuracy: how often the agent's first choice was the pick."""
        return self.top1_hits / self.n_events if self.n_events else 0.0

    @property
    def mtpd(self) -> float:
        """Mean zero-based rank the agent gives the logged pick (0 = perfect)."""
        return self.rank_sum / self.n_events if self.n_events else 0.0

    def per_pick_accuracy(self) -> list[tuple[int, float]]:
        """(pick_number, accuracy) for every pick position seen, in order."""
        return [
            (pick, self.pick_hits.get(pick, 0) / total)
            for pick, total in sorted(self.pick_totals.items())
        ]

    def to_dict(self) -> dict:
        return {
            "agent": self.agent_name,
            "n_drafts": self.n_drafts,
            "n_events": self.n_events,
            "mtta": self.mtta,
            "mtpd": self.mtpd,
            "per_pick_accuracy": [
                {"pick": pick, "accuracy": acc}
                for pick, acc in self.per_pick_accuracy()
            ],
        }


def evaluate_agent(
    agent: Agent, logs: Iterable[DraftLog], db: CardDatabase
) -> EvaluationReport:
    """Replay logged events, asking the agent to rank each pack given the pool.

    The agent never sees the logged pick; its ranking must be a permutation
    of the pack. Scores accumulate over every event of every draft.
    """
    report = EvaluationReport(
        agent_name=getattr(agent, "name", agent.__class__.__name__),
        n_drafts=0,
        n_events=0,
        top1_hits=0,
        rank_sum=0,
    )
    for log in logs:
        report.n_drafts += 1
        for event in extract_pick_events(log):
            ranking = agent.rank(event.pool_before, event.pack, db)
            if sorted(ranking) != sorted(event.pack):
                raise ValueError(
                    f"agent {report.agent_name!r} returned a ranking that is "
                    f"not a permutation of the pack at pick {event.pick_number}"
                )
            position = ranking.index(event.picked)
            report.n_events += 1
            report.rank_sum += position
            if position == 0:
                report.top1_hits += 1
            report.pick_totals[event.pick_number] = (
                report.pick_totals.get(event.pick_number, 0) + 1
            )
            if position == 0:
                report.pick_hits[event.pick_number] = (
                    report.pick_hits.get(event.pick_number, 0) + 1
                )
    if report.n_events == 0:
        raise ValueError("no events to evaluate")
    return report


# ---------------------------------------------------------------------------
# Card statistics


@dataclass
class CardStats:
    """Pack exposure and pick frequency for one card."""

    card_id: int
    seen: int = 0
    picked: int = 0
    first_seen: int = 0
    first_picked: int = 0

    @property
    def pick_rate(self) -> float | None:
        """Picks over appearances; None when the card never appeared."""
        return self.picked / self.seen if self.seen else None

    @property
    def first_pick_rate(self) -> float | None:
        """Pick rate restricted to empty-pool events (the opening pick)."""
        return self.first_picked / self.first_seen if self.first_seen else None


def card_stats(logs: Iterable[DraftLog], db: CardDatabase) -> dict[int, CardStats]:
    """Per-card exposure/pick counts over a set of logs (every card gets an entry)."""
    stats = {card.id: CardStats(card_id=card.id) for card in db}
    n_events = 0
    for log in logs:
        for event in extract_pick_events(log):
            n_events += 1
            first = len(event.pool_before) == 0
            for card_id in set(event.pack):
                stats[card_id].seen += 1
                if first:
                    stats[card_id].first_seen += 1
            stats[event.picked].picked += 1
            if first:
                stats[event.picked].first_picked += 1
    if n_events == 0:
        raise ValueError("no events in logs")
    return stats


def kendall_tau(x: Sequence[float], y: Sequence[float]) -> float:
    """Tie-aware rank correlation (tau-b) between two paired value sequences.

    Counts concordant and discordant pairs directly; pairs tied in x or y
    drop out of the respective denominator factor. Raises if either side is
    entirely tied (the coefficient is undefined there).
    """
    if len(x) != len(y):
        raise ValueError("sequences must have equal length")
    n = len(x)
    if n < 2:
        raise ValueError("need at least two pairs")
    concordant = 0
    discordant = 0
    ties_x = 0
    ties_y = 0
    for i in range(n):
        for j in range(i + 1, n):
            dx = x[i] - x[j]
            dy = y[i] - y[j]
            if dx == 0 and dy == 0:
                continue
            if dx == 0:
                ties_x += 1
            elif dy == 0:
                ties_y += 1
            elif (dx > 0) == (dy > 0):
                concordant += 1
            else:
                discordant += 1
    denom_x = concordant + discordant + ties_x
    denom_y = concordant + discordant + ties_y
    if denom_x == 0 or denom_y == 0:
        raise ValueError("correlation undefined: one side is entirely tied")
    return (concordant - discordant) / float(np.sqrt(denom_x * denom_y))


# ---------------------------------------------------------------------------
# Clustering and projection


@dataclass
class KMeansResult:
    labels: np.ndarray
    centers: np.ndarray
    wcss: float
    iterations: int


def kmeans(
    points: np.ndarray, k: int, seed: int = 0, max_iter: int = 500
) -> KMeansResult:
    """Plain Lloyd's iterations, seeded by sampling k distinct points as centers.

    An emptied cluster is re-centered on the point farthest from its nearest
    center. Stops when assignments are stable or max_iter is hit; returns
    within-cluster sum of squared distances alongside labels and centers.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or len(pts) == 0:
        raise ValueError("points must be a non-empty 2d array")
    unique = np.unique(pts, axis=0)
    if k < 1 or k > len(unique):
        raise ValueError(f"k must be in [1, {len(unique)}] (distinct points)")
    rng = np.random.default_rng(seed)
    centers = unique[rng.choice(len(unique), size=k, replace=False)].copy()
    labels = np.full(len(pts), -1)
    iterations = 0
    for iterations in range(1, max_iter + 1):
        dists = np.linalg.norm(pts[:, None, :] - centers[None, :, :], axis=2)
        new_labels = dists.argmin(axis=1)
        for cluster in range(k):
            mask = new_labels == cluster
            if mask.any():
                centers[cluster] = pts[mask].mean(axis=0)
            else:
                farthest = dists.min(axis=1).argmax()
                centers[cluster] = pts[farthest]
                new_labels[farthest] = cluster
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    dists = np.linalg.norm(pts[:, None, :] - centers[None, :, :], axis=2)
    labels = dists.argmin(axis=1)
    wcss = float((dists[np.arange(len(pts)), labels] ** 2).sum())
    return KMeansResult(labels=labels, centers=centers, wcss=wcss, iterations=iterations)


def cluster_purity(labels: Sequence[int], categories: Sequence[str]) -> float:
    """Fraction of points whose cluster's majority category matches their own."""
    if len(labels) != len(categories):
        raise ValueError("labels and categories must have equal length")
    if len(labels) == 0:
        raise ValueError("nothing to score")
    counts: dict[int, dict[str, int]] = {}
    for label, cat in zip(labels, categories):
        bucket = counts.setdefault(int(label), {})
        bucket[cat] = bucket.get(cat, 0) + 1
    majority = sum(max(bucket.values()) for bucket in counts.values())
    return majority / len(labels)


def color_cluster_purity(
    model: EmbeddingModel,
    db: CardDatabase,
    seed: int = 0,
    mono_only: bool = False,
) -> tuple[float, KMeansResult]:
    """Cluster card embeddings with k = number of color identities; score purity.

    A card's identity is its mono color letter, "multicolor", or "colorless";
    high purity means the embedding space organizes cards by color. With
    mono_only, colorless and multicolored cards are left out and k is the
    number of mono colors present.
    """
    cards = [card for card in db if not mono_only or len(card.colors) == 1]
    if not cards:
        raise ValueError("no cards to cluster")
    tokens = [card.color_class for card in cards]
    ids = np.array([card.id for card in cards], dtype=np.intp)
    k = len(set(tokens))
    result = kmeans(np.asarray(model.card_embeddings)[ids], k, seed=seed)
    return cluster_purity(result.labels.tolist(), tokens), result


def project_2d(
    points: np.ndarray, iterations: int = 500, tol: float = 1e-12
) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic PCA to two components via power iteration with deflation.

    Start vectors are fixed (no randomness); the second direction is
    re-orthogonalized against the first every step. Component signs are
    normalized so the largest-magnitude loading is positive. Returns the
    (n, 2) projection and the explained-variance fractions.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] < 2 or pts.shape[1] < 2:
        raise ValueError("need at least two points of dimension >= 2")
    centered = pts - pts.mean(axis=0)
    cov = centered.T @ centered / (len(pts) - 1)
    total_var = float(np.trace(cov))
    dim = cov.shape[0]

    def power_iterate(matrix: np.ndarray, start: np.ndarray) -> tuple[np.ndarray, float]:
        v = start / np.linalg.norm(start)
        eigval = 0.0
        for _ in range(iterations):
            w = matrix @ v
            norm = np.linalg.norm(w)
            if norm == 0.0:
                return v, 0.0
            w = w / norm
            if np.linalg.norm(w - v) < tol or np.linalg.norm(w + v) < tol:
                v = w
                break
            v = w
        eigval = float(v @ matrix @ v)
        return v, eigval

    # Fixed, slightly asymmetric start vectors keep the result deterministic.
    start1 = np.ones(dim) + np.arange(dim) / (10.0 * dim)
    v1, lam1 = power_iterate(cov, start1)
    deflated = cov - lam1 * np.outer(v1, v1)
    start2 = np.ones(dim) + np.arange(dim)[::-1] / (7.0 * dim)
    start2 = start2 - (start2 @ v1) * v1
    if np.linalg.norm(start2) < 1e-12:
        start2 = np.zeros(dim)
        start2[int(np.argmin(np.abs(v1)))] = 1.0
        start2 = start2 - (start2 @ v1) * v1
    v2, lam2 = power_iterate(deflated, start2)
    v2 = v2 - (v2 @ v1) * v1
    norm2 = np.linalg.norm(v2)
    if norm2 > 0:
        v2 = v2 / norm2
    for i, v in enumerate((v1, v2)):
        if v[int(np.argmax(np.abs(v)))] < 0:
            v *= -1.0
    coords = centered @ np.stack([v1, v2], axis=1)
    if total_var > 0:
        explained = np.array([max(lam1, 0.0), max(lam2, 0.0)]) / total_var
    else:
        explained = np.zeros(2)
    return coords, explained


# ---------------------------------------------------------------------------
# Embedding-dimension sweep


def iter_partition_logs(
    source: SingleFileShards | DirectoryShards,
    split: DatasetSplit,
    partition: str = "test",
    limit: int | None = None,
) -> Iterator[DraftLog]:
    """Stream the drafts of one split partition, optionally capped."""
    wanted = split.test if partition == "test" else split.train
    count = 0
    for index in range(source.shard_count):
        for log in source.iter_shard(index):
            if log.draft_id not in wanted:
                continue
            yield log
            count += 1
            if limit is not None and count >= limit:
                return


def dimension_sweep(
    source: SingleFileShards | DirectoryShards,
    db: CardDatabase,
    dims: Sequence[int],
    base_config: TrainConfig = TrainConfig(),
    eval_drafts: int | None = None,
    seeds: Sequence[int] | None = None,
) -> list[dict]:
    """Train one model per (embedding width, seed) and score each on held-out drafts.

    All runs share the same split and budget so the only variables are the
    embedding dimension and the training seed. Returns one record per run
    with accuracy and mean pick rank.
    """
    if not dims:
        raise ValueError("no dimensions to sweep")
    if len(set(dims)) != len(dims):
        raise ValueError("dimensions must be unique")
    seed_list = list(seeds) if seeds else [base_config.seed]
    split = split_drafts(
        source.draft_ids(), base_config.split_ratio, base_config.split_seed
    )
    records: list[dict] = []
    for dim in dims:
        if dim < 1:
            raise ValueError("embedding dimensions must be positive")
        for seed in seed_list:
            config = TrainConfig(
                **{**base_config.to_dict(), "embedding_dim": dim, "seed": seed}
            )
            model, report = train_model(source, db, config, split=split)
            agent = SiameseAgent(model, name=f"siamese-d{dim}-s{seed}")
            evaluation = evaluate_agent(
                agent, iter_partition_logs(source, split, "test", eval_drafts), db
            )
            records.append(
                {
                    "dim": dim,
                    "seed": seed,
                    "mtta": evaluation.mtta,
                    "mtpd": evaluation.mtpd,
                    "n_events": evaluation.n_events,
                    "examples_seen": report.examples_seen,
                    "final_val_mtta": report.final_val_mtta,
                }
            )
    return records


def summarize_sweep(records: Sequence[dict]) -> list[dict]:
    """Collapse sweep records to per-dimension means over seeds."""
    if not records:
        raise ValueError("no sweep records")
    by_dim: dict[int, list[dict]] = {}
    for record in records:
        by_dim.setdefault(int(record["dim"]), []).append(record)
    out = []
    for dim in sorted(by_dim):
        group = by_dim[dim]
        out.append(
            {
                "dim": dim,
                "runs": len(group),
                "mean_mtta": float(np.mean([r["mtta"] for r in group])),
                "mean_mtpd": float(np.mean([r["mtpd"] for r in group])),
            }
        )
    return out
