"""Preference ranking of pack cards against a growing pool.

A shared embedding network maps both a pool (card-count vector) and a single
card (one-hot vector) into the same space; candidates are ranked by ascending
Euclidean distance to the pool embedding. Training consumes triplets built
from logged picks: the chosen card should embed closer to the pool than any
card passed over.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from . import nn
from .agents import Agent
from .cards import CardDatabase
from .dataio import (
    DatasetSplit,
    DirectoryShards,
    SingleFileShards,
    TripletExample,
    extract_pick_events,
    split_drafts,
    stream_triplets,
)
from .draft import Pack, PickEvent, PlayerPool


class TrainingError(RuntimeError):
    """Training aborted (non-finite loss, empty stream, bad configuration)."""


def encode_candidate(card_id: int, n_cards: int) -> np.ndarray:
    """One-hot float vector for a single card."""
    if not 0 <= card_id < n_cards:
        raise ValueError(f"card id {card_id} out of range for {n_cards} cards")
    x = np.zeros(n_cards)
    x[card_id] = 1.0
    return x


def encode_pool(pool: PlayerPool, n_cards: int) -> np.ndarray:
    """Card-count vector for a pool multiset; the empty pool is the zero vector."""
    x = np.zeros(n_cards)
    for card_id, count in pool.items():
        if not 0 <= card_id < n_cards:
            raise ValueError(f"card id {card_id} out of range for {n_cards} cards")
        x[card_id] = float(count)
    return x


@dataclass
class EmbeddingModel:
    """Trained network plus a per-card embedding cache bound to one card set.

    The cache is computed card by card through the same single-vector forward
    used for pools, so a one-card pool embeds bitwise identically to the
    cached row for that card.
    """

    params: nn.ModelParams
    spec: nn.NetworkSpec
    db_fingerprint: str
    metadata: dict = field(default_factory=dict)
    card_embeddings: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        n = self.spec.input_dim
        cache = np.empty((n, self.spec.output_dim))
        for card_id in range(n):
            cache[card_id] = nn.embed(self.params, encode_candidate(card_id, n))
        cache.setflags(write=False)
        self.card_embeddings = cache

    @property
    def n_cards(self) -> int:
        return self.spec.input_dim

    @property
    def embedding_dim(self) -> int:
        return self.spec.output_dim

    def embed_pool(self, pool: PlayerPool) -> np.ndarray:
        return nn.embed(self.params, encode_pool(pool, self.n_cards))

    def embed_card(self, card_id: int) -> np.ndarray:
        if not 0 <= card_id < self.n_cards:
            raise ValueError(f"card id {card_id} out of range")
        return self.card_embeddings[card_id]

    def distances(self, pool: PlayerPool, card_ids: Sequence[int]) -> np.ndarray:
        """Euclidean distance from the pool embedding to each listed card."""
        anchor = self.embed_pool(pool)
        rows = self.card_embeddings[np.asarray(card_ids, dtype=np.intp)]
        return np.linalg.norm(rows - anchor, axis=1)

    def rank(self, pool: PlayerPool, pack: Sequence[int]) -> list[tuple[int, float]]:
        """Pack cards ordered best first: ascending distance, ties by card id."""
        if not pack:
            raise ValueError("pack is empty")
        dists = self.distances(pool, pack)
        order = sorted(range(len(pack)), key=lambda i: (dists[i], pack[i]))
        return [(pack[i], float(dists[i])) for i in order]

    def distance_to_empty(self) -> np.ndarray:
        """Per-card distance to the empty-pool embedding (a card-strength proxy)."""
        anchor = self.embed_pool(PlayerPool())
        return np.linalg.norm(self.card_embeddings - anchor, axis=1)

    def save(self, path: str | Path) -> str:
        metadata = dict(self.metadata)
        metadata["db_fingerprint"] = self.db_fingerprint
        return nn.save_model(path, self.params, self.spec, metadata)

    @classmethod
    def load(
        cls, path: str | Path, db: CardDatabase | None = None
    ) -> "EmbeddingModel":
        """Load a model file; if a card database is given its fingerprint must match."""
        params, spec, metadata = nn.load_model(path)
        fingerprint = metadata.pop("db_fingerprint", "")
        if db is not None:
            if spec.input_dim != len(db):
                raise nn.ModelFormatError(
                    f"{path}: model expects {spec.input_dim} cards, "
                    f"database has {len(db)}"
                )
            if fingerprint and fingerprint != db.fingerprint():
                raise nn.ModelFormatError(
                    f"{path}: model was trained against a different card database"
                )
        return cls(
            params=params,
            spec=spec,
            db_fingerprint=fingerprint,
            metadata=metadata,
        )


class SiameseAgent(Agent):
    """Drafts by picking the pack card whose embedding sits closest to the pool."""

    def __init__(self, model: EmbeddingModel, name: str = "siamese"):
        self.model = model
        self.name = name

    def rank(self, pool: PlayerPool, pack: Pack, db: CardDatabase) -> list[int]:
        if not pack:
            raise ValueError("pack is empty")
        return [card for card, _ in self.model.rank(pool, pack)]


# ---------------------------------------------------------------------------
# Training


@dataclass(frozen=True)
class TrainConfig:
    """Knobs for the triplet-training loop."""

    hidden: tuple[int, ...] = (64, 64)
    embedding_dim: int = 16
    dropout: float = 0.5
    margin: float = 1.0
    learning_rate: float = 1e-4
    batch_size: int = 128
    epochs: int = 1
    shard_budget: int | None = None
    split_ratio: float = 0.8
    split_seed: int = 7
    seed: int = 0
    val_interval: int = 50_000
    val_events: int = 1_000

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.margin <= 0:
            raise ValueError("margin must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))

    def to_dict(self) -> dict:
        return {
            "hidden": list(self.hidden),
            "embedding_dim": self.embedding_dim,
            "dropout": self.dropout,
            "margin": self.margin,
            "learning_rate": self.learning_rate,
            "batch_size": self.batch_size,
            "epochs": self.epochs,
            "shard_budget": self.shard_budget,
            "split_ratio": self.split_ratio,
            "split_seed": self.split_seed,
            "seed": self.seed,
            "val_interval": self.val_interval,
            "val_events": self.val_events,
        }


@dataclass
class TrainReport:
    """Loss/validation trace captured while training."""

    records: list[dict] = field(default_factory=list)
    examples_seen: int = 0
    batches: int = 0
    final_val_mtta: float | None = None
    wall_seconds: float = 0.0


def _encode_batch(
    triplets: Sequence[TripletExample], n_cards: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    batch = len(triplets)
    anchors = np.zeros((batch, n_cards))
    positives = np.zeros((batch, n_cards))
    negatives = np.zeros((batch, n_cards))
    for row, t in enumerate(triplets):
        for card_id, count in t.anchor.items():
            anchors[row, card_id] = float(count)
        positives[row, t.positive] = 1.0
        negatives[row, t.negative] = 1.0
    return anchors, positives, negatives


def _batched(
    triplets: Iterable[TripletExample], size: int
) -> Iterator[list[TripletExample]]:
    buf: list[TripletExample] = []
    for t in triplets:
        buf.append(t)
        if len(buf) == size:
            yield buf
            buf = []
    if buf:
        yield buf


def _collect_val_events(
    source: SingleFileShards | DirectoryShards,
    split: DatasetSplit,
    limit: int,
) -> list[PickEvent]:
    """First events of the held-out partition, capped, for cheap progress probes."""
    events: list[PickEvent] = []
    for index in range(source.shard_count):
        for log in source.iter_shard(index):
            if log.draft_id not in split.test:
                continue
            events.extend(extract_pick_events(log))
            if len(events) >= limit:
                return events[:limit]
    return events


def mtta_on_events(model: EmbeddingModel, events: Sequence[PickEvent]) -> float:
    """Fraction of events where the model's top choice matches the logged pick."""
    if not events:
        raise ValueError("no events to evaluate")
    hits = 0
    for event in events:
        top_card, _ = model.rank(event.pool_before, event.pack)[0]
        if top_card == event.picked:
            hits += 1
    return hits / len(events)


def _probe_model(
    params: nn.ModelParams, spec: nn.NetworkSpec, db_fingerprint: str
) -> EmbeddingModel:
    return EmbeddingModel(
        params=params.copy(), spec=spec, db_fingerprint=db_fingerprint
    )


def train_model(
    source: SingleFileShards | DirectoryShards,
    db: CardDatabase,
    config: TrainConfig = TrainConfig(),
    split: DatasetSplit | None = None,
    log_fn: Callable[[str], None] | None = None,
) -> tuple[EmbeddingModel, TrainReport]:
    """Train an embedding network on the train partition of a sharded log source.

    Drafts split 80/20 (or per config) by id unless a split is supplied.
    Batches stream shard by shard; a shard budget caps how many shards each
    epoch consumes. Validation accuracy on held-out drafts is probed every
    val_interval examples. Non-finite loss aborts immediately.
    """
    start = time.monotonic()
    if split is None:
        split = split_drafts(
            source.draft_ids(), config.split_ratio, config.split_seed
        )
    spec = nn.NetworkSpec(
        input_dim=len(db),
        hidden=config.hidden,
        output_dim=config.embedding_dim,
        dropout=config.dropout,
    )
    rng = np.random.default_rng(config.seed)
    params = nn.init_params(spec, rng)
    state = nn.AdamState.for_params(params)
    report = TrainReport()
    fingerprint = db.fingerprint()

    val_events: list[PickEvent] = []
    if config.val_interval > 0 and config.val_events > 0:
        val_events = _collect_val_events(source, split, config.val_events)
    next_val = config.val_interval if val_events else None

    def say(msg: str) -> None:
        if log_fn is not None:
            log_fn(msg)

    loss_sum = 0.0
    loss_batches = 0
    for epoch in range(config.epochs):
        for batch in _batched(
            stream_triplets(
                source, split, "train", shard_budget=config.shard_budget
            ),
            config.batch_size,
        ):
            anchors, positives, negatives = _encode_batch(batch, len(db))
            result = nn.triplet_batch_step(
                params, spec, anchors, positives, negatives,
                margin=config.margin, rng=rng, train=True,
            )
            if not math.isfinite(result.loss):
                raise TrainingError(
                    f"non-finite loss at batch {report.batches + 1} "
                    f"(epoch {epoch + 1})"
                )
            nn.adam_step(params, result.grads, state, lr=config.learning_rate)
            report.batches += 1
            report.examples_seen += len(batch)
            loss_sum += result.loss * len(batch)
            loss_batches += len(batch)
            if next_val is not None and report.examples_seen >= next_val:
                probe = _probe_model(params, spec, fingerprint)
                val_mtta = mtta_on_events(probe, val_events)
                report.final_val_mtta = val_mtta
                report.records.append(
                    {
                        "examples_seen": report.examples_seen,
                        "epoch": epoch + 1,
                        "mean_loss": loss_sum / max(loss_batches, 1),
                        "val_mtta": val_mtta,
                    }
                )
                say(
                    f"examples {report.examples_seen}: "
                    f"loss {loss_sum / max(loss_batches, 1):.4f} "
                    f"val-mtta {val_mtta:.4f}"
                )
                loss_sum = 0.0
                loss_batches = 0
                next_val += config.val_interval
        epoch_loss = loss_sum / loss_batches if loss_batches else float("nan")
        say(f"epoch {epoch + 1}/{config.epochs} done, recent loss {epoch_loss:.4f}")

    if report.examples_seen == 0:
        raise TrainingError("training stream produced no triplets")

    if val_events:
        probe = _probe_model(params, spec, fingerprint)
        report.final_val_mtta = mtta_on_events(probe, val_events)
        report.records.append(
            {
                "examples_seen": report.examples_seen,
                "epoch": config.epochs,
                "mean_loss": loss_sum / loss_batches if loss_batches else None,
                "val_mtta": report.final_val_mtta,
            }
        )
    report.wall_seconds = time.monotonic() - start

    metadata = {
        "train_config": config.to_dict(),
        "examples_seen": report.examples_seen,
        "batches": report.batches,
        "final_val_mtta": report.final_val_mtta,
        "train_drafts": len(split.train),
        "test_drafts": len(split.test),
    }
    model = EmbeddingModel(
        params=params, spec=spec, db_fingerprint=fingerprint, metadata=metadata
    )
    return model, report


# ---------------------------------------------------------------------------
# Embedding export


def export_embeddings(model: EmbeddingModel, db: CardDatabase, path: str | Path) -> int:
    """CSV of every card's embedding plus its distance to the empty pool."""
    if model.n_cards != len(db):
        raise ValueError("model and database card counts differ")
    if model.db_fingerprint and model.db_fingerprint != db.fingerprint():
        raise ValueError("model was trained against a different card database")
    dist_empty = model.distance_to_empty()
    dim = model.embedding_dim
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["card_id", "name", "colors", "rarity", "distance_to_empty"]
            + [f"e_{i}" for i in range(dim)]
        )
        for card in db:
            row = model.card_embeddings[card.id]
            writer.writerow(
                [
                    card.id,
                    card.name,
                    card.color_token,
                    card.rarity.value,
                    f"{dist_empty[card.id]:.10g}",
                ]
                + [f"{v:.10g}" for v in row]
            )
    return len(db)
