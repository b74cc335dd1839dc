"""Draft-pick recommendation by contextual embedding distance.

A shared network embeds a drafter's growing card pool and every candidate
card into one space; candidates are ranked by how close they land to the
pool. Includes a draft simulator, triplet-based training on logged picks,
evaluation and embedding analysis, a CLI, and an HTTP assistant service.
"""

from .agents import Agent, OracleAgent, OracleUtility, RandomAgent, RaredraftAgent
from .cards import (
    Card,
    CardDatabase,
    CardDatabaseError,
    Rarity,
    generate_synthetic_database,
    load_card_database,
    save_card_database,
)
from .cpr import (
    EmbeddingModel,
    SiameseAgent,
    TrainConfig,
    TrainingError,
    export_embeddings,
    train_model,
)
from .dataio import (
    DatasetSplit,
    DirectoryShards,
    LogFormatError,
    ShardSet,
    SingleFileShards,
    TripletExample,
    extract_pick_events,
    generate_triplets,
    read_draft_logs,
    shard_draft_logs,
    split_drafts,
    stream_triplets,
    write_draft_logs,
)
from .draft import (
    DraftConfig,
    DraftError,
    DraftLog,
    PickEvent,
    PlayerPool,
    final_pools,
    generate_pack,
    run_draft,
)

__version__ = "0.1.0"

__all__ = [
    "Agent",
    "Card",
    "CardDatabase",
    "CardDatabaseError",
    "DatasetSplit",
    "DirectoryShards",
    "DraftConfig",
    "DraftError",
    "DraftLog",
    "EmbeddingModel",
    "LogFormatError",
    "OracleAgent",
    "OracleUtility",
    "PickEvent",
    "PlayerPool",
    "RandomAgent",
    "Rarity",
    "RaredraftAgent",
    "ShardSet",
    "SiameseAgent",
    "SingleFileShards",
    "TrainConfig",
    "TrainingError",
    "TripletExample",
    "export_embeddings",
    "extract_pick_events",
    "final_pools",
    "generate_pack",
    "generate_synthetic_database",
    "generate_triplets",
    "load_card_database",
    "read_draft_logs",
    "run_draft",
    "save_card_database",
    "shard_draft_logs",
    "split_drafts",
    "stream_triplets",
    "train_model",
    "write_draft_logs",
    "__version__",
]
