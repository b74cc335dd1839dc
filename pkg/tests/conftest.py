"""Shared fixtures: small card sets, tiny draft logs, and the big
session-scoped artifacts the acceptance tests reuse (2000-draft dataset,
one fully trained model)."""

import numpy as np
import pytest

from cprdraft import (
    DraftConfig,
    generate_synthetic_database,
    run_draft,
    save_card_database,
    write_draft_logs,
)
from cprdraft.agents import OracleAgent, OracleUtility
from cprdraft.cards import CardDatabase
from cprdraft.cpr import TrainConfig, train_model
from cprdraft.dataio import SingleFileShards

ORACLE_SEED = 11
GEN_NOISE = 0.05


@pytest.fixture(scope="session")
def db30() -> CardDatabase:
    return generate_synthetic_database(n_cards=30, seed=0)


def make_oracle_drafts(db, n_drafts, gen_seed, noise=GEN_NOISE, oracle_seed=ORACLE_SEED,
                       config=None, utility=None):
    """Deterministic stream of drafts played by eight oracle drafters."""
    config = config or DraftConfig(rng_seed=gen_seed)
    utility = utility or OracleUtility.from_seed(db, oracle_seed)
    for draft_id in range(n_drafts):
        pack_rng = np.random.default_rng((gen_seed, draft_id, 0))
        agent_rng = np.random.default_rng((gen_seed, draft_id, 1))
        agents = [
            OracleAgent(utility, noise=noise, rng=agent_rng if noise > 0 else None)
            for _ in range(config.players)
        ]
        yield run_draft(agents, config, db, pack_rng, draft_id=draft_id)


@pytest.fixture(scope="session")
def small_log(tmp_path_factory, db30):
    """Twelve-draft oracle log, enough for cheap data-plumbing tests."""
    path = tmp_path_factory.mktemp("smalllog") / "drafts.jsonl"
    write_draft_logs(path, make_oracle_drafts(db30, 12, gen_seed=101))
    return path


@pytest.fixture(scope="session")
def acc_dataset(tmp_path_factory, db30):
    """The acceptance dataset: 2000 oracle drafts at noise 0.05, sharded 20-way."""
    root = tmp_path_factory.mktemp("acceptance")
    db_path = root / "cards.csv"
    save_card_database(db30, db_path)
    log_path = root / "drafts.jsonl"
    write_draft_logs(log_path, make_oracle_drafts(db30, 2000, gen_seed=0))
    return {
        "root": root,
        "db": db30,
        "db_path": db_path,
        "log_path": log_path,
        "source": SingleFileShards(log_path, 20),
    }


@pytest.fixture(scope="session")
def main_model(acc_dataset):
    """D=16 model trained with the library-default hyperparameters on the big log."""
    config = TrainConfig(
        embedding_dim=16,
        seed=0,
        val_interval=400_000,
        val_events=1_000,
    )
    model, report = train_model(acc_dataset["source"], acc_dataset["db"], config)
    return {"model": model, "report": report, "config": config}
