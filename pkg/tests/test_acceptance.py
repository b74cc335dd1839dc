"""End-to-end acceptance checks, one test per shipped guarantee.

Everything here runs against the shared session fixtures: a 2000-draft
synthetic dataset (eight oracle drafters, pick noise 0.05) and one model
trained on it with the default hyperparameters. Under `pytest -v` each
guarantee prints as its own pass/fail line. Thresholds are deliberately
frozen numbers, not re-derived at runtime, so a regression moves a test,
never the goalposts.
"""

import itertools

import numpy as np
import pytest

from cprdraft import nn
from cprdraft.agents import (
    OracleAgent,
    OracleUtility,
    RandomAgent,
    RaredraftAgent,
)
from cprdraft.analysis import (
    card_stats,
    color_cluster_purity,
    dimension_sweep,
    evaluate_agent,
    kendall_tau,
    summarize_sweep,
)
from cprdraft.cpr import EmbeddingModel, SiameseAgent, TrainConfig
from cprdraft.dataio import (
    extract_pick_events,
    generate_triplets,
    read_draft_ids,
    read_draft_logs,
    split_drafts,
)
from cprdraft.draft import PlayerPool

from conftest import ORACLE_SEED, make_oracle_drafts

# A uniform guesser tops a k-card pack with probability 1/k. Over a full
# draft the pack shrinks from 15 to 1, each size appearing equally often,
# so its expected top-pick accuracy is mean(1/k for k = 1..15). Frozen:
RANDOM_GUESS_MTTA = 0.22121526621526622


@pytest.fixture(scope="module")
def heldout_reports(acc_dataset, main_model):
    """Replays of the held-out drafts by the model and all three baselines.

    The split mirrors the one used in training (ratio 0.8, split seed 7),
    so none of these 400 drafts contributed gradients.
    """
    db = acc_dataset["db"]
    split = split_drafts(read_draft_ids(acc_dataset["log_path"]), 0.8, 7)

    def replay(agent):
        logs = (
            log
            for log in read_draft_logs(acc_dataset["log_path"])
            if log.draft_id in split.test
        )
        return evaluate_agent(agent, logs, db)

    return {
        "random": replay(RandomAgent(np.random.default_rng(123))),
        "raredraft": replay(RaredraftAgent()),
        "siamese": replay(SiameseAgent(main_model["model"])),
        "oracle": replay(OracleAgent(OracleUtility.from_seed(db, ORACLE_SEED))),
    }


@pytest.fixture(scope="module")
def untrained_model(main_model, db30):
    """Freshly initialized network with the trained model's exact shape."""
    spec = main_model["model"].spec
    params = nn.init_params(spec, np.random.default_rng(0))
    return EmbeddingModel(
        params=params, spec=spec, db_fingerprint=db30.fingerprint()
    )


def test_ac01_random_agent_accuracy_matches_uniform_guessing(acc_dataset):
    """Replaying 500 drafts with a random agent lands within 0.005 of the
    closed-form uniform-guess accuracy 0.22121526621526622."""
    logs = itertools.islice(read_draft_logs(acc_dataset["log_path"]), 500)
    report = evaluate_agent(
        RandomAgent(np.random.default_rng(0)), logs, acc_dataset["db"]
    )
    assert report.n_events == 500 * 360
    assert abs(report.mtta - RANDOM_GUESS_MTTA) <= 0.005, (
        f"random mtta {report.mtta:.6f} vs expected {RANDOM_GUESS_MTTA:.6f}"
    )


def test_ac02_backprop_matches_finite_differences():
    """Analytic triplet-loss gradients agree with central finite differences
    to relative error below 1e-4 on twenty random network shapes."""
    rng = np.random.default_rng(2)
    for trial in range(20):
        n_in = int(rng.integers(4, 9))
        hidden = tuple(
            int(h) for h in rng.integers(3, 7, size=int(rng.integers(0, 3)))
        )
        spec = nn.NetworkSpec(n_in, hidden, int(rng.integers(2, 5)), 0.0)
        params = nn.init_params(spec, rng)
        anchors = rng.normal(size=(3, n_in))
        positives = rng.normal(size=(3, n_in))
        negatives = rng.normal(size=(3, n_in))
        # A large margin keeps every triplet active and far from the hinge
        # kink, where the two finite-difference sides would disagree.
        worst = nn.grad_check(
            params, spec, anchors, positives, negatives, margin=8.0
        )
        assert worst < 1e-4, f"trial {trial}: relative error {worst:.2e}"


def test_ac03_one_hundred_drafts_yield_exact_event_and_triplet_counts(acc_dataset):
    """Eight players times 45 picks times 100 drafts is 36,000 pick events,
    and with every pack card distinct each k-card pack yields k-1 triplets:
    2,520 per draft, 252,000 in total."""
    n_events = 0
    n_triplets = 0
    for log in itertools.islice(read_draft_logs(acc_dataset["log_path"]), 100):
        for event in extract_pick_events(log):
            n_events += 1
            n_triplets += len(generate_triplets(event))
    assert n_events == 36_000
    assert n_triplets == 252_000


def test_ac04_trained_model_beats_baselines_on_heldout_accuracy(heldout_reports):
    """On held-out drafts the trained model's top-pick accuracy beats the
    rarity baseline outright and at least doubles the random baseline, while
    the generating oracle recovers at least 0.95 of its own noisy picks."""
    siamese = heldout_reports["siamese"].mtta
    raredraft = heldout_reports["raredraft"].mtta
    random_ = heldout_reports["random"].mtta
    oracle = heldout_reports["oracle"].mtta
    assert siamese > raredraft, (
        f"siamese {siamese:.4f} <= raredraft {raredraft:.4f}"
    )
    assert siamese >= 2.0 * random_, (
        f"siamese {siamese:.4f} < 2 x random {random_:.4f}"
    )
    assert oracle >= 0.95, f"oracle self-accuracy {oracle:.4f} < 0.95"


def test_ac05_trained_model_ranks_logged_picks_nearer_the_top(
    heldout_reports, db30
):
    """Mean rank distance of the logged pick: the trained model places it
    strictly higher than the rarity baseline does, and a noise-free oracle
    replaying its own noise-free drafts scores exactly 0.0 (accuracy 1.0)."""
    siamese = heldout_reports["siamese"].mtpd
    raredraft = heldout_reports["raredraft"].mtpd
    assert siamese < raredraft, (
        f"siamese mtpd {siamese:.4f} >= raredraft mtpd {raredraft:.4f}"
    )
    logs = make_oracle_drafts(db30, 3, gen_seed=77, noise=0.0)
    agent = OracleAgent(OracleUtility.from_seed(db30, ORACLE_SEED))
    noise_free = evaluate_agent(agent, logs, db30)
    assert noise_free.mtpd == 0.0
    assert noise_free.mtta == 1.0


def test_ac06_wider_embeddings_win_the_dimension_sweep(acc_dataset):
    """Sweeping embedding widths 2, 8, and 32 over seeds 0-2 each (six-shard
    training budget, 100 evaluation drafts) leaves the 32-wide mean accuracy
    above the 2-wide mean."""
    base = TrainConfig(shard_budget=6, val_interval=0, val_events=0)
    records = dimension_sweep(
        acc_dataset["source"],
        acc_dataset["db"],
        (2, 8, 32),
        base,
        eval_drafts=100,
        seeds=(0, 1, 2),
    )
    assert len(records) == 9
    means = {row["dim"]: row["mean_mtta"] for row in summarize_sweep(records)}
    assert means[32] > means[2], (
        f"d32 mean mtta {means[32]:.4f} <= d2 mean mtta {means[2]:.4f}"
    )


def test_ac07_embeddings_cluster_mono_colored_cards_by_color(
    main_model, untrained_model, acc_dataset
):
    """K-means over the mono-colored card embeddings recovers the color
    groups with purity at least 0.7 after training; the same network before
    training stays at or below 0.45."""
    db = acc_dataset["db"]
    trained, _ = color_cluster_purity(
        main_model["model"], db, seed=0, mono_only=True
    )
    untrained, _ = color_cluster_purity(
        untrained_model, db, seed=0, mono_only=True
    )
    assert trained >= 0.7, f"trained purity {trained:.4f} < 0.7"
    assert untrained <= 0.45, f"untrained purity {untrained:.4f} > 0.45"
    assert trained > untrained


def test_ac08_distance_ranking_tracks_first_pick_popularity(
    acc_dataset, main_model
):
    """Kendall tau between each card's opening-pack pick rate over the full
    log and its negated distance to the empty-pool embedding is at least
    0.5."""
    db = acc_dataset["db"]
    stats = card_stats(read_draft_logs(acc_dataset["log_path"]), db)
    distances = main_model["model"].distance_to_empty()
    rates = []
    scores = []
    for card in db:
        rate = stats[card.id].first_pick_rate
        if rate is not None:
            rates.append(rate)
            scores.append(-float(distances[card.id]))
    assert len(rates) == len(db)  # 2000 drafts surface every card early
    tau = kendall_tau(rates, scores)
    assert tau >= 0.5, f"kendall tau {tau:.4f} < 0.5"


def test_ac09_candidate_and_singleton_pool_embeddings_coincide(
    main_model, untrained_model, acc_dataset
):
    """A one-card pool embeds bitwise identically to that card offered as a
    candidate, and the top recommendation is invariant under 100 shuffles of
    the pack, for trained and untrained models over empty and seeded pools."""
    db = acc_dataset["db"]
    models = (main_model["model"], untrained_model)
    for model in models:
        for card in db:
            single = model.embed_pool(PlayerPool({card.id: 1}))
            assert np.array_equal(single, model.embed_card(card.id))
    rng = np.random.default_rng(9)
    pack = [int(c) for c in rng.choice(len(db), size=15, replace=False)]
    pools = (PlayerPool(), PlayerPool({3: 2, 17: 1}))
    for model in models:
        for pool in pools:
            top = model.rank(pool, pack)[0][0]
            for _ in range(100):
                shuffled = [int(c) for c in rng.permutation(pack)]
                assert model.rank(pool, shuffled)[0][0] == top
