"""Pick agents: uniform random, rarity heuristic, and a synthetic oracle.

Every agent satisfies the same contract: rank() returns the whole pack best
first, pick() is rank()[0], and the returned card is always in the pack.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cards import RARITY_RANK, CardDatabase
from .draft import Pack, PlayerPool


class Agent:
    """Behavioral contract for draft pick agents."""

    name = "agent"

    def rank(self, pool: PlayerPool, pack: Pack, db: CardDatabase) -> list[int]:
        """Order the pack best first. Must be a permutation of the pack."""
        raise NotImplementedError

    def pick(self, pool: PlayerPool, pack: Pack, db: CardDatabase) -> int:
        return self.rank(pool, pack, db)[0]


def random_agent_pick(pool: PlayerPool, pack: Pack, rng: np.random.Generator) -> int:
    """Uniform choice over the pack."""
    if not pack:
        raise ValueError("pack is empty")
    return pack[int(rng.integers(len(pack)))]


class RandomAgent(Agent):
    name = "random"

    def __init__(self, rng: np.random.Generator):
        self.rng = rng

    def rank(self, pool: PlayerPool, pack: Pack, db: CardDatabase) -> list[int]:
        if not pack:
            raise ValueError("pack is empty")
        return [pack[i] for i in self.rng.permutation(len(pack))]


def raredraft_agent_pick(pool: PlayerPool, pack: Pack, db: CardDatabase) -> int:
    """Highest rarity first, color overlap with the pool as tie-break, then lowest id."""
    return RaredraftAgent().rank(pool, pack, db)[0]


class RaredraftAgent(Agent):
    """Rarity-first heuristic.

    Ranks by rarity (mythic > rare > uncommon > common), breaks ties by how
    strongly a card's colors overlap the pool's color histogram, and finally
    by lowest card id so the ordering is deterministic.
    """

    name = "raredraft"

    def rank(self, pool: PlayerPool, pack: Pack, db: CardDatabase) -> list[int]:
        if not pack:
            raise ValueError("pack is empty")
        hist = pool.color_histogram(db)

        def key(card_id: int) -> tuple[int, float, int]:
            overlap = float(db.color_matrix[card_id] @ hist)
            return (-RARITY_RANK[db[card_id].rarity], -overlap, card_id)

        return sorted(pack, key=key)


@dataclass(frozen=True)
class OracleUtility:
    """Latent ground-truth utility for synthetic drafts.

    A card's score in a context is its base strength plus a color-synergy
    term: each of the card's colors contributes its synergy weight times the
    pool's pip count in that color.
    """

    base: np.ndarray  # (N,) base strength per card
    synergy: np.ndarray  # (5,) per-color synergy weight
    color_mask: np.ndarray  # (N, 5) 0/1 card-color matrix

    @classmethod
    def from_seed(
        cls,
        db: CardDatabase,
        seed: int,
        rarity_means: dict[str, float] | None = None,
        jitter: float = 0.45,
        synergy_range: tuple[float, float] = (0.15, 0.35),
    ) -> "OracleUtility":
        """Draw a utility deterministically from (database, seed).

        Base strengths are rarity-tiered with per-card jitter, so scarcer
        cards tend to be stronger but tiers overlap.
        """
        means = rarity_means or {
            "common": 0.0,
            "uncommon": 0.8,
            "rare": 1.6,
            "mythic": 2.2,
        }
        rng = np.random.default_rng(seed)
        base = np.array(
            [means[card.rarity.value] for card in db]
        ) + rng.normal(0.0, jitter, size=len(db))
        synergy = rng.uniform(*synergy_range, size=5)
        return cls(base=base, synergy=synergy, color_mask=np.array(db.color_matrix))

    def scores(self, pool: PlayerPool, pack: Pack) -> np.ndarray:
        """Noise-free utility of each pack card in the given pool context."""
        hist = self.color_mask.T @ self._pool_counts(pool)
        idx = np.asarray(pack)
        return self.base[idx] + self.color_mask[idx] @ (self.synergy * hist)

    def _pool_counts(self, pool: PlayerPool) -> np.ndarray:
        counts = np.zeros(self.base.shape[0])
        for card_id, count in pool.items():
            counts[card_id] = count
        return counts


def oracle_agent_pick(
    pool: PlayerPool,
    pack: Pack,
    latent: OracleUtility,
    noise: float = 0.0,
    rng: np.random.Generator | None = None,
) -> int:
    """Argmax of latent utility plus optional Gumbel noise."""
    return OracleAgent(latent, noise=noise, rng=rng).rank(pool, pack, None)[0]


class OracleAgent(Agent):
    """Picks by the latent utility; Gumbel noise of scale `noise` per call.

    Noise scale 0 makes the agent fully deterministic: ties in score break
    toward the lowest card id.
    """

    name = "oracle"

    def __init__(
        self,
        utility: OracleUtility,
        noise: float = 0.0,
        rng: np.random.Generator | None = None,
    ):
        if noise > 0 and rng is None:
            raise ValueError("noisy oracle needs an rng")
        self.utility = utility
        self.noise = noise
        self.rng = rng

    def rank(self, pool: PlayerPool, pack: Pack, db: CardDatabase | None) -> list[int]:
        if not pack:
            raise ValueError("pack is empty")
        scores = self.utility.scores(pool, pack)
        if self.noise > 0:
            scores = scores + self.noise * self.rng.gumbel(size=len(pack))
        order = sorted(range(len(pack)), key=lambda i: (-scores[i], pack[i]))
        return [pack[i] for i in order]
