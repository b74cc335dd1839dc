"""Eight-player pack-passing draft simulator.

Packs are generated with rarity slots (a full 15-card pack holds 11 commons,
3 uncommons, and 1 rare that may upgrade to a mythic), every player picks one
card per pack, and the remainder passes one seat along in a fixed direction
for all rounds.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

from .cards import COLOR_LETTERS, CardDatabase, Rarity

if TYPE_CHECKING:
    from .agents import Agent

Pack = tuple[int, ...]


class DraftError(ValueError):
    """A draft could not be simulated or a log is internally inconsistent."""


class PlayerPool:
    """Multiset of card ids a player has picked so far (the ranking context)."""

    __slots__ = ("_counts",)

    def __init__(self, counts: dict[int, int] | None = None):
        self._counts: dict[int, int] = dict(counts) if counts else {}
        if any(v <= 0 for v in self._counts.values()):
            raise ValueError("pool counts must be positive")

    def add(self, card_id: int) -> None:
        self._counts[card_id] = self._counts.get(card_id, 0) + 1

    def count(self, card_id: int) -> int:
        return self._counts.get(card_id, 0)

    def items(self) -> tuple[tuple[int, int], ...]:
        """(card_id, count) pairs sorted by card id."""
        return tuple(sorted(self._counts.items()))

    def card_ids(self) -> list[int]:
        """Card ids with multiplicity, ascending."""
        out: list[int] = []
        for card_id, count in self.items():
            out.extend([card_id] * count)
        return out

    def snapshot(self) -> "PlayerPool":
        return PlayerPool(self._counts)

    def color_histogram(self, db: CardDatabase) -> np.ndarray:
        """Counts of color pips over the pool, WUBRG order; each copy counts."""
        hist = np.zeros(len(COLOR_LETTERS))
        for card_id, count in self._counts.items():
            hist += count * db.color_matrix[card_id]
        return hist

    def __len__(self) -> int:
        return sum(self._counts.values())

    def __eq__(self, other: object) -> bool:
        return isinstance(other, PlayerPool) and self.items() == other.items()

    def __repr__(self) -> str:
        return f"PlayerPool({dict(self.items())!r})"


@dataclass(frozen=True)
class DraftConfig:
    players: int = 8
    rounds: int = 3
    pack_size: int = 15
    mythic_probability: float = 0.125
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.players < 2:
            raise ValueError("players must be >= 2")
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if self.pack_size < 1:
            raise ValueError("pack_size must be >= 1")
        if not 0.0 <= self.mythic_probability <= 1.0:
            raise ValueError("mythic_probability must be in [0, 1]")

    @property
    def picks_per_player(self) -> int:
        return self.rounds * self.pack_size


@dataclass(frozen=True)
class PickEvent:
    """One pick: who, when, the pool before the pick, the pack offered, the choice."""

    player: int
    round: int
    pick_number: int  # 1-based overall ordinal for this player
    pool_before: PlayerPool
    pack: Pack
    picked: int


@dataclass
class DraftLog:
    """Full record of one draft, events in simulation order."""

    config: DraftConfig
    events: list[PickEvent] = field(default_factory=list)
    draft_id: int = 0


def _slot_rarities(pack_size: int) -> list[Rarity]:
    # Full packs are 11 commons / 3 uncommons / 1 rare slot. Smaller packs keep
    # the rare slot and drop commons first; larger packs add commons.
    rares = 1
    uncommons = min(3, pack_size - rares)
    commons = pack_size - rares - uncommons
    return [Rarity.COMMON] * commons + [Rarity.UNCOMMON] * uncommons + [Rarity.RARE] * rares


def _draw_group(
    pool: Sequence[int], count: int, rng: np.random.Generator
) -> list[int]:
    # Without replacement when the group is large enough, otherwise with.
    replace = len(pool) < count
    return [int(c) for c in rng.choice(pool, size=count, replace=replace)]


def generate_pack(
    db: CardDatabase,
    rng: np.random.Generator,
    pack_size: int = 15,
    mythic_probability: float = 0.125,
) -> Pack:
    """Draw one pack of card ids honoring the rarity slot structure.

    The rare slot upgrades to a mythic with the given probability. The
    assembled pack is shuffled so position does not encode rarity.
    """
    slots = _slot_rarities(pack_size)
    counts = {r: slots.count(r) for r in (Rarity.COMMON, Rarity.UNCOMMON)}
    cards: list[int] = []
    for rarity, count in counts.items():
        if count:
            cards.extend(_draw_group(db.rarity_ids(rarity), count, rng))
    n_rares = slots.count(Rarity.RARE)
    for _ in range(n_rares):
        upgraded = rng.random() < mythic_probability
        group = db.rarity_ids(Rarity.MYTHIC if upgraded else Rarity.RARE)
        cards.append(int(rng.choice(group)))
    order = rng.permutation(len(cards))
    return tuple(cards[i] for i in order)


def run_draft(
    agents: Sequence["Agent"],
    config: DraftConfig,
    db: CardDatabase,
    rng: np.random.Generator,
    draft_id: int = 0,
) -> DraftLog:
    """Simulate one full draft and return its complete event log.

    Each round deals a fresh pack per seat; after every pick the remaining
    pack moves to the next seat, same direction in all rounds. Raises
    DraftError naming the seat and pick ordinal if an agent picks a card
    that is not in its pack.
    """
    if len(agents) != config.players:
        raise DraftError(f"need {config.players} agents, got {len(agents)}")
    pools = [PlayerPool() for _ in range(config.players)]
    log = DraftLog(config=config, draft_id=draft_id)
    for round_idx in range(config.rounds):
        packs: list[list[int]] = [
            list(generate_pack(db, rng, config.pack_size, config.mythic_probability))
            for _ in range(config.players)
        ]
        for pick_in_round in range(config.pack_size):
            pick_number = round_idx * config.pack_size + pick_in_round + 1
            for seat in range(config.players):
                pack = tuple(packs[seat])
                picked = agents[seat].pick(pools[seat], pack, db)
                if picked not in pack:
                    raise DraftError(
                        f"seat {seat} picked card {picked} not in pack "
                        f"at pick {pick_number}"
                    )
                log.events.append(
                    PickEvent(
                        player=seat,
                        round=round_idx,
                        pick_number=pick_number,
                        pool_before=pools[seat].snapshot(),
                        pack=pack,
                        picked=picked,
                    )
                )
                packs[seat].remove(picked)
                pools[seat].add(picked)
            # Pass remainders along: seat s's leftover goes to seat s+1.
            packs = [packs[(seat - 1) % config.players] for seat in range(config.players)]
    return log


def final_pools(log: DraftLog) -> list[PlayerPool]:
    """Reconstruct every player's pool after the last pick."""
    pools = [PlayerPool() for _ in range(log.config.players)]
    for event in log.events:
        pools[event.player].add(event.picked)
    return pools
