"""Card identities, attributes, and the card database that fixes input dimensionality."""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable

import numpy as np

# Canonical color order; indices into color histograms and color matrices.
COLOR_LETTERS = "WUBRG"
COLOR_NAMES = {"W": "white", "U": "blue", "B": "black", "R": "red", "G": "green"}

# Exact header of a v1 card-database file.
CSV_HEADER = ["id", "name", "colors", "rarity"]


class Rarity(str, Enum):
    COMMON = "common"
    UNCOMMON = "uncommon"
    RARE = "rare"
    MYTHIC = "mythic"


# Higher value = scarcer. Used by the rarity-first heuristic agent.
RARITY_RANK = {
    Rarity.COMMON: 0,
    Rarity.UNCOMMON: 1,
    Rarity.RARE: 2,
    Rarity.MYTHIC: 3,
}


class CardDatabaseError(ValueError):
    """Invalid card-database file or record."""


def _canonical_colors(colors: Iterable[str]) -> str:
    return "".join(c for c in COLOR_LETTERS if c in set(colors))


@dataclass(frozen=True)
class Card:
    """One card: stable integer id, unique name, color set, rarity.

    An empty color set means colorless; two or more colors means multicolored.
    """

    id: int
    name: str
    colors: frozenset[str]
    rarity: Rarity

    def __post_init__(self) -> None:
        bad = set(self.colors) - set(COLOR_LETTERS)
        if bad:
            raise CardDatabaseError(
                f"card {self.id} ({self.name!r}): unknown color letters {sorted(bad)}"
            )

    @property
    def is_colorless(self) -> bool:
        return len(self.colors) == 0

    @property
    def is_multicolored(self) -> bool:
        return len(self.colors) >= 2

    @property
    def color_token(self) -> str:
        """Colors as a canonical-order letter string, '' for colorless."""
        return _canonical_colors(self.colors)

    @property
    def color_class(self) -> str:
        """Display/cluster identity: a mono color letter, 'colorless', or 'multicolor'."""
        if self.is_colorless:
            return "colorless"
        if self.is_multicolored:
            return "multicolor"
        return next(iter(self.colors))


class CardDatabase:
    """Immutable, validated collection of cards with ids exactly 0..N-1.

    Safe to share across threads after construction. The card count N is
    derived from the card list and never stored separately.
    """

    def __init__(self, cards: Iterable[Card]):
        cards = sorted(cards, key=lambda c: c.id)
        if not cards:
            raise CardDatabaseError("empty database")
        seen_names: dict[str, int] = {}
        for expected, card in enumerate(cards):
            if card.id != expected:
                if any(c.id == card.id for c in cards[:expected]):
                    raise CardDatabaseError(f"duplicate card id {card.id}")
                raise CardDatabaseError(
                    f"card ids must be exactly 0..{len(cards) - 1}; "
                    f"found id {card.id} at position {expected}"
                )
            if card.name in seen_names:
                raise CardDatabaseError(
                    f"duplicate card name {card.name!r} (ids {seen_names[card.name]} and {card.id})"
                )
            seen_names[card.name] = card.id
        self._cards: tuple[Card, ...] = tuple(cards)
        self._by_name = {c.name: c for c in self._cards}
        groups: dict[Rarity, list[int]] = {r: [] for r in Rarity}
        for c in self._cards:
            groups[c.rarity].append(c.id)
        missing = [r.value for r in Rarity if not groups[r]]
        if missing:
            raise CardDatabaseError(
                f"database needs at least one card of each rarity; missing: {missing}"
            )
        self._rarity_ids = {r: tuple(ids) for r, ids in groups.items()}
        matrix = np.zeros((len(self._cards), len(COLOR_LETTERS)))
        for c in self._cards:
            for letter in c.colors:
                matrix[c.id, COLOR_LETTERS.index(letter)] = 1.0
        matrix.setflags(write=False)
        self._color_matrix = matrix

    def __len__(self) -> int:
        return len(self._cards)

    def __iter__(self):
        return iter(self._cards)

    def __getitem__(self, card_id: int) -> Card:
        return self._cards[card_id]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, CardDatabase) and self._cards == other._cards

    @property
    def cards(self) -> tuple[Card, ...]:
        return self._cards

    def by_name(self, name: str) -> Card:
        return self._by_name[name]

    def rarity_ids(self, rarity: Rarity) -> tuple[int, ...]:
        """Card ids of the given rarity, ascending."""
        return self._rarity_ids[rarity]

    @property
    def color_matrix(self) -> np.ndarray:
        """Read-only (N, 5) 0/1 matrix; row i marks card i's colors in WUBRG order."""
        return self._color_matrix

    def fingerprint(self) -> str:
        """Checksum over card identity fields, used to bind models to this database."""
        blob = "\n".join(
            f"{c.id},{c.name},{c.color_token},{c.rarity.value}" for c in self._cards
        )
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _parse_colors(token: str, line_no: int) -> frozenset[str]:
    letters = list(token)
    if len(set(letters)) != len(letters):
        raise CardDatabaseError(f"line {line_no}: repeated color letter in {token!r}")
    bad = set(letters) - set(COLOR_LETTERS)
    if bad:
        raise CardDatabaseError(f"line {line_no}: unknown color token {token!r}")
    return frozenset(letters)


def load_card_database(path: str | Path) -> CardDatabase:
    """Load and validate a card database from a v1 CSV file.

    Raises CardDatabaseError naming the offending line for parse errors,
    duplicate ids or names, and unknown color or rarity tokens.
    """
    path = Path(path)
    cards: list[Card] = []
    ids_seen: set[int] = set()
    names_seen: set[str] = set()
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CardDatabaseError(f"{path}: empty database") from None
        if header != CSV_HEADER:
            raise CardDatabaseError(
                f"{path}: line 1: expected header {','.join(CSV_HEADER)!r}, got {','.join(header)!r}"
            )
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise CardDatabaseError(f"line {line_no}: expected 4 fields, got {len(row)}")
            raw_id, name, colors_token, rarity_token = row
            try:
                card_id = int(raw_id)
            except ValueError:
                raise CardDatabaseError(f"line {line_no}: bad id {raw_id!r}") from None
            if card_id in ids_seen:
                raise CardDatabaseError(f"line {line_no}: duplicate id {card_id}")
            ids_seen.add(card_id)
            if name in names_seen:
                raise CardDatabaseError(f"line {line_no}: duplicate name {name!r}")
            names_seen.add(name)
            try:
                rarity = Rarity(rarity_token)
            except ValueError:
                raise CardDatabaseError(
                    f"line {line_no}: unknown rarity {rarity_token!r}"
                ) from None
            cards.append(
                Card(
                    id=card_id,
                    name=name,
                    colors=_parse_colors(colors_token, line_no),
                    rarity=rarity,
                )
            )
    if not cards:
        raise CardDatabaseError(f"{path}: empty database")
    return CardDatabase(cards)


def save_card_database(db: CardDatabase, path: str | Path) -> None:
    """Write the database in the v1 CSV format; load_card_database round-trips it."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for card in db:
            writer.writerow([card.id, card.name, card.color_token, card.rarity.value])


# Name flavor tables for synthetic databases.
_ADJECTIVES = [
    "Ashen", "Gilded", "Feral", "Silent", "Blazing", "Hollow", "Verdant",
    "Stormbound", "Grim", "Radiant", "Sunken", "Wandering", "Iron", "Pale",
    "Thorned", "Ancient", "Swift", "Molten", "Frozen", "Shrouded",
]
_NOUNS = [
    "Falcon", "Sentinel", "Marauder", "Oracle", "Golem", "Serpent", "Warden",
    "Howler", "Pilgrim", "Colossus", "Sprite", "Reaver", "Channeler", "Stag",
    "Basilisk", "Harbinger", "Djinn", "Automaton", "Titan", "Lurker",
]


def _rarity_allocation(n_cards: int) -> list[Rarity]:
    mythics = max(1, round(0.07 * n_cards))
    rares = max(1, round(0.13 * n_cards))
    uncommons = max(1, round(0.25 * n_cards))
    commons = n_cards - mythics - rares - uncommons
    if commons < 1:
        raise ValueError(f"n_cards={n_cards} too small for a four-rarity database")
    return (
        [Rarity.COMMON] * commons
        + [Rarity.UNCOMMON] * uncommons
        + [Rarity.RARE] * rares
        + [Rarity.MYTHIC] * mythics
    )


def generate_synthetic_database(n_cards: int = 30, seed: int = 0) -> CardDatabase:
    """Build a small synthetic card set for desk-scale experiments.

    Rarity counts follow a fixed allocation (commons largest). Mono colors
    cycle through the five colors so each is represented; a colorless card is
    inserted every 9th slot and a two-color card every 13th. Names are drawn
    from flavor tables, deterministic for a given seed.
    """
    if n_cards < 8:
        raise ValueError("synthetic database needs at least 8 cards")
    rng = np.random.default_rng(seed)
    rarities = _rarity_allocation(n_cards)
    cards: list[Card] = []
    used_names: set[str] = set()
    for i in range(n_cards):
        mono = COLOR_LETTERS[i % 5]
        if i % 9 == 8:
            colors: frozenset[str] = frozenset()
        elif i % 13 == 12:
            colors = frozenset({mono, COLOR_LETTERS[(i + 1) % 5]})
        else:
            colors = frozenset({mono})
        name = f"{rng.choice(_ADJECTIVES)} {rng.choice(_NOUNS)}"
        while name in used_names:
            name = f"{rng.choice(_ADJECTIVES)} {rng.choice(_NOUNS)}"
        used_names.add(name)
        cards.append(Card(id=i, name=name, colors=colors, rarity=rarities[i]))
    return CardDatabase(cards)
