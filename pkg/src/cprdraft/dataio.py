"""Draft-log files, pick-event extraction, triplet generation, splits, and shards.

The on-disk draft log is line-delimited JSON: a header line followed by one
self-describing record per draft (see docs/formats.md). Pool snapshots are
never stored; they are reconstructed by folding picks in order.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Iterator

from .draft import DraftConfig, DraftError, DraftLog, PickEvent, PlayerPool

SCHEMA_VERSION = 1
_HEADER = {"schema": SCHEMA_VERSION, "type": "drafts"}


class LogFormatError(ValueError):
    """A draft-log file or record does not match the schema."""


@dataclass(frozen=True)
class TripletExample:
    """(context multiset, chosen card, passed-over card) training unit."""

    anchor: PlayerPool
    positive: int
    negative: int

    def __post_init__(self) -> None:
        if self.positive == self.negative:
            raise ValueError("positive and negative must differ")


def extract_pick_events(log: DraftLog) -> list[PickEvent]:
    """Validate a log and return its events ordered per player.

    Pool snapshots are reconstructed from scratch: each event's pool_before
    must equal the fold of that player's earlier picks. Raises DraftError
    naming the first inconsistent event.
    """
    per_player: dict[int, list[PickEvent]] = {}
    for event in log.events:
        per_player.setdefault(event.player, []).append(event)
    out: list[PickEvent] = []
    for player in sorted(per_player):
        events = sorted(per_player[player], key=lambda e: e.pick_number)
        pool = PlayerPool()
        for idx, event in enumerate(events):
            if event.pick_number != idx + 1:
                raise DraftError(
                    f"player {player}: expected pick {idx + 1}, found {event.pick_number}"
                )
            if event.picked not in event.pack:
                raise DraftError(
                    f"player {player} pick {event.pick_number}: "
                    f"picked card {event.picked} not in pack"
                )
            if event.pool_before != pool:
                raise DraftError(
                    f"player {player} pick {event.pick_number}: pool snapshot "
                    "does not match the fold of earlier picks"
                )
            out.append(event)
            pool.add(event.picked)
    return out


def generate_triplets(event: PickEvent) -> list[TripletExample]:
    """One triplet per passed-over card: k-1 for a k-card pack.

    Packs drawn with replacement can repeat the picked card; such copies are
    skipped because a triplet needs distinct positive and negative cards.
    """
    return [
        TripletExample(anchor=event.pool_before, positive=event.picked, negative=card)
        for card in event.pack
        if card != event.picked
    ]


def iter_triplets(events: Iterable[PickEvent]) -> Iterator[TripletExample]:
    for event in events:
        yield from generate_triplets(event)


@dataclass(frozen=True)
class DatasetSplit:
    """Disjoint train/test draft-id sets covering the input; split by whole draft."""

    train: frozenset[int]
    test: frozenset[int]
    ratio: float

    def partition_of(self, draft_id: int) -> str:
        if draft_id in self.train:
            return "train"
        if draft_id in self.test:
            return "test"
        raise KeyError(f"draft id {draft_id} is not part of this split")


def _keyed_digest(draft_id: int, seed: int) -> bytes:
    key = seed.to_bytes(8, "little", signed=True)
    return hashlib.blake2b(
        draft_id.to_bytes(8, "little", signed=True), key=key, digest_size=16
    ).digest()


def split_drafts(draft_ids: Iterable[int], ratio: float, seed: int) -> DatasetSplit:
    """Deterministic per-draft split: order ids by seeded hash, cut at the quota.

    The train share is round(ratio * n), so the realized fraction is always
    within one draft of the requested ratio.
    """
    ids = list(draft_ids)
    if not ids:
        raise ValueError("no draft ids to split")
    if len(set(ids)) != len(ids):
        raise ValueError("draft ids must be unique")
    if not 0.0 < ratio < 1.0:
        raise ValueError("ratio must be in (0, 1)")
    ordered = sorted(ids, key=lambda i: (_keyed_digest(i, seed), i))
    n_train = round(ratio * len(ids))
    return DatasetSplit(
        train=frozenset(ordered[:n_train]),
        test=frozenset(ordered[n_train:]),
        ratio=ratio,
    )


class ShardSet:
    """Deterministic draft-id -> shard-index assignment by unseeded stable hash."""

    def __init__(self, shard_count: int):
        if shard_count < 1:
            raise ValueError("shard_count must be >= 1")
        self.shard_count = shard_count

    def shard_of(self, draft_id: int) -> int:
        digest = hashlib.blake2b(
            draft_id.to_bytes(8, "little", signed=True), digest_size=8
        ).digest()
        return int.from_bytes(digest, "little") % self.shard_count


# ---------------------------------------------------------------------------
# Draft-log files


def _config_to_record(config: DraftConfig) -> dict:
    return {
        "players": config.players,
        "rounds": config.rounds,
        "pack_size": config.pack_size,
        "mythic_probability": config.mythic_probability,
        "rng_seed": config.rng_seed,
    }


def draft_log_to_record(log: DraftLog) -> dict:
    """Serializable record; seat index is the array position."""
    seats: list[dict] = [{"events": []} for _ in range(log.config.players)]
    for event in sorted(log.events, key=lambda e: (e.player, e.pick_number)):
        seats[event.player]["events"].append(
            {"pack": list(event.pack), "picked": event.picked}
        )
    return {
        "schema": SCHEMA_VERSION,
        "draft_id": log.draft_id,
        "config": _config_to_record(log.config),
        "seats": seats,
    }


def draft_log_from_record(record: dict) -> DraftLog:
    """Rebuild a DraftLog, reconstructing pool snapshots by folding picks."""
    try:
        config = DraftConfig(**record["config"])
        draft_id = int(record["draft_id"])
        seats = record["seats"]
    except (KeyError, TypeError, ValueError) as exc:
        raise LogFormatError(f"bad draft record: {exc}") from exc
    if len(seats) != config.players:
        raise LogFormatError(
            f"draft {draft_id}: expected {config.players} seats, got {len(seats)}"
        )
    events: list[PickEvent] = []
    for seat_idx, seat in enumerate(seats):
        pool = PlayerPool()
        for pick_idx, entry in enumerate(seat["events"]):
            pack = tuple(int(c) for c in entry["pack"])
            picked = int(entry["picked"])
            pick_number = pick_idx + 1
            if picked not in pack:
                raise LogFormatError(
                    f"draft {draft_id} seat {seat_idx} pick {pick_number}: "
                    f"picked card {picked} not in pack"
                )
            events.append(
                PickEvent(
                    player=seat_idx,
                    round=(pick_number - 1) // config.pack_size,
                    pick_number=pick_number,
                    pool_before=pool.snapshot(),
                    pack=pack,
                    picked=picked,
                )
            )
            pool.add(picked)
    events.sort(key=lambda e: (e.pick_number, e.player))
    return DraftLog(config=config, events=events, draft_id=draft_id)


def write_draft_logs(path: str | Path, logs: Iterable[DraftLog]) -> int:
    """Write a header line plus one record per draft; returns the draft count."""
    count = 0
    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write(json.dumps(_HEADER, sort_keys=True) + "\n")
        for log in logs:
            fh.write(json.dumps(draft_log_to_record(log), sort_keys=True) + "\n")
            count += 1
    return count


def _read_records(path: Path) -> Iterator[dict]:
    with path.open(encoding="utf-8") as fh:
        try:
            header = json.loads(next(fh))
        except StopIteration:
            raise LogFormatError(f"{path}: missing header line") from None
        except json.JSONDecodeError as exc:
            raise LogFormatError(f"{path}: bad header: {exc}") from exc
        if header.get("type") != "drafts" or header.get("schema") != SCHEMA_VERSION:
            raise LogFormatError(f"{path}: unrecognized header {header!r}")
        for line_no, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as exc:
                raise LogFormatError(f"{path}: line {line_no}: {exc}") from exc


def read_draft_logs(path: str | Path) -> Iterator[DraftLog]:
    """Stream drafts from a log file, one DraftLog at a time."""
    for record in _read_records(Path(path)):
        yield draft_log_from_record(record)


def read_draft_ids(path: str | Path) -> list[int]:
    return [int(record["draft_id"]) for record in _read_records(Path(path))]


# ---------------------------------------------------------------------------
# Sharded sources


def _shard_file(directory: Path, index: int) -> Path:
    return directory / f"shard-{index:04d}.jsonl"


class SingleFileShards:
    """Virtual shards over one log file; records grouped by hashed draft id."""

    def __init__(self, path: str | Path, shard_count: int):
        self.shard_set = ShardSet(shard_count)
        self._groups: dict[int, list[dict]] = {}
        for record in _read_records(Path(path)):
            shard = self.shard_set.shard_of(int(record["draft_id"]))
            self._groups.setdefault(shard, []).append(record)

    @property
    def shard_count(self) -> int:
        return self.shard_set.shard_count

    def iter_shard(self, index: int) -> Iterator[DraftLog]:
        for record in self._groups.get(index, []):
            yield draft_log_from_record(record)

    def draft_ids(self) -> list[int]:
        return [
            int(r["draft_id"]) for group in self._groups.values() for r in group
        ]


class DirectoryShards:
    """Physical shard files shard-0000.jsonl .. shard-NNNN.jsonl in a directory."""

    def __init__(self, directory: str | Path, shard_count: int):
        self.directory = Path(directory)
        self.shard_set = ShardSet(shard_count)

    @property
    def shard_count(self) -> int:
        return self.shard_set.shard_count

    def iter_shard(self, index: int) -> Iterator[DraftLog]:
        path = _shard_file(self.directory, index)
        if not path.exists():
            raise FileNotFoundError(f"missing shard file {path}")
        for log in read_draft_logs(path):
            expected = self.shard_set.shard_of(log.draft_id)
            if expected != index:
                raise LogFormatError(
                    f"{path}: draft {log.draft_id} belongs to shard {expected}"
                )
            yield log

    def draft_ids(self) -> list[int]:
        out: list[int] = []
        for index in range(self.shard_count):
            path = _shard_file(self.directory, index)
            if not path.exists():
                raise FileNotFoundError(f"missing shard file {path}")
            out.extend(read_draft_ids(path))
        return out


def shard_draft_logs(
    src: str | Path, out_dir: str | Path, shard_count: int
) -> DirectoryShards:
    """Partition a single log file into shard files (every file is created)."""
    out_path = Path(out_dir)
    out_path.mkdir(parents=True, exist_ok=True)
    shard_set = ShardSet(shard_count)
    handles = []
    try:
        for index in range(shard_count):
            fh = _shard_file(out_path, index).open("w", encoding="utf-8")
            fh.write(json.dumps(_HEADER, sort_keys=True) + "\n")
            handles.append(fh)
        for record in _read_records(Path(src)):
            shard = shard_set.shard_of(int(record["draft_id"]))
            handles[shard].write(json.dumps(record, sort_keys=True) + "\n")
    finally:
        for fh in handles:
            fh.close()
    return DirectoryShards(out_path, shard_count)


def stream_triplets(
    source: SingleFileShards | DirectoryShards,
    split: DatasetSplit | None = None,
    partition: str = "train",
    shard_budget: int | None = None,
    event_filter: Callable[[PickEvent], bool] | None = None,
) -> Iterator[TripletExample]:
    """Yield triplets shard by shard in deterministic order.

    Only drafts in the requested partition contribute. A shard budget of b
    stops after shards 0..b-1, supporting partial-epoch training.
    """
    if partition not in ("train", "test"):
        raise ValueError(f"unknown partition {partition!r}")
    budget = source.shard_count if shard_budget is None else shard_budget
    budget = min(budget, source.shard_count)
    for index in range(budget):
        for log in source.iter_shard(index):
            if split is not None:
                wanted = split.train if partition == "train" else split.test
                if log.draft_id not in wanted:
                    continue
            for event in extract_pick_events(log):
                if event_filter is not None and not event_filter(event):
                    continue
                yield from generate_triplets(event)
