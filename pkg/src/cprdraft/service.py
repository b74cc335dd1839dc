"""HTTP recommendation service: models, cards, draft sessions, embeddings.

Sessions live in memory, optionally mirrored to an append-only journal so a
restarted service can rebuild them mid-draft. Ranking questions are
side-effect-free; only an explicit pick mutates a session.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, RedirectResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .analysis import project_2d
from .cards import CardDatabase
from .cpr import EmbeddingModel
from .draft import PlayerPool

DEFAULT_PICK_CAP = 45
DEFAULT_MAX_PACK = 15


class ServiceError(Exception):
    """Request-level failure carrying an HTTP status and a client-safe message."""

    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status
        self.message = message


def _not_found(what: str) -> ServiceError:
    return ServiceError(404, what)


def _bad_request(what: str) -> ServiceError:
    return ServiceError(400, what)


class ModelRegistry:
    """Immutable trained models keyed by id, all bound to one card database."""

    def __init__(self, db: CardDatabase):
        self.db = db
        self._models: dict[str, EmbeddingModel] = {}

    def add(self, model_id: str, model: EmbeddingModel) -> None:
        if model_id in self._models:
            raise ValueError(f"duplicate model id {model_id!r}")
        if model.n_cards != len(self.db):
            raise ValueError(
                f"model {model_id!r} expects {model.n_cards} cards, "
                f"database has {len(self.db)}"
            )
        if model.db_fingerprint and model.db_fingerprint != self.db.fingerprint():
            raise ValueError(
                f"model {model_id!r} was trained against a different card database"
            )
        self._models[model_id] = model

    def get(self, model_id: str) -> EmbeddingModel:
        try:
            return self._models[model_id]
        except KeyError:
            raise _not_found(f"unknown model {model_id!r}") from None

    def ids(self) -> list[str]:
        return sorted(self._models)

    @classmethod
    def from_paths(cls, db: CardDatabase, paths: dict[str, str | Path]) -> "ModelRegistry":
        registry = cls(db)
        for model_id, path in paths.items():
            registry.add(model_id, EmbeddingModel.load(path, db))
        return registry


@dataclass
class DraftSession:
    """One human draft in progress: a pool built up by appended picks."""

    id: str
    model_id: str
    created_at: float
    pick_cap: int
    pool: PlayerPool = field(default_factory=PlayerPool)
    history: list[tuple[tuple[int, ...], int]] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @property
    def anchor_size(self) -> int:
        return len(self.history)

    @property
    def complete(self) -> bool:
        return self.anchor_size >= self.pick_cap


class SessionStore:
    """In-memory sessions plus an optional append-only journal for restarts."""

    def __init__(self, journal_path: str | Path | None = None, pick_cap: int = DEFAULT_PICK_CAP):
        self._sessions: dict[str, DraftSession] = {}
        self._lock = threading.Lock()
        self.pick_cap = pick_cap
        self.journal_path = Path(journal_path) if journal_path else None

    def _journal(self, record: dict) -> None:
        if self.journal_path is None:
            return
        with self._lock:
            with self.journal_path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, sort_keys=True) + "\n")

    def create(self, model_id: str) -> DraftSession:
        session = DraftSession(
            id=uuid.uuid4().hex,
            model_id=model_id,
            created_at=time.time(),
            pick_cap=self.pick_cap,
        )
        with self._lock:
            self._sessions[session.id] = session
        self._journal(
            {
                "event": "create",
                "session": session.id,
                "model": model_id,
                "created_at": session.created_at,
            }
        )
        return session

    def get(self, session_id: str) -> DraftSession:
        with self._lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise _not_found(f"unknown session {session_id!r}")
        return session

    def record_pick(self, session: DraftSession, pack: tuple[int, ...], picked: int) -> None:
        """Append one pick; the caller has already validated pack and pick."""
        with session.lock:
            if session.complete:
                raise ServiceError(409, "draft complete: no picks remain")
            session.history.append((pack, picked))
            session.pool.add(picked)
        self._journal(
            {
                "event": "pick",
                "session": session.id,
                "pack": list(pack),
                "picked": picked,
            }
        )

    def replay_journal(self, path: str | Path) -> int:
        """Rebuild sessions from a journal file; returns how many were restored."""
        count = 0
        with Path(path).open(encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                record = json.loads(line)
                if record["event"] == "create":
                    session = DraftSession(
                        id=record["session"],
                        model_id=record["model"],
                        created_at=float(record["created_at"]),
                        pick_cap=self.pick_cap,
                    )
                    with self._lock:
                        self._sessions[session.id] = session
                    count += 1
                elif record["event"] == "pick":
                    session = self.get(record["session"])
                    session.history.append(
                        (tuple(int(c) for c in record["pack"]), int(record["picked"]))
                    )
                    session.pool.add(int(record["picked"]))
        return count


class CreateSessionBody(BaseModel):
    model: str


class RecommendBody(BaseModel):
    pack: list[int]


class PickBody(BaseModel):
    pack: list[int]
    picked: int


def _validate_pack(pack: list[int], db: CardDatabase, max_pack: int) -> tuple[int, ...]:
    if not pack:
        raise _bad_request("pack is empty")
    if len(pack) > max_pack:
        raise _bad_request(f"pack has {len(pack)} cards; at most {max_pack} allowed")
    for card_id in pack:
        if not 0 <= card_id < len(db):
            raise _bad_request(f"unknown card id {card_id}")
    return tuple(int(c) for c in pack)


def create_app(
    registry: ModelRegistry,
    store: SessionStore | None = None,
    ui_dir: str | Path | None = None,
    max_pack: int = DEFAULT_MAX_PACK,
) -> FastAPI:
    """Wire the HTTP API around a model registry and a session store."""
    store = store or SessionStore()
    db = registry.db
    app = FastAPI(title="draft recommendation service", docs_url=None, redoc_url=None)

    @app.exception_handler(ServiceError)
    async def service_error_handler(request: Request, exc: ServiceError):
        return JSONResponse(status_code=exc.status, content={"error": exc.message})

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.get("/cards")
    def get_cards() -> dict:
        return {
            "fingerprint": db.fingerprint(),
            "cards": [
                {
                    "id": card.id,
                    "name": card.name,
                    "colors": card.color_token,
                    "rarity": card.rarity.value,
                    "color_class": card.color_class,
                }
                for card in db
            ],
        }

    @app.get("/models")
    def get_models() -> dict:
        out = []
        for model_id in registry.ids():
            model = registry.get(model_id)
            out.append(
                {
                    "id": model_id,
                    "embedding_dim": model.embedding_dim,
                    "n_cards": model.n_cards,
                    "db_fingerprint": model.db_fingerprint,
                }
            )
        return {"models": out}

    @app.get("/models/{model_id}/embeddings")
    def get_embeddings(model_id: str) -> dict:
        model = registry.get(model_id)
        dist_empty = model.distance_to_empty()
        emb = np.asarray(model.card_embeddings)
        if model.embedding_dim >= 2:
            coords, explained = project_2d(emb)
        else:
            coords = np.stack([emb[:, 0], np.zeros(len(emb))], axis=1)
            explained = np.array([1.0, 0.0])
        points = []
        for card in db:
            points.append(
                {
                    "card_id": card.id,
                    "name": card.name,
                    "colors": card.color_token,
                    "rarity": card.rarity.value,
                    "color_class": card.color_class,
                    "x": float(coords[card.id, 0]),
                    "y": float(coords[card.id, 1]),
                    "distance_to_empty": float(dist_empty[card.id]),
                    "embedding": [float(v) for v in emb[card.id]],
                }
            )
        return {
            "model": model_id,
            "embedding_dim": model.embedding_dim,
            "explained_variance": [float(v) for v in explained],
            "points": points,
        }

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody) -> dict:
        registry.get(body.model)
        session = store.create(body.model)
        return {
            "session": session.id,
            "model": session.model_id,
            "anchor_size": session.anchor_size,
            "pick_cap": session.pick_cap,
        }

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str) -> dict:
        session = store.get(session_id)
        with session.lock:
            pool_items = session.pool.items()
            history = list(session.history)
        return {
            "session": session.id,
            "model": session.model_id,
            "anchor_size": len(history),
            "pick_cap": session.pick_cap,
            "complete": len(history) >= session.pick_cap,
            "pool": [
                {"card_id": card_id, "name": db[card_id].name, "count": count}
                for card_id, count in pool_items
            ],
            "history": [
                {"pack": list(pack), "picked": picked} for pack, picked in history
            ],
        }

    @app.post("/sessions/{session_id}/recommend")
    def recommend(session_id: str, body: RecommendBody) -> dict:
        session = store.get(session_id)
        pack = _validate_pack(body.pack, db, max_pack)
        model = registry.get(session.model_id)
        with session.lock:
            pool = session.pool.snapshot()
            anchor_size = session.anchor_size
        ranked = model.rank(pool, pack)
        return {
            "anchor_size": anchor_size,
            "ranked": [
                {
                    "card_id": card_id,
                    "name": db[card_id].name,
                    "distance": distance,
                    "rank": rank,
                }
                for rank, (card_id, distance) in enumerate(ranked)
            ],
        }

    @app.post("/sessions/{session_id}/pick")
    def pick(session_id: str, body: PickBody) -> dict:
        session = store.get(session_id)
        pack = _validate_pack(body.pack, db, max_pack)
        if body.picked not in pack:
            raise _bad_request(f"picked card {body.picked} not in pack")
        store.record_pick(session, pack, int(body.picked))
        return {
            "session": session.id,
            "anchor_size": session.anchor_size,
            "complete": session.complete,
        }

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

        @app.get("/", include_in_schema=False)
        def index() -> RedirectResponse:
            return RedirectResponse(url="/ui/")

    return app
