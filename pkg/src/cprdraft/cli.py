"""Command-line pipeline: generate logs, train, evaluate, rank, simulate, sweep, serve.

Every command that writes an artifact also writes a <artifact>.manifest.json
recording the command, configuration, and seeds, so any run can be repeated
exactly. Exit codes: 0 success, 1 user error (bad input or arguments),
2 internal error.
"""

from __future__ import annotations

import argparse
import datetime
import json
import os
import sys
import traceback
from pathlib import Path
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from .agents import Agent, OracleAgent, OracleUtility, RandomAgent, RaredraftAgent
from .analysis import (
    card_stats,
    dimension_sweep,
    evaluate_agent,
    iter_partition_logs,
    kendall_tau,
    summarize_sweep,
)
from .cards import (
    CardDatabase,
    CardDatabaseError,
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
    LogFormatError,
    SingleFileShards,
    read_draft_ids,
    read_draft_logs,
    split_drafts,
    write_draft_logs,
)
from .draft import DraftConfig, DraftError, DraftLog, run_draft
from .nn import ModelFormatError

MODEL_DIR_ENV = "CPRDRAFT_MODEL_DIR"
MODEL_SUFFIX = ".cprm"


def _now_iso() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")


def write_manifest(
    artifact: str | Path,
    command: str,
    config: dict,
    inputs: dict,
    outputs: dict,
) -> Path:
    """Reproducibility sidecar written next to every artifact."""
    path = Path(str(artifact) + ".manifest.json")
    manifest = {
        "command": command,
        "created_at": _now_iso(),
        "config": config,
        "inputs": inputs,
        "outputs": outputs,
    }
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", "utf-8")
    return path


def _parse_int_list(text: str, flag: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip() != ""]
    except ValueError:
        raise ValueError(f"{flag} expects a comma-separated list of integers") from None


def _load_db(args: argparse.Namespace) -> CardDatabase:
    path = Path(args.db)
    if getattr(args, "make_db", False) and not path.exists():
        db = generate_synthetic_database(
            n_cards=args.db_cards, seed=args.db_seed
        )
        save_card_database(db, path)
        print(f"wrote synthetic card database ({len(db)} cards) to {path}")
        return db
    return load_card_database(path)


def resolve_model_path(value: str) -> Path:
    """A bare model name resolves against the model directory env var."""
    path = Path(value)
    if path.exists():
        return path
    model_dir = os.environ.get(MODEL_DIR_ENV)
    if model_dir:
        for candidate in (Path(model_dir) / value, Path(model_dir) / (value + MODEL_SUFFIX)):
            if candidate.exists():
                return candidate
    raise FileNotFoundError(f"model file not found: {value}")


def _oracle_agents(
    db: CardDatabase, players: int, oracle_seed: int, noise: float, rng: np.random.Generator
) -> list[Agent]:
    utility = OracleUtility.from_seed(db, oracle_seed)
    return [
        OracleAgent(utility, noise=noise, rng=rng if noise > 0 else None)
        for _ in range(players)
    ]


def _simulate_drafts(
    agents_for: Callable[[np.random.Generator], list[Agent]],
    n_drafts: int,
    config: DraftConfig,
    db: CardDatabase,
    seed: int,
) -> Iterator[DraftLog]:
    for draft_id in range(n_drafts):
        pack_rng = np.random.default_rng((seed, draft_id, 0))
        agent_rng = np.random.default_rng((seed, draft_id, 1))
        agents = agents_for(agent_rng)
        yield run_draft(agents, config, db, pack_rng, draft_id=draft_id)


class _LogCounter:
    """Pass-through draft counter so a streamed write can report totals."""

    def __init__(self, logs: Iterable[DraftLog]):
        self.logs = logs
        self.n_drafts = 0
        self.n_events = 0
        self.n_triplets = 0

    def __iter__(self) -> Iterator[DraftLog]:
        for log in self.logs:
            self.n_drafts += 1
            self.n_events += len(log.events)
            self.n_triplets += sum(len(e.pack) - 1 for e in log.events)
            yield log


# ---------------------------------------------------------------------------
# Commands


def cmd_gen(args: argparse.Namespace) -> int:
    db = _load_db(args)
    config = DraftConfig(
        players=args.players,
        rounds=args.rounds,
        pack_size=args.pack_size,
        mythic_probability=args.mythic_probability,
        rng_seed=args.seed,
    )

    def agents_for(agent_rng: np.random.Generator) -> list[Agent]:
        return _oracle_agents(db, config.players, args.oracle_seed, args.noise, agent_rng)

    counter = _LogCounter(
        _simulate_drafts(agents_for, args.drafts, config, db, args.seed)
    )
    write_draft_logs(args.out, counter)
    write_manifest(
        args.out,
        "gen",
        {
            "drafts": args.drafts,
            "seed": args.seed,
            "noise": args.noise,
            "oracle_seed": args.oracle_seed,
            "players": config.players,
            "rounds": config.rounds,
            "pack_size": config.pack_size,
            "mythic_probability": config.mythic_probability,
        },
        {"db": str(args.db), "db_fingerprint": db.fingerprint()},
        {
            "log": str(args.out),
            "n_drafts": counter.n_drafts,
            "n_events": counter.n_events,
            "n_triplets": counter.n_triplets,
        },
    )
    print(
        f"wrote {counter.n_drafts} drafts ({counter.n_events} events, "
        f"{counter.n_triplets} triplets derivable) to {args.out}"
    )
    return 0


def _train_config_from_args(args: argparse.Namespace) -> TrainConfig:
    return TrainConfig(
        hidden=tuple(_parse_int_list(args.hidden, "--hidden")),
        embedding_dim=args.dim,
        dropout=args.dropout,
        margin=args.margin,
        learning_rate=args.lr,
        batch_size=args.batch,
        epochs=args.epochs,
        shard_budget=args.shard_budget,
        split_ratio=args.ratio,
        split_seed=args.split_seed,
        seed=args.seed,
        val_interval=args.val_interval,
        val_events=args.val_events,
    )


def cmd_train(args: argparse.Namespace) -> int:
    db = load_card_database(args.db)
    config = _train_config_from_args(args)
    source = SingleFileShards(args.log, args.shards)
    model, report = train_model(source, db, config, log_fn=print)
    digest = model.save(args.out)
    history_path = Path(args.history or (str(args.out) + ".history.json"))
    history_path.write_text(
        json.dumps(
            {
                "records": report.records,
                "examples_seen": report.examples_seen,
                "batches": report.batches,
                "final_val_mtta": report.final_val_mtta,
            },
            indent=2,
            sort_keys=True,
        )
        + "\n",
        "utf-8",
    )
    write_manifest(
        args.out,
        "train",
        {**config.to_dict(), "shards": args.shards},
        {
            "log": str(args.log),
            "db": str(args.db),
            "db_fingerprint": db.fingerprint(),
        },
        {
            "model": str(args.out),
            "history": str(history_path),
            "params_sha256": digest,
            "examples_seen": report.examples_seen,
            "final_val_mtta": report.final_val_mtta,
            "wall_seconds": round(report.wall_seconds, 3),
        },
    )
    mtta = "n/a" if report.final_val_mtta is None else f"{report.final_val_mtta:.4f}"
    print(
        f"trained on {report.examples_seen} examples "
        f"({report.batches} batches); val-mtta {mtta}; model at {args.out}"
    )
    return 0


def _make_named_agent(
    name: str, db: CardDatabase, args: argparse.Namespace, rng: np.random.Generator
) -> Agent:
    if name == "random":
        return RandomAgent(rng)
    if name == "raredraft":
        return RaredraftAgent()
    if name == "oracle":
        utility = OracleUtility.from_seed(db, args.oracle_seed)
        noise = getattr(args, "noise", 0.0)
        return OracleAgent(utility, noise=noise, rng=rng if noise > 0 else None)
    if name.startswith("model="):
        model = EmbeddingModel.load(resolve_model_path(name[len("model="):]), db)
        return SiameseAgent(model)
    raise ValueError(
        f"unknown agent {name!r}; expected random, raredraft, oracle, or model=PATH"
    )


def _partition_logs(args: argparse.Namespace) -> Iterator[DraftLog]:
    logs = read_draft_logs(args.log)
    if args.split == "all":
        yield from logs
        return
    ids = read_draft_ids(args.log)
    split = split_drafts(ids, args.ratio, args.split_seed)
    wanted = split.train if args.split == "train" else split.test
    for log in logs:
        if log.draft_id in wanted:
            yield log


def cmd_evaluate(args: argparse.Namespace) -> int:
    db = load_card_database(args.db)
    rng = np.random.default_rng(args.seed)
    if args.model:
        model = EmbeddingModel.load(resolve_model_path(args.model), db)
        agent: Agent = SiameseAgent(model)
    else:
        agent = _make_named_agent(args.agent, db, args, rng)
    logs: Iterable[DraftLog] = _partition_logs(args)
    if args.eval_drafts is not None:
        def _capped(src: Iterable[DraftLog], limit: int) -> Iterator[DraftLog]:
            for i, log in enumerate(src):
                if i >= limit:
                    return
                yield log
        logs = _capped(logs, args.eval_drafts)
    report = evaluate_agent(agent, logs, db)
    payload = report.to_dict()
    if args.out:
        Path(args.out).write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n", "utf-8"
        )
        write_manifest(
            args.out,
            "evaluate",
            {
                "split": args.split,
                "ratio": args.ratio,
                "split_seed": args.split_seed,
                "seed": args.seed,
                "eval_drafts": args.eval_drafts,
            },
            {
                "log": str(args.log),
                "db": str(args.db),
                "agent": args.model or args.agent,
            },
            {"report": str(args.out), "mtta": report.mtta, "mtpd": report.mtpd},
        )
    print(f"agent {report.agent_name}: drafts {report.n_drafts} events {report.n_events}")
    print(f"mtta {report.mtta:.4f}")
    print(f"mtpd {report.mtpd:.4f}")
    return 0


def cmd_rank(args: argparse.Namespace) -> int:
    db = load_card_database(args.db)
    model = EmbeddingModel.load(resolve_model_path(args.model), db)
    distances = model.distance_to_empty()
    order = sorted(range(len(db)), key=lambda i: (distances[i], i))
    tau_line = None
    if args.log:
        stats = card_stats(read_draft_logs(args.log), db)
        pairs = [
            (stats[i].first_pick_rate, -float(distances[i]))
            for i in range(len(db))
            if stats[i].first_pick_rate is not None
        ]
        if len(pairs) >= 2:
            tau = kendall_tau([p[0] for p in pairs], [p[1] for p in pairs])
            tau_line = f"# kendall_tau_first_pick_rate_vs_neg_distance = {tau:.4f}"
    lines = ["card_id,name,colors,rarity,distance_to_empty"]
    for card_id in order:
        card = db[card_id]
        lines.append(
            f"{card.id},{card.name},{card.color_token},"
            f"{card.rarity.value},{distances[card_id]:.10g}"
        )
    if tau_line:
        lines.append(tau_line)
    Path(args.out).write_text("\n".join(lines) + "\n", "utf-8")
    if args.embeddings:
        export_embeddings(model, db, args.embeddings)
    write_manifest(
        args.out,
        "rank",
        {},
        {
            "model": str(args.model),
            "db": str(args.db),
            "log": str(args.log) if args.log else None,
        },
        {
            "ranking": str(args.out),
            "embeddings": str(args.embeddings) if args.embeddings else None,
        },
    )
    best = db[order[0]]
    print(f"ranked {len(db)} cards; closest to empty pool: {best.name}")
    if tau_line:
        print(tau_line.lstrip("# "))
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    db = _load_db(args)
    config = DraftConfig(
        players=args.players,
        rounds=args.rounds,
        pack_size=args.pack_size,
        mythic_probability=args.mythic_probability,
        rng_seed=args.seed,
    )
    names = [part.strip() for part in args.agents.split(",") if part.strip()]
    if not names:
        raise ValueError("--agents must name at least one agent")

    def agents_for(agent_rng: np.random.Generator) -> list[Agent]:
        return [
            _make_named_agent(names[seat % len(names)], db, args, agent_rng)
            for seat in range(config.players)
        ]

    counter = _LogCounter(
        _simulate_drafts(agents_for, args.drafts, config, db, args.seed)
    )
    write_draft_logs(args.out, counter)
    write_manifest(
        args.out,
        "simulate",
        {
            "agents": names,
            "drafts": args.drafts,
            "seed": args.seed,
            "noise": args.noise,
            "oracle_seed": args.oracle_seed,
            "players": config.players,
            "rounds": config.rounds,
            "pack_size": config.pack_size,
            "mythic_probability": config.mythic_probability,
        },
        {"db": str(args.db), "db_fingerprint": db.fingerprint()},
        {
            "log": str(args.out),
            "n_drafts": counter.n_drafts,
            "n_events": counter.n_events,
        },
    )
    print(
        f"simulated {counter.n_drafts} drafts ({counter.n_events} events) "
        f"with agents {', '.join(names)}"
    )
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    db = load_card_database(args.db)
    dims = _parse_int_list(args.dims, "--dims")
    seeds = _parse_int_list(args.seeds, "--seeds") if args.seeds else None
    base = _train_config_from_args(args)
    source = SingleFileShards(args.log, args.shards)
    records = dimension_sweep(
        source, db, dims, base, eval_drafts=args.eval_drafts, seeds=seeds
    )
    summary = summarize_sweep(records)
    payload = {"runs": records, "summary": summary}
    Path(args.out).write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", "utf-8"
    )
    write_manifest(
        args.out,
        "sweep",
        {**base.to_dict(), "dims": dims, "seeds": seeds, "shards": args.shards},
        {"log": str(args.log), "db": str(args.db)},
        {"table": str(args.out)},
    )
    print("dim  runs  mean_mtta  mean_mtpd")
    for row in summary:
        print(
            f"{row['dim']:<4d} {row['runs']:<5d} "
            f"{row['mean_mtta']:.4f}     {row['mean_mtpd']:.4f}"
        )
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import ModelRegistry, SessionStore, create_app

    db = load_card_database(args.db)
    registry = ModelRegistry(db)
    for entry in args.model or []:
        if "=" in entry:
            model_id, _, path = entry.partition("=")
        else:
            path = entry
            model_id = Path(entry).stem
        registry.add(model_id, EmbeddingModel.load(resolve_model_path(path), db))
    model_dir = args.model_dir or os.environ.get(MODEL_DIR_ENV)
    if model_dir:
        for path in sorted(Path(model_dir).glob(f"*{MODEL_SUFFIX}")):
            if path.stem not in registry.ids():
                registry.add(path.stem, EmbeddingModel.load(path, db))
    if not registry.ids():
        raise ValueError("no models to serve; pass --model or set " + MODEL_DIR_ENV)
    store = SessionStore(journal_path=args.journal)
    if args.journal and Path(args.journal).exists():
        restored = store.replay_journal(args.journal)
        if restored:
            print(f"restored {restored} sessions from {args.journal}")
    app = create_app(registry, store, ui_dir=args.ui)
    print(f"serving models {', '.join(registry.ids())} on {args.host}:{args.port}")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


# ---------------------------------------------------------------------------
# Parser


def _add_db_flags(parser: argparse.ArgumentParser, allow_make: bool = False) -> None:
    parser.add_argument("--db", required=True, help="card database CSV")
    if allow_make:
        parser.add_argument(
            "--make-db",
            action="store_true",
            help="generate a synthetic database at --db if the file is missing",
        )
        parser.add_argument("--db-cards", type=int, default=30)
        parser.add_argument("--db-seed", type=int, default=0)


def _add_draft_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--players", type=int, default=8)
    parser.add_argument("--rounds", type=int, default=3)
    parser.add_argument("--pack-size", type=int, default=15)
    parser.add_argument("--mythic-probability", type=float, default=0.125)


def _add_train_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--shards", type=int, default=20)
    parser.add_argument("--shard-budget", type=int, default=None)
    parser.add_argument("--ratio", type=float, default=0.8)
    parser.add_argument("--split-seed", type=int, default=7)
    parser.add_argument("--hidden", default="64,64")
    parser.add_argument("--dim", type=int, default=16)
    parser.add_argument("--dropout", type=float, default=0.5)
    parser.add_argument("--margin", type=float, default=1.0)
    parser.add_argument("--lr", type=float, default=1e-4)
    parser.add_argument("--batch", type=int, default=128)
    parser.add_argument("--epochs", type=int, default=1)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--val-interval", type=int, default=50_000)
    parser.add_argument("--val-events", type=int, default=1_000)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cprdraft",
        description="Draft-pick ranking by embedding distance: data, training, serving.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic draft log with oracle drafters")
    _add_db_flags(p, allow_make=True)
    _add_draft_flags(p)
    p.add_argument("--drafts", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", type=float, default=0.05, help="oracle pick-noise scale")
    p.add_argument("--oracle-seed", type=int, default=11)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="train an embedding model on a draft log")
    _add_db_flags(p)
    p.add_argument("--log", required=True)
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--history", default=None, help="training history JSON path")
    _add_train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score an agent against logged picks")
    _add_db_flags(p)
    p.add_argument("--log", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--model", help="model file (or name under the model dir)")
    group.add_argument(
        "--agent", choices=["random", "raredraft", "oracle"], help="baseline agent"
    )
    p.add_argument("--split", choices=["train", "test", "all"], default="test")
    p.add_argument("--ratio", type=float, default=0.8)
    p.add_argument("--split-seed", type=int, default=7)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--oracle-seed", type=int, default=11)
    p.add_argument("--eval-drafts", type=int, default=None)
    p.add_argument("--out", default=None, help="report JSON path")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("rank", help="rate all cards by distance to the empty pool")
    _add_db_flags(p)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--log", default=None, help="draft log for the first-pick-rate footer")
    p.add_argument("--embeddings", default=None, help="also export full embeddings CSV")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("simulate", help="run drafts with a mix of agents")
    _add_db_flags(p, allow_make=True)
    _add_draft_flags(p)
    p.add_argument("--agents", required=True, help="comma list: random, raredraft, oracle, model=PATH")
    p.add_argument("--drafts", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--oracle-seed", type=int, default=11)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="train and score several embedding widths")
    _add_db_flags(p)
    p.add_argument("--log", required=True)
    p.add_argument("--dims", required=True, help="comma list of embedding widths")
    p.add_argument("--seeds", default=None, help="comma list of training seeds")
    p.add_argument("--eval-drafts", type=int, default=None)
    p.add_argument("--out", required=True)
    _add_train_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("serve", help="serve models, sessions, and the web UI")
    _add_db_flags(p)
    p.add_argument(
        "--model",
        action="append",
        help="model to serve, as PATH or NAME=PATH (repeatable)",
    )
    p.add_argument("--model-dir", default=None, help=f"directory of {MODEL_SUFFIX} files (default ${MODEL_DIR_ENV})")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--journal", default=None, help="append-only session journal file")
    p.add_argument("--ui", default=None, help="static UI directory to serve at /ui")
    p.set_defaults(func=cmd_serve)

    return parser


USER_ERRORS = (
    CardDatabaseError,
    DraftError,
    LogFormatError,
    ModelFormatError,
    TrainingError,
    FileNotFoundError,
    IsADirectoryError,
    NotADirectoryError,
    PermissionError,
    ValueError,
    KeyError,
)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except USER_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 1
    except Exception:
        traceback.print_exc()
        return 2


if __name__ == "__main__":
    sys.exit(main())
