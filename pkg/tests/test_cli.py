"""End-to-end tests for the command-line interface: every command runs
in-process through main() against a miniature workspace."""

import filecmp
import json
import subprocess
import sys
from types import SimpleNamespace

import pytest

from cprdraft import save_card_database
from cprdraft.cli import (
    MODEL_DIR_ENV,
    main,
    resolve_model_path,
    write_manifest,
    _parse_int_list,
)
from cprdraft.cpr import EmbeddingModel
from cprdraft.dataio import read_draft_ids, read_draft_logs


@pytest.fixture(scope="module")
def workspace(tmp_path_factory, db30):
    """Card file, a 12-draft log, and one trained model, all built by the CLI."""
    root = tmp_path_factory.mktemp("cli")
    db_path = root / "cards.csv"
    save_card_database(db30, db_path)
    log = root / "drafts.jsonl"
    rc = main(
        ["gen", "--db", str(db_path), "--drafts", "12", "--seed", "101",
         "--out", str(log)]
    )
    assert rc == 0
    model = root / "model.cprm"
    rc = main(
        ["train", "--db", str(db_path), "--log", str(log),
         "--hidden", "8", "--dim", "4", "--val-interval", "0",
         "--val-events", "0", "--out", str(model)]
    )
    assert rc == 0
    return SimpleNamespace(root=root, db=db_path, log=log, model=model)


def load_manifest(artifact):
    with open(str(artifact) + ".manifest.json") as fh:
        return json.load(fh)


class TestHelpers:
    def test_parse_int_list(self):
        assert _parse_int_list("1,2,3", "--dims") == [1, 2, 3]
        assert _parse_int_list("8", "--dims") == [8]
        assert _parse_int_list("4,,5", "--dims") == [4, 5]
        with pytest.raises(ValueError, match="--dims"):
            _parse_int_list("a,b", "--dims")

    def test_write_manifest(self, tmp_path):
        artifact = tmp_path / "thing.bin"
        path = write_manifest(
            artifact, "gen", {"n": 1}, {"src": "x"}, {"dst": "y"}
        )
        assert path == tmp_path / "thing.bin.manifest.json"
        manifest = json.loads(path.read_text())
        assert manifest["command"] == "gen"
        assert manifest["config"] == {"n": 1}
        assert manifest["inputs"] == {"src": "x"}
        assert manifest["outputs"] == {"dst": "y"}
        assert "created_at" in manifest

    def test_resolve_model_path(self, tmp_path, monkeypatch, workspace):
        assert resolve_model_path(str(workspace.model)) == workspace.model
        monkeypatch.setenv(MODEL_DIR_ENV, str(workspace.root))
        assert resolve_model_path("model.cprm") == workspace.model
        assert resolve_model_path("model") == workspace.model
        monkeypatch.delenv(MODEL_DIR_ENV)
        with pytest.raises(FileNotFoundError):
            resolve_model_path("missing.cprm")


class TestGen:
    def test_log_and_manifest(self, workspace):
        ids = read_draft_ids(workspace.log)
        assert ids == list(range(12))
        manifest = load_manifest(workspace.log)
        assert manifest["command"] == "gen"
        assert manifest["outputs"]["n_drafts"] == 12
        assert manifest["outputs"]["n_events"] == 12 * 360
        assert manifest["outputs"]["n_triplets"] == 12 * 2520
        assert manifest["config"]["seed"] == 101

    def test_matches_library_generation(self, workspace, small_log):
        # The CLI with the same seeds must write byte-identical drafts to
        # the library helper used across the test suite.
        assert filecmp.cmp(workspace.log, small_log, shallow=False)

    def test_regeneration_is_byte_identical(self, tmp_path, workspace):
        out = tmp_path / "again.jsonl"
        rc = main(
            ["gen", "--db", str(workspace.db), "--drafts", "12",
             "--seed", "101", "--out", str(out)]
        )
        assert rc == 0
        assert filecmp.cmp(workspace.log, out, shallow=False)

    def test_zero_drafts_writes_header_only(self, tmp_path, workspace):
        out = tmp_path / "empty.jsonl"
        assert main(
            ["gen", "--db", str(workspace.db), "--drafts", "0", "--out", str(out)]
        ) == 0
        assert read_draft_ids(out) == []
        assert len(out.read_text().splitlines()) == 1

    def test_make_db_creates_the_card_file(self, tmp_path):
        db_path = tmp_path / "fresh.csv"
        out = tmp_path / "log.jsonl"
        rc = main(
            ["gen", "--db", str(db_path), "--make-db", "--db-cards", "30",
             "--drafts", "1", "--out", str(out)]
        )
        assert rc == 0
        assert db_path.exists()
        assert len(read_draft_ids(out)) == 1


class TestTrain:
    def test_model_history_and_manifest(self, workspace, db30):
        model = EmbeddingModel.load(workspace.model, db30)
        assert model.embedding_dim == 4
        manifest = load_manifest(workspace.model)
        assert manifest["command"] == "train"
        assert manifest["outputs"]["params_sha256"] == model.params.fingerprint()
        assert manifest["config"]["hidden"] == [8]
        history = json.loads(
            (workspace.root / "model.cprm.history.json").read_text()
        )
        assert history["examples_seen"] == model.metadata["examples_seen"]
        assert history["batches"] == model.metadata["batches"]

    def test_retraining_is_byte_identical(self, tmp_path, workspace):
        out = tmp_path / "again.cprm"
        rc = main(
            ["train", "--db", str(workspace.db), "--log", str(workspace.log),
             "--hidden", "8", "--dim", "4", "--val-interval", "0",
             "--val-events", "0", "--out", str(out)]
        )
        assert rc == 0
        assert filecmp.cmp(workspace.model, out, shallow=False)

    def test_validation_probes_reach_the_history_file(self, tmp_path, workspace):
        out = tmp_path / "probed.cprm"
        rc = main(
            ["train", "--db", str(workspace.db), "--log", str(workspace.log),
             "--hidden", "8", "--dim", "4", "--val-interval", "8000",
             "--val-events", "100", "--out", str(out),
             "--history", str(tmp_path / "h.json")]
        )
        assert rc == 0
        history = json.loads((tmp_path / "h.json").read_text())
        assert history["records"]
        assert history["final_val_mtta"] is not None


class TestEvaluate:
    def test_named_agent_with_report(self, tmp_path, workspace, capsys):
        out = tmp_path / "report.json"
        rc = main(
            ["evaluate", "--db", str(workspace.db), "--log", str(workspace.log),
             "--agent", "random", "--out", str(out)]
        )
        assert rc == 0
        printed = capsys.readouterr().out
        assert "mtta" in printed and "mtpd" in printed
        report = json.loads(out.read_text())
        assert report["agent"] == "random"
        # Default split holds out round(0.2 * 12) = 2 drafts.
        assert report["n_drafts"] == 2
        assert report["n_events"] == 720
        assert load_manifest(out)["outputs"]["mtta"] == report["mtta"]

    def test_model_agent_on_all_drafts(self, workspace, capsys):
        rc = main(
            ["evaluate", "--db", str(workspace.db), "--log", str(workspace.log),
             "--model", str(workspace.model), "--split", "all"]
        )
        assert rc == 0
        assert "drafts 12 events 4320" in capsys.readouterr().out

    def test_eval_drafts_caps_the_replay(self, workspace, capsys):
        rc = main(
            ["evaluate", "--db", str(workspace.db), "--log", str(workspace.log),
             "--agent", "oracle", "--split", "all", "--eval-drafts", "3"]
        )
        assert rc == 0
        assert "drafts 3 events 1080" in capsys.readouterr().out

    def test_model_resolves_through_env_dir(self, workspace, monkeypatch, capsys):
        monkeypatch.setenv(MODEL_DIR_ENV, str(workspace.root))
        rc = main(
            ["evaluate", "--db", str(workspace.db), "--log", str(workspace.log),
             "--model", "model", "--eval-drafts", "1", "--split", "all"]
        )
        assert rc == 0
        assert "mtta" in capsys.readouterr().out

    def test_model_and_agent_are_mutually_exclusive(self, workspace, capsys):
        rc = main(
            ["evaluate", "--db", str(workspace.db), "--log", str(workspace.log),
             "--model", str(workspace.model), "--agent", "random"]
        )
        assert rc == 1
        capsys.readouterr()

    def test_unknown_agent_name_fails_cleanly(self, workspace, capsys):
        rc = main(
            ["evaluate", "--db", str(workspace.db), "--log", str(workspace.log),
             "--agent", "psychic"]
        )
        assert rc == 1
        assert "invalid choice" in capsys.readouterr().err


class TestRank:
    def test_csv_sorted_by_distance_with_tau_footer(self, tmp_path, workspace, db30, capsys):
        out = tmp_path / "ranking.csv"
        emb = tmp_path / "embeddings.csv"
        rc = main(
            ["rank", "--db", str(workspace.db), "--model", str(workspace.model),
             "--log", str(workspace.log), "--out", str(out),
             "--embeddings", str(emb)]
        )
        assert rc == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "card_id,name,colors,rarity,distance_to_empty"
        assert lines[-1].startswith("# kendall_tau_first_pick_rate_vs_neg_distance = ")
        body = lines[1:-1]
        assert len(body) == 30
        distances = [float(line.split(",")[4]) for line in body]
        assert distances == sorted(distances)
        model = EmbeddingModel.load(workspace.model, db30)
        expected = sorted(model.distance_to_empty())
        assert distances == pytest.approx(expected, abs=1e-6)
        emb_lines = emb.read_text().splitlines()
        assert len(emb_lines) == 31  # header plus every card
        assert "kendall_tau" in capsys.readouterr().out

    def test_without_log_no_footer(self, tmp_path, workspace):
        out = tmp_path / "ranking.csv"
        rc = main(
            ["rank", "--db", str(workspace.db), "--model", str(workspace.model),
             "--out", str(out)]
        )
        assert rc == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 31
        assert not lines[-1].startswith("#")


class TestSimulate:
    def test_mixed_agents(self, tmp_path, workspace, capsys):
        out = tmp_path / "sim.jsonl"
        rc = main(
            ["simulate", "--db", str(workspace.db),
             "--agents", f"random,raredraft,model={workspace.model}",
             "--drafts", "2", "--out", str(out)]
        )
        assert rc == 0
        logs = list(read_draft_logs(out))
        assert len(logs) == 2
        assert all(len(log.events) == 360 for log in logs)
        manifest = load_manifest(out)
        assert manifest["config"]["agents"] == [
            "random", "raredraft", f"model={workspace.model}"
        ]
        assert "simulated 2 drafts" in capsys.readouterr().out

    def test_unknown_agent_fails(self, tmp_path, workspace, capsys):
        rc = main(
            ["simulate", "--db", str(workspace.db), "--agents", "wizard",
             "--drafts", "1", "--out", str(tmp_path / "x.jsonl")]
        )
        assert rc == 1
        assert "unknown agent" in capsys.readouterr().err


class TestSweep:
    def test_micro_sweep_table(self, tmp_path, workspace, capsys):
        out = tmp_path / "sweep.json"
        rc = main(
            ["sweep", "--db", str(workspace.db), "--log", str(workspace.log),
             "--dims", "2,4", "--hidden", "8", "--val-interval", "0",
             "--val-events", "0", "--out", str(out)]
        )
        assert rc == 0
        table = json.loads(out.read_text())
        assert [r["dim"] for r in table["runs"]] == [2, 4]
        assert [s["dim"] for s in table["summary"]] == [2, 4]
        assert all(s["runs"] == 1 for s in table["summary"])
        printed = capsys.readouterr().out
        assert "mean_mtta" in printed

    def test_bad_dims_fail_cleanly(self, tmp_path, workspace, capsys):
        rc = main(
            ["sweep", "--db", str(workspace.db), "--log", str(workspace.log),
             "--dims", "two", "--out", str(tmp_path / "x.json")]
        )
        assert rc == 1
        assert "--dims" in capsys.readouterr().err


class TestExitCodes:
    def test_help_exits_zero(self, capsys):
        assert main(["--help"]) == 0
        assert "usage" in capsys.readouterr().out

    def test_unknown_command_exits_one(self, capsys):
        assert main(["conjure"]) == 1
        capsys.readouterr()

    def test_missing_required_flag_exits_one(self, capsys):
        assert main(["gen", "--out", "x.jsonl"]) == 1
        capsys.readouterr()

    def test_missing_input_file_exits_one(self, tmp_path, capsys):
        rc = main(
            ["evaluate", "--db", str(tmp_path / "absent.csv"),
             "--log", str(tmp_path / "absent.jsonl"), "--agent", "random"]
        )
        assert rc == 1
        assert "error:" in capsys.readouterr().err

    def test_console_script_help(self):
        result = subprocess.run(
            [sys.executable, "-m", "cprdraft.cli", "--help"],
            capture_output=True, text=True,
        )
        assert result.returncode == 0
        assert "usage" in result.stdout
