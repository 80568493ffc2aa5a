"""Secondary-component acceptance: toy fine-tuning and primary integration.

The integration tests drive the scoring toolkit strictly through its
external interfaces (file formats and CLI).
"""

import json
import subprocess
import sys
import time
from pathlib import Path

import pytest

from sumeval_sidecar.cli import main as sidecar_main
from sumeval_sidecar.records import load_corpus_texts, load_triplets
from sumeval_sidecar.training import TrainConfig, finetune_triplets


def _ok(name: str) -> None:
    print(f"\n[ACCEPT] {name}: PASS")


def _primary(*args: str) -> subprocess.CompletedProcess:
    return subprocess.run(
        [sys.executable, "-m", "sumeval.cli", *args], capture_output=True, text=True
    )


@pytest.fixture(scope="module")
def trained(toy_dataset, tmp_path_factory):
    out = tmp_path_factory.mktemp("accept_run")
    started = time.perf_counter()
    result = finetune_triplets(
        load_triplets(toy_dataset["train"]),
        load_triplets(toy_dataset["val"]),
        load_corpus_texts(toy_dataset["corpus"]),
        out,
        TrainConfig(
            epochs=2, batch_size=16, learning_rate=1e-3, checkpoint_every=10,
            seed=7, encoder_dim=32, encoder_layers=1,
        ),
    )
    return result, time.perf_counter() - started


def test_toy_finetuning_criteria(trained):
    """200 triplets: loss strictly decreases, best >= base, well under 10 min."""
    result, elapsed = trained
    assert len(result.epoch_losses) == 2
    assert result.epoch_losses[1] < result.epoch_losses[0]
    assert result.best.score >= result.base_score
    assert elapsed < 600.0, f"training took {elapsed:.0f}s"
    _ok(f"toy fine-tuning (loss {result.epoch_losses[0]:.4f} -> "
        f"{result.epoch_losses[1]:.4f}, base {result.base_score:.3f} -> "
        f"best {result.best.score:.3f}, {elapsed:.0f}s)")


def test_primary_selects_best_checkpoint_from_csvs(trained):
    """The toolkit's checkpoint-score on our CSVs reproduces our selection."""
    result, _ = trained
    eval_dir = Path(result.run_dir) / "eval"
    scores = {}
    for record in result.checkpoints:
        proc = _primary(
            "checkpoint-score",
            "--pos", str(eval_dir / f"pos_step-{record.step}.csv"),
            "--neg", str(eval_dir / f"neg_step-{record.step}.csv"),
        )
        assert proc.returncode == 0, proc.stderr
        scores[record.step] = float(proc.stdout.strip())
        assert scores[record.step] == pytest.approx(record.score, abs=1e-9)
    assert max(scores, key=scores.get) == result.best.step
    _ok("checkpoint selection via primary checkpoint-score")


def test_exported_embeddings_validate_and_side_scores_in_range(
    trained, toy_dataset, tmp_path
):
    """Schema-clean export; SIDE computed by the primary stays in [-1, 1]."""
    result, _ = trained
    corpus = [json.loads(line) for line in open(toy_dataset["corpus"], encoding="utf-8")]
    items_path = tmp_path / "items.jsonl"
    pairs_path = tmp_path / "pairs.jsonl"
    with open(items_path, "w") as items, open(pairs_path, "w") as pairs:
        for c in corpus[:40]:
            items.write(json.dumps(
                {"id": f"{c['id']}:gen", "text": c["summary"], "kind": "sentence"}) + "\n")
            items.write(json.dumps(
                {"id": f"{c['id']}:code", "text": c["source_text"], "kind": "sentence"}) + "\n")
            pairs.write(json.dumps(
                {"pair_id": c["id"], "generated": c["summary"],
                 "reference": c["summary"]}) + "\n")

    emb_path = tmp_path / "side_emb.jsonl"
    rc = sidecar_main(
        ["export", "--model", result.best.path, "--items", str(items_path),
         "--provider", "side-encoder", "--out", str(emb_path)]
    )
    assert rc == 0

    from sumeval.corpus import load_embeddings  # primary's schema validation

    records = load_embeddings(emb_path)
    assert len(records) == 80
    assert all(r.provider == "side-encoder" for r in records)

    side_csv = tmp_path / "side.csv"
    proc = _primary(
        "side", "--pairs", str(pairs_path), "--embeddings", str(emb_path),
        "--out", str(side_csv),
    )
    assert proc.returncode == 0, proc.stderr
    rows = side_csv.read_text().splitlines()
    assert rows[0] == "pair_id,SIDE"
    values = [float(line.split(",")[1]) for line in rows[1:]]
    assert len(values) == 40
    assert all(-1.0 <= v <= 1.0 for v in values)
    _ok(f"export + primary validation (80 records, {len(values)} SIDE scores in [-1,1])")


def test_token_matrix_export_feeds_primary_bertscore(trained, tmp_path):
    """Matrix-kind records work end to end through the primary score path."""
    result, _ = trained
    items_path = tmp_path / "tok_items.jsonl"
    pairs_path = tmp_path / "tok_pairs.jsonl"
    with open(items_path, "w") as items, open(pairs_path, "w") as pairs:
        for pid, gen, ref in [("t1", "reads the file", "reads a file"),
                              ("t2", "adds numbers", "opens the socket")]:
            items.write(json.dumps({"id": f"{pid}:gen", "text": gen, "kind": "token_matrix"}) + "\n")
            items.write(json.dumps({"id": f"{pid}:ref", "text": ref, "kind": "token_matrix"}) + "\n")
            pairs.write(json.dumps({"pair_id": pid, "generated": gen, "reference": ref}) + "\n")
    emb_path = tmp_path / "tok_emb.jsonl"
    rc = sidecar_main(
        ["export", "--model", result.best.path, "--items", str(items_path),
         "--provider", "bert-token", "--out", str(emb_path)]
    )
    assert rc == 0
    out_csv = tmp_path / "bert.csv"
    proc = _primary(
        "score", "--pairs", str(pairs_path), "--embeddings", str(emb_path),
        "--out", str(out_csv), "--metrics", "BERTScore-P,BERTScore-R,BERTScore-F1",
        "--strict",
    )
    assert proc.returncode == 0, proc.stderr
    lines = out_csv.read_text().splitlines()
    assert lines[0] == "pair_id,BERTScore-P,BERTScore-R,BERTScore-F1"
    assert len(lines) == 3
    _ok("token-matrix export feeds primary BERTScore")
