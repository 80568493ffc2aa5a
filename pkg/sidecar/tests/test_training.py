import json

import pytest
import torch

from sumeval_sidecar.encoder import EncoderConfig, new_encoder
from sumeval_sidecar.records import load_corpus_texts, load_triplets
from sumeval_sidecar.training import (
    TrainConfig,
    TrainingError,
    _lr_at,
    finetune_triplets,
    triplet_margin_loss,
)

TOY_CFG = TrainConfig(
    epochs=2, batch_size=16, learning_rate=1e-3, checkpoint_every=10,
    seed=1, encoder_dim=32, encoder_layers=1,
)


def test_loss_equals_margin_when_positive_is_negative():
    # distance terms cancel, leaving exactly the margin
    enc = new_encoder(["shared words here"], EncoderConfig(dim=16, layers=1), seed=0)
    anchor = enc([enc.encode_ids("an anchor")[0]])
    same = enc([enc.encode_ids("shared words")[0]])
    loss = triplet_margin_loss(anchor, same, same, margin=0.5)
    assert loss.item() == pytest.approx(0.5, abs=1e-12)


def test_lr_warmup_then_linear_decay():
    peak = 1e-3
    total = 100  # warmup = 10 steps
    assert _lr_at(0, total, peak, 0.1) == pytest.approx(peak / 10)
    assert _lr_at(9, total, peak, 0.1) == pytest.approx(peak)
    assert _lr_at(10, total, peak, 0.1) == pytest.approx(peak)  # decay starts at peak
    assert _lr_at(11, total, peak, 0.1) < peak
    assert _lr_at(99, total, peak, 0.1) == pytest.approx(peak / 90)
    mid = _lr_at(55, total, peak, 0.1)
    assert 0 < mid < peak


@pytest.fixture(scope="module")
def run(toy_dataset, tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    result = finetune_triplets(
        load_triplets(toy_dataset["train"]),
        load_triplets(toy_dataset["val"]),
        load_corpus_texts(toy_dataset["corpus"]),
        out,
        TOY_CFG,
    )
    return result


class TestFinetune:
    def test_epoch_loss_decreases(self, run):
        assert run.epoch_losses[1] < run.epoch_losses[0]

    def test_best_at_least_base(self, run):
        assert run.best.score >= run.base_score

    def test_checkpoints_and_eval_csvs_written(self, run, tmp_path):
        from pathlib import Path

        run_dir = Path(run.run_dir)
        for record in run.checkpoints:
            assert (Path(record.path) / "weights.pt").exists()
            assert (run_dir / "eval" / f"pos_step-{record.step}.csv").exists()
            assert (run_dir / "eval" / f"neg_step-{record.step}.csv").exists()
        summary = json.loads((run_dir / "summary.json").read_text())
        assert summary["best_step"] == run.best.step

    def test_seeded_rerun_identical_ranking(self, toy_dataset, tmp_path):
        results = []
        for name in ("a", "b"):
            results.append(
                finetune_triplets(
                    load_triplets(toy_dataset["train"]),
                    load_triplets(toy_dataset["val"]),
                    load_corpus_texts(toy_dataset["corpus"]),
                    tmp_path / name,
                    TOY_CFG,
                )
            )
        a, b = results
        assert [c.step for c in a.checkpoints] == [c.step for c in b.checkpoints]
        assert [c.score for c in a.checkpoints] == [c.score for c in b.checkpoints]
        assert a.epoch_losses == b.epoch_losses

    def test_empty_triplets_rejected(self, toy_dataset, tmp_path):
        with pytest.raises(TrainingError, match="empty"):
            finetune_triplets(
                [], load_triplets(toy_dataset["val"]),
                load_corpus_texts(toy_dataset["corpus"]), tmp_path / "x", TOY_CFG,
            )

    def test_missing_anchor_rejected(self, toy_dataset, tmp_path):
        triplets = load_triplets(toy_dataset["train"])[:5]
        with pytest.raises(TrainingError, match="missing"):
            finetune_triplets(
                triplets, load_triplets(toy_dataset["val"]),
                {"not-an-anchor": "void x() {}"}, tmp_path / "x", TOY_CFG,
            )

    def test_patience_stops_training(self, toy_dataset, tmp_path):
        # zero learning rate: no checkpoint ever improves, patience must trip
        cfg = TrainConfig(
            epochs=50, batch_size=16, learning_rate=0.0, checkpoint_every=5,
            patience=2, seed=1, encoder_dim=16, encoder_layers=1,
        )
        result = finetune_triplets(
            load_triplets(toy_dataset["train"]),
            load_triplets(toy_dataset["val"]),
            load_corpus_texts(toy_dataset["corpus"]),
            tmp_path / "stall",
            cfg,
        )
        assert result.stopped_early
        assert len(result.epoch_losses) < 50
