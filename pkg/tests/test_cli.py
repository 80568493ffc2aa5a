import json
import random
import shutil
import subprocess
import sys

import pytest

from sumeval.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, main
from sumeval.corpus import (
    EmbeddingKind,
    EmbeddingRecord,
    EvaluationRecord,
    ScoredPair,
    load_metric_matrix,
    load_triplets,
    write_embeddings,
    write_evaluations,
    write_pairs,
)


@pytest.fixture()
def workdir(tmp_path):
    rng = random.Random(0)
    words = "open close read write parse fetch store cache flush index".split()
    pairs, embs, evals = [], [], []
    for i in range(50):
        pid = f"p{i:03d}"
        gen = " ".join(rng.choices(words, k=rng.randrange(3, 8)))
        ref = " ".join(rng.choices(words, k=rng.randrange(3, 8)))
        pairs.append(ScoredPair(pid, gen, ref, f"void m{i}() {{ {rng.choice(words)}(); }}"))
        for role in ("gen", "ref", "code"):
            for prov in ("sentence-bert", "infersent", "use", "codet5p", "side-encoder"):
                vec = tuple(rng.uniform(-1, 1) for _ in range(8))
                embs.append(EmbeddingRecord(f"{pid}:{role}", prov, EmbeddingKind.SENTENCE, vec))
            rows = rng.randrange(2, 5)
            flat = tuple(rng.uniform(-1, 1) for _ in range(rows * 6))
            embs.append(
                EmbeddingRecord(
                    f"{pid}:{role}", "bert-token", EmbeddingKind.TOKEN_MATRIX,
                    flat, rows=rows, cols=6,
                )
            )
        evals.append(
            EvaluationRecord(
                pid,
                da_score=rng.randrange(0, 101),
                content_adequacy=rng.randrange(0, 6),
                conciseness=rng.randrange(0, 6),
                fluency=rng.randrange(0, 6),
            )
        )
    write_pairs(pairs, tmp_path / "pairs.jsonl")
    write_embeddings(embs, tmp_path / "emb.jsonl")
    write_evaluations(evals, tmp_path / "evals.jsonl")
    return tmp_path


class TestScore:
    def test_overlap_only_column_count(self, workdir):
        out = workdir / "m.csv"
        rc = main(
            ["score", "--pairs", str(workdir / "pairs.jsonl"), "--out", str(out),
             "--metrics", "overlap"]
        )
        assert rc == EXIT_OK
        columns, rows = load_metric_matrix(out)
        assert len(columns) == 27
        assert len(rows) == 50
        assert all(len(vals) == 27 for _, vals in rows)

    def test_all_metrics_with_embeddings(self, workdir):
        out = workdir / "m.csv"
        rc = main(
            ["score", "--pairs", str(workdir / "pairs.jsonl"), "--out", str(out),
             "--embeddings", str(workdir / "emb.jsonl")]
        )
        assert rc == EXIT_OK
        columns, rows = load_metric_matrix(out)
        assert len(columns) == 40
        assert all(len(vals) == 40 for _, vals in rows)
        manifest = json.loads((workdir / "m.csv.manifest.json").read_text())
        assert manifest["skipped_metrics"] == {}

    def test_missing_embeddings_leave_empty_cells(self, workdir):
        out = workdir / "m.csv"
        rc = main(["score", "--pairs", str(workdir / "pairs.jsonl"), "--out", str(out)])
        assert rc == EXIT_OK
        columns, rows = load_metric_matrix(out)
        assert len(columns) == 40
        assert all("SIDE" not in vals for _, vals in rows)
        manifest = json.loads((workdir / "m.csv.manifest.json").read_text())
        assert "SIDE" in manifest["skipped_metrics"]

    def test_strict_missing_embeddings_fails_without_output(self, workdir):
        out = workdir / "strict.csv"
        rc = main(
            ["score", "--pairs", str(workdir / "pairs.jsonl"), "--out", str(out), "--strict"]
        )
        assert rc == EXIT_DATA
        assert not out.exists()

    def test_identical_pair_maximal_overlap(self, tmp_path):
        write_pairs([ScoredPair("p1", "gets the id", "gets the id")], tmp_path / "p.jsonl")
        out = tmp_path / "m.csv"
        assert main(
            ["score", "--pairs", str(tmp_path / "p.jsonl"), "--out", str(out),
             "--metrics", "overlap"]
        ) == EXIT_OK
        _, rows = load_metric_matrix(out)
        vals = rows[0][1]
        for name in ("BLEU-1", "BLEU-A", "ROUGE-1-F1", "ROUGE-L-F1", "chrF", "Jaccard"):
            assert vals[name] == 1.0
        assert vals["METEOR"] == pytest.approx(1 - 0.5 * (1 / 3) ** 3)

    def test_rerun_byte_identical(self, workdir):
        a, b = workdir / "a.csv", workdir / "b.csv"
        args = ["score", "--pairs", str(workdir / "pairs.jsonl"),
                "--embeddings", str(workdir / "emb.jsonl")]
        assert main(args + ["--out", str(a)]) == EXIT_OK
        assert main(args + ["--out", str(b)]) == EXIT_OK
        assert a.read_bytes() == b.read_bytes()


class TestMine:
    def test_mine_corpus(self, tmp_path, java_fixture_dir):
        corpus = tmp_path / "java"
        shutil.copytree(java_fixture_dir, corpus)
        out = tmp_path / "triplets.jsonl"
        rc = main(["mine", "--corpus", str(corpus), "--out", str(out), "--seed", "3"])
        assert rc == EXIT_OK
        triplets = load_triplets(out)
        assert len(triplets) == 15  # 10 random + 5 hard
        manifest = json.loads((tmp_path / "triplets.jsonl.manifest.json").read_text())
        assert manifest["seed"] == 3
        assert manifest["n_triplets"] == 15

    def test_hard_only(self, tmp_path, java_fixture_dir):
        corpus = tmp_path / "java"
        shutil.copytree(java_fixture_dir, corpus)
        out = tmp_path / "hard.jsonl"
        rc = main(["mine", "--corpus", str(corpus), "--out", str(out), "--hard-only"])
        assert rc == EXIT_OK
        triplets = load_triplets(out)
        assert len(triplets) == 5
        assert all(t.negative_kind.value == "hard" for t in triplets)

    def test_seeded_reruns_byte_identical(self, tmp_path, java_fixture_dir):
        corpus = tmp_path / "java"
        shutil.copytree(java_fixture_dir, corpus)
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        main(["mine", "--corpus", str(corpus), "--out", str(a), "--seed", "9"])
        main(["mine", "--corpus", str(corpus), "--out", str(b), "--seed", "9"])
        assert a.read_bytes() == b.read_bytes()

    def test_missing_corpus_is_data_error(self, tmp_path):
        rc = main(["mine", "--corpus", str(tmp_path / "nope"), "--out", str(tmp_path / "t.jsonl")])
        assert rc == EXIT_DATA


class TestSideAndCheckpoint:
    def test_side_scores_in_range(self, workdir):
        out = workdir / "side.csv"
        rc = main(
            ["side", "--pairs", str(workdir / "pairs.jsonl"),
             "--embeddings", str(workdir / "emb.jsonl"), "--out", str(out)]
        )
        assert rc == EXIT_OK
        _, rows = load_metric_matrix(out)
        assert len(rows) == 50
        assert all(-1.0 <= vals["SIDE"] <= 1.0 for _, vals in rows)

    def test_checkpoint_score_output(self, tmp_path, capsys):
        pos = tmp_path / "pos.csv"
        neg = tmp_path / "neg.csv"
        pos.write_text("item_id,cosine\na,1.0\nb,1.0\n")
        neg.write_text("item_id,cosine\na,-1.0\nb,-1.0\n")
        assert main(["checkpoint-score", "--pos", str(pos), "--neg", str(neg)]) == EXIT_OK
        assert capsys.readouterr().out.strip() == "2.0"
        assert main(
            ["checkpoint-score", "--pos", str(pos), "--neg", str(neg), "--halved"]
        ) == EXIT_OK
        assert capsys.readouterr().out.strip() == "1.0"

    def test_length_mismatch_is_data_error(self, tmp_path):
        pos = tmp_path / "pos.csv"
        neg = tmp_path / "neg.csv"
        pos.write_text("cosine\n1.0\n")
        neg.write_text("cosine\n1.0\n0.5\n")
        assert main(["checkpoint-score", "--pos", str(pos), "--neg", str(neg)]) == EXIT_DATA


@pytest.fixture()
def scored(workdir):
    out = workdir / "metrics.csv"
    main(
        ["score", "--pairs", str(workdir / "pairs.jsonl"), "--out", str(out),
         "--embeddings", str(workdir / "emb.jsonl")]
    )
    return workdir


class TestAnalyze:
    def test_corr(self, scored, tmp_path):
        out = tmp_path / "corr.json"
        rc = main(["analyze", "corr", "--matrix", str(scored / "metrics.csv"), "--out", str(out)])
        assert rc == EXIT_OK
        report = json.loads(out.read_text())
        n = len(report["corr"]["labels"])
        assert len(report["corr"]["spearman"]) == n

    def test_redun_and_pca_and_varclus(self, scored, tmp_path):
        matrix = str(scored / "metrics.csv")
        for mode in ("redun", "pca", "varclus"):
            out = tmp_path / f"{mode}.json"
            assert main(["analyze", mode, "--matrix", matrix, "--out", str(out)]) == EXIT_OK
            assert out.exists()

    def test_polr_requires_evals(self, scored, tmp_path):
        out = tmp_path / "polr.json"
        rc = main(["analyze", "polr", "--matrix", str(scored / "metrics.csv"), "--out", str(out)])
        assert rc == EXIT_DATA

    def test_polr_single_dependent(self, tmp_path):
        # well-posed selected matrix: fluency actually driven by the metrics
        import numpy as np

        from sumeval.corpus import write_metric_matrix

        rng = np.random.default_rng(0)
        n = 300
        x = rng.uniform(size=(n, 3))
        latent = 2.5 * x[:, 0] - 1.5 * x[:, 1] + rng.logistic(size=n)
        y = np.digitize(latent, [-0.5, 0.5, 1.5, 2.5])
        write_metric_matrix(
            tmp_path / "sel.csv",
            ["METEOR", "SIDE", "c_coeff"],
            [
                (f"p{i}", {"METEOR": x[i, 0], "SIDE": x[i, 1], "c_coeff": x[i, 2]})
                for i in range(n)
            ],
        )
        with open(tmp_path / "evals.jsonl", "w") as fh:
            for i in range(n):
                fh.write(json.dumps({"pair_id": f"p{i}", "fluency": int(y[i])}) + "\n")
        out = tmp_path / "polr.json"
        rc = main(
            ["analyze", "polr", "--matrix", str(tmp_path / "sel.csv"),
             "--evals", str(tmp_path / "evals.jsonl"), "--out", str(out),
             "--dependent", "fluency"]
        )
        assert rc == EXIT_OK
        report = json.loads(out.read_text())
        assert set(report["polr"]["models"]) == {"fluency"}
        table = report["polr"]["models"]["fluency"]["table"]
        assert {"metric", "or", "value", "std_error", "t_value", "p_value"} <= set(table[0])
        by_name = {row["metric"]: row for row in table}
        assert by_name["METEOR"]["value"] > 0
        assert by_name["SIDE"]["value"] < 0

    def test_polr_on_full_collinear_matrix_is_numerical_failure(self, scored, tmp_path):
        # polr belongs after redun selection; the raw 40-column matrix on 50
        # rows is unidentifiable and must exit with the numerical-failure code
        out = tmp_path / "polr_raw.json"
        rc = main(
            ["analyze", "polr", "--matrix", str(scored / "metrics.csv"),
             "--evals", str(scored / "evals.jsonl"), "--out", str(out),
             "--dependent", "fluency"]
        )
        assert rc == 3


class TestPipeline:
    def test_report_bundle_and_determinism(self, scored, tmp_path):
        config = tmp_path / "pipe.toml"
        config.write_text(
            f"""
[pipeline]
matrix = "{scored / 'metrics.csv'}"
evals = "{scored / 'evals.jsonl'}"
out_dir = "{tmp_path / 'report'}"
seed = 7
"""
        )
        rc = main(["pipeline", "--config", str(config)])
        assert rc == EXIT_OK
        report_dir = tmp_path / "report"
        report = json.loads((report_dir / "report.json").read_text())
        assert len(report["models"]) == 4
        assert (report_dir / "varclus.png").exists()
        assert (report_dir / "pca.png").exists()
        assert (report_dir / "selected_matrix.csv").exists()
        assert report["manifest"]["seed"] == 7
        assert report["manifest"]["version"]

        snapshot = {p.name: p.read_bytes() for p in report_dir.iterdir()}
        assert main(["pipeline", "--config", str(config)]) == EXIT_OK
        for p in report_dir.iterdir():
            assert snapshot[p.name] == p.read_bytes(), f"{p.name} changed between reruns"

    def test_misaligned_ids_error(self, scored, tmp_path):
        evals = tmp_path / "extra.jsonl"
        evals.write_text('{"pair_id": "missing01", "da_score": 10}\n')
        config = tmp_path / "pipe.toml"
        config.write_text(
            f"""
[pipeline]
matrix = "{scored / 'metrics.csv'}"
evals = "{evals}"
out_dir = "{tmp_path / 'r2'}"
"""
        )
        assert main(["pipeline", "--config", str(config)]) == EXIT_DATA

    def test_empty_matrix_error(self, scored, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text("")
        config = tmp_path / "pipe.toml"
        config.write_text(
            f"""
[pipeline]
matrix = "{empty}"
evals = "{scored / 'evals.jsonl'}"
out_dir = "{tmp_path / 'r3'}"
"""
        )
        assert main(["pipeline", "--config", str(config)]) == EXIT_DATA


class TestExitCodes:
    def test_usage_error_is_one(self):
        with pytest.raises(SystemExit) as exc:
            main(["score"])  # missing required flags
        assert exc.value.code == EXIT_USAGE

    def test_unknown_subcommand_is_usage(self):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == EXIT_USAGE

    def test_console_entry_point(self):
        proc = subprocess.run(
            [sys.executable, "-m", "sumeval.cli", "--version"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0
        assert "sumeval" in proc.stdout
