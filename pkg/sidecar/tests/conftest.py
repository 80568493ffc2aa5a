import json
import random

import pytest


@pytest.fixture(scope="session")
def toy_dataset(tmp_path_factory):
    """Separable three-topic corpus: 220 methods, 200 train / 20 val triplets."""
    base = tmp_path_factory.mktemp("toy")
    rng = random.Random(0)
    topics = {
        "io": ["reads the file", "writes the buffer", "closes the stream", "flushes output"],
        "math": ["adds two numbers", "multiplies the matrix", "computes the norm", "divides safely"],
        "net": ["opens the socket", "sends the packet", "resolves the host", "retries the request"],
    }
    codewords = {
        "io": "file stream read write",
        "math": "sum matrix multiply norm",
        "net": "socket packet host send",
    }
    corpus, train, val = [], [], []
    assignments = []
    for i in range(220):
        topic = rng.choice(list(topics))
        mid = f"m{i:03d}"
        assignments.append((mid, topic))
        corpus.append(
            {
                "id": mid,
                "source_text": f"void {mid}() {{ {codewords[topic]}; }}",
                "summary": rng.choice(topics[topic]),
                "inner_comments": [],
                "statement_count": 1,
            }
        )
    by_id = {c["id"]: c for c in corpus}
    for i, (mid, topic) in enumerate(assignments):
        other = rng.choice([t for t in topics if t != topic])
        triplet = {
            "anchor_id": mid,
            "positive": by_id[mid]["summary"],
            "negative": rng.choice(topics[other]),
            "negative_kind": "random",
        }
        (train if i < 200 else val).append(triplet)

    paths = {
        "corpus": base / "corpus.jsonl",
        "train": base / "train.jsonl",
        "val": base / "val.jsonl",
    }
    with open(paths["corpus"], "w") as fh:
        for c in corpus:
            fh.write(json.dumps(c) + "\n")
    with open(paths["train"], "w") as fh:
        for t in train:
            fh.write(json.dumps(t) + "\n")
    with open(paths["val"], "w") as fh:
        for t in val:
            fh.write(json.dumps(t) + "\n")
    return paths
