"""Regenerate the bundled fixture corpus and embeddings.

Writes src/sapara/data/fixture/{corpus.txt,references.txt,embeddings.txt}.
Sentences are question templates with aligned paraphrase references; the
embeddings place synonyms close together so that semantic similarity is
meaningful without a pretrained vector file.

    python tools/make_fixture.py
"""

from __future__ import annotations

import itertools
import random
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parents[1] / "src" / "sapara" / "data" / "fixture"
N_SENTENCES = 200
DIM = 50
SEED = 20201

SUBJECTS = [
    "python", "java", "physics", "math", "chemistry", "guitar", "piano", "english",
    "french", "spanish", "drawing", "cooking", "programming", "statistics", "economics", "history",
]
HABITS = ["smoking", "procrastinating", "overthinking", "snacking", "gaming", "worrying"]
ACTIVITIES = ["running", "swimming", "yoga", "meditation", "reading", "cycling"]
JOBS = ["writer", "programmer", "teacher", "doctor", "designer", "manager"]
THINGS = ["books", "movies", "courses", "podcasts", "recipes", "tutorials"]
PAIRS = [("python", "java"), ("physics", "chemistry"), ("guitar", "piano"), ("french", "spanish"),
         ("running", "swimming"), ("yoga", "meditation"), ("math", "statistics"), ("books", "movies")]

TEMPLATES = [
    ("how can i learn {s} quickly", "what is the fastest way to learn {s}"),
    ("what is the best way to learn {s}", "how do i learn {s} effectively"),
    ("how do i get better at {s}", "how can i improve my {s} skills"),
    ("why is {s} so popular", "what makes {s} so popular"),
    ("what are good books to learn {s}", "which books should i read to learn {s}"),
    ("how long does it take to learn {s}", "how much time is needed to learn {s}"),
    ("can i learn {s} on my own", "is it possible to study {s} by myself"),
    ("why should i study {s}", "what is the point of learning {s}"),
    ("is {s} hard to learn", "is learning {s} difficult"),
    ("how can i stop {h}", "how do i quit {h}"),
    ("what are the benefits of {a}", "what are the advantages of {a}"),
    ("is {a} good for health", "is {a} healthy"),
    ("how do i become a good {j}", "what should i do to become a better {j}"),
    ("what skills does a {j} need", "which skills are required for a {j}"),
    ("where can i find good {t} online", "what are some good websites for {t}"),
    ("what are the best {t} of all time", "which {t} are the greatest ever"),
    ("which is better {x} or {y}", "what is better {x} or {y}"),
    ("what is the difference between {x} and {y}", "how is {x} different from {y}"),
]

SYNONYMS = [
    ["quickly", "fast", "fastest", "rapidly"],
    ["learn", "learning", "study", "master"],
    ["best", "good", "better", "greatest", "great"],
    ["benefits", "advantages"],
    ["stop", "quit"],
    ["hard", "difficult", "tough"],
    ["improve", "better"],
    ["health", "healthy"],
    ["skills", "abilities"],
    ["need", "required", "requires"],
    ["find", "get"],
    ["websites", "online", "sites"],
    ["popular", "famous"],
    ["difference", "different"],
    ["ever", "time"],
    ["way", "method"],
    ["become", "becoming"],
    ["own", "myself"],
    ["point", "purpose"],
]


def build_sentences() -> list[tuple[str, str]]:
    fills = {
        "s": SUBJECTS, "h": HABITS, "a": ACTIVITIES, "j": JOBS, "t": THINGS,
    }
    pairs = []
    for src, ref in TEMPLATES:
        if "{x}" in src:
            for x, y in PAIRS:
                pairs.append((src.format(x=x, y=y), ref.format(x=x, y=y)))
            continue
        slot = next(k for k in fills if "{" + k + "}" in src)
        for v in fills[slot]:
            pairs.append((src.format(**{slot: v}), ref.format(**{slot: v})))
    pairs = list(dict.fromkeys(pairs))
    random.Random(SEED).shuffle(pairs)
    return pairs[:N_SENTENCES]


def build_embeddings(words: list[str]) -> dict[str, np.ndarray]:
    rng = np.random.default_rng(SEED)
    vectors: dict[str, np.ndarray] = {}
    for group in SYNONYMS:
        center = rng.normal(size=DIM)
        for w in group:
            if w not in vectors:
                vectors[w] = center + 0.35 * rng.normal(size=DIM)
    topical = rng.normal(size=DIM)
    for w in SUBJECTS + ACTIVITIES:
        vectors.setdefault(w, 0.5 * topical + rng.normal(size=DIM))
    for w in words:
        vectors.setdefault(w, rng.normal(size=DIM))
    return {w: vectors[w] for w in sorted(vectors)}


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    pairs = build_sentences()
    assert len(pairs) == N_SENTENCES, len(pairs)
    (OUT / "corpus.txt").write_text("".join(s + "\n" for s, _ in pairs), encoding="utf-8")
    (OUT / "references.txt").write_text("".join(r + "\n" for _, r in pairs), encoding="utf-8")
    words = sorted({w for s, r in pairs for w in itertools.chain(s.split(), r.split())})
    emb = build_embeddings(words)
    with open(OUT / "embeddings.txt", "w", encoding="utf-8", newline="\n") as fh:
        for w, v in emb.items():
            fh.write(w + " " + " ".join(f"{x:.5f}" for x in v) + "\n")
    print(f"{len(pairs)} sentences, {len(emb)} embeddings -> {OUT}")


if __name__ == "__main__":
    main()
