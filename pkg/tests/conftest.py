from pathlib import Path

import numpy as np
import pytest

from sapara.corpus import load_aligned, load_corpus
from sapara.ngram import train_lm
from sapara.objective import HeuristicObjective, Models, ObjectiveConfig
from sapara.semantics import EmbeddingTable, load_embeddings, load_stopwords

FIXTURE = Path(__file__).resolve().parents[1] / "src" / "sapara" / "data" / "fixture"

TOY_CORPUS = [
    ("how", "can", "i", "learn", "python"),
    ("how", "do", "i", "learn", "java"),
    ("what", "is", "the", "best", "way", "to", "learn", "python"),
    ("why", "is", "python", "popular"),
    ("how", "can", "i", "stop", "smoking"),
    ("what", "is", "java"),
]


def toy_embeddings(words, dim=8, seed=3) -> EmbeddingTable:
    rng = np.random.default_rng(seed)
    return EmbeddingTable.from_dict({w: rng.normal(size=dim) for w in words})


@pytest.fixture(scope="session")
def toy_models() -> Models:
    words = sorted({w for s in TOY_CORPUS for w in s})
    return Models(
        train_lm(TOY_CORPUS, 3, "forward"),
        train_lm(TOY_CORPUS, 3, "backward"),
        toy_embeddings(words),
        load_stopwords(),
    )


@pytest.fixture(scope="session")
def fixture_corpus():
    return load_corpus(FIXTURE / "corpus.txt")


@pytest.fixture(scope="session")
def fixture_references():
    return load_aligned(FIXTURE / "references.txt")


@pytest.fixture(scope="session")
def fixture_models(fixture_corpus) -> Models:
    return Models(
        train_lm(fixture_corpus, 3, "forward"),
        train_lm(fixture_corpus, 3, "backward"),
        load_embeddings(FIXTURE / "embeddings.txt"),
        load_stopwords(),
    )


@pytest.fixture(scope="session")
def fixture_objective(fixture_models) -> HeuristicObjective:
    return HeuristicObjective(fixture_models, ObjectiveConfig(score_scale=1e7))


def pytest_terminal_summary(terminalreporter):
    from .test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
