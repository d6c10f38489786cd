import random

import pytest

from bugdedup.corpus import BugReport, ReportCollection

VOCAB = [f"term{i:03d}" for i in range(150)]
COMPONENTS = ["ui", "net", "db", "kernel"]


def synthetic_collection(n_originals=150, n_children=50, seed=7,
                         dropout=0.1) -> ReportCollection:
    """Originals with random token summaries plus duplicate children that are
    token-permuted, partially dropped-out copies of their parents."""
    rng = random.Random(seed)
    reports = []
    for i in range(n_originals):
        reports.append(BugReport(
            id=f"orig-{i:03d}",
            summary=" ".join(rng.sample(VOCAB, 12)),
            description=" ".join(rng.sample(VOCAB, 20)),
            component=rng.choice(COMPONENTS),
            platform={"os": rng.choice(["linux", "windows"]),
                      "arch": rng.choice(["x86", "arm64"])},
        ))
    originals = list(reports)
    for j in range(n_children):
        parent = originals[rng.randrange(n_originals)]
        tokens = parent.summary.split()
        rng.shuffle(tokens)
        kept = [t for t in tokens if rng.random() >= dropout] or tokens[:2]
        reports.append(BugReport(
            id=f"child-{j:03d}",
            summary=" ".join(kept),
            description=parent.description,
            component=parent.component,
            platform=dict(parent.platform),
            dup_of=parent.id,
        ))
    return ReportCollection(reports)


@pytest.fixture(scope="session")
def synthetic_corpus():
    return synthetic_collection()
