import json
import os
import sys
from pathlib import Path

import numpy as np
import pytest

HERE = Path(__file__).parent
sys.path.insert(0, str(HERE / "oracle"))

import fixtures  # noqa: E402

from bcrec.data import table_from_triples, trust_from_edges  # noqa: E402

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def golden():
    return json.loads((HERE / "oracle" / "golden.json").read_text())


def fixture_data(name):
    d = getattr(fixtures, name)
    return table_from_triples(d["ratings"]), trust_from_edges(d["trust"])


def random_micro(rng: np.random.Generator, max_users=10, max_items=10, max_ratings=40, max_trust=10):
    """Random micro-dataset: (triples, trust edges) within the given bounds."""
    n_users = int(rng.integers(2, max_users + 1))
    n_items = int(rng.integers(1, max_items + 1))
    n_r = int(rng.integers(1, min(max_ratings, n_users * n_items) + 1))
    cells = rng.choice(n_users * n_items, size=n_r, replace=False)
    triples = [(int(c // n_items), int(c % n_items), int(rng.integers(1, 6))) for c in cells]
    n_t = int(rng.integers(0, max_trust + 1))
    edges = [(int(rng.integers(n_users)), int(rng.integers(n_users))) for _ in range(n_t)]
    return triples, edges


def epinions_paths():
    """Locate the Epinions ratings/trust files, or return (None, None)."""
    root = Path(os.environ.get("BCREC_EPINIONS_DIR", HERE.parent / "data" / "epinions"))
    found = []
    for stem in ("ratings_data.txt", "trust_data.txt"):
        cands = [root / stem, root / (stem + ".bz2")]
        found.append(next((c for c in cands if c.exists()), None))
    return tuple(found)
