import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from acblowup.cli import fixture_names, fixture_path
from acblowup.dsl import parse_structure


def load_fixture(name: str):
    text = fixture_path(name).read_text()
    return parse_structure(text)


@pytest.fixture(scope="session")
def corpus():
    return {
        Path(n).stem: load_fixture(n) for n in fixture_names()
    }


@pytest.fixture(scope="session")
def structures(corpus):
    return {name: doc.to_structure() for name, doc in corpus.items()}
