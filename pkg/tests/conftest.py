import glob
import os

import pytest

from evoarch.syntax import read_hypertext_file
from evoarch.workspace import Workspace

CORPUS_DIR = os.path.join(os.path.dirname(__file__), "corpus")


def corpus_paths():
    return sorted(glob.glob(os.path.join(CORPUS_DIR, "*.adl")))


def corpus_source(name):
    return read_hypertext_file(os.path.join(CORPUS_DIR, name))


@pytest.fixture
def ws():
    return Workspace(seed=1, step_budget=20_000)


def fresh_ws(seed=1, budget=20_000):
    return Workspace(seed=seed, step_budget=budget)
