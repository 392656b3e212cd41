import json
from pathlib import Path

import pytest
from hypothesis import settings

from flexrepair.frontend import parse
from flexrepair.model import build_model

ROOT = Path(__file__).resolve().parent.parent
SAMPLES = ROOT / "samples"
CORPUS = ROOT / "corpus"
FIXTURES = Path(__file__).resolve().parent / "fixtures"
GOLDEN = Path(__file__).resolve().parent / "golden"

settings.register_profile("default", deadline=None)
settings.load_profile("default")


def model_of(text):
    return build_model(parse(text))


def sample(name):
    return (SAMPLES / name).read_text()


@pytest.fixture
def extra_if_sources():
    return sample("extra_if_correct.ml"), sample("extra_if_incorrect.ml")


@pytest.fixture
def extra_if_pdg():
    return json.loads((FIXTURES / "extra_if_pdg.json").read_text())
