import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from feedersim.model import load_model

CASES = Path(__file__).parent / "cases"


@pytest.fixture(scope="session")
def case2_model():
    return load_model(CASES / "case2_balanced.json")


@pytest.fixture(scope="session")
def case4_model():
    return load_model(CASES / "case4_unbalanced.json")


@pytest.fixture(scope="session")
def xfmr_model():
    return load_model(CASES / "case_xfmr.json")


@pytest.fixture(scope="session")
def small_synth():
    """40-node / 120-customer system shared by the model and solver tests."""
    from feedersim.timeseries import SynthParams, synth_feeder

    return synth_feeder(SynthParams(seed=3, primary_nodes=40, customers=120))


def case_path(name: str) -> Path:
    return CASES / name
