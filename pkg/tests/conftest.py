from pathlib import Path

import numpy as np
import pytest

from index_coding.modules import presets
from index_coding.modules.code_actions import ActionOptions, generate_action_set

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240601)


@pytest.fixture
def fig1():
    return presets.fig1_graph()


@pytest.fixture
def fig4a():
    return presets.fig4a_graph()


@pytest.fixture
def fig5a():
    return presets.fig5a_graph()


@pytest.fixture
def fig5b():
    return presets.fig5b_graph()


@pytest.fixture
def swap():
    return presets.swap_graph()


@pytest.fixture
def workload():
    return presets.three_user_workload()


@pytest.fixture
def concrete_actions(workload):
    return generate_action_set(workload, ActionOptions())


@pytest.fixture
def template_actions(workload):
    return generate_action_set(workload, ActionOptions(template=True))
