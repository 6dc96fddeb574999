from __future__ import annotations

import pytest

from gridscout import cost
from gridscout.mockserver import MockInferenceServer
from gridscout.posterior import AnswerSpace


@pytest.fixture(scope="session")
def preset_2b() -> cost.CostPreset:
    return cost.load_cost_preset("vlm_2b")


@pytest.fixture(scope="session")
def letters8() -> AnswerSpace:
    return AnswerSpace.letters(8)


@pytest.fixture
def mock_server():
    server = MockInferenceServer()
    server.start()
    yield server
    server.stop()


@pytest.fixture(scope="session")
def unit_cost() -> cost.ModelCostConfig:
    return cost.ModelCostConfig(layers=1, hidden=1, ffn=1, prompt_tokens=0)
