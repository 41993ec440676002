from __future__ import annotations

import random

import pytest
from hypothesis import settings

settings.register_profile("repro", derandomize=True, max_examples=60, deadline=None)
settings.load_profile("repro")


def pytest_addoption(parser):
    parser.addoption("--seed", type=int, default=0, help="seed for randomized sample selection")


@pytest.fixture
def rng(request) -> random.Random:
    return random.Random(request.config.getoption("--seed"))
