"""Shared fixtures: the bundled rulebook and league handles."""

from __future__ import annotations

import pytest

from coopetition.rulebook import bundled_rulebook


@pytest.fixture(scope="session")
def rulebook():
    return bundled_rulebook()


@pytest.fixture(scope="session")
def irl(rulebook):
    return rulebook.league("IRL")


@pytest.fixture(scope="session")
def srl(rulebook):
    return rulebook.league("SRL")


@pytest.fixture(scope="session")
def orl(rulebook):
    return rulebook.league("ORL")
