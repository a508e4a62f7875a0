"""Global pytest fixtures for binary-maximin tests."""

import logging

import pytest


@pytest.fixture(autouse=True)
def quiet_solver_logs(caplog):
    """Keep per-iteration solver chatter out of test output unless a test asks for it."""

    caplog.set_level(logging.WARNING, logger="binary_maximin")
    yield
