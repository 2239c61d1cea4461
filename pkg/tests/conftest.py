from pathlib import Path

import pytest

from rbcheck.modelio import load_model

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def me():
    """The five-state worked example: states s,t,u,v,w, goal {v}, reward r."""
    return load_model(DATA / "me.json")


@pytest.fixture(scope="session")
def me_model(me):
    return me.model


@pytest.fixture(scope="session")
def me_goal(me):
    return me.goal("goal")


@pytest.fixture(scope="session")
def me_reward(me):
    return me.reward("r")


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import REPORT

    if REPORT:
        terminalreporter.section("acceptance criteria")
        for line in REPORT:
            terminalreporter.write_line(line)
