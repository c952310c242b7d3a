"""Fixtures for the primary suite; substance lives in helpers.py."""

import pytest

from helpers import make_t1, make_t2


@pytest.fixture
def t1():
    return make_t1()


@pytest.fixture
def t2():
    return make_t2()
