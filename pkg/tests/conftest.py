import socket
from pathlib import Path

import pytest

from aptly import load_seed_registry, parse

DATA = Path(__file__).parent / "data"
GOLDENS = Path(__file__).parent / "goldens"


@pytest.fixture(scope="session", autouse=True)
def no_network():
    """The whole suite must run without touching the network."""
    original = socket.socket.connect

    def guarded(self, address):
        raise AssertionError(f"test suite attempted a network connection to {address}")

    socket.socket.connect = guarded
    yield
    socket.socket.connect = original


@pytest.fixture(scope="session")
def listing1_source() -> str:
    return (DATA / "listing1.aptly").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def listing1_canonical() -> str:
    return (DATA / "listing1_canonical.aptly").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def listing1_program(listing1_source):
    return parse(listing1_source)


@pytest.fixture(scope="session")
def registry():
    return load_seed_registry()
