import pytest

from protocontract.bundled import PROTOCOLS, protocol_source
from protocontract.parser import load_protocol


@pytest.fixture(scope="session")
def decls():
    return {stem: load_protocol(protocol_source(stem)) for stem in PROTOCOLS}


@pytest.fixture(scope="session")
def gg(decls):
    return decls["guessing_game"]
