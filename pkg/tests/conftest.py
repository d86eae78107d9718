import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from refcal.fileio import builtin_chain_path, parse_chain_file


@pytest.fixture(scope="session")
def panda():
    """(chain, ref) with the reference point on the flange (eye-on-base)."""
    return parse_chain_file(builtin_chain_path("panda"))


@pytest.fixture(scope="session")
def panda_base():
    """(chain, ref) with the reference point on the base shell (eye-in-hand)."""
    return parse_chain_file(builtin_chain_path("panda_base_ref"))
