import pathlib
import sys

import pytest

sys.path.insert(0, str(pathlib.Path(__file__).parent))

from adhesive_selector import catalog, service  # noqa: E402
from adhesive_selector.grounding import ground  # noqa: E402


@pytest.fixture(scope="session")
def cat():
    return catalog.generate_synthetic_catalog(1)


@pytest.fixture(scope="session")
def kb(cat):
    return catalog.build_kb(cat)


@pytest.fixture(scope="session")
def gp(kb):
    voc, th, st = kb
    return ground(voc, th, st)


@pytest.fixture(scope="session")
def ctx():
    return service.load_default_context()
