import logging
from pathlib import Path

import pytest

from depthlab.fst import FstFamily, enumerate_ilfsts

logging.basicConfig(level=logging.INFO)

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def ilfsts_k3_l1():
    return list(enumerate_ilfsts(3, 1))


@pytest.fixture(scope="session")
def fst_family_k3_l1(ilfsts_k3_l1):
    return FstFamily(ilfsts_k3_l1, 1)


@pytest.fixture(scope="session")
def fst_family_k2_l2():
    return FstFamily(list(enumerate_ilfsts(2, 2)), 2)
