from itertools import combinations

import pytest

from p2pupir import fixtures


@pytest.fixture
def fano():
    return fixtures.fano()


@pytest.fixture
def config12():
    return fixtures.config_12_8_2_3()


@pytest.fixture
def bibd10():
    return fixtures.bibd_10_15_6_4_2()


def brute_pair_counts(s):
    """lambda_ij by explicit enumeration of blocks, independent of the incidence matrix."""
    counts = {}
    for i, j in combinations(range(s.v), 2):
        counts[i, j] = sum(1 for B in s.blocks if i in B and j in B)
    return counts


def brute_covering(s):
    return all(c >= 1 for c in brute_pair_counts(s).values())


BIBD_FIXTURES = ["fano", "bibd-10-15-6-4-2", "fano-cyclic", "sbibd-15-7-3", "supersimple-7-14-6-3-2"]


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
