"""Shared fixtures and the acceptance-criteria reporting hook.

The expensive inputs (the enriched zero set, the 1e5 sieve tables) are
session scoped; everything downstream treats them as read-only.
"""

import numpy as np
import pytest

from liouconv import sieve, zeros

_ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for index, ok, detail in sorted(_ACCEPTANCE):
        verdict = "PASS" if ok else "FAIL"
        terminalreporter.write_line(
            f"criterion {index:2d}: {verdict} - {detail}")


@pytest.fixture(scope="session")
def criterion():
    """Record one pass/fail line for the summary table, then assert."""

    def record(index, ok, detail):
        _ACCEPTANCE.append((int(index), bool(ok), str(detail)))
        assert ok, f"criterion {index}: {detail}"

    return record


@pytest.fixture(scope="session")
def zs10k():
    return zeros.enrich(zeros.bundled_ordinates())


@pytest.fixture(scope="session")
def zs1000(zs10k):
    return zeros.truncate(zs10k, count=1000)


@pytest.fixture(scope="session")
def lio_100k():
    return sieve.build_sieve(sieve.KIND_LIOUVILLE, 10 ** 5)


@pytest.fixture(scope="session")
def moe_100k():
    return sieve.build_sieve(sieve.KIND_MOEBIUS, 10 ** 5)


@pytest.fixture()
def rng():
    return np.random.default_rng(0xC0FFEE)
