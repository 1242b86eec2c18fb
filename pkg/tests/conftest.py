import functools

import pytest

S1 = [[13, 2, -1, 3], [2, 11, 3, 2], [-1, 3, 9, 1], [3, 2, 1, 7]]
S2 = [[31, 11, -1, 5], [11, 23, 3, -2], [-1, 3, 7, 1], [5, -2, 1, 7]]

_ACCEPTANCE = {}


def record_acceptance(k, ok, detail):
    line = f"criterion {k}: {'PASS' if ok else 'FAIL'} - {detail}"
    _ACCEPTANCE[k] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[k])


@functools.lru_cache(maxsize=None)
def fa_report(name, seed=0):
    from algfam.mle import global_mle_fa

    S = {"S1": S1, "S2": S2}[name]
    return global_mle_fa(S, seed=seed, expected_count=57)


@pytest.fixture(scope="session")
def s1_report():
    return fa_report("S1")


@pytest.fixture(scope="session")
def s2_report():
    return fa_report("S2")
