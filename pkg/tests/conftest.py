import time

import pytest

from phibound import modpoly

# (l, h2, c_l, r_l) for every prime l <= 61, tabulated values
TABLE_ROWS = [
    (2, 48, 12.48, 1.33), (3, 71, 9.81, 1.50), (5, 157, 12.11, 1.27),
    (7, 220, 10.11, 1.36), (11, 421, 12.14, 1.22), (13, 496, 11.06, 1.26),
    (17, 705, 11.75, 1.22), (19, 796, 11.37, 1.23), (23, 1025, 12.08, 1.19),
    (29, 1348, 12.02, 1.19), (31, 1440, 11.59, 1.20), (37, 1767, 11.44, 1.20),
    (41, 2012, 11.73, 1.18), (43, 2122, 11.64, 1.19), (47, 2376, 11.94, 1.17),
    (53, 2739, 12.00, 1.17), (59, 3104, 12.00, 1.16), (61, 3213, 11.84, 1.17),
]

_ACCEPTANCE = []


class PolyStore:
    """Phi_l computed once per session, with the total wall time of the batch."""

    def __init__(self):
        self.polys = {}
        self.elapsed = None

    def get(self, l):
        if l not in self.polys:
            self.polys[l] = modpoly.compute_phi(l)
        return self.polys[l]

    def compute_all(self, ls):
        if self.elapsed is None:
            t0 = time.perf_counter()
            for l in ls:
                self.get(l)
            self.elapsed = time.perf_counter() - t0
        return {l: self.polys[l] for l in ls}


_STORE = PolyStore()


@pytest.fixture(scope="session")
def polys():
    return _STORE


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per criterion; the lines are printed at the end of the run."""

    def report(name, ok, detail=""):
        _ACCEPTANCE.append((name, bool(ok), detail))
        return ok

    return report


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}".rstrip())
