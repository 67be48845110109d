import os
import sys

import pytest
from hypothesis import HealthCheck, settings

from hcx.exactcore import BaseRing
from hcx.heisenberg import HeisenbergAlgebra, Subspace, SymplecticSpace

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(key, title): one acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or not (rep.when == "call" or rep.failed):
        return
    if hasattr(rep, "wasxfail"):
        status = "XFAIL"
    else:
        status = "PASS" if rep.passed else "FAIL"
    key, title = mark.args
    if _CRITERIA.get(key, ("", "PASS"))[1] != "FAIL":
        _CRITERIA[key] = (title, status)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_CRITERIA, key=lambda k: (int(str(k).split(".")[0]), str(k))):
        title, status = _CRITERIA[key]
        terminalreporter.write_line(f"criterion {str(key):>4}: {status:5}  {title}")


def std_space(ne: int, no: int, ring: BaseRing = None) -> SymplecticSpace:
    """e_i, f_i even with (f_i, e_i) = 1; a_j, b_j odd with (a_j, b_j) = 1."""
    ring = ring or BaseRing()
    names = ([f"e{i + 1}" for i in range(ne)] + [f"f{i + 1}" for i in range(ne)]
             + [f"a{i + 1}" for i in range(no)] + [f"b{i + 1}" for i in range(no)])
    n = len(names)
    G = [[0] * n for _ in range(n)]
    for i in range(ne):
        G[i][ne + i] = -1
        G[ne + i][i] = 1
    o = 2 * ne
    for i in range(no):
        G[o + i][o + no + i] = 1
        G[o + no + i][o + i] = 1
    return SymplecticSpace(ring, names, [0] * (2 * ne) + [1] * (2 * no), G)


def span(sp: SymplecticSpace, gens, name=""):
    """Subspace of H(sp); gens are basis names or Vec objects."""
    H = HeisenbergAlgebra(sp)
    vecs = [sp.basis_vec(g) if isinstance(g, str) else g for g in gens]
    return Subspace(H, vecs, name)
