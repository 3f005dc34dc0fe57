from collections import OrderedDict

import numpy as np
import pytest

from hofv import kernels

# criterion -> list of (passed, detail), filled by test_acceptance
ACCEPTANCE = OrderedDict()

BACKENDS = ["python"] + (["cython"] if kernels.compiled_backend is not None else [])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


def acceptance_lines():
    lines = []
    for crit, items in ACCEPTANCE.items():
        ok = all(p for p, _ in items)
        failed = [d for p, d in items if not p]
        detail = f"{len(items) - len(failed)}/{len(items)} checks"
        if failed:
            detail += "; failing: " + "; ".join(failed)
        lines.append(f"{'PASS' if ok else 'FAIL'}  criterion {crit}  ({detail})")
    return lines


def pytest_terminal_summary(terminalreporter):
    lines = acceptance_lines()
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
