import os

import hypothesis
import numpy as np
import pytest

from crnrd.fixtures import NETWORKS, load_fixture

np.seterr(all="warn", under="ignore")

hypothesis.settings.register_profile("default", max_examples=50, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

BALANCED = ["NET_AB", "NET_TRI", "NET_4SP", "NET_QUINTIC"]


@pytest.fixture(params=sorted(NETWORKS))
def any_net(request):
    return load_fixture(request.param)


@pytest.fixture(params=BALANCED)
def balanced_net(request):
    return load_fixture(request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def pytest_terminal_summary(terminalreporter):
    from tests import acceptance_log

    if not acceptance_log.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(acceptance_log.RESULTS):
        ok, desc, detail = acceptance_log.RESULTS[num]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {num:2d}: {desc} [{detail}]")
