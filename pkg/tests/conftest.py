import functools

import pytest

from xxzdrf import MomentumMap, ModelParams, build_atlas, solve_core

FIG1 = (0.57, 0.21)
FIG2_RIGHT = (-0.60, 0.30)


@functools.lru_cache(maxsize=None)
def solved(delta, density, N=128, strings=()):
    obs = solve_core(ModelParams.from_delta(delta, density=density, N=N, strings=strings))
    mm = MomentumMap(obs)
    return obs, mm, build_atlas(mm)


@functools.lru_cache(maxsize=None)
def free_fermions(h=2.0, J=1.0, N=128):
    obs = solve_core(ModelParams.from_delta(0.0, h=h, J=J, N=N))
    mm = MomentumMap(obs)
    return obs, mm, build_atlas(mm)


@pytest.fixture(scope="session")
def fig1():
    return solved(*FIG1)


@pytest.fixture(scope="session")
def fig2():
    return solved(*FIG2_RIGHT)


@pytest.fixture(scope="session", params=[FIG1, FIG2_RIGHT], ids=["fig1", "fig2"])
def reference(request):
    return solved(*request.param)


@pytest.fixture(scope="session")
def ff():
    return free_fermions()


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
