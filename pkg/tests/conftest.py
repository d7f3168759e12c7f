import os

import pytest
from hypothesis import HealthCheck, settings

from rkn.kernel_core import logistic, validate_a3
from rkn.layered_kernel import build_general_context, build_relu_context
from rkn.param_measure import UniformComponent
from rkn.rkhs_repr import build_general_target, build_tent_target

settings.register_profile("default", max_examples=50, deadline=None,
                          suppress_health_check=[HealthCheck.function_scoped_fixture])
settings.register_profile("ci", max_examples=200, deadline=None,
                          suppress_health_check=[HealthCheck.function_scoped_fixture])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

GENERAL_WEIGHTS = (0.998, 0.0005, 0.0005, 0.0005, 0.0005)


@pytest.fixture(scope="session")
def relu_b7():
    ctx, consts = build_relu_context(7.0)
    return ctx, consts, build_tent_target(consts, ctx.measure)


@pytest.fixture(scope="session")
def relu_b7_gauss():
    ctx, consts = build_relu_context(7.0, uni=UniformComponent.STANDARD_GAUSSIAN)
    return ctx, consts, build_tent_target(consts, ctx.measure)


@pytest.fixture(scope="session")
def witness():
    return validate_a3(logistic(), 2.0, 3.5, 0.0)


@pytest.fixture(scope="session")
def general_case(witness):
    ctx, consts = build_general_context(witness, 2.4, GENERAL_WEIGHTS)
    return ctx, consts, build_general_target(witness, consts, 1.0, GENERAL_WEIGHTS[4])


def pytest_terminal_summary(terminalreporter):
    lines = getattr(__import__("sys").modules.get("test_acceptance"), "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
