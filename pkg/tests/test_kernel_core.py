import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rkn import kernel_core
from rkn.kernel_core import A3Witness, NoWitness, deriv1, evaluate, logistic, relu, validate_a3

reals = st.floats(-50, 50, allow_nan=False)


def test_relu_values():
    assert evaluate(relu(), 2.5) == 2.5
    assert evaluate(relu(), -1.0) == 0.0
    assert deriv1(relu(), 0.0) == 0.0
    np.testing.assert_array_equal(evaluate(relu(), np.array([-1.0, 0.0, 3.0])), [0, 0, 3])


def test_logistic_values():
    assert evaluate(logistic(), 0.0) == pytest.approx(0.5)
    assert deriv1(logistic(), 0.0) == pytest.approx(0.5)
    assert logistic().bounded and not relu().bounded


def test_metadata():
    assert (relu().lipschitz_L, relu().sup_bound) == (1.0, math.inf)
    assert (logistic().lipschitz_L, logistic().sup_bound) == (0.5, 1.0)
    assert kernel_core.from_name("logistic").kind is kernel_core.KernelKind.LOGISTIC
    with pytest.raises(ValueError):
        kernel_core.from_name("tanh")


@pytest.mark.parametrize("spec", [relu(), logistic()], ids=["relu", "logistic"])
@given(s=reals, s2=reals, t=reals)
def test_lipschitz_in_first_argument(spec, s, s2, t):
    assert abs(spec(s, t) - spec(s2, t)) <= spec.lipschitz_L * abs(s - s2) + 1e-12


@given(s=reals, t=reals)
def test_logistic_within_sup_bound(s, t):
    assert 0.0 <= logistic()(s, t) <= logistic().sup_bound


@given(s=st.floats(-10, 10))
def test_logistic_derivative_matches_finite_difference(s):
    h = 1e-6
    fd = (evaluate(logistic(), s + h) - evaluate(logistic(), s - h)) / (2 * h)
    assert deriv1(logistic(), s) == pytest.approx(fd, abs=1e-8)


def test_witness_constants_match_closed_form():
    w = validate_a3(logistic(), 2.0, 3.5)
    # K increasing, K' decreasing on (2, 3.5): infima at the left and right ends.
    assert w.c1 == pytest.approx((1 + math.tanh(2.0)) / 2, rel=1e-12)
    assert w.c2 == pytest.approx(0.5 / math.cosh(3.5) ** 2, rel=1e-12)
    assert w.c1 == pytest.approx(0.98201, abs=1e-5)
    assert w.c2 == pytest.approx(0.0018204, abs=1e-7)


def test_witness_rejections():
    with pytest.raises(NoWitness):
        validate_a3(relu())
    with pytest.raises(NoWitness):
        validate_a3(logistic(), 2.0, 2.5)
    with pytest.raises(ValueError):
        A3Witness(0.0, 3.0, 2.0, 1.0, 1.0)


def test_witness_contains_is_open():
    w = validate_a3(logistic())
    np.testing.assert_array_equal(w.contains([2.0, 2.1, 3.5]), [False, True, False])
