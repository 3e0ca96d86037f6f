import numpy as np
import pytest

from gmcloss import numgrad as ng
from gmcloss.numgrad import Tensor


def test_detects_a_wrong_gradient():
    def bad(t):
        # forward is sum(x^2) but the recorded backward claims 3x
        return ng.tensor._make(np.sum(t.data ** 2), (t,), lambda g: (g * 3.0 * t.data,), "bad")

    assert ng.finite_difference_check(bad, np.array([1.0, 2.0])) > 0.1


def test_restores_parameter_state():
    p = Tensor(np.array([1.0, 2.0]))
    ng.check_params(lambda ps: ng.sum_(ng.square(ps[0])), [p])
    assert p.requires_grad is False
    assert p._grad is None
    assert p.data.tolist() == [1.0, 2.0]


def test_coordinate_subset_and_errors():
    p = Tensor(np.arange(6.0).reshape(2, 3))
    assert ng.check_params(lambda ps: ng.sum_(ng.exp(ps[0] * 0.1)), [p], coords={0: [0, 5]}) < 1e-8
    with pytest.raises(ValueError):
        ng.finite_difference_check(lambda t: ng.sum_(t), np.ones(2), eps=0.0)
    with pytest.raises(ng.GradientCheckError):
        ng.finite_difference_check(lambda t: ng.sum_(t) * np.inf, np.array([1.0]))
