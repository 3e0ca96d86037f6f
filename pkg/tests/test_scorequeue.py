import numpy as np
import pytest
from hypothesis import strategies as st
from hypothesis.stateful import RuleBasedStateMachine, initialize, invariant, rule

from gmcloss import numgrad as ng
from gmcloss.scorequeue import ScoreQueue, capacity_from_ratio


class QueueVsList(RuleBasedStateMachine):
    @initialize(k=st.integers(1, 12))
    def setup(self, k):
        self.k = k
        self.queue = ScoreQueue(k)
        self.model = []
        self.counter = 0

    @rule(b=st.integers(0, 30))
    def push(self, b):
        preds = np.arange(self.counter, self.counter + b, dtype=np.float64)
        gts = -preds
        self.counter += b
        self.queue.push_batch(preds, gts)
        self.model = (self.model + list(zip(preds, gts)))[-self.k:]

    @invariant()
    def contents_match(self):
        p, g = self.queue.snapshot()
        assert len(self.queue) == len(self.model) <= self.k
        assert list(zip(p, g)) == self.model


TestQueueVsList = QueueVsList.TestCase


def test_snapshot_is_a_copy_and_detached():
    q = ScoreQueue(3)
    t = ng.Tensor(np.array([1.0, 2.0]), requires_grad=True)
    q.push_batch(t, np.array([0.0, 0.0]))
    p, _ = q.snapshot()
    p[0] = 99.0
    assert q.snapshot()[0].tolist() == [1.0, 2.0]
    assert isinstance(q.snapshot()[0], np.ndarray)


def test_capacity_from_ratio():
    assert capacity_from_ratio(0.6, 2000) == 1200
    assert capacity_from_ratio(0.6, 2500 * 4 // 5) == 1200
    assert capacity_from_ratio(0.01, 10) == 1
    for bad in (0.0, -0.1, 1.5):
        with pytest.raises(ValueError):
            capacity_from_ratio(bad, 100)
    with pytest.raises(ValueError):
        capacity_from_ratio(0.5, 0)


def test_invalid_queue_usage():
    with pytest.raises(ValueError):
        ScoreQueue(0)
    with pytest.raises(ValueError):
        ScoreQueue(2).push_batch(np.ones(2), np.ones(3))
    assert "capacity=2" in repr(ScoreQueue(2))
