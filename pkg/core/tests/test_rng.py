"""
Tests for seeded streams and fixed-order reductions.
"""

import numpy as np
import pytest

from core.exceptions import KineticException, ScenarioValidationError, StepRejected
from core.reductions import cascade_sum
from core.rng import make_stream, shard_sizes, spawn_streams


class TestStreams:
    """Tests for make_stream / spawn_streams"""

    def test_same_seed_same_draws(self):
        """Two streams with the same seed and keys draw identical numbers"""
        a = make_stream(42, 1, 2).random(5)
        b = make_stream(42, 1, 2).random(5)

        assert np.array_equal(a, b)

    def test_keys_separate_streams(self):
        """Different key paths give different draws"""
        a = make_stream(42, 1).random(5)
        b = make_stream(42, 2).random(5)

        assert not np.array_equal(a, b)

    def test_spawned_children_are_reproducible(self):
        """Child streams depend only on seed, keys and position"""
        first = [s.random(3) for s in spawn_streams(7, 3, 9)]
        second = [s.random(3) for s in spawn_streams(7, 3, 9)]

        for x, y in zip(first, second):
            assert np.array_equal(x, y)
        assert not np.array_equal(first[0], first[1])


class TestShardSizes:
    """Tests for shard_sizes"""

    def test_sizes_sum_to_total(self):
        """Shards cover every sample, larger shards first"""
        sizes = shard_sizes(10, 4)

        assert sizes == [3, 3, 2, 2]
        assert sum(sizes) == 10

    def test_more_shards_than_samples(self):
        """Shard count is capped at the sample count"""
        assert shard_sizes(2, 8) == [1, 1]


class TestCascadeSum:
    """Tests for the fixed-order reductions"""

    def test_matches_plain_sum(self):
        """cascade_sum agrees with the exact sum of small integers"""
        values = np.arange(100, dtype=float)

        assert cascade_sum(values) == 4950.0
        assert np.array_equal(cascade_sum(values.reshape(10, 10), axis=1), values.reshape(10, 10).sum(axis=1))

    def test_layout_independent(self):
        """Non-contiguous input gives the same result as its contiguous copy"""
        values = make_stream(0).random((50, 40))

        assert cascade_sum(values.T) == cascade_sum(np.ascontiguousarray(values.T))


class TestExceptions:
    """Tests for the exception family"""

    def test_codes(self):
        """Subclasses carry their fixed error codes"""
        assert StepRejected("x").error_code == "step_rejected"
        assert KineticException("x", error_code="invalid_input").context == {}

    def test_validation_error_keeps_every_violation(self):
        """ScenarioValidationError lists all violations"""
        error = ScenarioValidationError(["a.b: bad", "c.d: worse"])

        assert error.violations == ["a.b: bad", "c.d: worse"]
        assert error.error_code == "config_error"
        assert "c.d: worse" in str(error)

    def test_raise_and_catch_as_base(self):
        """Subclasses are caught as KineticException"""
        with pytest.raises(KineticException):
            raise StepRejected("no convergence", context={"dt": 0.1})
