import numpy as np
import pytest

from dwpcure.data import Dataset


def test_basic_properties():
    d = Dataset([1.0, 2.0, 3.0], [1, 0, 1], [[0.1], [0.2], [0.3]], [[1.0], [0.0], [1.0]])
    assert d.n == 3
    assert d.q1 == d.q2 == 1
    assert d.n_events == 2
    assert d.censoring_fraction == pytest.approx(1 / 3)
    assert d.x_names == ["x1"] and d.z_names == ["z1"]
    assert list(d.event_mask) == [True, False, True]


def test_nonpositive_time_names_row():
    with pytest.raises(ValueError, match="row 1"):
        Dataset([1.0, 0.0, 3.0], [1, 0, 1], np.zeros((3, 1)), np.zeros((3, 1)))


def test_bad_delta_rejected():
    with pytest.raises(ValueError, match="delta"):
        Dataset([1.0, 2.0], [1, 2], np.zeros((2, 1)), np.zeros((2, 1)))


def test_name_collision_rejected():
    with pytest.raises(ValueError, match="disjoint"):
        Dataset(
            [1.0], [1], np.zeros((1, 1)), np.zeros((1, 1)),
            x_names=["a"], z_names=["a"],
        )


def test_length_mismatch():
    with pytest.raises(ValueError):
        Dataset([1.0, 2.0], [1], np.zeros((2, 1)), np.zeros((2, 1)))


def test_equality_roundtrip():
    a = Dataset([1.0, 2.0], [1, 0], [[0.5], [0.6]], [[1.0], [0.0]])
    b = Dataset([1.0, 2.0], [1, 0], [[0.5], [0.6]], [[1.0], [0.0]])
    assert a == b
    c = Dataset([1.0, 2.1], [1, 0], [[0.5], [0.6]], [[1.0], [0.0]])
    assert a != c
