"""Keyed random streams and the order-preserving parallel map."""

import numpy as np
import pytest

from surrogate_resilience import _rng
from surrogate_resilience._parallel import max_workers, pmap


def square(x):
    return x * x


def test_streams_are_keyed():
    a = _rng.stream(5, _rng.SYNTHETIC, 0).standard_normal(4)
    assert np.array_equal(a, _rng.stream(5, _rng.SYNTHETIC, 0).standard_normal(4))
    assert not np.array_equal(a, _rng.stream(5, _rng.SYNTHETIC, 1).standard_normal(4))
    assert not np.array_equal(a, _rng.stream(6, _rng.SYNTHETIC, 0).standard_normal(4))


def test_derived_seeds():
    s = _rng.derive_seed(1, _rng.SIM_ITERATION, 3)
    assert s == _rng.derive_seed(1, _rng.SIM_ITERATION, 3)
    assert 0 <= s < 2 ** 64
    assert s != _rng.derive_seed(1, _rng.SIM_ITERATION, 4)
    # the full unsigned 64-bit range is accepted
    _rng.stream(2 ** 64 - 1, 1)


def test_max_workers(monkeypatch):
    monkeypatch.delenv("RESILIENCE_THREADS", raising=False)
    assert max_workers() >= 1
    monkeypatch.setenv("RESILIENCE_THREADS", "3")
    assert max_workers() == 3
    for bad in ("0", "x"):
        monkeypatch.setenv("RESILIENCE_THREADS", bad)
        with pytest.raises(ValueError):
            max_workers()


@pytest.mark.parametrize("workers", [1, 2, 3])
def test_pmap_preserves_order(workers):
    assert pmap(square, range(11), workers) == [x * x for x in range(11)]
