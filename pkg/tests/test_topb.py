import numpy as np
import pytest

from ofs.topb import Outcome, TopBTracker


class TestConstruction:
    def test_empty(self):
        t = TopBTracker(5)
        assert len(t) == 0
        assert t.capacity == 5
        assert t.limit() is None

    def test_zero_capacity_rejected(self):
        with pytest.raises(ValueError):
            TopBTracker(0)

    def test_capacity_one(self):
        t = TopBTracker(1)
        t.offer(3, 0.5)
        out, evicted = t.offer(4, 0.4)
        assert out is Outcome.ADMITTED_EVICTING
        assert evicted == 3
        assert t.indices() == [4]


class TestOffer:
    def test_admission_sequence(self):
        t = TopBTracker(2)
        assert t.offer(1, 0.9) == (Outcome.ADMITTED, None)
        assert t.offer(2, 0.8) == (Outcome.ADMITTED, None)
        out, evicted = t.offer(3, 0.85)
        assert out is Outcome.ADMITTED_EVICTING
        assert evicted == 1
        assert dict(t.items()) == {2: 0.8, 3: 0.85}

    def test_adjust_in_place(self):
        t = TopBTracker(2)
        t.offer(2, 0.8)
        out, evicted = t.offer(2, 0.7)
        assert out is Outcome.ADJUSTED_IN_PLACE
        assert evicted is None
        assert t.value_of(2) == 0.7

    def test_reject_at_or_above_root(self):
        t = TopBTracker(2)
        t.offer(1, 0.9)
        t.offer(2, 0.8)
        assert t.offer(4, 0.95) == (Outcome.REJECTED, None)
        assert t.offer(4, 0.9) == (Outcome.REJECTED, None)  # tie keeps incumbent
        assert t.contains(1)

    def test_monotonic_violation_raises(self):
        t = TopBTracker(2)
        t.offer(1, 0.5)
        with pytest.raises(ValueError):
            t.offer(1, 0.6)

    def test_contains_lifecycle(self):
        t = TopBTracker(1)
        assert not t.contains(3)
        t.offer(3, 0.5)
        assert t.contains(3)
        assert 3 in t
        t.offer(9, 0.1)
        assert not t.contains(3)
        assert t.contains(9)


class TestLimit:
    def test_absent_until_full(self):
        t = TopBTracker(2)
        assert t.limit() is None
        t.offer(0, 0.8)
        assert t.limit() is None
        t.offer(1, 0.9)
        assert t.limit() == 0.9

    def test_tracks_root_after_churn(self):
        t = TopBTracker(2)
        t.offer(0, 0.8)
        t.offer(1, 0.9)
        t.offer(2, 0.85)
        assert t.limit() == 0.85
        t.offer(2, 0.1)
        assert t.limit() == 0.8


def check_heap_and_slots(t: TopBTracker):
    vals = t._vals
    keys = t._keys
    assert len(vals) == len(keys) == len(t._slot)
    for pos in range(1, len(vals)):
        assert vals[(pos - 1) >> 1] >= vals[pos]
    for pos, key in enumerate(keys):
        assert t._slot[key] == pos


class TestAgainstSortOracle:
    """Random monotone offer sequences vs keeping the B smallest by sort."""

    @pytest.mark.parametrize("capacity", [1, 2, 5, 16])
    def test_contents_match_sorted_smallest(self, capacity):
        rng = np.random.default_rng(100 + capacity)
        for trial in range(250):  # 4 capacities x 250 = 1000 sequences
            t = TopBTracker(capacity)
            current = {}  # idx -> latest offered value
            n_offers = int(rng.integers(1, 201))
            universe = int(rng.integers(max(2, capacity), 40))
            for _ in range(n_offers):
                idx = int(rng.integers(0, universe))
                if idx in t:
                    value = t.value_of(idx) * float(rng.uniform(0.3, 1.0))
                else:
                    value = float(rng.uniform(0.01, 1.0))
                out, evicted = t.offer(idx, value)
                current[idx] = value
                check_heap_and_slots(t)
                if evicted is not None:
                    assert out is Outcome.ADMITTED_EVICTING
                # kept set == B smallest of the latest offered values; the
                # drawn values are continuous so ties never materialize
                order = sorted(current, key=current.get)
                assert set(t.indices()) == set(order[: capacity])

    def test_exact_smallest_when_offers_are_final(self):
        # one offer per index: the kept set must be exactly the B smallest
        rng = np.random.default_rng(7)
        for trial in range(200):
            capacity = int(rng.integers(1, 17))
            n = int(rng.integers(1, 60))
            vals = rng.uniform(0.0, 1.0, size=n)
            t = TopBTracker(capacity)
            for j in range(n):
                t.offer(j, float(vals[j]))
            order = np.argsort(vals, kind="stable")
            expect = set(order[:capacity].tolist())
            assert set(t.indices()) == expect


class TestComparisonBound:
    def test_per_offer_comparisons_logarithmic(self):
        for capacity in (1, 2, 5, 16, 64):
            # ceil(log2(capacity + 1)) == capacity.bit_length()
            bound = 2 * capacity.bit_length() + 2
            rng = np.random.default_rng(capacity)
            t = TopBTracker(capacity)
            for _ in range(2000):
                idx = int(rng.integers(0, 200))
                if idx in t:
                    value = t.value_of(idx) * 0.9
                else:
                    value = float(rng.uniform(0.01, 1.0))
                before = t.comparisons
                t.offer(idx, value)
                assert t.comparisons - before <= bound
