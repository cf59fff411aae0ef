"""Bounded max-heap over the smallest confidence values offered so far.

The tracker keeps at most ``capacity`` (feature, value) entries together
with an O(1) membership map from feature index to heap slot. Offered values
for an already tracked feature may only decrease; that one-way traffic is
what keeps maintenance cheap. Shrinking a max-heap entry can only break the
heap property toward the leaves, so a single sift-down repairs it, and the
admission threshold at the root only ever moves down within a stream.
"""
from __future__ import annotations

from enum import Enum
from typing import Dict, List, Optional, Tuple


class Outcome(Enum):
    """What happened to a (feature, value) pair handed to ``offer``."""

    ADJUSTED_IN_PLACE = "adjusted_in_place"
    ADMITTED = "admitted"
    ADMITTED_EVICTING = "admitted_evicting"
    REJECTED = "rejected"


class TopBTracker:
    """Tracks the ``capacity`` features with the smallest offered values.

    Population is lazy: only features that have been offered occupy slots,
    and everything is admitted until the heap is full. Once full, a new
    feature displaces the current maximum only if its value is strictly
    smaller; ties keep the incumbent.
    """

    __slots__ = ("capacity", "_vals", "_keys", "_slot", "comparisons")

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self.capacity = int(capacity)
        self._vals: List[float] = []
        self._keys: List[int] = []
        self._slot: Dict[int, int] = {}
        # running count of value comparisons, for complexity checks
        self.comparisons = 0

    def __len__(self) -> int:
        return len(self._vals)

    def contains(self, idx: int) -> bool:
        return idx in self._slot

    __contains__ = contains

    def value_of(self, idx: int) -> float:
        return self._vals[self._slot[idx]]

    def limit(self) -> Optional[float]:
        """Current admission threshold: the root value once the heap is full.

        While the heap is below capacity there is no threshold (everything
        is admitted) and None is returned.
        """
        if len(self._vals) < self.capacity:
            return None
        return self._vals[0]

    def indices(self) -> List[int]:
        return list(self._keys)

    def items(self) -> List[Tuple[int, float]]:
        return list(zip(self._keys, self._vals))

    def offer(self, idx: int, value: float) -> Tuple[Outcome, Optional[int]]:
        """Feed one (feature, value) observation to the tracker.

        Returns the outcome plus the evicted feature index when admission
        displaced one. Offering a larger value for a tracked feature is a
        contract violation and raises ``ValueError``.
        """
        pos = self._slot.get(idx)
        if pos is not None:
            self.comparisons += 1
            if value > self._vals[pos]:
                raise ValueError(
                    f"tracked value for feature {idx} increased "
                    f"({self._vals[pos]} -> {value}); offers must be non-increasing"
                )
            self._vals[pos] = value
            self._sift_down(pos)
            return Outcome.ADJUSTED_IN_PLACE, None
        n = len(self._vals)
        if n < self.capacity:
            self._vals.append(value)
            self._keys.append(idx)
            self._slot[idx] = n
            self._sift_up(n)
            return Outcome.ADMITTED, None
        self.comparisons += 1
        if value < self._vals[0]:
            evicted = self._keys[0]
            del self._slot[evicted]
            self._vals[0] = value
            self._keys[0] = idx
            self._slot[idx] = 0
            self._sift_down(0)
            return Outcome.ADMITTED_EVICTING, evicted
        return Outcome.REJECTED, None

    def _sift_down(self, pos: int) -> None:
        vals = self._vals
        keys = self._keys
        slot = self._slot
        n = len(vals)
        v = vals[pos]
        k = keys[pos]
        child = 2 * pos + 1
        while child < n:
            right = child + 1
            if right < n:
                self.comparisons += 1
                if vals[right] > vals[child]:
                    child = right
            self.comparisons += 1
            if vals[child] <= v:
                break
            vals[pos] = vals[child]
            keys[pos] = keys[child]
            slot[keys[pos]] = pos
            pos = child
            child = 2 * pos + 1
        vals[pos] = v
        keys[pos] = k
        slot[k] = pos

    def _sift_up(self, pos: int) -> None:
        vals = self._vals
        keys = self._keys
        slot = self._slot
        v = vals[pos]
        k = keys[pos]
        while pos > 0:
            parent = (pos - 1) >> 1
            self.comparisons += 1
            if vals[parent] >= v:
                break
            vals[pos] = vals[parent]
            keys[pos] = keys[parent]
            slot[keys[pos]] = pos
            pos = parent
        vals[pos] = v
        keys[pos] = k
        slot[k] = pos

    def __repr__(self) -> str:
        return f"TopBTracker(capacity={self.capacity}, size={len(self._vals)})"
