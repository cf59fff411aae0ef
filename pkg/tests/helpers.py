"""Shared test fixtures: random sparse streams and a reference selector."""
from __future__ import annotations

from typing import List

import numpy as np

from ofs.core import SparseExample
from ofs.learners import ArowModel


def random_example(rng: np.random.Generator, d: int, max_nnz: int = 12) -> SparseExample:
    k = int(rng.integers(1, max_nnz + 1))
    k = min(k, d)
    idx = np.sort(rng.choice(d, size=k, replace=False)).astype(np.int64)
    vals = rng.standard_normal(k)
    vals[vals == 0.0] = 1.0
    label = 1 if rng.random() < 0.5 else -1
    return SparseExample(label, idx, vals)


def random_stream(rng: np.random.Generator, n: int, d: int, max_nnz: int = 12) -> List[SparseExample]:
    return [random_example(rng, d, max_nnz) for _ in range(n)]


def bulk_stream(rng: np.random.Generator, n: int, d: int, m: int) -> List[SparseExample]:
    """n examples over d dimensions with exactly m nonzeros each, built in bulk."""
    idx = np.argpartition(rng.random((n, d)), m - 1, axis=1)[:, :m]
    idx.sort(axis=1)
    idx = idx.astype(np.int64)
    vals = rng.standard_normal((n, m))
    vals[vals == 0.0] = 1.0
    labels = rng.integers(0, 2, size=n) * 2 - 1
    return [SparseExample(int(labels[r]), idx[r], vals[r]) for r in range(n)]


class SortSelectSofs:
    """Sort-based reference for the budgeted second-order learner.

    Shares the closed-form update with ArowModel but reselects the kept
    set from scratch after every update: all touched coordinates are
    ordered by (covariance, index) ascending, the first B keep their
    weights, the rest are zeroed. Quadratic-ish and only fit for tests.
    """

    def __init__(self, budget: int, gamma: float = 1.0):
        self.inner = ArowModel(gamma=gamma)
        self.budget = int(budget)
        self._touched = np.zeros(0, dtype=bool)

    @property
    def weights(self):
        return self.inner.mu

    def update(self, ex: SparseExample) -> float:
        margin = self.inner.update(ex)
        if ex.label * margin >= 1.0 or len(ex.indices) == 0:
            return margin
        n = len(self.inner.mu)
        if len(self._touched) < n:
            grown = np.zeros(n, dtype=bool)
            grown[: len(self._touched)] = self._touched
            self._touched = grown
        self._touched[ex.indices] = True
        touched = np.flatnonzero(self._touched)
        if len(touched) > self.budget:
            sig = self.inner.sigma.array[touched]
            order = np.argsort(sig, kind="stable")  # ties keep the lower index
            self.inner.mu.array[touched[order[self.budget :]]] = 0.0
        return margin
