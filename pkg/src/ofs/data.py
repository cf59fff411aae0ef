"""Dataset ingestion (libsvm text, plain or gzip) and synthetic streams."""
from __future__ import annotations

import gzip
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, List, Optional

import numpy as np

from .core import SparseExample

_LABEL_MAP = {"+1": 1, "1": 1, "-1": -1, "0": -1}


class LibsvmFormatError(ValueError):
    """Malformed libsvm input; carries the 1-based source line number."""

    def __init__(self, message: str, line_no: int = 0):
        super().__init__(f"line {line_no}: {message}" if line_no else message)
        self.line_no = line_no


def parse_libsvm_line(line: str, line_no: int = 0) -> Optional[SparseExample]:
    """Parse one ``<label> <idx>:<val> ...`` line.

    Labels map {1, +1} to +1 and {0, -1} to -1. Feature indices are 1-based
    and strictly ascending on disk and are shifted to 0-based; zero-valued
    entries are dropped. Blank lines yield None. Anything else raises
    :class:`LibsvmFormatError` pointing at the offending token.
    """
    tokens = line.split()
    if not tokens:
        return None
    label = _LABEL_MAP.get(tokens[0])
    if label is None:
        raise LibsvmFormatError(f"unrecognised label {tokens[0]!r}", line_no)
    idx: List[int] = []
    vals: List[float] = []
    last = 0
    for pos, tok in enumerate(tokens[1:], start=2):
        part = tok.partition(":")
        try:
            i = int(part[0])
            v = float(part[2])
        except ValueError:
            raise LibsvmFormatError(f"malformed feature at token {pos}: {tok!r}", line_no) from None
        if i < 1:
            raise LibsvmFormatError(f"feature index must be >= 1, got {i} at token {pos}", line_no)
        if i <= last:
            raise LibsvmFormatError(
                f"feature indices must be strictly ascending, got {i} after {last} at token {pos}",
                line_no,
            )
        last = i
        if v != 0.0:
            idx.append(i - 1)
            vals.append(v)
    return SparseExample(label, np.asarray(idx, dtype=np.int64), np.asarray(vals, dtype=np.float64))


def _open_text(path, mode: str = "rt"):
    if str(path).endswith(".gz"):
        return gzip.open(path, mode, encoding="ascii")
    return open(path, mode, encoding="ascii")


def read_libsvm(path) -> Iterator[SparseExample]:
    """Yield examples from a libsvm file in order; gzip when path ends .gz."""
    with _open_text(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            ex = parse_libsvm_line(line, line_no)
            if ex is not None:
                yield ex


def write_libsvm(examples: Iterable[SparseExample], path) -> None:
    """Write examples as libsvm text (1-based indices, repr floats)."""
    with _open_text(path, "wt") as fh:
        for ex in examples:
            feats = " ".join(f"{i + 1}:{v!r}" for i, v in ex.pairs())
            fh.write(f"{ex.label:+d} {feats}".rstrip() + "\n")


class DatasetStream:
    """Re-iterable ordered source of examples.

    Iterating twice yields the identical sequence; the fold splitter and
    repeated sweeps rely on that. ``dim`` is the declared dimensionality
    when known (synthetic data knows it, files usually do not) and ``path``
    is set for file-backed streams.
    """

    def __init__(
        self,
        factory: Callable[[], Iterator[SparseExample]],
        *,
        dim: Optional[int] = None,
        path: Optional[str] = None,
    ):
        self._factory = factory
        self.dim = dim
        self.path = path

    def __iter__(self) -> Iterator[SparseExample]:
        return self._factory()

    @classmethod
    def from_file(cls, path, dim: Optional[int] = None) -> "DatasetStream":
        return cls(lambda: read_libsvm(path), dim=dim, path=str(path))

    @classmethod
    def from_examples(cls, examples: Iterable[SparseExample], dim: Optional[int] = None) -> "DatasetStream":
        materialized = list(examples)
        return cls(lambda: iter(materialized), dim=dim)

    def materialize(self) -> List[SparseExample]:
        return list(self)


@dataclass(frozen=True)
class SyntheticSpec:
    """Shape of a synthetic dataset.

    ``idim`` informative coordinates appear in every instance; ``ndim``
    noise coordinates are resampled per instance from outside the
    informative set. Labels are a deterministic function of the informative
    part, so the stream is separable there by construction.
    """

    n_train: int
    n_test: int
    dim: int
    idim: int
    ndim: int
    seed: int = 0

    def __post_init__(self):
        if self.n_train < 1 or self.n_test < 1:
            raise ValueError("n_train and n_test must be positive")
        if self.dim < 1:
            raise ValueError("dim must be positive")
        if self.idim < 1:
            raise ValueError("idim must be positive")
        if self.ndim < 0:
            raise ValueError("ndim must be non-negative")
        if self.idim + self.ndim > self.dim:
            raise ValueError(
                f"idim + ndim = {self.idim + self.ndim} exceeds dim = {self.dim}"
            )

    @property
    def nnz_per_example(self) -> int:
        return self.idim + self.ndim


_CHUNK = 256


class SyntheticGenerator:
    """Seeded generator for sparse, linearly separable streams.

    One root seed fixes the informative index set and the ground-truth
    weights (uniform on [0, 1)); train and test streams then use derived
    seeds so they can be re-iterated independently and reproducibly.
    Feature values are standard normal. The label is the sign of the
    ground-truth dot product over the informative coordinates only, with
    sign(0) mapping to +1.
    """

    def __init__(self, spec: SyntheticSpec):
        self.spec = spec
        root = np.random.default_rng([spec.seed, 0])
        self.informative = np.sort(root.choice(spec.dim, size=spec.idim, replace=False)).astype(np.int64)
        self.w_star = root.uniform(0.0, 1.0, size=spec.idim)
        # complement remap table: entry i says how many informative indices
        # sit at or below the i-th gap, see _noise_indices
        self._gaps = self.informative - np.arange(spec.idim, dtype=np.int64)

    def train_stream(self) -> DatasetStream:
        return DatasetStream(lambda: self._stream(1, self.spec.n_train), dim=self.spec.dim)

    def test_stream(self) -> DatasetStream:
        return DatasetStream(lambda: self._stream(2, self.spec.n_test), dim=self.spec.dim)

    def _stream(self, key: int, n: int) -> Iterator[SparseExample]:
        spec = self.spec
        rng = np.random.default_rng([spec.seed, key])
        S = self.informative
        idim, ndim = spec.idim, spec.ndim
        done = 0
        while done < n:
            c = min(_CHUNK, n - done)
            inf_vals = rng.standard_normal((c, idim))
            noise_idx = self._noise_indices(rng, c)
            noise_vals = rng.standard_normal((c, ndim))
            margins = inf_vals @ self.w_star
            labels = np.where(margins >= 0.0, 1, -1)
            for r in range(c):
                idx = np.concatenate([S, noise_idx[r]])
                vals = np.concatenate([inf_vals[r], noise_vals[r]])
                order = np.argsort(idx, kind="stable")
                yield SparseExample(int(labels[r]), idx[order], vals[order])
            done += c

    def _noise_indices(self, rng: np.random.Generator, c: int) -> np.ndarray:
        """Per-row noise coordinates: unique, uniform outside the informative set."""
        spec = self.spec
        ndim = spec.ndim
        if ndim == 0:
            return np.empty((c, 0), dtype=np.int64)
        m = spec.dim - spec.idim  # size of the complement
        if m >= ndim * (ndim - 1):
            # collisions are rare when the complement dwarfs the draw count;
            # rows conditioned on being duplicate-free are uniform subsets
            rows = rng.integers(0, m, size=(c, ndim))
            if ndim > 1:
                srt = np.sort(rows, axis=1)
                for r in np.flatnonzero((np.diff(srt, axis=1) == 0).any(axis=1)):
                    while True:
                        row = rng.integers(0, m, size=ndim)
                        if len(np.unique(row)) == ndim:
                            rows[r] = row
                            break
        else:
            rows = np.stack([rng.permutation(m)[:ndim] for _ in range(c)])
        # map complement rank v to the v-th non-informative index
        shift = np.searchsorted(self._gaps, rows.ravel(), side="right")
        return (rows + shift.reshape(rows.shape)).astype(np.int64)


def generate_synthetic(spec: SyntheticSpec):
    """Build (train_stream, test_stream, informative_indices) for ``spec``."""
    gen = SyntheticGenerator(spec)
    return gen.train_stream(), gen.test_stream(), frozenset(gen.informative.tolist())
