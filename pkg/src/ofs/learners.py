"""Online learners: budgeted second-order selection plus baselines.

All learners share one calling convention: ``update(example)`` consumes a
single labelled instance, mutates the model in place, and returns the raw
pre-update margin (weights dot features) so callers can count mistakes
without recomputing the dot product. ``predict`` never mutates.

Learners
--------
sofs  second-order update on the touched coordinates, then keep only the
      B most confident (smallest covariance) features seen so far
arow  the same second-order update without any selection
pet   mistake-driven perceptron truncated to the B largest magnitudes
fofs  mistake-driven regularised gradient step, projection onto the L2
      ball of radius 1/sqrt(lambda), then truncation; deliberately scales
      the full dense vector, so its per-update cost is O(d)
ogd   hinge-driven gradient descent with a decaying step, no selection
"""
from __future__ import annotations

import math
from typing import Dict, Optional

import numpy as np

from .core import DenseVector, SparseExample, sparse_dot
from .topb import Outcome, TopBTracker

ALGOS = ("sofs", "pet", "fofs", "ogd", "arow")
BUDGETED = frozenset({"sofs", "pet", "fofs"})

MODEL_MAGIC = "OFSMODEL"
MODEL_VERSION = "v1"


def truncate(w: DenseVector, budget: int) -> DenseVector:
    """Zero all but the ``budget`` largest-magnitude entries of ``w``.

    Ties at the cutoff keep the lower index. Idempotent; returns ``w`` for
    chaining.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    a = w.array
    if budget >= len(a) or int(np.count_nonzero(a)) <= budget:
        return w
    ab = np.abs(a)
    cut = np.partition(ab, len(ab) - budget)[len(ab) - budget]
    keep = ab > cut
    short = budget - int(np.count_nonzero(keep))
    if short > 0:
        ties = np.flatnonzero(ab == cut)
        keep[ties[:short]] = True
    a[~keep] = 0.0
    return w


class OnlineLearner:
    """Common prediction plumbing; subclasses implement ``update``."""

    algo = "?"
    budget: Optional[int] = None

    @property
    def weights(self) -> DenseVector:
        raise NotImplementedError

    def raw_margin(self, ex: SparseExample) -> float:
        return sparse_dot(self.weights, ex)

    def predict(self, ex: SparseExample) -> int:
        return 1 if self.raw_margin(ex) >= 0.0 else -1

    def update(self, ex: SparseExample) -> float:
        raise NotImplementedError

    def nonzero_count(self) -> int:
        return int(np.count_nonzero(self.weights.array))

    def selected_indices(self) -> frozenset:
        return frozenset(np.flatnonzero(self.weights.array).tolist())

    def hyperparams(self) -> Dict[str, float]:
        return {}

    def _grown_margin(self, ex: SparseExample) -> float:
        """Margin that also grows the state vectors to cover ``ex``."""
        idx = ex.indices
        if len(idx) == 0:
            return 0.0
        self._ensure(int(idx[-1]) + 1)
        return float(self.weights.array[idx] @ ex.values)

    def _ensure(self, n: int) -> None:
        self.weights.ensure(n)


class _SecondOrder(OnlineLearner):
    """Mean/covariance state shared by the sofs and arow learners.

    The covariance diagonal starts at 1 for every coordinate and can only
    shrink, and only when the coordinate is touched by an update.
    """

    def __init__(self, gamma: float = 1.0):
        if gamma <= 0.0:
            raise ValueError(f"gamma must be positive, got {gamma}")
        self.gamma = float(gamma)
        self.mu = DenseVector(fill=0.0)
        self.sigma = DenseVector(fill=1.0)

    @property
    def weights(self) -> DenseVector:
        return self.mu

    def _ensure(self, n: int) -> None:
        self.mu.ensure(n)
        self.sigma.ensure(n)

    def hyperparams(self) -> Dict[str, float]:
        return {"gamma": self.gamma}

    def _arow_step(self, idx: np.ndarray, vals: np.ndarray, y: int, margin: float) -> np.ndarray:
        """Closed-form second-order update on the active coordinates.

        Caller gates on positive squared hinge loss, i.e. y * margin < 1.
        Returns the refreshed covariance values aligned with ``idx``.
        """
        gamma = self.gamma
        sig = self.sigma.array
        sx = sig[idx]
        x2 = vals * vals
        beta = 1.0 / (float(sx @ x2) + gamma)
        g = (-2.0 * (1.0 - y * margin) * y) * vals
        mu = self.mu.array
        mu[idx] = mu[idx] - 0.5 * beta * sx * g
        new_sig = sx * gamma / (gamma + sx * x2)
        sig[idx] = new_sig
        return new_sig


class ArowModel(_SecondOrder):
    """Full-diagonal second-order learner; keeps every touched weight."""

    algo = "arow"

    def update(self, ex: SparseExample) -> float:
        margin = self._grown_margin(ex)
        y = ex.label
        if y * margin < 1.0 and len(ex.indices):
            self._arow_step(ex.indices, ex.values, y, margin)
        return margin


class SofsModel(_SecondOrder):
    """Second-order learner that keeps only the B most confident features.

    After the closed-form update, every touched coordinate offers its new
    covariance to a bounded max-heap tracker; weights of features that the
    tracker rejects or evicts are zeroed. A feature that later re-enters
    restarts from weight zero. At most ``budget`` weights are ever nonzero.
    """

    algo = "sofs"

    def __init__(self, budget: int, gamma: float = 1.0):
        super().__init__(gamma=gamma)
        self.tracker = TopBTracker(budget)
        self.budget = int(budget)

    def update(self, ex: SparseExample) -> float:
        y = ex.label
        margin = self._grown_margin(ex)
        if y * margin >= 1.0:
            return margin
        idx = ex.indices
        if len(idx) == 0:
            return margin
        new_sig = self._arow_step(idx, ex.values, y, margin)

        tracker = self.tracker
        offer = tracker.offer
        mu = self.mu.array
        pending = []
        # Refresh the tracked coordinates first so the admission decisions
        # below compare against current covariance values, not stale ones.
        for j, v in zip(idx.tolist(), new_sig.tolist()):
            if tracker.contains(j):
                offer(j, v)
            else:
                pending.append((j, v))
        if pending:
            root = tracker.limit()
            if root is not None:
                # The threshold only moves down within an example, so
                # anything at or above the current root can never get in.
                candidates = []
                for j, v in pending:
                    if v >= root:
                        mu[j] = 0.0
                    else:
                        candidates.append((j, v))
                pending = candidates
            for j, v in pending:
                out, evicted = offer(j, v)
                if out is Outcome.REJECTED:
                    mu[j] = 0.0
                elif evicted is not None:
                    mu[evicted] = 0.0
        return margin


class FirstOrderModel(OnlineLearner):
    """Dense weight vector with a constant learning rate."""

    def __init__(self, eta: float = 0.2, budget: Optional[int] = None):
        # eta = 0 yields a learner that never moves; useful as a degenerate
        # grid point, so only negative rates are rejected
        if eta < 0.0:
            raise ValueError(f"eta must be non-negative, got {eta}")
        self.eta = float(eta)
        self.budget = budget
        self.w = DenseVector(fill=0.0)

    @property
    def weights(self) -> DenseVector:
        return self.w

    def hyperparams(self) -> Dict[str, float]:
        return {"eta": self.eta}


class PetModel(FirstOrderModel):
    """Perceptron with truncation: gradient step on mistakes, keep top B."""

    algo = "pet"

    def __init__(self, budget: int, eta: float = 0.2):
        if budget is None or budget < 1:
            raise ValueError("pet requires a selection budget B >= 1")
        super().__init__(eta=eta, budget=int(budget))

    def update(self, ex: SparseExample) -> float:
        margin = self._grown_margin(ex)
        y = ex.label
        if (1 if margin >= 0.0 else -1) != y:
            self.w.array[ex.indices] += self.eta * y * ex.values
            truncate(self.w, self.budget)
        return margin


class FofsModel(FirstOrderModel):
    """First-order feature selection via regularised updates and projection.

    On a mistake the whole vector is decayed by (1 - lambda * eta), the
    gradient step is added, the result is projected onto the L2 ball of
    radius 1/sqrt(lambda), and finally truncated to the budget. The decay
    and projection touch every coordinate, so the update is O(d) by design.
    """

    algo = "fofs"

    def __init__(self, budget: int, eta: float = 0.2, lam: float = 0.01):
        if budget is None or budget < 1:
            raise ValueError("fofs requires a selection budget B >= 1")
        if lam <= 0.0:
            raise ValueError(f"lambda must be positive, got {lam}")
        super().__init__(eta=eta, budget=int(budget))
        self.lam = float(lam)

    def hyperparams(self) -> Dict[str, float]:
        return {"eta": self.eta, "lambda": self.lam}

    def update(self, ex: SparseExample) -> float:
        margin = self._grown_margin(ex)
        y = ex.label
        if (1 if margin >= 0.0 else -1) != y:
            a = self.w.array
            a *= 1.0 - self.lam * self.eta
            a[ex.indices] += self.eta * y * ex.values
            radius = 1.0 / math.sqrt(self.lam)
            norm = float(np.linalg.norm(a))
            if norm > radius:
                a *= radius / norm
            truncate(self.w, self.budget)
        return margin


class OgdModel(FirstOrderModel):
    """Online gradient descent on the hinge loss with an eta/sqrt(t) step."""

    algo = "ogd"

    def __init__(self, eta: float = 0.2):
        super().__init__(eta=eta, budget=None)
        self.t = 0

    def hyperparams(self) -> Dict[str, float]:
        return {"eta": self.eta, "t": self.t}

    def update(self, ex: SparseExample) -> float:
        self.t += 1
        margin = self._grown_margin(ex)
        y = ex.label
        if y * margin < 1.0 and len(ex.indices):
            step = self.eta / math.sqrt(self.t)
            self.w.array[ex.indices] += step * y * ex.values
        return margin


def make_learner(
    algo: str,
    budget: Optional[int] = None,
    *,
    gamma: float = 1.0,
    eta: float = 0.2,
    lam: float = 0.01,
) -> OnlineLearner:
    """Construct a learner by name; budgeted algorithms require ``budget``."""
    if algo in BUDGETED and (budget is None or budget < 1):
        raise ValueError(f"{algo} requires a selection budget B >= 1")
    if algo == "sofs":
        return SofsModel(budget, gamma=gamma)
    if algo == "arow":
        return ArowModel(gamma=gamma)
    if algo == "pet":
        return PetModel(budget, eta=eta)
    if algo == "fofs":
        return FofsModel(budget, eta=eta, lam=lam)
    if algo == "ogd":
        return OgdModel(eta=eta)
    raise ValueError(f"unknown algorithm {algo!r}; expected one of {', '.join(ALGOS)}")


def save_model(model: OnlineLearner, path) -> None:
    """Write a model as text: a header line, then one line per coordinate.

    Header: ``OFSMODEL v1 <algo> <d> <B> key=value ...`` with B = 0 for
    learners without a budget. Second-order models store ``idx mu sigma``
    for every touched coordinate, first-order models ``idx w`` for every
    nonzero one. Floats are written with repr so a reload reproduces
    predictions bit for bit.
    """
    params = " ".join(f"{k}={v!r}" for k, v in model.hyperparams().items())
    budget = model.budget or 0
    d = len(model.weights)
    lines = [f"{MODEL_MAGIC} {MODEL_VERSION} {model.algo} {d} {budget} {params}".rstrip()]
    if isinstance(model, _SecondOrder):
        mu = model.mu.array
        sig = model.sigma.array
        for j in np.flatnonzero((mu != 0.0) | (sig != 1.0)).tolist():
            lines.append(f"{j} {float(mu[j])!r} {float(sig[j])!r}")
    else:
        w = model.weights.array
        for j in np.flatnonzero(w).tolist():
            lines.append(f"{j} {float(w[j])!r}")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path) -> OnlineLearner:
    """Rebuild a learner saved by :func:`save_model`."""
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().split()
        if len(header) < 5 or header[0] != MODEL_MAGIC:
            raise ValueError(f"{path}: not a model file")
        if header[1] != MODEL_VERSION:
            raise ValueError(f"{path}: unsupported model version {header[1]!r}")
        algo = header[2]
        d = int(header[3])
        budget = int(header[4])
        params: Dict[str, float] = {}
        for tok in header[5:]:
            key, _, val = tok.partition("=")
            params[key] = float(val)
        model = make_learner(
            algo,
            budget=budget or None,
            gamma=params.get("gamma", 1.0),
            eta=params.get("eta", 0.2),
            lam=params.get("lambda", 0.01),
        )
        model._ensure(d)
        if isinstance(model, OgdModel):
            model.t = int(params.get("t", 0))
        second = isinstance(model, _SecondOrder)
        touched = []
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            j = int(parts[0])
            if second:
                model.mu[j] = float(parts[1])
                s = float(parts[2])
                model.sigma[j] = s
                touched.append((s, j))
            else:
                model.w[j] = float(parts[1])
    if isinstance(model, SofsModel):
        # the tracker holds the budget smallest covariance values among the
        # touched coordinates; rebuild it deterministically, lowest first
        for s, j in sorted(touched)[: model.budget]:
            model.tracker.offer(j, s)
    return model
