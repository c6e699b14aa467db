"""Utility functions ``U: subsets of players -> float``.

Every utility exposes ``evaluate(subset)`` where ``subset`` is a bitmask or an
iterable of player indices, and a ``descriptor`` string identifying it.
"""

from __future__ import annotations

import json
import math
import queue
import subprocess
import threading
from abc import ABC, abstractmethod
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass

import numpy as np
from sklearn.utils import check_array

from ._errors import (
    BadCopyMap,
    DimensionMismatch,
    KTooLarge,
    MissingSubset,
    ProcessFailure,
    ProtocolViolation,
    UtilityTimeout,
)
from ._rng import make_rng
from ._validation import as_mask, members


class UtilityFn(ABC):
    n_players: int | None = None

    @abstractmethod
    def _evaluate(self, mask: int) -> float: ...

    def evaluate(self, subset) -> float:
        return self._evaluate(as_mask(subset))

    __call__ = evaluate

    @property
    def descriptor(self) -> str:
        return type(self).__name__


class TableUtility(UtilityFn):
    def __init__(self, entries: Mapping, default: float | None = None, n_players: int | None = None):
        if not entries:
            raise ValueError("entries must be nonempty")
        self.entries = {as_mask(k): float(v) for k, v in entries.items()}
        self.default = default
        self.n_players = n_players

    def _evaluate(self, mask):
        try:
            return self.entries[mask]
        except KeyError:
            if self.default is None:
                raise MissingSubset(f"no value for subset {members(mask)}") from None
            return float(self.default)

    @property
    def descriptor(self):
        return f"table:{len(self.entries)}"


class FunctionUtility(UtilityFn):
    """Wrap a plain callable of the member list (handy in tests and notebooks)."""

    def __init__(self, fn: Callable[[list[int]], float], n_players: int | None = None, name: str = "fn"):
        self.fn = fn
        self.n_players = n_players
        self.name = name

    def _evaluate(self, mask):
        return float(self.fn(members(mask)))

    @property
    def descriptor(self):
        return f"function:{self.name}"


class ElementaryGame(UtilityFn):
    """``u_T(S) = 1`` if ``T`` is contained in ``S`` else 0."""

    def __init__(self, target, n_players: int | None = None):
        self.target = as_mask(target)
        self.n_players = n_players

    def _evaluate(self, mask):
        return 1.0 if self.target & ~mask == 0 else 0.0

    @property
    def descriptor(self):
        return f"elementary:{self.target:x}"


def elementary_game(target, n_players: int | None = None) -> ElementaryGame:
    return ElementaryGame(target, n_players)


class LineageUtility(UtilityFn):
    """Additive data-market utility with copies of source players.

    An original contributes its gain. A copy whose source is absent stands in
    for the source (contributes the source's gain); once the source is
    present the copy contributes ``-noise_penalty`` (0 for a clean copy).
    """

    def __init__(
        self,
        sources,
        copies: Mapping[int, int],
        gains: Mapping[int, float],
        noise_penalty: Mapping[int, float] | None = None,
        n_players: int | None = None,
    ):
        self.sources = frozenset(int(i) for i in sources)
        self.copies = {int(c): int(s) for c, s in copies.items()}
        self.gains = {int(k): float(v) for k, v in gains.items()}
        self.noise_penalty = {int(k): float(v) for k, v in (noise_penalty or {}).items()}
        for c, s in self.copies.items():
            if c in self.sources or c == s or s not in self.sources:
                raise BadCopyMap(f"copy {c} -> {s} must map a non-source to a source")
        for s in self.sources:
            if self.gains.get(s, 0.0) <= 0:
                raise BadCopyMap(f"source {s} needs a positive gain")
        players = self.sources | set(self.copies)
        self.n_players = n_players if n_players is not None else max(players) + 1

    def _evaluate(self, mask):
        total = 0.0
        for i in members(mask):
            if i in self.sources:
                total += self.gains[i]
            elif i in self.copies:
                src = self.copies[i]
                if mask >> src & 1:
                    total -= self.noise_penalty.get(i, 0.0)
                else:
                    total += self.gains[src]
        return total

    def copy_edges(self) -> list[tuple[int, int]]:
        """The lineage DAG: every source precedes its copies."""
        return sorted((s, c) for c, s in self.copies.items())

    @property
    def descriptor(self):
        return f"lineage:{len(self.sources)}+{len(self.copies)}"


def lineage_utility(sources, copies, gains, noise_penalty=None, n_players=None) -> LineageUtility:
    return LineageUtility(sources, copies, gains, noise_penalty, n_players)


class ExternalUtility(UtilityFn):
    """Delegate evaluation to a child process.

    Each request is one line ``{"subset": [sorted indices]}`` on the child's
    stdin; the reply is one line holding a JSON number. Requests from several
    threads are serialized.
    """

    def __init__(self, command: Sequence[str], timeout: float = 60.0, n_players: int | None = None):
        self.command = list(command)
        self.timeout = timeout
        self.n_players = n_players
        self._lock = threading.Lock()
        self._proc = None
        self._lines: queue.Queue = queue.Queue()

    def _start(self):
        try:
            self._proc = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                encoding="utf-8",
                bufsize=1,
            )
        except OSError as exc:
            raise ProcessFailure(f"cannot start {self.command}: {exc}") from exc
        threading.Thread(target=self._pump, args=(self._proc.stdout, self._lines), daemon=True).start()

    @staticmethod
    def _pump(stream, lines):
        for line in stream:
            lines.put(line)
        lines.put(None)

    def _evaluate(self, mask):
        with self._lock:
            if self._proc is None:
                self._start()
            request = json.dumps({"subset": members(mask)}) + "\n"
            try:
                self._proc.stdin.write(request)
                self._proc.stdin.flush()
            except (BrokenPipeError, OSError) as exc:
                raise ProcessFailure(f"child {self.command} closed its input") from exc
            try:
                line = self._lines.get(timeout=self.timeout)
            except queue.Empty:
                self.close()
                raise UtilityTimeout(f"no reply within {self.timeout}s") from None
            if line is None:
                code = self._proc.poll()
                self.close()
                raise ProcessFailure(f"child {self.command} exited (code {code})")
            try:
                value = json.loads(line)
            except json.JSONDecodeError:
                raise ProtocolViolation(f"reply {line.strip()!r} is not JSON") from None
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ProtocolViolation(f"reply {line.strip()!r} is not a finite number")
            return float(value)

    def close(self):
        if self._proc is not None:
            proc, self._proc = self._proc, None
            try:
                proc.stdin.close()
            except OSError:
                pass
            try:
                proc.wait(timeout=1)
            except subprocess.TimeoutExpired:
                proc.kill()
                proc.wait()
            self._lines = queue.Queue()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def __del__(self):
        try:
            self.close()
        except Exception:
            pass

    @property
    def descriptor(self):
        return "external:" + " ".join(self.command)


def external_utility(command: Sequence[str], timeout: float = 60.0) -> ExternalUtility:
    return ExternalUtility(command, timeout)


@dataclass
class TabularDataset:
    rows: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.rows = check_array(self.rows, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.labels.shape != (self.rows.shape[0],):
            raise DimensionMismatch("one label per row required")
        if np.any(self.labels < 0):
            raise DimensionMismatch("labels must be non-negative class indices")

    @property
    def feature_count(self) -> int:
        return self.rows.shape[1]

    def __len__(self):
        return self.rows.shape[0]


class LogisticPredictor:
    """Multinomial logistic scorer ``softmax(x @ weights.T + bias)``.

    ``predict_proba`` has the scikit-learn signature, so any fitted sklearn
    classifier can be used in its place.
    """

    def __init__(self, weights, bias):
        self.weights = np.atleast_2d(np.asarray(weights, dtype=np.float64))
        self.bias = np.asarray(bias, dtype=np.float64)
        if self.bias.shape != (self.weights.shape[0],):
            raise DimensionMismatch("bias needs one entry per class")
        self.classes_ = np.arange(self.weights.shape[0])

    @classmethod
    def from_dict(cls, spec: Mapping) -> LogisticPredictor:
        out = cls(spec["weights"], spec["bias"])
        if "classes" in spec and int(spec["classes"]) != out.weights.shape[0]:
            raise DimensionMismatch("'classes' disagrees with the weight matrix")
        return out

    def predict_proba(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.weights.shape[1]:
            raise DimensionMismatch(f"expected {self.weights.shape[1]} features, got {X.shape[1]}")
        z = X @ self.weights.T + self.bias
        z -= z.max(axis=1, keepdims=True)
        e = np.exp(z)
        return e / e.sum(axis=1, keepdims=True)


class KNNImputationUtility(UtilityFn):
    """Masked-prediction utility with conditional k-NN imputation.

    For a subset ``S`` and each fixed evaluation point ``(x, y)``, the ``k``
    training rows nearest to ``x`` in the coordinates of ``S`` fill in the
    coordinates outside ``S``; ``U(S)`` averages ``f_y`` over the composites
    and then over the evaluation points.

    Evaluation points are drawn once, at construction (without replacement
    when ``n_eval <= len(eval_points)``). Distance ties go to the lower
    training-row index; for the empty subset every row is tied and the first
    ``k`` rows of a seeded shuffle are used.
    """

    def __init__(self, train: TabularDataset, eval_points: TabularDataset, predictor, k: int = 100,
                 n_eval: int = 1000, seed: int = 0):
        if train.feature_count != eval_points.feature_count:
            raise DimensionMismatch("train and evaluation features differ")
        if not 1 <= k <= len(train):
            raise KTooLarge(f"k={k} but only {len(train)} training rows")
        if n_eval < 1:
            raise ValueError("n_eval must be >= 1")
        self.train = train
        self.predictor = predictor
        self.k = k
        self.n_players = train.feature_count
        rng = make_rng(seed)
        m = len(eval_points)
        self.replace = n_eval > m
        idx = rng.choice(m, size=n_eval, replace=self.replace)
        self.eval_index = idx
        self.X = eval_points.rows[idx]
        self.y = eval_points.labels[idx]
        self.empty_neighbors = rng.permutation(len(train))[:k]
        self.seed = seed

    def neighbors(self, x: np.ndarray, cols: list[int]) -> np.ndarray:
        if not cols:
            return self.empty_neighbors
        diff = self.train.rows[:, cols] - x[cols]
        dist = np.einsum("ij,ij->i", diff, diff)
        return np.argsort(dist, kind="stable")[: self.k]

    def _evaluate(self, mask):
        n = self.n_players
        cols = members(mask)
        if cols and cols[-1] >= n:
            raise DimensionMismatch(f"subset {cols} has features outside [0, {n})")
        if len(cols) == n:
            proba = self.predictor.predict_proba(self.X)
            return float(np.mean(proba[np.arange(len(self.y)), self.y]))
        total = 0.0
        for x, y in zip(self.X, self.y):
            composite = self.train.rows[self.neighbors(x, cols)].copy()
            composite[:, cols] = x[cols]
            total += float(np.mean(self.predictor.predict_proba(composite)[:, y]))
        return total / len(self.y)

    @property
    def descriptor(self):
        return f"knn:k={self.k},n_eval={len(self.y)},seed={self.seed}"


def knn_imputation_utility(train, eval_points, predictor, k=100, n_eval=1000, seed=0) -> KNNImputationUtility:
    return KNNImputationUtility(train, eval_points, predictor, k, n_eval, seed)


class CachedUtility(UtilityFn):
    """Compute-once memoization keyed by subset; errors are not cached."""

    def __init__(self, inner: UtilityFn):
        self.inner = inner
        self.n_players = getattr(inner, "n_players", None)
        self._cache: dict[int, float] = {}
        self._lock = threading.RLock()
        self.misses = 0

    def _evaluate(self, mask):
        try:
            return self._cache[mask]
        except KeyError:
            pass
        with self._lock:
            if mask not in self._cache:
                value = self.inner._evaluate(mask)
                self._cache[mask] = value
                self.misses += 1
            return self._cache[mask]

    def __len__(self):
        return len(self._cache)

    @property
    def descriptor(self):
        return self.inner.descriptor


def cached(u: UtilityFn) -> CachedUtility:
    return u if isinstance(u, CachedUtility) else CachedUtility(u)
