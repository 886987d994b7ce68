"""Finite probability distributions over labeled outcomes."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Iterable, Sequence

import numpy as np

from .errors import DomainError

SUM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class ProbVector:
    """Nonnegative weights summing to one, each attached to a label.

    Labels default to ``0, 1, ..., k-1``. The weight array is stored
    read-only so instances can be shared freely.
    """

    weights: np.ndarray
    labels: tuple[Hashable, ...] = ()

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).ravel()
        if w.size == 0:
            raise DomainError("probability vector is empty")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise DomainError("probabilities must be finite and nonnegative")
        if abs(w.sum() - 1.0) > SUM_TOL:
            raise DomainError(f"probabilities sum to {w.sum()!r}, not 1")
        labels = tuple(self.labels) if self.labels else tuple(range(w.size))
        if len(labels) != w.size:
            raise DomainError(f"{len(labels)} labels for {w.size} probabilities")
        if len(set(labels)) != len(labels):
            raise DomainError("labels must be distinct")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def normalized(cls, weights: Iterable[float], labels: Sequence[Hashable] = ()) -> "ProbVector":
        """Build from unnormalized nonnegative weights."""
        w = np.asarray(list(weights), dtype=float)
        total = w.sum()
        if not total > 0:
            raise DomainError("weights sum to zero")
        return cls(w / total, tuple(labels))

    def __len__(self) -> int:
        return self.weights.size

    def __iter__(self):
        return iter(self.weights)

    def index(self, label: Hashable) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise DomainError(f"unknown label {label!r}") from None

    def __getitem__(self, label: Hashable) -> float:
        return float(self.weights[self.index(label)])

    def as_dict(self) -> dict:
        return {lab: float(w) for lab, w in zip(self.labels, self.weights)}

    def __eq__(self, other) -> bool:
        if not isinstance(other, ProbVector):
            return NotImplemented
        return self.labels == other.labels and np.array_equal(self.weights, other.weights)

    def __repr__(self) -> str:
        body = ", ".join(f"{lab!r}: {w:.6g}" for lab, w in zip(self.labels, self.weights))
        return f"ProbVector({{{body}}})"


def as_probvector(p, labels: Sequence[Hashable] = ()) -> ProbVector:
    if isinstance(p, ProbVector):
        return p
    return ProbVector(np.asarray(p, dtype=float), tuple(labels))
