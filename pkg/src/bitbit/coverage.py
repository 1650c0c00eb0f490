"""Collision and overlap analytics over encoded datasets, and the qubit sweep.

Terminology: a training sample "collides" when its bucket (all samples
sharing its bitstring) is not dominated by its class; a test sample
"overlaps" when its bitstring occurs in training. Theoretical accuracies are
the exact complements of the two incidences and bound what any classifier on
the encoding can achieve.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from bitbit.data import Dataset
from bitbit.dimred import ReducerSpec
from bitbit.encoder import Bitstring, encode_samples, fit_encoder


@dataclass
class BitstringTable:
    """Unique bitstrings with per-class sample counts."""

    entries: dict[Bitstring, np.ndarray]
    c: int
    width: int | None
    total: int

    def __contains__(self, z: Bitstring) -> bool:
        return z in self.entries


def build_table(encoded: Iterable[tuple[Bitstring, int]], c: int) -> BitstringTable:
    """Aggregate (bitstring, label) records into per-class counts."""
    if c < 1:
        raise ValueError("c must be positive")
    entries: dict[Bitstring, np.ndarray] = {}
    width: int | None = None
    total = 0
    for z, label in encoded:
        if width is None:
            width = z.width
        elif z.width != width:
            raise ValueError(f"mixed widths in input: {z.width} != {width}")
        label = int(label)
        if not 0 <= label < c:
            raise ValueError(f"label {label} out of range for c={c}")
        counts = entries.get(z)
        if counts is None:
            counts = np.zeros(c, dtype=np.int64)
            entries[z] = counts
        counts[label] += 1
        total += 1
    return BitstringTable(entries=entries, c=c, width=width, total=total)


def majority_label(t: BitstringTable, z: Bitstring) -> int:
    """Most frequent class for a bitstring; ties go to the smallest class id."""
    counts = t.entries.get(z)
    if counts is None:
        raise KeyError(f"bitstring {z.to_bits()} not present in the table")
    return int(np.argmax(counts))


def train_collision_incidence(t: BitstringTable) -> float:
    """Fraction of samples that do not belong to their bucket's majority class."""
    if t.total == 0:
        raise ValueError("empty table")
    colliding = sum(int(counts.sum() - counts.max()) for counts in t.entries.values())
    return colliding / t.total


def test_overlap_incidence(
    t: BitstringTable, encoded_test: Sequence[tuple[Bitstring, int]]
) -> tuple[float, float]:
    """(incidence, overlap_fraction) for a test set against a training table.

    A test sample errs iff its bitstring occurs in training and its label is
    not the training bucket's majority; unseen bitstrings count as correct.
    """
    errors, overlapping, n_test = _test_counts(t, encoded_test)
    if n_test == 0:
        return 0.0, 0.0
    return errors / n_test, overlapping / n_test


def _test_counts(t: BitstringTable, encoded_test) -> tuple[int, int, int]:
    errors = overlapping = n_test = 0
    for z, label in encoded_test:
        if t.width is not None and z.width != t.width:
            raise ValueError(f"test width {z.width} != table width {t.width}")
        n_test += 1
        counts = t.entries.get(z)
        if counts is None:
            continue
        overlapping += 1
        if int(label) != int(np.argmax(counts)):
            errors += 1
    return errors, overlapping, n_test


@dataclass(frozen=True)
class CoverageMetrics:
    """Incidences, their exact accuracy complements, and the raw counts behind them."""

    train_collision_incidence: float
    test_overlap_incidence: float
    theoretical_train_accuracy: float
    theoretical_test_accuracy: float
    test_train_overlap_fraction: float
    n_train: int
    n_test: int
    n_test_overlapping: int
    n_test_overlap_errors: int

    @classmethod
    def from_counts(cls, train_incidence, n_train, errors, overlapping, n_test):
        test_incidence = errors / n_test if n_test else 0.0
        return cls(
            train_collision_incidence=train_incidence,
            test_overlap_incidence=test_incidence,
            theoretical_train_accuracy=1.0 - train_incidence,
            theoretical_test_accuracy=1.0 - test_incidence,
            test_train_overlap_fraction=overlapping / n_test if n_test else 0.0,
            n_train=n_train,
            n_test=n_test,
            n_test_overlapping=overlapping,
            n_test_overlap_errors=errors,
        )


def coverage_metrics(
    table: BitstringTable, encoded_test: Sequence[tuple[Bitstring, int]]
) -> CoverageMetrics:
    errors, overlapping, n_test = _test_counts(table, encoded_test)
    return CoverageMetrics.from_counts(
        train_incidence=train_collision_incidence(table),
        n_train=table.total,
        errors=errors,
        overlapping=overlapping,
        n_test=n_test,
    )


def compute_q_y(c: int) -> int:
    """Qubits needed for the class register: ceil(log2 c)."""
    if c < 2:
        raise ValueError(f"need at least 2 classes, got {c}")
    return (c - 1).bit_length()


@dataclass(frozen=True)
class QubitEstimate:
    """Coverage curve plus the derived qubit counts at one accuracy threshold.

    q_train / q_test are the first swept widths whose respective theoretical
    accuracy reaches the threshold (accuracy may dip afterwards; the first
    crossing is what counts). They are None when the sweep hit its cap
    without crossing, in which case the estimate is not covered.
    """

    curve: tuple[tuple[int, CoverageMetrics], ...]
    q_train: int | None
    q_test: int | None
    q_y: int
    q_dataset: int | None
    threshold: float

    @property
    def covered(self) -> bool:
        return self.q_dataset is not None


def estimate_from_curve(
    curve: Sequence[tuple[int, CoverageMetrics]], threshold: float, c: int
) -> QubitEstimate:
    """Derive first-crossing qubit counts from an already-computed curve."""
    _check_threshold(threshold)
    q_train = q_test = None
    for n_x, metrics in curve:
        if q_train is None and metrics.theoretical_train_accuracy >= threshold:
            q_train = n_x
        if q_test is None and metrics.theoretical_test_accuracy >= threshold:
            q_test = n_x
    q_y = compute_q_y(c)
    q_dataset = max(q_train, q_test) + q_y if q_train is not None and q_test is not None else None
    return QubitEstimate(
        curve=tuple(curve),
        q_train=q_train,
        q_test=q_test,
        q_y=q_y,
        q_dataset=q_dataset,
        threshold=threshold,
    )


def coverage_at_width(
    train: Dataset, test: Dataset, spec: ReducerSpec, n_x: int
) -> CoverageMetrics:
    """Fit the encoder at one width, encode both sets, and measure coverage."""
    model = fit_encoder(train, spec, n_x)
    encoded_train = zip(encode_samples(model, train.features), train.labels.tolist())
    encoded_test = list(zip(encode_samples(model, test.features), test.labels.tolist()))
    table = build_table(encoded_train, train.c)
    return coverage_metrics(table, encoded_test)


def sweep_curve(
    train: Dataset,
    test: Dataset,
    spec: ReducerSpec,
    stop_threshold: float,
    n_x_max: int,
    step: int,
) -> list[tuple[int, CoverageMetrics]]:
    """Coverage at widths 1, 1+step, ..., stopping early once the train and
    test accuracies have each crossed ``stop_threshold`` at least once."""
    _check_threshold(stop_threshold)
    if step < 1:
        raise ValueError("step must be >= 1")
    if n_x_max < 1:
        raise ValueError("n_x_max must be >= 1")
    curve: list[tuple[int, CoverageMetrics]] = []
    train_met = test_met = False
    for n_x in range(1, n_x_max + 1, step):
        metrics = coverage_at_width(train, test, spec, n_x)
        curve.append((n_x, metrics))
        train_met = train_met or metrics.theoretical_train_accuracy >= stop_threshold
        test_met = test_met or metrics.theoretical_test_accuracy >= stop_threshold
        if train_met and test_met:
            break
    return curve


def sweep_qubits(
    train: Dataset,
    test: Dataset,
    spec: ReducerSpec,
    threshold: float = 1.0,
    n_x_max: int = 128,
    step: int = 1,
) -> QubitEstimate:
    """Sweep encoder widths and report the qubit requirement at ``threshold``."""
    curve = sweep_curve(train, test, spec, threshold, n_x_max, step)
    return estimate_from_curve(curve, threshold, train.c)


def _check_threshold(threshold: float) -> None:
    if not 0.0 < threshold <= 1.0:
        raise ValueError(f"threshold must be in (0, 1], got {threshold}")
