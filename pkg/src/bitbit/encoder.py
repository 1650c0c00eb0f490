"""Binary encoding core: importance scoring, bit allocation, copula, discretization.

A fitted encoder maps a feature row to a fixed-width bitstring: reduce,
min-max normalize with the training extrema (clamping), push each component
through its training empirical CDF, discretize component d to b_d bits, and
concatenate the codes with component 0 in the most significant position.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from bitbit.data import Dataset
from bitbit.dimred import FittedReducer, ReducerSpec, fit_reducer, transform

MODEL_FORMAT_VERSION = "1"
ENCODED_FILE_MAGIC = "bitbit v1"


@dataclass(frozen=True)
class Bitstring:
    """A fixed-width bit sequence; ``value`` is the integer whose binary
    expansion (MSB first) is the sequence. Equality and hashing respect width."""

    width: int
    value: int

    def __post_init__(self):
        if self.width < 0:
            raise ValueError("width must be nonnegative")
        if not 0 <= self.value < (1 << self.width):
            raise ValueError(f"value {self.value} does not fit in {self.width} bits")

    @classmethod
    def from_bits(cls, bits: str) -> "Bitstring":
        return cls(width=len(bits), value=int(bits, 2) if bits else 0)

    def to_bits(self) -> str:
        return format(self.value, f"0{self.width}b") if self.width else ""

    @classmethod
    def from_hex(cls, digits: str, width: int) -> "Bitstring":
        if len(digits) != hex_digits(width):
            raise ValueError(f"expected {hex_digits(width)} hex digits for width {width}, got {len(digits)}")
        return cls(width=width, value=int(digits, 16))

    def to_hex(self) -> str:
        return format(self.value, f"0{hex_digits(self.width)}x")


def hex_digits(width: int) -> int:
    """Hex digits needed for a packed bitstring of the given width."""
    return max(1, (width + 3) // 4)


@dataclass(frozen=True)
class ImportanceScores:
    """Per-component label relevance, in bits of mutual information."""

    scores: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.scores, dtype=np.float64)
        if arr.ndim != 1:
            raise ValueError("scores must be 1-D")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise ValueError("scores must be finite and nonnegative")
        arr.setflags(write=False)
        object.__setattr__(self, "scores", arr)

    def __len__(self) -> int:
        return self.scores.shape[0]


@dataclass(frozen=True)
class BitAllocation:
    """Integer bit budget per component; sums exactly to the total width."""

    bits: tuple[int, ...]
    n_x: int

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if any(b < 0 for b in bits):
            raise ValueError("bit counts must be nonnegative")
        if sum(bits) != self.n_x:
            raise ValueError(f"bit counts sum to {sum(bits)}, expected {self.n_x}")
        object.__setattr__(self, "bits", bits)

    def __len__(self) -> int:
        return len(self.bits)


@dataclass(frozen=True)
class CopulaModel:
    """Per-component sorted training values; maps a value to its empirical CDF."""

    columns: tuple[np.ndarray, ...]

    def __post_init__(self):
        cols = []
        for col in self.columns:
            arr = np.ascontiguousarray(np.asarray(col, dtype=np.float64))
            arr.setflags(write=False)
            cols.append(arr)
        object.__setattr__(self, "columns", tuple(cols))

    def __len__(self) -> int:
        return len(self.columns)


@dataclass(frozen=True)
class EncoderModel:
    reducer: FittedReducer
    mins: np.ndarray
    maxs: np.ndarray
    copula: CopulaModel
    allocation: BitAllocation
    importances: ImportanceScores

    def __post_init__(self):
        mins = np.ascontiguousarray(np.asarray(self.mins, dtype=np.float64))
        maxs = np.ascontiguousarray(np.asarray(self.maxs, dtype=np.float64))
        d = self.reducer.n_components
        if not (mins.shape == maxs.shape == (d,)):
            raise ValueError("mins/maxs must match the reducer output width")
        if np.any(mins > maxs):
            raise ValueError("every min must be <= the corresponding max")
        if len(self.copula) != d or len(self.allocation) != d or len(self.importances) != d:
            raise ValueError("copula, allocation, and importances must all have width D")
        mins.setflags(write=False)
        maxs.setflags(write=False)
        object.__setattr__(self, "mins", mins)
        object.__setattr__(self, "maxs", maxs)

    @property
    def width(self) -> int:
        return self.allocation.n_x


def estimate_mutual_information(column, labels, bins: int | None = None) -> float:
    """Histogram plug-in estimate of I(column; labels) in bits.

    The column is cut into at most ``bins`` equal-frequency bins (default
    clamp(floor(sqrt(s)), 8, 256)); the estimate is the plug-in mutual
    information of the (bin, label) contingency table. Constant columns
    give 0. Equal-frequency binning makes the estimate invariant under any
    strictly monotone transform of the column.
    """
    col = np.asarray(column, dtype=np.float64).ravel()
    labs = np.asarray(labels, dtype=np.int64).ravel()
    s = col.shape[0]
    if s < 2:
        raise ValueError("need at least 2 samples")
    if labs.shape[0] != s:
        raise ValueError("column and labels must have equal length")
    if labs.min() < 0:
        raise ValueError("labels must be nonnegative class ids")
    if bins is None:
        bins = min(max(int(math.isqrt(s)), 8), 256)
    if bins < 1:
        raise ValueError("bins must be positive")
    if col.max() == col.min():
        return 0.0

    edges = np.unique(np.quantile(col, np.arange(1, bins) / bins)) if bins > 1 else np.empty(0)
    bin_idx = np.searchsorted(edges, col, side="right")
    n_bins = edges.shape[0] + 1
    n_classes = int(labs.max()) + 1
    joint = np.bincount(bin_idx * n_classes + labs, minlength=n_bins * n_classes)
    joint = joint.reshape(n_bins, n_classes) / s
    p_bin = joint.sum(axis=1)
    p_class = joint.sum(axis=0)
    nz = joint > 0
    ratio = joint[nz] / (np.outer(p_bin, p_class)[nz])
    return max(float(np.sum(joint[nz] * np.log2(ratio))), 0.0)


def allocate_bits(imp: ImportanceScores, n_x: int) -> BitAllocation:
    """Split ``n_x`` bits across components proportionally to their scores.

    Ideal shares are rounded half-to-even, then repaired to sum exactly to
    n_x. Repair favors lower indices holding bits: increments go to the
    largest shortfall (ties to the lowest index), decrements to the largest
    surplus (ties to the highest index). All-zero scores fall back to a
    uniform split with the remainder on the lowest indices.
    """
    if n_x < 1:
        raise ValueError("n_x must be positive")
    scores = imp.scores
    d = scores.shape[0]
    total = float(scores.sum())
    if total <= 0.0:
        base, rem = divmod(n_x, d)
        return BitAllocation(tuple(base + (1 if i < rem else 0) for i in range(d)), n_x)

    ideal = n_x * (scores / total)
    bits = np.rint(ideal).astype(np.int64)  # round half to even
    deficit = n_x - int(bits.sum())
    while deficit > 0:
        j = int(np.argmax(ideal - bits))
        bits[j] += 1
        deficit -= 1
    while deficit < 0:
        surplus = bits - ideal
        j = d - 1 - int(np.argmax(surplus[::-1]))
        bits[j] -= 1
        deficit += 1
    return BitAllocation(tuple(int(b) for b in bits), n_x)


def fit_copula(reduced_normalized_train: np.ndarray) -> CopulaModel:
    """Store each training column sorted ascending."""
    x = np.asarray(reduced_normalized_train, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 1:
        raise ValueError("need a 2-D matrix with at least one row")
    return CopulaModel(columns=tuple(np.sort(x[:, j]) for j in range(x.shape[1])))


def apply_copula(m: CopulaModel, value: float, component: int) -> float:
    """Empirical CDF with an (s+1) denominator: #(train <= value) / (s + 1)."""
    col = m.columns[component]
    rank = int(np.searchsorted(col, value, side="right"))
    return rank / (col.shape[0] + 1)


def _apply_copula_columns(m: CopulaModel, x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    for j in range(x.shape[1]):
        col = m.columns[j]
        out[:, j] = np.searchsorted(col, x[:, j], side="right") / (col.shape[0] + 1)
    return out


def discretize_value(x: float, b: int) -> int:
    """Floor-discretize a unit-interval value to b bits: min(floor(x * 2^b), 2^b - 1)."""
    if b < 0:
        raise ValueError("bit count must be nonnegative")
    if b == 0:
        return 0
    x = min(max(x, 0.0), 1.0)
    return min(int(x * float(1 << b)), (1 << b) - 1)


def _normalize(reduced: np.ndarray, mins: np.ndarray, maxs: np.ndarray, clamp: bool) -> np.ndarray:
    span = maxs - mins
    safe = np.where(span > 0, span, 1.0)
    out = (reduced - mins) / safe
    out[:, span == 0] = 0.0  # constant training component: everything maps to 0
    if clamp:
        np.clip(out, 0.0, 1.0, out=out)
    return out


def fit_encoder(train: Dataset, spec: ReducerSpec, n_x: int) -> EncoderModel:
    """Fit the full encoding pipeline on a training set.

    Order: fit/apply the reducer, score each reduced column against the
    labels, derive the bit allocation for ``n_x``, record per-component
    training min/max, and fit the copula on the min-max-normalized reduced
    data. Deterministic for fixed inputs.
    """
    if n_x < 1:
        raise ValueError("n_x must be positive")
    reducer = fit_reducer(spec, train.features)
    reduced = transform(reducer, train.features)
    scores = ImportanceScores(
        np.array([estimate_mutual_information(reduced[:, j], train.labels)
                  for j in range(reduced.shape[1])])
    )
    allocation = allocate_bits(scores, n_x)
    mins = reduced.min(axis=0)
    maxs = reduced.max(axis=0)
    normalized = _normalize(reduced, mins, maxs, clamp=True)
    copula = fit_copula(normalized)
    return EncoderModel(
        reducer=reducer,
        mins=mins,
        maxs=maxs,
        copula=copula,
        allocation=allocation,
        importances=scores,
    )


def encode_samples(model: EncoderModel, features: np.ndarray) -> list[Bitstring]:
    """Encode feature rows to bitstrings of width ``model.width``."""
    reduced = transform(model.reducer, np.asarray(features, dtype=np.float64))
    unit = _apply_copula_columns(model.copula, _normalize(reduced, model.mins, model.maxs, clamp=True))
    k = unit.shape[0]
    width = model.width
    bits = model.allocation.bits

    if width <= 63:  # every shift stays strictly inside a machine word
        values = np.zeros(k, dtype=np.uint64)
        for j, b in enumerate(bits):
            if b == 0:
                continue
            codes = np.minimum(
                np.floor(unit[:, j] * float(1 << b)).astype(np.uint64),
                np.uint64((1 << b) - 1),
            )
            values = (values << np.uint64(b)) | codes
        return [Bitstring(width, int(v)) for v in values.tolist()]

    # Wide encodings overflow machine words; accumulate Python integers.
    values_py = [0] * k
    for j, b in enumerate(bits):
        if b == 0:
            continue
        cap = (1 << b) - 1
        scaled = np.floor(unit[:, j] * float(1 << b))
        for i, v in enumerate(scaled.tolist()):
            values_py[i] = (values_py[i] << b) | min(int(v), cap)
    return [Bitstring(width, v) for v in values_py]


# --- model persistence ---


def persist_model(model: EncoderModel, path) -> None:
    """Write the model as JSON; a round-tripped model encodes bit-identically."""
    doc = {
        "version": MODEL_FORMAT_VERSION,
        "reducer": model.reducer.to_json_dict(),
        "mins": model.mins.tolist(),
        "maxs": model.maxs.tolist(),
        "copula": [col.tolist() for col in model.copula.columns],
        "importances": model.importances.scores.tolist(),
        "allocation": {"bits": list(model.allocation.bits), "n_x": model.allocation.n_x},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True)
        fh.write("\n")


def load_model(path) -> EncoderModel:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: truncated or invalid model file ({exc})") from None
    version = doc.get("version")
    if version != MODEL_FORMAT_VERSION:
        raise ValueError(
            f"{path}: unsupported model format version {version!r}, "
            f"this reader handles version {MODEL_FORMAT_VERSION!r}"
        )
    return EncoderModel(
        reducer=FittedReducer.from_json_dict(doc["reducer"]),
        mins=np.asarray(doc["mins"], dtype=np.float64),
        maxs=np.asarray(doc["maxs"], dtype=np.float64),
        copula=CopulaModel(columns=tuple(np.asarray(c, dtype=np.float64) for c in doc["copula"])),
        allocation=BitAllocation(bits=tuple(doc["allocation"]["bits"]), n_x=int(doc["allocation"]["n_x"])),
        importances=ImportanceScores(np.asarray(doc["importances"], dtype=np.float64)),
    )


# --- encoded-record files ---
#
# Line 1: "bitbit v1 width=<W>". Each record line: the packed bits as hex
# (most significant nibble first, zero padded to ceil(W/4) digits), a space,
# and the integer class label.


def write_encoded(path, width: int, records: Iterable[tuple[Bitstring, int]]) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{ENCODED_FILE_MAGIC} width={width}\n")
        digits = hex_digits(width)
        for bs, label in records:
            if bs.width != width:
                raise ValueError(f"record {count}: width {bs.width} != file width {width}")
            fh.write(f"{bs.value:0{digits}x} {int(label)}\n")
            count += 1
    return count


def read_encoded_header(path) -> int:
    with open(path, encoding="utf-8") as fh:
        return _parse_header(fh.readline(), path)


def _parse_header(line: str, path) -> int:
    parts = line.strip().split()
    if len(parts) != 3 or " ".join(parts[:2]) != ENCODED_FILE_MAGIC or not parts[2].startswith("width="):
        raise ValueError(f"{path}: not an encoded-record file (bad header {line.strip()!r})")
    return int(parts[2].removeprefix("width="))


def iter_encoded(path) -> Iterator[tuple[Bitstring, int]]:
    """Stream (bitstring, label) records from an encoded-record file."""
    with open(path, encoding="utf-8") as fh:
        width = _parse_header(fh.readline(), path)
        for line_no, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"{path}: malformed record at line {line_no}")
            try:
                yield Bitstring.from_hex(parts[0], width), int(parts[1])
            except ValueError as exc:
                raise ValueError(f"{path}: malformed record at line {line_no}: {exc}") from None


def read_encoded(path) -> tuple[int, list[tuple[Bitstring, int]]]:
    width = read_encoded_header(path)
    return width, list(iter_encoded(path))
