"""Exact finite-alphabet probability machinery.

Joint laws are stored as flat float64 vectors in row-major order (last
variable's index moving fastest), the same layout the text file format uses.
All information quantities are in bits; 0*log(0) is taken as 0 and an
absolute-continuity failure in a divergence returns +inf rather than raising.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

import numpy as np
from scipy.special import xlogy

from .errors import (
    EmptyKeepSet,
    NegativeMass,
    NotNormalized,
    OutOfRange,
    OverlappingSets,
    ShapeMismatch,
)

LN2 = math.log(2.0)

# Hard cap on joint tensor size: 2**24 cells.
CELL_CAP = 1 << 24

# Input normalization tolerance; no silent renormalization is ever applied.
NORM_TOL = 1e-9


def _frozen_array(values, dtype=np.float64) -> np.ndarray:
    arr = np.ascontiguousarray(np.asarray(values, dtype=dtype))
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class AlphabetSpec:
    """Alphabet sizes (|X_1|,...,|X_N|) with optional variable labels."""

    sizes: tuple
    names: Optional[tuple] = None

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sizes)
        object.__setattr__(self, "sizes", sizes)
        if len(sizes) == 0:
            raise ShapeMismatch("alphabet spec needs at least one variable")
        if any(s < 1 for s in sizes):
            raise ShapeMismatch(f"alphabet sizes must be >= 1, got {sizes}")
        if math.prod(sizes) > CELL_CAP:
            raise ShapeMismatch(
                f"joint tensor of {math.prod(sizes)} cells exceeds cap {CELL_CAP}"
            )
        if self.names is not None:
            names = tuple(str(n) for n in self.names)
            if len(names) != len(sizes):
                raise ShapeMismatch("names and sizes must have equal length")
            object.__setattr__(self, "names", names)

    @property
    def nvars(self) -> int:
        return len(self.sizes)

    @property
    def ncells(self) -> int:
        return math.prod(self.sizes)

    def label(self, i: int) -> str:
        return self.names[i] if self.names else f"X{i + 1}"


@dataclass(frozen=True)
class JointPMF:
    """Joint law P(x_1,...,x_N) over the cells of an AlphabetSpec.

    Validated at construction: entries nonnegative, summing to 1 within
    1e-9, length equal to the cell count. Immutable afterwards.
    """

    spec: AlphabetSpec
    probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "probs", _frozen_array(self.probs))
        validate(self)

    @property
    def nvars(self) -> int:
        return self.spec.nvars

    @property
    def sizes(self) -> tuple:
        return self.spec.sizes

    def tensor(self) -> np.ndarray:
        """Read-only view shaped like the alphabet."""
        return self.probs.reshape(self.spec.sizes)

    @staticmethod
    def from_tensor(tensor, names=None) -> "JointPMF":
        arr = np.asarray(tensor, dtype=np.float64)
        return JointPMF(AlphabetSpec(arr.shape, names), arr.reshape(-1))


@dataclass(frozen=True)
class Coupling:
    """Joint law over (X_1,...,X_N, W); the last axis is the auxiliary."""

    pmf: JointPMF
    w_size: int

    def __post_init__(self):
        if self.pmf.nvars < 2:
            raise ShapeMismatch("a coupling needs at least one X axis plus W")
        if self.pmf.sizes[-1] != self.w_size:
            raise ShapeMismatch(
                f"last axis has {self.pmf.sizes[-1]} values, w_size says {self.w_size}"
            )

    @property
    def n_x(self) -> int:
        return self.pmf.nvars - 1

    def x_marginal(self) -> JointPMF:
        return marginalize(self.pmf, range(self.n_x))


def validate(pmf: JointPMF) -> None:
    """Raise unless the pmf satisfies its invariants; never renormalizes."""
    probs = np.asarray(pmf.probs, dtype=np.float64)
    if probs.ndim != 1 or probs.shape[0] != pmf.spec.ncells:
        raise ShapeMismatch(
            f"expected {pmf.spec.ncells} entries for sizes {pmf.spec.sizes}, "
            f"got array of shape {probs.shape}"
        )
    if not np.all(np.isfinite(probs)):
        raise NegativeMass("non-finite probability entry")
    if np.any(probs < 0.0):
        raise NegativeMass(f"min entry {float(probs.min())!r} < 0")
    total = float(probs.sum())
    if abs(total - 1.0) > NORM_TOL:
        raise NotNormalized(total, NORM_TOL)


def _as_index_tuple(subset: Iterable[int], nvars: int, *, allow_empty=False) -> tuple:
    idx = tuple(int(i) for i in subset)
    if not allow_empty and len(idx) == 0:
        raise EmptyKeepSet("variable subset must be nonempty")
    if len(set(idx)) != len(idx):
        raise OverlappingSets(f"duplicate indices in {idx}")
    for i in idx:
        if not 0 <= i < nvars:
            raise ShapeMismatch(f"variable index {i} out of range for {nvars} variables")
    return idx


def marginalize(pmf: JointPMF, keep: Iterable[int]) -> JointPMF:
    """Sum out every axis not in ``keep`` (0-based), preserving axis order."""
    keep_idx = _as_index_tuple(keep, pmf.nvars)
    keep_sorted = tuple(sorted(keep_idx))
    drop = tuple(i for i in range(pmf.nvars) if i not in keep_sorted)
    tensor = pmf.tensor().sum(axis=drop) if drop else pmf.tensor()
    names = tuple(pmf.spec.label(i) for i in keep_sorted) if pmf.spec.names else None
    return JointPMF(AlphabetSpec(tensor.shape, names), tensor.reshape(-1))


def entropy_of(probs: np.ndarray) -> float:
    """Shannon entropy in bits of a bare probability vector."""
    p = np.asarray(probs, dtype=np.float64)
    return float(-xlogy(p, p).sum() / LN2)


def entropy(pmf: JointPMF, subset: Optional[Iterable[int]] = None) -> float:
    """H(X_subset) in bits; the whole joint when subset is omitted."""
    if subset is None:
        subset = range(pmf.nvars)
    sub = _as_index_tuple(subset, pmf.nvars)
    if set(sub) == set(range(pmf.nvars)):
        return entropy_of(pmf.probs)
    return entropy_of(marginalize(pmf, sub).probs)


def conditional_entropy(pmf: JointPMF, a: Iterable[int], b: Iterable[int]) -> float:
    """H(X_A | X_B) = H(X_{A u B}) - H(X_B), in bits. B may be empty."""
    a_idx = _as_index_tuple(a, pmf.nvars)
    b_idx = _as_index_tuple(b, pmf.nvars, allow_empty=True)
    if set(a_idx) & set(b_idx):
        raise OverlappingSets(f"A={a_idx} and B={b_idx} overlap")
    if not b_idx:
        return entropy(pmf, a_idx)
    return entropy(pmf, a_idx + b_idx) - entropy(pmf, b_idx)


def mutual_information(pmf: JointPMF, a: Iterable[int], b: Iterable[int]) -> float:
    """I(X_A ; X_B) = H(A) + H(B) - H(A u B), in bits."""
    a_idx = _as_index_tuple(a, pmf.nvars)
    b_idx = _as_index_tuple(b, pmf.nvars)
    if set(a_idx) & set(b_idx):
        raise OverlappingSets(f"A={a_idx} and B={b_idx} overlap")
    return entropy(pmf, a_idx) + entropy(pmf, b_idx) - entropy(pmf, a_idx + b_idx)


def kl_divergence(p: JointPMF, q: JointPMF) -> float:
    """D(P || Q) in bits; +inf when P puts mass where Q has none."""
    if p.spec.sizes != q.spec.sizes:
        raise ShapeMismatch(f"alphabets differ: {p.spec.sizes} vs {q.spec.sizes}")
    return kl_divergence_raw(p.probs, q.probs)


def kl_divergence_raw(p: np.ndarray, q: np.ndarray) -> float:
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    support = p > 0.0
    if np.any(q[support] <= 0.0):
        return math.inf
    ps, qs = p[support], q[support]
    return float((ps * (np.log(ps) - np.log(qs))).sum() / LN2)


def binary_entropy(p: float) -> float:
    """h(p) in bits, with h(0) = h(1) = 0."""
    if not 0.0 <= p <= 1.0:
        raise OutOfRange(f"probability {p!r} outside [0, 1]")
    if p == 0.0 or p == 1.0:
        return 0.0
    return float(-(p * math.log2(p) + (1.0 - p) * math.log2(1.0 - p)))


def conditional_multi_information(coupling: Coupling) -> float:
    """T(X|W) = sum_i H(X_i|W) - H(X_1..X_N|W) in bits.

    Zero exactly when the X's are conditionally independent given the
    auxiliary axis; always >= 0 up to rounding.
    """
    pmf = coupling.pmf
    w_axis = pmf.nvars - 1
    h_w = entropy(pmf, [w_axis])
    total = 0.0
    for i in range(coupling.n_x):
        total += entropy(pmf, [i, w_axis]) - h_w
    h_joint_given_w = entropy(pmf) - h_w
    return total - h_joint_given_w


def multi_information(pmf: JointPMF) -> float:
    """sum_i H(X_i) - H(X_1..X_N) in bits; 0 iff mutually independent."""
    return sum(entropy(pmf, [i]) for i in range(pmf.nvars)) - entropy(pmf)
