"""Circularly symmetric binary sources and their exact common-information forms.

The N-variable model feeds a fair bit W through N independent BSC(a1)
channels. Every pair of outputs is then a doubly symmetric binary pair with
crossover a0 = 2 a1 (1 - a1), and

    C(X_1,...,X_N) = H(X_1,...,X_N) - N h(a1) = 1 - H(W | X_1..X_N),

both sides computable exactly from the (N+1) Hamming weight classes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .dist import CELL_CAP, JointPMF, binary_entropy
from .errors import OutOfRange, TensorTooLarge
from .models import AuxModel


@dataclass(frozen=True)
class CsbsParams:
    """Parameter record: exactly one of a0 (pairwise crossover) or a1 (BSC)."""

    n_vars: int
    a0: Optional[float] = None
    a1: Optional[float] = None

    def __post_init__(self):
        if self.n_vars < 2:
            raise OutOfRange(f"need at least 2 variables, got {self.n_vars}")
        if (self.a0 is None) == (self.a1 is None):
            raise OutOfRange("exactly one of a0/a1 must be given")
        val = self.a0 if self.a0 is not None else self.a1
        if not 0.0 <= val <= 0.5:
            raise OutOfRange(f"crossover {val!r} outside [0, 1/2]")

    def bsc_crossover(self) -> float:
        return self.a1 if self.a1 is not None else a1_of_a0(self.a0)


def a1_of_a0(a0: float) -> float:
    """BSC crossover a1 = 1/2 - 1/2 sqrt(1 - 2 a0) matching pairwise a0."""
    if not 0.0 <= a0 <= 0.5:
        raise OutOfRange(f"a0 = {a0!r} outside [0, 1/2]")
    return 0.5 - 0.5 * math.sqrt(1.0 - 2.0 * a0)


def a0_of_a1(a1: float) -> float:
    """Inverse map: pairwise crossover 2 a1 (1 - a1)."""
    if not 0.0 <= a1 <= 0.5:
        raise OutOfRange(f"a1 = {a1!r} outside [0, 1/2]")
    return 2.0 * a1 * (1.0 - a1)


def dsbs_joint(a0: float) -> JointPMF:
    """Uniform binary pair with crossover a0."""
    if not 0.0 <= a0 <= 0.5:
        raise OutOfRange(f"a0 = {a0!r} outside [0, 1/2]")
    t = np.array([[(1.0 - a0) / 2.0, a0 / 2.0],
                  [a0 / 2.0, (1.0 - a0) / 2.0]])
    return JointPMF.from_tensor(t)


def csbs3_joint(a0: float) -> JointPMF:
    """Three-variable source: mass 1/2 - 3a0/4 on 000 and 111, a0/4 elsewhere."""
    if not 0.0 <= a0 <= 0.5:
        raise OutOfRange(f"a0 = {a0!r} outside [0, 1/2]")
    t = np.full((2, 2, 2), a0 / 4.0)
    t[0, 0, 0] = t[1, 1, 1] = 0.5 - 0.75 * a0
    return JointPMF.from_tensor(t)


def _weight_class_masses(n_vars: int, a1: float) -> Tuple[np.ndarray, np.ndarray]:
    """Per-cell masses (A_k, B_k) of (X in class k, W=0) and (..., W=1)."""
    k = np.arange(n_vars + 1, dtype=np.float64)
    a_k = 0.5 * np.power(a1, k) * np.power(1.0 - a1, n_vars - k)  # W=0: k flips
    b_k = a_k[::-1].copy()                                        # W=1 mirrors
    return a_k, b_k


def bsc_mixture_joint(n_vars: int, a1: float) -> Tuple[JointPMF, AuxModel]:
    """Joint law of N BSC(a1) outputs driven by one fair bit, plus its model.

    Cell probability depends only on the Hamming weight k:
    P_k = [(1-a1)^(N-k) a1^k + a1^(N-k) (1-a1)^k] / 2.
    """
    if n_vars < 2:
        raise OutOfRange(f"need at least 2 variables, got {n_vars}")
    if not 0.0 <= a1 <= 0.5:
        raise OutOfRange(f"a1 = {a1!r} outside [0, 1/2]")
    if 2 ** n_vars > CELL_CAP:
        raise TensorTooLarge(f"2^{n_vars} cells exceed the {CELL_CAP} cap")

    a_k, b_k = _weight_class_masses(n_vars, a1)
    p_k = a_k + b_k
    idx = np.arange(2 ** n_vars)
    weights = np.zeros(2 ** n_vars, dtype=np.int64)
    for i in range(n_vars):
        weights += (idx >> i) & 1
    probs = p_k[weights]
    pmf = JointPMF.from_tensor(probs.reshape((2,) * n_vars))

    bsc = np.array([[1.0 - a1, a1], [a1, 1.0 - a1]])
    model = AuxModel(np.array([0.5, 0.5]), tuple(bsc for _ in range(n_vars)))
    return pmf, model


def c_closed_form(n_vars: int, a1: float) -> float:
    """C_N = H(X_1..X_N) - N h(a1), via the weight-class entropy sum."""
    if n_vars < 2:
        raise OutOfRange(f"need at least 2 variables, got {n_vars}")
    if not 0.0 <= a1 <= 0.5:
        raise OutOfRange(f"a1 = {a1!r} outside [0, 1/2]")
    a_k, b_k = _weight_class_masses(n_vars, a1)
    p_k = a_k + b_k
    counts = np.array([math.comb(n_vars, k) for k in range(n_vars + 1)],
                      dtype=np.float64)
    nz = p_k > 0
    h_joint = float(-(counts[nz] * p_k[nz] * np.log2(p_k[nz])).sum())
    return max(h_joint - n_vars * binary_entropy(a1), 0.0)


def asymptote_gap(n_vars: int, a1: float) -> float:
    """Exact H(W | X_1..X_N) for the mixture model; equals 1 - C_N.

    Decreases to 0 as N grows for fixed a1 < 1/2, which is what drives
    C_N -> 1 = H(W).
    """
    if n_vars < 2:
        raise OutOfRange(f"need at least 2 variables, got {n_vars}")
    if not 0.0 <= a1 <= 0.5:
        raise OutOfRange(f"a1 = {a1!r} outside [0, 1/2]")
    a_k, b_k = _weight_class_masses(n_vars, a1)
    p_k = a_k + b_k
    counts = np.array([math.comb(n_vars, k) for k in range(n_vars + 1)],
                      dtype=np.float64)
    gap = 0.0
    for k in range(n_vars + 1):
        if p_k[k] <= 0:
            continue
        gap += counts[k] * p_k[k] * binary_entropy(float(a_k[k] / p_k[k]))
    return gap
