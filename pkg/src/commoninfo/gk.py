"""Gacs-Korner common randomness via maximal common part extraction.

The common part of (X_1,...,X_N) is the finest labeling of each variable's
symbols on which all variables agree with probability 1. It falls out of the
connected components of the support graph whose nodes are (variable, symbol)
pairs with positive marginal mass and whose edges join the coordinates of
every positive-probability cell. K is the entropy of the component masses.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dist import JointPMF, entropy_of, marginalize, mutual_information


class _UnionFind:
    """Array-based union-find with path compression and union by size."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, a: int) -> int:
        root = a
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[a] != root:
            self.parent[a], a = root, self.parent[a]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]


@dataclass(frozen=True)
class CommonPart:
    """Component labeling of each variable's alphabet plus component masses.

    labels[i][a] is the component id in 1..k of symbol a of variable i, or 0
    when that symbol has zero marginal probability. Every positive-probability
    cell has all coordinates in the same component.
    """

    labels: tuple
    component_probs: np.ndarray

    @property
    def n_components(self) -> int:
        return len(self.component_probs)


def common_part(pmf: JointPMF) -> CommonPart:
    sizes = pmf.sizes
    nvars = pmf.nvars
    offsets = np.concatenate(([0], np.cumsum(sizes)))
    uf = _UnionFind(int(offsets[-1]))

    tensor = pmf.tensor()
    support = np.argwhere(tensor > 0.0)
    # star per cell: linking every coordinate to the first suffices
    for cell in support:
        anchor = offsets[0] + int(cell[0])
        for i in range(1, nvars):
            uf.union(anchor, offsets[i] + int(cell[i]))

    marginals = [marginalize(pmf, [i]).probs for i in range(nvars)]

    # assign 1-based ids in first-touch order over variable 0's alphabet,
    # then any later variables (symbols unreachable from var 0 can only
    # occur when that symbol has zero joint mass everywhere)
    root_to_id = {}
    labels = []
    for i in range(nvars):
        lab = []
        for a in range(sizes[i]):
            if marginals[i][a] <= 0.0:
                lab.append(0)
                continue
            root = uf.find(int(offsets[i]) + a)
            if root not in root_to_id:
                root_to_id[root] = len(root_to_id) + 1
            lab.append(root_to_id[root])
        labels.append(tuple(lab))

    masses = np.zeros(len(root_to_id))
    lab0 = labels[0]
    probs0 = marginals[0]
    for a in range(sizes[0]):
        if lab0[a] > 0:
            masses[lab0[a] - 1] += probs0[a]
    masses.setflags(write=False)
    return CommonPart(tuple(labels), masses)


def gk_common_randomness(pmf: JointPMF) -> float:
    """K(X_1,...,X_N) in bits: entropy of the maximal common part."""
    cp = common_part(pmf)
    if cp.n_components <= 1:
        return 0.0
    return entropy_of(cp.component_probs)


@dataclass(frozen=True)
class OrderingReport:
    k: float
    pairwise_i: tuple
    i_min_pair: float
    i_max_pair: float
    c_estimate: float
    violations: tuple

    @property
    def ordered(self) -> bool:
        return not self.violations


def measure_ordering(pmf: JointPMF, c_estimate: float,
                     tol: float = 1e-6) -> OrderingReport:
    """Check K <= C (and for pairs K <= I <= C) against a C estimate.

    For more than two variables only K <= C is asserted; there is no
    definitive ordering between C and the pairwise mutual informations'
    minimum, so those stay informational.
    """
    k = gk_common_randomness(pmf)
    pairs = []
    for i in range(pmf.nvars):
        for j in range(i + 1, pmf.nvars):
            pairs.append(((i, j), mutual_information(pmf, [i], [j])))
    i_vals = [v for _, v in pairs]
    i_min, i_max = min(i_vals), max(i_vals)

    violations = []
    if k > c_estimate + tol:
        violations.append(f"K={k:.9g} > C={c_estimate:.9g}")
    if pmf.nvars == 2:
        if k > i_min + tol:
            violations.append(f"K={k:.9g} > I={i_min:.9g}")
        if i_min > c_estimate + tol:
            violations.append(f"I={i_min:.9g} > C={c_estimate:.9g}")
    return OrderingReport(k, tuple(pairs), i_min, i_max, c_estimate,
                          tuple(violations))
