"""Auxiliary-variable parameterizations used by the optimizers.

Two dual shapes:
  AuxModel    p(w) plus N memoryless channels q_i(x_i|w); conditional
              independence holds by construction, the induced marginal
              Q(x) generally differs from the target P.
  TestChannel r(w|x) attached to the exact source law; the marginal is
              exact by construction, conditional independence is not.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .dist import (
    AlphabetSpec,
    Coupling,
    JointPMF,
    NORM_TOL,
    _frozen_array,
    entropy_of,
)
from .errors import NegativeMass, NotNormalized, ShapeMismatch


def _check_rows_stochastic(mat: np.ndarray, what: str) -> None:
    if np.any(mat < 0.0) or not np.all(np.isfinite(mat)):
        raise NegativeMass(f"{what} has negative or non-finite entries")
    sums = mat.sum(axis=-1)
    bad = np.abs(sums - 1.0) > NORM_TOL
    if np.any(bad):
        raise NotNormalized(float(sums[bad].flat[0]), NORM_TOL)


@dataclass(frozen=True)
class AuxModel:
    """W ~ w_prior, X_i | W = w ~ channels[i][w, :], independent across i."""

    w_prior: np.ndarray
    channels: Tuple[np.ndarray, ...]

    def __post_init__(self):
        pw = _frozen_array(self.w_prior)
        if pw.ndim != 1 or pw.shape[0] < 1:
            raise ShapeMismatch("w_prior must be a nonempty vector")
        _check_rows_stochastic(pw[None, :], "w_prior")
        chans = []
        for i, c in enumerate(self.channels):
            c = _frozen_array(c)
            if c.ndim != 2 or c.shape[0] != pw.shape[0]:
                raise ShapeMismatch(
                    f"channel {i} must have one row per W value, got {c.shape}"
                )
            _check_rows_stochastic(c, f"channel {i}")
            chans.append(c)
        if not chans:
            raise ShapeMismatch("need at least one channel")
        object.__setattr__(self, "w_prior", pw)
        object.__setattr__(self, "channels", tuple(chans))

    @property
    def w_size(self) -> int:
        return self.w_prior.shape[0]

    @property
    def sizes(self) -> tuple:
        return tuple(c.shape[1] for c in self.channels)

    @property
    def n_vars(self) -> int:
        return len(self.channels)

    def cell_table(self) -> np.ndarray:
        """K[w, cell] = prod_i q_i(x_i|w), cells row-major."""
        table = np.ones((self.w_size, 1))
        for c in self.channels:
            table = (table[:, :, None] * c[:, None, :]).reshape(self.w_size, -1)
        return table

    def induced_joint(self) -> JointPMF:
        """Q(x) = sum_w p(w) prod_i q_i(x_i|w)."""
        q = self.w_prior @ self.cell_table()
        return JointPMF(AlphabetSpec(self.sizes), q)

    def coupling(self) -> Coupling:
        joint = self.w_prior[:, None] * self.cell_table()  # (w, cells)
        tensor = joint.T.reshape(self.sizes + (self.w_size,))
        return Coupling(JointPMF.from_tensor(tensor), self.w_size)

    def conditional_entropy_given_w(self) -> float:
        """H(X_hat|W) = sum_w p(w) sum_i H(q_i(.|w)), in bits."""
        total = 0.0
        for c in self.channels:
            row_h = np.array([entropy_of(row) for row in c])
            total += float(self.w_prior @ row_h)
        return total

    def mutual_information_with_w(self) -> float:
        """I(X_hat; W) = H(X_hat) - H(X_hat|W), in bits."""
        q = self.w_prior @ self.cell_table()
        return entropy_of(q) - self.conditional_entropy_given_w()

    def induced_test_channel(self) -> "TestChannel":
        """Posterior p(w|x_hat) of the model's own joint, as a TestChannel.

        Applied to a target pmf close to the induced joint this gives a
        test channel with a small conditional-independence residual, which
        makes it a useful warm start for the other optimization route.
        """
        joint = self.w_prior[:, None] * self.cell_table()  # (w, cells)
        q = joint.sum(axis=0)
        r = np.where(q[None, :] > 0.0, joint / np.maximum(q[None, :], 1e-300),
                     1.0 / self.w_size).T
        return TestChannel(r / r.sum(axis=1, keepdims=True))


@dataclass(frozen=True)
class TestChannel:
    """Conditional r(w|x) over joint cells; row cell -> distribution on W."""

    matrix: np.ndarray

    def __post_init__(self):
        m = _frozen_array(self.matrix)
        if m.ndim != 2 or m.shape[1] < 1:
            raise ShapeMismatch(f"test channel must be 2-d, got {m.shape}")
        _check_rows_stochastic(m, "test channel")
        object.__setattr__(self, "matrix", m)

    @property
    def w_size(self) -> int:
        return self.matrix.shape[1]

    def coupling(self, pmf: JointPMF) -> Coupling:
        if pmf.spec.ncells != self.matrix.shape[0]:
            raise ShapeMismatch(
                f"channel has {self.matrix.shape[0]} rows, pmf has "
                f"{pmf.spec.ncells} cells"
            )
        joint = pmf.probs[:, None] * self.matrix  # (cells, w)
        tensor = joint.reshape(pmf.sizes + (self.w_size,))
        return Coupling(JointPMF.from_tensor(tensor), self.w_size)

    def w_marginal(self, pmf: JointPMF) -> np.ndarray:
        return pmf.probs @ self.matrix

    def induced_aux(self, pmf: JointPMF) -> "AuxModel":
        """Product-channel model with this coupling's W prior and per-variable
        conditionals. Induces the same joint iff the coupling is conditionally
        independent; otherwise the best product surrogate of it.
        """
        coup = self.coupling(pmf)
        tensor = coup.pmf.tensor()
        n = coup.n_x
        p_w = tensor.sum(axis=tuple(range(n)))
        safe_pw = np.where(p_w > 0.0, p_w, 1.0)
        chans = []
        for i in range(n):
            axes = tuple(a for a in range(n) if a != i)
            pair = tensor.sum(axis=axes)            # (s_i, w)
            rows = (pair / safe_pw[None, :]).T      # (w, s_i)
            dead = p_w <= 0.0
            if np.any(dead):
                rows[dead] = 1.0 / rows.shape[1]
            # nudge off the boundary so ascent gradients stay finite
            rows = rows + 1e-12
            chans.append(rows / rows.sum(axis=1)[:, None])
        return AuxModel(p_w / p_w.sum(), tuple(chans))
