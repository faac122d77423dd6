"""Rate region tools for the one-encoder, N-decoder network with a shared
branch: every decoder receives a common message (rate r0) plus a private
one (rate r_i).

A witness W pins down the corner point (I(X;W), H(X_1|W), ..., H(X_N|W));
any tuple that coordinatewise dominates some witness corner is achievable.
Membership stays certificate-based: a finite witness list can prove points
in, never out, so the negative answer is Unknown rather than False.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple, Union

import numpy as np

from .dist import (
    Coupling,
    JointPMF,
    conditional_entropy,
    entropy,
    mutual_information,
)
from .errors import IncompatibleAux, InvalidConfig, OutOfRange
from .models import AuxModel, TestChannel

Witness = Union[AuxModel, TestChannel]

# witness marginal must reproduce the source law this tightly (sup norm)
MARGINAL_TOL = 1e-6
# coordinatewise dominance slop when matching corners against targets
DOMINANCE_TOL = 1e-9


@dataclass(frozen=True)
class RateTuple:
    """Common rate plus one private rate per variable, in bits/symbol."""

    r0: float
    r: Tuple[float, ...]

    def __post_init__(self):
        rates = tuple(float(v) for v in self.r)
        if not rates:
            raise OutOfRange("need at least one private rate")
        if self.r0 < 0.0 or any(v < 0.0 for v in rates):
            raise OutOfRange("rates must be nonnegative")
        object.__setattr__(self, "r0", float(self.r0))
        object.__setattr__(self, "r", rates)

    @property
    def total(self) -> float:
        return self.r0 + sum(self.r)


@dataclass(frozen=True)
class RegionCertificate:
    """Proof of achievability: a witness whose corner the point dominates.

    slack[0] is r0 minus the corner's common rate, slack[i] the private
    margins; all entries >= -1e-9 for a valid certificate.
    """

    point: RateTuple
    witness: Witness
    slack: Tuple[float, ...]


@dataclass(frozen=True)
class Unknown:
    """Membership not settled: no supplied witness dominates the target."""

    reason: str = "no dominating witness"


def constant_witness(pmf: JointPMF) -> TestChannel:
    """W identically 1: the no-common-branch corner (0, H(X_1), ...)."""
    return TestChannel(np.ones((pmf.spec.ncells, 1)))


def copy_witness(pmf: JointPMF) -> TestChannel:
    """W = X itself: the all-common corner (H(X), 0, ..., 0)."""
    return TestChannel(np.eye(pmf.spec.ncells))


def _corner_of_coupling(coup: Coupling) -> RateTuple:
    n = coup.n_x
    w_axis = [n]
    r0 = mutual_information(coup.pmf, range(n), w_axis)
    priv = tuple(conditional_entropy(coup.pmf, [i], w_axis) for i in range(n))
    # clamp float dust; the quantities are nonnegative by definition
    return RateTuple(max(r0, 0.0), tuple(max(v, 0.0) for v in priv))


def corner_point(pmf: JointPMF, aux: Witness,
                 tol: float = MARGINAL_TOL) -> RateTuple:
    """Corner (I(X;W), H(X_1|W), ..., H(X_N|W)) of the witness coupling.

    A TestChannel reproduces the source marginal by construction; a product
    model must do so within tol in sup norm or it is rejected, since its
    corner would describe the wrong source. Callers holding a witness that
    was certified against a looser divergence budget can widen tol to match.
    """
    if isinstance(aux, TestChannel):
        return _corner_of_coupling(aux.coupling(pmf))
    if aux.sizes != pmf.sizes:
        raise IncompatibleAux(
            f"witness alphabet {aux.sizes} does not match source {pmf.sizes}")
    gap = float(np.max(np.abs(aux.induced_joint().probs - pmf.probs)))
    if gap > tol:
        raise IncompatibleAux(
            f"witness marginal is off by {gap:.3e} in sup norm")
    return _corner_of_coupling(aux.coupling())


def certify_achievable(pmf: JointPMF, target: RateTuple,
                       witnesses: Sequence[Witness],
                       tol: float = MARGINAL_TOL
                       ) -> Union[RegionCertificate, Unknown]:
    """Certificate from the first witness whose corner the target dominates.

    Witnesses that fail the marginal compatibility check at tol are skipped;
    they cannot speak for this source. Optimizer-produced witnesses match
    the source only to their convergence scale, so pass the tolerance they
    were accepted under. An Unknown result proves nothing about the point,
    it only says these witnesses do not settle it.
    """
    if not witnesses:
        raise InvalidConfig("witness list must be nonempty")
    if len(target.r) != pmf.nvars:
        raise InvalidConfig(
            f"target carries {len(target.r)} private rates for "
            f"{pmf.nvars} variables")
    for wit in witnesses:
        try:
            corner = corner_point(pmf, wit, tol=tol)
        except IncompatibleAux:
            continue
        slack = (target.r0 - corner.r0,) + tuple(
            t - c for t, c in zip(target.r, corner.r))
        if all(s >= -DOMINANCE_TOL for s in slack):
            return RegionCertificate(target, wit, slack)
    return Unknown()


def sum_rate_slack(pmf: JointPMF, point: RateTuple) -> float:
    """Total rate minus H(X_1..X_N), in bits.

    Corners of conditionally independent witnesses sit at zero slack, so
    minimizing r0 over near-zero-slack certified points recovers the
    common-information rate.
    """
    if len(point.r) != pmf.nvars:
        raise InvalidConfig(
            f"point carries {len(point.r)} private rates for "
            f"{pmf.nvars} variables")
    return point.total - entropy(pmf)
