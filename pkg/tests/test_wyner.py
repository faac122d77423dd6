import math

import numpy as np
import pytest

from commoninfo import (
    AlphabetSpec,
    JointPMF,
    entropy,
    marginalize,
    mutual_information,
)
from commoninfo.csbs import a1_of_a0, c_closed_form, csbs3_joint
from commoninfo.errors import InvalidConfig, TooManyParameters
from commoninfo.gk import gk_common_randomness
from commoninfo import models
from commoninfo.models import AuxModel
from commoninfo.wyner import (
    OptConfig,
    brute_force_oracle,
    gamma,
    wyner_ci,
    wyner_upper_via_test_channel,
)

from util import dsbs, random_joint, shared_bit_pair

# Closed-form references from direct high-precision evaluation (mpmath, 40 dps)
C2_01 = 0.87276056680015433836
C2_025 = 0.60952605107342066223
C2_04 = 0.26997134425034553529
C3_025 = 0.74616683061683023005
H_03 = 0.88129089923069261823

# small restart budget keeps the suite fast; the binary cases are easy basins
CFG = OptConfig(restarts=4, seed=0)


def test_dsbs_matches_closed_form():
    for a0, ref in ((0.1, C2_01), (0.25, C2_025), (0.4, C2_04)):
        res = wyner_ci(dsbs(a0), CFG)
        assert abs(res.value - ref) <= 1e-3, (a0, res.value)
        assert res.certificate == "upper"
        assert res.details["cross_gap"] <= CFG.cross_tol


def test_csbs3_matches_closed_form():
    # the joint builder takes the pairwise crossover, the closed form the
    # per-channel one
    res = wyner_ci(csbs3_joint(0.25), CFG)
    assert abs(res.value - C3_025) <= 2e-3
    assert abs(C3_025 - c_closed_form(3, a1_of_a0(0.25))) < 1e-15


def test_independent_product_is_zero():
    rng = np.random.default_rng(3)
    px = rng.dirichlet(np.ones(2))
    py = rng.dirichlet(np.ones(3))
    pmf = JointPMF.from_tensor(np.outer(px, py))
    res = wyner_ci(pmf, CFG)
    assert 0.0 <= res.value <= 1e-9


def test_identical_pair_costs_full_entropy():
    t = np.diag([0.3, 0.7])
    res = wyner_ci(JointPMF.from_tensor(t), CFG)
    assert abs(res.value - H_03) <= 1e-3


def test_shared_bit_pair_costs_one_bit():
    pmf = shared_bit_pair()
    res = wyner_ci(pmf, CFG)
    assert abs(res.value - 1.0) <= 5e-3
    # the extractable bit is a floor for the Wyner rate
    assert gk_common_randomness(pmf) <= res.value + 1e-6


def test_trivial_inputs():
    one = wyner_upper_via_test_channel(JointPMF(AlphabetSpec((1, 1)), np.ones(1)))
    assert one.value == 0.0 and one.details.get("trivial")
    single = wyner_upper_via_test_channel(
        JointPMF(AlphabetSpec((4,)), np.full(4, 0.25)))
    assert single.value == 0.0 and single.certificate == "upper"


def test_grid_oracle_agrees_on_dsbs():
    pmf = dsbs(0.25)
    oracle = brute_force_oracle(pmf, w_size=2)
    assert abs(oracle - C2_025) <= 2e-3
    res = wyner_ci(pmf, CFG)
    assert abs(res.value - oracle) <= 2e-3


def test_gamma_monotone_and_concave_in_delta1():
    pmf = dsbs(0.25)
    vals = []
    for d in (0.0, 0.1, 0.2):
        res = gamma(pmf, d, 0.0, CFG)
        assert res.certificate == "lower"
        assert res.marginal_gap <= d + CFG.feas_tol
        # with slack the synthesized law may beat H(P), never log2(cells)
        assert res.value <= 2.0 + 1e-9
        vals.append(res.value)
    g0, g1, g2 = vals
    assert g0 <= g1 + 1e-6 and g1 <= g2 + 1e-6
    # concave in the divergence budget: midpoint clears the chord
    assert g1 >= 0.5 * (g0 + g2) - 5e-3


def test_gamma_zero_budget_independent_reaches_entropy():
    rng = np.random.default_rng(11)
    px = rng.dirichlet(np.ones(3))
    py = rng.dirichlet(np.ones(2))
    pmf = JointPMF.from_tensor(np.outer(px, py))
    res = gamma(pmf, 0.0, 0.0, CFG)
    assert abs(res.value - entropy(pmf)) <= 5e-3


def test_warm_start_never_hurts():
    cfg = OptConfig(restarts=2, seed=1)
    first = wyner_upper_via_test_channel(dsbs(0.25), cfg)
    again = wyner_upper_via_test_channel(dsbs(0.25), cfg, init=first.model)
    assert again.value <= first.value + 1e-9
    assert again.certificate == "upper"

    g_first = gamma(dsbs(0.25), 0.0, 0.0, cfg)
    g_again = gamma(dsbs(0.25), 0.0, 0.0, cfg, init=g_first.model)
    assert g_again.value >= g_first.value - 1e-9


def test_planted_model_prior_entropy_is_an_upper_bound():
    prior = np.array([0.35, 0.65])
    chans = tuple(np.array(c) for c in (
        [[0.9, 0.1], [0.2, 0.8]],
        [[0.85, 0.15], [0.1, 0.9]],
        [[0.7, 0.3], [0.25, 0.75]],
    ))
    model = AuxModel(prior, chans)
    pmf = model.induced_joint()
    res = wyner_ci(pmf, CFG)
    h_w = -float(np.sum(prior * np.log2(prior)))
    assert res.value <= h_w + CFG.cross_tol
    # largest pairwise dependence is a floor
    pairs = [(0, 1), (0, 2), (1, 2)]
    best_i = max(mutual_information(marginalize(pmf, pr), [0], [1])
                 for pr in pairs)
    assert best_i <= res.value + CFG.cross_tol


def test_ordering_against_other_measures():
    rng = np.random.default_rng(5)
    for _ in range(5):
        pmf = random_joint(rng, (2, 2))
        res = wyner_ci(pmf, CFG)
        i_xy = mutual_information(pmf, [0], [1])
        assert gk_common_randomness(pmf) <= res.value + 1e-6
        assert i_xy <= res.value + CFG.cross_tol
        h_min = min(entropy(marginalize(pmf, [i])) for i in (0, 1))
        assert res.value <= h_min + CFG.cross_tol


def test_pair_marginals_not_above_triple():
    rng = np.random.default_rng(17)
    for _ in range(2):
        pmf = random_joint(rng, (2, 2, 2))
        c3 = wyner_ci(pmf, CFG).value
        for pr in ((0, 1), (0, 2), (1, 2)):
            c2 = wyner_ci(marginalize(pmf, pr), CFG).value
            assert c2 <= c3 + 2 * CFG.cross_tol


def test_same_seed_reproduces_exactly():
    cfg = OptConfig(restarts=2, seed=9)
    a = wyner_ci(dsbs(0.3), cfg)
    b = wyner_ci(dsbs(0.3), cfg)
    assert a.value == b.value
    assert np.array_equal(a.model.matrix, b.model.matrix)


def test_config_validation():
    with pytest.raises(InvalidConfig):
        OptConfig(w_size=0)
    with pytest.raises(InvalidConfig):
        OptConfig(restarts=0)
    with pytest.raises(InvalidConfig):
        OptConfig(penalty_schedule=(4.0, 1.0))
    with pytest.raises(InvalidConfig):
        gamma(dsbs(0.25), -0.1, 0.0, CFG)
    bad = models.TestChannel(np.full((3, 2), 0.5))
    with pytest.raises(InvalidConfig):
        wyner_upper_via_test_channel(dsbs(0.25), CFG, init=bad)
    bad_model = AuxModel(np.ones(1), (np.ones((1, 3)) / 3,))
    with pytest.raises(InvalidConfig):
        gamma(dsbs(0.25), 0.0, 0.0, CFG, init=bad_model)


def test_oracle_budget_guards():
    rng = np.random.default_rng(0)
    with pytest.raises(TooManyParameters):
        brute_force_oracle(random_joint(rng, (3, 3)), w_size=4)
    with pytest.raises(TooManyParameters):
        brute_force_oracle(dsbs(0.25), w_size=2, grid=0.01)
