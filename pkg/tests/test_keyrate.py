import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bb84sim.keyrate import (
    DecoyObservations,
    IntensityObservation,
    RateModelParams,
    approx_rate,
    binary_entropy,
    decoy_bounds,
    error_threshold,
    gllp_rate,
    ideal_bounds,
    lp_bounds,
    lp_min_y1,
    model_gain_qber,
    model_observations,
    optimize_mu,
    p_multi,
    p_rec,
    single_photon_rate,
    true_single_photon,
)

# 30-digit mpmath evaluations, frozen
P_MULTI_01 = 0.00467884016044446951932603460909
THRESHOLD = 0.110027864438359551261811704335
MU_OPT_1E3, G_OPT_1E3 = 0.00100100049966537296, 5.00333207866201265e-7
MU_OPT_1E2 = 0.0101004965354458446
Y1_LOWER_REF = 0.00970602143427904277589274141261


def gllp_reference(mu, eta, y0, ed, f_ec, q, y1=None, e1=None):
    """Second, independent spelling of the GLLP rate (no clamping)."""
    h = lambda x: 0.0 if x in (0.0, 1.0) else -x * math.log(x, 2) - (1 - x) * math.log(1 - x, 2)
    Q = 1 - (1 - y0) * math.exp(-eta * mu)
    EQ = y0 / 2 + ed * (1 - math.exp(-eta * mu))
    E = EQ / Q
    if y1 is None:
        Q1 = max(0.0, Q - (1 - math.exp(-mu) - mu * math.exp(-mu)))
        e1 = min(0.5, EQ / Q1) if Q1 > 0 else 0.5
    else:
        Q1 = y1 * mu * math.exp(-mu)
    return q * (Q1 * (1 - h(e1)) - Q * f_ec * h(E))


def test_p_multi_frozen():
    assert p_multi(0.1) == pytest.approx(P_MULTI_01, rel=1e-13)
    assert 0.004 <= p_multi(0.1) <= 0.006
    assert p_multi(0.0) == 0.0
    with pytest.raises(ValueError):
        p_multi(-1.0)


@given(st.floats(0, 20))
def test_p_multi_is_poisson_tail(mu):
    direct = 1 - math.exp(-mu) - mu * math.exp(-mu)
    assert p_multi(mu) == pytest.approx(direct, abs=1e-15)
    assert 0.0 <= p_multi(mu) <= 1.0


@given(st.floats(1e-8, 0.05))
def test_p_multi_small_mu_expansion(mu):
    # mu^2/2 - mu^3/3 + O(mu^4); relative accuracy survives cancellation
    series = mu**2 / 2 - mu**3 / 3 + mu**4 / 8
    assert p_multi(mu) == pytest.approx(series, rel=1e-4)


def test_p_rec_variants():
    assert p_rec(0.1, 0.01) == pytest.approx(1 - math.exp(-0.001))
    assert p_rec(0.1, 0.01, printed_variant=True) == pytest.approx(1 - 0.001 * math.exp(-0.001))
    with pytest.raises(ValueError):
        p_rec(0.1, 1.5)


def test_optimize_mu_examples():
    mu, g = optimize_mu(0.01)
    assert abs(mu - 0.01) <= 0.001
    assert mu == pytest.approx(MU_OPT_1E2, rel=1e-6)
    mu, g = optimize_mu(1e-3)
    assert g == pytest.approx(1e-3**2 / 2, rel=0.05)
    assert (mu, g) == pytest.approx((MU_OPT_1E3, G_OPT_1E3), rel=1e-6)
    with pytest.raises(ValueError):
        optimize_mu(0.0)


def test_optimize_mu_against_dense_grid():
    grid = np.linspace(1e-5, 0.1, 200_001)
    values = -np.expm1(-grid * 0.01) - (-np.expm1(-grid) - grid * np.exp(-grid))
    assert optimize_mu(0.01)[0] == pytest.approx(grid[np.argmax(values)], abs=1e-6)


def test_optimum_scaling_law():
    etas = np.logspace(-3, -1, 9)
    opt = [optimize_mu(e) for e in etas]
    slope = np.polyfit(np.log(etas), np.log([g for _, g in opt]), 1)[0]
    assert slope == pytest.approx(2.0, abs=0.1)
    for eta, (mu, _) in zip(etas, opt):
        if eta <= 0.01:
            assert 0.8 <= mu / eta <= 1.2


def test_binary_entropy_values():
    assert binary_entropy(0.0) == 0.0 and binary_entropy(1.0) == 0.0
    assert binary_entropy(0.5) == 1.0
    with pytest.raises(ValueError):
        binary_entropy(1.2)


@given(st.floats(0, 1))
def test_binary_entropy_symmetry(e):
    assert binary_entropy(e) == pytest.approx(binary_entropy(1 - e), abs=1e-12)


def test_threshold_and_single_photon_rate():
    assert error_threshold() == pytest.approx(THRESHOLD, abs=1e-10)
    assert abs(error_threshold() - 0.11) <= 0.0005
    assert single_photon_rate(0.0) == 1.0
    assert single_photon_rate(0.2) < 0


def test_model_gain_qber_examples():
    gain, qber = model_gain_qber(RateModelParams(mu=0.1, eta=0.1, dark_count_prob=0.0, misalignment=0.0))
    assert qber == 0.0 and gain == pytest.approx(1 - math.exp(-0.01))
    gain, qber = model_gain_qber(RateModelParams(mu=0.1, eta=0.0, dark_count_prob=1e-5))
    assert gain == pytest.approx(1e-5) and qber == pytest.approx(0.5)
    gain, qber = model_gain_qber(RateModelParams(mu=0.1, eta=0.0, dark_count_prob=0.0))
    assert gain == 0.0 and math.isnan(qber)


def test_gllp_ideal_limit():
    p = RateModelParams(mu=0.0, eta=0.3, dark_count_prob=0.0, misalignment=0.0, f_ec=1.0, q=1.0)
    # mu -> 0 makes p_multi vanish; compare at a small mu where it is negligible
    p = p.with_(mu=1e-6)
    gain, _ = model_gain_qber(p)
    assert gllp_rate(p) == pytest.approx(gain, rel=1e-5)


def test_gllp_dual_implementation():
    p = RateModelParams(mu=0.1, eta=0.01, dark_count_prob=1e-5, misalignment=0.01, f_ec=1.22, q=0.5)
    assert gllp_rate(p, clamp=False) == pytest.approx(gllp_reference(0.1, 0.01, 1e-5, 0.01, 1.22, 0.5), abs=1e-12)
    y1, e1 = true_single_photon(p)
    assert gllp_rate(p, ideal_bounds(p), clamp=False) == pytest.approx(
        gllp_reference(0.1, 0.01, 1e-5, 0.01, 1.22, 0.5, y1, e1), abs=1e-12
    )
    assert gllp_rate(p, ideal_bounds(p)) == pytest.approx(3.46168736849646517e-4, rel=1e-9)


@given(
    mu=st.floats(0.01, 1.0), eta=st.floats(1e-4, 0.5), y0=st.floats(0, 1e-4),
    ed=st.floats(0, 0.05), f_ec=st.floats(1.0, 1.5),
)
def test_gllp_matches_reference_everywhere(mu, eta, y0, ed, f_ec):
    p = RateModelParams(mu, eta, y0, ed, f_ec, 0.5)
    assert gllp_rate(p, clamp=False) == pytest.approx(gllp_reference(mu, eta, y0, ed, f_ec, 0.5), abs=1e-12)
    assert gllp_rate(p) >= 0.0
    if gllp_rate(p) > 0:
        gain, _ = model_gain_qber(p)
        assert gain > p_multi(mu)


def test_approx_rate_excess_regime():
    # mu = 0.5, eta = 0.05: multi-photon probability outruns detection
    assert approx_rate(0.5, 0.05) < 0
    assert approx_rate(0.01, 0.05) > 0


# decoy bounds ---------------------------------------------------------------

REF = RateModelParams(mu=0.5, eta=0.01, dark_count_prob=1e-5, misalignment=0.01)


def test_decoy_reference_point():
    b = decoy_bounds(model_observations(REF, 0.1))
    y1, _ = true_single_photon(REF)
    assert b.y1_lower == pytest.approx(Y1_LOWER_REF, rel=1e-10)
    assert b.y1_lower <= y1
    assert (y1 - b.y1_lower) / y1 <= 0.10
    assert not b.vacuous and not b.suppression_flag
    assert b.e1_upper >= true_single_photon(REF)[1]


def test_decoy_bound_below_lp_oracle():
    obs = model_observations(REF, 0.1)
    assert lp_min_y1(obs) >= decoy_bounds(obs).y1_lower - 1e-6
    assert lp_bounds(obs).method == "lp-oracle"


@given(
    mu=st.floats(0.2, 0.9), nu_frac=st.floats(0.05, 0.6), eta=st.floats(1e-4, 0.2),
    y0=st.floats(0, 1e-4), ed=st.floats(0, 0.05),
)
def test_decoy_bounds_sound_on_benign_draws(mu, nu_frac, eta, y0, ed):
    p = RateModelParams(mu=mu, eta=eta, dark_count_prob=y0, misalignment=ed)
    obs = model_observations(p, mu * nu_frac)
    b = decoy_bounds(obs)
    y1, e1 = true_single_photon(p)
    assert b.y1_lower <= y1 + 1e-12
    assert b.e1_upper >= e1 - 1e-9 or b.e1_upper == 0.5
    assert lp_min_y1(obs) >= b.y1_lower - 1e-6


def test_decoy_refusals():
    good = model_observations(REF, 0.1).by_label
    with pytest.raises(ValueError, match="vacuum"):
        decoy_bounds(DecoyObservations({"signal": good["signal"], "decoy": good["decoy"]}))
    swapped = IntensityObservation(0.7, good["decoy"].gain, good["decoy"].qber, 1)
    with pytest.raises(ValueError, match="ordering"):
        decoy_bounds(DecoyObservations({"signal": good["signal"], "decoy": swapped, "vacuum": good["vacuum"]}))


def test_ideal_bounds_are_exact():
    b = ideal_bounds(REF)
    assert b.y1_lower == pytest.approx(1e-5 + 0.01 * (1 - 1e-5))
    assert b.method == "infinite-decoy-ideal"
