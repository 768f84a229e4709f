import dataclasses
import math

import numpy as np
import pytest

from secrelay.analytics import (
    EsrBreakdown,
    ThresholdRt,
    dmt_reliability,
    dmt_secrecy,
    esr_dbcj,
    esr_dt_lb,
    leakage_floor,
    outage_threshold,
    ppos_dbcj,
    ppos_dbcj_asymptotic,
    ppos_dt,
    ser_dbcj,
    ser_dbcj_asymptotic,
    sop_dbcj,
    sop_dbcj_asymptotic,
    sop_dt,
)
from secrelay.model import EveModel, MeanGains, Modulation, SystemConfig
from secrelay.montecarlo import (
    Metric,
    esr_quadrature_oracle,
    estimate,
    ser_quadrature_oracle,
)
from secrelay.policy import Scheme
from secrelay.specfun import EULER_GAMMA, scaled_e1

SQRT2 = math.sqrt(2.0)


def single_relay(mu_rd=1.0) -> MeanGains:
    return MeanGains.iid(1, 0, mu_rd=mu_rd)


def three_relays() -> MeanGains:
    return MeanGains(
        mu_sr=np.ones(3),
        mu_rd=np.array([0.5, 1.0, 2.0]),
        mu_se=np.zeros(0),
        mu_ed=np.zeros(0),
        mu_sd=1.0,
    )


def dt_config(n_antennas, k, l, rho, model=EveModel.NCE) -> SystemConfig:
    return SystemConfig(
        n_antennas=n_antennas, n_relays=k, n_eves=l, snr_linear=rho, eve_model=model
    )


# ---------------------------------------------------------------------------
# thresholds


def test_leakage_floor_values_and_domain():
    assert leakage_floor(0.0) == pytest.approx(SQRT2, rel=1e-15)
    assert leakage_floor(1.0) == pytest.approx(2.0, rel=1e-15)
    for bad in (-0.1, math.nan, math.inf):
        with pytest.raises(ValueError):
            leakage_floor(bad)


def test_outage_threshold_values():
    # target 0 reduces to B(1+B); at target 1 the bracket is 4(1+B)-1.
    b = SQRT2
    assert outage_threshold(0.0, 0.0).r_tilde == pytest.approx(b * (1 + b), rel=1e-15)
    assert outage_threshold(0.0, 1.0).r_tilde == pytest.approx(
        20.899494936611664, rel=1e-13
    )
    # 2^(2*0.5) = 2 exactly: (1+B)(1+2B) = 5+3*sqrt(2)
    assert outage_threshold(0.0, 0.5).r_tilde == pytest.approx(
        5.0 + 3.0 * SQRT2, rel=1e-14
    )
    with pytest.raises(ValueError):
        outage_threshold(0.0, -1.0)
    with pytest.raises(ValueError):
        outage_threshold(-0.5, 1.0)


def test_threshold_types_frozen():
    with pytest.raises(dataclasses.FrozenInstanceError):
        outage_threshold(0.0, 1.0).r_tilde = 0.0
    bd = esr_dbcj(single_relay(), 10.0)
    assert isinstance(bd, EsrBreakdown)
    with pytest.raises(dataclasses.FrozenInstanceError):
        bd.esr = 0.0
    assert isinstance(outage_threshold(0.0, 0.0), ThresholdRt)


# ---------------------------------------------------------------------------
# positive-rate probability, relayed


def test_ppos_single_relay_value():
    # 1 - (1 - e^{-(2+sqrt2)/10}) = e^{-(2+sqrt2)/10}
    p = ppos_dbcj(single_relay(), 10.0)
    assert p == pytest.approx(math.exp(-(2.0 + SQRT2) / 10.0), rel=1e-14)
    assert p == pytest.approx(0.7107593622125608, rel=1e-13)


def test_ppos_limits_and_monotonicity():
    g1 = single_relay()
    assert ppos_dbcj(g1, 1e8) > 1.0 - 1e-6
    grid = [1.0, 3.0, 10.0, 100.0, 1e4]
    vals = [ppos_dbcj(g1, r) for r in grid]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    # more relays help at any fixed rho
    assert ppos_dbcj(MeanGains.iid(3, 0), 5.0) > ppos_dbcj(g1, 5.0)


def test_ppos_asymptote_matches_exact_at_high_snr():
    g = three_relays()
    exact = ppos_dbcj(g, 1e4)
    asym = ppos_dbcj_asymptotic(g, 1e4)
    assert asym == pytest.approx(exact, abs=1e-9)
    # hand value for K=1: 1 - B(1+B)/gbar
    assert ppos_dbcj_asymptotic(single_relay(), 100.0) == pytest.approx(
        1.0 - (2.0 + SQRT2) / 100.0, rel=1e-14
    )


def test_ppos_matches_order_statistics_sampling():
    # Frequency of the best second hop clearing B(1+B), 1e6 draws, 3 sigma.
    g = three_relays()
    rho = 3.0
    p = ppos_dbcj(g, rho)
    thr = outage_threshold(0.0, 0.0).r_tilde
    rng = np.random.default_rng(271)
    best = rng.exponential(rho * g.mu_rd, size=(10**6, 3)).max(axis=1)
    freq = float((best > thr).mean())
    sigma = math.sqrt(p * (1.0 - p) / 10**6)
    assert abs(freq - p) < 3.0 * sigma


# ---------------------------------------------------------------------------
# positive-rate probability, direct transmission


def test_ppos_dt_unit_means_value_and_snr_free():
    g = MeanGains.iid(1, 1)
    cfg = dt_config(16, 1, 1, 10.0)
    expected = (-math.expm1(-16.0)) ** 2
    assert ppos_dt(g, cfg, EveModel.NCE) == pytest.approx(expected, rel=1e-14)
    # both sides scale with rho, so the value cannot depend on it
    cfg_hi = dt_config(16, 1, 1, 1e6)
    assert ppos_dt(g, cfg_hi, EveModel.NCE) == pytest.approx(
        ppos_dt(g, cfg, EveModel.NCE), rel=1e-14
    )


def test_ppos_dt_antenna_and_node_trends():
    g = MeanGains.iid(1, 0)
    vals = [ppos_dt(g, dt_config(ns, 1, 0, 7.0), EveModel.NCE) for ns in (4, 16, 64, 256)]
    # saturates to 1.0 exactly in doubles once e^{-Ns} underflows the ulp
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    assert vals[1] > vals[0]
    assert vals[-1] == 1.0
    # more malicious nodes, same antennas: strictly worse
    by_k = [
        ppos_dt(MeanGains.iid(k, 0), dt_config(4, k, 0, 7.0), EveModel.NCE)
        for k in range(1, 6)
    ]
    assert all(b < a for a, b in zip(by_k, by_k[1:]))


def test_ppos_dt_collusion_never_helps():
    g = MeanGains(
        mu_sr=np.array([4.0]),
        mu_rd=np.ones(1),
        mu_se=np.array([3.0, 5.0]),
        mu_ed=np.ones(2),
        mu_sd=1.0,
    )
    cfg = dt_config(16, 1, 2, 10.0, EveModel.CE)
    assert ppos_dt(g, cfg, EveModel.CE) < ppos_dt(g, cfg, EveModel.NCE)
    # a single eavesdropper has nothing to combine
    g1 = MeanGains.iid(1, 1)
    cfg1 = dt_config(16, 1, 1, 10.0)
    assert ppos_dt(g1, cfg1, EveModel.CE) == ppos_dt(g1, cfg1, EveModel.NCE)


# ---------------------------------------------------------------------------
# ergodic secrecy rate, relayed


def test_esr_single_relay_against_quadrature_constant():
    bd = esr_dbcj(single_relay(), 10.0)
    assert bd.esr == pytest.approx(0.34828587721600157, rel=1e-9)
    # closed form for one relay: e^s E1(s)/(2 ln2) - log2(1+B)/2 at s=(1+B)/gbar
    direct = scaled_e1((1.0 + SQRT2) / 10.0) / (2.0 * math.log(2.0)) - 0.5 * math.log2(
        1.0 + SQRT2
    )
    assert bd.esr == pytest.approx(direct, rel=1e-13)


def test_esr_matches_quadrature_oracle():
    g = MeanGains(
        mu_sr=np.ones(2),
        mu_rd=np.array([0.5, 2.0]),
        mu_se=np.zeros(0),
        mu_ed=np.zeros(0),
        mu_sd=1.0,
    )
    for c in (0.0, 0.8):
        oracle = esr_quadrature_oracle(g, 50.0, c)
        assert esr_dbcj(g, 50.0, c).esr == pytest.approx(oracle, rel=1e-10)


def test_esr_slope_is_half_and_affine_identity():
    for k, c, rho in ((1, 0.0, 10.0), (3, 0.0, 100.0), (2, 1.5, 40.0)):
        bd = esr_dbcj(MeanGains.iid(k, 0), rho, c)
        assert bd.high_snr_slope == 0.5
        assert bd.asymptotic_esr == pytest.approx(
            0.5 * (math.log2(rho) - bd.power_offset), abs=1e-9
        )
    # distinct means exercise the subset sum inside the offset
    bd = esr_dbcj(three_relays(), 25.0, 0.4)
    assert bd.asymptotic_esr == pytest.approx(
        0.5 * (math.log2(25.0) - bd.power_offset), abs=1e-9
    )


def test_esr_asymptote_hand_value_single_relay():
    # E[ln gamma] = ln(gbar) - eulergamma for one exponential link
    bd = esr_dbcj(single_relay(), 40.0)
    expected = (math.log(40.0) - EULER_GAMMA) / (2.0 * math.log(2.0)) - math.log2(
        1.0 + SQRT2
    )
    assert bd.asymptotic_esr == pytest.approx(expected, rel=1e-12)


def test_esr_asymptote_converges():
    bd = esr_dbcj(MeanGains.iid(2, 0), 1e6)
    assert abs(bd.esr - bd.asymptotic_esr) < 1e-4


def test_esr_clamped_at_zero_for_weak_channels():
    bd = esr_dbcj(MeanGains.iid(2, 0), 1e-3)
    assert bd.esr == 0.0
    assert bd.asymptotic_esr < 0.0  # the affine line is reported unclamped


def test_esr_monotone_in_snr_relays_and_collusion():
    rhos = [1.0, 10.0, 100.0, 1e3]
    vals = [esr_dbcj(MeanGains.iid(2, 0), r).esr for r in rhos]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    by_k = [esr_dbcj(MeanGains.iid(k, 0), 100.0).esr for k in range(1, 6)]
    assert all(b > a for a, b in zip(by_k, by_k[1:]))
    by_c = [esr_dbcj(MeanGains.iid(2, 0), 100.0, c).esr for c in (0.0, 0.5, 1.0, 2.0)]
    assert all(b < a for a, b in zip(by_c, by_c[1:]))


# ---------------------------------------------------------------------------
# ergodic secrecy rate, direct transmission


def test_esr_dt_lb_single_node_penalty():
    # K+L=1: bound = log2(1+Ns*gbar_sd) - e^s E1(s)/ln2 at s = 1/(rho*mu_sr)
    g = MeanGains.iid(1, 0, mu_sr=0.5)
    cfg = dt_config(8, 1, 0, 10.0)
    expected = math.log2(1.0 + 8 * 10.0) - scaled_e1(1.0 / 5.0) / math.log(2.0)
    assert esr_dt_lb(g, cfg, EveModel.NCE) == pytest.approx(expected, rel=1e-13)


def test_esr_dt_lb_matches_leakage_sampling():
    # Monte-Carlo of the bound itself: hardened main link, sampled leakage.
    g = MeanGains.iid(2, 2)
    n = 10**5
    cap = math.log2(1.0 + 16 * 100.0)
    for model in (EveModel.NCE, EveModel.CE):
        cfg = dt_config(16, 2, 2, 100.0, model)
        lb = esr_dt_lb(g, cfg, model)
        rng = np.random.default_rng(11)
        rel = rng.exponential(100.0, size=(n, 2)).max(axis=1)
        eve = rng.exponential(100.0, size=(n, 2))
        eve = eve.max(axis=1) if model is EveModel.NCE else eve.sum(axis=1)
        samples = cap - np.log2(1.0 + np.maximum(rel, eve))
        sigma = samples.std(ddof=1) / math.sqrt(n)
        assert abs(lb - samples.mean()) < 3.0 * sigma


def test_esr_dt_lb_near_full_simulation_when_hardened():
    # At 64 antennas the hardening error is ~0.01 bits; at 16 it is ~0.05.
    g = MeanGains.iid(2, 2)
    cfg = dt_config(64, 2, 2, 100.0)
    cfg = dataclasses.replace(cfg, master_seed=41)
    lb = esr_dt_lb(g, cfg, EveModel.NCE)
    est = estimate(Metric.ESR, Scheme.DT, cfg, g, 20000)
    assert abs(lb - est.value) < 0.05


def test_esr_dt_lb_ceiling_in_snr():
    g = MeanGains.iid(2, 2)
    vals = [
        esr_dt_lb(g, dt_config(16, 2, 2, rho), EveModel.NCE)
        for rho in (1e2, 1e4, 1e6, 1e8)
    ]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    assert abs(vals[-1] - vals[-2]) < 1e-4


def test_esr_dt_lb_collusion_and_degenerate_cases():
    g = MeanGains.iid(2, 2)
    cfg = dt_config(16, 2, 2, 100.0)
    assert esr_dt_lb(g, cfg, EveModel.CE) < esr_dt_lb(g, cfg, EveModel.NCE)
    g0 = MeanGains.iid(2, 0)
    cfg0 = dt_config(16, 2, 0, 100.0)
    assert esr_dt_lb(g0, cfg0, EveModel.CE) == esr_dt_lb(g0, cfg0, EveModel.NCE)
    # equal-mean eavesdroppers go through the repeated-rate path
    g_eq = MeanGains.iid(2, 3, mu_se=1.0)
    val = esr_dt_lb(g_eq, dt_config(16, 2, 3, 50.0, EveModel.CE), EveModel.CE)
    assert math.isfinite(val) and val >= 0.0


# ---------------------------------------------------------------------------
# secrecy outage, relayed


def test_sop_single_relay_value():
    s = sop_dbcj(single_relay(), 100.0, 0.0, 1.0)
    assert s == pytest.approx(-math.expm1(-20.899494936611664 / 100.0), rel=1e-14)
    assert s == pytest.approx(0.18860066628596972, rel=1e-13)


def test_sop_zero_target_complements_ppos_exactly():
    for g, rho, c in (
        (single_relay(), 10.0, 0.0),
        (three_relays(), 4.0, 0.7),
        (MeanGains.iid(2, 0, mu_rd=3.0), 0.5, 2.0),
    ):
        assert sop_dbcj(g, rho, c, 0.0) + ppos_dbcj(g, rho, c) == 1.0


def test_sop_asymptote_slope_is_minus_k():
    g = three_relays()
    a1, a2 = sop_dbcj_asymptotic(g, 1e3), sop_dbcj_asymptotic(g, 1e5)
    slope = math.log(a2 / a1) / math.log(1e5 / 1e3)
    assert slope == pytest.approx(-3.0, abs=1e-12)
    assert sop_dbcj(g, 1e5) == pytest.approx(sop_dbcj_asymptotic(g, 1e5), rel=5e-3)


def test_sop_monotone_in_snr_and_collusion():
    g = MeanGains.iid(2, 0)
    vals = [sop_dbcj(g, rho) for rho in (1.0, 10.0, 100.0, 1e3)]
    assert all(0.0 <= v <= 1.0 for v in vals)
    assert all(b < a for a, b in zip(vals, vals[1:]))
    by_c = [sop_dbcj(g, 100.0, c) for c in (0.0, 0.5, 1.0, 2.0)]
    assert all(b > a for a, b in zip(by_c, by_c[1:]))


# ---------------------------------------------------------------------------
# secrecy outage, direct transmission


def test_sop_dt_matches_leakage_sampling():
    # K=L=1, equal leak means, target rate 1: threshold (1+160)/2 - 1 = 79.5.
    g = MeanGains.iid(1, 1, mu_sr=4.0, mu_se=4.0)
    cfg = dt_config(16, 1, 1, 10.0)
    closed = sop_dt(g, cfg, EveModel.NCE, 1.0)
    rng = np.random.default_rng(509)
    n = 10**6
    leak = rng.exponential(40.0, size=(n, 2)).max(axis=1)
    freq = float((leak > 79.5).mean())
    sigma = math.sqrt(closed * (1.0 - closed) / n)
    assert abs(freq - closed) < 3.0 * sigma

    # colluding variant with distinct eavesdropper means
    g_ce = MeanGains(
        mu_sr=np.array([4.0]),
        mu_rd=np.ones(1),
        mu_se=np.array([3.0, 5.0]),
        mu_ed=np.ones(2),
        mu_sd=1.0,
    )
    cfg_ce = dt_config(16, 1, 2, 10.0, EveModel.CE)
    closed = sop_dt(g_ce, cfg_ce, EveModel.CE, 1.0)
    summed = rng.exponential(30.0, size=n) + rng.exponential(50.0, size=n)
    worst = np.maximum(rng.exponential(40.0, size=n), summed)
    freq = float((worst > 79.5).mean())
    sigma = math.sqrt(closed * (1.0 - closed) / n)
    assert abs(freq - closed) < 3.0 * sigma


def test_sop_dt_near_full_simulation_when_hardened():
    g = MeanGains.iid(1, 1, mu_sr=16.0, mu_se=16.0)
    cfg = dt_config(64, 1, 1, 10.0)
    cfg = dataclasses.replace(cfg, master_seed=7)
    closed = sop_dt(g, cfg, EveModel.NCE, 1.0)
    est = estimate(Metric.SOP, Scheme.DT, cfg, g, 20000)
    assert abs(closed - est.value) < 0.03


def test_sop_dt_antenna_limit_and_snr_floor():
    g = MeanGains.iid(1, 1, mu_sr=16.0, mu_se=16.0)
    by_ns = [
        sop_dt(g, dt_config(ns, 1, 1, 10.0), EveModel.NCE, 1.0)
        for ns in (16, 64, 256, 1024)
    ]
    assert all(b < a for a, b in zip(by_ns, by_ns[1:]))
    assert by_ns[-1] < 1e-6
    # fixed antennas: raising the SNR stalls at a nonzero floor
    f1 = sop_dt(g, dt_config(16, 1, 1, 1e6), EveModel.NCE, 1.0)
    f2 = sop_dt(g, dt_config(16, 1, 1, 1e8), EveModel.NCE, 1.0)
    assert f2 > 0.5
    assert abs(f2 - f1) < 1e-5


def test_sop_dt_edge_cases():
    g = MeanGains.iid(1, 0)
    # main link too weak for the target at all
    cfg = dt_config(1, 1, 0, 0.001)
    assert sop_dt(g, cfg, EveModel.NCE, 4.0) == 1.0
    with pytest.raises(ValueError):
        sop_dt(g, cfg, EveModel.NCE, -1.0)
    # zero target complements the positive-rate probability
    cfg = dt_config(16, 1, 0, 10.0)
    total = sop_dt(g, cfg, EveModel.NCE, 0.0) + ppos_dt(g, cfg, EveModel.NCE)
    assert total == pytest.approx(1.0, abs=1e-14)


# ---------------------------------------------------------------------------
# symbol error rate


def test_ser_single_relay_value():
    # alpha=2, beta=1: 1 - 1/sqrt(1 + (2+2*sqrt2)/gbar)
    s = ser_dbcj(single_relay(), 100.0)
    assert s == pytest.approx(
        1.0 - 1.0 / math.sqrt(1.0 + (2.0 + 2.0 * SQRT2) / 100.0), rel=1e-13
    )
    assert s == pytest.approx(0.023301624861094217, rel=1e-13)


def test_ser_matches_quadrature_oracle():
    g = MeanGains(
        mu_sr=np.ones(2),
        mu_rd=np.array([0.5, 2.0]),
        mu_se=np.zeros(0),
        mu_ed=np.zeros(0),
        mu_sd=1.0,
    )
    assert ser_dbcj(single_relay(), 100.0) == pytest.approx(
        ser_quadrature_oracle(single_relay(), 100.0), rel=1e-8
    )
    for mod in (Modulation.psk(4), Modulation.qam(16)):
        closed = ser_dbcj(g, 50.0, 0.3, mod)
        oracle = ser_quadrature_oracle(g, 50.0, 0.3, mod)
        assert closed == pytest.approx(oracle, rel=1e-8)


def test_ser_asymptote_single_relay_coefficient():
    # alpha (2K)! (1+B)^K / (beta^K 2^{K+1} K! prod gbar) at K=1, QPSK
    val = ser_dbcj_asymptotic(single_relay(), 200.0)
    assert val == pytest.approx(2.0 * 2 * (1.0 + SQRT2) / (4.0 * 200.0), rel=1e-14)


def test_ser_asymptote_slope_and_convergence():
    g = MeanGains.iid(2, 0)
    a1, a2 = ser_dbcj_asymptotic(g, 1e3), ser_dbcj_asymptotic(g, 1e5)
    slope = math.log(a2 / a1) / math.log(1e5 / 1e3)
    assert slope == pytest.approx(-2.0, abs=1e-12)
    assert ser_dbcj(g, 1e4) == pytest.approx(ser_dbcj_asymptotic(g, 1e4), rel=0.01)


def test_ser_monotone_and_bounded():
    g = MeanGains.iid(2, 0)
    vals = [ser_dbcj(g, rho) for rho in (1.0, 10.0, 100.0, 1e3)]
    assert all(0.0 < v < 1.0 for v in vals)
    assert all(b < a for a, b in zip(vals, vals[1:]))
    by_c = [ser_dbcj(g, 100.0, c) for c in (0.0, 0.5, 1.0, 2.0)]
    assert all(b > a for a, b in zip(by_c, by_c[1:]))
    assert 0.0 < ser_dbcj(g, 10.0, 0.0, Modulation.qam(16)) < 1.0


# ---------------------------------------------------------------------------
# diversity-multiplexing


def test_dmt_secrecy_values():
    assert dmt_secrecy(5, 0.0) == 5.0
    assert dmt_secrecy(5, 0.5) == 0.0
    assert dmt_secrecy(4, 0.25) == 2.0


def test_dmt_reliability_values():
    assert dmt_reliability(5, 0.0) == 5.0
    assert dmt_reliability(5, 1.0) == 0.0
    assert dmt_reliability(2, 0.5) == 1.0


def test_dmt_relay_phase_halves_the_gain():
    for k in (1, 3, 7):
        for r in (0.0, 0.2, 0.5):
            assert dmt_secrecy(k, r) == dmt_reliability(k, 2.0 * r)


def test_dmt_domain_errors():
    for bad in (-0.01, 0.51, math.nan):
        with pytest.raises(ValueError):
            dmt_secrecy(3, bad)
    for bad in (-0.01, 1.01):
        with pytest.raises(ValueError):
            dmt_reliability(3, bad)
    with pytest.raises(ValueError):
        dmt_secrecy(0, 0.1)
