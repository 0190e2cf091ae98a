import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qct.noise import (
    NoiseBudget,
    calibrate_environment,
    check_allowance,
    compose,
    default_thresholds,
    expected_recovery_confidence,
    inject_noise,
    recovery_confidence,
)
from qct.protocol import PairRegister, ProtocolConfig, run_session, session_rng
from qct.qsim import Axis, PauliOp, Side, anticorrelation_prob, apply_pauli, depolarize, mix_equal, singlet

QUARTER_I = np.eye(4) / 4


def comb_oracle(m, p_total, hi, lo, dual=True):
    """Binomial tails summed term by term with exact integer coefficients."""
    q = 1 - p_total / 2
    k_hi = math.ceil(hi * m - 1e-9)
    claim = sum(math.comb(m, k) * q ** k * (1 - q) ** (m - k) for k in range(k_hi, m + 1))
    if not dual:
        return claim
    k_lo = math.floor(lo * m + 1e-9)
    other = sum(math.comb(m, k) for k in range(0, k_lo + 1)) / 2 ** m
    return claim * other


# ---------------------------------------------------------------- composition

@given(st.lists(st.floats(0, 1), max_size=5))
def test_compose_matches_product(levels):
    assert abs(compose(*levels) - (1 - math.prod(1 - p for p in levels))) < 1e-12


def test_compose_rejects_out_of_range():
    with pytest.raises(ValueError):
        compose(0.2, -0.1)


def test_budget_from_levels_adds_environment_copy():
    b = NoiseBudget.from_levels(0.1, 0.05, 0.2, 0.3, detector_advantage=0.5)
    assert b.self_a == pytest.approx(1 - 0.9 * 0.8)
    assert b.self_b == pytest.approx(1 - 0.95 * 0.7)
    assert b.injected(Side.ALICE, cheating=True) == pytest.approx(b.self_a * 0.5)
    assert b.injected(Side.ALICE) == b.self_a
    with pytest.raises(ValueError, match="noise.env_b"):
        NoiseBudget(env_b=2.0)


# ---------------------------------------------------------------- calibration

@pytest.mark.parametrize("level", [0.05, 0.1, 0.25])
def test_calibration_recovers_injected_level(level):
    reg = PairRegister.filled(singlet(), 10_000)
    inject_noise(reg, Side.BOB, level)
    rep = calibrate_environment(reg, 10_000, np.random.default_rng(int(level * 100)))
    assert abs(rep.level - level) <= 3 * rep.stderr
    assert reg.consumed.all()


def test_calibration_precision_at_ten_percent():
    rep = calibrate_environment(depolarize(singlet(), Side.ALICE, 0.1), 10_000, np.random.default_rng(8))
    assert abs(rep.level - 0.1) <= 0.01


def test_calibration_noiseless_is_exactly_zero():
    rep = calibrate_environment(singlet(), 1000, np.random.default_rng(0))
    assert rep.level == 0.0 and rep.failure_rate == 0.0 and rep.stderr == 0.0


def test_calibration_needs_enough_samples():
    with pytest.raises(ValueError):
        calibrate_environment(singlet(), 50, np.random.default_rng(0))
    with pytest.raises(ValueError):
        calibrate_environment(PairRegister.filled(singlet(), 120), 200, np.random.default_rng(0))


# ---------------------------------------------------------------- injection

def test_zero_level_leaves_register_unchanged():
    reg = PairRegister.filled(singlet(), 5)
    before = reg.rho.copy()
    inject_noise(reg, Side.ALICE, 0.0)
    assert np.array_equal(reg.rho, before)


def test_sequential_injections_compose():
    reg = PairRegister.filled(singlet(), 3)
    inject_noise(reg, Side.ALICE, 0.2)
    inject_noise(reg, Side.ALICE, 0.3)
    p = 1 - 0.8 * 0.7
    a = Axis.normalized(1, 2, 3)
    for k in range(3):
        assert abs(anticorrelation_prob(reg.state(k), a, a) - (1 - p / 2)) < 1e-12


def test_full_injection_on_both_sides_gives_quarter_identity():
    reg = PairRegister.filled(singlet(), 4)
    inject_noise(reg, Side.BOTH, 1.0)
    assert np.max(np.abs(reg.rho - QUARTER_I)) < 1e-12


def test_injection_skips_consumed_positions():
    reg = PairRegister.filled(singlet(), 4)
    reg.consumed[1] = True
    inject_noise(reg, Side.BOB, 1.0)
    assert reg.state(1).allclose(singlet())
    assert not reg.state(0).allclose(singlet())


def test_injection_rejects_bad_level():
    with pytest.raises(ValueError):
        inject_noise(PairRegister.filled(singlet(), 2), Side.ALICE, 1.01)


def test_double_suppression_averages_to_quarter_identity():
    # both parties scramble and add their own noise; averaged over the
    # scramble records every committed pair looks maximally mixed
    states = []
    for u, v in itertools.product(PauliOp, repeat=2):
        s = depolarize(apply_pauli(singlet(), Side.ALICE, u), Side.ALICE, 0.15)
        s = depolarize(apply_pauli(s, Side.BOB, v), Side.BOB, 0.1)
        states.append(s)
    assert np.max(np.abs(mix_equal(states).rho - QUARTER_I)) < 1e-12


# ---------------------------------------------------------------- thresholds and confidence

def test_noiseless_thresholds():
    assert default_thresholds(0.0, 50) == (1.0, 0.975)


def test_thresholds_at_quarter_noise_frozen():
    hi, lo = default_thresholds(0.25, 50)
    assert hi == pytest.approx(0.72) and lo == pytest.approx(0.709)


@pytest.mark.parametrize("m,p", [(50, 0.25), (50, 0.1), (30, 0.0), (80, 0.3), (12, 0.05)])
@pytest.mark.parametrize("dual", [True, False])
def test_recovery_confidence_matches_comb_oracle(m, p, dual):
    th = default_thresholds(p, m)
    got = recovery_confidence(m, p, th, "dual" if dual else "claimed")
    assert got == pytest.approx(comb_oracle(m, p, *th, dual=dual), abs=1e-12)


def test_recovery_confidence_at_quarter_noise():
    th = default_thresholds(0.25, 50)
    value = recovery_confidence(50, 0.25, th)
    assert value >= 0.99
    assert value == pytest.approx(0.9978443205931228, abs=1e-12)


def test_recovery_confidence_noiseless():
    th = default_thresholds(0.0, 50)
    assert recovery_confidence(50, 0.0, th, "claimed") == 1.0
    # dual mode only loses the chance that random data reaches theta_lo
    assert recovery_confidence(50, 0.0, th) == pytest.approx(1.0, abs=1e-9)


def test_recovery_confidence_monotone_in_noise():
    th = (0.72, 0.709)
    values = [recovery_confidence(50, p, th) for p in np.linspace(0, 0.6, 25)]
    assert all(b <= a + 1e-15 for a, b in zip(values, values[1:]))


def test_recovery_confidence_rejects_empty():
    with pytest.raises(ValueError):
        recovery_confidence(0, 0.1, (0.8, 0.7))


def test_check_allowance():
    assert check_allowance(50, 0.0) == 0
    assert check_allowance(0, 0.3) == 0
    f0 = 0.05
    assert check_allowance(50, 0.1) == math.floor(50 * (1.5 * f0 + 3 * math.sqrt(f0 * (1 - f0) / 50)))


@pytest.mark.parametrize("p", [0.1, 0.25])
def test_recovery_confidence_matches_full_runs(p):
    # both parties scramble, so about a quarter of the positions are singlets
    cfg = ProtocolConfig(noise=NoiseBudget.from_total(p))
    runs = 1000
    ok = 0
    for i in range(runs):
        res = run_session(cfg, session_rng(99, i), bit=i % 2)
        ok += res.verdict.bit == res.bit
    expected = expected_recovery_confidence(cfg.n, p, cfg.thresholds())
    sigma = math.sqrt(expected * (1 - expected) / runs)
    assert abs(ok / runs - expected) <= max(3 * sigma, 1 / runs)
