"""Noise budget, calibration, injection and recovery-confidence analysis.

Every noise level is a single-side depolarizing probability. Levels on a
pair compose multiplicatively: a singlet passed through levels p_1..p_k on
either side has same-axis anti-correlation 1 - p/2 with
p = 1 - prod(1 - p_i).
"""
from __future__ import annotations

import functools
import math
from dataclasses import asdict, dataclass
from typing import TYPE_CHECKING

import numpy as np
from scipy.stats import binom

from qct import kernels
from qct.qsim import PairState, Side, _check_probability

if TYPE_CHECKING:
    from qct.protocol import PairRegister, VerdictMode

# one-sided tail mass left below the verdict threshold for honest data
THRESHOLD_ALPHA = 1e-3
# theta_lo sits this far from 0.5 toward theta_hi. Mirror positions make
# wrong-order comparisons pairwise correlated, which widens that statistic
# beyond the independent binomial, so theta_lo is kept close to theta_hi.
THRESHOLD_LO_FRACTION = 0.95
ALLOWANCE_FACTOR = 1.5
ALLOWANCE_Z = 3.0


def compose(*levels: float) -> float:
    keep = 1.0
    for p in levels:
        keep *= 1.0 - _check_probability(p)
    return 1.0 - keep


@dataclass(frozen=True)
class NoiseBudget:
    """Depolarizing levels per source.

    env_a, env_b are the environmental levels measured in the shared
    singlets. self_a, self_b are what each party injects on purpose: the
    level needed to suppress entanglement plus an extra copy of its
    environmental level to mask detector differences.
    detector_advantage lets a cheating party strip that fraction of its
    own injected noise.
    """

    env_a: float = 0.0
    env_b: float = 0.0
    self_a: float = 0.0
    self_b: float = 0.0
    detector_advantage: float = 0.0

    def __post_init__(self):
        for name, value in asdict(self).items():
            try:
                _check_probability(value)
            except ValueError as exc:
                raise ValueError(f"noise.{name}: {exc}") from None

    @classmethod
    def from_total(cls, p: float) -> "NoiseBudget":
        """All noise as environmental noise on the pair (a Werner source)."""
        return cls(env_a=_check_probability(p))

    @classmethod
    def from_levels(cls, L_a: float, L_b: float, L_A: float, L_B: float, detector_advantage: float = 0.0):
        """Build a budget from measured environmental and suppression levels.

        Each party injects its suppression level plus its own environmental
        level again, so a better private detector cannot peel the noise off.
        """
        return cls(
            env_a=L_a,
            env_b=L_b,
            self_a=compose(L_A, L_a),
            self_b=compose(L_B, L_b),
            detector_advantage=detector_advantage,
        )

    @property
    def source_level(self) -> float:
        """Noise seen by Alice's source check."""
        return compose(self.env_a, self.env_b)

    @property
    def shared_level(self) -> float:
        """Noise seen by Bob's entanglement check (after Alice's injection)."""
        return compose(self.env_a, self.env_b, self.self_a)

    @property
    def p_total(self) -> float:
        return compose(self.env_a, self.env_b, self.self_a, self.self_b)

    def injected(self, side: Side, cheating: bool = False) -> float:
        level = self.self_a if side is Side.ALICE else self.self_b
        if cheating:
            level *= 1.0 - self.detector_advantage
        return level

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class CalibrationReport:
    component: str
    level: float
    failure_rate: float
    samples: int
    stderr: float

    def to_dict(self) -> dict:
        return asdict(self)


def random_axes(count: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=(count, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def calibrate_environment(source, samples: int, rng: np.random.Generator, component: str = "pair") -> CalibrationReport:
    """Estimate the depolarizing level of a pair source.

    ``source`` is a PairState (every sample is a fresh copy of it) or a
    PairRegister whose unconsumed positions are measured in order. Both
    particles are measured along a common uniformly random axis; the level
    is recovered from the failure rate f as p = 2 f.
    """
    if samples < 100:
        raise ValueError("calibration needs at least 100 samples")
    if isinstance(source, PairState):
        rho = np.broadcast_to(source.rho, (samples, 4, 4)).copy()
        idx = np.arange(samples)
    else:
        idx = np.flatnonzero(~source.consumed)
        if idx.size < samples:
            raise ValueError(f"register has {idx.size} unconsumed pairs, need {samples}")
        idx = idx[:samples]
        rho = source.rho
    axes = random_axes(samples, rng)
    a = kernels.measure(rho, idx, Side.ALICE, axes, rng.random(samples))
    b = kernels.measure(rho, idx, Side.BOB, axes, rng.random(samples))
    if not isinstance(source, PairState):
        source.consumed[idx] = True
    f = float(np.mean(a == b))
    return CalibrationReport(
        component=component,
        level=min(1.0, 2.0 * f),
        failure_rate=f,
        samples=samples,
        stderr=2.0 * math.sqrt(f * (1.0 - f) / samples),
    )


def inject_noise(reg: "PairRegister", side: Side, level: float, rng: np.random.Generator | None = None) -> "PairRegister":
    """Depolarize every unconsumed pair of ``reg`` in place on ``side``.

    The channel is deterministic on density matrices, so ``rng`` is unused;
    it is accepted to keep the signature uniform with the other steps.
    """
    level = _check_probability(level)
    if level == 0.0:
        return reg
    idx = np.flatnonzero(~reg.consumed)
    sides = (Side.ALICE, Side.BOB) if Side(side) is Side.BOTH else (Side(side),)
    for s in sides:
        kernels.depolarize(reg.rho, idx, s, level)
    return reg


def check_allowance(count: int, level: float) -> int:
    """Tolerated anti-correlation failures in a check of ``count`` pairs.

    Zero when noiseless; otherwise 1.5x the expected failure fraction plus
    three binomial standard deviations.
    """
    if count <= 0 or level <= 0.0:
        return 0
    f0 = level / 2.0
    frac = ALLOWANCE_FACTOR * f0 + ALLOWANCE_Z * math.sqrt(f0 * (1.0 - f0) / count)
    return min(count, int(math.floor(frac * count + 1e-9)))


def theta_lo_for(theta_hi: float) -> float:
    """Most of the way from the 1/2 of uncorrelated data up to theta_hi."""
    return 0.5 + THRESHOLD_LO_FRACTION * (theta_hi - 0.5)


@functools.lru_cache(maxsize=256)
def default_thresholds(p_total: float, expected_singlets: float) -> tuple[float, float]:
    """Verdict thresholds for the calibrated noise level.

    theta_hi is the exact lower ``THRESHOLD_ALPHA`` quantile of the honest
    anti-correlation fraction 1 - p/2 at the expected singlet count, so it
    equals 1 when noiseless. theta_lo follows from theta_hi via
    :func:`theta_lo_for`.
    """
    p_total = _check_probability(p_total)
    m = max(1, int(round(expected_singlets)))
    q = 1.0 - p_total / 2.0
    hi = float(binom.ppf(THRESHOLD_ALPHA, m, q)) / m
    hi = min(1.0, max(hi, 0.5 + 1.0 / m))
    return hi, theta_lo_for(hi)


def _count_at_least(theta: float, m: int) -> int:
    return int(math.ceil(theta * m - 1e-9))


def _count_at_most(theta: float, m: int) -> int:
    return int(math.floor(theta * m + 1e-9))


def recovery_confidence(singlet_count: int, p_total: float, thresholds: tuple[float, float], mode: "VerdictMode | str" = "dual") -> float:
    """Exact probability that an honest verdict returns the committed bit.

    Comparisons in the committed order anti-correlate independently with
    probability 1 - p/2, those in the other order with probability 1/2.
    """
    if singlet_count < 1:
        raise ValueError("singlet_count must be at least 1")
    m = int(singlet_count)
    hi, lo = thresholds
    q = 1.0 - _check_probability(p_total) / 2.0
    k_hi = _count_at_least(hi, m)
    p_claim = float(binom.sf(k_hi - 1, m, q))
    if str(getattr(mode, "value", mode)) == "claimed":
        return p_claim
    p_other = float(binom.cdf(_count_at_most(lo, m), m, 0.5))
    return p_claim * p_other


def expected_recovery_confidence(n: int, p_total: float, thresholds: tuple[float, float], mode="dual") -> float:
    """recovery_confidence averaged over the Binomial(n, 1/4) singlet count.

    An empty singlet set aborts, so it contributes zero.
    """
    counts = np.arange(1, n + 1)
    weights = binom.pmf(counts, n, 0.25)
    return float(sum(w * recovery_confidence(int(c), p_total, thresholds, mode) for c, w in zip(counts, weights) if w > 1e-15))
