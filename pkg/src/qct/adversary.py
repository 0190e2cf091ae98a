"""Cheating strategies and the Monte Carlo bias estimator.

Coin convention: outcome 1 means Bob guessed the committed bit. Bob
prefers 1, Alice prefers 0, so a cheating Alice only tries to change her
bit when Bob's guess was right.

Strategies act through :class:`~qct.protocol.AliceView` /
:class:`~qct.protocol.BobView` and never read the other party's records.
The "no suppression" scenarios are produced by a party skipping its own
scramble (or by the ``suppression`` setting of the config).
"""
from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from qct.noise import inject_noise
from qct.protocol import (
    Alice,
    AliceView,
    Bob,
    BobView,
    CommitmentRecord,
    Disclosure,
    PairRegister,
    ProtocolConfig,
    ProtocolError,
    Side,
    random_xz,
    run_session,
    session_rng,
    symbols,
    unveil,
)
from qct.qsim import Axis, Outcome, PauliOp, apply_pauli, correlation, pauli_anticommutes, product_state, singlet

Z95 = 1.959963984540054


class InsufficientPositions(ProtocolError):
    pass


class AliceStrategy(str, enum.Enum):
    HONEST = "honest"
    WRONG_DISCLOSURE = "wrong-disclosure"
    REVERSAL_NO_SUPPRESSION = "reversal"
    PRODUCT_STATE_SOURCE = "product-source"


class BobStrategy(str, enum.Enum):
    HONEST_GUESS = "honest"
    EARLY_MEASURE = "early-measure"
    NO_SUPPRESS_EARLY_MEASURE = "no-suppress-early-measure"


# rows: Pauli opcode, columns: axis code (0 = Z, 1 = X) as used by random_xz
_ANTICOMMUTES = np.array([[pauli_anticommutes(u, ax) for ax in (Axis.Z, Axis.X)] for u in PauliOp])
# same-axis correlation of (U x I)|psi-> along Z and X: -1 or +1
_SCRAMBLED_CORRELATION = np.array(
    [[round(correlation(apply_pauli(singlet(), Side.ALICE, u), ax, ax)) for ax in (Axis.Z, Axis.X)] for u in PauliOp]
)


def _axis_codes(axes: np.ndarray) -> np.ndarray:
    """0 for Z, 1 for X; other axes are not produced by the commit step."""
    return (np.abs(axes[:, 0]) > 0.5).astype(np.int64)


@dataclass(frozen=True)
class EarlyGuess:
    bit: int
    f_direct: float
    f_reverse: float
    n: int


def bob_early_measure(view: BobView, rng: np.random.Generator) -> EarlyGuess:
    """Bob measures all his particles along random X/Z before the unveil.

    His own Pauli is known to him, so he undoes its sign flip before
    comparing with the revealed symbols in both orders. The order with
    more anti-correlation is his guess; ties are broken at random.
    """
    n = view.n
    idx = np.arange(n)
    axes = random_xz(n, rng)
    e = view.measure_own(idx, axes, rng).astype(np.int64)
    ops = np.where(view.paulis < 0, 0, view.paulis)
    flip = _ANTICOMMUTES[ops, _axis_codes(axes)]
    e = np.where(flip, -e, e)
    mine = symbols(e)
    f_direct = float(np.mean(mine != view.revealed))
    f_reverse = float(np.mean(mine != view.revealed[::-1]))
    if f_direct != f_reverse:
        bit = 0 if f_direct > f_reverse else 1
    else:
        bit = int(rng.integers(2))
    return EarlyGuess(bit, f_direct, f_reverse, n)


def alice_wrong_disclosure(rec: CommitmentRecord, target_bit: int, rng: np.random.Generator,
                           forgery: str = "relocate") -> Disclosure:
    """Claim ``target_bit`` with invented Pauli and/or axis records.

    ``relocate`` claims fresh uniform Paulis, moving the apparent singlet
    set to random positions; ``axes`` keeps the Paulis and swaps X/Z on a
    random half of the positions.
    """
    if target_bit == rec.bit:
        raise ValueError("wrong disclosure needs a target bit different from the committed one")
    n = rec.n
    truthful = unveil(rec)
    if forgery == "relocate":
        return Disclosure(rng.integers(4, size=n).astype(np.int8), truthful.claimed_axes, int(target_bit))
    if forgery == "axes":
        swap = rng.random(n) < 0.5
        axes = truthful.claimed_axes.copy()
        axes[swap] = axes[swap][:, ::-1]
        return Disclosure(truthful.claimed_paulis, axes, int(target_bit))
    raise ValueError(f"unknown forgery {forgery!r}")


def predict_bob_outcomes(view: AliceView) -> np.ndarray:
    """Bob's outcome at each position if he never scrambled and measures along Alice's axis."""
    ops = np.where(view.paulis < 0, 0, view.paulis)
    return _SCRAMBLED_CORRELATION[ops, _axis_codes(view.axes)] * view.outcomes.astype(np.int64)


def alice_reversal_no_suppression(view: AliceView, rec: CommitmentRecord, rng: np.random.Generator) -> Disclosure:
    """Reverse the commitment against a Bob who kept his particles unscrambled.

    Alice predicts Bob's verification outcomes, keeps the positions whose
    mirror partner was measured along the same axis and whose predicted
    outcome anti-correlates with the revealed symbol in the target order,
    and claims Paulis that make exactly those positions look like singlets.
    """
    n = view.n
    target = 1 - rec.bit
    mine = symbols(predict_bob_outcomes(view))
    target_symbols = rec.revealed[::-1] if target == 1 else rec.revealed
    mirror = np.all(view.axes == view.axes[::-1], axis=1)
    selectable = np.flatnonzero((mine != target_symbols) & mirror)
    minimum = max(1, math.ceil(n / 16))
    if selectable.size < minimum:
        raise InsufficientPositions(f"only {selectable.size} usable positions, need {minimum}")
    size = min(selectable.size, max(minimum, round(n / 4)))
    chosen = np.sort(rng.choice(selectable, size=size, replace=False))
    claimed = rng.integers(1, 4, size=n).astype(np.int8)
    claimed[chosen] = PauliOp.ID
    return Disclosure(claimed, rec.axes.copy(), target)


def alice_product_source(cfg: ProtocolConfig, rng: np.random.Generator | None = None) -> PairRegister:
    """Source of up/down Z-basis product pairs in place of singlets."""
    reg = PairRegister.filled(product_state(Outcome.UP, Axis.Z, Outcome.DOWN, Axis.Z), cfg.N)
    inject_noise(reg, Side.ALICE, cfg.noise.env_a)
    inject_noise(reg, Side.BOB, cfg.noise.env_b)
    return reg


# ---------------------------------------------------------------- parties

class _FlippingAlice(Alice):
    cheating = True

    def __init__(self, always_flip: bool = False):
        self.always_flip = always_flip

    def disclose(self, view, record, guess, rng):
        if self.always_flip or (guess is not None and guess == record.bit):
            return self.forge(view, record, rng)
        return unveil(record)

    def forge(self, view, record, rng) -> Disclosure:
        raise NotImplementedError


class WrongDisclosureAlice(_FlippingAlice):
    name = AliceStrategy.WRONG_DISCLOSURE.value

    def __init__(self, always_flip: bool = False, forgery: str = "relocate"):
        super().__init__(always_flip)
        self.forgery = forgery

    def forge(self, view, record, rng):
        return alice_wrong_disclosure(record, 1 - record.bit, rng, self.forgery)


class ReversalAlice(_FlippingAlice):
    name = AliceStrategy.REVERSAL_NO_SUPPRESSION.value

    def forge(self, view, record, rng):
        try:
            return alice_reversal_no_suppression(view, record, rng)
        except InsufficientPositions:
            return unveil(record)


class ProductSourceAlice(Alice):
    name = AliceStrategy.PRODUCT_STATE_SOURCE.value
    cheating = True

    def prepare_source(self, cfg, rng):
        return alice_product_source(cfg, rng)

    def check_source(self, reg, cfg, rng):
        return None


class EarlyMeasureBob(Bob):
    name = BobStrategy.EARLY_MEASURE.value
    cheating = True

    def __init__(self):
        self.last: EarlyGuess | None = None

    def guess(self, view, rng):
        self.last = bob_early_measure(view, rng)
        return self.last.bit


class NoSuppressEarlyMeasureBob(EarlyMeasureBob):
    name = BobStrategy.NO_SUPPRESS_EARLY_MEASURE.value

    def wants_scramble(self, cfg):
        return False


def make_alice(strategy: AliceStrategy | str, **kw) -> Alice:
    strategy = AliceStrategy(strategy)
    if strategy is AliceStrategy.HONEST:
        return Alice()
    if strategy is AliceStrategy.WRONG_DISCLOSURE:
        return WrongDisclosureAlice(**kw)
    if strategy is AliceStrategy.REVERSAL_NO_SUPPRESSION:
        return ReversalAlice(**kw)
    return ProductSourceAlice()


def make_bob(strategy: BobStrategy | str) -> Bob:
    strategy = BobStrategy(strategy)
    if strategy is BobStrategy.HONEST_GUESS:
        return Bob()
    if strategy is BobStrategy.EARLY_MEASURE:
        return EarlyMeasureBob()
    return NoSuppressEarlyMeasureBob()


# ---------------------------------------------------------------- estimation

@dataclass
class Tally:
    runs: int = 0
    ones: int = 0
    zeros: int = 0
    aborts: int = 0
    committed: int = 0
    recovered: int = 0
    correct_guesses: int = 0
    flip_attempts: int = 0
    flips: int = 0
    flip_aborts: int = 0
    singlets: int = 0
    verified: int = 0
    # exact sums, so merged tallies do not depend on how runs were split
    f_claimed_sum: Fraction = Fraction(0)
    f_other_sum: Fraction = Fraction(0)
    early_pairs: int = 0
    early_anti_committed: int = 0
    abort_reasons: dict = field(default_factory=dict)

    def add(self, res, bob: Bob) -> None:
        self.runs += 1
        coin = res.coin
        if coin == 1:
            self.ones += 1
        elif coin == 0:
            self.zeros += 1
        v = res.verdict
        if res.aborted:
            self.aborts += 1
            key = v.reason.value if v is not None and v.reason is not None else "unknown"
            self.abort_reasons[key] = self.abort_reasons.get(key, 0) + 1
        if res.record is not None:
            self.committed += 1
            if v is not None and v.bit == res.record.bit:
                self.recovered += 1
            if res.guess is not None and res.guess == res.record.bit:
                self.correct_guesses += 1
        if res.flip_attempted:
            self.flip_attempts += 1
            self.flips += int(res.flipped)
            self.flip_aborts += int(res.aborted)
        if v is not None and v.f_direct is not None:
            self.verified += 1
            self.singlets += v.singlet_count
            claimed_bit = res.disclosure.claimed_bit
            fc, fo = (v.f_direct, v.f_reverse) if claimed_bit == 0 else (v.f_reverse, v.f_direct)
            self.f_claimed_sum += Fraction(fc)
            self.f_other_sum += Fraction(fo)
        last = getattr(bob, "last", None)
        if last is not None and res.record is not None:
            f = last.f_direct if res.record.bit == 0 else last.f_reverse
            self.early_pairs += last.n
            self.early_anti_committed += int(round(f * last.n))
            bob.last = None

    def merge(self, other: "Tally") -> "Tally":
        out = Tally()
        for name in asdict(self):
            if name == "abort_reasons":
                reasons = dict(self.abort_reasons)
                for k, c in other.abort_reasons.items():
                    reasons[k] = reasons.get(k, 0) + c
                out.abort_reasons = reasons
            else:
                setattr(out, name, getattr(self, name) + getattr(other, name))
        return out


def _half_width(p: float, runs: int) -> float:
    return Z95 * math.sqrt(max(p * (1.0 - p), 0.0) / runs) if runs else float("nan")


def _ratio(a, b):
    return float(a / b) if b else None


@dataclass(frozen=True)
class BiasReport:
    alice: str
    bob: str
    runs: int
    seed: int
    p_A: float
    p_B: float
    epsilon_A: float
    epsilon_B: float
    ci95_A: float
    ci95_B: float
    abort_rate: float
    ci95_abort: float
    completed: int
    p_A_completed: float | None
    p_B_completed: float | None
    guess_accuracy: float | None
    ci95_guess: float | None
    flip_attempts: int
    flip_successes: int
    flip_success_rate: float | None
    mean_singlet_count: float | None
    mean_f_claimed: float | None
    mean_f_other: float | None
    early_pairs: int
    early_anticorrelation: float | None
    abort_reasons: dict
    config: dict

    @classmethod
    def from_tally(cls, t: Tally, alice: str, bob: str, seed: int, config: dict) -> "BiasReport":
        runs = t.runs
        p_a, p_b = t.zeros / runs, t.ones / runs
        abort = t.aborts / runs
        done = t.ones + t.zeros
        acc = _ratio(t.correct_guesses, t.committed)
        return cls(
            alice=alice, bob=bob, runs=runs, seed=int(seed),
            p_A=p_a, p_B=p_b, epsilon_A=p_a - 0.5, epsilon_B=p_b - 0.5,
            ci95_A=_half_width(p_a, runs), ci95_B=_half_width(p_b, runs),
            abort_rate=abort, ci95_abort=_half_width(abort, runs),
            completed=done, p_A_completed=_ratio(t.zeros, done), p_B_completed=_ratio(t.ones, done),
            guess_accuracy=acc, ci95_guess=None if acc is None else _half_width(acc, t.committed),
            flip_attempts=t.flip_attempts, flip_successes=t.flips,
            flip_success_rate=_ratio(t.flips, t.flip_attempts),
            mean_singlet_count=_ratio(t.singlets, t.verified),
            mean_f_claimed=_ratio(t.f_claimed_sum, t.verified),
            mean_f_other=_ratio(t.f_other_sum, t.verified),
            early_pairs=t.early_pairs, early_anticorrelation=_ratio(t.early_anti_committed, t.early_pairs),
            abort_reasons=dict(sorted(t.abort_reasons.items())),
            config=config,
        )

    def epsilon_interval(self, who: str) -> tuple[float, float]:
        eps, hw = (self.epsilon_A, self.ci95_A) if who == "A" else (self.epsilon_B, self.ci95_B)
        return eps - hw, eps + hw

    def to_dict(self) -> dict:
        return asdict(self)


CSV_FIELDS = [
    "alice", "bob", "runs", "seed", "p_A", "p_B", "epsilon_A", "epsilon_B", "ci95_A", "ci95_B",
    "abort_rate", "completed", "p_A_completed", "p_B_completed", "guess_accuracy", "flip_attempts",
    "flip_successes", "flip_success_rate", "mean_singlet_count", "early_anticorrelation",
]


def _run_chunk(args) -> Tally:
    alice_spec, bob_spec, cfg, seed, indices, coin, alice_kw = args
    alice = make_alice(alice_spec, **alice_kw) if isinstance(alice_spec, (str, AliceStrategy)) else alice_spec
    bob = make_bob(bob_spec) if isinstance(bob_spec, (str, BobStrategy)) else bob_spec
    tally = Tally()
    for i in indices:
        res = run_session(cfg, session_rng(seed, i), alice, bob, coin=coin)
        tally.add(res, bob)
    return tally


def run_batch(alice, bob, cfg: ProtocolConfig, runs: int, seed: int | None = None, coin: bool = True,
              workers: int = 1, alice_kw: dict | None = None) -> Tally:
    """Tally ``runs`` independent sessions; run i uses the stream (seed, i)."""
    seed = cfg.seed if seed is None else seed
    alice_kw = alice_kw or {}
    if workers <= 1:
        return _run_chunk((alice, bob, cfg, seed, range(runs), coin, alice_kw))
    bounds = np.linspace(0, runs, workers + 1).astype(int)
    jobs = [(alice, bob, cfg, seed, range(lo, hi), coin, alice_kw) for lo, hi in zip(bounds[:-1], bounds[1:])]
    total = Tally()
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for part in pool.map(_run_chunk, jobs):
            total = total.merge(part)
    return total


def estimate_bias(alice: AliceStrategy | str, bob: BobStrategy | str, cfg: ProtocolConfig, runs: int,
                  seed: int | None = None, workers: int = 1) -> BiasReport:
    """Monte Carlo coin tosses: p_B is the frequency of outcome 1, p_A of outcome 0.

    Aborts are tallied apart from both; ``p_A + p_B + abort_rate == 1``.
    """
    if runs < 100:
        raise ValueError("estimate_bias needs at least 100 runs")
    alice, bob = AliceStrategy(alice), BobStrategy(bob)
    seed = cfg.seed if seed is None else int(seed)
    tally = run_batch(alice, bob, cfg, runs, seed=seed, coin=True, workers=workers)
    return BiasReport.from_tally(tally, alice.value, bob.value, seed, cfg.to_dict())


@dataclass(frozen=True)
class FlipReport:
    attempts: int
    successes: int
    aborts: int

    @property
    def success_rate(self) -> float:
        return self.successes / self.attempts

    @property
    def abort_rate(self) -> float:
        return self.aborts / self.attempts


def flip_trials(alice: AliceStrategy | str, cfg: ProtocolConfig, runs: int, seed: int | None = None,
                **alice_kw) -> FlipReport:
    """Commit a random bit, then always try to unveil the other one."""
    alice = AliceStrategy(alice)
    tally = run_batch(alice, BobStrategy.HONEST_GUESS, cfg, runs, seed=seed, coin=False,
                      alice_kw={"always_flip": True, **alice_kw})
    return FlipReport(attempts=tally.flip_attempts, successes=tally.flips, aborts=tally.flip_aborts)
