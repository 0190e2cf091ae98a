"""Bit commitment over scrambled EPR pairs, and the coin toss built on it.

A session runs as a phase machine over a :class:`PairRegister`:

    FRESH -> SOURCE_CHECKED -> BOB_CHECKED -> SHARED -> COMMITTED -> VERIFIED

Alice may scramble her particles while the register is SOURCE_CHECKED,
Bob while it is BOB_CHECKED. ``renumber`` drops the consumed check pairs
and fixes positions 0..n-1, so the direct order is k and the reversed
order is n-1-k.

Positions are 0-based throughout.
"""
from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

from qct import kernels
from qct.noise import NoiseBudget, check_allowance, compose, default_thresholds, inject_noise, theta_lo_for
from qct.qsim import Axis, PairState, Side, singlet

NO_PAULI = -1
AXIS_MATCH_TOL = 1e-9
_XZ_AXES = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])


class ConfigError(ValueError):
    pass


class ProtocolError(RuntimeError):
    pass


class PhaseError(ProtocolError):
    pass


class CheckRejected(ProtocolError):
    def __init__(self, result: "CheckResult"):
        self.result = result
        super().__init__(f"{result.failures} of {result.checked} pairs failed anti-correlation (allowed {result.allowance})")

    @property
    def failures(self) -> int:
        return self.result.failures


class SourceRejected(CheckRejected):
    pass


class EntanglementRejected(CheckRejected):
    pass


class VerdictMode(str, enum.Enum):
    CLAIMED = "claimed"
    DUAL = "dual"


class Suppression(str, enum.Enum):
    """Which parties scramble their particles and inject their noise."""

    BOTH = "both"
    ALICE_ONLY = "alice-only"
    BOB_ONLY = "bob-only"
    NONE = "none"

    @property
    def alice(self) -> bool:
        return self in (Suppression.BOTH, Suppression.ALICE_ONLY)

    @property
    def bob(self) -> bool:
        return self in (Suppression.BOTH, Suppression.BOB_ONLY)


@dataclass(frozen=True)
class AxisPolicy:
    """Check-measurement axes: a fixed secret axis, or X/Z at random per pair."""

    fixed: Axis | None = None

    @property
    def name(self) -> str:
        return "random-xz" if self.fixed is None else "fixed"

    def draw(self, count: int, rng: np.random.Generator) -> np.ndarray:
        if self.fixed is not None:
            return np.tile(self.fixed.vector, (count, 1))
        return random_xz(count, rng)

    def to_json(self):
        if self.fixed is None:
            return "random-xz"
        return {"fixed": [self.fixed.x, self.fixed.y, self.fixed.z]}

    @classmethod
    def from_json(cls, value) -> "AxisPolicy":
        if value in (None, "random-xz", "random_xz"):
            return cls()
        if isinstance(value, dict) and "fixed" in value:
            return cls(Axis.normalized(*value["fixed"]))
        if value in ("fixed-z", "z"):
            return cls(Axis.Z)
        raise ConfigError(f"unknown axis_policy {value!r}")


RANDOM_XZ = AxisPolicy()


def random_xz(count: int, rng: np.random.Generator) -> np.ndarray:
    return _XZ_AXES[rng.integers(2, size=count)]


@dataclass(frozen=True)
class ProtocolConfig:
    N: int = 300
    n_a: int = 50
    n_b: int = 50
    axis_policy: AxisPolicy = RANDOM_XZ
    verdict_mode: VerdictMode = VerdictMode.DUAL
    theta_hi: float | None = None
    theta_lo: float | None = None
    noise: NoiseBudget = field(default_factory=NoiseBudget)
    seed: int = 0
    suppression: Suppression = Suppression.BOTH

    def __post_init__(self):
        for name in ("N", "n_a", "n_b"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 0:
                raise ConfigError(f"{name} must be a non-negative integer, got {value!r}")
        if self.N <= self.n_a + self.n_b:
            raise ConfigError(f"N={self.N} must exceed n_a + n_b = {self.n_a + self.n_b}")
        object.__setattr__(self, "verdict_mode", VerdictMode(self.verdict_mode))
        object.__setattr__(self, "suppression", Suppression(self.suppression))
        if not isinstance(self.noise, NoiseBudget):
            raise ConfigError("noise must be a NoiseBudget")
        if self.theta_hi is not None or self.theta_lo is not None:
            hi, lo = self.thresholds()
            if not 0.0 <= lo < hi <= 1.0:
                raise ConfigError(f"need 0 <= theta_lo < theta_hi <= 1, got theta_lo={lo}, theta_hi={hi}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer")

    @property
    def n(self) -> int:
        return self.N - self.n_a - self.n_b

    @property
    def expected_singlets(self) -> float:
        return self.n / 4

    def expected_noise(self) -> float:
        """Total depolarizing level an honest verifier expects at the singlets."""
        b = self.noise
        return compose(
            b.env_a,
            b.env_b,
            b.self_a if self.suppression.alice else 0.0,
            b.self_b if self.suppression.bob else 0.0,
        )

    def thresholds(self) -> tuple[float, float]:
        auto_hi, auto_lo = default_thresholds(self.expected_noise(), self.expected_singlets)
        hi = auto_hi if self.theta_hi is None else float(self.theta_hi)
        if self.theta_lo is not None:
            lo = float(self.theta_lo)
        elif self.theta_hi is None:
            lo = auto_lo
        else:
            lo = theta_lo_for(hi)
        return hi, lo

    def with_(self, **changes) -> "ProtocolConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        hi, lo = self.thresholds()
        return {
            "N": self.N,
            "n_a": self.n_a,
            "n_b": self.n_b,
            "axis_policy": self.axis_policy.to_json(),
            "verdict_mode": self.verdict_mode.value,
            "theta_hi": self.theta_hi,
            "theta_lo": self.theta_lo,
            "effective_theta_hi": hi,
            "effective_theta_lo": lo,
            "noise": self.noise.to_dict(),
            "seed": int(self.seed),
            "suppression": self.suppression.value,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ProtocolConfig":
        known = {"N", "n_a", "n_b", "axis_policy", "verdict_mode", "theta_hi", "theta_lo", "noise", "seed",
                 "suppression", "effective_theta_hi", "effective_theta_lo"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        kwargs: dict[str, Any] = {k: data[k] for k in ("N", "n_a", "n_b", "theta_hi", "theta_lo", "seed") if k in data}
        if "axis_policy" in data:
            kwargs["axis_policy"] = AxisPolicy.from_json(data["axis_policy"])
        try:
            if "verdict_mode" in data:
                kwargs["verdict_mode"] = VerdictMode(data["verdict_mode"])
            if "suppression" in data:
                kwargs["suppression"] = Suppression(data["suppression"])
            if "noise" in data:
                noise = data["noise"]
                if isinstance(noise, (int, float)):
                    kwargs["noise"] = NoiseBudget.from_total(noise)
                else:
                    kwargs["noise"] = NoiseBudget(**noise)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        return cls(**kwargs)


class Phase(enum.IntEnum):
    ABORTED = -1
    FRESH = 0
    SOURCE_CHECKED = 1
    BOB_CHECKED = 2
    SHARED = 3
    COMMITTED = 4
    VERIFIED = 5


@dataclass(eq=False)
class PairRegister:
    """Ordered pairs plus per-position records of what each party did.

    Private records live side by side here; parties only reach the ones
    they own through :class:`AliceView` and :class:`BobView`.
    """

    rho: np.ndarray
    labels: np.ndarray
    consumed: np.ndarray
    alice_pauli: np.ndarray
    bob_pauli: np.ndarray
    alice_axis: np.ndarray
    alice_outcome: np.ndarray
    bob_axis: np.ndarray
    bob_outcome: np.ndarray
    phase: Phase = Phase.FRESH
    alice_scrambled: bool = False
    bob_scrambled: bool = False

    @classmethod
    def from_rho(cls, rho: np.ndarray) -> "PairRegister":
        rho = np.ascontiguousarray(rho, dtype=complex)
        m = rho.shape[0]
        return cls(
            rho=rho,
            labels=np.arange(m),
            consumed=np.zeros(m, dtype=bool),
            alice_pauli=np.full(m, NO_PAULI, dtype=np.int8),
            bob_pauli=np.full(m, NO_PAULI, dtype=np.int8),
            alice_axis=np.full((m, 3), np.nan),
            alice_outcome=np.zeros(m, dtype=np.int8),
            bob_axis=np.full((m, 3), np.nan),
            bob_outcome=np.zeros(m, dtype=np.int8),
        )

    @classmethod
    def filled(cls, state: PairState, m: int) -> "PairRegister":
        return cls.from_rho(np.broadcast_to(state.rho, (m, 4, 4)).copy())

    def __len__(self) -> int:
        return self.rho.shape[0]

    def state(self, k: int) -> PairState:
        return PairState(self.rho[k], validate=False)

    def unconsumed(self) -> np.ndarray:
        return np.flatnonzero(~self.consumed)

    def require(self, *phases: Phase) -> None:
        if self.phase not in phases:
            names = ", ".join(p.name for p in phases)
            raise PhaseError(f"operation needs phase {names}, register is {self.phase.name}")

    def copy(self) -> "PairRegister":
        arrays = {f: getattr(self, f).copy() for f in
                  ("rho", "labels", "consumed", "alice_pauli", "bob_pauli", "alice_axis",
                   "alice_outcome", "bob_axis", "bob_outcome")}
        return PairRegister(**arrays, phase=self.phase, alice_scrambled=self.alice_scrambled,
                            bob_scrambled=self.bob_scrambled)


@dataclass(frozen=True)
class CheckResult:
    checked: int
    failures: int
    allowance: int
    positions: np.ndarray = field(repr=False, compare=False)

    @property
    def passed(self) -> bool:
        return self.failures <= self.allowance

    def to_dict(self) -> dict:
        return {"passed": self.passed, "checked": self.checked, "failures": self.failures, "allowance": self.allowance}


@dataclass(frozen=True, eq=False)
class CommitmentRecord:
    bit: int
    d: np.ndarray
    axes: np.ndarray
    paulis: np.ndarray
    revealed: np.ndarray

    @property
    def n(self) -> int:
        return self.d.shape[0]


@dataclass(frozen=True, eq=False)
class Disclosure:
    claimed_paulis: np.ndarray
    claimed_axes: np.ndarray
    claimed_bit: int

    def __post_init__(self):
        if len(self.claimed_paulis) != len(self.claimed_axes):
            raise ValueError("claimed paulis and axes must have equal length")


class VerdictKind(str, enum.Enum):
    BIT0 = "0"
    BIT1 = "1"
    ABORT = "abort"


class AbortReason(str, enum.Enum):
    EMPTY_SINGLET_SET = "empty-singlet-set"
    THRESHOLD_FAIL = "threshold-fail"
    AMBIGUOUS = "ambiguous"
    SOURCE_REJECTED = "source-rejected"
    ENTANGLEMENT_REJECTED = "entanglement-rejected"


@dataclass(frozen=True)
class Verdict:
    kind: VerdictKind
    f_direct: float | None = None
    f_reverse: float | None = None
    singlet_count: int = 0
    compared: int = 0
    reason: AbortReason | None = None

    @property
    def bit(self) -> int | None:
        if self.kind is VerdictKind.ABORT:
            return None
        return 0 if self.kind is VerdictKind.BIT0 else 1

    @property
    def aborted(self) -> bool:
        return self.kind is VerdictKind.ABORT

    @classmethod
    def abort(cls, reason: AbortReason, **kw) -> "Verdict":
        return cls(VerdictKind.ABORT, reason=reason, **kw)


def symbols(outcomes: np.ndarray) -> np.ndarray:
    """Outcome signs to revealed symbols: up / right -> 1, down / left -> 0."""
    return (np.asarray(outcomes) > 0).astype(np.uint8)


# ---------------------------------------------------------------- steps

def init_session(cfg: ProtocolConfig, rng: np.random.Generator | None = None) -> PairRegister:
    """N singlets passed through the configured environmental noise."""
    if not isinstance(cfg, ProtocolConfig):
        raise ConfigError("init_session needs a ProtocolConfig")
    reg = PairRegister.filled(singlet(), cfg.N)
    inject_noise(reg, Side.ALICE, cfg.noise.env_a)
    inject_noise(reg, Side.BOB, cfg.noise.env_b)
    return reg


def _check_pairs(reg: PairRegister, count: int, policy: AxisPolicy, level: float, rng: np.random.Generator,
                 before_measure=None) -> CheckResult:
    free = reg.unconsumed()
    if count > free.size:
        raise ProtocolError(f"need {count} unconsumed pairs for the check, have {free.size}")
    chosen = np.sort(rng.choice(free, size=count, replace=False)) if count else free[:0]
    if before_measure is not None:
        before_measure(chosen)
    axes = policy.draw(count, rng)
    a = kernels.measure(reg.rho, chosen, Side.ALICE, axes, rng.random(count))
    b = kernels.measure(reg.rho, chosen, Side.BOB, axes, rng.random(count))
    reg.consumed[chosen] = True
    return CheckResult(count, int(np.count_nonzero(a == b)), check_allowance(count, level), chosen)


def alice_source_check(reg: PairRegister, n_a: int, policy: AxisPolicy, rng: np.random.Generator,
                       level: float = 0.0) -> CheckResult:
    """Alice measures n_a random pairs on both sides and demands anti-correlation."""
    reg.require(Phase.FRESH)
    result = _check_pairs(reg, n_a, policy, level, rng)
    if not result.passed:
        reg.phase = Phase.ABORTED
        raise SourceRejected(result)
    reg.phase = Phase.SOURCE_CHECKED
    return result


def scramble(reg: PairRegister, side: Side, rng: np.random.Generator) -> np.ndarray:
    """Apply one uniform random Pauli per unconsumed position on ``side``."""
    side = Side(side)
    if side is Side.ALICE:
        reg.require(Phase.SOURCE_CHECKED)
        if reg.alice_scrambled:
            raise PhaseError("Alice has already scrambled")
    elif side is Side.BOB:
        reg.require(Phase.BOB_CHECKED)
        if reg.bob_scrambled:
            raise PhaseError("Bob has already scrambled")
    else:
        raise ValueError("scramble acts on one side")
    idx = reg.unconsumed()
    ops = rng.integers(4, size=idx.size).astype(np.int8)
    kernels.apply_pauli(reg.rho, idx, side, ops)
    if side is Side.ALICE:
        reg.alice_pauli[idx] = ops
        reg.alice_scrambled = True
    else:
        reg.bob_pauli[idx] = ops
        reg.bob_scrambled = True
    return ops


def bob_entanglement_check(reg: PairRegister, n_b: int, policy: AxisPolicy, rng: np.random.Generator,
                           alice_honest_unscramble: bool = True, level: float = 0.0) -> CheckResult:
    """Bob samples n_b pairs, Alice undoes her Pauli on them, Bob measures both particles.

    A dishonest Alice sends her particles back still scrambled.
    """
    reg.require(Phase.SOURCE_CHECKED)

    def unscramble(chosen):
        if alice_honest_unscramble and reg.alice_scrambled and chosen.size:
            kernels.apply_pauli(reg.rho, chosen, Side.ALICE, reg.alice_pauli[chosen])

    result = _check_pairs(reg, n_b, policy, level, rng, before_measure=unscramble)
    if not result.passed:
        reg.phase = Phase.ABORTED
        raise EntanglementRejected(result)
    reg.phase = Phase.BOB_CHECKED
    return result


def renumber(reg: PairRegister) -> PairRegister:
    """Drop consumed check pairs in place; survivors become positions 0..n-1."""
    reg.require(Phase.BOB_CHECKED)
    keep = ~reg.consumed
    for name in ("rho", "labels", "consumed", "alice_pauli", "bob_pauli", "alice_axis",
                 "alice_outcome", "bob_axis", "bob_outcome"):
        setattr(reg, name, np.ascontiguousarray(getattr(reg, name)[keep]))
    reg.phase = Phase.SHARED
    return reg


def commit(bit: int, reg: PairRegister, rng: np.random.Generator) -> CommitmentRecord:
    """Alice measures every shared pair along X or Z and reveals the results
    in direct order for bit 0, reversed for bit 1."""
    if bit not in (0, 1):
        raise ValueError("bit must be 0 or 1")
    reg.require(Phase.SHARED)
    n = len(reg)
    idx = np.arange(n)
    axes = random_xz(n, rng)
    d = kernels.measure(reg.rho, idx, Side.ALICE, axes, rng.random(n))
    reg.alice_axis[:] = axes
    reg.alice_outcome[:] = d
    sym = symbols(d)
    revealed = sym if bit == 0 else sym[::-1].copy()
    reg.phase = Phase.COMMITTED
    return CommitmentRecord(bit=int(bit), d=d.copy(), axes=axes.copy(), paulis=reg.alice_pauli.copy(), revealed=revealed)


def unveil(rec: CommitmentRecord) -> Disclosure:
    return Disclosure(
        claimed_paulis=np.where(rec.paulis < 0, 0, rec.paulis).astype(np.int8),
        claimed_axes=rec.axes.copy(),
        claimed_bit=rec.bit,
    )


def _as_paulis(ops) -> np.ndarray:
    ops = np.asarray(ops, dtype=np.int8)
    return np.where(ops < 0, 0, ops)


def identify_singlets(alice_paulis, bob_paulis) -> np.ndarray:
    """Positions where both parties applied the same Pauli (missing counts as identity)."""
    a, b = _as_paulis(alice_paulis), _as_paulis(bob_paulis)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape[0]} vs {b.shape[0]}")
    return np.flatnonzero(a == b)


def verify_commitment(reg: PairRegister, revealed: np.ndarray, disc: Disclosure, bob_paulis,
                      verdict_mode: VerdictMode, thresholds: tuple[float, float],
                      rng: np.random.Generator) -> Verdict:
    """Bob's decision from anti-correlations at the disclosed singlet positions.

    Bob measures his particle at each singlet position along Alice's
    claimed axis. A particle he already measured along that axis keeps its
    recorded outcome; one measured along a different axis is left out.
    """
    reg.require(Phase.COMMITTED)
    n = len(reg)
    revealed = np.asarray(revealed)
    if revealed.shape[0] != n or len(disc.claimed_paulis) != n:
        raise ValueError("revealed sequence and disclosure must cover all n positions")
    verdict_mode = VerdictMode(verdict_mode)
    hi, lo = thresholds
    reg.phase = Phase.VERIFIED
    singles = identify_singlets(disc.claimed_paulis, bob_paulis)
    if singles.size == 0:
        return Verdict.abort(AbortReason.EMPTY_SINGLET_SET)
    claimed_axes = np.asarray(disc.claimed_axes, dtype=float)
    fresh = singles[reg.bob_outcome[singles] == 0]
    if fresh.size:
        out = kernels.measure(reg.rho, fresh, Side.BOB, claimed_axes[fresh], rng.random(fresh.size))
        reg.bob_axis[fresh] = claimed_axes[fresh]
        reg.bob_outcome[fresh] = out
    same_axis = np.all(np.abs(reg.bob_axis[singles] - claimed_axes[singles]) <= AXIS_MATCH_TOL, axis=1)
    used = singles[same_axis]
    if used.size == 0:
        return Verdict.abort(AbortReason.EMPTY_SINGLET_SET, singlet_count=int(singles.size))
    mine = symbols(reg.bob_outcome[used])
    f_direct = float(np.mean(mine != revealed[used]))
    f_reverse = float(np.mean(mine != revealed[n - 1 - used]))
    stats = dict(f_direct=f_direct, f_reverse=f_reverse, singlet_count=int(singles.size), compared=int(used.size))
    claimed, other = (f_direct, f_reverse) if disc.claimed_bit == 0 else (f_reverse, f_direct)
    eps = 1e-12
    if claimed < hi - eps:
        return Verdict.abort(AbortReason.THRESHOLD_FAIL, **stats)
    if verdict_mode is VerdictMode.DUAL and other > lo + eps:
        return Verdict.abort(AbortReason.AMBIGUOUS, **stats)
    return Verdict(VerdictKind.BIT0 if disc.claimed_bit == 0 else VerdictKind.BIT1, **stats)


# ---------------------------------------------------------------- transcript

def _jsonable(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


class Transcript:
    """One record per protocol message: phase tag, sender, payload digest."""

    def __init__(self):
        self.records: list[dict] = []

    def send(self, phase: str, sender: str, payload: dict) -> None:
        blob = json.dumps(_jsonable(payload), sort_keys=True, separators=(",", ":")).encode()
        self.records.append({
            "seq": len(self.records),
            "phase": phase,
            "sender": sender,
            "digest": "sha256:" + hashlib.sha256(blob).hexdigest(),
            "bytes": len(blob),
        })

    def to_ndjson(self) -> str:
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.records)

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_ndjson())


# ---------------------------------------------------------------- parties

class AliceView:
    """What Alice legally knows: her own records and messages sent to her."""

    def __init__(self, reg: PairRegister):
        self._reg = reg
        self.bob_guess: int | None = None

    @property
    def n(self) -> int:
        return len(self._reg)

    @property
    def scrambled(self) -> bool:
        return self._reg.alice_scrambled

    @property
    def paulis(self) -> np.ndarray:
        return self._reg.alice_pauli.copy()

    @property
    def axes(self) -> np.ndarray:
        return self._reg.alice_axis.copy()

    @property
    def outcomes(self) -> np.ndarray:
        return self._reg.alice_outcome.copy()


class BobView:
    """What Bob legally knows: his Paulis, the revealed symbols, his own particles."""

    def __init__(self, reg: PairRegister, revealed: np.ndarray):
        self._reg = reg
        self.revealed = np.asarray(revealed).copy()

    @property
    def n(self) -> int:
        return len(self._reg)

    @property
    def paulis(self) -> np.ndarray:
        return self._reg.bob_pauli.copy()

    def measure_own(self, idx, axes, rng: np.random.Generator) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.int64)
        axes = np.asarray(axes, dtype=float)
        out = kernels.measure(self._reg.rho, idx, Side.BOB, axes, rng.random(idx.size))
        self._reg.bob_axis[idx] = axes
        self._reg.bob_outcome[idx] = out
        return out


class Alice:
    """Honest committer. Cheating strategies override individual steps."""

    name = "honest"
    cheating = False
    honest_unscramble = True

    def prepare_source(self, cfg: ProtocolConfig, rng) -> PairRegister:
        return init_session(cfg, rng)

    def check_source(self, reg: PairRegister, cfg: ProtocolConfig, rng) -> CheckResult | None:
        return alice_source_check(reg, cfg.n_a, cfg.axis_policy, rng, level=cfg.noise.source_level)

    def wants_scramble(self, cfg: ProtocolConfig) -> bool:
        return cfg.suppression.alice

    def choose_bit(self, rng) -> int:
        return int(rng.integers(2))

    def disclose(self, view: AliceView, record: CommitmentRecord, guess: int | None, rng) -> Disclosure:
        return unveil(record)


class Bob:
    """Honest verifier who guesses the coin without looking."""

    name = "honest"
    cheating = False

    def wants_scramble(self, cfg: ProtocolConfig) -> bool:
        return cfg.suppression.bob

    def guess(self, view: BobView, rng) -> int:
        return int(rng.integers(2))


@dataclass
class SessionResult:
    config: ProtocolConfig
    bit: int | None = None
    source_check: CheckResult | None = None
    entanglement_check: CheckResult | None = None
    record: CommitmentRecord | None = None
    disclosure: Disclosure | None = None
    verdict: Verdict | None = None
    guess: int | None = None
    register: PairRegister | None = field(default=None, repr=False)

    @property
    def aborted(self) -> bool:
        return self.verdict is None or self.verdict.aborted

    @property
    def coin(self) -> int | None:
        """1 when Bob's guess matched the verified bit, 0 when it did not, None on abort."""
        if self.guess is None or self.aborted:
            return None
        return int(self.verdict.bit == self.guess)

    @property
    def flip_attempted(self) -> bool:
        return self.disclosure is not None and self.record is not None and self.disclosure.claimed_bit != self.record.bit

    @property
    def flipped(self) -> bool:
        return self.flip_attempted and not self.aborted and self.verdict.bit == self.disclosure.claimed_bit


def run_session(cfg: ProtocolConfig, rng: np.random.Generator, alice: Alice | None = None, bob: Bob | None = None,
                bit: int | None = None, coin: bool = False, transcript: Transcript | None = None) -> SessionResult:
    """Run one commitment, or one coin toss when ``coin`` is set.

    Check rejections end the session with an abort verdict rather than
    raising.
    """
    alice = alice or Alice()
    bob = bob or Bob()
    tx = transcript.send if transcript is not None else (lambda *a: None)
    result = SessionResult(config=cfg)

    reg = alice.prepare_source(cfg, rng)
    result.register = reg
    try:
        result.source_check = alice.check_source(reg, cfg, rng)
    except SourceRejected as exc:
        result.source_check = exc.result
        result.verdict = Verdict.abort(AbortReason.SOURCE_REJECTED)
        return result
    if reg.phase is Phase.FRESH:
        reg.phase = Phase.SOURCE_CHECKED

    if alice.wants_scramble(cfg):
        scramble(reg, Side.ALICE, rng)
        inject_noise(reg, Side.ALICE, cfg.noise.injected(Side.ALICE, alice.cheating))
    tx("transmit", "alice", {"pairs": int(reg.unconsumed().size)})

    expected = compose(cfg.noise.source_level, cfg.noise.self_a if cfg.suppression.alice else 0.0)
    try:
        result.entanglement_check = bob_entanglement_check(
            reg, cfg.n_b, cfg.axis_policy, rng, alice_honest_unscramble=alice.honest_unscramble, level=expected)
    except EntanglementRejected as exc:
        result.entanglement_check = exc.result
        result.verdict = Verdict.abort(AbortReason.ENTANGLEMENT_REJECTED)
        tx("check", "bob", {"positions": exc.result.positions, "passed": False})
        return result
    tx("check", "bob", {"positions": result.entanglement_check.positions, "passed": True})

    if bob.wants_scramble(cfg):
        scramble(reg, Side.BOB, rng)
        inject_noise(reg, Side.BOB, cfg.noise.injected(Side.BOB, bob.cheating))
    renumber(reg)

    result.bit = alice.choose_bit(rng) if bit is None else int(bit)
    record = commit(result.bit, reg, rng)
    result.record = record
    tx("commit", "alice", {"revealed": record.revealed})

    alice_view = AliceView(reg)
    if coin:
        result.guess = int(bob.guess(BobView(reg, record.revealed), rng))
        alice_view.bob_guess = result.guess
        tx("guess", "bob", {"guess": result.guess})

    disc = alice.disclose(alice_view, record, result.guess, rng)
    result.disclosure = disc
    tx("unveil", "alice", {"bit": disc.claimed_bit, "paulis": disc.claimed_paulis, "axes": disc.claimed_axes})

    result.verdict = verify_commitment(reg, record.revealed, disc, reg.bob_pauli, cfg.verdict_mode,
                                       cfg.thresholds(), rng)
    tx("verdict", "bob", {"verdict": result.verdict.kind, "f_direct": result.verdict.f_direct,
                          "f_reverse": result.verdict.f_reverse})
    return result


def coin_toss(alice: Alice, bob: Bob, cfg: ProtocolConfig, rng: np.random.Generator) -> int | None:
    """1 if Bob guessed the verified bit, 0 if not, None on abort."""
    return run_session(cfg, rng, alice, bob, coin=True).coin


def session_rng(seed: int, run_index: int | None = None) -> np.random.Generator:
    """Per-run stream derived from (seed, run index)."""
    key = () if run_index is None else (int(run_index),)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=key)))
