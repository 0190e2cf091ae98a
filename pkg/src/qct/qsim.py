"""Exact two-particle spin mechanics for a single EPR pair.

States are 4x4 density matrices in the ordered basis {uu, ud, du, dd}
where the left tensor factor is Alice's particle and the right factor is
Bob's. Everything here works on one pair at a time with explicit
Kronecker products; the batched register kernels in ``qct.kernels`` are
checked against these functions.
"""
from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_FLOOR = -1e-9
AXIS_TOL = 1e-12
# Born probabilities within this distance of 0 or 1 are snapped so that a
# numerically-zero branch can never be sampled.
PROB_SNAP = 1e-12

I2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


class InvalidStateError(ValueError):
    pass


class Side(enum.IntEnum):
    ALICE = 0
    BOB = 1
    BOTH = 2


class BellKind(enum.Enum):
    PSI_MINUS = "psi-"
    PSI_PLUS = "psi+"
    PHI_MINUS = "phi-"
    PHI_PLUS = "phi+"


class PauliOp(enum.IntEnum):
    """Local Pauli operation; the integer value is the kernel opcode."""

    ID = 0
    X = 1
    Y = 2
    Z = 3

    @property
    def matrix(self) -> np.ndarray:
        return PAULI_MATRICES[self.value]


PAULI_MATRICES = np.stack([I2, SIGMA_X, SIGMA_Y, SIGMA_Z])


class Outcome(enum.IntEnum):
    UP = 1
    DOWN = -1

    @property
    def symbol(self) -> int:
        # up (along Z) and right (up along X) are written as 1
        return 1 if self is Outcome.UP else 0


@dataclass(frozen=True)
class Axis:
    x: float
    y: float
    z: float

    def __post_init__(self):
        norm = math.sqrt(self.x ** 2 + self.y ** 2 + self.z ** 2)
        if abs(norm - 1.0) > AXIS_TOL:
            raise ValueError(f"axis must be a unit vector, got norm {norm!r}")

    @classmethod
    def normalized(cls, x: float, y: float, z: float) -> "Axis":
        v = np.array([x, y, z], dtype=float)
        v = v / np.linalg.norm(v)
        return cls(*map(float, v))

    @classmethod
    def random(cls, rng: np.random.Generator) -> "Axis":
        """Uniformly distributed on the unit sphere."""
        while True:
            v = rng.normal(size=3)
            n = np.linalg.norm(v)
            if n > 1e-8:
                return cls.normalized(*v)

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def same_as(self, other: "Axis", tol: float = 1e-9) -> bool:
        return bool(np.max(np.abs(self.vector - other.vector)) <= tol)


Axis.X = Axis(1.0, 0.0, 0.0)
Axis.Y = Axis(0.0, 1.0, 0.0)
Axis.Z = Axis(0.0, 0.0, 1.0)


def spin_operator(axis: Axis) -> np.ndarray:
    return axis.x * SIGMA_X + axis.y * SIGMA_Y + axis.z * SIGMA_Z


def spin_projector(axis: Axis, outcome: Outcome) -> np.ndarray:
    """(I + s n.sigma)/2 for outcome sign s."""
    return 0.5 * (I2 + int(outcome) * spin_operator(axis))


def spin_eigenstate(axis: Axis, outcome: Outcome) -> np.ndarray:
    """Unit ket spanning the range of ``spin_projector(axis, outcome)``."""
    proj = spin_projector(axis, outcome)
    # rank-1 projector: any nonzero column spans its range
    col = proj[:, int(np.argmax(np.linalg.norm(proj, axis=0)))]
    return col / np.linalg.norm(col)


def _lift(op: np.ndarray, side: Side) -> np.ndarray:
    if side is Side.ALICE:
        return np.kron(op, I2)
    if side is Side.BOB:
        return np.kron(I2, op)
    raise ValueError(f"single-side operation needs ALICE or BOB, got {side!r}")


class PairState:
    """Density matrix of one pair, stored as a private 4x4 complex copy."""

    __slots__ = ("_rho",)

    def __init__(self, rho, *, validate: bool = True):
        rho = np.array(rho, dtype=complex)
        if rho.shape != (4, 4):
            raise InvalidStateError(f"expected 4x4 matrix, got shape {rho.shape}")
        rho.setflags(write=False)
        self._rho = rho
        if validate:
            self.check()

    @classmethod
    def from_ket(cls, amplitudes) -> "PairState":
        psi = np.asarray(amplitudes, dtype=complex).reshape(4)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def maximally_mixed(cls) -> "PairState":
        return cls(np.eye(4) / 4)

    @property
    def rho(self) -> np.ndarray:
        return self._rho

    def check(self) -> None:
        rho = self._rho
        herm = np.max(np.abs(rho - rho.conj().T))
        if herm > HERMITIAN_TOL:
            raise InvalidStateError(f"not Hermitian (max deviation {herm:.3g})")
        tr = np.trace(rho)
        if abs(tr - 1.0) > TRACE_TOL:
            raise InvalidStateError(f"trace {tr} is not 1")
        lo = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min()
        if lo < PSD_FLOOR:
            raise InvalidStateError(f"negative eigenvalue {lo:.3g}")

    def purity(self) -> float:
        return float(np.real(np.trace(self._rho @ self._rho)))

    def marginal(self, side: Side) -> np.ndarray:
        """Reduced 2x2 state of one particle."""
        t = self._rho.reshape(2, 2, 2, 2)
        if side is Side.ALICE:
            return np.einsum("abcb->ac", t)
        if side is Side.BOB:
            return np.einsum("abad->bd", t)
        raise ValueError(side)

    def allclose(self, other: "PairState", atol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self._rho - other._rho)) <= atol)

    def __repr__(self):
        return f"PairState(purity={self.purity():.6f})"


_S = 1 / math.sqrt(2)
_BELL_KETS = {
    # basis order uu, ud, du, dd
    BellKind.PSI_MINUS: (0, _S, -_S, 0),
    BellKind.PSI_PLUS: (0, _S, _S, 0),
    BellKind.PHI_MINUS: (_S, 0, 0, -_S),
    BellKind.PHI_PLUS: (_S, 0, 0, _S),
}


def bell_ket(kind: BellKind) -> np.ndarray:
    return np.array(_BELL_KETS[kind], dtype=complex)


@functools.lru_cache(maxsize=None)
def bell_state(kind: BellKind) -> PairState:
    # PairState is immutable, so one validated copy per kind is shared
    return PairState.from_ket(bell_ket(kind))


def singlet() -> PairState:
    return bell_state(BellKind.PSI_MINUS)


def product_state(left: Outcome, left_axis: Axis, right: Outcome, right_axis: Axis) -> PairState:
    """Pure product of two spin eigenstates (Alice's on the left)."""
    for ax in (left_axis, right_axis):
        if not isinstance(ax, Axis):
            raise TypeError("axes must be Axis instances")
    ket = np.kron(spin_eigenstate(left_axis, Outcome(left)), spin_eigenstate(right_axis, Outcome(right)))
    return PairState.from_ket(ket)


def apply_pauli(s: PairState, side: Side, u: PauliOp) -> PairState:
    op = _lift(PauliOp(u).matrix, Side(side))
    return PairState(op @ s.rho @ op.conj().T)


def born_probability(s: PairState, side: Side, axis: Axis, outcome: Outcome) -> float:
    proj = _lift(spin_projector(axis, outcome), Side(side))
    p = float(np.real(np.trace(proj @ s.rho)))
    if p < PROB_SNAP:
        return 0.0
    if p > 1.0 - PROB_SNAP:
        return 1.0
    return p


def measure_spin(s: PairState, side: Side, axis: Axis, rng: np.random.Generator) -> tuple[Outcome, PairState]:
    """Projective spin measurement of one particle; returns outcome and collapsed pair."""
    p_up = born_probability(s, side, axis, Outcome.UP)
    outcome = Outcome.UP if rng.random() < p_up else Outcome.DOWN
    p = p_up if outcome is Outcome.UP else 1.0 - p_up
    proj = _lift(spin_projector(axis, outcome), Side(side))
    post = proj @ s.rho @ proj / p
    return outcome, PairState(0.5 * (post + post.conj().T))


def anticorrelation_prob(s: PairState, axis_a: Axis, axis_b: Axis) -> float:
    """Exact probability that joint measurements on the two particles disagree in sign."""
    total = 0.0
    for sa, sb in ((Outcome.UP, Outcome.DOWN), (Outcome.DOWN, Outcome.UP)):
        proj = np.kron(spin_projector(axis_a, sa), spin_projector(axis_b, sb))
        total += float(np.real(np.trace(proj @ s.rho)))
    return min(1.0, max(0.0, total))


def correlation(s: PairState, axis_a: Axis, axis_b: Axis) -> float:
    """<(a.sigma) x (b.sigma)>, equal to 1 - 2 * anticorrelation_prob."""
    op = np.kron(spin_operator(axis_a), spin_operator(axis_b))
    return float(np.real(np.trace(op @ s.rho)))


def _check_probability(p: float) -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0 or math.isnan(p):
        raise ValueError(f"probability must lie in [0, 1], got {p!r}")
    return p


def depolarize(s: PairState, side: Side, p: float) -> PairState:
    """Single-side depolarizing channel as a uniform Pauli twirl of weight ``p``.

    rho -> (1 - p) rho + (p / 4) sum_P P rho P, i.e. with probability ``p``
    the particle is replaced by the maximally mixed state. ``Side.BOTH``
    applies the channel to each particle in turn.
    """
    p = _check_probability(p)
    side = Side(side)
    if side is Side.BOTH:
        return depolarize(depolarize(s, Side.ALICE, p), Side.BOB, p)
    twirl = sum(_lift(m, side) @ s.rho @ _lift(m, side).conj().T for m in PAULI_MATRICES) / 4
    return PairState((1 - p) * s.rho + p * twirl)


def mix_equal(states: Sequence[PairState]) -> PairState:
    states = list(states)
    if not states:
        raise ValueError("mix_equal needs at least one state")
    return PairState(sum(st.rho for st in states) / len(states))


def bell_kind_of(s: PairState, atol: float = 1e-9) -> BellKind | None:
    """Which Bell state ``s`` is (phase-free), or None."""
    for kind in BellKind:
        if s.allclose(bell_state(kind), atol=atol):
            return kind
    return None


def pauli_anticommutes(u: PauliOp, axis: Axis) -> bool:
    """True when u flips the sign of spin along ``axis`` (u sigma_n u = -sigma_n)."""
    m = PauliOp(u).matrix
    sn = spin_operator(axis)
    return bool(np.allclose(m @ sn @ m.conj().T, -sn, atol=1e-12))
