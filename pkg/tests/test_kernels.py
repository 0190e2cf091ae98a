import numpy as np
import pytest

from qct import _pykernels, kernels
from qct.noise import NoiseBudget
from qct.protocol import ProtocolConfig, run_session, session_rng
from qct.qsim import (
    Axis, BellKind, Outcome, PairState, PauliOp, Side, apply_pauli, bell_state, born_probability, depolarize,
)

BACKENDS = kernels.available()


def random_stack(rng, m):
    """Random valid states: Bell states passed through random noise and Paulis."""
    kinds = list(BellKind)
    states = []
    for _ in range(m):
        s = bell_state(kinds[rng.integers(4)])
        s = depolarize(s, Side.ALICE, float(rng.random()))
        s = apply_pauli(s, Side.BOB, PauliOp(int(rng.integers(4))))
        states.append(s.rho)
    return np.ascontiguousarray(np.stack(states))


def unit_rows(rng, m):
    v = rng.normal(size=(m, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def test_python_backend_always_available():
    assert "python" in BACKENDS
    assert kernels.BACKEND in BACKENDS


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.set_backend("fortran")


@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize("side", [Side.ALICE, Side.BOB])
def test_apply_pauli_matches_oracle(backend, side):
    rng = np.random.default_rng(3)
    rho = random_stack(rng, 40)
    ops = rng.integers(4, size=25).astype(np.int8)
    idx = np.sort(rng.choice(40, size=25, replace=False))
    expected = rho.copy()
    for k, u in zip(idx, ops):
        expected[k] = apply_pauli(PairState(rho[k]), side, PauliOp(int(u))).rho
    with kernels.use_backend(backend):
        kernels.apply_pauli(rho, idx, side, ops)
    assert np.max(np.abs(rho - expected)) < 1e-14


@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize("side", [Side.ALICE, Side.BOB])
def test_depolarize_matches_oracle(backend, side):
    rng = np.random.default_rng(4)
    rho = random_stack(rng, 30)
    idx = np.arange(0, 30, 2)
    expected = rho.copy()
    for k in idx:
        expected[k] = depolarize(PairState(rho[k]), side, 0.37).rho
    with kernels.use_backend(backend):
        kernels.depolarize(rho, idx, side, 0.37)
    assert np.max(np.abs(rho - expected)) < 1e-14


@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize("side", [Side.ALICE, Side.BOB])
def test_measure_follows_born_rule_and_collapses(backend, side):
    rng = np.random.default_rng(5)
    m = 50
    rho = random_stack(rng, m)
    axes = unit_rows(rng, m)
    u = rng.random(m)
    p_up = np.array([born_probability(PairState(rho[k]), side, Axis(*axes[k]), Outcome.UP) for k in range(m)])
    before = rho.copy()
    with kernels.use_backend(backend):
        out = kernels.measure(rho, np.arange(m), side, axes, u)
    assert out.dtype == np.int8
    assert np.array_equal(out, np.where(u < p_up, 1, -1))
    for k in range(m):
        post = PairState(rho[k])
        assert abs(born_probability(post, side, Axis(*axes[k]), Outcome(int(out[k]))) - 1.0) < 1e-12
    assert not np.allclose(rho, before)


def test_backends_agree_exactly_on_a_session():
    if len(BACKENDS) < 2:
        pytest.skip("compiled kernels not built")
    cfg = ProtocolConfig(noise=NoiseBudget(env_a=0.1, self_a=0.2, self_b=0.1))
    results = {}
    for name in BACKENDS:
        with kernels.use_backend(name):
            res = run_session(cfg, session_rng(11), bit=1)
        results[name] = res
    a, b = results["cython"], results["python"]
    assert a.verdict == b.verdict
    assert np.array_equal(a.record.revealed, b.record.revealed)
    assert np.max(np.abs(a.register.rho - b.register.rho)) < 1e-12


def test_use_backend_restores_previous():
    before = kernels.BACKEND
    with kernels.use_backend("python"):
        assert kernels.BACKEND == "python"
    assert kernels.BACKEND == before


def test_up_projectors_are_projectors():
    rng = np.random.default_rng(6)
    P = _pykernels.up_projectors(unit_rows(rng, 10))
    assert np.allclose(P @ P, P, atol=1e-14)
    assert np.allclose(np.trace(P, axis1=1, axis2=2), 1.0)
