"""Dense statevector / density-matrix primitives.

States are plain numpy arrays: a 1-D array is a statevector, a 2-D square
array is a density matrix. Qubits are indexed from 0 and qubit 0 is the most
significant bit of the basis index, so on three qubits ``|100>`` is index 4.
"""
from __future__ import annotations

import numpy as np

HERMITIAN_RTOL = 1e-12
UNITARY_ATOL = 1e-10
NEGATIVE_PROB_GUARD = 1e-8


class NumericalError(RuntimeError):
    """Raised when a numerical routine cannot produce a trustworthy result."""


I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = {"I": I2, "X": X, "Y": Y, "Z": Z}


def n_qubits_of(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim < 1 or 1 << n != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    return n


def is_hermitian(a: np.ndarray) -> bool:
    scale = np.max(np.abs(a)) if a.size else 0.0
    return bool(np.max(np.abs(a - a.conj().T), initial=0.0) <= HERMITIAN_RTOL * scale)


def is_unitary(u: np.ndarray, atol: float = UNITARY_ATOL) -> bool:
    eye = np.eye(u.shape[0])
    return bool(np.max(np.abs(u.conj().T @ u - eye)) <= atol)


def hermitian_expm(a: np.ndarray, scale: float = 1.0) -> np.ndarray:
    """Return ``exp(-i * scale * a)`` for Hermitian ``a`` via eigendecomposition."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not is_hermitian(a):
        raise ValueError("hermitian_expm requires a Hermitian matrix")
    if scale == 0:
        return np.eye(a.shape[0], dtype=complex)
    try:
        w, v = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NumericalError(f"eigensolver did not converge: {exc}") from exc
    return (v * np.exp(-1j * scale * w)) @ v.conj().T


def kron_all(*ops: np.ndarray) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for op in ops:
        out = np.kron(out, op)
    return out


def pauli_operator(factors, n_qubits: int) -> np.ndarray:
    """Dense matrix of a Pauli string given as ``[(qubit, 'X'|'Y'|'Z'), ...]``."""
    ops = [I2] * n_qubits
    for q, p in factors:
        ops[q] = PAULI[p]
    return kron_all(*ops)


def embed(u: np.ndarray, targets, n_qubits: int) -> np.ndarray:
    """Full ``2**n`` matrix of ``u`` acting on ``targets`` (identity elsewhere)."""
    eye = np.eye(1 << n_qubits, dtype=complex)
    return apply_to_batch(eye, u, targets, n_qubits).T


# --- gate matrices (the standard rotation conventions) ---------------------

def rz(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def _pair_rotation(p: np.ndarray, q: np.ndarray, theta: float) -> np.ndarray:
    # P⊗Q squares to identity, so exp(-iθ/2 P⊗Q) = cos(θ/2) I - i sin(θ/2) P⊗Q
    return np.cos(theta / 2) * np.eye(4) - 1j * np.sin(theta / 2) * np.kron(p, q)


def rxx(theta: float) -> np.ndarray:
    return _pair_rotation(X, X, theta)


def ryy(theta: float) -> np.ndarray:
    return _pair_rotation(Y, Y, theta)


def rzx(theta: float) -> np.ndarray:
    """``exp(-iθ/2 Z⊗X)``: Z on the first target, X on the second."""
    return _pair_rotation(Z, X, theta)


# --- state application ------------------------------------------------------

def _check_targets(targets, n_qubits: int, k: int) -> tuple[int, ...]:
    targets = tuple(int(t) for t in targets)
    if len(set(targets)) != len(targets):
        raise ValueError(f"duplicate target qubits {targets}")
    if any(t < 0 or t >= n_qubits for t in targets):
        raise ValueError(f"targets {targets} out of range for {n_qubits} qubits")
    if len(targets) != k:
        raise ValueError(f"gate acts on {k} qubits but {len(targets)} targets given")
    return targets


def apply_to_batch(states: np.ndarray, u: np.ndarray, targets, n_qubits: int) -> np.ndarray:
    """Apply ``u`` on ``targets`` to every row of ``states`` (shape ``(R, 2**n)``)."""
    u = np.asarray(u)
    k = n_qubits_of(u.shape[0])
    targets = _check_targets(targets, n_qubits, k)
    r = states.shape[0]
    psi = states.reshape((r,) + (2,) * n_qubits)
    src = [1 + t for t in targets]
    dst = list(range(1, 1 + k))
    psi = np.moveaxis(psi, src, dst).reshape(r, 1 << k, -1)
    psi = np.einsum("ab,rbx->rax", u, psi)
    psi = psi.reshape((r,) + (2,) * n_qubits)
    return np.moveaxis(psi, dst, src).reshape(r, -1)


def apply_unitary(state: np.ndarray, u: np.ndarray, targets, n_qubits: int | None = None) -> np.ndarray:
    """Apply ``u`` to the target qubits of a statevector or density matrix."""
    state = np.asarray(state, dtype=complex)
    if n_qubits is None:
        n_qubits = n_qubits_of(state.shape[0])
    if state.shape[0] != 1 << n_qubits:
        raise ValueError(f"state of dimension {state.shape[0]} does not match {n_qubits} qubits")
    if state.ndim == 1:
        return apply_to_batch(state[None, :], u, targets, n_qubits)[0]
    if state.ndim == 2:
        # U rho U^dagger: act on columns, then on rows of the conjugated result
        tmp = apply_to_batch(state.T, u, targets, n_qubits).T
        return apply_to_batch(tmp.conj(), u, targets, n_qubits).conj()
    raise ValueError(f"state must be 1-D or 2-D, got {state.ndim}-D")


def basis_probabilities(state: np.ndarray) -> np.ndarray:
    """Computational-basis probabilities, with rounding negatives clipped to 0."""
    state = np.asarray(state)
    if state.ndim == 1:
        p = np.abs(state) ** 2
    elif state.ndim == 2:
        p = np.real(np.diagonal(state)).copy()
    else:
        raise ValueError(f"state must be 1-D or 2-D, got {state.ndim}-D")
    if p.size and p.min() < -NEGATIVE_PROB_GUARD:
        raise NumericalError(f"negative probability {p.min():.3e} beyond rounding tolerance")
    return np.clip(p, 0.0, None)


def sample_shots(probs, shots: int, rng: np.random.Generator) -> np.ndarray:
    """Multinomial counts of ``shots`` computational-basis measurements."""
    if shots < 1:
        raise ValueError("cannot draw an empty sample (shots must be >= 1)")
    p = np.asarray(probs, dtype=float)
    if p.min() < -NEGATIVE_PROB_GUARD:
        raise NumericalError(f"negative probability {p.min():.3e}")
    p = np.clip(p, 0.0, None)
    total = p.sum()
    if abs(total - 1.0) > 1e-8:
        raise ValueError(f"probabilities sum to {total}, expected 1")
    return rng.multinomial(shots, p / total)


def _bit_mask(n_qubits: int, qubit: int) -> np.ndarray:
    idx = np.arange(1 << n_qubits)
    return ((idx >> (n_qubits - 1 - qubit)) & 1).astype(bool)


def _row_sum(a: np.ndarray) -> np.ndarray:
    """Sum along axis 1 in fixed column order, so each row's result ignores the batch size."""
    out = a[:, 0].copy()
    for k in range(1, a.shape[1]):
        out += a[:, k]
    return out


def measure_and_reset_batch(states: np.ndarray, qubit: int, uniforms: np.ndarray, n_qubits: int):
    """Vectorised measure-then-reset of ``qubit`` using pre-drawn uniforms.

    Row ``r`` reads 1 when ``uniforms[r] < P(qubit=1)``. Returns the new states
    (qubit forced to ``|0>``) and the integer outcome bits.
    """
    ones = _bit_mask(n_qubits, qubit)
    p1 = _row_sum(np.abs(states[:, ones]) ** 2)
    bits = (uniforms < p1).astype(np.int8)
    shift = 1 << (n_qubits - 1 - qubit)
    zeros_idx = np.flatnonzero(~ones)
    out = np.zeros_like(states)
    # outcome 1: move the |1> branch onto |0> (projection followed by X)
    kept = np.where(bits[:, None] == 1, states[:, zeros_idx + shift], states[:, zeros_idx])
    norm = np.sqrt(_row_sum(np.abs(kept) ** 2))
    if np.any(norm <= 0):
        raise NumericalError("measurement selected a zero-probability branch")
    out[:, zeros_idx] = kept / norm[:, None]
    return out, bits


def measure_and_reset(state: np.ndarray, qubit: int, rng: np.random.Generator):
    """Measure ``qubit`` of a statevector, collapse, and reinitialise it to ``|0>``."""
    state = np.asarray(state, dtype=complex)
    if state.ndim != 1:
        raise ValueError("measure_and_reset needs a statevector; trace out density matrices instead")
    n = n_qubits_of(state.shape[0])
    if not 0 <= qubit < n:
        raise ValueError(f"qubit {qubit} out of range for {n} qubits")
    out, bits = measure_and_reset_batch(state[None, :], qubit, np.array([rng.random()]), n)
    return out[0], int(bits[0])


def trace_out_ancilla(rho: np.ndarray, qubit: int) -> np.ndarray:
    """Partial trace of a density matrix over one qubit."""
    rho = np.asarray(rho)
    if rho.ndim != 2:
        raise ValueError("trace_out_ancilla needs a density matrix")
    n = n_qubits_of(rho.shape[0])
    if not 0 <= qubit < n:
        raise ValueError(f"qubit {qubit} out of range for {n} qubits")
    t = rho.reshape((2,) * (2 * n))
    t = np.trace(t, axis1=qubit, axis2=n + qubit)
    d = 1 << (n - 1)
    return t.reshape(d, d)


def ket(index: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def projector(index: int, dim: int) -> np.ndarray:
    p = np.zeros((dim, dim), dtype=complex)
    p[index, index] = 1.0
    return p


def density(psi: np.ndarray) -> np.ndarray:
    return np.outer(psi, psi.conj())
