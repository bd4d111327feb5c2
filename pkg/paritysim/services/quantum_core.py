"""Quantum core module: single-qubit gates, the dense and product state backends, and separability checks.

Bit order: qubit 0 (spin A, the first character of a bit string) is the most
significant bit of a dense basis index, so index 0b01 is the string "01".
"""

import logging
from dataclasses import dataclass
from functools import reduce
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

logger = logging.getLogger(__name__)

DEFAULT_DENSE_LIMIT = 24
DEFAULT_SEPARABILITY_TOL = 1e-10
CERTAINTY_THRESHOLD = 1 - 1e-9

_NORM_TOL = 1e-10
_FACTOR_NORM_TOL = 1e-12
_MATRIX_LIMIT = 12

_IDENTITY = np.eye(2, dtype=complex)
_PAULI = {
    'x': np.array([[0, 1], [1, 0]], dtype=complex),
    'y': np.array([[0, -1j], [1j, 0]], dtype=complex),
    'z': np.array([[1, 0], [0, -1]], dtype=complex),
}


class DenseLimitError(ValueError):
    """Raised when a dense 2^n object would exceed the configured qubit limit."""


class FactorCountError(ValueError):
    """Raised when a factored operator and a state disagree on the qubit count."""


def _frozen(values, dtype=complex) -> np.ndarray:
    array = np.array(values, dtype=dtype)
    array.setflags(write=False)
    return array


def check_dense_limit(n: int, dense_limit: int) -> None:
    if n > dense_limit:
        raise DenseLimitError(
            f"{n} qubits exceeds the dense limit of {dense_limit} "
            f"({2 ** n} amplitudes); use the product backend"
        )


# Single-qubit operators

def hadamard() -> np.ndarray:
    """Return the Hadamard gate (1/sqrt 2)[[1, 1], [1, -1]]."""
    return _frozen(np.array([[1, 1], [1, -1]]) / np.sqrt(2))


def pauli_z() -> np.ndarray:
    """Return sigma_z = diag(1, -1)."""
    return _frozen(_PAULI['z'])


def identity() -> np.ndarray:
    """Return the 2x2 identity."""
    return _frozen(_IDENTITY)


def rotation(axis: str, angle: float) -> np.ndarray:
    """
    Single-qubit rotation exp(-i * angle * sigma_axis / 2).

    Args:
        axis: One of 'x', 'y', 'z'
        angle: Rotation angle in radians

    Returns:
        2x2 unitary
    """
    if axis not in _PAULI:
        raise ValueError(f"unknown rotation axis {axis!r}")
    return _frozen(np.cos(angle / 2) * _IDENTITY - 1j * np.sin(angle / 2) * _PAULI[axis])


# State backends

@dataclass(frozen=True)
class PureState:
    """Dense state vector of 2^n amplitudes."""

    amps: np.ndarray

    def __post_init__(self):
        amps = _frozen(self.amps).reshape(-1)
        size = amps.shape[0]
        if size < 2 or size & (size - 1):
            raise ValueError(f"state length {size} is not a power of two >= 2")
        if not np.all(np.isfinite(amps)):
            raise ValueError("state contains non-finite amplitudes")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > _NORM_TOL:
            raise ValueError(f"state norm {norm!r} differs from 1")
        object.__setattr__(self, 'amps', amps)

    @property
    def n(self) -> int:
        return self.amps.shape[0].bit_length() - 1

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2


@dataclass(frozen=True)
class ProductState:
    """Unentangled n-qubit state kept as an (n, 2) array of single-qubit factors."""

    factors: np.ndarray

    def __post_init__(self):
        factors = _frozen(self.factors)
        if factors.ndim != 2 or factors.shape[1] != 2 or factors.shape[0] < 1:
            raise ValueError(f"factors must have shape (n, 2), got {factors.shape}")
        if not np.all(np.isfinite(factors)):
            raise ValueError("factors contain non-finite amplitudes")
        norms = np.sum(np.abs(factors) ** 2, axis=1)
        worst = float(np.max(np.abs(norms - 1.0)))
        if worst > _FACTOR_NORM_TOL:
            raise ValueError(f"factor norm deviates from 1 by {worst:.3g}")
        object.__setattr__(self, 'factors', factors)

    @property
    def n(self) -> int:
        return self.factors.shape[0]


State = Union[PureState, ProductState]


@dataclass(frozen=True)
class FactoredOperator:
    """Tensor product U^1 x U^2 x ... x U^n kept as an (n, 2, 2) array."""

    factors: np.ndarray

    def __post_init__(self):
        factors = _frozen(self.factors)
        if factors.ndim != 3 or factors.shape[1:] != (2, 2) or factors.shape[0] < 1:
            raise ValueError(f"operator factors must have shape (n, 2, 2), got {factors.shape}")
        object.__setattr__(self, 'factors', factors)

    @classmethod
    def uniform(cls, op: np.ndarray, n: int) -> 'FactoredOperator':
        return cls(np.broadcast_to(np.asarray(op, dtype=complex), (n, 2, 2)))

    @classmethod
    def from_factors(cls, ops: Sequence[np.ndarray]) -> 'FactoredOperator':
        return cls(np.stack([np.asarray(op, dtype=complex) for op in ops]))

    @property
    def n(self) -> int:
        return self.factors.shape[0]

    def to_matrix(self) -> np.ndarray:
        """Kronecker-expand to a 2^n x 2^n matrix (verification only)."""
        check_dense_limit(self.n, _MATRIX_LIMIT)
        return reduce(np.kron, self.factors)


def hadamard_layer(n: int) -> FactoredOperator:
    """H^(n) = H x H x ... x H."""
    return FactoredOperator.uniform(hadamard(), n)


def zero_state(n: int, dense_limit: int = DEFAULT_DENSE_LIMIT) -> PureState:
    return basis_state('0' * n, dense_limit)


def zero_product_state(n: int) -> ProductState:
    factors = np.zeros((n, 2), dtype=complex)
    factors[:, 0] = 1.0
    return ProductState(factors)


def basis_state(bits: str, dense_limit: int = DEFAULT_DENSE_LIMIT) -> PureState:
    """Dense computational basis state |bits>."""
    n = len(bits)
    check_dense_limit(n, dense_limit)
    amps = np.zeros(2 ** n, dtype=complex)
    amps[int(bits, 2)] = 1.0
    return PureState(amps)


def apply_factored(state: State, op: FactoredOperator) -> State:
    """
    Apply a factored operator without building its 2^n x 2^n matrix.

    Args:
        state: Dense or product state
        op: Operator with exactly one factor per qubit

    Returns:
        New state of the same backend type
    """
    if op.n != state.n:
        raise FactorCountError(f"operator has {op.n} factors but the state has {state.n} qubits")

    if isinstance(state, ProductState):
        return ProductState(np.einsum('kij,kj->ki', op.factors, state.factors))

    n = state.n
    out = np.array(state.amps)
    for k, u in enumerate(op.factors):
        if np.array_equal(u, _IDENTITY):
            continue
        # view as (higher qubits, qubit k, lower qubits)
        view = out.reshape(2 ** k, 2, 2 ** (n - k - 1))
        if u[0, 1] == 0 and u[1, 0] == 0:
            view[:, 0, :] *= u[0, 0]
            view[:, 1, :] *= u[1, 1]
            continue
        lo = view[:, 0, :].copy()
        hi = view[:, 1, :].copy()
        view[:, 0, :] = u[0, 0] * lo + u[0, 1] * hi
        view[:, 1, :] = u[1, 0] * lo + u[1, 1] * hi
    return PureState(out)


def expand(p: ProductState, dense_limit: int = DEFAULT_DENSE_LIMIT) -> PureState:
    """Tensor-expand a product state into a dense state vector."""
    check_dense_limit(p.n, dense_limit)
    return PureState(reduce(np.kron, p.factors))


def walsh_hadamard_amplitudes(x: int, n: int) -> np.ndarray:
    """Closed form of H^(n)|x>: amplitude (-1)^(x.y) / sqrt(2^n) at every index y."""
    y = np.arange(2 ** n)
    overlap = x & y
    parity = np.zeros_like(y)
    for bit in range(n):
        parity ^= (overlap >> bit) & 1
    return (1 - 2 * parity) / np.sqrt(2 ** n)


# Separability diagnostics

def _reduced_matrix(state: PureState, qubit: int) -> np.ndarray:
    n = state.n
    if not 0 <= qubit < n:
        raise IndexError(f"qubit {qubit} out of range for {n} qubits")
    psi = state.amps.reshape(2 ** qubit, 2, 2 ** (n - qubit - 1))
    return np.einsum('aib,ajb->ij', psi, psi.conj())


def reduced_purity(state: PureState, qubit: int) -> float:
    """
    Purity Tr(rho_k^2) of one qubit's reduced density matrix.

    Args:
        state: Normalized dense state
        qubit: Zero-based qubit index (0 is the most significant bit)

    Returns:
        Purity in [0.5, 1]
    """
    rho = _reduced_matrix(state, qubit)
    return float(np.real(np.trace(rho @ rho)))


def max_impurity(state: State) -> float:
    """
    Largest single-qubit impurity 1 - Tr(rho_k^2) over all qubits.

    On the product backend rho_k is the normalized outer product of factor k,
    so the result only departs from 0 by rounding.
    """
    if isinstance(state, ProductState):
        v = state.factors
        rho = np.einsum('ki,kj->kij', v, v.conj()) / np.sum(np.abs(v) ** 2, axis=1)[:, None, None]
        purity = np.real(np.einsum('kij,kji->k', rho, rho))
        return float(np.max(1.0 - purity))
    return max(1.0 - reduced_purity(state, k) for k in range(state.n))


def is_fully_separable(state: PureState,
                       tol: float = DEFAULT_SEPARABILITY_TOL) -> Tuple[bool, Optional[ProductState]]:
    """
    Decide whether a pure state is a product of single-qubit states.

    Args:
        state: Normalized dense state
        tol: Allowed impurity per qubit

    Returns:
        (flag, factors) where factors is the extracted ProductState when flag is set
    """
    factors: List[np.ndarray] = []
    for k in range(state.n):
        rho = _reduced_matrix(state, k)
        purity = float(np.real(np.trace(rho @ rho)))
        if purity < 1.0 - tol:
            logger.debug("qubit %d impurity %.3g exceeds tolerance", k, 1.0 - purity)
            return False, None
        _, vecs = np.linalg.eigh(rho)
        dominant = vecs[:, -1]
        factors.append(dominant / np.linalg.norm(dominant))
    return True, ProductState(np.stack(factors))


def fidelity_up_to_global_phase(u: np.ndarray, v: np.ndarray) -> float:
    """Return |Tr(U^dagger V)| / d, equal to 1 exactly when V = e^{i phi} U."""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1] or u.shape != v.shape:
        raise ValueError(f"need equal square matrices, got {u.shape} and {v.shape}")
    return float(abs(np.vdot(u, v)) / u.shape[0])


# Measurement

@dataclass(frozen=True)
class Measurement:
    """Outcome of a computational-basis measurement."""

    bits: str
    certain: bool
    probability: float


def measure_leading(state: PureState, count: int, seed: int = 0) -> Measurement:
    """Measure the first `count` qubits of a dense state, tracing out the rest."""
    n = state.n
    if not 1 <= count <= n:
        raise IndexError(f"cannot measure {count} of {n} qubits")
    probs = state.probabilities().reshape(2 ** count, 2 ** (n - count)).sum(axis=1)
    best = int(np.argmax(probs))
    if probs[best] >= CERTAINTY_THRESHOLD:
        return Measurement(format(best, f'0{count}b'), True, float(probs[best]))
    rng = np.random.default_rng(seed)
    index = int(rng.choice(probs.shape[0], p=probs / probs.sum()))
    return Measurement(format(index, f'0{count}b'), False, float(probs[index]))


def measure_all(state: State, seed: int = 0) -> Measurement:
    """
    Sample every qubit in the computational basis.

    Args:
        state: Dense or product state
        seed: RNG seed; identical seeds give identical outcomes

    Returns:
        Measurement with the bit string and a certainty flag
    """
    if isinstance(state, PureState):
        return measure_leading(state, state.n, seed)

    p1 = np.abs(state.factors[:, 1]) ** 2
    p0 = np.abs(state.factors[:, 0]) ** 2
    likely = p1 > p0
    best = float(np.prod(np.where(likely, p1, p0)))
    if best >= CERTAINTY_THRESHOLD:
        bits = likely
        probability = best
        certain = True
    else:
        rng = np.random.default_rng(seed)
        bits = rng.random(state.n) < p1 / (p0 + p1)
        probability = float(np.prod(np.where(bits, p1, p0)))
        certain = False
    return Measurement(''.join('1' if b else '0' for b in bits), certain, probability)
