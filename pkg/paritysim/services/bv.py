"""Parity problem module: oracles, the original and refined single-query algorithms, and the classical baseline."""

import logging
from dataclasses import dataclass
from typing import Iterable, Optional, Tuple, Union

import numpy as np

from paritysim.services.quantum_core import (
    DEFAULT_DENSE_LIMIT,
    DEFAULT_SEPARABILITY_TOL,
    FactoredOperator,
    PureState,
    State,
    apply_factored,
    basis_state,
    check_dense_limit,
    hadamard,
    hadamard_layer,
    identity,
    max_impurity,
    measure_all,
    measure_leading,
    pauli_z,
    zero_product_state,
    zero_state,
)

logger = logging.getLogger(__name__)

BACKENDS = ('dense', 'product')


class BitStringError(ValueError):
    """Raised for malformed or mismatched bit strings."""


@dataclass(frozen=True)
class BitString:
    """Ordered bits b_1 ... b_n; the first bit belongs to qubit 0 (spin A)."""

    bits: Tuple[int, ...]

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if not bits:
            raise BitStringError("bit string must contain at least one bit")
        if any(b not in (0, 1) for b in bits):
            raise BitStringError(f"bit string may only contain 0 and 1, got {bits!r}")
        object.__setattr__(self, 'bits', bits)

    @classmethod
    def parse(cls, text: str) -> 'BitString':
        text = text.strip()
        if not text or set(text) - {'0', '1'}:
            raise BitStringError(f"not a binary string: {text!r}")
        return cls(tuple(int(c) for c in text))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> 'BitString':
        return cls(tuple(rng.integers(0, 2, size=n).tolist()))

    @classmethod
    def unit(cls, n: int, i: int) -> 'BitString':
        """The unit string e_i with a single 1 at position i."""
        return cls(tuple(1 if k == i else 0 for k in range(n)))

    @classmethod
    def from_index(cls, index: int, n: int) -> 'BitString':
        return cls.parse(format(index, f'0{n}b'))

    def __len__(self) -> int:
        return len(self.bits)

    def __str__(self) -> str:
        return ''.join(str(b) for b in self.bits)

    def as_array(self) -> np.ndarray:
        return np.array(self.bits, dtype=np.int64)

    @property
    def index(self) -> int:
        return int(str(self), 2)


def _coerce(value: Union[str, BitString, Iterable[int]]) -> BitString:
    if isinstance(value, BitString):
        return value
    if isinstance(value, str):
        return BitString.parse(value)
    return BitString(tuple(value))


def f_a(a: BitString, x: BitString) -> int:
    """Return the parity a.x = (sum a_i x_i) mod 2."""
    a, x = _coerce(a), _coerce(x)
    if len(a) != len(x):
        raise BitStringError(f"length mismatch: a has {len(a)} bits, x has {len(x)}")
    return int(np.dot(a.as_array(), x.as_array()) % 2)


def _parity_table(a: BitString) -> np.ndarray:
    """f_a(x) for every x in 0 .. 2^n - 1."""
    n = len(a)
    x = np.arange(2 ** n)
    parity = np.zeros_like(x)
    for i, bit in enumerate(a.bits):
        if bit:
            parity ^= (x >> (n - 1 - i)) & 1
    return parity


# Oracles

@dataclass(frozen=True)
class PhaseOracleOp:
    """U_a = U^1 x ... x U^n with U^i = sigma_z when a_i = 1 and I otherwise."""

    hidden: BitString

    @property
    def operator(self) -> FactoredOperator:
        mask = self.hidden.as_array().astype(bool)[:, None, None]
        return FactoredOperator(np.where(mask, pauli_z(), identity()))

    def apply(self, state: State) -> State:
        return apply_factored(state, self.operator)


@dataclass(frozen=True)
class BitOracleOp:
    """U_f on n + 1 qubits: |x>|b> -> |x>|b xor f_a(x)>, ancilla last."""

    hidden: BitString

    @property
    def n_qubits(self) -> int:
        return len(self.hidden) + 1

    def permutation(self) -> np.ndarray:
        """Basis index map: amplitude at i moves to permutation()[i]."""
        flips = _parity_table(self.hidden)
        index = np.arange(2 ** self.n_qubits)
        return index ^ np.repeat(flips, 2)

    def apply(self, state: PureState) -> PureState:
        if state.n != self.n_qubits:
            raise BitStringError(f"bit oracle acts on {self.n_qubits} qubits, state has {state.n}")
        out = np.empty_like(state.amps)
        out[self.permutation()] = state.amps
        return PureState(out)


def build_phase_oracle(a: BitString) -> PhaseOracleOp:
    return PhaseOracleOp(_coerce(a))


def build_bit_oracle(a: BitString, dense_limit: int = DEFAULT_DENSE_LIMIT) -> BitOracleOp:
    a = _coerce(a)
    check_dense_limit(len(a) + 1, dense_limit)
    return BitOracleOp(a)


class ParityOracle:
    """The database holding the hidden string; counts every query made to it."""

    def __init__(self, hidden: Union[str, BitString]):
        """Initialize with the hidden string a and a zero query counter."""
        self.hidden = _coerce(hidden)
        self._queries = 0
        self._phase = PhaseOracleOp(self.hidden)

    @property
    def queries(self) -> int:
        return self._queries

    @property
    def n(self) -> int:
        return len(self.hidden)

    def query(self, x: Union[str, BitString]) -> int:
        """Classical query: return f_a(x)."""
        self._queries += 1
        return f_a(self.hidden, x)

    def apply_phase(self, state: State) -> State:
        """Quantum query through the phase oracle U_a."""
        self._queries += 1
        return self._phase.apply(state)

    def apply_bit(self, state: PureState, dense_limit: int = DEFAULT_DENSE_LIMIT) -> PureState:
        """Quantum query through the bit oracle U_f."""
        oracle = build_bit_oracle(self.hidden, dense_limit)
        self._queries += 1
        return oracle.apply(state)


# Algorithms

@dataclass(frozen=True)
class SeparabilityReport:
    """Largest per-qubit impurity at each recorded step."""

    steps: Tuple[Tuple[str, float], ...]

    @property
    def max_impurity(self) -> float:
        return max(value for _, value in self.steps)

    def separable(self, tol: float = DEFAULT_SEPARABILITY_TOL) -> bool:
        """True when no recorded step has a qubit more impure than tol."""
        return self.max_impurity <= tol


@dataclass(frozen=True)
class BVResult:
    answer: BitString
    certain: bool
    queries: int
    qubits_used: int
    backend: str
    final_state: State
    separability: Optional[SeparabilityReport] = None


def _report(states) -> SeparabilityReport:
    return SeparabilityReport(tuple((f'psi{i}', max_impurity(s)) for i, s in enumerate(states)))


def run_original_bv(oracle: ParityOracle, dense_limit: int = DEFAULT_DENSE_LIMIT,
                    record: bool = False, seed: int = 0) -> BVResult:
    """
    Single-query algorithm with an n-qubit register and one ancilla.

    Args:
        oracle: Parity oracle holding a
        dense_limit: Largest dense register allowed
        record: Keep per-step impurities
        seed: Measurement seed

    Returns:
        BVResult with the measured first register
    """
    n = oracle.n
    check_dense_limit(n + 1, dense_limit)
    # (|0>)^n |1>
    states = [basis_state('0' * n + '1', dense_limit)]
    states.append(apply_factored(states[-1], hadamard_layer(n + 1)))
    states.append(oracle.apply_bit(states[-1], dense_limit))
    register_only = FactoredOperator.from_factors([hadamard()] * n + [identity()])
    states.append(apply_factored(states[-1], register_only))

    outcome = measure_leading(states[-1], n, seed)
    logger.debug("original algorithm measured %s (certain=%s)", outcome.bits, outcome.certain)
    return BVResult(
        answer=BitString.parse(outcome.bits),
        certain=outcome.certain,
        queries=oracle.queries,
        qubits_used=n + 1,
        backend='dense',
        final_state=states[-1],
        separability=_report(states) if record else None,
    )


def run_refined_bv(oracle: ParityOracle, backend: str = 'product',
                   dense_limit: int = DEFAULT_DENSE_LIMIT, record: bool = False,
                   seed: int = 0) -> BVResult:
    """
    Refined algorithm on n qubits: H^(n), U_a, H^(n), measure.

    The product backend carries each qubit separately through H U^i H,
    which is exact and linear in n.

    Args:
        oracle: Parity oracle holding a
        backend: 'dense' or 'product'
        dense_limit: Largest dense register allowed
        record: Keep per-step impurities of psi0 .. psi3
        seed: Measurement seed

    Returns:
        BVResult with the measured register
    """
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}; expected one of {BACKENDS}")
    n = oracle.n
    if backend == 'dense':
        start: State = zero_state(n, dense_limit)
    else:
        start = zero_product_state(n)

    layer = hadamard_layer(n)
    states = [start]
    states.append(apply_factored(states[-1], layer))
    states.append(oracle.apply_phase(states[-1]))
    states.append(apply_factored(states[-1], layer))

    outcome = measure_all(states[-1], seed)
    logger.debug("refined algorithm (%s, n=%d) measured certain=%s", backend, n, outcome.certain)
    return BVResult(
        answer=BitString.parse(outcome.bits),
        certain=outcome.certain,
        queries=oracle.queries,
        qubits_used=n,
        backend=backend,
        final_state=states[-1],
        separability=_report(states) if record else None,
    )


def classical_solve(oracle: ParityOracle) -> BitString:
    """Recover a with n classical queries at the unit strings e_i."""
    n = oracle.n
    return BitString(tuple(oracle.query(BitString.unit(n, i)) for i in range(n)))


def separability_trace(a: BitString, dense_limit: int = DEFAULT_DENSE_LIMIT) -> SeparabilityReport:
    """Per-step impurity of the refined algorithm run on the dense backend."""
    result = run_refined_bv(ParityOracle(_coerce(a)), 'dense', dense_limit, record=True)
    return result.separability


def interference_amplitudes(a: BitString, dense_limit: int = DEFAULT_DENSE_LIMIT) -> np.ndarray:
    """Amplitudes of psi3 before measurement; equal to delta_{a,y}."""
    result = run_refined_bv(ParityOracle(_coerce(a)), 'dense', dense_limit)
    return np.array(result.final_state.amps)


def kickback_equivalence(a: BitString, dense_limit: int = DEFAULT_DENSE_LIMIT) -> float:
    """
    Compare the bit oracle with the ancilla in (|0> - |1>)/sqrt 2 against the phase oracle.

    Every basis x is checked separately, so the cost is O(4^n).

    Args:
        a: Hidden string
        dense_limit: Largest dense register allowed

    Returns:
        Largest deviation between the kicked-back phase and the phase-oracle phase
    """
    a = _coerce(a)
    n = len(a)
    bit_oracle = build_bit_oracle(a, dense_limit)
    phase_oracle = build_phase_oracle(a)
    minus = np.array([1.0, -1.0]) / np.sqrt(2)

    worst = 0.0
    for x in range(2 ** n):
        register = np.zeros(2 ** n, dtype=complex)
        register[x] = 1.0
        before = np.kron(register, minus)
        after = bit_oracle.apply(PureState(before)).amps.reshape(2 ** n, 2)
        kicked = after[x] / before.reshape(2 ** n, 2)[x]
        leaked = np.delete(after, x, axis=0)

        expected = phase_oracle.apply(PureState(register)).amps[x]
        deviation = max(
            float(np.max(np.abs(kicked - expected))),
            float(np.sqrt(np.sum(np.abs(leaked) ** 2))),
        )
        worst = max(worst, deviation)
    return worst
