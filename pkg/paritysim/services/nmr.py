"""Two-spin NMR module: Hamiltonian dynamics, pulse primitives, compiled sequences and pseudo-pure preparation.

Rotating-frame model of two weakly coupled spins A and B. A pulse of angle
theta about axis n conjugates the deviation matrix by exp(-i theta n.I) with
I = sigma / 2; pulses are instantaneous.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

import numpy as np
from scipy.linalg import expm

from paritysim.services.bv import BitString, BitStringError, build_phase_oracle
from paritysim.services.quantum_core import fidelity_up_to_global_phase, pauli_z, rotation

logger = logging.getLogger(__name__)

SPINS = ('A', 'B')
TARGETS = ('A', 'B', 'AB')
AXES = ('+x', '-x', '+y', '-y')
GRADIENT_MODES = ('physical', 'crush_all')
EVOLUTIONS = ('full', 'coupling')

DEFAULT_NU_A = 382.5
DEFAULT_NU_B = -382.5
DEFAULT_J_HZ = 7.17
PREP_FINAL_ANGLE = -np.pi / 4

_MATRIX_TOL = 1e-9
_E = np.eye(2, dtype=complex)
_SPIN_HALF = {
    'x': np.array([[0, 0.5], [0.5, 0]], dtype=complex),
    'y': np.array([[0, -0.5j], [0.5j, 0]], dtype=complex),
    'z': np.array([[0.5, 0], [0, -0.5]], dtype=complex),
    '+': np.array([[0, 1], [0, 0]], dtype=complex),
}
# total I_z quantum number of |00>, |01>, |10>, |11>
_TOTAL_M = np.array([1.0, 0.0, 0.0, -1.0])


class SpinParamsError(ValueError):
    """Raised for invalid spin-system parameters."""


class NonUnitarySequenceError(ValueError):
    """Raised when a propagator is requested for a sequence containing gradients."""


class SequenceParseError(ValueError):
    """Raised when a pulse-sequence text line cannot be parsed."""


@dataclass(frozen=True)
class SpinSystemParams:
    """Rotating-frame offsets of spins A and B and their scalar coupling, all in Hz."""

    nu_a: float = DEFAULT_NU_A
    nu_b: float = DEFAULT_NU_B
    j_hz: float = DEFAULT_J_HZ

    def __post_init__(self):
        values = (self.nu_a, self.nu_b, self.j_hz)
        if not all(np.isfinite(v) for v in values):
            raise SpinParamsError(f"spin parameters must be finite, got {values}")
        if self.nu_a == self.nu_b:
            raise SpinParamsError("spin offsets must differ to address the spins separately")
        if self.j_hz <= 0:
            raise SpinParamsError(f"J must be positive, got {self.j_hz}")


def spin_operator(spin: str, axis: str) -> np.ndarray:
    """
    Single-spin angular momentum embedded in the two-spin space.

    Args:
        spin: 'A' (first factor) or 'B'
        axis: 'x', 'y', 'z' or '+' for the raising operator

    Returns:
        4x4 operator
    """
    op = _SPIN_HALF[axis]
    if spin == 'A':
        return np.kron(op, _E)
    if spin == 'B':
        return np.kron(_E, op)
    raise SpinParamsError(f"unknown spin {spin!r}")


@dataclass(frozen=True)
class DeviationDensityMatrix:
    """Traceless Hermitian 4x4 deviation part of the ensemble density matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=complex)
        if matrix.shape != (4, 4):
            raise ValueError(f"deviation matrix must be 4x4, got {matrix.shape}")
        if np.max(np.abs(matrix - matrix.conj().T)) > _MATRIX_TOL:
            raise ValueError("deviation matrix is not Hermitian")
        if abs(np.trace(matrix)) > _MATRIX_TOL:
            raise ValueError("deviation matrix is not traceless")
        matrix.setflags(write=False)
        object.__setattr__(self, 'matrix', matrix)

    def scaled(self, factor: float) -> 'DeviationDensityMatrix':
        return DeviationDensityMatrix(self.matrix * factor)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)


# Pulse events

@dataclass(frozen=True)
class HardPulse:
    targets: str
    axis: str
    angle: float

    def __post_init__(self):
        if self.targets not in TARGETS:
            raise ValueError(f"pulse targets must be one of {TARGETS}, got {self.targets!r}")
        if self.axis not in AXES:
            raise ValueError(f"pulse axis must be one of {AXES}, got {self.axis!r}")
        if not np.isfinite(self.angle):
            raise ValueError("pulse angle must be finite")

    def to_text(self) -> str:
        return f"PULSE targets={self.targets} axis={self.axis} angle={self.angle:.9g}"


@dataclass(frozen=True)
class Delay:
    """Free evolution; 'coupling' keeps only the J term (offsets echoed away)."""

    duration: float
    evolution: str = 'full'

    def __post_init__(self):
        if not self.duration >= 0:
            raise ValueError(f"delay must be non-negative, got {self.duration}")
        if self.evolution not in EVOLUTIONS:
            raise ValueError(f"delay evolution must be one of {EVOLUTIONS}")

    def to_text(self) -> str:
        text = f"DELAY t={self.duration:.9g}"
        if self.evolution != 'full':
            text += f" evolution={self.evolution}"
        return text


@dataclass(frozen=True)
class Gradient:
    mode: str = 'physical'

    def __post_init__(self):
        if self.mode not in GRADIENT_MODES:
            raise ValueError(f"gradient mode must be one of {GRADIENT_MODES}, got {self.mode!r}")

    def to_text(self) -> str:
        return f"GRAD mode={self.mode}"


PulseEvent = Union[HardPulse, Delay, Gradient]


@dataclass(frozen=True)
class PulseSequence:
    """Ordered pulse events, read left to right in time."""

    events: Tuple[PulseEvent, ...] = ()
    label: str = ''

    def __post_init__(self):
        object.__setattr__(self, 'events', tuple(self.events))

    def __add__(self, other: 'PulseSequence') -> 'PulseSequence':
        label = ' + '.join(part for part in (self.label, other.label) if part)
        return PulseSequence(self.events + other.events, label)

    def __len__(self) -> int:
        return len(self.events)

    @property
    def duration(self) -> float:
        return sum(e.duration for e in self.events if isinstance(e, Delay))

    @property
    def has_gradient(self) -> bool:
        return any(isinstance(e, Gradient) for e in self.events)

    def relabel(self, label: str) -> 'PulseSequence':
        return PulseSequence(self.events, label)

    def to_text(self) -> str:
        """One event per line, preceded by a SEQUENCE header line."""
        lines = [f"SEQUENCE label={self.label}"]
        lines.extend(e.to_text() for e in self.events)
        return '\n'.join(lines) + '\n'

    @classmethod
    def from_text(cls, text: str) -> 'PulseSequence':
        label = ''
        events: List[PulseEvent] = []
        for number, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line:
                continue
            keyword, _, rest = line.partition(' ')
            if keyword == 'SEQUENCE':
                label = rest.partition('label=')[2]
                continue
            try:
                fields = dict(item.split('=', 1) for item in rest.split())
                if keyword == 'PULSE':
                    events.append(HardPulse(fields['targets'], fields['axis'], float(fields['angle'])))
                elif keyword == 'DELAY':
                    events.append(Delay(float(fields['t']), fields.get('evolution', 'full')))
                elif keyword == 'GRAD':
                    events.append(Gradient(fields.get('mode', 'physical')))
                else:
                    raise SequenceParseError(f"line {number}: unknown event {keyword!r}")
            except (KeyError, ValueError) as exc:
                if isinstance(exc, SequenceParseError):
                    raise
                raise SequenceParseError(f"line {number}: {raw!r}: {exc}") from exc
        return cls(tuple(events), label)


# Dynamics

def hamiltonian(p: SpinSystemParams) -> np.ndarray:
    """H = w_A I_z^A + w_B I_z^B + 2 pi J I_z^A I_z^B in rad/s."""
    iza, izb = spin_operator('A', 'z'), spin_operator('B', 'z')
    return 2 * np.pi * (p.nu_a * iza + p.nu_b * izb + p.j_hz * iza @ izb)


def energy_levels(p: SpinSystemParams, evolution: str = 'full') -> np.ndarray:
    """Diagonal of the Hamiltonian (or of its J term alone for evolution='coupling')."""
    iza = np.real(np.diag(spin_operator('A', 'z')))
    izb = np.real(np.diag(spin_operator('B', 'z')))
    coupling = 2 * np.pi * p.j_hz * iza * izb
    if evolution == 'coupling':
        return coupling
    return 2 * np.pi * (p.nu_a * iza + p.nu_b * izb) + coupling


def free_evolve(rho: DeviationDensityMatrix, t: float, p: SpinSystemParams,
                evolution: str = 'full') -> DeviationDensityMatrix:
    """rho -> exp(-iHt) rho exp(iHt), evaluated through diagonal phases."""
    if t < 0:
        raise ValueError(f"evolution time must be non-negative, got {t}")
    energies = energy_levels(p, evolution)
    phases = np.exp(-1j * np.subtract.outer(energies, energies) * t)
    return DeviationDensityMatrix(rho.matrix * phases)


def _pulse_generator(e: HardPulse) -> np.ndarray:
    sign = -1.0 if e.axis.startswith('-') else 1.0
    axis = e.axis[1]
    spins = SPINS if e.targets == 'AB' else (e.targets,)
    return sign * sum(spin_operator(s, axis) for s in spins)


def pulse_propagator(e: HardPulse) -> np.ndarray:
    return expm(-1j * e.angle * _pulse_generator(e))


def delay_propagator(e: Delay, p: SpinSystemParams) -> np.ndarray:
    return np.diag(np.exp(-1j * energy_levels(p, e.evolution) * e.duration))


def apply_hard_pulse(rho: DeviationDensityMatrix, e: HardPulse) -> DeviationDensityMatrix:
    u = pulse_propagator(e)
    return DeviationDensityMatrix(u @ rho.matrix @ u.conj().T)


def gradient_crush(rho: DeviationDensityMatrix, mode: str = 'physical') -> DeviationDensityMatrix:
    """
    Dephase coherences with a pulsed field gradient.

    Args:
        rho: Deviation matrix
        mode: 'physical' zeroes every element of nonzero coherence order;
              'crush_all' zeroes every off-diagonal element

    Returns:
        Crushed deviation matrix
    """
    if mode == 'physical':
        keep = np.subtract.outer(_TOTAL_M, _TOTAL_M) == 0
    elif mode == 'crush_all':
        keep = np.eye(4, dtype=bool)
    else:
        raise ValueError(f"gradient mode must be one of {GRADIENT_MODES}, got {mode!r}")
    return DeviationDensityMatrix(np.where(keep, rho.matrix, 0))


def thermal_state(p: Optional[SpinSystemParams] = None) -> DeviationDensityMatrix:
    """High-temperature deviation I_z^A + I_z^B with unit polarization per spin."""
    return DeviationDensityMatrix(spin_operator('A', 'z') + spin_operator('B', 'z'))


def execute(seq: PulseSequence, rho: DeviationDensityMatrix, p: SpinSystemParams,
            gradient_mode: Optional[str] = None) -> DeviationDensityMatrix:
    """Replay a sequence on a deviation matrix; gradient_mode overrides each event's mode."""
    for event in seq.events:
        if isinstance(event, HardPulse):
            rho = apply_hard_pulse(rho, event)
        elif isinstance(event, Delay):
            rho = free_evolve(rho, event.duration, p, event.evolution)
        else:
            rho = gradient_crush(rho, gradient_mode or event.mode)
        logger.debug("%s -> populations %s", event.to_text(), np.round(populations(rho), 6))
    return rho


def sequence_unitary(seq: PulseSequence, p: SpinSystemParams) -> np.ndarray:
    """Ordered product of the propagators of a gradient-free sequence."""
    u = np.eye(4, dtype=complex)
    for event in seq.events:
        if isinstance(event, Gradient):
            raise NonUnitarySequenceError(f"sequence {seq.label!r} contains a gradient")
        if isinstance(event, HardPulse):
            step = pulse_propagator(event)
        else:
            step = delay_propagator(event, p)
        u = step @ u
    return u


# Compiled sequences

def pseudo_pure_prep(p: Optional[SpinSystemParams] = None, echo: bool = True,
                     final_angle: float = PREP_FINAL_ANGLE,
                     gradient_mode: str = 'physical') -> PulseSequence:
    """
    Spatial-averaging preparation of the pseudo-pure |00> state.

    R_x^B(pi/3) - G_z - R_x^A(pi/4) - tau - R_y^A(final_angle) - G_z with
    tau = 1/(2J). With echo set, tau evolves under the coupling term only.

    Args:
        p: Spin parameters (J sets tau)
        echo: Refocus the offsets during tau
        final_angle: Last rotation on A; -pi/4 balances the three other populations
        gradient_mode: Mode recorded on both gradients

    Returns:
        PulseSequence labelled 'prep'
    """
    p = p or SpinSystemParams()
    tau = 1.0 / (2.0 * p.j_hz)
    return PulseSequence((
        HardPulse('B', '+x', np.pi / 3),
        Gradient(gradient_mode),
        HardPulse('A', '+x', np.pi / 4),
        Delay(tau, 'coupling' if echo else 'full'),
        HardPulse('A', '+y', final_angle),
        Gradient(gradient_mode),
    ), 'prep')


def pseudo_hadamard(direction: str = 'h') -> PulseSequence:
    """h = R_{-y}^{AB}(pi/2) and its inverse h_inv = R_y^{AB}(pi/2)."""
    if direction == 'h':
        return PulseSequence((HardPulse('AB', '-y', np.pi / 2),), 'h')
    if direction == 'h_inv':
        return PulseSequence((HardPulse('AB', '+y', np.pi / 2),), 'h_inv')
    raise ValueError(f"direction must be 'h' or 'h_inv', got {direction!r}")


def soft_z(spin: str, p: Optional[SpinSystemParams] = None) -> PulseSequence:
    """
    Selective R_z(pi) on one spin from free evolution and refocusing pi pulses on the other.

    tau/4 - R_x^other(pi) - tau/2 - R_-x^other(pi) - tau/4 with |w| tau = pi,
    which cancels the other spin's offset and the coupling.

    Args:
        spin: 'A' or 'B'
        p: Spin parameters

    Returns:
        PulseSequence labelled 'soft_z(<spin>)'
    """
    p = p or SpinSystemParams()
    if spin not in SPINS:
        raise SpinParamsError(f"unknown spin {spin!r}")
    offset = p.nu_a if spin == 'A' else p.nu_b
    if offset == 0:
        raise SpinParamsError(f"spin {spin} has zero offset; a soft z rotation would take forever")
    tau = 1.0 / (2.0 * abs(offset))
    other = 'B' if spin == 'A' else 'A'
    return PulseSequence((
        Delay(tau / 4),
        HardPulse(other, '+x', np.pi),
        Delay(tau / 2),
        HardPulse(other, '-x', np.pi),
        Delay(tau / 4),
    ), f'soft_z({spin})')


def composite_z_all() -> PulseSequence:
    """R_{-y}^{AB}(pi/2) - R_x^{AB}(pi) - R_y^{AB}(pi/2), a z rotation by pi on both spins."""
    return PulseSequence((
        HardPulse('AB', '-y', np.pi / 2),
        HardPulse('AB', '+x', np.pi),
        HardPulse('AB', '+y', np.pi / 2),
    ), 'composite_z_all')


def compile_ua(a: Union[str, BitString], p: Optional[SpinSystemParams] = None) -> PulseSequence:
    """Pulse program for the two-qubit phase oracle U_a."""
    a = BitString.parse(a) if isinstance(a, str) else a
    if len(a) != 2:
        raise BitStringError(f"the NMR oracle needs a 2-bit string, got {len(a)} bits")
    label = f'U_{a}'
    key = str(a)
    if key == '00':
        return PulseSequence((), label)
    if key == '01':
        return soft_z('B', p).relabel(label)
    if key == '10':
        return soft_z('A', p).relabel(label)
    return composite_z_all().relabel(label)


def detection_pulse() -> PulseSequence:
    return PulseSequence((HardPulse('AB', '+y', np.pi / 2),), 'detect')


# Population analysis

def populations(rho: DeviationDensityMatrix) -> np.ndarray:
    return np.real(np.diag(rho.matrix))


@dataclass(frozen=True)
class PseudoPureFit:
    """rho ~ c (|k><k| - I/4) + residual."""

    index: int
    excess: float
    residual: float


def pseudo_pure_fit(rho: DeviationDensityMatrix) -> PseudoPureFit:
    pops = populations(rho)
    index = int(np.argmax(pops))
    excess = float(pops[index] - np.mean(np.delete(pops, index)))
    ideal = -np.eye(4) / 4
    ideal[index, index] += 1.0
    residual = float(np.linalg.norm(rho.matrix - excess * ideal))
    return PseudoPureFit(index, excess, residual)


def answer_weight(rho: DeviationDensityMatrix, a: Union[str, BitString]) -> float:
    """Share of the population excess (above the smallest population) sitting on |a>."""
    pops = populations(rho)
    excess = pops - pops.min()
    index = int(str(a), 2)
    return float(excess[index] / excess.sum())


# Experiment service

@dataclass(frozen=True)
class ExperimentOptions:
    gradient_mode: str = 'physical'
    prep_echo: bool = True
    prep_final_angle: float = PREP_FINAL_ANGLE

    def __post_init__(self):
        if self.gradient_mode not in GRADIENT_MODES:
            raise ValueError(f"gradient mode must be one of {GRADIENT_MODES}, got {self.gradient_mode!r}")


def experiment_sequence(a: Union[str, BitString], p: Optional[SpinSystemParams] = None,
                        options: Optional[ExperimentOptions] = None,
                        detect: bool = True) -> PulseSequence:
    """prep - h - U_a - h_inv - G_z - detection pulse, as one sequence."""
    p = p or SpinSystemParams()
    options = options or ExperimentOptions()
    seq = (pseudo_pure_prep(p, options.prep_echo, options.prep_final_angle, options.gradient_mode)
           + pseudo_hadamard('h') + compile_ua(a, p) + pseudo_hadamard('h_inv')
           + PulseSequence((Gradient(options.gradient_mode),), 'G_z'))
    if detect:
        seq = seq + detection_pulse()
    return seq.relabel(f'experiment a={a}')


def reference_sequence(p: Optional[SpinSystemParams] = None,
                       options: Optional[ExperimentOptions] = None) -> PulseSequence:
    """prep followed by a single R_y^{AB}(pi/2) read pulse."""
    p = p or SpinSystemParams()
    options = options or ExperimentOptions()
    seq = pseudo_pure_prep(p, options.prep_echo, options.prep_final_angle, options.gradient_mode)
    return (seq + detection_pulse()).relabel('reference')


def run_experiment(a: Union[str, BitString], p: Optional[SpinSystemParams] = None,
                   options: Optional[ExperimentOptions] = None,
                   detect: bool = True) -> DeviationDensityMatrix:
    """
    Simulate the two-qubit experiment from the thermal state.

    Args:
        a: Hidden 2-bit string
        p: Spin parameters
        options: Gradient mode and preparation switches
        detect: Apply the final detection pulse

    Returns:
        Deviation matrix ready for acquisition (or just before the detection pulse)
    """
    p = p or SpinSystemParams()
    options = options or ExperimentOptions()
    seq = experiment_sequence(a, p, options, detect)
    logger.debug("running %s (%d events)", seq.label, len(seq))
    return execute(seq, thermal_state(p), p, options.gradient_mode)


def run_reference(p: Optional[SpinSystemParams] = None,
                  options: Optional[ExperimentOptions] = None) -> DeviationDensityMatrix:
    p = p or SpinSystemParams()
    options = options or ExperimentOptions()
    return execute(reference_sequence(p, options), thermal_state(p), p, options.gradient_mode)


def fidelity_table(p: Optional[SpinSystemParams] = None) -> List[Tuple[str, float]]:
    """Fidelity up to global phase of each compiled sequence against its ideal target."""
    p = p or SpinSystemParams()
    z, e = pauli_z(), np.eye(2)
    rows: List[Tuple[str, PulseSequence, np.ndarray]] = [
        ('h', pseudo_hadamard('h'), np.kron(rotation('y', -np.pi / 2), rotation('y', -np.pi / 2))),
        ('h_inv', pseudo_hadamard('h_inv'), np.kron(rotation('y', np.pi / 2), rotation('y', np.pi / 2))),
        ('soft_z(A)', soft_z('A', p), np.kron(z, e)),
        ('soft_z(B)', soft_z('B', p), np.kron(e, z)),
        ('composite_z_all', composite_z_all(), np.kron(z, z)),
    ]
    for a in ('00', '01', '10', '11'):
        rows.append((f'U_{a}', compile_ua(a, p), build_phase_oracle(a).operator.to_matrix()))
    return [(name, fidelity_up_to_global_phase(target, sequence_unitary(seq, p)))
            for name, seq, target in rows]
