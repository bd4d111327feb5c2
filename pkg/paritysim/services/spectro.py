"""Synthetic spectrometer module: FID acquisition, Fourier transform, phasing and doublet readout."""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.fft import fft, fftfreq, fftshift
from scipy.signal import find_peaks

from paritysim.services.nmr import (
    DeviationDensityMatrix,
    SpinSystemParams,
    energy_levels,
    spin_operator,
)

logger = logging.getLogger(__name__)

DEFAULT_SWEEP_WIDTH = 2048.0
DEFAULT_POINTS = 16384
DEFAULT_T2_STAR = 0.3
DEFAULT_NOISE_FLOOR = 1e-6
WINDOW_J_MULTIPLE = 3.0


class AcquisitionError(ValueError):
    """Raised for acquisition parameters that cannot resolve the spin system."""


class NoPeaksError(ValueError):
    """Raised when a reference spectrum has nothing to phase against."""


class WindowOverlapError(ValueError):
    """Raised when the two doublet integration windows overlap."""


class InconclusiveReadoutError(ValueError):
    """Raised when a doublet integral is too small to carry a sign."""


@dataclass(frozen=True)
class AcquisitionParams:
    sweep_width: float = DEFAULT_SWEEP_WIDTH
    points: int = DEFAULT_POINTS
    t2_star: float = DEFAULT_T2_STAR

    def __post_init__(self):
        if not self.sweep_width > 0:
            raise AcquisitionError(f"sweep_width must be positive, got {self.sweep_width}")
        if self.points < 2 or self.points & (self.points - 1):
            raise AcquisitionError(f"points must be a power of two, got {self.points}")
        if not self.t2_star > 0:
            raise AcquisitionError(f"t2_star must be positive, got {self.t2_star}")

    @property
    def dwell(self) -> float:
        return 1.0 / self.sweep_width

    @property
    def resolution(self) -> float:
        return self.sweep_width / self.points

    def validate_for(self, p: SpinSystemParams) -> None:
        """Check the window holds every line and the bins resolve J."""
        span = 2.0 * (max(abs(p.nu_a), abs(p.nu_b)) + p.j_hz)
        if self.sweep_width <= span:
            raise AcquisitionError(
                f"sweep_width {self.sweep_width} Hz must exceed 2*(max|offset| + J) = {span} Hz"
            )
        if self.resolution >= p.j_hz / 4:
            raise AcquisitionError(
                f"resolution {self.resolution} Hz must be finer than J/4 = {p.j_hz / 4} Hz"
            )


@dataclass(frozen=True)
class FID:
    samples: np.ndarray
    dwell: float

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.samples.shape[0]) * self.dwell


@dataclass(frozen=True)
class Spectrum:
    values: np.ndarray
    freqs: np.ndarray
    phase_applied: float = 0.0

    @property
    def bin_width(self) -> float:
        return float(self.freqs[1] - self.freqs[0])

    def phased(self, phase: float) -> 'Spectrum':
        """Apply a zero-order phase correction e^{i phase}."""
        return Spectrum(self.values * np.exp(1j * phase), self.freqs, self.phase_applied + phase)


@dataclass(frozen=True)
class DoubletReading:
    spin: str
    center: float
    splitting: float
    integral: float


def detection_operator() -> np.ndarray:
    """I+ = I_x + i I_y summed over both spins."""
    return spin_operator('A', '+') + spin_operator('B', '+')


def acquire_fid(rho: DeviationDensityMatrix, p: SpinSystemParams,
                acq: Optional[AcquisitionParams] = None) -> FID:
    """
    Sample Tr(rho(t) I+) e^{-t/T2*} with rho(t) evolved under the two-spin Hamiltonian.

    Args:
        rho: Deviation matrix after the detection pulse
        p: Spin parameters
        acq: Acquisition parameters

    Returns:
        FID of acq.points complex samples
    """
    acq = acq or AcquisitionParams()
    t = np.arange(acq.points) * acq.dwell
    energies = energy_levels(p)
    observable = detection_operator()

    signal = np.zeros(acq.points, dtype=complex)
    # Tr(rho(t) O) = sum_jk rho_jk e^{-i(E_j - E_k) t} O_kj
    for k, j in zip(*np.nonzero(observable)):
        amplitude = rho.matrix[j, k] * observable[k, j]
        if amplitude == 0:
            continue
        signal += amplitude * np.exp(-1j * (energies[j] - energies[k]) * t)
    signal *= np.exp(-t / acq.t2_star)
    return FID(signal, acq.dwell)


def transform(fid: FID) -> Spectrum:
    """Unitary DFT with the frequency axis centred on 0 Hz."""
    n = fid.samples.shape[0]
    values = fftshift(fft(fid.samples, norm='ortho'))
    freqs = fftshift(fftfreq(n, d=fid.dwell))
    return Spectrum(values, freqs)


def phase_reference(ref: Spectrum, threshold: float = 0.5) -> float:
    """
    Zero-order phase that maximises the summed real part over the detected peaks.

    Args:
        ref: Spectrum of the |00> reference experiment
        threshold: Peak height relative to the largest magnitude

    Returns:
        Phase in radians to pass to Spectrum.phased
    """
    magnitude = np.abs(ref.values)
    if magnitude.max() == 0:
        raise NoPeaksError("reference spectrum is identically zero")
    peaks, _ = find_peaks(magnitude, height=threshold * magnitude.max())
    if peaks.size == 0:
        raise NoPeaksError("no peaks found in the reference spectrum")
    logger.debug("phasing on %d peaks at %s Hz", peaks.size, np.round(ref.freqs[peaks], 3))
    return float(-np.angle(ref.values[peaks].sum()))


def _peak_position(freqs: np.ndarray, values: np.ndarray) -> float:
    """Parabolic interpolation of the largest |value|."""
    i = int(np.argmax(values))
    if 0 < i < values.shape[0] - 1:
        y0, y1, y2 = values[i - 1], values[i], values[i + 1]
        denom = y0 - 2 * y1 + y2
        offset = 0.5 * (y0 - y2) / denom if denom != 0 else 0.0
    else:
        offset = 0.0
    return float(freqs[i] + offset * (freqs[1] - freqs[0]))


def _read_doublet(spec: Spectrum, spin: str, center: float, half_width: float) -> DoubletReading:
    freqs = spec.freqs
    window = np.abs(freqs - center) <= half_width
    real = np.real(spec.values)
    integral = float(real[window].sum() * spec.bin_width)

    magnitude = np.abs(real)
    lower = window & (freqs < center)
    upper = window & (freqs >= center)
    low_peak = _peak_position(freqs[lower], magnitude[lower])
    high_peak = _peak_position(freqs[upper], magnitude[upper])
    return DoubletReading(spin, 0.5 * (low_peak + high_peak), high_peak - low_peak, integral)


def read_doublets(spec: Spectrum, p: SpinSystemParams) -> Tuple[DoubletReading, DoubletReading]:
    """
    Integrate the real part over 3J-wide windows at each spin's offset.

    Args:
        spec: Spectrum phased against the reference
        p: Spin parameters (window centres and width)

    Returns:
        (reading for spin A, reading for spin B)
    """
    half_width = WINDOW_J_MULTIPLE * p.j_hz / 2
    if abs(p.nu_a - p.nu_b) < 2 * half_width:
        raise WindowOverlapError(
            f"offsets {p.nu_a} and {p.nu_b} Hz are closer than the {2 * half_width} Hz window"
        )
    return (_read_doublet(spec, 'A', p.nu_a, half_width),
            _read_doublet(spec, 'B', p.nu_b, half_width))


def decode_answer(readings: Sequence[DoubletReading], reference_integral: Optional[float] = None,
                  noise_floor: float = DEFAULT_NOISE_FLOOR) -> str:
    """
    Positive absorption reads as 0, negative as 1; qubit 1 from spin A.

    Args:
        readings: Doublet readings in qubit order
        reference_integral: Integral magnitude from the reference run; defaults
            to the largest reading
        noise_floor: Minimum |integral| relative to the reference

    Returns:
        Decoded bit string
    """
    scale = reference_integral if reference_integral is not None else max(abs(r.integral) for r in readings)
    floor = noise_floor * abs(scale)
    bits = []
    for reading in readings:
        if abs(reading.integral) <= floor or floor == 0:
            raise InconclusiveReadoutError(
                f"spin {reading.spin} integral {reading.integral:.3g} is below the noise floor {floor:.3g}"
            )
        bits.append('0' if reading.integral > 0 else '1')
    return ''.join(bits)


def linewidth(spec: Spectrum, center: float, half_width: float) -> float:
    """Full width at half maximum of the strongest absorption line near center."""
    window = np.abs(spec.freqs - center) <= half_width
    freqs = spec.freqs[window]
    real = np.abs(np.real(spec.values[window]))
    peak = int(np.argmax(real))
    half = real[peak] / 2

    left = peak
    while left > 0 and real[left - 1] > half:
        left -= 1
    right = peak
    while right < real.shape[0] - 1 and real[right + 1] > half:
        right += 1
    if left == 0 or right == real.shape[0] - 1:
        raise ValueError("line is wider than the window")
    f_left = np.interp(half, [real[left - 1], real[left]], [freqs[left - 1], freqs[left]])
    f_right = np.interp(half, [real[right + 1], real[right]], [freqs[right + 1], freqs[right]])
    return float(f_right - f_left)


class Spectrometer:
    """Runs acquisition, transform and readout for one spin system."""

    def __init__(self, params: Optional[SpinSystemParams] = None,
                 acquisition: Optional[AcquisitionParams] = None):
        """Initialize with spin and acquisition parameters."""
        self.params = params or SpinSystemParams()
        self.acquisition = acquisition or AcquisitionParams()
        self.acquisition.validate_for(self.params)

    def acquire(self, rho: DeviationDensityMatrix) -> FID:
        return acquire_fid(rho, self.params, self.acquisition)

    def spectrum(self, fid: FID, phase: float = 0.0) -> Spectrum:
        return transform(fid).phased(phase)

    def read(self, spec: Spectrum) -> Tuple[DoubletReading, DoubletReading]:
        return read_doublets(spec, self.params)
