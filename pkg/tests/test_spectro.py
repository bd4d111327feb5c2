"""Tests for FID synthesis, the Fourier transform, phasing and doublet readout."""

import numpy as np
import pytest

from paritysim.services.nmr import (
    DeviationDensityMatrix,
    HardPulse,
    SpinSystemParams,
    apply_hard_pulse,
    run_experiment,
    run_reference,
    thermal_state,
)
from paritysim.services.spectro import (
    FID,
    AcquisitionError,
    AcquisitionParams,
    DoubletReading,
    InconclusiveReadoutError,
    NoPeaksError,
    Spectrometer,
    Spectrum,
    WindowOverlapError,
    acquire_fid,
    decode_answer,
    linewidth,
    phase_reference,
    read_doublets,
    transform,
)

P = SpinSystemParams()
ACQ = AcquisitionParams()


@pytest.fixture(scope='module')
def spectrometer():
    return Spectrometer(P, ACQ)


@pytest.fixture(scope='module')
def reference_phase(spectrometer):
    return phase_reference(spectrometer.spectrum(spectrometer.acquire(run_reference(P))))


def _decay(f0: float, t2: float = 0.3, acq: AcquisitionParams = ACQ) -> FID:
    t = np.arange(acq.points) * acq.dwell
    return FID(np.exp(2j * np.pi * f0 * t - t / t2), acq.dwell)


def _readings(spectrometer, phase, a):
    spec = spectrometer.spectrum(spectrometer.acquire(run_experiment(a, P)), phase)
    return spectrometer.read(spec)


class TestAcquisitionParams:

    def test_defaults(self):
        assert ACQ.dwell == pytest.approx(1 / 2048)
        assert ACQ.resolution == pytest.approx(0.125)
        ACQ.validate_for(P)

    @pytest.mark.parametrize("kwargs", [
        {'sweep_width': 0.0},
        {'points': 1000},
        {'t2_star': -0.1},
    ])
    def test_rejects_invalid(self, kwargs):
        with pytest.raises(AcquisitionError):
            AcquisitionParams(**kwargs)

    def test_window_too_narrow(self):
        with pytest.raises(AcquisitionError, match="sweep_width"):
            AcquisitionParams(sweep_width=700.0).validate_for(P)

    def test_resolution_too_coarse(self):
        with pytest.raises(AcquisitionError, match="resolution"):
            AcquisitionParams(points=512).validate_for(P)


class TestAcquireFid:

    def test_no_transverse_terms_gives_zero(self):
        fid = acquire_fid(thermal_state(), P, ACQ)
        np.testing.assert_array_equal(fid.samples, 0)

    def test_length_and_dwell(self):
        fid = acquire_fid(thermal_state(), P, ACQ)
        assert fid.samples.shape == (ACQ.points,)
        assert fid.times[1] == pytest.approx(ACQ.dwell)

    def test_envelope_decays(self):
        rho = apply_hard_pulse(DeviationDensityMatrix(np.diag([0.5, 0.5, -0.5, -0.5])), HardPulse('A', '+y', np.pi / 2))
        fid = acquire_fid(rho, P, ACQ)
        # in-phase A magnetization: |signal| = cos(pi J t) e^{-t/T2*}
        t = fid.times
        np.testing.assert_allclose(np.abs(fid.samples), np.abs(np.cos(np.pi * P.j_hz * t)) * np.exp(-t / ACQ.t2_star),
                                   atol=1e-9)

    def test_thermal_read_gives_four_lines(self):
        rho = apply_hard_pulse(thermal_state(), HardPulse('AB', '+y', np.pi / 2))
        spec = transform(acquire_fid(rho, P, ACQ))
        bin_width = spec.bin_width
        for reading, offset in zip(read_doublets(spec, P), (P.nu_a, P.nu_b)):
            assert reading.center == pytest.approx(offset, abs=bin_width)
            assert reading.splitting == pytest.approx(P.j_hz, abs=2 * bin_width)
            assert reading.integral > 0


class TestTransform:

    def test_zero_fid(self):
        spec = transform(FID(np.zeros(ACQ.points, dtype=complex), ACQ.dwell))
        np.testing.assert_array_equal(spec.values, 0)

    def test_frequency_axis(self):
        spec = transform(_decay(0.0))
        assert spec.freqs[0] == pytest.approx(-ACQ.sweep_width / 2)
        assert spec.freqs[-1] < ACQ.sweep_width / 2
        assert spec.bin_width == pytest.approx(ACQ.resolution)

    def test_single_line_position(self):
        spec = transform(_decay(100.0))
        peak = spec.freqs[np.argmax(np.real(spec.values))]
        assert peak == pytest.approx(100.0, abs=spec.bin_width)

    def test_linearity(self):
        first, second = _decay(50.0), _decay(-220.0, t2=0.1)
        combined = FID(first.samples + 2 * second.samples, ACQ.dwell)
        np.testing.assert_allclose(transform(combined).values,
                                   transform(first).values + 2 * transform(second).values, atol=1e-9)

    def test_energy_is_preserved(self):
        fid = _decay(12.5)
        spec = transform(fid)
        assert np.sum(np.abs(spec.values) ** 2) == pytest.approx(np.sum(np.abs(fid.samples) ** 2), rel=1e-10)

    def test_longer_t2_narrows_the_line(self):
        narrow = linewidth(transform(_decay(40.0, t2=0.6)), 40.0, 5.0)
        broad = linewidth(transform(_decay(40.0, t2=0.3)), 40.0, 5.0)
        assert broad / narrow == pytest.approx(2.0, rel=0.05)
        assert broad == pytest.approx(1 / (np.pi * 0.3), rel=0.05)


class TestPhasing:

    def test_reference_is_nearly_phased(self, reference_phase):
        assert reference_phase == pytest.approx(0.0, abs=1e-2)

    def test_rotated_reference(self, spectrometer, reference_phase):
        spec = spectrometer.spectrum(spectrometer.acquire(run_reference(P)))
        rotated = spec.phased(np.pi / 2)
        assert phase_reference(rotated) == pytest.approx(reference_phase - np.pi / 2, abs=1e-9)

    def test_phased_reference_is_positive(self, spectrometer, reference_phase):
        spec = spectrometer.spectrum(spectrometer.acquire(run_reference(P)), reference_phase)
        assert all(r.integral > 0 for r in spectrometer.read(spec))

    def test_phase_is_tracked(self):
        spec = transform(_decay(10.0)).phased(0.3).phased(-0.1)
        assert spec.phase_applied == pytest.approx(0.2)

    def test_empty_reference(self):
        with pytest.raises(NoPeaksError):
            phase_reference(transform(FID(np.zeros(64, dtype=complex), ACQ.dwell)))


class TestReadout:

    @pytest.mark.parametrize("a, signs", [
        ('00', (1, 1)),
        ('01', (1, -1)),
        ('10', (-1, 1)),
        ('11', (-1, -1)),
    ])
    def test_doublet_signs(self, spectrometer, reference_phase, a, signs):
        readings = _readings(spectrometer, reference_phase, a)
        assert tuple(int(np.sign(r.integral)) for r in readings) == signs

    @pytest.mark.parametrize("a", ['00', '01', '10', '11'])
    def test_end_to_end_decode(self, spectrometer, reference_phase, a):
        assert decode_answer(_readings(spectrometer, reference_phase, a)) == a

    def test_line_positions(self, spectrometer, reference_phase):
        readings = _readings(spectrometer, reference_phase, '10')
        width = ACQ.resolution
        assert [r.spin for r in readings] == ['A', 'B']
        for reading, offset in zip(readings, (P.nu_a, P.nu_b)):
            assert reading.center - reading.splitting / 2 == pytest.approx(offset - P.j_hz / 2, abs=width)
            assert reading.center + reading.splitting / 2 == pytest.approx(offset + P.j_hz / 2, abs=width)

    def test_decoding_is_scale_invariant(self, spectrometer, reference_phase):
        rho = run_experiment('01', P).scaled(3.7e-5)
        spec = spectrometer.spectrum(spectrometer.acquire(rho), reference_phase)
        assert decode_answer(spectrometer.read(spec)) == '01'

    def test_windows_must_not_overlap(self):
        close = SpinSystemParams(10.0, -5.0, 7.17)
        with pytest.raises(WindowOverlapError):
            read_doublets(transform(_decay(0.0)), close)


class TestDecodeAnswer:

    @pytest.mark.parametrize("signs, expected", [
        ((1, -1), '01'),
        ((-1, -1), '11'),
        ((1, 1), '00'),
    ])
    def test_sign_rule(self, signs, expected):
        readings = [DoubletReading(spin, 0.0, 7.17, sign * 2.0) for spin, sign in zip('AB', signs)]
        assert decode_answer(readings) == expected

    def test_below_noise_floor(self):
        readings = [DoubletReading('A', 0.0, 7.17, 1.0), DoubletReading('B', 0.0, 7.17, 1e-9)]
        with pytest.raises(InconclusiveReadoutError, match="spin B"):
            decode_answer(readings, reference_integral=1.0)

    def test_zero_signal(self):
        readings = [DoubletReading('A', 0.0, 7.17, 0.0), DoubletReading('B', 0.0, 7.17, 0.0)]
        with pytest.raises(InconclusiveReadoutError):
            decode_answer(readings)

    def test_custom_noise_floor(self):
        readings = [DoubletReading('A', 0.0, 7.17, 1.0), DoubletReading('B', 0.0, 7.17, -0.05)]
        assert decode_answer(readings, reference_integral=1.0) == '01'
        with pytest.raises(InconclusiveReadoutError):
            decode_answer(readings, reference_integral=1.0, noise_floor=0.1)


class TestSpectrometer:

    def test_validates_on_construction(self):
        with pytest.raises(AcquisitionError):
            Spectrometer(P, AcquisitionParams(sweep_width=500.0))

    def test_spectrum_applies_phase(self, spectrometer):
        fid = _decay(5.0)
        assert isinstance(spectrometer.spectrum(fid, 0.4), Spectrum)
        np.testing.assert_allclose(spectrometer.spectrum(fid, 0.4).values,
                                   transform(fid).values * np.exp(0.4j))
