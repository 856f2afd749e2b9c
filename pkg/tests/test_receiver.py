import math

import numpy as np
import pytest
from scipy import signal

from thzradar.dsp import spectrum
from thzradar.errors import DomainError, FilterDesignError, PreconditionError
from thzradar.receiver import (
    AdcSpec,
    ChainConfig,
    FilterSpec,
    adc_quantize,
    apply_gain,
    bandpass_ideal,
    design_elliptic_bandpass,
    mix_downconvert,
    run_chain,
)
from thzradar.synth import Waveform, enumerate_echoes, synthesize_ascan

RF_SPEC = FilterSpec(7, "elliptic", (1e9, 2e9), 0.5, 60.0)
FS_ADC = 6.4e9


def tone(f, fs, n, amp=1.0, phase=0.0):
    t = np.arange(n) / fs
    return Waveform(fs, 0.0, amp * np.cos(2 * np.pi * f * t + phase))


def bin_of(w, f):
    return int(round(f * len(w) / w.sample_rate))


class TestIdealBandpass:
    def test_tone_inside_preserved(self):
        w = tone(1.5e9, 6.4e9, 6400)
        out = bandpass_ideal(w, (1e9, 2e9))
        np.testing.assert_allclose(out.samples, w.samples, rtol=0, atol=1e-6)

    def test_tone_outside_removed(self):
        w = tone(0.5e9, 6.4e9, 6400)
        out = bandpass_ideal(w, (1e9, 2e9))
        assert np.sqrt(np.mean(out.samples**2)) < 1e-9 * np.sqrt(np.mean(w.samples**2))

    def test_white_noise_energy_fraction(self):
        rng = np.random.default_rng(1)
        w = Waveform(6.4e9, 0.0, rng.standard_normal(2**16))
        out = bandpass_ideal(w, (1e9, 2e9))
        frac = 1e9 / 3.2e9
        assert np.sum(out.samples**2) / np.sum(w.samples**2) == pytest.approx(frac, rel=0.05)

    def test_band_above_nyquist(self):
        with pytest.raises(DomainError):
            bandpass_ideal(tone(1e9, 6.4e9, 64), (1e9, 4e9))


class TestElliptic:
    @pytest.fixture
    def filt(self):
        return design_elliptic_bandpass(RF_SPEC, FS_ADC)

    def test_centre_gain(self, filt):
        g = filt.magnitude_db([1.5e9])[0]
        assert -0.5 <= g <= 1e-9

    def test_passband_probes(self, filt):
        g = filt.magnitude_db(np.linspace(1e9, 2e9, 64))
        assert g.min() >= -0.5 and g.max() <= 1e-9

    @pytest.mark.parametrize("f", [0.5e9, 0.77e9, 2.6e9, 2.8e9])
    def test_stopband(self, filt, f):
        assert filt.magnitude_db([f])[0] <= -60.0

    def test_stable(self, filt):
        assert np.max(np.abs(filt.poles())) < 1.0

    def test_response_matches_scipy(self, filt):
        f = np.linspace(0.1e9, 3.1e9, 301)
        _, h = signal.sosfreqz(filt.sos, worN=f, fs=FS_ADC)
        np.testing.assert_allclose(filt.response(f), h, rtol=1e-9, atol=1e-12)

    def test_sections_and_csv(self, filt):
        assert filt.sos.shape == (7, 6)
        lines = filt.to_csv().splitlines()
        assert lines[0] == "b0,b1,b2,a1,a2" and len(lines) == 8

    def test_group_delay_positive(self, filt):
        assert 0.5e-9 < filt.group_delay(1.5e9) < 3e-9

    def test_infeasible_order_names_constraint(self):
        spec = FilterSpec(2, "elliptic", (1e9, 2e9), 0.5, 60.0)
        with pytest.raises(FilterDesignError) as info:
            design_elliptic_bandpass(spec, FS_ADC)
        assert info.value.constraint

    def test_band_beyond_nyquist(self):
        with pytest.raises((FilterDesignError, DomainError)):
            design_elliptic_bandpass(FilterSpec(7, "elliptic", (1e9, 3.5e9)), FS_ADC)

    def test_invalid_spec(self):
        with pytest.raises(DomainError):
            FilterSpec(7, "elliptic", (2e9, 1e9))


class TestMixer:
    FS = 20e12
    N = 400000  # 20 ns: 128 output samples, every tone on an exact 50 MHz bin

    def test_tone_lands_at_difference(self):
        w = tone(1.5e12, self.FS, self.N)
        out = mix_downconvert(w, 1.4985e12, (1e9, 2e9), FS_ADC)
        assert out.sample_rate == pytest.approx(6.4e9)
        s = spectrum(out)
        assert abs(s.peak_frequency() - 1.5e9) <= out.sample_rate / len(out)
        # half amplitude after ideal multiplication
        assert np.abs(s.values).max() * 2 / len(out) == pytest.approx(0.5, rel=0.02)

    def test_zero_in_zero_out(self):
        out = mix_downconvert(Waveform(self.FS, 0.0, np.zeros(self.N)), 1.4985e12, (1e9, 2e9))
        assert not np.any(out.samples)

    def test_two_tones_no_images(self):
        t = np.arange(self.N) / self.FS
        x = np.cos(2 * np.pi * 1.4997e12 * t) + np.cos(2 * np.pi * 1.5003e12 * t)
        out = mix_downconvert(Waveform(self.FS, 0.0, x), 1.4985e12, (1e9, 2e9), FS_ADC)
        mag = np.abs(spectrum(out).values)
        keep = {bin_of(out, 1.2e9), bin_of(out, 1.8e9)}
        rest = np.delete(mag, list(keep))
        assert 20 * np.log10(rest.max() / mag.max()) < -60

    def test_lo_beyond_nyquist(self):
        with pytest.raises(DomainError):
            mix_downconvert(tone(1e9, 4e9, 64), 3e9, (0.1e9, 0.2e9))


class TestGain:
    def test_identity(self):
        w = tone(1e9, 6.4e9, 100)
        assert np.array_equal(apply_gain(w, 0.0).samples, w.samples)

    def test_twenty_db(self):
        w = tone(1e9, 6.4e9, 100)
        np.testing.assert_allclose(apply_gain(w, 20.0).samples, 10 * w.samples, rtol=1e-14)

    def test_round_trip(self):
        w = tone(1e9, 6.4e9, 100)
        np.testing.assert_allclose(apply_gain(apply_gain(w, -20), 20).samples, w.samples, rtol=1e-12)


class TestAdc:
    def test_sqnr_12_bits(self):
        adc = AdcSpec(12, 6.4e9, 1.0)
        n = 2**16
        f = 6.4e9 * 1021 / n  # coherent, prime cycle count
        w = tone(f, 6.4e9, n, amp=1.0 - adc.lsb)
        q = adc_quantize(w, adc)
        err = q.samples - w.samples
        sqnr = 10 * np.log10(np.mean(w.samples**2) / np.mean(err**2))
        assert sqnr == pytest.approx(6.02 * 12 + 1.76, abs=1.0)

    def test_saturation(self):
        adc = AdcSpec()
        q = adc_quantize(tone(1e9, 6.4e9, 640, amp=2.0), adc)
        assert q.saturation_count > 0
        assert np.all(np.abs(q.samples) <= adc.full_scale)

    def test_zero_input_is_zero_code(self):
        q = adc_quantize(Waveform(6.4e9, 0.0, np.zeros(64)), AdcSpec())
        assert np.all(q.codes == 0)
        assert np.all(q.samples == q.samples[0])

    def test_slower_input_rejected(self):
        with pytest.raises(PreconditionError):
            adc_quantize(Waveform(1e9, 0.0, np.zeros(8)), AdcSpec())

    def test_codes_and_lsb(self):
        adc = AdcSpec(8, 6.4e9, 1.0)
        q = adc_quantize(Waveform(6.4e9, 0.0, np.array([0.0, 0.01, -0.01, 0.999, -1.0])), adc)
        assert adc.lsb == 2 / 256
        assert q.codes.tolist() == [0, 1, -2, 127, -128]
        np.testing.assert_allclose(q.samples, (q.codes + 0.5) * adc.lsb)


class TestChain:
    @pytest.fixture
    def canon(self, scene, antenna, pulse):
        return scene, antenna, synthesize_ascan(scene, antenna, pulse, 20e12, 2e-9)

    def test_zero_in_zero_code(self):
        out = run_chain(Waveform(20e12, 0.0, np.zeros(40000)))
        assert np.all(out.codes == 0)

    def test_output_rate_and_stages(self, canon):
        out = run_chain(canon[2])
        assert out.sample_rate == pytest.approx(6.4e9)
        assert list(out.stage_rms) == ["input", "thz_bpf", "thz_gain", "mixer", "rf_bpf", "aga", "adc"]
        assert out.saturation_count == 0

    def test_echo_peaks_survive_chain(self, canon):
        scene, antenna, w = canon
        cfg = ChainConfig()
        out = run_chain(w, cfg)
        rf = design_elliptic_bandpass(cfg.rf_filter, out.sample_rate)
        env = np.abs(signal.hilbert(out.samples))
        t = out.time_axis
        gd = rf.group_delay(1.5e9)
        surface = enumerate_echoes(scene, antenna, 0.0)[0].delay
        j = np.argmax(env)
        # 1 GHz envelope: allow the filter delay plus one envelope width
        assert abs(t[j] - (surface + gd)) < gd + 1e-9

    def test_aga_linearity(self, canon):
        w = canon[2]
        base = ChainConfig(aga_gain_db=20.0)
        more = ChainConfig(aga_gain_db=20.0 + 20 * math.log10(2))
        a, b = run_chain(w, base), run_chain(w, more)
        assert a.saturation_count == b.saturation_count == 0
        np.testing.assert_allclose(b.samples, 2 * a.samples, atol=2 * b.lsb)

    def test_invalid_config(self):
        with pytest.raises(DomainError):
            ChainConfig(adc=AdcSpec(sample_rate=3e9))
