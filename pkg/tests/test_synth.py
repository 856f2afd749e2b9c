import math

import numpy as np
import pytest
from scipy import signal

from thzradar.dsp import spectrum
from thzradar.errors import PreconditionError
from thzradar.physics import two_way_delay
from thzradar.scene import FRP, AIR, Antenna, Defect, Layer, Material, Scene
from thzradar.synth import (
    Pulse,
    enumerate_echoes,
    generate_pulse,
    noise_rms_for_snr,
    pulse_centre_time,
    synthesize_ascan,
)

from conftest import C, stack

FS = 20e12


def test_pulse_peak_is_amplitude(pulse):
    w = generate_pulse(pulse, FS, 20e-12)
    assert np.max(np.abs(w.samples)) == pytest.approx(1.0, rel=0.01)


def test_pulse_tail_below_threshold(pulse):
    w = generate_pulse(pulse, FS, 20e-12)
    t = w.time_axis - pulse_centre_time(w)
    assert np.max(np.abs(w.samples[np.abs(t) > 3 * pulse.width])) < 0.004


def test_pulse_spectral_peak(pulse):
    w = generate_pulse(pulse, FS, 50e-12)
    s = spectrum(w)
    bin_width = FS / len(w)
    assert abs(s.peak_frequency() - 1.5e12) <= bin_width


def test_pulse_preconditions(pulse):
    with pytest.raises(PreconditionError):
        generate_pulse(pulse, 5e12, 20e-12)
    with pytest.raises(PreconditionError):
        generate_pulse(pulse, FS, 2e-12)
    with pytest.raises(PreconditionError):
        Pulse(width=0.0)


def test_canonical_echo_delays(scene, antenna):
    echoes = enumerate_echoes(scene, antenna, 0.0)
    interfaces, defect = echoes[:3], echoes[3]
    ns = [e.delay * 1e9 for e in interfaces]
    assert ns == pytest.approx([0.3336, 0.5163, 0.8498], abs=5e-5)
    assert defect.delay * 1e9 == pytest.approx(0.7831, abs=5e-5)
    assert defect.amplitude > 0  # reflection coefficient +0.3


def test_canonical_echo_amplitudes(scene, antenna):
    amps = [e.amplitude for e in enumerate_echoes(scene, antenna, 0.0)]
    assert amps == pytest.approx([-0.2186, 0.0767, 0.00894, 0.01102], abs=5e-5)
    assert all(abs(a) <= 1 for a in amps)


def test_echo_paths_record_provenance(scene, antenna):
    echoes = enumerate_echoes(scene, antenna, 0.0)
    assert echoes[0].path == ("R:air/mud",)
    assert echoes[1].path == ("T:air/mud", "R:mud/FRP", "T:mud/air")
    assert echoes[3].path[len(echoes[3].path) // 2].startswith("R:defect0")


def test_no_contrast_gives_zero_echo(antenna):
    s = Scene(0.05, (Layer(Material("vac", 1.0), 0.01),))
    echoes = enumerate_echoes(s, antenna)
    assert all(e.amplitude == 0.0 for e in echoes)
    w = synthesize_ascan(s, antenna, Pulse(), FS, 1e-9)
    assert not np.any(w.samples)


def test_envelope_peaks_at_echo_delays(scene, antenna, pulse):
    w = synthesize_ascan(scene, antenna, pulse, FS, 1e-9)
    env = np.abs(signal.hilbert(w.samples))
    t = w.time_axis
    for e in enumerate_echoes(scene, antenna, 0.0):
        near = np.abs(t - e.delay) < 2 * pulse.width
        j = np.argmax(np.where(near, env, 0.0))
        assert abs(t[j] - e.delay) <= pulse.width / 2


def test_window_too_short(scene, antenna, pulse):
    with pytest.raises(PreconditionError):
        synthesize_ascan(scene, antenna, pulse, FS, 0.85e-9)


def test_prf_ambiguity(scene, antenna):
    with pytest.raises(PreconditionError):
        synthesize_ascan(scene, antenna, Pulse(prf=2e9), FS, 1e-9)


def test_determinism(scene, antenna, pulse):
    a = synthesize_ascan(scene, antenna, pulse, FS, 1e-9, noise_rms=0.01, seed=7)
    b = synthesize_ascan(scene, antenna, pulse, FS, 1e-9, noise_rms=0.01, seed=7)
    c = synthesize_ascan(scene, antenna, pulse, FS, 1e-9, noise_rms=0.01, seed=8)
    assert np.array_equal(a.samples, b.samples)
    assert not np.array_equal(a.samples, c.samples)


def test_noise_statistics(clean_scene, antenna, pulse):
    quiet = synthesize_ascan(clean_scene, antenna, pulse, FS, 1e-9)
    noisy = synthesize_ascan(clean_scene, antenna, pulse, FS, 1e-9, noise_rms=0.02, seed=3)
    resid = noisy.samples - quiet.samples
    assert np.std(resid) == pytest.approx(0.02, rel=0.03)
    assert abs(np.mean(resid)) < 0.02 * 5 / math.sqrt(len(resid))


def test_frp_to_defect_gap_encodes_depth(scene, antenna):
    echoes = enumerate_echoes(scene, antenna, 0.0)
    gap = echoes[3].delay - echoes[1].delay
    assert gap == pytest.approx(2 * 0.020 * 2 / C, rel=1e-12)


def test_hyperbola_even_and_minimal_at_apex(scene, antenna):
    def delay(x):
        return enumerate_echoes(scene, antenna, x)[-1].delay

    assert delay(0.004) == delay(-0.004)
    assert delay(0.0) < delay(0.001) < delay(0.004)
    assert delay(0.0) == two_way_delay(scene, 0.025)


def test_beam_taper_drops_far_defects(scene, antenna):
    near = enumerate_echoes(scene, antenna, 0.0)
    far = enumerate_echoes(scene, antenna, 1.0)
    assert len(near) == 4 and len(far) == 3


def test_noise_for_snr(scene, antenna, pulse):
    rms = noise_rms_for_snr(scene, antenna, pulse, 15.0)
    peak = enumerate_echoes(scene, antenna, 0.0)[-1].amplitude
    assert 20 * math.log10(peak / rms) == pytest.approx(15.0, abs=1e-9)


def test_loss_never_increases_amplitude(antenna):
    low = stack((FRP, 0.02), defects=[Defect("void", 0.01, 0, 1e-3)])
    lossy = Material("FRP", 4.0, loss_tangent=0.01)
    high = stack((lossy, 0.02), defects=[Defect("void", 0.01, 0, 1e-3)])
    for a, b in zip(enumerate_echoes(low, antenna), enumerate_echoes(high, antenna)):
        assert abs(b.amplitude) <= abs(a.amplitude)


def test_bottom_echo_backed_by_air(antenna):
    s = stack((FRP, 0.01))
    echoes = enumerate_echoes(s, antenna)
    assert len(echoes) == 2
    assert echoes[1].path[1] == f"R:FRP/{AIR.name}"
    assert echoes[1].amplitude > 0  # FRP -> air: positive reflection
