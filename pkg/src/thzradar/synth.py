"""Forward model: transmit pulse, echo enumeration and A-scan rendering."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError
from .physics import (
    fresnel_reflection,
    power_transmission,
    two_way_attenuation_db,
    two_way_delay,
)
from .scene import AIR, Antenna, Scene

FOUR_LN2 = 4.0 * math.log(2.0)

# Echoes weaker than -120 dB are dropped.
MIN_ECHO_AMPLITUDE = 1e-6

# Pulse support used when rendering, in pulse widths each side of centre.
_SUPPORT_WIDTHS = 8.0


@dataclass(frozen=True)
class Pulse:
    """Gaussian-envelope carrier pulse; ``width`` is the envelope FWHM."""

    width: float = 1e-12
    carrier_frequency: float = 1.5e12
    amplitude: float = 1.0
    prf: float = 2e6

    def __post_init__(self):
        for name in ("width", "carrier_frequency", "prf"):
            if not getattr(self, name) > 0.0:
                raise PreconditionError(f"pulse {name} must be > 0")


@dataclass(frozen=True)
class Echo:
    delay: float
    amplitude: float
    path: tuple[str, ...]


@dataclass(frozen=True, eq=False)
class Waveform:
    """Uniformly sampled real signal starting at ``t0``."""

    sample_rate: float
    t0: float
    samples: np.ndarray

    def __post_init__(self):
        if not self.sample_rate > 0.0:
            raise PreconditionError("sample_rate must be > 0")
        samples = np.asarray(self.samples, dtype=float)
        if not np.all(np.isfinite(samples)):
            raise PreconditionError("waveform samples must be finite")
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return self.samples.size

    @property
    def dt(self) -> float:
        return 1.0 / self.sample_rate

    @property
    def time_axis(self) -> np.ndarray:
        return self.t0 + np.arange(self.samples.size) / self.sample_rate

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    def replace(self, samples) -> Waveform:
        return Waveform(self.sample_rate, self.t0, samples)


def pulse_shape(pulse: Pulse, t) -> np.ndarray:
    """Transmitted field at times ``t`` relative to the pulse centre."""
    t = np.asarray(t, dtype=float)
    envelope = np.exp(-FOUR_LN2 * (t / pulse.width) ** 2)
    return pulse.amplitude * envelope * np.cos(2.0 * np.pi * pulse.carrier_frequency * t)


def _check_sampling(pulse, sample_rate):
    if sample_rate < 10.0 / pulse.width:
        raise PreconditionError(
            f"sample rate {sample_rate:.4g} Hz does not resolve a {pulse.width:.3g} s pulse "
            f"(need >= {10.0 / pulse.width:.4g} Hz)"
        )


def generate_pulse(pulse: Pulse, sample_rate: float, window: float) -> Waveform:
    """Render one pulse centred on the middle sample of a ``window`` long record."""
    _check_sampling(pulse, sample_rate)
    if window < 4.0 * pulse.width:
        raise PreconditionError("window must span at least 4 pulse widths")
    n = int(round(window * sample_rate))
    centre = n // 2
    t = (np.arange(n) - centre) / sample_rate
    return Waveform(sample_rate, 0.0, pulse_shape(pulse, t))


def pulse_centre_time(w: Waveform) -> float:
    """Centre time of a waveform produced by :func:`generate_pulse`."""
    return w.t0 + (len(w) // 2) / w.sample_rate


def _interface_label(a, b):
    return f"{a.name}/{b.name}"


def enumerate_echoes(scene: Scene, antenna: Antenna, lateral_offset: float = 0.0) -> list[Echo]:
    """First-order echoes seen by an antenna at scan coordinate ``lateral_offset``.

    One echo per material boundary (including the bottom of the stack, which
    is backed by air) followed by one echo per defect inside the beam. Defect
    echoes follow the point-target hyperbola and a Gaussian beam taper.
    Attenuation is evaluated at ``antenna.center_frequency``.
    """
    f = antenna.center_frequency
    materials = [AIR] + [layer.material for layer in scene.layers] + [AIR]
    depths = scene.interface_depths()
    echoes = []

    through = 1.0
    down = []
    for i, depth in enumerate(depths):
        a, b = materials[i], materials[i + 1]
        gamma = fresnel_reflection(a.eps_r, b.eps_r)
        loss = 10.0 ** (-two_way_attenuation_db(scene, depth, f) / 20.0)
        label = _interface_label(a, b)
        path = tuple(f"T:{p}" for p in down) + (f"R:{label}",)
        path += tuple(f"T:{_flip(p)}" for p in reversed(down))
        echoes.append(Echo(two_way_delay(scene, depth), gamma * through * loss, path))
        through *= power_transmission(a.eps_r, b.eps_r)
        down.append(label)

    for k, defect in enumerate(scene.defects):
        crossed = [i for i, d in enumerate(depths) if d <= defect.depth]
        through = 1.0
        for i in crossed:
            through *= power_transmission(materials[i].eps_r, materials[i + 1].eps_r)
        rng = defect.depth + scene.standoff
        if not rng > 0.0:
            raise PreconditionError(f"defect {k} is at zero range from the antenna")
        offset = lateral_offset - defect.lateral_position
        theta = math.atan2(offset, rng)
        taper = math.exp(-FOUR_LN2 * theta**2 / antenna.hpbw**2)
        loss = 10.0 ** (-two_way_attenuation_db(scene, defect.depth, f) / 20.0)
        amplitude = defect.reflection_coefficient * through * loss * taper
        if abs(amplitude) < MIN_ECHO_AMPLITUDE:
            continue
        delay = two_way_delay(scene, defect.depth) * math.sqrt(1.0 + (offset / rng) ** 2)
        labels = [_interface_label(materials[i], materials[i + 1]) for i in crossed]
        path = tuple(f"T:{p}" for p in labels) + (f"R:defect{k}:{defect.kind.value}",)
        path += tuple(f"T:{_flip(p)}" for p in reversed(labels))
        echoes.append(Echo(delay, amplitude, path))
    return echoes


def _flip(label):
    a, b = label.split("/")
    return f"{b}/{a}"


def render_echoes(
    echoes, pulse: Pulse, sample_rate: float, n: int, t0: float = 0.0
) -> np.ndarray:
    """Noiseless superposition of delayed, scaled pulse copies on an ``n``-sample grid."""
    out = np.zeros(n)
    half = _SUPPORT_WIDTHS * pulse.width
    for echo in echoes:
        if echo.amplitude == 0.0:
            continue
        i0 = max(0, int(math.floor((echo.delay - half - t0) * sample_rate)))
        i1 = min(n, int(math.ceil((echo.delay + half - t0) * sample_rate)) + 1)
        if i1 <= i0:
            continue
        t = t0 + np.arange(i0, i1) / sample_rate - echo.delay
        out[i0:i1] += echo.amplitude * pulse_shape(pulse, t)
    return out


def synthesize_ascan(
    scene: Scene,
    antenna: Antenna,
    pulse: Pulse,
    sample_rate: float = 20e12,
    window: float = 2e-9,
    lateral_offset: float = 0.0,
    noise_rms: float = 0.0,
    seed=0,
) -> Waveform:
    """Received A-scan at the antenna terminals, starting at t = 0.

    Noise is white Gaussian with standard deviation ``noise_rms`` drawn from
    ``numpy.random.default_rng(seed)`` (an int or a sequence of ints);
    identical arguments give identical samples.
    """
    _check_sampling(pulse, sample_rate)
    echoes = enumerate_echoes(scene, antenna, lateral_offset)
    latest = max(e.delay for e in echoes)
    if window <= latest + 4.0 * pulse.width:
        raise PreconditionError(
            f"window {window:.4g} s too short for the last echo at {latest:.4g} s"
        )
    if pulse.prf * latest >= 1.0:
        raise PreconditionError("PRF too high: echoes overlap the next transmit pulse")
    if noise_rms < 0.0:
        raise PreconditionError("noise_rms must be >= 0")
    n = int(round(window * sample_rate))
    samples = render_echoes(echoes, pulse, sample_rate, n)
    if noise_rms > 0.0:
        rng = np.random.default_rng(seed)
        samples += noise_rms * rng.standard_normal(n)
    return Waveform(sample_rate, 0.0, samples)


def defect_echo_amplitude(scene: Scene, antenna: Antenna, index: int = 0) -> float:
    """Echo amplitude of defect ``index`` seen from directly above it."""
    defect = scene.defects[index]
    single = Scene(scene.standoff, scene.layers, (defect,), scene.air_attenuation_db_per_m)
    echoes = enumerate_echoes(single, antenna, defect.lateral_position)
    if len(echoes) == len(scene.layers) + 1:
        return 0.0
    return echoes[-1].amplitude


def noise_rms_for_snr(
    scene: Scene, antenna: Antenna, pulse: Pulse, snr_db: float, index: int = 0
) -> float:
    """Noise RMS giving the requested peak-amplitude SNR for one defect echo."""
    peak = abs(defect_echo_amplitude(scene, antenna, index)) * pulse.amplitude
    return peak / 10.0 ** (snr_db / 20.0)
