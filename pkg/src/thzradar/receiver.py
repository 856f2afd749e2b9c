"""Behavioural receive chain: THz band-pass, gain, mixer, elliptic RF
band-pass, adjustable gain and ADC.

Every stage takes and returns a :class:`~thzradar.synth.Waveform`; all stages
except the ADC are linear.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import signal

from .errors import DomainError, FilterDesignError, PreconditionError
from .synth import Waveform

# Design margins applied inside the requested mask so the realised filter
# clears it despite rounding.
_RIPPLE_MARGIN = 0.9
_STOPBAND_MARGIN_DB = 3.0
STOPBAND_EDGE_RATIO = 1.3


class FilterKind(str, Enum):
    IDEAL_BRICKWALL = "ideal_brickwall"
    ELLIPTIC = "elliptic"


@dataclass(frozen=True)
class FilterSpec:
    order: int
    kind: FilterKind
    band: tuple[float, float]
    passband_ripple_db: float = 0.5
    stopband_attenuation_db: float = 60.0
    stopband_edges: tuple[float, float] | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", FilterKind(self.kind))
        object.__setattr__(self, "band", tuple(float(f) for f in self.band))
        f_low, f_high = self.band
        if not 0.0 < f_low < f_high:
            raise DomainError(f"band must satisfy 0 < f_low < f_high, got {self.band}", field="band")
        if self.order < 1:
            raise DomainError("order must be >= 1", field="order")
        if not self.passband_ripple_db > 0.0:
            raise DomainError("passband_ripple_db must be > 0", field="passband_ripple_db")
        if not self.stopband_attenuation_db > 0.0:
            raise DomainError(
                "stopband_attenuation_db must be > 0", field="stopband_attenuation_db"
            )
        if self.stopband_edges is not None:
            lo, hi = self.stopband_edges
            if not 0.0 < lo < f_low < f_high < hi:
                raise DomainError("stopband edges must bracket the passband", field="stopband_edges")

    @property
    def stop_edges(self) -> tuple[float, float]:
        if self.stopband_edges is not None:
            return self.stopband_edges
        f_low, f_high = self.band
        return f_low / STOPBAND_EDGE_RATIO, f_high * STOPBAND_EDGE_RATIO


@dataclass(frozen=True)
class AdcSpec:
    bits: int = 12
    sample_rate: float = 6.4e9
    full_scale: float = 1.0

    def __post_init__(self):
        if not 2 <= self.bits <= 24:
            raise DomainError("ADC bits must lie in [2, 24]", field="bits")
        if not self.sample_rate > 0.0:
            raise DomainError("ADC sample_rate must be > 0", field="sample_rate")
        if not self.full_scale > 0.0:
            raise DomainError("ADC full_scale must be > 0", field="full_scale")

    @property
    def lsb(self) -> float:
        return 2.0 * self.full_scale / 2**self.bits


def _default_thz_filter():
    return FilterSpec(1, FilterKind.IDEAL_BRICKWALL, (1.0e12, 2.0e12))


def _default_rf_filter():
    return FilterSpec(7, FilterKind.ELLIPTIC, (1.0e9, 2.0e9), 0.5, 60.0)


@dataclass(frozen=True)
class ChainConfig:
    """Receive-chain parameters.

    ``record_length`` is the minimum processing record; shorter inputs are
    zero-padded so the GHz-band filters have room to settle.
    """

    thz_filter: FilterSpec = field(default_factory=_default_thz_filter)
    thz_gain_db: float = 30.0
    lo_frequency: float = 1.4985e12
    rf_filter: FilterSpec = field(default_factory=_default_rf_filter)
    aga_gain_db: float = 30.0
    adc: AdcSpec = field(default_factory=AdcSpec)
    record_length: float = 16e-9

    def __post_init__(self):
        if not self.rf_filter.band[1] < self.lo_frequency:
            raise DomainError("RF band must lie below the LO frequency", field="rf_filter")
        if self.adc.sample_rate < 2.0 * self.rf_filter.band[1]:
            raise DomainError(
                "ADC rate must be at least twice the top of the RF band", field="adc"
            )
        if not self.lo_frequency > 0.0:
            raise DomainError("lo_frequency must be > 0", field="lo_frequency")


@dataclass(frozen=True, eq=False)
class DigitizedWaveform(Waveform):
    """ADC output in volts with the integer codes alongside."""

    codes: np.ndarray = None
    lsb: float = 0.0
    saturation_count: int = 0
    stage_rms: dict = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class DigitalFilter:
    """Cascade of second-order sections ``[b0, b1, b2, 1, a1, a2]``."""

    sos: np.ndarray
    sample_rate: float
    spec: FilterSpec

    def response(self, freqs) -> np.ndarray:
        """Complex response at ``freqs`` (Hz), evaluated section by section."""
        z = np.exp(-2j * np.pi * np.asarray(freqs, dtype=float) / self.sample_rate)
        h = np.ones_like(z)
        for b0, b1, b2, a0, a1, a2 in self.sos:
            h *= (b0 + b1 * z + b2 * z * z) / (a0 + a1 * z + a2 * z * z)
        return h

    def magnitude_db(self, freqs) -> np.ndarray:
        return 20.0 * np.log10(np.abs(self.response(freqs)))

    def poles(self) -> np.ndarray:
        return np.concatenate([np.roots(sec[3:]) for sec in self.sos])

    def group_delay(self, f: float, df: float | None = None) -> float:
        """Group delay in seconds at ``f`` from a central phase difference."""
        df = df or self.sample_rate * 1e-6
        h = self.response([f - df, f + df])
        dphi = np.angle(h[1] / h[0])
        return float(-dphi / (2.0 * np.pi * 2.0 * df))

    def apply(self, w: Waveform) -> Waveform:
        if not math.isclose(w.sample_rate, self.sample_rate, rel_tol=1e-9):
            raise PreconditionError("waveform and filter sample rates differ")
        return w.replace(signal.sosfilt(self.sos, w.samples))

    def to_csv(self) -> str:
        lines = ["b0,b1,b2,a1,a2"]
        for b0, b1, b2, a0, a1, a2 in self.sos:
            lines.append(",".join(repr(float(v / a0)) for v in (b0, b1, b2, a1, a2)))
        return "\n".join(lines) + "\n"


def _check_band(band, sample_rate):
    f_low, f_high = band
    if not 0.0 <= f_low < f_high <= sample_rate / 2.0:
        raise DomainError(
            f"band {band} Hz outside the Nyquist range of a {sample_rate:.4g} Hz signal",
            field="band",
        )


def bandpass_ideal(w: Waveform, band: tuple[float, float]) -> Waveform:
    """Zero every DFT bin outside ``[f_low, f_high]``; length and rate are kept."""
    _check_band(band, w.sample_rate)
    n = len(w)
    spec = np.fft.rfft(w.samples)
    freqs = np.fft.rfftfreq(n, 1.0 / w.sample_rate)
    spec[(freqs < band[0]) | (freqs > band[1])] = 0.0
    return w.replace(np.fft.irfft(spec, n))


def lowpass_ideal(w: Waveform, cutoff: float) -> Waveform:
    n = len(w)
    spec = np.fft.rfft(w.samples)
    freqs = np.fft.rfftfreq(n, 1.0 / w.sample_rate)
    spec[freqs > cutoff] = 0.0
    return w.replace(np.fft.irfft(spec, n))


def _mask_violation(filt: DigitalFilter):
    spec = filt.spec
    f_low, f_high = spec.band
    s_low, s_high = spec.stop_edges
    nyq = filt.sample_rate / 2.0
    passband = filt.magnitude_db(np.linspace(f_low, f_high, 512))
    if passband.max() > 1e-9 or passband.min() < -spec.passband_ripple_db:
        worst = max(passband.max(), -passband.min())
        return "passband_ripple_db", f"passband deviation {worst:.3f} dB exceeds {spec.passband_ripple_db} dB"
    stop = np.concatenate(
        [np.linspace(nyq * 1e-6, s_low, 512), np.linspace(s_high, nyq * (1 - 1e-6), 512)]
    )
    worst = -filt.magnitude_db(stop).max()
    if worst < spec.stopband_attenuation_db:
        return (
            "stopband_attenuation_db",
            f"only {worst:.2f} dB at/after the stopband edges, need {spec.stopband_attenuation_db} dB",
        )
    return None


@functools.lru_cache(maxsize=32)
def design_elliptic_bandpass(spec: FilterSpec, sample_rate: float) -> DigitalFilter:
    """Elliptic band-pass from an ``spec.order`` low-pass prototype.

    The prototype is mapped to band-pass and discretised with the bilinear
    transform after pre-warping the band edges, then split into second-order
    sections. The realised response is checked against the requested mask.
    """
    if spec.kind is not FilterKind.ELLIPTIC:
        raise FilterDesignError("kind", f"expected an elliptic spec, got {spec.kind.value}")
    _check_band(spec.band, sample_rate)
    s_low, s_high = spec.stop_edges
    if s_high >= sample_rate / 2.0:
        raise FilterDesignError("stopband_edges", "upper stopband edge is beyond Nyquist")

    rp, rs = spec.passband_ripple_db, spec.stopband_attenuation_db
    needed, _ = signal.ellipord(spec.band, (s_low, s_high), rp, rs, fs=sample_rate)
    if needed > spec.order:
        raise FilterDesignError(
            "order",
            f"order {spec.order} cannot give {rs} dB stopband with {rp} dB ripple at these "
            f"edges; needs {needed}",
        )
    margined, _ = signal.ellipord(
        spec.band, (s_low, s_high), rp * _RIPPLE_MARGIN, rs + _STOPBAND_MARGIN_DB, fs=sample_rate
    )
    if margined <= spec.order:
        rp, rs = rp * _RIPPLE_MARGIN, rs + _STOPBAND_MARGIN_DB
    sos = signal.ellip(spec.order, rp, rs, spec.band, btype="bandpass", output="sos", fs=sample_rate)
    filt = DigitalFilter(sos, float(sample_rate), spec)
    if np.any(np.abs(filt.poles()) >= 1.0):
        raise FilterDesignError("stability", "a pole lies on or outside the unit circle")
    violation = _mask_violation(filt)
    if violation is not None:
        raise FilterDesignError(*violation)
    return filt


def mix_downconvert(
    w: Waveform,
    lo_frequency: float,
    output_band: tuple[float, float],
    min_output_rate: float | None = None,
) -> Waveform:
    """Ideal multiplying mixer followed by band selection and decimation.

    A tone at ``f`` leaves at ``f - lo_frequency`` with half its amplitude.
    The LO phase is referenced to absolute time, so consecutive records stay
    phase-continuous. The output rate is ``sample_rate / M`` for the largest
    integer ``M`` keeping it at or above ``max(2.5 * f_high, min_output_rate)``.
    """
    if not 0.0 < lo_frequency < w.sample_rate / 2.0:
        raise DomainError("LO frequency outside the Nyquist range of the input", field="lo_frequency")
    target = max(2.5 * output_band[1], min_output_rate or 0.0)
    factor = int(math.floor(w.sample_rate / target * (1.0 + 1e-12)))
    if factor < 1:
        raise DomainError(
            "output band above the Nyquist frequency of the decimated signal", field="output_band"
        )
    new_rate = w.sample_rate / factor
    if output_band[1] > new_rate / 2.0:
        raise DomainError(
            "output band above the Nyquist frequency of the decimated signal", field="output_band"
        )
    mixed = w.samples * np.cos(2.0 * np.pi * lo_frequency * w.time_axis)
    selected = bandpass_ideal(w.replace(mixed), output_band)
    return Waveform(new_rate, w.t0, selected.samples[::factor])


def apply_gain(w: Waveform, gain_db: float) -> Waveform:
    return w.replace(w.samples * 10.0 ** (gain_db / 20.0))


def adc_quantize(w: Waveform, adc: AdcSpec) -> DigitizedWaveform:
    """Resample to the ADC clock, clip to +-full scale and quantise (mid-rise).

    Input faster than the ADC clock is low-passed at half the ADC rate and
    then sampled at the nearest input sample to each ADC instant.
    """
    ratio = w.sample_rate / adc.sample_rate
    if ratio < 1.0 - 1e-9:
        raise PreconditionError("input sample rate is below the ADC sample rate")
    if abs(ratio - 1.0) <= 1e-9:
        x = w.samples
    else:
        filtered = lowpass_ideal(w, adc.sample_rate / 2.0).samples
        count = int(math.floor(len(w) / ratio + 1e-9))
        idx = np.minimum(np.rint(np.arange(count) * ratio).astype(int), len(w) - 1)
        x = filtered[idx]
    half = 2 ** (adc.bits - 1)
    step = adc.lsb
    saturation = int(np.count_nonzero(np.abs(x) > adc.full_scale))
    codes = np.clip(np.floor(x / step), -half, half - 1).astype(np.int64)
    volts = (codes + 0.5) * step
    return DigitizedWaveform(
        adc.sample_rate,
        w.t0,
        volts,
        codes=codes,
        lsb=step,
        saturation_count=saturation,
    )


def _rms(w):
    return float(np.sqrt(np.mean(w.samples**2))) if len(w) else 0.0


def pad_to(w: Waveform, duration: float) -> Waveform:
    n = int(round(duration * w.sample_rate))
    if n <= len(w):
        return w
    return w.replace(np.concatenate([w.samples, np.zeros(n - len(w))]))


def run_chain(w: Waveform, cfg: ChainConfig | None = None) -> DigitizedWaveform:
    """Push an antenna-terminal waveform through the full receiver.

    THz BPF, THz gain, mixer, elliptic RF BPF, AGA, ADC, in that order. The
    result carries the RMS level after each stage in ``stage_rms``.
    """
    cfg = cfg or ChainConfig()
    stage_rms = {}
    x = pad_to(w, cfg.record_length)
    stage_rms["input"] = _rms(x)
    if cfg.thz_filter.kind is FilterKind.IDEAL_BRICKWALL:
        x = bandpass_ideal(x, cfg.thz_filter.band)
    else:
        x = design_elliptic_bandpass(cfg.thz_filter, x.sample_rate).apply(x)
    stage_rms["thz_bpf"] = _rms(x)
    x = apply_gain(x, cfg.thz_gain_db)
    stage_rms["thz_gain"] = _rms(x)
    x = mix_downconvert(x, cfg.lo_frequency, cfg.rf_filter.band, cfg.adc.sample_rate)
    stage_rms["mixer"] = _rms(x)
    if cfg.rf_filter.kind is FilterKind.ELLIPTIC:
        x = design_elliptic_bandpass(cfg.rf_filter, x.sample_rate).apply(x)
    else:
        x = bandpass_ideal(x, cfg.rf_filter.band)
    stage_rms["rf_bpf"] = _rms(x)
    x = apply_gain(x, cfg.aga_gain_db)
    stage_rms["aga"] = _rms(x)
    out = adc_quantize(x, cfg.adc)
    stage_rms["adc"] = _rms(out)
    object.__setattr__(out, "stage_rms", stage_rms)
    return out
