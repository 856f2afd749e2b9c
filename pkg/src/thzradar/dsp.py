"""Post-processing: spectra, B-scan assembly, clutter removal, envelopes and
defect detection."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np
from scipy import fft as sfft
from scipy import ndimage, signal

from .errors import DomainError, PreconditionError, StateError
from .physics import estimate_depth, horizontal_resolution, two_way_delay
from .receiver import ChainConfig, run_chain
from .scene import Antenna, Scene
from .synth import Pulse, Waveform, pulse_shape, synthesize_ascan

MAD_TO_SIGMA = 1.4826

# Noise-scale floor relative to the strongest envelope value, so noiseless
# radargrams still get a finite threshold.
NOISE_FLOOR_RELATIVE = 1e-3


@dataclass(frozen=True, eq=False)
class Spectrum:
    """One-sided DFT of a real waveform.

    The axis is stored as a base grid plus an offset so that frequency
    shifts are exactly reversible.
    """

    base_axis: np.ndarray
    values: np.ndarray
    source_sample_rate: float
    n_samples: int
    offset: float = 0.0

    @property
    def frequency_axis(self) -> np.ndarray:
        return self.base_axis + self.offset

    def shifted(self, df: float) -> Spectrum:
        return replace(self, offset=self.offset + df)

    def energy(self) -> float:
        """Time-domain energy recovered from the one-sided bins (Parseval)."""
        weights = np.full(self.values.size, 2.0)
        weights[0] = 1.0
        if self.n_samples % 2 == 0:
            weights[-1] = 1.0
        return float(np.sum(weights * np.abs(self.values) ** 2) / self.n_samples)

    def peak_frequency(self) -> float:
        return float(self.frequency_axis[np.argmax(np.abs(self.values))])


def spectrum(w: Waveform) -> Spectrum:
    if len(w) == 0:
        raise PreconditionError("cannot take the spectrum of an empty waveform")
    values = np.fft.rfft(w.samples)
    axis = np.fft.rfftfreq(len(w), 1.0 / w.sample_rate)
    return Spectrum(axis, values, w.sample_rate, len(w))


def rescale_to_thz(s: Spectrum, lo_frequency: float) -> Spectrum:
    """Map a down-converted spectrum back onto the THz axis (values untouched)."""
    if not lo_frequency >= 0.0:
        raise DomainError("lo_frequency must be >= 0", field="lo_frequency")
    return s.shifted(lo_frequency)


class Processing(str, Enum):
    RAW = "raw"
    CLUTTER_REMOVED = "clutter_removed"
    ENVELOPE = "envelope"


@dataclass(frozen=True, eq=False)
class Radargram:
    """B-scan: ``amplitudes[i, j]`` is position ``i`` at time ``j``.

    ``pulse`` is set for antenna-domain radargrams (no receiver chain) and
    enables matched filtering during detection.
    """

    positions: np.ndarray
    time_axis: np.ndarray
    amplitudes: np.ndarray
    processed: Processing = Processing.RAW
    pulse: Pulse | None = None

    def __post_init__(self):
        object.__setattr__(self, "processed", Processing(self.processed))
        a = np.asarray(self.amplitudes, dtype=float)
        if a.ndim != 2 or a.shape != (len(self.positions), len(self.time_axis)):
            raise DomainError("amplitude matrix does not match the axes", field="amplitudes")
        object.__setattr__(self, "amplitudes", a)

    @property
    def sample_rate(self) -> float:
        return 1.0 / (self.time_axis[1] - self.time_axis[0])

    @property
    def position_step(self) -> float:
        return float(self.positions[1] - self.positions[0]) if len(self.positions) > 1 else 0.0

    def with_amplitudes(self, amplitudes, processed=None) -> Radargram:
        return replace(self, amplitudes=amplitudes, processed=processed or self.processed)


def _check_uniform(positions):
    positions = np.asarray(positions, dtype=float)
    if positions.size < 2:
        raise PreconditionError("a B-scan needs at least 2 positions")
    steps = np.diff(positions)
    if not np.all(steps > 0.0) or not np.allclose(steps, steps[0], rtol=1e-6, atol=0.0):
        raise PreconditionError("scan positions must be strictly increasing and uniform")
    return positions


def build_bscan(
    scene: Scene,
    antenna: Antenna,
    pulse: Pulse,
    chain: ChainConfig | None,
    positions,
    noise_rms: float = 0.0,
    seed: int = 0,
    sample_rate: float = 20e12,
    window: float = 1e-9,
    workers: int | None = None,
) -> Radargram:
    """Synthesize one A-scan per scan position and stack them.

    With ``chain=None`` the rows are antenna-domain waveforms; otherwise each
    row is digitised by :func:`~thzradar.receiver.run_chain`. Row ``i`` draws
    its noise from ``default_rng([seed, i])`` so the result does not depend
    on evaluation order or on ``workers``.
    """
    positions = _check_uniform(positions)

    def row(i):
        w = synthesize_ascan(
            scene, antenna, pulse, sample_rate, window, float(positions[i]), noise_rms, (seed, i)
        )
        return run_chain(w, chain) if chain is not None else w

    indices = range(positions.size)
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(row, indices))
    else:
        rows = [row(i) for i in indices]
    first = rows[0]
    return Radargram(
        positions=positions,
        time_axis=first.time_axis,
        amplitudes=np.vstack([r.samples for r in rows]),
        processed=Processing.RAW,
        pulse=pulse if chain is None else None,
    )


def mean_trace_subtract(amplitudes: np.ndarray) -> np.ndarray:
    """Subtract the across-position mean trace.

    Differences to the first row are formed before averaging so that rows
    identical to each other cancel to exact zeros.
    """
    rel = amplitudes - amplitudes[0]
    return rel - rel.mean(axis=0)


def remove_clutter(r: Radargram) -> Radargram:
    if r.processed is not Processing.RAW:
        raise StateError(f"clutter removal expects a raw radargram, got {r.processed.value}")
    if r.amplitudes.shape[0] < 2:
        raise PreconditionError("clutter removal needs at least 2 positions")
    return r.with_amplitudes(mean_trace_subtract(r.amplitudes), Processing.CLUTTER_REMOVED)


def analytic_envelope(rows: np.ndarray) -> np.ndarray:
    return np.abs(signal.hilbert(rows, axis=-1))


def envelope(r: Radargram) -> Radargram:
    return r.with_amplitudes(analytic_envelope(r.amplitudes), Processing.ENVELOPE)


def matched_filter(rows: np.ndarray, pulse: Pulse, sample_rate: float) -> np.ndarray:
    """Correlate each row with the transmit pulse.

    The template is normalised to unit energy gain, so an isolated echo of
    amplitude ``a`` produces an output peak of ``a`` at its own delay.
    """
    half = int(math.ceil(4.0 * pulse.width * sample_rate))
    taps = pulse_shape(pulse, np.arange(-half, half + 1) / sample_rate) / pulse.amplitude
    taps /= np.sum(taps * taps)
    n = rows.shape[-1]
    nfft = sfft.next_fast_len(n + 2 * half + 1, real=True)
    kernel = np.zeros(nfft)
    kernel[: half + 1] = taps[half:]
    kernel[-half:] = taps[:half]
    out = sfft.irfft(sfft.rfft(rows, nfft, axis=-1) * np.conj(sfft.rfft(kernel)), nfft, axis=-1)
    return out[..., :n]


@dataclass(frozen=True)
class Detection:
    lateral_position: float
    echo_delay: float
    estimated_depth: float
    peak_amplitude: float
    snr_db: float
    shallow: bool = False


def robust_sigma(values: np.ndarray) -> float:
    med = np.median(values)
    return float(MAD_TO_SIGMA * np.median(np.abs(values - med)))


def _refine_peak(row, j):
    if 0 < j < row.size - 1:
        y0, y1, y2 = row[j - 1], row[j], row[j + 1]
        denom = y0 - 2.0 * y1 + y2
        if denom < 0.0:
            return 0.5 * (y0 - y2) / denom
    return 0.0


def _apexes(x, d, sep):
    """Indices where the per-row delay curve has a hyperbola apex."""
    found = []
    for k in range(x.size):
        near = np.abs(x - x[k]) <= sep
        if d[k] > d[near].min():
            continue
        if not (np.any(x[near] < x[k]) and np.any(x[near] > x[k])):
            continue
        if any(abs(x[k] - x[m]) <= sep for m in found):
            continue
        found.append(k)
    return found


def _vertex(x, d, k, half_width):
    near = np.abs(x - x[k]) <= half_width
    if np.count_nonzero(near) >= 3:
        xs = x[near] - x[k]
        a, b, c = np.polyfit(xs, d[near], 2)
        if a > 0.0:
            xv = -b / (2.0 * a)
            if xs.min() <= xv <= xs.max():
                return x[k] + xv, c - b * b / (4.0 * a)
    return x[k], d[k]


def detect_defects(
    r: Radargram,
    scene: Scene,
    threshold_factor: float = 5.0,
    host_layer: int = -1,
    min_positions: int = 3,
    min_separation: float | None = None,
) -> list[Detection]:
    """Locate defect hyperbolas in a clutter-removed radargram.

    Cells whose envelope exceeds ``threshold_factor`` times a MAD-based noise
    scale are grouped into 8-connected clusters (after widening each hit by
    one pulse width along time). Clusters spanning fewer than
    ``min_positions`` scan positions are discarded as noise. Inside a
    cluster, each apex of the per-position peak-delay curve that is the
    earliest arrival within ``min_separation`` (default: the horizontal
    resolution at the detected depth) is reported, with position and delay
    refined by a local parabola fit. Delays are converted to depth below the
    top of ``host_layer``.
    """
    if r.processed is not Processing.CLUTTER_REMOVED:
        raise StateError(f"detection expects a clutter-removed radargram, got {r.processed.value}")
    fs = r.sample_rate
    data = r.amplitudes
    if r.pulse is not None:
        data = matched_filter(data, r.pulse, fs)
    env = analytic_envelope(data)
    peak = float(env.max())
    if peak == 0.0:
        return []
    sigma = max(robust_sigma(data), NOISE_FLOOR_RELATIVE * peak)
    hits = env > threshold_factor * sigma
    widen = max(1, int(math.ceil(r.pulse.width * fs))) if r.pulse is not None else 1
    hits = ndimage.binary_dilation(hits, structure=np.ones((1, 2 * widen + 1), bool))
    labels, count = ndimage.label(hits, structure=np.ones((3, 3), bool))

    layer = scene.layers[host_layer]
    host_index = host_layer % len(scene.layers)
    top_depth = scene.interface_depths()[host_index]
    top_delay = two_way_delay(scene, top_depth)
    carrier = r.pulse.carrier_frequency if r.pulse is not None else Antenna().center_frequency
    step = r.position_step
    t0, dt = r.time_axis[0], 1.0 / fs

    detections = []
    for label in range(1, count + 1):
        mask = labels == label
        rows = np.flatnonzero(mask.any(axis=1))
        if rows.size < min_positions:
            continue
        x = r.positions[rows]
        d = np.empty(rows.size)
        a = np.empty(rows.size)
        for n, i in enumerate(rows):
            masked = np.where(mask[i], env[i], -np.inf)
            j = int(np.argmax(masked))
            d[n] = t0 + (j + _refine_peak(env[i], j)) * dt
            a[n] = env[i, j]
        strongest = float(d[np.argmax(a)])
        if min_separation is None:
            rough = estimate_depth(max(strongest - top_delay, 0.0), layer.material.eps_r)
            sep = horizontal_resolution(carrier, layer.material.eps_r, rough)
        else:
            sep = min_separation
        sep = max(sep, 2.0 * step)
        for k in _apexes(x, d, sep):
            xv, dv = _vertex(x, d, k, sep / 2.0)
            near = np.abs(x - x[k]) <= sep / 2.0
            amp = float(a[near].max())
            shallow = dv < top_delay
            depth = 0.0 if shallow else estimate_depth(dv - top_delay, layer.material.eps_r)
            detections.append(
                Detection(
                    lateral_position=float(xv),
                    echo_delay=float(dv),
                    estimated_depth=float(depth),
                    peak_amplitude=amp,
                    snr_db=float(20.0 * math.log10(amp / sigma)),
                    shallow=bool(shallow),
                )
            )
    detections.sort(key=lambda det: (det.lateral_position, det.echo_delay))
    return detections
