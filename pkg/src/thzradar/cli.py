"""Command-line front end: ``thzradar {resolve,budget,ascan,bscan,detect}``.

Exit status is 0 on success, 1 on usage errors and 2 when the pipeline
fails (bad scene file, domain error, I/O error).
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__, fig3_scene_text
from . import io as sio
from .dsp import build_bscan, detect_defects, envelope, remove_clutter
from .errors import ThzRadarError
from .physics import (
    C,
    RcsModel,
    horizontal_resolution,
    link_budget,
    vertical_resolution,
    watts_to_dbm,
)
from .receiver import ChainConfig, design_elliptic_bandpass, run_chain
from .scene import Antenna
from .synth import Pulse, enumerate_echoes, noise_rms_for_snr, synthesize_ascan

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PIPELINE = 2

BUNDLED_SCENE = "fig3"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    scene_path: str
    pulse: Pulse
    chain: ChainConfig
    scan: tuple[float, float, int]
    noise_rms: float
    seed: int
    out: Path

    def __post_init__(self):
        start, stop, count = self.scan
        if count < 1:
            raise UsageError("--positions must be >= 1")
        if count > 1 and not stop > start:
            raise UsageError("--scan-stop-mm must exceed --scan-start-mm")

    @property
    def positions(self) -> np.ndarray:
        start, stop, count = self.scan
        return np.linspace(start, stop, count)


# --- report builders (also used by the tests) -------------------------------


def resolve_report(t_pulse: float, f: float, eps_r: float, depth: float) -> str:
    v = vertical_resolution(t_pulse, eps_r)
    h = horizontal_resolution(f, eps_r, depth)
    ct = C * t_pulse
    return "\n".join(
        [
            f"pulse {t_pulse * 1e12:g} ps, f = {f / 1e12:g} THz, eps_r = {eps_r:g}, "
            f"depth = {depth * 1e3:g} mm",
            f"vertical resolution   V_r = c*T/(2*sqrt(eps_r)) = {v * 1e3:.4f} mm",
            f"  note: the quoted design figure V_r ~ 0.3 mm matches c*T = {ct * 1e3:.4f} mm, "
            f"not the formula value {v * 1e3:.4f} mm (factor {ct / v if v else float('nan'):.2f})",
            f"horizontal resolution H_r = c/(4 f sqrt(eps_r)) + D/sqrt(eps_r+1) = {h * 1e3:.4f} mm",
        ]
    )


def budget_report(ledger, reference_w: float | None = None) -> str:
    width = max(len(item.label) for item in ledger.items) + 4
    lines = [f"{'Tx power':<{width}}{ledger.tx_power_dbm:+10.3f} dBm"]
    for item in ledger.items:
        lines.append(f"{item.label:<{width}}{item.signed_db:+10.3f} dB  ({item.sign})")
    err = ledger.consistency_error_db()
    lines += [
        f"{'received power':<{width}}{ledger.received_power_dbm:+10.3f} dBm "
        f"({ledger.received_power_w:.4e} W)",
        f"{'noise power (kTB)':<{width}}{watts_to_dbm(ledger.noise_power_w):+10.3f} dBm",
        f"{'SNR':<{width}}{ledger.snr_db:+10.3f} dB",
        f"sum check: Pr - (Pt + sum of items) = {err:.3e} dB "
        f"[{'ok' if abs(err) <= 1e-9 else 'FAIL'}]",
    ]
    if reference_w is not None:
        gap = ledger.received_power_dbm - watts_to_dbm(reference_w)
        lines.append(
            f"reference Pr {reference_w * 1e9:g} nW ({watts_to_dbm(reference_w):.3f} dBm): "
            f"gap {gap:+.3f} dB"
        )
    lines.append("assumptions:")
    lines += [f"  - {a}" for a in ledger.assumptions]
    return "\n".join(lines)


# --- argument handling ------------------------------------------------------


def _scene_text(path):
    if path == BUNDLED_SCENE:
        return fig3_scene_text()
    return Path(path).read_text()


def _add_scene(p):
    p.add_argument(
        "--scene", default=BUNDLED_SCENE, help="scene file (default: bundled fig3 scene)"
    )


def _add_common(p):
    _add_scene(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="thzradar-out", help="output directory")
    p.add_argument("--sample-rate-thz", type=float, default=20.0)
    p.add_argument("--noise-rms-v", type=float, default=0.0)
    p.add_argument("--pulse-width-ps", type=float, default=1.0)
    p.add_argument("--carrier-thz", type=float, default=1.5)
    p.add_argument("--amplitude-v", type=float, default=1.0)
    p.add_argument("--prf-mhz", type=float, default=2.0)
    p.add_argument("--hpbw-deg", type=float, default=40.0)
    p.add_argument("--gain-dbi", type=float, default=7.0)
    p.add_argument("--window-ns", type=float, default=None)
    p.add_argument("--lo-thz", type=float, default=1.4985)
    p.add_argument("--adc-bits", type=int, default=12)
    p.add_argument("--no-plots", action="store_true", help="skip PNG figures")


def _add_scan(p):
    p.add_argument("--scan-start-mm", type=float, default=-20.0)
    p.add_argument("--scan-stop-mm", type=float, default=20.0)
    p.add_argument("--positions", type=int, default=41)
    p.add_argument("--workers", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="thzradar", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("resolve", help="vertical and horizontal resolution")
    p.add_argument("--t-pulse-ps", type=float, default=1.0)
    p.add_argument("--freq-thz", type=float, default=1.5)
    p.add_argument("--eps-r", type=float, default=4.0)
    p.add_argument("--depth-mm", type=float, default=20.0)

    p = sub.add_parser("budget", help="itemised link budget for one defect")
    _add_scene(p)
    p.add_argument("--out", default=None, help="also write budget.csv (and budget.png) here")
    p.add_argument("--defect", type=int, default=0, help="index of the target defect")
    p.add_argument("--freq-thz", type=float, default=1.0)
    p.add_argument("--tx-mw", type=float, default=1.0)
    p.add_argument("--gain-dbi", type=float, default=7.0)
    p.add_argument("--amp-db", type=float, default=60.0)
    p.add_argument("--loss-db", type=float, default=10.0)
    p.add_argument("--rcs", choices=[m.value for m in RcsModel], default="geometric")
    p.add_argument("--bandwidth-ghz", type=float, default=1.0)
    p.add_argument("--temperature-k", type=float, default=290.0)
    p.add_argument("--received-nw", type=float, default=None, help="force Pr (nW) for the SNR")
    p.add_argument("--reference-nw", type=float, default=0.15)
    p.add_argument("--no-plots", action="store_true")

    p = sub.add_parser("ascan", help="single A-scan at one scan position")
    _add_common(p)
    p.add_argument("--position-mm", type=float, default=0.0)
    p.add_argument("--chain", action="store_true", help="also digitise through the receiver")

    p = sub.add_parser("bscan", help="raw and clutter-removed radargrams")
    _add_common(p)
    _add_scan(p)
    p.add_argument(
        "--domain",
        choices=["rf", "antenna"],
        default="rf",
        help="digitised receiver output (default) or antenna-terminal waveforms",
    )

    p = sub.add_parser("detect", help="defect detections from a clutter-removed B-scan")
    _add_common(p)
    _add_scan(p)
    p.add_argument("--threshold", type=float, default=5.0)
    p.add_argument(
        "--snr-db",
        type=float,
        default=None,
        help="set the noise RMS from this per-echo SNR of the first defect",
    )
    return parser


def _antenna(args, frequency):
    return Antenna(args.gain_dbi, math.radians(args.hpbw_deg), frequency)


def _run_config(args) -> RunConfig:
    pulse = Pulse(
        args.pulse_width_ps * 1e-12,
        args.carrier_thz * 1e12,
        args.amplitude_v,
        args.prf_mhz * 1e6,
    )
    chain = ChainConfig(
        lo_frequency=args.lo_thz * 1e12,
        adc=ChainConfig().adc.__class__(bits=args.adc_bits),
    )
    scan = (
        (getattr(args, "scan_start_mm", 0.0) or 0.0) * 1e-3,
        (getattr(args, "scan_stop_mm", 0.0) or 0.0) * 1e-3,
        getattr(args, "positions", 1),
    )
    return RunConfig(args.scene, pulse, chain, scan, args.noise_rms_v, args.seed, Path(args.out))


def _write(out: Path, name: str, text: str):
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text)


def _meta(args, scene, extra=None):
    params = {k: v for k, v in vars(args).items() if k != "func"}
    params.update(extra or {})
    return sio.run_meta(params, sio.serialize_scene(scene), __version__)


def cmd_resolve(args):
    print(
        resolve_report(
            args.t_pulse_ps * 1e-12, args.freq_thz * 1e12, args.eps_r, args.depth_mm * 1e-3
        )
    )
    return EXIT_OK


def cmd_budget(args):
    scene = sio.parse_scene_config(_scene_text(args.scene))
    if not 0 <= args.defect < len(scene.defects):
        raise UsageError(f"scene has {len(scene.defects)} defects; --defect {args.defect} invalid")
    antenna = Antenna(gain_dbi=args.gain_dbi, center_frequency=args.freq_thz * 1e12)
    ledger = link_budget(
        scene,
        antenna,
        scene.defects[args.defect],
        tx_power_w=args.tx_mw * 1e-3,
        amp_gain_db=args.amp_db,
        misc_loss_db=args.loss_db,
        rcs_model=args.rcs,
        bandwidth=args.bandwidth_ghz * 1e9,
        temperature=args.temperature_k,
    )
    if args.received_nw is not None:
        ledger = ledger.with_received_power(args.received_nw * 1e-9)
    print(budget_report(ledger, args.reference_nw * 1e-9 if args.reference_nw else None))
    if args.out:
        out = Path(args.out)
        _write(out, "budget.csv", sio.ledger_csv(ledger))
        if not args.no_plots:
            from .plotting import plot_ledger

            plot_ledger(ledger, out / "budget.png")
    return EXIT_OK if abs(ledger.consistency_error_db()) <= 1e-9 else EXIT_PIPELINE


def cmd_ascan(args):
    cfg = _run_config(args)
    scene = sio.parse_scene_config(_scene_text(cfg.scene_path))
    antenna = _antenna(args, cfg.pulse.carrier_frequency)
    window = (args.window_ns or 2.0) * 1e-9
    position = args.position_mm * 1e-3
    w = synthesize_ascan(
        scene,
        antenna,
        cfg.pulse,
        args.sample_rate_thz * 1e12,
        window,
        position,
        cfg.noise_rms,
        cfg.seed,
    )
    _write(cfg.out, "ascan.csv", sio.waveform_csv(w))
    echoes = enumerate_echoes(scene, antenna, position)
    for e in sorted(echoes, key=lambda e: e.delay):
        print(f"echo {e.delay * 1e9:9.4f} ns  amplitude {e.amplitude:+.4e}  {' > '.join(e.path)}")
    if args.chain:
        digitized = run_chain(w, cfg.chain)
        _write(cfg.out, "ascan_rf.csv", sio.waveform_csv(digitized))
        rf = design_elliptic_bandpass(cfg.chain.rf_filter, digitized.sample_rate)
        _write(cfg.out, "rf_filter.csv", rf.to_csv())
        for stage, level in digitized.stage_rms.items():
            print(f"stage {stage:<9} rms {level:.4e} V")
        print(f"ADC saturated samples: {digitized.saturation_count}")
    if not args.no_plots:
        from .plotting import plot_ascan

        plot_ascan(w, cfg.out / "ascan.png", echoes)
        if args.chain:
            plot_ascan(digitized, cfg.out / "ascan_rf.png", title="digitised RF A-scan")
    _write(cfg.out, "run.meta", _meta(args, scene, {"window_s": window}))
    return EXIT_OK


def _bscan(args, cfg, scene, chain):
    antenna = _antenna(args, cfg.pulse.carrier_frequency)
    if cfg.scan[2] < 2:
        raise UsageError("a B-scan needs --positions >= 2")
    window = (args.window_ns or 1.0) * 1e-9
    raw = build_bscan(
        scene,
        antenna,
        cfg.pulse,
        chain,
        cfg.positions,
        cfg.noise_rms,
        cfg.seed,
        args.sample_rate_thz * 1e12,
        window,
        args.workers,
    )
    return raw, window


def cmd_bscan(args):
    cfg = _run_config(args)
    scene = sio.parse_scene_config(_scene_text(cfg.scene_path))
    chain = cfg.chain if args.domain == "rf" else None
    raw, window = _bscan(args, cfg, scene, chain)
    clean = remove_clutter(raw)
    for tag, r in (("raw", raw), ("clutter_removed", clean)):
        _write(cfg.out, f"bscan_{tag}.csv", sio.radargram_csv(r))
        _write(cfg.out, f"bscan_{tag}.pgm", sio.radargram_pgm(r))
    if chain is not None:
        rf = design_elliptic_bandpass(chain.rf_filter, 1.0 / (raw.time_axis[1] - raw.time_axis[0]))
        _write(cfg.out, "rf_filter.csv", rf.to_csv())
    if not args.no_plots:
        from .plotting import plot_radargram

        plot_radargram(raw, cfg.out / "bscan_raw.png", "raw B-scan")
        plot_radargram(clean, cfg.out / "bscan_clutter_removed.png", "clutter removed")
        plot_radargram(envelope(clean), cfg.out / "bscan_envelope.png", "envelope")
    _write(cfg.out, "run.meta", _meta(args, scene, {"window_s": window}))
    print(
        f"B-scan: {raw.amplitudes.shape[0]} positions x {raw.amplitudes.shape[1]} samples "
        f"({args.domain} domain) -> {cfg.out}"
    )
    return EXIT_OK


def cmd_detect(args):
    cfg = _run_config(args)
    scene = sio.parse_scene_config(_scene_text(cfg.scene_path))
    extra = {}
    if args.snr_db is not None:
        if not scene.defects:
            raise UsageError("--snr-db needs a scene with at least one defect")
        antenna = _antenna(args, cfg.pulse.carrier_frequency)
        noise = noise_rms_for_snr(scene, antenna, cfg.pulse, args.snr_db)
        cfg = RunConfig(cfg.scene_path, cfg.pulse, cfg.chain, cfg.scan, noise, cfg.seed, cfg.out)
        extra["resolved_noise_rms_v"] = repr(noise)
    raw, window = _bscan(args, cfg, scene, None)
    detections = detect_defects(remove_clutter(raw), scene, args.threshold)
    _write(cfg.out, "detections.csv", sio.detections_csv(detections))
    if not args.no_plots:
        from .plotting import plot_radargram

        plot_radargram(
            envelope(remove_clutter(raw)), cfg.out / "detections.png", "detections", detections
        )
    extra["window_s"] = window
    _write(cfg.out, "run.meta", _meta(args, scene, extra))
    print(f"{len(detections)} detection(s)")
    for d in detections:
        print(
            f"  x = {d.lateral_position * 1e3:+.3f} mm  delay = {d.echo_delay * 1e9:.5f} ns  "
            f"depth = {d.estimated_depth * 1e3:.4f} mm  SNR = {d.snr_db:.1f} dB"
            + ("  (above host layer)" if d.shallow else "")
        )
    return EXIT_OK


COMMANDS = {
    "resolve": cmd_resolve,
    "budget": cmd_budget,
    "ascan": cmd_ascan,
    "bscan": cmd_bscan,
    "detect": cmd_detect,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"thzradar: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ThzRadarError, OSError) as exc:
        print(f"thzradar: error: {exc}", file=sys.stderr)
        return EXIT_PIPELINE


if __name__ == "__main__":
    sys.exit(main())
