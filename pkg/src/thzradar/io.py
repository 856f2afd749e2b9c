"""Scene files and the text formats written by the command-line tools.

Scene files are line based::

    # comment
    [scene]
    standoff_m = 0.05
    air_atten_db_per_m = 100.0

    [layer]            # repeated, top to bottom
    name = FRP
    thickness_m = 0.025
    eps_r = 4.0
    loss_tangent = 0.001
    conductivity_s_per_m = 0.0

    [defect]           # repeated
    kind = crack
    depth_m = 0.025
    lateral_m = 0.0
    diameter_m = 0.0025
    reflection = 0.3
"""

from __future__ import annotations

import hashlib
from pathlib import Path

import numpy as np

from .errors import ConfigError, DomainError
from .scene import DEFAULT_DEFECT_REFLECTION, Defect, Layer, Material, Scene

_KEYS = {
    "scene": {"standoff_m": True, "air_atten_db_per_m": False},
    "layer": {
        "name": True,
        "thickness_m": True,
        "eps_r": True,
        "loss_tangent": False,
        "conductivity_s_per_m": False,
    },
    "defect": {
        "kind": True,
        "depth_m": True,
        "lateral_m": False,
        "diameter_m": True,
        "reflection": False,
    },
}
_TEXT_KEYS = {"name", "kind"}

# Attribute names raised by the value objects, mapped back to file keys.
_FIELD_TO_KEY = {
    "standoff": "standoff_m",
    "air_attenuation_db_per_m": "air_atten_db_per_m",
    "layers": "[layer]",
    "thickness": "thickness_m",
    "eps_r": "eps_r",
    "loss_tangent": "loss_tangent",
    "conductivity": "conductivity_s_per_m",
    "kind": "kind",
    "depth": "depth_m",
    "lateral_position": "lateral_m",
    "diameter": "diameter_m",
    "reflection_coefficient": "reflection",
}


def _sections(text):
    sections = []
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {raw.strip()!r}", line=lineno)
            name = line[1:-1].strip()
            if name not in _KEYS:
                raise ConfigError(f"unknown section [{name}]", line=lineno)
            current = (name, lineno, {})
            sections.append(current)
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", line=lineno)
        if current is None:
            raise ConfigError("key outside of any section", line=lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        name, _, entries = current
        if key not in _KEYS[name]:
            raise ConfigError(f"unknown key {key!r} in [{name}]", line=lineno, field=key)
        if key in entries:
            raise ConfigError(f"duplicate key {key!r} in [{name}]", line=lineno, field=key)
        if key not in _TEXT_KEYS:
            try:
                value = float(value)
            except ValueError:
                raise ConfigError(f"{key}: not a number: {value!r}", line=lineno, field=key) from None
        elif not value:
            raise ConfigError(f"{key}: empty value", line=lineno, field=key)
        entries[key] = (value, lineno)
    return sections


def _require(name, lineno, entries):
    for key, required in _KEYS[name].items():
        if required and key not in entries:
            raise ConfigError(f"[{name}] is missing {key}", line=lineno, field=key)


def _semantic(err, name, lineno):
    key = _FIELD_TO_KEY.get(err.field, err.field)
    return ConfigError(f"[{name}] {key}: {err}", line=lineno, field=key)


def parse_scene_config(text: str) -> Scene:
    sections = _sections(text)
    scenes = [s for s in sections if s[0] == "scene"]
    if not scenes:
        raise ConfigError("no [scene] section")
    if len(scenes) > 1:
        raise ConfigError("more than one [scene] section", line=scenes[1][1])

    layers, defects = [], []
    last_defect_line = None
    for name, lineno, entries in sections:
        _require(name, lineno, entries)
        get = {k: v for k, (v, _) in entries.items()}
        try:
            if name == "layer":
                material = Material(
                    get["name"],
                    get["eps_r"],
                    get.get("loss_tangent", 0.0),
                    get.get("conductivity_s_per_m", 0.0),
                )
                layers.append(Layer(material, get["thickness_m"]))
            elif name == "defect":
                try:
                    defect = Defect(
                        kind=get["kind"],
                        depth=get["depth_m"],
                        lateral_position=get.get("lateral_m", 0.0),
                        diameter=get["diameter_m"],
                        reflection_coefficient=get.get("reflection", DEFAULT_DEFECT_REFLECTION),
                    )
                except DomainError:
                    raise
                except ValueError:
                    raise DomainError(f"unknown defect kind {get['kind']!r}", field="kind") from None
                defects.append(defect)
                last_defect_line = lineno
        except DomainError as exc:
            raise _semantic(exc, name, lineno) from None

    name, lineno, entries = scenes[0]
    get = {k: v for k, (v, _) in entries.items()}
    try:
        return Scene(
            standoff=get["standoff_m"],
            layers=tuple(layers),
            defects=tuple(defects),
            air_attenuation_db_per_m=get.get("air_atten_db_per_m", 0.0),
        )
    except DomainError as exc:
        where = "defect" if exc.field == "depth" else "scene"
        line = last_defect_line if where == "defect" else lineno
        raise _semantic(exc, where, line) from None


def load_scene(path) -> Scene:
    return parse_scene_config(Path(path).read_text())


def serialize_scene(scene: Scene) -> str:
    """Scene file text that parses back to an equal :class:`Scene`."""
    out = [
        "[scene]",
        f"standoff_m = {scene.standoff!r}",
        f"air_atten_db_per_m = {scene.air_attenuation_db_per_m!r}",
    ]
    for layer in scene.layers:
        m = layer.material
        out += [
            "",
            "[layer]",
            f"name = {m.name}",
            f"thickness_m = {layer.thickness!r}",
            f"eps_r = {m.eps_r!r}",
            f"loss_tangent = {m.loss_tangent!r}",
            f"conductivity_s_per_m = {m.conductivity!r}",
        ]
    for d in scene.defects:
        out += [
            "",
            "[defect]",
            f"kind = {d.kind.value}",
            f"depth_m = {d.depth!r}",
            f"lateral_m = {d.lateral_position!r}",
            f"diameter_m = {d.diameter!r}",
            f"reflection = {d.reflection_coefficient!r}",
        ]
    return "\n".join(out) + "\n"


def waveform_csv(w) -> str:
    t = w.time_axis * 1e9
    lines = ["time_ns,volts"]
    lines += [f"{ti:.6f},{vi:.9e}" for ti, vi in zip(t, w.samples)]
    return "\n".join(lines) + "\n"


def radargram_csv(r) -> str:
    """Header row is the time axis in ns; each following row is one position."""
    header = "position_mm," + ",".join(f"{t * 1e9:.6f}" for t in r.time_axis)
    lines = [header]
    for x, row in zip(r.positions, r.amplitudes):
        lines.append(f"{x * 1e3:.6f}," + ",".join(f"{v:.6e}" for v in row))
    return "\n".join(lines) + "\n"


def radargram_pgm(r) -> str:
    """Plain (P2) 8-bit greymap: columns are scan positions, rows are time."""
    a = r.amplitudes
    lo, hi = float(a.min()), float(a.max())
    if hi > lo:
        pixels = np.rint((a - lo) / (hi - lo) * 255.0).astype(int)
    else:
        pixels = np.zeros(a.shape, dtype=int)
    height, width = a.shape[1], a.shape[0]
    lines = ["P2", f"# min={lo!r} max={hi!r}", f"{width} {height}", "255"]
    lines += [" ".join(str(v) for v in row) for row in pixels.T]
    return "\n".join(lines) + "\n"


def read_pgm(text: str) -> tuple[np.ndarray, float, float]:
    """Pixels (rows = time, columns = positions) and the stated min/max."""
    lines = text.splitlines()
    if lines[0].strip() != "P2":
        raise ValueError("not a plain PGM file")
    comment = next(line for line in lines[1:] if line.startswith("#"))
    fields = dict(item.split("=") for item in comment[1:].split())
    body = [line for line in lines[1:] if not line.startswith("#")]
    width, height = (int(v) for v in body[0].split())
    values = np.array(" ".join(body[2:]).split(), dtype=int)
    return values.reshape(height, width), float(fields["min"]), float(fields["max"])


def detections_csv(detections) -> str:
    lines = ["position_mm,delay_ns,depth_mm,amplitude,snr_db,shallow"]
    for d in detections:
        lines.append(
            f"{d.lateral_position * 1e3:.4f},{d.echo_delay * 1e9:.6f},{d.estimated_depth * 1e3:.4f},"
            f"{d.peak_amplitude:.6e},{d.snr_db:.3f},{int(d.shallow)}"
        )
    return "\n".join(lines) + "\n"


def ledger_csv(ledger) -> str:
    lines = ["label,value_db,sign,signed_db"]
    for item in ledger.items:
        label = item.label.replace(",", ";")
        lines.append(f"{label},{item.value_db:.6f},{item.sign},{item.signed_db:.6f}")
    lines += [
        f"tx_power_dbm,{ledger.tx_power_dbm:.6f},,",
        f"received_power_dbm,{ledger.received_power_dbm:.6f},,",
        f"noise_power_dbm,{10 * np.log10(ledger.noise_power_w) + 30:.6f},,",
        f"snr_db,{ledger.snr_db:.6f},,",
        f"sum_consistency_error_db,{ledger.consistency_error_db():.3e},,",
    ]
    return "\n".join(lines) + "\n"


def run_meta(params: dict, scene_text: str, version: str) -> str:
    lines = [f"tool_version = {version}"]
    lines += [f"{k} = {params[k]}" for k in sorted(params)]
    lines.append(f"scene_sha256 = {hashlib.sha256(scene_text.encode()).hexdigest()}")
    lines.append("[scene-file]")
    lines += scene_text.rstrip("\n").splitlines()
    return "\n".join(lines) + "\n"
