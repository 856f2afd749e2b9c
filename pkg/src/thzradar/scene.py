"""Layered dielectric scenes: materials, layers, defects and the antenna.

All objects are frozen dataclasses and validate themselves on construction.
Lengths are in metres, frequencies in Hz, angles in radians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .errors import DomainError

DEFAULT_DEFECT_REFLECTION = 0.3


class DefectKind(str, Enum):
    CRACK = "crack"
    DELAMINATION = "delamination"
    VOID = "void"


@dataclass(frozen=True)
class Material:
    name: str
    eps_r: float
    loss_tangent: float = 0.0
    conductivity: float = 0.0

    def __post_init__(self):
        if not self.eps_r >= 1.0:
            raise DomainError(f"eps_r must be >= 1, got {self.eps_r}", field="eps_r")
        if not self.loss_tangent >= 0.0:
            raise DomainError(
                f"loss_tangent must be >= 0, got {self.loss_tangent}", field="loss_tangent"
            )
        if not self.conductivity >= 0.0:
            raise DomainError(
                f"conductivity must be >= 0, got {self.conductivity}", field="conductivity"
            )


# Half-space below the stack. The canonical pipe wall is backed by air.
AIR = Material("air", 1.0)


@dataclass(frozen=True)
class Layer:
    material: Material
    thickness: float

    def __post_init__(self):
        if not self.thickness > 0.0:
            raise DomainError(f"thickness must be > 0, got {self.thickness}", field="thickness")


@dataclass(frozen=True)
class Defect:
    """Point-like scatterer embedded in the stack.

    ``depth`` is measured from the sample surface (top of the first layer),
    ``lateral_position`` along the scan axis.
    """

    kind: DefectKind
    depth: float
    lateral_position: float
    diameter: float
    reflection_coefficient: float = DEFAULT_DEFECT_REFLECTION

    def __post_init__(self):
        object.__setattr__(self, "kind", DefectKind(self.kind))
        if not self.depth >= 0.0:
            raise DomainError(f"depth must be >= 0, got {self.depth}", field="depth")
        if not self.diameter > 0.0:
            raise DomainError(f"diameter must be > 0, got {self.diameter}", field="diameter")
        if not abs(self.reflection_coefficient) <= 1.0:
            raise DomainError(
                f"|reflection_coefficient| must be <= 1, got {self.reflection_coefficient}",
                field="reflection_coefficient",
            )
        if not math.isfinite(self.lateral_position):
            raise DomainError("lateral_position must be finite", field="lateral_position")


@dataclass(frozen=True)
class Scene:
    standoff: float
    layers: tuple[Layer, ...]
    defects: tuple[Defect, ...] = ()
    air_attenuation_db_per_m: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        object.__setattr__(self, "defects", tuple(self.defects))
        if not self.standoff >= 0.0:
            raise DomainError(f"standoff must be >= 0, got {self.standoff}", field="standoff")
        if not self.layers:
            raise DomainError("scene needs at least one layer", field="layers")
        if not self.air_attenuation_db_per_m >= 0.0:
            raise DomainError(
                "air attenuation must be >= 0", field="air_attenuation_db_per_m"
            )
        total = total_depth(self)
        for d in self.defects:
            if d.depth >= total:
                raise DomainError(
                    f"defect depth {d.depth:g} m is not inside the stack (total {total:g} m)",
                    field="depth",
                )

    def interface_depths(self) -> list[float]:
        """Depths of every material boundary, surface first, bottom last."""
        depths = [0.0]
        for layer in self.layers:
            depths.append(depths[-1] + layer.thickness)
        return depths

    def layer_index_at(self, depth: float) -> int:
        """Index of the layer containing ``depth`` (boundaries belong to the deeper layer)."""
        top = 0.0
        for i, layer in enumerate(self.layers):
            if depth < top + layer.thickness:
                return i
            top += layer.thickness
        return len(self.layers) - 1


@dataclass(frozen=True)
class Antenna:
    gain_dbi: float = 7.0
    hpbw: float = math.radians(40.0)
    center_frequency: float = 1.5e12

    def __post_init__(self):
        if not 0.0 < self.hpbw < math.pi:
            raise DomainError(f"hpbw must lie in (0, pi), got {self.hpbw}", field="hpbw")
        if not self.center_frequency > 0.0:
            raise DomainError("center_frequency must be > 0", field="center_frequency")


def total_depth(scene: Scene) -> float:
    return math.fsum(layer.thickness for layer in scene.layers)


MUD = Material("mud", 30.0, loss_tangent=0.0, conductivity=0.005)
FRP = Material("FRP", 4.0, loss_tangent=0.001, conductivity=0.0)


def canonical_scene() -> Scene:
    """Antenna 5 cm above 5 mm of mud on a 25 mm FRP wall with one crack.

    The crack sits 20 mm below the FRP surface, i.e. 25 mm below the
    sample surface, so that the FRP/defect echo gap encodes D = 20 mm.
    """
    return Scene(
        standoff=0.05,
        layers=(Layer(MUD, 0.005), Layer(FRP, 0.025)),
        defects=(
            Defect(
                kind=DefectKind.CRACK,
                depth=0.025,
                lateral_position=0.0,
                diameter=0.0025,
                reflection_coefficient=DEFAULT_DEFECT_REFLECTION,
            ),
        ),
        air_attenuation_db_per_m=100.0,
    )
