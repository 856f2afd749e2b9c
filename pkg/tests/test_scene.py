import math

import pytest

from thzradar.errors import DomainError
from thzradar.scene import (
    AIR,
    FRP,
    MUD,
    Antenna,
    Defect,
    DefectKind,
    Layer,
    Material,
    Scene,
    total_depth,
)


def test_canonical_values(scene):
    assert scene.standoff == 0.05
    assert scene.layers[1].material.eps_r == 4.0
    assert scene.defects[0].diameter == 0.0025
    assert scene.defects[0].kind is DefectKind.CRACK


def test_canonical_defect_sits_20mm_into_frp(scene):
    frp_top = scene.interface_depths()[1]
    assert scene.defects[0].depth - frp_top == pytest.approx(0.020, abs=1e-15)


@pytest.mark.parametrize(
    "layers, expected",
    [
        ([(MUD, 0.005), (FRP, 0.025)], 0.030),
        ([(FRP, 0.025)], 0.025),
        ([(FRP, 0.001)] * 3, 0.003),
    ],
)
def test_total_depth(layers, expected):
    s = Scene(0.05, tuple(Layer(m, t) for m, t in layers))
    assert total_depth(s) == pytest.approx(expected, rel=1e-15)


def test_interface_depths_and_layer_lookup(scene):
    assert scene.interface_depths() == pytest.approx([0.0, 0.005, 0.030])
    assert scene.layer_index_at(0.0) == 0
    assert scene.layer_index_at(0.005) == 1
    assert scene.layer_index_at(0.029) == 1


@pytest.mark.parametrize(
    "make, field",
    [
        (lambda: Material("x", 0.5), "eps_r"),
        (lambda: Material("x", 2.0, loss_tangent=-1e-3), "loss_tangent"),
        (lambda: Material("x", 2.0, conductivity=-1.0), "conductivity"),
        (lambda: Layer(FRP, 0.0), "thickness"),
        (lambda: Defect("crack", -0.001, 0.0, 0.001), "depth"),
        (lambda: Defect("crack", 0.001, 0.0, 0.0), "diameter"),
        (lambda: Defect("crack", 0.001, 0.0, 0.001, 1.5), "reflection_coefficient"),
        (lambda: Scene(-0.01, (Layer(FRP, 0.01),)), "standoff"),
        (lambda: Scene(0.05, ()), "layers"),
        (lambda: Scene(0.05, (Layer(FRP, 0.01),), (Defect("void", 0.01, 0, 1e-3),)), "depth"),
        (lambda: Antenna(hpbw=0.0), "hpbw"),
    ],
)
def test_invalid_construction(make, field):
    with pytest.raises(DomainError) as info:
        make()
    assert info.value.field == field


def test_unknown_defect_kind():
    with pytest.raises(ValueError):
        Defect("bubble", 0.001, 0.0, 0.001)


def test_air_is_vacuum_like():
    assert AIR.eps_r == 1.0 and AIR.loss_tangent == 0.0


def test_antenna_defaults():
    a = Antenna()
    assert a.gain_dbi == 7.0
    assert a.hpbw == pytest.approx(math.radians(40))
