"""Forward simulator and processing chain for a pulsed low-THz imaging radar
inspecting layered fibre-reinforced-polymer walls."""

from importlib import resources

__version__ = "0.1.0"


def fig3_scene_text() -> str:
    """Text of the bundled reference scene file."""
    return resources.files(__package__).joinpath("data/fig3.scene").read_text()
