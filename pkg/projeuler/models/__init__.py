from .examples import PRESETS, Preset, get_preset, preset_names

__all__ = ["PRESETS", "Preset", "get_preset", "preset_names"]
