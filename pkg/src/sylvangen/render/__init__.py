from .camera import CameraConfig, CameraPose, place_camera
from .conditions import LIGHTING, Conditions, Lighting, TimeOfDay, Weather, sample_conditions
from .depth import DEFAULT_D_MAX, encode_depth
from .frame import FrameBundle, build_shadow_map, render_frame
from .weather import apply_weather, fog_factor

__all__ = [
    "CameraConfig",
    "CameraPose",
    "Conditions",
    "DEFAULT_D_MAX",
    "FrameBundle",
    "LIGHTING",
    "Lighting",
    "TimeOfDay",
    "Weather",
    "apply_weather",
    "build_shadow_map",
    "encode_depth",
    "fog_factor",
    "place_camera",
    "render_frame",
    "sample_conditions",
]
