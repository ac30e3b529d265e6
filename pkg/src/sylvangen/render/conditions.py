"""Illumination and weather presets."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from ..errors import ParameterError
from ..seeding import rng_from


class TimeOfDay(enum.Enum):
    MORNING = "morning"
    DAYLIGHT = "daylight"
    EVENING = "evening"
    DUSK = "dusk"


class Weather(enum.Enum):
    CLEAR = "clear"
    FOG = "fog"
    RAIN = "rain"
    SNOW = "snow"


@dataclass(frozen=True)
class Lighting:
    sun_elevation: float  # radians
    sun_azimuth: float  # radians, from +x towards +y
    sun_color: tuple[float, float, float]
    sun_intensity: float
    ambient: tuple[float, float, float]
    sky_horizon: tuple[float, float, float]
    sky_zenith: tuple[float, float, float]
    fog_color: tuple[float, float, float]

    @property
    def sun_direction(self) -> np.ndarray:
        """Unit vector pointing from the ground towards the sun."""
        ce = math.cos(self.sun_elevation)
        return np.array([ce * math.cos(self.sun_azimuth), ce * math.sin(self.sun_azimuth), math.sin(self.sun_elevation)])


LIGHTING = {
    TimeOfDay.MORNING: Lighting(
        math.radians(15.0), math.radians(80.0), (1.0, 0.86, 0.70), 1.05,
        (0.34, 0.34, 0.38), (0.86, 0.80, 0.72), (0.45, 0.60, 0.82), (0.80, 0.78, 0.74),
    ),
    TimeOfDay.DAYLIGHT: Lighting(
        math.radians(55.0), math.radians(150.0), (1.0, 1.0, 0.97), 1.15,
        (0.38, 0.40, 0.44), (0.80, 0.86, 0.92), (0.36, 0.55, 0.85), (0.78, 0.80, 0.82),
    ),
    TimeOfDay.EVENING: Lighting(
        math.radians(10.0), math.radians(260.0), (1.0, 0.62, 0.32), 1.0,
        (0.30, 0.26, 0.28), (0.95, 0.62, 0.38), (0.34, 0.40, 0.62), (0.72, 0.60, 0.52),
    ),
    TimeOfDay.DUSK: Lighting(
        math.radians(2.0), math.radians(280.0), (0.62, 0.66, 0.80), 0.45,
        (0.20, 0.21, 0.27), (0.46, 0.48, 0.58), (0.16, 0.19, 0.32), (0.40, 0.42, 0.48),
    ),
}


@dataclass(frozen=True)
class Conditions:
    time_of_day: TimeOfDay = TimeOfDay.DAYLIGHT
    weather: Weather = Weather.CLEAR
    fog_density: float = 0.0
    precipitation_intensity: float = 0.0
    wet: bool = False
    snow_cover: float = 0.0

    def __post_init__(self) -> None:
        if not isinstance(self.time_of_day, TimeOfDay) or not isinstance(self.weather, Weather):
            raise ParameterError("time_of_day and weather must be enum members")
        if not (self.fog_density >= 0):
            raise ParameterError("fog_density must be non-negative")
        if not (0.0 <= self.precipitation_intensity <= 1.0):
            raise ParameterError("precipitation_intensity must lie in [0, 1]")
        if not (0.0 <= self.snow_cover <= 1.0):
            raise ParameterError("snow_cover must lie in [0, 1]")

    @property
    def lighting(self) -> Lighting:
        return LIGHTING[self.time_of_day]

    def to_dict(self) -> dict:
        return {
            "time_of_day": self.time_of_day.value,
            "weather": self.weather.value,
            "fog_density": self.fog_density,
            "precipitation_intensity": self.precipitation_intensity,
            "wet": self.wet,
            "snow_cover": self.snow_cover,
        }


DEFAULT_TIME_WEIGHTS = {t.value: 1.0 for t in TimeOfDay}
DEFAULT_WEATHER_WEIGHTS = {"clear": 0.55, "fog": 0.15, "rain": 0.15, "snow": 0.15}


def _pick(rng: np.random.Generator, weights: dict[str, float], enum_cls):
    names = [m.value for m in enum_cls]
    w = np.array([float(weights.get(n, 0.0)) for n in names])
    if np.any(w < 0) or w.sum() <= 0:
        raise ParameterError("mixture weights must be non-negative and not all zero")
    return enum_cls(names[int(rng.choice(len(names), p=w / w.sum()))])


def sample_conditions(rng_seed: int, time_weights: dict | None = None, weather_weights: dict | None = None) -> Conditions:
    """Draw a time-of-day/weather combination for one frame."""
    rng = rng_from(rng_seed, "conditions")
    tod = _pick(rng, time_weights or DEFAULT_TIME_WEIGHTS, TimeOfDay)
    weather = _pick(rng, weather_weights or DEFAULT_WEATHER_WEIGHTS, Weather)
    haze = float(rng.uniform(0.0, 0.008))
    if weather is Weather.FOG:
        return Conditions(tod, weather, fog_density=float(rng.uniform(0.03, 0.09)), wet=bool(rng.uniform() < 0.5))
    if weather is Weather.RAIN:
        return Conditions(tod, weather, fog_density=haze + 0.01, precipitation_intensity=float(rng.uniform(0.3, 1.0)),
                          wet=True)
    if weather is Weather.SNOW:
        return Conditions(tod, weather, fog_density=haze + 0.005,
                          precipitation_intensity=float(rng.uniform(0.2, 1.0)),
                          snow_cover=float(rng.uniform(0.4, 0.9)))
    return Conditions(tod, weather, fog_density=haze, wet=bool(rng.uniform() < 0.15))
