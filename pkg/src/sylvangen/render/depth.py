"""8-bit depth image encoding."""

from __future__ import annotations

import numpy as np

from ..errors import ParameterError

DEFAULT_D_MAX = 30.0


def encode_depth(depth_m: np.ndarray, d_max: float = DEFAULT_D_MAX) -> np.ndarray:
    """Map metric depth to 8-bit gray, near bright: ``round(255 * (1 - clamp(d / d_max)))``.

    Rounding is half away from zero; sky (+inf) and anything past ``d_max``
    encode to 0.
    """
    if not d_max > 0:
        raise ParameterError("d_max must be positive")
    d = np.asarray(depth_m, dtype=np.float64)
    with np.errstate(invalid="ignore"):
        t = np.clip(d / d_max, 0.0, 1.0)
    t = np.where(np.isnan(t), 1.0, t)
    v = 255.0 * (1.0 - t)
    return np.floor(v + 0.5).astype(np.uint8)
