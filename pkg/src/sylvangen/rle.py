"""COCO uncompressed run-length encoding (column-major, zeros first)."""

from __future__ import annotations

import numpy as np

from .errors import FormatError


def mask_to_rle(mask: np.ndarray, height: int | None = None, width: int | None = None) -> dict:
    m = np.asarray(mask)
    if height is not None and width is not None and m.shape != (height, width):
        raise ValueError(f"mask shape {m.shape} does not match ({height}, {width})")
    h, w = m.shape
    flat = m.ravel(order="F").astype(bool)
    n = flat.size
    if n == 0:
        return {"size": [h, w], "counts": []}
    change = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate([[0], change, [n]])
    counts = np.diff(bounds).tolist()
    if flat[0]:
        counts.insert(0, 0)
    return {"size": [int(h), int(w)], "counts": [int(c) for c in counts]}


def _check(rle: dict, height: int | None, width: int | None) -> tuple[int, int, np.ndarray]:
    try:
        h, w = (int(v) for v in rle["size"])
        counts = np.asarray(rle["counts"], dtype=np.int64)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed RLE: {exc}") from exc
    if height is not None and (h, w) != (height, width):
        raise FormatError(f"RLE size {(h, w)} does not match canvas ({height}, {width})")
    if counts.ndim != 1 or np.any(counts < 0):
        raise FormatError("RLE counts must be a flat list of non-negative integers")
    if int(counts.sum()) != h * w:
        raise FormatError(f"RLE counts sum to {int(counts.sum())}, expected {h * w}")
    return h, w, counts


def rle_decode(rle: dict, height: int | None = None, width: int | None = None) -> np.ndarray:
    h, w, counts = _check(rle, height, width)
    values = np.zeros(len(counts), dtype=np.uint8)
    values[1::2] = 1
    flat = np.repeat(values, counts)
    return flat.reshape((w, h)).T.copy()


def rle_intervals(rle: dict) -> np.ndarray:
    """Half-open ``[start, end)`` column-major index ranges of the 1-runs, shape (K, 2)."""
    counts = np.asarray(rle["counts"], dtype=np.int64)
    ends = np.cumsum(counts)
    starts = ends - counts
    ones = slice(1, None, 2)
    iv = np.stack([starts[ones], ends[ones]], axis=1)
    return iv[iv[:, 1] > iv[:, 0]]


def rle_area(rle: dict) -> int:
    return int(np.asarray(rle["counts"], dtype=np.int64)[1::2].sum())


def rle_bbox(rle: dict) -> tuple[int, int, int, int]:
    """Tight ``(x, y, w, h)`` of the set pixels, from the runs alone."""
    h = int(rle["size"][0])
    iv = rle_intervals(rle)
    if len(iv) == 0:
        return (0, 0, 0, 0)
    first = iv[:, 0]
    last = iv[:, 1] - 1
    col0 = first // h
    col1 = last // h
    x0 = int(col0.min())
    x1 = int(col1.max())
    # a run spanning a column boundary touches the full height of the inner columns
    spans = col1 > col0
    y0 = int(np.where(spans, 0, first % h).min())
    y1 = int(np.where(spans, h - 1, last % h).max())
    return (x0, y0, x1 - x0 + 1, y1 - y0 + 1)
