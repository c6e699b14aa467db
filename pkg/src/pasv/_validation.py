"""Input validation helpers shared by the public functions and estimators.

Player subsets are handled internally as Python ``int`` bitmasks (bit ``i`` set
iff player ``i`` is a member). Public functions accept either a mask or any
iterable of player indices.
"""

from collections.abc import Iterable, Sequence

import numpy as np

from ._errors import IndexOutOfRange, InvalidWeights


def as_mask(players, n: int | None = None) -> int:
    """Convert an int mask or an iterable of indices to a bitmask."""
    if isinstance(players, (int, np.integer)) and not isinstance(players, bool):
        mask = int(players)
        if mask < 0:
            raise IndexOutOfRange(f"negative mask {mask}")
        if n is not None and mask >> n:
            raise IndexOutOfRange(f"mask {mask:#x} has members outside [0, {n})")
        return mask
    mask = 0
    for i in players:
        i = int(i)
        if i < 0 or (n is not None and i >= n):
            raise IndexOutOfRange(f"player {i} outside [0, {n})")
        mask |= 1 << i
    return mask


def members(mask: int) -> list[int]:
    """Sorted member indices of a bitmask."""
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def encode_subset(mask: int, n: int) -> str:
    """Canonical text form: lowercase hex for n <= 64, else ';'-joined indices."""
    if n <= 64:
        return format(mask, "x")
    return ";".join(str(i) for i in members(mask))


def decode_subset(text: str, n: int) -> int:
    text = text.strip()
    if n <= 64:
        if text.lower().startswith("0x"):
            text = text[2:]
        return as_mask(int(text or "0", 16), n)
    if not text:
        return 0
    return as_mask((int(t) for t in text.split(";")), n)


def check_weights(weights, n: int) -> np.ndarray:
    """Validate a weight vector: shape (n,), finite, strictly positive."""
    try:
        w = np.asarray(weights, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise InvalidWeights(str(exc)) from exc
    if w.ndim != 1 or w.shape[0] != n:
        raise InvalidWeights(f"expected {n} weights, got shape {w.shape}")
    if not np.isfinite(w).all():
        raise InvalidWeights("weights must be finite")
    if (w <= 0).any():
        raise InvalidWeights("weights must be strictly positive")
    return w


def check_permutation(order: Sequence[int] | Iterable[int], n: int) -> tuple[int, ...]:
    order = tuple(int(x) for x in order)
    if len(order) != n or sorted(order) != list(range(n)):
        raise ValueError(f"{order} is not a permutation of range({n})")
    return order


def positions(order: Sequence[int]) -> list[int]:
    """Inverse of a permutation: ``positions(order)[order[t]] == t``."""
    pos = [0] * len(order)
    for t, x in enumerate(order):
        pos[x] = t
    return pos
