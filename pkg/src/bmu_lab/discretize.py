"""Uniform binning of continuous cartpole states into string-keyed cells.

Each of the four state components is clamped to a symmetric interval and
mapped to one of ``n_bins`` half-open bins, so the zero state lands in the
middle bin (bin 5 of 10). The resulting 4-tuple of bin indices has a
canonical key such as ``"3_4_6_5_"`` used as the lookup identity for
neurons, ensembles and table rows everywhere else in the package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .cartpole import CartState

DEFAULT_X_BOUND = 2.4
DEFAULT_X_DOT_BOUND = 3.0
DEFAULT_THETA_BOUND = 0.418
DEFAULT_THETA_DOT_BOUND = 3.5


@dataclass(frozen=True)
class BinSpec:
    lower: tuple[float, float, float, float]
    upper: tuple[float, float, float, float]
    n_bins: int = 10

    def __post_init__(self) -> None:
        if self.n_bins < 2:
            raise ValueError(f"n_bins must be >= 2, got {self.n_bins}")
        if len(self.lower) != 4 or len(self.upper) != 4:
            raise ValueError("bounds must cover exactly 4 state components")
        for lo, hi in zip(self.lower, self.upper):
            if not lo < hi:
                raise ValueError(f"lower bound {lo} must be below upper bound {hi}")

    @classmethod
    def symmetric(
        cls,
        x_bound: float = DEFAULT_X_BOUND,
        x_dot_bound: float = DEFAULT_X_DOT_BOUND,
        theta_bound: float = DEFAULT_THETA_BOUND,
        theta_dot_bound: float = DEFAULT_THETA_DOT_BOUND,
        n_bins: int = 10,
    ) -> "BinSpec":
        bounds = (x_bound, x_dot_bound, theta_bound, theta_dot_bound)
        return cls(
            lower=tuple(-b for b in bounds),
            upper=bounds,
            n_bins=n_bins,
        )


@dataclass(frozen=True)
class DiscreteState:
    bins: tuple[int, int, int, int]
    key: str

    @classmethod
    def from_bins(cls, bins: tuple[int, int, int, int]) -> "DiscreteState":
        return cls(bins=tuple(bins), key=key_of(bins))


def bin_index(value: float, lower: float, upper: float, n_bins: int) -> int:
    """Half-open uniform bin of a clamped value; the exact upper bound
    falls into the last bin rather than an out-of-range one."""
    v = min(max(value, lower), upper)
    idx = int(math.floor(n_bins * (v - lower) / (upper - lower)))
    return min(idx, n_bins - 1)


def discretize(state: CartState, spec: BinSpec | None = None) -> DiscreteState:
    spec = spec or BinSpec.symmetric()
    bins = tuple(
        bin_index(v, lo, hi, spec.n_bins)
        for v, lo, hi in zip(state.components(), spec.lower, spec.upper)
    )
    return DiscreteState(bins=bins, key=key_of(bins))


def key_of(bins) -> str:
    """Underscore-joined bin indices with a trailing underscore."""
    parts = list(bins)
    if len(parts) != 4:
        raise ValueError(f"expected 4 bin indices, got {len(parts)}")
    for b in parts:
        if not isinstance(b, int) or b < 0:
            raise ValueError(f"bin indices must be non-negative integers, got {b!r}")
    return "".join(f"{b}_" for b in parts)


def parse_key(key: str) -> tuple[int, int, int, int]:
    """Inverse of key_of; malformed keys raise naming the bad token."""
    if not key.endswith("_"):
        raise ValueError(f"malformed state key {key!r}: missing trailing underscore")
    tokens = key[:-1].split("_")
    if len(tokens) != 4:
        raise ValueError(f"malformed state key {key!r}: expected 4 tokens, got {len(tokens)}")
    bins = []
    for tok in tokens:
        if not tok.isdigit():
            raise ValueError(f"malformed state key {key!r}: invalid token {tok!r}")
        bins.append(int(tok))
    return tuple(bins)
