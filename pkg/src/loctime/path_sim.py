"""Brownian paths, binned local-time fields and Ray-Knight (BESQ0) fields."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "BrownianPath",
    "LocalTimeField",
    "BesqZeroField",
    "mix_seed",
    "make_rng",
    "simulate_brownian",
    "local_time_field",
    "simulate_besq0",
]

# consecutive zero bins kept after absorption of a BESQ0 field
ABSORBED_TAIL = 50
_BESQ_CHUNK = 512


def mix_seed(master_seed: int, index: int) -> int:
    """Per-task 64-bit stream seed.

    Defined as the first 64-bit word of
    ``SeedSequence(master_seed, spawn_key=(index,)).generate_state``; this is
    a fixed hash of (master_seed, index) and does not depend on call order.
    """
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(index),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def make_rng(seed, stream: int = 0) -> np.random.Generator:
    """Generator for ``seed``; distinct ``stream`` values give disjoint streams."""
    if isinstance(seed, np.random.Generator):
        return seed
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class BrownianPath:
    dt: float
    values: np.ndarray

    @property
    def n_steps(self) -> int:
        return len(self.values) - 1

    @property
    def horizon(self) -> float:
        return self.n_steps * self.dt

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.values)


@dataclass(frozen=True)
class LocalTimeField:
    """Occupation density on the uniform grid ``x_j = (j - origin_index) * bin_width``.

    ``values[j]`` approximates the local time on bin ``[x_j, x_j + bin_width)``.
    Bins outside ``values`` are zero.
    """

    bin_width: float
    origin_index: int
    values: np.ndarray
    horizon: float

    half_line = False

    @property
    def mass(self) -> float:
        return float(np.sum(self.values) * self.bin_width)

    def at(self, x: float) -> float:
        """Value of the bin containing ``x`` (0 outside the stored range)."""
        j = math.floor(x / self.bin_width) + self.origin_index
        return float(self.values[j]) if 0 <= j < len(self.values) else 0.0

    def bin_edges(self) -> np.ndarray:
        j = np.arange(len(self.values) + 1) - self.origin_index
        return j * self.bin_width


@dataclass(frozen=True)
class BesqZeroField:
    """Dimension-0 squared Bessel field on ``x_j = j * bin_width``, j >= 0.

    When ``absorbed`` the field is zero from some index on and ``values`` ends
    with ``ABSORBED_TAIL`` zeros; otherwise it was cut at the requested extent.
    """

    bin_width: float
    start_level: float
    values: np.ndarray
    absorbed: bool

    half_line = True
    origin_index = 0

    @property
    def mass(self) -> float:
        return float(np.sum(self.values) * self.bin_width)

    def padded(self, n: int) -> np.ndarray:
        """First ``n`` grid values, zero-filled past the end of an absorbed field."""
        if n <= len(self.values):
            return self.values[:n]
        if not self.absorbed:
            raise ValueError(f"field was cut at {len(self.values)} bins; {n} requested")
        return np.concatenate([self.values, np.zeros(n - len(self.values))])


def simulate_brownian(t: float, dt: float, seed) -> BrownianPath:
    if not (t > 0 and 0 < dt <= t):
        raise ValueError(f"need t > 0 and 0 < dt <= t, got t={t}, dt={dt}")
    n = int(round(t / dt))
    rng = make_rng(seed)
    values = np.empty(n + 1)
    values[0] = 0.0
    np.cumsum(rng.standard_normal(n) * math.sqrt(dt), out=values[1:])
    return BrownianPath(dt=dt, values=values)


def local_time_field(path: BrownianPath, bin_width: float) -> LocalTimeField:
    """Bin occupation time by the midpoint of each step.

    Every step contributes exactly ``dt`` to one bin, so
    ``sum(values) * bin_width == n_steps * dt`` up to rounding.
    """
    if not bin_width > 0:
        raise ValueError("bin_width must be positive")
    b = path.values
    mid = 0.5 * (b[:-1] + b[1:])
    idx = np.floor(mid / bin_width).astype(np.int64)
    lo = int(idx.min())
    counts = np.bincount(idx - lo)
    return LocalTimeField(
        bin_width=bin_width,
        origin_index=-lo,
        values=counts * (path.dt / bin_width),
        horizon=path.horizon,
    )


def simulate_besq0(a: float, bin_width: float, max_extent: float, seed) -> BesqZeroField:
    """Full-truncation Euler scheme for ``dZ = 2 sqrt(Z+) dbeta`` started at ``a``.

    The scheme stops ``ABSORBED_TAIL`` bins after absorption, or at
    ``max_extent`` if the field is still alive.
    """
    if a < 0 or not bin_width > 0 or not max_extent > 0:
        raise ValueError(f"invalid BESQ0 parameters a={a}, bin_width={bin_width}, max_extent={max_extent}")
    n_max = int(round(max_extent / bin_width))
    if a == 0:
        return BesqZeroField(bin_width, a, np.zeros(ABSORBED_TAIL + 1), True)
    rng = make_rng(seed)
    scale = 2.0 * math.sqrt(bin_width)
    out = [float(a)]
    z = float(a)
    draws: list[float] = []
    pos = 0
    while len(out) <= n_max:
        if pos == len(draws):
            draws = rng.standard_normal(_BESQ_CHUNK).tolist()
            pos = 0
        z = z + scale * math.sqrt(z) * draws[pos]
        pos += 1
        if z <= 0.0:
            out.append(0.0)
            out.extend([0.0] * (ABSORBED_TAIL - 1))
            return BesqZeroField(bin_width, a, np.asarray(out), True)
        out.append(z)
    return BesqZeroField(bin_width, a, np.asarray(out), False)
