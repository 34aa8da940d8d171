"""Random dipolar-detuning fluctuations.

Randomness always comes from an explicit ``numpy.random.Generator``;
ensemble members use ``channel_rng(seed, index)`` so each channel has its own
reproducible substream regardless of how channels are scheduled.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

RNG_ALGORITHM = "numpy PCG64 via SeedSequence([seed, stream_index])"


class NoiseKind(str, enum.Enum):
    CONSTANT = "CONSTANT"
    QUASISTATIC_UNIFORM = "QUASISTATIC_UNIFORM"
    PIECEWISE_UNIFORM = "PIECEWISE_UNIFORM"


@dataclass(frozen=True)
class NoiseSpec:
    """How to draw the coupling; ``CONSTANT`` always yields ``low``."""

    kind: NoiseKind = NoiseKind.QUASISTATIC_UNIFORM
    low: float = 0.2  # GHz
    high: float = 0.5  # GHz
    resample_dt: float = 0.001  # ns
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", NoiseKind(self.kind))
        if self.low > self.high:
            raise ValueError("low must not exceed high")
        if self.kind is NoiseKind.PIECEWISE_UNIFORM and not self.resample_dt > 0:
            raise ValueError("resample_dt must be positive for piecewise noise")

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.low + self.high)

    def to_json(self) -> dict:
        return {
            "noise_kind": self.kind.value,
            "low_ghz": self.low,
            "high_ghz": self.high,
            "resample_dt_ns": self.resample_dt,
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "NoiseSpec":
        return cls(
            kind=NoiseKind(doc.get("noise_kind", "QUASISTATIC_UNIFORM").upper()),
            low=float(doc.get("low_ghz", 0.2)),
            high=float(doc.get("high_ghz", 0.5)),
            resample_dt=float(doc.get("resample_dt_ns", 0.001)),
            seed=int(doc.get("seed", 0)),
        )


@dataclass(frozen=True)
class NoiseRealization:
    """A scalar coupling, or a right-continuous step function on ``[0, total_time]``.

    For a step function, ``times[k]`` is where ``values[k]`` starts to hold.
    """

    total_time: float
    value: float | None = None
    times: np.ndarray | None = None
    values: np.ndarray | None = None

    def __post_init__(self):
        if (self.value is None) == (self.times is None):
            raise ValueError("give either a scalar value or a step function")
        if self.times is not None:
            times = np.asarray(self.times, dtype=float)
            values = np.asarray(self.values, dtype=float)
            if times.shape != values.shape or times.size == 0:
                raise ValueError("times and values must be non-empty and equally long")
            if times[0] != 0.0 or np.any(np.diff(times) <= 0):
                raise ValueError("step times must start at 0 and strictly increase")
            object.__setattr__(self, "times", times)
            object.__setattr__(self, "values", values)

    @property
    def is_scalar(self) -> bool:
        return self.value is not None

    def mean(self, t_end: float | None = None) -> float:
        """Time average over ``[0, t_end]`` (default: the whole realization)."""
        if self.is_scalar:
            return float(self.value)
        t_end = self.total_time if t_end is None else t_end
        edges = np.append(self.times, max(self.total_time, t_end))
        widths = np.clip(np.minimum(edges[1:], t_end) - edges[:-1], 0.0, None)
        return float(np.dot(widths, self.values) / t_end)


def channel_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(index)])


def step_count(total_time: float, dt: float) -> int:
    n = total_time / dt
    # 0.6 / 0.001 is 599.9999999999999 in floating point
    return max(1, int(math.ceil(n - 1e-9)))


def sample(spec: NoiseSpec, total_time: float, rng: np.random.Generator) -> NoiseRealization:
    if spec.kind is NoiseKind.CONSTANT:
        return NoiseRealization(total_time, value=float(spec.low))
    if spec.kind is NoiseKind.QUASISTATIC_UNIFORM:
        return NoiseRealization(total_time, value=float(rng.uniform(spec.low, spec.high)))
    n = step_count(total_time, spec.resample_dt)
    times = np.arange(n) * spec.resample_dt
    values = rng.uniform(spec.low, spec.high, size=n)
    return NoiseRealization(total_time, times=times, values=values)


def value_at(r: NoiseRealization, t: float) -> float:
    if not 0.0 <= t <= r.total_time:
        raise ValueError(f"t = {t!r} outside [0, {r.total_time!r}]")
    if r.is_scalar:
        return float(r.value)
    k = int(np.searchsorted(r.times, t, side="right")) - 1
    return float(r.values[k])


def values_at(r: NoiseRealization, t: np.ndarray) -> np.ndarray:
    """Vectorized :func:`value_at` without the range check."""
    t = np.asarray(t, dtype=float)
    if r.is_scalar:
        return np.full(t.shape, float(r.value))
    k = np.searchsorted(r.times, t, side="right") - 1
    return r.values[np.clip(k, 0, r.values.size - 1)]
