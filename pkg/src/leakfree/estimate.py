"""Estimating the leakage coupling from repeated sandwich-circuit runs.

One protocol cycle prepares |C>, applies the three-gate x circuit built with
a supplied correction time ``beta1`` and measures in the {C, E, L} basis.
The C population is ``cos^2(phi2)`` whatever ``beta1`` is, because both
corrections act only on {E, L}; with a matched ``beta1`` the rest of the
population sits in E. Inverting

    cos(phi2) = 1 - a(delta)^2 (1 - cos alpha(delta))

for ``delta`` gives the estimate. ``beta1`` then only serves to tell apart
multiple roots, and the self-consistent loop re-matches it to the latest
estimate.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from leakfree.errors import NoRoot
from leakfree.linalg3 import expm_closed_su2
from leakfree.model import TWO_PI, noisy_x_gate
from leakfree.noise import NoiseKind, NoiseSpec, channel_rng, sample, value_at
from leakfree.synth import solve_x_constraints

GRID_POINTS = 1000
ROOT_XTOL = 1e-12  # GHz
CONFIDENCE_Z = 3.0


@dataclass(frozen=True)
class MeasurementRecord:
    shots: int
    counts_C: int
    counts_E: int
    counts_L: int
    g: float  # GHz
    theta: float  # rad
    beta1: float  # ns

    def __post_init__(self):
        counts = (self.counts_C, self.counts_E, self.counts_L)
        if self.shots < 1 or min(counts) < 0:
            raise ValueError("shots must be positive and counts non-negative")
        if sum(counts) != self.shots:
            raise ValueError(f"counts sum to {sum(counts)}, expected {self.shots}")

    @property
    def frequencies(self) -> np.ndarray:
        return np.array([self.counts_C, self.counts_E, self.counts_L], dtype=float) / self.shots


@dataclass(frozen=True)
class Beta2Inference:
    """The two ``beta2`` values compatible with a measured E population.

    ``candidates[0]`` comes from ``theta_eff = 2 arcsin(sqrt(p))`` and
    ``candidates[1]`` from ``2 pi - theta_eff``.
    """

    p_e: float
    theta_eff: tuple[float, float]
    candidates: tuple[float, float]  # ns
    boundary: bool

    @property
    def beta2(self) -> float:
        return self.candidates[0]


@dataclass(frozen=True)
class EstimateResult:
    delta_eps_d_hat: float  # GHz
    beta2_hat: float  # ns
    confidence_halfwidth: float  # GHz
    residual: float
    roots: tuple[float, ...] = ()
    multiple_roots: bool = False
    pinned: bool = False
    iterations: int = 1
    bounds: tuple[float, float] = (0.05, 1.0)

    def __post_init__(self):
        lo, hi = self.bounds
        if not lo <= self.delta_eps_d_hat <= hi:
            raise ValueError("estimate outside the search bounds")


def protocol_unitary(true_delta: float, g: float, theta: float, beta1: float) -> np.ndarray:
    """``exp(-i beta1 H_leak) U_x exp(-i beta1 H_leak)`` with the true coupling everywhere."""
    leak = expm_closed_su2(0.0, 1.0, -TWO_PI * true_delta * beta1)
    return leak @ noisy_x_gate(g, true_delta, theta) @ leak


def exact_populations(true_delta: float, g: float, theta: float, beta1: float) -> np.ndarray:
    """Populations of C, E, L after one protocol cycle started in |C>."""
    p = np.abs(protocol_unitary(true_delta, g, theta, beta1)[:, 0]) ** 2
    return p / p.sum()


def run_protocol(
    true_delta: float,
    g: float,
    theta: float,
    beta1: float,
    shots: int,
    rng: np.random.Generator,
) -> MeasurementRecord:
    if shots < 1:
        raise ValueError("shots must be at least 1")
    counts = rng.multinomial(int(shots), exact_populations(true_delta, g, theta, beta1))
    return MeasurementRecord(int(shots), int(counts[0]), int(counts[1]), int(counts[2]), g, theta, beta1)


def _not_c_fraction(record: MeasurementRecord) -> float:
    # 1 - P_C equals P_E for a matched beta1 and stays beta1-independent otherwise
    return (record.counts_E + record.counts_L) / record.shots


def infer_beta2_from_fraction(p: float, g: float) -> Beta2Inference:
    p = min(1.0, max(0.0, float(p)))
    th = 2.0 * math.asin(math.sqrt(p))
    thetas = (th, TWO_PI - th)
    return Beta2Inference(
        p_e=p,
        theta_eff=thetas,
        candidates=tuple(-t / (2.0 * TWO_PI * g) for t in thetas),
        boundary=p in (0.0, 1.0),
    )


def infer_beta2(record: MeasurementRecord) -> Beta2Inference:
    return infer_beta2_from_fraction(_not_c_fraction(record), record.g)


def _constraint_rhs(delta, g: float, theta: float):
    """``1 - a^2 (1 - cos alpha)`` as a function of candidate ``delta``."""
    delta = np.asarray(delta, dtype=float)
    r2 = g * g + delta * delta
    alpha = (theta / (2 * g)) * np.sqrt(r2)
    return 1.0 - (g * g / r2) * 2.0 * np.sin(0.5 * alpha) ** 2


def constraint(delta, g: float, theta: float, beta2: float):
    """``cos(2 pi g beta2) - [1 - a^2 (1 - cos alpha)]``; zero at the true coupling."""
    return math.cos(TWO_PI * g * beta2) - _constraint_rhs(delta, g, theta)


def _roots_of(fun: Callable, lo: float, hi: float, grid: int) -> list[float]:
    """Sign changes of the vectorized ``fun`` on a grid, refined by Brent's method."""
    xs = np.linspace(lo, hi, grid)
    ys = np.asarray(fun(xs), dtype=float)
    roots = []
    for k in range(grid - 1):
        if ys[k] == 0.0:
            roots.append(float(xs[k]))
        elif ys[k] * ys[k + 1] < 0:
            root = brentq(lambda x: float(fun(x)), xs[k], xs[k + 1], xtol=ROOT_XTOL, rtol=4 * np.finfo(float).eps)
            roots.append(float(root))
    if ys[-1] == 0.0:
        roots.append(float(xs[-1]))
    return roots


def relation_residual(delta: float, g: float, theta: float, beta1: float, beta2: float) -> float:
    """Largest residual of the two ``beta1``-dependent Euler relations at ``delta``.

    Only ``cos(phi2)`` is observed, so both signs of ``sin(phi2)`` are tried.
    """
    r = math.hypot(g, delta)
    alpha = (theta / (2 * g)) * r
    a, b = -g / r, -delta / r
    omc = 2.0 * math.sin(0.5 * alpha) ** 2
    c = math.cos(TWO_PI * g * beta2)
    s = math.sqrt(max(0.0, 1.0 - c * c))
    phi1 = TWO_PI * delta * beta1
    best = math.inf
    for s2 in (s, -s):
        res = max(abs(s2 * math.sin(phi1) - a * b * omc), abs(s2 * math.cos(phi1) - a * math.sin(alpha)))
        best = min(best, res)
    return best


def estimate_delta(
    g: float,
    theta: float,
    beta1: float,
    beta2_hat: float,
    bounds: tuple[float, float] = (0.05, 1.0),
    grid: int = GRID_POINTS,
) -> EstimateResult:
    """Solve the ``beta2`` constraint for ``delta`` within ``bounds``.

    All roots are kept; the reported one has the smallest ``beta1``
    relation residual.

    Raises
    ------
    NoRoot
        The constraint has no sign change inside ``bounds``.
    """
    lo, hi = bounds
    if not 0 < lo < hi:
        raise ValueError("bounds must satisfy 0 < low < high")
    roots = _roots_of(lambda d: constraint(d, g, theta, beta2_hat), lo, hi, grid)
    if not roots:
        raise NoRoot(f"no delta in [{lo}, {hi}] GHz matches beta2 = {beta2_hat!r} ns")
    best = min(roots, key=lambda d: relation_residual(d, g, theta, beta1, beta2_hat))
    return EstimateResult(
        delta_eps_d_hat=best,
        beta2_hat=beta2_hat,
        confidence_halfwidth=0.0,
        residual=float(abs(constraint(best, g, theta, beta2_hat))),
        roots=tuple(roots),
        multiple_roots=len(roots) > 1,
        bounds=(lo, hi),
    )


def _wilson(p: float, n: int, z: float) -> tuple[float, float]:
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def _roots_for_fraction(p: float, g: float, theta: float, bounds, grid: int) -> list[float]:
    target = infer_beta2_from_fraction(p, g)
    roots = []
    for b2 in target.candidates:
        roots += _roots_of(lambda d, b2=b2: constraint(d, g, theta, b2), bounds[0], bounds[1], grid)
    return roots


def estimate_from_fraction(
    p: float,
    g: float,
    theta: float,
    beta1: float,
    bounds: tuple[float, float] = (0.05, 1.0),
    shots: int | None = None,
    z: float = CONFIDENCE_Z,
    grid: int = GRID_POINTS,
) -> EstimateResult:
    """Estimate from a measured ``1 - P_C``; ``shots=None`` means exact populations.

    Both ``beta2`` branches are solved and the root most consistent with
    ``beta1`` is kept. The half-width maps a Wilson score interval (``z``
    standard deviations) on ``p`` through the constraint: each interval
    edge moves the root to the nearest root of the shifted equation, or to
    a search bound when that root leaves the bounds.

    Raises
    ------
    NoRoot
        Neither branch has a root inside ``bounds``.
    """
    inf = infer_beta2_from_fraction(p, g)
    found = []
    for b2 in inf.candidates:
        try:
            est = estimate_delta(g, theta, beta1, b2, bounds, grid)
        except NoRoot:
            continue
        found.append((relation_residual(est.delta_eps_d_hat, g, theta, beta1, b2), est))
    if not found:
        raise NoRoot(f"no delta in [{bounds[0]}, {bounds[1]}] GHz reproduces P = {p!r}")
    _, best = min(found, key=lambda x: x[0])
    roots = tuple(sorted(r for _, e in found for r in e.roots))
    d_hat = best.delta_eps_d_hat

    half = 0.0
    if shots is not None:
        for edge in _wilson(p, int(shots), z):
            moved = _roots_for_fraction(edge, g, theta, bounds, grid)
            if moved:
                other = min(moved, key=lambda d: abs(d - d_hat))
            else:
                other = bounds[0] if abs(d_hat - bounds[0]) < abs(d_hat - bounds[1]) else bounds[1]
            half = max(half, abs(other - d_hat))
    return EstimateResult(
        delta_eps_d_hat=d_hat,
        beta2_hat=best.beta2_hat,
        confidence_halfwidth=half,
        residual=best.residual,
        roots=roots,
        multiple_roots=len(roots) > 1,
        bounds=tuple(bounds),
    )


def estimate_from_record(
    record: MeasurementRecord,
    bounds: tuple[float, float] = (0.05, 1.0),
    z: float = CONFIDENCE_Z,
) -> EstimateResult:
    return estimate_from_fraction(
        _not_c_fraction(record), record.g, record.theta, record.beta1, bounds, record.shots, z
    )


def pinned_estimate(p: float, g: float, theta: float, bounds: tuple[float, float]) -> EstimateResult:
    """Fallback when no root exists: the bound where the constraint is smallest."""
    inf = infer_beta2_from_fraction(p, g)
    options = [(abs(float(constraint(d, g, theta, b2))), d, b2) for d in bounds for b2 in inf.candidates]
    res, d, b2 = min(options)
    return EstimateResult(d, b2, float(bounds[1] - bounds[0]), res, pinned=True, bounds=tuple(bounds))


def matched_beta1(g: float, delta: float, theta: float) -> float:
    return solve_x_constraints(g, delta, theta).beta1


def self_consistent_estimate(
    true_delta: float,
    g: float,
    theta: float,
    shots: int | None,
    rng: np.random.Generator | None = None,
    bounds: tuple[float, float] = (0.05, 1.0),
    delta0: float | None = None,
    max_iter: int = 20,
    tol: float = 1e-6,
) -> EstimateResult:
    """Guess delta, match beta1 to it, measure, re-estimate; repeat until stable.

    Every iteration takes a fresh measurement (``shots=None`` uses exact
    populations). Convergence means the update is below
    ``max(tol, confidence half-width)``. A missing root pins the estimate to
    a bound and stops.
    """
    d = 0.5 * (bounds[0] + bounds[1]) if delta0 is None else float(delta0)
    est = None
    for it in range(1, max_iter + 1):
        beta1 = matched_beta1(g, d, theta)
        if shots is None:
            p = 1.0 - exact_populations(true_delta, g, theta, beta1)[0]
        else:
            rec = run_protocol(true_delta, g, theta, beta1, shots, rng)
            p = _not_c_fraction(rec)
        try:
            est = estimate_from_fraction(p, g, theta, beta1, bounds, shots)
        except NoRoot:
            pin = pinned_estimate(p, g, theta, bounds)
            return EstimateResult(**{**pin.__dict__, "iterations": it})
        step = abs(est.delta_eps_d_hat - d)
        d = est.delta_eps_d_hat
        if step <= max(tol, est.confidence_halfwidth):
            break
    return EstimateResult(**{**est.__dict__, "iterations": it})


@dataclass(frozen=True)
class SeriesConfig:
    shots: int = 100_000
    repetitions: int = 20
    bounds: tuple[float, float] = (0.05, 1.0)  # GHz
    protocol_theta: float = 6.0  # rad; sensitivity to delta grows towards 2 pi
    g: float = 3.0  # GHz
    spacing: float = 1.0  # ns between repetitions, for drifting noise
    noise: NoiseSpec = field(default_factory=lambda: NoiseSpec(NoiseKind.CONSTANT, 0.35, 0.35))
    self_consistent: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.shots < 1 or self.repetitions < 1:
            raise ValueError("shots and repetitions must be positive")
        if not 0 < self.bounds[0] < self.bounds[1]:
            raise ValueError("bounds must satisfy 0 < low < high")
        if not self.spacing > 0:
            raise ValueError("spacing must be positive")

    def to_json(self) -> dict:
        return {
            "shots": self.shots,
            "repetitions": self.repetitions,
            "bounds_low_ghz": self.bounds[0],
            "bounds_high_ghz": self.bounds[1],
            "protocol_theta_rad": self.protocol_theta,
            "g_ghz": self.g,
            "spacing_ns": self.spacing,
            "noise": self.noise.to_json(),
            "self_consistent": self.self_consistent,
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "SeriesConfig":
        d = cls()
        return cls(
            shots=int(doc.get("shots", d.shots)),
            repetitions=int(doc.get("repetitions", d.repetitions)),
            bounds=(float(doc.get("bounds_low_ghz", d.bounds[0])), float(doc.get("bounds_high_ghz", d.bounds[1]))),
            protocol_theta=float(doc.get("protocol_theta_rad", d.protocol_theta)),
            g=float(doc.get("g_ghz", d.g)),
            spacing=float(doc.get("spacing_ns", d.spacing)),
            noise=NoiseSpec.from_json(doc["noise"]) if "noise" in doc else d.noise,
            self_consistent=bool(doc.get("self_consistent", d.self_consistent)),
            seed=int(doc.get("seed", d.seed)),
        )


@dataclass
class Series:
    true_delta: np.ndarray
    results: list[EstimateResult]

    def to_csv(self) -> str:
        lines = ["rep_index,delta_hat_ghz,conf_halfwidth_ghz,residual"]
        for k, r in enumerate(self.results):
            lines.append(f"{k},{r.delta_eps_d_hat:.17g},{r.confidence_halfwidth:.17g},{r.residual:.17g}")
        return "\n".join(lines) + "\n"

    def summary(self) -> dict:
        d = np.array([r.delta_eps_d_hat for r in self.results])
        hw = np.array([r.confidence_halfwidth for r in self.results])
        return {
            "mean_delta_hat_ghz": float(d.mean()),
            "std_delta_hat_ghz": float(d.std()),
            "mean_halfwidth_ghz": float(hw.mean()),
            "rms_error_ghz": float(np.sqrt(np.mean((d - self.true_delta) ** 2))),
            "pinned_reps": [k for k, r in enumerate(self.results) if r.pinned],
            "multiple_root_reps": [k for k, r in enumerate(self.results) if r.multiple_roots],
        }


def true_delta_series(config: SeriesConfig) -> np.ndarray:
    """The coupling seen by each repetition.

    Constant noise gives ``low``; quasistatic noise draws afresh per
    repetition; piecewise noise is one step function sampled every
    ``spacing`` ns.
    """
    spec, n = config.noise, config.repetitions
    if spec.kind is NoiseKind.CONSTANT:
        return np.full(n, float(spec.low))
    if spec.kind is NoiseKind.QUASISTATIC_UNIFORM:
        return np.array([sample(spec, 0.0, channel_rng(spec.seed, k)).value for k in range(n)])
    times = np.arange(n) * config.spacing
    real = sample(spec, float(times[-1]) + spec.resample_dt, channel_rng(spec.seed, 0))
    return np.array([value_at(real, t) for t in times])


def repeat_series(
    config: SeriesConfig,
    true_delta: Callable[[float], float] | None = None,
    threads: int | None = None,
) -> Series:
    """Run the protocol ``config.repetitions`` times against a drifting coupling.

    ``true_delta(t)`` overrides the noise spec. Repetition ``k`` uses the
    substream ``channel_rng(seed, k)`` and runs at time ``k * spacing``, so
    results do not depend on scheduling. A repetition without a root is
    pinned to a bound and flagged rather than aborting the series.
    """
    if true_delta is None:
        deltas = true_delta_series(config)
    else:
        deltas = np.array([true_delta(k * config.spacing) for k in range(config.repetitions)], dtype=float)

    def one(k: int) -> EstimateResult:
        rng = channel_rng(config.seed, k)
        if config.self_consistent:
            return self_consistent_estimate(
                deltas[k], config.g, config.protocol_theta, config.shots, rng, config.bounds
            )
        mid = 0.5 * (config.bounds[0] + config.bounds[1])
        beta1 = matched_beta1(config.g, mid, config.protocol_theta)
        rec = run_protocol(deltas[k], config.g, config.protocol_theta, beta1, config.shots, rng)
        try:
            return estimate_from_record(rec, config.bounds)
        except NoRoot:
            return pinned_estimate(_not_c_fraction(rec), config.g, config.protocol_theta, config.bounds)

    idx = range(config.repetitions)
    if threads and threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(one, idx))
    else:
        results = [one(k) for k in idx]
    return Series(deltas, results)


def binomial_sigma_beta2(p: float, shots: int, g: float) -> float:
    """Standard error of ``beta2_hat`` from binomial noise on ``p`` (delta method)."""
    # sigma_p = sqrt(p (1 - p) / shots) and d theta_eff / dp = 1 / sqrt(p (1 - p))
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie strictly between 0 and 1")
    return 1.0 / (math.sqrt(shots) * 2.0 * TWO_PI * g)


__all__ = [
    "MeasurementRecord",
    "Beta2Inference",
    "EstimateResult",
    "SeriesConfig",
    "Series",
    "protocol_unitary",
    "exact_populations",
    "run_protocol",
    "infer_beta2",
    "infer_beta2_from_fraction",
    "constraint",
    "relation_residual",
    "estimate_delta",
    "estimate_from_fraction",
    "estimate_from_record",
    "pinned_estimate",
    "matched_beta1",
    "self_consistent_estimate",
    "true_delta_series",
    "repeat_series",
    "binomial_sigma_beta2",
]
