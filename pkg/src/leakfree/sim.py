"""Density-matrix evolution of pulse schedules under detuning noise.

Every channel runs its own schedule with its own noise realization. The
Hamiltonian is piecewise constant between circuit boundaries and noise
resampling points, so propagation is exact: the union of those boundaries
and the output sample times forms a mesh, and each mesh segment contributes
one closed-form exponential. After a channel's schedule ends its state is
held, so ``rho`` at the last sample is the gate output of every channel.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from leakfree.noise import NoiseKind, NoiseRealization, NoiseSpec, channel_rng, sample, values_at
from leakfree.synth import Circuit, PulseKind

TWO_PI = 2.0 * math.pi
THREADS_ENV = "LEAKFREE_THREADS"

_CHANNEL_BLOCK = 250
_SEGMENT_CHUNK = 128


@dataclass
class Trajectory:
    times: np.ndarray  # (N,) ns
    rho: np.ndarray  # (N, 3, 3)
    leakage: np.ndarray  # (N,) |rho_23|
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (len(self.times) == len(self.rho) == len(self.leakage)):
            raise ValueError("times, rho and leakage must have equal lengths")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must strictly increase")

    @property
    def end_leakage(self) -> float:
        return float(self.leakage[-1])

    def to_csv(self) -> str:
        lines = ["t_ns,abs_rho23,rho11,rho22,rho33"]
        pops = np.real(np.einsum("nii->ni", self.rho))
        for t, lk, p in zip(self.times, self.leakage, pops):
            lines.append(f"{t:.17g},{lk:.17g},{p[0]:.17g},{p[1]:.17g},{p[2]:.17g}")
        return "\n".join(lines) + "\n"


def initial_state_plus() -> np.ndarray:
    """``|psi0><psi0|`` for ``|psi0> = (|C> + |E>)/sqrt(2)``."""
    return np.array([[0.5, 0.5, 0.0], [0.5, 0.5, 0.0], [0.0, 0.0, 0.0]], dtype=complex)


def density_residuals(rho: np.ndarray) -> dict:
    rho = np.asarray(rho)
    return {
        "hermiticity": float(np.max(np.abs(rho - np.swapaxes(rho, -1, -2).conj()))),
        "trace": float(np.max(np.abs(np.trace(rho, axis1=-2, axis2=-1) - 1.0))),
        "min_eigenvalue": float(np.min(np.linalg.eigvalsh(0.5 * (rho + np.swapaxes(rho, -1, -2).conj())))),
    }


def is_density_matrix(rho: np.ndarray, tol: float = 1e-12) -> bool:
    r = density_residuals(rho)
    return r["hermiticity"] <= tol and r["trace"] <= tol and r["min_eigenvalue"] >= -1e-10


def sample_times(t_end: float, dt_out: float) -> np.ndarray:
    """Uniform grid ``0, dt, 2 dt, ...`` reaching at least ``t_end``."""
    if not dt_out > 0:
        raise ValueError("dt_out must be positive")
    n = int(math.ceil(t_end / dt_out - 1e-9))
    return np.arange(max(n, 0) + 1) * dt_out


def _segment_unitaries(gx, ez, dl, dt) -> np.ndarray:
    """Batched ``exp{-i 2 pi [gx M1 + dl M2 + ez diag(1,-1,-1)/2] dt}``.

    ``gx`` and ``ez`` are never both non-zero inside a schedule, which keeps
    every segment in closed form.
    """
    if np.any((gx != 0) & (ez != 0)):
        raise ValueError("segment mixes x and z drive; not a schedule produced here")
    shape = gx.shape
    r = np.hypot(gx, dl)
    safe = np.where(r > 0, r, 1.0)
    a = np.where(r > 0, gx / safe, 0.0)
    b = np.where(r > 0, dl / safe, 0.0)
    ang = TWO_PI * r * dt
    c = np.cos(ang)
    s = np.sin(ang)
    cm1 = -2.0 * np.sin(0.5 * ang) ** 2
    U = np.empty(shape + (3, 3), dtype=complex)
    U[..., 0, 0] = 1.0 + a * a * cm1
    U[..., 0, 1] = -1j * a * s
    U[..., 0, 2] = a * b * cm1
    U[..., 1, 0] = -1j * a * s
    U[..., 1, 1] = np.where(r > 0, c, 1.0)
    U[..., 1, 2] = -1j * b * s
    U[..., 2, 0] = a * b * cm1
    U[..., 2, 1] = -1j * b * s
    U[..., 2, 2] = 1.0 + b * b * cm1
    ph = math.pi * ez * dt
    U[..., 0, :] *= np.exp(-1j * ph)[..., None]
    U[..., 1:, :] *= np.exp(1j * ph)[..., None, None]
    return U


def _nearest_unitary(U: np.ndarray) -> np.ndarray:
    # Polar projection; removes the roundoff drift of long products.
    W, _, Vh = np.linalg.svd(U)
    return W @ Vh


def _schedule_arrays(circuit: Circuit):
    bounds = circuit.boundaries()
    gx = np.array([s.amplitude if s.kind is PulseKind.X_PULSE else 0.0 for s in circuit.steps])
    ez = np.array([s.amplitude if s.kind is PulseKind.Z_PULSE else 0.0 for s in circuit.steps])
    return bounds, gx, ez


def _propagate_block(
    rho0: np.ndarray,
    circuits: Sequence[Circuit],
    realizations: Sequence[NoiseRealization],
    times: np.ndarray,
    keep_channels: bool = False,
) -> dict:
    """Evolve a block of channels on a shared output grid.

    Returns the channel sums of ``rho`` and ``|rho_23|`` at every sample plus
    per-channel invariant diagnostics (and the per-channel ``rho`` when
    ``keep_channels``).
    """
    C = len(circuits)
    t_last = float(times[-1])
    scheds = [_schedule_arrays(c) for c in circuits]
    pieces = [times]
    for (bounds, _, _), r in zip(scheds, realizations):
        pieces.append(bounds[bounds < t_last])
        if not r.is_scalar:
            pieces.append(r.times[r.times < t_last])
    mesh = np.unique(np.concatenate(pieces))
    mesh = mesh[mesh <= t_last]
    dts = np.diff(mesh)
    mids = 0.5 * (mesh[:-1] + mesh[1:])
    is_sample = np.isin(mesh, times)

    S = dts.size
    GX = np.zeros((S, C))
    EZ = np.zeros((S, C))
    DL = np.zeros((S, C))
    for j, ((bounds, gx, ez), r) in enumerate(zip(scheds, realizations)):
        k = np.searchsorted(bounds, mids, side="right") - 1
        active = k < gx.size
        kk = np.where(active, k, 0)
        GX[:, j] = np.where(active, gx[kk], 0.0)
        EZ[:, j] = np.where(active, ez[kk], 0.0)
        DL[:, j] = np.where(active, values_at(r, mids), 0.0)

    n_out = times.size
    sum_rho = np.zeros((n_out, 3, 3), dtype=complex)
    sum_abs23 = np.zeros(n_out)
    kept = np.empty((C, n_out, 3, 3), dtype=complex) if keep_channels else None
    worst = {"trace": 0.0, "purity": 0.0, "cauchy_schwarz": 0.0, "min_rho33": 0.0}
    pure0 = abs(np.real(np.trace(rho0 @ rho0)) - 1.0) < 1e-12

    U = np.broadcast_to(np.eye(3, dtype=complex), (C, 3, 3)).copy()
    out = 0

    def record(U):
        nonlocal out
        rho = U @ rho0 @ np.swapaxes(U, -1, -2).conj()
        sum_rho[out] = rho.sum(axis=0)
        a23 = np.abs(rho[:, 1, 2])
        sum_abs23[out] = a23.sum()
        if kept is not None:
            kept[:, out] = rho
        tr = np.real(np.trace(rho, axis1=1, axis2=2))
        worst["trace"] = max(worst["trace"], float(np.max(np.abs(tr - 1.0))))
        if pure0:
            pur = np.real(np.einsum("cij,cji->c", rho, rho))
            worst["purity"] = max(worst["purity"], float(np.max(np.abs(pur - 1.0))))
        p22 = np.real(rho[:, 1, 1])
        p33 = np.real(rho[:, 2, 2])
        bound = np.sqrt(np.clip(p22 * p33, 0.0, None))
        worst["cauchy_schwarz"] = max(worst["cauchy_schwarz"], float(np.max(a23 - bound)))
        worst["min_rho33"] = min(worst["min_rho33"], float(np.min(p33)))
        out += 1

    if is_sample[0]:
        record(U)
    for start in range(0, S, _SEGMENT_CHUNK):
        stop = min(S, start + _SEGMENT_CHUNK)
        seg = _segment_unitaries(
            GX[start:stop], EZ[start:stop], DL[start:stop], dts[start:stop, None]
        )
        for i in range(stop - start):
            U = seg[i] @ U
            if is_sample[start + i + 1]:
                record(U)
        U = _nearest_unitary(U)
    assert out == n_out
    return {"sum_rho": sum_rho, "sum_abs23": sum_abs23, "worst": worst, "rho": kept}


def thread_count(threads: int | None) -> int:
    if threads is not None:
        return max(1, int(threads))
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _run_channels(rho0, circuits, realizations, times, threads=None) -> dict:
    """Fixed-size channel blocks reduced in block order: results do not depend on ``threads``."""
    blocks = [
        (circuits[i : i + _CHANNEL_BLOCK], realizations[i : i + _CHANNEL_BLOCK])
        for i in range(0, len(circuits), _CHANNEL_BLOCK)
    ]
    n = thread_count(threads)
    if n > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=n) as pool:
            results = list(pool.map(lambda b: _propagate_block(rho0, b[0], b[1], times), blocks))
    else:
        results = [_propagate_block(rho0, c, r, times) for c, r in blocks]
    sum_rho = np.zeros_like(results[0]["sum_rho"])
    sum_abs23 = np.zeros_like(results[0]["sum_abs23"])
    worst = {"trace": 0.0, "purity": 0.0, "cauchy_schwarz": -np.inf, "min_rho33": 0.0}
    for res in results:
        sum_rho += res["sum_rho"]
        sum_abs23 += res["sum_abs23"]
        for key in ("trace", "purity", "cauchy_schwarz"):
            worst[key] = max(worst[key], res["worst"][key])
        worst["min_rho33"] = min(worst["min_rho33"], res["worst"]["min_rho33"])
    return {"sum_rho": sum_rho, "sum_abs23": sum_abs23, "worst": worst}


def evolve(
    rho0: np.ndarray,
    circuit: Circuit,
    realization: NoiseRealization,
    dt_out: float = 0.001,
    t_end: float | None = None,
) -> Trajectory:
    """Evolve one channel; samples every ``dt_out`` up to ``max(t_end, circuit end)``."""
    end = circuit.duration if t_end is None else max(t_end, circuit.duration)
    times = sample_times(end, dt_out)
    res = _propagate_block(np.asarray(rho0, dtype=complex), [circuit], [realization], times, keep_channels=True)
    rho = res["rho"][0]
    return Trajectory(times, rho, np.abs(rho[:, 1, 2]), {"per_channel": res["worst"]})


CircuitFactory = Callable[[float], Circuit]


def ensemble_leakage(
    rho0: np.ndarray,
    circuit_factory: CircuitFactory,
    spec: NoiseSpec,
    channels: int = 1000,
    dt_out: float = 0.001,
    t_end: float = 0.0,
    synthesis: str = "true",
    average: str = "rho",
    threads: int | None = None,
) -> Trajectory:
    """Average the evolution over ``channels`` noise draws.

    Parameters
    ----------
    circuit_factory : callable
        Maps the nominal coupling handed to a channel to the circuit it runs.
    synthesis : {"true", "midpoint", "time_average"}
        What the factory is told: the channel's own (quasistatic) value, the
        midpoint of ``[low, high]``, or the channel's time average over the
        realized noise. ``"true"`` falls back to the midpoint for piecewise
        noise, where no single true value exists.
    average : {"rho", "metric"}
        Average ``rho`` first and report ``|<rho>_23|``, or average the
        per-channel ``|rho_23|``.
    """
    if channels < 1:
        raise ValueError("channels must be >= 1")
    if average not in ("rho", "metric"):
        raise ValueError(f"unknown averaging mode {average!r}")
    if synthesis not in ("true", "midpoint", "time_average"):
        raise ValueError(f"unknown synthesis input {synthesis!r}")
    piecewise = spec.kind is NoiseKind.PIECEWISE_UNIFORM

    cover = t_end
    if piecewise:
        probes = np.append(np.linspace(spec.low, spec.high, 33), spec.midpoint)
        cover = max(cover, max(circuit_factory(float(d)).duration for d in probes))

    circuits: list[Circuit] = []
    realizations: list[NoiseRealization] = []
    for i in range(channels):
        r = sample(spec, max(cover, 1e-12), channel_rng(spec.seed, i))
        if synthesis == "midpoint" or (synthesis == "true" and piecewise):
            nominal = spec.midpoint if spec.kind is not NoiseKind.CONSTANT else spec.low
        else:
            nominal = r.mean()
        circuit = circuit_factory(nominal)
        if not r.is_scalar and circuit.duration > r.total_time:
            # Same substream, longer draw: the already-used prefix is unchanged.
            r = sample(spec, circuit.duration, channel_rng(spec.seed, i))
        circuits.append(circuit)
        realizations.append(r)

    end = max([t_end] + [c.duration for c in circuits])
    times = sample_times(end, dt_out)
    res = _run_channels(np.asarray(rho0, dtype=complex), circuits, realizations, times, threads)
    mean_rho = res["sum_rho"] / channels
    leak = np.abs(mean_rho[:, 1, 2]) if average == "rho" else res["sum_abs23"] / channels
    diag = {
        "channels": channels,
        "per_channel": res["worst"],
        "max_circuit_duration_ns": float(max(c.duration for c in circuits)),
    }
    return Trajectory(times, mean_rho, leak, diag)


@dataclass(frozen=True)
class ComparisonConfig:
    """Leakage comparison of the corrected x gate against uncorrected baselines."""

    g: float = 3.0  # GHz
    theta: float = math.pi / 2
    eps_q: float = 1.0  # GHz, z pulses of the zxz baseline
    low: float = 0.2  # GHz
    high: float = 0.5  # GHz
    channels: int = 1000
    window: float = 0.6  # ns, minimum span of every curve
    dt_out: float = 0.001  # ns
    resample_dt: float = 0.001  # ns
    seed: int = 0
    zxz_angles: tuple[float, float, float] | None = None
    synthesis: str = "midpoint"  # piecewise noise only; quasistatic uses each channel's value
    average: str = "rho"
    include_bare: bool = False
    modes: tuple[str, ...] = ("quasistatic", "piecewise")

    def to_json(self) -> dict:
        doc = {k: getattr(self, k) for k in self.__dataclass_fields__}
        doc["zxz_angles"] = list(self.resolved_zxz_angles())
        doc["modes"] = list(self.modes)
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "ComparisonConfig":
        kw = {k: v for k, v in doc.items() if k in cls.__dataclass_fields__}
        if kw.get("zxz_angles") is not None:
            kw["zxz_angles"] = tuple(float(x) for x in kw["zxz_angles"])
        if "modes" in kw:
            kw["modes"] = tuple(kw["modes"])
        return cls(**kw)

    def resolved_zxz_angles(self) -> tuple[float, float, float]:
        from leakfree.synth import default_zxz_angles

        return tuple(self.zxz_angles) if self.zxz_angles is not None else default_zxz_angles(self.theta)


def comparison_factories(config: ComparisonConfig) -> dict[str, CircuitFactory]:
    from leakfree.synth import bare_x_circuit, ideal_x_circuit, zxz_composite_circuit

    angles = config.resolved_zxz_angles()
    factories = {
        "zxz": lambda d: zxz_composite_circuit(config.g, config.eps_q, angles, d),
        "uix": lambda d: ideal_x_circuit(config.g, d, config.theta)[0],
    }
    if config.include_bare:
        factories["bare"] = lambda d: bare_x_circuit(config.g, config.theta, d)
    return factories


def compare_leakage(config: ComparisonConfig = ComparisonConfig(), threads: int | None = None) -> dict[str, Trajectory]:
    """Averaged ``|rho_23(t)|`` curves keyed ``"<mode>_<circuit>"``.

    Quasistatic mode draws one coupling per channel and synthesizes the
    corrected gate for it; piecewise mode redraws the coupling every
    ``resample_dt`` and synthesizes for ``config.synthesis``. All curves of
    one mode share the seed, so every circuit sees the same channels.
    """
    curves: dict[str, Trajectory] = {}
    kinds = {"quasistatic": NoiseKind.QUASISTATIC_UNIFORM, "piecewise": NoiseKind.PIECEWISE_UNIFORM}
    for mode in config.modes:
        spec = NoiseSpec(kinds[mode], config.low, config.high, config.resample_dt, config.seed)
        synthesis = "true" if mode == "quasistatic" else config.synthesis
        for name, factory in comparison_factories(config).items():
            curves[f"{mode}_{name}"] = ensemble_leakage(
                initial_state_plus(),
                factory,
                spec,
                channels=config.channels,
                dt_out=config.dt_out,
                t_end=config.window,
                synthesis=synthesis,
                average=config.average,
                threads=threads,
            )
    return curves
