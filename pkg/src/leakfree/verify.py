"""Property suites behind ``leakfree verify``.

Each suite draws its own random instances from a fixed seed, measures the
worst deviation from the property it checks and compares that with a
tolerance. A structured error raised inside a suite counts as a failure
and is reported by class name.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from leakfree.algebra import M1, M2, M3, AxisAngle, commutator, euler_from_axis, euler_product, power_identity_check
from leakfree.errors import LeakfreeError
from leakfree.estimate import estimate_from_fraction, exact_populations, matched_beta1
from leakfree.linalg3 import expm_closed_su2, expm_eig, unitary_distance
from leakfree.synth import ideal_x_circuit, ideal_x_unitary, ideal_z_circuit

DEFAULT_TOLERANCES = {
    "algebra": 1e-12,
    "euler": 1e-10,
    "x_synthesis": 1e-10,
    "z_synthesis": 1e-12,
    "exponential_oracle": 1e-11,
    "estimation_round_trip": 1e-6,
}


@dataclass
class SuiteResult:
    name: str
    passed: bool
    worst: float
    tolerance: float
    instances: int
    seconds: float
    error: str | None = None


def _algebra(rng, n):
    worst = max(
        float(np.max(np.abs(commutator(M1, M2) - 1j * M3))),
        float(np.max(np.abs(commutator(M2, M3) - 1j * M1))),
        float(np.max(np.abs(commutator(M3, M1) - 1j * M2))),
    )
    mp = np.linalg.matrix_power
    for M in (M1, M2, M3):
        sq = M @ M
        for k in range(1, 9):
            worst = max(worst, float(np.max(np.abs(mp(M, 2 * k) - sq))), float(np.max(np.abs(mp(M, 2 * k + 1) - M))))
    return worst, 3 * 8


def _euler(rng, n):
    worst = 0.0
    for _ in range(n):
        phi = rng.uniform(0.05, math.pi / 2 - 0.05)
        ax = AxisAngle(math.cos(phi), math.sin(phi), rng.uniform(0.1, 2 * math.pi - 0.1))
        sol = euler_from_axis(ax)
        worst = max(worst, unitary_distance(euler_product(sol.angles), ax.matrix()))
    return worst, n


def _x_synthesis(rng, n):
    worst = 0.0
    for _ in range(n):
        g, d, th = rng.uniform(1, 5), rng.uniform(0.05, 1.0), rng.uniform(0.1, 2 * math.pi - 0.1)
        circuit, res = ideal_x_circuit(g, d, th)
        U = circuit.unitary(d)
        leak = max(abs(U[0, 2]), abs(U[1, 2]), abs(U[2, 0]), abs(U[2, 1]))
        worst = max(worst, float(np.max(np.abs(U - ideal_x_unitary(res.theta_eff)))), float(leak))
    return worst, n


def _z_synthesis_factory(zeta: float):
    def run(rng, n):
        worst = 0.0
        for _ in range(n):
            eq, d, phi = rng.uniform(0.5, 5), rng.uniform(0.05, 1.0), rng.uniform(0.0, 2 * math.pi)
            U = ideal_z_circuit(eq, d, phi, zeta=zeta).unitary(d)
            worst = max(worst, float(np.max(np.abs(U - np.diag(np.diag(U))))))
        return worst, n

    return run


def _exponential_oracle(rng, n):
    worst = 0.0
    for _ in range(n):
        ab = rng.normal(size=2)
        a, b = ab / np.linalg.norm(ab)
        alpha = rng.uniform(-10, 10)
        closed = expm_closed_su2(a, b, alpha)
        # exp[i alpha N] == exp(-i H t) with H = -N, t = alpha
        worst = max(worst, float(np.max(np.abs(closed - expm_eig(-(a * M1 + b * M2), alpha)))))
    return worst, n


def _estimation(rng, n):
    worst = 0.0
    for _ in range(n):
        g, d, th = rng.uniform(1, 5), rng.uniform(0.1, 0.8), rng.uniform(0.3, 3.0)
        beta1 = matched_beta1(g, d, th)
        p = 1.0 - exact_populations(d, g, th, beta1)[0]
        worst = max(worst, abs(estimate_from_fraction(p, g, th, beta1).delta_eps_d_hat - d))
    return worst, n


def suites(zeta: float = 1.0) -> dict[str, tuple[Callable, int]]:
    return {
        "algebra": (_algebra, 1),
        "euler": (_euler, 1000),
        "x_synthesis": (_x_synthesis, 1000),
        "z_synthesis": (_z_synthesis_factory(zeta), 1000),
        "exponential_oracle": (_exponential_oracle, 1000),
        "estimation_round_trip": (_estimation, 50),
    }


def run_suites(tol: float | None = None, zeta: float = 1.0, seed: int = 0, only: list[str] | None = None) -> list[SuiteResult]:
    """Run every suite (or those in ``only``); ``tol`` overrides all tolerances."""
    out = []
    for k, (name, (fn, n)) in enumerate(suites(zeta).items()):
        if only and name not in only:
            continue
        limit = DEFAULT_TOLERANCES[name] if tol is None else tol
        rng = np.random.default_rng([seed, k])
        t0 = time.perf_counter()
        try:
            worst, count = fn(rng, n)
            out.append(SuiteResult(name, worst <= limit, worst, limit, count, time.perf_counter() - t0))
        except LeakfreeError as exc:
            out.append(
                SuiteResult(name, False, math.inf, limit, 0, time.perf_counter() - t0, f"{type(exc).__name__}: {exc}")
            )
    return out


def report(results: list[SuiteResult]) -> dict:
    return {
        "passed": all(r.passed for r in results),
        "failed": [r.name for r in results if not r.passed],
        "suites": [asdict(r) for r in results],
    }
