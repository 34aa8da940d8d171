"""Leakage-free x and z rotations built from noisy primitive pulses.

x rotation: ``exp(-i b1 H_leak) U_x(g, delta, theta) exp(-i b1 H_leak)`` is an
exact rotation about M1 once ``b1`` (and the effective angle) are solved from
the Euler relations. z rotation: at ``zeta == 1`` the leakage factor of
``U_z`` commutes with ``H_z`` and is undone by one leakage-only evolution.

Circuits are stored in time order; the propagator of a circuit is the
product of its step propagators with the first step rightmost.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from leakfree.algebra import AxisAngle, EulerAngles, euler_from_axis, euler_product, euler_relations_residual
from leakfree.errors import NoBranch, ResidualTooLarge, ZeroCoupling, ZeroEpsQ, ZetaNotOne
from leakfree.linalg3 import expm_closed_su2, expm_eig
from leakfree.model import (
    TWO_PI,
    h_leak,
    h_x,
    h_z,
    leak_duration,
    noisy_x_gate,
    x_duration,
    z_duration,
)

SYNTH_TOL = 1e-10


class PulseKind(str, enum.Enum):
    X_PULSE = "X_PULSE"
    Z_PULSE = "Z_PULSE"
    LEAK_FREE_EVOLUTION = "LEAK_FREE_EVOLUTION"


@dataclass(frozen=True)
class PulseStep:
    kind: PulseKind
    amplitude: float  # g for X_PULSE, eps_q for Z_PULSE, 0 otherwise (GHz)
    duration: float  # ns
    nominal_angle: float  # rad

    def __post_init__(self):
        object.__setattr__(self, "kind", PulseKind(self.kind))
        if not self.duration >= 0:
            raise ValueError(f"negative or NaN step duration {self.duration!r}")

    def unitary(self, delta_eps_d: float) -> np.ndarray:
        """Propagator of this step while the leakage coupling is ``delta_eps_d``."""
        if self.kind is PulseKind.X_PULSE:
            return propagator(delta_eps_d, self.duration, g=self.amplitude)
        if self.kind is PulseKind.Z_PULSE:
            return propagator(delta_eps_d, self.duration, eps_q=self.amplitude)
        return propagator(delta_eps_d, self.duration)

    def to_json(self) -> dict:
        return {
            "kind": self.kind.value,
            "amplitude_ghz": self.amplitude,
            "duration_ns": self.duration,
            "nominal_angle_rad": self.nominal_angle,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "PulseStep":
        return cls(
            PulseKind(doc["kind"]),
            float(doc["amplitude_ghz"]),
            float(doc["duration_ns"]),
            float(doc["nominal_angle_rad"]),
        )


def propagator(delta_eps_d: float, t: float, g: float = 0.0, eps_q: float = 0.0) -> np.ndarray:
    """``exp{-i [H_z(eps_q) + H_x(g) + H_leak(delta)] t}`` at ``zeta == 1``.

    Closed forms cover the pulse kinds a circuit contains (``g`` and
    ``eps_q`` not both non-zero); anything else goes through ``expm_eig``.
    """
    if g != 0.0 and eps_q != 0.0:
        return expm_eig(h_z(eps_q) + h_x(g) + h_leak(delta_eps_d), t)
    if g != 0.0:
        r = math.hypot(g, delta_eps_d)
        return expm_closed_su2(g / r, delta_eps_d / r, -TWO_PI * r * t)
    leak = expm_closed_su2(0.0, 1.0, -TWO_PI * delta_eps_d * t)
    if eps_q == 0.0:
        return leak
    phases = np.exp(-1j * math.pi * eps_q * t * np.array([1.0, -1.0, -1.0]))
    return phases[:, None] * leak


@dataclass(frozen=True)
class Circuit:
    steps: tuple[PulseStep, ...]
    synthesized_for: float  # nominal delta_eps_d, GHz
    target: str
    theta_eff: float | None = None
    residual: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        if not self.steps:
            raise ValueError("a circuit needs at least one step")

    @property
    def duration(self) -> float:
        return float(sum(s.duration for s in self.steps))

    def boundaries(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum([s.duration for s in self.steps])])

    def unitary(self, delta_eps_d: float | None = None) -> np.ndarray:
        """Composite propagator for a constant coupling (default: the design value)."""
        d = self.synthesized_for if delta_eps_d is None else delta_eps_d
        U = np.eye(3, dtype=complex)
        for step in self.steps:
            U = step.unitary(d) @ U
        return U

    def then(self, other: "Circuit", target: str | None = None) -> "Circuit":
        """Run ``self`` first, then ``other``."""
        return Circuit(
            self.steps + other.steps,
            self.synthesized_for,
            target or f"({other.target}) * ({self.target})",
        )

    def to_json(self) -> dict:
        return {
            "steps": [s.to_json() for s in self.steps],
            "metadata": {
                "synthesized_delta_eps_d_ghz": self.synthesized_for,
                "theta_eff_rad": self.theta_eff,
                "residual": self.residual,
                "target": self.target,
            },
        }

    @classmethod
    def from_json(cls, doc: dict) -> "Circuit":
        meta = doc.get("metadata", {})
        return cls(
            tuple(PulseStep.from_json(s) for s in doc["steps"]),
            float(meta.get("synthesized_delta_eps_d_ghz", 0.0)),
            meta.get("target", ""),
            meta.get("theta_eff_rad"),
            meta.get("residual"),
        )


@dataclass(frozen=True)
class SynthesisResult:
    """Solved parameters of the three-gate x circuit.

    ``phi1 = 2 pi delta beta1`` is the angle of each leakage correction
    ``exp(-i beta1 H_leak)``; ``phi2 = 2 pi g beta2`` and the circuit realizes
    the ideal rotation ``exp(-i theta_eff M1 / 2)`` with ``theta_eff = -2 phi2``.
    """

    g: float
    delta_eps_d: float
    theta: float
    alpha: float
    a: float
    b: float
    phi1: float
    phi2: float
    beta1: float  # ns
    beta2: float  # ns
    theta_eff: float
    sign_branch: tuple[int, int]
    residual: float
    relation_residuals: tuple[float, float, float] = field(default=(0.0, 0.0, 0.0))

    def to_json(self) -> dict:
        return {
            "alpha": self.alpha,
            "a": self.a,
            "b": self.b,
            "phi1": self.phi1,
            "phi2": self.phi2,
            "beta1_ns": self.beta1,
            "beta2_ns": self.beta2,
            "theta_eff_rad": self.theta_eff,
            "sign_branch": list(self.sign_branch),
            "residual": self.residual,
        }


def x_axis_parameters(g: float, delta_eps_d: float, theta: float) -> tuple[float, float, float]:
    """``(alpha, a, b)`` with ``U_x(g, delta, theta) == exp[i alpha (a M1 + b M2)]``."""
    alpha = (theta / (2 * g)) * math.hypot(g, delta_eps_d)
    return alpha, -theta / (2 * alpha), -theta * delta_eps_d / (2 * g * alpha)


def solve_x_constraints(g: float, delta_eps_d: float, theta: float, tol: float = SYNTH_TOL) -> SynthesisResult:
    """Solve ``(beta1, beta2)`` so the sandwiched x gate is leakage free.

    Raises
    ------
    ZeroCoupling
        ``g <= 0``.
    NoBranch, ResidualTooLarge
        No sign branch reproduces ``U_x`` within ``tol``.
    """
    if g <= 0:
        raise ZeroCoupling("g must be positive")
    if delta_eps_d < 0:
        raise ValueError("delta_eps_d must be non-negative")
    if abs(theta) < 1e-12:
        return SynthesisResult(g, delta_eps_d, theta, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, (0, 0), 0.0)
    if not 0.0 < theta < TWO_PI:
        raise ValueError("theta must lie in (0, 2*pi)")

    alpha, a, b = x_axis_parameters(g, delta_eps_d, theta)
    sol = euler_from_axis(AxisAngle(a, b, alpha), tol=tol)
    phi1, phi2 = sol.angles.phi1, sol.angles.phi2
    if delta_eps_d == 0.0:
        if abs(phi1) > tol:
            raise NoBranch("noiseless case did not reduce to phi1 = 0")
        phi1 = 0.0
    rel = euler_relations_residual(phi1, phi2, a, b, alpha)
    sandwich = euler_product(EulerAngles(phi1, phi2, phi1))
    identity_res = float(np.max(np.abs(sandwich - noisy_x_gate(g, delta_eps_d, theta))))
    residual = max(identity_res, float(np.max(np.abs(rel))))
    if residual > tol:
        raise ResidualTooLarge(f"x synthesis residual {residual:.3e} exceeds {tol:.1e}")
    return SynthesisResult(
        g=g,
        delta_eps_d=delta_eps_d,
        theta=theta,
        alpha=alpha,
        a=a,
        b=b,
        phi1=phi1,
        phi2=phi2,
        beta1=phi1 / (TWO_PI * delta_eps_d) if delta_eps_d > 0 else 0.0,
        beta2=phi2 / (TWO_PI * g),
        theta_eff=-2.0 * phi2,
        sign_branch=sol.sign_branch,
        residual=residual,
        relation_residuals=tuple(float(r) for r in rel),
    )


def ideal_x_circuit(g: float, delta_eps_d: float, theta: float) -> tuple[Circuit, SynthesisResult]:
    """Leak correction, noisy x pulse, leak correction (each correction ``exp(-i phi1 M2)``)."""
    res = solve_x_constraints(g, delta_eps_d, theta)
    t_leak = leak_duration(delta_eps_d, res.phi1) if delta_eps_d > 0 else 0.0
    leak = PulseStep(PulseKind.LEAK_FREE_EVOLUTION, 0.0, t_leak, res.phi1)
    pulse = PulseStep(PulseKind.X_PULSE, g, x_duration(g, theta), theta)
    circuit = Circuit(
        (leak, pulse, leak),
        delta_eps_d,
        f"Rx({res.theta_eff!r})",
        theta_eff=res.theta_eff,
        residual=res.residual,
    )
    return circuit, res


def ideal_x_unitary(theta_eff: float) -> np.ndarray:
    """``exp(-i theta_eff M1 / 2)``: the leakage-free x rotation."""
    return expm_closed_su2(1.0, 0.0, -theta_eff / 2)


def ideal_z_unitary(phi: float) -> np.ndarray:
    """``exp(-i H_z t_z)`` at ``zeta == 1``: ``diag(e^{-i phi/2}, e^{i phi/2}, e^{i phi/2})``."""
    return np.diag(np.exp(-1j * phi / 2 * np.array([1.0, -1.0, -1.0])))


def ideal_z_circuit(
    eps_q: float,
    delta_eps_d: float,
    phi: float,
    zeta: float = 1.0,
    mode: str = "angle",
) -> Circuit:
    """Noisy z pulse followed by the leakage evolution undoing its leak factor.

    ``mode="angle"`` sizes the correction from ``delta_eps_d`` so that its
    angle is exactly the inverse one mod 2*pi. ``mode="duration"`` gives the
    correction the z pulse's own length, which needs no knowledge of
    ``delta_eps_d`` but does not cancel the leakage factor.
    """
    if zeta != 1.0:
        raise ZetaNotOne(f"z synthesis needs zeta == 1 (got {zeta!r})")
    if eps_q == 0:
        raise ZeroEpsQ("eps_q must be non-zero")
    if mode not in ("angle", "duration"):
        raise ValueError(f"unknown z correction mode {mode!r}")
    # Rotations by phi and phi + 2*pi differ by a global sign at zeta == 1.
    phi_r = float(np.remainder(phi, TWO_PI)) if eps_q > 0 else -float(np.remainder(-phi, TWO_PI))
    t_z = z_duration(eps_q, phi_r)
    inverse_angle = -TWO_PI * delta_eps_d * t_z
    if mode == "angle":
        t_c = leak_duration(delta_eps_d, inverse_angle) if delta_eps_d > 0 else 0.0
    else:
        t_c = t_z
    steps = (
        PulseStep(PulseKind.Z_PULSE, eps_q, t_z, phi_r),
        PulseStep(PulseKind.LEAK_FREE_EVOLUTION, 0.0, t_c, inverse_angle),
    )
    return Circuit(steps, delta_eps_d, f"Rz({phi!r})")


def _wrap_pi(x):
    return np.remainder(np.asarray(x) + np.pi, TWO_PI) - np.pi


def theta_eff_of(g: float, delta_eps_d: float, theta: float) -> float:
    return solve_x_constraints(g, delta_eps_d, theta).theta_eff


def theta_for_effective_angle(
    g: float, delta_eps_d: float, target: float, grid: int = 512
) -> float:
    """Pulse angle ``theta`` whose synthesized x rotation equals ``Rx(target)``.

    Equality is on the logical block up to a global phase, i.e. ``theta_eff``
    is matched mod 2*pi. Bracketed roots of the wrapped mismatch are located
    on a grid over (0, 2*pi) and refined with Brent's method; the root with
    the smallest |theta - target (mod 2*pi)| wins.
    """
    if delta_eps_d == 0.0:
        t = float(np.remainder(target, TWO_PI))
        if 0.0 < t < TWO_PI:
            return t
        raise NoBranch("noiseless x rotation by a multiple of 2*pi needs no pulse")

    def mismatch(th: float) -> float:
        return float(_wrap_pi(theta_eff_of(g, delta_eps_d, th) - target))

    thetas = np.linspace(1e-6, TWO_PI - 1e-6, grid)
    vals = np.array([mismatch(t) for t in thetas])
    roots = []
    for k in range(grid - 1):
        v0, v1 = vals[k], vals[k + 1]
        if v0 == 0.0:
            roots.append(thetas[k])
        elif v0 * v1 < 0 and abs(v1 - v0) < np.pi:
            roots.append(brentq(mismatch, thetas[k], thetas[k + 1], xtol=1e-15, rtol=1e-15))
    if not roots:
        raise NoBranch(f"no pulse angle in (0, 2*pi) reaches Rx({target!r})")
    return float(min(roots, key=lambda th: abs(_wrap_pi(th - target))))


def logical_rz(phi: float) -> np.ndarray:
    return np.diag(np.exp(-1j * phi / 2 * np.array([1.0, -1.0])))


def logical_rx(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


def arbitrary_rotation_circuit(
    zxz_angles: tuple[float, float, float],
    g: float,
    eps_q: float,
    delta_eps_d: float,
) -> Circuit:
    """Leakage-free ``Rz(phi_a) Rx(theta_b) Rz(phi_c)`` (``Rz(phi_c)`` runs first)."""
    phi_a, theta_b, phi_c = zxz_angles
    parts = [ideal_z_circuit(eps_q, delta_eps_d, phi_c)]
    if abs(_wrap_pi(theta_b)) > 1e-15:
        theta = theta_for_effective_angle(g, delta_eps_d, theta_b)
        parts.append(ideal_x_circuit(g, delta_eps_d, theta)[0])
    parts.append(ideal_z_circuit(eps_q, delta_eps_d, phi_a))
    circuit = parts[0]
    for part in parts[1:]:
        circuit = circuit.then(part)
    return Circuit(
        circuit.steps,
        delta_eps_d,
        f"Rz({phi_a!r}) Rx({theta_b!r}) Rz({phi_c!r})",
    )


def logical_zxz(zxz_angles: tuple[float, float, float]) -> np.ndarray:
    phi_a, theta_b, phi_c = zxz_angles
    return logical_rz(phi_a) @ logical_rx(theta_b) @ logical_rz(phi_c)


def bare_x_circuit(g: float, theta: float, delta_eps_d: float = 0.0) -> Circuit:
    """The uncorrected noisy x pulse."""
    if g <= 0:
        raise ZeroCoupling("g must be positive")
    step = PulseStep(PulseKind.X_PULSE, g, x_duration(g, theta), theta)
    return Circuit((step,), delta_eps_d, f"Rx({theta!r}) uncorrected")


def default_zxz_angles(theta: float) -> tuple[float, float, float]:
    """Placeholder ``(phi_a, theta_b, phi_c)`` with ``Rz Rx Rz == Rx(theta)`` noiselessly.

    ``Rz(pi) Rx(2 pi - theta) Rz(pi)`` equals ``Rx(theta)`` on the logical
    block, and every angle is a positive pulse area.
    """
    return (math.pi, float(np.remainder(TWO_PI - theta, TWO_PI)), math.pi)


def zxz_composite_circuit(
    g: float,
    eps_q: float,
    zxz_angles: tuple[float, float, float],
    delta_eps_d: float = 0.0,
) -> Circuit:
    """Uncorrected z-x-z composite of noisy pulses, ``Rz(phi_c)`` first."""
    if g <= 0:
        raise ZeroCoupling("g must be positive")
    if eps_q == 0:
        raise ZeroEpsQ("eps_q must be non-zero")
    phi_a, theta_b, phi_c = (float(np.remainder(x, TWO_PI)) for x in zxz_angles)
    steps = (
        PulseStep(PulseKind.Z_PULSE, eps_q, z_duration(eps_q, phi_c), phi_c),
        PulseStep(PulseKind.X_PULSE, g, x_duration(g, theta_b), theta_b),
        PulseStep(PulseKind.Z_PULSE, eps_q, z_duration(eps_q, phi_a), phi_a),
    )
    return Circuit(steps, delta_eps_d, f"Rz({phi_a!r}) Rx({theta_b!r}) Rz({phi_c!r}) uncorrected")
