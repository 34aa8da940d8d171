"""Hamiltonians of the three-level model and the noisy primitive gates.

All constructors take frequencies in GHz and return angular-frequency
matrices (rad/ns, i.e. multiplied by 2*pi), so that ``exp(-i H t)`` with
``t`` in ns is the propagator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from leakfree.algebra import M1, M2
from leakfree.errors import ZeroCoupling, ZeroEpsQ
from leakfree.linalg3 import expm_closed_su2, expm_eig

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ModelParams:
    """Parameters of ``H = H_z + H_x + H_leak`` (GHz, ``zeta`` dimensionless)."""

    eps_q: float = 0.0
    g: float = 0.0
    xi: float = 0.0
    zeta: float = 1.0

    def __post_init__(self):
        if self.g < 0:
            raise ValueError("g must be non-negative")
        if not math.isfinite(self.zeta):
            raise ValueError("zeta must be finite")

    def to_json(self) -> dict:
        return {
            "eps_q_ghz": self.eps_q,
            "g_ghz": self.g,
            "delta_eps_d_ghz": self.xi,
            "zeta": self.zeta,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "ModelParams":
        return cls(
            eps_q=float(doc.get("eps_q_ghz", 0.0)),
            g=float(doc.get("g_ghz", 0.0)),
            xi=float(doc.get("delta_eps_d_ghz", 0.0)),
            zeta=float(doc.get("zeta", 1.0)),
        )


@dataclass(frozen=True)
class TripleDotParams:
    """Single electron in three dots; everything in GHz.

    Build from detunings directly, or with :meth:`from_potentials` from the
    on-site potentials, in which case ``eps_d = (U1 - U3)/2`` and
    ``eps_q = U2 - (U1 + U3)/2``.
    """

    eps_d: float = 0.0
    eps_q: float = 0.0
    t_a: float = 0.0
    t_b: float = 0.0
    u1: float | None = None
    u2: float | None = None
    u3: float | None = None

    def __post_init__(self):
        # Detunings only: pick the potentials with U1 + U3 = 0.
        if self.u1 is None and self.u2 is None and self.u3 is None:
            object.__setattr__(self, "u1", self.eps_d)
            object.__setattr__(self, "u2", self.eps_q)
            object.__setattr__(self, "u3", -self.eps_d)
        elif None in (self.u1, self.u2, self.u3):
            raise ValueError("give all three potentials or none")
        else:
            if abs(self.eps_d - (self.u1 - self.u3) / 2) > 1e-12:
                raise ValueError("eps_d inconsistent with (U1 - U3)/2")
            if abs(self.eps_q - (self.u2 - (self.u1 + self.u3) / 2)) > 1e-12:
                raise ValueError("eps_q inconsistent with U2 - (U1 + U3)/2")

    @classmethod
    def from_potentials(cls, u1: float, u2: float, u3: float, t_a: float, t_b: float):
        return cls(
            eps_d=(u1 - u3) / 2,
            eps_q=u2 - (u1 + u3) / 2,
            t_a=t_a,
            t_b=t_b,
            u1=u1,
            u2=u2,
            u3=u3,
        )

    @property
    def shift(self) -> float:
        return (self.u1 + self.u3) / 2

    def to_json(self) -> dict:
        return {
            "t_a_ghz": self.t_a,
            "t_b_ghz": self.t_b,
            "u1_ghz": self.u1,
            "u2_ghz": self.u2,
            "u3_ghz": self.u3,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "TripleDotParams":
        return cls.from_potentials(
            float(doc["u1_ghz"]),
            float(doc["u2_ghz"]),
            float(doc["u3_ghz"]),
            float(doc.get("t_a_ghz", 0.0)),
            float(doc.get("t_b_ghz", 0.0)),
        )


def h_z(eps_q: float, zeta: float = 1.0) -> np.ndarray:
    return TWO_PI * (eps_q / 2) * np.diag([1.0, -1.0, -zeta]).astype(complex)


def h_x(g: float) -> np.ndarray:
    return TWO_PI * g * M1


def h_leak(xi: float) -> np.ndarray:
    return TWO_PI * xi * M2


def h_model(p: ModelParams) -> np.ndarray:
    return h_z(p.eps_q, p.zeta) + h_x(p.g) + h_leak(p.xi)


def h_triple_dot(p: TripleDotParams, include_shift: bool = True) -> np.ndarray:
    """Charge-basis Hamiltonian, optionally with the ``(U1+U3)/2`` identity shift."""
    H = np.array(
        [
            [p.eps_d, p.t_a, 0.0],
            [p.t_a, p.eps_q, p.t_b],
            [0.0, p.t_b, -p.eps_d],
        ],
        dtype=complex,
    )
    if include_shift:
        H = H + p.shift * np.eye(3)
    return TWO_PI * H


@dataclass(frozen=True)
class LogicalBasis:
    """Columns are |C>, |E>, |L> written in the charge basis |100>, |010>, |001>."""

    matrix: np.ndarray

    @classmethod
    def standard(cls) -> "LogicalBasis":
        r = 1 / math.sqrt(2)
        return cls(np.array([[0.0, r, r], [1.0, 0.0, 0.0], [0.0, r, -r]]))

    def orthonormality_residual(self) -> float:
        B = self.matrix
        return float(np.max(np.abs(B.T @ B - np.eye(3))))


def to_logical_basis(H: np.ndarray, B: LogicalBasis | None = None) -> np.ndarray:
    """``B^T H B`` with the identity part dropped.

    The dropped multiple of the identity is the mean of the C and E diagonal
    entries, which is what puts the logical block in ``+/- eps_q/2`` form.
    """
    if B is None:
        B = LogicalBasis.standard()
    if B.orthonormality_residual() > 1e-14:
        raise ValueError("basis is not orthonormal")
    Ht = B.matrix.T @ np.asarray(H, dtype=complex) @ B.matrix
    shift = 0.5 * (Ht[0, 0] + Ht[1, 1]).real
    return Ht - shift * np.eye(3)


def x_duration(g: float, theta: float) -> float:
    """Pulse length (ns) of the x gate with nominal angle ``theta``."""
    return theta / (2.0 * TWO_PI * g)


def z_duration(eps_q: float, phi: float) -> float:
    """Pulse length (ns) of the z gate with nominal angle ``phi``."""
    return phi / (TWO_PI * eps_q)


def noisy_x_gate(g: float, delta_eps_d: float, theta: float) -> np.ndarray:
    """``exp{-i [H_x(g) + H_leak(delta)] t_x}`` with ``t_x = theta / (4 pi g)``.

    Equivalent to ``exp[i(gamma1 M1 + gamma2 M2)]`` with ``gamma1 = -theta/2``
    and ``gamma2 = -theta * delta / (2 g)``.
    """
    if g == 0:
        raise ZeroCoupling("g == 0: use leak_gate for pure leakage evolution")
    if theta == 0:
        return np.eye(3, dtype=complex)
    r = math.hypot(g, delta_eps_d)
    alpha = (theta / (2 * g)) * r
    return expm_closed_su2(-g / r, -delta_eps_d / r, alpha)


def noisy_z_gate(eps_q: float, delta_eps_d: float, phi: float, zeta: float = 1.0) -> np.ndarray:
    """``exp{-i [H_z(eps_q) + H_leak(delta)] t_z}`` with ``t_z = phi / (2 pi eps_q)``."""
    if eps_q == 0:
        raise ZeroEpsQ("eps_q == 0: use leak_gate for pure leakage evolution")
    t_z = z_duration(eps_q, phi)
    if zeta != 1.0:
        return expm_eig(h_z(eps_q, zeta) + h_leak(delta_eps_d), t_z)
    # [H_z, H_leak] = 0 at zeta = 1, so the two factors split exactly.
    z = np.diag(np.exp(-1j * phi / 2 * np.array([1.0, -1.0, -1.0])))
    return z @ leak_gate(delta_eps_d, TWO_PI * delta_eps_d * t_z)


def leak_gate(delta_eps_d: float, angle: float) -> np.ndarray:
    """``exp(-i angle M2)``: free evolution under the leakage coupling alone.

    ``angle = 2 pi delta * duration``; the result has period 2*pi in
    ``angle``.
    """
    return expm_closed_su2(0.0, 1.0, -angle)


def leak_duration(delta_eps_d: float, angle: float) -> float:
    """Duration (ns) realizing ``leak_gate(angle)``, with the angle taken mod 2*pi."""
    wrapped = float(np.remainder(angle, TWO_PI))
    if wrapped == 0.0 or np.isclose(wrapped, TWO_PI, rtol=0, atol=1e-15):
        return 0.0
    if delta_eps_d <= 0:
        raise ValueError("a non-trivial leak angle needs delta_eps_d > 0")
    return wrapped / (TWO_PI * delta_eps_d)
