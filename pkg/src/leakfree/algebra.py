"""The su(2) generators M1, M2, M3 inside the three-level space.

M1 couples C<->E, M2 couples E<->L and M3 couples C<->L. A rotation about an
axis in the M1-M2 plane, ``exp[i alpha (a M1 + b M2)]``, is rewritten here as
the Euler product ``exp[i phi1 M2] exp[i phi2 M1] exp[i phi3 M2]`` with
``phi3 == phi1``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from leakfree.errors import DegenerateAxis, NoBranch, NotNormalized, ResidualTooLarge
from leakfree.linalg3 import NORM_TOL, expm_closed_su2

EULER_TOL = 1e-10
DOMAIN_GUARD = 1e-12
_DEGENERATE_SIN = 1e-9


class Generator(enum.Enum):
    M1 = 1
    M2 = 2
    M3 = 3


M1 = np.array([[0, 1, 0], [1, 0, 0], [0, 0, 0]], dtype=complex)
M2 = np.array([[0, 0, 0], [0, 0, 1], [0, 1, 0]], dtype=complex)
M3 = np.array([[0, 0, -1j], [0, 0, 0], [1j, 0, 0]], dtype=complex)

_MATRICES = {Generator.M1: M1, Generator.M2: M2, Generator.M3: M3}

# M_i^2 is the projector onto the two states M_i couples.
_SQUARES = {
    Generator.M1: np.diag([1.0, 1.0, 0.0]).astype(complex),
    Generator.M2: np.diag([0.0, 1.0, 1.0]).astype(complex),
    Generator.M3: np.diag([1.0, 0.0, 1.0]).astype(complex),
}


def generator_matrix(index: Generator | int | str) -> np.ndarray:
    if isinstance(index, str):
        index = Generator[index.upper()]
    elif not isinstance(index, Generator):
        index = Generator(index)
    return _MATRICES[index].copy()


def commutator(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return A @ B - B @ A


def power_identity_check(
    index: Generator | int | str,
    n: int,
    ab: tuple[float, float] = (0.6, 0.8),
    tol: float = 1e-12,
) -> bool:
    """Check the even/odd power identities of ``M_i`` and of ``a M1 + b M2``.

    ``M_i^{2n}`` must be the rank-2 projector onto the states ``M_i`` couples
    and ``M_i^{2n+1} == M_i``; likewise ``N^{2n} == N^2`` and
    ``N^{2n+1} == N`` for ``N = a M1 + b M2`` with the supplied normalized
    ``(a, b)``.
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    a, b = ab
    if abs(a * a + b * b - 1.0) > NORM_TOL:
        raise NotNormalized("(a, b) must satisfy a^2 + b^2 = 1")
    if isinstance(index, str):
        index = Generator[index.upper()]
    elif not isinstance(index, Generator):
        index = Generator(index)
    M = _MATRICES[index]
    mp = np.linalg.matrix_power
    N = a * M1 + b * M2
    checks = [
        np.max(np.abs(mp(M, 2 * n) - _SQUARES[index])),
        np.max(np.abs(mp(M, 2 * n + 1) - M)),
        np.max(np.abs(mp(N, 2 * n) - N @ N)),
        np.max(np.abs(mp(N, 2 * n + 1) - N)),
    ]
    return bool(max(checks) <= tol)


@dataclass(frozen=True)
class EulerAngles:
    phi1: float
    phi2: float
    phi3: float


@dataclass(frozen=True)
class AxisAngle:
    a: float
    b: float
    alpha: float

    def __post_init__(self):
        if abs(self.a**2 + self.b**2 - 1.0) > NORM_TOL:
            raise NotNormalized(f"a^2 + b^2 = {self.a**2 + self.b**2!r}, expected 1")

    def matrix(self) -> np.ndarray:
        return expm_closed_su2(self.a, self.b, self.alpha)


@dataclass(frozen=True)
class EulerSolution:
    """Euler angles solved for an axis-angle rotation, plus how they were chosen.

    ``sign_branch`` holds the signs of ``sin(phi2)`` and ``sin(phi1)`` of the
    accepted branch (0 for the degenerate identity/pure-M2 cases).
    """

    angles: EulerAngles
    sign_branch: tuple[int, int]
    relation_residual: float
    product_residual: float
    degenerate: bool = False


def euler_product(angles: EulerAngles) -> np.ndarray:
    """``exp[i phi1 M2] exp[i phi2 M1] exp[i phi3 M2]`` from closed-form factors."""
    return (
        expm_closed_su2(0.0, 1.0, angles.phi1)
        @ expm_closed_su2(1.0, 0.0, angles.phi2)
        @ expm_closed_su2(0.0, 1.0, angles.phi3)
    )


def euler_lhs_matrix(phi1: float, phi2: float, phi3: float) -> np.ndarray:
    """The Euler product written out entry by entry (no matrix products)."""
    c1, s1 = np.cos(phi1), np.sin(phi1)
    c2, s2 = np.cos(phi2), np.sin(phi2)
    c3, s3 = np.cos(phi3), np.sin(phi3)
    return np.array(
        [
            [c2, 1j * s2 * c3, -s2 * s3],
            [1j * c1 * s2, c1 * c2 * c3 - s1 * s3, 1j * c1 * c2 * s3 + 1j * s1 * c3],
            [-s1 * s2, 1j * s1 * c2 * c3 + 1j * c1 * s3, -s1 * c2 * s3 + c1 * c3],
        ],
        dtype=complex,
    )


def euler_relations_residual(phi1: float, phi2: float, a: float, b: float, alpha: float) -> np.ndarray:
    """Residuals of the three independent Euler/axis-angle relations."""
    one_minus_cos = 2.0 * np.sin(0.5 * alpha) ** 2
    return np.array(
        [
            np.cos(phi2) - (1.0 - a * a * one_minus_cos),
            np.sin(phi2) * np.sin(phi1) - a * b * one_minus_cos,
            np.sin(phi2) * np.cos(phi1) - a * np.sin(alpha),
        ]
    )


def _clamp_unit(x: float, what: str) -> float:
    if abs(x) > 1.0 + DOMAIN_GUARD:
        raise NoBranch(f"{what} argument {x!r} outside [-1, 1]")
    return min(1.0, max(-1.0, x))


def _wrap(x: float) -> float:
    """Map an angle to (-pi, pi]."""
    y = np.remainder(x + np.pi, 2.0 * np.pi) - np.pi
    return np.pi if y == -np.pi else float(y)


def euler_from_axis(ax: AxisAngle, tol: float = EULER_TOL) -> EulerSolution:
    """Solve ``phi1 == phi3`` and ``phi2`` reproducing ``exp[i alpha (a M1 + b M2)]``.

    The two candidate signs of ``phi2`` (the +/- arccos branches) are each
    paired with the ``phi1`` fixed by the second and third relations, and
    with the reflected value obtained from the other arcsin branch. Every
    candidate is scored on the three relations and on the full product;
    the admissible candidate with the smallest ``|phi1|`` is returned, which
    keeps the solution continuous as ``b -> 0``.
    """
    a, b, alpha = ax.a, ax.b, ax.alpha
    target = ax.matrix()
    one_minus_cos = 2.0 * np.sin(0.5 * alpha) ** 2
    q = a * a * one_minus_cos
    cos_phi2 = _clamp_unit(1.0 - q, "arccos")
    sin_abs = np.sqrt(max(q * (2.0 - q), 0.0))

    candidates: list[tuple[float, float, tuple[int, int], bool]] = []
    if sin_abs < _DEGENERATE_SIN:
        # phi2 is 0 or pi; the first relation leaves phi1 free, so the pure-M2
        # half angle and the identity are the only candidates.
        phi2 = 0.0 if cos_phi2 > 0 else np.pi
        for phi1 in (0.0, 0.5 * alpha * b):
            candidates.append((_wrap(phi1), phi2, (0, 0), True))
    else:
        y = a * b * one_minus_cos
        x = a * np.sin(alpha)
        for s2 in (1, -1):
            sin_phi2 = s2 * sin_abs
            _clamp_unit(y / sin_phi2, "arcsin")
            phi2 = float(np.arctan2(sin_phi2, cos_phi2))
            phi1 = float(np.arctan2(y / sin_phi2, x / sin_phi2))
            for p1 in (phi1, _wrap(np.pi - phi1)):
                sgn1 = int(np.sign(np.sin(p1))) or 1
                candidates.append((p1, phi2, (s2, sgn1), False))

    scored = []
    for phi1, phi2, branch, degenerate in candidates:
        rel = float(np.max(np.abs(euler_relations_residual(phi1, phi2, a, b, alpha))))
        prod = float(np.max(np.abs(euler_product(EulerAngles(phi1, phi2, phi1)) - target)))
        if degenerate:
            rel = prod
        scored.append((phi1, phi2, branch, degenerate, rel, prod))

    admissible = [c for c in scored if c[4] <= tol and c[5] <= tol]
    if not admissible:
        if sin_abs < _DEGENERATE_SIN:
            raise DegenerateAxis(
                f"sin(phi2) ~ 0 but no consistent phi1 for a={a}, b={b}, alpha={alpha}"
            )
        best = min(scored, key=lambda c: max(c[4], c[5]))
        raise ResidualTooLarge(
            f"best Euler branch residual {max(best[4], best[5]):.3e} exceeds {tol:.1e}"
        )
    phi1, phi2, branch, degenerate, rel, prod = min(
        admissible, key=lambda c: (abs(c[0]), max(c[4], c[5]))
    )
    return EulerSolution(EulerAngles(phi1, phi2, phi1), branch, rel, prod, degenerate)
