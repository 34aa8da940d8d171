"""Fixed-size 3x3 complex linear algebra.

Two independent exponential routes live here: a spectral one (``expm_eig``)
valid for any Hermitian generator, and a closed form (``expm_closed_su2``)
for the two-generator rotations ``exp[i alpha (a M1 + b M2)]``. The rest of
the package cross-checks one against the other.

Hermitian3 / Unitary3 values are plain ``numpy`` arrays of shape (3, 3);
``check_hermitian`` and ``check_unitary`` enforce their invariants.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import minimize_scalar

from leakfree.errors import NotHermitian, NotNormalized

HERMITIAN_TOL = 1e-14
UNITARY_TOL = 1e-12
NORM_TOL = 1e-12

_PHASE_GRID = 256


def as_matrix3(m) -> np.ndarray:
    """Return ``m`` as a finite complex (3, 3) array."""
    arr = np.asarray(m, dtype=complex)
    if arr.shape != (3, 3):
        raise ValueError(f"expected a 3x3 matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix has non-finite entries")
    return arr


def hermiticity_residual(H) -> float:
    H = np.asarray(H)
    return float(np.max(np.abs(H - H.conj().T)))


def check_hermitian(H, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Validate and return ``H``; inputs are rejected, never symmetrized."""
    H = as_matrix3(H)
    res = hermiticity_residual(H)
    if res > tol:
        raise NotHermitian(f"hermiticity residual {res:.3e} exceeds {tol:.1e}")
    return H


def unitarity_residual(U) -> float:
    U = np.asarray(U)
    return float(np.max(np.abs(U @ U.conj().T - np.eye(U.shape[-1]))))


def is_unitary(U, tol: float = UNITARY_TOL) -> bool:
    return unitarity_residual(U) <= tol


def check_unitary(U, tol: float = UNITARY_TOL) -> np.ndarray:
    U = as_matrix3(U)
    res = unitarity_residual(U)
    if res > tol:
        raise ValueError(f"unitarity residual {res:.3e} exceeds {tol:.1e}")
    return U


def expm_eig(H, t: float) -> np.ndarray:
    """``exp(-i H t)`` via the real spectrum of the Hermitian ``H``.

    Parameters
    ----------
    H : array_like, shape (3, 3)
        Hermitian generator, angular-frequency units (rad/ns) when ``t`` is
        in ns.
    t : float
        Evolution time.

    Returns
    -------
    numpy.ndarray
        The unitary propagator.
    """
    H = check_hermitian(H)
    evals, vecs = np.linalg.eigh(H)
    return (vecs * np.exp(-1j * evals * t)) @ vecs.conj().T


def expm_closed_su2(a: float, b: float, alpha: float) -> np.ndarray:
    """Closed form of ``exp[i alpha (a M1 + b M2)]`` for ``a**2 + b**2 == 1``."""
    if abs(a * a + b * b - 1.0) > NORM_TOL:
        raise NotNormalized(f"a^2 + b^2 = {a * a + b * b!r}, expected 1")
    c = np.cos(alpha)
    s = np.sin(alpha)
    # cos(alpha) - 1 without cancellation for small alpha
    cm1 = -2.0 * np.sin(0.5 * alpha) ** 2
    return np.array(
        [
            [1.0 + a * a * cm1, 1j * a * s, a * b * cm1],
            [1j * a * s, c, 1j * b * s],
            [a * b * cm1, 1j * b * s, 1.0 + b * b * cm1],
        ],
        dtype=complex,
    )


def _phase_mismatch(U: np.ndarray, V: np.ndarray, chi: float) -> float:
    return float(np.max(np.abs(U - np.exp(1j * chi) * V)))


def unitary_distance(U, V) -> float:
    """Max-entry distance between ``U`` and ``V`` modulo a global phase.

    The phase is scanned on a 256-point grid, refined by bounded Brent
    search around the best grid point, and also tried at the phase of
    ``tr(V^dagger U)``; the smallest mismatch wins.
    """
    U = np.asarray(U, dtype=complex)
    V = np.asarray(V, dtype=complex)
    grid = np.linspace(0.0, 2.0 * np.pi, _PHASE_GRID, endpoint=False)
    diffs = np.abs(U[None, :, :] - np.exp(1j * grid)[:, None, None] * V[None, :, :])
    scan = diffs.reshape(_PHASE_GRID, -1).max(axis=1)
    k = int(np.argmin(scan))
    step = grid[1] - grid[0]
    refined = minimize_scalar(
        lambda x: _phase_mismatch(U, V, x),
        bounds=(grid[k] - step, grid[k] + step),
        method="bounded",
        options={"xatol": 1e-13},
    )
    best = min(float(scan[k]), float(refined.fun))
    overlap = np.trace(V.conj().T @ U)
    if abs(overlap) > 0:
        best = min(best, _phase_mismatch(U, V, float(np.angle(overlap))))
    return best
