"""Exact leakage elimination for a qubit embedded in a three-level system.

Index convention for every 3x3 matrix: (C, E, L), i.e. two logical states
followed by the leakage state. User-facing frequencies are GHz (E/h),
times are ns and angles are radians.
"""

__version__ = "0.1.0"

from leakfree.errors import (
    LeakfreeError,
    NotHermitian,
    NotNormalized,
    DegenerateAxis,
    ResidualTooLarge,
    NoBranch,
    ZetaNotOne,
    ZeroEpsQ,
    ZeroCoupling,
    NoRoot,
)

__all__ = [
    "__version__",
    "LeakfreeError",
    "NotHermitian",
    "NotNormalized",
    "DegenerateAxis",
    "ResidualTooLarge",
    "NoBranch",
    "ZetaNotOne",
    "ZeroEpsQ",
    "ZeroCoupling",
    "NoRoot",
]
