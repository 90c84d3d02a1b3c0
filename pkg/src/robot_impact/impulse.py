"""Normal impulse along a contact with no tangential impulse.

With ``v_n = n . v`` and ``dv_n/dp_n = n^T W n > 0`` the normal velocity is an
affine function of the normal impulse, so every quantity here is closed form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .chain import ChainModel, body_jacobian, cholesky_inertia
from .errors import InputError, InvalidScenario, InvalidTarget
from .iim import InverseInertiaMatrix


@dataclass(frozen=True)
class ContactScenario:
    w: InverseInertiaMatrix
    normal: np.ndarray
    v_pre: np.ndarray

    def __post_init__(self):
        n = np.array(self.normal, dtype=float)
        v = np.array(self.v_pre, dtype=float)
        if n.shape != (3,) or v.shape != (3,):
            raise InvalidScenario("normal and pre-impact velocity must be 3-vectors")
        if abs(np.linalg.norm(n) - 1.0) > 1e-12:
            raise InvalidScenario("normal must have unit norm")
        if not n @ v < 0:
            raise InvalidScenario("pre-impact velocity must approach the surface (n . v < 0)")
        if not self.w.along(n) > 0:
            raise InvalidScenario(f"n^T W n is not positive for method {self.w.method}")
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "v_pre", v)

    @classmethod
    def approaching(cls, w: InverseInertiaMatrix, normal, speed: float) -> ContactScenario:
        """Scenario moving at ``speed`` along ``-normal``."""
        n = np.asarray(normal, dtype=float)
        return cls(w, n, -speed * n)

    @property
    def v_n_pre(self) -> float:
        return float(self.normal @ self.v_pre)


def effective_mass(s: ContactScenario) -> float:
    return 1.0 / s.w.along(s.normal)


def impulse_for_velocity(s: ContactScenario, v_n: float) -> float:
    if v_n < s.v_n_pre:
        raise InvalidTarget(f"target normal velocity {v_n} is below the pre-impact value {s.v_n_pre}")
    return effective_mass(s) * (v_n - s.v_n_pre)


def compression_end_impulse(s: ContactScenario) -> float:
    return -s.v_n_pre / s.w.along(s.normal)


def restitution_end_impulse(s: ContactScenario, e_r: float) -> float:
    if not 0.0 <= e_r <= 1.0:
        raise InputError("restitution coefficient must lie in [0, 1]")
    return (1.0 + e_r) * compression_end_impulse(s)


def joint_velocity_jump(model: ChainModel, q, impulse) -> np.ndarray:
    """``inv(M) J^T [p; 0]`` for a pure force impulse at the contact point."""
    J = body_jacobian(model, q, "contact")
    chol = cholesky_inertia(model, q)
    return linalg.cho_solve(chol, J[:3].T @ np.asarray(impulse, dtype=float))
