"""Inverse inertia matrix candidates.

Four ways of building the 3x3 map ``W`` from a contact impulse to the
contact-point velocity jump, plus the operational-space mass used by the
classical algebraic impulse rule:

``gm``
    upper-left block of ``J inv(M) J^T`` (generalized momentum).
``em``
    upper-left block of ``inv(J inv(M) J^T)``; a mass, not an IIM.
``crb``
    the composite rigid body carried to the contact point, joints locked.
``crb_flex``
    ``crb`` plus the upper-left block of ``J_cp inv(M) J^T``, where ``J_cp``
    is the relative Jacobian between centroidal frame and contact point.

All blocks are translational because of the twist layout in
:mod:`robot_impact.spatial`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .chain import (
    ChainModel,
    body_jacobian,
    centroidal_state,
    centroidal_to_contact,
    cholesky_inertia,
    relative_contact_jacobian,
)
from .errors import InputError, SingularOperationalInertia
from .spatial import SpatialTransform, invert, skew

METHODS = ("gm", "em", "crb", "crb_flex")
_SYMMETRIC = {"gm", "em", "crb"}


@dataclass(frozen=True)
class InverseInertiaMatrix:
    w: np.ndarray
    method: str
    frame: str = "contact"

    def __post_init__(self):
        w = np.array(self.w, dtype=float)
        if w.shape != (3, 3):
            raise InputError("inverse inertia matrix must be 3x3")
        if self.method not in METHODS:
            raise InputError(f"unknown IIM method {self.method!r}")
        if self.method in _SYMMETRIC:
            scale = np.abs(w).max()
            if np.abs(w - w.T).max() > 1e-10 * max(scale, 1.0):
                raise InputError(f"{self.method} IIM is not symmetric")
            low = np.linalg.eigvalsh(0.5 * (w + w.T)).min()
            # fewer than three contact DOF leave W_gm singular but never indefinite
            if self.method == "gm" and low < -1e-12 * max(scale, 1.0):
                raise InputError("gm IIM is not positive semidefinite")
            if self.method != "gm" and low <= 0:
                raise InputError(f"{self.method} IIM is not positive definite")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)

    def along(self, normal) -> float:
        n = np.asarray(normal, dtype=float)
        return float(n @ self.w @ n)


def _jm_jt(model: ChainModel, q):
    J = body_jacobian(model, q, "contact")
    chol = cholesky_inertia(model, q)
    return J, chol, J @ linalg.cho_solve(chol, J.T)


def operational_inverse_inertia(model: ChainModel, q) -> np.ndarray:
    """The full 6x6 ``J inv(M) J^T`` at the contact frame."""
    return _jm_jt(model, q)[2]


def iim_gm(model: ChainModel, q) -> InverseInertiaMatrix:
    A = operational_inverse_inertia(model, q)
    return InverseInertiaMatrix(0.5 * (A[:3, :3] + A[:3, :3].T), "gm")


def em_matrix(model: ChainModel, q, allow_pinv: bool = False) -> np.ndarray:
    """Upper-left block of the inverse (not the inverse of the block).

    Rank-deficient systems (fewer than six effective DOF, or a kinematic
    singularity) raise unless ``allow_pinv`` is set.
    """
    A = operational_inverse_inertia(model, q)
    s = np.linalg.svd(A, compute_uv=False)
    if s[-1] <= 1e-12 * s[0]:
        if not allow_pinv:
            raise SingularOperationalInertia(
                f"J inv(M) J^T is rank deficient (rank {int((s > 1e-12 * s[0]).sum())} < 6)"
            )
        lam = np.linalg.pinv(A, rcond=1e-12, hermitian=True)
    else:
        lam = np.linalg.inv(A)
    block = lam[:3, :3]
    return 0.5 * (block + block.T)


def algebraic_impulse(model: ChainModel, q, v_pre, e_r: float) -> np.ndarray:
    """Classical rule ``p = (1 + e_r) m_em v_pre`` (sign follows ``v_pre``)."""
    if not 0.0 <= e_r <= 1.0:
        raise InputError("restitution coefficient must lie in [0, 1]")
    return (1.0 + e_r) * em_matrix(model, q) @ np.asarray(v_pre, dtype=float)


def crb_inverse_inertia(mass: float, inertia_com, contact_to_centroidal: SpatialTransform) -> np.ndarray:
    """Closed form ``I/m - R^T [t] inv(I) [t] R`` of a free rigid body.

    ``contact_to_centroidal`` maps contact-frame coordinates into the
    centroidal frame, so ``t`` is the contact point seen from the COM.
    """
    R, t = contact_to_centroidal.rotation, contact_to_centroidal.translation
    T = skew(t)
    return np.eye(3) / mass - R.T @ T @ np.linalg.solve(inertia_com, T) @ R


def crb_inverse_inertia_adjoint(crb_inertia: np.ndarray, centroidal_to_contact: SpatialTransform) -> np.ndarray:
    """The same block obtained as ``Ad inv(I_G) Ad^T`` on the full 6x6 operators."""
    ad = centroidal_to_contact.adjoint()
    full = ad @ np.linalg.solve(crb_inertia, ad.T)
    return full[:3, :3]


def iim_crb(model: ChainModel, q) -> InverseInertiaMatrix:
    cs = centroidal_state(model, q, np.zeros(model.dof))
    to_c = invert(centroidal_to_contact(model, q))
    w = crb_inverse_inertia(cs.mass, cs.rotational_inertia, to_c)
    return InverseInertiaMatrix(0.5 * (w + w.T), "crb")


def iim_flex_correction(model: ChainModel, q) -> np.ndarray:
    J_p = body_jacobian(model, q, "contact")
    chol = cholesky_inertia(model, q)
    J_cp = relative_contact_jacobian(model, q)
    return (J_cp @ linalg.cho_solve(chol, J_p.T))[:3, :3]


def iim_crb_flex(model: ChainModel, q) -> InverseInertiaMatrix:
    # raw sum; no symmetrization
    return InverseInertiaMatrix(iim_crb(model, q).w + iim_flex_correction(model, q), "crb_flex")


def all_iims(model: ChainModel, q) -> dict[str, InverseInertiaMatrix]:
    return {
        "gm": iim_gm(model, q),
        "crb": iim_crb(model, q),
        "crb_flex": iim_crb_flex(model, q),
    }
