"""Frame-tagged SE(3) transforms, twists, wrenches and spatial inertias.

Conventions
-----------
A :class:`SpatialTransform` ``T`` with ``from_frame="a"`` and ``to_frame="b"``
maps point coordinates from frame ``a`` into frame ``b``::

    p_b = R @ p_a + t

so ``t`` is the origin of ``a`` expressed in ``b``.

Twists and wrenches are 6-vectors with the translational part first::

    twist  = [v; w]   v: velocity of the point at the frame origin, w: angular velocity
    wrench = [f; m]   f: force, m: moment about the frame origin

With ``[t]`` the skew matrix of ``t`` (``[t] @ y == cross(t, y)``), the adjoint
and its dual are::

    Ad(T)   = [[R, [t] R],        twist_b  = Ad(T) @ twist_a
               [0,     R]]
    Ad*(T)  = [[R,     0],        wrench_b = Ad*(T) @ wrench_a
               [[t] R, R]]

``Ad*(T) == inv(Ad(T)).T``, which is what makes the power pairing
``wrench . twist`` frame independent. The upper-left 3x3 block of any 6x6
operator built from these is therefore the translational block.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import FrameError, InputError

TOL = 1e-10


def skew(v) -> np.ndarray:
    x, y, z = np.asarray(v, dtype=float)
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def rotation_about(axis, angle: float) -> np.ndarray:
    """Rodrigues rotation about a unit ``axis``."""
    a = np.asarray(axis, dtype=float)
    a = a / np.linalg.norm(a)
    K = skew(a)
    return np.eye(3) + np.sin(angle) * K + (1.0 - np.cos(angle)) * (K @ K)


def rpy_to_rotation(roll: float, pitch: float, yaw: float) -> np.ndarray:
    """Fixed-axis roll/pitch/yaw (URDF convention): ``Rz(yaw) Ry(pitch) Rx(roll)``."""
    return (
        rotation_about((0, 0, 1), yaw)
        @ rotation_about((0, 1, 0), pitch)
        @ rotation_about((1, 0, 0), roll)
    )


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q @ np.diag(np.sign(np.diag(r)))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


def _check_frame(expected: str, got: str, what: str) -> None:
    if expected != got:
        raise FrameError(f"{what} is expressed in frame {got!r}, transform expects {expected!r}")


@dataclass(frozen=True)
class SpatialTransform:
    rotation: np.ndarray
    translation: np.ndarray
    from_frame: str
    to_frame: str

    def __post_init__(self):
        R = _frozen(self.rotation)
        t = _frozen(self.translation)
        if R.shape != (3, 3) or t.shape != (3,):
            raise InputError("rotation must be 3x3 and translation a 3-vector")
        if np.abs(R.T @ R - np.eye(3)).max() > TOL or abs(np.linalg.det(R) - 1.0) > TOL:
            raise InputError("rotation is not a proper orthonormal matrix")
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls, from_frame: str, to_frame: str | None = None) -> SpatialTransform:
        return cls(np.eye(3), np.zeros(3), from_frame, to_frame if to_frame is not None else from_frame)

    @classmethod
    def from_translation(cls, t, from_frame: str, to_frame: str) -> SpatialTransform:
        return cls(np.eye(3), t, from_frame, to_frame)

    @classmethod
    def from_matrix(cls, g, from_frame: str, to_frame: str) -> SpatialTransform:
        g = np.asarray(g, dtype=float)
        return cls(g[:3, :3], g[:3, 3], from_frame, to_frame)

    def matrix(self) -> np.ndarray:
        g = np.eye(4)
        g[:3, :3] = self.rotation
        g[:3, 3] = self.translation
        return g

    def apply(self, point) -> np.ndarray:
        return self.rotation @ np.asarray(point, dtype=float) + self.translation

    def adjoint(self) -> np.ndarray:
        R, t = self.rotation, self.translation
        ad = np.zeros((6, 6))
        ad[:3, :3] = R
        ad[:3, 3:] = skew(t) @ R
        ad[3:, 3:] = R
        return ad

    def coadjoint(self) -> np.ndarray:
        R, t = self.rotation, self.translation
        ad = np.zeros((6, 6))
        ad[:3, :3] = R
        ad[3:, :3] = skew(t) @ R
        ad[3:, 3:] = R
        return ad

    def relabel(self, from_frame: str, to_frame: str) -> SpatialTransform:
        return SpatialTransform(self.rotation, self.translation, from_frame, to_frame)


def compose(outer: SpatialTransform, inner: SpatialTransform) -> SpatialTransform:
    """``outer o inner``: first ``inner`` (a -> b), then ``outer`` (b -> c)."""
    _check_frame(outer.from_frame, inner.to_frame, "inner transform output")
    return SpatialTransform(
        outer.rotation @ inner.rotation,
        outer.rotation @ inner.translation + outer.translation,
        inner.from_frame,
        outer.to_frame,
    )


def invert(T: SpatialTransform) -> SpatialTransform:
    Rt = T.rotation.T
    return SpatialTransform(Rt, -Rt @ T.translation, T.to_frame, T.from_frame)


@dataclass(frozen=True)
class Twist:
    linear: np.ndarray
    angular: np.ndarray
    frame: str

    def __post_init__(self):
        object.__setattr__(self, "linear", _frozen(self.linear))
        object.__setattr__(self, "angular", _frozen(self.angular))

    @classmethod
    def from_vector(cls, v, frame: str) -> Twist:
        v = np.asarray(v, dtype=float)
        return cls(v[:3], v[3:], frame)

    def vector(self) -> np.ndarray:
        return np.concatenate([self.linear, self.angular])


@dataclass(frozen=True)
class Wrench:
    force: np.ndarray
    moment: np.ndarray
    frame: str

    def __post_init__(self):
        object.__setattr__(self, "force", _frozen(self.force))
        object.__setattr__(self, "moment", _frozen(self.moment))

    @classmethod
    def from_vector(cls, w, frame: str) -> Wrench:
        w = np.asarray(w, dtype=float)
        return cls(w[:3], w[3:], frame)

    def vector(self) -> np.ndarray:
        return np.concatenate([self.force, self.moment])


def power(w: Wrench, v: Twist) -> float:
    _check_frame(v.frame, w.frame, "wrench")
    return float(w.vector() @ v.vector())


def adjoint_twist(T: SpatialTransform, v: Twist) -> Twist:
    _check_frame(T.from_frame, v.frame, "twist")
    R, t = T.rotation, T.translation
    w = R @ v.angular
    return Twist(R @ v.linear + np.cross(t, w), w, T.to_frame)


def coadjoint_wrench(T: SpatialTransform, w: Wrench) -> Wrench:
    _check_frame(T.from_frame, w.frame, "wrench")
    R, t = T.rotation, T.translation
    f = R @ w.force
    return Wrench(f, R @ w.moment + np.cross(t, f), T.to_frame)


@dataclass(frozen=True)
class SpatialInertia:
    """Rigid-body inertia expressed in ``frame``.

    ``rotational_inertia`` is taken about the frame origin (not the COM);
    use :meth:`from_com` to build one from the usual COM-centred tensor.
    """

    mass: float
    com_offset: np.ndarray
    rotational_inertia: np.ndarray
    frame: str

    def __post_init__(self):
        c = _frozen(self.com_offset)
        inertia = _frozen(self.rotational_inertia)
        object.__setattr__(self, "com_offset", c)
        object.__setattr__(self, "rotational_inertia", inertia)
        if not self.mass > 0:
            raise InputError(f"mass must be positive, got {self.mass}")
        if np.abs(inertia - inertia.T).max() > TOL * max(1.0, np.abs(inertia).max()):
            raise InputError("rotational inertia is not symmetric")
        principal = np.linalg.eigvalsh(self.inertia_about_com)
        scale = max(principal.max(), 1e-300)
        if principal.min() <= 0:
            raise InputError("rotational inertia about the COM is not positive definite")
        a, b, cc = principal
        if a + b < cc - TOL * scale:
            raise InputError("principal moments violate the triangle inequality")

    @classmethod
    def from_com(cls, mass: float, com, inertia_com, frame: str) -> SpatialInertia:
        c = np.asarray(com, dtype=float)
        S = skew(c)
        return cls(mass, c, np.asarray(inertia_com, dtype=float) - mass * S @ S, frame)

    @property
    def inertia_about_com(self) -> np.ndarray:
        S = skew(self.com_offset)
        return self.rotational_inertia + self.mass * S @ S

    def matrix(self) -> np.ndarray:
        """6x6 operator with ``0.5 * v @ G @ v`` the kinetic energy of twist ``v``."""
        m = self.mass
        C = skew(self.com_offset)
        G = np.zeros((6, 6))
        G[:3, :3] = m * np.eye(3)
        G[:3, 3:] = -m * C
        G[3:, :3] = m * C
        G[3:, 3:] = self.rotational_inertia
        return G

    def kinetic_energy(self, v: Twist) -> float:
        _check_frame(self.frame, v.frame, "twist")
        x = v.vector()
        return 0.5 * float(x @ self.matrix() @ x)

    def momentum(self, v: Twist) -> Wrench:
        _check_frame(self.frame, v.frame, "twist")
        return Wrench.from_vector(self.matrix() @ v.vector(), self.frame)


def transform_inertia(T: SpatialTransform, inertia: SpatialInertia) -> SpatialInertia:
    _check_frame(T.from_frame, inertia.frame, "inertia")
    R = T.rotation
    return SpatialInertia.from_com(
        inertia.mass,
        T.apply(inertia.com_offset),
        R @ inertia.inertia_about_com @ R.T,
        T.to_frame,
    )


def transform_inertia_matrix(T: SpatialTransform, G: np.ndarray) -> np.ndarray:
    """Same map as :func:`transform_inertia` on a raw 6x6 operator."""
    ad_inv = invert(T).adjoint()
    return ad_inv.T @ G @ ad_inv
