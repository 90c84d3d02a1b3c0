"""Fixed-base serial chains: kinematics, joint-space inertia and centroidal aggregates.

Frames used throughout:

``world``
    the fixed inertial frame.
``<link name>``
    body frame of each link, moved by that link's joint.
``contact``
    origin at the contact point, axes aligned with ``world``.
``centroidal``
    origin at the whole-body COM, axes aligned with ``world``.

Jacobians follow the twist layout of :mod:`robot_impact.spatial`
(translational rows first). A "point" Jacobian maps joint rates to the twist of
a world-aligned frame sitting at that point, so its translational rows are the
ordinary point velocity in world coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import linalg

from .errors import DegenerateRatio, InputError, SingularInertia
from .spatial import (
    SpatialInertia,
    SpatialTransform,
    Twist,
    compose,
    invert,
    rotation_about,
    transform_inertia,
)

REVOLUTE = "revolute"
PRISMATIC = "prismatic"
JOINT_TYPES = (REVOLUTE, PRISMATIC)


@dataclass(frozen=True)
class Joint:
    """Joint driving one link.

    ``origin`` maps the joint frame (the child link frame at ``q = 0``) into the
    parent link frame; ``axis`` is expressed in the joint frame.
    """

    type: str
    axis: np.ndarray
    origin: SpatialTransform

    def __post_init__(self):
        if self.type not in JOINT_TYPES:
            raise InputError(f"unknown joint type {self.type!r}")
        axis = np.array(self.axis, dtype=float)
        if axis.shape != (3,) or abs(np.linalg.norm(axis) - 1.0) > 1e-12:
            raise InputError("joint axis must be a unit 3-vector")
        axis.setflags(write=False)
        object.__setattr__(self, "axis", axis)

    def motion(self, q: float, frame: str) -> SpatialTransform:
        if self.type == REVOLUTE:
            return SpatialTransform(rotation_about(self.axis, q), np.zeros(3), frame, frame + ".joint")
        return SpatialTransform(np.eye(3), self.axis * q, frame, frame + ".joint")


@dataclass(frozen=True)
class Link:
    name: str
    inertia: SpatialInertia | None  # None: massless virtual link
    parent: int


@dataclass(frozen=True)
class Contact:
    link: int
    point: np.ndarray  # in the link frame
    normal: np.ndarray  # world frame, pointing away from the environment

    def __post_init__(self):
        p = np.array(self.point, dtype=float)
        n = np.array(self.normal, dtype=float)
        if p.shape != (3,) or n.shape != (3,):
            raise InputError("contact point and normal must be 3-vectors")
        if abs(np.linalg.norm(n) - 1.0) > 1e-12:
            raise InputError("contact normal must have unit norm")
        p.setflags(write=False)
        n.setflags(write=False)
        object.__setattr__(self, "point", p)
        object.__setattr__(self, "normal", n)


@dataclass(frozen=True)
class ChainModel:
    links: tuple[Link, ...]
    joints: tuple[Joint, ...]
    contact: Contact
    name: str = "chain"

    def __post_init__(self):
        object.__setattr__(self, "links", tuple(self.links))
        object.__setattr__(self, "joints", tuple(self.joints))
        if not self.links:
            raise InputError("chain needs at least one link")
        if len(self.links) != len(self.joints):
            raise InputError("every link needs exactly one joint")
        names = [link.name for link in self.links]
        if len(set(names)) != len(names) or {"world", "contact", "centroidal"} & set(names):
            raise InputError("link names must be unique and not reserved frame names")
        for i, (link, joint) in enumerate(zip(self.links, self.joints)):
            if link.parent != i - 1:
                raise InputError(f"link {link.name!r}: only serial chains are supported (parent must be {i - 1})")
            if link.inertia is not None and link.inertia.frame != link.name:
                raise InputError(f"link {link.name!r}: inertia must be expressed in the link frame")
            parent = "world" if i == 0 else self.links[i - 1].name
            if joint.origin.from_frame != link.name + ".joint" or joint.origin.to_frame != parent:
                raise InputError(f"link {link.name!r}: joint origin must map {link.name}.joint -> {parent}")
        if not 0 <= self.contact.link < len(self.links):
            raise InputError("contact link index out of range")
        if self.total_mass <= 0:
            raise InputError("chain has no mass")

    @property
    def dof(self) -> int:
        return len(self.joints)

    @property
    def total_mass(self) -> float:
        return sum(link.inertia.mass for link in self.links if link.inertia is not None)

    @property
    def normal(self) -> np.ndarray:
        return self.contact.normal

    def check_q(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        if q.shape != (self.dof,):
            raise InputError(f"expected {self.dof} joint values, got shape {q.shape}")
        return q


@dataclass(frozen=True)
class ChainState:
    q: np.ndarray
    qdot: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        qd = np.asarray(self.qdot, dtype=float)
        if q.ndim != 1 or q.shape != qd.shape:
            raise InputError("q and qdot must be vectors of equal length")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "qdot", qd)


@dataclass(frozen=True)
class CentroidalState:
    """Aggregate quantities in the centroidal frame.

    ``com_transform`` is the pose of the centroidal frame (``centroidal -> world``).
    ``crb_inertia`` is block diagonal ``diag(m I, I_com)`` by construction.
    """

    com_transform: SpatialTransform
    crb_inertia: np.ndarray
    momentum: np.ndarray
    mass: float
    momentum_matrix: np.ndarray = field(repr=False)

    @property
    def com(self) -> np.ndarray:
        return self.com_transform.translation

    @property
    def rotational_inertia(self) -> np.ndarray:
        return self.crb_inertia[3:, 3:]

    @property
    def average_velocity(self) -> np.ndarray:
        return np.linalg.solve(self.crb_inertia, self.momentum)


def forward_kinematics(model: ChainModel, q) -> list[SpatialTransform]:
    """World poses of every link frame followed by the contact frame."""
    q = model.check_q(q)
    poses = []
    parent = SpatialTransform.identity("world")
    for link, joint, qi in zip(model.links, model.joints, q):
        pose = compose(parent, compose(joint.origin, joint.motion(qi, link.name)))
        poses.append(pose)
        parent = pose
    p = poses[model.contact.link].apply(model.contact.point)
    poses.append(SpatialTransform.from_translation(p, "contact", "world"))
    return poses


def contact_position(model: ChainModel, q) -> np.ndarray:
    return forward_kinematics(model, q)[-1].translation


def _motion_subspace(model: ChainModel, poses) -> np.ndarray:
    """Joint twists about the world origin in world axes, one column per joint."""
    S = np.zeros((6, model.dof))
    for i, joint in enumerate(model.joints):
        R, o = poses[i].rotation, poses[i].translation
        a = R @ joint.axis
        if joint.type == REVOLUTE:
            S[:3, i] = np.cross(o, a)
            S[3:, i] = a
        else:
            S[:3, i] = a
    return S


def _world_inertias(model: ChainModel, poses) -> list[np.ndarray | None]:
    out = []
    for link, pose in zip(model.links, poses):
        if link.inertia is None:
            out.append(None)
        else:
            out.append(transform_inertia(pose.relabel(link.name, "world"), link.inertia).matrix())
    return out


def _shift(point) -> np.ndarray:
    """Twist map from a world-origin frame to a world-aligned frame at ``point``."""
    return SpatialTransform.from_translation(-np.asarray(point, dtype=float), "world", "at").adjoint()


def point_jacobian(model: ChainModel, q, link: int, point_world) -> np.ndarray:
    """Jacobian of a world-aligned frame at ``point_world`` rigidly attached to ``link``."""
    poses = forward_kinematics(model, q)
    S = _motion_subspace(model, poses)
    S[:, link + 1:] = 0.0
    return _shift(point_world) @ S


def body_jacobian(model: ChainModel, q, target="contact") -> np.ndarray:
    """6 x n Jacobian of the target's twist.

    ``target`` is a link index (body twist in that link's frame), ``"contact"``
    (the contact frame) or ``"centroidal"`` (average velocity of the
    centroidal frame, ``inv(I_G) @ A_G``).
    """
    if target == "centroidal":
        cs = centroidal_state(model, q, np.zeros(model.dof))
        return np.linalg.solve(cs.crb_inertia, cs.momentum_matrix)
    poses = forward_kinematics(model, q)
    S = _motion_subspace(model, poses)
    if target == "contact":
        S[:, model.contact.link + 1:] = 0.0
        return _shift(poses[-1].translation) @ S
    if isinstance(target, (int, np.integer)) and 0 <= target < model.dof:
        S[:, target + 1:] = 0.0
        return invert(poses[target]).adjoint() @ S
    raise InputError(f"unknown Jacobian target {target!r}")


def link_twists(model: ChainModel, q, qdot) -> list[Twist]:
    """Body twist of every link, each in its own frame."""
    qdot = model.check_q(qdot)
    return [
        Twist.from_vector(body_jacobian(model, q, i) @ qdot, link.name)
        for i, link in enumerate(model.links)
    ]


def joint_space_inertia(model: ChainModel, q) -> np.ndarray:
    """Composite-rigid-body algorithm in world coordinates."""
    poses = forward_kinematics(model, q)
    S = _motion_subspace(model, poses)
    G = _world_inertias(model, poses)
    n = model.dof
    M = np.zeros((n, n))
    composite = np.zeros((6, 6))
    for i in range(n - 1, -1, -1):
        if G[i] is not None:
            composite = composite + G[i]
        F = composite @ S[:, i]
        M[i, i] = S[:, i] @ F
        for j in range(i):
            M[i, j] = M[j, i] = S[:, j] @ F
    return M


def cholesky_inertia(model: ChainModel, q):
    """Cholesky factor of M(q) for repeated solves; raises SingularInertia."""
    M = joint_space_inertia(model, q)
    try:
        return linalg.cho_factor(M)
    except linalg.LinAlgError as exc:
        raise SingularInertia(f"joint-space inertia is not positive definite: {exc}") from exc


def centroidal_state(model: ChainModel, q, qdot) -> CentroidalState:
    qdot = model.check_q(qdot)
    poses = forward_kinematics(model, q)
    S = _motion_subspace(model, poses)
    G = _world_inertias(model, poses)
    mass = model.total_mass
    com = sum(
        link.inertia.mass * pose.apply(link.inertia.com_offset)
        for link, pose in zip(model.links, poses)
        if link.inertia is not None
    ) / mass

    world_to_c = SpatialTransform.from_translation(-com, "world", "centroidal")
    star = world_to_c.coadjoint()
    ad_inv = invert(world_to_c).adjoint()

    composite = np.zeros((6, 6))
    A = np.zeros((6, model.dof))
    for i in range(model.dof - 1, -1, -1):
        if G[i] is not None:
            composite = composite + G[i]
        A[:, i] = star @ composite @ S[:, i]
    crb = ad_inv.T @ composite @ ad_inv
    crb = 0.5 * (crb + crb.T)
    return CentroidalState(
        com_transform=invert(world_to_c),
        crb_inertia=crb,
        momentum=A @ qdot,
        mass=mass,
        momentum_matrix=A,
    )


def centroidal_to_contact(model: ChainModel, q) -> SpatialTransform:
    """Transform from the centroidal frame to the contact frame (pure translation)."""
    poses = forward_kinematics(model, q)
    com = centroidal_state(model, q, np.zeros(model.dof)).com
    return SpatialTransform.from_translation(com - poses[-1].translation, "centroidal", "contact")


def relative_contact_jacobian(model: ChainModel, q) -> np.ndarray:
    """Jacobian of the contact twist relative to the rigidly carried centroidal frame."""
    J_p = body_jacobian(model, q, "contact")
    J_c = body_jacobian(model, q, "centroidal")
    return J_p - centroidal_to_contact(model, q).adjoint() @ J_c


@dataclass(frozen=True)
class VelocityDecomposition:
    exact: np.ndarray  # contact twist
    approx: np.ndarray  # centroidal average twist carried to the contact point
    relative: np.ndarray
    ratio: float  # normal component of approx over that of exact
    norm_ratio: float  # same with translational norms


def velocity_decomposition(model: ChainModel, q, qdot) -> VelocityDecomposition:
    qdot = model.check_q(qdot)
    exact = body_jacobian(model, q, "contact") @ qdot
    approx = centroidal_to_contact(model, q).adjoint() @ body_jacobian(model, q, "centroidal") @ qdot
    relative = relative_contact_jacobian(model, q) @ qdot
    n = model.normal
    exact_n = float(n @ exact[:3])
    if abs(exact_n) < 1e-12:
        raise DegenerateRatio("normal contact velocity is zero; ratio undefined")
    norm_exact = np.linalg.norm(exact[:3])
    return VelocityDecomposition(
        exact=exact,
        approx=approx,
        relative=relative,
        ratio=float(n @ approx[:3]) / exact_n,
        norm_ratio=float(np.linalg.norm(approx[:3]) / norm_exact),
    )


def make_link(name: str, parent: int, mass: float | None, com=(0, 0, 0), inertia_com=None) -> Link:
    """Convenience constructor; ``mass=None`` gives a massless link."""
    if mass is None:
        return Link(name, None, parent)
    if inertia_com is None:
        inertia_com = np.eye(3) * 1e-6 * mass
    return Link(name, SpatialInertia.from_com(mass, com, inertia_com, name), parent)


def build_chain(
    specs: Sequence[dict],
    contact_point,
    contact_normal,
    contact_link: int | None = None,
    name: str = "chain",
) -> ChainModel:
    """Assemble a chain from plain dictionaries.

    Each entry needs ``type``, ``axis``, ``origin_rotation`` (3x3, optional),
    ``origin_translation`` and ``mass``/``com``/``inertia`` for the link.
    """
    links, joints = [], []
    for i, s in enumerate(specs):
        lname = s.get("name", f"link{i}")
        parent = "world" if i == 0 else links[-1].name
        origin = SpatialTransform(
            np.asarray(s.get("origin_rotation", np.eye(3)), dtype=float),
            np.asarray(s.get("origin_translation", np.zeros(3)), dtype=float),
            lname + ".joint",
            parent,
        )
        axis = np.asarray(s["axis"], dtype=float)
        joints.append(Joint(s["type"], axis / np.linalg.norm(axis), origin))
        links.append(make_link(lname, i - 1, s.get("mass"), s.get("com", (0, 0, 0)), s.get("inertia")))
    if contact_link is None:
        contact_link = len(links) - 1
    return ChainModel(tuple(links), tuple(joints), Contact(contact_link, contact_point, contact_normal), name)
