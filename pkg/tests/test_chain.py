from __future__ import annotations

import numpy as np
import pytest

from robot_impact.chain import (
    ChainModel,
    Contact,
    Link,
    body_jacobian,
    build_chain,
    centroidal_state,
    contact_position,
    forward_kinematics,
    joint_space_inertia,
    link_twists,
    relative_contact_jacobian,
    velocity_decomposition,
)
from robot_impact.errors import DegenerateRatio, InputError

from conftest import rod_chain


def _fd(fun, q, h=1e-6):
    cols = []
    for i in range(len(q)):
        dq = np.zeros_like(q)
        dq[i] = h
        cols.append((fun(q + dq) - fun(q - dq)) / (2 * h))
    return np.stack(cols, axis=-1)


def _com(model, q):
    poses = forward_kinematics(model, q)
    total = sum(l.inertia.mass * p.apply(l.inertia.com_offset) for l, p in zip(model.links, poses) if l.inertia)
    return total / model.total_mass


def test_rod_kinematics_and_inertia():
    m, L = 2.0, 0.8
    model = rod_chain(m, L)
    q = np.array([0.3])
    np.testing.assert_allclose(contact_position(model, q), [L * np.sin(0.3), 0, L * np.cos(0.3)], atol=1e-15)
    assert joint_space_inertia(model, q)[0, 0] == pytest.approx(m * L**2 / 3, rel=1e-8)


def test_contact_jacobian_matches_finite_differences(chain_factory, rng):
    for n in (3, 5, 7):
        model = chain_factory(n)
        q = rng.normal(size=model.dof)
        J = body_jacobian(model, q, "contact")
        np.testing.assert_allclose(J[:3], _fd(lambda x: contact_position(model, x), q), atol=1e-7)
        # angular rows: dR/dq_i R^T = [w_i]
        R = lambda x: forward_kinematics(model, x)[model.contact.link].rotation
        dR = _fd(lambda x: R(x), q)
        for i in range(model.dof):
            W = dR[:, :, i] @ R(q).T
            np.testing.assert_allclose([W[2, 1], W[0, 2], W[1, 0]], J[3:, i], atol=1e-7)


def test_link_body_jacobian_transforms_from_contact(chain_factory, rng):
    model = chain_factory(4)
    q, qd = rng.normal(size=4), rng.normal(size=4)
    last = model.contact.link
    pose = forward_kinematics(model, q)[last]
    body = link_twists(model, q, qd)[last].vector()
    world_spin = pose.rotation @ body[3:]
    np.testing.assert_allclose(world_spin, (body_jacobian(model, q, "contact") @ qd)[3:], atol=1e-12)


def test_joint_space_inertia_equals_kinetic_energy_sum(chain_factory, rng):
    for n in (3, 6):
        model = chain_factory(n)
        q, qd = rng.normal(size=n), rng.normal(size=n)
        M = joint_space_inertia(model, q)
        np.testing.assert_allclose(M, M.T, atol=1e-12)
        assert np.linalg.eigvalsh(M).min() > 0
        energy = sum(link.inertia.kinetic_energy(tw) for link, tw in zip(model.links, link_twists(model, q, qd)))
        assert 0.5 * qd @ M @ qd == pytest.approx(energy, rel=1e-10)


def test_centroidal_quantities(chain_factory, rng):
    model = chain_factory(5)
    q, qd = rng.normal(size=5), rng.normal(size=5)
    cs = centroidal_state(model, q, qd)
    np.testing.assert_allclose(cs.com, _com(model, q), atol=1e-12)
    assert cs.mass == pytest.approx(model.total_mass)
    # linear momentum is m times the COM velocity
    com_rate = _fd(lambda x: _com(model, x), q) @ qd
    np.testing.assert_allclose(cs.momentum[:3], cs.mass * com_rate, atol=1e-7)
    # block-diagonal locked inertia; average twist reproduces the momentum
    np.testing.assert_allclose(cs.crb_inertia[:3, 3:], 0, atol=1e-12)
    np.testing.assert_allclose(cs.crb_inertia @ cs.average_velocity, cs.momentum, atol=1e-10)
    # kinetic energy of the average twist never exceeds the true kinetic energy
    M = joint_space_inertia(model, q)
    assert 0.5 * cs.average_velocity @ cs.momentum <= 0.5 * qd @ M @ qd + 1e-12
    J_c = body_jacobian(model, q, "centroidal")
    np.testing.assert_allclose(J_c[:3] @ qd, com_rate, atol=1e-7)


def test_velocity_decomposition_sums(chain_factory, rng):
    model = chain_factory(6)
    q, qd = rng.normal(size=6), rng.normal(size=6)
    dec = velocity_decomposition(model, q, qd)
    np.testing.assert_allclose(dec.exact, dec.approx + dec.relative, atol=1e-12)
    np.testing.assert_allclose(dec.relative, relative_contact_jacobian(model, q) @ qd, atol=1e-12)
    n = model.normal
    assert dec.ratio == pytest.approx((n @ dec.approx[:3]) / (n @ dec.exact[:3]))


def test_single_body_has_no_relative_motion():
    model = rod_chain()
    dec = velocity_decomposition(model, np.array([0.2]), np.array([1.3]))
    np.testing.assert_allclose(dec.relative, 0, atol=1e-12)
    assert dec.ratio == pytest.approx(1.0)


def test_zero_velocity_ratio_is_degenerate(chain_factory):
    model = chain_factory(3)
    with pytest.raises(DegenerateRatio):
        velocity_decomposition(model, np.zeros(3), np.zeros(3))


def test_chain_validation():
    model = rod_chain()
    with pytest.raises(InputError):
        model.check_q([0.0, 0.0])
    with pytest.raises(InputError):
        ChainModel(model.links, model.joints, Contact(3, np.zeros(3), [1.0, 0, 0]))
    bad = Link(model.links[0].name, model.links[0].inertia, parent=4)
    with pytest.raises(InputError):
        ChainModel((bad,), model.joints, model.contact)
    with pytest.raises(InputError):
        build_chain([dict(type="ball", axis=[0, 0, 1], mass=1.0)], np.zeros(3), [0, 0, 1])
    with pytest.raises(InputError):
        build_chain([dict(type="revolute", axis=[0, 0, 1], mass=None)], np.zeros(3), [0, 0, 1])
    with pytest.raises(InputError):
        Contact(0, np.zeros(3), [0, 0, 2.0])
