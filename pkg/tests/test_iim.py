from __future__ import annotations

import numpy as np
import pytest

from robot_impact.chain import build_chain, centroidal_state, centroidal_to_contact, forward_kinematics, invert
from robot_impact.errors import InputError, SingularOperationalInertia
from robot_impact.iim import (
    InverseInertiaMatrix,
    algebraic_impulse,
    all_iims,
    crb_inverse_inertia,
    crb_inverse_inertia_adjoint,
    em_matrix,
    iim_crb,
    iim_crb_flex,
    iim_flex_correction,
    iim_gm,
)

from conftest import box_inertia, random_chain, rod_chain


@pytest.mark.parametrize("q", [0.0, 0.4, -1.2])
def test_rod_effective_masses(q):
    m, L = 2.0, 0.8
    model = rod_chain(m, L)
    # normal perpendicular to the rod at this angle
    n = np.array([np.cos(q), 0.0, -np.sin(q)])
    assert 1.0 / iim_gm(model, [q]).along(n) == pytest.approx(m / 3, rel=1e-10)
    assert 1.0 / iim_crb(model, [q]).along(n) == pytest.approx(m / 4, rel=1e-8)


def test_rod_has_no_flexibility_term():
    model = rod_chain()
    np.testing.assert_allclose(iim_flex_correction(model, [0.3]), 0, atol=1e-12)
    np.testing.assert_allclose(iim_crb_flex(model, [0.3]).w, iim_crb(model, [0.3]).w, atol=1e-12)


def test_prismatic_slider_generalized_momentum_mass():
    m = 3.0
    model = rod_chain(m, 0.5, joint="prismatic")
    assert iim_gm(model, [0.1]).along([1.0, 0, 0]) == pytest.approx(1.0 / m, rel=1e-12)


def _free_body(rng, arm=0):
    specs = [dict(type="prismatic", axis=ax, mass=None) for ax in np.eye(3)]
    specs += [dict(type="revolute", axis=ax, mass=None) for ax in np.eye(3)[:2]]
    specs.append(dict(type="revolute", axis=[0, 0, 1], mass=4.0, com=[0.05, -0.02, 0.1],
                      inertia=box_inertia(4.0, [0.4, 0.3, 0.2])))
    for _ in range(arm):
        specs.append(dict(type="revolute", axis=rng.normal(size=3), origin_translation=rng.normal(size=3) * 0.2,
                          mass=1.0, com=rng.normal(size=3) * 0.05, inertia=box_inertia(1.0, [0.2, 0.1, 0.1])))
    return build_chain(specs, [0.2, 0.1, -0.1], [0, 0, 1.0])


def test_free_body_operational_mass_and_identity(rng):
    model = _free_body(rng)
    q = rng.normal(size=6) * 0.5
    np.testing.assert_allclose(em_matrix(model, q), 4.0 * np.eye(3), atol=1e-9)
    np.testing.assert_allclose(iim_gm(model, q).w, iim_crb(model, q).w, atol=1e-10)


@pytest.mark.parametrize("arm", [1, 3, 5])
def test_decomposition_exact_on_free_floating_chains(rng, arm):
    model = _free_body(rng, arm)
    q = rng.normal(size=model.dof)
    gm = iim_gm(model, q).w
    split = iim_crb(model, q).w + iim_flex_correction(model, q)
    assert np.linalg.norm(gm - split) / np.linalg.norm(gm) < 1e-10


def test_floating_random_chains_satisfy_decomposition(rng):
    for n in range(1, 6):
        model = random_chain(rng, n, floating=True)
        q = rng.normal(size=model.dof)
        gm = iim_gm(model, q).w
        assert np.linalg.norm(gm - iim_crb_flex(model, q).w) / np.linalg.norm(gm) < 1e-9


def test_crb_closed_form_matches_adjoint_route(chain_factory, rng):
    model = chain_factory(5)
    q = rng.normal(size=5)
    cs = centroidal_state(model, q, np.zeros(5))
    to_contact = centroidal_to_contact(model, q)
    a = crb_inverse_inertia(cs.mass, cs.rotational_inertia, invert(to_contact))
    b = crb_inverse_inertia_adjoint(cs.crb_inertia, to_contact)
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_contact_at_com_gives_total_mass(chain_factory, rng):
    model = chain_factory(4)
    q = rng.normal(size=4)
    com = centroidal_state(model, q, np.zeros(4)).com
    pose = forward_kinematics(model, q)[model.contact.link]
    at_com = build_chain(
        [dict(type=j.type, axis=j.axis, origin_rotation=j.origin.rotation, origin_translation=j.origin.translation,
              mass=l.inertia.mass, com=l.inertia.com_offset, inertia=l.inertia.inertia_about_com)
         for l, j in zip(model.links, model.joints)],
        invert(pose).apply(com), model.normal)
    assert 1.0 / iim_crb(at_com, q).along(at_com.normal) == pytest.approx(model.total_mass, rel=1e-10)


def test_em_dominates_generalized_momentum_mass(chain_factory, rng):
    # Schur complement: the block of the inverse is at least the inverse of the block
    for _ in range(5):
        model = chain_factory(7)
        q = rng.normal(size=7)
        n = model.normal
        assert n @ em_matrix(model, q) @ n >= 1.0 / iim_gm(model, q).along(n) * (1 - 1e-10)


def test_em_rank_deficient_raises(chain_factory, rng):
    model = chain_factory(3)
    q = rng.normal(size=3)
    with pytest.raises(SingularOperationalInertia):
        em_matrix(model, q)
    lam = em_matrix(model, q, allow_pinv=True)
    np.testing.assert_allclose(lam, lam.T)


def test_algebraic_impulse(chain_factory, rng):
    model = chain_factory(7)
    q = rng.normal(size=7)
    v = -0.1 * model.normal
    p0 = algebraic_impulse(model, q, v, 0.0)
    np.testing.assert_allclose(algebraic_impulse(model, q, v, 0.5), 1.5 * p0)
    np.testing.assert_allclose(algebraic_impulse(model, q, 2 * v, 0.0), 2 * p0)
    with pytest.raises(InputError):
        algebraic_impulse(model, q, v, 1.2)


def test_iim_validation():
    with pytest.raises(InputError):
        InverseInertiaMatrix(np.array([[1.0, 0.5, 0], [0, 1, 0], [0, 0, 1]]), "gm")
    with pytest.raises(InputError):
        InverseInertiaMatrix(-np.eye(3), "crb")
    with pytest.raises(InputError):
        InverseInertiaMatrix(np.eye(3), "bogus")
    # the flexible estimate is allowed to be non-symmetric
    InverseInertiaMatrix(np.array([[1.0, 0.5, 0], [0, 1, 0], [0, 0, 1]]), "crb_flex")


def test_all_iims_keys(chain_factory, rng):
    model = chain_factory(4)
    assert set(all_iims(model, rng.normal(size=4))) == {"gm", "crb", "crb_flex"}
