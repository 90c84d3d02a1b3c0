from __future__ import annotations

import numpy as np
import pytest

from robot_impact.chain import build_chain
from robot_impact.spatial import random_rotation


def box_inertia(mass, dims, rotation=np.eye(3)):
    a, b, c = dims
    d = np.diag([b * b + c * c, a * a + c * c, a * a + b * b]) * mass / 12.0
    return rotation @ d @ rotation.T


def random_chain(rng, n, floating=False, prismatic=True):
    """Random serial chain with physically valid link inertias.

    ``floating`` prepends three prismatic and three revolute massless joints,
    the last of which carries a massive base, so the arm sits on a free body.
    """
    specs = []
    if floating:
        for ax in np.eye(3):
            specs.append(dict(type="prismatic", axis=ax, mass=None))
        for ax in np.eye(3)[:2]:
            specs.append(dict(type="revolute", axis=ax, mass=None))
        specs.append(dict(type="revolute", axis=[0, 0, 1], mass=5.0,
                          com=rng.normal(size=3) * 0.05, inertia=box_inertia(5.0, [0.3, 0.25, 0.2])))
    for i in range(n):
        mass = rng.uniform(0.5, 3.0)
        kind = "revolute"
        if prismatic and i > 0 and rng.uniform() < 0.25:
            kind = "prismatic"
        specs.append(dict(
            type=kind,
            axis=rng.normal(size=3),
            origin_rotation=random_rotation(rng),
            origin_translation=rng.normal(size=3) * 0.3,
            mass=mass,
            com=rng.normal(size=3) * 0.1,
            inertia=box_inertia(mass, rng.uniform(0.05, 0.4, 3), random_rotation(rng)),
        ))
    normal = rng.normal(size=3)
    return build_chain(specs, rng.normal(size=3) * 0.1, normal / np.linalg.norm(normal))


def rod_chain(mass=2.0, length=0.8, joint="revolute", thin=1e-9):
    """Uniform thin rod about a fixed pivot, contact at the tip, normal perpendicular."""
    inertia = np.diag([mass * length**2 / 12, mass * length**2 / 12, thin * mass])
    if joint == "revolute":
        spec = dict(type="revolute", axis=[0, 1, 0], mass=mass, com=[0, 0, length / 2], inertia=inertia)
        normal = [1.0, 0.0, 0.0]
    else:
        spec = dict(type="prismatic", axis=[1, 0, 0], mass=mass, com=[0, 0, length / 2], inertia=inertia)
        normal = [1.0, 0.0, 0.0]
    return build_chain([spec], [0, 0, length], normal, name="rod")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def chain_factory(rng):
    def make(n=4, floating=False, prismatic=True):
        return random_chain(rng, n, floating, prismatic)
    return make
