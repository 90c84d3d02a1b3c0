from __future__ import annotations

import math

import numpy as np
import pytest

from robot_impact.contact import (
    ContactModel,
    SimulationSettings,
    force_at,
    predicted_cor,
    read_trace,
    simulate,
    spring_deficiency_check,
    write_trace,
)
from robot_impact.errors import InputError, MalformedProfile, NoDetachment, SubcriticalVelocity

M = 3.8


def spring(k=5e4):
    return ContactModel("spring", k, None, M)


def test_spring_half_sine():
    k, v = 5e4, -0.1
    tr = simulate(spring(k), v)
    w = math.sqrt(k / M)
    assert tr.duration == pytest.approx(math.pi / w, rel=1e-9)
    assert tr.peak_force == pytest.approx(abs(v) * math.sqrt(k * M), rel=1e-9)
    assert tr.cor == pytest.approx(1.0, rel=1e-9)
    np.testing.assert_allclose(tr.f_n, abs(v) * math.sqrt(k * M) * np.sin(w * tr.time), atol=1e-6)
    assert tr.t_compression_end == pytest.approx(tr.duration / 2, rel=1e-9)


@pytest.mark.parametrize("speed", [0.0755, 0.1155, 0.1755])
def test_viscoelastic_exit_speed_is_k_over_c(speed):
    k = 5e4
    model = ContactModel("viscoelastic", k, k / 0.003, M)
    tr = simulate(model, -speed)
    assert tr.exit_velocity == pytest.approx(0.003, rel=1e-8)
    assert predicted_cor(model, -speed) == 0.003 / speed
    # restitution ends back at the undeformed position
    assert abs(tr.x_end) <= 1e-9 * np.abs(tr.x).max()


def test_viscoelastic_cor_falls_with_speed():
    model = ContactModel("viscoelastic", 5e4, 5e4 / 0.02, M)
    cors = [simulate(model, -v).cor for v in (0.08, 0.10, 0.12, 0.15, 0.18)]
    assert all(a > b for a, b in zip(cors, cors[1:]))


def test_subcritical_viscoelastic_prediction_raises():
    model = ContactModel("viscoelastic", 5e4, 5e4 / 0.2, M)
    with pytest.raises(SubcriticalVelocity):
        predicted_cor(model, -0.1)


@pytest.mark.parametrize("model", [
    ContactModel("spring", 5e4, None, M),
    ContactModel("viscoelastic", 5e4, 1e6, M),
    ContactModel("maxwell", 5e4, 2 * math.sqrt(5e4 * M), M),
])
def test_energy_and_impulse_bookkeeping(model):
    v = -0.12
    tr = simulate(model, v)
    assert tr.energy_residual.max() < 1e-7 * tr.initial_energy
    assert tr.events["compression_end"]["p_n"] == pytest.approx(M * abs(v), rel=1e-7)
    assert tr.events["restitution_end"]["p_n"] == pytest.approx(M * abs(v) * (1 + tr.cor), rel=1e-7)
    assert np.all(np.diff(tr.E_d) >= -1e-15)
    s = tr.summary()
    assert s["energy_loss"] == pytest.approx(tr.initial_energy * (1 - tr.cor**2), rel=1e-6, abs=1e-9 * tr.initial_energy)


def test_maxwell_cor_independent_of_speed():
    model = ContactModel("maxwell", 5e4, 2 * math.sqrt(5e4 * M), M)
    cors = [simulate(model, -v).cor for v in (0.05, 0.1, 0.2)]
    assert max(cors) - min(cors) < 1e-8
    assert 0 < cors[0] < 1


def test_lightly_damped_maxwell_never_detaches():
    model = ContactModel("maxwell", 5e4, 0.2 * math.sqrt(5e4 * M), M)
    with pytest.raises(NoDetachment) as info:
        simulate(model, -0.1)
    assert info.value.horizon > 0


def test_force_outside_contact_is_zero():
    model = spring()
    f = force_at(model, -0.1, [-1e-3, 0.0, 1.0])
    np.testing.assert_array_equal(f, [0.0, 0.0, 0.0])


def test_model_validation():
    with pytest.raises(InputError):
        ContactModel("hertz", 1.0, 1.0, 1.0)
    with pytest.raises(InputError):
        ContactModel("viscoelastic", 1.0, None, 1.0)
    with pytest.raises(InputError):
        ContactModel("spring", -1.0, None, 1.0)


def test_deficiency_detector_separates_families():
    sp = simulate(spring(), -0.1, SimulationSettings(rate_hz=25000))
    assert not spring_deficiency_check(sp.time, sp.f_n).inconsistent
    ve = simulate(ContactModel("viscoelastic", 5e4, 5e4 / 0.03, M), -0.1)
    rep = spring_deficiency_check(ve.time, ve.f_n)
    assert rep.inconsistent and rep.area_ratio > 1.5
    with pytest.raises(MalformedProfile):
        spring_deficiency_check([0.0, 1.0, 2.0], [0.0, 1.0, 0.0])


def test_trace_round_trip(tmp_path):
    tr = simulate(ContactModel("viscoelastic", 5e4, 1e6, M), -0.1)
    write_trace(tr, tmp_path / "t.csv")
    back = read_trace(tmp_path / "t.csv")
    for name in ("time", "x", "xdot", "f_n", "p_n", "E_k", "E_p", "E_d"):
        np.testing.assert_array_equal(getattr(back, name), getattr(tr, name))
    assert back.summary()["cor"] == tr.summary()["cor"]
