"""Single-DOF normal impact ``m* x'' = f_n`` under three contact-force laws.

``x`` is the (negative) compression of a virtual element at the contact point,
starting at ``x = 0`` with ``x' = v_pre < 0``. Families:

``spring``
    ``f_n = -k x``.
``viscoelastic``
    ``f_n = c x x' - k x`` (linear spring, compression-proportional dashpot).
    ``k`` in N/m, ``c`` in N s/m^2.
``maxwell``
    spring and dashpot in series, carried as an extra state:
    ``f' = -k x' - (k/c) f``. ``k`` in N/m, ``c`` in N s/m.

Compression ends at ``x' = 0``; restitution ends at the first zero crossing of
``f_n`` after that. The running impulse and the dissipated energy are
integrated as ODE states so they share the integrator's accuracy.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import minimize_scalar

from .errors import InputError, MalformedProfile, NoDetachment, SubcriticalVelocity

SPRING = "spring"
MAXWELL = "maxwell"
VISCOELASTIC = "viscoelastic"
FAMILIES = (SPRING, MAXWELL, VISCOELASTIC)

TRACE_COLUMNS = ("time", "x", "xdot", "f_n", "p_n", "E_k", "E_p", "E_d")


@dataclass(frozen=True)
class ContactModel:
    family: str
    k: float
    c: float | None
    m_star: float

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InputError(f"unknown contact family {self.family!r}")
        if not self.k > 0 or not self.m_star > 0:
            raise InputError("k and m_star must be positive")
        if self.family != SPRING and (self.c is None or not self.c > 0):
            raise InputError(f"{self.family} model needs a positive dashpot coefficient c")

    @property
    def half_period(self) -> float:
        """Undamped half-period ``pi sqrt(m*/k)``."""
        return math.pi * math.sqrt(self.m_star / self.k)

    def force(self, x, xdot):
        if self.family == SPRING:
            return -self.k * np.asarray(x)
        if self.family == VISCOELASTIC:
            return force_viscoelastic(self, x, xdot)
        raise InputError("Maxwell force is a state, not a function of (x, xdot)")


@dataclass(frozen=True)
class SimulationSettings:
    rate_hz: float = 25_000.0
    rtol: float = 1e-10
    atol_scale: float = 1e-12  # absolute tolerance relative to the state scale
    horizon_factor: float = 10.0
    method: str = "RK45"


DEFAULT_SETTINGS = SimulationSettings()


@dataclass
class ImpactTrace:
    """Sampled impact record. Energy columns are filled by :func:`energy_trace`."""

    model: ContactModel
    v_pre: float
    time: np.ndarray
    x: np.ndarray
    xdot: np.ndarray
    f_n: np.ndarray
    p_n: np.ndarray
    E_k: np.ndarray | None = None
    E_p: np.ndarray | None = None
    E_d: np.ndarray | None = None
    t_compression_end: float = math.nan
    t_restitution_end: float = math.nan
    events: dict = field(default_factory=dict)
    peak_force: float = math.nan
    t_peak_force: float = math.nan
    _dissipated: np.ndarray | None = field(default=None, repr=False)

    @property
    def duration(self) -> float:
        return self.t_restitution_end

    @property
    def exit_velocity(self) -> float:
        return self.events["restitution_end"]["xdot"]

    @property
    def cor(self) -> float:
        return -self.exit_velocity / self.v_pre

    @property
    def x_end(self) -> float:
        return self.events["restitution_end"]["x"]

    @property
    def initial_energy(self) -> float:
        return 0.5 * self.model.m_star * self.v_pre**2

    @property
    def energy_residual(self) -> np.ndarray:
        return np.abs(self.E_k + self.E_p + self.E_d - self.initial_energy)

    def summary(self) -> dict:
        out = {
            "family": self.model.family,
            "k": self.model.k,
            "c": self.model.c,
            "m_star": self.model.m_star,
            "v_pre": self.v_pre,
            "t_compression_end": self.t_compression_end,
            "t_restitution_end": self.t_restitution_end,
            "duration": self.duration,
            "cor": self.cor,
            "exit_velocity": self.exit_velocity,
            "x_end": self.x_end,
            "peak_force": self.peak_force,
            "t_peak_force": self.t_peak_force,
            "impulse_compression_end": self.events["compression_end"]["p_n"],
            "impulse_restitution_end": self.events["restitution_end"]["p_n"],
            "events": self.events,
        }
        if self.E_k is not None:
            end = self.events["restitution_end"]
            out["initial_energy"] = self.initial_energy
            out["final_kinetic_energy"] = end["E_k"]
            out["residual_potential_energy"] = end["E_p"]
            out["dissipated_energy"] = end["E_d"]
            out["energy_loss"] = end["E_p"] + end["E_d"]
            out["max_energy_residual"] = float(self.energy_residual.max())
        return out


def force_viscoelastic(model: ContactModel, x, xdot):
    return model.c * np.asarray(x) * np.asarray(xdot) - model.k * np.asarray(x)


def force_maxwell_step(model: ContactModel, state) -> float:
    """Force rate ``f'`` of the series spring-dashpot for state ``(x, xdot, f)``."""
    _, xdot, f = state
    return -model.k * xdot - (model.k / model.c) * f


def _rhs(model: ContactModel):
    m, k, c = model.m_star, model.k, model.c
    if model.family == MAXWELL:
        kc = k / c

        def rhs(t, y):
            x, xd, f, p, ed = y
            return [xd, f / m, -k * xd - kc * f, f, f * f / c]

        return rhs
    if model.family == VISCOELASTIC:

        def rhs(t, y):
            x, xd, p, ed = y
            f = c * x * xd - k * x
            return [xd, f / m, f, -c * x * xd * xd]

        return rhs

    def rhs(t, y):
        x, xd, p, ed = y
        f = -k * x
        return [xd, f / m, f, 0.0]

    return rhs


def _state_force(model: ContactModel, y: np.ndarray) -> np.ndarray:
    if model.family == MAXWELL:
        return y[2]
    return model.force(y[0], y[1])


def _unpack(model: ContactModel, y: np.ndarray):
    """(x, xdot, f, p, E_d) from an ODE state array (columns are samples)."""
    if model.family == MAXWELL:
        return y[0], y[1], y[2], y[3], y[4]
    return y[0], y[1], _state_force(model, y), y[2], y[3]


def _atol(model: ContactModel, v_pre: float, settings: SimulationSettings) -> np.ndarray:
    v = abs(v_pre)
    x_scale = v * math.sqrt(model.m_star / model.k)
    f_scale = v * math.sqrt(model.k * model.m_star)
    p_scale = model.m_star * v
    e_scale = 0.5 * model.m_star * v * v
    scales = [x_scale, v]
    if model.family == MAXWELL:
        scales.append(f_scale)
    scales += [p_scale, e_scale]
    return settings.atol_scale * np.asarray(scales)


@dataclass
class _Solution:
    first: object
    second: object
    t_c: float
    y_c: np.ndarray
    t_r: float
    y_r: np.ndarray
    n_states: int

    def state(self, t):
        return self.first.sol(t) if t <= self.t_c else self.second.sol(t)

    def states(self, times: np.ndarray) -> np.ndarray:
        y = np.empty((self.n_states, len(times)))
        split = times <= self.t_c
        if split.any():
            y[:, split] = self.first.sol(times[split])
        if (~split).any():
            y[:, ~split] = self.second.sol(times[~split])
        return y


def _integrate(model: ContactModel, v_pre: float, settings: SimulationSettings) -> _Solution:
    if not v_pre < 0:
        raise InputError("pre-impact velocity must be negative")
    rhs = _rhs(model)
    horizon = settings.horizon_factor * model.half_period
    atol = _atol(model, v_pre, settings)
    y0 = [0.0, v_pre, 0.0, 0.0, 0.0] if model.family == MAXWELL else [0.0, v_pre, 0.0, 0.0]

    def compression_end(t, y):
        return y[1]

    compression_end.terminal = True
    compression_end.direction = 1

    def restitution_end(t, y):
        return _state_force(model, y)

    restitution_end.terminal = True
    restitution_end.direction = -1

    common = dict(method=settings.method, rtol=settings.rtol, atol=atol, dense_output=True)
    first = solve_ivp(rhs, (0.0, horizon), y0, events=compression_end, **common)
    if first.status != 1:
        raise NoDetachment(f"compression did not end within {horizon:.6g} s", horizon)
    t_c = float(first.t_events[0][0])
    y_c = np.array(first.y_events[0][0])
    y_c[1] = 0.0
    # armed only after compression end, so the trivial f_n = 0 root at t = 0 is never seen
    second = solve_ivp(rhs, (t_c, horizon), y_c, events=restitution_end, **common)
    if second.status != 1:
        raise NoDetachment(f"restitution did not end within {horizon:.6g} s", horizon)
    t_r = float(second.t_events[0][0])
    y_r = np.array(second.y_events[0][0])
    return _Solution(first, second, t_c, y_c, t_r, y_r, len(y0))


def force_at(model: ContactModel, v_pre: float, times, settings: SimulationSettings = DEFAULT_SETTINGS) -> np.ndarray:
    """Simulated contact force at arbitrary times (zero outside the contact)."""
    times = np.asarray(times, dtype=float)
    sol = _integrate(model, v_pre, settings)
    out = np.zeros_like(times)
    inside = (times >= 0.0) & (times <= sol.t_r)
    if inside.any():
        out[inside] = _unpack(model, sol.states(times[inside]))[2]
    return out


def simulate(model: ContactModel, v_pre: float, settings: SimulationSettings = DEFAULT_SETTINGS) -> ImpactTrace:
    sol = _integrate(model, v_pre, settings)
    t_c, t_r = sol.t_c, sol.t_r
    dt = 1.0 / settings.rate_hz
    grid = np.arange(0.0, t_r, dt)
    if t_r - grid[-1] > 1e-12:
        grid = np.append(grid, t_r)
    else:
        grid[-1] = t_r
    y = sol.states(grid)
    y[:, -1] = sol.y_r
    x, xd, f, p, ed = _unpack(model, y)
    f = np.array(f, dtype=float)
    t_peak, f_peak = _refine_peak(model, grid, f, sol.state)

    def event_state(t, ys):
        xs, xds, fs, ps, eds = _unpack(model, ys.reshape(-1, 1))
        return {"t": t, "x": float(xs[0]), "xdot": float(xds[0]), "f_n": float(np.ravel(fs)[0]),
                "p_n": float(ps[0]), "E_d": float(eds[0])}

    trace = ImpactTrace(
        model=model,
        v_pre=v_pre,
        time=grid,
        x=np.array(x),
        xdot=np.array(xd),
        f_n=f,
        p_n=np.array(p),
        t_compression_end=t_c,
        t_restitution_end=t_r,
        events={"compression_end": event_state(t_c, sol.y_c), "restitution_end": event_state(t_r, sol.y_r)},
        peak_force=f_peak,
        t_peak_force=t_peak,
        _dissipated=np.array(ed),
    )
    return energy_trace(trace, model)


def _refine_peak(model, grid, f, interp):
    i = int(np.argmax(f))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, len(grid) - 1)]
    if hi <= lo:
        return float(grid[i]), float(f[i])

    def neg_force(t):
        return -float(np.ravel(_unpack(model, interp(t).reshape(-1, 1))[2])[0])

    res = minimize_scalar(neg_force, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    if -res.fun >= f[i]:
        return float(res.x), float(-res.fun)
    return float(grid[i]), float(f[i])


def energy_trace(trace: ImpactTrace, model: ContactModel) -> ImpactTrace:
    """Fill kinetic, potential and dissipated energy columns (and event energies)."""
    m, k = model.m_star, model.k
    out = replace(trace)
    out.E_k = 0.5 * m * trace.xdot**2
    if model.family == MAXWELL:
        out.E_p = trace.f_n**2 / (2.0 * k)
    else:
        out.E_p = 0.5 * k * trace.x**2
    if trace._dissipated is not None:
        out.E_d = trace._dissipated
    elif model.family == SPRING:
        out.E_d = np.zeros_like(trace.x)
    else:
        raise InputError("trace carries no dissipated-energy state")
    events = {}
    for name, ev in trace.events.items():
        ev = dict(ev)
        ev["E_k"] = 0.5 * m * ev["xdot"] ** 2
        ev["E_p"] = ev["f_n"] ** 2 / (2 * k) if model.family == MAXWELL else 0.5 * k * ev["x"] ** 2
        events[name] = ev
    out.events = events
    return out


def predicted_cor(model: ContactModel, v_pre: float, settings: SimulationSettings = DEFAULT_SETTINGS) -> float:
    if not v_pre < 0:
        raise InputError("pre-impact velocity must be negative")
    if model.family == VISCOELASTIC:
        ratio = model.k / model.c
        if abs(v_pre) < ratio:
            raise SubcriticalVelocity(
                f"|v_pre| = {abs(v_pre):.6g} m/s is below k/c = {ratio:.6g} m/s; the exit law would give e_r > 1"
            )
        return -ratio / v_pre
    return simulate(model, v_pre, settings).cor


@dataclass(frozen=True)
class DeficiencyReport:
    inconsistent: bool
    area_ratio: float  # post-peak over pre-peak impulse = e_r a spring would need
    pre_peak_impulse: float
    post_peak_impulse: float
    peak_force: float
    t_peak: float
    spring_fit_rms: float  # misfit of the symmetric half-sine through the peak


def _peak_time(t: np.ndarray, f: np.ndarray) -> tuple[float, float]:
    i = int(np.argmax(f))
    if 0 < i < len(f) - 1:
        y0, y1, y2 = f[i - 1], f[i], f[i + 1]
        denom = y0 - 2 * y1 + y2
        if denom < 0:
            s = 0.5 * (y0 - y2) / denom
            h = t[i + 1] - t[i]
            return float(t[i] + s * h), float(y1 - 0.25 * (y0 - y2) * s)
    return float(t[i]), float(f[i])


def _area_until(t, f, t_split):
    """Trapezoid area of the piecewise-linear profile on ``[t[0], t_split]``."""
    f_split = float(np.interp(t_split, t, f))
    mask = t < t_split
    tt = np.append(t[mask], t_split)
    ff = np.append(f[mask], f_split)
    return float(np.trapezoid(ff, tt))


def spring_deficiency_check(time, force, e_r_bound: float = 1.0, rel_tol: float = 0.02) -> DeficiencyReport:
    """Can a pure (in-phase) spring with ``e_r <= e_r_bound`` produce this lobe?

    An in-phase spring peaks at maximum compression, so the impulse before the
    peak is ``m* |v_pre|`` and the impulse after it is ``e_r m* |v_pre|``. The
    ratio of the two areas is therefore the restitution coefficient a spring
    would need; the profile is flagged when it exceeds ``e_r_bound`` by more
    than ``rel_tol``.
    """
    t = np.asarray(time, dtype=float)
    f = np.asarray(force, dtype=float)
    if t.ndim != 1 or t.shape != f.shape or len(t) < 5:
        raise MalformedProfile("profile needs at least 5 matching time/force samples")
    if not np.all(np.diff(t) > 0):
        raise MalformedProfile("profile time stamps must increase")
    i = int(np.argmax(f))
    if f[i] <= 0 or i == 0 or i == len(f) - 1:
        raise MalformedProfile("profile has no interior positive peak")
    t_peak, f_peak = _peak_time(t, f)
    pre = _area_until(t, f, t_peak)
    post = float(np.trapezoid(f, t)) - pre
    if pre <= 0:
        raise MalformedProfile("no impulse before the peak")
    ratio = post / pre
    half = math.pi * pre / f_peak  # half-sine with the same compression impulse
    start = t_peak - half
    phase = np.clip((t - start) / (2 * half), 0.0, 1.0)
    spring = f_peak * np.sin(math.pi * phase)
    rms = float(np.sqrt(np.mean((f - spring) ** 2)))
    return DeficiencyReport(
        inconsistent=bool(ratio > e_r_bound * (1.0 + rel_tol)),
        area_ratio=ratio,
        pre_peak_impulse=pre,
        post_peak_impulse=post,
        peak_force=f_peak,
        t_peak=t_peak,
        spring_fit_rms=rms,
    )


def write_trace(trace: ImpactTrace, csv_path, json_path=None) -> None:
    csv_path = Path(csv_path)
    json_path = Path(json_path) if json_path is not None else csv_path.with_suffix(".json")
    cols = [getattr(trace, name) for name in TRACE_COLUMNS]
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS + ("energy_residual",))
        for row in zip(*cols, trace.energy_residual):
            writer.writerow([repr(float(v)) for v in row])
    sidecar = {"schema_version": 1, "kind": "impact_trace", **trace.summary()}
    json_path.write_text(json.dumps(sidecar, indent=2))


def read_trace(csv_path, json_path=None) -> ImpactTrace:
    csv_path = Path(csv_path)
    json_path = Path(json_path) if json_path is not None else csv_path.with_suffix(".json")
    meta = json.loads(json_path.read_text())
    if meta.get("schema_version") != 1 or meta.get("kind") != "impact_trace":
        raise InputError(f"{json_path}: not an impact_trace sidecar (schema_version 1)")
    data = np.loadtxt(csv_path, delimiter=",", skiprows=1, ndmin=2)
    with open(csv_path) as fh:
        header = next(csv.reader(fh))
    if tuple(header[: len(TRACE_COLUMNS)]) != TRACE_COLUMNS:
        raise InputError(f"{csv_path}: unexpected header {header}")
    cols = {name: data[:, i] for i, name in enumerate(TRACE_COLUMNS)}
    model = ContactModel(meta["family"], meta["k"], meta["c"], meta["m_star"])
    return ImpactTrace(
        model=model,
        v_pre=meta["v_pre"],
        time=cols["time"],
        x=cols["x"],
        xdot=cols["xdot"],
        f_n=cols["f_n"],
        p_n=cols["p_n"],
        E_k=cols["E_k"],
        E_p=cols["E_p"],
        E_d=cols["E_d"],
        t_compression_end=meta["t_compression_end"],
        t_restitution_end=meta["t_restitution_end"],
        events=meta["events"],
        peak_force=meta["peak_force"],
        t_peak_force=meta["t_peak_force"],
        _dissipated=cols["E_d"],
    )
