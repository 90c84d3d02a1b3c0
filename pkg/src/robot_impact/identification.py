"""Grey-box identification of contact parameters from measured force lobes.

The effective mass and the pre-impact velocity are inputs; only ``(k, c)`` are
fitted, by minimising the force-domain RMS error between the profile and the
simulated contact force at the profile's own time stamps. Profile time zero is
taken as the instant of first contact.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.optimize import least_squares, minimize

from .contact import (
    MAXWELL,
    VISCOELASTIC,
    ContactModel,
    SimulationSettings,
    force_at,
    simulate,
)
from .errors import ChainFileError, FitDiverged, MalformedProfile, NoImpactFound, NumericalError

FIT_SETTINGS = SimulationSettings(rtol=1e-8)
MIN_LOBE_SAMPLES = 20


@dataclass(frozen=True)
class ForceProfile:
    rate_hz: float
    time: np.ndarray
    force: np.ndarray
    v_pre: float | None = None
    label: str = ""

    def __post_init__(self):
        t = np.asarray(self.time, dtype=float)
        f = np.asarray(self.force, dtype=float)
        if t.ndim != 1 or t.shape != f.shape or len(t) == 0:
            raise MalformedProfile("time and force must be non-empty vectors of equal length")
        if not self.rate_hz > 0:
            raise MalformedProfile("sample rate must be positive")
        if len(t) > 1 and np.abs(np.diff(t) * self.rate_hz - 1.0).max() > 1e-3:
            raise MalformedProfile("profile is not uniformly sampled at the stated rate")
        if self.v_pre is not None and not self.v_pre < 0:
            raise MalformedProfile("v_pre must be negative (approaching)")
        object.__setattr__(self, "time", t)
        object.__setattr__(self, "force", f)

    @classmethod
    def from_samples(cls, force, rate_hz: float, t0: float = 0.0, **meta) -> ForceProfile:
        force = np.asarray(force, dtype=float)
        return cls(rate_hz, t0 + np.arange(len(force)) / rate_hz, force, **meta)

    def __len__(self) -> int:
        return len(self.time)

    @property
    def duration(self) -> float:
        return float(self.time[-1] - self.time[0]) if len(self.time) > 1 else 0.0


@dataclass
class FitResult:
    family: str
    k: float
    c: float
    m_star: float
    v_pre: float
    rms: float
    cor: float
    iterations: int
    step_norm: float
    success: bool = True
    label: str = ""
    starts: list = field(default_factory=list, repr=False)

    def model(self) -> ContactModel:
        return ContactModel(self.family, self.k, self.c, self.m_star)

    def row(self) -> dict:
        d = asdict(self)
        d.pop("starts")
        return d


def trim_first_impact(profile: ForceProfile, threshold: float) -> ForceProfile:
    """Keep the first lobe: from the first sample at or above ``threshold`` up to
    (excluding) the first later sample below it."""
    f = profile.force
    above = f >= threshold
    if not above.any():
        raise NoImpactFound(f"force never reaches {threshold} N")
    i0 = int(np.argmax(above))
    below = np.flatnonzero(~above[i0:])
    i1 = i0 + int(below[0]) if len(below) else len(f)
    return replace(profile, time=profile.time[i0:i1], force=f[i0:i1])


def smooth(profile: ForceProfile, width: int) -> ForceProfile:
    """Zero-phase (centred) moving average of odd ``width`` samples."""
    if width < 1 or width % 2 == 0:
        raise ValueError("width must be a positive odd integer")
    if width == 1:
        return profile
    kernel = np.ones(width) / width
    padded = np.pad(profile.force, width // 2, mode="edge")
    return replace(profile, force=np.convolve(padded, kernel, mode="valid"))


def estimate_cor_from_profile(profile: ForceProfile, m_star: float, v_pre: float) -> tuple[float, bool]:
    """Restitution coefficient implied by the total impulse of the lobe.

    Returns ``(e_r, in_range)``; the value is never clipped, ``in_range``
    reports whether it lies in [0, 1].
    """
    if len(profile) < 2:
        raise MalformedProfile("profile too short to integrate")
    impulse = float(np.trapezoid(profile.force, profile.time))
    if impulse <= 0:
        raise MalformedProfile("profile impulse is not positive")
    e_r = impulse / (m_star * abs(v_pre)) - 1.0
    return e_r, bool(0.0 <= e_r <= 1.0)


def _initial_guess(profile: ForceProfile, m_star: float, v_pre: float, family: str) -> tuple[float, float]:
    peak = float(profile.force.max())
    lobe = profile.duration + 1.0 / profile.rate_hz
    if peak <= 0 or lobe <= 0:
        raise FitDiverged("profile has no positive lobe to fit")
    k0 = peak / (abs(v_pre) * lobe / 4.0)
    if family == VISCOELASTIC:
        c0 = k0 / (0.5 * abs(v_pre))
    else:
        # series dashpot: two critical-damping units keeps the force lobe closed
        c0 = 2.0 * math.sqrt(k0 * m_star)
    return k0, c0


def _model_cor(family: str, k: float, c: float, m_star: float, v_pre: float) -> float:
    if family == VISCOELASTIC:
        return -(k / c) / v_pre
    return simulate(ContactModel(family, k, c, m_star), v_pre, FIT_SETTINGS).cor


def _fit(
    family: str,
    profile: ForceProfile,
    m_star: float,
    v_pre: float,
    max_rel_rms: float = 0.25,
    max_iterations: int = 200,
) -> FitResult:
    if len(profile) < MIN_LOBE_SAMPLES:
        raise MalformedProfile(f"need at least {MIN_LOBE_SAMPLES} samples over the lobe, got {len(profile)}")
    if not m_star > 0 or not v_pre < 0:
        raise ValueError("m_star must be positive and v_pre negative")
    t, f = profile.time, profile.force
    k0, c0 = _initial_guess(profile, m_star, v_pre, family)
    scale = max(float(np.abs(f).max()), 1e-300)
    penalty = np.full_like(f, 10.0)
    log0 = np.log([k0, c0])

    def residual(theta):
        k, c = np.exp(theta)
        try:
            sim = force_at(ContactModel(family, k, c, m_star), v_pre, t, FIT_SETTINGS)
        except NumericalError:
            return penalty
        return (sim - f) / scale

    def cost(theta):
        r = residual(theta)
        return float(r @ r)

    # centre plus a 2 x 2 log-spaced grid; one short simplex run from the best point
    offsets = np.log(3.0) * np.array([[0, 0], [-1, -1], [-1, 1], [1, -1], [1, 1]]) / 2
    starts = [(cost(log0 + off), log0 + off, 1) for off in offsets]
    _, x_start, _ = min(starts, key=lambda s: s[0])
    res = minimize(cost, x_start, method="Nelder-Mead",
                   options={"xatol": 1e-3, "fatol": 1e-14, "maxfev": 20})
    best_cost, best_x = float(res.fun), res.x
    starts.append((best_cost, best_x, int(res.nfev)))

    ls = least_squares(residual, best_x, method="lm", x_scale=1.0, diff_step=1e-7,
                       xtol=1e-12, ftol=1e-12, gtol=1e-12, max_nfev=max_iterations)
    theta = ls.x if 2 * ls.cost <= best_cost else best_x
    k, c = (float(v) for v in np.exp(theta))
    r = residual(theta)
    rms = float(np.sqrt(np.mean(r * r))) * scale
    J = ls.jac
    try:
        step = np.linalg.lstsq(J, -ls.fun, rcond=None)[0]
        step_norm = float(np.linalg.norm(step))
    except np.linalg.LinAlgError:
        step_norm = math.inf
    iterations = sum(s[2] for s in starts) + int(ls.nfev)
    try:
        cor = _model_cor(family, k, c, m_star, v_pre)
    except NumericalError:
        cor = math.nan
    result = FitResult(
        family=family, k=k, c=c, m_star=m_star, v_pre=v_pre, rms=rms, cor=cor,
        iterations=iterations, step_norm=step_norm, success=True, label=profile.label,
        starts=[(float(np.exp(s[1][0])), float(np.exp(s[1][1])), s[0]) for s in starts],
    )
    if ls.status <= 0 or not np.isfinite(rms) or rms > max_rel_rms * scale or not np.isfinite(cor):
        result.success = False
        raise FitDiverged(
            f"{family} fit did not converge (status {ls.status}, rms {rms:.4g} N vs peak {scale:.4g} N)", best=result
        )
    return result


def fit_viscoelastic(profile: ForceProfile, m_star: float, v_pre: float, **kw) -> FitResult:
    return _fit(VISCOELASTIC, profile, m_star, v_pre, **kw)


def fit_maxwell(profile: ForceProfile, m_star: float, v_pre: float, **kw) -> FitResult:
    return _fit(MAXWELL, profile, m_star, v_pre, **kw)


def synthetic_profile(model: ContactModel, v_pre: float, rate_hz: float = 25_000.0,
                      noise: float = 0.0, rng: np.random.Generator | None = None, label: str = "") -> ForceProfile:
    """Sampled force lobe of ``model``.

    ``noise`` is the standard deviation of additive Gaussian noise as a
    fraction of the peak force.
    """
    tr = simulate(model, v_pre, SimulationSettings(rate_hz=rate_hz))
    n = int(np.floor(tr.t_restitution_end * rate_hz)) + 1
    times = np.arange(n) / rate_hz
    force = force_at(model, v_pre, times)
    if noise:
        rng = rng if rng is not None else np.random.default_rng()
        force = force + noise * force.max() * rng.standard_normal(n)
    return ForceProfile(rate_hz, times, force, v_pre=v_pre, label=label)


PROFILE_SCHEMA_VERSION = 1
_PROFILE_META_KEYS = {"schema_version", "rate_hz", "v_pre", "label"}


def write_profile(profile: ForceProfile, csv_path) -> Path:
    csv_path = Path(csv_path)
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time_s", "force_n"])
        for t, f in zip(profile.time, profile.force):
            writer.writerow([repr(float(t)), repr(float(f))])
    meta = {"schema_version": PROFILE_SCHEMA_VERSION, "rate_hz": profile.rate_hz,
            "v_pre": profile.v_pre, "label": profile.label}
    csv_path.with_suffix(".json").write_text(json.dumps(meta, indent=2))
    return csv_path


def read_profile(csv_path) -> ForceProfile:
    csv_path = Path(csv_path)
    meta_path = csv_path.with_suffix(".json")
    try:
        meta = json.loads(meta_path.read_text())
    except FileNotFoundError as exc:
        raise ChainFileError(f"{csv_path}: missing metadata sidecar {meta_path.name}") from exc
    except json.JSONDecodeError as exc:
        raise ChainFileError(f"{meta_path}: invalid JSON ({exc})") from exc
    unknown = set(meta) - _PROFILE_META_KEYS
    if unknown:
        raise ChainFileError(f"{meta_path}: unknown field(s) {sorted(unknown)}")
    if meta.get("schema_version") != PROFILE_SCHEMA_VERSION:
        raise ChainFileError(f"{meta_path}: schema_version must be {PROFILE_SCHEMA_VERSION}")
    if "rate_hz" not in meta:
        raise ChainFileError(f"{meta_path}: missing field 'rate_hz'")
    with open(csv_path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [h.strip() for h in rows[0]] != ["time_s", "force_n"]:
        raise ChainFileError(f"{csv_path}: header must be 'time_s,force_n'")
    try:
        data = np.array([[float(a), float(b)] for a, b in rows[1:]], dtype=float)
    except ValueError as exc:
        raise ChainFileError(f"{csv_path}: non-numeric sample ({exc})") from exc
    if data.size == 0:
        raise ChainFileError(f"{csv_path}: no samples")
    return ForceProfile(float(meta["rate_hz"]), data[:, 0], data[:, 1],
                        v_pre=meta.get("v_pre"), label=meta.get("label", ""))
