"""Chain description and scenario files (JSON, schema_version 1, SI units only).

Chain file::

    {
      "schema_version": 1,
      "name": "...",
      "units": "SI",
      "links":  [{"name", "mass", "com": [3], "inertia": {"ixx","ixy","ixz","iyy","iyz","izz"}}],
      "joints": [{"type": "revolute"|"prismatic", "axis": [3],
                  "origin": {"xyz": [3], "rpy": [3]}}],
      "contact": {"link": name-or-index, "point": [3], "normal": [3]}
    }

Inertia entries are about the link COM in link axes. ``mass: 0`` declares a
massless virtual link. Angles are radians; anything else is rejected.

Scenario file::

    {
      "schema_version": 1,
      "chain": "relative/or/absolute/path.json",
      "q": [n],
      "speed": 0.1754,
      "e_r": 0.0,
      "iim_method": "crb",
      "contact_model": {"family": "viscoelastic", "k": 5e4, "c": 1.6e6},
      "m_star": null,
      "velocities": [0.08, 0.10],
      "measured_impulse": null,
      "output_dir": "out"
    }
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .chain import ChainModel, Contact, Joint, Link, build_chain
from .errors import ChainFileError, InputError
from .spatial import SpatialInertia, SpatialTransform, rpy_to_rotation

SCHEMA_VERSION = 1

_CHAIN_KEYS = {"schema_version", "name", "units", "links", "joints", "contact", "description"}
_LINK_KEYS = {"name", "mass", "com", "inertia", "parent"}
_INERTIA_KEYS = {"ixx", "ixy", "ixz", "iyy", "iyz", "izz"}
_JOINT_KEYS = {"type", "axis", "origin", "name"}
_ORIGIN_KEYS = {"xyz", "rpy"}
_CONTACT_KEYS = {"link", "point", "normal"}
_SCENARIO_KEYS = {
    "schema_version", "chain", "q", "speed", "e_r", "iim_method", "contact_model",
    "m_star", "velocities", "measured_impulse", "output_dir", "description",
}
_MODEL_KEYS = {"family", "k", "c"}


def _fields(obj, allowed: set, where: str, required: set = frozenset()) -> dict:
    if not isinstance(obj, dict):
        raise ChainFileError(f"{where}: expected an object")
    unknown = set(obj) - allowed
    if unknown:
        raise ChainFileError(f"{where}: unknown field(s) {sorted(unknown)}")
    missing = set(required) - set(obj)
    if missing:
        raise ChainFileError(f"{where}: missing field(s) {sorted(missing)}")
    return obj


def _vec(value, n: int, where: str) -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ChainFileError(f"{where}: expected {n} numbers") from exc
    if arr.shape != (n,) or not np.all(np.isfinite(arr)):
        raise ChainFileError(f"{where}: expected {n} finite numbers, got {value!r}")
    return arr


def _inertia_matrix(d: dict, where: str) -> np.ndarray:
    _fields(d, _INERTIA_KEYS, where, _INERTIA_KEYS)
    ixx, ixy, ixz, iyy, iyz, izz = (float(d[key]) for key in ("ixx", "ixy", "ixz", "iyy", "iyz", "izz"))
    return np.array([[ixx, ixy, ixz], [ixy, iyy, iyz], [ixz, iyz, izz]])


def chain_from_dict(data: dict, source: str = "<chain>") -> ChainModel:
    _fields(data, _CHAIN_KEYS, source, {"schema_version", "links", "joints", "contact"})
    if data["schema_version"] != SCHEMA_VERSION:
        raise ChainFileError(f"{source}: schema_version must be {SCHEMA_VERSION}")
    if data.get("units", "SI") != "SI":
        raise ChainFileError(f"{source}.units: only SI units (radians, metres, kg) are accepted")
    links_in, joints_in = data["links"], data["joints"]
    if not isinstance(links_in, list) or not isinstance(joints_in, list) or not links_in:
        raise ChainFileError(f"{source}: links and joints must be non-empty lists")
    if len(links_in) != len(joints_in):
        raise ChainFileError(f"{source}: {len(links_in)} links but {len(joints_in)} joints")

    links, joints = [], []
    names = []
    for i, (ld, jd) in enumerate(zip(links_in, joints_in)):
        lw = f"{source}.links[{i}]"
        jw = f"{source}.joints[{i}]"
        _fields(ld, _LINK_KEYS, lw, {"name", "mass"})
        _fields(jd, _JOINT_KEYS, jw, {"type", "axis"})
        name = str(ld["name"])
        if ld.get("parent", i - 1) not in (i - 1, names[-1] if names else "world"):
            raise ChainFileError(f"{lw}.parent: only serial chains are supported")
        mass = float(ld["mass"])
        if mass < 0 or not math.isfinite(mass):
            raise ChainFileError(f"{lw}.mass: must be a non-negative number")
        try:
            if mass == 0:
                inertia = None
            else:
                inertia = SpatialInertia.from_com(
                    mass,
                    _vec(ld.get("com", [0, 0, 0]), 3, lw + ".com"),
                    _inertia_matrix(ld.get("inertia", {}), lw + ".inertia"),
                    name,
                )
        except InputError as exc:
            if isinstance(exc, ChainFileError):
                raise
            raise ChainFileError(f"{lw}: {exc}") from exc
        origin = _fields(jd.get("origin", {}), _ORIGIN_KEYS, jw + ".origin")
        rpy = _vec(origin.get("rpy", [0, 0, 0]), 3, jw + ".origin.rpy")
        if np.abs(rpy).max() > 2 * math.pi:
            raise ChainFileError(f"{jw}.origin.rpy: angles must be radians (got {rpy.tolist()})")
        axis = _vec(jd["axis"], 3, jw + ".axis")
        if abs(np.linalg.norm(axis) - 1.0) > 1e-9:
            raise ChainFileError(f"{jw}.axis: must be a unit vector")
        parent = "world" if i == 0 else names[-1]
        try:
            joints.append(Joint(
                str(jd["type"]),
                axis / np.linalg.norm(axis),
                SpatialTransform(rpy_to_rotation(*rpy), _vec(origin.get("xyz", [0, 0, 0]), 3, jw + ".origin.xyz"),
                                 name + ".joint", parent),
            ))
        except InputError as exc:
            raise ChainFileError(f"{jw}: {exc}") from exc
        links.append(Link(name, inertia, i - 1))
        names.append(name)

    cd = _fields(data["contact"], _CONTACT_KEYS, source + ".contact", _CONTACT_KEYS)
    link = cd["link"]
    if isinstance(link, str):
        if link not in names:
            raise ChainFileError(f"{source}.contact.link: no link named {link!r}")
        link = names.index(link)
    normal = _vec(cd["normal"], 3, source + ".contact.normal")
    if abs(np.linalg.norm(normal) - 1.0) > 1e-9:
        raise ChainFileError(f"{source}.contact.normal: must be a unit vector")
    try:
        contact = Contact(int(link), _vec(cd["point"], 3, source + ".contact.point"), normal / np.linalg.norm(normal))
        return ChainModel(tuple(links), tuple(joints), contact, str(data.get("name", "chain")))
    except ChainFileError:
        raise
    except InputError as exc:
        raise ChainFileError(f"{source}: {exc}") from exc


def _rotation_to_rpy(R: np.ndarray) -> list[float]:
    pitch = math.asin(-max(-1.0, min(1.0, R[2, 0])))
    if abs(math.cos(pitch)) > 1e-9:
        roll = math.atan2(R[2, 1], R[2, 2])
        yaw = math.atan2(R[1, 0], R[0, 0])
    else:
        roll = math.atan2(-R[1, 2], R[1, 1])
        yaw = 0.0
    return [roll, pitch, yaw]


def chain_to_dict(model: ChainModel) -> dict:
    links, joints = [], []
    for link, joint in zip(model.links, model.joints):
        if link.inertia is None:
            links.append({"name": link.name, "mass": 0.0})
        else:
            I = link.inertia.inertia_about_com
            links.append({
                "name": link.name,
                "mass": float(link.inertia.mass),
                "com": link.inertia.com_offset.tolist(),
                "inertia": {"ixx": I[0, 0], "ixy": I[0, 1], "ixz": I[0, 2],
                            "iyy": I[1, 1], "iyz": I[1, 2], "izz": I[2, 2]},
            })
        joints.append({
            "type": joint.type,
            "axis": joint.axis.tolist(),
            "origin": {"xyz": joint.origin.translation.tolist(), "rpy": _rotation_to_rpy(joint.origin.rotation)},
        })
    return {
        "schema_version": SCHEMA_VERSION,
        "name": model.name,
        "units": "SI",
        "links": links,
        "joints": joints,
        "contact": {
            "link": model.links[model.contact.link].name,
            "point": model.contact.point.tolist(),
            "normal": model.contact.normal.tolist(),
        },
    }


def _load_json(path: Path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ChainFileError(f"{path}: file not found") from exc
    except json.JSONDecodeError as exc:
        raise ChainFileError(f"{path}: invalid JSON ({exc})") from exc


def read_chain(path) -> ChainModel:
    return chain_from_dict(_load_json(Path(path)), str(path))


def write_chain(model: ChainModel, path) -> None:
    Path(path).write_text(json.dumps(chain_to_dict(model), indent=2))


def example_chain_path() -> Path:
    return Path(str(resources.files("robot_impact") / "data" / "example_7dof.json"))


def example_scenario_path() -> Path:
    return Path(str(resources.files("robot_impact") / "data" / "example_scenario.json"))


def load_example_chain() -> ChainModel:
    """Bundled 7-DOF chain with manipulator-scale inertias. Not a Panda model."""
    return read_chain(example_chain_path())


@dataclass
class Scenario:
    chain_path: Path
    q: np.ndarray
    speed: float
    e_r: float = 0.0
    iim_method: str = "crb"
    contact_model: dict | None = None
    m_star: float | None = None
    velocities: list = field(default_factory=list)
    measured_impulse: float | None = None
    output_dir: Path | None = None

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float)
        if not self.speed > 0:
            raise ChainFileError("scenario.speed: must be positive (approach speed along -normal)")
        if not 0.0 <= self.e_r <= 1.0:
            raise ChainFileError("scenario.e_r: must lie in [0, 1]")
        if self.iim_method not in ("gm", "crb", "crb_flex"):
            raise ChainFileError("scenario.iim_method: one of gm, crb, crb_flex")
        if any(not v > 0 for v in self.velocities):
            raise ChainFileError("scenario.velocities: speeds must be positive")

    def chain(self) -> ChainModel:
        model = read_chain(self.chain_path)
        if self.q.shape != (model.dof,):
            raise ChainFileError(f"scenario.q: expected {model.dof} values, got {self.q.size}")
        return model


def scenario_from_dict(data: dict, base_dir: Path, source: str = "<scenario>") -> Scenario:
    _fields(data, _SCENARIO_KEYS, source, {"schema_version", "chain", "q", "speed"})
    if data["schema_version"] != SCHEMA_VERSION:
        raise ChainFileError(f"{source}: schema_version must be {SCHEMA_VERSION}")
    chain = Path(data["chain"])
    if not chain.is_absolute():
        chain = base_dir / chain
    if not chain.exists():
        raise ChainFileError(f"{source}.chain: {chain} does not exist")
    model = data.get("contact_model")
    if model is not None:
        _fields(model, _MODEL_KEYS, source + ".contact_model", {"family", "k"})
    q = data["q"]
    if not isinstance(q, list) or not all(isinstance(v, (int, float)) for v in q):
        raise ChainFileError(f"{source}.q: expected a list of numbers")
    try:
        speed = float(data["speed"])
    except (TypeError, ValueError) as exc:
        raise ChainFileError(f"{source}.speed: expected a number") from exc
    out = data.get("output_dir")
    return Scenario(
        chain_path=chain,
        q=np.asarray(q, dtype=float),
        speed=speed,
        e_r=float(data.get("e_r", 0.0)),
        iim_method=str(data.get("iim_method", "crb")),
        contact_model=model,
        m_star=data.get("m_star"),
        velocities=[float(v) for v in data.get("velocities", [])],
        measured_impulse=data.get("measured_impulse"),
        output_dir=None if out is None else (Path(out) if Path(out).is_absolute() else base_dir / out),
    )


def read_scenario(path) -> Scenario:
    path = Path(path)
    return scenario_from_dict(_load_json(path), path.parent, str(path))


def scenario_to_dict(s: Scenario) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "chain": str(s.chain_path),
        "q": s.q.tolist(),
        "speed": s.speed,
        "e_r": s.e_r,
        "iim_method": s.iim_method,
        "contact_model": s.contact_model,
        "m_star": s.m_star,
        "velocities": list(s.velocities),
        "measured_impulse": s.measured_impulse,
        "output_dir": None if s.output_dir is None else str(s.output_dir),
    }


def write_scenario(s: Scenario, path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(s), indent=2))
