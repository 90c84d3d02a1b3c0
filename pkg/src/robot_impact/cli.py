"""Command-line front end: ``robot-impact {iim,impulse,simulate,identify,sweep}``.

Every command prints a JSON summary on stdout and writes its files under
``--out`` (default: the scenario's ``output_dir`` or ``./impact_out``), in a
sub-directory named after the command. Exit codes: 0 success, 2 input or
parse error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .chain import ChainModel
from .contact import FAMILIES, MAXWELL, SPRING, VISCOELASTIC, ContactModel, simulate, write_trace
from .errors import ImpactError, InputError, NoDetachment, NumericalError
from .identification import FitResult, fit_maxwell, fit_viscoelastic, read_profile
from .iim import all_iims, em_matrix
from .io import Scenario, read_chain, read_scenario

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL = 0, 2, 3
IIM_METHODS = ("gm", "crb", "crb_flex")


def _matrix(w) -> list:
    return np.asarray(w).tolist()


def iim_report(model: ChainModel, q) -> dict:
    """All IIM candidates, the operational mass block and the identity residual."""
    n = model.normal
    out = {"chain": model.name, "q": np.asarray(q).tolist(), "normal": n.tolist(),
           "matrices": {}, "effective_mass": {}, "errors": {}}
    iims = all_iims(model, q)
    for name in IIM_METHODS:
        out["matrices"][name] = _matrix(iims[name].w)
        out["effective_mass"][name] = 1.0 / iims[name].along(n)
    try:
        em = em_matrix(model, q)
        out["matrices"]["em"] = _matrix(em)
        out["effective_mass"]["em"] = float(n @ em @ n)
    except NumericalError as exc:
        out["matrices"]["em"] = None
        out["effective_mass"]["em"] = None
        out["errors"]["em"] = f"[em] {exc}"
    gm = iims["gm"].w
    out["identity_residual"] = float(np.linalg.norm(gm - iims["crb_flex"].w) / np.linalg.norm(gm))
    return out


def impulse_report(model: ChainModel, q, speed: float, e_r: float = 0.0, measured: float | None = None) -> dict:
    """Normal impulses at compression end and restitution end for each IIM, plus
    the algebraic rule ``(1 + e_r) n^T em n |v|``."""
    if speed < 0:
        raise InputError("speed must be non-negative")
    if not 0.0 <= e_r <= 1.0:
        raise InputError("restitution coefficient must lie in [0, 1]")
    n = model.normal
    iims = all_iims(model, q)
    rows = {}
    for name in IIM_METHODS:
        along = iims[name].along(n)
        if not along > 0:
            raise NumericalError(f"[{name}] n^T W n is not positive")
        p_c = speed / along
        rows[name] = {"effective_mass": 1.0 / along, "p_compression_end": p_c, "p_restitution_end": (1 + e_r) * p_c}
    em_n = float(n @ em_matrix(model, q) @ n)
    rows["algebraic"] = {"effective_mass": em_n, "p_compression_end": em_n * speed,
                         "p_restitution_end": (1 + e_r) * em_n * speed}
    if measured is not None:
        for row in rows.values():
            row["measured"] = measured
            row["relative_error"] = (row["p_compression_end"] - measured) / measured if measured else math.nan
    order = sorted(rows, key=lambda k: rows[k]["p_compression_end"], reverse=True)
    return {"chain": model.name, "speed": speed, "e_r": e_r, "impulses": rows, "ordering": order}


def _contact_model(args, scenario: Scenario | None, m_star: float) -> ContactModel:
    spec = dict(scenario.contact_model or {}) if scenario is not None else {}
    if args.model is not None:
        spec["family"] = args.model
    if args.k is not None:
        spec["k"] = args.k
    if args.c is not None:
        spec["c"] = args.c
    if "family" not in spec or "k" not in spec:
        raise InputError("contact model needs --model and --k (or a scenario contact_model)")
    if spec["family"] == SPRING:
        spec["c"] = None
    return ContactModel(spec["family"], float(spec["k"]), None if spec.get("c") is None else float(spec["c"]), m_star)


def _simulate_row(task):
    model, speed = task
    tr = simulate(model, -speed)
    s = tr.summary()
    return {"cor": s["cor"], "duration": s["duration"], "peak_force": s["peak_force"],
            "energy_loss": s["energy_loss"], "impulse_restitution_end": s["impulse_restitution_end"]}


def sweep_rows(model: ChainModel, q, velocities, contact: ContactModel | None, e_r: float = 0.0,
               method: str = "crb", parallel: int = 1) -> list[dict]:
    """One row per speed, in the given order."""
    if not velocities:
        raise InputError("velocity list is empty")
    rows = []
    for speed in velocities:
        rep = impulse_report(model, q, speed, e_r)
        row = {"speed": speed}
        for name, r in rep["impulses"].items():
            row[f"p_{name}"] = r["p_compression_end"]
            row[f"p_{name}_restitution"] = r["p_restitution_end"]
        rows.append(row)
    if contact is not None:
        m_star = impulse_report(model, q, 1.0, e_r)["impulses"][method]["effective_mass"]
        c = ContactModel(contact.family, contact.k, contact.c, m_star)
        tasks = [(c, speed) for speed in velocities]
        if parallel > 1:
            with ProcessPoolExecutor(parallel) as pool:
                sims = list(pool.map(_simulate_row, tasks))
        else:
            sims = [_simulate_row(t) for t in tasks]
        for row, sim in zip(rows, sims):
            row.update({f"sim_{k}": v for k, v in sim.items()})
    return rows


def _fit_one(task):
    path, family, m_star, v_pre = task
    try:
        profile = read_profile(path)
        v = v_pre if v_pre is not None else profile.v_pre
        if v is None:
            raise InputError(f"{path}: no pre-impact velocity (sidecar v_pre or --velocity)")
        fit = fit_viscoelastic if family == VISCOELASTIC else fit_maxwell
        res: FitResult = fit(profile, m_star, -abs(v))
        row = res.row()
        row["label"] = row["label"] or Path(path).stem
        row.update(profile=str(path), error="")
    except ImpactError as exc:
        row = {"family": family, "profile": str(path), "v_pre": v_pre, "error": f"{type(exc).__name__}: {exc}"}
    return row


def identify_profiles(paths, m_star: float, families=(VISCOELASTIC, MAXWELL), v_pre: float | None = None,
                      parallel: int = 1) -> tuple[list[dict], list[dict]]:
    """Per-profile fits (failures kept as rows with an ``error``) and per-condition means."""
    if not paths:
        raise InputError("no profiles given")
    tasks = [(p, fam, m_star, v_pre) for fam in families for p in paths]
    if parallel > 1:
        with ProcessPoolExecutor(parallel) as pool:
            fits = list(pool.map(_fit_one, tasks))
    else:
        fits = [_fit_one(t) for t in tasks]
    groups: dict[tuple, list] = {}
    for row in fits:
        if not row["error"]:
            groups.setdefault((row["family"], round(row["v_pre"], 9)), []).append(row)
    means = []
    for (family, v), rows in groups.items():
        means.append({
            "family": family, "v_pre": v, "n": len(rows),
            "k_mean": float(np.mean([r["k"] for r in rows])),
            "c_mean": float(np.mean([r["c"] for r in rows])),
            "cor_mean": float(np.mean([r["cor"] for r in rows])),
            "cor_std": float(np.std([r["cor"] for r in rows])),
            "rms_mean": float(np.mean([r["rms"] for r in rows])),
        })
    means.sort(key=lambda r: (r["family"], -r["v_pre"]))
    return fits, means


def _write_csv(path: Path, rows: list[dict]) -> None:
    keys: list = []
    for r in rows:
        keys += [k for k in r if k not in keys]
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=keys)
        writer.writeheader()
        for r in rows:
            writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})


def _load(args) -> tuple[Scenario | None, ChainModel | None, np.ndarray | None]:
    scenario = read_scenario(args.scenario) if args.scenario else None
    if args.chain:
        model = read_chain(args.chain)
        q = scenario.q if scenario is not None else np.zeros(model.dof)
        model.check_q(q)
    elif scenario is not None:
        model, q = scenario.chain(), scenario.q
    else:
        model, q = None, None
    return scenario, model, q


def _outdir(args, scenario, command: str) -> Path:
    base = Path(args.out) if args.out else (scenario.output_dir if scenario and scenario.output_dir else Path("impact_out"))
    out = base / command
    out.mkdir(parents=True, exist_ok=True)
    return out


def _require_chain(model):
    if model is None:
        raise InputError("need --scenario or --chain")


def _speeds(args, scenario) -> list[float]:
    if args.velocity:
        return [abs(v) for v in args.velocity]
    if scenario is not None:
        return [scenario.speed]
    raise InputError("need --velocity or a scenario speed")


def cmd_iim(args) -> dict:
    scenario, model, q = _load(args)
    _require_chain(model)
    report = iim_report(model, q)
    (_outdir(args, scenario, "iim") / "iim.json").write_text(json.dumps(report, indent=2))
    return report


def cmd_impulse(args) -> dict:
    scenario, model, q = _load(args)
    _require_chain(model)
    e_r = scenario.e_r if scenario else 0.0
    measured = scenario.measured_impulse if scenario else None
    out = _outdir(args, scenario, "impulse")
    reports = [impulse_report(model, q, v, e_r, measured) for v in _speeds(args, scenario)]
    rows = [{"speed": r["speed"], "method": m, **vals} for r in reports for m, vals in r["impulses"].items()]
    _write_csv(out / "impulse.csv", rows)
    result = reports[0] if len(reports) == 1 else {"reports": reports}
    (out / "impulse.json").write_text(json.dumps(result, indent=2))
    return result


def _m_star(args, scenario, model, q) -> float:
    if args.m_star is not None:
        return args.m_star
    if scenario is not None and scenario.m_star is not None:
        return float(scenario.m_star)
    if model is None:
        raise InputError("need --m-star, a scenario m_star, or a chain to derive it from")
    method = scenario.iim_method if scenario else "crb"
    return impulse_report(model, q, 1.0)["impulses"][method]["effective_mass"]


def cmd_simulate(args) -> dict:
    scenario, model, q = _load(args)
    m_star = _m_star(args, scenario, model, q)
    contact = _contact_model(args, scenario, m_star)
    speeds = _speeds(args, scenario)
    out = _outdir(args, scenario, "simulate")
    summaries = []
    for speed in speeds:
        if not speed > 0:
            raise InputError("simulation speed must be positive")
        trace = simulate(contact, -speed)
        stem = f"trace_v{speed:.4f}" if len(speeds) > 1 else "trace"
        write_trace(trace, out / f"{stem}.csv", out / f"{stem}.json")
        summaries.append(trace.summary())
    return summaries[0] if len(summaries) == 1 else {"runs": summaries}


def cmd_identify(args) -> dict:
    if not args.profiles:
        raise InputError("no profiles given (use --profiles FILE ...)")
    if args.m_star is None:
        raise InputError("--m-star is required for identification")
    families = (args.model,) if args.model else (VISCOELASTIC, MAXWELL)
    if any(f == SPRING for f in families):
        raise InputError("identification supports viscoelastic and maxwell")
    v = -abs(args.velocity[0]) if args.velocity else None
    fits, means = identify_profiles(args.profiles, args.m_star, families, v, args.parallel)
    out = _outdir(args, None, "identify")
    _write_csv(out / "fits.csv", fits)
    _write_csv(out / "cor_vs_velocity.csv", means)
    failed = [r for r in fits if r["error"]]
    return {"fits": len(fits), "failed": len(failed), "failures": failed, "conditions": means}


def cmd_sweep(args) -> dict:
    scenario, model, q = _load(args)
    _require_chain(model)
    speeds = [abs(v) for v in args.velocity] if args.velocity else (scenario.velocities if scenario else [])
    contact = None
    if args.model or (scenario and scenario.contact_model):
        contact = _contact_model(args, scenario, 1.0)
    rows = sweep_rows(model, q, speeds, contact, scenario.e_r if scenario else 0.0,
                      scenario.iim_method if scenario else "crb", args.parallel)
    out = _outdir(args, scenario, "sweep")
    _write_csv(out / "sweep.csv", rows)
    return {"rows": rows, "csv": str(out / "sweep.csv")}


COMMANDS = {"iim": cmd_iim, "impulse": cmd_impulse, "simulate": cmd_simulate,
            "identify": cmd_identify, "sweep": cmd_sweep}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="robot-impact", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--scenario", help="scenario JSON file")
        p.add_argument("--chain", help="chain JSON file (overrides the scenario's chain)")
        p.add_argument("--out", help="output directory")
        p.add_argument("--model", choices=FAMILIES, help="contact model family")
        p.add_argument("--k", type=float, help="stiffness [N/m]")
        p.add_argument("--c", type=float, help="damping (N s/m^2 viscoelastic, N s/m maxwell)")
        p.add_argument("--velocity", type=float, nargs="+", help="approach speed(s) [m/s]")
        p.add_argument("--profiles", nargs="+", help="force profile CSV files (with .json sidecars)")
        p.add_argument("--m-star", type=float, dest="m_star", help="effective mass [kg]")
        p.add_argument("--parallel", type=int, default=1, metavar="N", help="worker processes")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        result = COMMANDS[args.command](args)
    except NoDetachment as exc:
        print(f"error: {exc} (horizon {exc.horizon:.6g} s)", file=sys.stderr)
        return EXIT_NUMERICAL
    except (InputError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NumericalError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(json.dumps(result, indent=2, default=float))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
