"""
Command-line front end.

    uccsim surface  --rmin 0.5 --rmax 4.0 --rstep 0.1          ground-state curve
    uccsim vqe      --r 1.7 --params 2 --shots 1000 --seed 7   one optimization trace
    uccsim field    --r 1.7 --fmin -0.1 --fmax 0.1 --fstep 0.01
    uccsim excited  --r 1.7 --lmin -4 --lmax 1 --lstep 0.05
    uccsim integrals --r 1.7                                    h1/h2, Pauli terms, counts

Values come from defaults, then ``--config FILE`` (JSON), then flags.
Exit status: 0 success, 1 usage error, 2 computational failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from uccsim.ansatz import FULL6, REDUCED2
from uccsim.hamiltonian import heh_problem, jw_transform, matrix_to_json
from uccsim.measurement import term_accounting
from uccsim.neldermead import OptimizerError
from uccsim.scf import SCFConvergenceError
from uccsim.vqe import (EXACT, FOLDED_DEFAULTS, SHOTS, VqeSettings, dissociation_scan, field_scan,
                        folded_scan, vqe_ground)

log = logging.getLogger("uccsim")

SUBCOMMANDS = ("surface", "vqe", "field", "excited", "integrals")

DEFAULTS = {
    "r": 1.7, "rmin": 0.5, "rmax": 4.0, "rstep": 0.1,
    "fmin": -0.1, "fmax": 0.1, "fstep": 0.01,
    "lmin": -4.0, "lmax": 1.0, "lstep": 0.05,
    "mode": None, "shots": None, "seed": None, "params": 2, "trotter": 2, "exact_prep": False,
    "estimator": "tomography", "energy": "total", "format": "csv", "output": None, "workers": 1,
}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    subcommand: str
    values: dict = field(default_factory=dict)

    def __getattr__(self, name):
        try:
            return self.values[name]
        except KeyError:
            raise AttributeError(name) from None

    def echo(self) -> dict:
        return {"subcommand": self.subcommand, **self.values}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    common = _Parser(add_help=False, argument_default=S)
    common.add_argument("--config", help="JSON file with option values")
    common.add_argument("--output", "-o", help="output path (default stdout)")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--seed", type=int, help="base RNG seed (required for shot mode)")
    common.add_argument("--mode", choices=(EXACT, SHOTS), help="energy measurement mode")
    common.add_argument("--shots", type=int, help="shots per measurement setting")
    common.add_argument("--params", type=int, choices=(2, 6), help="cluster parameters (2 or 6)")
    common.add_argument("--trotter", type=int, help="Suzuki-Trotter steps")
    common.add_argument("--exact-prep", action="store_true", help="exact exponential instead of Trotter")
    common.add_argument("--estimator", choices=("tomography", "terms"))
    common.add_argument("--energy", choices=("total", "electronic"), help="energy convention")
    common.add_argument("--workers", type=int, help="worker processes for scans")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="uccsim", description="UCC variational eigensolver simulator for HeH+")
    sub = parser.add_subparsers(dest="subcommand", parser_class=_Parser)
    p = sub.add_parser("surface", parents=[common], argument_default=S, help="dissociation curve")
    p.add_argument("--rmin", type=float)
    p.add_argument("--rmax", type=float)
    p.add_argument("--rstep", type=float)
    p = sub.add_parser("vqe", parents=[common], argument_default=S, help="single-point optimization trace")
    p.add_argument("--r", type=float)
    p = sub.add_parser("field", parents=[common], argument_default=S, help="static axial field scan")
    p.add_argument("--r", type=float)
    p.add_argument("--fmin", type=float)
    p.add_argument("--fmax", type=float)
    p.add_argument("--fstep", type=float)
    p = sub.add_parser("excited", parents=[common], argument_default=S, help="folded-spectrum scan")
    p.add_argument("--r", type=float)
    p.add_argument("--lmin", type=float)
    p.add_argument("--lmax", type=float)
    p.add_argument("--lstep", type=float)
    p = sub.add_parser("integrals", parents=[common], argument_default=S, help="dump h tensors and Pauli terms")
    p.add_argument("--r", type=float)
    return parser


def resolve_config(argv) -> RunConfig:
    ns = vars(build_parser().parse_args(argv))
    sub = ns.pop("subcommand", None)
    if sub is None:
        raise UsageError("a subcommand is required: " + ", ".join(SUBCOMMANDS))
    values = dict(DEFAULTS)
    if "config" in ns:
        try:
            with open(ns.pop("config")) as fh:
                from_file = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config file: {exc}") from exc
        unknown = set(from_file) - set(DEFAULTS) - {"verbose"}
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        values.update(from_file)
    values.update(ns)
    values.setdefault("verbose", False)
    if values["mode"] is None:
        values["mode"] = SHOTS if values["shots"] is not None else EXACT
    if values["shots"] is None:
        values["shots"] = 1000
    _validate(sub, values)
    return RunConfig(sub, values)


def _validate(sub, v):
    for key in ("shots", "trotter", "workers"):
        if int(v[key]) != v[key] or v[key] < 1:
            raise UsageError(f"--{key} must be a positive integer")
    for key in ("r", "rmin", "rmax", "rstep", "fstep", "lstep"):
        if not (isinstance(v[key], (int, float)) and math.isfinite(v[key]) and v[key] > 0):
            raise UsageError(f"--{key} must be positive")
    for key in ("fmin", "fmax", "lmin", "lmax"):
        if not math.isfinite(v[key]):
            raise UsageError(f"--{key} must be finite")
    if v["params"] not in (2, 6):
        raise UsageError("--params must be 2 or 6")
    if v["mode"] == SHOTS and v["seed"] is None:
        raise UsageError("--seed is required in shot mode")
    if sub == "surface" and v["rmax"] < v["rmin"]:
        raise UsageError("--rmax must not be below --rmin")
    if sub == "field" and v["fmax"] < v["fmin"]:
        raise UsageError("--fmax must not be below --fmin")
    if sub == "excited" and v["lmax"] < v["lmin"]:
        raise UsageError("--lmax must not be below --lmin")


def grid(lo: float, hi: float, step: float) -> list[float]:
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [round(lo + i * step, 12) for i in range(n)]


def vqe_settings(cfg: RunConfig, **overrides) -> VqeSettings:
    kw = dict(
        params=FULL6 if cfg.params == 6 else REDUCED2,
        trotter_steps=None if cfg.exact_prep else cfg.trotter,
        measurement=cfg.mode, shots=cfg.shots, seed=cfg.seed or 0, estimator=cfg.estimator,
        polish_exact=cfg.mode == EXACT and not cfg.exact_prep,
    )
    kw.update(overrides)
    return VqeSettings(**kw)


def _conv(cfg: RunConfig) -> str:
    return "total" if cfg.energy == "total" else "elec"


def _pick(rec, name, conv):
    return rec.get(f"{name}_{conv}", float("nan"))


def run_surface(cfg: RunConfig):
    records = dissociation_scan(grid(cfg.rmin, cfg.rmax, cfg.rstep), vqe_settings(cfg), workers=cfg.workers)
    conv = _conv(cfg)
    rows = []
    for rec in records:
        if rec["status"] != "ok":
            log.warning("R=%s failed: %s", rec["R"], rec["status"])
        rows.append({
            "R": rec["R"], "E_vqe": _pick(rec, "E_vqe", conv), "E_exact": _pick(rec, "E_exact", conv),
            "iterations": rec.get("iterations", -1), "fidelity": rec.get("fidelity", float("nan")),
            "stderr": rec.get("stderr", float("nan")),
        })
    return rows, records


def run_vqe(cfg: RunConfig):
    problem = heh_problem(cfg.r)
    offset = problem.Enn if cfg.energy == "total" else 0.0
    res = vqe_ground(problem.H.with_offset(offset), vqe_settings(cfg))
    rows = [{"iteration": t.iteration, "energy": t.energy, "accepted": int(t.accepted),
             "fidelity": t.fidelity, "stderr": t.stderr} for t in res.trace]
    summary = {
        "R": cfg.r, "energy": res.energy, "stderr": res.stderr, "exact_energy": res.exact_energy,
        "fidelity": res.fidelity, "iterations": res.iterations, "evaluations": res.evaluations,
        "converged": res.converged, "restarts": res.restarts,
        "amplitudes": {k: [v.real, v.imag] for k, v in res.amplitudes.as_dict().items()},
        "energy_convention": cfg.energy,
    }
    return rows, {"summary": summary, "trace": rows}


def run_field(cfg: RunConfig):
    records = field_scan(cfg.r, grid(cfg.fmin, cfg.fmax, cfg.fstep), vqe_settings(cfg), workers=cfg.workers)
    conv = _conv(cfg)
    rows = [{
        "field": rec["field"], "E_vqe": _pick(rec, "E_vqe", conv), "E_exact": _pick(rec, "E_exact", conv),
        "E_first": _pick(rec, "E_first", conv), "E_second": _pick(rec, "E_second", conv),
        "iterations": rec["iterations"], "fidelity": rec["fidelity"], "stderr": rec["stderr"],
    } for rec in records]
    return rows, records


def run_excited(cfg: RunConfig):
    problem = heh_problem(cfg.r)
    offset = problem.Enn if cfg.energy == "total" else 0.0
    if cfg.mode == EXACT:
        s = vqe_settings(cfg, params=FULL6, ftol=FOLDED_DEFAULTS.ftol, max_iter=FOLDED_DEFAULTS.max_iter)
    else:
        s = vqe_settings(cfg, params=FULL6)
    records = folded_scan(problem.H.with_offset(offset), grid(cfg.lmin, cfg.lmax, cfg.lstep), s,
                          workers=cfg.workers)
    rows = [{
        "lambda": rec["lambda"], "folded_min": rec["folded_min"], "E_plus": rec["E_plus"],
        "E_minus": rec["E_minus"], "E_nearest_exact": rec["E_nearest_exact"],
        "iterations": rec["iterations"], "fidelity": rec["fidelity"], "stderr": rec["stderr"],
    } for rec in records]
    return rows, records


def run_integrals(cfg: RunConfig):
    problem = heh_problem(cfg.r)
    ints = problem.ints
    payload = {
        "R": cfg.r,
        "spin_orbital_order": ["1up", "1down", "2up", "2down"],
        "h1_convention": "H += sum_pq h1[p][q] a+_p a_q",
        "h2_convention": "H += 1/2 sum_pqrs h2[p][q][r][s] a+_p a+_q a_r a_s, h2[p][q][r][s] = (ps|qr)",
        "h1": ints.h1.tolist(),
        "h2": ints.h2.tolist(),
        "E_nuc": ints.Enn,
        "E_hf_total": problem.rhf.E_total,
        "pauli_terms": jw_transform(ints).to_json(),
        "qudit_basis": ["G", "E11", "E12", "E2"],
        "qudit_hamiltonian": matrix_to_json(problem.H.matrix),
        "counts": term_accounting(ints),
    }
    return None, payload


RUNNERS = {"surface": run_surface, "vqe": run_vqe, "field": run_field, "excited": run_excited,
           "integrals": run_integrals}


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.12g}"


def _round(obj):
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return float(f"{x:.12g}") if math.isfinite(x) else None
    return obj


def render(cfg: RunConfig, rows, payload) -> str:
    if rows is not None and cfg.format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(list(rows[0].keys()) if rows else [])
        for row in rows:
            writer.writerow([_fmt(v) for v in row.values()])
        return buf.getvalue()
    return json.dumps({"config": cfg.echo(), "records": _round(payload)}, indent=2) + "\n"


def main(argv=None) -> int:
    try:
        cfg = resolve_config(sys.argv[1:] if argv is None else argv)
    except UsageError as exc:
        print(f"uccsim: error: {exc}", file=sys.stderr)
        build_parser().print_usage(sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if cfg.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        rows, payload = RUNNERS[cfg.subcommand](cfg)
    except (SCFConvergenceError, OptimizerError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"uccsim: computation failed: {exc}", file=sys.stderr)
        return 2
    text = render(cfg, rows, payload)
    if cfg.output:
        with open(cfg.output, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
