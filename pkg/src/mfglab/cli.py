"""Command-line entry point: one config file in, one artifact directory out.

Every subcommand reads an INI config, runs one experiment, and writes
JSON/CSV artifacts that inline the config and seeds, so any artifact can
be re-derived bit-exactly.  Failures exit nonzero and leave a
machine-readable error.json in the output directory.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
import traceback
from pathlib import Path

from . import __version__
from .acceleration import minimize_energy
from .aggregation import solve_aggregation_fv
from .config import ExperimentDescription, parse_config, write_config
from .convergence import (
    _jsonable,
    run_lambda_sweep_acceleration,
    run_lambda_sweep_classic,
)
from .cucker_smale import solve_cs
from .errors import ConfigError
from .kernels import CuckerSmaleKernel, psd_check, validate_coupling
from .hamiltonians import validate_hamiltonian
from .mfg_pde import solve_mfg_fixed_point


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, indent=2, default=_jsonable, sort_keys=True) + "\n")


def _base_doc(desc: ExperimentDescription, seed: int) -> dict:
    return {
        "version": __version__,
        "config": write_config(desc),
        "defaults_applied": list(desc.defaults_applied),
        "seed": seed,
    }


def _particle_path_csv(path) -> str:
    """Flat CSV of a particle-measure path: atom, t, coordinates, weight."""
    first = path.measures[0]
    d = first.spatial_dim
    cols = ["atom", "t"] + [f"x{i + 1}" for i in range(d)]
    if first.is_phase_space:
        cols += [f"v{i + 1}" for i in range(d)]
    cols.append("w")
    lines = [",".join(cols)]
    for t, m in zip(path.times, path.measures):
        for i in range(m.n):
            row = [str(i), repr(float(t))]
            row += [repr(float(c)) for c in m.points[i]]
            row.append(repr(float(m.weights[i])))
            lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def _cmd_validate_model(desc, out, seed, threads):
    kernel = desc.build_kernel()
    ham = desc.build_hamiltonian()
    doc = _base_doc(desc, seed)
    doc["hamiltonian"] = vars(validate_hamiltonian(ham, seed=seed)).copy()
    if isinstance(kernel, CuckerSmaleKernel):
        doc["coupling"] = {"kind": "cucker-smale", "c0": kernel.c0}
        doc["passed"] = bool(doc["hamiltonian"]["convexity_ok"])
    else:
        rep = validate_coupling(kernel, seed=seed)
        psd = psd_check(kernel, seed=seed)
        doc["coupling"] = {k: v for k, v in vars(rep).items()}
        doc["psd"] = {"label": psd.label, "min_eigenvalue": psd.min_eigenvalue, "threshold": psd.threshold}
        doc["passed"] = bool(
            rep.lipschitz_ok and rep.growth_ok and rep.semiconcave_ok and doc["hamiltonian"]["convexity_ok"]
        )
    _write_json(out / "validation.json", doc)
    return 0 if doc["passed"] else 3


def _cmd_solve_mfg(desc, out, seed, threads):
    cfg = desc.build_pde_config()
    sol = solve_mfg_fixed_point(cfg, desc.build_hamiltonian(), desc.build_kernel(), desc.build_m0_grid())
    doc = _base_doc(desc, seed)
    doc.update(
        iterations=sol.iterations,
        residual=sol.residual,
        converged=sol.converged,
        residual_history=list(sol.residual_history),
    )
    _write_json(out / "solution.json", doc)
    (out / "u0.csv").write_text(
        "x,u\n" + "".join(f"{float(x)!r},{float(u)!r}\n" for x, u in zip(cfg.cell_centers, sol.u_path[0]))
    )
    (out / "m_final.csv").write_text(sol.m_path.measures[-1].to_csv())
    return 0 if sol.converged else 3


def _cmd_solve_limit(desc, out, seed, threads):
    s = desc.solver
    path = solve_aggregation_fv(desc.build_hamiltonian(), desc.build_kernel(), desc.build_m0_grid(), s["T"], s["dt"])
    doc = _base_doc(desc, seed)
    doc["n_steps"] = len(path) - 1
    _write_json(out / "solution.json", doc)
    (out / "m_final.csv").write_text(path.measures[-1].to_csv())
    return 0


def _cmd_solve_accel(desc, out, seed, threads):
    kernel = desc.build_kernel()
    if not isinstance(kernel, CuckerSmaleKernel):
        raise ConfigError("model.kernel: solve-accel needs kernel = cucker-smale")
    s = desc.solver
    m0 = desc.build_m0_atoms(seed)
    result = minimize_energy(m0, kernel, s["lambda"], s["T"], s["n_intervals"])
    doc = _base_doc(desc, seed)
    doc.update(
        converged=result.converged,
        iterations=result.iterations,
        gradient_norm=result.gradient_norm,
        el_residual=result.el_residual,
        energy={"control": result.energy.control, "interaction": result.energy.interaction, "total": result.energy.total},
    )
    _write_json(out / "solution.json", doc)
    (out / "trajectories.csv").write_text(result.ensemble.to_csv())
    return 0 if result.converged else 3


def _cmd_solve_cs(desc, out, seed, threads):
    kernel = desc.build_kernel()
    if not isinstance(kernel, CuckerSmaleKernel):
        raise ConfigError("model.kernel: solve-cs needs kernel = cucker-smale")
    s = desc.solver
    path = solve_cs(desc.build_m0_atoms(seed), kernel, s["T"], s["dt"], order_check=True)
    doc = _base_doc(desc, seed)
    doc["n_snapshots"] = len(path)
    _write_json(out / "solution.json", doc)
    (out / "states.csv").write_text(_particle_path_csv(path))
    return 0


def _cmd_sweep_classic(desc, out, seed, threads):
    report = run_lambda_sweep_classic(
        desc.build_hamiltonian(),
        desc.build_kernel(),
        desc.build_m0_grid(),
        desc.lambdas,
        base_config=desc.build_pde_config(desc.lambdas[0]),
        n_cross_particles=desc.sweep["cross_particles"],
        seed=seed,
        threads=threads,
    )
    prefix = desc.output["prefix"]
    (out / f"{prefix}.json").write_text(report.to_json() + "\n")
    (out / f"{prefix}.csv").write_text(report.to_csv())
    return 0 if not any(r["flagged"] for r in report.rows) else 3


def _cmd_sweep_accel(desc, out, seed, threads):
    kernel = desc.build_kernel()
    if not isinstance(kernel, CuckerSmaleKernel):
        raise ConfigError("model.kernel: sweep-accel needs kernel = cucker-smale")
    s = desc.solver
    report = run_lambda_sweep_acceleration(
        kernel,
        desc.build_m0_atoms(seed),
        desc.lambdas,
        T=s["T"],
        n_intervals=s["n_intervals"],
        dt_reference=s["dt"],
        seed=seed,
        threads=threads,
    )
    prefix = desc.output["prefix"]
    (out / f"{prefix}.json").write_text(report.to_json() + "\n")
    (out / f"{prefix}.csv").write_text(report.to_csv())
    return 0 if not any(r["flagged"] for r in report.rows) else 3


_COMMANDS = {
    "validate-model": _cmd_validate_model,
    "solve-mfg": _cmd_solve_mfg,
    "solve-limit": _cmd_solve_limit,
    "solve-accel": _cmd_solve_accel,
    "solve-cs": _cmd_solve_cs,
    "sweep-classic": _cmd_sweep_classic,
    "sweep-accel": _cmd_sweep_accel,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mfglab", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="INI experiment file")
        p.add_argument("--out", required=True, help="output directory (created if missing)")
        p.add_argument("--seed", type=int, default=None, help="override [output] seed")
        p.add_argument("--threads", type=int, default=None, help="override [sweep] threads")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    try:
        desc = parse_config(Path(args.config).read_text())
        seed = desc.output["seed"] if args.seed is None else args.seed
        threads = desc.sweep["threads"] if args.threads is None else args.threads
        status = _COMMANDS[args.command](desc, out, seed, threads)
    except Exception as exc:
        err = {
            "error": type(exc).__name__,
            "message": str(exc),
            "command": args.command,
            "config": args.config,
            "traceback": traceback.format_exc(),
        }
        _write_json(out / "error.json", err)
        print(json.dumps({"error": err["error"], "message": err["message"]}), file=sys.stderr)
        return 2
    print(
        json.dumps(
            {"command": args.command, "status": status, "out": str(out), "wall_clock_s": time.perf_counter() - t0}
        )
    )
    return status


if __name__ == "__main__":
    sys.exit(main())
