"""Pipeline orchestration and command-line entry point.

Subcommands: run (full pipeline), simp, transfer, levelset, evaluate
(each consuming prior-stage artifacts), and bench (tolerance sweep plus the
porous baseline).
"""

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import benchmarks, config as config_mod, evaluate, io as io_mod
from . import levelset as ls
from . import simp as simp_mod
from . import transfer
from .history import RunHistory


def _simp_params(cfg, mesh):
    return simp_mod.SimpParams(
        p=cfg.p,
        E0=cfg.E0,
        E_min=cfg.E_min_rel * cfg.E0,
        V_f=cfg.V_f,
        R=cfg.filter_radius_h * mesh.h,
        move=cfg.move,
        eta_oc=cfg.eta_oc,
        drho_tol=cfg.drho_tol,
        max_iters=cfg.simp_max_iters,
    )


def _ersatz_params(cfg, mesh):
    return ls.ErsatzParams(eps0=cfg.eps0, eta=cfg.eta_h * mesh.h)


def _evolution_params(cfg, mesh, sequential):
    J_tol = cfg.J_tol_h * mesh.h
    if sequential:
        J_tol /= 5.0
    return ls.EvolutionParams(
        gamma=cfg.gamma,
        n_steps=cfg.n_steps,
        J_tol=J_tol,
        C_tol=cfg.C_tol,
        window=cfg.window,
        max_iters=cfg.ls_max_iters,
    )


def _handler(cfg):
    if cfg.resolved_handler() == "hp":
        return ls.HilbertianProjection(
            alpha_min_sq=cfg.alpha_min_sq, beta=cfg.beta, tau=cfg.tau
        )
    return ls.AugmentedLagrangian(
        lam=cfg.al_lam0, Lam=cfg.al_Lam0, xi=cfg.al_xi,
        Lam_max=cfg.al_Lam_max, period=cfg.al_period,
    )


def run_pipeline(cfg, out_dir=None, log=print):
    """Execute the configured stages and write all artifacts.

    Returns a summary dict (also written to summary.txt). On a stage error a
    partial-artifact manifest is written before the exception propagates.
    """
    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    mesh, bc = benchmarks.build_benchmark(cfg.benchmark, cfg.resolution)
    history = RunHistory()
    summary = {"benchmark": cfg.benchmark, "resolution": list(cfg.resolution)}
    artifacts = []
    sequential = cfg.initialization == "simp-sdf"

    def emit(path):
        artifacts.append(str(path))

    try:
        # stage 1: SIMP (skipped for porous initialization)
        t0 = time.perf_counter()
        rho = None
        if sequential:
            params = _simp_params(cfg, mesh)
            rho, rows = simp_mod.run_simp(mesh, bc, params, nu=cfg.nu,
                                          history=history)
            summary["simp_iterations"] = len(rows)
            io_mod.write_vtk(out / "density.vtk", mesh,
                             cell_data={"density": rho})
            emit(out / "density.vtk")
        summary["simp_seconds"] = time.perf_counter() - t0

        # stages 2-4: geometry transfer
        t0 = time.perf_counter()
        evol = _evolution_params(cfg, mesh, sequential)
        if sequential:
            nodal = transfer.map_densities_to_nodes(mesh, rho)
            surface = transfer.extract_isosurface(mesh, nodal, cfg.iso_threshold)
            io_mod.write_stl(out / "simp_extracted.stl", surface)
            emit(out / "simp_extracted.stl")
            phi0 = transfer.build_sdf(mesh, surface, nodal, cfg.iso_threshold)
            io_mod.write_vtk(out / "sdf.vtk", mesh, point_data={"phi": phi0})
            emit(out / "sdf.vtk")
            frac = evaluate.solid_fractions(mesh, nodal, "density",
                                            k=cfg.eval_samples)
            simp_eval = evaluate.evaluate_compliance(mesh, frac, bc,
                                                     eps0=cfg.eps0, nu=cfg.nu)
            summary["simp_extracted_compliance"] = simp_eval.compliance
            summary["simp_extracted_vol_frac"] = simp_eval.vol_frac
        else:
            phi0 = ls.porous_initialization(mesh, evol)
        summary["transfer_seconds"] = time.perf_counter() - t0

        # stage 5: level-set refinement
        t0 = time.perf_counter()
        handler = _handler(cfg)
        snapshot = None
        if cfg.snapshot_period > 0:
            def snapshot(it, phi, _out=out):
                if it % cfg.snapshot_period == 0:
                    p = _out / f"phi_{it:04d}.vtk"
                    io_mod.write_vtk(p, mesh, point_data={"phi": phi})
                    emit(p)
        result = ls.run_levelset(
            mesh, phi0, bc, handler, _ersatz_params(cfg, mesh), evol,
            V_f=cfg.V_f, nu=cfg.nu, history=history, snapshot=snapshot,
        )
        summary["levelset_iterations"] = len(result.rows)
        summary["levelset_converged"] = result.converged
        summary["levelset_seconds"] = time.perf_counter() - t0
        io_mod.write_vtk(out / "phi_final.vtk", mesh,
                         point_data={"phi": result.phi})
        emit(out / "phi_final.vtk")

        # stage 6: export and extraction-based evaluation
        t0 = time.perf_counter()
        final_surface = transfer.extract_isosurface(mesh, result.phi, 0.0)
        io_mod.write_stl(out / "final.stl", final_surface)
        emit(out / "final.stl")
        frac = evaluate.solid_fractions(mesh, result.phi, "levelset",
                                        k=cfg.eval_samples)
        final_eval = evaluate.evaluate_compliance(mesh, frac, bc,
                                                  eps0=cfg.eps0, nu=cfg.nu)
        summary["final_compliance"] = final_eval.compliance
        summary["final_vol_frac"] = final_eval.vol_frac
        if result.rows:
            summary["final_smoothed_vol_frac"] = result.rows[-1]["vol_frac"]
        summary["evaluate_seconds"] = time.perf_counter() - t0
        summary["total_seconds"] = (
            summary["simp_seconds"] + summary["transfer_seconds"]
            + summary["levelset_seconds"] + summary["evaluate_seconds"]
        )
    except Exception:
        (out / "partial_manifest.json").write_text(
            json.dumps({"artifacts": artifacts}, indent=2)
        )
        history.write_csv(out / "history.csv")
        raise
    finally:
        pass

    history.write_csv(out / "history.csv")
    emit(out / "history.csv")
    lines = [f"{k} = {v}" for k, v in summary.items()]
    (out / "summary.txt").write_text("\n".join(lines) + "\n")
    emit(out / "summary.txt")
    log(f"pipeline complete: {out / 'summary.txt'}")
    return summary


def run_bench(cfg, out_dir, log=print):
    """Tolerance sweep over drho_tol in {0.5,1,2,4,8}% plus the porous
    baseline; writes one subdirectory per run and a sweep summary."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    results = {}
    for tol in (0.005, 0.01, 0.02, 0.04, 0.08):
        sub = config_mod.PipelineConfig(
            **{**config_mod.asdict_compat(cfg), "drho_tol": tol,
               "initialization": "simp-sdf", "handler": ""}
        )
        name = f"seq_{tol * 100:g}pct"
        results[name] = run_pipeline(sub, out / name, log=log)
    porous = config_mod.PipelineConfig(
        **{**config_mod.asdict_compat(cfg), "initialization": "porous",
           "handler": ""}
    )
    results["porous"] = run_pipeline(porous, out / "porous", log=log)
    (out / "bench_summary.json").write_text(json.dumps(results, indent=2))
    return results


def _parser():
    p = argparse.ArgumentParser(prog="seqtopo",
                                description="sequential SIMP -> level-set "
                                            "topology optimization pipeline")
    p.add_argument("--config", type=str, default=None, help="config file path")
    p.add_argument("--out", type=str, default=None, help="output directory")
    p.add_argument("--workers", type=int, default=1,
                   help="intra-stage parallelism bound (1 = deterministic)")
    p.add_argument("--resolution", type=int, nargs=3, default=None,
                   metavar=("NX", "NY", "NZ"))
    p.add_argument("--seed", type=int, default=0,
                   help="reserved randomness guard (unused)")
    p.add_argument("command", choices=["run", "simp", "transfer", "levelset",
                                       "evaluate", "bench"])
    return p


def main(argv=None):
    args = _parser().parse_args(argv)
    cfg = config_mod.load(args.config) if args.config else config_mod.PipelineConfig()
    if args.resolution:
        cfg.resolution = tuple(args.resolution)
    cfg.workers = args.workers
    cfg.seed = args.seed
    out = args.out or cfg.out_dir

    if args.command == "run":
        run_pipeline(cfg, out)
        return 0
    if args.command == "bench":
        run_bench(cfg, out)
        return 0
    # staged subcommands share the pipeline implementation but stop early or
    # resume from prior artifacts
    return _run_stage(args.command, cfg, Path(out))


def _run_stage(command, cfg, out):
    out.mkdir(parents=True, exist_ok=True)
    mesh, bc = benchmarks.build_benchmark(cfg.benchmark, cfg.resolution)
    history = RunHistory()
    if command == "simp":
        params = _simp_params(cfg, mesh)
        rho, _ = simp_mod.run_simp(mesh, bc, params, nu=cfg.nu, history=history)
        io_mod.write_vtk(out / "density.vtk", mesh, cell_data={"density": rho})
        history.write_csv(out / "history.csv")
        return 0
    if command == "transfer":
        rho = _read_cell_scalars(out / "density.vtk", mesh)
        nodal = transfer.map_densities_to_nodes(mesh, rho)
        surface = transfer.extract_isosurface(mesh, nodal, cfg.iso_threshold)
        io_mod.write_stl(out / "simp_extracted.stl", surface)
        phi0 = transfer.build_sdf(mesh, surface, nodal, cfg.iso_threshold)
        io_mod.write_vtk(out / "sdf.vtk", mesh, point_data={"phi": phi0})
        return 0
    if command == "levelset":
        sequential = cfg.initialization == "simp-sdf"
        evol = _evolution_params(cfg, mesh, sequential)
        if sequential:
            phi0 = _read_point_scalars(out / "sdf.vtk", mesh)
        else:
            phi0 = ls.porous_initialization(mesh, evol)
        result = ls.run_levelset(mesh, phi0, bc, _handler(cfg),
                                 _ersatz_params(cfg, mesh), evol,
                                 V_f=cfg.V_f, nu=cfg.nu, history=history)
        io_mod.write_vtk(out / "phi_final.vtk", mesh,
                         point_data={"phi": result.phi})
        history.write_csv(out / "history.csv")
        return 0
    if command == "evaluate":
        phi = _read_point_scalars(out / "phi_final.vtk", mesh)
        frac = evaluate.solid_fractions(mesh, phi, "levelset", k=cfg.eval_samples)
        res = evaluate.evaluate_compliance(mesh, frac, bc, eps0=cfg.eps0, nu=cfg.nu)
        (out / "evaluation.txt").write_text(
            f"compliance = {res.compliance}\nvol_frac = {res.vol_frac}\n"
        )
        return 0
    raise SystemExit(f"unknown command {command}")


def _read_point_scalars(path, mesh):
    return _read_vtk_scalars(path, mesh.num_nodes)


def _read_cell_scalars(path, mesh):
    return _read_vtk_scalars(path, mesh.num_elements)


def _read_vtk_scalars(path, count):
    values = []
    with open(path) as f:
        lines = f.readlines()
    for i, line in enumerate(lines):
        if line.startswith("LOOKUP_TABLE"):
            for val in lines[i + 1: i + 1 + count]:
                values.append(float(val))
            break
    if len(values) != count:
        raise io_mod.IOError_(f"expected {count} scalar values in {path}")
    return np.array(values)


if __name__ == "__main__":
    sys.exit(main())
