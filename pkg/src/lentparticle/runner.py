"""Experiment orchestration: Monte Carlo over paths, reports, figures, manifest.

Each path index owns an independent counter-based random stream, so the
per-path results do not depend on scheduling; workers > 1 runs paths on a
thread pool and the writer emits rows in path-index order either way,
keeping the delimited outputs byte-identical across serial and parallel
runs of the same configuration.
"""

from __future__ import annotations

import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from hashlib import sha256
from typing import Optional

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .csvio import ensure_dir, sha256_file, write_csv
from .diagnostics import atom_test, kde_summary, nondegeneracy_stats
from .families import SPEC_FAMILIES
from .functionals import (
    FUNCTIONAL_CATALOG,
    build_catalog_functional,
    lent_particle_gamma,
    oracle_gamma,
    write_gamma_csv,
)
from .levy import sample_configuration
from .sde import (
    MODEL_REGISTRY,
    build_registry_model,
    inverse_flow,
    sde_gamma,
    sde_gamma_oracle,
    solve_sde,
)

__all__ = ["run_experiment", "ExperimentResult"]


@dataclass
class ExperimentResult:
    out_dir: str
    files: dict
    gammas: list
    values: Optional[np.ndarray] = None
    max_rel_discrepancy: Optional[float] = None


def _build_spec(cfg: ExperimentConfig):
    builder, _ = SPEC_FAMILIES[cfg.spec_family]
    return builder(cfg.spec_params)


def _path_worker_functional(cfg, spec, functional):
    def work(i: int):
        config = sample_configuration(spec, cfg.horizon, cfg.seed, path_index=i)
        value = np.atleast_1d(np.asarray(functional.evaluate(config), dtype=float))
        gamma = lent_particle_gamma(functional, config, spec, fd_step=cfg.fd_step)
        oracle = None
        if cfg.kind == "oracle-compare":
            oracle = oracle_gamma(functional, config, spec, h=cfg.fd_step)
        return value, gamma, oracle

    return work


def _path_worker_model(cfg, spec, model):
    def work(i: int):
        config = sample_configuration(spec, cfg.horizon, cfg.seed, path_index=i)
        traj = solve_sde(model, config)
        flow = inverse_flow(model, traj, config)
        gamma = sde_gamma(model, traj, flow, config, spec)
        oracle = None
        if cfg.kind == "oracle-compare":
            oracle = sde_gamma_oracle(model, config, None, spec, h=cfg.fd_step)
        return traj.final_state.copy(), gamma, oracle

    return work


def _relative_gap(engine, oracle) -> float:
    gap = float(np.abs(engine.matrix - oracle.matrix).max())
    return gap / (1.0 + float(np.abs(engine.matrix).max()))


def run_experiment(cfg: ExperimentConfig, echo=print) -> ExperimentResult:
    """Run one experiment and write its report files under cfg.out.

    Writes the per-path matrix CSV, the nondegeneracy report (text + CSV),
    kind-specific extras (oracle comparison, values/KDE/atom scan), the
    rendered figures unless disabled, and a manifest carrying the config
    hash, seed, versions and a checksum of every emitted file.
    """
    out_dir = cfg.out
    ensure_dir(out_dir)
    spec = _build_spec(cfg)
    if cfg.functional is not None:
        functional = build_catalog_functional(cfg.functional, cfg.functional_params, cfg.horizon)
        worker = _path_worker_functional(cfg, spec, functional)
    else:
        model = build_registry_model(cfg.model, cfg.model_params)
        worker = _path_worker_model(cfg, spec, model)

    results = [None] * cfg.paths
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            for i, res in enumerate(pool.map(worker, range(cfg.paths))):
                results[i] = res
    else:
        for i in range(cfg.paths):
            results[i] = worker(i)

    values = np.array([r[0] for r in results])
    gammas = [r[1] for r in results]
    files: dict = {}

    def emit(name: str):
        files[name] = os.path.join(out_dir, name)
        return files[name]

    with open(emit("config.txt"), "w") as fh:
        fh.write(cfg.canonical_text())
    write_gamma_csv(gammas, emit("gammas.csv"))
    report = nondegeneracy_stats(gammas)
    with open(emit("nondegeneracy.txt"), "w") as fh:
        fh.write(report.to_text())
    report.write_csv(emit("nondegeneracy.csv"))

    max_rel = None
    if cfg.kind == "oracle-compare":
        rels = [_relative_gap(r[1], r[2]) for r in results]
        max_rel = max(rels)
        write_csv(
            emit("oracle_compare.csv"),
            ["path_id", "rel_discrepancy"],
            [[i, rel] for i, rel in enumerate(rels)],
        )
        verdict = "PASS" if max_rel <= cfg.rel_tol else "FAIL"
        with open(emit("oracle_summary.txt"), "w") as fh:
            fh.write(
                f"engine vs oracle over {cfg.paths} paths\n"
                f"max relative discrepancy: {max_rel:.17g}\n"
                f"tolerance: {cfg.rel_tol:.17g}\n"
                f"verdict: {verdict}\n"
            )
        echo(f"oracle-compare: max relative discrepancy {max_rel:.3e} ({verdict})")

    kde = None
    atoms = None
    if cfg.kind == "density-scan":
        write_csv(
            emit("values.csv"),
            ["path_id"] + [f"value_{i + 1}" for i in range(values.shape[1])],
            [[i] + [float(v) for v in row] for i, row in enumerate(values)],
        )
        scan = values if values.shape[1] <= 2 else values[:, :2]
        if values.shape[0] >= 1000:
            kde = kde_summary(scan)
            kde.write_csv(emit("kde.csv"))
            spread = float(np.ptp(scan)) if scan.size else 0.0
            resolution = max(spread / 1000.0, 1e-12)
            atoms = atom_test(scan, resolution=resolution)
            with open(emit("atoms.txt"), "w") as fh:
                fh.write(atoms.to_text())
        else:
            echo("density-scan: fewer than 1000 paths, skipping KDE and atom detection")

    if cfg.figures:
        from . import figures

        figures.render_det_histogram(
            np.array([g.det for g in gammas]), emit("det_histogram.png")
        )
        if cfg.kind == "oracle-compare":
            figures.render_discrepancy_histogram(np.array(rels), emit("discrepancies.png"))
        if cfg.kind == "density-scan":
            if kde is not None:
                figures.render_kde(kde, emit("kde.png"))
            figures.render_value_scatter(values, emit("values.png"))

    manifest = {
        "config_sha256": sha256(cfg.canonical_text().encode()).hexdigest(),
        "seed": cfg.seed,
        "kind": cfg.kind,
        "paths": cfg.paths,
        "versions": {
            "lentparticle": __version__,
            "numpy": np.__version__,
            "python": ".".join(str(v) for v in sys.version_info[:3]),
        },
        "files": {name: sha256_file(path) for name, path in sorted(files.items())},
    }
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    files["manifest.json"] = os.path.join(out_dir, "manifest.json")

    echo(f"wrote {len(files)} files to {out_dir}")
    return ExperimentResult(
        out_dir=out_dir,
        files=files,
        gammas=gammas,
        values=values,
        max_rel_discrepancy=max_rel,
    )


def resolved_names() -> dict:
    """Names available to config files (used by the list subcommands)."""
    return {
        "functionals": sorted(FUNCTIONAL_CATALOG),
        "specs": sorted(SPEC_FAMILIES),
        "models": sorted(MODEL_REGISTRY),
    }


def check_runnable(cfg: ExperimentConfig) -> None:
    """Build every referenced object without running paths (validate mode)."""
    spec = _build_spec(cfg)
    spec.effective_mass()  # surfaces non-simulable measures
    if cfg.functional is not None:
        build_catalog_functional(cfg.functional, cfg.functional_params, cfg.horizon)
    if cfg.model is not None:
        build_registry_model(cfg.model, cfg.model_params)
