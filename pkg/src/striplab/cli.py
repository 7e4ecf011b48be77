"""Command-line experiment drivers.

Subcommands: solve-strip, solve-elastica, diagnose, converge, truncate,
energy-check.  Each takes --config PATH and --out DIR (--seed N where it
matters).  Exit codes: 0 success, 1 solver non-convergence, 2 config error,
3 diagnostic or truncation failure.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import csvio
from .algebra import dist_so2, rot2
from .config import (
    ExperimentConfig,
    elastica_from,
    energy_from,
    load_from,
    mesh_from,
    solver_from,
    sweep_from,
)
from .diagnostics import convergence_study, diagnose, z_field
from .energy import linearize, taylor_remainder
from .errors import (
    ConfigError,
    DiagnosticError,
    DomainError,
    NonConvergence,
    StepRejected,
    TruncationFailure,
)
from .mesh import build_mesh, mesh_rule_nx
from .solver import solve_stationary
from .truncation import grad_sup, rough_field, sample_on_strip, thin_truncate

EXIT_OK = 0
EXIT_SOLVER = 1
EXIT_CONFIG = 2
EXIT_DIAGNOSTIC = 3


@dataclass
class RunManifest:
    """What a driver produced: per-step status, timing, and artifact paths."""

    config_hash: str
    out_dir: Path
    entries: list = field(default_factory=list)

    def record(self, step: str, status: str, seconds: float, outputs=()):
        self.entries.append((step, status, seconds, tuple(str(p) for p in outputs)))

    @property
    def all_ok(self) -> bool:
        return all(status == "ok" for _, status, _, _ in self.entries)

    def write(self) -> Path:
        rows = [("config", self.config_hash, 0.0, "")]
        rows += [
            (step, status, round(seconds, 3), ";".join(outputs))
            for step, status, seconds, outputs in self.entries
        ]
        return csvio.write_table(
            self.out_dir / "manifest.csv",
            ["step", "status", "seconds", "outputs"],
            rows,
        )


def _manifest(cfg: ExperimentConfig, out: Path) -> RunManifest:
    out.mkdir(parents=True, exist_ok=True)
    return RunManifest(config_hash=cfg.hash, out_dir=out)


def _solver_report_items(h, mesh, report) -> dict:
    return {
        "h": h,
        "L": mesh.L,
        "nx": mesh.nx,
        "ny": mesh.ny,
        "converged": report.converged,
        "iterations": report.iterations,
        "residual_sup": report.residual_sup,
        "elastic_energy": report.elastic_energy,
        "total_energy": report.total_energy,
        "message": report.message,
    }


def run_solve_strip(cfg: ExperimentConfig, out: Path) -> RunManifest:
    manifest = _manifest(cfg, out)
    W = energy_from(cfg)
    g = load_from(cfg)
    scfg = solver_from(cfg)
    mesh, h = mesh_from(cfg)
    t0 = time.perf_counter()
    fld, report = solve_stationary(mesh, h, g, W, scfg)
    dt = time.perf_counter() - t0
    paths = [
        csvio.write_solution(out / "solution.csv", fld),
        csvio.write_keyvalue(out / "report.csv", _solver_report_items(h, mesh, report)),
    ]
    manifest.record("solve-strip", "ok" if report.converged else "non-converged", dt, paths)
    manifest.write()
    return manifest


def run_solve_elastica(cfg: ExperimentConfig, out: Path) -> RunManifest:
    manifest = _manifest(cfg, out)
    W = energy_from(cfg)
    g = load_from(cfg)
    t0 = time.perf_counter()
    sol = elastica_from(cfg, W, g)
    dt = time.perf_counter() - t0
    paths = [
        csvio.write_elastica(out / "elastica.csv", sol),
        csvio.write_keyvalue(
            out / "report.csv",
            {
                "modulus": sol.modulus,
                "L": sol.L,
                "n": sol.x.size - 1,
                "iterations": sol.iterations,
                "tip_angle": sol.theta[-1],
                "j2": sol.j2,
            },
        ),
    ]
    manifest.record("solve-elastica", "ok", dt, paths)
    manifest.write()
    return manifest


def run_diagnose(cfg: ExperimentConfig, out: Path) -> RunManifest:
    manifest = _manifest(cfg, out)
    W = energy_from(cfg)
    g = load_from(cfg)
    scfg = solver_from(cfg)
    mesh, h = mesh_from(cfg)
    t0 = time.perf_counter()
    fld, report = solve_stationary(mesh, h, g, W, scfg)
    status = "ok" if report.converged else "non-converged"
    prof, G, E, row = diagnose(fld, g, W)
    zf = z_field(fld, prof)
    dt = time.perf_counter() - t0
    paths = [
        csvio.write_solution(out / "solution.csv", fld),
        csvio.write_rotations(out / "rotations.csv", prof),
        csvio.write_fields(out / "fields.csv", G, E),
        csvio.write_moments(out / "moments.csv", G, E),
        csvio.write_identities(out / "identities.csv", [row]),
        csvio.write_keyvalue(
            out / "report.csv",
            _solver_report_items(h, mesh, report) | {"z_bc_gap": zf.bc_gap},
        ),
    ]
    manifest.record("diagnose", status, dt, paths)
    manifest.write()
    return manifest


def run_convergence(cfg: ExperimentConfig, out: Path) -> RunManifest:
    """Elastica once, then the h-sweep with warm starts, then the tables."""
    manifest = _manifest(cfg, out)
    W = energy_from(cfg)
    g = load_from(cfg)
    scfg = solver_from(cfg)
    hs = sweep_from(cfg)
    L = cfg.get_float("strip.L", 1.0)
    ny = cfg.get_int("strip.ny", 8)

    t0 = time.perf_counter()
    limit = elastica_from(cfg, W, g)
    manifest.record(
        "elastica",
        "ok",
        time.perf_counter() - t0,
        [csvio.write_elastica(out / "elastica.csv", limit)],
    )

    fields = []
    prev = None
    for h in hs:
        mesh = build_mesh(L, mesh_rule_nx(L, h), ny)
        t0 = time.perf_counter()
        try:
            fld, report = solve_stationary(mesh, h, g, W, scfg, warm=prev)
        except (StepRejected, NonConvergence) as exc:
            manifest.record(f"solve h={h:g}", f"failed: {exc}", time.perf_counter() - t0)
            prev = None
            continue
        dt = time.perf_counter() - t0
        if not report.converged:
            manifest.record(f"solve h={h:g}", f"non-converged: {report.message}", dt)
            prev = None
            continue
        manifest.record(f"solve h={h:g}", "ok", dt)
        fields.append(fld)
        prev = fld

    if fields:
        t0 = time.perf_counter()
        table = convergence_study(fields, limit, g, W)
        paths = [
            csvio.write_convergence(out / "convergence.csv", table),
            csvio.write_identities(out / "identities.csv", table.residuals),
        ]
        manifest.record("diagnostics", "ok", time.perf_counter() - t0, paths)
    manifest.write()
    return manifest


def run_truncation_demo(cfg: ExperimentConfig, out: Path, seed: int | None = None) -> RunManifest:
    manifest = _manifest(cfg, out)
    a = cfg.get_float("truncation.level_min", 14.0)
    A = cfg.get_float("truncation.level_max", 28.0)
    if a >= A:
        raise ConfigError(
            "truncation.level_min must be below truncation.level_max, "
            f"got {a!r} and {A!r}"
        )
    p = cfg.get_float("truncation.p", 2.0)
    nfields = cfg.get_int("truncation.fields", 50)
    height = cfg.get_float("truncation.height", 0.125)
    res = cfg.get_str("truncation.resolutions", "64x8,128x16,256x32")
    if seed is None:
        seed = cfg.get_int("run.seed", 1234)

    grids = []
    for token in res.split(","):
        try:
            n1, n2 = (int(p_) for p_ in token.lower().split("x"))
        except ValueError as exc:
            raise ConfigError(f"bad truncation.resolutions entry {token!r}") from exc
        grids.append((n1, n2))

    rows = []
    t0 = time.perf_counter()
    for n1, n2 in grids:
        for idx in range(nfields):
            fn = rough_field(seed + idx)
            u = sample_on_strip(fn, n1, n2, height)
            result = thin_truncate(u, a, A, p)
            rows.append(
                (
                    f"{n1}x{n2}",
                    seed + idx,
                    result.level,
                    result.lam,
                    result.q,
                    result.mismatch_area,
                    result.strip_index,
                    grad_sup(result.v),
                )
            )
    dt = time.perf_counter() - t0
    paths = [
        csvio.write_table(
            out / "qstats.csv",
            ["grid", "seed", "level", "lam", "q", "mismatch_area", "strip_index", "grad_sup_v"],
            rows,
        )
    ]
    summary = {}
    for n1, n2 in grids:
        key = f"{n1}x{n2}"
        qs = [r[4] for r in rows if r[0] == key]
        summary[f"q_max_{key}"] = max(qs)
        summary[f"q_mean_{key}"] = sum(qs) / len(qs)
    paths.append(csvio.write_keyvalue(out / "summary.csv", summary))
    manifest.record("truncate", "ok", dt, paths)
    manifest.write()
    return manifest


def _hypothesis_rows(W, rng) -> list[tuple]:
    """The invariant suite for one density: objectivity, well, coercivity, smoothness."""
    rows = []
    n = 1000
    F = np.eye(2) + 0.4 * rng.standard_normal((n, 2, 2))
    R = rot2(rng.uniform(-np.pi, np.pi, size=n))
    gap = np.max(np.abs(W.energy(R @ F) - W.energy(F)))
    rows.append(("H1", "frame indifference", "pass" if gap <= 1e-10 else "fail", gap))

    Wr = np.max(np.abs(W.energy(rot2(rng.uniform(-np.pi, np.pi, size=n)))))
    ok2 = Wr <= 1e-12 and np.min(W.energy(F)) >= 0.0
    rows.append(("H2", "zero on rotations, nonnegative", "pass" if ok2 else "fail", Wr))

    # Coercivity against squared distance: sample the orientation-preserving
    # regime, then probe a reflection, where an isotropic quadratic vanishes.
    dets = F[..., 0, 0] * F[..., 1, 1] - F[..., 0, 1] * F[..., 1, 0]
    Fpos = F[dets > 0.2]
    d2 = dist_so2(Fpos) ** 2
    mask = d2 > 1e-12
    cmin = float(np.min(W.energy(Fpos[mask]) / d2[mask]))
    refl = np.array([[1.0, 0.0], [0.0, -1.0]])
    w_refl = float(W.energy(refl))
    if W.coercive_globally:
        status = "pass" if cmin > 1e-3 and w_refl > 1e-3 else "fail"
    else:
        # documented exception: vanishing at reflections, checked not hidden
        status = "xfail" if w_refl <= 1e-12 else "fail"
    rows.append(("H3", "coercive over squared distance", status, min(cmin, w_refl)))

    lin = linearize(W)
    A = rng.standard_normal((2, 2))
    ts = np.array([1e-2, 5e-3, 2.5e-3])
    rem = taylor_remainder(W, ts[:, None, None] * A, lin)
    rnorm = np.sqrt(np.sum(rem**2, axis=(-2, -1)))
    if np.max(rnorm) < 1e-14:
        ok4, val4 = True, float(np.max(rnorm))
    else:
        # remainder is o(t): halving t must shrink it faster than linearly
        ratios = rnorm[:-1] / np.maximum(rnorm[1:], 1e-300)
        ok4, val4 = bool(np.all(ratios > 2.5)), float(np.min(ratios))
    rows.append(("H4", "quadratic expansion at identity", "pass" if ok4 else "fail", val4))
    rows.append(("H4", "tension modulus", "pass", lin.modulus))
    return rows


def run_energy_check(cfg: ExperimentConfig, out: Path, seed: int | None = None) -> RunManifest:
    manifest = _manifest(cfg, out)
    W = energy_from(cfg)
    if seed is None:
        seed = cfg.get_int("run.seed", 1234)
    t0 = time.perf_counter()
    rows = _hypothesis_rows(W, np.random.default_rng(seed))
    dt = time.perf_counter() - t0
    failed = [tag for tag, _, status, _ in rows if status == "fail"]
    paths = [
        csvio.write_table(
            out / "hypotheses.csv", ["tag", "check", "status", "value"], rows
        )
    ]
    status = "ok" if not failed else "failed: " + ",".join(failed)
    manifest.record("energy-check", status, dt, paths)
    manifest.write()
    if failed:
        raise DiagnosticError(f"energy hypotheses violated: {', '.join(failed)}")
    return manifest


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="striplab",
        description="Thin-strip equilibria, their rod limit, and the supporting checks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    specs = {
        "solve-strip": "solve the clamped strip at one thickness",
        "solve-elastica": "solve the limit rod problem",
        "diagnose": "solve one thickness and emit all diagnostic tables",
        "converge": "run the h-sweep against the rod limit",
        "truncate": "run the truncation property sweep",
        "energy-check": "run the energy-density hypothesis suite",
    }
    for name, help_text in specs.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="experiment config file")
        p.add_argument("--out", default="out", help="output directory")
        if name in ("truncate", "energy-check"):
            p.add_argument("--seed", type=int, default=None, help="sweep seed")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = ExperimentConfig.load(args.config)
        out = Path(args.out)
        if args.command == "solve-strip":
            manifest = run_solve_strip(cfg, out)
        elif args.command == "solve-elastica":
            manifest = run_solve_elastica(cfg, out)
        elif args.command == "diagnose":
            manifest = run_diagnose(cfg, out)
        elif args.command == "converge":
            manifest = run_convergence(cfg, out)
        elif args.command == "truncate":
            manifest = run_truncation_demo(cfg, out, seed=args.seed)
        else:
            manifest = run_energy_check(cfg, out, seed=args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NonConvergence, StepRejected) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (DiagnosticError, TruncationFailure, DomainError) as exc:
        print(f"diagnostic failure: {exc}", file=sys.stderr)
        return EXIT_DIAGNOSTIC
    return EXIT_OK if manifest.all_ok else EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
