"""Command-line runner: ``afgauss COMMAND --config run.json [overrides]``.

Exit codes: 0 success with every verdict true, 1 verdict failure,
2 configuration error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._io import write_json
from .af_analysis import curvature_report
from .convexity_lab import (
    ball_bounds_probe,
    concavity_check,
    concavity_sweep,
    scan_refinement_error,
    segment_convexity_probe,
    segment_scan,
    write_scan,
)
from .errors import AFGaussError
from .gauss_solver import Method, SolveParams, solve
from .hyperbolic_disk import DiskGrid, write_field_csv
from .immersion import (
    export_mesh,
    holonomy_defect,
    hopf_roundtrip_error,
    induced_metric_error,
    integrate_frame,
    write_frame_csv,
)
from .quad_diff import QuadDiff, c0_norm

log = logging.getLogger("afgauss")

COMMANDS = ("solve", "scan", "bounds", "convexity", "mesh", "report")
EXIT_OK, EXIT_VERDICT, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GridConfig:
    n_rho: int = 96
    n_theta: int = 192
    rho_max: float = 8.0

    def build(self) -> DiskGrid:
        return DiskGrid(self.n_rho, self.n_theta, self.rho_max)


@dataclass
class RunConfig:
    command: str
    grid: GridConfig = field(default_factory=GridConfig)
    phi: QuadDiff | None = None
    phi1: QuadDiff | None = None
    solver: SolveParams = field(default_factory=SolveParams)
    lam: float = 1.0
    seed: int = 0
    output_dir: str = "afgauss_out"
    n_samples: int = 50
    n_pairs: int = 25
    n_t: int = 17
    n_scans: int = 10
    inputs: list = field(default_factory=list)

    def canonical(self) -> dict:
        """JSON-able form; the config hash is taken over this."""
        return {
            "command": self.command,
            "grid": dataclasses.asdict(self.grid),
            "phi": None if self.phi is None else json.loads(self.phi.to_json()),
            "phi1": None if self.phi1 is None else json.loads(self.phi1.to_json()),
            "solver": {**dataclasses.asdict(self.solver), "method": self.solver.method.value},
            "lambda": self.lam,
            "seed": self.seed,
            "output_dir": self.output_dir,
            "n_samples": self.n_samples,
            "n_pairs": self.n_pairs,
            "n_t": self.n_t,
            "n_scans": self.n_scans,
            "inputs": list(self.inputs),
        }

    def hash(self) -> str:
        # where the artifacts land is not part of what produced them
        content = {k: v for k, v in self.canonical().items() if k != "output_dir"}
        blob = json.dumps(content, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


_REQUIRED = {"solve": ("phi",), "scan": ("phi", "phi1"), "mesh": ("phi",)}
_USES_LAMBDA = ("bounds", "convexity")


def parse_config(data: dict, command: str | None = None) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    known = {"command", "grid", "phi", "phi1", "solver", "lambda", "seed", "output_dir",
             "n_samples", "n_pairs", "n_t", "n_scans", "inputs"}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    command = command or data.get("command")
    if command not in COMMANDS:
        raise ConfigError(f"command must be one of {COMMANDS}, got {command!r}")
    try:
        grid = GridConfig(**data.get("grid", {}))
        grid.build()
        solver_opts = dict(data.get("solver", {}))
        if "method" in solver_opts:
            solver_opts["method"] = Method(solver_opts["method"])
        solver = SolveParams(**solver_opts)
        phi = QuadDiff.from_json(data["phi"]) if data.get("phi") is not None else None
        phi1 = QuadDiff.from_json(data["phi1"]) if data.get("phi1") is not None else None
        cfg = RunConfig(
            command=command, grid=grid, phi=phi, phi1=phi1, solver=solver,
            lam=float(data.get("lambda", 1.0)), seed=int(data.get("seed", 0)),
            output_dir=str(data.get("output_dir", "afgauss_out")),
            n_samples=int(data.get("n_samples", 50)), n_pairs=int(data.get("n_pairs", 25)),
            n_t=int(data.get("n_t", 17)), n_scans=int(data.get("n_scans", 10)),
            inputs=list(data.get("inputs", [])),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    for name in _REQUIRED.get(cfg.command, ()):
        if getattr(cfg, name) is None:
            raise ConfigError(f"command {cfg.command!r} requires {name!r}")
    if cfg.command in _USES_LAMBDA and not 0 < cfg.lam <= 1:
        raise ConfigError(f"lambda must lie in (0, 1], got {cfg.lam}")
    if cfg.command == "scan" and (cfg.n_t < 3 or cfg.n_t % 2 == 0):
        raise ConfigError("n_t must be odd and >= 3")
    for name in ("n_samples", "n_pairs", "n_scans"):
        if getattr(cfg, name) < 0:
            raise ConfigError(f"{name} must be non-negative")


def apply_overrides(data: dict, args) -> dict:
    data = dict(data)
    if args.lam is not None:
        data["lambda"] = args.lam
    if args.seed is not None:
        data["seed"] = args.seed
    if args.output_dir is not None:
        data["output_dir"] = args.output_dir
    if args.grid is not None:
        parts = args.grid.split(",")
        if len(parts) != 3:
            raise ConfigError("--grid expects n_rho,n_theta,rho_max")
        try:
            data["grid"] = {"n_rho": int(parts[0]), "n_theta": int(parts[1]),
                            "rho_max": float(parts[2])}
        except ValueError as exc:
            raise ConfigError(f"--grid: {exc}") from exc
    return data


# ---- commands ----------------------------------------------------------

def _artifact(cfg: RunConfig, payload: dict) -> dict:
    return {"config_hash": cfg.hash(), "command": cfg.command, **payload}


def cmd_solve(cfg: RunConfig, out: Path) -> int:
    grid = cfg.grid.build()
    res = solve(cfg.phi, grid, cfg.solver)
    write_field_csv(res.u, out / "u.csv")
    rep = curvature_report(res, cfg.phi)
    write_json(out / "solve.json", _artifact(cfg, {
        **res.summary(), "method": res.method, "c0_norm": c0_norm(cfg.phi, grid),
        **rep.summary(), "file": "u.csv", "verdict": bool(res.converged),
    }))
    return EXIT_OK if res.converged else EXIT_SOLVER


def cmd_scan(cfg: RunConfig, out: Path) -> int:
    grid = cfg.grid.build()
    scan = segment_scan(cfg.phi, cfg.phi1, cfg.n_t, grid, cfg.solver)
    extra = {"config_hash": cfg.hash(), "command": "scan", "verdict": not scan.partial}
    if not scan.partial:
        scan_refinement_error(scan, cfg.solver)
        report = concavity_check(scan)
        extra.update(concavity=report.to_dict(), verdict=report.verdict, eps_disc=scan.eps_disc)
    write_scan(scan, out, extra)
    if scan.partial:
        return EXIT_SOLVER
    return EXIT_OK if extra["verdict"] else EXIT_VERDICT


def cmd_bounds(cfg: RunConfig, out: Path) -> int:
    res = ball_bounds_probe(cfg.lam, cfg.n_samples, cfg.seed, cfg.grid.build(), cfg.solver)
    ok = res["counterexamples"] == 0
    write_json(out / "bounds.json", _artifact(cfg, {**res, "verdict": ok}))
    return EXIT_OK if ok else EXIT_VERDICT


def cmd_convexity(cfg: RunConfig, out: Path) -> int:
    grid = cfg.grid.build()
    probe = segment_convexity_probe(cfg.lam, cfg.n_pairs, cfg.seed, grid, cfg.solver)
    scans = concavity_sweep(cfg.n_scans, cfg.seed, grid, cfg.solver, n_t=cfg.n_t)
    ok_probe = probe["violations"] == 0
    ok_scans = all(r["verdict"] for r in scans)
    write_json(out / "convexity.json", _artifact(cfg, {
        "segment_convexity": {**probe, "verdict": ok_probe},
        "concavity": {"scans": scans, "verdict": ok_scans},
        "verdict": ok_probe and ok_scans,
    }))
    return EXIT_OK if ok_probe and ok_scans else EXIT_VERDICT


def cmd_mesh(cfg: RunConfig, out: Path) -> int:
    grid = cfg.grid.build()
    res = solve(cfg.phi, grid, cfg.solver)
    if not res.converged:
        return EXIT_SOLVER
    frame = integrate_frame(res.u, cfg.phi)
    mesh = export_mesh(frame, out / "surface.obj", header=f"config_hash {cfg.hash()}")
    write_frame_csv(frame, out / "frame.csv")
    write_json(out / "mesh.json", _artifact(cfg, {
        "n_vertices": len(mesh.vertices),
        "n_faces": len(mesh.faces),
        "max_ball_radius": float(np.max(np.linalg.norm(mesh.vertices, axis=1))),
        "constraint_error": frame.constraint_error(),
        "induced_metric_error": induced_metric_error(frame),
        "hopf_roundtrip_error": hopf_roundtrip_error(frame),
        "holonomy_defect": holonomy_defect(frame),
        "files": ["surface.obj", "frame.csv"],
        "verdict": True,
    }))
    return EXIT_OK


def cmd_report(cfg: RunConfig, out: Path) -> int:
    dirs = [Path(d) for d in cfg.inputs] or [out]
    entries = {}
    for d in dirs:
        for path in sorted(d.rglob("*.json")):
            if path.name == "report.json":
                continue
            try:
                payload = json.loads(path.read_text())
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from exc
            if isinstance(payload, dict) and "verdict" in payload:
                entries[str(path)] = {
                    "command": payload.get("command"),
                    "config_hash": payload.get("config_hash"),
                    "verdict": bool(payload["verdict"]),
                }
    ok = all(e["verdict"] for e in entries.values())
    write_json(out / "report.json", _artifact(cfg, {"artifacts": entries, "verdict": ok}))
    return EXIT_OK if ok else EXIT_VERDICT


HANDLERS = {
    "solve": cmd_solve, "scan": cmd_scan, "bounds": cmd_bounds,
    "convexity": cmd_convexity, "mesh": cmd_mesh, "report": cmd_report,
}


def run(cfg: RunConfig) -> int:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        return HANDLERS[cfg.command](cfg, out)
    except ConfigError:
        raise
    except AFGaussError as exc:
        print(f"afgauss: solver failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="afgauss", description=__doc__.splitlines()[0])
    ap.add_argument("command", nargs="?", choices=COMMANDS,
                    help="overrides the command field of the config")
    ap.add_argument("--config", required=True, help="JSON run configuration")
    ap.add_argument("--lambda", dest="lam", type=float)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--grid", help="n_rho,n_theta,rho_max")
    ap.add_argument("--output-dir")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        try:
            data = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON in {args.config}: {exc}") from exc
        cfg = parse_config(apply_overrides(data, args), args.command)
        return run(cfg)
    except ConfigError as exc:
        print(f"afgauss: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
