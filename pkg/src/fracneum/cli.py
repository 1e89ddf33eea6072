"""Command-line entry point.

Subcommands: ``mesh`` (write mesh/weights file), ``eigs`` (p = 2 eigenpairs),
``solve`` (mountain-pass runs on both truncated functionals), ``minimize``
(coercive descent), ``verify`` (inequality sweep plus invariant suites).
Exit status: 0 success, 1 configuration error, 2 geometry/connectivity error,
3 unconverged (partial artifacts are still written).
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import critical, propcheck, serialize, spectrum
from .config import RunConfig
from .energy import FULL, MINUS, PLUS, GridFunction, ProblemConfig, functional_value
from .errors import (
    ConfigurationError,
    ConnectivityError,
    FracneumError,
    GeometryError,
    ParameterError,
)
from .mesh import assemble_weights, build_mesh
from .neumann import exterior_extend
from .nonlinearity import make_nonlinearity

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_GEOMETRY = 2
EXIT_UNCONVERGED = 3


def _apply_threads(threads):
    """Best-effort thread pinning for the numerical backends."""
    if threads is None:
        threads = os.environ.get("FRACNEUM_THREADS")
    if threads is None:
        return
    value = str(int(threads))
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = value
    try:
        import threadpoolctl

        threadpoolctl.threadpool_limits(int(value))
    except ImportError:
        pass


def _build_problem(cfg: RunConfig) -> ProblemConfig:
    p = cfg.get_float("problem.p")
    s = cfg.get_float("problem.s")
    lam = cfg.get_float("problem.lambda", 0.0)
    mesh = build_mesh(
        cfg.get_float("domain.omega_lo"),
        cfg.get_float("domain.omega_hi"),
        cfg.get_int("mesh.n_interior"),
        cfg.get_int("mesh.n_exterior_per_side"),
        cfg.get_float("mesh.collar_radius"),
        grading=cfg.get_str("mesh.grading", "uniform"),
        ratio=cfg.get_float("mesh.grading_ratio", 0.5),
    )
    weights = assemble_weights(mesh, p, s)
    name = cfg.get_str("nonlinearity.name", "zero")
    params = {}
    for key, raw in cfg.section("nonlinearity").items():
        if key == "name":
            continue
        try:
            params[key] = float(raw)
        except ValueError:
            params[key] = raw
    if name != "zero":
        params.setdefault("p", p)
    nl = make_nonlinearity(name, **params)
    return ProblemConfig(p, s, lam, mesh, weights, nl)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_mesh(cfg: RunConfig, args) -> int:
    problem = _build_problem(cfg)
    out = _out_dir(args)
    serialize.write_weights(out / "mesh_weights.txt", problem.weights)
    print(
        "mesh: %d cells, alpha=%.6g, frozen-tail fraction=%.6g"
        % (problem.mesh.n_cells, problem.weights.alpha, problem.weights.tail_fraction)
    )
    return EXIT_OK


def _cmd_eigs(cfg: RunConfig, args) -> int:
    problem = _build_problem(cfg)
    count = cfg.get_int("eigs.count", 6)
    pairs = spectrum.eig_p2(problem.mesh, problem.weights, count, p=problem.p)
    out = _out_dir(args)
    rows = ["%d,%.17g" % (i + 1, pair.value) for i, pair in enumerate(pairs)]
    (out / "eigenvalues.csv").write_text("\n".join(rows) + "\n")
    for i, pair in enumerate(pairs):
        serialize.write_grid_function(out / ("eigvec_%03d.csv" % (i + 1)), pair.function)
    print("eigs: wrote %d eigenpairs, lambda_1=%.3e" % (count, pairs[0].value))
    return EXIT_OK


def _bump_endpoint(problem: ProblemConfig, kind: str, scale_cfg: str) -> GridFunction:
    """Positive (or negative) bump endpoint with nonpositive functional value.

    A fixed smooth bump profile is scaled by doubling until the truncated
    functional drops below -1, or by the configured scale directly.
    """
    mesh = problem.mesh
    x = mesh.centers[mesh.interior_indices]
    span = mesh.omega_hi - mesh.omega_lo
    profile = 1.0 + np.cos(np.pi * (2.0 * (x - mesh.omega_lo) / span - 1.0))
    if kind == MINUS:
        profile = -profile
    e = exterior_extend(
        GridFunction.from_interior(mesh, profile), mesh, problem.weights, problem.p
    )
    if scale_cfg != "auto":
        return GridFunction(float(scale_cfg) * e.values, mesh)
    scale = 1.0
    for _ in range(80):
        candidate = GridFunction(scale * e.values, mesh)
        if functional_value(kind, candidate, problem) <= -1.0:
            return candidate
        scale *= 2.0
    raise GeometryError("could not scale the bump endpoint to nonpositive energy")


def _solver_opts(cfg: RunConfig) -> critical.MountainPassOptions:
    return critical.MountainPassOptions(
        n_nodes=cfg.get_int("solver.n_nodes", 21),
        grad_tol=cfg.get_float("solver.grad_tol", 1e-6),
        max_sweeps=cfg.get_int("solver.max_sweeps", 600),
        ring_seed=cfg.get_int("run.seed", 7),
    )


def _cmd_solve(cfg: RunConfig, args) -> int:
    problem = _build_problem(cfg)
    out = _out_dir(args)
    scale_cfg = cfg.get_str("solver.endpoint_scale", "auto")
    opts = _solver_opts(cfg)
    status = EXIT_OK
    for kind, label in ((PLUS, "plus"), (MINUS, "minus")):
        endpoint = _bump_endpoint(problem, kind, scale_cfg)
        report = critical.mountain_pass(endpoint, kind, problem, opts)
        serialize.write_report(out / f"report_{label}.json", report.to_dict())
        serialize.write_grid_function(out / f"solution_{label}.csv", report.u)
        print(
            "solve[%s]: converged=%s energy=%.6g grad_norm=%.3e sign=%s"
            % (label, report.converged, report.energy, report.grad_norm, report.sign_class)
        )
        if not report.converged:
            status = EXIT_UNCONVERGED
    return status


def _cmd_minimize(cfg: RunConfig, args) -> int:
    problem = _build_problem(cfg)
    out = _out_dir(args)
    opts = critical.DescentOptions(
        grad_tol=cfg.get_float("solver.grad_tol", 1e-8),
        max_iter=cfg.get_int("solver.max_iter", 50000),
    )
    init = cfg.get_str("solver.init", "zero")
    if init == "zero":
        u0 = GridFunction.zeros(problem.mesh)
    elif init == "linear":
        u0 = critical.linear_minimizer_p2(problem)
    else:
        raise ConfigurationError(f"solver.init must be 'zero' or 'linear' (got {init!r})")
    report = critical.minimize(u0, FULL, problem, opts, coercive=True)
    serialize.write_report(out / "report_minimize.json", report.to_dict())
    serialize.write_grid_function(out / "solution_minimize.csv", report.u)
    print(
        "minimize: converged=%s energy=%.6g grad_norm=%.3e iterations=%d"
        % (report.converged, report.energy, report.grad_norm, report.iterations)
    )
    return EXIT_OK if report.converged else EXIT_UNCONVERGED


def _cmd_verify(cfg: RunConfig, args) -> int:
    seed = cfg.get_int("run.seed", 42)
    p = cfg.get_float("problem.p", 2.0)
    s = cfg.get_float("problem.s", 0.4)
    n_samples = cfg.get_int("verify.n_samples", 100000)
    p_lo = cfg.get_float("verify.p_lo", 1.01)
    p_hi = cfg.get_float("verify.p_hi", 10.0)

    inequalities = propcheck.check_pointwise_inequalities(
        n_samples, (p_lo, p_hi), seed=seed
    )
    growth = []
    growth.append(
        propcheck.check_growth(make_nonlinearity("power", p=p), propcheck.G_SET).to_dict()
    )
    growth.append(
        propcheck.check_growth(make_nonlinearity("power", p=p), propcheck.F_SET).to_dict()
    )
    growth.append(
        propcheck.check_growth(
            make_nonlinearity("power_perturbed", p=p), propcheck.F_SET
        ).to_dict()
    )
    growth.append(
        propcheck.check_growth(
            make_nonlinearity("affine_decay", p=p), propcheck.LINEAR_SET
        ).to_dict()
    )
    invariants = propcheck.run_invariant_suites(p=p, s=s, seed=seed)

    hard = (
        inequalities.total_violations
        + sum(sum(g["hard_violations"].values()) for g in growth)
        + invariants["total_failures"]
    )
    out = _out_dir(args)
    serialize.write_report(
        out / "verify_report.json",
        {
            "inequalities": inequalities.to_dict(),
            "growth": growth,
            "invariants": invariants,
            "hard_violations": hard,
        },
    )
    print(
        "verify: %d hard violations (%d inequality samples, seed %d)"
        % (hard, inequalities.n_samples, seed)
    )
    return EXIT_OK if hard == 0 else EXIT_CONFIG


_COMMANDS = {
    "mesh": _cmd_mesh,
    "eigs": _cmd_eigs,
    "solve": _cmd_solve,
    "minimize": _cmd_minimize,
    "verify": _cmd_verify,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fracneum",
        description="Interval solver and verifier for the fractional p-Laplacian "
        "with nonlocal flux-free exterior conditions",
    )
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", required=True, help="flat key-value config file")
    parser.add_argument("--out", default="out", help="artifact directory")
    parser.add_argument("--seed", type=int, default=None, help="override run.seed")
    parser.add_argument("--threads", type=int, default=None, help="backend thread cap")
    args = parser.parse_args(argv)

    _apply_threads(args.threads)
    try:
        cfg = RunConfig.parse(args.config)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FracneumError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.seed is not None:
        cfg.entries["run.seed"] = str(args.seed)

    try:
        return _COMMANDS[args.command](cfg, args)
    except (GeometryError, ConnectivityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GEOMETRY
    except FracneumError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
