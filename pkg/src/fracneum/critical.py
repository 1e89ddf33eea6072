"""Critical-point search: coercive descent and mountain-pass path minimax.

Both solvers work on the flux-free manifold: iterates keep their exterior
cells at the extension values, so the exterior gradient components vanish up
to the extension solver tolerance and every converged point automatically
satisfies the discrete Neumann condition.  The free unknowns are the interior
values; by the envelope argument the gradient of the reduced functional is the
interior restriction of the full gradient.

The gradient is measured in the measure-weighted dual norm
sqrt(sum_k g_k^2 / m_k) (the L2 norm of the residual density), a computable
stand-in for the continuous dual norm on the fixed mesh.  The Cerami measure
(1 + ||u||) * grad_norm is reported as a compactness diagnostic along runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from .energy import (
    FULL,
    MINUS,
    PLUS,
    GridFunction,
    ProblemConfig,
    evaluate,
    functional_value,
    sobolev_norm,
)
from .errors import ConfigurationError, DivergenceError, GeometryError, ParameterError
from .neumann import exterior_extend, neumann_residual
from .spectrum import condensed_operator, eig_p2

POSITIVE = "positive"
NEGATIVE = "negative"
SIGN_CHANGING = "sign_changing"
ZERO = "zero"

_SIGN_TOL = 1e-10


def grad_norm_weighted(grad: GridFunction) -> float:
    """Measure-weighted dual norm of a gradient: sqrt(sum g_k^2 / m_k)."""
    return float(np.sqrt(np.sum(grad.values**2 / grad.mesh.measures)))


def sign_classification(u: GridFunction, tol: float = _SIGN_TOL) -> str:
    """Sign class of u over all cells (interior and exterior)."""
    lo, hi = float(np.min(u.values)), float(np.max(u.values))
    if max(abs(lo), abs(hi)) <= tol:
        return ZERO
    if lo > tol:
        return POSITIVE
    if hi < -tol:
        return NEGATIVE
    return SIGN_CHANGING


def spectral_bracket(cfg: ProblemConfig, max_eigs: int = 16) -> Optional[int]:
    """Index m with lambda_m <= 2*lambda + 1 < lambda_{m+1} (p = 2 only)."""
    if cfg.p != 2.0:
        return None
    target = 2.0 * cfg.lam + 1.0
    k = min(cfg.mesh.interior_indices.size, max_eigs)
    values = [pair.value for pair in eig_p2(cfg.mesh, cfg.weights, k)]
    for m in range(len(values) - 1, 0, -1):
        if values[m - 1] <= target:
            if m < len(values) and target >= values[m]:
                return None  # bracket beyond the computed window
            return m
    return None


@dataclass
class CriticalPointReport:
    """Solution candidate with convergence and verification diagnostics."""

    u: GridFunction
    kind: str
    energy: float
    grad_norm: float
    cerami_measure: float
    neumann_residual: float
    sign_class: str
    cone_bracket: Optional[int]
    iterations: int
    converged: bool
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "kind": self.kind,
            "energy": self.energy,
            "grad_norm": self.grad_norm,
            "cerami_measure": self.cerami_measure,
            "neumann_residual": self.neumann_residual,
            "sign_class": self.sign_class,
            "cone_bracket": self.cone_bracket,
            "iterations": self.iterations,
            "converged": self.converged,
        }
        out.update(self.extra)
        return out


def classify(
    u: GridFunction,
    cfg: ProblemConfig,
    kind: str = FULL,
    iterations: int = 0,
    converged: bool = False,
    with_bracket: bool = True,
    extra: Optional[dict] = None,
) -> CriticalPointReport:
    """Fill every report field for a candidate u without modifying it."""
    value, grad = evaluate(kind, u, cfg)
    gn = grad_norm_weighted(grad)
    return CriticalPointReport(
        u=u,
        kind=kind,
        energy=value,
        grad_norm=gn,
        cerami_measure=(1.0 + sobolev_norm(cfg.weights, u, cfg.p)) * gn,
        neumann_residual=neumann_residual(u, cfg.mesh, cfg.weights, cfg.p),
        sign_class=sign_classification(u),
        cone_bracket=spectral_bracket(cfg) if with_bracket else None,
        iterations=iterations,
        converged=converged,
        extra=extra or {},
    )


@dataclass
class DescentOptions:
    """Armijo-backtracked descent controls."""

    grad_tol: float = 1e-8
    max_iter: int = 50000
    armijo_c: float = 1e-4
    backtrack: float = 0.5
    max_backtracks: int = 60
    step_grow: float = 2.0
    # Newton refinement once energy differences hit the floating-point floor
    # (strict energy decrease is asserted only for the descent phase; the
    # refinement is monotone in the gradient norm instead).
    polish: bool = True
    polish_max_iter: int = 30


def _extend_interior(interior: np.ndarray, cfg: ProblemConfig) -> GridFunction:
    u = GridFunction.from_interior(cfg.mesh, interior)
    return exterior_extend(u, cfg.mesh, cfg.weights, cfg.p)


def _initial_step(cfg: ProblemConfig, u0: GridFunction) -> float:
    """Inverse curvature guess from coupling row sums and cell masses."""
    ii = cfg.mesh.interior_indices
    row = np.sum(cfg.weights.coupling[ii], axis=1)
    spread = float(np.max(u0.values) - np.min(u0.values))
    curv = (cfg.p - 1.0) * row * (1.0 + spread) ** (cfg.p - 2.0) + cfg.mesh.measures[ii]
    return 1.0 / float(np.max(curv))


def minimize(
    u0: GridFunction,
    kind: str,
    cfg: ProblemConfig,
    opts: Optional[DescentOptions] = None,
    coercive: bool = False,
) -> CriticalPointReport:
    """Backtracking descent on the chosen functional from u0.

    Steps use the Barzilai-Borwein length safeguarded by the Armijo rule, so
    the energy decreases strictly at every accepted step.  In coercive mode
    the nonlinearity must declare p-linear growth with a negative asymptotic
    slope everywhere, the regime in which the free energy is coercive and the
    descent limit is a global minimiser.
    """
    opts = opts or DescentOptions()
    if coercive:
        if kind != FULL:
            raise ConfigurationError("coercive mode applies to the full functional only")
        meta = cfg.nonlinearity.require("linear")
        from .nonlinearity import eval_coefficient

        slopes = eval_coefficient(meta.alpha_bar, cfg.mesh.centers[cfg.mesh.interior_indices])
        if not np.all(slopes < 0.0):
            raise ConfigurationError(
                "coercive mode requires alpha_bar(x) < 0 on all interior cells"
            )

    u = exterior_extend(u0, cfg.mesh, cfg.weights, cfg.p)
    value, grad = evaluate(kind, u, cfg)
    if not np.isfinite(value):
        raise DivergenceError("non-finite energy at the initial iterate", last_iterate=u)
    ii = cfg.mesh.interior_indices
    step = _initial_step(cfg, u)
    energies = [value]
    converged = False
    it = 0
    while it < opts.max_iter:
        it += 1
        if grad_norm_weighted(grad) <= opts.grad_tol:
            converged = True
            it -= 1
            break
        g = grad.values[ii]
        slope = -float(g @ g)
        t = step
        accepted = False
        for _ in range(opts.max_backtracks):
            trial = _extend_interior(u.values[ii] - t * g, cfg)
            v_trial = functional_value(kind, trial, cfg)
            if np.isfinite(v_trial) and v_trial <= value + opts.armijo_c * t * slope:
                accepted = True
                break
            t *= opts.backtrack
        if not accepted:
            break
        if not v_trial < value:
            break  # numerically stagnant: no strict decrease left
        v_new, grad_new = evaluate(kind, trial, cfg)
        s = trial.values[ii] - u.values[ii]
        y = grad_new.values[ii] - g
        sy = float(s @ y)
        step = float(s @ s) / sy if sy > 0.0 else t * opts.step_grow
        u, value, grad = trial, v_new, grad_new
        energies.append(value)

    polish_iters = 0
    if not converged and opts.polish:
        refined, polish_iters, ok = refine_by_gradient_norm(
            kind,
            cfg,
            u.values[ii],
            opts.grad_tol,
            opts.polish_max_iter,
            armijo_c=opts.armijo_c,
            backtrack=opts.backtrack,
            max_backtracks=opts.max_backtracks,
            step_grow=opts.step_grow,
        )
        candidate = _extend_interior(refined, cfg)
        _, g_ref = evaluate(kind, candidate, cfg)
        if grad_norm_weighted(g_ref) < grad_norm_weighted(grad):
            u = candidate
            converged = ok

    deltas = np.diff(energies)
    report = classify(
        u,
        cfg,
        kind=kind,
        iterations=it,
        converged=converged,
        extra={
            "energy_monotone": bool(np.all(deltas < 0.0)) if deltas.size else True,
            "initial_energy": energies[0],
            "polish_iterations": polish_iters,
        },
    )
    return report


def linear_minimizer_p2(cfg: ProblemConfig) -> GridFunction:
    """Direct solve of the p = 2 coercive problem with a decaying affine term.

    For g(x, t) = -gamma t + f0(x) the minimiser of the free energy solves
    (K_red + (gamma - lambda) M) u = M f0 on the interior cells, K_red the
    condensed coupling Laplacian; the exterior is filled by the flux-free
    extension.
    """
    if cfg.p != 2.0:
        raise ConfigurationError("the direct minimiser requires p = 2")
    if cfg.nonlinearity.name != "affine_decay":
        raise ConfigurationError("the direct minimiser requires the affine_decay term")
    meta = cfg.nonlinearity.require("linear")
    gamma = meta.b
    k_red, m = condensed_operator(cfg.mesh, cfg.weights)
    x = cfg.mesh.centers[cfg.mesh.interior_indices]
    f0 = cfg.nonlinearity(x, np.zeros_like(x))
    sys = k_red + np.diag((gamma - cfg.lam) * m)
    sol = scipy.linalg.solve(sys, m * f0, assume_a="sym")
    return _extend_interior(sol, cfg)


def ray_coercivity(cfg: ProblemConfig, u: GridFunction, scales, kind: str = FULL):
    """Functional value over norm^p along the ray t -> t*u, per scale."""
    out = []
    for t in scales:
        v = GridFunction(t * u.values, u.mesh)
        out.append(functional_value(kind, v, cfg) / sobolev_norm(cfg.weights, v, cfg.p) ** cfg.p)
    return out


@dataclass
class MountainPassOptions:
    """Path-minimax controls."""

    n_nodes: int = 21
    grad_tol: float = 1e-6
    max_sweeps: int = 600
    armijo_c: float = 1e-4
    backtrack: float = 0.5
    max_backtracks: int = 40
    step_grow: float = 2.0
    # Largest node displacement per sweep, as a fraction of the node spacing.
    step_cap_fraction: float = 0.5
    polish_switch: float = 1e-2
    polish_max_iter: int = 40
    polish_every: int = 5
    ring_radii: int = 12
    ring_samples: int = 32
    ring_seed: int = 7


def _path_metric(mesh) -> np.ndarray:
    # Path nodes are interior value vectors; arclength uses interior masses.
    return mesh.measures[mesh.interior_indices]


def _arc_redistribute(nodes: list[np.ndarray], metric: np.ndarray) -> list[np.ndarray]:
    """Re-space path nodes to equal arclength along the current polyline."""
    pts = np.stack(nodes)
    seg = np.sqrt(np.sum(metric * np.diff(pts, axis=0) ** 2, axis=1))
    arc = np.concatenate([[0.0], np.cumsum(seg)])
    total = arc[-1]
    if total == 0.0:
        return nodes
    targets = np.linspace(0.0, total, len(nodes))
    out = [nodes[0]]
    j = 0
    for t in targets[1:-1]:
        while arc[j + 1] < t and j < len(seg) - 1:
            j += 1
        frac = (t - arc[j]) / seg[j] if seg[j] > 0.0 else 0.0
        out.append(pts[j] + frac * (pts[j + 1] - pts[j]))
    out.append(nodes[-1])
    return out


def _ring_precheck(kind: str, cfg: ProblemConfig, norm_e: float, opts: MountainPassOptions):
    """Search sampled spheres for a radius with positive functional minimum.

    Directions are seeded random interior profiles, flux-free extended and
    rescaled to the target norm.  Returns (radius, ring minimum); raises
    GeometryError with the sampled diagnostics when no radius qualifies.
    """
    rng = np.random.default_rng(opts.ring_seed)
    n_int = cfg.mesh.interior_indices.size
    directions = []
    for _ in range(opts.ring_samples):
        d = _extend_interior(rng.standard_normal(n_int), cfg)
        directions.append(d.values / sobolev_norm(cfg.weights, d, cfg.p))
    radii = np.geomspace(1e-3 * norm_e, 0.9 * norm_e, opts.ring_radii)
    mins = []
    for r in radii:
        vals = [
            functional_value(kind, GridFunction(r * d, cfg.mesh), cfg) for d in directions
        ]
        mins.append(min(vals))
    mins = np.array(mins)
    best = int(np.argmax(mins))
    if mins[best] <= 0.0:
        raise GeometryError(
            "no positive ring minimum on sampled spheres: radii="
            f"{radii.tolist()}, minima={mins.tolist()}"
        )
    return float(radii[best]), float(mins[best])


def _node_descent_step(
    kind: str,
    cfg: ProblemConfig,
    node: np.ndarray,
    value: float,
    step: float,
    cap: float,
    floor: float,
    metric: np.ndarray,
    opts,
):
    """One Armijo-backtracked, step-capped descent step on a single path node.

    The displacement is limited to ``cap`` in the path metric so the string of
    nodes stays taut across the energy barrier instead of tearing into the
    surrounding valleys, and nodes whose energy has already dropped below
    ``floor`` are frozen: far below the barrier their exact position cannot
    affect the path maximum, while chasing the (unbounded-below) energy would
    run away.  Returns (new interior values, new value, next step guess); the
    node is returned unchanged when no decrease is found.
    """
    if value <= floor:
        return node, value, step
    ii = cfg.mesh.interior_indices
    u = _extend_interior(node, cfg)
    _, grad = evaluate(kind, u, cfg)
    g = grad.values[ii]
    glen = float(np.sqrt(np.sum(metric * g * g)))
    if not np.isfinite(glen) or glen == 0.0:
        return node, value, step
    slope = -float(g @ g)
    t = min(step, cap / glen)
    for _ in range(opts.max_backtracks):
        trial_int = node - t * g
        trial = _extend_interior(trial_int, cfg)
        v = functional_value(kind, trial, cfg)
        if np.isfinite(v) and v <= value + opts.armijo_c * t * slope:
            return trial.values[ii].copy(), v, t * opts.step_grow
        t *= opts.backtrack
    return node, value, step


def refine_by_gradient_norm(
    kind: str,
    cfg: ProblemConfig,
    start_interior: np.ndarray,
    grad_tol: float,
    max_iter: int,
    armijo_c: float = 1e-4,
    backtrack: float = 0.5,
    max_backtracks: int = 40,
    step_grow: float = 2.0,
):
    """Damped Newton refinement of the stationarity system g(u) = 0.

    The reduced Jacobian is assembled column by column with forward
    differences; steps are globalised by the Armijo rule on the merit
    h(u) = 1/2 sum g_k(u)^2 / m_k, which (unlike the energy) keeps full
    relative accuracy arbitrarily close to the critical point.  Works for
    minimisers and saddles alike.  Returns (interior values, iterations,
    converged).
    """
    ii = cfg.mesh.interior_indices
    m = cfg.mesh.measures[ii]
    m_all = cfg.mesh.measures

    def reduced_grad(interior):
        u = _extend_interior(interior, cfg)
        _, grad = evaluate(kind, u, cfg)
        return grad.values

    def merit(gfull):
        return 0.5 * float(np.sum(gfull**2 / m_all))

    node = start_interior.copy()
    n = node.size
    g_full = reduced_grad(node)
    h = merit(g_full)
    for it in range(1, max_iter + 1):
        if np.sqrt(2.0 * h) <= grad_tol:
            return node, it - 1, True
        jac = np.empty((n, n))
        for j in range(n):
            dj = 1e-7 * (1.0 + abs(node[j]))
            pert = node.copy()
            pert[j] += dj
            jac[:, j] = (reduced_grad(pert)[ii] - g_full[ii]) / dj
        jac = 0.5 * (jac + jac.T)
        try:
            direction = -np.linalg.solve(jac, g_full[ii])
        except np.linalg.LinAlgError:
            direction = -np.linalg.lstsq(jac, g_full[ii], rcond=None)[0]
        grad_h = jac @ (g_full[ii] / m)
        slope = float(direction @ grad_h)
        if not np.isfinite(slope) or slope >= 0.0:
            direction = -grad_h
            slope = -float(grad_h @ grad_h)
        if slope == 0.0:
            return node, it, False
        t = 1.0
        accepted = False
        for _ in range(max_backtracks):
            trial = node + t * direction
            g_trial = reduced_grad(trial)
            h_trial = merit(g_trial)
            if np.isfinite(h_trial) and h_trial <= h + armijo_c * t * slope:
                accepted = True
                break
            t *= backtrack
        if not accepted:
            return node, it, False
        node, g_full, h = trial, g_trial, h_trial
    return node, max_iter, np.sqrt(2.0 * merit(reduced_grad(node))) <= grad_tol


def mountain_pass(
    e: GridFunction,
    kind: str,
    cfg: ProblemConfig,
    opts: Optional[MountainPassOptions] = None,
) -> CriticalPointReport:
    """Path-minimax search for a saddle between 0 and the endpoint e.

    The segment from 0 to e is discretised into ``n_nodes`` states; each sweep
    takes one descent step on every inner node and re-spaces the nodes by
    arclength (skipping a re-spacing that would raise the path maximum).  The
    path maximum is nonincreasing across sweeps; once it flattens, the highest
    node is polished by squared-gradient descent.  Convergence means the
    gradient norm at the maximising node fell below ``grad_tol``; its state is
    returned with positive energy expected.
    """
    opts = opts or MountainPassOptions()
    if kind not in (PLUS, MINUS):
        raise ParameterError(f"mountain_pass expects kind '{PLUS}' or '{MINUS}' (got {kind!r})")
    if opts.n_nodes < 3:
        raise ParameterError(f"n_nodes must be >= 3 (got {opts.n_nodes})")

    e = exterior_extend(e, cfg.mesh, cfg.weights, cfg.p)
    e_value = functional_value(kind, e, cfg)
    if not e_value <= 0.0:
        raise GeometryError(
            f"endpoint energy must be <= 0 (got {e_value}); rescale the endpoint"
        )
    ei = e.interior_values
    if kind == PLUS and not np.any(ei > _SIGN_TOL):
        raise GeometryError("endpoint must have a nontrivial positive part")
    if kind == MINUS and not np.any(ei < -_SIGN_TOL):
        raise GeometryError("endpoint must have a nontrivial negative part")
    norm_e = sobolev_norm(cfg.weights, e, cfg.p)
    inner_radius, ring_min = _ring_precheck(kind, cfg, norm_e, opts)

    metric = _path_metric(cfg.mesh)
    thetas = np.linspace(0.0, 1.0, opts.n_nodes)
    nodes = [t * ei for t in thetas]
    values = [functional_value(kind, _extend_interior(n, cfg), cfg) for n in nodes]
    steps = [_initial_step(cfg, e)] * opts.n_nodes
    arc_total = float(
        np.sum(
            np.sqrt(np.sum(metric * np.diff(np.stack(nodes), axis=0) ** 2, axis=1))
        )
    )

    # Fixed taut-string cap and a value floor well below both endpoints.
    cap = opts.step_cap_fraction * arc_total / (opts.n_nodes - 1)
    floor = min(0.0, e_value) - 1.0 - abs(e_value)

    def try_polish(seed):
        polished, used, ok = refine_by_gradient_norm(
            kind,
            cfg,
            seed,
            opts.grad_tol,
            opts.polish_max_iter,
            armijo_c=opts.armijo_c,
            backtrack=opts.backtrack,
            max_backtracks=opts.max_backtracks,
            step_grow=opts.step_grow,
        )
        if ok and functional_value(kind, _extend_interior(polished, cfg), cfg) > 0.0:
            return polished, used
        return None, used

    # Running minimax: the best path maximum seen after any descent half-sweep.
    minimax_history = [max(values)]
    converged = False
    best_interior = nodes[int(np.argmax(values))]
    # Best saddle seed: the barrier-top snapshot with the smallest gradient
    # among positive-level maxima.  If the sampled path ever slips off the
    # barrier (possible when the zero sublevel set has a connecting channel),
    # the saddle is recovered by a Newton refinement from this snapshot.
    seed_interior, seed_gn = None, np.inf
    sweeps = 0
    polish_iters = 0
    for sweeps in range(1, opts.max_sweeps + 1):
        for i in range(1, opts.n_nodes - 1):
            nodes[i], values[i], steps[i] = _node_descent_step(
                kind, cfg, nodes[i], values[i], steps[i], cap, floor, metric, opts
            )
        i_max = int(np.argmax(values))
        path_max = values[i_max]
        best_interior = nodes[i_max]
        running = min(minimax_history[-1], path_max)
        if running > minimax_history[-1] + 1e-12 * (1.0 + abs(running)):
            raise AssertionError("running path minimax increased across a sweep")
        minimax_history.append(running)

        grad = evaluate(kind, _extend_interior(best_interior, cfg), cfg)[1]
        gn = grad_norm_weighted(grad)
        if path_max > 0.0 and gn < seed_gn:
            seed_interior, seed_gn = best_interior.copy(), gn
        if gn <= opts.grad_tol and path_max > 0.0:
            converged = True
            break
        if path_max <= 0.0:
            # The sampled path lost its positive maximum: no barrier is left
            # to ride, so refine from the recorded barrier top instead.
            break
        if sweeps % opts.polish_every == 0 or gn <= opts.polish_switch:
            polished, used = try_polish(best_interior)
            polish_iters += used
            if polished is not None:
                best_interior = polished
                converged = True
                break

        # Keep the string taut: re-space nodes by arclength every sweep.
        nodes = _arc_redistribute(nodes, metric)
        values = [functional_value(kind, _extend_interior(n, cfg), cfg) for n in nodes]

    if not converged and seed_interior is not None:
        polished, used = try_polish(seed_interior)
        polish_iters += used
        if polished is not None:
            best_interior = polished
            converged = True

    u_best = _extend_interior(best_interior, cfg)
    report = classify(
        u_best,
        cfg,
        kind=kind,
        iterations=sweeps,
        converged=converged,
        extra={
            "polish_iterations": polish_iters,
            "endpoint_value": e_value,
            "endpoint_norm": norm_e,
            "inner_radius": inner_radius,
            "ring_minimum": ring_min,
            "minimax_level": minimax_history[-1],
        },
    )
    return report
