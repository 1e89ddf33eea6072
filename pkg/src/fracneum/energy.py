"""Discrete energy functionals, gradients and the weak-form residual.

The discrete element is a GridFunction: one value per mesh cell (piecewise-
constant ansatz).  The kernel energy of u is

    [u]^p_h = 2 * sum_{i<j} w_ij |u_i - u_j|^p,

the factor 2 restoring the ordered double integral; w is the coupling graph
of a KernelWeights (pair weights with the frozen-tail couplings folded in).
Local terms integrate by the midpoint rule: g and its primitive are sampled at
interior cell centers and weighted by cell measures.

Three functionals are provided:

* ``full``:  (1/2p)[u]^p_h - (lambda/p) sum m|u|^p - sum m G(x, u)
* ``plus``:  (1/2p)[u]^p_h + (1/p) sum m|u|^p
             - ((lambda+1)/p) sum m (u+)^p - sum m G(x, u+)
* ``minus``: same with the negative part, i.e. the reaction terms are
             composed with min(u, 0); it mirrors ``plus`` under u -> -u for
             odd reactions.

``plus`` agrees with ``full`` on u >= 0 and ``minus`` on u <= 0, so critical
points of the truncated functionals with the matching sign solve the original
problem.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BindingError, ConfigurationError, ParameterError
from .mesh import DomainMesh, KernelWeights
from .nonlinearity import Nonlinearity, odd_power

FULL = "full"
PLUS = "plus"
MINUS = "minus"
KINDS = (FULL, PLUS, MINUS)


def jp(t, p: float):
    """The odd monomial |t|^(p-2) t, evaluated safely at t = 0."""
    return odd_power(t, p - 1.0)


@dataclass
class GridFunction:
    """One real value per cell of a bound mesh."""

    values: np.ndarray
    mesh: DomainMesh

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.mesh.n_cells,):
            raise BindingError(
                f"grid function has {self.values.size} values for a mesh with "
                f"{self.mesh.n_cells} cells"
            )
        if not np.all(np.isfinite(self.values)):
            raise ParameterError("grid function values must be finite")

    @classmethod
    def constant(cls, mesh: DomainMesh, value: float) -> "GridFunction":
        return cls(np.full(mesh.n_cells, float(value)), mesh)

    @classmethod
    def zeros(cls, mesh: DomainMesh) -> "GridFunction":
        return cls.constant(mesh, 0.0)

    @classmethod
    def from_interior(cls, mesh: DomainMesh, interior_values, fill: float = 0.0) -> "GridFunction":
        values = np.full(mesh.n_cells, float(fill))
        values[mesh.interior_indices] = np.asarray(interior_values, dtype=float)
        return cls(values, mesh)

    def copy(self) -> "GridFunction":
        return GridFunction(self.values.copy(), self.mesh)

    @property
    def interior_values(self) -> np.ndarray:
        return self.values[self.mesh.interior_indices]


def require_bound(u: GridFunction, weights: KernelWeights):
    if u.mesh is not weights.mesh:
        raise BindingError("grid function and weights are bound to different meshes")


@dataclass
class ProblemConfig:
    """Exponents, spectral shift and handles defining one discrete problem."""

    p: float
    s: float
    lam: float
    mesh: DomainMesh
    weights: KernelWeights
    nonlinearity: Nonlinearity

    def __post_init__(self):
        if not 1.0 < self.p < np.inf:
            raise ConfigurationError(f"p must lie in (1, inf) (got {self.p})")
        if not 0.0 < self.s < 1.0:
            raise ConfigurationError(f"s must lie in (0, 1) (got {self.s})")
        if self.weights.mesh is not self.mesh:
            raise ConfigurationError("weights are bound to a different mesh")
        expected = 1.0 + self.p * self.s
        if abs(self.weights.alpha - expected) > 1e-12 * expected:
            raise ConfigurationError(
                f"weights alpha = {self.weights.alpha} inconsistent with "
                f"1 + p*s = {expected}"
            )


def gagliardo_p(weights: KernelWeights, u: GridFunction, p: float) -> float:
    """Kernel energy [u]^p_h = 2 sum_{i<j} w_ij |u_i - u_j|^p (>= 0)."""
    require_bound(u, weights)
    diff = u.values[:, None] - u.values[None, :]
    return float(np.sum(weights.coupling * np.abs(diff) ** p))


def sobolev_norm(weights: KernelWeights, u: GridFunction, p: float) -> float:
    """([u]^p_h + sum over interior cells of m_k |u_k|^p)^(1/p)."""
    mesh = weights.mesh
    ii = mesh.interior_indices
    mass = float(np.sum(mesh.measures[ii] * np.abs(u.values[ii]) ** p))
    return (gagliardo_p(weights, u, p) + mass) ** (1.0 / p)


def _kernel_gradient(weights: KernelWeights, u: GridFunction, p: float) -> np.ndarray:
    """Cellwise derivative of (1/2p)[u]^p_h: sum_j w_kj J_p(u_k - u_j)."""
    diff = u.values[:, None] - u.values[None, :]
    return np.sum(weights.coupling * jp(diff, p), axis=1)


def _local_terms(kind: str, u: GridFunction, cfg: ProblemConfig):
    """Value and gradient of the interior reaction/mass terms of one kind."""
    mesh = cfg.mesh
    ii = mesh.interior_indices
    m = mesh.measures[ii]
    x = mesh.centers[ii]
    v = u.values[ii]
    p, lam, nl = cfg.p, cfg.lam, cfg.nonlinearity

    if kind == FULL:
        value = -lam / p * np.sum(m * np.abs(v) ** p) - np.sum(m * nl.G(x, v))
        grad = -lam * m * jp(v, p) - m * nl(x, v)
        return value, grad

    if kind == PLUS:
        trunc = np.maximum(v, 0.0)
        active = v > 0.0
    elif kind == MINUS:
        trunc = np.minimum(v, 0.0)
        active = v < 0.0
    else:
        raise ParameterError(f"kind must be one of {KINDS} (got {kind!r})")

    value = (
        np.sum(m * np.abs(v) ** p) / p
        - (lam + 1.0) / p * np.sum(m * np.abs(trunc) ** p)
        - np.sum(m * nl.G(x, trunc))
    )
    grad = m * (
        jp(v, p)
        - (lam + 1.0) * jp(trunc, p)
        - np.where(active, nl(x, trunc), 0.0)
    )
    return value, grad


def functional_value(kind: str, u: GridFunction, cfg: ProblemConfig) -> float:
    """Value of the chosen functional at u (no gradient; line-search path)."""
    require_bound(u, cfg.weights)
    value = gagliardo_p(cfg.weights, u, cfg.p) / (2.0 * cfg.p)
    return value + _local_terms(kind, u, cfg)[0]


def evaluate(kind: str, u: GridFunction, cfg: ProblemConfig):
    """Value and gradient of the chosen functional at u.

    Returns ``(value, gradient)`` with the gradient as a GridFunction.
    Exterior cells carry only the kernel term, which is exactly the discrete
    Neumann functional of that cell.
    """
    require_bound(u, cfg.weights)
    seminorm = gagliardo_p(cfg.weights, u, cfg.p)
    value = seminorm / (2.0 * cfg.p)
    grad = _kernel_gradient(cfg.weights, u, cfg.p)
    local_value, local_grad = _local_terms(kind, u, cfg)
    value += local_value
    grad[cfg.mesh.interior_indices] += local_grad
    return value, GridFunction(grad, cfg.mesh)


def weak_residual(u: GridFunction, v: GridFunction, cfg: ProblemConfig) -> float:
    """Weak-form pairing of the full functional's derivative at u with v.

    sum_{i<j} w_ij J_p(u_i - u_j)(v_i - v_j) - lambda sum m J_p(u) v
    - sum m g(x, u) v, the local sums over interior cells.  Zero for all v
    exactly when u is a discrete weak solution; coincides with the inner
    product of the ``full`` gradient with v.
    """
    require_bound(u, cfg.weights)
    require_bound(v, cfg.weights)
    du = u.values[:, None] - u.values[None, :]
    dv = v.values[:, None] - v.values[None, :]
    kernel = 0.5 * float(np.sum(cfg.weights.coupling * jp(du, cfg.p) * dv))
    ii = cfg.mesh.interior_indices
    m = cfg.mesh.measures[ii]
    x = cfg.mesh.centers[ii]
    uu, vv = u.values[ii], v.values[ii]
    local = float(
        cfg.lam * np.sum(m * jp(uu, cfg.p) * vv) + np.sum(m * cfg.nonlinearity(x, uu) * vv)
    )
    return kernel - local
