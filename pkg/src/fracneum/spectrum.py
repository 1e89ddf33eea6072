"""Eigenstructure of the discrete operator.

For p = 2 the kernel energy is the quadratic form [u]^2_h = u^T A u with
A = 2(D - C) built from the coupling graph C (D = diagonal of row sums).
Exterior cells couple only to interior cells, so the flux-free condition is
linear in the exterior unknowns and they can be eliminated exactly by a Schur
complement.  The reduced symmetric generalized problem

    A_red phi = lambda M phi,      M = diag(interior cell measures),

yields the eigenvalues of the Rayleigh quotient [u]^2_h / ||u||^2_{L2(Omega)}.
The first eigenvalue is 0 with constant eigenfunctions.  For p != 2 no
computable minimax characterisation is available beyond the first eigenvalue;
only the Rayleigh quotient and cone membership tests are exposed there, with
caller-supplied bracket values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .energy import GridFunction, gagliardo_p
from .errors import DomainError, ParameterError, UnsupportedModeError
from .mesh import DomainMesh, KernelWeights
from .neumann import exterior_extend

# Largest interior count handled by the dense symmetric solver.
_DENSE_LIMIT = 512

IN_LOWER_CONE = "in_lower_cone"
IN_UPPER_CONE = "in_upper_cone"
NEITHER = "neither"
BOTH_ZERO = "both_zero"


@dataclass(frozen=True)
class EigenPair:
    """Eigenvalue with its exterior-extended, mass-normalised eigenfunction."""

    value: float
    function: GridFunction


def condensed_operator(mesh: DomainMesh, weights: KernelWeights):
    """Schur-condensed coupling Laplacian over the interior cells (p = 2).

    Returns ``(k_red, m_diag)`` where k_red is the interior matrix obtained by
    eliminating the exterior unknowns from the graph Laplacian L = D - C of
    the coupling matrix, and m_diag the interior cell measures.  The quadratic
    form of the kernel energy after elimination is u^T (2 k_red) u, and the
    weak operator of the p = 2 problem is k_red itself:
    k_red u = f collects sum_j w_kj (u_k - u_j) = f_k on interior cells with
    the exterior cells at their flux-free values.
    """
    weights.require_exterior_connectivity()
    c = weights.coupling
    lap = np.diag(np.sum(c, axis=1)) - c
    ii = mesh.interior_indices
    ee = mesh.exterior_indices
    l_ii = lap[np.ix_(ii, ii)]
    l_ie = lap[np.ix_(ii, ee)]
    l_ee = lap[np.ix_(ee, ee)]
    # Exterior-exterior couplings vanish, so l_ee is diagonal and positive.
    k_red = l_ii - l_ie @ np.linalg.solve(l_ee, l_ie.T)
    k_red = 0.5 * (k_red + k_red.T)
    return k_red, mesh.measures[ii]


def eig_p2(mesh: DomainMesh, weights: KernelWeights, k: int, p: float = 2.0) -> list[EigenPair]:
    """k smallest eigenpairs of the condensed p = 2 problem, ascending.

    Eigenfunctions are normalised to unit interior p-mass, extended to the
    exterior cells by the flux-free condition, and sign-fixed so that the
    first component of nonnegligible size is positive.  Only p = 2 admits the
    linear condensation; any other exponent is rejected.
    """
    if p != 2.0:
        raise UnsupportedModeError(f"eigensolver requires p = 2 (got p = {p})")
    n_int = mesh.interior_indices.size
    if k < 1 or k > n_int:
        raise ParameterError(f"k must lie in [1, {n_int}] (got {k})")
    k_red, m = condensed_operator(mesh, weights)
    a_red = 2.0 * k_red
    if n_int <= _DENSE_LIMIT:
        vals, vecs = scipy.linalg.eigh(
            a_red, np.diag(m), subset_by_index=[0, k - 1]
        )
    else:
        shift = -1e-8 * float(np.max(np.abs(a_red)))
        vals, vecs = scipy.sparse.linalg.eigsh(
            scipy.sparse.csr_matrix(a_red),
            k=k,
            M=scipy.sparse.diags(m),
            sigma=shift,
            which="LM",
        )
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]

    pairs = []
    for j in range(k):
        phi = vecs[:, j]
        norm = np.sum(m * phi * phi) ** 0.5
        phi = phi / norm
        lead = np.nonzero(np.abs(phi) > 1e-12 * np.max(np.abs(phi)))[0][0]
        if phi[lead] < 0.0:
            phi = -phi
        full = exterior_extend(
            GridFunction.from_interior(mesh, phi), mesh, weights, p=2.0
        )
        pairs.append(EigenPair(value=float(vals[j]), function=full))
    return pairs


def rayleigh(u: GridFunction, weights: KernelWeights, mesh: DomainMesh, p: float) -> float:
    """Quotient [u]^p_h / sum over interior of m_k |u_k|^p."""
    ii = mesh.interior_indices
    mass = float(np.sum(mesh.measures[ii] * np.abs(u.values[ii]) ** p))
    if mass == 0.0:
        raise DomainError("Rayleigh quotient undefined: u vanishes on Omega")
    return gagliardo_p(weights, u, p) / mass


# Relative slack absorbing rounding in the cone membership comparisons.
_CONE_SLACK = 1e-10


def cone_test(
    u: GridFunction,
    lambda_lo: float,
    lambda_hi: float,
    weights: KernelWeights,
    mesh: DomainMesh,
    p: float,
) -> str:
    """Membership of u in the spectral cones bracketing (lambda_lo, lambda_hi).

    The lower cone collects functions with [u]^p_h <= lambda_lo * interior
    p-mass, the upper cone those with [u]^p_h >= lambda_hi * p-mass.  The zero
    function lies in both and is reported separately.
    """
    if not 0.0 <= lambda_lo <= lambda_hi:
        raise ParameterError(
            f"need 0 <= lambda_lo <= lambda_hi (got {lambda_lo}, {lambda_hi})"
        )
    if np.all(u.values == 0.0):
        return BOTH_ZERO
    sem = gagliardo_p(weights, u, p)
    ii = mesh.interior_indices
    mass = float(np.sum(mesh.measures[ii] * np.abs(u.values[ii]) ** p))
    slack = _CONE_SLACK * (sem + (1.0 + lambda_hi) * mass)
    if sem <= lambda_lo * mass + slack:
        return IN_LOWER_CONE
    if sem >= lambda_hi * mass - slack:
        return IN_UPPER_CONE
    return NEITHER
