"""1-D meshes and exact singular-kernel pair weights.

The computational domain is an interval Omega = (omega_lo, omega_hi) plus a
truncated exterior collar of length ``collar_radius`` on each side.  Cells are
closed intervals that tile [omega_lo - R, omega_hi + R]; each cell is tagged
interior or exterior.  Pair weights are the exact double integrals

    w_ij = integral over I_i x I_j of |x - y|^(-alpha) dx dy,

with alpha = 1 + p*s, evaluated in closed form.  Pairs of two exterior cells
carry no weight: the energy only integrates over pairs with at least one point
in Omega.  The field beyond the collar is frozen to the value of the outermost
collar cell; the corresponding interior-to-tail weights are analytic because
alpha > 1 makes the kernel tail integrable.

All assembly is vectorised with a fixed summation order, so results are
reproducible bit-for-bit run to run.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConnectivityError, DomainError, ParameterError

INTERIOR = "interior"
EXTERIOR = "exterior"

UNIFORM = "uniform"
GEOMETRIC = "geometric"

LEFT = "left"
RIGHT = "right"

# |alpha - 2| below this uses the alpha -> 2 limiting branch of the
# antiderivative combination (expm1 keeps it exact; this only guards log(0)).
_ALPHA2_TOL = 1e-12


@dataclass(frozen=True)
class DomainMesh:
    """Interval partition of Omega plus exterior collar, sorted left to right.

    ``cell_lo``/``cell_hi`` hold the cell endpoints; consecutive cells share
    an endpoint exactly (same float).  ``is_interior`` tags the cells inside
    Omega.
    """

    omega_lo: float
    omega_hi: float
    collar_radius: float
    cell_lo: np.ndarray
    cell_hi: np.ndarray
    is_interior: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "cell_lo", np.asarray(self.cell_lo, dtype=float))
        object.__setattr__(self, "cell_hi", np.asarray(self.cell_hi, dtype=float))
        object.__setattr__(self, "is_interior", np.asarray(self.is_interior, dtype=bool))
        self.validate()

    def validate(self):
        lo, hi = self.cell_lo, self.cell_hi
        if lo.shape != hi.shape or lo.shape != self.is_interior.shape:
            raise ParameterError("cell arrays must have identical shapes")
        if not np.all(hi > lo):
            raise ParameterError("every cell measure must be > 0")
        if not np.all(lo[1:] == hi[:-1]):
            raise ParameterError("cells must tile the segment with no gap or overlap")
        if lo[0] != self.omega_lo - self.collar_radius or hi[-1] != self.omega_hi + self.collar_radius:
            raise ParameterError("cells must cover exactly [omega_lo - R, omega_hi + R]")
        ii = self.interior_indices
        if ii.size == 0:
            raise ParameterError("mesh must contain at least one interior cell")
        if lo[ii[0]] != self.omega_lo or hi[ii[-1]] != self.omega_hi:
            raise ParameterError("interior cells must tile Omega exactly")
        if np.any(np.diff(ii) != 1):
            raise ParameterError("interior cells must be contiguous")

    @property
    def n_cells(self) -> int:
        return self.cell_lo.size

    @property
    def measures(self) -> np.ndarray:
        return self.cell_hi - self.cell_lo

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.cell_lo + self.cell_hi)

    @property
    def interior_indices(self) -> np.ndarray:
        return np.nonzero(self.is_interior)[0]

    @property
    def exterior_indices(self) -> np.ndarray:
        return np.nonzero(~self.is_interior)[0]

    @property
    def outermost_left(self) -> int:
        return 0

    @property
    def outermost_right(self) -> int:
        return self.n_cells - 1

    def cell_measure(self, k: int) -> float:
        return float(self.cell_hi[k] - self.cell_lo[k])

    def cell_center(self, k: int) -> float:
        return float(0.5 * (self.cell_lo[k] + self.cell_hi[k]))

    @property
    def omega_measure(self) -> float:
        return self.omega_hi - self.omega_lo


def _graded_widths(length: float, n: int, ratio: float) -> np.ndarray:
    """Cell widths over a segment of given length, smallest cell first.

    Widths grow by the factor 1/ratio away from the graded end, i.e. they
    shrink by ``ratio`` toward it.  ratio = 1 reproduces the uniform split.
    """
    if abs(ratio - 1.0) < 1e-15:
        return np.full(n, length / n)
    q = 1.0 / ratio
    first = length * (q - 1.0) / (q ** n - 1.0)
    return first * q ** np.arange(n)


def build_mesh(
    omega_lo: float,
    omega_hi: float,
    n_interior: int,
    n_exterior_per_side: int,
    collar_radius: float,
    grading: str = UNIFORM,
    ratio: float = 0.5,
) -> DomainMesh:
    """Build the interval mesh for Omega = (omega_lo, omega_hi) plus collar.

    Parameters
    ----------
    n_interior, n_exterior_per_side : cell counts (>= 1).
    collar_radius : length R > 0 of the exterior collar on each side.
    grading : ``"uniform"`` or ``"geometric"``.  Geometric grading shrinks the
        cell widths by ``ratio`` per step toward the boundary of Omega, on
        both sides of it (interior halves and exterior collars alike).  For an
        odd interior count the left half receives the extra cell.
    """
    if not omega_lo < omega_hi:
        raise ParameterError(f"omega_lo must be < omega_hi (got {omega_lo}, {omega_hi})")
    if n_interior < 1:
        raise ParameterError(f"n_interior must be >= 1 (got {n_interior})")
    if n_exterior_per_side < 1:
        raise ParameterError(f"n_exterior_per_side must be >= 1 (got {n_exterior_per_side})")
    if not collar_radius > 0:
        raise ParameterError(f"collar_radius must be > 0 (got {collar_radius})")
    if grading not in (UNIFORM, GEOMETRIC):
        raise ParameterError(f"grading must be '{UNIFORM}' or '{GEOMETRIC}' (got {grading!r})")
    if grading == GEOMETRIC and not ratio > 0:
        raise ParameterError(f"ratio must be > 0 (got {ratio})")

    r = ratio if grading == GEOMETRIC else 1.0

    # Interior: grade each half toward its boundary; meet at the midpoint.
    n_left = (n_interior + 1) // 2
    n_right = n_interior - n_left
    half = 0.5 * (omega_hi - omega_lo)
    if n_right == 0:
        interior_bounds = np.array([omega_lo, omega_hi])
    else:
        wl = _graded_widths(half, n_left, r)
        wr = _graded_widths(half, n_right, r)
        bounds = np.concatenate([[0.0], np.cumsum(wl), half + np.cumsum(wr[::-1])])
        interior_bounds = omega_lo + bounds
        interior_bounds[0] = omega_lo
        interior_bounds[-1] = omega_hi

    # Exterior collars: smallest cell adjacent to Omega, growing outward.
    we = _graded_widths(collar_radius, n_exterior_per_side, r)
    left_bounds = omega_lo - np.concatenate([np.cumsum(we)[::-1], [0.0]])
    left_bounds[0] = omega_lo - collar_radius
    right_bounds = omega_hi + np.concatenate([[0.0], np.cumsum(we)])
    right_bounds[-1] = omega_hi + collar_radius

    all_bounds = np.concatenate([left_bounds[:-1], interior_bounds, right_bounds[1:]])
    n_ext = n_exterior_per_side
    tags = np.concatenate(
        [
            np.zeros(n_ext, dtype=bool),
            np.ones(n_interior, dtype=bool),
            np.zeros(n_ext, dtype=bool),
        ]
    )
    return DomainMesh(
        omega_lo=float(omega_lo),
        omega_hi=float(omega_hi),
        collar_radius=float(collar_radius),
        cell_lo=all_bounds[:-1],
        cell_hi=all_bounds[1:],
        is_interior=tags,
    )


def _phi_combination(args: np.ndarray, signs: np.ndarray, alpha: float) -> np.ndarray:
    """Signed sum of the kernel double antiderivative at the corner arguments.

    The antiderivative is Phi(t) = |t|^(2-alpha) / ((1-alpha)(2-alpha)) for
    alpha != 2 and Phi(t) = -log|t| for alpha = 2.  Because the corner signs
    sum to zero, the constant part of |t|^(2-alpha) = 1 + expm1(...) cancels
    exactly; evaluating through expm1 avoids the catastrophic cancellation the
    raw formula suffers for alpha near 2.  log(0) = -inf is deliberate: it
    yields expm1 -> -1 (the exact touching-interval value for alpha < 2) and
    +inf (the genuine divergence) for alpha >= 2.
    """
    with np.errstate(divide="ignore"):
        logs = np.log(np.abs(args))
    if abs(alpha - 2.0) <= _ALPHA2_TOL:
        with np.errstate(invalid="ignore"):
            out = -(signs * logs)
        return np.sum(out, axis=-1)
    terms = signs * np.expm1((2.0 - alpha) * logs)
    return np.sum(terms, axis=-1) / ((1.0 - alpha) * (2.0 - alpha))


def pair_weight(interval1, interval2, alpha: float) -> float:
    """Exact integral of |x-y|^(-alpha) over interval1 x interval2.

    The intervals must have disjoint interiors.  A shared endpoint is allowed
    for alpha < 2 (the integral converges, antiderivative value 0 at the
    corner); for alpha >= 2 the integral diverges and a DomainError is raised.
    Degenerate (zero-measure) intervals yield 0.
    """
    a, b = float(min(interval1)), float(max(interval1))
    c, d = float(min(interval2)), float(max(interval2))
    if not 1.0 < alpha:
        raise ParameterError(f"alpha must be > 1 (got {alpha})")
    if b - a == 0.0 or d - c == 0.0:
        return 0.0
    if b > c and d > a:
        raise DomainError(
            f"intervals [{a}, {b}] and [{c}, {d}] have overlapping interiors"
        )
    touching = (b == c) or (d == a)
    if touching and alpha >= 2.0 - _ALPHA2_TOL:
        raise DomainError(
            f"touching intervals diverge for alpha = {alpha} >= 2; "
            "use the regularized adjacent-cell weight"
        )
    args = np.array([b - c, a - d, b - d, a - c])
    signs = np.array([1.0, 1.0, -1.0, -1.0])
    return float(_phi_combination(args, signs, alpha))


def adjacent_weight_regularized(interval1, interval2, alpha: float) -> float:
    """Stabilised weight for cells sharing an endpoint when alpha >= 2.

    The continuum pairing of piecewise constants across a shared face diverges
    for alpha >= 2.  This surrogate splits each cell at its midpoint and drops
    the inner-inner corner block containing the singularity, keeping the three
    finite sub-blocks.  It is a recorded modelling choice, stable under mesh
    refinement but making no accuracy claim.
    """
    a, b = float(min(interval1)), float(max(interval1))
    c, d = float(min(interval2)), float(max(interval2))
    if b == c:
        pass
    elif d == a:
        (a, b), (c, d) = (c, d), (a, b)
    else:
        raise DomainError("regularized weight requires intervals sharing an endpoint")
    m1 = 0.5 * (a + b)
    m2 = 0.5 * (c + d)
    return (
        pair_weight((a, m1), (c, m2), alpha)
        + pair_weight((a, m1), (m2, d), alpha)
        + pair_weight((m1, b), (m2, d), alpha)
    )


def tail_weight(interval, cut: float, side: str, alpha: float) -> float:
    """Exact integral of |x-y|^(-alpha) over interval x half-line beyond cut.

    ``side = "right"`` integrates y over (cut, +inf), ``side = "left"`` over
    (-inf, cut).  The interval must lie strictly on the other side of the cut.
    Finite for every alpha > 1.
    """
    a, b = float(min(interval)), float(max(interval))
    if not alpha > 1.0:
        raise ParameterError(f"alpha must be > 1 (got {alpha})")
    if side == RIGHT:
        near, far = cut - b, cut - a
    elif side == LEFT:
        near, far = a - cut, b - cut
    else:
        raise ParameterError(f"side must be '{LEFT}' or '{RIGHT}' (got {side!r})")
    if b - a == 0.0:
        return 0.0
    if not near > 0.0:
        raise DomainError(
            f"interval [{a}, {b}] must keep a positive distance from the cut {cut}"
        )
    if abs(alpha - 2.0) <= _ALPHA2_TOL:
        return float(np.log(far / near))
    num = np.expm1((2.0 - alpha) * np.log(far)) - np.expm1((2.0 - alpha) * np.log(near))
    return float(num / ((alpha - 1.0) * (2.0 - alpha)))


@dataclass(frozen=True)
class KernelWeights:
    """Symmetric pair weights plus analytic tail weights for one mesh.

    ``pair_w[i, j]`` is the exact cell-pair weight (zero on the diagonal and
    for exterior-exterior pairs).  ``tail_left``/``tail_right`` couple each
    interior cell to the frozen field beyond the collar on that side; the
    coupling is carried by the outermost collar cell.  ``coupling`` is
    ``pair_w`` with the tail weights folded onto those outermost cells: it is
    the weight graph every energy evaluation uses.
    """

    mesh: DomainMesh
    alpha: float
    pair_w: np.ndarray
    tail_left: np.ndarray
    tail_right: np.ndarray
    coupling: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if self.coupling is None:
            eff = self.pair_w.copy()
            ol, orr = self.mesh.outermost_left, self.mesh.outermost_right
            eff[:, ol] += self.tail_left
            eff[ol, :] += self.tail_left
            eff[:, orr] += self.tail_right
            eff[orr, :] += self.tail_right
            object.__setattr__(self, "coupling", eff)

    @property
    def n_cells(self) -> int:
        return self.mesh.n_cells

    @property
    def tail_fraction(self) -> float:
        """Frozen-tail share of the total weight mass (truncation diagnostic)."""
        tails = float(np.sum(self.tail_left) + np.sum(self.tail_right))
        pairs = float(np.sum(self.pair_w)) / 2.0
        return tails / (tails + pairs)

    def validate(self):
        w = self.pair_w
        if w.shape != (self.n_cells, self.n_cells):
            raise ParameterError("pair_w must be square over the mesh cells")
        if not np.array_equal(w, w.T):
            raise ParameterError("pair weights must be exactly symmetric")
        if np.any(np.diag(w) != 0.0):
            raise ParameterError("diagonal pair weights must vanish")
        if np.any(w < 0.0) or not np.all(np.isfinite(w)):
            raise ParameterError("pair weights must be finite and nonnegative")
        ext = self.mesh.exterior_indices
        if np.any(w[np.ix_(ext, ext)] != 0.0):
            raise ParameterError("exterior-exterior pairs must carry zero weight")
        for name, t in (("tail_left", self.tail_left), ("tail_right", self.tail_right)):
            if np.any(t < 0.0) or not np.all(np.isfinite(t)):
                raise ParameterError(f"{name} must be finite and nonnegative")
            if np.any(t[ext] != 0.0):
                raise ParameterError(f"{name} must vanish on exterior cells")

    def require_exterior_connectivity(self):
        ii = self.mesh.interior_indices
        for k in self.mesh.exterior_indices:
            if not np.any(self.coupling[k, ii] > 0.0):
                raise ConnectivityError(
                    f"exterior cell {k} has no coupling to any interior cell"
                )


def assemble_weights(mesh: DomainMesh, p: float, s: float) -> KernelWeights:
    """Assemble all pair and tail weights for kernel exponent alpha = 1 + p*s.

    Every unordered pair with at least one interior cell receives its exact
    closed-form weight; exterior-exterior pairs receive zero.  For alpha >= 2
    the exact weight of cells sharing an endpoint diverges and the recorded
    midpoint-split regularisation is used instead.
    """
    if not 1.0 < p < np.inf:
        raise ParameterError(f"p must lie in (1, inf) (got {p})")
    if not 0.0 < s < 1.0:
        raise ParameterError(f"s must lie in (0, 1) (got {s})")
    alpha = 1.0 + p * s
    lo, hi = mesh.cell_lo, mesh.cell_hi

    # Corner combination for every ordered pair (i left of j): the matrices
    # are evaluated on the full grid, then restricted to i < j.
    corners = np.stack(
        [
            hi[:, None] - lo[None, :],
            lo[:, None] - hi[None, :],
            hi[:, None] - hi[None, :],
            lo[:, None] - lo[None, :],
        ],
        axis=-1,
    )
    signs = np.array([1.0, 1.0, -1.0, -1.0])
    with np.errstate(invalid="ignore", over="ignore"):
        w = _phi_combination(corners, signs, alpha)

    n = mesh.n_cells
    w = np.where(np.triu(np.ones((n, n), dtype=bool), k=1), w, 0.0)

    if alpha >= 2.0 - _ALPHA2_TOL:
        for i in range(n - 1):
            w[i, i + 1] = adjacent_weight_regularized(
                (lo[i], hi[i]), (lo[i + 1], hi[i + 1]), alpha
            )

    w = w + w.T
    ext = mesh.exterior_indices
    w[np.ix_(ext, ext)] = 0.0
    if not np.all(np.isfinite(w)):
        raise ParameterError("assembled pair weights are not all finite")

    tail_left = np.zeros(n)
    tail_right = np.zeros(n)
    cut_l = mesh.omega_lo - mesh.collar_radius
    cut_r = mesh.omega_hi + mesh.collar_radius
    for k in mesh.interior_indices:
        cell = (lo[k], hi[k])
        tail_left[k] = tail_weight(cell, cut_l, LEFT, alpha)
        tail_right[k] = tail_weight(cell, cut_r, RIGHT, alpha)

    weights = KernelWeights(
        mesh=mesh, alpha=alpha, pair_w=w, tail_left=tail_left, tail_right=tail_right
    )
    weights.validate()
    weights.require_exterior_connectivity()
    return weights
