"""Collocation derivative operators on scattered nodes.

Builds, for each node of a cloud, a compact stencil whose weighted sum of
neighbor values approximates a partial derivative D^alpha. The weights come
from a small moment-matching system per node: a monomial basis evaluated at
the scaled neighbor offsets, damped by a Gaussian window, is forced to
reproduce the derivative of every basis monomial at the origin. Solving that
system and folding the window back in yields kernel weights with the discrete
moment conditions built in, so polynomials up to degree |alpha| + r - 1 are
differentiated exactly.

Conventions used throughout:

* offsets are taken center-minus-neighbor, v_q = (x_p - x_q) / eps_p;
* the right-hand side is b_beta = (-1)^{|alpha|} D^alpha p_beta(0), so the
  target moment at beta = alpha is (-1)^{|alpha|} alpha!;
* the applied operator is Q f(x_p) = sum_q w_q (f(x_q) + s f(x_p)) with
  s = +1 for odd |alpha| and s = -1 for even |alpha|. The even case cancels
  constants by itself, which is why the constant monomial only appears in
  the basis when |alpha| is odd.
"""

from __future__ import annotations

import functools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.linalg.lapack import dpotrs
from scipy.sparse import csr_matrix

from .cloud import (
    DuplicateNodeError,
    NeighborSet,
    PointCloud,
    SpatialIndex,
    _k_nearest_arrays,
    average_spacing,
    k_nearest,
)

_RESIDUAL_TOL = 1e-10
_GROWTH = 1.5
_MAX_BASIS_DEGREE = 6


class InsufficientSupportError(ValueError):
    """Raised when a support has fewer nodes than basis monomials."""


class IllConditionedNodeError(RuntimeError):
    """Raised when one node's moment system cannot be solved reliably."""

    def __init__(self, node: int | None, detail: str):
        self.node = node
        where = f"node {node}" if node is not None else "node"
        super().__init__(f"ill-conditioned moment system at {where}: {detail}")


class OperatorBuildError(RuntimeError):
    """Raised when operator construction fails at one or more nodes."""

    def __init__(self, failed: dict[int, str]):
        self.failed_nodes = dict(sorted(failed.items()))
        ids = list(self.failed_nodes)
        shown = ", ".join(str(i) for i in ids[:10])
        if len(ids) > 10:
            shown += f", ... ({len(ids)} total)"
        super().__init__(
            f"operator construction failed at node(s) {shown}; "
            f"first failure: {next(iter(self.failed_nodes.values()))}"
        )


def multi_index_order(alpha) -> int:
    """Total order |alpha| of a derivative multi-index."""
    return int(sum(alpha))


def _validate_alpha(alpha) -> tuple[int, ...]:
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) not in (1, 2, 3):
        raise ValueError(f"multi-index must have 1 to 3 components, got {alpha}")
    if any(a < 0 for a in alpha):
        raise ValueError(f"multi-index components must be non-negative, got {alpha}")
    if sum(alpha) < 1:
        raise ValueError(f"derivative order must be at least 1, got {alpha}")
    return alpha


@dataclass(frozen=True)
class OperatorSpec:
    """Parameters controlling one derivative operator.

    Parameters
    ----------
    alpha : tuple of int
        Derivative multi-index, one component per spatial dimension.
    r : int
        Approximation order; polynomials up to degree |alpha| + r - 1 are
        reproduced exactly. Default 2.
    eps_factor : float
        Kernel width as a multiple of the local average spacing. Default 1.0.
    neighbor_factor : float
        Support size as a multiple of the basis size l (k = ceil of it),
        at least 1.0. Default 2.0.
    max_growth_attempts : int
        How many times an ill-conditioned support may be regrown by 1.5x
        before the node is reported as failed. Default 5.
    cond_threshold : float
        1-norm condition estimate above which a (square-rank) moment system
        is rejected. Default 1e12.
    """

    alpha: tuple[int, ...]
    r: int = 2
    eps_factor: float = 1.0
    neighbor_factor: float = 2.0
    max_growth_attempts: int = 5
    cond_threshold: float = 1e12

    def __post_init__(self):
        object.__setattr__(self, "alpha", _validate_alpha(self.alpha))
        if self.r < 1:
            raise ValueError(f"approximation order r must be >= 1, got {self.r}")
        if multi_index_order(self.alpha) + self.r - 1 > _MAX_BASIS_DEGREE:
            raise ValueError(
                f"|alpha| + r - 1 = {multi_index_order(self.alpha) + self.r - 1} "
                f"exceeds the supported maximum degree {_MAX_BASIS_DEGREE}"
            )
        if not self.eps_factor > 0:
            raise ValueError(f"eps_factor must be positive, got {self.eps_factor}")
        if not self.neighbor_factor >= 1.0:
            raise ValueError(
                f"neighbor_factor must be at least 1.0, got {self.neighbor_factor}"
            )
        if self.max_growth_attempts < 0:
            raise ValueError("max_growth_attempts must be non-negative")
        if not self.cond_threshold > 0:
            raise ValueError("cond_threshold must be positive")

    @property
    def order(self) -> int:
        return multi_index_order(self.alpha)

    @property
    def sign(self) -> int:
        """Center-value coupling: +1 for odd |alpha|, -1 for even."""
        return 1 if self.order % 2 == 1 else -1


def _grade_tuples(total: int, d: int):
    if d == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _grade_tuples(total - first, d - 1):
            yield (first,) + rest


def monomial_basis(alpha, r: int, d: int | None = None) -> list[tuple[int, ...]]:
    """Monomial multi-indices for the moment system of D^alpha at order r.

    Degrees run from alpha_min to |alpha| + r - 1, where alpha_min is 0 for
    odd |alpha| and 1 for even |alpha| (the center coupling of even
    operators cancels constants on its own). Graded order, and within each
    degree the leading component decreases, e.g. (2,0), (1,1), (0,2).
    When given, `d` must agree with the dimension implied by alpha.
    """
    alpha = _validate_alpha(alpha)
    if r < 1:
        raise ValueError(f"approximation order r must be >= 1, got {r}")
    if d is not None and d != len(alpha):
        raise ValueError(
            f"dimension {d} does not match multi-index of length {len(alpha)}"
        )
    d = len(alpha)
    order = multi_index_order(alpha)
    lo = 0 if order % 2 == 1 else 1
    hi = order + r - 1
    basis: list[tuple[int, ...]] = []
    for degree in range(lo, hi + 1):
        basis.extend(_grade_tuples(degree, d))
    return basis


@functools.lru_cache(maxsize=256)
def _basis_cached(alpha: tuple[int, ...], r: int):
    """monomial_basis plus its float matrix, memoized per (alpha, r)."""
    basis = tuple(monomial_basis(alpha, r))
    arr = np.asarray(basis, dtype=np.float64)
    arr.setflags(write=False)
    return basis, arr


@dataclass(frozen=True)
class MomentSystem:
    """Per-node moment-matching system A a = b with A = B^T B, B = E V.

    V holds the basis monomials at the scaled offsets v_q = (x_p - x_q)/eps
    (one row per neighbor), E the Gaussian half-window exp(-|v_q|^2 / 2), so
    E^2 is the kernel window.
    """

    basis: list[tuple[int, ...]]
    scaled_offsets: np.ndarray
    V: np.ndarray
    E: np.ndarray
    A: np.ndarray
    b: np.ndarray
    eps: float

    @property
    def k(self) -> int:
        return self.V.shape[0]

    @property
    def l(self) -> int:
        return self.V.shape[1]

    def condition_estimate(self) -> float:
        """1-norm condition estimate of A; inf if numerically singular."""
        cached = self.__dict__.get("_cond")
        if cached is None:
            try:
                cached = float(np.linalg.cond(self.A, 1))
            except np.linalg.LinAlgError:
                cached = float("inf")
            object.__setattr__(self, "_cond", cached)
        return cached


def _basis_matrix(scaled: np.ndarray, basis_arr: np.ndarray) -> np.ndarray:
    # scaled: (k, d), basis_arr: (l, d) -> V: (k, l); 0**0 == 1 covers the
    # constant monomial.
    return np.prod(scaled[:, None, :] ** basis_arr[None, :, :], axis=2)


def _rhs(basis: list[tuple[int, ...]], alpha: tuple[int, ...]) -> np.ndarray:
    b = np.zeros(len(basis))
    sign = -1.0 if multi_index_order(alpha) % 2 == 1 else 1.0
    try:
        idx = basis.index(alpha)
    except ValueError:
        raise ValueError(f"derivative multi-index {alpha} not in basis") from None
    b[idx] = sign * math.prod(math.factorial(a) for a in alpha)
    return b


def assemble_moment_system(
    cloud: PointCloud,
    neighbors: NeighborSet,
    spec: OperatorSpec,
    eps: float,
    *,
    allow_underdetermined: bool = False,
) -> MomentSystem:
    """Assemble the moment system of D^alpha at one node.

    Raises InsufficientSupportError when the support has fewer nodes than
    basis monomials, unless allow_underdetermined is set (the builder uses
    that once the support already spans the whole cloud, accepting the
    minimal-norm solution iff its residual passes).
    """
    if not eps > 0:
        raise ValueError(f"kernel width eps must be positive, got {eps}")
    if len(alpha := spec.alpha) != cloud.dim:
        raise ValueError(
            f"multi-index {alpha} has {len(alpha)} components "
            f"but the cloud is {cloud.dim}-dimensional"
        )
    basis_t, basis_arr = _basis_cached(tuple(spec.alpha), spec.r)
    basis = list(basis_t)
    k, l = len(neighbors), len(basis)
    if k < l and not allow_underdetermined:
        raise InsufficientSupportError(
            f"node {neighbors.node}: support of {k} nodes cannot determine "
            f"{l} basis moments"
        )
    offsets = cloud.coords[neighbors.node] - cloud.coords[neighbors.ids]
    scaled = offsets / eps
    V = _basis_matrix(scaled, basis_arr)
    E = np.exp(-0.5 * np.sum(scaled**2, axis=1))
    B = E[:, None] * V
    A = B.T @ B
    b = _rhs(basis, spec.alpha)
    return MomentSystem(
        basis=basis, scaled_offsets=scaled, V=V, E=E, A=A, b=b, eps=float(eps)
    )


def _solve_columns(
    system: MomentSystem,
    rhs: np.ndarray,
    cond_threshold: float,
    node: int | None,
) -> np.ndarray:
    """Solve A a = b for each column of rhs with a shared factorization.

    Square-rank systems (k >= l) are gated on the condition estimate and
    solved by Cholesky; rank-deficient or underdetermined ones fall back to
    an orthogonal-factorization least-squares solve on B. Either way the
    residual |A a - b| <= 1e-10 (1 + |b|) is enforced per column.
    """
    A, B = system.A, system.E[:, None] * system.V
    underdetermined = system.k < system.l
    if not underdetermined:
        cond = system.condition_estimate()
        if not cond <= cond_threshold:
            raise IllConditionedNodeError(
                node, f"condition estimate {cond:.3e} exceeds {cond_threshold:.3e}"
            )
    solve = None
    if not underdetermined:
        try:
            factor, _ = scipy.linalg.cho_factor(A, lower=True, check_finite=False)

            def solve(col):
                # potrs directly: cho_solve minus its per-call checks, which
                # dominate at the small sizes solved here
                return dpotrs(factor, col, lower=1)[0]

        except scipy.linalg.LinAlgError:
            solve = None
    if solve is None:
        _, s, vt = np.linalg.svd(B, full_matrices=False)
        keep = s > (s[0] * 1e-13 if s.size and s[0] > 0 else np.inf)
        if not np.any(keep):
            raise IllConditionedNodeError(node, "moment matrix is numerically zero")
        s, vt = s[keep], vt[keep]
        pinv = (vt.T / s**2) @ vt  # pseudo-inverse of A = V S^2 V^T

        def solve(col):
            return pinv @ col

    # Columns are solved one at a time so that shared multi-target builds
    # are bit-identical to independent single-target builds.
    sol = np.empty_like(rhs)
    for j in range(rhs.shape[1]):
        col = rhs[:, j]
        a = solve(col)
        for _ in range(2):  # refinement keeps the residual near round-off
            a = a + solve(col - A @ a)
        res = A @ a - col
        resid = math.sqrt(float(res @ res))
        bound = _RESIDUAL_TOL * (1.0 + math.sqrt(float(col @ col)))
        if not resid <= bound:
            raise IllConditionedNodeError(
                node, f"moment residual {resid:.3e} exceeds {bound:.3e}"
            )
        sol[:, j] = a
    return sol


def solve_kernel_coefficients(
    system: MomentSystem,
    *,
    cond_threshold: float = 1e12,
    node: int | None = None,
) -> np.ndarray:
    """Solve the moment system for the kernel coefficient vector a."""
    return _solve_columns(system, system.b[:, None], cond_threshold, node)[:, 0]


def kernel_weights(system: MomentSystem, coeffs: np.ndarray, order: int) -> np.ndarray:
    """Fold coefficients into per-neighbor weights eps^-|alpha| p(v) a W(v)."""
    phi = (system.V @ coeffs) * system.E**2
    return phi / system.eps**order


@dataclass(frozen=True)
class StencilOperator:
    """A derivative operator assembled over every node of one cloud.

    Per node p the stencil stores neighbor ids and weights w_q; applying
    the operator evaluates sum_q w_q (f_q + sign * f_p). Diagnostics from
    construction (kernel width, support size, condition estimate) are kept
    per node.
    """

    alpha: tuple[int, ...]
    r: int
    dim: int
    n: int
    neighbor_ids: list[np.ndarray] = field(repr=False)
    weights: list[np.ndarray] = field(repr=False)
    eps: np.ndarray = field(repr=False)
    support_size: np.ndarray = field(repr=False)
    condition: np.ndarray = field(repr=False)
    _matrix: csr_matrix = field(repr=False, compare=False)

    @property
    def order(self) -> int:
        return multi_index_order(self.alpha)

    @property
    def sign(self) -> int:
        return 1 if self.order % 2 == 1 else -1

    def apply(self, values: np.ndarray) -> np.ndarray:
        return apply(self, values)


def _stencil_matrix(
    n: int, sign: int, ids: list[np.ndarray], weights: list[np.ndarray]
) -> csr_matrix:
    counts = np.fromiter((w.size for w in weights), dtype=np.intp, count=n)
    indptr = np.zeros(n + 1, dtype=np.intp)
    np.cumsum(counts + 1, out=indptr[1:])
    indices = np.empty(indptr[-1], dtype=np.intp)
    data = np.empty(indptr[-1], dtype=np.float64)
    for p in range(n):
        lo, hi = indptr[p], indptr[p + 1]
        indices[lo : hi - 1] = ids[p]
        data[lo : hi - 1] = weights[p]
        indices[hi - 1] = p  # center coupling last, fixed summation order
        data[hi - 1] = sign * np.sum(weights[p])
    return csr_matrix((data, indices, indptr), shape=(n, n))


def _resolve_threads(threads: int | None) -> int:
    if threads is None:
        env = os.environ.get("DCPSE_THREADS", "").strip()
        if env:
            threads = int(env)
        else:
            threads = os.cpu_count() or 1
    if threads < 1:
        raise ValueError(f"thread count must be positive, got {threads}")
    return threads


def _build_node(
    cloud: PointCloud,
    index: SpatialIndex,
    spec: OperatorSpec,
    rhs: np.ndarray,
    l: int,
    k0: int,
    p: int,
    prefetch: list[tuple[np.ndarray, np.ndarray]] | None = None,
):
    """Build all requested weight sets at node p, growing the support on
    ill-conditioning. Returns (ids, weight matrix, eps, support k, cond)."""
    n = cloud.n
    k = k0
    last_error: Exception | None = None
    for attempt in range(spec.max_growth_attempts + 1):
        if prefetch is not None and k == k0:
            ids, dists = prefetch[p]
            neighbors = NeighborSet(node=p, ids=ids, distances=dists)
        else:
            neighbors = k_nearest(index, p, k)
        h = average_spacing(cloud, neighbors)
        eps = spec.eps_factor * h
        system = assemble_moment_system(
            cloud, neighbors, spec, eps, allow_underdetermined=k < l
        )
        try:
            coeffs = _solve_columns(system, rhs, spec.cond_threshold, p)
        except IllConditionedNodeError as err:
            last_error = err
            if k >= n - 1:
                break
            k = min(math.ceil(_GROWTH * k), n - 1)
            continue
        window = system.E**2
        w = np.empty((system.k, coeffs.shape[1]))
        for j in range(coeffs.shape[1]):
            w[:, j] = (system.V @ coeffs[:, j]) * window / eps**spec.order
        cond = system.condition_estimate() if system.k >= system.l else float("inf")
        return neighbors.ids, w, eps, k, cond
    raise last_error if last_error is not None else RuntimeError("unreachable")


def _build_many(
    cloud: PointCloud,
    index: SpatialIndex,
    alphas: list[tuple[int, ...]],
    spec: OperatorSpec,
    threads: int | None,
) -> list[StencilOperator]:
    """Build one operator per multi-index in alphas, sharing supports and
    factorizations. All alphas must have the same order so the basis and
    moment matrix coincide; only the right-hand sides differ."""
    orders = {multi_index_order(a) for a in alphas}
    if len(orders) != 1:
        raise ValueError("shared construction requires equal derivative orders")
    basis = monomial_basis(alphas[0], spec.r)
    rhs = np.column_stack([_rhs(basis, a) for a in alphas])
    l = len(basis)
    n = cloud.n
    k0 = min(math.ceil(spec.neighbor_factor * l), n - 1)
    if k0 < 1:
        raise InsufficientSupportError("cloud has no neighbors to build stencils from")

    ids_out: list = [None] * n
    w_out: list = [None] * n
    eps_out = np.empty(n)
    size_out = np.empty(n, dtype=np.intp)
    cond_out = np.empty(n)
    failed: dict[int, str] = {}
    # one batched tree pass covers the first attempt at every node
    prefetch = _k_nearest_arrays(index, k0)

    def run(p: int):
        try:
            ids, w, eps, k, cond = _build_node(
                cloud, index, spec, rhs, l, k0, p, prefetch
            )
        except (IllConditionedNodeError, DuplicateNodeError) as err:
            failed[p] = str(err)
            return
        ids_out[p] = ids
        w_out[p] = w
        eps_out[p] = eps
        size_out[p] = k
        cond_out[p] = cond

    nthreads = _resolve_threads(threads)
    if nthreads == 1 or n < 64:
        for p in range(n):
            run(p)
    else:
        with ThreadPoolExecutor(max_workers=nthreads) as pool:
            list(pool.map(run, range(n), chunksize=max(1, n // (8 * nthreads))))
    if failed:
        raise OperatorBuildError(failed)

    ops = []
    for j, alpha in enumerate(alphas):
        ids_j = [ids for ids in ids_out]
        w_j = [w[:, j] for w in w_out]
        sign = 1 if multi_index_order(alpha) % 2 == 1 else -1
        ops.append(
            StencilOperator(
                alpha=alpha,
                r=spec.r,
                dim=cloud.dim,
                n=n,
                neighbor_ids=ids_j,
                weights=w_j,
                eps=eps_out.copy(),
                support_size=size_out.copy(),
                condition=cond_out.copy(),
                _matrix=_stencil_matrix(n, sign, ids_j, w_j),
            )
        )
    return ops


def build_operator(
    cloud: PointCloud,
    index: SpatialIndex,
    spec: OperatorSpec,
    *,
    threads: int | None = None,
) -> StencilOperator:
    """Build the D^alpha stencil operator at every node of the cloud.

    Initial support size is k = ceil(neighbor_factor * l), capped at n - 1;
    supports flagged ill-conditioned are regrown by 1.5x up to
    max_growth_attempts times. If any node still fails, an
    OperatorBuildError listing the failing node ids is raised.

    Two builds over the same cloud produce bit-identical weights, whatever
    the thread count.
    """
    if len(spec.alpha) != cloud.dim:
        raise ValueError(
            f"multi-index {spec.alpha} does not match cloud dimension {cloud.dim}"
        )
    return _build_many(cloud, index, [spec.alpha], spec, threads)[0]


def gradient_operator(
    cloud: PointCloud,
    index: SpatialIndex,
    r: int = 2,
    *,
    eps_factor: float = 1.0,
    neighbor_factor: float = 2.0,
    max_growth_attempts: int = 5,
    cond_threshold: float = 1e12,
    threads: int | None = None,
) -> tuple[StencilOperator, ...]:
    """Build all d first-partial operators in one pass.

    The component operators share supports, moment matrices, and
    factorizations; only the right-hand sides differ. The result equals d
    independent build_operator calls.
    """
    d = cloud.dim
    alphas = [tuple(1 if j == i else 0 for j in range(d)) for i in range(d)]
    spec = OperatorSpec(
        alpha=alphas[0],
        r=r,
        eps_factor=eps_factor,
        neighbor_factor=neighbor_factor,
        max_growth_attempts=max_growth_attempts,
        cond_threshold=cond_threshold,
    )
    return tuple(_build_many(cloud, index, alphas, spec, threads))


def apply(op: StencilOperator, values: np.ndarray) -> np.ndarray:
    """Apply a stencil operator to nodal values.

    Evaluates sum_q w_q (f_q + sign f_p) at every node with a fixed
    summation order, so repeated applications are bit-identical.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.shape != (op.n,):
        raise ValueError(f"expected {op.n} nodal values, got shape {values.shape}")
    if not np.all(np.isfinite(values)):
        raise ValueError("field contains non-finite values")
    return op._matrix @ values


def verify_moments(op: StencilOperator, cloud: PointCloud) -> np.ndarray:
    """Recompute the discrete moments of every stencil from its final weights.

    Returns the per-node maximum absolute deviation of
    Z^beta = sum_q v_q^beta eps^{|alpha|} w_q from its target:
    (-1)^{|alpha|} alpha! at beta = alpha and 0 for the other basis
    monomials (the constant moment participates only for odd |alpha|, the
    only case where it is in the basis). Build acceptance requires the
    deviation to stay below 1e-8 everywhere.
    """
    if cloud.n != op.n or cloud.dim != op.dim:
        raise ValueError("operator was built for a different cloud")
    basis_arr = np.asarray(monomial_basis(op.alpha, op.r), dtype=np.float64)
    target = _rhs([tuple(int(c) for c in row) for row in basis_arr], op.alpha)
    out = np.empty(op.n)
    scale_pow = op.order
    for p in range(op.n):
        v = (cloud.coords[p] - cloud.coords[op.neighbor_ids[p]]) / op.eps[p]
        phi = op.weights[p] * op.eps[p] ** scale_pow
        Z = _basis_matrix(v, basis_arr).T @ phi
        out[p] = np.max(np.abs(Z - target))
    return out
