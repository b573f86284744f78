"""Curvature prescription by convex-energy Newton descent with Delaunay surgery.

The conformal factor ``u`` acts on lambda-lengths of a Delaunay triangulation
of the input; after scaling, Ptolemy flips restore the Delaunay condition and
the lambda-lengths are read back as Euclidean lengths.  That composite is the
curvature map ``F(u)``.  It is C^1, its Jacobian on each Delaunay cell is the
cotangent Laplacian, and it is the gradient of a convex energy, so Newton's
method with a residual line search (and the explicit-Euler Yamabe flow)
converges to the unique metric with the prescribed curvature.
"""
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .delaunay import (
    DELAUNAY_TOL,
    FlipLog,
    _flip_to_delaunay,
    cocircular_edges,
    edge_delaunay_values,
    make_delaunay,
)
from .exceptions import (
    LineSearchStalled,
    MaxItersExceeded,
    MetricDegenerate,
    NotDelaunay,
    StepTooLarge,
)
from .penner import DecoratedMetric, _ptolemy_diagonal, replay_flips, shear_vector
from .surface import check_lengths, curvature_field, halfedge_cotangents, validate_metric
from .validation import check_conformal_factor, check_metric_input, resolve_target

__all__ = [
    "SolverConfig",
    "SolveReport",
    "curvature_map",
    "curvature_jacobian",
    "fd_jacobian",
    "jacobian_symmetry_check",
    "newton_uniformize",
    "yamabe_flow",
    "conformal_equivalent",
    "match_metrics",
    "normalize_scale",
    "shears_on_common_triangulation",
    "delaunay_cell_inequalities",
    "lengths_from_delta",
]


@dataclass
class SolverConfig:
    max_newton_iters: int = 100
    residual_tol: float = 1e-10
    armijo_c: float = 1e-4
    shrink: float = 0.5
    min_step: float = 1e-12
    max_step: float = 3.0  # cap on max |du| per Newton step
    flip_budget: int = None  # per step; None derives it from the length spread
    flow_step: float = 0.1
    max_flow_iters: int = 20000
    record_trajectory: bool = False

    def __post_init__(self):
        for name in ("max_newton_iters", "residual_tol", "armijo_c", "shrink", "min_step",
                     "max_step", "flow_step", "max_flow_iters"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("residual_tol", "armijo_c", "shrink"):
            if not getattr(self, name) < 1:
                raise ValueError(f"{name} must be < 1")


@dataclass
class SolveReport:
    u: np.ndarray
    surface: object
    lengths: np.ndarray
    curvature: np.ndarray
    target: np.ndarray
    base_surface: object
    base_lengths: np.ndarray
    method: str = "newton"
    reason: str = "converged"
    iterations: int = 0
    residuals: list = field(default_factory=list)
    residuals_l2: list = field(default_factory=list)
    step_sizes: list = field(default_factory=list)
    flips_per_iter: list = field(default_factory=list)
    flip_log: FlipLog = field(default_factory=FlipLog)
    input_flip_log: FlipLog = field(default_factory=FlipLog)
    cocircular: list = field(default_factory=list)
    trajectory: list = field(default_factory=list)
    elapsed: float = 0.0

    @property
    def converged(self):
        return self.reason == "converged"

    @property
    def residual(self):
        return self.residuals[-1]

    @property
    def total_flips(self):
        return self.flip_log.count


# --- the curvature map ---------------------------------------------------------

def _require_delaunay(surface, lengths):
    q = edge_delaunay_values(surface, lengths)
    bad = np.flatnonzero(q < -DELAUNAY_TOL)
    if len(bad):
        raise NotDelaunay(f"edge {int(bad[0])} is not Delaunay; run make_delaunay first")


def _scale_and_repair(surface, lam, du, log, step=0, budget=None):
    """Scale lambda-lengths by du, Ptolemy-flip to Delaunay, return new state."""
    M = surface.copy()
    ends = M.edge_endpoints()
    x = lam * np.exp(du[ends[:, 0]] + du[ends[:, 1]])
    if not np.all(np.isfinite(x)) or np.any(x <= 0):
        raise MetricDegenerate("conformal factor overflowed the edge lengths")
    _flip_to_delaunay(M, x, _ptolemy_diagonal, log, step=step, budget=budget)
    bad = validate_metric(M, x)
    if bad:
        raise MetricDegenerate(f"face {bad[0]} is degenerate after Delaunay repair")
    return M, x


def curvature_map(surface, lengths, u):
    """Curvature of the discrete conformal metric with factor ``u``.

    ``(surface, lengths)`` must be Delaunay.  Returns (K, surface', lengths')
    where the primed pair is the Delaunay triangulation of the new metric.
    """
    lengths = check_lengths(surface, lengths)
    _require_delaunay(surface, lengths)
    u = check_conformal_factor(surface, u, center=False)
    M, x = _scale_and_repair(surface, lengths, u, FlipLog())
    return curvature_field(M, x), M, x


def curvature_jacobian(surface, lengths):
    """Cotangent Laplacian dK/du as a sparse symmetric matrix.

    Off-diagonal (i, j): -(cot a + cot a') summed over edges ij; the diagonal
    holds the negated row sums.  Loops contribute nothing.  (The weight is the
    full cotangent sum because lengths scale by exp(u + u'), not exp((u + u')/2).)
    """
    lengths = check_lengths(surface, lengths)
    _require_delaunay(surface, lengths)
    return _cot_laplacian(surface, lengths)


def _cot_laplacian(surface, lengths):
    w = halfedge_cotangents(surface, lengths)
    i = surface.origin
    j = surface.origin[np.arange(surface.n_halfedges) ^ 1]
    # halfedge ij with opposite angle gamma adds cot(gamma) (e_i - e_j)(e_i - e_j)^T;
    # its twin covers the other triangle
    rows = np.concatenate([i, j, i, j])
    cols = np.concatenate([i, j, j, i])
    vals = np.concatenate([w, w, -w, -w])
    n = surface.n_vertices
    return sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()


def fd_jacobian(surface, lengths, u=None, step=1e-6):
    """Dense central-difference Jacobian of :func:`curvature_map` at ``u``."""
    n = surface.n_vertices
    u = np.zeros(n) if u is None else np.asarray(u, dtype=float)
    J = np.empty((n, n))
    for j in range(n):
        up, dn = u.copy(), u.copy()
        up[j] += step
        dn[j] -= step
        J[:, j] = (curvature_map(surface, lengths, up)[0] - curvature_map(surface, lengths, dn)[0]) / (2 * step)
    return J


def jacobian_symmetry_check(surface, lengths, u=None, step=1e-6):
    """max |J_ij - J_ji| for the finite-difference Jacobian of the curvature map."""
    J = fd_jacobian(surface, lengths, u, step)
    return float(np.max(np.abs(J - J.T)))


# --- solvers ----------------------------------------------------------------------

class _State:
    __slots__ = ("surface", "lam", "u", "K", "r", "f")

    def __init__(self, surface, lam, u, K, K_star):
        self.surface, self.lam, self.u, self.K = surface, lam, u, K
        self.r = K - K_star
        self.f = 0.5 * float(self.r @ self.r)

    @property
    def res_max(self):
        return float(np.max(np.abs(self.r)))

    @property
    def res_l2(self):
        return float(np.sqrt(2 * self.f))


def _prepare(surface, lengths, K_star, u0, method, cfg):
    surface, lengths = check_metric_input((surface, lengths))
    K_star = resolve_target(surface, K_star)
    base_M, base_x, input_log = make_delaunay(surface, lengths)
    u = np.zeros(surface.n_vertices) if u0 is None else check_conformal_factor(surface, u0)
    log = FlipLog()
    if np.any(u != 0):
        M, x = _scale_and_repair(base_M, base_x, u, log, step=0, budget=cfg.flip_budget)
    else:
        M, x = base_M.copy(), base_x.copy()
    state = _State(M, x, u, curvature_field(M, x), K_star)
    report = SolveReport(u=u.copy(), surface=M, lengths=x, curvature=state.K, target=K_star,
                         base_surface=base_M, base_lengths=base_x, method=method,
                         input_flip_log=input_log, flip_log=log)
    report.residuals.append(state.res_max)
    report.residuals_l2.append(state.res_l2)
    report.flips_per_iter.append(log.count)
    return state, report


def _trial(state, du, K_star, step, budget):
    log = FlipLog()
    M, x = _scale_and_repair(state.surface, state.lam, du, log, step=step, budget=budget)
    return _State(M, x, state.u + du, curvature_field(M, x), K_star), log


def _accept(report, state, log, t, cfg):
    report.flip_log.extend(log)
    report.flips_per_iter.append(log.count)
    report.residuals.append(state.res_max)
    report.residuals_l2.append(state.res_l2)
    report.step_sizes.append(t)
    if cfg.record_trajectory:
        report.trajectory.append(state.u.copy())


def _finish(report, state, reason, t0):
    report.u = state.u - state.u.mean()
    # re-centering u rescales every length by the same factor
    shift = state.u.mean()
    report.lengths = state.lam * np.exp(-2 * shift)
    report.surface = state.surface
    report.curvature = state.K
    report.reason = reason
    report.cocircular = cocircular_edges(state.surface, report.lengths)
    report.elapsed = time.perf_counter() - t0
    return report


def _newton_direction(state, cfg):
    H = _cot_laplacian(state.surface, state.lam)
    # pin vertex 0 (kernel is the constants), then centre
    n = len(state.u)
    delta = np.zeros(n)
    if n > 1:
        delta[1:] = spla.spsolve(H[1:, 1:].tocsc(), -state.r[1:])
    delta -= delta.mean()
    return delta, H


def newton_uniformize(surface, lengths, K_star="uniform", cfg=None, u0=None):
    """Find the discrete conformal metric with curvature ``K_star``.

    Returns a SolveReport whose ``u`` is centred (sum zero) and whose
    ``lengths`` live on ``surface`` (a Delaunay triangulation).  Raises
    MaxItersExceeded or LineSearchStalled, both carrying the best report.
    """
    cfg = cfg or SolverConfig()
    t0 = time.perf_counter()
    state, report = _prepare(surface, lengths, K_star, u0, "newton", cfg)
    K_star = report.target
    for it in range(1, cfg.max_newton_iters + 1):
        if state.res_max <= cfg.residual_tol:
            break
        delta, H = _newton_direction(state, cfg)
        slope = -2 * state.f
        accepted = None
        for direction, d_slope in ((delta, slope), (-state.r, -float(state.r @ (H @ state.r)))):
            big = np.max(np.abs(direction))
            t = min(1.0, cfg.max_step / big) if big > 0 else 1.0
            while t >= cfg.min_step:
                trial, log = _trial(state, t * direction, K_star, it, cfg.flip_budget)
                if trial.f <= state.f + cfg.armijo_c * t * d_slope and trial.f < state.f:
                    accepted = (trial, log, t)
                    break
                t *= cfg.shrink
            if accepted:
                break
        if accepted is None:
            _finish(report, state, "line_search_stalled", t0)
            raise LineSearchStalled(
                f"no descent step at iteration {it} (residual {state.res_max:.3e})", report)
        state, log, t = accepted
        report.iterations = it
        _accept(report, state, log, t, cfg)
    else:
        if state.res_max > cfg.residual_tol:
            _finish(report, state, "max_iters", t0)
            raise MaxItersExceeded(
                f"residual {state.res_max:.3e} after {cfg.max_newton_iters} iterations", report)
    return _finish(report, state, "converged", t0)


def yamabe_flow(surface, lengths, K_star="uniform", cfg=None, u0=None):
    """Explicit-Euler discrete Yamabe flow with surgery: u <- u + h (K* - K).

    The step h starts at ``cfg.flow_step`` and is halved whenever a step would
    increase ||K - K*||; if it falls below ``cfg.min_step`` the flow raises
    StepTooLarge.
    """
    cfg = cfg or SolverConfig()
    t0 = time.perf_counter()
    state, report = _prepare(surface, lengths, K_star, u0, "flow", cfg)
    K_star = report.target
    if cfg.record_trajectory:
        report.trajectory.append(state.u.copy())
    h = cfg.flow_step
    for it in range(1, cfg.max_flow_iters + 1):
        if state.res_max <= cfg.residual_tol:
            break
        direction = -state.r
        direction -= direction.mean()
        while True:
            trial, log = _trial(state, h * direction, K_star, it, cfg.flip_budget)
            if trial.f <= state.f:
                break
            h *= 0.5
            if h < cfg.min_step:
                _finish(report, state, "step_too_large", t0)
                raise StepTooLarge(
                    f"flow direction K* - K does not decrease the residual at iteration {it} "
                    "even for tiny steps", report)
        state = trial
        report.iterations = it
        _accept(report, state, log, h, cfg)
    else:
        if state.res_max > cfg.residual_tol:
            _finish(report, state, "max_iters", t0)
            raise MaxItersExceeded(
                f"flow residual {state.res_max:.3e} after {cfg.max_flow_iters} steps", report)
    return _finish(report, state, "converged", t0)


# --- conformal class tools ------------------------------------------------------

def normalize_scale(lengths):
    """Rescale so the geometric mean of edge lengths is 1."""
    lengths = np.asarray(lengths, dtype=float)
    return lengths / np.exp(np.mean(np.log(lengths)))


def _halfedge_map(M1, M2, h1, h2):
    """Extend h1 -> h2 to a label-preserving isomorphism, or return None."""
    phi = np.full(M1.n_halfedges, -1, dtype=np.int64)
    used = np.zeros(M2.n_halfedges, dtype=bool)
    stack = [(h1, h2)]
    while stack:
        a, b = stack.pop()
        if phi[a] >= 0:
            if phi[a] != b:
                return None
            continue
        if used[b] or M1.origin[a] != M2.origin[b]:
            return None
        phi[a] = b
        used[b] = True
        stack.append((int(M1.next[a]), int(M2.next[b])))
        stack.append((a ^ 1, b ^ 1))
    return phi


def match_metrics(M1, l1, M2, l2):
    """Smallest max relative edge-length difference over label-preserving
    isomorphisms between two triangulated metrics; ``inf`` if none exists."""
    if (M1.n_vertices, M1.n_edges, M1.n_faces) != (M2.n_vertices, M2.n_edges, M2.n_faces):
        return np.inf
    a, b = int(M1.origin[0]), int(M1.origin[1])
    best = np.inf
    for h2 in np.flatnonzero((M2.origin == a) & (M2.origin[np.arange(M2.n_halfedges) ^ 1] == b)):
        phi = _halfedge_map(M1, M2, 0, int(h2))
        if phi is None:
            continue
        l2_on_1 = l2[phi[0::2] >> 1]
        best = min(best, float(np.max(np.abs(l1 - l2_on_1) / l1)))
    return best


def conformal_equivalent(M1, d1, M2, d2, tol=1e-6, cfg=None):
    """Decide discrete conformal equivalence of two PL metrics.

    Both are uniformized to constant curvature 2*pi*chi/|V|, scale-normalized
    and compared edge by edge after matching their Delaunay triangulations.
    Returns (equivalent, witness).
    """
    if M1.n_vertices != M2.n_vertices or M1.euler_characteristic != M2.euler_characteristic:
        return False, {"reason": "different marked surfaces", "max_rel_diff": np.inf}
    r1 = newton_uniformize(M1, d1, "uniform", cfg)
    r2 = newton_uniformize(M2, d2, "uniform", cfg)
    n1, n2 = normalize_scale(r1.lengths), normalize_scale(r2.lengths)
    diff = match_metrics(r1.surface, n1, r2.surface, n2)
    witness = {
        "max_rel_diff": diff,
        "lengths_a": n1,
        "lengths_b": n2,
        "surface_a": r1.surface,
        "surface_b": r2.surface,
        "cocircular_a": r1.cocircular,
        "cocircular_b": r2.cocircular,
    }
    return bool(diff <= tol), witness


def shears_on_common_triangulation(report):
    """Shear vectors of the (Delaunay-repaired) input and of the solver output.

    The input's lambda-lengths are carried along the solver's Ptolemy flips,
    so both vectors live on the output triangulation.
    """
    base = DecoratedMetric(report.base_surface, report.base_lengths)
    moved = replay_flips(base, report.flip_log.edges())
    out = DecoratedMetric(report.surface, report.lengths)
    return shear_vector(moved), shear_vector(out)


# --- linearised Delaunay cell ---------------------------------------------------

def lengths_from_delta(surface, b, delta):
    """x(vv') = b(vv') / sqrt(delta(v) delta(v'))."""
    ends = surface.edge_endpoints()
    delta = np.asarray(delta, dtype=float)
    return np.asarray(b, dtype=float) / np.sqrt(delta[ends[:, 0]] * delta[ends[:, 1]])


def delaunay_cell_coefficients(surface, b, e):
    """Coefficients and vertices of  c3 d3 + c4 d4 <= c1 d1 + c2 d2  at edge ``e``.

    Returns ((c1, v1), (c2, v2), (c3, v3), (c4, v4)).
    """
    h, hn, hp, t, tn, tp = surface.quad_halfedges(e)
    v1, v2 = surface.origin[h], surface.origin[t]
    v3, v4 = surface.origin[hp], surface.origin[tp]
    b12 = b[e]
    b23, b31 = b[hn >> 1], b[hp >> 1]
    b14, b42 = b[tn >> 1], b[tp >> 1]
    c1 = b23 / b31 + b42 / b14
    c2 = b31 / b23 + b14 / b42
    c3 = b12 ** 2 / (b31 * b23)
    c4 = b12 ** 2 / (b14 * b42)
    return (c1, v1), (c2, v2), (c3, v3), (c4, v4)


def delaunay_cell_inequalities(surface, b, delta, tol=DELAUNAY_TOL):
    """Edges where the inequality linear in delta = lambda^-2 fails.

    The gap c1 d1 + c2 d2 - c3 d3 - c4 d4 equals 2 sqrt(d1 d2) times the
    Delaunay quantity of x(delta), so the tolerance is scaled to match.
    """
    b = check_lengths(surface, b)
    delta = np.asarray(delta, dtype=float)
    if np.any(delta <= 0):
        raise ValueError("delta must be positive")
    bad = []
    for e in range(surface.n_edges):
        (c1, v1), (c2, v2), (c3, v3), (c4, v4) = delaunay_cell_coefficients(surface, b, e)
        gap = c1 * delta[v1] + c2 * delta[v2] - c3 * delta[v3] - c4 * delta[v4]
        if gap < -tol * 2 * np.sqrt(delta[v1] * delta[v2]):
            bad.append(e)
    return bad
