"""Dense LP/QP engine with primal solutions, duals, and Farkas certificates.

The linear-program solver is a two-phase tableau simplex with Bland's
anti-cycling rule, periodic refactorization from the basis, and certificate
extraction from the final basis:

* optimal: primal point, row duals, and a strong-duality residual;
* infeasible: a Farkas vector ``f`` over the original rows with ``f >= 0``
  on <=-rows, ``f @ A = 0`` on free-variable columns (``>= 0`` on columns of
  variables bounded below), and ``f @ b < 0``;
* unbounded: detected from an unblocked entering column.

Quadratic projections are solved by a primal active-set method whose
equality subproblems go through dense KKT solves; very large instances fall
back to a dual coordinate-ascent scheme with the same KKT stopping test.
Every routine is deterministic: identical inputs produce identical outputs.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from evikit import _kernels
from evikit.config import DEFAULT, ToleranceConfig
from evikit.errors import (
    DegenerateRowWarning,
    DimensionMismatch,
    Infeasible,
    NumericalFailure,
)

LE = "<="
EQ = "="

_REFACTOR_EVERY = 64


def _as_matrix(a, name):
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 2:
        raise DimensionMismatch(f"{name} must be a 2-d array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DimensionMismatch(f"{name} contains non-finite entries")
    return arr


def _as_vector(a, name):
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 1:
        raise DimensionMismatch(f"{name} must be a 1-d array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DimensionMismatch(f"{name} contains non-finite entries")
    return arr


@dataclass
class LinearProgram:
    """min/max ``objective @ x`` subject to row constraints and variable bounds.

    Rows are ``lhs[i] @ x (<=|=) rhs[i]`` with per-row sense; ``bounds`` is an
    optional list of ``(lo, hi)`` pairs (``None`` meaning free in that
    direction).  All-zero rows that are trivially satisfiable are dropped with
    a warning; trivially contradictory zero rows make the program infeasible
    with a unit Farkas certificate.
    """

    objective: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    senses: list = None
    bounds: list = None
    direction: str = "min"
    dropped_rows: list = field(default_factory=list, repr=False)
    _zero_row_infeasible: int = field(default=None, repr=False)

    def __post_init__(self):
        self.objective = _as_vector(self.objective, "objective")
        self.lhs = _as_matrix(self.lhs, "lhs")
        self.rhs = _as_vector(self.rhs, "rhs")
        m, n = self.lhs.shape
        if self.objective.shape[0] != n:
            raise DimensionMismatch(
                f"objective length {self.objective.shape[0]} != {n} columns")
        if self.rhs.shape[0] != m:
            raise DimensionMismatch(f"rhs length {self.rhs.shape[0]} != {m} rows")
        if self.senses is None:
            self.senses = [LE] * m
        self.senses = list(self.senses)
        if len(self.senses) != m:
            raise DimensionMismatch(f"senses length {len(self.senses)} != {m} rows")
        for s in self.senses:
            if s not in (LE, EQ):
                raise DimensionMismatch(f"unknown row sense {s!r}")
        if self.direction not in ("min", "max"):
            raise DimensionMismatch(f"direction must be min|max, got {self.direction!r}")
        if self.bounds is not None:
            if len(self.bounds) != n:
                raise DimensionMismatch(f"bounds length {len(self.bounds)} != {n} vars")
            self.bounds = [
                (float("-inf") if lo is None else float(lo),
                 float("inf") if hi is None else float(hi))
                for lo, hi in self.bounds
            ]
            for j, (lo, hi) in enumerate(self.bounds):
                if lo > hi:
                    raise DimensionMismatch(f"bounds[{j}] has lo > hi")
        self._drop_zero_rows()

    @property
    def n_rows(self):
        return self.lhs.shape[0]

    @property
    def n_vars(self):
        return self.lhs.shape[1]

    def _drop_zero_rows(self):
        m = self.lhs.shape[0]
        zero = ~np.any(self.lhs != 0.0, axis=1)
        if not zero.any():
            return
        keep = np.ones(m, dtype=bool)
        for i in np.nonzero(zero)[0]:
            consistent = (self.rhs[i] >= 0.0) if self.senses[i] == LE else (self.rhs[i] == 0.0)
            if consistent:
                keep[i] = False
                self.dropped_rows.append(int(i))
            elif self._zero_row_infeasible is None:
                self._zero_row_infeasible = int(i)
        if self.dropped_rows:
            warnings.warn(
                f"dropped {len(self.dropped_rows)} all-zero constraint row(s)",
                DegenerateRowWarning, stacklevel=4)
            self.lhs = self.lhs[keep]
            self.rhs = self.rhs[keep]
            self.senses = [s for s, k in zip(self.senses, keep) if k]
            self._kept_of_orig = np.nonzero(keep)[0]


@dataclass
class LpOutcome:
    """Solver verdict with certificates.

    ``dual`` covers the original rows; for minimization its objective is
    ``dual_value`` and strong duality holds within the gap tolerance.
    ``farkas`` is present exactly when ``status == "infeasible"``.
    """

    status: str
    primal: np.ndarray = None
    dual: np.ndarray = None
    farkas: np.ndarray = None
    value: float = None
    dual_value: float = None
    iterations: int = 0

    @property
    def optimal(self):
        return self.status == "optimal"


class _StandardForm:
    """Rewrite of a LinearProgram as min c@z, A z = b, z >= 0."""

    def __init__(self, lp: LinearProgram):
        m, n = lp.lhs.shape
        self.lp = lp
        self.sign = -1.0 if lp.direction == "max" else 1.0

        # variable transforms: x_j = sum(sign_k * z_col_k) + offset_j
        cols = []          # per var: list of (col_index, sign)
        offsets = np.zeros(n)
        extra_rows = []    # (col_index, ub) for two-sided bounds
        nz = 0
        bounds = lp.bounds or [(float("-inf"), float("inf"))] * n
        for j, (lo, hi) in enumerate(bounds):
            lo_f, hi_f = np.isfinite(lo), np.isfinite(hi)
            if not lo_f and not hi_f:
                cols.append([(nz, 1.0), (nz + 1, -1.0)])
                nz += 2
            elif lo_f and not hi_f:
                cols.append([(nz, 1.0)])
                offsets[j] = lo
                nz += 1
            elif not lo_f and hi_f:
                cols.append([(nz, -1.0)])
                offsets[j] = hi
                nz += 1
            else:
                cols.append([(nz, 1.0)])
                offsets[j] = lo
                extra_rows.append((nz, hi - lo))
                nz += 1
        self.var_cols = cols
        self.offsets = offsets

        n_rows = m + len(extra_rows)
        A = np.zeros((n_rows, nz))
        for j in range(n):
            for col, sgn in cols[j]:
                A[:m, col] += sgn * lp.lhs[:, j]
        b = np.concatenate([lp.rhs - lp.lhs @ offsets,
                            np.array([ub for _, ub in extra_rows])])
        for k, (col, _ub) in enumerate(extra_rows):
            A[m + k, col] = 1.0
        senses = list(lp.senses) + [LE] * len(extra_rows)

        c = np.zeros(nz)
        for j in range(n):
            for col, sgn in cols[j]:
                c[col] += self.sign * sgn * lp.objective[j]
        self.obj_offset = float(lp.objective @ offsets)

        # slacks for <= rows
        le_rows = [i for i, s in enumerate(senses) if s == LE]
        S = np.zeros((n_rows, len(le_rows)))
        for k, i in enumerate(le_rows):
            S[i, k] = 1.0
        A = np.hstack([A, S])
        c = np.concatenate([c, np.zeros(len(le_rows))])

        # nonnegative right-hand side
        flip = np.where(b < 0.0, -1.0, 1.0)
        A *= flip[:, None]
        b = b * flip

        self.A = A
        self.b = b
        self.c = c
        self.flip = flip
        self.m_orig = m
        self.n_struct = A.shape[1]

    def recover_x(self, z):
        x = self.offsets.copy()
        for j, parts in enumerate(self.var_cols):
            for col, sgn in parts:
                x[j] += sgn * z[col]
        return x


def _initial_tableau(A_ext, b, c_ext, basis):
    m = A_ext.shape[0]
    B = A_ext[:, basis]
    body = np.linalg.solve(B, np.column_stack([A_ext, b]))
    cB = c_ext[basis]
    red = c_ext - cB @ body[:, :-1]
    top = np.concatenate([red, [-(cB @ body[:, -1])]])
    return np.ascontiguousarray(np.vstack([top, body]))


def _run_simplex(A_ext, b, c_ext, tab, basis, allowed, cfg):
    total = 0
    while True:
        budget = min(_REFACTOR_EVERY, cfg.max_pivots - total)
        status, done = _kernels.lp_pivot_loop(tab, basis, allowed, cfg.pivot, budget)
        total += done
        if status != _kernels.BUDGET:
            return status, total, tab
        if total >= cfg.max_pivots:
            raise NumericalFailure(
                f"simplex exceeded the pivot cap ({cfg.max_pivots})")
        try:
            tab = _initial_tableau(A_ext, b, c_ext, basis)
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure("singular basis during refactorization") from exc


def _manual_pivot(tab, basis, r, j):
    piv = tab[r + 1, j]
    tab[r + 1] /= piv
    row_r = tab[r + 1].copy()
    factor = tab[:, j].copy()
    factor[r + 1] = 0.0
    tab -= np.outer(factor, row_r)
    tab[r + 1] = row_r
    tab[:, j] = 0.0
    tab[r + 1, j] = 1.0
    basis[r] = j


def solve_lp(lp: LinearProgram, cfg: ToleranceConfig = DEFAULT) -> LpOutcome:
    """Solve a linear program, classifying optimal / infeasible / unbounded.

    Certificates satisfy the LpOutcome contract: feasibility and duality-gap
    residuals within the configured tolerances for optimal outcomes, and a
    sound nonnegative row combination for infeasible ones.
    """
    if lp._zero_row_infeasible is not None:
        i = lp._zero_row_infeasible
        farkas = np.zeros(lp.n_rows)
        farkas[i] = 1.0 if (lp.senses[i] == LE or lp.rhs[i] < 0) else -1.0
        return LpOutcome(status="infeasible", farkas=farkas)

    sf = _StandardForm(lp)
    A, b, c = sf.A, sf.b, sf.c
    m, n_struct = A.shape

    if m == 0:
        # no rows survive: optimum sits at one-sided bounds or diverges
        bounds = lp.bounds or [(float("-inf"), float("inf"))] * lp.n_vars
        x = np.zeros(lp.n_vars)
        for j, cj in enumerate(lp.objective):
            lo, hi = bounds[j]
            push = sf.sign * cj
            if push > 0.0:
                if not np.isfinite(lo):
                    return LpOutcome(status="unbounded")
                x[j] = lo
            elif push < 0.0:
                if not np.isfinite(hi):
                    return LpOutcome(status="unbounded")
                x[j] = hi
            else:
                x[j] = lo if np.isfinite(lo) else (hi if np.isfinite(hi) else 0.0)
        val = float(lp.objective @ x)
        return LpOutcome(status="optimal", primal=x, dual=np.zeros(lp.n_rows),
                         value=val, dual_value=val, iterations=0)

    A_ext = np.hstack([A, np.eye(m)])
    art = np.arange(n_struct, n_struct + m)

    # phase 1: drive artificial infeasibility to zero
    c1 = np.concatenate([np.zeros(n_struct), np.ones(m)])
    basis = art.copy()
    tab = _initial_tableau(A_ext, b, c1, basis)
    allowed = np.ones(n_struct + m, dtype=np.uint8)
    status, it1, tab = _run_simplex(A_ext, b, c1, tab, basis, allowed, cfg)
    if status == _kernels.UNBOUNDED:
        raise NumericalFailure("phase-1 subproblem reported unbounded")
    phase1_val = -tab[0, -1]
    scale_b = 1.0 + float(np.abs(b).sum())
    if phase1_val > cfg.feas * scale_b:
        y = 1.0 - tab[0, n_struct:-1]
        mu = sf.flip[:sf.m_orig] * y[:sf.m_orig]
        farkas = _map_rows_back(lp, -mu)
        return LpOutcome(status="infeasible", farkas=farkas, iterations=it1)

    # pivot basic artificials out; rows that cannot leave are dependent
    keep = np.ones(m, dtype=bool)
    for i in range(m):
        if basis[i] < n_struct:
            continue
        row = tab[i + 1, :n_struct]
        cand = np.nonzero(np.abs(row) > 1e-7)[0]
        if cand.size:
            _manual_pivot(tab, basis, i, int(cand[0]))
        else:
            keep[i] = False
    if not keep.all():
        A_ext = A_ext[keep]
        b = b[keep]
        basis = basis[keep]

    # phase 2 on the true objective; artificial columns barred
    c2 = np.concatenate([c, np.zeros(m)])
    allowed = np.ones(n_struct + m, dtype=np.uint8)
    allowed[n_struct:] = 0
    tab = _initial_tableau(A_ext, b, c2, basis)
    status, it2, tab = _run_simplex(A_ext, b, c2, tab, basis, allowed, cfg)
    iterations = it1 + it2
    if status == _kernels.UNBOUNDED:
        return LpOutcome(status="unbounded", iterations=iterations)

    tab = _initial_tableau(A_ext, b, c2, basis)
    z = np.zeros(n_struct + m)
    z[basis] = tab[1:, -1]
    x = sf.recover_x(z[:n_struct])
    value = float(lp.objective @ x)

    # artificial columns of deleted rows vanish on the kept rows, so their
    # reduced costs read zero and the dual entries come out zero as needed
    y = -tab[0, n_struct:-1]
    duals_stored = sf.flip * y
    dual_orig = sf.sign * duals_stored[:sf.m_orig]
    dual_value = _dual_objective(lp, sf, duals_stored)
    dual_full = _map_rows_back(lp, dual_orig)
    return LpOutcome(status="optimal", primal=x, dual=dual_full,
                     value=value, dual_value=dual_value, iterations=iterations)


def _dual_objective(lp, sf, duals_stored):
    m = sf.m_orig
    shift_corr = lp.lhs @ sf.offsets
    total = float(duals_stored[:m] @ (lp.rhs - shift_corr))
    if len(duals_stored) > m:
        internal_b = sf.b * sf.flip
        total += float(duals_stored[m:] @ internal_b[m:])
    return sf.sign * total + float(lp.objective @ sf.offsets)


def _map_rows_back(lp, vec):
    """Re-inserts zeros for rows dropped at load so certificates align."""
    if not lp.dropped_rows:
        return vec
    full = np.zeros(lp.n_rows + len(lp.dropped_rows))
    full[lp._kept_of_orig] = vec
    return full


def feasible_point(A, b, senses=None, cfg: ToleranceConfig = DEFAULT):
    """A feasible point of ``{x : A x (<=|=) b}`` or an Infeasible error with certificate."""
    A = _as_matrix(A, "A")
    lp = LinearProgram(objective=np.zeros(A.shape[1]), lhs=A, rhs=b, senses=senses)
    out = solve_lp(lp, cfg)
    if out.status == "infeasible":
        raise Infeasible("constraint system is empty", farkas=out.farkas)
    if not out.optimal:
        raise NumericalFailure(f"feasibility solve ended with status {out.status}")
    return out.primal


def project_polytope(point, A, b, senses=None, cfg: ToleranceConfig = DEFAULT):
    """Euclidean projection of ``point`` onto ``{x : A x (<=|=) b}``.

    Returns the point itself when already feasible.  The projection is
    certified by a KKT residual at most ``cfg.proj`` (scale-relative);
    failure to certify raises NumericalFailure, an empty constraint set
    raises Infeasible with a Farkas certificate.
    """
    point = _as_vector(point, "point")
    A = _as_matrix(A, "A")
    b = _as_vector(b, "b")
    if senses is None:
        senses = [LE] * A.shape[0]
    if A.shape[1] != point.shape[0]:
        raise DimensionMismatch("point dimension does not match constraint columns")

    eq_mask = np.array([s == EQ for s in senses])
    resid_le = (A[~eq_mask] @ point - b[~eq_mask]) if (~eq_mask).any() else np.zeros(0)
    resid_eq = (np.abs(A[eq_mask] @ point - b[eq_mask])) if eq_mask.any() else np.zeros(0)
    if (resid_le.size == 0 or resid_le.max() <= 0.0) and \
       (resid_eq.size == 0 or resid_eq.max() <= 0.0):
        return point.copy()

    x0 = feasible_point(A, b, senses, cfg)
    if A.shape[0] + A.shape[1] > 600:
        x, kkt = _dual_ascent_project(point, A[~eq_mask], b[~eq_mask],
                                      A[eq_mask], b[eq_mask], cfg)
    else:
        x, _, kkt = qp_active_set(
            weights=np.ones(point.shape[0]), target=point,
            A_eq=A[eq_mask], b_eq=b[eq_mask],
            A_in=A[~eq_mask], b_in=b[~eq_mask],
            x0=x0, cfg=cfg)
    scale = 1.0 + float(np.linalg.norm(point))
    if kkt > cfg.proj * scale:
        raise NumericalFailure(f"projection KKT residual {kkt:.3e} above tolerance")
    return x


def qp_active_set(weights, target, A_eq, b_eq, A_in, b_in, x0,
                  cfg: ToleranceConfig = DEFAULT, working=None, eq_basis=None,
                  cache=None):
    """min 0.5 * ||diag(w)^(1/2) (x - target)||^2 over  A_eq x = b_eq, A_in x <= b_in.

    Null-space primal active-set method starting from the feasible ``x0``.
    For each working set the constraint matrix is factored once (and cached
    in ``cache`` across warm-started calls); steps are minimum-norm in the
    null space, so zero-weight coordinates stay anchored instead of
    wandering.  Returns ``(x, multipliers, kkt_residual)`` with inequality
    multipliers nonnegative on the final working set and zero elsewhere.
    """
    n = target.shape[0]
    w = np.asarray(weights, dtype=float)
    A_eq = np.asarray(A_eq, dtype=float).reshape(-1, n)
    A_in = np.asarray(A_in, dtype=float).reshape(-1, n)
    b_eq = np.asarray(b_eq, dtype=float).reshape(-1)
    b_in = np.asarray(b_in, dtype=float).reshape(-1)
    m_in = A_in.shape[0]
    n_eq = A_eq.shape[0]
    x = np.asarray(x0, dtype=float).copy()

    scale = 1.0 + float(np.abs(b_in).max(initial=0.0)) + float(np.abs(b_eq).max(initial=0.0))
    act_tol = cfg.feas * scale * 10.0
    if working is None:
        working = [int(i) for i in np.nonzero(A_in @ x - b_in >= -act_tol)[0]]
    else:
        working = [int(i) for i in working if A_in[i] @ x - b_in[i] >= -act_tol]
    if eq_basis is None:
        eq_basis = _orthobasis(A_eq)
    W = _prune_working(eq_basis, A_in, list(dict.fromkeys(working)))
    if cache is None:
        cache = {}
    sw = np.sqrt(np.maximum(w, 0.0))

    cap = 100 + 12 * (n + m_in + n_eq)
    for _ in range(cap):
        key = tuple(sorted(W))
        fac = cache.get(key)
        if fac is None:
            C = np.vstack([A_eq, A_in[list(key)]]) if (n_eq or key) else np.zeros((0, n))
            U, s, Vt = np.linalg.svd(C, full_matrices=True) if C.size else (
                np.zeros((0, 0)), np.zeros(0), np.eye(n))
            rank = int((s > 1e-11 * (s[0] if s.size else 1.0)).sum())
            fac = (U, s, Vt, rank)
            if len(cache) > 512:
                cache.clear()
            cache[key] = fac
        U, s, Vt, rank = fac
        d = np.concatenate([b_eq, b_in[list(key)]])

        # keep the iterate exactly on the working constraints
        if key:
            C = np.vstack([A_eq, A_in[list(key)]])
            r = C @ x - d
            if np.abs(r).max(initial=0.0) > 1e-12 * scale:
                x = x - Vt[:rank].T @ ((U.T[:rank] @ r) / s[:rank])

        N = Vt[rank:].T
        if N.shape[1]:
            rhs = sw * (target - x)
            y, *_ = np.linalg.lstsq(sw[:, None] * N, rhs, rcond=None)
            p = N @ y
        else:
            p = np.zeros(n)

        if np.abs(p).max(initial=0.0) <= 1e-11 * (1.0 + np.abs(x).max(initial=0.0)):
            g = w * (x - target)
            mu = -U[:, :rank] @ ((Vt[:rank] @ g) / s[:rank]) if rank else np.zeros(0)
            nu = mu[n_eq:]
            if nu.size == 0 or nu.min() >= -cfg.proj:
                full = np.zeros(m_in)
                for idx, i in enumerate(key):
                    full[i] = max(nu[idx], 0.0)
                kkt = _kkt_residual(w, target, x, A_eq, b_eq, A_in, b_in, full,
                                    mu[:n_eq])
                return x, full, kkt
            W = [i for i in W if i != key[int(np.argmin(nu))]]
            continue

        mask = np.ones(m_in, dtype=bool)
        if W:
            mask[W] = False
        rows = np.nonzero(mask)[0]
        ap = A_in[rows] @ p if rows.size else np.zeros(0)
        resid = b_in[rows] - A_in[rows] @ x if rows.size else np.zeros(0)
        movable = ap > 1e-13 * (1.0 + np.abs(p).max())
        alpha = 1.0
        block = -1
        if movable.any():
            steps = resid[movable] / ap[movable]
            j = int(np.argmin(steps))
            if steps[j] < alpha - 1e-15:
                alpha = max(float(steps[j]), 0.0)
                block = int(rows[movable][j])
        x = x + alpha * p
        if block >= 0:
            W.append(block)
    raise NumericalFailure("active-set projection did not converge")


def _orthobasis(rows, tol=1e-9):
    basis = []
    for row in np.asarray(rows, dtype=float):
        r = row.copy()
        for q in basis:
            r -= (q @ r) * q
        nr = np.linalg.norm(r)
        if nr > tol * (1.0 + np.linalg.norm(row)):
            basis.append(r / nr)
    return np.array(basis).reshape(len(basis), np.asarray(rows).shape[-1] if len(rows) else 0)


def _prune_working(eq_basis, A_in, W, tol=1e-9):
    """Subset of W whose rows stay independent given the equality rowspace.

    An over-determined working set makes the equality subproblem inconsistent
    and its least-squares 'solution' meaningless, which is how active-set
    cycling starts; pruning at entry keeps every subproblem well-posed.
    """
    extra = []
    kept = []
    for i in W:
        row = A_in[i]
        r = row - eq_basis.T @ (eq_basis @ row) if eq_basis.size else row.copy()
        for q in extra:
            r -= (q @ r) * q
        nr = np.linalg.norm(r)
        if nr > tol * (1.0 + np.linalg.norm(row)):
            extra.append(r / nr)
            kept.append(int(i))
    return kept


def _kkt_residual(w, target, x, A_eq, b_eq, A_in, b_in, nu, mu):
    stat = w * (x - target)
    if A_eq.shape[0]:
        stat = stat + A_eq.T @ mu
    if A_in.shape[0]:
        stat = stat + A_in.T @ nu
    r = float(np.abs(stat).max(initial=0.0))
    if A_eq.shape[0]:
        r = max(r, float(np.abs(A_eq @ x - b_eq).max(initial=0.0)))
    if A_in.shape[0]:
        viol = A_in @ x - b_in
        r = max(r, float(viol.max(initial=0.0)))
        r = max(r, float(np.abs(nu * viol).max(initial=0.0)))
    return r


def _dual_ascent_project(point, A_in, b_in, A_eq, b_eq, cfg, sweeps=20000):
    """Cyclic dual coordinate ascent (Hildreth) for large projection instances."""
    rows = np.vstack([A_in, A_eq, -A_eq]) if A_eq.shape[0] else A_in
    rhs = np.concatenate([b_in, b_eq, -b_eq]) if A_eq.shape[0] else b_in
    norms = np.einsum("ij,ij->i", rows, rows)
    lam = np.zeros(rows.shape[0])
    x = point.copy()
    scale = 1.0 + float(np.linalg.norm(point))
    for sweep in range(sweeps):
        delta = 0.0
        for i in range(rows.shape[0]):
            if norms[i] <= 0.0:
                continue
            g = (rows[i] @ x - rhs[i]) / norms[i]
            new = max(lam[i] + g, 0.0)
            step = new - lam[i]
            if step != 0.0:
                lam[i] = new
                x -= step * rows[i]
                delta = max(delta, abs(step) * np.sqrt(norms[i]))
        if delta <= cfg.proj * scale * 1e-2:
            break
    nu = lam[:A_in.shape[0]]
    mu_eq = (lam[A_in.shape[0]:A_in.shape[0] + A_eq.shape[0]]
             - lam[A_in.shape[0] + A_eq.shape[0]:]) if A_eq.shape[0] else np.zeros(0)
    kkt = _kkt_residual(np.ones(point.shape[0]), point, x, A_eq, b_eq, A_in, b_in, nu, mu_eq)
    return x, kkt
