"""Affine endomorphisms of a polytope.

For ``X = {x : A x <= b}`` the affine self-maps ``phi(x) = K x + c`` form a
polytope in ``(K, c)``-space: phi maps X into X exactly when some
nonnegative matrix V satisfies ``V A = A K`` and ``V b <= b - A c``.  This
module exposes that lifted polytope: membership with certificate or
separating functional, fixed-point extraction, the combined
semi-separation oracle, and Euclidean projection (V rides along as a free
witness with zero weight in the distance).
"""

from dataclasses import dataclass

import numpy as np

from evikit.config import DEFAULT, ToleranceConfig
from evikit.errors import DimensionMismatch, NoFixedPointFound
from evikit.linsolve import LinearProgram, qp_active_set, solve_lp
from evikit.polytope import Polytope


@dataclass
class AffineEndo:
    """Candidate deviation ``x -> linear @ x + offset``."""

    linear: np.ndarray
    offset: np.ndarray

    def __post_init__(self):
        self.linear = np.asarray(self.linear, dtype=float)
        self.offset = np.asarray(self.offset, dtype=float)
        d = self.offset.shape[0]
        if self.linear.shape != (d, d):
            raise DimensionMismatch(
                f"linear part {self.linear.shape} does not match offset length {d}")
        if not (np.all(np.isfinite(self.linear)) and np.all(np.isfinite(self.offset))):
            raise DimensionMismatch("endomorphism data contains non-finite entries")

    @property
    def dim(self):
        return self.offset.shape[0]

    def apply(self, x):
        return self.linear @ np.asarray(x, dtype=float) + self.offset

    def pack(self):
        return np.concatenate([self.linear.reshape(-1), self.offset])

    @classmethod
    def unpack(cls, y, d):
        y = np.asarray(y, dtype=float)
        return cls(linear=y[: d * d].reshape(d, d), offset=y[d * d: d * d + d])

    @classmethod
    def identity(cls, d):
        return cls(linear=np.eye(d), offset=np.zeros(d))

    @classmethod
    def constant(cls, point):
        point = np.asarray(point, dtype=float)
        return cls(linear=np.zeros((len(point), len(point))), offset=point)

    def to_dict(self):
        return {"linear": self.linear.tolist(), "offset": self.offset.tolist()}


@dataclass
class EndoWitness:
    """Nonnegative row-combination matrix certifying membership."""

    multipliers: np.ndarray

    def to_dict(self):
        return {"multipliers": np.asarray(self.multipliers).tolist()}

    def residuals(self, X: Polytope, endo: AffineEndo):
        V = self.multipliers
        r_eq = float(np.abs(V @ X.A - X.A @ endo.linear).max(initial=0.0))
        r_in = float((V @ X.b - (X.b - X.A @ endo.offset)).max(initial=0.0))
        r_nn = float((-V).max(initial=0.0))
        return r_eq, r_in, r_nn

    def valid(self, X, endo, cfg: ToleranceConfig = DEFAULT):
        scale = 1.0 + float(np.abs(X.b).max(initial=0.0))
        r_eq, r_in, r_nn = self.residuals(X, endo)
        return max(r_eq, r_in, r_nn) <= cfg.feas * scale * 10.0


@dataclass
class EndoSeparator:
    """Unit-norm functional with ``value(member) <= offset < value(query)``."""

    normal: np.ndarray
    offset: float

    def value(self, endo: AffineEndo):
        return float(self.normal @ endo.pack())


@dataclass
class EndoMembership:
    member: bool
    witness: EndoWitness = None
    separator: EndoSeparator = None


@dataclass
class FixedPointResponse:
    point: np.ndarray
    residual: float


@dataclass
class SeparationResponse:
    separator: EndoSeparator


class EndoBlocks:
    """Constraint blocks of the lifted endomorphism polytope over z = (k, c, v).

    Column layout: k = vec(K) row-major (d*d), then c (d), then v = vec(V)
    row-major (m*m).  Rows: ``V A - A K = 0`` (m*d equalities) and
    ``A c + V b <= b`` (m inequalities); ``v >= 0`` is kept as bounds.
    """

    def __init__(self, X: Polytope):
        A, b = X.A, X.b
        m, d = A.shape
        self.m, self.d = m, d
        self.nk, self.nc, self.nv = d * d, d, m * m
        self.nz = self.nk + self.nc + self.nv

        eq = np.zeros((m * d, self.nz))
        for i in range(m):
            for j in range(d):
                r = i * d + j
                eq[r, self.v_cols(i)] = A[:, j]
                eq[r, [self.k_col(l, j) for l in range(d)]] = -A[i, :]
        # dependent rows of A induce dependent (and identically consistent)
        # rows here; prune once so projection subproblems stay nonsingular
        keep, basis = [], []
        for r in range(m * d):
            row = eq[r].copy()
            for q in basis:
                row -= (q @ row) * q
            nr = np.linalg.norm(row)
            if nr > 1e-9 * (1.0 + np.linalg.norm(eq[r])):
                basis.append(row / nr)
                keep.append(r)
        self.eq_lhs = eq[keep]
        self.eq_rhs = np.zeros(len(keep))
        self.eq_basis = np.array(basis).reshape(len(keep), self.nz)
        self.qp_cache = {}

        ineq = np.zeros((m, self.nz))
        for i in range(m):
            ineq[i, self.v_cols(i)] = b
            ineq[i, self.nk: self.nk + d] = A[i]
        self.ineq_lhs = ineq
        self.ineq_rhs = b.copy()

    def k_col(self, row, col):
        return row * self.d + col

    def v_cols(self, i):
        base = self.nk + self.nc + i * self.m
        return list(range(base, base + self.m))

    def pack(self, endo: AffineEndo, V=None):
        v = np.zeros(self.nv) if V is None else np.asarray(V, dtype=float).reshape(-1)
        return np.concatenate([endo.pack(), v])

    def split(self, z):
        endo = AffineEndo.unpack(z[: self.nk + self.nc], self.d)
        V = z[self.nk + self.nc:].reshape(self.m, self.m)
        return endo, V

    def bounds(self):
        return [(None, None)] * (self.nk + self.nc) + [(0.0, None)] * self.nv


def endo_membership(X: Polytope, endo: AffineEndo, cfg: ToleranceConfig = DEFAULT):
    """Decide whether phi maps X into X.

    Membership is an LP feasibility question in the witness V; on failure
    the Farkas certificate converts into a unit-norm separating functional
    over (K, c)-space.
    """
    if endo.dim != X.dim:
        raise DimensionMismatch("endomorphism dimension does not match polytope")
    A, b = X.A, X.b
    m, d = A.shape

    # rows over v only: V A = A K (m*d) then V b <= b - A c (m)
    lhs = np.zeros((m * d + m, m * m))
    rhs = np.zeros(m * d + m)
    AK = A @ endo.linear
    for i in range(m):
        for j in range(d):
            r = i * d + j
            lhs[r, i * m: (i + 1) * m] = A[:, j]
            rhs[r] = AK[i, j]
    for i in range(m):
        lhs[m * d + i, i * m: (i + 1) * m] = b
    rhs[m * d:] = b - A @ endo.offset
    senses = ["="] * (m * d) + ["<="] * m

    out = solve_lp(LinearProgram(objective=np.zeros(m * m), lhs=lhs, rhs=rhs,
                                 senses=senses, bounds=[(0.0, None)] * (m * m)), cfg)
    if out.optimal:
        V = out.primal.reshape(m, m)
        return EndoMembership(member=True, witness=EndoWitness(multipliers=V))
    if out.status != "infeasible":
        raise NoFixedPointFound(f"membership LP ended with status {out.status}")

    lam = out.farkas
    Lam = lam[: m * d].reshape(m, d)
    u = lam[m * d:]
    normal = np.concatenate([(-A.T @ Lam).reshape(-1), A.T @ u])
    offset = float(u @ b)
    norm = float(np.linalg.norm(normal))
    if norm <= 0.0:
        raise NoFixedPointFound("degenerate separating functional")
    return EndoMembership(member=False,
                          separator=EndoSeparator(normal=normal / norm,
                                                  offset=offset / norm))


def fixed_point(X: Polytope, endo: AffineEndo, cfg: ToleranceConfig = DEFAULT):
    """A point of X with ``phi(x) = x`` (residual at most the fixed-point tolerance).

    Solves the LP feasibility problem on the fixed-set face; if roundoff makes
    that system empty, minimizes the l1 deviation ``||(K - I) x + c||_1`` over X
    and accepts when the optimum is small enough.
    """
    d = X.dim
    K_i = endo.linear - np.eye(d)
    # identity-like maps contribute all-zero face rows; keep only informative ones
    live = np.any(K_i != 0.0, axis=1) | (np.abs(endo.offset) > 0.0)
    lhs = np.vstack([X.A, K_i[live]])
    rhs = np.concatenate([X.b, -endo.offset[live]])
    senses = ["<="] * X.n_rows + ["="] * int(live.sum())
    out = solve_lp(LinearProgram(objective=np.zeros(d), lhs=lhs, rhs=rhs,
                                 senses=senses), cfg)
    scale = 1.0 + float(np.abs(endo.offset).max(initial=0.0)) \
        + float(np.abs(endo.linear).max(initial=0.0))
    if out.optimal:
        x = out.primal
        resid = float(np.abs(endo.apply(x) - x).max())
        if resid <= cfg.fixed_point * scale:
            return x

    # l1 fallback over (x, t): minimize sum t, |(K - I) x + c| <= t
    big_lhs = np.zeros((X.n_rows + 2 * d, 2 * d))
    big_rhs = np.zeros(X.n_rows + 2 * d)
    big_lhs[: X.n_rows, :d] = X.A
    big_rhs[: X.n_rows] = X.b
    big_lhs[X.n_rows: X.n_rows + d, :d] = K_i
    big_lhs[X.n_rows: X.n_rows + d, d:] = -np.eye(d)
    big_rhs[X.n_rows: X.n_rows + d] = -endo.offset
    big_lhs[X.n_rows + d:, :d] = -K_i
    big_lhs[X.n_rows + d:, d:] = -np.eye(d)
    big_rhs[X.n_rows + d:] = endo.offset
    obj = np.concatenate([np.zeros(d), np.ones(d)])
    out = solve_lp(LinearProgram(objective=obj, lhs=big_lhs, rhs=big_rhs,
                                 bounds=[(None, None)] * d + [(0.0, None)] * d), cfg)
    if out.optimal:
        x = out.primal[:d]
        resid = float(np.abs(endo.apply(x) - x).max())
        if resid <= cfg.fixed_point * scale:
            return x
    raise NoFixedPointFound(
        f"no fixed point within tolerance for a map on {X.name!r}")


def semi_separation(X: Polytope, endo: AffineEndo, cfg: ToleranceConfig = DEFAULT):
    """Either a fixed point of phi in X, or a hyperplane separating phi from the
    endomorphism polytope; exactly one arm is returned."""
    verdict = endo_membership(X, endo, cfg)
    if not verdict.member:
        return SeparationResponse(separator=verdict.separator)
    x = fixed_point(X, endo, cfg)
    resid = float(np.abs(endo.apply(x) - x).max())
    return FixedPointResponse(point=x, residual=resid)


@dataclass
class EndoProjection:
    endo: AffineEndo
    witness: EndoWitness
    kkt_residual: float
    z: np.ndarray
    working: list
    distance: float


def endo_project(X: Polytope, endo: AffineEndo, cfg: ToleranceConfig = DEFAULT,
                 warm: EndoProjection = None, blocks: EndoBlocks = None):
    """Euclidean projection of (K, c) onto the endomorphism polytope of X.

    The witness V enters the constraints but carries zero weight in the
    distance.  Accepts a previous projection result for warm-starting the
    active set (used by the swap-regret loop).
    """
    if blocks is None:
        blocks = EndoBlocks(X)
    target = blocks.pack(endo)
    weights = np.concatenate([np.ones(blocks.nk + blocks.nc), np.zeros(blocks.nv)])
    # inequality system: A c + V b <= b and -v <= 0
    nn = np.zeros((blocks.nv, blocks.nz))
    nn[:, blocks.nk + blocks.nc:] = -np.eye(blocks.nv)
    A_in = np.vstack([blocks.ineq_lhs, nn])
    b_in = np.concatenate([blocks.ineq_rhs, np.zeros(blocks.nv)])

    if warm is not None:
        x0, working = warm.z, warm.working
    else:
        ident = AffineEndo.identity(blocks.d)
        x0 = blocks.pack(ident, V=np.eye(blocks.m))
        working = None

    z, mult, kkt = qp_active_set(weights=weights, target=target,
                                 A_eq=blocks.eq_lhs, b_eq=blocks.eq_rhs,
                                 A_in=A_in, b_in=b_in, x0=x0, cfg=cfg,
                                 working=working, eq_basis=blocks.eq_basis,
                                 cache=blocks.qp_cache)
    proj, V = blocks.split(z)
    dist = float(np.linalg.norm(proj.pack() - endo.pack()))
    active = [int(i) for i in np.nonzero(mult > 0.0)[0]]
    return EndoProjection(endo=proj, witness=EndoWitness(multipliers=V),
                          kkt_residual=kkt, z=z, working=active, distance=dist)
