"""Explicit H-representation polytopes.

A Polytope is the set ``{x : A x <= b}`` together with geometry metadata
certified at construction: a feasible interior-ball center (Chebyshev
center), the inner radius, per-coordinate ranges, and an outer radius R
with ``||x|| <= R`` on the set.  Construction fails loudly on empty or
unbounded input, so downstream solvers can rely on finite geometry.
"""

import json
import warnings
from dataclasses import dataclass, field
from itertools import combinations
from typing import NamedTuple

import numpy as np

from evikit.config import DEFAULT, ToleranceConfig
from evikit.errors import (
    DegenerateRowWarning,
    DimensionMismatch,
    DomainError,
    Infeasible,
    InvariantViolation,
    ParseError,
    TooLarge,
)
from evikit.linsolve import LinearProgram, solve_lp

RADIUS_CAP = 1e6


class Separator(NamedTuple):
    row: int
    normal: np.ndarray
    offset: float


@dataclass
class Polytope:
    A: np.ndarray
    b: np.ndarray
    name: str = "polytope"
    interior_point: np.ndarray = field(default=None, repr=False)
    inner_radius: float = field(default=None, repr=False)
    coord_ranges: np.ndarray = field(default=None, repr=False)
    outer_radius: float = field(default=None, repr=False)

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        if self.A.ndim != 2 or self.b.ndim != 1 or self.A.shape[0] != self.b.shape[0]:
            raise DimensionMismatch("A must be (m, d) with matching b of length m")
        if not (np.all(np.isfinite(self.A)) and np.all(np.isfinite(self.b))):
            raise DimensionMismatch("polytope data contains non-finite entries")
        self._drop_zero_rows()
        if self.interior_point is None:
            self._certify_geometry()

    def _drop_zero_rows(self):
        zero = ~np.any(self.A != 0.0, axis=1)
        if not zero.any():
            return
        bad = zero & (self.b < 0.0)
        if bad.any():
            raise Infeasible("all-zero row with negative rhs",
                             farkas=np.eye(len(self.b))[np.nonzero(bad)[0][0]])
        warnings.warn(f"dropped {int(zero.sum())} all-zero constraint row(s)",
                      DegenerateRowWarning, stacklevel=3)
        self.A = self.A[~zero]
        self.b = self.b[~zero]

    def _certify_geometry(self, cfg: ToleranceConfig = DEFAULT):
        m, d = self.A.shape
        norms = np.linalg.norm(self.A, axis=1)
        cheb_lhs = np.column_stack([self.A, norms])
        lp = LinearProgram(objective=np.append(np.zeros(d), 1.0),
                           lhs=cheb_lhs, rhs=self.b,
                           bounds=[(None, None)] * d + [(0.0, RADIUS_CAP)],
                           direction="max")
        out = solve_lp(lp, cfg)
        if out.status == "infeasible":
            raise Infeasible(f"polytope {self.name!r} is empty", farkas=out.farkas)
        if not out.optimal:
            raise InvariantViolation(f"polytope {self.name!r}: interior certification failed")
        self.interior_point = out.primal[:d]
        self.inner_radius = float(out.primal[d])

        ranges = np.zeros((d, 2))
        for i in range(d):
            for k, direction in enumerate(("min", "max")):
                e = np.zeros(d)
                e[i] = 1.0
                res = solve_lp(LinearProgram(objective=e, lhs=self.A, rhs=self.b,
                                             direction=direction), cfg)
                if res.status == "unbounded":
                    raise InvariantViolation(
                        f"polytope {self.name!r} is unbounded in coordinate {i}")
                if not res.optimal:
                    raise InvariantViolation(
                        f"polytope {self.name!r}: boundedness check failed ({res.status})")
                ranges[i, k] = res.value
        self.coord_ranges = ranges
        self.outer_radius = float(np.sqrt((np.abs(ranges).max(axis=1) ** 2).sum()))

    @property
    def dim(self):
        return self.A.shape[1]

    @property
    def n_rows(self):
        return self.A.shape[0]

    def contains(self, x, tol=None):
        return membership(self, x, tol)[0]

    def to_dict(self):
        return {"A": self.A.tolist(), "b": self.b.tolist(), "name": self.name}

    @classmethod
    def from_dict(cls, data):
        for key in ("A", "b"):
            if key not in data:
                raise ParseError(f"polytope JSON missing field {key!r}")
        rows = data["A"]
        width = None
        for i, row in enumerate(rows):
            if not isinstance(row, (list, tuple)):
                raise ParseError(f"matrix row {i} is not a list")
            if width is None:
                width = len(row)
            if len(row) != width:
                raise ParseError(f"matrix row {i} has length {len(row)}, expected {width}")
            for v in row:
                if not isinstance(v, (int, float)) or isinstance(v, bool):
                    raise ParseError(f"matrix row {i} contains a non-numeric entry")
        return cls(A=rows, b=data["b"], name=data.get("name", "polytope"))

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    @classmethod
    def box(cls, lows, highs, name="box"):
        lows = np.asarray(lows, dtype=float)
        highs = np.asarray(highs, dtype=float)
        d = lows.shape[0]
        eye = np.eye(d)
        return cls(A=np.vstack([eye, -eye]), b=np.concatenate([highs, -lows]), name=name)

    @classmethod
    def simplex(cls, n_actions, name="simplex"):
        """Probability simplex over ``n_actions`` outcomes, sum row as paired <=."""
        eye = np.eye(n_actions)
        ones = np.ones((1, n_actions))
        A = np.vstack([-eye, ones, -ones])
        b = np.concatenate([np.zeros(n_actions), [1.0, -1.0]])
        return cls(A=A, b=b, name=name)


@dataclass
class VertexList:
    vertices: np.ndarray
    source: str = "polytope"

    def __len__(self):
        return len(self.vertices)


def product_polytope(factors, name="product"):
    """Cartesian product with block-diagonal rows; block index ranges are returned."""
    dims = [f.dim for f in factors]
    d = sum(dims)
    rows = sum(f.n_rows for f in factors)
    A = np.zeros((rows, d))
    b = np.zeros(rows)
    r0 = c0 = 0
    blocks = []
    for f in factors:
        A[r0:r0 + f.n_rows, c0:c0 + f.dim] = f.A
        b[r0:r0 + f.n_rows] = f.b
        blocks.append((c0, c0 + f.dim))
        r0 += f.n_rows
        c0 += f.dim
    return Polytope(A=A, b=b, name=name), blocks


def membership(X: Polytope, x, tol=None):
    """Decide ``x in X``; on rejection also return the most violated row.

    Returns ``(True, None)`` or ``(False, Separator)`` where the separator's
    row satisfies ``normal @ x > offset`` while every point of X satisfies
    ``normal @ z <= offset``.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (X.dim,):
        raise DimensionMismatch(f"point has shape {x.shape}, expected ({X.dim},)")
    if tol is None:
        tol = DEFAULT.feas * (1.0 + float(np.abs(X.b).max(initial=0.0)))
    resid = X.A @ x - X.b
    worst = int(np.argmax(resid))
    if resid[worst] <= tol:
        return True, None
    return False, Separator(row=worst, normal=X.A[worst].copy(), offset=float(X.b[worst]))


def enumerate_vertices(X: Polytope, dedupe_tol=1e-9):
    """All vertices of a desk-scale polytope by basis enumeration.

    Guarded to d <= 4 and m <= 32; every feasible d-row basic solution is
    collected, deduplicated, and returned in lexicographic order.
    """
    m, d = X.A.shape
    if d > 4 or m > 32:
        raise TooLarge(f"vertex enumeration guard: d={d} m={m} exceeds (4, 32)")
    feas_tol = DEFAULT.feas * (1.0 + float(np.abs(X.b).max(initial=0.0))) * 10.0
    candidates = []
    for rows in combinations(range(m), d):
        M = X.A[list(rows)]
        if abs(np.linalg.det(M)) < 1e-10:
            continue
        v = np.linalg.solve(M, X.b[list(rows)])
        if np.max(X.A @ v - X.b) <= feas_tol:
            candidates.append(v)
    candidates.sort(key=lambda p: tuple(p))
    vertices = []
    for v in candidates:
        if not any(np.abs(v - u).max() <= dedupe_tol for u in vertices):
            vertices.append(v)
    return VertexList(vertices=np.array(vertices).reshape(-1, d), source=X.name)


def vi_gap(X: Polytope, F, x, cfg: ToleranceConfig = DEFAULT):
    """Variational-inequality gap ``-min_{z in X} <F(x), z - x>``.

    Nonnegative (up to LP tolerance) for feasible x; zero exactly at VI
    solutions.  ``F`` may be an Operator or any callable returning F(x).
    """
    x = np.asarray(x, dtype=float)
    ok, _ = membership(X, x)
    if not ok:
        raise DomainError("vi_gap requires a feasible point")
    fx = F.evaluate(x) if hasattr(F, "evaluate") else np.asarray(F(x), dtype=float)
    out = solve_lp(LinearProgram(objective=fx, lhs=X.A, rhs=X.b), cfg)
    if not out.optimal:
        raise InvariantViolation(f"vi_gap LP ended with status {out.status}")
    return float(fx @ x - out.value)
