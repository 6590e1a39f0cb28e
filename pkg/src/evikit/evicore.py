"""Problem and solution data model for expected variational inequalities.

An EVIProblem couples a polytope X, a bounded operator F, a deviation class
(constants, affine endomorphisms, or per-block affine endomorphisms of a
product), and a target accuracy.  Solutions are finitely supported
distributions; the gap of a candidate solution is computed exactly by a
single LP per deviation class:

* constants: ``gap = -min_{z in X} E<F(x), z - x>``;
* affine endomorphisms: the expectation is linear in (K, c), so the minimum
  runs over the lifted endomorphism polytope of X;
* product blocks: the objective separates, one endomorphism LP per block.

Raw signed gaps are kept alongside the clamped-at-zero values used for
reporting.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from evikit.config import DEFAULT, ToleranceConfig
from evikit.endomap import AffineEndo, EndoBlocks, EndoWitness
from evikit.errors import (
    DimensionMismatch,
    DomainError,
    InvariantViolation,
    ParseError,
)
from evikit.linsolve import LinearProgram, solve_lp
from evikit.polytope import Polytope, enumerate_vertices, membership

BOUND_SAMPLES = 1000


def _interior_samples(X: Polytope, count, seed=0):
    """Deterministic feasible samples: random chords through the interior point."""
    rng = np.random.default_rng(seed)
    x0 = X.interior_point
    pts = np.empty((count, X.dim))
    for i in range(count):
        u = rng.normal(size=X.dim)
        u /= max(np.linalg.norm(u), 1e-12)
        au = X.A @ u
        slack = X.b - X.A @ x0
        with np.errstate(divide="ignore"):
            steps = np.where(au > 1e-12, slack / np.maximum(au, 1e-300), np.inf)
        t_max = float(np.min(steps, initial=np.inf))
        if not np.isfinite(t_max):
            t_max = 0.0
        pts[i] = x0 + rng.uniform(0.0, 1.0) * t_max * u
    return pts


@dataclass
class Operator:
    """Bounded map F on a polytope with a recorded norm bound.

    ``bound`` is the maximum of ``||F||`` over all vertices (when enumerable)
    plus at least 10^3 sampled feasible points; exact for affine and
    game-gradient kinds whose norm peaks at vertices, an estimate flagged by
    ``bound_estimated`` otherwise.
    """

    kind: str
    domain: Polytope
    matrix: np.ndarray = None
    offset: np.ndarray = None
    coord_terms: list = None
    sign_overrides: list = None
    func: object = None
    bound: float = None
    bound_estimated: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("affine", "polynomial", "sign", "game_gradient", "table"):
            raise DomainError(f"unknown operator kind {self.kind!r}")
        if self.kind == "sign" and self.domain.dim != 1:
            raise DomainError("sign operator is one-dimensional")
        if self.bound is None:
            self._estimate_bound()

    @classmethod
    def affine(cls, X, matrix, offset=None, **kw):
        matrix = np.asarray(matrix, dtype=float)
        offset = np.zeros(X.dim) if offset is None else np.asarray(offset, dtype=float)
        if matrix.shape != (X.dim, X.dim) or offset.shape != (X.dim,):
            raise DimensionMismatch("affine operator data does not match the polytope")
        return cls(kind="affine", domain=X, matrix=matrix, offset=offset, **kw)

    @classmethod
    def polynomial(cls, X, coord_terms, **kw):
        terms = []
        for coord in coord_terms:
            row = []
            for coef, exps in coord:
                exps = tuple(int(e) for e in exps)
                if len(exps) != X.dim:
                    raise DimensionMismatch("polynomial exponent arity != dimension")
                if sum(exps) > 4:
                    raise DomainError("polynomial operators support degree <= 4")
                row.append((float(coef), exps))
            terms.append(row)
        if len(terms) != X.dim:
            raise DimensionMismatch("polynomial needs one term list per coordinate")
        return cls(kind="polynomial", domain=X, coord_terms=terms, **kw)

    @classmethod
    def sign(cls, X, overrides=None, **kw):
        ov = [(float(a), float(v)) for a, v in (overrides or [])]
        return cls(kind="sign", domain=X, sign_overrides=ov, bound=1.0, **kw)

    @classmethod
    def from_callable(cls, X, func, kind="table", **kw):
        return cls(kind=kind, domain=X, func=func, **kw)

    def raw_eval(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "affine":
            return self.matrix @ x + self.offset
        if self.kind == "sign":
            for at, val in self.sign_overrides:
                if x[0] == at:
                    return np.array([val])
            return np.array([-1.0 if x[0] < 0.0 else 1.0])
        if self.kind == "polynomial":
            out = np.zeros(self.domain.dim)
            for i, terms in enumerate(self.coord_terms):
                for coef, exps in terms:
                    out[i] += coef * np.prod(x ** np.array(exps))
            return out
        return np.asarray(self.func(x), dtype=float)

    def evaluate(self, x, check_domain=True):
        x = np.asarray(x, dtype=float)
        if check_domain:
            ok, _ = membership(self.domain, x, tol=DEFAULT.feas * 1e3
                               * (1.0 + float(np.abs(self.domain.b).max(initial=0.0))))
            if not ok:
                raise DomainError("operator evaluated outside its domain")
        fx = self.raw_eval(x)
        if fx.shape != (self.domain.dim,):
            raise DimensionMismatch("operator returned a vector of the wrong length")
        return fx

    def _estimate_bound(self):
        X = self.domain
        best = 0.0
        if X.dim <= 4 and X.n_rows <= 32:
            for v in enumerate_vertices(X).vertices:
                best = max(best, float(np.linalg.norm(self.raw_eval(v))))
        for p in _interior_samples(X, BOUND_SAMPLES, seed=self.meta.get("seed", 0)):
            best = max(best, float(np.linalg.norm(self.raw_eval(p))))
        if not np.isfinite(best):
            raise InvariantViolation("operator evaluation is not finite on the domain")
        if self.kind in ("polynomial", "table"):
            self.bound = best * 1.02 + 1e-12
            self.bound_estimated = True
        else:
            self.bound = best

    def to_dict(self):
        if self.kind == "affine":
            return {"kind": "affine", "matrix": self.matrix.tolist(),
                    "offset": self.offset.tolist()}
        if self.kind == "sign":
            out = {"kind": "sign"}
            if self.sign_overrides:
                out["overrides"] = [[a, v] for a, v in self.sign_overrides]
            return out
        if self.kind == "polynomial":
            return {"kind": "polynomial",
                    "coords": [[[c, list(e)] for c, e in terms]
                               for terms in self.coord_terms]}
        raise DomainError(f"operator kind {self.kind!r} has no JSON form")

    @classmethod
    def from_dict(cls, X, data):
        kind = data.get("kind")
        if kind == "affine":
            return cls.affine(X, data["matrix"], data.get("offset"))
        if kind == "sign":
            return cls.sign(X, overrides=data.get("overrides"))
        if kind == "polynomial":
            return cls.polynomial(X, data["coords"])
        raise ParseError(f"unknown operator kind in JSON: {kind!r}")


def evaluate_operator(F: Operator, x):
    """Evaluate F with domain and bound checks (post: ``||F(x)|| <= B`` + slack)."""
    fx = F.evaluate(x, check_domain=True)
    if np.linalg.norm(fx) > F.bound * (1.0 + 1e-6) + 1e-9:
        raise InvariantViolation("operator exceeded its recorded bound")
    return fx


@dataclass
class PhiClass:
    """Deviation class: constants, affine endomorphisms, or per-block affine maps."""

    variant: str
    blocks: list = None

    def __post_init__(self):
        if self.variant not in ("constants", "linear", "product_linear"):
            raise DomainError(f"unknown deviation class {self.variant!r}")
        if self.variant == "product_linear":
            if not self.blocks:
                raise DomainError("product_linear needs a block partition")
            pos = 0
            for lo, hi in self.blocks:
                if lo != pos or hi <= lo:
                    raise DomainError("blocks must be contiguous and increasing")
                pos = hi

    def to_json_value(self):
        if self.variant == "constants":
            return "con"
        if self.variant == "linear":
            return "lin"
        return {"product": [hi - lo for lo, hi in self.blocks]}

    @classmethod
    def from_json_value(cls, value):
        if value == "con":
            return cls(variant="constants")
        if value == "lin":
            return cls(variant="linear")
        if isinstance(value, dict) and "product" in value:
            sizes = value["product"]
            blocks, pos = [], 0
            for s in sizes:
                blocks.append((pos, pos + int(s)))
                pos += int(s)
            return cls(variant="product_linear", blocks=blocks)
        raise ParseError(f"unknown phi class in JSON: {value!r}")


@dataclass
class FiniteDistribution:
    """Finitely supported distribution; exact duplicate points are merged."""

    support: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.support = np.atleast_2d(np.asarray(self.support, dtype=float))
        self.weights = np.asarray(self.weights, dtype=float)
        if self.support.shape[0] != self.weights.shape[0]:
            raise DimensionMismatch("support and weights lengths differ")
        if self.weights.min(initial=0.0) < -1e-12:
            raise InvariantViolation("negative weight in distribution")
        total = float(self.weights.sum())
        if abs(total - 1.0) > 1e-9:
            raise InvariantViolation(f"weights sum to {total}, expected 1")
        merged = {}
        order = []
        for point, w in zip(self.support, np.maximum(self.weights, 0.0)):
            key = point.tobytes()
            if key not in merged:
                merged[key] = [point, 0.0]
                order.append(key)
            merged[key][1] += w
        pts = np.array([merged[k][0] for k in order])
        wts = np.array([merged[k][1] for k in order])
        self.support = pts
        self.weights = wts / wts.sum()
        if abs(self.weights.sum() - 1.0) > 1e-12:
            raise InvariantViolation("weight normalization failed")

    @classmethod
    def point_mass(cls, x):
        return cls(support=[np.asarray(x, dtype=float)], weights=[1.0])

    @classmethod
    def uniform(cls, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        k = points.shape[0]
        return cls(support=points, weights=np.full(k, 1.0 / k))

    @classmethod
    def mixture(cls, dists, coeffs):
        coeffs = np.asarray(coeffs, dtype=float)
        support = np.vstack([d.support for d in dists])
        weights = np.concatenate([a * d.weights for a, d in zip(coeffs, dists)])
        return cls(support=support, weights=weights)

    @property
    def size(self):
        return self.support.shape[0]

    def mean(self):
        return self.weights @ self.support

    def validate_in(self, X: Polytope, cfg: ToleranceConfig = DEFAULT):
        scale = 1.0 + float(np.abs(X.b).max(initial=0.0))
        worst = float((X.A @ self.support.T - X.b[:, None]).max(initial=0.0))
        if worst > cfg.feas * scale * 100:
            raise InvariantViolation("support point outside the constraint set")

    def to_dict(self):
        return {"support": self.support.tolist(), "weights": self.weights.tolist()}

    @classmethod
    def from_dict(cls, data):
        try:
            return cls(support=data["support"], weights=data["weights"])
        except KeyError as exc:
            raise ParseError(f"distribution JSON missing field {exc}") from exc

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class EVIProblem:
    """Constraint set, operator, deviation class, and target accuracy."""

    polytope: Polytope
    operator: Operator
    phi: PhiClass
    epsilon: float
    factors: list = None
    linear_field: bool = False
    zero_self_pairing: bool = False
    name: str = "problem"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.epsilon <= 0:
            raise DomainError("epsilon must be positive")
        if self.operator.domain is not self.polytope and \
                self.operator.domain.dim != self.polytope.dim:
            raise DimensionMismatch("operator domain does not match the polytope")
        if self.phi.variant == "product_linear":
            if not self.factors:
                raise DomainError("product_linear problems need factor polytopes")
            if self.phi.blocks[-1][1] != self.polytope.dim:
                raise DomainError("block partition does not cover all coordinates")

    def moments(self, mu: FiniteDistribution):
        """(sum w F x^T, sum w F, sum w <F, x>) of the operator under mu."""
        if self.operator.kind == "affine":
            F = mu.support @ self.operator.matrix.T + self.operator.offset
        else:
            F = np.array([self.operator.evaluate(x, check_domain=False)
                          for x in mu.support])
        wF = mu.weights[:, None] * F
        G = wF.T @ mu.support
        h = wF.sum(axis=0)
        s = float(np.einsum("ti,ti->", wF, mu.support))
        return G, h, s

    def to_dict(self):
        out = {"polytope": self.polytope.to_dict(),
               "operator": self.operator.to_dict(),
               "phi": self.phi.to_json_value(),
               "epsilon": self.epsilon,
               "name": self.name}
        if self.meta:
            out["meta"] = dict(self.meta)
        return out

    @classmethod
    def from_dict(cls, data):
        for key in ("polytope", "operator", "phi", "epsilon"):
            if key not in data:
                raise ParseError(f"problem JSON missing field {key!r}")
        X = Polytope.from_dict(data["polytope"])
        op = Operator.from_dict(X, data["operator"])
        phi = PhiClass.from_json_value(data["phi"])
        return cls(polytope=X, operator=op, phi=phi,
                   epsilon=float(data["epsilon"]),
                   name=data.get("name", "problem"),
                   meta=data.get("meta", {}))

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class GapResult:
    """Signed worst-case violation; ``value`` clamps the raw gap at zero."""

    raw: float
    witness_point: np.ndarray = None
    deviation: AffineEndo = None
    witness: EndoWitness = None

    @property
    def value(self):
        return max(self.raw, 0.0)


def evi_gap_constants(problem: EVIProblem, mu: FiniteDistribution,
                      cfg: ToleranceConfig = DEFAULT) -> GapResult:
    """Worst violation over constant deviations: one LP in the target point."""
    mu.validate_in(problem.polytope, cfg)
    _, h, s = problem.moments(mu)
    X = problem.polytope
    out = solve_lp(LinearProgram(objective=h, lhs=X.A, rhs=X.b), cfg)
    if not out.optimal:
        raise InvariantViolation(f"constant-gap LP ended with status {out.status}")
    return GapResult(raw=float(s - out.value), witness_point=out.primal)


def evi_gap_linear(problem: EVIProblem, mu: FiniteDistribution,
                   cfg: ToleranceConfig = DEFAULT) -> GapResult:
    """Worst violation over affine endomorphisms plus the maximizing deviation."""
    mu.validate_in(problem.polytope, cfg)
    G, h, s = problem.moments(mu)
    return _linear_gap_from_moments(problem.polytope, G, h, s, cfg)


def evi_gap_product(problem: EVIProblem, mu: FiniteDistribution,
                    cfg: ToleranceConfig = DEFAULT) -> GapResult:
    """Per-block affine deviations; the objective separates across blocks."""
    if problem.phi.variant != "product_linear":
        raise DomainError("evi_gap_product requires a product_linear class")
    mu.validate_in(problem.polytope, cfg)
    d = problem.polytope.dim
    if problem.operator.kind == "affine":
        F = mu.support @ problem.operator.matrix.T + problem.operator.offset
    else:
        F = np.array([problem.operator.evaluate(x, check_domain=False)
                      for x in mu.support])
    wF = mu.weights[:, None] * F
    K_full = np.zeros((d, d))
    c_full = np.zeros(d)
    total = 0.0
    for (lo, hi), factor in zip(problem.phi.blocks, problem.factors):
        G = wF[:, lo:hi].T @ mu.support[:, lo:hi]
        h = wF[:, lo:hi].sum(axis=0)
        s = float(np.einsum("ti,ti->", wF[:, lo:hi], mu.support[:, lo:hi]))
        res = _linear_gap_from_moments(factor, G, h, s, cfg)
        total += res.raw
        K_full[lo:hi, lo:hi] = res.deviation.linear
        c_full[lo:hi] = res.deviation.offset
    return GapResult(raw=total, deviation=AffineEndo(linear=K_full, offset=c_full))


def _linear_gap_from_moments(X: Polytope, G, h, s, cfg) -> GapResult:
    blocks = EndoBlocks(X)
    obj = np.zeros(blocks.nz)
    obj[: blocks.nk] = np.asarray(G, dtype=float).reshape(-1)
    obj[blocks.nk: blocks.nk + blocks.d] = h
    lhs = np.vstack([blocks.eq_lhs, blocks.ineq_lhs])
    rhs = np.concatenate([blocks.eq_rhs, blocks.ineq_rhs])
    senses = ["="] * blocks.eq_lhs.shape[0] + ["<="] * blocks.ineq_lhs.shape[0]
    out = solve_lp(LinearProgram(objective=obj, lhs=lhs, rhs=rhs, senses=senses,
                                 bounds=blocks.bounds()), cfg)
    if not out.optimal:
        raise InvariantViolation(f"linear-gap LP ended with status {out.status}")
    endo, V = blocks.split(out.primal)
    return GapResult(raw=float(s - out.value), deviation=endo,
                     witness=EndoWitness(multipliers=V))


def phi_gap_of_problem(problem: EVIProblem, mu: FiniteDistribution,
                       cfg: ToleranceConfig = DEFAULT) -> GapResult:
    """Gap under the problem's own deviation class."""
    if problem.phi.variant == "constants":
        return evi_gap_constants(problem, mu, cfg)
    if problem.phi.variant == "linear":
        return evi_gap_linear(problem, mu, cfg)
    return evi_gap_product(problem, mu, cfg)
