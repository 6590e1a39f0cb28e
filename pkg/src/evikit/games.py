"""Normal-form game layer.

Games are utility tensors over pure profiles; mixed profiles live in the
product of simplices (full coordinates), with an exact affine reduction to
the unit square for 2x2 games.  The module exposes the gradient field used
by the solvers, three deviation gaps (per-player constants, per-player
stochastic-matrix maps, and joint affine maps), the average-gap
decomposition, a scan of achievable first-action marginals under joint
affine deviations, and zero-sum polymatrix constructors whose structure
flags unlock the mean-collapse shortcut.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from evikit.config import DEFAULT, ToleranceConfig
from evikit.endomap import AffineEndo
from evikit.errors import (
    DimensionMismatch,
    DomainError,
    NumericalFailure,
    ParseError,
    StructureViolation,
    TooLarge,
)
from evikit.evicore import (
    EVIProblem,
    FiniteDistribution,
    Operator,
    PhiClass,
    evi_gap_linear,
)
from evikit.linsolve import LinearProgram, solve_lp
from evikit.polytope import Polytope, product_polytope
from evikit.solvers import deviation_dual_system

DESK_SCALE_PLAYERS = 3
DESK_SCALE_ACTIONS = 4


@dataclass
class NormalFormGame:
    """n players, one utility tensor per player indexed by pure profiles."""

    utilities: list
    name: str = "game"
    pairwise: dict = field(default=None, repr=False)
    _full_cache: tuple = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.utilities = [np.asarray(u, dtype=float) for u in self.utilities]
        n = len(self.utilities)
        if n < 1:
            raise DimensionMismatch("a game needs at least one player")
        shape = self.utilities[0].shape
        if len(shape) != n:
            raise DimensionMismatch("utility tensor arity must equal player count")
        for u in self.utilities:
            if u.shape != shape:
                raise DimensionMismatch("utility tensors disagree on action counts")
            if not np.all(np.isfinite(u)):
                raise DimensionMismatch("utilities contain non-finite entries")
        if n > DESK_SCALE_PLAYERS or max(shape) > DESK_SCALE_ACTIONS:
            raise TooLarge(
                f"desk-scale guard: {n} players / {max(shape)} actions "
                f"exceeds ({DESK_SCALE_PLAYERS}, {DESK_SCALE_ACTIONS})")

    @property
    def n_players(self):
        return len(self.utilities)

    @property
    def action_counts(self):
        return list(self.utilities[0].shape)

    @property
    def is_2x2(self):
        return self.n_players == 2 and self.action_counts == [2, 2]

    def blocks(self):
        counts = self.action_counts
        out, pos = [], 0
        for c in counts:
            out.append((pos, pos + c))
            pos += c
        return out

    def split(self, x):
        return [np.asarray(x)[lo:hi] for lo, hi in self.blocks()]

    def expected_utility(self, i, x):
        strategies = self.split(x)
        acc = self.utilities[i]
        for s in reversed(strategies):
            acc = acc @ s
        return float(acc)

    def utility_gradient(self, i, x):
        """Expected utility of each pure action of player i against x_{-i}."""
        strategies = self.split(x)
        order = [i] + [j for j in range(self.n_players) if j != i]
        acc = np.transpose(self.utilities[i], order)
        for j in reversed([j for j in range(self.n_players) if j != i]):
            acc = acc @ strategies[j]
        return acc

    def full_polytope(self):
        if self._full_cache is None:
            factors = [Polytope.simplex(c, name=f"{self.name}-p{i}")
                       for i, c in enumerate(self.action_counts)]
            prod, blocks = product_polytope(factors, name=f"{self.name}-profiles")
            self._full_cache = (prod, factors, blocks)
        return self._full_cache

    def to_dict(self):
        return {"players": self.n_players,
                "actions": self.action_counts,
                "utilities": [u.tolist() for u in self.utilities],
                "name": self.name}

    @classmethod
    def from_dict(cls, data):
        if "utilities" not in data:
            raise ParseError("game JSON missing field 'utilities'")
        game = cls(utilities=data["utilities"], name=data.get("name", "game"))
        if "actions" in data and list(data["actions"]) != game.action_counts:
            raise ParseError("game JSON 'actions' disagrees with tensor shape")
        return game

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def bach_or_stravinsky():
    """Both pick Bach: (3, 2); both Stravinsky: (2, 3); otherwise (0, 0)."""
    u1 = np.array([[3.0, 0.0], [0.0, 2.0]])
    u2 = np.array([[2.0, 0.0], [0.0, 3.0]])
    return NormalFormGame(utilities=[u1, u2], name="bach-or-stravinsky")


def game_gradient_field(game: NormalFormGame) -> Operator:
    """Joint field F(x) = -(per-player utility gradients) on the full product."""
    prod, _, blocks = game.full_polytope()

    def field(x):
        out = np.zeros(prod.dim)
        for i, (lo, hi) in enumerate(blocks):
            out[lo:hi] = -game.utility_gradient(i, x)
        return out

    pure_max = 0.0
    for profile in np.ndindex(*game.action_counts):
        x = np.zeros(prod.dim)
        for i, (lo, _) in enumerate(blocks):
            x[lo + profile[i]] = 1.0
        pure_max = max(pure_max, float(np.linalg.norm(field(x))))
    op = Operator.from_callable(prod, field, kind="game_gradient",
                                meta={"game": game.name})
    # multilinear fields peak at pure profiles; interior sampling in the
    # constructor cross-checks but cannot exceed the pure-profile maximum
    op.bound = max(op.bound, pure_max)
    op.bound_estimated = False
    return op


def reduced_2x2_field(game: NormalFormGame) -> Operator:
    """Exact affine field on [0,1]^2 in first-action probabilities."""
    if not game.is_2x2:
        raise DomainError("reduction applies to 2x2 games only")
    u1, u2 = game.utilities
    square = Polytope.box([0.0, 0.0], [1.0, 1.0], name=f"{game.name}-marginals")
    # d u1 / dp = (u1[0,:] - u1[1,:]) . (q, 1-q); F = -grad
    a1 = u1[0] - u1[1]
    a2 = u2[:, 0] - u2[:, 1]
    matrix = np.array([[0.0, -(a1[0] - a1[1])], [-(a2[0] - a2[1]), 0.0]])
    offset = np.array([-a1[1], -a2[1]])
    return Operator.affine(square, matrix, offset)


def full_problem(game: NormalFormGame, epsilon, phi="linear") -> EVIProblem:
    prod, factors, blocks = game.full_polytope()
    op = game_gradient_field(game)
    phi_class = PhiClass(variant="linear") if phi == "linear" else \
        PhiClass(variant="product_linear", blocks=blocks)
    return EVIProblem(polytope=prod, operator=op, phi=phi_class,
                      factors=factors, epsilon=epsilon, name=game.name)


def lift_reduced_endo(game: NormalFormGame, endo: AffineEndo) -> AffineEndo:
    """Deviation on the 2x2 marginal square lifted to the product polytope."""
    if not game.is_2x2:
        raise DomainError("reduction applies to 2x2 games only")
    E = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
    f = np.array([0.0, 1.0, 0.0, 1.0])
    P = np.array([[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]])
    return AffineEndo(linear=E @ endo.linear @ P,
                      offset=E @ endo.offset + f)


def reduced_problem(game: NormalFormGame, epsilon) -> EVIProblem:
    op = reduced_2x2_field(game)
    return EVIProblem(polytope=op.domain, operator=op,
                      phi=PhiClass(variant="linear"), epsilon=epsilon,
                      name=f"{game.name}-reduced")


def mixed_profile_distribution(game: NormalFormGame, profiles, weights=None):
    """Distribution over mixed profiles given per-player strategy lists."""
    pts = []
    for profile in profiles:
        parts = [np.asarray(p, dtype=float) for p in profile]
        pts.append(np.concatenate(parts))
    k = len(pts)
    w = np.full(k, 1.0 / k) if weights is None else np.asarray(weights, dtype=float)
    return FiniteDistribution(support=np.array(pts), weights=w)


def pure_profile_distribution(game: NormalFormGame, profiles, weights=None):
    counts = game.action_counts
    mixed = []
    for prof in profiles:
        parts = []
        for i, a in enumerate(prof):
            e = np.zeros(counts[i])
            e[a] = 1.0
            parts.append(e)
        mixed.append(parts)
    return mixed_profile_distribution(game, mixed, weights)


def reduce_distribution(game: NormalFormGame, mu: FiniteDistribution):
    """Full-coordinate distribution -> first-action probabilities (2x2 only)."""
    if not game.is_2x2:
        raise DomainError("reduction applies to 2x2 games only")
    pts = mu.support[:, [0, 2]]
    return FiniteDistribution(support=pts, weights=mu.weights)


def lift_distribution(game: NormalFormGame, mu: FiniteDistribution):
    """First-action probabilities -> full mixed profiles (2x2 only)."""
    if not game.is_2x2:
        raise DomainError("reduction applies to 2x2 games only")
    p = mu.support[:, 0]
    q = mu.support[:, 1]
    pts = np.column_stack([p, 1.0 - p, q, 1.0 - q])
    return FiniteDistribution(support=pts, weights=mu.weights)


@dataclass
class PhiGapReport:
    mode: str
    per_player: np.ndarray = None
    total: float = None
    witness: object = None

    @property
    def per_player_clamped(self):
        return np.maximum(self.per_player, 0.0) if self.per_player is not None else None


def phi_gap(game: NormalFormGame, mu: FiniteDistribution, mode,
            cfg: ToleranceConfig = DEFAULT) -> PhiGapReport:
    """Deviation gaps of a distribution over mixed profiles.

    ``cce``: per-player best constant deviation (signed; can be negative).
    ``lce``: per-player best stochastic-matrix deviation of the own mixed
    strategy (always >= 0, identity included).
    ``alce``: single gap under joint affine deviations that may read all
    players' strategies, with the maximizing deviation as witness.
    """
    mode = mode.lower()
    if mode not in ("cce", "lce", "alce"):
        raise DomainError(f"unknown gap mode {mode!r}")
    prod, _, blocks = game.full_polytope()
    mu.validate_in(prod, cfg)

    if mode == "alce":
        if game.is_2x2:
            prob = reduced_problem(game, epsilon=1.0)
            res = evi_gap_linear(prob, reduce_distribution(game, mu), cfg)
        else:
            prob = full_problem(game, epsilon=1.0)
            res = evi_gap_linear(prob, mu, cfg)
        return PhiGapReport(mode="alce", total=res.raw, witness=res.deviation)

    base = [float(sum(w * game.expected_utility(i, x)
                      for w, x in zip(mu.weights, mu.support)))
            for i in range(game.n_players)]
    gaps = np.zeros(game.n_players)
    witnesses = []
    for i in range(game.n_players):
        grad = sum(w * game.utility_gradient(i, x)
                   for w, x in zip(mu.weights, mu.support))
        if mode == "cce":
            simplex = Polytope.simplex(game.action_counts[i])
            out = solve_lp(LinearProgram(objective=grad, lhs=simplex.A,
                                         rhs=simplex.b, direction="max"), cfg)
            gaps[i] = out.value - base[i]
            witnesses.append(out.primal)
        else:
            W = sum(w * np.outer(game.utility_gradient(i, x),
                                 game.split(x)[i])
                    for w, x in zip(mu.weights, mu.support))
            gaps[i], M = _best_stochastic_matrix(W, cfg)
            gaps[i] -= base[i]
            witnesses.append(M)
    return PhiGapReport(mode=mode, per_player=gaps, witness=witnesses)


def _best_stochastic_matrix(W, cfg):
    """max <M, W> over column-stochastic M: an LP over the simplex endomorphisms."""
    k = W.shape[0]
    n = k * k
    lhs = np.zeros((k, n))
    for col in range(k):
        lhs[col, col::k] = 1.0
    lp = LinearProgram(objective=W.reshape(-1), lhs=lhs, rhs=np.ones(k),
                       senses=["="] * k, bounds=[(0.0, None)] * n,
                       direction="max")
    out = solve_lp(lp, cfg)
    if not out.optimal:
        raise NumericalFailure(f"stochastic-matrix LP ended with {out.status}")
    return float(out.value), out.primal.reshape(k, k)


def average_cce_decomposition(game: NormalFormGame, mu: FiniteDistribution,
                              cfg: ToleranceConfig = DEFAULT):
    """(sum of per-player constant-deviation gains, the per-player vector).

    The sum equals the joint constant-deviation gap: a small total certifies
    only an average guarantee, individual players may still gain.
    """
    report = phi_gap(game, mu, "cce", cfg)
    return float(report.per_player.sum()), report.per_player


def polymatrix_zero_sum(pairs, n_players, action_counts, name="polymatrix",
                        rng_seed=0, samples=100):
    """Game from pairwise payoff matrices with A[j,i] = -A[i,j]^T.

    The gradient field is linear and pairs to zero with the profile; both
    facts are checked on random mixed profiles and recorded as problem flags.
    """
    mats = {}
    for (i, j), M in pairs.items():
        M = np.asarray(M, dtype=float)
        if M.shape != (action_counts[i], action_counts[j]):
            raise DimensionMismatch(f"pair ({i},{j}) matrix has wrong shape")
        mats[(i, j)] = M
        back = pairs.get((j, i))
        if back is not None and not np.allclose(np.asarray(back), -M.T,
                                                atol=1e-12):
            raise StructureViolation(f"pair ({j},{i}) is not the negated transpose")
        mats.setdefault((j, i), -M.T)

    tensors = []
    for i in range(n_players):
        u = np.zeros(tuple(action_counts))
        for j in range(n_players):
            if i == j or (i, j) not in mats:
                continue
            M = mats[(i, j)] if i < j else mats[(i, j)].T
            shape = [action_counts[k] if k in (i, j) else 1
                     for k in range(n_players)]
            u += M.reshape(shape)
        tensors.append(u)
    game = NormalFormGame(utilities=tensors, name=name, pairwise=mats)

    prod, factors, blocks = game.full_polytope()
    L = np.zeros((prod.dim, prod.dim))
    for (i, j), M in mats.items():
        lo_i, _ = blocks[i]
        lo_j, _ = blocks[j]
        L[lo_i: lo_i + action_counts[i], lo_j: lo_j + action_counts[j]] = -M
    rng = np.random.default_rng(rng_seed)
    for _ in range(samples):
        x = np.concatenate([rng.dirichlet(np.ones(c)) for c in action_counts])
        fx = L @ x
        want = np.concatenate([-game.utility_gradient(i, x)
                               for i in range(n_players)])
        if np.abs(fx - want).max() > 1e-9:
            raise StructureViolation("gradient field is not the pairwise linear map")
        if abs(fx @ x) > 1e-9:
            raise StructureViolation("self-pairing does not vanish on samples")
    return game


def polymatrix_problem(game: NormalFormGame, epsilon, phi="linear"):
    """Full-coordinate problem with verified linear-field and zero-pairing flags."""
    if game.pairwise is None:
        raise DomainError("not a polymatrix game")
    prod, factors, blocks = game.full_polytope()
    counts = game.action_counts
    L = np.zeros((prod.dim, prod.dim))
    for (i, j), M in game.pairwise.items():
        lo_i, _ = blocks[i]
        lo_j, _ = blocks[j]
        L[lo_i: lo_i + counts[i], lo_j: lo_j + counts[j]] = -M
    op = Operator.affine(prod, L, np.zeros(prod.dim))
    phi_class = PhiClass(variant="linear") if phi == "linear" else \
        PhiClass(variant="product_linear", blocks=blocks)
    return EVIProblem(polytope=prod, operator=op, phi=phi_class,
                      factors=factors, epsilon=epsilon, name=game.name,
                      linear_field=True, zero_self_pairing=True)


@dataclass
class MarginalRegionScan:
    """Feasibility verdicts for first-action marginal targets of a 2x2 game."""

    resolution: float
    epsilon_region: float
    support_grid: np.ndarray
    points: np.ndarray          # scanned (p, q) targets
    verdicts: list              # feasible | infeasible | boundary | unknown
    game: str = "game"

    def verdict_at(self, p, q):
        idx = np.argmin(np.abs(self.points - np.array([p, q])).max(axis=1))
        if np.abs(self.points[idx] - np.array([p, q])).max() > 1e-9:
            raise DomainError("target not on the scanned grid")
        return self.verdicts[idx]

    def cells(self, kind):
        mask = [v == kind for v in self.verdicts]
        return self.points[np.array(mask, dtype=bool)]

    def feasible_cells(self):
        mask = [v in ("feasible", "boundary") for v in self.verdicts]
        return self.points[np.array(mask, dtype=bool)]

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("p,q,verdict\n")
            for (p, q), v in zip(self.points, self.verdicts):
                fh.write(f"{float(p)!r},{float(q)!r},{v}\n")

    def to_svg(self, path, markers=(), curve=None, size=480):
        """Axis-aligned cell heat map with optional point markers and overlay curve."""
        h = self.resolution
        cell = size * h
        colors = {"feasible": "#4a90d9", "boundary": "#9bc4e8",
                  "infeasible": "#f2f2f2", "unknown": "#e8c36a"}
        rows = [f'<svg xmlns="http://www.w3.org/2000/svg" '
                f'width="{size + 40}" height="{size + 40}" '
                f'viewBox="-20 -20 {size + 40} {size + 40}">']
        rows.append(f'<rect x="0" y="0" width="{size}" height="{size}" '
                    f'fill="white" stroke="black"/>')
        for (p, q), v in zip(self.points, self.verdicts):
            x = p * size - cell / 2
            y = (1.0 - q) * size - cell / 2
            rows.append(f'<rect x="{x:.2f}" y="{y:.2f}" width="{cell:.2f}" '
                        f'height="{cell:.2f}" fill="{colors[v]}"/>')
        if curve is not None:
            pts = []
            for p in np.linspace(0.0, 1.0, 257):
                q = curve(p)
                if q is not None and 0.0 <= q <= 1.0:
                    pts.append(f"{p * size:.2f},{(1.0 - q) * size:.2f}")
            if pts:
                rows.append(f'<polyline points="{" ".join(pts)}" fill="none" '
                            f'stroke="#c0392b" stroke-width="1.5"/>')
        for (p, q) in markers:
            rows.append(f'<circle cx="{p * size:.2f}" cy="{(1.0 - q) * size:.2f}" '
                        f'r="4" fill="black"/>')
        rows.append("</svg>")
        with open(path, "w") as fh:
            fh.write("\n".join(rows))


def marginal_feasible(game: NormalFormGame, target, epsilon_region=1e-6,
                      support_grid=None, cfg: ToleranceConfig = DEFAULT):
    """Is there a lattice-supported distribution with these first-action
    marginals whose joint-affine-deviation gap is at most epsilon_region?

    The robust inner minimum over deviations is dualized, giving a single
    feasibility LP in (weights, dual variables).
    """
    if not game.is_2x2:
        raise DomainError("region machinery applies to 2x2 games only")
    op = reduced_2x2_field(game)
    X = op.domain
    if support_grid is None:
        support_grid = _lattice(21)
    S = support_grid
    fields = [op.evaluate(s, check_domain=False) for s in S]
    sysd = deviation_dual_system(X, list(S), fields)
    T = sysd["n_w"]
    n_cols = sysd["value"].shape[0]

    head = np.zeros((3, n_cols))
    head[0, :T] = 1.0
    head[1, :T] = S[:, 0]
    head[2, :T] = S[:, 1]
    value_row = -sysd["value"].reshape(1, -1)
    lhs = np.vstack([head, sysd["eq_lhs"], value_row, sysd["ineq_lhs"]])
    rhs = np.zeros(lhs.shape[0])
    rhs[0] = 1.0
    rhs[1] = float(target[0])
    rhs[2] = float(target[1])
    rhs[3 + sysd["eq_lhs"].shape[0]] = epsilon_region
    senses = ["="] * (3 + sysd["eq_lhs"].shape[0]) \
        + ["<="] * (1 + sysd["ineq_lhs"].shape[0])
    bounds = [(0.0, None)] * T + sysd["yu_bounds"]
    out = solve_lp(LinearProgram(objective=np.zeros(n_cols), lhs=lhs, rhs=rhs,
                                 senses=senses, bounds=bounds), cfg)
    if out.status == "optimal":
        return True
    if out.status == "infeasible":
        return False
    raise NumericalFailure(f"region LP ended with status {out.status}")


def _lattice(k):
    axis = np.linspace(0.0, 1.0, k)
    return np.array([(p, q) for p in axis for q in axis])


def region_scan(game: NormalFormGame, resolution=0.05, epsilon_region=1e-6,
                support_points=21, cfg: ToleranceConfig = DEFAULT):
    """Grid scan of achievable marginals; cells that fail their LP solve are
    marked unknown, never silently feasible."""
    if not game.is_2x2:
        raise DomainError("region machinery applies to 2x2 games only")
    k = int(round(1.0 / resolution)) + 1
    axis = np.linspace(0.0, 1.0, k)
    grid = _lattice(support_points)
    points = np.array([(p, q) for p in axis for q in axis])
    verdicts = []
    for p, q in points:
        try:
            ok = marginal_feasible(game, (p, q), epsilon_region, grid, cfg)
            verdicts.append("feasible" if ok else "infeasible")
        except NumericalFailure:
            verdicts.append("unknown")

    # relabel feasible cells that touch infeasible ones as boundary
    verd = np.array(verdicts, dtype=object).reshape(k, k)
    for i in range(k):
        for j in range(k):
            if verd[i, j] != "feasible":
                continue
            neighbors = [(i + di, j + dj) for di, dj in
                         ((1, 0), (-1, 0), (0, 1), (0, -1))]
            for ni, nj in neighbors:
                if 0 <= ni < k and 0 <= nj < k and verd[ni, nj] == "infeasible":
                    verd[i, j] = "boundary"
                    break
    return MarginalRegionScan(resolution=resolution,
                              epsilon_region=epsilon_region,
                              support_grid=grid, points=points,
                              verdicts=list(verd.reshape(-1)), game=game.name)


def bos_conjectured_boundary(p):
    """Upper branch of the conjectured curved boundary of the scanned region
    for the Bach-or-Stravinsky instance; diagnostic only, never asserted."""
    disc = 121.0 - 310.0 * p + 225.0 * p * p
    if disc < 0.0:
        return None
    return (-11.0 + 25.0 * p + np.sqrt(disc)) / 20.0


def boundary_curve_distances(scan: MarginalRegionScan, curve):
    """Distance from each boundary-labelled cell to a sampled curve."""
    pts = scan.cells("boundary")
    if pts.size == 0:
        return np.zeros(0)
    samples = []
    for p in np.linspace(0.0, 1.0, 1025):
        q = curve(p)
        if q is not None and -0.05 <= q <= 1.05:
            samples.append((p, q))
    samples = np.array(samples)
    out = []
    for cell in pts:
        out.append(float(np.sqrt(((samples - cell) ** 2).sum(axis=1)).min()))
    return np.array(out)
