"""Solution engines for affine-deviation expected variational inequalities.

Two routes to an eps-approximate solution:

* ``solve_eah`` runs the central-cut ellipsoid method on the deliberately
  infeasible program "find an endomorphism phi with
  ``<F(x), phi(x) - x> <= -eps`` for every x" over (K, c)-space.  At each
  center the semi-separation oracle either cuts with a hyperplane separating
  the center from the endomorphism polytope, or hands back a fixed point
  whose violated constraint becomes the cut.  Once the ellipsoid volume
  drops below threshold, mixing weights over the collected fixed points are
  recovered from a single LP that dualizes the inner minimum over the
  endomorphism polytope.

* ``run_linear_swap_pgd`` plays the fixed point of a maintained deviation
  each round, feeds back the utility gradient, and updates by projected
  gradient ascent over the lifted endomorphism polytope; the uniform
  distribution over play has gap equal to the average regret.

Every report re-verifies its gaps through the independent LP oracles before
it is returned.
"""

import time
from dataclasses import dataclass, field

import numpy as np

import evikit
from evikit.config import DEFAULT, ToleranceConfig
from evikit.endomap import (
    AffineEndo,
    EndoBlocks,
    FixedPointResponse,
    endo_project,
    semi_separation,
)
from evikit.errors import (
    CertificateNotFound,
    DomainError,
    InvariantViolation,
    IterationCapExceeded,
    NumericalFailure,
)
from evikit.evicore import (
    EVIProblem,
    FiniteDistribution,
    evi_gap_constants,
    evi_gap_linear,
    evi_gap_product,
)
from evikit.linsolve import LinearProgram, solve_lp
from evikit.polytope import Polytope


def deviation_radius(X: Polytope):
    """Safe over-estimate of the (K, c)-space norm of any endomorphism of X."""
    R = X.outer_radius
    return float(np.sqrt(X.dim) * (R + 1.0) * (1.0 + max(1.0, R)))


@dataclass
class EahState:
    """Ellipsoid iterate over (K, c)-space with the cut history."""

    center: np.ndarray
    shape: np.ndarray
    logdet: float
    cuts: list = field(default_factory=list)   # (kind, normal, offset)
    responders: list = field(default_factory=list)
    iterations: int = 0

    def spd_ok(self):
        eig = np.linalg.eigvalsh((self.shape + self.shape.T) / 2.0)
        return bool(eig.min() > 0.0)


@dataclass
class SolveReport:
    """Verified solver output; gaps are recomputed by the evicore LPs."""

    method: str
    problem: str
    solution: FiniteDistribution
    gap_constants: float
    gap_linear: float
    gap_constants_raw: float
    gap_linear_raw: float
    epsilon: float
    certificate: np.ndarray
    iterations: int
    wall_time_s: float
    seed: int = 0
    cut_counts: dict = field(default_factory=dict)
    deviation_space_radius: float = None
    operator_bound: float = None
    support_size_cap: int = None
    retried_certificate: bool = False
    config_echo: dict = field(default_factory=dict)
    regret_trace: list = field(default_factory=list, repr=False)

    def to_dict(self, include_timing=True):
        out = {
            "library": {"name": "evikit", "version": evikit.__version__},
            "method": self.method,
            "problem": self.problem,
            "epsilon": self.epsilon,
            "solution": self.solution.to_dict(),
            "gaps": {
                "constants": self.gap_constants,
                "linear": self.gap_linear,
                "constants_raw": self.gap_constants_raw,
                "linear_raw": self.gap_linear_raw,
            },
            "certificate_weights": [float(v) for v in np.asarray(self.certificate)],
            "iterations": self.iterations,
            "seed": self.seed,
            "cut_counts": dict(self.cut_counts),
            "deviation_space_radius": self.deviation_space_radius,
            "operator_bound": self.operator_bound,
            "support_size_cap": self.support_size_cap,
            "retried_certificate": self.retried_certificate,
            "config": dict(self.config_echo),
        }
        if include_timing:
            out["wall_time_s"] = self.wall_time_s
        return out


def _ellipsoid_cut(state: EahState, normal, offset, n):
    """Deep cut ``<normal, y> <= offset`` removing the center; updates in place.

    Returns False when the halfspace misses the ellipsoid entirely (the
    remaining search region is empty).
    """
    P = state.shape
    g = np.asarray(normal, dtype=float)
    Pg = P @ g
    gPg = float(g @ Pg)
    if gPg <= 0.0:
        raise NumericalFailure("degenerate cut direction")
    gamma = np.sqrt(gPg)
    alpha = (float(g @ state.center) - float(offset)) / gamma
    if alpha >= 1.0:
        return False
    alpha = max(alpha, 0.0)
    tau = (1.0 + n * alpha) / (n + 1.0)
    delta = (n * n / (n * n - 1.0)) * (1.0 - alpha * alpha)
    sigma = 2.0 * (1.0 + n * alpha) / ((n + 1.0) * (1.0 + alpha))
    state.center = state.center - tau * Pg / gamma
    P_new = delta * (P - sigma * np.outer(Pg, Pg) / gPg)
    state.shape = (P_new + P_new.T) / 2.0
    state.logdet += n * np.log(delta) + np.log(1.0 - sigma)
    return True


def solve_eah(problem: EVIProblem, cfg: ToleranceConfig = DEFAULT,
              deep_cuts=True, seed=0) -> SolveReport:
    """Ellipsoid-against-hope solve for the affine-endomorphism class."""
    if problem.phi.variant != "linear":
        raise DomainError("solve_eah handles the affine-endomorphism class; "
                          "construct the problem with phi='linear'")
    X = problem.polytope
    if X.inner_radius is None or X.inner_radius <= 0.0:
        raise DomainError("ellipsoid solve needs a certified interior ball")
    if X.outer_radius > 1e6:
        raise DomainError("polytope is too badly scaled for the ellipsoid solve")
    t0 = time.perf_counter()

    d = X.dim
    n_y = d * d + d
    eps = problem.epsilon
    B = max(problem.operator.bound, 1e-12)
    R_y = deviation_radius(X)
    term_radius = min(eps / (B * (R_y + X.outer_radius + 1.0)), R_y / 2.0)
    log_term_volume = n_y * np.log(term_radius)
    cap = int(np.ceil(20.0 * n_y * n_y * max(np.log(R_y * B / eps), 1.0)))

    state = EahState(center=np.zeros(n_y), shape=R_y * R_y * np.eye(n_y),
                     logdet=2.0 * n_y * np.log(R_y))
    blocks = EndoBlocks(X)
    ger_points = []
    ger_fields = []
    n_sep = n_ger = 0
    exact_point = None

    while state.iterations < cap and 0.5 * state.logdet >= log_term_volume:
        endo = AffineEndo.unpack(state.center, d)
        response = semi_separation(X, endo, cfg)
        if isinstance(response, FixedPointResponse):
            x = response.point
            fx = problem.operator.evaluate(x)
            if float(np.linalg.norm(fx)) <= cfg.feas:
                exact_point = x
                break
            _record_ger(ger_points, ger_fields, x, fx)
            normal = np.concatenate([np.outer(fx, x).reshape(-1), fx])
            offset = (-eps if deep_cuts else 0.0) + float(fx @ x)
            kind = "GER"
            n_ger += 1
        else:
            sep = response.separator
            normal, offset = sep.normal, sep.offset
            kind = "SEP"
            n_sep += 1
        state.cuts.append((kind, normal, offset))
        state.iterations += 1
        if not _ellipsoid_cut(state, normal, offset, n_y):
            break
    else:
        if state.iterations >= cap:
            raise IterationCapExceeded(
                f"ellipsoid exceeded its iteration cap ({cap}) on {problem.name!r}")

    if exact_point is not None:
        mu = FiniteDistribution.point_mass(exact_point)
        lam = np.array([1.0])
        retried = False
    else:
        if not ger_points:
            raise CertificateNotFound(
                "ellipsoid terminated without collecting any responses")
        lam, value, retried = _certificate_with_retry(
            X, ger_points, ger_fields, eps, cfg)
        keep = lam > 1e-12
        mu = FiniteDistribution(support=np.array(ger_points)[keep],
                                weights=lam[keep] / lam[keep].sum())

    lin = evi_gap_linear(problem, mu, cfg)
    con = evi_gap_constants(problem, mu, cfg)
    if lin.raw > eps * (1.0 + 1e-6) + cfg.gap:
        raise CertificateNotFound(
            f"re-verified gap {lin.raw:.3e} exceeds target {eps:.3e}")
    return SolveReport(
        method="eah",
        problem=problem.name,
        solution=mu,
        gap_constants=con.value, gap_linear=lin.value,
        gap_constants_raw=con.raw, gap_linear_raw=lin.raw,
        epsilon=eps,
        certificate=lam,
        iterations=state.iterations,
        wall_time_s=time.perf_counter() - t0,
        seed=seed,
        cut_counts={"SEP": n_sep, "GER": n_ger},
        deviation_space_radius=R_y,
        operator_bound=B,
        support_size_cap=1 + d * (d + 1),
        retried_certificate=retried,
        config_echo={"deep_cuts": deep_cuts, "feas": cfg.feas, "gap": cfg.gap,
                     "iteration_cap": cap},
    )


def _record_ger(points, fields, x, fx, tol=1e-12):
    for p in points:
        if np.abs(p - x).max() <= tol:
            return
    points.append(x.copy())
    fields.append(fx.copy())


def _certificate_with_retry(X, points, fields, eps, cfg):
    lam, value = extract_certificate_lp(X, points, fields, cfg)
    if value >= -eps * (1.0 + 1e-9):
        return lam, value, False
    tight = cfg.tightened()
    lam, value = extract_certificate_lp(X, points, fields, tight)
    if value >= -eps * (1.0 + 1e-9):
        return lam, value, True
    raise CertificateNotFound(
        f"mixing-weight program reached {value:.3e}, needs >= {-eps:.3e}")


def deviation_dual_system(X: Polytope, points, fields):
    """Dual-feasibility rows certifying a lower bound on the inner minimum.

    For weight variables w over responder points, the value
    ``min over endomorphisms of sum_t w_t <F_t, K x_t + c - x_t>`` equals
    ``-b @ u - sum_t w_t <F_t, x_t>`` maximized over (Y, u) subject to the
    rows returned here.  Column order is [w (T) | Y (m*d) | u (m)].

    Returns a dict with equality rows (stationarity in K and c), inequality
    rows (nonnegativity of the eliminated witness multipliers), the value
    coefficients, and the variable bounds for (Y, u).
    """
    A, b = X.A, X.b
    m, d = A.shape
    T = len(points)
    P = np.asarray(points, dtype=float).reshape(T, d)
    F = np.asarray(fields, dtype=float).reshape(T, d)

    # stationarity in K: A^T Y + sum_t w_t F_t x_t^T = 0   (d*d rows)
    eq_K = np.zeros((d * d, T + m * d + m))
    eq_K[:, :T] = np.einsum("ti,tj->ijt", F, P).reshape(d * d, T)
    eq_K[:, T: T + m * d] = np.kron(A.T, np.eye(d))
    # stationarity in c: A^T u + sum_t w_t F_t = 0   (d rows)
    eq_c = np.zeros((d, T + m * d + m))
    eq_c[:, :T] = F.T
    eq_c[:, T + m * d:] = A.T
    # eliminated witness must stay nonnegative: Y A^T - u b^T <= 0  (m*m rows)
    ineq = np.zeros((m * m, T + m * d + m))
    ineq[:, T: T + m * d] = np.kron(np.eye(m), A)
    ineq[:, T + m * d:] = -np.kron(np.eye(m), b.reshape(-1, 1))

    value = np.zeros(T + m * d + m)
    value[:T] = -np.einsum("ti,ti->t", F, P)
    value[T + m * d:] = -b
    return {
        "eq_lhs": np.vstack([eq_K, eq_c]),
        "ineq_lhs": ineq,
        "value": value,
        "yu_bounds": [(None, None)] * (m * d) + [(0.0, None)] * m,
        "n_w": T,
    }


def extract_certificate_lp(X: Polytope, points, fields,
                           cfg: ToleranceConfig = DEFAULT):
    """Best mixing weights over responder points.

    Maximizes ``min over endomorphisms of sum_t lam_t <F_t, K x_t + c - x_t>``
    by dualizing the inner minimum over the lifted endomorphism polytope,
    giving one LP in (lam, Y, u).  Returns (lam, achieved value).
    """
    T = len(points)
    if T == 0:
        raise CertificateNotFound("no responder points to mix")
    sysd = deviation_dual_system(X, points, fields)
    n_cols = sysd["value"].shape[0]

    simplex_row = np.zeros(n_cols)
    simplex_row[:T] = 1.0
    lhs = np.vstack([simplex_row, sysd["eq_lhs"], sysd["ineq_lhs"]])
    rhs = np.zeros(lhs.shape[0])
    rhs[0] = 1.0
    senses = ["="] * (1 + sysd["eq_lhs"].shape[0]) \
        + ["<="] * sysd["ineq_lhs"].shape[0]
    bounds = [(0.0, None)] * T + sysd["yu_bounds"]

    out = solve_lp(LinearProgram(objective=sysd["value"], lhs=lhs, rhs=rhs,
                                 senses=senses, bounds=bounds, direction="max"),
                   cfg)
    if not out.optimal:
        raise CertificateNotFound(
            f"mixing-weight program ended with status {out.status}")
    lam = np.maximum(out.primal[:T], 0.0)
    lam = lam / lam.sum()
    return lam, float(out.value)


def extract_certificate(points, problem: EVIProblem,
                        cfg: ToleranceConfig = DEFAULT):
    """Mixing weights for explicit responder points of a problem."""
    fields = [problem.operator.evaluate(np.asarray(p, dtype=float))
              for p in points]
    pts = [np.asarray(p, dtype=float) for p in points]
    return extract_certificate_lp(problem.polytope, pts, fields, cfg)


@dataclass
class RegretTraceRow:
    round: int
    instantaneous: float
    average_gap: float


def run_linear_swap_pgd(problem: EVIProblem, rounds, cfg: ToleranceConfig = DEFAULT,
                        step_size=None, checkpoints=None, seed=0) -> SolveReport:
    """Swap-regret minimization by projected gradient over deviations.

    Plays ``x_t`` = fixed point of the current deviation, pays
    ``<F(x_t), phi(x_t) - x_t>`` (zero by construction), feeds the utility
    gradient ``(F x^T, F)``, and projects back onto the lifted endomorphism
    polytope.  The uniform distribution over play is returned with its
    re-verified gap; its average regret and gap coincide by definition.
    """
    if rounds < 1:
        raise DomainError("rounds must be >= 1")
    if problem.phi.variant not in ("linear", "product_linear"):
        raise DomainError("swap-regret solve needs an affine deviation class")
    t0 = time.perf_counter()
    X = problem.polytope
    d = X.dim

    if problem.phi.variant == "linear":
        parts = [(X, (0, d))]
    else:
        parts = list(zip(problem.factors, problem.phi.blocks))
    R_y = deviation_radius(X)
    B = max(problem.operator.bound, 1e-12)
    G_bound = B * (X.outer_radius + 1.0)
    eta = step_size if step_size is not None else 2.0 * R_y / (G_bound * np.sqrt(rounds))

    states = []
    for factor, _ in parts:
        blk = EndoBlocks(factor)
        states.append({"blocks": blk, "endo": AffineEndo.identity(factor.dim),
                       "warm": None})

    if checkpoints is None:
        checkpoints = sorted({int(c) for c in
                              np.unique(np.geomspace(1, rounds, 10).astype(int))})
    checkpoints = sorted(set(checkpoints) | {rounds})

    plays = []
    trace = []
    zero_self_payoff = 0.0
    last_avg = np.nan
    for t in range(1, rounds + 1):
        full = _assemble_full_endo(problem, parts, states, d)
        x = _block_fixed_point(X, full, cfg)
        fx = problem.operator.evaluate(x)
        inst = float(fx @ (full.apply(x) - x))
        zero_self_payoff += inst
        plays.append(x)

        for (factor, (lo, hi)), st in zip(parts, states):
            # descend the pairing <F, phi(x) - x>: the worst deviation makes it
            # most negative, and average regret then matches the gap LP
            grad_K = np.outer(fx[lo:hi], x[lo:hi])
            grad_c = fx[lo:hi]
            stepped = AffineEndo(linear=st["endo"].linear - eta * grad_K,
                                 offset=st["endo"].offset - eta * grad_c)
            proj = endo_project(factor, stepped, cfg, warm=st["warm"],
                                blocks=st["blocks"])
            st["endo"] = proj.endo
            st["warm"] = proj

        if t in checkpoints:
            mu_t = FiniteDistribution.uniform(np.array(plays))
            last_avg = _verified_gap(problem, mu_t, cfg).raw
        trace.append(RegretTraceRow(round=t, instantaneous=inst,
                                    average_gap=last_avg))

    mu = FiniteDistribution.uniform(np.array(plays))
    lin = _verified_gap(problem, mu, cfg)
    con = evi_gap_constants(problem, mu, cfg)
    if abs(trace[-1].average_gap - lin.raw) > 1e-9 * (1.0 + abs(lin.raw)):
        raise InvariantViolation("final average regret disagrees with the gap LP")
    return SolveReport(
        method="pgd",
        problem=problem.name,
        solution=mu,
        gap_constants=con.value, gap_linear=max(lin.raw, 0.0),
        gap_constants_raw=con.raw, gap_linear_raw=lin.raw,
        epsilon=problem.epsilon,
        certificate=mu.weights,
        iterations=rounds,
        wall_time_s=time.perf_counter() - t0,
        seed=seed,
        cut_counts={"rounds": rounds},
        deviation_space_radius=R_y,
        operator_bound=B,
        support_size_cap=1 + d * (d + 1),
        config_echo={"eta": float(eta), "zero_self_payoff": zero_self_payoff,
                     "feas": cfg.feas, "gap": cfg.gap},
        regret_trace=trace,
    )


def _assemble_full_endo(problem, parts, states, d):
    if problem.phi.variant == "linear":
        return states[0]["endo"]
    K = np.zeros((d, d))
    c = np.zeros(d)
    for (factor, (lo, hi)), st in zip(parts, states):
        K[lo:hi, lo:hi] = st["endo"].linear
        c[lo:hi] = st["endo"].offset
    return AffineEndo(linear=K, offset=c)


def _block_fixed_point(X, endo, cfg):
    from evikit.endomap import fixed_point
    return fixed_point(X, endo, cfg)


def _verified_gap(problem, mu, cfg):
    if problem.phi.variant == "linear":
        return evi_gap_linear(problem, mu, cfg)
    return evi_gap_product(problem, mu, cfg)


def write_trace_csv(report: SolveReport, path):
    """Regret trace as CSV (round, instantaneous payoff, running average gap).

    The running average is re-evaluated at geometric checkpoints; rows between
    checkpoints carry the most recent evaluation.
    """
    with open(path, "w") as fh:
        fh.write("round,instantaneous_payoff,average_gap\n")
        for row in report.regret_trace:
            avg = "" if np.isnan(row.average_gap) else repr(row.average_gap)
            fh.write(f"{row.round},{row.instantaneous!r},{avg}\n")
