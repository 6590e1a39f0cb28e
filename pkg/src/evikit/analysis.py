"""Structural certificates: smoothness, quasar-concavity, and collapses.

These are sample-based checks (grid plus vertices, never symbolic): a
certificate records the sample set it was verified on.  The welfare bound
turns a verified smoothness certificate plus a solution's gap into a lower
bound on expected welfare; the mean-collapse shortcut maps a solution of a
concave-pairing problem to a single point with the same gap guarantee.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from evikit.config import DEFAULT, ToleranceConfig
from evikit.errors import DomainError, PreconditionUnverified
from evikit.evicore import EVIProblem, FiniteDistribution, evi_gap_constants
from evikit.polytope import vi_gap

CHECK_TOL = 1e-9


@dataclass
class SmoothnessParams:
    """Welfare-linking parameters: <F(x), x* - x> <= -lam W(x*) + (nu + 1) W(x)."""

    lam: float
    nu: float
    welfare: object                 # callable x -> W(x)
    maximizer: np.ndarray = None    # x* attaining max W

    def __post_init__(self):
        if self.lam <= 0 or self.nu <= -1:
            raise DomainError("smoothness needs lam > 0 and nu > -1")
        if self.maximizer is not None:
            self.maximizer = np.atleast_1d(np.asarray(self.maximizer, dtype=float))

    @property
    def ratio(self):
        return self.lam / (1.0 + self.nu)


@dataclass
class QuasarParams:
    gamma: float
    maximizer: np.ndarray

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise DomainError("gamma must lie in (0, 1]")
        self.maximizer = np.atleast_1d(np.asarray(self.maximizer, dtype=float))


@dataclass
class CheckReport:
    """Outcome of a pointwise sample check."""

    passed: bool
    samples_checked: int
    first_violation: np.ndarray = None
    violation_margin: float = None
    params: dict = field(default_factory=dict)

    def to_dict(self):
        out = {"passed": self.passed, "samples_checked": self.samples_checked,
               "params": dict(self.params)}
        if self.first_violation is not None:
            out["first_violation"] = np.atleast_1d(self.first_violation).tolist()
            out["violation_margin"] = self.violation_margin
        return out


def _as_samples(samples):
    arr = np.asarray(samples, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    return arr


def check_smoothness(F, sp: SmoothnessParams, samples) -> CheckReport:
    """Verify the smoothness inequality at every sample (tolerance 1e-9)."""
    if sp.maximizer is None:
        raise DomainError("smoothness check needs the welfare maximizer")
    pts = _as_samples(samples)
    x_star = sp.maximizer
    w_star = float(sp.welfare(x_star))
    fn = F.evaluate if hasattr(F, "evaluate") else F
    for x in pts:
        wx = float(sp.welfare(x))
        if wx > w_star + CHECK_TOL:
            return CheckReport(passed=False, samples_checked=len(pts),
                               first_violation=x,
                               violation_margin=wx - w_star,
                               params={"reason": "maximizer not maximal"})
        fx = np.atleast_1d(fn(x))
        lhs = float(fx @ (x_star - x))
        rhs = -sp.lam * w_star + (sp.nu + 1.0) * wx
        if lhs > rhs + CHECK_TOL:
            return CheckReport(passed=False, samples_checked=len(pts),
                               first_violation=x, violation_margin=lhs - rhs,
                               params={"lam": sp.lam, "nu": sp.nu})
    return CheckReport(passed=True, samples_checked=len(pts),
                       params={"lam": sp.lam, "nu": sp.nu})


def check_quasar(value_fn, grad_fn, qp: QuasarParams, samples) -> CheckReport:
    """Verify u(x*) <= u(x) + (1/gamma) <grad u(x), x* - x> pointwise."""
    pts = _as_samples(samples)
    x_star = qp.maximizer
    u_star = float(value_fn(x_star))
    for x in pts:
        rhs = float(value_fn(x)) \
            + float(np.atleast_1d(grad_fn(x)) @ (x_star - x)) / qp.gamma
        if u_star > rhs + CHECK_TOL:
            return CheckReport(passed=False, samples_checked=len(pts),
                               first_violation=x, violation_margin=u_star - rhs,
                               params={"gamma": qp.gamma})
    return CheckReport(passed=True, samples_checked=len(pts),
                       params={"gamma": qp.gamma})


def welfare_bound(mu: FiniteDistribution, sp: SmoothnessParams, epsilon):
    """(lower bound, expected welfare, bound holds?) from a verified certificate.

    The bound is ``ratio * W(x*) - epsilon / (1 + nu)`` for any distribution
    whose constant-deviation gap is at most epsilon.
    """
    if sp.maximizer is None:
        raise DomainError("welfare bound needs the welfare maximizer")
    w_star = float(sp.welfare(sp.maximizer))
    bound = sp.ratio * w_star - epsilon / (1.0 + sp.nu)
    expected = float(sum(w * float(sp.welfare(x))
                         for w, x in zip(mu.weights, mu.support)))
    return bound, expected, expected >= bound - CHECK_TOL


@dataclass
class CollapseResult:
    mean_point: np.ndarray
    mean_vi_gap: float
    distribution_gap: float
    advisory: bool

    @property
    def collapse_holds(self):
        return self.mean_vi_gap <= self.distribution_gap + 1e-6


def _pairing_is_concave(problem: EVIProblem):
    """g(x) = <F(x), z - x> is concave for every z iff, for an affine field
    F(x) = M x + q, the symmetric part of M is positive semidefinite."""
    op = problem.operator
    if op.kind != "affine":
        return problem.linear_field and problem.zero_self_pairing
    sym = (op.matrix + op.matrix.T) / 2.0
    return bool(np.linalg.eigvalsh(sym).min() >= -1e-9)


def mean_collapse(problem: EVIProblem, mu: FiniteDistribution,
                  cfg: ToleranceConfig = DEFAULT) -> CollapseResult:
    """Mean of the distribution and its VI gap.

    When the pairing ``x -> <F(x), z - x>`` is concave (affine field with PSD
    symmetric part; zero-sum pairwise structure is the flagged special case)
    the mean provably inherits the constant-deviation gap.  Otherwise the
    numbers are still computed but flagged advisory and nothing is asserted.
    """
    mean = mu.mean()
    gap = evi_gap_constants(problem, mu, cfg).raw
    mean_gap = vi_gap(problem.polytope, problem.operator, mean, cfg)
    qualified = _pairing_is_concave(problem)
    if not qualified:
        warnings.warn("collapse precondition unverified; result is advisory",
                      PreconditionUnverified, stacklevel=2)
        return CollapseResult(mean_point=mean, mean_vi_gap=mean_gap,
                              distribution_gap=gap, advisory=True)
    if mean_gap > gap + 1e-6:
        raise DomainError(
            f"collapse violated on a qualified instance: {mean_gap:.3e} > {gap:.3e}")
    return CollapseResult(mean_point=mean, mean_vi_gap=mean_gap,
                          distribution_gap=gap, advisory=False)


def local_phi_bound(epsilon, delta, diameter, lipschitz):
    """Deviation benefit bound ``delta * epsilon / diameter + delta^2 L / 2``."""
    if diameter <= 0:
        raise DomainError("diameter must be positive")
    if min(epsilon, delta, lipschitz) < 0:
        raise DomainError("bound arguments must be nonnegative")
    return delta * epsilon / diameter + delta * delta * lipschitz / 2.0


def quartic_welfare(p):
    """The bump-with-saddle quartic u(x) = -(3/4) p x^4 + p x^3 + 1."""
    def u(x):
        x = float(np.atleast_1d(x)[0])
        return -0.75 * p * x ** 4 + p * x ** 3 + 1.0
    return u


def quartic_grad(p):
    def g(x):
        x = float(np.atleast_1d(x)[0])
        return np.array([3.0 * p * x * x * (1.0 - x)])
    return g


def quartic_field(p):
    """F = -grad u: the induced operator field (before Operator wrapping)."""
    def f(x):
        x = float(np.atleast_1d(x)[0])
        return np.array([3.0 * p * x * x * (x - 1.0)])
    return f
