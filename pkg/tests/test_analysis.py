import numpy as np
import pytest

from evikit.analysis import (
    CheckReport,
    QuasarParams,
    SmoothnessParams,
    check_quasar,
    check_smoothness,
    local_phi_bound,
    mean_collapse,
    quartic_field,
    quartic_grad,
    quartic_welfare,
    welfare_bound,
)
from evikit.errors import DomainError, PreconditionUnverified
from evikit.evicore import EVIProblem, FiniteDistribution, Operator, PhiClass
from evikit.games import (
    bach_or_stravinsky,
    polymatrix_problem,
    polymatrix_zero_sum,
    reduced_problem,
)
from evikit.polytope import Polytope

QUARTIC_DOMAIN = np.linspace(-1.0, 2.0, 10_000)
MP = np.array([[1.0, -1.0], [-1.0, 1.0]])


def quartic_params(p):
    return SmoothnessParams(lam=1.0, nu=p / 4.0, welfare=quartic_welfare(p),
                            maximizer=[1.0])


@pytest.mark.parametrize("p", [1.0, 2.0, 4.0, 8.0])
def test_quartic_smoothness_grid(p):
    rep = check_smoothness(quartic_field(p), quartic_params(p), QUARTIC_DOMAIN)
    assert rep.passed
    assert rep.samples_checked == 10_000


def test_linear_case_equality():
    # u(x) = x on [0, 1] with x* = 1: the inequality is tight everywhere
    sp = SmoothnessParams(lam=1.0, nu=0.0, welfare=lambda x: float(np.atleast_1d(x)[0]),
                          maximizer=[1.0])
    rep = check_smoothness(lambda x: np.array([-1.0]), sp, np.linspace(0, 1, 101))
    assert rep.passed


def test_concave_quadratic_smoothness():
    sp = SmoothnessParams(lam=1.0, nu=0.0, welfare=lambda x: -float(np.atleast_1d(x)[0]) ** 2,
                          maximizer=[0.0])
    rep = check_smoothness(lambda x: np.array([2.0 * float(np.atleast_1d(x)[0])]),
                           sp, np.linspace(-1, 1, 101))
    assert rep.passed


def test_smoothness_flags_violations():
    sp = SmoothnessParams(lam=1.0, nu=0.0, welfare=lambda x: float(np.atleast_1d(x)[0]),
                          maximizer=[1.0])
    # wrong sign field violates immediately away from the maximizer
    rep = check_smoothness(lambda x: np.array([+10.0]), sp, np.linspace(0, 0.9, 10))
    assert not rep.passed
    assert rep.first_violation is not None


def test_welfare_bound_arithmetic():
    sp = SmoothnessParams(lam=1.0, nu=0.0, welfare=lambda x: 1.0, maximizer=[0.0])
    bound, _, _ = welfare_bound(FiniteDistribution.point_mass([0.0]), sp, 0.0)
    assert bound == pytest.approx(1.0)

    sp = SmoothnessParams(lam=0.5, nu=1.0, welfare=lambda x: 10.0 if True else 0,
                          maximizer=[0.0])
    bound, _, _ = welfare_bound(FiniteDistribution.point_mass([0.0]), sp, 0.2)
    assert bound == pytest.approx(2.4)


def test_quartic_welfare_bound_is_tight_at_saddle():
    p = 4.0
    sp = quartic_params(p)
    assert sp.welfare(sp.maximizer) == pytest.approx(1.0 + p / 4.0)
    bound, expected, ok = welfare_bound(FiniteDistribution.point_mass([0.0]), sp, 0.0)
    assert bound == pytest.approx(1.0)
    assert expected == pytest.approx(1.0)
    assert ok


def test_quasar_examples():
    qp = QuasarParams(gamma=1.0, maximizer=[0.0])
    rep = check_quasar(lambda x: -float(np.atleast_1d(x)[0]) ** 2,
                       lambda x: np.array([-2.0 * float(np.atleast_1d(x)[0])]),
                       qp, np.linspace(-1, 1, 101))
    assert rep.passed

    rep = check_quasar(lambda x: float(np.atleast_1d(x)[0]),
                       lambda x: np.array([1.0]),
                       QuasarParams(gamma=1.0, maximizer=[1.0]),
                       np.linspace(0, 1, 51))
    assert rep.passed


@pytest.mark.parametrize("p", [1.0, 4.0])
@pytest.mark.parametrize("gamma", [1.0, 0.5, 0.1])
def test_quartic_never_quasar_concave(p, gamma):
    qp = QuasarParams(gamma=gamma, maximizer=[1.0])
    rep = check_quasar(quartic_welfare(p), quartic_grad(p), qp, [[0.0]])
    assert not rep.passed
    np.testing.assert_allclose(rep.first_violation, [0.0])
    # a flat gradient at the interior saddle cannot certify the global max
    rep = check_quasar(quartic_welfare(p), quartic_grad(p), qp, QUARTIC_DOMAIN[::10])
    assert not rep.passed


def test_quasar_implies_smoothness_embedding(rng):
    samples = np.linspace(-1, 1, 101)
    for gamma in (1.0, 0.7, 0.3):
        value = lambda x: -float(np.atleast_1d(x)[0]) ** 2
        grad = lambda x: np.array([-2.0 * float(np.atleast_1d(x)[0])])
        q = check_quasar(value, grad, QuasarParams(gamma=gamma, maximizer=[0.0]),
                         samples)
        assert q.passed
        sp = SmoothnessParams(lam=gamma, nu=gamma - 1.0, welfare=value,
                              maximizer=[0.0])
        s = check_smoothness(lambda x: -grad(x), sp, samples)
        assert s.passed


def test_quasar_collapse_bound():
    # concave u = -x^2 on [-1, 1], gamma = 1: E u >= u(x*) - eps / gamma
    X = Polytope.box([-1.0], [1.0])
    op = Operator.affine(X, [[2.0]], [0.0])  # F = -grad u = 2x
    prob = EVIProblem(polytope=X, operator=op, phi=PhiClass(variant="constants"),
                      epsilon=0.01)
    mu = FiniteDistribution.uniform([[-0.05], [0.05]])
    from evikit.evicore import evi_gap_constants
    eps = evi_gap_constants(prob, mu).raw
    value = lambda x: -float(np.atleast_1d(x)[0]) ** 2
    expected = sum(w * value(x) for w, x in zip(mu.weights, mu.support))
    assert expected >= value(np.array([0.0])) - eps / 1.0 - 1e-9


def test_mean_collapse_exact_on_matching_pennies():
    game = polymatrix_zero_sum({(0, 1): MP}, 2, [2, 2], name="mp")
    prob = polymatrix_problem(game, epsilon=1e-3)
    mu = FiniteDistribution.uniform([[1.0, 0.0, 0.0, 1.0], [0.0, 1.0, 1.0, 0.0]])
    res = mean_collapse(prob, mu)
    assert not res.advisory
    assert res.mean_vi_gap <= res.distribution_gap + 1e-6
    np.testing.assert_allclose(res.mean_point, [0.5, 0.5, 0.5, 0.5], atol=1e-12)


def test_mean_collapse_advisory_on_bos():
    prob = reduced_problem(bach_or_stravinsky(), epsilon=1e-3)
    mu = FiniteDistribution.uniform([[0.0, 0.0], [1.0, 1.0]])
    with pytest.warns(PreconditionUnverified):
        res = mean_collapse(prob, mu)
    assert res.advisory
    # for BoS the collapse genuinely fails: the mean of two pure equilibria
    # is far from equilibrium even though the mixture has zero gap
    assert res.distribution_gap <= 1e-9
    assert res.mean_vi_gap >= 0.5 - 1e-9


def test_mean_collapse_point_mass():
    game = polymatrix_zero_sum({(0, 1): MP}, 2, [2, 2], name="mp")
    prob = polymatrix_problem(game, epsilon=1e-3)
    mu = FiniteDistribution.point_mass([0.5, 0.5, 0.5, 0.5])
    res = mean_collapse(prob, mu)
    assert res.mean_vi_gap == pytest.approx(0.0, abs=1e-9)


def test_local_phi_bound_values():
    assert local_phi_bound(0.01, 0.1, 1.0, 2.0) == pytest.approx(0.011)
    assert local_phi_bound(0.3, 0.0, 2.0, 5.0) == 0.0
    assert local_phi_bound(0.0, 0.2, 1.0, 0.0) == 0.0
    with pytest.raises(DomainError):
        local_phi_bound(0.01, 0.1, 0.0, 2.0)
    with pytest.raises(DomainError):
        local_phi_bound(-0.01, 0.1, 1.0, 2.0)


def test_check_report_serialization():
    rep = CheckReport(passed=False, samples_checked=3,
                      first_violation=np.array([0.0]), violation_margin=0.5)
    data = rep.to_dict()
    assert data["passed"] is False
    assert data["first_violation"] == [0.0]
