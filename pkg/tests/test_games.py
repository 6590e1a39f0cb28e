import itertools

import numpy as np
import pytest
from scipy.optimize import linprog

from evikit.endomap import endo_membership
from evikit.errors import DomainError, StructureViolation, TooLarge
from evikit.evicore import evi_gap_constants
from evikit.games import (
    NormalFormGame,
    average_cce_decomposition,
    bach_or_stravinsky,
    bos_conjectured_boundary,
    boundary_curve_distances,
    full_problem,
    game_gradient_field,
    lift_reduced_endo,
    marginal_feasible,
    mixed_profile_distribution,
    phi_gap,
    polymatrix_problem,
    polymatrix_zero_sum,
    pure_profile_distribution,
    reduced_2x2_field,
    reduced_problem,
    region_scan,
)

BOS = bach_or_stravinsky()
MP_MATRIX = np.array([[1.0, -1.0], [-1.0, 1.0]])

# uniform correlated play over (Bach,Bach), (Strav,Strav), (Bach,Strav)
CE_MU = pure_profile_distribution(BOS, [(0, 0), (1, 1), (0, 1)])


def ce_swap_oracle(game, mu):
    """Max utility gain over deterministic action-swap deviations, per player."""
    best = np.zeros(game.n_players)
    counts = game.action_counts
    for i in range(game.n_players):
        base = sum(w * game.expected_utility(i, x)
                   for w, x in zip(mu.weights, mu.support))
        for swap in itertools.product(range(counts[i]), repeat=counts[i]):
            val = 0.0
            for w, x in zip(mu.weights, mu.support):
                grad = game.utility_gradient(i, x)
                xi = game.split(x)[i]
                val += w * sum(xi[a] * grad[swap[a]] for a in range(counts[i]))
            best[i] = max(best[i], val - base)
    return best


def ce_marginal_feasible_oracle(game, target, tol=1e-9):
    """Correlated-equilibrium LP over pure profiles with marginal pins (scipy)."""
    u1, u2 = game.utilities
    n = 4  # profile order: (0,0), (0,1), (1,0), (1,1)
    profiles = [(0, 0), (0, 1), (1, 0), (1, 1)]
    rows = []
    for i, u in enumerate((u1, u2)):
        for a in range(2):
            for b in range(2):
                if a == b:
                    continue
                row = np.zeros(n)
                for k, prof in enumerate(profiles):
                    if prof[i] != a:
                        continue
                    other = prof[1 - i]
                    pair = (a, other) if i == 0 else (other, a)
                    swapped = (b, other) if i == 0 else (other, b)
                    row[k] = u[swapped] - u[pair]
                rows.append(row)
    A_ub = np.array(rows)
    A_eq = np.array([
        np.ones(n),
        [1.0, 1.0, 0.0, 0.0],    # P[player 1 plays action 0]
        [1.0, 0.0, 1.0, 0.0],    # P[player 2 plays action 0]
    ])
    b_eq = np.array([1.0, target[0], target[1]])
    res = linprog(np.zeros(n), A_ub=A_ub, b_ub=np.zeros(len(rows)) + tol,
                  A_eq=A_eq, b_eq=b_eq, bounds=[(0, None)] * n, method="highs")
    return res.status == 0


def test_bos_field_values():
    f = reduced_2x2_field(BOS)
    np.testing.assert_allclose(f.evaluate([0.6, 0.4]), [0.0, 0.0], atol=1e-12)
    np.testing.assert_allclose(f.evaluate([1.0, 1.0]), [-3.0, -2.0], atol=1e-12)

    joint = game_gradient_field(BOS)
    x = np.array([1.0, 0.0, 1.0, 0.0])
    fx = joint.evaluate(x)
    # reduced pairing matches the per-block gradient differences
    assert fx[0] - fx[1] == pytest.approx(-3.0)
    assert fx[2] - fx[3] == pytest.approx(-2.0)


def test_zero_game_field_vanishes():
    zero = NormalFormGame(utilities=[np.zeros((2, 2)), np.zeros((2, 2))],
                          name="zero")
    f = game_gradient_field(zero)
    assert f.bound == 0.0


def test_desk_scale_guard():
    with pytest.raises(TooLarge):
        NormalFormGame(utilities=[np.zeros((5, 5)), np.zeros((5, 5))])


def test_cce_gaps_zero_at_mixed_nash():
    nash = mixed_profile_distribution(BOS, [([0.6, 0.4], [0.4, 0.6])])
    rep = phi_gap(BOS, nash, "cce")
    assert np.abs(rep.per_player).max() <= 1e-9
    rep = phi_gap(BOS, nash, "lce")
    assert np.abs(rep.per_player).max() <= 1e-9
    rep = phi_gap(BOS, nash, "alce")
    assert abs(rep.total) <= 1e-9


def test_ce_mu_is_correlated_equilibrium():
    rep = phi_gap(BOS, CE_MU, "lce")
    assert rep.per_player.max() <= 1e-9
    oracle = ce_swap_oracle(BOS, CE_MU)
    assert oracle.max() <= 1e-9


def test_ce_mu_fails_joint_affine_deviations():
    rep = phi_gap(BOS, CE_MU, "alce")
    assert rep.total >= 4.0 / 3.0 - 1e-9
    # the LP witness dominates the hand-derived coordinate swap
    swap_value = 4.0 / 3.0
    assert rep.total >= swap_value - 1e-9
    np.testing.assert_allclose(rep.witness.linear, [[0.0, 1.0], [1.0, 0.0]],
                               atol=1e-7)
    lifted = lift_reduced_endo(BOS, rep.witness)
    prod, _, _ = BOS.full_polytope()
    assert endo_membership(prod, lifted).member


def test_gap_ordering_randomized(rng):
    for _ in range(25):
        u1 = rng.integers(-3, 4, size=(2, 2)).astype(float)
        u2 = rng.integers(-3, 4, size=(2, 2)).astype(float)
        game = NormalFormGame(utilities=[u1, u2], name="rand")
        profiles = [(rng.dirichlet(np.ones(2)), rng.dirichlet(np.ones(2)))
                    for _ in range(int(rng.integers(1, 4)))]
        mu = mixed_profile_distribution(game, profiles)
        cce = phi_gap(game, mu, "cce").per_player
        lce = phi_gap(game, mu, "lce").per_player
        alce = phi_gap(game, mu, "alce").total
        assert np.all(cce <= lce + 1e-9)
        assert np.all(lce >= -1e-9)
        assert lce.sum() <= alce + 1e-9


def test_lce_matches_column_stochastic_closed_form(rng):
    for _ in range(25):
        u1 = rng.normal(size=(2, 2))
        u2 = rng.normal(size=(2, 2))
        game = NormalFormGame(utilities=[u1, u2], name="rand")
        profiles = [(rng.dirichlet(np.ones(2)), rng.dirichlet(np.ones(2)))
                    for _ in range(2)]
        mu = mixed_profile_distribution(game, profiles)
        lce = phi_gap(game, mu, "lce").per_player
        for i in range(2):
            W = sum(w * np.outer(game.utility_gradient(i, x), game.split(x)[i])
                    for w, x in zip(mu.weights, mu.support))
            base = sum(w * game.expected_utility(i, x)
                       for w, x in zip(mu.weights, mu.support))
            closed = sum(W[:, col].max() for col in range(2)) - base
            assert lce[i] == pytest.approx(closed, abs=1e-8)


def test_average_cce_matches_joint_constant_gap():
    total, per = average_cce_decomposition(BOS, CE_MU)
    prob = full_problem(BOS, epsilon=1.0)
    joint = evi_gap_constants(prob, CE_MU)
    assert total == pytest.approx(joint.raw, abs=1e-9)
    assert np.maximum(per, 0.0).sum() >= per.max() - 1e-12


def test_average_cce_of_solver_output_stays_small():
    from evikit.games import lift_distribution
    from evikit.solvers import solve_eah
    prob = reduced_problem(BOS, epsilon=1e-3)
    rep = solve_eah(prob)
    mu_full = lift_distribution(BOS, rep.solution)
    _, per = average_cce_decomposition(BOS, mu_full)
    assert np.maximum(per, 0.0).sum() <= 1e-3 + 1e-9


def test_marginal_probes_match_figure():
    for target in ((0.0, 0.0), (1.0, 1.0), (0.6, 0.4)):
        assert marginal_feasible(BOS, target)
    assert not marginal_feasible(BOS, (5.0 / 7.0, 2.0 / 7.0))


def test_region_scan_nested_in_ce_region_and_refines():
    scan = region_scan(BOS, resolution=0.2)
    feas = scan.feasible_cells()
    assert len(feas) > 0
    for p, q in feas:
        assert ce_marginal_feasible_oracle(BOS, (p, q))
    # verdicts are stable under grid refinement at shared points
    fine = region_scan(BOS, resolution=0.1)
    for p, q in scan.points:
        coarse_verdict = scan.verdict_at(p, q) in ("feasible", "boundary")
        fine_verdict = fine.verdict_at(p, q) in ("feasible", "boundary")
        assert coarse_verdict == fine_verdict
    d = boundary_curve_distances(fine, bos_conjectured_boundary)
    assert d.size > 0  # diagnostic only, never asserted against the curve


def test_region_outputs(tmp_path):
    scan = region_scan(BOS, resolution=0.25)
    csv = tmp_path / "region.csv"
    svg = tmp_path / "region.svg"
    scan.to_csv(csv)
    scan.to_svg(svg, markers=[(0.0, 0.0), (0.6, 0.4), (1.0, 1.0)],
                curve=bos_conjectured_boundary)
    assert csv.read_text().startswith("p,q,verdict")
    assert "<svg" in svg.read_text()


def test_polymatrix_matching_pennies_checks(rng):
    game = polymatrix_zero_sum({(0, 1): MP_MATRIX}, 2, [2, 2],
                               name="matching-pennies")
    prob = polymatrix_problem(game, epsilon=1e-3)
    assert prob.linear_field and prob.zero_self_pairing
    for _ in range(100):
        x = np.concatenate([rng.dirichlet(np.ones(2)) for _ in range(2)])
        fx = prob.operator.evaluate(x)
        assert abs(fx @ x) <= 1e-9


def test_polymatrix_cycle_checks(rng):
    game = polymatrix_zero_sum(
        {(0, 1): MP_MATRIX, (1, 2): 2 * MP_MATRIX, (2, 0): 3 * MP_MATRIX},
        3, [2, 2, 2], name="cycle")
    prob = polymatrix_problem(game, epsilon=1e-3)
    for _ in range(100):
        x = np.concatenate([rng.dirichlet(np.ones(2)) for _ in range(3)])
        assert abs(prob.operator.evaluate(x) @ x) <= 1e-9
    assert sum(game.expected_utility(i, x) for i in range(3)) == pytest.approx(0.0, abs=1e-9)


def test_polymatrix_rejects_non_zero_sum():
    with pytest.raises(StructureViolation):
        polymatrix_zero_sum({(0, 1): MP_MATRIX, (1, 0): MP_MATRIX}, 2, [2, 2])


def test_game_json_round_trip():
    data = BOS.to_dict()
    back = NormalFormGame.from_dict(data)
    assert back.to_dict() == data


def test_reduced_problem_requires_2x2():
    game = NormalFormGame(utilities=[np.zeros((2, 3)), np.zeros((2, 3))])
    with pytest.raises(DomainError):
        reduced_problem(game, 0.1)
