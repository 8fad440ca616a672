"""Solver correctness: frozen hand-enumerated values, an independent
brute-force reference, and seeded property sweeps."""

import itertools
import math

import numpy as np
import pytest

from shaplab import (
    AllDummyInconsistencyError,
    CoalitionGame,
    Attribution,
    EnumerationCapError,
    PrecedenceOrder,
    asymmetric_shapley,
    audit_axioms,
    equal_split_attribution,
    exact_shapley_permutations,
    exact_shapley_subsets,
    sampled_shapley,
)


def shapley_reference(table, n):
    """Independent oracle: average marginal contributions over permutations,
    written with explicit sets rather than bit tricks."""
    phi = [0.0] * n
    for perm in itertools.permutations(range(n)):
        seen = frozenset()
        for player in perm:
            before = sum(1 << p for p in seen)
            after = before | (1 << player)
            phi[player] += table[after] - table[before]
            seen = seen | {player}
    return [v / math.factorial(n) for v in phi]


def beetle_game():
    table = [1.0 if (m & 1 and (m & 0b010 or m & 0b100)) else 0.0 for m in range(8)]
    return CoalitionGame.from_table(table)


def random_game(rng, n):
    return CoalitionGame.from_table(rng.random(1 << n))


class TestExactSubsets:
    def test_symmetric_additive_game(self):
        g = CoalitionGame.from_table([0.0, 1.0, 1.0, 2.0])
        attr = exact_shapley_subsets(g)
        assert attr.values == (1.0, 1.0)
        assert attr.method == "exact-subset"

    def test_beetle_hand_enumeration(self):
        attr = exact_shapley_subsets(beetle_game())
        assert attr.values == pytest.approx((2 / 3, 1 / 6, 1 / 6), abs=1e-12)

    def test_dummy_players(self):
        table = [1.0 if m & 1 else 0.0 for m in range(8)]
        attr = exact_shapley_subsets(CoalitionGame.from_table(table))
        assert attr.values == (1.0, 0.0, 0.0)

    def test_matches_reference_oracle(self):
        rng = np.random.default_rng(11)
        for n in (2, 3, 4, 5):
            table = list(rng.random(1 << n))
            attr = exact_shapley_subsets(CoalitionGame.from_table(table))
            ref = shapley_reference(table, n)
            assert attr.values == pytest.approx(ref, abs=1e-12)

    def test_rejects_above_cap(self):
        g = CoalitionGame(26, lambda c: 0.0)
        with pytest.raises(EnumerationCapError):
            exact_shapley_subsets(g)

    def test_nonzero_base_value(self):
        g = CoalitionGame.from_table([5.0, 6.0, 7.0, 8.0])
        attr = exact_shapley_subsets(g)
        assert attr.base_value == 5.0
        assert attr.base_value + sum(attr.values) == pytest.approx(8.0, abs=1e-12)


class TestExactPermutations:
    def test_same_examples_as_subsets(self):
        for table in ([0.0, 1.0, 1.0, 2.0], [1.0 if m & 1 else 0.0 for m in range(8)]):
            subs = exact_shapley_subsets(CoalitionGame.from_table(table))
            perm = exact_shapley_permutations(CoalitionGame.from_table(table))
            assert perm.values == pytest.approx(subs.values, abs=1e-12)
        assert exact_shapley_permutations(beetle_game()).values == pytest.approx(
            (2 / 3, 1 / 6, 1 / 6), abs=1e-12
        )

    def test_random_5_player_cross_check(self):
        rng = np.random.default_rng(5)
        g1 = random_game(rng, 5)
        g2 = CoalitionGame.from_table(g1.table())
        assert exact_shapley_permutations(g1).values == pytest.approx(
            exact_shapley_subsets(g2).values, abs=1e-12
        )

    def test_single_player(self):
        attr = exact_shapley_permutations(CoalitionGame.from_table([0.0, 2.5]))
        assert attr.values == (2.5,)

    def test_rejects_above_cap(self):
        g = CoalitionGame(11, lambda c: 0.0)
        with pytest.raises(EnumerationCapError):
            exact_shapley_permutations(g)


class TestSampled:
    def test_zero_variance_game(self):
        g = CoalitionGame.from_table([0.0, 1.0, 1.0, 2.0])
        attr = sampled_shapley(g, 1000, seed=99)
        assert attr.values == pytest.approx((1.0, 1.0), abs=1e-9)

    def test_beetle_large_sample(self):
        attr = sampled_shapley(beetle_game(), 100_000, seed=3)
        assert attr.values == pytest.approx((2 / 3, 1 / 6, 1 / 6), abs=0.02)

    def test_random_8_player_within_std_errors(self):
        rng = np.random.default_rng(17)
        g = random_game(rng, 8)
        exact = exact_shapley_subsets(CoalitionGame.from_table(g.table()))
        attr = sampled_shapley(g, 200_000, seed=23)
        for est, true, se in zip(attr.values, exact.values, attr.diagnostics["std_errors"]):
            assert abs(est - true) < 5 * max(se, 1e-12)

    def test_deterministic_given_seed(self):
        g = beetle_game()
        a = sampled_shapley(g, 5000, seed=42)
        b = sampled_shapley(g, 5000, seed=42)
        assert a.values == b.values
        assert a.diagnostics == b.diagnostics
        c = sampled_shapley(g, 5000, seed=43)
        assert a.values != c.values

    def test_diagnostics_and_validation(self):
        attr = sampled_shapley(beetle_game(), 10, seed=0)
        assert attr.diagnostics["n_samples"] == 10
        assert attr.diagnostics["seed"] == 0
        assert len(attr.diagnostics["std_errors"]) == 3
        with pytest.raises(ValueError):
            sampled_shapley(beetle_game(), 0, seed=0)

    def test_single_permutation_telescopes(self):
        # one permutation still sums exactly to the centered grand value
        g = beetle_game()
        attr = sampled_shapley(g, 1, seed=4)
        assert sum(attr.values) == pytest.approx(g.grand_value - g.empty_value, abs=1e-12)
        assert attr.diagnostics["std_errors"] is None

    def test_large_player_fallback_path(self):
        # above the table limit the sampler walks the memo cache directly
        g = CoalitionGame(18, lambda c: float(c.size))
        attr = sampled_shapley(g, 50, seed=1)
        assert attr.values == pytest.approx([1.0] * 18, abs=1e-12)


class TestAsymmetric:
    def test_empty_order_equals_permutation_solver(self):
        rng = np.random.default_rng(7)
        for n in (2, 3, 5):
            g = random_game(rng, n)
            asym = asymmetric_shapley(g, PrecedenceOrder(n))
            perm = exact_shapley_permutations(CoalitionGame.from_table(g.table()))
            assert asym.values == perm.values  # identical enumeration path

    def test_redundancy_game_hand_average(self):
        table = [0.0] * 8
        for mask in (0b011, 0b101, 0b111):  # AB, AC, ABC
            table[mask] = 1.0
        g = CoalitionGame.from_table(table)
        attr = asymmetric_shapley(g, PrecedenceOrder(3, [(1, 2)]))
        assert attr.values == pytest.approx((2 / 3, 1 / 3, 0.0), abs=1e-12)
        assert attr.diagnostics["admissible_permutations"] == 3

    def test_additive_game_order_independent(self):
        coeffs = [0.5, -1.5, 2.0]
        table = [sum(c for j, c in enumerate(coeffs) if m >> j & 1) for m in range(8)]
        g = CoalitionGame.from_table(table)
        for edges in ([], [(0, 1)], [(0, 1), (1, 2)]):
            attr = asymmetric_shapley(CoalitionGame.from_table(table), PrecedenceOrder(3, edges))
            assert attr.values == pytest.approx(coeffs, abs=1e-12)

    def test_mismatched_players_rejected(self):
        with pytest.raises(ValueError):
            asymmetric_shapley(beetle_game(), PrecedenceOrder(4))

    def test_efficiency(self):
        rng = np.random.default_rng(31)
        g = random_game(rng, 5)
        attr = asymmetric_shapley(g, PrecedenceOrder(5, [(0, 3), (1, 2)]))
        assert attr.base_value + sum(attr.values) == pytest.approx(g.grand_value, abs=1e-9)


class TestEqualSplit:
    def test_linear_game_with_dummy(self):
        # expectation game of 2*x1 - x2 + 0*x3 at x=(1,3,5), zero means
        coeffs, x = [2.0, -1.0, 0.0], [1.0, 3.0, 5.0]
        table = [
            sum(c * v for j, (c, v) in enumerate(zip(coeffs, x)) if m >> j & 1)
            for m in range(8)
        ]
        attr = equal_split_attribution(CoalitionGame.from_table(table))
        assert attr.values == pytest.approx((-0.5, -0.5, 0.0), abs=1e-12)
        assert attr.method == "equal-split"
        assert attr.diagnostics["dummies"] == [2]

    def test_symmetric_game_coincides_with_shapley(self):
        attr = equal_split_attribution(CoalitionGame.from_table([0.0, 1.0, 1.0, 2.0]))
        assert attr.values == (1.0, 1.0)

    def test_single_carrier(self):
        table = [1.0 if m & 1 else 0.0 for m in range(8)]
        attr = equal_split_attribution(CoalitionGame.from_table(table))
        assert attr.values == (1.0, 0.0, 0.0)

    def test_all_dummy_inconsistency(self):
        eps = 1e-9
        table = [0.0, 0.9 * eps, 0.9 * eps, 1.8 * eps]
        with pytest.raises(AllDummyInconsistencyError):
            equal_split_attribution(CoalitionGame.from_table(table), dummy_tolerance=eps)

    def test_all_dummy_consistent_is_fine(self):
        attr = equal_split_attribution(CoalitionGame.from_table([0.0, 0.0, 0.0, 0.0]))
        assert attr.values == (0.0, 0.0)


class TestAuditAxioms:
    def test_exact_on_random_game_passes(self):
        rng = np.random.default_rng(19)
        g = random_game(rng, 6)
        report = audit_axioms(g, exact_shapley_subsets(g))
        assert report.efficiency_gap <= 1e-9
        assert report.max_symmetry_gap <= 1e-9
        assert report.max_dummy_gap <= 1e-9
        assert report.additivity_gap is None
        assert report.passes()

    def test_equal_split_satisfies_efficiency_symmetry_dummy(self):
        g = beetle_game()
        report = audit_axioms(g, equal_split_attribution(g))
        assert report.efficiency_gap <= 1e-9
        assert report.max_symmetry_gap <= 1e-9
        assert report.max_dummy_gap <= 1e-9

    def test_equal_split_breaks_additivity_on_constructed_pair(self):
        # beetle + carrier game: psi values (1/3,1/3,1/3) and (1,0,0) sum to
        # (4/3,1/3,1/3) while the sum game splits evenly to (2/3,2/3,2/3)
        v = beetle_game()
        w = CoalitionGame.from_table([1.0 if m & 1 else 0.0 for m in range(8)])
        report = audit_axioms(
            v, equal_split_attribution(v), other=(w, equal_split_attribution(w))
        )
        assert report.additivity_gap == pytest.approx(2 / 3, abs=1e-12)
        assert not report.passes()

    def test_exact_additivity_on_random_pair(self):
        rng = np.random.default_rng(23)
        v, w = random_game(rng, 5), random_game(rng, 5)
        report = audit_axioms(v, exact_shapley_subsets(v), other=(w, exact_shapley_subsets(w)))
        assert report.additivity_gap <= 1e-9
        assert report.passes()

    def test_zero_attribution_efficiency_gap(self):
        g = beetle_game()
        zeros = Attribution(base_value=0.0, values=(0.0, 0.0, 0.0), method="exact-subset")
        report = audit_axioms(g, zeros)
        assert report.efficiency_gap == pytest.approx(1.0, abs=1e-12)
        # M1 and M2 are game-symmetric with equal (zero) attributions
        assert report.max_symmetry_gap == 0.0

    def test_symmetry_violation_reported(self):
        g = CoalitionGame.from_table([0.0, 1.0, 1.0, 2.0])
        skew = Attribution(base_value=0.0, values=(1.5, 0.5), method="exact-subset")
        report = audit_axioms(g, skew)
        assert report.symmetry_violations == ((0, 1, 1.0),)
        assert not report.passes()

    def test_dummy_violation_reported(self):
        table = [1.0 if m & 1 else 0.0 for m in range(4)]
        g = CoalitionGame.from_table(table)
        bad = Attribution(base_value=0.0, values=(0.9, 0.1), method="exact-subset")
        report = audit_axioms(g, bad)
        assert report.dummy_violations == ((1, 0.1),)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            audit_axioms(beetle_game(), Attribution(0.0, (1.0,), "exact-subset"))


class TestProperties:
    """Seeded sweeps over random table games."""

    def test_solver_equivalence_sweep(self):
        rng = np.random.default_rng(101)
        for k in range(100):
            n = 2 + k % 7
            g = random_game(rng, n)
            subs = exact_shapley_subsets(g)
            perm = exact_shapley_permutations(CoalitionGame.from_table(g.table()))
            assert max(abs(a - b) for a, b in zip(subs.values, perm.values)) <= 1e-12

    def test_efficiency_sweep(self):
        rng = np.random.default_rng(103)
        for k in range(50):
            n = 2 + k % 7
            g = random_game(rng, n)
            for attr in (
                exact_shapley_subsets(g),
                asymmetric_shapley(g, PrecedenceOrder(n, [(0, n - 1)])),
            ):
                assert abs(attr.base_value + sum(attr.values) - g.grand_value) <= 1e-9

    def test_symmetric_players_get_equal_values(self):
        rng = np.random.default_rng(107)
        for _ in range(20):
            n = 4
            base = rng.random(1 << n)
            # force players 0 and 1 interchangeable: value depends only on
            # the unordered pair membership pattern
            table = []
            for mask in range(1 << n):
                canonical = mask
                if (mask & 0b01) and not (mask & 0b10):
                    canonical = (mask & ~0b01) | 0b10
                table.append(base[canonical])
            attr = exact_shapley_subsets(CoalitionGame.from_table(table))
            assert abs(attr.values[0] - attr.values[1]) <= 1e-12

    def test_dummies_get_zero(self):
        rng = np.random.default_rng(109)
        for _ in range(20):
            n = 5
            base = rng.random(1 << (n - 1))
            # player n-1 is ignored entirely
            table = [base[mask & ((1 << (n - 1)) - 1)] for mask in range(1 << n)]
            attr = exact_shapley_subsets(CoalitionGame.from_table(table))
            assert abs(attr.values[n - 1]) <= 1e-12

    def test_additivity_sweep(self):
        rng = np.random.default_rng(113)
        for _ in range(20):
            n = 5
            tv, tw = rng.random(1 << n), rng.random(1 << n)
            pv = exact_shapley_subsets(CoalitionGame.from_table(tv)).values
            pw = exact_shapley_subsets(CoalitionGame.from_table(tw)).values
            ps = exact_shapley_subsets(CoalitionGame.from_table(tv + tw)).values
            assert max(abs(a + b - s) for a, b, s in zip(pv, pw, ps)) <= 1e-9

    def test_sampling_unbiasedness_pooled(self):
        rng = np.random.default_rng(127)
        g = random_game(rng, 6)
        exact = exact_shapley_subsets(CoalitionGame.from_table(g.table())).values
        estimates, variances = [], []
        for seed in range(20):
            attr = sampled_shapley(g, 2000, seed=seed)
            estimates.append(attr.values)
            variances.append([se**2 for se in attr.diagnostics["std_errors"]])
        means = np.mean(estimates, axis=0)
        pooled_se = np.sqrt(np.sum(variances, axis=0)) / 20
        for m, t, se in zip(means, exact, pooled_se):
            assert abs(m - t) < 4 * se

    def test_memoization_bound_across_solvers(self):
        calls = []
        g = CoalitionGame(5, lambda c: calls.append(c.mask) or float(c.mask % 7))
        exact_shapley_subsets(g)
        exact_shapley_permutations(g)
        asymmetric_shapley(g, PrecedenceOrder(5, [(0, 1)]))
        equal_split_attribution(g)
        sampled_shapley(g, 500, seed=0)
        assert g.oracle_calls <= 2**5
        assert len(calls) == g.oracle_calls
