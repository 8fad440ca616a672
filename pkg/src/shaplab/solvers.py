"""Attribution solvers for coalition games.

Two exact routes (weighted-subset and permutation enumeration) cross-check each
other; a seeded Monte Carlo estimator, a precedence-constrained quasivalue and
an equal-split alternative cover the rest. Enumeration order is fixed, so
results are bitwise-deterministic for a given game and seed.
"""

from __future__ import annotations

from itertools import permutations
from math import factorial

import numpy as np

from .games import (
    Attribution,
    AxiomReport,
    CoalitionGame,
    CyclicPrecedenceError,
    EnumerationCapError,
    PERMUTATION_ENUMERATION_CAP,
    PrecedenceOrder,
    SUBSET_ENUMERATION_CAP,
)

# Above this player count the sampler stops materializing the full value table
# and walks permutations through the memo cache instead.
_SAMPLER_TABLE_LIMIT = 16


def _check_cap(game: CoalitionGame, cap: int, what: str) -> None:
    if game.n_players > cap:
        raise EnumerationCapError(
            f"{what} supports at most {cap} players, game has {game.n_players}"
        )


def exact_shapley_subsets(game: CoalitionGame) -> Attribution:
    """Exact Shapley values by the weighted-subset formula.

    Each player's value is ``sum_S |S|! (n-|S|-1)! / n! * (v(S+i) - v(S))``
    over the subsets S excluding the player. Supports up to
    ``SUBSET_ENUMERATION_CAP`` players; the memo table holds at most 2**n
    entries.
    """
    _check_cap(game, SUBSET_ENUMERATION_CAP, "exact_shapley_subsets")
    n = game.n_players
    table = game.table()
    fact_n = factorial(n)
    weights = [factorial(s) * factorial(n - s - 1) / fact_n for s in range(n)]
    phi = [0.0] * n
    for mask in range((1 << n) - 1):  # the full mask admits no joining player
        base = table[mask]
        w = weights[mask.bit_count()]
        for i in range(n):
            bit = 1 << i
            if not mask & bit:
                phi[i] += w * (table[mask | bit] - base)
    return Attribution(
        base_value=game.empty_value,
        values=tuple(phi),
        method="exact-subset",
        diagnostics={"coalitions": 1 << n},
    )


def _permutation_average(game: CoalitionGame, edges) -> tuple[list[float], int]:
    """Average marginal contributions over all permutations admitted by ``edges``.

    Shared by the permutation and asymmetric solvers so that an empty edge set
    reproduces the plain permutation result bit-for-bit.
    """
    n = game.n_players
    table = game.table()
    empty = table[0]
    phi = [0.0] * n
    count = 0
    edge_list = list(edges)
    for perm in permutations(range(n)):
        if edge_list:
            pos = [0] * n
            for idx, p in enumerate(perm):
                pos[p] = idx
            if any(pos[a] >= pos[d] for a, d in edge_list):
                continue
        count += 1
        mask = 0
        prev = empty
        for j in perm:
            mask |= 1 << j
            cur = table[mask]
            phi[j] += cur - prev
            prev = cur
    if count:
        inv = 1.0 / count
        phi = [x * inv for x in phi]
    return phi, count


def exact_shapley_permutations(game: CoalitionGame) -> Attribution:
    """Exact Shapley values by full permutation enumeration.

    Agrees with :func:`exact_shapley_subsets` to 1e-12 on every game; kept as
    an independent cross-check route. Capped at
    ``PERMUTATION_ENUMERATION_CAP`` players (n! permutations).
    """
    _check_cap(game, PERMUTATION_ENUMERATION_CAP, "exact_shapley_permutations")
    phi, count = _permutation_average(game, ())
    return Attribution(
        base_value=game.empty_value,
        values=tuple(phi),
        method="exact-permutation",
        diagnostics={"permutations": count},
    )


def asymmetric_shapley(game: CoalitionGame, order: PrecedenceOrder) -> Attribution:
    """Quasivalue averaging marginal contributions over admissible permutations only.

    A permutation is admissible when every precedence ancestor appears before
    its descendant; admissible permutations are weighted uniformly. With no
    edges this reduces exactly to the permutation-form Shapley value.
    """
    if order.n_players != game.n_players:
        raise ValueError("precedence order and game disagree on player count")
    _check_cap(game, PERMUTATION_ENUMERATION_CAP, "asymmetric_shapley")
    phi, count = _permutation_average(game, order.edges)
    if count == 0:  # unreachable for an acyclic order; defensive
        raise CyclicPrecedenceError(f"no admissible permutation for edges {sorted(order.edges)}")
    return Attribution(
        base_value=game.empty_value,
        values=tuple(phi),
        method="asymmetric",
        diagnostics={
            "admissible_permutations": count,
            "precedence_edges": sorted(order.edges),
        },
    )


def sampled_shapley(game: CoalitionGame, n_samples: int, seed: int) -> Attribution:
    """Monte Carlo Shapley estimate over uniformly drawn permutations.

    Unbiased for the permutation-form value; deterministic given ``seed``.
    Each sampled permutation contributes one marginal contribution per player,
    so per-player standard errors come straight from the sample variance and
    are reported in the diagnostics.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    n = game.n_players
    rng = np.random.default_rng(seed)
    if n <= _SAMPLER_TABLE_LIMIT:
        table = np.asarray(game.table())
        perms = rng.permuted(np.tile(np.arange(n), (n_samples, 1)), axis=1)
        prefix = np.bitwise_or.accumulate(1 << perms, axis=1)
        vals = table[prefix]
        prev = np.empty_like(vals)
        prev[:, 0] = table[0]
        prev[:, 1:] = vals[:, :-1]
        deltas = vals - prev
        sums = np.zeros(n)
        sumsq = np.zeros(n)
        np.add.at(sums, perms.ravel(), deltas.ravel())
        np.add.at(sumsq, perms.ravel(), (deltas * deltas).ravel())
    else:
        sums = np.zeros(n)
        sumsq = np.zeros(n)
        for _ in range(n_samples):
            perm = rng.permutation(n)
            mask = 0
            prev = game.empty_value
            for j in perm:
                mask |= 1 << int(j)
                cur = game.value_mask(mask)
                d = cur - prev
                sums[j] += d
                sumsq[j] += d * d
                prev = cur
    phi = sums / n_samples
    if n_samples > 1:
        var = np.maximum(sumsq - n_samples * phi * phi, 0.0) / (n_samples - 1)
        std_errors = [float(s) for s in np.sqrt(var / n_samples)]
    else:
        std_errors = None  # undefined from a single permutation
    return Attribution(
        base_value=game.empty_value,
        values=tuple(float(x) for x in phi),
        method="sampled",
        diagnostics={
            "n_samples": n_samples,
            "seed": seed,
            "std_errors": std_errors,
        },
    )


def _dummy_players(table: list[float], n: int, tolerance: float) -> list[bool]:
    """Exhaustive dummy detection: |v(S+i) - v(S)| <= tolerance for every S."""
    dummies = []
    for i in range(n):
        bit = 1 << i
        dummy = True
        for mask in range(1 << n):
            if mask & bit:
                continue
            if abs(table[mask | bit] - table[mask]) > tolerance:
                dummy = False
                break
        dummies.append(dummy)
    return dummies


class AllDummyInconsistencyError(ValueError):
    """Every player is a dummy yet the grand value differs from the empty value."""


def equal_split_attribution(game: CoalitionGame, dummy_tolerance: float = 1e-9) -> Attribution:
    """Alternative attribution satisfying Symmetry and Dummy but not Additivity.

    Exhaustively detected dummies receive their centered singleton value
    (zero up to the tolerance); everyone else splits the remaining grand value
    equally. Useful as the counterexample showing what the additivity axiom
    buys.
    """
    _check_cap(game, SUBSET_ENUMERATION_CAP, "equal_split_attribution")
    n = game.n_players
    table = game.table()
    dummies = _dummy_players(table, n, dummy_tolerance)
    empty = table[0]
    grand = table[(1 << n) - 1]
    values = [0.0] * n
    dummy_total = 0.0
    for i, is_dummy in enumerate(dummies):
        if is_dummy:
            values[i] = table[1 << i] - empty
            dummy_total += values[i]
    non_dummies = [i for i, d in enumerate(dummies) if not d]
    if not non_dummies:
        if abs(grand - empty) > dummy_tolerance:
            raise AllDummyInconsistencyError(
                f"all {n} players are dummies at tolerance {dummy_tolerance} "
                f"but v(D) - v(empty) = {grand - empty!r}"
            )
    else:
        share = (grand - empty - dummy_total) / len(non_dummies)
        for i in non_dummies:
            values[i] = share
    return Attribution(
        base_value=empty,
        values=tuple(values),
        method="equal-split",
        diagnostics={"dummy_tolerance": dummy_tolerance, "dummies": [i for i, d in enumerate(dummies) if d]},
    )


def _recompute_with_method(attribution: Attribution, game: CoalitionGame) -> Attribution:
    """Re-run the attribution's own method on another game (for additivity)."""
    method = attribution.method
    if method == "exact-permutation":
        return exact_shapley_permutations(game)
    if method == "equal-split":
        tol = attribution.diagnostics.get("dummy_tolerance", 1e-9)
        return equal_split_attribution(game, tol)
    if method == "sampled":
        d = attribution.diagnostics
        if "n_samples" in d and "seed" in d:
            return sampled_shapley(game, d["n_samples"], d["seed"])
    if method == "asymmetric":
        edges = attribution.diagnostics.get("precedence_edges")
        if edges is not None:
            return asymmetric_shapley(game, PrecedenceOrder(game.n_players, [tuple(e) for e in edges]))
    return exact_shapley_subsets(game)


def audit_axioms(
    game: CoalitionGame,
    attribution: Attribution,
    other: tuple[CoalitionGame, Attribution] | None = None,
    tolerance: float = 1e-9,
    profile_tolerance: float = 1e-12,
) -> AxiomReport:
    """Audit an attribution against the efficiency, symmetry, dummy and
    (optionally) additivity axioms.

    Symmetry and dummy are checked exhaustively against the game's marginal
    contributions: a pair is game-symmetric when the two players' marginals
    agree on every subset excluding both (to ``profile_tolerance``), and only
    such pairs can violate symmetry. When ``other`` supplies a second
    (game, attribution), the sum game is built by pointwise oracle addition
    and re-solved with the attributions' own method to measure the additivity
    gap.
    """
    n = game.n_players
    if attribution.n_players != n:
        raise ValueError("attribution length does not match the game")
    _check_cap(game, SUBSET_ENUMERATION_CAP, "audit_axioms")
    table = game.table()
    phi = attribution.values

    efficiency_gap = abs(attribution.base_value + sum(phi) - table[(1 << n) - 1])

    sym_violations = []
    max_sym_gap = 0.0
    for i in range(n):
        bi = 1 << i
        for j in range(i + 1, n):
            bj = 1 << j
            symmetric = True
            for mask in range(1 << n):
                if mask & (bi | bj):
                    continue
                if abs((table[mask | bi] - table[mask]) - (table[mask | bj] - table[mask])) > profile_tolerance:
                    symmetric = False
                    break
            if symmetric:
                gap = abs(phi[i] - phi[j])
                max_sym_gap = max(max_sym_gap, gap)
                if gap > tolerance:
                    sym_violations.append((i, j, gap))

    dummy_violations = []
    max_dummy_gap = 0.0
    for i, is_dummy in enumerate(_dummy_players(table, n, profile_tolerance)):
        if is_dummy:
            gap = abs(phi[i])
            max_dummy_gap = max(max_dummy_gap, gap)
            if gap > tolerance:
                dummy_violations.append((i, gap))

    additivity_gap = None
    if other is not None:
        other_game, other_attr = other
        if other_game.n_players != n or other_attr.n_players != n:
            raise ValueError("additivity pair does not match the game's player count")
        sum_game = CoalitionGame(
            n, lambda c: game.value(c) + other_game.value(c)
        )
        if attribution.method == other_attr.method:
            sum_attr = _recompute_with_method(attribution, sum_game)
        else:
            sum_attr = exact_shapley_subsets(sum_game)
        additivity_gap = max(
            abs(phi[i] + other_attr.values[i] - sum_attr.values[i]) for i in range(n)
        )

    return AxiomReport(
        efficiency_gap=efficiency_gap,
        symmetry_violations=tuple(sym_violations),
        dummy_violations=tuple(dummy_violations),
        additivity_gap=additivity_gap,
        max_symmetry_gap=max_sym_gap,
        max_dummy_gap=max_dummy_gap,
        tolerance=tolerance,
    )
