"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with `pytest -v -s tests/test_acceptance.py` to see the lines as they
execute; tolerances are pinned here and never loosened at runtime.
"""

import subprocess
import sys
import time
from itertools import product
from pathlib import Path

import numpy as np

from shaplab import (
    CallableModel,
    Coalition,
    CoalitionGame,
    LinearModel,
    MARGINAL_JOINT,
    MultiplicativeModel,
    PRODUCT_OF_MARGINALS,
    PrecedenceOrder,
    SINGLE_REFERENCE,
    TabularDataset,
    ValueFunctionSpec,
    asymmetric_shapley,
    audit_axioms,
    build_conditional_game,
    build_interventional_game,
    exact_shapley_permutations,
    exact_shapley_subsets,
    generate_hybrids,
    indirect_influence_gap,
    linear_closed_form,
    ood_fraction,
    sampled_shapley,
)
from shaplab.scenarios import (
    run_adversarial_scenario,
    run_ood_figure_scenario,
    run_recourse_scenario,
)

REPO = Path(__file__).resolve().parent.parent


def report(criterion: str, passed: bool) -> None:
    print(f"[acceptance] {criterion}: {'PASS' if passed else 'FAIL'}")
    assert passed, criterion


def factorial_design(levels, d):
    return TabularDataset([f"x{j+1}" for j in range(d)], [list(c) for c in product(levels, repeat=d)])


def full_pass(data, model, x, seed=0):
    spec = ValueFunctionSpec(kind=MARGINAL_JOINT, n_samples=data.n_rows, seed=seed)
    return exact_shapley_subsets(build_interventional_game(model, data, x, spec))


def test_criterion_1_linear_closed_form():
    start = time.monotonic()
    ok = True
    rng = np.random.default_rng(1)
    for d in (2, 4, 8):
        data = factorial_design((-1.0, 1.0), d)
        model = LinearModel(float(rng.uniform(-1, 1)), rng.uniform(-2, 2, size=d))
        x = rng.uniform(-3, 3, size=d)
        attr = full_pass(data, model, x)
        closed = linear_closed_form(model, x, data.means())
        ok = ok and max(abs(a - c) for a, c in zip(attr.values, closed.values)) <= 1e-9
        ok = ok and abs(attr.base_value - closed.base_value) <= 1e-9
    elapsed = time.monotonic() - start
    report(f"criterion 1 (linear closed form, {elapsed:.2f}s)", ok and elapsed < 1.0)


def test_criterion_2_multiplicative_collapse():
    start = time.monotonic()
    ok = True
    cases = [
        ((-1.0, 1.0), 2, [1.0, 1.0]),
        ((-1.0, 1.0), 2, [1.0, -1.0]),
        ((-1.0, 1.0), 3, [-1.0, 1.0, 1.0]),
        ((-2.0, -1.0, 1.0, 2.0), 2, [2.0, -1.0]),  # unequal magnitudes
    ]
    for levels, d, x in cases:
        data = factorial_design(levels, d)
        model = MultiplicativeModel(d)
        game = build_conditional_game(model, data, x)
        off_grand = max(abs(game.value_mask(m)) for m in range((1 << d) - 1))
        ok = ok and off_grand <= 1e-12
        attr = exact_shapley_subsets(game)
        expected = model.score(x) / d
        ok = ok and max(abs(v - expected) for v in attr.values) <= 1e-9
    elapsed = time.monotonic() - start
    report(f"criterion 2 (multiplicative collapse, {elapsed:.2f}s)", ok and elapsed < 1.0)


def test_criterion_3_redundancy():
    start = time.monotonic()
    data3 = TabularDataset(["a", "b", "c"], [[a, b, b] for a, b in product((-1.0, 1.0), repeat=2)])
    data2 = factorial_design((-1.0, 1.0), 2)
    g3 = build_conditional_game(CallableModel(3, lambda r: r[0] * r[1]), data3, [1, 1, 1])
    g2 = build_conditional_game(MultiplicativeModel(2), data2, [1, 1])
    A, B, C = 1, 2, 4
    degeneracies = max(
        abs(g3.value_mask(B) - g3.value_mask(C)),
        abs(g3.value_mask(B) - g3.value_mask(B | C)),
        abs(g3.value_mask(A | B) - g3.value_mask(A | C)),
        abs(g3.value_mask(A | B) - g3.value_mask(A | B | C)),
    )
    phi3 = exact_shapley_subsets(g3).values
    phi2 = exact_shapley_subsets(g2).values
    reduced = max(
        abs(phi3[0] - (g3.marginal(0, 0) / 3 + 2 * g3.marginal(0, B | C) / 3)),
        abs(phi3[1] - (g3.marginal(1, 0) / 3 + g3.marginal(1, A) / 6)),
    )
    values_ok = (
        max(abs(p - e) for p, e in zip(phi3, (2 / 3, 1 / 6, 1 / 6))) <= 1e-12
        and max(abs(p - e) for p, e in zip(phi2, (0.5, 0.5))) <= 1e-12
    )
    margins_ok = (
        abs(phi2[1] - phi3[1]) >= 1 / 12
        and abs(phi2[1] - (phi3[1] + phi3[2])) >= 1 / 12
    )
    elapsed = time.monotonic() - start
    report(
        f"criterion 3 (redundancy, {elapsed:.2f}s)",
        degeneracies <= 1e-12 and reduced <= 1e-12 and values_ok and margins_ok and elapsed < 1.0,
    )


def test_criterion_4_asymmetric_quasivalue():
    start = time.monotonic()
    data3 = TabularDataset(["a", "b", "c"], [[a, b, b] for a, b in product((-1.0, 1.0), repeat=2)])
    data2 = factorial_design((-1.0, 1.0), 2)
    order = PrecedenceOrder(3, [(1, 2)])

    g3 = build_conditional_game(CallableModel(3, lambda r: r[0] * r[1]), data3, [1, 1, 1])
    asym = asymmetric_shapley(g3, order)
    descendant_ok = abs(asym.values[2]) <= 1e-12
    efficiency_ok = abs(asym.base_value + sum(asym.values) - g3.grand_value) <= 1e-9

    asym_add = asymmetric_shapley(
        build_conditional_game(CallableModel(3, lambda r: r[0] + r[1]), data3, [1, 1, 1]), order
    )
    phi2_add = exact_shapley_subsets(
        build_conditional_game(LinearModel(0.0, [1.0, 1.0]), data2, [1, 1])
    )
    additive_ok = (
        max(abs(a - b) for a, b in zip(asym_add.values[:2], phi2_add.values)) <= 1e-12
    )

    rng = np.random.default_rng(44)
    empty = PrecedenceOrder(6)
    reduction_gap = 0.0
    for _ in range(1000):
        game = CoalitionGame.from_table(rng.random(64))
        a = asymmetric_shapley(game, empty)
        s = exact_shapley_subsets(CoalitionGame.from_table(game.table()))
        reduction_gap = max(reduction_gap, max(abs(x - y) for x, y in zip(a.values, s.values)))
    elapsed = time.monotonic() - start
    report(
        f"criterion 4 (asymmetric quasivalue, reduction gap {reduction_gap:.2e}, {elapsed:.2f}s)",
        descendant_ok and efficiency_ok and additive_ok and reduction_gap <= 1e-12 and elapsed < 10.0,
    )


def test_criterion_5_recourse():
    start = time.monotonic()
    scenario = run_recourse_scenario(n_samples=100_000, seed=0)
    phi_claim = next(c for c in scenario.claims if "f(1) - mean(f)" in c.description)
    anti = next(c for c in scenario.claims if "f(2) < f(1)" in c.description)
    ok = abs(phi_claim.observed - 2.0) <= 0.05 and anti.passed and scenario.passed
    elapsed = time.monotonic() - start
    report(f"criterion 5 (recourse, phi={phi_claim.observed:.4f}, {elapsed:.2f}s)", ok and elapsed < 1.0)


def test_criterion_6_beetle():
    table = [1.0 if (m & 1 and (m & 0b010 or m & 0b100)) else 0.0 for m in range(8)]
    attr = exact_shapley_subsets(CoalitionGame.from_table(table))
    gap = max(abs(v - e) for v, e in zip(attr.values, (2 / 3, 1 / 6, 1 / 6)))
    report(f"criterion 6 (beetle game, gap {gap:.2e})", gap <= 1e-12)


def test_criterion_7_indirect_influence():
    proxy = TabularDataset(["a", "b"], [[0, 0], [1, 1]])
    model = LinearModel(0.0, [1.0, 0.0])
    x = [1.0, 1.0]
    conditional, interventional = indirect_influence_gap(model, proxy, x, 1)
    cond_ok = abs(conditional - 0.25) <= 1e-9 and interventional == 0.0
    specs = [
        ValueFunctionSpec(kind=MARGINAL_JOINT, n_samples=proxy.n_rows, seed=0),
        ValueFunctionSpec(kind=MARGINAL_JOINT, n_samples=1, seed=9),
        ValueFunctionSpec(kind=PRODUCT_OF_MARGINALS, n_samples=64, seed=9),
        ValueFunctionSpec(kind=SINGLE_REFERENCE, reference=(0.0, 0.0)),
    ]
    every_kind_zero = all(
        exact_shapley_subsets(build_interventional_game(model, proxy, x, spec)).values[1] == 0.0
        for spec in specs
    )
    report("criterion 7 (indirect influence)", cond_ok and every_kind_zero)


def test_criterion_8_out_of_distribution():
    rng = np.random.default_rng(2)
    base = rng.standard_normal((2000, 2))
    data = TabularDataset(["x1", "x2", "x3"], np.column_stack([base, base[:, 0] * base[:, 1]]))
    u = rng.standard_normal(2)
    x = [u[0], u[1], u[0] * u[1]]
    spec = ValueFunctionSpec(kind=MARGINAL_JOINT, n_samples=data.n_rows, seed=2)
    hybrids = generate_hybrids(data, x, Coalition.of([0, 1], 3), spec)
    engineered_ok = ood_fraction(data, hybrids, lambda v: abs(v[2] - v[0] * v[1]) <= 1e-9) == 1.0

    figure = run_ood_figure_scenario(rho=0.8, n=2000, seed=0)
    figure_ok = figure.passed

    adversarial = run_adversarial_scenario(seed=0)
    raw = next(c for c in adversarial.claims if "1 - mean(P)" in c.description and "unmasked" in c.description)
    masked = next(c for c in adversarial.claims if "under 0.02" in c.description)
    adversarial_ok = adversarial.passed and raw.passed and abs(masked.observed) <= 0.02

    report(
        f"criterion 8 (OOD: engineered, figure, adversarial |phi(P)|={masked.observed:.4f})",
        engineered_ok and figure_ok and adversarial_ok,
    )


def test_criterion_9_axiom_property_suite():
    start = time.monotonic()
    rng = np.random.default_rng(90)
    equivalence_gap = 0.0
    efficiency_gap = 0.0
    symmetry_gap = 0.0
    dummy_gap = 0.0
    additivity_gap = 0.0
    previous = {}
    count = 0
    for n in range(2, 9):
        for k in range(143):
            table = rng.random(1 << n)
            if k % 3 == 0:
                # plant an exactly symmetric pair (0,1)
                for mask in range(1 << n):
                    if (mask & 0b01) and not (mask & 0b10):
                        table[mask] = table[(mask & ~0b01) | 0b10]
            if k % 3 == 1:
                # plant an exact dummy (highest player)
                top = 1 << (n - 1)
                for mask in range(1 << n):
                    if mask & top:
                        table[mask] = table[mask & ~top]
            game = CoalitionGame.from_table(table)
            subs = exact_shapley_subsets(game)
            perm = exact_shapley_permutations(CoalitionGame.from_table(game.table()))
            equivalence_gap = max(
                equivalence_gap, max(abs(a - b) for a, b in zip(subs.values, perm.values))
            )
            efficiency_gap = max(
                efficiency_gap, abs(subs.base_value + sum(subs.values) - game.grand_value)
            )
            audit = audit_axioms(game, subs)
            symmetry_gap = max(symmetry_gap, audit.max_symmetry_gap)
            dummy_gap = max(dummy_gap, audit.max_dummy_gap)
            if n in previous:
                prev_game, prev_attr = previous[n]
                pair = audit_axioms(prev_game, prev_attr, other=(game, subs))
                additivity_gap = max(additivity_gap, pair.additivity_gap)
                del previous[n]
            else:
                previous[n] = (game, subs)
            count += 1

    sampled_game = CoalitionGame.from_table(np.random.default_rng(91).random(64))
    exact = exact_shapley_subsets(CoalitionGame.from_table(sampled_game.table())).values
    estimates, variances = [], []
    for seed in range(20):
        attr = sampled_shapley(sampled_game, 2000, seed=seed)
        estimates.append(attr.values)
        variances.append([se**2 for se in attr.diagnostics["std_errors"]])
    means = np.mean(estimates, axis=0)
    pooled = np.sqrt(np.sum(variances, axis=0)) / 20
    sampled_ok = all(abs(m - t) < 4 * se for m, t, se in zip(means, exact, pooled))

    elapsed = time.monotonic() - start
    ok = (
        count == 1001
        and equivalence_gap <= 1e-12
        and efficiency_gap <= 1e-9
        and symmetry_gap <= 1e-9
        and dummy_gap <= 1e-9
        and additivity_gap <= 1e-9
        and sampled_ok
        and elapsed < 60.0
    )
    report(
        "criterion 9 (axiom suite: "
        f"equiv {equivalence_gap:.1e}, eff {efficiency_gap:.1e}, sym {symmetry_gap:.1e}, "
        f"dummy {dummy_gap:.1e}, add {additivity_gap:.1e}, {elapsed:.1f}s)",
        ok,
    )


def test_criterion_10_determinism(tmp_path):
    outputs = []
    for run in ("first", "second"):
        out = tmp_path / run
        result = subprocess.run(
            [sys.executable, "-m", "shaplab", "scenario", "all", "--seed", "7", "--out", str(out)],
            capture_output=True,
            text=True,
            cwd=REPO,
        )
        assert result.returncode == 0, result.stderr
        outputs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    identical = outputs[0] == outputs[1]
    report(f"criterion 10 (determinism, {len(outputs[0])} report files)", identical)
