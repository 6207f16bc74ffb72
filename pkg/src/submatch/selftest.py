"""Built-in verification suites behind the `selftest` CLI command."""

from __future__ import annotations

import numpy as np

from .exact import MatchBudget, is_subgraph
from .order import MarginConfig, intersection, margin_loss_value, violation
from .smallgraphs import brute_force_is_subgraph, small_catalog


def oracle_equivalence_suite(max_query: int, max_target: int) -> tuple[bool, str]:
    queries, targets = small_catalog(max_query, max_target)
    budget = MatchBudget(max_states=10_000_000, wall_timeout=60.0)
    checked = 0
    for q in queries:
        for t in targets:
            expected = brute_force_is_subgraph(q, t)
            got = is_subgraph(q, t, budget)
            if not got.is_decided or got.is_true != expected:
                return False, (
                    f"disagreement on query {q.edges()} vs target {t.edges()}: "
                    f"matcher={got}, brute force={expected}"
                )
            checked += 1
    return True, f"{checked} (query, target) pairs agree with brute force"


def geometry_suite(trials: int = 10_000, dim: int = 16, seed: int = 0) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    for _ in range(trials // 100):
        a = rng.uniform(0, 2, size=(100, dim))
        step1 = rng.uniform(0, 1, size=(100, dim))
        step2 = rng.uniform(0, 1, size=(100, dim))
        b = a + step1
        c = b + step2
        for i in range(100):
            # transitivity through constructed chains
            if violation(a[i], b[i]) != 0 or violation(b[i], c[i]) != 0:
                return False, "constructed chain not dominated"
            if violation(a[i], c[i]) != 0:
                return False, "transitivity violated"
            # anti-symmetry, contrapositive form
            x, y = a[i], b[i]
            if not np.array_equal(x, y):
                if violation(x, y) == 0 and violation(y, x) == 0:
                    return False, "anti-symmetry violated"
            # intersection is the greatest lower bound
            lo = np.minimum(a[i], b[i])
            below = np.maximum(0.0, lo - rng.uniform(0, 1, size=dim))
            if violation(below, a[i]) != 0 or violation(below, b[i]) != 0:
                return False, "lower-bound construction broken"
            if violation(below, intersection(a[i], b[i])) != 0:
                return False, "intersection is not an upper bound of lower bounds"
            if violation(intersection(a[i], b[i]), a[i]) != 0:
                return False, "intersection not dominated by its arguments"
    # loss sanity at the margin boundary
    cfg = MarginConfig(margin=1.0, threshold=0.5)
    if margin_loss_value(np.array([0.0]), np.array([1]), cfg) != 0.0:
        return False, "satisfied positive has nonzero loss"
    if margin_loss_value(np.array([1.0]), np.array([0]), cfg) != 0.0:
        return False, "satisfied negative has nonzero loss"
    return True, f"{trials} random nonnegative triples satisfy all order axioms"


def run_selftest(fast: bool = False) -> bool:
    suites = [
        (
            "oracle-equivalence",
            lambda: oracle_equivalence_suite(3 if fast else 4, 4 if fast else 5),
        ),
        ("order-geometry", lambda: geometry_suite(2_000 if fast else 10_000)),
    ]
    all_ok = True
    for name, runner in suites:
        ok, detail = runner()
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        all_ok = all_ok and ok
    return all_ok
