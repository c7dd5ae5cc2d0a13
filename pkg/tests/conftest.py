"""Shared fixtures: the counter-example, reference solutions, and the
deterministic random corpus of tiny instances used by the oracle tests."""

from __future__ import annotations

import math
import random

import pytest

from scarp.graph import Instance, make_instance
from scarp.solution import Route, make_solution
from scarp.structure import counterexample_instance

CORPUS_SEED = 9173


def tiny_corpus(count: int, seed: int = CORPUS_SEED, max_edges: int = 7,
                offset: int = 0) -> list[Instance]:
    """Random connected instances: 4-6 vertices, 3-6 required edges of
    integer demand, integer costs, at most three robots."""
    rng = random.Random(seed)
    out: list[Instance] = []
    total = offset + count
    while len(out) < total:
        n = rng.randint(4, 6)
        all_pairs = [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)]
        edges: set[tuple[int, int]] = set()
        verts = list(range(1, n + 1))
        rng.shuffle(verts)
        for k in range(1, n):
            a, b = verts[k], verts[rng.randrange(k)]
            edges.add((min(a, b), max(a, b)))
        m_target = rng.randint(max(3, n - 1), min(max_edges, len(all_pairs)))
        extra = [p for p in all_pairs if p not in edges]
        rng.shuffle(extra)
        while len(edges) < m_target and extra:
            edges.add(extra.pop())
        ordered = sorted(edges)
        n_req = rng.randint(3, min(6, len(ordered)))
        req_at = set(rng.sample(range(len(ordered)), n_req))
        rows = []
        total_demand = 0
        for k, (i, j) in enumerate(ordered):
            cost = rng.randint(1, 9)
            demand = rng.randint(1, 12) if k in req_at else 0
            total_demand += demand
            rows.append((i, j, float(cost), float(demand)))
        capacity = max(rng.randint(5, 15), math.ceil(total_demand / 3))
        out.append(make_instance(f"tiny{len(out):04d}", n, rows, float(capacity)))
    return out[offset:]


@pytest.fixture(scope="session")
def counterexample():
    return counterexample_instance()


def table1_solution(instance):
    """The known optimal incumbent of the counter-example (cost 7)."""
    idx = instance.edge_index()
    r1 = Route(0, (0, 1, 2, 0), {idx[(1, 2)]: 7.0, idx[(0, 2)]: 1.0})
    r2 = Route(1, (0, 1, 2, 3, 0),
               {idx[(0, 1)]: 1.0, idx[(1, 2)]: 5.0, idx[(2, 3)]: 1.0,
                idx[(0, 3)]: 1.0})
    return make_solution(instance, [r1, r2], "basic")


@pytest.fixture()
def table1(counterexample):
    return table1_solution(counterexample)
