"""Shared test oracles and random generators.

The evaluators here are written independently of the library: raw
constraints are checked predicate by predicate against one value-semantics
table, so compaction and incremental counting can be verified against a
second implementation rather than against themselves.
"""

from __future__ import annotations

import numpy as np
import pytest

from affinity.values import EMPTY, Empty, Node, Op, RawConstraint

#: distinct absent marker for the oracle (never equal to any value)
ABS = object()


def _numeric(v):
    if v is ABS or isinstance(v, Empty):
        return 0
    if isinstance(v, int) and not isinstance(v, bool):
        return v
    return None


def raw_satisfies(attrs: dict, c: RawConstraint) -> bool:
    """Direct, per-predicate evaluation of one raw constraint."""
    v = attrs.get(c.attribute, ABS)
    if c.op is Op.EQ:
        return v is not ABS and v == c.value
    if c.op is Op.NE:
        if isinstance(c.value, int) and not isinstance(c.value, bool):
            n = _numeric(v)
            return n is None or n != c.value
        if isinstance(c.value, Empty):
            return not isinstance(v, Empty)
        return v != c.value
    n = _numeric(v)
    if n is None:
        return False
    if c.op is Op.LT:
        return n < c.value
    if c.op is Op.GE:
        return n >= c.value
    raise AssertionError(f"oracle got a non-normalized op {c.op}")


def raw_matches(attrs: dict, constraints) -> bool:
    return all(raw_satisfies(attrs, c) for c in constraints)


def probe_values(constraints):
    """Bounded probe set: mentioned values, integer neighbours, fresh ones."""
    probes = {ABS, EMPTY, "fresh-text"}
    for c in constraints:
        probes.add(c.value)
        if isinstance(c.value, int) and not isinstance(c.value, bool):
            probes.add(c.value - 1)
            probes.add(c.value + 1)
    return probes


def probe_satisfiable(constraints) -> bool:
    """Exhaustive satisfiability over the probe set, attribute by attribute."""
    by_attr: dict[str, list[RawConstraint]] = {}
    for c in constraints:
        by_attr.setdefault(c.attribute, []).append(c)
    for attr, group in by_attr.items():
        ok = False
        for v in probe_values(group):
            attrs = {} if v is ABS else {attr: v}
            if raw_matches(attrs, group):
                ok = True
                break
        if not ok:
            return False
    return True


ATTRS = ["A", "B", "C", "D"]
TEXTS = ["x", "y", "z", "ho"]
INTS = list(range(-3, 7))


def random_constraints(rng: np.random.Generator, max_attrs=3, max_per_attr=4):
    """A random normalized constraint list (EQ/NE/LT/GE only)."""
    out = []
    n_attrs = rng.integers(1, max_attrs + 1)
    for attr in rng.choice(ATTRS, size=n_attrs, replace=False):
        for _ in range(rng.integers(1, max_per_attr + 1)):
            roll = rng.random()
            if roll < 0.25:
                op = Op.EQ
                value = _random_value(rng)
            elif roll < 0.55:
                op = Op.NE
                value = _random_value(rng)
            elif roll < 0.775:
                op = Op.GE
                value = int(rng.choice(INTS))
            else:
                op = Op.LT
                value = int(rng.choice(INTS))
            out.append(RawConstraint(str(attr), op, value))
    return out


def _random_value(rng):
    roll = rng.random()
    if roll < 0.45:
        return int(rng.choice(INTS))
    if roll < 0.85:
        return str(rng.choice(TEXTS))
    return EMPTY


def random_node(rng: np.random.Generator, node_id: str) -> Node:
    """A node biased toward the values the constraint pool mentions."""
    attrs = {}
    for attr in ATTRS:
        roll = rng.random()
        if roll < 0.25:
            continue  # absent
        if roll < 0.35:
            attrs[attr] = EMPTY
        elif roll < 0.75:
            attrs[attr] = int(rng.choice(INTS))
        else:
            attrs[attr] = str(rng.choice(TEXTS))
    return Node(node_id, attrs)


def random_population(rng: np.random.Generator, n: int) -> list[Node]:
    """Same distribution as random_node, drawn in bulk for speed."""
    rolls = rng.random((n, len(ATTRS)))
    int_picks = rng.integers(0, len(INTS), size=(n, len(ATTRS)))
    text_picks = rng.integers(0, len(TEXTS), size=(n, len(ATTRS)))
    nodes = []
    for i in range(n):
        attrs = {}
        for a, attr in enumerate(ATTRS):
            roll = rolls[i, a]
            if roll < 0.25:
                continue
            if roll < 0.35:
                attrs[attr] = EMPTY
            elif roll < 0.75:
                attrs[attr] = INTS[int_picks[i, a]]
            else:
                attrs[attr] = TEXTS[text_picks[i, a]]
        nodes.append(Node(f"n{i}", attrs))
    return nodes


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
