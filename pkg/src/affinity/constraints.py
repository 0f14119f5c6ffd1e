"""Constraint normalization, compaction and evaluation.

A task may carry several predicates on the same attribute.  Compaction
collapses them so each attribute keeps exactly one canonical operator:

* pure not-equals merge into a Not-Equal-Array;
* lower/upper bounds keep the tightest pair, merging into Between;
* an equality dominates everything consistent with it;
* contradictions raise :class:`Unsatisfiable` and the task is dropped.

Evaluation semantics (one value table used everywhere):

* order comparisons see an attribute's *numeric view*: an integer value is
  itself, an absent or empty attribute counts as 0, and a text value has no
  numeric view and fails every order comparison;
* not-equal against an **integer** also compares in the numeric view, so an
  absent or empty attribute fails ``!= 0`` (this is what makes collapsing
  ``>= 0`` with ``!= 0`` into ``>= 1`` exact);
* not-equal against text or empty, and every equality, compare the exact
  variant: equality requires the attribute to be present, not-equal passes
  for absent attributes.

Integer exclusions adjacent to a bound tighten it; strictly interior ones
(and an empty-exclusion while 0 stays in range) are kept on the compacted
range and checked at evaluation time, preserving the satisfying set.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Union

from .errors import TypeMismatch, Unsatisfiable
from .values import (
    CANONICAL_OPS,
    EMPTY,
    AttrValue,
    Empty,
    Node,
    Op,
    RawConstraint,
    format_value,
    value_sort_key,
)


class _Absent:
    __slots__ = ()

    def __repr__(self) -> str:  # pragma: no cover - cosmetic
        return "ABSENT"


#: Sentinel for "attribute not present on the node".
ABSENT = _Absent()


def numeric_view(value) -> Optional[int]:
    """Integer view of a node value; None when the value is text."""
    if value is ABSENT or isinstance(value, Empty):
        return 0
    if isinstance(value, int):
        return value
    return None


def _ne_violates(node_value, member: AttrValue) -> bool:
    """True when a node value conflicts with one not-equal member."""
    if isinstance(member, int):
        return numeric_view(node_value) == member
    if isinstance(member, Empty):
        return isinstance(node_value, Empty)
    return node_value == member


# --- compacted forms ----------------------------------------------------------

@dataclass(frozen=True, slots=True)
class Equal:
    attribute: str
    value: AttrValue

    def accepts(self, node_value) -> bool:
        return node_value is not ABSENT and node_value == self.value

    def label(self) -> str:
        return f"{self.attribute}|EQ|{format_value(self.value)}"


@dataclass(frozen=True, slots=True)
class NotEqualArray:
    attribute: str
    values: tuple[AttrValue, ...]  # sorted by (variant, value), duplicate-free

    def accepts(self, node_value) -> bool:
        for member in self.values:
            if _ne_violates(node_value, member):
                return False
        return True

    def label(self) -> str:
        body = ",".join(format_value(v) for v in self.values)
        return f"{self.attribute}|NEQ|{body}"


def _excl_suffix(exclusions: tuple[AttrValue, ...]) -> str:
    if not exclusions:
        return ""
    return "!" + ",".join(format_value(v) for v in exclusions)


@dataclass(frozen=True, slots=True)
class GreaterEqual:
    attribute: str
    lo: int
    exclusions: tuple[AttrValue, ...] = ()

    def accepts(self, node_value) -> bool:
        x = numeric_view(node_value)
        if x is None or x < self.lo:
            return False
        for member in self.exclusions:
            if _ne_violates(node_value, member):
                return False
        return True

    def label(self) -> str:
        return f"{self.attribute}|GE|i:{self.lo}{_excl_suffix(self.exclusions)}"


@dataclass(frozen=True, slots=True)
class LessThan:
    attribute: str
    hi: int
    exclusions: tuple[AttrValue, ...] = ()

    def accepts(self, node_value) -> bool:
        x = numeric_view(node_value)
        if x is None or x >= self.hi:
            return False
        for member in self.exclusions:
            if _ne_violates(node_value, member):
                return False
        return True

    def label(self) -> str:
        return f"{self.attribute}|LT|i:{self.hi}{_excl_suffix(self.exclusions)}"


@dataclass(frozen=True, slots=True)
class Between:
    attribute: str
    lo: int
    hi: int  # exclusive; lo < hi
    exclusions: tuple[AttrValue, ...] = ()

    def accepts(self, node_value) -> bool:
        x = numeric_view(node_value)
        if x is None or not self.lo <= x < self.hi:
            return False
        for member in self.exclusions:
            if _ne_violates(node_value, member):
                return False
        return True

    def label(self) -> str:
        return f"{self.attribute}|BW|{self.lo}:{self.hi}{_excl_suffix(self.exclusions)}"


CompactedConstraint = Union[Equal, NotEqualArray, GreaterEqual, LessThan, Between]


@dataclass(frozen=True)
class CompactedConstraintSet:
    """At most one compacted constraint per attribute, keyed and sorted by name."""

    entries: tuple[CompactedConstraint, ...]

    def __iter__(self):
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, attribute: str) -> CompactedConstraint:
        for c in self.entries:
            if c.attribute == attribute:
                return c
        raise KeyError(attribute)

    def attributes(self) -> tuple[str, ...]:
        return tuple(c.attribute for c in self.entries)

    def labels(self) -> tuple[str, ...]:
        return tuple(c.label() for c in self.entries)


EMPTY_SET = CompactedConstraintSet(())


# --- operations ----------------------------------------------------------------

def normalize(constraints: Iterable[RawConstraint]) -> list[RawConstraint]:
    """Rewrite strict/or-equal order operators onto the four canonical ones.

    ``> v`` becomes ``>= v+1`` and ``<= v`` becomes ``< v+1`` (integer
    order).  Order comparisons carrying text or empty values raise
    :class:`TypeMismatch`.
    """
    out: list[RawConstraint] = []
    for c in constraints:
        if c.op in (Op.EQ, Op.NE):
            out.append(c)
            continue
        if not isinstance(c.value, int) or isinstance(c.value, bool):
            raise TypeMismatch(
                f"{c.op.value} on {c.attribute} requires an integer value, "
                f"got {format_value(c.value)}"
            )
        if c.op is Op.GT:
            out.append(RawConstraint(c.attribute, Op.GE, c.value + 1))
        elif c.op is Op.LE:
            out.append(RawConstraint(c.attribute, Op.LT, c.value + 1))
        else:
            out.append(c)
    return out


def _zero_in_range(lo: Optional[int], hi: Optional[int]) -> bool:
    return (lo is None or lo <= 0) and (hi is None or hi > 0)


def _compact_attribute(attribute: str, group: list[RawConstraint]) -> CompactedConstraint:
    equals: list[AttrValue] = []
    nes: list[AttrValue] = []
    lo: Optional[int] = None
    hi: Optional[int] = None
    for c in group:
        if c.op is Op.EQ:
            if c.value not in equals:
                equals.append(c.value)
        elif c.op is Op.NE:
            if c.value not in nes:
                nes.append(c.value)
        elif c.op is Op.GE:
            lo = c.value if lo is None else max(lo, c.value)
        else:  # Op.LT
            hi = c.value if hi is None else min(hi, c.value)

    if equals:
        if len(equals) > 1:
            raise Unsatisfiable(f"{attribute}: conflicting equalities")
        v = equals[0]
        for member in nes:
            if _ne_violates(v, member):
                raise Unsatisfiable(f"{attribute}: equality excluded by not-equal")
        if lo is not None or hi is not None:
            x = numeric_view(v)
            if x is None:
                raise Unsatisfiable(f"{attribute}: text equality under an order bound")
            if (lo is not None and x < lo) or (hi is not None and x >= hi):
                raise Unsatisfiable(f"{attribute}: equality outside its bounds")
        return Equal(attribute, v)

    if lo is None and hi is None:
        members = tuple(sorted(nes, key=value_sort_key))
        return NotEqualArray(attribute, members)

    # Range with folded not-equals.  Text members are implied false by the
    # range; integer members outside it likewise.  Edge-adjacent integers
    # tighten the bound, interior ones stay as exclusions, and an empty
    # member survives only while 0 remains inside the range.
    int_members = {m for m in nes if isinstance(m, int) and not isinstance(m, bool)}
    has_empty_member = any(isinstance(m, Empty) for m in nes)
    changed = True
    while changed:
        changed = False
        int_members = {
            m
            for m in int_members
            if (lo is None or m >= lo) and (hi is None or m < hi)
        }
        if lo is not None and lo in int_members:
            int_members.discard(lo)
            lo += 1
            changed = True
        if hi is not None and hi - 1 in int_members:
            int_members.discard(hi - 1)
            hi -= 1
            changed = True
    if lo is not None and hi is not None and lo >= hi:
        raise Unsatisfiable(f"{attribute}: empty range")
    exclusions: list[AttrValue] = sorted(int_members)
    if has_empty_member and _zero_in_range(lo, hi):
        exclusions.insert(0, EMPTY)
    excl = tuple(exclusions)
    if lo is not None and hi is not None:
        return Between(attribute, lo, hi, excl)
    if lo is not None:
        return GreaterEqual(attribute, lo, excl)
    assert hi is not None
    return LessThan(attribute, hi, excl)


def compact(constraints: Iterable[RawConstraint]) -> CompactedConstraintSet:
    """Collapse normalized constraints to one operator per attribute.

    Raises :class:`Unsatisfiable` when some attribute's satisfying set is
    empty; callers drop such tasks with a warning.  Input must already be
    normalized (only EQ/NE/LT/GE).
    """
    groups: dict[str, list[RawConstraint]] = {}
    for c in constraints:
        if c.op not in CANONICAL_OPS:
            raise ValueError(f"compact() requires normalized input, got {c.op.value}")
        groups.setdefault(c.attribute, []).append(c)
    entries = tuple(
        _compact_attribute(attribute, group)
        for attribute, group in sorted(groups.items())
    )
    return CompactedConstraintSet(entries)


def compact_normalized(constraints: Iterable[RawConstraint]) -> CompactedConstraintSet:
    """Convenience: normalize then compact."""
    return compact(normalize(constraints))


def satisfies(node: Node, c: CompactedConstraint) -> bool:
    """Whether one node meets one compacted constraint (total function)."""
    return c.accepts(node.attributes.get(c.attribute, ABSENT))


def matches(node: Node, cs: CompactedConstraintSet) -> bool:
    """Conjunction over the set; the empty set matches every node."""
    attrs = node.attributes
    for c in cs.entries:
        if not c.accepts(attrs.get(c.attribute, ABSENT)):
            return False
    return True


def canonical_label(c: CompactedConstraint) -> str:
    """Injective text rendering, used as a dataset category."""
    return c.label()
