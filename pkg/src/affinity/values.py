"""Domain types shared across the toolkit.

Attribute values come in three variants: signed 64-bit integers, non-empty
text, and an explicit Empty marker.  Variants never compare equal across
kinds: integer 4 is distinct from text ``"4"``, and Empty is distinct from
both.  In Python the variants are plain ``int``, plain ``str`` and the
:data:`EMPTY` singleton, which keeps node attribute maps cheap to build and
hash while preserving the distinction.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Union

from .errors import MalformedLine

I64_MIN = -(2**63)
I64_MAX = 2**63 - 1
U32_MAX = 2**32 - 1
U64_MAX = 2**64 - 1

ATTR_NAME_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")

# Characters that would break the line grammar; values containing them are
# rejected rather than escaped.
_FORBIDDEN = (";", ",", "\n", "\r")


@dataclass(frozen=True)
class Empty:
    """The distinguished empty attribute value (present, but valueless)."""

    def __repr__(self) -> str:  # pragma: no cover - cosmetic
        return "EMPTY"


EMPTY = Empty()

#: An attribute value: a signed 64-bit int, non-empty text, or EMPTY.
AttrValue = Union[int, str, Empty]


def value_tag(v: AttrValue) -> str:
    """Single-character wire tag for a value: ``i``, ``s`` or ``e``."""
    if isinstance(v, Empty):
        return "e"
    if isinstance(v, bool):  # bool is an int subclass; never a valid value
        raise TypeError("bool is not an attribute value")
    if isinstance(v, int):
        return "i"
    return "s"


def value_sort_key(v: AttrValue):
    """Total order over values: Empty, then integers, then text."""
    if isinstance(v, Empty):
        return (0, 0)
    if isinstance(v, int) and not isinstance(v, bool):
        return (1, v)
    return (2, v)


def format_value(v: AttrValue) -> str:
    """Render a value as ``tag:payload`` (``e:``, ``i:4``, ``s:x``)."""
    tag = value_tag(v)
    if tag == "e":
        return "e:"
    return f"{tag}:{v}"


def parse_value(token: str) -> AttrValue:
    """Decode a ``tag:payload`` token; raises :class:`MalformedLine`."""
    if len(token) < 2 or token[1] != ":":
        raise MalformedLine(f"bad value token {token!r}")
    tag, payload = token[0], token[2:]
    if tag == "e":
        if payload:
            raise MalformedLine(f"empty tag carries a payload: {token!r}")
        return EMPTY
    if tag == "i":
        try:
            n = int(payload, 10)
        except ValueError:
            raise MalformedLine(f"bad integer value {payload!r}") from None
        if not I64_MIN <= n <= I64_MAX:
            raise MalformedLine(f"integer value out of 64-bit range: {payload}")
        return n
    if tag == "s":
        if not payload:
            raise MalformedLine("text value must be non-empty (use the e: tag)")
        if any(ch in payload for ch in _FORBIDDEN):
            raise MalformedLine(f"text value contains a forbidden character: {payload!r}")
        return payload
    raise MalformedLine(f"unknown value tag {tag!r}")


def check_attr_name(name: str) -> str:
    if not ATTR_NAME_RE.match(name):
        raise MalformedLine(f"bad attribute name {name!r}")
    return name


@dataclass(frozen=True)
class Node:
    """A machine: unique id plus its attribute mapping."""

    node_id: str
    attributes: dict[str, AttrValue] = field(default_factory=dict)


class Op(Enum):
    """Raw constraint operators as they appear on the wire.

    GT and LE are accepted on ingest and rewritten by
    :func:`affinity.constraints.normalize`; after normalization only
    EQ, NE, LT and GE remain.
    """

    EQ = "EQ"
    NE = "NE"
    LT = "LT"
    LE = "LE"
    GT = "GT"
    GE = "GE"


#: Operators that survive normalization.
CANONICAL_OPS = frozenset({Op.EQ, Op.NE, Op.LT, Op.GE})

#: Operators that compare by integer order.
ORDER_OPS = frozenset({Op.LT, Op.LE, Op.GT, Op.GE})


@dataclass(frozen=True)
class RawConstraint:
    """One placement predicate on one attribute."""

    attribute: str
    op: Op
    value: AttrValue

    def render(self) -> str:
        return f"{self.attribute},{self.op.value},{format_value(self.value)}"


@dataclass(frozen=True)
class TaskSpec:
    """A task's resource request and raw constraint list."""

    job_id: int
    task_index: int
    cpu: float
    mem: float
    constraints: tuple[RawConstraint, ...] = ()

    @property
    def key(self) -> tuple[int, int]:
        return (self.job_id, self.task_index)


# --- trace events -------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class NodeAdd:
    timestamp: int
    node: Node


@dataclass(frozen=True, slots=True)
class NodeUpdate:
    """Replaces the node's full attribute mapping (not a merge)."""

    timestamp: int
    node: Node


@dataclass(frozen=True, slots=True)
class NodeRemove:
    timestamp: int
    node_id: str


@dataclass(frozen=True, slots=True)
class TaskSubmit:
    timestamp: int
    task: TaskSpec


@dataclass(frozen=True, slots=True)
class TaskUpdate:
    """Replaces the task's resources and constraint list."""

    timestamp: int
    task: TaskSpec


@dataclass(frozen=True, slots=True)
class TaskFinish:
    timestamp: int
    job_id: int
    task_index: int


NodeEvent = Union[NodeAdd, NodeUpdate, NodeRemove]
TaskEvent = Union[TaskSubmit, TaskUpdate, TaskFinish]
TraceEvent = Union[NodeEvent, TaskEvent]
