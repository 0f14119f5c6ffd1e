"""Trace file grammar: parsing, canonical serialization and stream reading.

Two CSV-like formats, UTF-8 with LF line endings and no quoting:

nodes trace
    header ``timestamp,event,node_id,attributes``; event is ADD, UPDATE or
    REMOVE; attributes are ``name=tag:value`` items joined by ``;`` where the
    tag is ``i`` (integer), ``s`` (text) or ``e`` (empty, payload omitted).
    REMOVE rows leave the attributes field empty.

tasks trace
    header ``timestamp,event,job_id,task_index,cpu,mem,constraints``; event
    is SUBMIT, UPDATE or FINISH; constraints are ``name,op,tag:value``
    triplets joined by ``;`` with op in EQ/NE/LT/LE/GT/GE.  FINISH rows leave
    cpu, mem and constraints empty.

Because the constraint triplets reuse the comma, the leading fields are
split with a bounded split and the final field owns the rest of the line.
Parsing is total: every line yields an event or a typed error, never a
crash.  Serialization emits the canonical form: attributes sorted by name,
constraints in input order.
"""

from __future__ import annotations

import math
from typing import Iterable, Iterator

from .errors import MalformedLine, NonMonotonicTimestamp, UnknownOperator, ValueOutOfRange
from .values import (
    U32_MAX,
    U64_MAX,
    Node,
    NodeAdd,
    NodeEvent,
    NodeRemove,
    NodeUpdate,
    Op,
    RawConstraint,
    TaskEvent,
    TaskFinish,
    TaskSpec,
    TaskSubmit,
    TaskUpdate,
    TraceEvent,
    check_attr_name,
    format_value,
    parse_value,
)

NODES_HEADER = "timestamp,event,node_id,attributes"
TASKS_HEADER = "timestamp,event,job_id,task_index,cpu,mem,constraints"

_NODE_ID_FORBIDDEN = (",", ";", "\n", "\r")


def _parse_timestamp(tok: str) -> int:
    try:
        ts = int(tok, 10)
    except ValueError:
        raise MalformedLine(f"bad timestamp {tok!r}") from None
    if not 0 <= ts <= U64_MAX:
        raise MalformedLine(f"timestamp out of range: {tok}")
    return ts


def _parse_uint(tok: str, limit: int, what: str) -> int:
    try:
        n = int(tok, 10)
    except ValueError:
        raise MalformedLine(f"bad {what} {tok!r}") from None
    if not 0 <= n <= limit:
        raise MalformedLine(f"{what} out of range: {tok}")
    return n


def parse_node_event(line: str) -> NodeEvent:
    """Decode one nodes-trace line.

    Attribute order in the input does not affect the resulting mapping;
    duplicate attribute names are rejected.
    """
    fields = line.split(",", 3)
    if len(fields) != 4:
        raise MalformedLine(f"expected 4 fields, got {len(fields)}")
    ts = _parse_timestamp(fields[0])
    tag = fields[1]
    node_id = fields[2]
    if not node_id or any(ch in node_id for ch in _NODE_ID_FORBIDDEN):
        raise MalformedLine(f"bad node id {node_id!r}")
    attrs_field = fields[3]
    if tag == "REMOVE":
        if attrs_field:
            raise MalformedLine("REMOVE rows must leave attributes empty")
        return NodeRemove(ts, node_id)
    if tag not in ("ADD", "UPDATE"):
        raise MalformedLine(f"unknown node event tag {tag!r}")
    attributes: dict = {}
    if attrs_field:
        for item in attrs_field.split(";"):
            name, sep, val = item.partition("=")
            if not sep:
                raise MalformedLine(f"attribute item {item!r} lacks '='")
            check_attr_name(name)
            if name in attributes:
                raise MalformedLine(f"duplicate attribute {name!r}")
            attributes[name] = parse_value(val)
    node = Node(node_id, attributes)
    return NodeAdd(ts, node) if tag == "ADD" else NodeUpdate(ts, node)


def _parse_constraint(item: str) -> RawConstraint:
    parts = item.split(",")
    if len(parts) != 3:
        raise MalformedLine(f"constraint {item!r} is not a name,op,value triplet")
    name, op_tok, val_tok = parts
    check_attr_name(name)
    try:
        op = Op(op_tok)
    except ValueError:
        raise UnknownOperator(f"unknown constraint operator {op_tok!r}") from None
    return RawConstraint(name, op, parse_value(val_tok))


def _parse_fraction(tok: str, what: str) -> float:
    try:
        x = float(tok)
    except ValueError:
        raise MalformedLine(f"bad {what} {tok!r}") from None
    if not math.isfinite(x) or not 0.0 <= x <= 1.0:
        raise ValueOutOfRange(f"{what} must be a finite fraction in [0,1]: {tok}")
    return x


def parse_task_event(line: str) -> TaskEvent:
    """Decode one tasks-trace line; constraints keep their input order."""
    fields = line.split(",", 6)
    if len(fields) != 7:
        raise MalformedLine(f"expected 7 fields, got {len(fields)}")
    ts = _parse_timestamp(fields[0])
    tag = fields[1]
    job_id = _parse_uint(fields[2], U64_MAX, "job id")
    task_index = _parse_uint(fields[3], U32_MAX, "task index")
    if tag == "FINISH":
        if fields[4] or fields[5] or fields[6]:
            raise MalformedLine("FINISH rows must leave cpu, mem and constraints empty")
        return TaskFinish(ts, job_id, task_index)
    if tag not in ("SUBMIT", "UPDATE"):
        raise MalformedLine(f"unknown task event tag {tag!r}")
    cpu = _parse_fraction(fields[4], "cpu")
    mem = _parse_fraction(fields[5], "mem")
    constraints: list[RawConstraint] = []
    if fields[6]:
        for item in fields[6].split(";"):
            constraints.append(_parse_constraint(item))
    task = TaskSpec(job_id, task_index, cpu, mem, tuple(constraints))
    return TaskSubmit(ts, task) if tag == "SUBMIT" else TaskUpdate(ts, task)


# --- canonical serialization ----------------------------------------------------

def serialize_node_event(e: NodeEvent) -> str:
    """Canonical line for a node event: attributes sorted by name."""
    if isinstance(e, NodeRemove):
        return f"{e.timestamp},REMOVE,{e.node_id},"
    tag = "ADD" if isinstance(e, NodeAdd) else "UPDATE"
    attrs = ";".join(
        f"{name}={format_value(v)}" for name, v in sorted(e.node.attributes.items())
    )
    return f"{e.timestamp},{tag},{e.node.node_id},{attrs}"


def serialize_task_event(e: TaskEvent) -> str:
    """Canonical line for a task event: constraints in input order."""
    if isinstance(e, TaskFinish):
        return f"{e.timestamp},FINISH,{e.job_id},{e.task_index},,,"
    tag = "SUBMIT" if isinstance(e, TaskSubmit) else "UPDATE"
    t = e.task
    cons = ";".join(c.render() for c in t.constraints)
    return f"{e.timestamp},{tag},{t.job_id},{t.task_index},{t.cpu!r},{t.mem!r},{cons}"


def serialize_event(e: TraceEvent) -> str:
    if isinstance(e, (NodeAdd, NodeUpdate, NodeRemove)):
        return serialize_node_event(e)
    return serialize_task_event(e)


# --- stream reading ---------------------------------------------------------------

def _read_stream(lines: Iterable[str], header: str, parse) -> Iterator[TraceEvent]:
    it = iter(lines)
    try:
        first = next(it)
    except StopIteration:
        raise MalformedLine("empty trace: missing header") from None
    if first.rstrip("\n") != header:
        raise MalformedLine(f"bad header {first!r}")
    last_ts = -1
    for lineno, raw in enumerate(it, start=2):
        line = raw.rstrip("\n")
        if not line:
            continue
        try:
            event = parse(line)
        except MalformedLine as exc:
            raise MalformedLine(f"line {lineno}: {exc}") from None
        if event.timestamp < last_ts:
            raise NonMonotonicTimestamp(
                f"line {lineno}: timestamp {event.timestamp} after {last_ts}"
            )
        last_ts = event.timestamp
        yield event


def read_node_events(lines: Iterable[str]) -> Iterator[NodeEvent]:
    """Yield node events from header-prefixed lines, enforcing time order."""
    return _read_stream(lines, NODES_HEADER, parse_node_event)


def read_task_events(lines: Iterable[str]) -> Iterator[TaskEvent]:
    """Yield task events from header-prefixed lines, enforcing time order."""
    return _read_stream(lines, TASKS_HEADER, parse_task_event)


def merge_streams(
    node_events: Iterable[NodeEvent], task_events: Iterable[TaskEvent]
) -> Iterator[TraceEvent]:
    """Merge two time-ordered streams; node events win ties, then file order."""
    nodes = iter(node_events)
    tasks = iter(task_events)
    n = next(nodes, None)
    t = next(tasks, None)
    while n is not None or t is not None:
        if t is None or (n is not None and n.timestamp <= t.timestamp):
            yield n
            n = next(nodes, None)
        else:
            yield t
            t = next(tasks, None)


def write_trace(path, header: str, lines: Iterable[str]) -> None:
    """Write a trace file with the given header and body lines."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for line in lines:
            fh.write(line + "\n")
