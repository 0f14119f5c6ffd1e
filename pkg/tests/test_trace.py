"""Trace grammar: parsing, canonical serialization, stream invariants."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from affinity.errors import (
    MalformedLine,
    NonMonotonicTimestamp,
    TraceFormatError,
    UnknownOperator,
    ValueOutOfRange,
)
from affinity.trace import (
    NODES_HEADER,
    TASKS_HEADER,
    merge_streams,
    parse_node_event,
    parse_task_event,
    read_node_events,
    read_task_events,
    serialize_node_event,
    serialize_task_event,
)
from affinity.values import (
    EMPTY,
    Node,
    NodeAdd,
    NodeRemove,
    NodeUpdate,
    Op,
    TaskFinish,
    TaskSubmit,
    TaskUpdate,
)


class TestParseNodeEvent:
    def test_add_with_attributes(self):
        e = parse_node_event("10,ADD,n1,A=i:4;B=s:x")
        assert e == NodeAdd(10, Node("n1", {"A": 4, "B": "x"}))

    def test_remove(self):
        assert parse_node_event("20,REMOVE,n1,") == NodeRemove(20, "n1")

    def test_duplicate_attribute_rejected(self):
        with pytest.raises(MalformedLine):
            parse_node_event("10,ADD,n1,A=i:4;A=i:5")

    def test_attribute_order_is_irrelevant(self):
        a = parse_node_event("10,ADD,n1,A=i:4;B=s:x")
        b = parse_node_event("10,ADD,n1,B=s:x;A=i:4")
        assert a.node.attributes == b.node.attributes

    def test_empty_value_and_update(self):
        e = parse_node_event("5,UPDATE,n2,D=e:")
        assert isinstance(e, NodeUpdate)
        assert e.node.attributes == {"D": EMPTY}

    @pytest.mark.parametrize("line", [
        "10,ADD,n1",                   # missing field
        "x,ADD,n1,",                   # bad timestamp
        "10,NUKE,n1,",                 # bad tag
        "10,ADD,,A=i:4",               # empty node id
        "10,ADD,n1,1A=i:4",            # bad attribute name
        "10,ADD,n1,A=i:notanint",      # bad integer
        "10,ADD,n1,A=s:",              # empty text payload
        "10,ADD,n1,A=e:boo",           # payload on empty tag
        "10,ADD,n1,A=q:4",             # unknown tag
        "10,ADD,n1,A-i:4",             # missing '='
        "10,REMOVE,n1,A=i:4",          # REMOVE with attributes
        "10,ADD,n1,A=i:99999999999999999999",  # beyond 64-bit
    ])
    def test_malformed(self, line):
        with pytest.raises(MalformedLine):
            parse_node_event(line)


class TestParseTaskEvent:
    def test_submit_with_constraints(self):
        e = parse_task_event("10,SUBMIT,42,0,0.25,0.50,E,GE,i:0;D,EQ,e:")
        assert isinstance(e, TaskSubmit)
        t = e.task
        assert (t.job_id, t.task_index, t.cpu, t.mem) == (42, 0, 0.25, 0.50)
        assert [(c.attribute, c.op, c.value) for c in t.constraints] == [
            ("E", Op.GE, 0), ("D", Op.EQ, EMPTY),
        ]

    def test_finish(self):
        assert parse_task_event("11,FINISH,42,0,,,") == TaskFinish(11, 42, 0)

    def test_cpu_out_of_range(self):
        with pytest.raises(ValueOutOfRange):
            parse_task_event("10,SUBMIT,1,0,1.5,0.1,")

    def test_unknown_operator(self):
        with pytest.raises(UnknownOperator):
            parse_task_event("10,SUBMIT,1,0,0.1,0.1,A,APPROX,i:4")

    def test_update_keeps_constraint_order(self):
        e = parse_task_event("9,UPDATE,7,3,0.1,0.2,B,NE,s:y;A,GT,i:1")
        assert isinstance(e, TaskUpdate)
        assert [c.attribute for c in e.task.constraints] == ["B", "A"]

    @pytest.mark.parametrize("line", [
        "10,SUBMIT,1,0,0.1,0.1",        # missing constraints field
        "10,FINISH,1,0,0.1,,",          # FINISH with cpu
        "10,SUBMIT,-1,0,0.1,0.1,",      # negative job id
        "10,SUBMIT,1,4294967296,0.1,0.1,",  # task index beyond 32-bit
        "10,SUBMIT,1,0,nan,0.1,",       # non-finite cpu
        "10,SUBMIT,1,0,0.1,0.1,A,EQ",   # constraint not a triplet
    ])
    def test_malformed(self, line):
        with pytest.raises(TraceFormatError):
            parse_task_event(line)


class TestRoundTrip:
    def test_node_canonical_form_sorts_attributes(self):
        line = "10,ADD,n1,B=s:x;A=i:4"
        assert serialize_node_event(parse_node_event(line)) == "10,ADD,n1,A=i:4;B=s:x"

    def test_task_round_trip_preserves_constraint_order(self):
        line = "10,SUBMIT,42,0,0.25,0.5,E,GE,i:0;D,EQ,e:"
        assert serialize_task_event(parse_task_event(line)) == line

    def test_canonical_fixpoint(self):
        for line in (
            "0,ADD,n1,",
            "7,UPDATE,n-9,A=e:;B=i:-3;C=s:q_4",
            "20,REMOVE,n1,",
        ):
            assert serialize_node_event(parse_node_event(line)) == line
        for line in (
            "11,FINISH,42,0,,,",
            "3,SUBMIT,1,2,0.0,1.0,",
            "3,UPDATE,1,2,0.125,0.5,A,NE,i:0;A,NE,s:0",
        ):
            assert serialize_task_event(parse_task_event(line)) == line


@settings(max_examples=300, deadline=None)
@given(st.text(max_size=2048))
def test_parser_totality_fuzz(line):
    """Any input yields an event or a typed error, never a crash."""
    for parse in (parse_node_event, parse_task_event):
        try:
            parse(line)
        except TraceFormatError:
            pass


@settings(max_examples=30, deadline=None)
@given(st.binary(min_size=0, max_size=64 * 1024))
def test_parser_totality_large_binary(blob):
    line = blob.decode("latin-1")
    for parse in (parse_node_event, parse_task_event):
        try:
            parse(line)
        except TraceFormatError:
            pass


def test_round_trip_over_generated_events(rng):
    """serialize(parse(serialize(event))) is a fixpoint for random events."""
    from affinity.synth import SyntheticTraceConfig, generate_synthetic_trace

    g = generate_synthetic_trace(SyntheticTraceConfig(
        n_nodes=40, n_jobs=40, group_a_fraction=0.1, churn_rate=3.0,
        n_attributes=8, seed=12))
    for event in g.node_events:
        line = serialize_node_event(event)
        assert serialize_node_event(parse_node_event(line)) == line
    for event in g.task_events:
        line = serialize_task_event(event)
        assert serialize_task_event(parse_task_event(line)) == line


class TestStreams:
    def test_reader_checks_header_and_order(self):
        lines = [NODES_HEADER, "10,ADD,n1,", "5,ADD,n2,"]
        with pytest.raises(NonMonotonicTimestamp):
            list(read_node_events(lines))
        with pytest.raises(MalformedLine):
            list(read_node_events(["bogus", "10,ADD,n1,"]))

    def test_reader_reports_line_numbers(self):
        with pytest.raises(MalformedLine, match="line 3"):
            list(read_node_events([NODES_HEADER, "1,ADD,n1,", "2,ADD,n1"]))

    def test_task_reader(self):
        lines = [TASKS_HEADER, "1,SUBMIT,1,0,0.1,0.1,", "2,FINISH,1,0,,,"]
        events = list(read_task_events(lines))
        assert [type(e) for e in events] == [TaskSubmit, TaskFinish]

    def test_merge_puts_node_events_first_on_ties(self):
        nodes = [NodeAdd(5, Node("n1", {})), NodeAdd(10, Node("n2", {}))]
        tasks = [TaskFinish(5, 1, 0), TaskFinish(12, 1, 1)]
        merged = list(merge_streams(nodes, tasks))
        assert [type(e).__name__ for e in merged] == [
            "NodeAdd", "TaskFinish", "NodeAdd", "TaskFinish",
        ]
