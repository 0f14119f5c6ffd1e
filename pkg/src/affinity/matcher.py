"""Cluster state over a trace stream and suitable-node counting.

The state keeps a bitmask of suitable nodes per live task (over dense node
slots) and updates it incrementally: a node event re-checks every live task
against only the changed node, and a task event evaluates the new constraint
set against the current node population once, via per-attribute columnar
arrays.  Node changes are rare in real traces, so the incremental design
keeps replay cheap; a brute-force counter over the node list remains the
reference oracle for all of it.

Tasks whose constraints cannot be satisfied by any value are dropped with a
warning counter; tasks whose suitable-node count drops to zero are demoted
to an orphaned diagnostic list and never classified.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

import numpy as np

from .constraints import (
    ABSENT,
    Between,
    CompactedConstraintSet,
    EMPTY_SET,
    Equal,
    GreaterEqual,
    LessThan,
    NotEqualArray,
    compact_normalized,
    matches,
)
from .errors import (
    DuplicateNode,
    DuplicateTask,
    InvalidCount,
    StaleEvent,
    TypeMismatch,
    UnknownNode,
    UnknownTask,
    Unsatisfiable,
)
from .values import (
    Empty,
    I64_MAX,
    I64_MIN,
    Node,
    NodeAdd,
    NodeRemove,
    NodeUpdate,
    TaskFinish,
    TaskSpec,
    TaskSubmit,
    TaskUpdate,
    TraceEvent,
)

DEFAULT_INTERVAL_US = 300_000_000  # five minutes

GROUP_LETTERS = tuple(chr(ord("A") + i) for i in range(26))


def classify_group(count: int) -> str:
    """Map a suitable-node count onto difficulty groups A-Z.

    1 is group A, more than 12000 is group Z, and in between the letters
    advance one step per 500 nodes: 2-500 is B, 501-1000 is C, and so on.
    """
    if count <= 0:
        raise InvalidCount(f"suitable-node count must be positive, got {count}")
    if count == 1:
        return "A"
    if count > 12000:
        return "Z"
    return chr((count - 1) // 500 + 66)


def brute_force_count(nodes: Iterable[Node], cs: CompactedConstraintSet) -> int:
    """Reference oracle: count nodes matching the set, one by one."""
    return sum(1 for node in nodes if matches(node, cs))


# --- columnar node view -------------------------------------------------------


class NodeColumns:
    """Per-attribute columnar arrays over node slots.

    For each attribute three parallel arrays are kept: an exact-value code
    (-1 while absent), the integer view used by order comparisons (absent and
    empty count as 0), and a flag that clears for text values, which have no
    integer view.  Evaluating a constraint set returns a boolean mask over
    all slots in a handful of vectorized operations.
    """

    def __init__(self, capacity: int = 64):
        self.capacity = max(8, capacity)
        self._codes: dict[str, np.ndarray] = {}
        self._nums: dict[str, np.ndarray] = {}
        self._has_num: dict[str, np.ndarray] = {}
        self._tables: dict[str, dict] = {}

    def _new_column(self, attribute: str) -> None:
        self._codes[attribute] = np.full(self.capacity, -1, dtype=np.int32)
        self._nums[attribute] = np.zeros(self.capacity, dtype=np.int64)
        self._has_num[attribute] = np.ones(self.capacity, dtype=bool)
        self._tables[attribute] = {}

    def _column(self, attribute: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if attribute not in self._codes:
            self._new_column(attribute)
        return self._codes[attribute], self._nums[attribute], self._has_num[attribute]

    def grow(self, capacity: int) -> None:
        if capacity <= self.capacity:
            return
        new_cap = max(capacity, self.capacity * 2)
        for attribute in self._codes:
            codes = np.full(new_cap, -1, dtype=np.int32)
            codes[: self.capacity] = self._codes[attribute]
            self._codes[attribute] = codes
            nums = np.zeros(new_cap, dtype=np.int64)
            nums[: self.capacity] = self._nums[attribute]
            self._nums[attribute] = nums
            has = np.ones(new_cap, dtype=bool)
            has[: self.capacity] = self._has_num[attribute]
            self._has_num[attribute] = has
        self.capacity = new_cap

    def _code_of(self, attribute: str, value, create: bool) -> Optional[int]:
        table = self._tables[attribute]
        code = table.get(value)
        if code is None and create:
            code = len(table)
            table[value] = code
        return code

    def assign(self, slot: int, old_attrs: Optional[dict], attrs: dict) -> None:
        """Write a node's attributes into its slot, clearing old ones."""
        if old_attrs:
            for name in old_attrs:
                if name not in attrs:
                    codes, nums, has = self._column(name)
                    codes[slot] = -1
                    nums[slot] = 0
                    has[slot] = True
        for name, value in attrs.items():
            codes, nums, has = self._column(name)
            codes[slot] = self._code_of(name, value, create=True)
            if isinstance(value, Empty):
                nums[slot] = 0
                has[slot] = True
            elif isinstance(value, int):
                nums[slot] = value
                has[slot] = True
            else:
                nums[slot] = 0
                has[slot] = False

    def clear(self, slot: int, old_attrs: dict) -> None:
        for name in old_attrs:
            codes, nums, has = self._column(name)
            codes[slot] = -1
            nums[slot] = 0
            has[slot] = True

    # -- evaluation --

    def _eq_mask(self, attribute: str, value) -> np.ndarray:
        codes, _, _ = self._column(attribute)
        code = self._code_of(attribute, value, create=False)
        if code is None:
            return np.zeros(self.capacity, dtype=bool)
        return codes == code

    def _ne_violators(self, attribute: str, member) -> np.ndarray:
        codes, nums, has = self._column(attribute)
        if isinstance(member, int) and not isinstance(member, bool):
            return has & (nums == member)
        # empty / text members compare the exact variant
        return self._eq_mask(attribute, member)

    def _range_mask(self, attribute: str, lo: Optional[int], hi: Optional[int]) -> np.ndarray:
        _, nums, has = self._column(attribute)
        mask = has.copy()
        if lo is not None:
            if lo > I64_MAX:
                mask[:] = False
            elif lo > I64_MIN:
                mask &= nums >= lo
        if hi is not None:
            if hi <= I64_MIN:
                mask[:] = False
            elif hi <= I64_MAX:
                mask &= nums < hi
        return mask

    def eval_constraint(self, c) -> np.ndarray:
        if isinstance(c, Equal):
            return self._eq_mask(c.attribute, c.value)
        if isinstance(c, NotEqualArray):
            mask = np.ones(self.capacity, dtype=bool)
            for member in c.values:
                mask &= ~self._ne_violators(c.attribute, member)
            return mask
        if isinstance(c, GreaterEqual):
            mask = self._range_mask(c.attribute, c.lo, None)
        elif isinstance(c, LessThan):
            mask = self._range_mask(c.attribute, None, c.hi)
        elif isinstance(c, Between):
            mask = self._range_mask(c.attribute, c.lo, c.hi)
        else:  # pragma: no cover - exhaustive
            raise TypeError(f"unknown constraint {c!r}")
        for member in c.exclusions:
            mask &= ~self._ne_violators(c.attribute, member)
        return mask

    def eval_set(self, cs: CompactedConstraintSet) -> np.ndarray:
        mask = np.ones(self.capacity, dtype=bool)
        for c in cs.entries:
            mask &= self.eval_constraint(c)
        return mask


def _mask_to_bits(mask: np.ndarray) -> int:
    return int.from_bytes(np.packbits(mask, bitorder="little").tobytes(), "little")


def batch_suitable_counts(
    nodes: Iterable[Node], csets: Iterable[CompactedConstraintSet]
) -> list[int]:
    """Exhaustively count suitable nodes for many constraint sets at once.

    Builds fresh columnar arrays from the node list and evaluates each set
    over every node, so the result matches :func:`brute_force_count` while
    staying fast for large populations.
    """
    node_list = list(nodes)
    cols = NodeColumns(capacity=max(8, len(node_list)))
    for slot, node in enumerate(node_list):
        cols.assign(slot, None, node.attributes)
    n = len(node_list)
    return [int(cols.eval_set(cs)[:n].sum()) for cs in csets]


# --- live state -----------------------------------------------------------------


@dataclass(slots=True)
class _LiveTask:
    spec: TaskSpec
    cset: CompactedConstraintSet
    mask: int
    count: int
    constrained: bool


@dataclass
class Diagnostics:
    """Counters for trace anomalies skipped in lenient mode."""

    stale_events: int = 0
    duplicate_node: int = 0
    duplicate_task: int = 0
    unknown_node: int = 0
    unknown_task: int = 0
    unsatisfiable_tasks: int = 0
    type_mismatch_tasks: int = 0
    orphaned_tasks: int = 0

    def as_dict(self) -> dict[str, int]:
        return {k: getattr(self, k) for k in (
            "stale_events", "duplicate_node", "duplicate_task", "unknown_node",
            "unknown_task", "unsatisfiable_tasks", "type_mismatch_tasks",
            "orphaned_tasks",
        )}


@dataclass(frozen=True)
class IntervalStats:
    """Live-state sample for one interval window."""

    interval_start: int
    live_tasks: int
    constrained_tasks: int
    group_counts: tuple[int, ...]  # one per letter A..Z

    def csv_row(self) -> str:
        head = f"{self.interval_start},{self.live_tasks},{self.constrained_tasks}"
        return head + "," + ",".join(str(c) for c in self.group_counts)

    @staticmethod
    def csv_header() -> str:
        return "interval_start,live_tasks,constrained_tasks," + ",".join(GROUP_LETTERS)


class ClusterState:
    """Single-writer cluster state: nodes, live tasks, cached counts.

    ``strict`` makes anomalies (stale timestamps, unknown or duplicate ids)
    fatal; by default they increment a diagnostics counter and the event is
    skipped, which matches how real traces behave.
    """

    def __init__(self, strict: bool = False):
        self.strict = strict
        self.nodes: dict[str, Node] = {}
        self.clock = 0
        self.diagnostics = Diagnostics()
        self.orphaned: list[tuple[int, int]] = []
        self.match_evals = 0  # single-node constraint evaluations, for cost tests
        self._slot_of: dict[str, int] = {}
        self._free_slots: list[int] = []
        self._n_slots = 0
        self._universe = 0
        self._columns = NodeColumns()
        self._tasks: dict[tuple[int, int], _LiveTask] = {}

    # -- introspection --

    @property
    def live_task_count(self) -> int:
        return len(self._tasks)

    def live_tasks(self) -> Iterator[tuple[tuple[int, int], TaskSpec, CompactedConstraintSet, int]]:
        for key, t in self._tasks.items():
            yield key, t.spec, t.cset, t.count

    def count_of(self, job_id: int, task_index: int) -> int:
        return self._tasks[(job_id, task_index)].count

    def suitable_count(self, cs: CompactedConstraintSet) -> int:
        """Count suitable nodes for an ad-hoc constraint set (columnar)."""
        if not cs.entries:
            return len(self.nodes)
        bits = _mask_to_bits(self._columns.eval_set(cs)) & self._universe
        return bits.bit_count()

    # -- event application --

    def apply_event(self, e: TraceEvent) -> None:
        if e.timestamp < self.clock:
            if self.strict:
                raise StaleEvent(f"timestamp {e.timestamp} is before clock {self.clock}")
            self.diagnostics.stale_events += 1
            return
        self.clock = e.timestamp
        if isinstance(e, TaskSubmit):
            self._task_submit(e.task)
        elif isinstance(e, TaskFinish):
            self._task_finish(e.job_id, e.task_index)
        elif isinstance(e, TaskUpdate):
            self._task_update(e.task)
        elif isinstance(e, NodeAdd):
            self._node_add(e.node)
        elif isinstance(e, NodeUpdate):
            self._node_update(e.node)
        elif isinstance(e, NodeRemove):
            self._node_remove(e.node_id)
        else:  # pragma: no cover - exhaustive
            raise TypeError(f"unknown event {e!r}")

    # -- node events --

    def _alloc_slot(self, node_id: str) -> int:
        slot = self._free_slots.pop() if self._free_slots else self._n_slots
        if slot == self._n_slots:
            self._n_slots += 1
            self._columns.grow(self._n_slots)
        self._slot_of[node_id] = slot
        return slot

    def _reeval_against(self, node: Node, bit: int) -> None:
        """Re-check every live task against one changed node."""
        evals = 0
        for t in self._tasks.values():
            evals += 1
            ok = True
            attrs = node.attributes
            for c in t.cset.entries:
                if not c.accepts(attrs.get(c.attribute, ABSENT)):
                    ok = False
                    break
            had = t.mask & bit
            if ok and not had:
                t.mask |= bit
                t.count += 1
            elif not ok and had:
                t.mask &= ~bit
                t.count -= 1
        self.match_evals += evals

    def _node_add(self, node: Node) -> None:
        if node.node_id in self.nodes:
            if self.strict:
                raise DuplicateNode(node.node_id)
            self.diagnostics.duplicate_node += 1
            self._node_update(node)
            return
        slot = self._alloc_slot(node.node_id)
        self._columns.assign(slot, None, node.attributes)
        self.nodes[node.node_id] = node
        self._universe |= 1 << slot
        self._reeval_against(node, 1 << slot)

    def _node_update(self, node: Node) -> None:
        old = self.nodes.get(node.node_id)
        if old is None:
            if self.strict:
                raise UnknownNode(node.node_id)
            self.diagnostics.unknown_node += 1
            return
        slot = self._slot_of[node.node_id]
        self._columns.assign(slot, old.attributes, node.attributes)
        self.nodes[node.node_id] = node
        self._reeval_against(node, 1 << slot)

    def _node_remove(self, node_id: str) -> None:
        old = self.nodes.pop(node_id, None)
        if old is None:
            if self.strict:
                raise UnknownNode(node_id)
            self.diagnostics.unknown_node += 1
            return
        slot = self._slot_of.pop(node_id)
        self._columns.clear(slot, old.attributes)
        self._universe &= ~(1 << slot)
        self._free_slots.append(slot)
        bit = 1 << slot
        dead: list[tuple[int, int]] = []
        for key, t in self._tasks.items():
            if t.mask & bit:
                t.mask &= ~bit
                t.count -= 1
                if t.count == 0 and t.constrained:
                    dead.append(key)
        for key in dead:
            del self._tasks[key]
            self.orphaned.append(key)
            self.diagnostics.orphaned_tasks += 1

    # -- task events --

    def _evaluate_task(self, spec: TaskSpec) -> Optional[_LiveTask]:
        """Compact and evaluate a task; None when it must be dropped."""
        try:
            cset = compact_normalized(spec.constraints)
        except Unsatisfiable:
            if self.strict:
                raise
            self.diagnostics.unsatisfiable_tasks += 1
            return None
        except TypeMismatch:
            if self.strict:
                raise
            self.diagnostics.type_mismatch_tasks += 1
            return None
        if not cset.entries:
            return _LiveTask(spec, EMPTY_SET, self._universe, len(self.nodes), False)
        bits = _mask_to_bits(self._columns.eval_set(cset)) & self._universe
        self.match_evals += len(self.nodes)
        return _LiveTask(spec, cset, bits, bits.bit_count(), True)

    def _admit(self, key: tuple[int, int], live: Optional[_LiveTask]) -> None:
        if live is None:
            self._tasks.pop(key, None)
            return
        if live.constrained and live.count == 0:
            self._tasks.pop(key, None)
            self.orphaned.append(key)
            self.diagnostics.orphaned_tasks += 1
            return
        self._tasks[key] = live

    def _task_submit(self, spec: TaskSpec) -> None:
        key = spec.key
        if key in self._tasks:
            if self.strict:
                raise DuplicateTask(str(key))
            self.diagnostics.duplicate_task += 1
        self._admit(key, self._evaluate_task(spec))

    def _task_update(self, spec: TaskSpec) -> None:
        key = spec.key
        if key not in self._tasks:
            if self.strict:
                raise UnknownTask(str(key))
            self.diagnostics.unknown_task += 1
            return
        self._admit(key, self._evaluate_task(spec))

    def _task_finish(self, job_id: int, task_index: int) -> None:
        if self._tasks.pop((job_id, task_index), None) is None:
            if self.strict:
                raise UnknownTask(str((job_id, task_index)))
            self.diagnostics.unknown_task += 1

    # -- outputs --

    def interval_stats(self, interval_start: int) -> IntervalStats:
        counts = [0] * 26
        constrained = 0
        for t in self._tasks.values():
            if t.constrained:
                constrained += 1
                counts[ord(classify_group(t.count)) - 65] += 1
        return IntervalStats(interval_start, len(self._tasks), constrained, tuple(counts))

    def snapshot_dataset_rows(
        self,
    ) -> list[tuple[TaskSpec, CompactedConstraintSet, int, str]]:
        """One row per live constrained task, using its latest constraints."""
        return [
            (t.spec, t.cset, t.count, classify_group(t.count))
            for t in self._tasks.values()
            if t.constrained
        ]


def replay(events: Iterable[TraceEvent], state: Optional[ClusterState] = None,
           strict: bool = False) -> ClusterState:
    """Apply a whole event stream and return the final state."""
    if state is None:
        state = ClusterState(strict=strict)
    for e in events:
        state.apply_event(e)
    return state


def replay_with_stats(
    events: Iterable[TraceEvent],
    state: Optional[ClusterState] = None,
    strict: bool = False,
    interval_us: int = DEFAULT_INTERVAL_US,
) -> Iterator[IntervalStats]:
    """Replay a stream, yielding one stats row per elapsed interval window.

    A window covers ``[k*interval, (k+1)*interval)`` and is sampled from the
    live state once every event inside it has been applied.  The caller can
    keep a reference to ``state`` to collect dataset rows afterwards.
    """
    if interval_us <= 0:
        raise ValueError("interval must be positive")
    if state is None:
        state = ClusterState(strict=strict)
    current = None
    for e in events:
        k = e.timestamp // interval_us
        if current is None:
            current = k
        while k > current:
            yield state.interval_stats(current * interval_us)
            current += 1
        state.apply_event(e)
    if current is not None:
        yield state.interval_stats(current * interval_us)
