"""Seeded synthetic trace generation with known ground truth.

Real cluster traces with node-affinity operators are not redistributable,
so the toolkit generates its own: a node population with attribute roles
that make target difficulty groups constructible, and gang-scheduled jobs
whose tasks share a constraint template drawn from a seeded pool.

Attribute roles (names follow the obfuscated A, B, ..., AA convention):

* two *identity* integer attributes whose value pair is unique per node,
  so a pair of equalities pins exactly one node (group A);
* a *band* integer attribute holding the node's index, so one range
  constraint hits any requested suitable-node count exactly;
* a *flag* attribute that is present-but-empty everywhere, for equality-on-
  empty labels;
* remaining *pool* attributes carry random integer or text values (with
  some absent and some empty) and feed not-equal / equality variety.

Node churn re-rolls a reserved pool attribute that no template constrains,
so every task's suitable-node count is invariant over the whole trace and
the returned oracle (computed by exhaustive matching, then spot-checked
against the one-node-at-a-time counter) is exact at any replay point.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .constraints import CompactedConstraintSet, compact_normalized
from .errors import InfeasibleConfig
from .matcher import batch_suitable_counts, brute_force_count
from .values import (
    EMPTY,
    Node,
    NodeAdd,
    NodeEvent,
    NodeUpdate,
    Op,
    RawConstraint,
    TaskEvent,
    TaskFinish,
    TaskSpec,
    TaskSubmit,
)


def attr_name(i: int) -> str:
    """Spreadsheet-style attribute names: A..Z, AA, AB, ..."""
    name = ""
    i += 1
    while i > 0:
        i, rem = divmod(i - 1, 26)
        name = chr(ord("A") + rem) + name
    return name


def _category(j: int) -> str:
    return "q" + attr_name(j).lower()


@dataclass(frozen=True)
class SyntheticTraceConfig:
    """Knobs for the generator; defaults give a small, fast trace."""

    n_nodes: int = 200
    n_attributes: int = 12
    int_attr_fraction: float = 0.5
    categories_per_text_attribute: int = 8
    n_jobs: int = 100
    tasks_per_job: tuple[int, int] = (1, 10)
    constraints_per_task: tuple[int, int] = (1, 3)
    group_a_fraction: float = 0.02
    group_c_fraction: float = 0.0
    unconstrained_fraction: float = 0.3
    churn_rate: float = 0.0  # node updates per interval
    #: difficulty bands 2..500 are skipped by default; clusters under 501
    #: nodes fall back to allowing them (no other band fits)
    allow_group_b: bool = False
    interval_us: int = 300_000_000
    n_intervals: int = 10
    finish_fraction: float = 0.5  # of unconstrained jobs
    a_pool_size: int = 40
    c_pool_size: int = 30
    free_pool_size: int = 80
    per_band_pool_size: int = 8
    seed: int = 0

    def validate(self) -> None:
        c = self
        positive = {
            "n_nodes": c.n_nodes, "n_attributes": c.n_attributes,
            "categories_per_text_attribute": c.categories_per_text_attribute,
            "n_jobs": c.n_jobs, "interval_us": c.interval_us,
            "n_intervals": c.n_intervals,
        }
        for name, v in positive.items():
            if v <= 0:
                raise InfeasibleConfig(f"{name} must be positive, got {v}")
        lo, hi = c.tasks_per_job
        if not (1 <= lo <= hi):
            raise InfeasibleConfig(f"bad tasks_per_job range {c.tasks_per_job}")
        lo, hi = c.constraints_per_task
        if not (0 <= lo <= hi):
            raise InfeasibleConfig(f"bad constraints_per_task range {c.constraints_per_task}")
        fracs = {
            "int_attr_fraction": c.int_attr_fraction,
            "group_a_fraction": c.group_a_fraction,
            "group_c_fraction": c.group_c_fraction,
            "unconstrained_fraction": c.unconstrained_fraction,
            "finish_fraction": c.finish_fraction,
        }
        for name, v in fracs.items():
            if not 0.0 <= v <= 1.0:
                raise InfeasibleConfig(f"{name} must be in [0,1], got {v}")
        mix = c.group_a_fraction + c.group_c_fraction + c.unconstrained_fraction
        if mix > 1.0 + 1e-12:
            raise InfeasibleConfig(f"group mix fractions sum to {mix} > 1")
        if c.churn_rate < 0:
            raise InfeasibleConfig("churn_rate must be non-negative")
        if c.group_a_fraction > 0 and c.n_attributes < 2:
            raise InfeasibleConfig("group A tasks need the two identity attributes")
        if c.group_c_fraction > 0 and c.n_nodes < 501:
            raise InfeasibleConfig("group C needs at least 501 nodes")
        if c.group_c_fraction > 0 and c.n_attributes < 3:
            raise InfeasibleConfig("group C tasks need the band attribute")
        random_share = 1.0 - mix
        if random_share > 1e-12 and c.constraints_per_task[1] > 0 and c.n_attributes < 3:
            raise InfeasibleConfig("constrained tasks need the band attribute")
        if c.churn_rate > 0 and c.n_attributes < 5:
            raise InfeasibleConfig("churn needs a reserved pool attribute (n_attributes >= 5)")


@dataclass
class GeneratedTrace:
    node_events: list[NodeEvent]
    task_events: list[TaskEvent]
    #: (job_id, task_index) -> true suitable-node count over the node set
    oracle: dict[tuple[int, int], int]


@dataclass
class _Template:
    constraints: tuple[RawConstraint, ...]
    count: int = -1  # filled by evaluation

    def cset(self) -> CompactedConstraintSet:
        return compact_normalized(self.constraints)


class _Generator:
    def __init__(self, cfg: SyntheticTraceConfig):
        cfg.validate()
        self.cfg = cfg
        self.rng = np.random.default_rng(cfg.seed)
        self.attrs = [attr_name(i) for i in range(cfg.n_attributes)]
        self.id_hi = self.attrs[0] if cfg.n_attributes >= 2 else None
        self.id_lo = self.attrs[1] if cfg.n_attributes >= 2 else None
        self.band = self.attrs[2] if cfg.n_attributes >= 3 else None
        self.flag = self.attrs[3] if cfg.n_attributes >= 4 else None
        pool = self.attrs[4:]
        self.churn_attr = pool[-1] if (cfg.churn_rate > 0 and pool) else None
        self.pool = [a for a in pool if a != self.churn_attr]
        self.k_split = int(np.ceil(np.sqrt(cfg.n_nodes)))
        self.allow_b = cfg.allow_group_b or cfg.n_nodes < 501
        self.nodes: list[Node] = []
        self.pool_kinds: dict[str, str] = {}

    # -- node population --

    def _build_nodes(self) -> None:
        cfg = self.cfg
        rng = self.rng
        pool_all = self.pool + ([self.churn_attr] if self.churn_attr else [])
        for a in pool_all:
            self.pool_kinds[a] = "int" if rng.random() < cfg.int_attr_fraction else "text"
        n_cats = cfg.categories_per_text_attribute
        for i in range(cfg.n_nodes):
            attrs: dict = {}
            if self.id_hi is not None:
                attrs[self.id_hi] = i // self.k_split
                attrs[self.id_lo] = i % self.k_split
            if self.band is not None:
                attrs[self.band] = i
            if self.flag is not None:
                attrs[self.flag] = EMPTY
            for a in pool_all:
                r = rng.random()
                if r < 0.15:
                    continue  # absent
                if r < 0.20:
                    attrs[a] = EMPTY
                elif self.pool_kinds[a] == "int":
                    attrs[a] = int(rng.integers(0, 10))
                else:
                    attrs[a] = _category(int(rng.integers(0, n_cats)))
            self.nodes.append(Node(f"n{i:05d}", attrs))

    # -- template pools --

    def _band_range(self, m: int) -> list[RawConstraint]:
        """One range constraint on the band attribute matching exactly m nodes."""
        n = self.cfg.n_nodes
        variant = int(self.rng.integers(0, 3))
        if variant == 0 and n - m > 0:
            return [RawConstraint(self.band, Op.GE, n - m)]
        if variant == 1:
            return [RawConstraint(self.band, Op.LT, m)]
        start = int(self.rng.integers(0, n - m + 1))
        lo = [RawConstraint(self.band, Op.GE, start)] if start > 0 else []
        return lo + [RawConstraint(self.band, Op.LT, start + m)]

    def _extra_constraint(self, used: set[str]) -> Optional[RawConstraint]:
        """One predicate on an attribute not constrained yet (stays satisfiable)."""
        rng = self.rng
        choices = []
        if self.flag is not None and self.flag not in used:
            choices.append("flag")
        free_pool = [a for a in self.pool if a not in used]
        if free_pool:
            choices.extend(["ne", "eq"])
        if not choices:
            return None
        kind = choices[int(rng.integers(0, len(choices)))]
        if kind == "flag":
            return RawConstraint(self.flag, Op.EQ, EMPTY)
        a = free_pool[int(rng.integers(0, len(free_pool)))]
        if self.pool_kinds[a] == "int":
            value = int(rng.integers(0, 10))
        else:
            value = _category(int(rng.integers(0, self.cfg.categories_per_text_attribute)))
        return RawConstraint(a, Op.NE if kind == "ne" else Op.EQ, value)

    def _free_template(self) -> _Template:
        cfg = self.cfg
        rng = self.rng
        lo, hi = cfg.constraints_per_task
        k = int(rng.integers(lo, hi + 1))
        if k == 0 or self.band is None:
            return _Template(())
        m_lo = 2 if self.allow_b else 501
        m = int(rng.integers(m_lo, cfg.n_nodes + 1))
        cons = self._band_range(m)
        if k > len(cons) and rng.random() < 0.3:
            # fold a not-equal into the band range (exercises exclusions)
            x = int(rng.integers(0, cfg.n_nodes))
            cons.append(RawConstraint(self.band, Op.NE, x))
        used = {c.attribute for c in cons}
        while len(cons) < k:
            extra = self._extra_constraint(used)
            if extra is None:
                break
            cons.append(extra)
            used.add(extra.attribute)
        return _Template(tuple(cons))

    def _build_pools(self) -> dict[str, list[_Template]]:
        cfg = self.cfg
        rng = self.rng
        pools: dict[str, list[_Template]] = {"a": [], "c": [], "random": []}
        if cfg.group_a_fraction > 0:
            n_a = min(cfg.a_pool_size, cfg.n_nodes)
            picks = rng.choice(cfg.n_nodes, size=n_a, replace=False)
            for i in sorted(int(x) for x in picks):
                pools["a"].append(
                    _Template((
                        RawConstraint(self.id_hi, Op.EQ, i // self.k_split),
                        RawConstraint(self.id_lo, Op.EQ, i % self.k_split),
                    ))
                )
        if cfg.group_c_fraction > 0:
            for _ in range(cfg.c_pool_size):
                m = int(rng.integers(501, min(1000, cfg.n_nodes) + 1))
                pools["c"].append(_Template(tuple(self._band_range(m))))
        if self.band is not None and cfg.constraints_per_task[1] > 0:
            # stratified pure-band templates guarantee coverage of each band
            top = (cfg.n_nodes - 1) // 500  # 0-based band index of the largest count
            first = 0 if self.allow_b else 1
            for band_idx in range(first, top + 1):
                b_lo = max(2, band_idx * 500 + 1)
                b_hi = min(cfg.n_nodes, (band_idx + 1) * 500)
                if b_lo > b_hi:
                    continue
                for _ in range(cfg.per_band_pool_size):
                    m = int(rng.integers(b_lo, b_hi + 1))
                    pools["random"].append(_Template(tuple(self._band_range(m))))
            for _ in range(cfg.free_pool_size):
                pools["random"].append(self._free_template())
        return pools

    def _evaluate_pools(self, pools: dict[str, list[_Template]]) -> None:
        """Fill template counts by exhaustive matching; reject dead templates."""
        templates = [t for pool in pools.values() for t in pool if t.constraints]
        counts = batch_suitable_counts(self.nodes, [t.cset() for t in templates])
        for t, count in zip(templates, counts):
            t.count = count
        for t in pools["a"]:
            assert t.count == 1, "identity pair must pin exactly one node"
        for t in pools["c"]:
            assert 501 <= t.count <= 1000, "band range must stay in its band"
        floor = 1 if self.allow_b else 500
        retained = []
        for t in pools["random"]:
            if not t.constraints:
                t.count = self.cfg.n_nodes
                retained.append(t)
            elif t.count > floor or self.cfg.n_nodes < floor + 1:
                retained.append(t)
            else:
                # count 0 never classifies, count 1 is group A's own knob, and
                # B-band counts are skipped in the default mix; fall back to
                # the narrowest plain band range above the floor
                replacement = _Template(tuple(self._band_range(floor + 1)))
                replacement.count = batch_suitable_counts(
                    self.nodes, [replacement.cset()]
                )[0]
                retained.append(replacement)
        pools["random"] = retained
        # spot-check the vectorized counts against the plain counter
        spot = [t for pool in pools.values() for t in pool if t.constraints][:25]
        for t in spot:
            assert brute_force_count(self.nodes, t.cset()) == t.count

    # -- jobs and events --

    def generate(self) -> GeneratedTrace:
        cfg = self.cfg
        rng = self.rng
        self._build_nodes()
        pools = self._build_pools()
        self._evaluate_pools(pools)

        span = cfg.n_intervals * cfg.interval_us
        node_events: list[NodeEvent] = [NodeAdd(0, node) for node in self.nodes]

        cpu_menu = [round(0.025 * k, 3) for k in range(1, 13)]
        oracle: dict[tuple[int, int], int] = {}
        submits: list[tuple[int, int, TaskEvent]] = []  # (ts, seq, event)
        seq = 0
        for job_id in range(1, cfg.n_jobs + 1):
            u = rng.random()
            if u < cfg.unconstrained_fraction:
                template = _Template(())
                template.count = cfg.n_nodes
                role = "u"
            elif u < cfg.unconstrained_fraction + cfg.group_a_fraction and pools["a"]:
                template = pools["a"][int(rng.integers(0, len(pools["a"])))]
                role = "a"
            elif (
                u < cfg.unconstrained_fraction + cfg.group_a_fraction + cfg.group_c_fraction
                and pools["c"]
            ):
                template = pools["c"][int(rng.integers(0, len(pools["c"])))]
                role = "c"
            elif pools["random"]:
                template = pools["random"][int(rng.integers(0, len(pools["random"])))]
                role = "r"
            else:
                template = _Template(())
                template.count = cfg.n_nodes
                role = "u"
            n_tasks = int(rng.integers(cfg.tasks_per_job[0], cfg.tasks_per_job[1] + 1))
            r = rng.random()
            n_configs = 1 if r < 0.70 else (2 if r < 0.95 else 3)
            n_configs = min(n_configs, n_tasks)
            configs = [
                (cpu_menu[int(rng.integers(0, len(cpu_menu)))],
                 cpu_menu[int(rng.integers(0, len(cpu_menu)))])
                for _ in range(n_configs)
            ]
            submit_ts = int(rng.integers(1, span))
            finish_ts = None
            if role == "u" and rng.random() < cfg.finish_fraction:
                lifetime = int(rng.integers(cfg.interval_us // 10, 2 * cfg.interval_us))
                if submit_ts + lifetime < span:
                    finish_ts = submit_ts + lifetime
            for idx in range(n_tasks):
                cpu, mem = configs[idx * n_configs // n_tasks]
                spec = TaskSpec(job_id, idx, cpu, mem, template.constraints)
                submits.append((submit_ts, seq, TaskSubmit(submit_ts, spec)))
                seq += 1
                if finish_ts is not None:
                    submits.append((finish_ts, seq, TaskFinish(finish_ts, job_id, idx)))
                    seq += 1
                oracle[(job_id, idx)] = template.count

        if self.churn_attr is not None:
            n_updates = int(round(cfg.churn_rate * cfg.n_intervals))
            kind = self.pool_kinds[self.churn_attr]
            for _ in range(n_updates):
                ts = int(rng.integers(1, span))
                i = int(rng.integers(0, cfg.n_nodes))
                attrs = dict(self.nodes[i].attributes)
                if kind == "int":
                    attrs[self.churn_attr] = int(rng.integers(0, 10))
                else:
                    attrs[self.churn_attr] = _category(
                        int(rng.integers(0, cfg.categories_per_text_attribute))
                    )
                node_events.append((NodeUpdate(ts, Node(self.nodes[i].node_id, attrs))))

        node_events.sort(key=lambda e: e.timestamp)
        submits.sort(key=lambda item: (item[0], item[1]))
        task_events = [event for _, _, event in submits]
        return GeneratedTrace(node_events, task_events, oracle)


def generate_synthetic_trace(cfg: SyntheticTraceConfig) -> GeneratedTrace:
    """Generate a seeded trace; equal seeds give byte-identical streams."""
    return _Generator(cfg).generate()
