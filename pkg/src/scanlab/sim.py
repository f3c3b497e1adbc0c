"""Deterministic discrete-event backend for all scan plans.

Virtual time is integer nanoseconds; every sampled cost is quantized to it,
so event ordering never suffers float drift.  Phase boundaries are full
barriers.  Circuit phases (the lane scan and the global scan) execute their
stages as synchronous rounds: a round ends when the slowest gate of the
stage ends.  Message latency (default 0) delays value delivery for
cross-worker gates without occupying either worker; send/recv events are
instantaneous markers.

Same-timestamp work-stealing claims are resolved by lower-lane-index
priority, which makes dynamic runs bit-reproducible.
"""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

from .circuits import COPY, Circuit, build
from .distributed import StrategyPlan, partition
from .operators import (
    CostModel,
    CostStream,
    ScanOperator,
    constant_cost,
    make_operator,
    random_mod_affines,
    random_rigids,
)
from .stealing import DONE, LEFT, RIGHT, choose_direction, lane_starts, make_gaps

HIER_GLOBAL_KINDS = ("sequential", "dissemination", "ladner_fischer", "binomial")


class Event(NamedTuple):
    worker: int
    kind: str  # combine | send | recv | barrier | idle
    start: int
    end: int
    phase: str
    src: int
    dst: int
    seq: int


CSV_HEADER = "worker,kind,start_ns,end_ns,phase,src,dst"


@dataclass(frozen=True)
class Trace:
    """Per-worker event timeline of one simulated or executed run."""

    events: tuple
    makespan: int
    total_combines: int
    meta: dict

    def phase_combines(self) -> dict:
        out: dict = {}
        for ev in self.events:
            if ev.kind == "combine":
                out[ev.phase] = out.get(ev.phase, 0) + 1
        return out

    def phase_makespan(self, phase: str) -> int:
        """Completion time of a phase (max event end carrying its tag)."""
        return max((ev.end for ev in self.events if ev.phase == phase), default=0)

    def combine_busy_ns(self) -> int:
        return sum(ev.end - ev.start for ev in self.events if ev.kind == "combine")

    def to_csv_text(self) -> str:
        rows = [CSV_HEADER]
        for ev in self.events:
            rows.append(
                f"{ev.worker},{ev.kind},{ev.start},{ev.end},{ev.phase},{ev.src},{ev.dst}"
            )
        return "\n".join(rows) + "\n"

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_csv_text())

    def summary(self) -> dict:
        mean = self.meta.get("cost_mean_ns", 0)
        try:
            depth = critical_path(self)
        except ValueError:
            depth = None  # only uniform-cost traces expose an exact depth
        return {
            "backend": self.meta.get("backend", "sim"),
            "makespan_ns": self.makespan,
            "total_combines": self.total_combines,
            "depth": depth,
            "phase_combines": self.phase_combines(),
            "combine_busy_ns": self.combine_busy_ns(),
            "energy_proxy_ns": self.total_combines * mean,
            **{k: v for k, v in self.meta.items() if k != "cost_mean_ns"},
        }


class CostPlan:
    """Cost sequences shared by the static and dynamic variant of one config.

    Phase-1 costs are bound to elements: each lane's stream (seed + lane)
    is drawn once per element of the lane's static segment, so whoever
    processes an element pays the same price in both variants.  Later phases
    keep drawing from the per-lane streams, whose states match after the
    per-element setup.
    """

    def __init__(self, cost_model: CostModel, lane_bounds: Sequence):
        n = lane_bounds[-1][1] + 1
        self.mean_ns = cost_model.mean_ns
        self.element_costs = [0] * n
        self.streams: list[CostStream] = []
        for lane, (lo, hi) in enumerate(lane_bounds):
            stream = cost_model.stream(lane)
            for j in range(lo, hi + 1):
                self.element_costs[j] = stream.sample()
            self.streams.append(stream)

    @classmethod
    def from_element_costs(cls, costs: Sequence, lanes: int) -> "CostPlan":
        plan = cls.__new__(cls)
        plan.element_costs = list(costs)
        plan.mean_ns = int(sum(costs) / len(costs)) if costs else 0
        plan.streams = [constant_cost(0).stream(i) for i in range(lanes)]
        return plan


class _Engine:
    def __init__(self, nworkers: int):
        self.nworkers = nworkers
        self.clock = [0] * nworkers
        self._events: list = []
        self._seq = 0
        self.total_combines = 0

    def emit(self, worker, kind, start, end, phase, src=-1, dst=-1):
        self._seq += 1
        self._events.append(Event(worker, kind, start, end, phase, src, dst, self._seq))

    def combine_at(self, worker, start, dur, phase, src=-1, dst=-1) -> int:
        now = self.clock[worker]
        if start > now:
            self.emit(worker, "idle", now, start, phase)
        end = start + dur
        self.emit(worker, "combine", start, end, phase, src, dst)
        self.clock[worker] = end
        self.total_combines += 1
        return end

    def combine(self, worker, dur, phase, src=-1, dst=-1) -> int:
        return self.combine_at(worker, self.clock[worker], dur, phase, src, dst)

    def barrier(self, phase: str, workers=None) -> int:
        ws = range(self.nworkers) if workers is None else workers
        release = max(self.clock[w] for w in ws)
        for w in ws:
            if self.clock[w] < release:
                self.emit(w, "barrier", self.clock[w], release, phase)
                self.clock[w] = release
        return release

    def finish(self, meta: dict) -> Trace:
        events = tuple(sorted(self._events, key=lambda e: (e.start, e.worker, e.seq)))
        makespan = max(self.clock) if self.clock else 0
        return Trace(events, makespan, self.total_combines, meta)


def _run_circuit_phase(
    engine: _Engine,
    op: ScanOperator,
    circuit: Circuit,
    values: list,
    phase: str,
    workers: Sequence,
    streams: Sequence,
    latency: int,
) -> list:
    """Execute a circuit's stages as synchronous rounds on mapped workers.

    ``values`` holds the circuit's logical slot values (length base);
    ``workers[k]`` is the engine worker executing slot k, which also indexes
    ``streams``.
    """
    slots = [None] * circuit.width
    slots[: len(values)] = values
    if circuit.needs_identity:
        if op.identity is None:
            raise ValueError(f"{circuit.kind} circuit requires an operator identity")
        for i in circuit.identity_slots:
            slots[i] = op.identity
    t = max(engine.clock[w] for w in workers)
    for stage in circuit.stages:
        stage_end = t
        for kind, src, dst in stage:
            if kind == COPY:
                slots[dst] = slots[src]
                continue
            wsrc = workers[circuit.worker_of_slot(src)]
            wdst = workers[circuit.worker_of_slot(dst)]
            gstart = t
            if wsrc != wdst:
                engine.emit(wsrc, "send", t, t, phase, src, dst)
                gstart = t + latency
                engine.emit(wdst, "recv", gstart, gstart, phase, src, dst)
            dur = streams[circuit.worker_of_slot(dst)].sample()
            end = engine.combine_at(wdst, gstart, dur, phase, src, dst)
            slots[dst] = op.combine(slots[src], slots[dst])
            stage_end = max(stage_end, end)
        t = stage_end
    return slots[: circuit.n]


def _steal_phase(
    engine: _Engine,
    op: ScanOperator,
    xs: Sequence,
    lo: int,
    hi: int,
    lanes: int,
    worker_base: int,
    element_costs: Sequence,
    rate_prior: float,
    phase: str = "local1",
):
    """Work-stealing reduction of xs[lo..hi] over ``lanes`` virtual lanes.

    Returns per-lane ((pl, pr), value).  Claims are totally ordered by
    (finish time, lane index), so two runs of the same config produce the
    same schedule.
    """
    starts, _static = lane_starts(lo, hi, lanes)
    gaps = make_gaps(starts, lo, hi)
    pl = list(starts)
    pr = list(starts)
    res = [xs[s] for s in starts]
    ops = [0] * lanes
    busy = [0] * lanes
    t0 = engine.clock[worker_base]
    seq = 0
    heap: list = []
    pending: dict = {}
    for i in range(lanes):
        heapq.heappush(heap, (t0, i, seq))
        seq += 1

    def rate(i: int) -> float:
        return busy[i] / ops[i] if ops[i] else rate_prior

    while heap:
        t, lane, _ = heapq.heappop(heap)
        if lane in pending:
            dur = pending.pop(lane)
            ops[lane] += 1
            busy[lane] += dur
        lgap = gaps[lane - 1] if lane > 0 else None
        rgap = gaps[lane] if lane < len(gaps) else None
        sl = lgap.size if lgap else 0
        sr = rgap.size if rgap else 0
        if lane == 0:
            direction = RIGHT if sr else DONE
        elif lane == lanes - 1:
            direction = LEFT if sl else DONE
        else:
            direction = choose_direction(sl, rate(lane - 1), sr, rate(lane + 1))
        if direction == DONE:
            continue
        if direction == LEFT:
            e = lgap.claim_high()
        else:
            e = rgap.claim_low()
        dur = element_costs[e]
        engine.combine_at(worker_base + lane, t, dur, phase, dst=e)
        if direction == LEFT:
            res[lane] = op.combine(xs[e], res[lane])
            pl[lane] = e
        else:
            res[lane] = op.combine(res[lane], xs[e])
            pr[lane] = e
        pending[lane] = dur
        heapq.heappush(heap, (t + dur, lane, seq))
        seq += 1
    return [((pl[i], pr[i]), res[i]) for i in range(lanes)], starts


def _static_reduce(engine, op, xs, bounds, element_costs, phase="local1"):
    """Static phase 1: each lane folds its segment left to right."""
    totals = []
    for lane, (lo, hi) in enumerate(bounds):
        acc = xs[lo]
        for j in range(lo + 1, hi + 1):
            engine.combine(lane, element_costs[j], phase, dst=j)
            acc = op.combine(acc, xs[j])
        totals.append(acc)
    return totals


def _run_sequential(op, xs, cost_model, meta):
    engine = _Engine(1)
    stream = cost_model.stream(0)
    out = [xs[0]]
    acc = xs[0]
    for j in range(1, len(xs)):
        engine.combine(0, stream.sample(), "local1", dst=j)
        acc = op.combine(acc, xs[j])
        out.append(acc)
    return out, engine.finish(meta)


def _run_flat(op, xs, plan, cost_model, latency, cost_plan, meta):
    n, p = len(xs), plan.workers
    assignment = partition(n, p)
    bounds = assignment.bounds
    cost_plan = cost_plan or CostPlan(cost_model, bounds)
    engine = _Engine(p)
    values = list(xs)
    scan_local = plan.strategy == "scan_then_map"

    # phase 1: local scan or reduction
    totals = []
    for w, (lo, hi) in enumerate(bounds):
        acc = xs[lo]
        for j in range(lo + 1, hi + 1):
            engine.combine(w, cost_plan.element_costs[j], "local1", dst=j)
            acc = op.combine(acc, xs[j])
            if scan_local:
                values[j] = acc
        totals.append(acc)
    engine.barrier("local1")

    # global scan of the p segment totals
    circuit = build(plan.global_kind, p)
    if circuit.base != p:
        raise ValueError(
            f"{plan.global_kind} global circuit needs a power-of-two worker count, got {p}"
        )
    inclusive = _run_circuit_phase(
        engine, op, circuit, totals, "global", list(range(p)), cost_plan.streams, latency
    )
    engine.barrier("global")

    # phase 2
    if scan_local:
        for w in range(1, p):
            lo, hi = bounds[w]
            excl = inclusive[w - 1]
            for j in range(lo, hi):
                engine.combine(w, cost_plan.streams[w].sample(), "local2", dst=j)
                values[j] = op.combine(excl, values[j])
            values[hi] = inclusive[w]
    else:
        for w in range(p):
            lo, hi = bounds[w]
            if w > 0:
                excl = inclusive[w - 1]
            elif op.identity is not None:
                excl = op.identity
            else:
                excl = None
            if excl is not None:
                engine.combine(w, cost_plan.streams[w].sample(), "local2", dst=lo)
                acc = op.combine(excl, xs[lo])
            else:  # identity-free operator: first worker starts from its raw element
                acc = xs[lo]
            values[lo] = acc
            for j in range(lo + 1, hi + 1):
                engine.combine(w, cost_plan.streams[w].sample(), "local2", dst=j)
                acc = op.combine(acc, xs[j])
                values[j] = acc
    engine.barrier("local2")
    return values, engine.finish(meta)


def _run_hierarchical(op, xs, plan, cost_model, latency, cost_plan, meta):
    n = len(xs)
    pp, T = plan.pprime, plan.lanes
    p = pp * T
    node_bounds = partition(n, pp).bounds
    lane_bounds = []
    for lo, hi in node_bounds:
        lane_bounds.extend(
            (lo + a, lo + b) for a, b in partition(hi - lo + 1, T).bounds
        )
    cost_plan = cost_plan or CostPlan(cost_model, lane_bounds)
    engine = _Engine(p)
    if plan.global_kind not in HIER_GLOBAL_KINDS:
        raise ValueError(
            f"hierarchical global phase supports {HIER_GLOBAL_KINDS}, "
            f"got {plan.global_kind!r}"
        )

    # phase 1: per-node reduction, static segments or work stealing
    lane_ranges = []
    lane_totals = []  # [rank][lane]
    if plan.dynamic:
        for r, (lo, hi) in enumerate(node_bounds):
            lanes, _starts = _steal_phase(
                engine, op, xs, lo, hi, T, r * T,
                cost_plan.element_costs, cost_plan.mean_ns,
            )
            lane_ranges.extend(rng for rng, _ in lanes)
            lane_totals.append([v for _, v in lanes])
    else:
        totals = _static_reduce(engine, op, xs, lane_bounds, cost_plan.element_costs)
        lane_ranges = list(lane_bounds)
        lane_totals = [totals[r * T : (r + 1) * T] for r in range(pp)]
    engine.barrier("local1")

    # phase 2: scan of the T lane totals inside each rank
    lane_circuit = build(plan.lane_kind, T)
    if lane_circuit.base != T:
        raise ValueError(
            f"{plan.lane_kind} lane circuit needs a power-of-two lane count, got {T}"
        )
    lt = []
    for r in range(pp):
        lt.append(
            _run_circuit_phase(
                engine, op, lane_circuit, lane_totals[r], "lane",
                [r * T + l for l in range(T)],
                [cost_plan.streams[r * T + l] for l in range(T)],
                latency,
            )
        )
    engine.barrier("lane")

    # phase 3: global scan over rank totals; every received value is applied
    # by the T lanes to their running results, and folded into ext[r], the
    # rank's accumulated external prefix.  Only the last lane total travels.
    ext = [op.identity] * pp
    gcirc = build(plan.global_kind, pp)
    gslots = [lt[r][T - 1] for r in range(pp)] + [None] * (gcirc.width - pp)
    t = max(engine.clock)
    for stage in gcirc.stages:
        stage_end = t
        for kind, src, dst in stage:
            if kind == COPY:
                gslots[dst] = gslots[src]
                continue
            rsrc, rdst = gcirc.worker_of_slot(src), gcirc.worker_of_slot(dst)
            v = gslots[src]
            engine.emit(rsrc * T + T - 1, "send", t, t, "global", src, dst)
            gstart = t + latency
            engine.emit(rdst * T, "recv", gstart, gstart, "global", src, dst)
            for l in range(T):
                w = rdst * T + l
                dur = cost_plan.streams[w].sample()
                end = engine.combine_at(w, gstart, dur, "global", src, dst)
                lt[rdst][l] = op.combine(v, lt[rdst][l])
                stage_end = max(stage_end, end)
            if ext[rdst] is not None:
                ext[rdst] = op.combine(v, ext[rdst])
            gslots[dst] = op.combine(v, gslots[dst])
        t = stage_end
    engine.barrier("global")

    # phase 4: each lane applies its exclusive prefix and rescans its range
    values = list(xs)
    for r in range(pp):
        for l in range(T):
            w = r * T + l
            lo, hi = lane_ranges[w]
            excl = lt[r][l - 1] if l > 0 else ext[r]
            if excl is not None:
                engine.combine(w, cost_plan.streams[w].sample(), "local2", dst=lo)
                acc = op.combine(excl, xs[lo])
            else:  # identity-free operator on the very first lane
                acc = xs[lo]
            values[lo] = acc
            for j in range(lo + 1, hi + 1):
                engine.combine(w, cost_plan.streams[w].sample(), "local2", dst=j)
                acc = op.combine(acc, xs[j])
                values[j] = acc
    engine.barrier("local2")
    meta = dict(meta)
    meta["lane_ranges"] = tuple(lane_ranges)
    return values, engine.finish(meta)


def run_plan(
    op: ScanOperator,
    xs: Sequence,
    plan: StrategyPlan,
    latency_ns: int = 0,
    cost_model: Optional[CostModel] = None,
    cost_plan: Optional[CostPlan] = None,
):
    """Execute a plan on concrete values under the virtual clock.

    Returns (output, Trace).  A single-worker plan collapses to the plain
    sequential scan.
    """
    if len(xs) == 0:
        raise ValueError("cannot scan an empty input")
    if latency_ns < 0:
        raise ValueError("latency must be >= 0")
    cost_model = cost_model or op.cost
    meta = {
        "backend": "sim",
        "n": len(xs),
        "workers": plan.workers,
        "strategy": plan.strategy,
        "global_kind": plan.global_kind,
        "dynamic": plan.dynamic,
        "pprime": plan.pprime,
        "lanes": plan.lanes,
        "cost_kind": cost_model.kind,
        "cost_mean_ns": cost_model.mean_ns,
        "seed": cost_model.seed,
        "latency_ns": latency_ns,
    }
    if plan.workers == 1:
        return _run_sequential(op, xs, cost_model, meta)
    if plan.hierarchical:
        return _run_hierarchical(op, xs, plan, cost_model, latency_ns, cost_plan, meta)
    return _run_flat(op, xs, plan, cost_model, latency_ns, cost_plan, meta)


def steal_reduce_sim(op, xs, node_segment, lanes: int, cost):
    """Simulated work-stealing reduce of one segment; see stealing.steal_reduce."""
    lo, hi = node_segment
    if not (0 <= lo <= hi < len(xs)):
        raise ValueError(f"bad segment ({lo}, {hi}) for {len(xs)} elements")
    if isinstance(cost, CostModel):
        _starts, static_bounds = lane_starts(lo, hi, lanes)
        plan = CostPlan.__new__(CostPlan)
        plan.mean_ns = cost.mean_ns
        plan.element_costs = [0] * len(xs)
        plan.streams = []
        for lane, (l, h) in enumerate(static_bounds):
            stream = cost.stream(lane)
            for j in range(l, h + 1):
                plan.element_costs[j] = stream.sample()
            plan.streams.append(stream)
        element_costs, mean = plan.element_costs, plan.mean_ns
    else:
        element_costs = list(cost)
        if len(element_costs) != len(xs):
            raise ValueError("element cost vector must cover the whole input")
        seg = element_costs[lo : hi + 1]
        mean = sum(seg) / len(seg) if seg else 0
    engine = _Engine(lanes)
    lanes_out, _starts = _steal_phase(
        engine, op, xs, lo, hi, lanes, 0, element_costs, mean
    )
    engine.barrier("local1")
    meta = {
        "backend": "sim",
        "n": len(xs),
        "workers": lanes,
        "strategy": "steal_reduce",
        "segment": (lo, hi),
    }
    return lanes_out, engine.finish(meta)


@dataclass(frozen=True)
class SimConfig:
    """Complete description of one simulated run."""

    plan: StrategyPlan
    n: int
    domain: str = "mod_affine"
    cost: CostModel = field(default_factory=lambda: constant_cost(1))
    latency_ns: int = 0
    input_seed: Optional[int] = None


@dataclass(frozen=True)
class SimResult:
    output: list
    trace: Trace


def make_inputs(domain: str, n: int, seed: int) -> list:
    rng = random.Random(seed)
    if domain == "mod_affine":
        return random_mod_affines(n, rng)
    if domain == "rigid2d":
        return random_rigids(n, rng)
    if domain == "int64_add":
        return [rng.randrange(-1000, 1001) for _ in range(n)]
    raise ValueError(f"unknown domain: {domain!r}")


def simulate(config: SimConfig) -> SimResult:
    """Deterministic end-to-end run: same config, byte-identical trace."""
    op = make_operator(config.domain, config.cost)
    seed = config.input_seed if config.input_seed is not None else config.cost.seed
    xs = make_inputs(config.domain, config.n, seed)
    ys, trace = run_plan(op, xs, config.plan, latency_ns=config.latency_ns)
    return SimResult(ys, trace)


def critical_path(trace: Trace) -> int:
    """Longest chain of combine applications, from a uniform-cost trace."""
    durs = {ev.end - ev.start for ev in trace.events if ev.kind == "combine"}
    if not durs:
        return 0
    if len(durs) != 1:
        raise ValueError("critical_path requires a uniform-cost trace")
    unit = durs.pop()
    if unit == 0:
        raise ValueError("critical_path requires a nonzero op cost")
    if trace.makespan % unit:
        raise ValueError("trace is not aligned to the op cost (latency > 0?)")
    return trace.makespan // unit


def work_account(trace: Trace, phases: Optional[Sequence] = None) -> dict:
    """Combine counts per phase plus the total."""
    counts = trace.phase_combines()
    if phases is not None:
        counts = {ph: counts.get(ph, 0) for ph in phases}
    counts["total"] = sum(
        v for k, v in counts.items() if k != "total"
    ) if phases is not None else trace.total_combines
    return counts
