"""Real concurrent backend: OS-scheduled lane threads with busy-wait costs.

Ranks are emulated in-process; they exchange segment totals over ordered
queues, which keeps runs dependency-free while preserving the small-message
discipline of the distributed setting.  Lanes within a rank share only the
gap cursors (lock-protected, exactly-once claims) and the stale-tolerant
rate snapshots.  Phase transitions are barriers.

Mock costs are realized by busy-spinning on the per-thread CPU clock, not
by sleeping: sleeping hides scheduler effects, and the CPU clock keeps the
spun amount honest even when threads are preempted.  Wall-clock numbers are
reported, never asserted against any external figure; correctness (output
equals the sequential oracle) is asserted on every run.
"""

from __future__ import annotations

import os
import queue
import statistics
import threading
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .circuits import COPY, build
from .distributed import StrategyPlan, partition
from .operators import CostModel, ScanOperator, constant_cost, make_operator, sequential_scan
from .sim import CostPlan, Event, Trace, make_inputs
from .stealing import DONE, LEFT, RIGHT, LaneProgress, choose_direction, lane_starts, make_gaps

HIER_GLOBAL_KINDS = ("sequential", "dissemination", "ladner_fischer", "binomial")


@dataclass(frozen=True)
class ExecConfig:
    """One executor run: hierarchical plan, domain, costs, and safety knobs."""

    plan: StrategyPlan
    n: int
    domain: str = "mod_affine"
    cost: CostModel = field(default_factory=lambda: constant_cost(0))
    input_seed: Optional[int] = None
    pin_threads: bool = False
    watchdog_slack_s: float = 30.0
    watchdog_factor: float = 4.0


@dataclass
class Stats:
    """Measured facts of one run; per-lane vectors are indexed by worker id."""

    wall_ns: int
    lane_ops: list
    lane_busy_ns: list
    lane_idle_ns: list
    steal_counts: list
    phase_combines: dict
    trace: Trace

    def summary(self) -> dict:
        return self.trace.summary()


class _RunState:
    """Everything the lane threads share during one run."""

    def __init__(self, op, xs, plan, cost_plan, deadline_s, pin):
        self.op = op
        self.xs = xs
        self.plan = plan
        self.cost_plan = cost_plan
        self.deadline_s = deadline_s
        self.pin = pin
        pp, T = plan.pprime, plan.lanes
        self.pp, self.T = pp, T
        p = pp * T
        self.values = list(xs)
        self.node_bounds = partition(len(xs), pp).bounds
        self.static_bounds = []
        for lo, hi in self.node_bounds:
            self.static_bounds.extend(
                (lo + a, lo + b) for a, b in partition(hi - lo + 1, T).bounds
            )
        self.barrier = threading.Barrier(p)
        self.progress = [LaneProgress() for _ in range(p)]
        self.gaps = []      # per rank: list of Gap
        self.starts = []    # per rank: per-lane start index
        self.ranges = [None] * p
        self.totals = [[None] * T for _ in range(pp)]   # phase-1 results
        self.lt = self.totals                            # updated in place
        self.ext = [op.identity] * pp
        self.channels = {}  # (src_rank, dst_rank) -> Queue
        self.lane_ops = [0] * p
        self.lane_busy = [0] * p
        self.steal_counts = [0] * p
        self.phase_counts = {"local1": 0, "lane": 0, "global": 0, "local2": 0}
        self.count_lock = threading.Lock()
        self.events = [[] for _ in range(p)]
        self.t0 = 0
        self.errors = []
        if plan.dynamic:
            for lo, hi in self.node_bounds:
                starts, _ = lane_starts(lo, hi, T)
                self.starts.append(starts)
                self.gaps.append(make_gaps(starts, lo, hi))

    def channel(self, src: int, dst: int) -> queue.Queue:
        return self.channels.setdefault((src, dst), queue.Queue())

    def record(self, worker, phase, start_ns, end_ns, dst=-1, src=-1):
        self.events[worker].append(
            (worker, "combine", start_ns, end_ns, phase, src, dst)
        )

    def bump_phase(self, phase, k=1):
        with self.count_lock:
            self.phase_counts[phase] += k


def _spin(ns: int) -> None:
    if ns <= 0:
        return
    t0 = time.thread_time_ns()
    while time.thread_time_ns() - t0 < ns:
        pass


def _now(state) -> int:
    return time.perf_counter_ns() - state.t0


def _lane_phase1_static(state, w):
    lo, hi = state.static_bounds[w]
    xs, op = state.xs, state.op
    costs = state.cost_plan.element_costs
    acc = xs[lo]
    ops = busy = 0
    for j in range(lo + 1, hi + 1):
        t0 = _now(state)
        _spin(costs[j])
        acc = op.combine(acc, xs[j])
        state.record(w, "local1", t0, _now(state), dst=j)
        ops += 1
        busy += costs[j]
    state.ranges[w] = (lo, hi)
    state.lane_ops[w] = ops
    state.lane_busy[w] = busy
    state.totals[w // state.T][w % state.T] = acc


def _lane_phase1_dynamic(state, w):
    rank, lane = divmod(w, state.T)
    T = state.T
    xs, op = state.xs, state.op
    costs = state.cost_plan.element_costs
    prior = state.cost_plan.mean_ns
    gaps = state.gaps[rank]
    start = state.starts[rank][lane]
    st_lo, st_hi = state.static_bounds[w]
    progress = state.progress
    base = rank * T
    lgap = gaps[lane - 1] if lane > 0 else None
    rgap = gaps[lane] if lane < len(gaps) else None
    pl = pr = start
    acc = xs[start]
    ops = busy = steals = 0
    while True:
        sl = lgap.size if lgap else 0
        sr = rgap.size if rgap else 0
        if lane == 0:
            direction = RIGHT if sr else DONE
        elif lane == T - 1:
            direction = LEFT if sl else DONE
        else:
            direction = choose_direction(
                sl,
                progress[base + lane - 1].rate(prior),
                sr,
                progress[base + lane + 1].rate(prior),
            )
        if direction == DONE:
            break
        e = lgap.claim_high() if direction == LEFT else rgap.claim_low()
        if e is None:  # lost the race for the last element; re-check the gaps
            continue
        t0 = _now(state)
        _spin(costs[e])
        if direction == LEFT:
            acc = op.combine(xs[e], acc)
            pl = e
        else:
            acc = op.combine(acc, xs[e])
            pr = e
        state.record(w, "local1", t0, _now(state), dst=e)
        ops += 1
        busy += costs[e]
        if e < st_lo or e > st_hi:
            steals += 1
        progress[w].publish(ops, busy)
    state.ranges[w] = (pl, pr)
    state.lane_ops[w] = ops
    state.lane_busy[w] = busy
    state.steal_counts[w] = steals
    state.totals[rank][lane] = acc


def _rank_lane_scan(state, rank):
    """Phase 2, run by the rank coordinator: scan of the T lane totals."""
    op, T = state.op, state.T
    circuit = build(state.plan.lane_kind, T)
    if circuit.base != T:
        raise ValueError(
            f"{state.plan.lane_kind} lane circuit needs a power-of-two lane count"
        )
    streams = state.cost_plan.streams
    slots = [None] * circuit.width
    slots[:T] = state.totals[rank]
    if circuit.needs_identity:
        for i in circuit.identity_slots:
            slots[i] = op.identity
    w0 = rank * T
    for stage in circuit.stages:
        for kind, src, dst in stage:
            if kind == COPY:
                slots[dst] = slots[src]
                continue
            lane = circuit.worker_of_slot(dst)
            t0 = _now(state)
            _spin(streams[w0 + lane].sample())
            slots[dst] = op.combine(slots[src], slots[dst])
            state.record(w0, "lane", t0, _now(state), src=src, dst=dst)
            state.bump_phase("lane")
    state.lt[rank][:] = slots[:T]


def _rank_global_scan(state, rank):
    """Phase 3, run by the rank coordinator over ordered channels.

    Every gate sends the source rank's running total; the destination rank
    applies it to all of its lane results and folds it into the rank's
    external prefix.  Within a stage each rank sends before it receives, so
    all values observed are pre-stage values.
    """
    op, T, pp = state.op, state.T, state.pp
    circuit = build(state.plan.global_kind, pp)
    my_value = state.lt[rank][T - 1]
    streams = state.cost_plan.streams
    w0 = rank * T
    for stage_idx, stage in enumerate(circuit.stages):
        incoming = None
        for kind, src, dst in stage:
            if kind == COPY:
                continue  # ping-pong buffer hop: value unchanged, same rank
            rsrc = circuit.worker_of_slot(src)
            rdst = circuit.worker_of_slot(dst)
            if rsrc == rank:
                state.channel(rank, rdst).put((stage_idx, my_value))
            if rdst == rank:
                incoming = (stage_idx, rsrc)
        if incoming is not None:
            stage_tag, rsrc = incoming
            tag, v = state.channel(rsrc, rank).get(timeout=state.deadline_s)
            if tag != stage_tag:
                raise RuntimeError(f"rank {rank}: stage tag mismatch {tag} != {stage_tag}")
            for l in range(T):
                t0 = _now(state)
                _spin(streams[w0 + l].sample())
                state.lt[rank][l] = op.combine(v, state.lt[rank][l])
                state.record(w0, "global", t0, _now(state), src=rsrc, dst=rank)
            state.bump_phase("global", T)
            if state.ext[rank] is not None:
                state.ext[rank] = op.combine(v, state.ext[rank])
            my_value = state.lt[rank][T - 1]


def _lane_phase4(state, w):
    rank, lane = divmod(w, state.T)
    op, xs = state.op, state.xs
    lo, hi = state.ranges[w]
    stream = state.cost_plan.streams[w]
    excl = state.lt[rank][lane - 1] if lane > 0 else state.ext[rank]
    k = 0
    if excl is not None:
        t0 = _now(state)
        _spin(stream.sample())
        acc = op.combine(excl, xs[lo])
        state.record(w, "local2", t0, _now(state), dst=lo)
        k += 1
    else:  # identity-free operator on the global first lane
        acc = xs[lo]
    state.values[lo] = acc
    for j in range(lo + 1, hi + 1):
        t0 = _now(state)
        _spin(stream.sample())
        acc = op.combine(acc, xs[j])
        state.record(w, "local2", t0, _now(state), dst=j)
        k += 1
        state.values[j] = acc
    state.bump_phase("local2", k)


def _lane_body(state, w):
    try:
        if state.pin:
            try:
                cpus = sorted(os.sched_getaffinity(0))
                os.sched_setaffinity(0, {cpus[w % len(cpus)]})
            except OSError:
                pass
        if state.plan.dynamic:
            _lane_phase1_dynamic(state, w)
        else:
            _lane_phase1_static(state, w)
        state.barrier.wait(state.deadline_s)
        rank, lane = divmod(w, state.T)
        if lane == 0:
            _rank_lane_scan(state, rank)
        state.barrier.wait(state.deadline_s)
        if lane == 0:
            _rank_global_scan(state, rank)
        state.barrier.wait(state.deadline_s)
        _lane_phase4(state, w)
    except Exception as exc:  # propagate to the main thread
        state.errors.append((w, exc))
        state.barrier.abort()
        raise


def run_values(
    op: ScanOperator,
    xs: Sequence,
    plan: StrategyPlan,
    cost_model: Optional[CostModel] = None,
    pin_threads: bool = False,
    watchdog_slack_s: float = 30.0,
    watchdog_factor: float = 4.0,
):
    """Execute a hierarchical plan on real threads; returns (ys, Stats).

    The output is checked against the sequential oracle before returning; a
    mismatch raises.  A watchdog bounds the run by the total sampled cost
    (serialized) times ``watchdog_factor`` plus a constant slack.
    """
    if not plan.hierarchical:
        raise ValueError("the executor runs hierarchical plans (use pprime/lanes)")
    cost_model = cost_model or op.cost
    n = len(xs)
    if n < plan.workers:
        raise ValueError(f"need at least {plan.workers} elements, got {n}")
    node_bounds = partition(n, plan.pprime).bounds
    lane_bounds = []
    for lo, hi in node_bounds:
        lane_bounds.extend(
            (lo + a, lo + b) for a, b in partition(hi - lo + 1, plan.lanes).bounds
        )
    cost_plan = CostPlan(cost_model, lane_bounds)
    total_cost_s = sum(cost_plan.element_costs) / 1e9
    deadline_s = watchdog_slack_s + watchdog_factor * total_cost_s

    state = _RunState(op, xs, plan, cost_plan, deadline_s, pin_threads)
    threads = [
        threading.Thread(target=_lane_body, args=(state, w), daemon=True)
        for w in range(plan.workers)
    ]
    state.t0 = time.perf_counter_ns()
    for t in threads:
        t.start()
    deadline = time.monotonic() + deadline_s
    for t in threads:
        t.join(max(0.0, deadline - time.monotonic()))
    if any(t.is_alive() for t in threads):
        state.barrier.abort()
        raise TimeoutError(f"executor watchdog expired after {deadline_s:.1f}s")
    if state.errors:
        w, exc = state.errors[0]
        raise RuntimeError(f"lane {w} failed: {exc!r}") from exc
    wall_ns = time.perf_counter_ns() - state.t0

    ys = state.values
    oracle = sequential_scan(op, xs)
    if op.domain == "rigid2d":
        from .operators import rigid_close

        if not all(rigid_close(a, b) for a, b in zip(ys, oracle)):
            raise AssertionError("executor output differs from the sequential oracle")
    elif ys != oracle:
        raise AssertionError("executor output differs from the sequential oracle")

    events = []
    seq = 0
    for w in range(plan.workers):
        for worker, kind, start, end, phase, src, dst in state.events[w]:
            seq += 1
            events.append(Event(worker, kind, start, end, phase, src, dst, seq))
    events.sort(key=lambda e: (e.start, e.worker, e.seq))
    phase_counts = dict(state.phase_counts)
    phase_counts["local1"] = sum(state.lane_ops)
    total = sum(phase_counts.values())
    meta = {
        "backend": "exec",
        "n": n,
        "workers": plan.workers,
        "strategy": plan.strategy,
        "global_kind": plan.global_kind,
        "dynamic": plan.dynamic,
        "pprime": plan.pprime,
        "lanes": plan.lanes,
        "cost_kind": cost_model.kind,
        "cost_mean_ns": cost_model.mean_ns,
        "seed": cost_model.seed,
        "lane_ranges": tuple(state.ranges),
    }
    trace = Trace(tuple(events), wall_ns, total, meta)
    busy = list(state.lane_busy)
    # tail idle: how long a lane sat finished while phase 1 still ran
    phase1_end = max((e.end for e in events if e.phase == "local1"), default=0)
    lane_finish = [0] * plan.workers
    for e in events:
        if e.phase == "local1":
            lane_finish[e.worker] = max(lane_finish[e.worker], e.end)
    idle = [max(0, phase1_end - f) for f in lane_finish]
    stats = Stats(
        wall_ns=wall_ns,
        lane_ops=list(state.lane_ops),
        lane_busy_ns=busy,
        lane_idle_ns=idle,
        steal_counts=list(state.steal_counts),
        phase_combines=phase_counts,
        trace=trace,
    )
    return ys, stats


def run(config: ExecConfig):
    """Config-driven executor entry point; returns (ys, Stats)."""
    op = make_operator(config.domain, config.cost)
    seed = config.input_seed if config.input_seed is not None else config.cost.seed
    xs = make_inputs(config.domain, config.n, seed)
    return run_values(
        op,
        xs,
        config.plan,
        cost_model=config.cost,
        pin_threads=config.pin_threads,
        watchdog_slack_s=config.watchdog_slack_s,
        watchdog_factor=config.watchdog_factor,
    )


def summarize(values: Sequence) -> dict:
    """Mean, sample standard deviation and normal 95% CI half-width."""
    k = len(values)
    if k < 2:
        raise ValueError("need at least two repetitions")
    mean = statistics.fmean(values)
    sd = statistics.stdev(values)
    return {
        "runs": k,
        "mean": mean,
        "sd": sd,
        "ci95": 1.96 * sd / k**0.5,
    }


def repeat_and_summarize(config: ExecConfig, k: int) -> dict:
    """Run k times and summarize wall time; per-run stats are included."""
    if k < 2:
        raise ValueError("need at least two repetitions")
    walls = []
    runs = []
    for _ in range(k):
        _, stats = run(config)
        walls.append(stats.wall_ns)
        runs.append(stats)
    out = summarize(walls)
    out["wall_ns"] = walls
    out["stats"] = runs
    return out
