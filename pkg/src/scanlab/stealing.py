"""Work-stealing reduce primitives: gaps, claims, and the direction heuristic.

Phase 1 of the dynamic hierarchical scan gives every lane a flexible
contiguous range.  Lane 0 starts at the left end of the node segment and
moves right, the last lane starts at the right end and moves left, interior
lanes start at the middle of their static segment and grow outward.  The
unprocessed elements between two adjacent lanes form a *gap*; a lane extends
its range by claiming the gap element nearest to its own boundary.  Claims
are single elements behind a lock (linearizable, exactly-once); the operator
cost dwarfs the claim overhead, so the finest granularity gives the best
balance.

Direction choice is greedy: with both gaps open, move toward the side with
the larger expected remaining work, gap size times the neighbor's observed
time per application.  For equal-sized gaps this is exactly "help the
slower neighbor"; ties go right, matching the initial move.  Weighting by
the remaining size is what keeps the last gaps closing together -- a pure
rate comparison latches lanes onto one side for long streaks once the
cumulative averages settle, and measurably loses to the static split on
independent random costs.  A lane with no completed application yet reports
the cost model's mean as its rate.  Rate reads may be stale; correctness
rests only on the claim protocol.
"""

from __future__ import annotations

import threading
from typing import Optional, Sequence

from .distributed import StrategyPlan, partition

LEFT = "left"
RIGHT = "right"
DONE = "done"


class Gap:
    """Contiguous run of unclaimed elements between two adjacent lanes.

    ``claim_low`` hands out the lowest index (for the lane on the left),
    ``claim_high`` the highest (for the lane on the right).  Each index is
    returned at most once across both sides; an exhausted gap yields None.
    """

    __slots__ = ("_lo", "_hi", "_lock")

    def __init__(self, lo: int, hi: int):
        self._lo = lo
        self._hi = hi
        self._lock = threading.Lock()

    @property
    def size(self) -> int:
        return max(0, self._hi - self._lo + 1)

    def claim_low(self) -> Optional[int]:
        with self._lock:
            if self._lo > self._hi:
                return None
            idx = self._lo
            self._lo += 1
            return idx

    def claim_high(self) -> Optional[int]:
        with self._lock:
            if self._lo > self._hi:
                return None
            idx = self._hi
            self._hi -= 1
            return idx


class LaneProgress:
    """Published (applications, busy time) snapshot of one lane.

    Writers publish after every completed application; readers may observe a
    stale pair, never a torn one.
    """

    __slots__ = ("_snap",)

    def __init__(self):
        self._snap = (0, 0)

    def publish(self, ops: int, busy_ns: int) -> None:
        self._snap = (ops, busy_ns)

    def rate(self, default_ns: float) -> float:
        ops, busy = self._snap
        if ops == 0:
            return default_ns
        return busy / ops


def choose_direction(
    left_size: int, left_rate: float, right_size: int, right_rate: float
) -> str:
    """Greedy direction for an interior lane; see module docstring.

    Both gaps open: go where more work is expected to remain (size times
    neighbor rate); for equal sizes this degenerates to the slower-neighbor
    rule.  One gap open: that side.  None: done.
    """
    if left_size > 0 and right_size > 0:
        return LEFT if left_size * left_rate > right_size * right_rate else RIGHT
    if left_size > 0:
        return LEFT
    if right_size > 0:
        return RIGHT
    return DONE


def lane_starts(lo: int, hi: int, lanes: int):
    """Start index per lane and the static per-lane segments of [lo, hi].

    Interior lanes start at the middle of their static segment; the edge
    lanes start at the node boundaries.
    """
    length = hi - lo + 1
    if length < lanes:
        raise ValueError(f"segment of {length} elements cannot feed {lanes} lanes")
    bounds = [(lo + a, lo + b) for a, b in partition(length, lanes).bounds]
    starts = []
    for i, (l, r) in enumerate(bounds):
        if i == 0:
            starts.append(l)
        elif i == lanes - 1:
            starts.append(r)
        else:
            starts.append(l + (r - l + 1) // 2)
    return starts, bounds


def make_gaps(starts: Sequence, lo: int, hi: int):
    """Initial gaps between adjacent lane start positions.

    With a single lane the whole remainder of the segment is one gap on its
    right side.
    """
    if len(starts) == 1:
        return [Gap(starts[0] + 1, hi)]
    return [Gap(starts[i] + 1, starts[i + 1] - 1) for i in range(len(starts) - 1)]


def steal_reduce(op, xs, node_segment, lanes: int, cost):
    """Work-stealing reduction of one node segment; returns (lanes, trace).

    ``node_segment`` is an inclusive (lo, hi) index pair into xs; ``cost``
    is either a CostModel (per-lane streams seeded as seed + lane) or an
    explicit per-element duration list covering xs.  The result is a list of
    ((pl, pr), value) per lane, whose ranges tile the segment, with every
    value equal to the in-order fold of its range.
    """
    from . import sim

    return sim.steal_reduce_sim(op, xs, node_segment, lanes, cost)


def dynamic_hierarchical_scan(op, xs, plan: StrategyPlan, latency_ns: int = 0):
    """Hierarchical scan with the work-stealing first phase; returns (ys, trace)."""
    if not plan.hierarchical or not plan.dynamic:
        raise ValueError("plan must be hierarchical with dynamic=True")
    from . import sim

    return sim.run_plan(op, xs, plan, latency_ns=latency_ns)


def audit_exactly_once(trace, n: int, starts: Sequence) -> None:
    """Check the exactly-once property on a phase-1 trace.

    Every element outside the start set must appear as the target of exactly
    one phase-1 combine event; start elements must not appear at all.
    """
    seen = {}
    for ev in trace.events:
        if ev.kind == "combine" and ev.phase == "local1":
            seen[ev.dst] = seen.get(ev.dst, 0) + 1
    start_set = set(starts)
    for e in range(n):
        expected = 0 if e in start_set else 1
        got = seen.get(e, 0)
        if got != expected:
            raise AssertionError(f"element {e}: combined {got} times, expected {expected}")
