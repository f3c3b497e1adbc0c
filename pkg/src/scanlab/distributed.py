"""Distributed scan strategies: partitioning, plans, and closed-form predictors.

Two local-global-local strategies are supported:

* ``scan_then_map``   -- local inclusive scan, global scan of segment totals,
  then each worker except the first applies its exclusive prefix to its local
  results (its last element takes the global value for free),
* ``reduce_then_scan`` -- local reduction, global scan of totals, then each
  worker applies its exclusive prefix to its first element and rescans the
  whole segment.  Every worker performs exactly n/p phase-2 combines (the
  first one applies the identity), so counted work matches the closed forms.

A hierarchical plan replaces p workers with p' ranks times t lanes and
inserts a lane-level scan between the local and global phases; the dynamic
variant additionally lets neighboring lanes steal work in phase 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .circuits import BUILDERS, build, metrics

STRATEGIES = ("scan_then_map", "reduce_then_scan")

# leading constant of the depth term C1*log2(p) for log-depth circuits;
# None marks circuits without a logarithmic depth
CIRCUIT_C1 = {
    "sequential": None,
    "dissemination": 1,
    "ladner_fischer": 1,
    "blelloch": 2,
    "binomial": 2,
}


@dataclass(frozen=True)
class SegmentAssignment:
    """Contiguous tiling of [0, n) over p workers.

    Even split k = n // p, with the first n % p workers taking one extra
    element.
    """

    n: int
    workers: int
    bounds: tuple  # per-worker (l, r), inclusive

    @property
    def sizes(self) -> list:
        return [r - l + 1 for l, r in self.bounds]


def partition(n: int, p: int) -> SegmentAssignment:
    if p < 1:
        raise ValueError(f"need at least one worker, got {p}")
    if n < p:
        raise ValueError(f"cannot split {n} elements over {p} workers (n < p)")
    k, extra = divmod(n, p)
    bounds = []
    lo = 0
    for w in range(p):
        size = k + (1 if w < extra else 0)
        bounds.append((lo, lo + size - 1))
        lo += size
    return SegmentAssignment(n, p, tuple(bounds))


@dataclass(frozen=True)
class StrategyPlan:
    """Which strategy runs, on how many workers, with which global circuit.

    ``pprime``/``lanes`` select the hierarchical decomposition (pprime *
    lanes workers); ``local_kind`` picks the lane-scan circuit and defaults
    to the global kind; ``dynamic`` turns on work stealing in phase 1.
    """

    strategy: str
    workers: int
    global_kind: str = "dissemination"
    pprime: Optional[int] = None
    lanes: Optional[int] = None
    local_kind: Optional[str] = None
    dynamic: bool = False

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy: {self.strategy!r}")
        if self.global_kind not in BUILDERS:
            raise ValueError(f"unknown global circuit kind: {self.global_kind!r}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if (self.pprime is None) != (self.lanes is None):
            raise ValueError("pprime and lanes must be given together")
        if self.pprime is not None:
            if self.pprime < 1 or self.lanes < 1:
                raise ValueError("pprime and lanes must be >= 1")
            if self.pprime * self.lanes != self.workers:
                raise ValueError(
                    f"pprime * lanes must equal workers "
                    f"({self.pprime} * {self.lanes} != {self.workers})"
                )
            if self.strategy != "reduce_then_scan":
                raise ValueError(
                    "hierarchical plans require the reduce_then_scan strategy"
                )
        if self.dynamic and self.pprime is None:
            raise ValueError("dynamic plans require a (pprime, lanes) hierarchy")

    @property
    def hierarchical(self) -> bool:
        return self.pprime is not None

    @property
    def lane_kind(self) -> str:
        return self.local_kind or self.global_kind


def flat_plan(strategy: str, p: int, global_kind: str = "dissemination") -> StrategyPlan:
    return StrategyPlan(strategy, p, global_kind)


def hierarchical_plan(
    pprime: int,
    lanes: int,
    global_kind: str = "dissemination",
    local_kind: Optional[str] = None,
    dynamic: bool = False,
) -> StrategyPlan:
    return StrategyPlan(
        "reduce_then_scan",
        pprime * lanes,
        global_kind,
        pprime=pprime,
        lanes=lanes,
        local_kind=local_kind,
        dynamic=dynamic,
    )


@dataclass(frozen=True)
class DepthWorkPrediction:
    depth: int
    work: int
    depth_parts: tuple  # (local phase 1, global, local phase 2)
    work_parts: tuple


def predict(strategy: str, n: int, p: int, global_kind: str) -> DepthWorkPrediction:
    """Closed-form depth and work for an even distribution.

    Depth of the global phase comes from the circuit analyzer over p slots.
    p = 1 collapses to the plain sequential scan.  Uneven n/p is rejected:
    the formulas assume every worker holds exactly n/p elements.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy: {strategy!r}")
    if p == 1:
        return DepthWorkPrediction(n - 1, n - 1, (n - 1, 0, 0), (n - 1, 0, 0))
    if n % p != 0:
        raise ValueError(f"predictions require p | n, got n={n} p={p}")
    k = n // p
    g = metrics(build(global_kind, p))
    if strategy == "scan_then_map":
        depth_parts = (k - 1, g.depth, k - 1)
        work_parts = (n - p, g.work, (p - 1) * (k - 1))
    else:
        depth_parts = (k - 1, g.depth, k)
        work_parts = (n - p, g.work, n)
    return DepthWorkPrediction(
        sum(depth_parts), sum(work_parts), depth_parts, work_parts
    )


@dataclass(frozen=True)
class HierarchicalPrediction:
    depth: int
    work: int
    depth_parts: tuple  # (local phase 1, lane scan, global, local phase 2)
    work_parts: tuple


def predict_hierarchical(
    n: int, pprime: int, lanes: int, global_kind: str, local_kind: Optional[str] = None
) -> HierarchicalPrediction:
    """Depth/work of the four-phase hierarchical scan, even distribution.

    The global phase applies each received rank value to all ``lanes`` lane
    results in parallel, so its work is lanes * W_global(pprime) while its
    depth stays D_global(pprime).
    """
    p = pprime * lanes
    if p == 1:
        return HierarchicalPrediction(n - 1, n - 1, (n - 1, 0, 0, 0), (n - 1, 0, 0, 0))
    if n % p != 0:
        raise ValueError(f"predictions require p | n, got n={n} p={p}")
    k = n // p
    lane = metrics(build(local_kind or global_kind, lanes))
    g = metrics(build(global_kind, pprime))
    depth_parts = (k - 1, lane.depth, g.depth, k)
    work_parts = (n - p, pprime * lane.work, lanes * g.work, n)
    return HierarchicalPrediction(
        sum(depth_parts), sum(work_parts), depth_parts, work_parts
    )


def speedup_bound(kind: str, n: int, p: int, c1: float) -> float:
    """Upper speedup bound vs the serial scan (n - 1 applications).

    ``kind="scan"`` bounds the scan alone; ``kind="full"`` includes the n
    embarrassingly parallel preprocessing steps, which add n/p to the depth
    and n to the serial baseline.  p = 1 returns exactly 1.0.
    """
    if kind not in ("scan", "full"):
        raise ValueError(f"unknown bound kind: {kind!r}")
    if n < 1 or p < 1:
        raise ValueError("n and p must be >= 1")
    if p == 1:
        return 1.0
    denom = 2 * n / p - 1 + c1 * math.log2(p)
    if kind == "scan":
        return (n - 1) / denom
    return (2 * n - 1) / (n / p + denom)


def weak_scaling_delta(
    n: int,
    p: int,
    k: int,
    c1: float,
    global_kind: str = "dissemination",
    strategy: str = "reduce_then_scan",
) -> int:
    """Depth increase when problem and workers both scale by k (power of two).

    For log-depth global circuits the delta must equal c1 * log2(k); this is
    asserted before returning.
    """
    if k < 1 or (k & (k - 1)) != 0:
        raise ValueError(f"k must be a power of two, got {k}")
    delta = predict(strategy, k * n, k * p, global_kind).depth - predict(
        strategy, n, p, global_kind
    ).depth
    if CIRCUIT_C1.get(global_kind) is not None and p > 1:
        expected = round(c1 * math.log2(k))
        if delta != expected:
            raise AssertionError(
                f"weak-scaling delta {delta} != {expected} for {global_kind}"
            )
    return delta


def imbalance(costs: Sequence, assignment: SegmentAssignment) -> float:
    """Relative gap between the slowest segment and the mean segment cost.

    Returns (max_s T_s - mu) / mu where T_s sums the per-element costs of
    segment s and mu is the mean of the T_s.
    """
    if len(costs) != assignment.n:
        raise ValueError("costs length must match the assignment")
    sums = [sum(costs[l : r + 1]) for l, r in assignment.bounds]
    mu = sum(sums) / len(sums)
    if mu == 0:
        return 0.0
    return (max(sums) - mu) / mu


def scan_then_map(op, xs, plan: StrategyPlan, latency_ns: int = 0):
    """Run the scan-then-map strategy; returns (output, trace)."""
    if plan.strategy != "scan_then_map":
        raise ValueError("plan strategy must be scan_then_map")
    from . import sim

    return sim.run_plan(op, xs, plan, latency_ns=latency_ns)


def reduce_then_scan(op, xs, plan: StrategyPlan, latency_ns: int = 0):
    """Run the reduce-then-scan strategy; returns (output, trace)."""
    if plan.strategy != "reduce_then_scan":
        raise ValueError("plan strategy must be reduce_then_scan")
    if plan.hierarchical:
        raise ValueError("use hierarchical_scan for hierarchical plans")
    from . import sim

    return sim.run_plan(op, xs, plan, latency_ns=latency_ns)


def hierarchical_scan(op, xs, plan: StrategyPlan, latency_ns: int = 0):
    """Run the four-phase hierarchical scan; returns (output, trace)."""
    if not plan.hierarchical:
        raise ValueError("plan must carry a (pprime, lanes) hierarchy")
    from . import sim

    return sim.run_plan(op, xs, plan, latency_ns=latency_ns)
