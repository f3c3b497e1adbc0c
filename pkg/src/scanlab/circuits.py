"""Scan circuits as explicit staged gate schedules, plus depth/work analyzers.

A circuit operates on ``width`` slots; slots ``0..n-1`` hold the inputs and,
after evaluation, the inclusive scan.  Gates come in two kinds:

* ``combine src dst`` -- ``slot[dst] = slot[src] (.) slot[dst]``, where the
  value in ``src`` always covers the input range immediately preceding the
  range covered by ``dst`` (safe for non-commutative operators),
* ``copy src dst``    -- free data movement, not counted as work.

Within one stage no slot is written twice and no gate reads a slot written
by another gate of the same stage, so a stage is a valid parallel step.
Depth counts stages that contain at least one combine; work counts combine
gates.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Optional, Sequence

from .operators import CallCounter, ScanOperator

COMBINE = 0
COPY = 1

_KIND_NAMES = {COMBINE: "combine", COPY: "copy"}

Gate = tuple  # (kind, src, dst)

CIRCUIT_KINDS = ("sequential", "blelloch", "dissemination", "ladner_fischer", "binomial")


@dataclass(frozen=True)
class CircuitMetrics:
    depth: int
    work: int
    core_depth: int
    core_work: int


@dataclass(frozen=True)
class Circuit:
    """Staged schedule of gates computing an inclusive scan over n inputs.

    ``base`` is the logical slot count used to map slots onto workers
    (scratch slot s acts on worker ``s % base``).  ``identity_slots`` must be
    pre-loaded with the operator identity before evaluation.  For circuits
    with a trailing exclusive-to-inclusive conversion, ``core_stages`` marks
    how many leading stages form the core phases; metrics report core and
    total figures separately.
    """

    kind: str
    n: int
    width: int
    base: int
    stages: tuple
    identity_slots: tuple = ()
    core_stages: Optional[int] = None

    def worker_of_slot(self, slot: int) -> int:
        return slot % self.base

    @property
    def needs_identity(self) -> bool:
        return bool(self.identity_slots)


def _check_n(n: int) -> None:
    if n < 1:
        raise ValueError(f"circuit size must be >= 1, got {n}")


def build_sequential(n: int) -> Circuit:
    """n-1 combines in n-1 stages: the serial baseline."""
    _check_n(n)
    stages = tuple([(COMBINE, i, i + 1)] for i in range(n - 1))
    return Circuit("sequential", n, n, n, stages)


def build_dissemination(n: int) -> Circuit:
    """Recursive-doubling scan: iteration i combines slots j >= 2**i.

    Uses two ping-pong buffers so that every stage reads only values written
    in earlier stages; the inter-stage copies are the free communication
    hops of the classic diagram.
    """
    _check_n(n)
    if n == 1:
        return Circuit("dissemination", 1, 1, 1, ())
    stages = []
    cur = 0  # active buffer: 0 -> slots [0,n), 1 -> slots [n,2n)
    i = 0
    while (1 << i) < n:
        src_off, dst_off = cur * n, (1 - cur) * n
        stages.append([(COPY, src_off + j, dst_off + j) for j in range(n)])
        stages.append(
            [(COMBINE, src_off + j - (1 << i), dst_off + j) for j in range(1 << i, n)]
        )
        cur = 1 - cur
        i += 1
    if cur == 1:
        stages.append([(COPY, n + j, j) for j in range(n)])
    return Circuit("dissemination", n, 2 * n, n, tuple(stages))


def build_blelloch(n: int) -> Circuit:
    """Work-efficient tree scan: up-sweep, down-sweep, then one shift stage.

    The exclusive tree phases run on a scratch copy of the input; the final
    stage produces the inclusive result as ``exclusive[i] (.) x[i]`` (n-1
    combines), with the last slot taking the up-sweep total for free.  Sizes
    that are not powers of two are padded with identity elements, so the
    operator must provide an identity.
    """
    _check_n(n)
    if n == 1:
        return Circuit("blelloch", 1, 1, 1, ())
    m = 1
    while m < n:
        m *= 2
    # layout: inputs/outputs 0..m-1 (padded), scratch tree m..2m-1, root prefix 2m
    root = 2 * m
    s = lambda i: m + i
    stages = [[(COPY, i, s(i)) for i in range(n)]]
    identity_slots = tuple(range(n, m)) + (root,)
    if m > n:
        stages[0].extend((COPY, i, s(i)) for i in range(n, m))

    k = m.bit_length() - 1
    for d in range(1, k + 1):
        half, size = 1 << (d - 1), 1 << d
        stages.append(
            [(COMBINE, s(i + half - 1), s(i + size - 1)) for i in range(0, m, size)]
        )

    # down-sweep: each internal node turns its left child's subtree total
    # into the right child's exclusive prefix; the parent prefix of a left
    # child is the parent's own prefix, so no gate is needed for it.
    leaf_prefix = [root] * m
    level = [(0, m - 1, root)]
    while level:
        gates, nxt = [], []
        for lo, hi, pslot in level:
            if lo == hi:
                leaf_prefix[lo] = pslot
                continue
            mid = (lo + hi) // 2
            gates.append((COMBINE, pslot, s(mid)))
            nxt.append((lo, mid, pslot))
            nxt.append((mid + 1, hi, s(mid)))
        if gates:
            stages.append(gates)
        level = nxt

    core_stages = len(stages)
    conv = [(COMBINE, leaf_prefix[i], i) for i in range(n - 1)]
    conv.append((COPY, s(m - 1), n - 1))
    stages.append(conv)
    return Circuit(
        "blelloch", n, 2 * m + 1, m, tuple(stages), identity_slots, core_stages
    )


def build_ladner_fischer(n: int) -> Circuit:
    """Depth-optimal member of the Ladner-Fischer family.

    Recursive shape: the first half is scanned by the work-saving pairing
    construction (whose last output, the half total, is ready one level
    early), the second half is scanned depth-optimally, and a final fan
    applies the first-half total to every second-half output.  Depth is
    ceil(log2 n); work stays below 4n - 5.
    """
    _check_n(n)
    ready = [0] * n
    levels = defaultdict(list)

    def add(src: int, dst: int) -> None:
        lvl = max(ready[src], ready[dst]) + 1
        levels[lvl].append((COMBINE, src, dst))
        ready[dst] = lvl

    def p0(slots: list) -> None:
        k = len(slots)
        if k == 1:
            return
        if k == 2:
            add(slots[0], slots[1])
            return
        a = (k + 1) // 2
        p1(slots[:a])
        p0(slots[a:])
        t = slots[a - 1]
        for dst in slots[a:]:
            add(t, dst)

    def p1(slots: list) -> None:
        k = len(slots)
        if k == 1:
            return
        if k == 2:
            add(slots[0], slots[1])
            return
        base = max(ready[sl] for sl in slots)
        for j in range(k // 2):
            add(slots[2 * j], slots[2 * j + 1])
        reduced = [slots[2 * j + 1] for j in range(k // 2)]
        if k % 2:
            # align the unpaired tail with the pair level; placement only,
            # never moves a gate before its operands are ready
            ready[slots[-1]] = base + 1
            reduced.append(slots[-1])
        p0(reduced)
        for b in range(2, k - 1 if k % 2 else k, 2):
            add(slots[b - 1], slots[b])

    p0(list(range(n)))
    stages = tuple(levels[k] for k in sorted(levels))
    return Circuit("ladner_fischer", n, n, n, stages)


_LF_MEMO = {("p0", 1): (0, (0,)), ("p0", 2): (1, (0, 1)),
            ("p1", 1): (0, (0,)), ("p1", 2): (1, (0, 1))}


def _lf_counts(kind: str, n: int):
    """Work and per-output ready levels of the builder, without gate lists."""
    key = (kind, n)
    hit = _LF_MEMO.get(key)
    if hit is not None:
        return hit
    if kind == "p0":
        a = (n + 1) // 2
        w1, r1 = _lf_counts("p1", a)
        w0, r0 = _lf_counts("p0", n - a)
        t = r1[-1]
        out = r1 + tuple(max(t, r) + 1 for r in r0)
        res = (w1 + w0 + (n - a), out)
    else:
        q = (n + 1) // 2
        w0, r0 = _lf_counts("p0", q)
        out = [0] * n
        for j in range(n // 2):
            out[2 * j + 1] = 1 + r0[j]
        if n % 2:
            out[n - 1] = 1 + r0[-1]
        expand = 0
        for b in range(2, n - 1 if n % 2 else n, 2):
            out[b] = out[b - 1] + 1
            expand += 1
        res = (n // 2 + w0 + expand, tuple(out))
    _LF_MEMO[key] = res
    return res


def ladner_fischer_metrics(n: int) -> CircuitMetrics:
    """Exact metrics of ``build_ladner_fischer(n)`` via the size recurrence.

    Avoids materializing gates; used for exhaustive sweeps over n.
    """
    _check_n(n)
    work, ready = _lf_counts("p0", n)
    depth = max(ready)
    return CircuitMetrics(depth, work, depth, work)


def build_binomial(n: int) -> Circuit:
    """Binomial-tree (Brent-Kung style) scan: the latency-optimized baseline
    standing in for a library collective.  Depth 2*ceil(log2 n) - 1 for
    powers of two, work below 2n.
    """
    _check_n(n)
    stages = []
    d = 1
    while (1 << d) - 1 < n:
        stride = 1 << d
        stages.append(
            [(COMBINE, j - stride // 2, j) for j in range(stride - 1, n, stride)]
        )
        d += 1
    for dd in range(d - 1, 0, -1):
        stride = 1 << dd
        gates = [
            (COMBINE, j - stride // 2, j)
            for j in range(stride + stride // 2 - 1, n, stride)
        ]
        if gates:
            stages.append(gates)
    return Circuit("binomial", n, n, n, tuple(stages))


BUILDERS = {
    "sequential": build_sequential,
    "dissemination": build_dissemination,
    "blelloch": build_blelloch,
    "ladner_fischer": build_ladner_fischer,
    "binomial": build_binomial,
}


def build(kind: str, n: int) -> Circuit:
    try:
        builder = BUILDERS[kind]
    except KeyError:
        raise ValueError(f"unknown circuit kind: {kind!r}") from None
    return builder(n)


def evaluate(
    circuit: Circuit,
    op: ScanOperator,
    xs: Sequence,
    counter: Optional[CallCounter] = None,
) -> list:
    """Run the circuit on concrete values; returns the inclusive scan.

    Exactly ``metrics(circuit).work`` combine calls are made, observable via
    ``counter``.
    """
    if len(xs) != circuit.n:
        raise ValueError(f"expected {circuit.n} inputs, got {len(xs)}")
    if circuit.needs_identity and op.identity is None:
        raise ValueError(f"{circuit.kind} circuit requires an operator identity")
    slots = [None] * circuit.width
    slots[: circuit.n] = list(xs)
    for i in circuit.identity_slots:
        slots[i] = op.identity
    combine = op.combine
    ncalls = 0
    for stage in circuit.stages:
        for kind, src, dst in stage:
            if kind == COMBINE:
                slots[dst] = combine(slots[src], slots[dst])
                ncalls += 1
            else:
                slots[dst] = slots[src]
    if counter is not None:
        counter.count += ncalls
    return slots[: circuit.n]


def metrics(circuit: Circuit) -> CircuitMetrics:
    """Depth = stages containing at least one combine; work = combine gates."""
    depth = work = 0
    core_depth = core_work = 0
    cutoff = circuit.core_stages if circuit.core_stages is not None else len(circuit.stages)
    for idx, stage in enumerate(circuit.stages):
        combines = sum(1 for g in stage if g[0] == COMBINE)
        if combines:
            depth += 1
            work += combines
            if idx < cutoff:
                core_depth += 1
                core_work += combines
    return CircuitMetrics(depth, work, core_depth, core_work)


def validate(circuit: Circuit) -> None:
    """Check stage-parallel safety; raises ValueError on violation."""
    for idx, stage in enumerate(circuit.stages):
        writes = [g[2] for g in stage]
        wset = set(writes)
        if len(writes) != len(wset):
            raise ValueError(f"stage {idx}: slot written twice")
        for kind, src, dst in stage:
            if src in wset:
                raise ValueError(f"stage {idx}: gate reads slot {src} written in stage")
            if kind == COMBINE and dst not in wset:
                raise ValueError(f"stage {idx}: inconsistent write set")
            if not (0 <= src < circuit.width and 0 <= dst < circuit.width):
                raise ValueError(f"stage {idx}: slot out of range")


def export_text(circuit: Circuit) -> str:
    """Stable plain-text description: one gate per line, ``stage src dst kind``."""
    lines = [
        f"# circuit {circuit.kind} n={circuit.n} width={circuit.width} "
        f"stages={len(circuit.stages)}"
    ]
    for idx, stage in enumerate(circuit.stages):
        for kind, src, dst in stage:
            lines.append(f"{idx} {src} {dst} {_KIND_NAMES[kind]}")
    return "\n".join(lines) + "\n"


def dissemination_work(n: int) -> int:
    """Closed form: sum over iterations i of (n - 2**i)."""
    total, i = 0, 0
    while (1 << i) < n:
        total += n - (1 << i)
        i += 1
    return total
