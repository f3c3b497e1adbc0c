"""Command-line front door: verify, bench, predict, sweep.

Exit codes: 0 success, 1 property failure, 2 usage error.  Reports are CSV
plus a JSON mirror; a PNG figure is rendered next to them unless --no-plot
is given.  Config files are flat ``key=value`` lines (# comments allowed);
explicit command-line flags override file values.

Cost model specs: ``const:<dur>`` or ``exp:<dur>`` with duration suffixes
ns/us/ms/s, e.g. ``exp:10ms``; ``zero`` and ``unit`` are shorthands for
``const:0`` and ``const:1ns``.
"""

from __future__ import annotations

import argparse
import math
import random
import sys
from dataclasses import dataclass, fields, replace
from typing import Optional

from . import report
from .circuits import (
    BUILDERS,
    build_dissemination,
    evaluate,
    ladner_fischer_metrics,
    metrics,
    validate,
)
from .distributed import (
    StrategyPlan,
    flat_plan,
    hierarchical_plan,
    imbalance,
    partition,
    predict,
    predict_hierarchical,
    speedup_bound,
)
from .executor import ExecConfig, run as exec_run, summarize
from .operators import (
    CallCounter,
    CostModel,
    DEFAULT_SEED,
    constant_cost,
    exponential_cost,
    make_operator,
    mod_affine_op,
    random_mod_affines,
    sequential_scan,
)
from .sim import CostPlan, make_inputs, run_plan
from .stealing import audit_exactly_once

STRATEGY_CHOICES = ("scan_then_map", "reduce_then_scan", "hierarchical", "dynamic")

_DUR_SUFFIX = {"ns": 1, "us": 1_000, "ms": 1_000_000, "s": 1_000_000_000}


def parse_duration_ns(text: str) -> int:
    text = text.strip().lower()
    for suffix, mult in sorted(_DUR_SUFFIX.items(), key=lambda kv: -len(kv[0])):
        if text.endswith(suffix):
            return int(round(float(text[: -len(suffix)]) * mult))
    return int(round(float(text)))  # bare numbers are nanoseconds


def parse_cost_spec(spec: str, seed: int) -> CostModel:
    s = spec.strip().lower()
    if s == "zero":
        return constant_cost(0, seed)
    if s == "unit":
        return constant_cost(1, seed)
    if ":" not in s:
        raise ValueError(f"bad cost spec {spec!r} (expected kind:duration)")
    kind, dur = s.split(":", 1)
    mean = parse_duration_ns(dur)
    if kind in ("const", "constant"):
        return constant_cost(mean, seed)
    if kind in ("exp", "exponential"):
        return exponential_cost(mean, seed)
    raise ValueError(f"unknown cost kind {kind!r}")


@dataclass
class ExperimentConfig:
    """Resolved settings of one CLI invocation."""

    n: int = 512
    ranks: int = 2
    lanes: int = 4
    strategy: str = "reduce_then_scan"
    global_kind: str = "dissemination"
    cost: str = "unit"
    seed: int = DEFAULT_SEED
    reps: int = 5
    backend: str = "sim"
    out: Optional[str] = None
    scaling: str = "strong"
    workers: str = "1,2,4,8"
    k_factors: str = "1,2,4,8"
    latency_ns: int = 0
    plot: bool = True

    def cost_model(self) -> CostModel:
        return parse_cost_spec(self.cost, self.seed)

    def worker_list(self) -> list:
        return [int(w) for w in str(self.workers).split(",") if w.strip()]

    def k_list(self) -> list:
        return [int(k) for k in str(self.k_factors).split(",") if k.strip()]


_KEY_ALIASES = {"global": "global_kind", "pprime": "ranks", "t": "lanes", "p": "workers"}
_CONFIG_KEYS = {f.name for f in fields(ExperimentConfig)} | set(_KEY_ALIASES)
_INT_KEYS = {"n", "ranks", "lanes", "seed", "reps", "latency_ns"}
_BOOL_KEYS = {"plot"}


def load_config_file(path: str) -> dict:
    """Flat key=value config; unknown keys are reported as usage errors.

    ``p``, ``pprime`` and ``t`` are accepted as aliases for workers, ranks
    and lanes.
    """
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in _CONFIG_KEYS:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            key = _KEY_ALIASES.get(key, key)
            if key in _INT_KEYS:
                out[key] = int(value)
            elif key in _BOOL_KEYS:
                out[key] = value.lower() in ("1", "true", "yes", "on")
            else:
                out[key] = value
    return out


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    cfg = ExperimentConfig()
    if getattr(args, "config", None):
        for key, value in load_config_file(args.config).items():
            setattr(cfg, key, value)
    overrides = {
        "n": args.n, "ranks": args.ranks, "lanes": args.lanes,
        "strategy": args.strategy, "global_kind": getattr(args, "global_kind", None),
        "cost": args.cost, "seed": args.seed, "reps": args.reps,
        "backend": args.backend, "out": args.out,
        "scaling": getattr(args, "scaling", None),
        "workers": getattr(args, "workers", None),
        "k_factors": getattr(args, "k_factors", None),
        "latency_ns": getattr(args, "latency_ns", None),
    }
    for key, value in overrides.items():
        if value is not None:
            setattr(cfg, key, value)
    if getattr(args, "no_plot", False):
        cfg.plot = False
    return cfg


# ---------------------------------------------------------------------------
# verify


def _suite_circuit_counts(n_max, builders, rng):
    c8 = builders["dissemination"](8)
    m8 = metrics(c8)
    if (m8.depth, m8.work) != (3, 17):
        return False, f"dissemination n=8 gave depth={m8.depth} work={m8.work}"
    n = 2
    while n <= max(16, n_max):
        md = metrics(builders["dissemination"](n))
        if md.work != n * int(math.log2(n)) - n + 1:
            return False, f"dissemination work formula failed at n={n}"
        mb = metrics(builders["blelloch"](n))
        if mb.core_work != 2 * (n - 1) or mb.core_depth != 2 * int(math.log2(n)):
            return False, f"blelloch core metrics failed at n={n}"
        lf = ladner_fischer_metrics(n)
        if lf.depth != math.ceil(math.log2(n)) or lf.work >= 4 * n - 5:
            return False, f"ladner_fischer bound failed at n={n}"
        n *= 2
    return True, "table formulas hold for powers of two"


def _suite_circuit_oracle(n_max, kinds, builders, rng):
    op = mod_affine_op()
    sizes = sorted({1, 2, 3, 7, 8, 33, 64} | {rng.randrange(2, max(3, n_max)) for _ in range(6)})
    for kind in kinds:
        for n in sizes:
            circuit = builders[kind](n)
            validate(circuit)
            xs = random_mod_affines(n, rng)
            counter = CallCounter()
            got = evaluate(circuit, op, xs, counter)
            if got != sequential_scan(op, xs):
                return False, f"{kind} n={n} output differs from the oracle"
            if counter.count != metrics(circuit).work:
                return False, f"{kind} n={n} combine count != analyzer work"
    return True, f"kinds {','.join(kinds)} match the oracle on sizes {sizes}"


def _suite_strategy_oracle(n_max, rng):
    op = mod_affine_op()
    for _ in range(12):
        n = rng.randrange(8, max(9, n_max))
        xs = random_mod_affines(n, rng)
        want = sequential_scan(op, xs)
        p = rng.choice([q for q in (1, 2, 4, 8) if q <= n])
        for strategy in ("scan_then_map", "reduce_then_scan"):
            got, _ = run_plan(op, xs, flat_plan(strategy, p))
            if got != want:
                return False, f"{strategy} n={n} p={p} differs from the oracle"
        pp = rng.choice([1, 2, 4])
        lanes = rng.choice([1, 2, 4])
        if pp * lanes <= n:
            for dyn in (False, True):
                plan = hierarchical_plan(pp, lanes, dynamic=dyn)
                got, _ = run_plan(op, xs, plan)
                if got != want:
                    return False, f"hierarchical({pp}x{lanes},dyn={dyn}) n={n} differs"
    return True, "flat and hierarchical strategies equal the oracle"


def _suite_formula_fidelity(rng):
    op = mod_affine_op()
    unit = constant_cost(1)
    for n in (16, 64):
        for p in (2, 4, 8):
            xs = random_mod_affines(n, rng)
            for strategy in ("scan_then_map", "reduce_then_scan"):
                for gk in ("dissemination", "ladner_fischer", "binomial"):
                    _, tr = run_plan(op, xs, flat_plan(strategy, p, gk), cost_model=unit)
                    pred = predict(strategy, n, p, gk)
                    if tr.makespan != pred.depth or tr.total_combines != pred.work:
                        return False, (
                            f"{strategy}/{gk} n={n} p={p}: measured "
                            f"({tr.makespan},{tr.total_combines}) != predicted "
                            f"({pred.depth},{pred.work})"
                        )
    return True, "unit-cost makespan and counted work equal the closed forms"


def _suite_exactly_once_sim(rng):
    op = mod_affine_op()
    for _ in range(10):
        pp, lanes = rng.choice([(1, 4), (2, 3), (2, 4), (4, 2)])
        n = rng.randrange(pp * lanes, 40 * pp * lanes)
        xs = random_mod_affines(n, rng)
        cost = exponential_cost(1000, seed=rng.randrange(1 << 30))
        plan = hierarchical_plan(pp, lanes, dynamic=True)
        got, tr = run_plan(op, xs, plan, cost_model=cost)
        if got != sequential_scan(op, xs):
            return False, f"dynamic scan n={n} ({pp}x{lanes}) differs from the oracle"
        node_bounds = partition(n, pp).bounds
        starts = []
        from .stealing import lane_starts

        for lo, hi in node_bounds:
            starts.extend(lane_starts(lo, hi, lanes)[0])
        try:
            audit_exactly_once(tr, n, starts)
        except AssertionError as exc:
            return False, str(exc)
    return True, "every element claimed exactly once in dynamic phase 1"


def _suite_exactly_once_exec(rng, runs=25):
    for i in range(runs):
        pp = rng.choice([1, 2])
        lanes = rng.choice([2, 3, 4])
        n = rng.randrange(pp * lanes, 30 * pp * lanes)
        cfg = ExecConfig(
            hierarchical_plan(pp, lanes, dynamic=True),
            n=n,
            cost=constant_cost(0, seed=rng.randrange(1 << 30)),
            input_seed=rng.randrange(1 << 30),
        )
        try:
            _, stats = exec_run(cfg)
        except (AssertionError, TimeoutError, RuntimeError) as exc:
            return False, f"executor stress run {i} failed: {exc}"
        if sum(stats.lane_ops) != n - pp * lanes:
            return False, f"run {i}: lane op counts do not sum to the element count"
    return True, f"{runs} threaded stress runs equal the oracle"


def _suite_determinism(rng):
    cost = exponential_cost(5000, seed=rng.randrange(1 << 30))
    op = mod_affine_op(cost=cost)
    xs = random_mod_affines(256, rng)
    plan = hierarchical_plan(2, 4, dynamic=True)
    _, t1 = run_plan(op, xs, plan)
    _, t2 = run_plan(op, xs, plan)
    if t1.to_csv_text() != t2.to_csv_text():
        return False, "two identical sim runs produced different trace CSVs"
    return True, "identical configs give byte-identical traces"


def _suite_bound_discipline(rng):
    op = mod_affine_op()
    unit = constant_cost(1)
    serial_ops = {}
    for n in (64, 256):
        serial_ops[n] = n - 1
        for p in (2, 4, 8):
            for gk in ("dissemination", "ladner_fischer", "binomial"):
                xs = random_mod_affines(n, rng)
                _, tr = run_plan(op, xs, flat_plan("reduce_then_scan", p, gk), cost_model=unit)
                speedup = serial_ops[n] / tr.makespan
                bound = speedup_bound("scan", n, p, 1.0)
                if speedup > bound + 1e-12:
                    return False, f"speedup {speedup:.3f} exceeds bound {bound:.3f} ({gk},n={n},p={p})"
    return True, "unit-cost speedups never exceed the analytic bound"


def broken_dissemination(n: int):
    """Fault-injection hook: drops one combine gate (negative control)."""
    circuit = build_dissemination(n)
    if not circuit.stages:
        return circuit
    stages = [list(stage) for stage in circuit.stages]
    for stage in stages:
        for i, gate in enumerate(stage):
            if gate[0] == 0:  # first combine found: drop it
                del stage[i]
                return replace(circuit, stages=tuple(tuple(s) for s in stages))
    return circuit


def cmd_verify(cfg: ExperimentConfig, all_circuits: bool, inject_fault: Optional[str]) -> int:
    rng = random.Random(cfg.seed)
    builders = dict(BUILDERS)
    if inject_fault == "broken-circuit":
        builders["dissemination"] = broken_dissemination
    kinds = ("dissemination", "ladner_fischer", "binomial")
    if all_circuits:
        kinds = ("sequential", "dissemination", "ladner_fischer", "binomial", "blelloch")
    suites = [
        ("circuit_counts", lambda: _suite_circuit_counts(cfg.n, builders, rng)),
        ("circuit_oracle", lambda: _suite_circuit_oracle(cfg.n, kinds, builders, rng)),
        ("strategy_oracle", lambda: _suite_strategy_oracle(cfg.n, rng)),
        ("formula_fidelity", lambda: _suite_formula_fidelity(rng)),
        ("exactly_once_sim", lambda: _suite_exactly_once_sim(rng)),
        ("exactly_once_exec", lambda: _suite_exactly_once_exec(rng)),
        ("determinism", lambda: _suite_determinism(rng)),
        ("bound_discipline", lambda: _suite_bound_discipline(rng)),
    ]
    results = []
    failed = 0
    for name, fn in suites:
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashing suite is a failing suite
            ok, detail = False, f"exception: {exc!r}"
        results.append({"property": name, "ok": ok, "seed": cfg.seed, "detail": detail})
        failed += not ok
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    if cfg.out:
        report.write_json(cfg.out, {"seed": cfg.seed, "results": results})
        print(f"report written to {cfg.out}")
    return 1 if failed else 0


# ---------------------------------------------------------------------------
# bench / sweep


def _bench_bound(strategy: str, n: int, p: int, circuit: str) -> float:
    """Strategy-aware speedup bound against the serial n-1 applications.

    Uses c1 = 1, the depth-optimal constant: every scan circuit over p slots
    has depth at least log2(p), so this bounds every circuit choice, exactly
    like the single dashed bound line of a scaling plot.  scan_then_map
    saves one phase-2 application on the critical path, so its denominator
    is one less than the reduce-family bound.
    """
    if p == 1:
        return 1.0
    if strategy == "scan_then_map":
        return (n - 1) / (2 * n / p - 2 + math.log2(p))
    return speedup_bound("scan", n, p, 1.0)


def _measure_serial(cfg: ExperimentConfig, n: int) -> float:
    op = make_operator("mod_affine", cfg.cost_model())
    xs = make_inputs("mod_affine", n, cfg.seed)
    if cfg.backend == "exec":
        ec = ExecConfig(hierarchical_plan(1, 1), n=n, cost=cfg.cost_model(), input_seed=cfg.seed)
        times = [exec_run(ec)[1].wall_ns for _ in range(max(2, cfg.reps))]
        return sum(times) / len(times)
    _, tr = run_plan(op, xs, flat_plan("reduce_then_scan", 1), cost_model=cfg.cost_model())
    return float(tr.makespan)


def _bench_variants(cfg: ExperimentConfig, w: int):
    """(label, plan) pairs benched per point: the configured static strategy
    and, when the worker count supports the hierarchy, its dynamic twin."""
    lanes = cfg.lanes
    variants = []
    if cfg.strategy in ("scan_then_map", "reduce_then_scan"):
        variants.append((cfg.strategy, flat_plan(cfg.strategy, w, cfg.global_kind)))
    else:
        if w % lanes or w // lanes < 1:
            return None, f"workers={w} not divisible into lanes={lanes}"
        variants.append(
            ("hierarchical", hierarchical_plan(w // lanes, lanes, cfg.global_kind))
        )
    if w == 1:
        variants.append(("dynamic", hierarchical_plan(1, 1, cfg.global_kind, dynamic=True)))
    elif w % lanes == 0 and w // lanes >= 1:
        variants.append(
            ("dynamic", hierarchical_plan(w // lanes, lanes, cfg.global_kind, dynamic=True))
        )
    else:
        return None, f"workers={w} not divisible into lanes={lanes} for the dynamic twin"
    return variants, None


def _run_point(cfg: ExperimentConfig, label: str, plan: StrategyPlan, n: int, serial_ns: float, k: int):
    cost = cfg.cost_model()
    if cfg.backend == "exec":
        ec = ExecConfig(
            plan if plan.hierarchical else hierarchical_plan(plan.workers, 1, plan.global_kind),
            n=n, cost=cost, input_seed=cfg.seed,
        )
        walls, work = [], 0
        for _ in range(max(2, cfg.reps)):
            _, stats = exec_run(ec)
            walls.append(stats.wall_ns)
            work = stats.trace.total_combines
        s = summarize(walls)
        mean_time, sd, ci95 = s["mean"], s["sd"], s["ci95"]
    else:
        op = make_operator("mod_affine", cost)
        xs = make_inputs("mod_affine", n, cfg.seed)
        _, tr = run_plan(op, xs, plan, latency_ns=cfg.latency_ns, cost_model=cost)
        mean_time, sd, ci95 = float(tr.makespan), 0.0, 0.0
        work = tr.total_combines
    if plan.hierarchical:
        pred = predict_hierarchical(n, plan.pprime, plan.lanes, plan.global_kind)
        depth = pred.depth if n % plan.workers == 0 else None
    else:
        depth = predict(plan.strategy, n, plan.workers, plan.global_kind).depth
    lane_bounds = _lane_partition(n, plan)
    probe = CostPlan(cost, lane_bounds)
    imb = imbalance(probe.element_costs, partition(n, len(lane_bounds)))
    return {
        "workers": plan.workers,
        "strategy": label,
        "circuit": plan.global_kind,
        "backend": cfg.backend,
        "mean_time": int(mean_time),
        "sd": sd,
        "ci95": ci95,
        "work": work,
        "depth": depth,
        "imbalance": imb,
        "speedup_vs_serial": serial_ns / mean_time if mean_time else None,
        "bound": _bench_bound(
            label if label in ("scan_then_map",) else "reduce_then_scan",
            n, plan.workers, plan.global_kind,
        ),
        "n": n,
        "k": k,
        "seed": cfg.seed,
    }


def _lane_partition(n: int, plan: StrategyPlan):
    if not plan.hierarchical:
        return list(partition(n, plan.workers).bounds)
    bounds = []
    for lo, hi in partition(n, plan.pprime).bounds:
        bounds.extend((lo + a, lo + b) for a, b in partition(hi - lo + 1, plan.lanes).bounds)
    return bounds


def cmd_bench(cfg: ExperimentConfig) -> int:
    rows = []
    if cfg.scaling == "strong":
        serial_ns = _measure_serial(cfg, cfg.n)
        for w in cfg.worker_list():
            if cfg.n % w:
                print(f"skip workers={w}: n={cfg.n} not divisible")
                continue
            variants, reason = _bench_variants(cfg, w)
            if variants is None:
                print(f"skip workers={w}: {reason}")
                continue
            for label, plan in variants:
                rows.append(_run_point(cfg, label, plan, cfg.n, serial_ns, 1))
    else:
        for k in cfg.k_list():
            n, ranks = cfg.n * k, cfg.ranks * k
            w = ranks * cfg.lanes
            if n % w:
                print(f"skip k={k}: n={n} not divisible by {w} workers")
                continue
            serial_ns = _measure_serial(cfg, n)
            for label, plan in (
                ("hierarchical", hierarchical_plan(ranks, cfg.lanes, cfg.global_kind)),
                ("dynamic", hierarchical_plan(ranks, cfg.lanes, cfg.global_kind, dynamic=True)),
            ):
                rows.append(_run_point(cfg, label, plan, n, serial_ns, k))
    if not rows:
        print("no feasible points", file=sys.stderr)
        return 2
    _emit_bench(cfg, rows)
    return 0


def _emit_bench(cfg: ExperimentConfig, rows) -> None:
    for row in rows:
        print(
            f"workers={row['workers']:<5} {row['strategy']:<14} {row['circuit']:<14} "
            f"time={row['mean_time']:<12} speedup={row['speedup_vs_serial']:.3f} "
            f"bound={row['bound']:.3f} work={row['work']}"
        )
    if cfg.out:
        paths = report.report_paths(cfg.out)
        report.write_csv(paths["csv"], report.BENCH_HEADER, rows)
        report.write_json(paths["json"], rows)
        written = [paths["csv"], paths["json"]]
        if cfg.plot:
            if cfg.scaling == "strong":
                report.plot_strong(rows, paths["png"])
            else:
                report.plot_weak(rows, paths["png"])
            written.append(paths["png"])
        print("wrote " + " ".join(written))


def cmd_sweep(cfg: ExperimentConfig, strategies: str, globals_: str) -> int:
    rows = []
    serial_ns = _measure_serial(cfg, cfg.n)
    strategy_list = [s.strip() for s in strategies.split(",") if s.strip()]
    global_list = [g.strip() for g in globals_.split(",") if g.strip()]
    for gk in global_list:
        if gk not in BUILDERS:
            print(f"unknown circuit kind {gk!r}", file=sys.stderr)
            return 2
        sub = replace_config(cfg, global_kind=gk)
        for strategy in strategy_list:
            if strategy not in STRATEGY_CHOICES:
                print(f"unknown strategy {strategy!r}", file=sys.stderr)
                return 2
            sub2 = replace_config(sub, strategy=strategy)
            for w in cfg.worker_list():
                if cfg.n % w:
                    print(f"skip workers={w}: n={cfg.n} not divisible")
                    continue
                variants, reason = _bench_variants(sub2, w)
                if variants is None:
                    print(f"skip workers={w}: {reason}")
                    continue
                for label, plan in variants:
                    if strategy == "dynamic" and label != "dynamic":
                        continue
                    if strategy == "hierarchical" and label != "hierarchical":
                        continue
                    if strategy in ("scan_then_map", "reduce_then_scan") and label == "dynamic":
                        continue
                    rows.append(_run_point(sub2, label, plan, cfg.n, serial_ns, 1))
    if not rows:
        print("no feasible points", file=sys.stderr)
        return 2
    _emit_bench(cfg, rows)
    return 0


def replace_config(cfg: ExperimentConfig, **kw) -> ExperimentConfig:
    out = ExperimentConfig(**{f.name: getattr(cfg, f.name) for f in fields(ExperimentConfig)})
    for key, value in kw.items():
        setattr(out, key, value)
    return out


# ---------------------------------------------------------------------------
# predict


def cmd_predict(cfg: ExperimentConfig) -> int:
    strategy = "reduce_then_scan" if cfg.strategy in ("hierarchical", "dynamic") else cfg.strategy
    rows = []
    for p in cfg.worker_list():
        if p > 1 and cfg.n % p:
            print(f"uneven division: n={cfg.n} p={p} (skipped)", file=sys.stderr)
            continue
        pred = predict(strategy, cfg.n, p, cfg.global_kind)
        bscan = speedup_bound("scan", cfg.n, p, 1.0)
        bfull = speedup_bound("full", cfg.n, p, 1.0)
        rows.append({
            "n": cfg.n, "p": p, "strategy": strategy, "circuit": cfg.global_kind,
            "depth": pred.depth, "work": pred.work,
            "d_local1": pred.depth_parts[0], "d_global": pred.depth_parts[1],
            "d_local2": pred.depth_parts[2],
            "w_local1": pred.work_parts[0], "w_global": pred.work_parts[1],
            "w_local2": pred.work_parts[2],
            "bound_scan": bscan, "bound_full": bfull,
        })
    if not rows:
        return 2
    widths = "p depth work d_local1 d_global d_local2 bound_scan bound_full".split()
    print(" ".join(f"{w:>11}" for w in widths))
    for row in rows:
        print(" ".join(
            f"{row[w]:>11.4g}" if isinstance(row[w], float) else f"{row[w]:>11}"
            for w in widths
        ))
    if cfg.out:
        paths = report.report_paths(cfg.out)
        report.write_csv(paths["csv"], report.PREDICT_HEADER, rows)
        report.write_json(paths["json"], rows)
        written = [paths["csv"], paths["json"]]
        if cfg.plot:
            report.plot_predict(rows, paths["png"])
            written.append(paths["png"])
        print("wrote " + " ".join(written))
    return 0


# ---------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--n", type=int, help="number of input elements")
    p.add_argument("--ranks", type=int, help="ranks (hierarchy top level)")
    p.add_argument("--lanes", type=int, help="lanes per rank")
    p.add_argument("--strategy", choices=STRATEGY_CHOICES)
    p.add_argument("--global", dest="global_kind", choices=sorted(BUILDERS))
    p.add_argument("--cost", help="cost model spec, e.g. exp:10ms, const:1us, unit, zero")
    p.add_argument("--seed", type=int)
    p.add_argument("--reps", type=int, help="repetitions (exec backend)")
    p.add_argument("--backend", choices=("sim", "exec"))
    p.add_argument("--out", help="output stem; writes .csv/.json and .png")
    p.add_argument("--latency-ns", dest="latency_ns", type=int)
    p.add_argument("--no-plot", dest="no_plot", action="store_true",
                   help="skip figure rendering")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="scanlab",
        description="prefix-scan circuits, distributed strategies, and the "
        "work-stealing reduce phase: verification, benchmarks, predictions",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    pv = sub.add_parser("verify", help="run the property suites")
    _add_common(pv)
    pv.add_argument("--all-circuits", action="store_true")
    pv.add_argument("--inject-fault", choices=("broken-circuit",),
                    help=argparse.SUPPRESS)

    pb = sub.add_parser("bench", help="strong or weak scaling A/B benchmark")
    _add_common(pb)
    pb.add_argument("--scaling", choices=("strong", "weak"))
    pb.add_argument("--workers", help="strong scaling worker counts, e.g. 1,2,4,8")
    pb.add_argument("--k-factors", dest="k_factors", help="weak scaling factors")

    pp = sub.add_parser("predict", help="closed-form depth/work/bound tables")
    _add_common(pp)
    pp.add_argument("--workers", help="worker counts, e.g. 64,128,256")

    ps = sub.add_parser("sweep", help="bench over strategy x circuit grids")
    _add_common(ps)
    ps.add_argument("--workers")
    ps.add_argument("--strategies", default="reduce_then_scan,hierarchical,dynamic")
    ps.add_argument("--globals", dest="globals_", default="dissemination,ladner_fischer,binomial")

    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.command == "verify":
            return cmd_verify(cfg, args.all_circuits, args.inject_fault)
        if args.command == "bench":
            return cmd_bench(cfg)
        if args.command == "predict":
            return cmd_predict(cfg)
        if args.command == "sweep":
            return cmd_sweep(cfg, args.strategies, args.globals_)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
