"""Value domains, associative operators, cost models and the sequential oracle.

Composition convention used by the whole package: ``combine(a, b)`` means
"apply ``a`` first, then ``b``".  A left-to-right scan therefore accumulates
``res = combine(res, x_new)``.  For 2D rigid motions this is function
composition ``b after a``: angles add, and the earlier translation is rotated
by the later angle.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

DEFAULT_MODULUS = 1_000_003  # prime, keeps a*b below 2**63
DEFAULT_SEED = 1410

TAU = 2.0 * math.pi


def _wrap_angle(a: float) -> float:
    """Reduce an angle to the half-open interval (-pi, pi]."""
    r = math.remainder(a, TAU)
    if r <= -math.pi:
        r += TAU
    return r


@dataclass(frozen=True)
class RigidTransform2D:
    """Rotation by ``angle`` followed by a translation, acting on 2D points."""

    angle: float
    tx: float
    ty: float

    def apply(self, x: float, y: float) -> tuple[float, float]:
        c, s = math.cos(self.angle), math.sin(self.angle)
        return (c * x - s * y + self.tx, s * x + c * y + self.ty)


RIGID_IDENTITY = RigidTransform2D(0.0, 0.0, 0.0)


def compose(a: RigidTransform2D, b: RigidTransform2D) -> RigidTransform2D:
    """Composition "a then b": result maps p to b(a(p)).

    The translation of ``a`` is rotated by ``b``'s angle and shifted by
    ``b``'s translation; the angle is the wrapped sum.
    """
    c, s = math.cos(b.angle), math.sin(b.angle)
    return RigidTransform2D(
        _wrap_angle(a.angle + b.angle),
        c * a.tx - s * a.ty + b.tx,
        s * a.tx + c * a.ty + b.ty,
    )


@dataclass(frozen=True)
class ModularAffine:
    """Map x -> a*x + b over the integers mod m.

    Exact-arithmetic domain: composition is bit-exact associative and, in
    general, non-commutative, which makes it the reference domain for the
    order-correctness tests in this package.
    """

    a: int
    b: int
    m: int = DEFAULT_MODULUS


def mod_identity(m: int = DEFAULT_MODULUS) -> ModularAffine:
    return ModularAffine(1, 0, m)


def mod_compose(first: ModularAffine, second: ModularAffine) -> ModularAffine:
    """Composition "first then second": x -> second(first(x))."""
    if first.m != second.m:
        raise ValueError(f"modulus mismatch: {first.m} != {second.m}")
    m = first.m
    return ModularAffine((second.a * first.a) % m, (second.a * first.b + second.b) % m, m)


class CostStream:
    """Deterministic per-lane sequence of operator-application durations (ns).

    Exponential sampling uses the inverse CDF on raw MT19937 uniforms from
    ``random.Random`` (CPython's Mersenne Twister) rather than a library
    distribution adapter, so the sequence is reproducible across platforms
    and Python versions for a fixed seed.
    """

    def __init__(self, kind: str, mean_ns: int, seed: int, lane: int):
        self.kind = kind
        self.mean_ns = mean_ns
        self._rng = random.Random(seed + lane)

    def sample(self) -> int:
        if self.kind == "constant":
            return self.mean_ns
        u = self._rng.random()
        while u == 0.0:  # need u in (0, 1); p(0) = 2**-53
            u = self._rng.random()
        return int(round(-self.mean_ns * math.log(u)))


@dataclass(frozen=True)
class CostModel:
    """Per-application duration model: constant, or exponential with rate 1/mean.

    Each worker lane draws from its own stream, derived as ``seed + lane``,
    so static and work-stealing runs consume identical per-element costs.
    """

    kind: str  # "constant" | "exponential"
    mean_ns: int
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if self.kind not in ("constant", "exponential"):
            raise ValueError(f"unknown cost model kind: {self.kind!r}")
        if self.mean_ns < 0:
            raise ValueError("mean_ns must be >= 0")

    def stream(self, lane: int = 0) -> CostStream:
        return CostStream(self.kind, self.mean_ns, self.seed, lane)


def constant_cost(mean_ns: int = 1, seed: int = DEFAULT_SEED) -> CostModel:
    return CostModel("constant", mean_ns, seed)


def exponential_cost(mean_ns: int, seed: int = DEFAULT_SEED) -> CostModel:
    return CostModel("exponential", mean_ns, seed)


@dataclass(frozen=True)
class ScanOperator:
    """An associative binary operation over a value domain, plus its cost model."""

    domain: str  # "int64_add" | "mod_affine" | "rigid2d"
    combine: Callable
    identity: Optional[object]
    cost: CostModel = field(default_factory=lambda: constant_cost(0))

    def with_cost(self, cost: CostModel) -> "ScanOperator":
        return ScanOperator(self.domain, self.combine, self.identity, cost)

    def counted(self, counter: "CallCounter") -> "ScanOperator":
        """Same operator, but every combine increments ``counter``."""
        inner = self.combine

        def combine(a, b):
            counter.count += 1
            return inner(a, b)

        return ScanOperator(self.domain, combine, self.identity, self.cost)


class CallCounter:
    __slots__ = ("count",)

    def __init__(self):
        self.count = 0


def int_add(cost: Optional[CostModel] = None) -> ScanOperator:
    return ScanOperator("int64_add", lambda a, b: a + b, 0, cost or constant_cost(0))


def mod_affine_op(m: int = DEFAULT_MODULUS, cost: Optional[CostModel] = None) -> ScanOperator:
    return ScanOperator("mod_affine", mod_compose, mod_identity(m), cost or constant_cost(0))


def rigid_op(cost: Optional[CostModel] = None) -> ScanOperator:
    return ScanOperator("rigid2d", compose, RIGID_IDENTITY, cost or constant_cost(0))


OPERATORS = {
    "int64_add": int_add,
    "mod_affine": mod_affine_op,
    "rigid2d": rigid_op,
}


def make_operator(domain: str, cost: Optional[CostModel] = None) -> ScanOperator:
    try:
        factory = OPERATORS[domain]
    except KeyError:
        raise ValueError(f"unknown operator domain: {domain!r}") from None
    return factory(cost=cost)


def sequential_scan(op: ScanOperator, xs: Sequence) -> list:
    """Inclusive scan, strict left-to-right, exactly len(xs) - 1 combines.

    This is the oracle every parallel path in the package is validated
    against.
    """
    if len(xs) == 0:
        raise ValueError("sequential_scan requires a non-empty input")
    out = [xs[0]]
    acc = xs[0]
    for x in xs[1:]:
        acc = op.combine(acc, x)
        out.append(acc)
    return out


def random_mod_affines(n: int, rng: random.Random, m: int = DEFAULT_MODULUS) -> list[ModularAffine]:
    return [ModularAffine(rng.randrange(1, m), rng.randrange(m), m) for _ in range(n)]


def random_rigids(n: int, rng: random.Random, span: float = 10.0) -> list[RigidTransform2D]:
    return [
        RigidTransform2D(
            rng.uniform(-math.pi, math.pi),
            rng.uniform(-span, span),
            rng.uniform(-span, span),
        )
        for _ in range(n)
    ]


def rigid_close(a: RigidTransform2D, b: RigidTransform2D, tol: float = 1e-9) -> bool:
    """Per-component comparison; angles compared on the circle."""
    return (
        abs(math.remainder(a.angle - b.angle, TAU)) <= tol
        and abs(a.tx - b.tx) <= tol
        and abs(a.ty - b.ty) <= tol
    )
