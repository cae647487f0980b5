"""Phase-space geometry and the zoo of skew-product step maps.

Every map here is a pure function of its arguments; orbit generation lives in
:mod:`skewevt.orbit`. The product phase space is a list of coordinate slots,
each a circle (unit circumference, arc metric) or an interval (Euclidean
metric). The distance between product points is the Euclidean combination of
the per-slot distances.

Linear circle maps ``x -> d*x mod 1`` are iterated in exact fixed-point
arithmetic: a circle coordinate is an integer number of "ticks" ``k`` modulo
the 64-bit prime ``MODULUS``, representing the value ``k / MODULUS``, and a
step is ``k -> d*k mod MODULUS``. In binary floating point, multiplication by
2 or 4 mod 1 collapses every orbit to the fixed point 0 within ~53 steps;
modular arithmetic instead gives periods equal to the multiplicative order of
``d`` mod ``MODULUS`` (astronomically long) and Lebesgue-like equidistribution.
Ticks are converted to a float value only at observation time.

Nonlinear maps (the intermittent interval branch map, its skew products, and
the quadratic fiber map) use ordinary double precision; distributional
statistics are insensitive to shadowing error at these orbit lengths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import GeometryMismatchError, OrbitDivergedError

#: Largest prime below 2**64; denominator of the exact circle representation.
MODULUS = 2**64 - 59

_INV_MODULUS = 1.0 / float(MODULUS)

CIRCLE = 0
INTERVAL = 1


# ---------------------------------------------------------------------------
# exact circle representation
# ---------------------------------------------------------------------------

def unit_to_ticks(x: float, modulus: int = MODULUS) -> int:
    """Round a unit-interval value to the nearest exact tick ``k/modulus``.

    The rounding is performed in integer arithmetic on the exact binary
    expansion of ``x``, so it is itself exact (no double rounding).
    """
    x = float(x) % 1.0
    num, den = x.as_integer_ratio()
    return ((num * modulus + den // 2) // den) % modulus


def ticks_to_unit(k: int, modulus: int = MODULUS) -> float:
    """Observe an exact circle coordinate as a float in [0, 1)."""
    return (float(k) * (1.0 / float(modulus))) % 1.0


def circle_distance(a: float, b: float) -> float:
    """Arc distance on the unit-circumference circle: min(|a-b|, 1-|a-b|)."""
    d = abs(a - b) % 1.0
    return min(d, 1.0 - d)


# ---------------------------------------------------------------------------
# geometry
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Slot:
    """One coordinate of the product phase space.

    kind:  CIRCLE (arc metric, values in [0,1)) or INTERVAL (|Δ| metric).
    lo/hi: interval bounds; ignored for circles.
    exact: the coordinate is stored as integer ticks mod MODULUS.
    """

    kind: int
    lo: float = 0.0
    hi: float = 1.0
    exact: bool = False

    def __post_init__(self):
        if self.kind not in (CIRCLE, INTERVAL):
            raise ValueError(f"unknown slot kind {self.kind}")
        if self.kind == INTERVAL and not self.lo < self.hi:
            raise ValueError("interval slot needs lo < hi")
        if self.exact and self.kind != CIRCLE:
            raise ValueError("exact representation is only defined for circle slots")

    @property
    def extent(self) -> float:
        return 1.0 if self.kind == CIRCLE else self.hi - self.lo


@dataclass(frozen=True)
class ProductGeometry:
    """Base x fiber slot layout of a product phase space."""

    base: Tuple[Slot, ...]
    fiber: Tuple[Slot, ...] = ()
    modulus: int = MODULUS

    def __post_init__(self):
        if len(self.base) < 1:
            raise ValueError("need at least one base coordinate")

    @property
    def slots(self) -> Tuple[Slot, ...]:
        return self.base + self.fiber

    @property
    def dim(self) -> int:
        return len(self.base) + len(self.fiber)


@dataclass(frozen=True)
class ProductPoint:
    """A point of the product space as raw per-slot values.

    Entries are integer ticks for exact slots and floats otherwise, ordered
    base slots first. Use :func:`point_values` for the float view.
    """

    base: tuple
    fiber: tuple = ()

    @property
    def raw(self) -> tuple:
        return self.base + self.fiber


def point_values(p: ProductPoint, geom: ProductGeometry) -> np.ndarray:
    """Float coordinates of ``p`` (exact slots observed via ticks_to_unit)."""
    raw = p.raw
    if len(raw) != geom.dim:
        raise GeometryMismatchError(
            f"point has {len(raw)} coordinates, geometry has {geom.dim}")
    out = np.empty(geom.dim)
    for i, (v, s) in enumerate(zip(raw, geom.slots)):
        out[i] = ticks_to_unit(v, geom.modulus) if s.exact else float(v)
    return out


def make_point(values: Sequence[float], geom: ProductGeometry) -> ProductPoint:
    """Build a ProductPoint from float coordinates, rounding exact slots to ticks."""
    values = [float(v) for v in values]
    if len(values) != geom.dim:
        raise GeometryMismatchError(
            f"{len(values)} coordinates for a {geom.dim}-dimensional geometry")
    raw = []
    for v, s in zip(values, geom.slots):
        if s.exact:
            raw.append(unit_to_ticks(v, geom.modulus))
        elif s.kind == CIRCLE:
            raw.append(v % 1.0)
        else:
            if not (s.lo <= v <= s.hi):
                raise ValueError(f"interval coordinate {v} outside [{s.lo}, {s.hi}]")
            raw.append(v)
    nb = len(geom.base)
    return ProductPoint(tuple(raw[:nb]), tuple(raw[nb:]))


def product_metric(p: ProductPoint, q: ProductPoint, geom: ProductGeometry) -> float:
    """Distance sqrt(d_X^2 + d_Y^2) on the product space.

    Circle slots contribute the arc distance min(|Δ|, 1-|Δ|), interval slots
    |Δ|; multi-coordinate bases and fibers combine their components
    Euclideanly, which makes the total just the Euclidean combination over all
    slots.
    """
    pv = point_values(p, geom)
    qv = point_values(q, geom)
    acc = 0.0
    for i, s in enumerate(geom.slots):
        dv = abs(pv[i] - qv[i])
        if s.kind == CIRCLE:
            dv = dv % 1.0
            dv = min(dv, 1.0 - dv)
        acc += dv * dv
    return math.sqrt(acc)


# ---------------------------------------------------------------------------
# map parameter records
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AlphaProfile:
    """Intermittency exponent profile along the driving circle.

    The built-in ``raised-cosine`` form is

        alpha(w) = alpha_min + (alpha_max - alpha_min) * (1 - cos 2 pi w) / 2,

    which is C2, attains alpha_min only at w = 0 with positive second
    derivative there, and attains alpha_max at w = 1/2. The constructor
    enforces 0 < alpha_min < alpha_max < 1 and alpha_max < 1.5 * alpha_min;
    forms whose qualitative shape cannot be validated analytically are
    rejected.
    """

    alpha_min: float
    alpha_max: float
    form: str = "raised-cosine"

    def __post_init__(self):
        if self.form != "raised-cosine":
            raise ValueError(
                f"cannot validate profile form {self.form!r}; only 'raised-cosine' "
                "is analytically certified")
        if not (0.0 < self.alpha_min < self.alpha_max < 1.0):
            raise ValueError("need 0 < alpha_min < alpha_max < 1")
        if not self.alpha_max < 1.5 * self.alpha_min:
            raise ValueError("need alpha_max < 1.5 * alpha_min")


def alpha_profile(omega: float, profile: AlphaProfile) -> float:
    """Evaluate the exponent profile at a circle point (float value)."""
    from . import engine  # local import to avoid a hard cycle at import time
    return float(engine.raised_cosine_alpha(
        float(omega) % 1.0, profile.alpha_min, profile.alpha_max))


@dataclass(frozen=True)
class CocycleSpec:
    """Circle-valued driving function h for fiber rotations theta -> theta + h(x).

    Forms:
      linear  h(x) = x mod 1
      trig    h(x) = amplitude * cos(2 pi x) mod 1
      table   piecewise-linear interpolation of ``table`` sampled on a uniform
              grid over the base coordinate's chart, wrapping at the ends

    Evaluations are always reduced mod 1. ``holder_exponent`` is the declared
    regularity exponent in (0, 1] used when reporting correlation bounds.
    """

    form: str = "linear"
    amplitude: float = 1.0
    table: Optional[Tuple[float, ...]] = None
    holder_exponent: float = 1.0

    def __post_init__(self):
        if self.form not in ("linear", "trig", "table"):
            raise ValueError(f"unknown cocycle form {self.form!r}")
        if not (0.0 < self.holder_exponent <= 1.0):
            raise ValueError("holder_exponent must lie in (0, 1]")
        if self.form == "table":
            if self.table is None or len(self.table) < 2:
                raise ValueError("table cocycle needs at least two samples")
            object.__setattr__(self, "table", tuple(float(t) for t in self.table))


def cocycle_value(h: CocycleSpec, x: float) -> float:
    """Evaluate h at a base coordinate value, reduced mod 1."""
    from . import engine
    return float(engine.scalar_cocycle(_COCYCLE_CODE[h.form], float(x),
                                       float(h.amplitude), _table_array(h)))


_COCYCLE_CODE = {"linear": 0, "trig": 1, "table": 2}


def _table_array(h: Optional[CocycleSpec]) -> np.ndarray:
    if h is not None and h.form == "table":
        return np.asarray(h.table, dtype=np.float64)
    return np.empty(0, dtype=np.float64)


# ---------------------------------------------------------------------------
# system descriptors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SystemDescriptor:
    """A fully parametrized dynamical system on a product phase space.

    ``kind`` is one of linear-expanding, piecewise-c2, lsv, circle-extension,
    gouezel, viana. ``params`` carries the map parameters; for
    circle-extension it holds the base descriptor and the cocycle. The total
    dimension is D = N + M with N base and M fiber coordinates.
    """

    kind: str
    geometry: ProductGeometry
    params: dict = field(default_factory=dict)

    @property
    def n_base(self) -> int:
        return len(self.geometry.base)

    @property
    def m_fiber(self) -> int:
        return len(self.geometry.fiber)

    @property
    def dim(self) -> int:
        return self.geometry.dim

    def __hash__(self):
        return hash((self.kind, self.geometry, tuple(sorted(
            (k, v if not isinstance(v, (SystemDescriptor, AlphaProfile, CocycleSpec))
             else repr(v)) for k, v in self.params.items()))))

    def __eq__(self, other):
        return (isinstance(other, SystemDescriptor)
                and self.kind == other.kind
                and self.geometry == other.geometry
                and self.params == other.params)


def linear_expanding(d: int, modulus: int = MODULUS) -> SystemDescriptor:
    """x -> d*x mod 1 on the circle, iterated exactly in ticks mod ``modulus``."""
    d = int(d)
    if d < 2:
        raise ValueError("expanding multiplier d must be >= 2")
    if d >= 2**31:
        raise ValueError("multiplier too large for the exact-arithmetic kernel")
    geom = ProductGeometry(base=(Slot(CIRCLE, exact=True),), modulus=modulus)
    return SystemDescriptor("linear-expanding", geom, {"d": d})


def piecewise_c2(d: int = 2, strength: float = 0.5) -> SystemDescriptor:
    """Smooth degree-d expanding circle map x -> d*x + strength*sin(2 pi x)/(2 pi).

    Each of the d branches is C2 (in fact analytic), monotone and onto, with
    derivative d + strength*cos(2 pi x) >= d - strength > 1; ``strength`` must
    satisfy 0 <= strength < d - 1.
    """
    d = int(d)
    strength = float(strength)
    if d < 2:
        raise ValueError("degree d must be >= 2")
    if not (0.0 <= strength < d - 1):
        raise ValueError("need 0 <= strength < d - 1 for uniform expansion")
    geom = ProductGeometry(base=(Slot(CIRCLE),))
    return SystemDescriptor("piecewise-c2", geom, {"d": d, "strength": strength})


def lsv(omega: float) -> SystemDescriptor:
    """Intermittent interval map with neutral fixed point at 0.

        T(x) = x * (1 + 2^omega * x^omega)   for x in [0, 1/2)
        T(x) = 2x - 1                        for x in [1/2, 1]

    Requires 0 < omega < 1.
    """
    omega = float(omega)
    if not (0.0 < omega < 1.0):
        raise ValueError("intermittency exponent omega must lie in (0, 1)")
    geom = ProductGeometry(base=(Slot(INTERVAL, 0.0, 1.0),))
    return SystemDescriptor("lsv", geom, {"omega": omega})


def circle_extension(base: SystemDescriptor, cocycle: CocycleSpec) -> SystemDescriptor:
    """Skew product f(x, theta) = (T x, theta + h(x) mod 1) over a base map T.

    The driving value h(x) uses the pre-step base coordinate. When the base is
    exact and the cocycle is linear, the fiber is iterated exactly too (it is
    a tick addition); otherwise the fiber runs in double precision.
    """
    if base.kind not in ("linear-expanding", "piecewise-c2", "lsv"):
        raise ValueError(f"cannot extend a {base.kind!r} system (needs a 1-d base map)")
    if base.m_fiber != 0:
        raise ValueError("base of a circle extension must have no fiber")
    exact_fiber = base.kind == "linear-expanding" and cocycle.form == "linear"
    geom = ProductGeometry(
        base=base.geometry.base,
        fiber=(Slot(CIRCLE, exact=exact_fiber),),
        modulus=base.geometry.modulus,
    )
    return SystemDescriptor("circle-extension", geom,
                            {"base": base, "cocycle": cocycle})


def gouezel(profile: AlphaProfile, d: int = 4, modulus: int = MODULUS) -> SystemDescriptor:
    """Expanding circle base driving an intermittent interval fiber.

        (w, x) -> (d*w mod 1, T_{alpha(w)}(x))

    where T_a is the intermittent branch map of :func:`lsv` with exponent
    a = alpha(w) evaluated at the pre-step w. The base is exact.
    """
    if not isinstance(profile, AlphaProfile):
        raise ValueError("gouezel needs an AlphaProfile")
    d = int(d)
    if d < 2 or d >= 2**31:
        raise ValueError("base multiplier out of range")
    geom = ProductGeometry(
        base=(Slot(CIRCLE, exact=True),),
        fiber=(Slot(INTERVAL, 0.0, 1.0),),
        modulus=modulus,
    )
    return SystemDescriptor("gouezel", geom, {
        "d": d, "alpha_min": profile.alpha_min, "alpha_max": profile.alpha_max,
        "profile": profile,
    })


def viana(alpha: float = 0.01, d: int = 16, a0: float = 2.0,
          trap: Tuple[float, float] = (-2.0, 2.0),
          modulus: int = MODULUS) -> SystemDescriptor:
    """Quadratic fiber driven by a strongly expanding circle base.

        (theta, x) -> (d*theta mod 1, a0 + alpha*sin(2 pi theta) - x^2)

    With a0 = 2 the unforced fiber orbit of 0 is pre-periodic (0 -> 2 -> -2
    -> -2). The trapping interval is configured rather than derived, and any
    escape raises :class:`OrbitDivergedError` instead of clamping. Note that
    a0 = 2 leaves no margin: the unforced map sends [-2, 2] onto itself
    exactly, so with any positive forcing amplitude almost every orbit
    eventually escapes (near x = 0 the image exceeds 2 whenever
    sin(2 pi theta) > x^2 / alpha). A genuinely trapped attractor needs
    a0 + alpha <= sqrt(2 a0), e.g. a0 = 1.8 with the default alpha.
    """
    d = int(d)
    if d < 2 or d >= 2**31:
        raise ValueError("base multiplier out of range")
    lo, hi = float(trap[0]), float(trap[1])
    if not lo < hi:
        raise ValueError("trapping interval needs lo < hi")
    geom = ProductGeometry(
        base=(Slot(CIRCLE, exact=True),),
        fiber=(Slot(INTERVAL, lo, hi),),
        modulus=modulus,
    )
    return SystemDescriptor("viana", geom, {
        "d": d, "a0": float(a0), "alpha": float(alpha), "lo": lo, "hi": hi,
    })


SYSTEM_KINDS = ("linear-expanding", "piecewise-c2", "lsv",
                "circle-extension", "gouezel", "viana")


def base_system(system: SystemDescriptor) -> SystemDescriptor:
    """The base map of a product system, as a standalone descriptor."""
    if system.kind == "circle-extension":
        return system.params["base"]
    if system.kind == "gouezel":
        return linear_expanding(system.params["d"], system.geometry.modulus)
    if system.kind == "viana":
        return linear_expanding(system.params["d"], system.geometry.modulus)
    if system.m_fiber == 0:
        return system
    raise ValueError(f"no base projection defined for {system.kind!r}")


# ---------------------------------------------------------------------------
# scalar step operations
# ---------------------------------------------------------------------------

def step_base_expanding(k: int, d: int, modulus: int = MODULUS) -> int:
    """One exact step of x -> d*x mod 1 in ticks: k -> d*k mod modulus."""
    if d < 2:
        raise ValueError("expanding multiplier d must be >= 2")
    return (int(d) * int(k)) % modulus


def step_lsv(x: float, omega: float) -> float:
    """One step of the intermittent interval map with exponent omega."""
    if not (0.0 < omega < 1.0):
        raise ValueError("intermittency exponent omega must lie in (0, 1)")
    if not (0.0 <= x <= 1.0):
        raise ValueError("coordinate outside [0, 1]")
    return step(lsv(omega), ProductPoint((float(x),), ())).base[0]


def step_circle_extension(p: ProductPoint, base: SystemDescriptor,
                          h: CocycleSpec) -> ProductPoint:
    """One step of (x, theta) -> (T x, theta + h(x) mod 1); h sees the pre-step x."""
    return step(circle_extension(base, h), p)


def step_gouezel(p: ProductPoint, profile: AlphaProfile, d: int = 4) -> ProductPoint:
    """One step of (w, x) -> (d*w mod 1, T_{alpha(w)} x), alpha at the pre-step w."""
    return step(gouezel(profile, d), p)


def step_viana(p: ProductPoint, alpha: float = 0.01, d: int = 16, a0: float = 2.0,
               trap: Tuple[float, float] = (-2.0, 2.0)) -> ProductPoint:
    """One step of the quadratic skew product; raises OrbitDivergedError on escape."""
    return step(viana(alpha, d, a0, trap), p)


def step(system: SystemDescriptor, p: ProductPoint) -> ProductPoint:
    """Advance a point one step under ``system``.

    This routes through the same compiled kernel as the vectorized ensemble
    runners, so scalar and ensemble orbits agree bit for bit.
    """
    from . import engine
    return engine.step_point(system, p)


def contains(system: SystemDescriptor, p: ProductPoint) -> bool:
    """Whether the raw point is a valid element of the system's phase space."""
    raw = p.raw
    if len(raw) != system.dim:
        return False
    for v, s in zip(raw, system.geometry.slots):
        if s.exact:
            if not isinstance(v, (int, np.integer)) or not 0 <= int(v) < system.geometry.modulus:
                return False
        elif s.kind == CIRCLE:
            if not 0.0 <= float(v) < 1.0:
                return False
        else:
            if not s.lo <= float(v) <= s.hi:
                return False
    return True
