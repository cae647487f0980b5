"""Deterministic orbit generation and invariant-measure ensemble sampling.

Randomness is counter-based and splittable: every random draw comes from a
Philox generator keyed by ``SeedSequence(master_seed, spawn_key=path)``, so
each ensemble member's initial point is a pure function of (master seed,
member index) and results are bit-identical for any worker count or chunking.

Invariant-measure sampling draws Lebesgue-uniform starts and applies a
burn-in. Every system in the zoo has an absolutely continuous invariant
measure, so the pushed-forward uniform ensemble approximates it; the residual
relaxation bias is whatever the configured burn-in leaves, which is why the
intermittent systems default to a 10x longer burn-in than the uniformly
expanding ones.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, List, Optional, Sequence

import numpy as np

from . import engine, maps
from .errors import OrbitDivergedError

# stream ids namespacing the derived generators
STREAM_ENSEMBLE = 0
STREAM_RESAMPLE = 1
STREAM_TARGET = 2
STREAM_DENSITY = 3
STREAM_PAIR = 4
STREAM_CORR = 5
STREAM_EN = 6

#: default burn-in per system kind; neutral fixed points relax slowly
DEFAULT_BURN_IN = {
    "linear-expanding": 1000,
    "piecewise-c2": 1000,
    "circle-extension": 1000,
    "viana": 1000,
    "lsv": 10000,
    "gouezel": 10000,
}

_RESAMPLE_CAP = 20


def default_burn_in(system: maps.SystemDescriptor) -> int:
    kind = system.kind
    if kind == "circle-extension" and system.params["base"].kind == "lsv":
        return DEFAULT_BURN_IN["lsv"]
    return DEFAULT_BURN_IN[kind]


def derived_key(master_seed: int, *path: int) -> np.ndarray:
    """2-word Philox key, a pure function of the master seed and the path."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(p) for p in path))
    return ss.generate_state(2, np.uint64)


def generator(master_seed: int, *path: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=derived_key(master_seed, *path)))


@dataclass(frozen=True)
class OrbitConfig:
    """Length, burn-in and seeding of a single orbit."""

    n: int
    burn_in: int = 0
    seed: int = 0
    stream_id: int = 0

    def __post_init__(self):
        if self.n < 0 or self.burn_in < 0:
            raise ValueError("n and burn_in must be nonnegative")


@dataclass(frozen=True)
class Ensemble:
    """A family of initial points.

    mode "lebesgue-burnin" draws Lebesgue-uniform starts from per-index
    derived seeds; mode "explicit" uses the given points verbatim.
    """

    count: int
    master_seed: int = 0
    mode: str = "lebesgue-burnin"
    stream_id: int = STREAM_ENSEMBLE
    points: Optional[tuple] = None

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("ensemble count must be >= 1")
        if self.mode not in ("lebesgue-burnin", "explicit"):
            raise ValueError(f"unknown sampling mode {self.mode!r}")
        if self.mode == "explicit":
            if self.points is None or len(self.points) != self.count:
                raise ValueError("explicit mode needs exactly `count` points")

    def member_key(self, index: int) -> np.ndarray:
        """Derived seed for one member; distinct indices never collide."""
        return derived_key(self.master_seed, self.stream_id, int(index))


@dataclass
class EnsembleState:
    """Structure-of-arrays view of an ensemble's current phase-space state."""

    system: maps.SystemDescriptor
    iu: np.ndarray
    fx: np.ndarray
    status: np.ndarray
    steps_done: int = 0

    @property
    def count(self) -> int:
        return self.iu.shape[0]

    @property
    def alive(self) -> np.ndarray:
        return self.status < 0

    @property
    def diverged_count(self) -> int:
        return int((self.status >= 0).sum())

    def values(self) -> np.ndarray:
        """Float coordinates, shape (count, D)."""
        return engine.values_matrix(engine.pack(self.system), self.iu, self.fx)

    def point(self, i: int) -> maps.ProductPoint:
        return engine.read_point(engine.pack(self.system), self.system,
                                 self.iu, self.fx, i)

    def points(self) -> List[maps.ProductPoint]:
        return [self.point(i) for i in range(self.count)]

    def copy(self) -> "EnsembleState":
        return EnsembleState(self.system, self.iu.copy(), self.fx.copy(),
                             self.status.copy(), self.steps_done)


def iterate(system: maps.SystemDescriptor, p0: maps.ProductPoint,
            cfg: OrbitConfig) -> Iterator[maps.ProductPoint]:
    """Yield f^burn_in(p0) and its next n images (n + 1 points in total).

    Deterministic given (system, p0, cfg). Raises OrbitDivergedError with the
    absolute step index (counted from p0, burn-in included) if the fiber
    escapes.
    """
    if not maps.contains(system, p0):
        raise ValueError("initial point is not in the system's phase space")
    p = p0
    for j in range(cfg.burn_in):
        try:
            p = maps.step(system, p)
        except OrbitDivergedError:
            raise OrbitDivergedError(j + 1) from None
    yield p
    for j in range(cfg.n):
        try:
            p = maps.step(system, p)
        except OrbitDivergedError:
            raise OrbitDivergedError(cfg.burn_in + j + 1) from None
        yield p


def _uniform_rows(system: maps.SystemDescriptor, rng: np.random.Generator,
                  count: int):
    """Lebesgue-uniform raw state rows (iu, fx) for ``count`` members."""
    packed = engine.pack(system)
    geom = system.geometry
    iu = np.zeros((count, 2), dtype=np.uint64)
    fx = np.zeros((count, 2), dtype=np.float64)
    for s, slot in enumerate(geom.slots):
        src = int(packed.slot_src[s])
        if src < 2:
            iu[:, src] = rng.integers(0, geom.modulus, size=count, dtype=np.uint64)
        else:
            u = rng.random(count)
            if slot.kind == maps.INTERVAL:
                u = slot.lo + (slot.hi - slot.lo) * u
            fx[:, src - 10] = u
    return iu, fx


def initial_state(system: maps.SystemDescriptor, ensemble: Ensemble) -> EnsembleState:
    """Materialize the ensemble's starting state (no burn-in applied)."""
    packed = engine.pack(system)
    if ensemble.mode == "explicit":
        iu, fx, status = engine.new_state(ensemble.count)
        for i, p in enumerate(ensemble.points):
            if not maps.contains(system, p):
                raise ValueError(f"explicit point {i} is not in the phase space")
            engine.load_point(packed, system, p, iu, fx, i)
        return EnsembleState(system, iu, fx, status)
    rng = generator(ensemble.master_seed, ensemble.stream_id)
    iu, fx = _uniform_rows(system, rng, ensemble.count)
    status = np.full(ensemble.count, -1, dtype=np.int64)
    return EnsembleState(system, iu, fx, status)


def advance_state(state: EnsembleState, steps: int) -> EnsembleState:
    """Advance all live members ``steps`` iterations in place."""
    packed = engine.pack(state.system)
    engine.advance(*packed.runner_args(), state.iu, state.fx, state.status,
                   steps, state.steps_done, packed.inv_p)
    state.steps_done += steps
    return state


def sample_invariant(system: maps.SystemDescriptor, ensemble: Ensemble,
                     burn_in: Optional[int] = None) -> EnsembleState:
    """Approximate nu-distributed points: uniform starts pushed through burn-in.

    Members whose orbit escapes during burn-in are redrawn from their own
    resample stream (still a pure function of master seed and index) up to a
    retry cap; exceeding it raises OrbitDivergedError.
    """
    if burn_in is None:
        burn_in = default_burn_in(system)
    state = initial_state(system, ensemble)
    advance_state(state, burn_in)
    if ensemble.mode == "explicit":
        return state
    packed = engine.pack(system)
    for attempt in range(1, _RESAMPLE_CAP + 1):
        bad = np.flatnonzero(state.status >= 0)
        if bad.size == 0:
            break
        for i in bad:
            rng = generator(ensemble.master_seed, STREAM_RESAMPLE,
                            ensemble.stream_id, int(i), attempt)
            riu, rfx = _uniform_rows(system, rng, 1)
            state.iu[i] = riu[0]
            state.fx[i] = rfx[0]
            state.status[i] = -1
        sub = EnsembleState(system, state.iu[bad], state.fx[bad],
                            state.status[bad])
        advance_state(sub, burn_in)
        state.iu[bad] = sub.iu
        state.fx[bad] = sub.fx
        state.status[bad] = sub.status
    else:
        raise OrbitDivergedError(
            burn_in, f"resample cap hit: {int((state.status >= 0).sum())} members "
                     f"still diverge after {_RESAMPLE_CAP} redraws")
    state.steps_done = burn_in
    return state


def sample_point(system: maps.SystemDescriptor, master_seed: int,
                 burn_in: Optional[int] = None,
                 stream_id: int = STREAM_TARGET) -> maps.ProductPoint:
    """One nu-distributed point (used for drawing observation targets)."""
    ens = Ensemble(count=1, master_seed=master_seed, stream_id=stream_id)
    state = sample_invariant(system, ens, burn_in)
    return state.point(0)
