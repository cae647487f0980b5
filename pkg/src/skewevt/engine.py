"""Compiled kernels for high-throughput orbit iteration.

Systems are packed into flat parameter arrays so a single set of jitted
runners serves the whole map zoo. Per-member state lives in two arrays:
``iu`` (uint64 ticks for exact circle slots) and ``fx`` (float64 for
everything else), each with a fixed column layout per system kind.

Scalar stepping (`step_point`) and the vectorized runners share one inner
step function, so orbits agree bit for bit between the two paths. Runners
parallelize over ensemble members only; each member's arithmetic is a fixed
serial sequence and results are written to per-member slots, which makes
every output independent of the worker count.

Modular arithmetic: for a modulus p in (2^64 - 2^32, 2^64), sums and the
32-bit-split products below never need more than one end-around correction,
so d*k mod p is exact in pure uint64 operations for d < 2^31.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numba
import numpy as np
from numba import njit, prange

from . import maps
from .errors import OrbitDivergedError

U32 = np.uint64(32)
MASK32 = np.uint64(0xFFFFFFFF)
ZERO64 = np.uint64(0)
TWO_PI = 2.0 * np.pi

K_LINEAR = 0
K_PWC2 = 1
K_LSV = 2
K_GOUEZEL = 3
K_VIANA = 4
K_CEXT_EXACT_LINEAR = 5   # exact base, fiber ticks: theta += x
K_CEXT_EXACT_FCOC = 6     # exact base, float fiber
K_CEXT_FLOAT = 7          # float base (piecewise-c2 or lsv), float fiber

BASE_PWC2 = 1
BASE_LSV = 2

MIN_MODULUS = 2**64 - 2**32


def set_threads(n: int) -> int:
    """Clamp and apply a worker-thread count; 0 means 'all available'."""
    avail = numba.config.NUMBA_NUM_THREADS
    n = avail if n is None or int(n) <= 0 else min(int(n), avail)
    numba.set_num_threads(n)
    return n


# ---------------------------------------------------------------------------
# scalar arithmetic kernels
# ---------------------------------------------------------------------------

@njit(cache=True)
def addmod(a, b, p):
    # a, b < p; end-around correction uses 2^64 mod p == 0 - p (wrapped)
    s = a + b
    if s < a:
        s = s + (ZERO64 - p)
    elif s >= p:
        s = s - p
    return s


@njit(cache=True)
def mulmod(d, k, p):
    # d < 2^31, k < p; split k to keep every intermediate inside uint64
    kh = k >> U32
    kl = k & MASK32
    hi = d * kh
    lo = d * kl
    r = addmod((ZERO64 - p) * (hi >> U32), (hi & MASK32) << U32, p)
    return addmod(r, lo, p)


@njit(cache=True)
def raised_cosine_alpha(w, amin, amax):
    return amin + (amax - amin) * 0.5 * (1.0 - np.cos(TWO_PI * w))


@njit(cache=True)
def _wrap_unit(t):
    t = t % 1.0
    if t >= 1.0:  # float mod can round up to exactly 1.0
        t = 0.0
    return t


@njit(cache=True)
def _lsv_branch(x, a):
    if x < 0.5:
        return x * (1.0 + (2.0 * x) ** a)
    return 2.0 * x - 1.0


@njit(cache=True)
def _pwc2_step(x, dfloat, strength):
    return _wrap_unit(dfloat * x + strength * np.sin(TWO_PI * x) / TWO_PI)


@njit(cache=True)
def scalar_cocycle(code, x, amp, table):
    if code == 0:
        return _wrap_unit(x)
    if code == 1:
        return _wrap_unit(amp * np.cos(TWO_PI * x))
    # piecewise-linear table over a uniform grid, wrapping at the ends
    n = table.shape[0]
    pos = _wrap_unit(x) * n
    i0 = int(pos)
    if i0 >= n:
        i0 = n - 1
    frac = pos - i0
    i1 = i0 + 1
    if i1 == n:
        i1 = 0
    return _wrap_unit(table[i0] * (1.0 - frac) + table[i1] * frac)


@njit(inline="always")
def _step_member(kind, iparams, fparams, ftable, iu, fx, i, inv_p):
    """Advance member i one step in place. Returns False on fiber escape."""
    if kind == K_LINEAR:
        iu[i, 0] = mulmod(iparams[0], iu[i, 0], iparams[1])
    elif kind == K_PWC2:
        fx[i, 0] = _pwc2_step(fx[i, 0], fparams[0], fparams[1])
    elif kind == K_LSV:
        fx[i, 0] = _lsv_branch(fx[i, 0], fparams[0])
    elif kind == K_GOUEZEL:
        w = _wrap_unit(iu[i, 0] * inv_p)
        a = raised_cosine_alpha(w, fparams[0], fparams[1])
        fx[i, 0] = _lsv_branch(fx[i, 0], a)
        iu[i, 0] = mulmod(iparams[0], iu[i, 0], iparams[1])
    elif kind == K_VIANA:
        th = _wrap_unit(iu[i, 0] * inv_p)
        xn = fparams[0] + fparams[1] * np.sin(TWO_PI * th) - fx[i, 0] * fx[i, 0]
        iu[i, 0] = mulmod(iparams[0], iu[i, 0], iparams[1])
        fx[i, 0] = xn
        if xn < fparams[2] or xn > fparams[3]:
            return False
    elif kind == K_CEXT_EXACT_LINEAR:
        iu[i, 1] = addmod(iu[i, 1], iu[i, 0], iparams[1])
        iu[i, 0] = mulmod(iparams[0], iu[i, 0], iparams[1])
    elif kind == K_CEXT_EXACT_FCOC:
        xv = _wrap_unit(iu[i, 0] * inv_p)
        h = scalar_cocycle(np.int64(iparams[3]), xv, fparams[2], ftable)
        fx[i, 0] = _wrap_unit(fx[i, 0] + h)
        iu[i, 0] = mulmod(iparams[0], iu[i, 0], iparams[1])
    else:  # K_CEXT_FLOAT
        xv = fx[i, 0]
        h = scalar_cocycle(np.int64(iparams[3]), xv, fparams[2], ftable)
        fx[i, 1] = _wrap_unit(fx[i, 1] + h)
        if iparams[2] == BASE_PWC2:
            fx[i, 0] = _pwc2_step(xv, fparams[0], fparams[1])
        else:
            fx[i, 0] = _lsv_branch(xv, fparams[0])
    return True


@njit(inline="always")
def _member_distance(iu, fx, i, slot_src, slot_kind, ref, inv_p):
    acc = 0.0
    for s in range(slot_src.shape[0]):
        src = slot_src[s]
        if src < 2:
            v = iu[i, src] * inv_p
        else:
            v = fx[i, src - 10]
        dv = abs(v - ref[s])
        if slot_kind[s] == 0:
            dv = dv % 1.0
            if dv > 0.5:
                dv = 1.0 - dv
        acc += dv * dv
    return np.sqrt(acc)


# ---------------------------------------------------------------------------
# ensemble runners
# ---------------------------------------------------------------------------

@njit(cache=True, parallel=True)
def advance(kind, iparams, fparams, ftable, iu, fx, status, steps, step_offset, inv_p):
    """Apply ``steps`` map iterations to every live member in place."""
    for i in prange(iu.shape[0]):
        if status[i] >= 0:
            continue
        for s in range(steps):
            if not _step_member(kind, iparams, fparams, ftable, iu, fx, i, inv_p):
                status[i] = step_offset + s + 1
                break


@njit(cache=True, parallel=True)
def run_min_distance(kind, iparams, fparams, ftable, iu, fx, status, n_steps,
                     step_offset, inv_p, slot_src, slot_kind, target, out_dmin):
    """Per-member minimum distance to ``target`` over orbit points 0..n_steps."""
    for i in prange(iu.shape[0]):
        if status[i] >= 0:
            out_dmin[i] = np.inf
            continue
        best = _member_distance(iu, fx, i, slot_src, slot_kind, target, inv_p)
        for s in range(n_steps):
            if not _step_member(kind, iparams, fparams, ftable, iu, fx, i, inv_p):
                status[i] = step_offset + s + 1
                break
            d = _member_distance(iu, fx, i, slot_src, slot_kind, target, inv_p)
            if d < best:
                best = d
        out_dmin[i] = best


@njit(cache=True, parallel=True)
def run_return_set(kind, iparams, fparams, ftable, iu, fx, status, g_steps,
                   step_offset, inv_p, slot_src, slot_kind, refs, eps,
                   n_base_slots, out_hit_full, out_hit_base):
    """Self-return flags: does some iterate j in 1..g come within eps of the start?

    ``refs`` holds each member's starting coordinates. out_hit_full uses the
    full product distance, out_hit_base the distance over the first
    ``n_base_slots`` coordinates only (the base map's metric).
    """
    n_slots = slot_src.shape[0]
    for i in prange(iu.shape[0]):
        out_hit_full[i] = 0
        out_hit_base[i] = 0
        if status[i] >= 0:
            continue
        for s in range(g_steps):
            if not _step_member(kind, iparams, fparams, ftable, iu, fx, i, inv_p):
                status[i] = step_offset + s + 1
                break
            acc_full = 0.0
            acc_base = 0.0
            for sl in range(n_slots):
                src = slot_src[sl]
                if src < 2:
                    v = iu[i, src] * inv_p
                else:
                    v = fx[i, src - 10]
                dv = abs(v - refs[i, sl])
                if slot_kind[sl] == 0:
                    dv = dv % 1.0
                    if dv > 0.5:
                        dv = 1.0 - dv
                dv2 = dv * dv
                acc_full += dv2
                if sl < n_base_slots:
                    acc_base += dv2
            if np.sqrt(acc_full) < eps:
                out_hit_full[i] = 1
            if np.sqrt(acc_base) < eps:
                out_hit_base[i] = 1
            if out_hit_full[i] == 1 and out_hit_base[i] == 1:
                break


@njit(cache=True, parallel=True)
def run_ball_hits(kind, iparams, fparams, ftable, iu, fx, status, g_steps,
                  step_offset, inv_p, slot_src, slot_kind, target, radius,
                  out_count):
    """Count iterates j in 1..g whose image lies within ``radius`` of ``target``."""
    for i in prange(iu.shape[0]):
        out_count[i] = 0
        if status[i] >= 0:
            continue
        for s in range(g_steps):
            if not _step_member(kind, iparams, fparams, ftable, iu, fx, i, inv_p):
                status[i] = step_offset + s + 1
                break
            if _member_distance(iu, fx, i, slot_src, slot_kind, target, inv_p) < radius:
                out_count[i] += 1


@njit(cache=True, parallel=True)
def extract_values(iu, fx, slot_src, inv_p, out):
    """Observe the float coordinates of every member (exact slots via ticks)."""
    for i in prange(iu.shape[0]):
        for s in range(slot_src.shape[0]):
            src = slot_src[s]
            if src < 2:
                out[i, s] = _wrap_unit(iu[i, src] * inv_p)
            else:
                out[i, s] = fx[i, src - 10]


@njit(cache=True)
def _single_step(kind, iparams, fparams, ftable, iu, fx, inv_p):
    return _step_member(kind, iparams, fparams, ftable, iu, fx, 0, inv_p)


# ---------------------------------------------------------------------------
# system packing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PackedSystem:
    kind: int
    iparams: np.ndarray
    fparams: np.ndarray
    ftable: np.ndarray
    slot_src: np.ndarray
    slot_kind: np.ndarray
    inv_p: float
    modulus: int
    n_slots: int
    n_base_slots: int

    def runner_args(self):
        return (self.kind, self.iparams, self.fparams, self.ftable)


_COC_CODE = {"linear": 0, "trig": 1, "table": 2}


@lru_cache(maxsize=128)
def pack(system: maps.SystemDescriptor) -> PackedSystem:
    """Flatten a SystemDescriptor into kernel-ready parameter arrays."""
    geom = system.geometry
    if geom.modulus <= MIN_MODULUS or geom.modulus >= 2**64:
        raise ValueError("modulus must lie in (2^64 - 2^32, 2^64) for the exact kernel")
    ip = np.zeros(4, dtype=np.uint64)
    fp = np.zeros(8, dtype=np.float64)
    ftable = np.empty(0, dtype=np.float64)
    ip[1] = geom.modulus
    p = system.params

    if system.kind == "linear-expanding":
        kind = K_LINEAR
        ip[0] = p["d"]
        src = [0]
    elif system.kind == "piecewise-c2":
        kind = K_PWC2
        fp[0] = float(p["d"])
        fp[1] = p["strength"]
        src = [10]
    elif system.kind == "lsv":
        kind = K_LSV
        fp[0] = p["omega"]
        src = [10]
    elif system.kind == "gouezel":
        kind = K_GOUEZEL
        ip[0] = p["d"]
        fp[0] = p["alpha_min"]
        fp[1] = p["alpha_max"]
        src = [0, 10]
    elif system.kind == "viana":
        kind = K_VIANA
        ip[0] = p["d"]
        fp[0] = p["a0"]
        fp[1] = p["alpha"]
        fp[2] = p["lo"]
        fp[3] = p["hi"]
        src = [0, 10]
    elif system.kind == "circle-extension":
        base = p["base"]
        coc = p["cocycle"]
        ip[3] = _COC_CODE[coc.form]
        fp[2] = coc.amplitude
        ftable = maps._table_array(coc)
        if base.kind == "linear-expanding":
            ip[0] = base.params["d"]
            if coc.form == "linear":
                kind = K_CEXT_EXACT_LINEAR
                src = [0, 1]
            else:
                kind = K_CEXT_EXACT_FCOC
                src = [0, 10]
        else:
            kind = K_CEXT_FLOAT
            if base.kind == "piecewise-c2":
                ip[2] = BASE_PWC2
                fp[0] = float(base.params["d"])
                fp[1] = base.params["strength"]
            else:
                ip[2] = BASE_LSV
                fp[0] = base.params["omega"]
            src = [10, 11]
    else:
        raise ValueError(f"unknown system kind {system.kind!r}")

    slot_kind = np.array([0 if s.kind == maps.CIRCLE else 1 for s in geom.slots],
                         dtype=np.int8)
    return PackedSystem(
        kind=kind,
        iparams=ip,
        fparams=fp,
        ftable=ftable,
        slot_src=np.array(src, dtype=np.int8),
        slot_kind=slot_kind,
        inv_p=1.0 / float(geom.modulus),
        modulus=geom.modulus,
        n_slots=len(src),
        n_base_slots=system.n_base,
    )


# ---------------------------------------------------------------------------
# state construction and scalar stepping
# ---------------------------------------------------------------------------

def new_state(count: int):
    """(iu, fx, status) arrays for ``count`` members; status -1 means alive."""
    iu = np.zeros((count, 2), dtype=np.uint64)
    fx = np.zeros((count, 2), dtype=np.float64)
    status = np.full(count, -1, dtype=np.int64)
    return iu, fx, status


def load_point(packed: PackedSystem, system: maps.SystemDescriptor,
               p: maps.ProductPoint, iu, fx, i: int) -> None:
    """Write a ProductPoint's raw coordinates into state row ``i``."""
    raw = p.raw
    for s, src in enumerate(packed.slot_src):
        v = raw[s]
        if src < 2:
            if not isinstance(v, (int, np.integer)):
                v = maps.unit_to_ticks(float(v), packed.modulus)
            iu[i, src] = np.uint64(int(v) % packed.modulus)
        else:
            fx[i, src - 10] = float(v)


def read_point(packed: PackedSystem, system: maps.SystemDescriptor,
               iu, fx, i: int) -> maps.ProductPoint:
    """Read state row ``i`` back as a ProductPoint (ticks kept exact)."""
    raw = []
    for src in packed.slot_src:
        if src < 2:
            raw.append(int(iu[i, src]))
        else:
            raw.append(float(fx[i, src - 10]))
    nb = system.n_base
    return maps.ProductPoint(tuple(raw[:nb]), tuple(raw[nb:]))


def step_point(system: maps.SystemDescriptor, p: maps.ProductPoint) -> maps.ProductPoint:
    """Scalar step through the same kernel the ensemble runners use."""
    packed = pack(system)
    iu, fx, _ = new_state(1)
    load_point(packed, system, p, iu, fx, 0)
    ok = _single_step(*packed.runner_args(), iu, fx, packed.inv_p)
    if not ok:
        raise OrbitDivergedError(1)
    return read_point(packed, system, iu, fx, 0)


def values_matrix(packed: PackedSystem, iu, fx) -> np.ndarray:
    """Float coordinates of all members, shape (count, n_slots)."""
    out = np.empty((iu.shape[0], packed.n_slots), dtype=np.float64)
    extract_values(iu, fx, packed.slot_src, packed.inv_p, out)
    return out
