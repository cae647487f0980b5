"""Block-maximum statistics of the observable -log(distance to a target).

The observable is Phi(p) = -log d(p, p0) for a fixed target p0; the block
maximum over an orbit is Z_n = max(Phi, Phi o f, ..., Phi o f^n) (n + 1
evaluations). With the scaling level u_n = v + (1/D) log n, the fraction of
an invariant-measure ensemble with Z_n < u_n is compared against the Type I
law G(v) = exp(-H e^{-D v}).

Normalization of H: the local density is estimated in the r^D convention

    H(p0) = lim_{r -> 0} nu(B_r(p0)) / r^D,

i.e. the Radon-Nikodym density at p0 multiplied by the volume of the unit
D-ball (2 for D=1, pi for D=2). This is the constant that actually appears in
the limit of n * nu(B_{e^{-v} n^{-1/D}}), hence the one that makes
exp(-H e^{-Dv}) the honest limit law; normalizing by the true ball volume
instead would leave the limit off by that unit-ball factor. Ball volumes near
interval endpoints use the exact boundary-truncated disc area, which removes
an up-to-2x bias for targets close to a fiber boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import engine, maps, orbit
from .errors import DivergenceBudgetError, GeometryMismatchError

PHI_INFINITE = math.inf


# ---------------------------------------------------------------------------
# observable, scaling, limit law
# ---------------------------------------------------------------------------

def observable_phi(p: maps.ProductPoint, p_target: maps.ProductPoint,
                   geom: maps.ProductGeometry) -> float:
    """-log d(p, p_target); +inf sentinel at zero distance."""
    d = maps.product_metric(p, p_target, geom)
    if d == 0.0:
        return PHI_INFINITE
    return -math.log(d)


def scaling_un(v: float, n: float, D: int) -> float:
    """Observation level u_n = v + (1/D) log n."""
    if n < 1:
        raise ValueError("block length n must be >= 1")
    if D < 1:
        raise ValueError("dimension D must be >= 1")
    return float(v) + math.log(n) / D


def block_maximum(points, p_target: maps.ProductPoint,
                  geom: maps.ProductGeometry) -> float:
    """Max of the observable over an orbit stream; +inf propagates."""
    best = None
    for p in points:
        phi = observable_phi(p, p_target, geom)
        if best is None or phi > best:
            best = phi
    if best is None:
        raise ValueError("block_maximum of an empty orbit stream")
    return best


def gumbel_limit(v: float, H: float, D: int) -> float:
    """Type I limit G(v) = exp(-H e^{-D v}); degenerate (== 1) when H = 0."""
    if H < 0:
        raise ValueError("H must be nonnegative")
    return math.exp(-H * math.exp(-D * float(v)))


def ks_distance(empirical: Sequence[float], theoretical: Sequence[float]) -> float:
    """Sup over the grid of |empirical - theoretical|."""
    e = np.asarray(empirical, dtype=float)
    t = np.asarray(theoretical, dtype=float)
    if e.shape != t.shape:
        raise ValueError("curves must share the grid")
    if e.size == 0:
        raise ValueError("empty curves")
    if np.any(np.diff(e) < 0):
        raise ValueError("empirical rows must be nondecreasing")
    return float(np.max(np.abs(e - t)))


# ---------------------------------------------------------------------------
# indicator identities for exceedance counts
# ---------------------------------------------------------------------------

def indicator_bounds(phi_values: Sequence[float], u: float) -> Tuple[int, int, int]:
    """Exact integer sandwich for the exceedance indicator of a finite block.

    For the values (phi_1 .. phi_k) returns

        upper = sum_j 1{phi_j >= u}
        mid   = 1{max_j phi_j >= u}
        lower = upper - sum_{l != j} 1{phi_j >= u} 1{phi_l >= u}

    which always satisfy upper >= mid >= lower (the double sum counts ordered
    pairs). All arithmetic is on Python ints, so the comparison is exact.
    """
    flags = [1 if phi >= u else 0 for phi in phi_values]
    m = sum(flags)
    upper = m
    mid = 1 if m >= 1 else 0
    lower = m - m * (m - 1)
    return upper, mid, lower


# ---------------------------------------------------------------------------
# ball volumes
# ---------------------------------------------------------------------------

def unit_ball_volume(D: int) -> float:
    """Volume of the Euclidean unit ball in dimension D."""
    return math.pi ** (D / 2.0) / math.gamma(D / 2.0 + 1.0)


def ball_volume(geom: maps.ProductGeometry, center: Sequence[float],
                r: float) -> float:
    """Lebesgue volume of the metric ball B_r(center) inside the phase space.

    Exact for D = 1 and for D = 2 with at most one interval coordinate
    (boundary truncation via circular-segment areas); higher dimensions are
    supported away from interval boundaries only.
    """
    if r <= 0:
        raise ValueError("radius must be positive")
    slots = geom.slots
    D = len(slots)
    center = [float(c) for c in center]
    if len(center) != D:
        raise GeometryMismatchError("center does not match the geometry")
    for s in slots:
        if s.kind == maps.CIRCLE and r > 0.5:
            raise ValueError("radius exceeds half the circle circumference")
    if D == 1:
        s = slots[0]
        if s.kind == maps.CIRCLE:
            return 2.0 * r
        return min(center[0] + r, s.hi) - max(center[0] - r, s.lo)
    intervals = [(i, s) for i, s in enumerate(slots) if s.kind == maps.INTERVAL]
    if not intervals:
        return unit_ball_volume(D) * r ** D
    if D == 2 and len(intervals) == 1:
        i, s = intervals[0]
        area = math.pi * r * r
        area -= _segment_area(r, s.hi - center[i])
        area -= _segment_area(r, center[i] - s.lo)
        if area <= 0:
            raise ValueError("ball lies outside the phase space")
        return area
    raise NotImplementedError(
        "truncated ball volumes beyond one interval coordinate in D=2")


def _segment_area(r: float, t: float) -> float:
    """Area of the disc segment beyond a chord at distance t from the center."""
    if t >= r:
        return 0.0
    if t <= -r:
        return math.pi * r * r
    return r * r * math.acos(t / r) - t * math.sqrt(r * r - t * t)


def _distances_to_target(values: np.ndarray, target: np.ndarray,
                         geom: maps.ProductGeometry) -> np.ndarray:
    acc = np.zeros(values.shape[0])
    for i, s in enumerate(geom.slots):
        dv = np.abs(values[:, i] - target[i])
        if s.kind == maps.CIRCLE:
            dv = dv % 1.0
            dv = np.minimum(dv, 1.0 - dv)
        acc += dv * dv
    return np.sqrt(acc)


# ---------------------------------------------------------------------------
# local density estimation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DensityRow:
    radius: float
    hits: int
    nu_mass: float
    volume: float
    h_hat: float
    stderr: float


@dataclass
class DensityEstimate:
    """Per-radius local density estimates in the r^D normalization."""

    rows: List[DensityRow]
    h_hat: float
    h_hat_stderr: float
    chosen_radius: float
    samples: int
    warnings: List[str] = field(default_factory=list)


def estimate_local_density(system: maps.SystemDescriptor, ensemble: orbit.Ensemble,
                           p_target: maps.ProductPoint, radii: Sequence[float],
                           burn_in: Optional[int] = None,
                           state: Optional[orbit.EnsembleState] = None) -> DensityEstimate:
    """Visit-frequency estimate of H(p_target) = lim nu(B_r) / r^D.

    Draws an invariant-measure ensemble, counts members inside each ball, and
    converts the mass to a density via the exact (possibly truncated) ball
    volume, rescaled so an untruncated estimate equals nu(B_r)/r^D. The
    headline value is taken at the smallest radius; if that ball catches no
    visits the estimate falls back to the smallest radius that does, with a
    widen-radius warning. Pass a pre-sampled ``state`` to share one ensemble
    across several targets.
    """
    radii = sorted(float(r) for r in radii)
    if not radii or radii[0] <= 0:
        raise ValueError("radii must be positive")
    geom = system.geometry
    D = geom.dim
    cD = unit_ball_volume(D)
    if state is None:
        state = orbit.sample_invariant(system, ensemble, burn_in)
    values = state.values()[state.alive]
    m = values.shape[0]
    target = maps.point_values(p_target, geom)
    dist = _distances_to_target(values, target, geom)
    rows = []
    for r in radii:
        vol = ball_volume(geom, target, r)
        hits = int((dist < r).sum())
        nu = hits / m
        scale = cD / vol
        rows.append(DensityRow(
            radius=r, hits=hits, nu_mass=nu, volume=vol,
            h_hat=nu * scale,
            stderr=math.sqrt(nu * (1.0 - nu) / m) * scale,
        ))
    warnings = []
    chosen = None
    for row in rows:
        if row.hits > 0:
            chosen = row
            break
    if chosen is None:
        chosen = rows[-1]
        warnings.append(
            f"no visits inside any ball down to radius {rows[-1].radius}; "
            "density reported as 0 with a one-sided bound")
        bound = 3.0 / m * cD / chosen.volume
        return DensityEstimate(rows, 0.0, bound, chosen.radius, m, warnings)
    if chosen is not rows[0]:
        warnings.append(
            f"no visits at radius {rows[0].radius}; widened to {chosen.radius}")
    return DensityEstimate(rows, chosen.h_hat, chosen.stderr, chosen.radius,
                           m, warnings)


# ---------------------------------------------------------------------------
# short-range pair statistic
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PairStatistic:
    """Monte Carlo estimate of n * sum_{j<=n^gamma'} nu(hit at 0 and at j)."""

    value: float
    n: int
    gamma_prime: float
    v: float
    radius: float
    window: int
    nu_ball: float
    mean_count: float
    samples: int


def short_range_pair_statistic(system: maps.SystemDescriptor,
                               p_target: maps.ProductPoint, n: int,
                               gamma_prime: float, ensemble: orbit.Ensemble,
                               v: float = 0.0,
                               nu_ball: Optional[float] = None,
                               density_radii: Optional[Sequence[float]] = None,
                               burn_in: Optional[int] = None) -> PairStatistic:
    """Estimate the short-range clustering sum at level u_n(v).

    The sum n * sum_{j=1}^{n^gamma'} nu(Phi > u_n, Phi o f^j > u_n) factors as
    n * nu(B) * E[hits within the window | start in B]. The conditional
    expectation is sampled with starts uniform in the ball (the invariant
    density is locally continuous, so this matches nu|B as r -> 0), and nu(B)
    comes from the local density estimate unless supplied.
    """
    if gamma_prime <= 0:
        raise ValueError("gamma_prime must be positive")
    if n < 1:
        raise ValueError("n must be >= 1")
    geom = system.geometry
    D = geom.dim
    u = scaling_un(v, n, D)
    r = math.exp(-u)
    window = max(1, math.ceil(n ** gamma_prime))
    if nu_ball is None:
        if density_radii is None:
            density_radii = [0.04, 0.02, 0.01]
        dens = estimate_local_density(
            system,
            orbit.Ensemble(count=ensemble.count, master_seed=ensemble.master_seed,
                           stream_id=orbit.STREAM_DENSITY),
            p_target, density_radii, burn_in)
        # nu(B_r) = (H / c_D) * vol(B_r); untruncated this is H * r^D
        nu_ball = dens.h_hat / unit_ball_volume(D) * ball_volume(geom, maps.point_values(p_target, geom), r)
    if nu_ball == 0.0:
        return PairStatistic(0.0, n, gamma_prime, v, r, window, 0.0, 0.0, 0)

    target = maps.point_values(p_target, geom)
    starts = _uniform_in_ball(geom, target, r, ensemble)
    m = starts.shape[0]
    packed = engine.pack(system)
    iu, fx, status = engine.new_state(m)
    for i in range(m):
        engine.load_point(packed, system, maps.make_point(starts[i], geom), iu, fx, i)
    counts = np.zeros(m, dtype=np.int64)
    engine.run_ball_hits(*packed.runner_args(), iu, fx, status, window, 0,
                         packed.inv_p, packed.slot_src, packed.slot_kind,
                         target, r, counts)
    mean_count = float(counts.mean()) if m else 0.0
    return PairStatistic(
        value=n * nu_ball * mean_count,
        n=n, gamma_prime=gamma_prime, v=v, radius=r, window=window,
        nu_ball=float(nu_ball), mean_count=mean_count, samples=m)


def _uniform_in_ball(geom: maps.ProductGeometry, center: np.ndarray, r: float,
                     ensemble: orbit.Ensemble) -> np.ndarray:
    """Rejection-sample points uniform in B_r(center) intersected with the domain."""
    rng = orbit.generator(ensemble.master_seed, orbit.STREAM_PAIR,
                          ensemble.stream_id)
    D = geom.dim
    want = ensemble.count
    out = np.empty((want, D))
    got = 0
    while got < want:
        cand = center + r * (2.0 * rng.random((2 * want, D)) - 1.0)
        ok = np.sqrt(((cand - center) ** 2).sum(axis=1)) < r
        for i, s in enumerate(geom.slots):
            if s.kind == maps.CIRCLE:
                cand[:, i] = cand[:, i] % 1.0
            else:
                ok &= (cand[:, i] >= s.lo) & (cand[:, i] <= s.hi)
        cand = cand[ok]
        take = min(want - got, cand.shape[0])
        out[got:got + take] = cand[:take]
        got += take
    return out


# ---------------------------------------------------------------------------
# the main experiment
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EvtExperiment:
    """Full specification of one block-maximum law measurement."""

    system: maps.SystemDescriptor
    n: int
    ensemble: orbit.Ensemble
    v_grid: Tuple[float, ...]
    h_radii: Tuple[float, ...]
    p_target: Optional[maps.ProductPoint] = None
    burn_in: Optional[int] = None
    density_samples: Optional[int] = None
    pair_samples: int = 2000
    pair_gamma_prime: float = 0.4
    pair_v: float = 0.0

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("n must be nonnegative")
        vg = tuple(float(v) for v in self.v_grid)
        if len(vg) < 1 or any(b <= a for a, b in zip(vg, vg[1:])):
            raise ValueError("v_grid must be strictly increasing")
        rr = tuple(float(r) for r in self.h_radii)
        if len(rr) < 1 or any(r <= 0 for r in rr) or any(
                b >= a for a, b in zip(rr, rr[1:])):
            raise ValueError("h_radii must be strictly decreasing and positive")
        object.__setattr__(self, "v_grid", vg)
        object.__setattr__(self, "h_radii", rr)


@dataclass
class EvtResult:
    """Per-level empirical law, its Gumbel reference, and diagnostics."""

    v_grid: np.ndarray
    u_n: np.ndarray
    empirical: np.ndarray
    theoretical: np.ndarray
    abs_diff: np.ndarray
    ks_distance: float
    h_hat: float
    h_hat_stderr: float
    density: DensityEstimate
    diverged_count: int
    valid_count: int
    n: int
    dim: int
    target_values: np.ndarray
    short_range: Optional[PairStatistic]
    warnings: List[str]

    def rows(self):
        for i in range(self.v_grid.size):
            yield (float(self.v_grid[i]), float(self.u_n[i]),
                   float(self.empirical[i]), float(self.theoretical[i]),
                   float(self.abs_diff[i]))


_PERIODIC_WARN_WINDOW = 50


def empirical_evt_cdf(exp: EvtExperiment) -> EvtResult:
    """Measure the block-maximum law of an experiment.

    For each v in the grid, reports the ensemble fraction with Z_n < u_n(v);
    fills H via the local density estimator and sets the reference curve
    G(v) = exp(-H_hat e^{-Dv}). Orbit-diverged members are counted and
    excluded; more than 1% of them aborts the experiment.
    """
    system = exp.system
    geom = system.geometry
    D = geom.dim
    seed = exp.ensemble.master_seed
    warnings: List[str] = []

    target = exp.p_target
    if target is None:
        target = orbit.sample_point(system, seed, exp.burn_in)
    target_vals = maps.point_values(target, geom)

    state = orbit.sample_invariant(system, exp.ensemble, exp.burn_in)
    packed = engine.pack(system)
    dmin = np.empty(state.count)
    engine.run_min_distance(*packed.runner_args(), state.iu, state.fx,
                            state.status, exp.n, state.steps_done,
                            packed.inv_p, packed.slot_src, packed.slot_kind,
                            target_vals, dmin)
    valid = state.status < 0
    diverged = int((~valid).sum())
    if diverged > 0.01 * state.count:
        raise DivergenceBudgetError(diverged, state.count)
    dmin = dmin[valid]
    m = dmin.size

    v_grid = np.asarray(exp.v_grid)
    n_eff = max(exp.n, 1)  # Z_0 uses the degenerate level u = v
    u_n = v_grid + (math.log(n_eff) / D if exp.n >= 1 else 0.0)
    thresholds = np.exp(-u_n)
    empirical = np.array([(dmin > t).mean() for t in thresholds])

    dens_count = exp.density_samples or exp.ensemble.count
    dens = estimate_local_density(
        system,
        orbit.Ensemble(count=dens_count, master_seed=seed,
                       stream_id=orbit.STREAM_DENSITY),
        target, exp.h_radii, exp.burn_in)
    warnings.extend(dens.warnings)

    theoretical = np.array([gumbel_limit(v, dens.h_hat, D) for v in v_grid])
    diff = np.abs(empirical - theoretical)

    pair = None
    if exp.pair_samples > 0 and exp.n >= 1:
        pair = short_range_pair_statistic(
            system, target, exp.n, exp.pair_gamma_prime,
            orbit.Ensemble(count=exp.pair_samples, master_seed=seed,
                           stream_id=orbit.STREAM_PAIR),
            v=exp.pair_v,
            nu_ball=dens.h_hat / unit_ball_volume(D) * ball_volume(
                geom, target_vals, math.exp(-scaling_un(exp.pair_v, exp.n, D))),
            burn_in=exp.burn_in)

    warn = _target_return_warning(system, target, min(exp.h_radii))
    if warn:
        warnings.append(warn)

    return EvtResult(
        v_grid=v_grid, u_n=u_n, empirical=empirical, theoretical=theoretical,
        abs_diff=diff, ks_distance=float(np.max(diff)), h_hat=dens.h_hat,
        h_hat_stderr=dens.h_hat_stderr, density=dens, diverged_count=diverged,
        valid_count=m, n=exp.n, dim=D, target_values=target_vals,
        short_range=pair, warnings=warnings)


def _target_return_warning(system: maps.SystemDescriptor,
                           target: maps.ProductPoint, radius: float) -> Optional[str]:
    """Warn when the target's own short orbit re-enters its smallest ball.

    Targets on or near short periodic orbits cluster their exceedances, which
    is exactly the situation the limit law's almost-every-target caveat
    excludes; the short-range pair statistic stays order one there.
    """
    geom = system.geometry
    target_vals = maps.point_values(target, geom)
    packed = engine.pack(system)
    iu, fx, status = engine.new_state(1)
    engine.load_point(packed, system, target, iu, fx, 0)
    counts = np.zeros(1, dtype=np.int64)
    engine.run_ball_hits(*packed.runner_args(), iu, fx, status,
                         _PERIODIC_WARN_WINDOW, 0, packed.inv_p,
                         packed.slot_src, packed.slot_kind, target_vals,
                         radius, counts)
    if counts[0] > 0:
        return (f"target orbit returns within {radius} of itself inside "
                f"{_PERIODIC_WARN_WINDOW} steps; the limit law may degenerate "
                "at this target")
    return None
