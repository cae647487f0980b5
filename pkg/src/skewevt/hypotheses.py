"""Empirical checks of the two sufficient hypotheses for the Type I law.

Hypothesis (a): the base-map measure of the rapidly returning set

    E_n = { x : d_X(T^j x, x) < 1/n for some j in 1..g(n) },   g(n) = ceil(n^{D gamma'}),

decays like n^{-beta}. Hypothesis (b): correlations of a Holder observable
against a bounded one decay polynomially, |Cor(Psi o f^j, Upsilon)| <= C j^{-alpha},
with alpha above an explicit threshold in (D, kappa, gamma'). Both are
estimated by Monte Carlo with error bars and log-log least-squares exponent
fits; nothing here certifies the hypotheses, it only measures them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import engine, maps, orbit

_LEBESGUE_EXACT = ("linear-expanding",)


# ---------------------------------------------------------------------------
# parameter record and threshold arithmetic
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HypothesisParams:
    """Exponents entering the sufficient conditions.

    beta         return-set decay exponent
    gamma_prime  window exponent, g(n) = ceil(n^{D gamma'}); needs gamma' < beta/D
    alpha        correlation decay exponent
    alpha_hat    Holder exponent of the test functions, in (0, 1]
    delta        density integrability surplus (density in L^{1+delta})
    kappa        conjugate exponent, 1/(1+delta) + 1/kappa = 1

    Give delta or kappa (or both, if conjugate). kappa = 1 is the
    locally-bounded-density variant, where no finite delta applies.
    """

    beta: float
    gamma_prime: float
    alpha: float
    alpha_hat: float = 1.0
    delta: Optional[float] = None
    kappa: Optional[float] = None

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.gamma_prime <= 0:
            raise ValueError("gamma_prime must be positive")
        if not (0.0 < self.alpha_hat <= 1.0):
            raise ValueError("alpha_hat must lie in (0, 1]")
        if self.delta is None and self.kappa is None:
            object.__setattr__(self, "delta", 1.0)
        if self.delta is not None:
            if self.delta <= 0:
                raise ValueError("delta must be positive")
            conj = (1.0 + self.delta) / self.delta
            if self.kappa is None:
                object.__setattr__(self, "kappa", conj)
            elif not math.isclose(self.kappa, conj, rel_tol=1e-9):
                raise ValueError(
                    f"kappa={self.kappa} is not conjugate to 1+delta={1 + self.delta} "
                    f"(expected {conj})")
        else:
            if self.kappa < 1.0:
                raise ValueError("kappa must be >= 1")
            if self.kappa > 1.0:
                object.__setattr__(self, "delta", 1.0 / (self.kappa - 1.0))

    def validate_against(self, D: int) -> List[str]:
        """Constraint violations that involve the phase-space dimension."""
        out = []
        if not self.gamma_prime < self.beta / D:
            out.append(f"gamma_prime={self.gamma_prime} must be < beta/D={self.beta / D}")
        return out


def check_exponent_condition(params: HypothesisParams, D: int) -> Dict[str, object]:
    """Threshold for the correlation exponent in the general (L^{1+delta}) case.

        alpha > [ (1/D)(1 + D kappa (3/2 - 1/kappa)) + 3/2 ] / min(gamma', 1/2)

    kappa = 1 is accepted for the locally-Lipschitz-density variant.
    """
    if params.gamma_prime <= 0:
        raise ValueError("gamma_prime must be positive")
    if D < 1:
        raise ValueError("D must be >= 1")
    kappa = params.kappa
    num = (1.0 / D) * (1.0 + D * kappa * (1.5 - 1.0 / kappa)) + 1.5
    threshold = num / min(params.gamma_prime, 0.5)
    return {"threshold": threshold, "satisfied": bool(params.alpha > threshold)}


def check_gouezel_alpha_condition(alpha_max: float, gamma_prime: float,
                                  D: int) -> Dict[str, object]:
    """Upper bound on the intermittency maximum for the neutral-curve skew product.

        alpha_max < min(gamma', 1/2) / ( min(gamma', 1/2) + (1/D)(1 + D/2) + 3/2 )
    """
    if gamma_prime <= 0:
        raise ValueError("gamma_prime must be positive")
    m = min(gamma_prime, 0.5)
    bound = m / (m + (1.0 / D) * (1.0 + D / 2.0) + 1.5)
    return {"bound": bound, "satisfied": bool(alpha_max < bound)}


# ---------------------------------------------------------------------------
# fitted decay series
# ---------------------------------------------------------------------------

@dataclass
class DecaySeries:
    """A decaying sequence with errors and a log-log least-squares exponent."""

    x: np.ndarray
    values: np.ndarray
    stderrs: np.ndarray
    exponent: float          # decay exponent: value ~ C * x^(-exponent)
    intercept: float         # log C of the fit
    r_squared: float
    fit_range: Tuple[float, float]
    fitted_mask: np.ndarray  # points actually used by the fit


def loglog_fit(x: Sequence[float], values: Sequence[float],
               fit_range: Optional[Tuple[float, float]] = None):
    """Unweighted least squares of log(value) on log(x) over a closed range.

    Nonpositive values are excluded. Returns (exponent, intercept, r2, mask)
    with the decay exponent = -slope.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(values, dtype=float)
    if fit_range is None:
        fit_range = (float(np.min(x)), float(np.max(x)))
    mask = (x >= fit_range[0]) & (x <= fit_range[1]) & (v > 0)
    if mask.sum() < 2:
        return math.nan, math.nan, math.nan, mask
    lx = np.log(x[mask])
    lv = np.log(v[mask])
    slope, intercept = np.polyfit(lx, lv, 1)
    pred = slope * lx + intercept
    ss_res = float(((lv - pred) ** 2).sum())
    ss_tot = float(((lv - lv.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return -float(slope), float(intercept), r2, mask


@dataclass
class DecayReport:
    """Correlation magnitudes with their fit, norms, and threshold verdicts."""

    series: DecaySeries
    sup_norm_psi: float
    holder_norm_upsilon: float
    alpha_hat: float
    samples: int
    verdict: Optional[Dict[str, object]] = None


# ---------------------------------------------------------------------------
# rapidly returning sets
# ---------------------------------------------------------------------------

def window_length(n: int, gamma_prime: float, D: int) -> int:
    """g(n) = ceil(n^{D gamma'}), kept >= 1.

    Note ceil makes g >= 2 whenever n >= 2 and gamma' > 0; pass an explicit
    ``window`` to the estimators to pin g (e.g. the g = 1 reference sets).
    """
    return max(1, math.ceil(n ** (D * gamma_prime)))


def _resolve_window(window, n: int, gamma_prime: float, D: int) -> int:
    if window is None:
        return window_length(n, gamma_prime, D)
    if callable(window):
        return max(1, int(window(n)))
    return max(1, int(window))


def _mu_samples(system: maps.SystemDescriptor, count: int, seed: int,
                stream: int, burn_in: Optional[int]) -> orbit.EnsembleState:
    """Invariant-measure samples; uniform draws directly when that is exact."""
    ens = orbit.Ensemble(count=count, master_seed=seed, stream_id=stream)
    if system.kind in _LEBESGUE_EXACT or (
            system.kind == "circle-extension"
            and system.params["base"].kind in _LEBESGUE_EXACT):
        # Lebesgue is exactly invariant: skip the burn-in entirely
        return orbit.initial_state(system, ens)
    return orbit.sample_invariant(system, ens, burn_in)


def estimate_en_measure(system: maps.SystemDescriptor, n_list: Sequence[int],
                        gamma_prime: float, D: int, samples: int, seed: int,
                        fit_range: Optional[Tuple[float, float]] = None,
                        burn_in: Optional[int] = None,
                        window=None) -> DecaySeries:
    """Monte Carlo measure of the rapidly returning set of a base map, per n.

    The window uses the product dimension D (of the extension the base will
    drive), not the base's own dimension; ``window`` (int or callable of n)
    overrides the default g(n) = ceil(n^{D gamma'}). Zero-hit measures are
    reported as 0 with a one-sided binomial bound and excluded from the
    exponent fit, whose negative slope estimates beta.
    """
    if gamma_prime <= 0:
        raise ValueError("gamma_prime must be positive")
    if system.m_fiber != 0:
        raise ValueError("estimate_en_measure works on base maps; "
                         "use estimate_product_en_measure for extensions")
    n_list = [int(n) for n in n_list]
    packed = engine.pack(system)
    values = np.empty(len(n_list))
    stderrs = np.empty(len(n_list))
    for idx, n in enumerate(n_list):
        state = _mu_samples(system, samples, seed, orbit.STREAM_EN + idx, burn_in)
        refs = state.values()
        hit_full = np.zeros(state.count, dtype=np.uint8)
        hit_base = np.zeros(state.count, dtype=np.uint8)
        engine.run_return_set(*packed.runner_args(), state.iu, state.fx,
                              state.status,
                              _resolve_window(window, n, gamma_prime, D),
                              state.steps_done, packed.inv_p, packed.slot_src,
                              packed.slot_kind, refs, 1.0 / n,
                              packed.n_base_slots, hit_full, hit_base)
        alive = state.status < 0
        m = int(alive.sum())
        frac = float(hit_full[alive].sum()) / m
        values[idx] = frac
        stderrs[idx] = (math.sqrt(frac * (1 - frac) / m) if frac > 0
                        else 3.0 / m)
    exponent, intercept, r2, mask = loglog_fit(n_list, values, fit_range)
    return DecaySeries(np.asarray(n_list, dtype=float), values, stderrs,
                       exponent, intercept, r2,
                       fit_range or (float(min(n_list)), float(max(n_list))),
                       mask)


def estimate_product_en_measure(system: maps.SystemDescriptor,
                                n_list: Sequence[int], gamma_prime: float,
                                samples: int, seed: int,
                                fit_range: Optional[Tuple[float, float]] = None,
                                burn_in: Optional[int] = None,
                                window=None) -> DecaySeries:
    """Returning-set measure of the full product system, with inclusion audit.

    Every sampled product return (full metric within 1/n inside the window)
    must also be a base return at the same step, because the base distance is
    dominated by the product distance. A violation can only be a kernel bug,
    so it raises AssertionError.
    """
    if system.m_fiber == 0:
        raise ValueError("estimate_product_en_measure needs a product system")
    n_list = [int(n) for n in n_list]
    D = system.dim
    packed = engine.pack(system)
    values = np.empty(len(n_list))
    stderrs = np.empty(len(n_list))
    for idx, n in enumerate(n_list):
        state = _mu_samples(system, samples, seed, orbit.STREAM_EN + idx, burn_in)
        refs = state.values()
        hit_full = np.zeros(state.count, dtype=np.uint8)
        hit_base = np.zeros(state.count, dtype=np.uint8)
        engine.run_return_set(*packed.runner_args(), state.iu, state.fx,
                              state.status,
                              _resolve_window(window, n, gamma_prime, D),
                              state.steps_done, packed.inv_p, packed.slot_src,
                              packed.slot_kind, refs, 1.0 / n,
                              packed.n_base_slots, hit_full, hit_base)
        alive = state.status < 0
        bad = int((hit_full[alive] & ~hit_base[alive] & 1).sum())
        assert bad == 0, (
            f"{bad} product returns without a base return at n={n}; "
            "the base distance cannot exceed the product distance")
        m = int(alive.sum())
        frac = float(hit_full[alive].sum()) / m
        values[idx] = frac
        stderrs[idx] = (math.sqrt(frac * (1 - frac) / m) if frac > 0
                        else 3.0 / m)
    exponent, intercept, r2, mask = loglog_fit(n_list, values, fit_range)
    return DecaySeries(np.asarray(n_list, dtype=float), values, stderrs,
                       exponent, intercept, r2,
                       fit_range or (float(min(n_list)), float(max(n_list))),
                       mask)


# ---------------------------------------------------------------------------
# test-function library and correlation decay
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TestFunction:
    """A Holder observable on the product space, identified by form.

    Forms:
      cos       cos(2 pi freq * x_slot)
      sin       sin(2 pi freq * x_slot)
      sawtooth  x_slot - 1/2 (Lipschitz on the coordinate chart; it is
                discontinuous across a circle's wrap point, so treat it as a
                chart observable there)
      bump      max(0, 1 - d(p, center)/radius), Lipschitz constant 1/radius
      const     the constant ``value``
    """

    form: str
    slot: int = 0
    freq: int = 1
    center: Optional[Tuple[float, ...]] = None
    radius: float = 0.1
    value: float = 1.0

    def __post_init__(self):
        if self.form not in ("cos", "sin", "sawtooth", "bump", "const"):
            raise ValueError(f"unknown test function form {self.form!r}")
        if self.form == "bump":
            if self.center is None:
                raise ValueError("bump needs a center")
            if self.radius <= 0:
                raise ValueError("bump needs a positive radius")
            object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @property
    def sup_norm(self) -> float:
        return {"cos": 1.0, "sin": 1.0, "sawtooth": 0.5, "bump": 1.0,
                "const": abs(self.value)}[self.form]

    @property
    def lipschitz(self) -> float:
        return {"cos": 2.0 * math.pi * self.freq,
                "sin": 2.0 * math.pi * self.freq,
                "sawtooth": 1.0,
                "bump": 1.0 / self.radius,
                "const": 0.0}[self.form]

    def holder_norm(self, alpha_hat: float = 1.0) -> float:
        """sup + Holder seminorm; interpolated from the Lipschitz constant."""
        if not (0.0 < alpha_hat <= 1.0):
            raise ValueError("alpha_hat must lie in (0, 1]")
        if self.lipschitz == 0.0:
            return self.sup_norm
        semi = self.lipschitz ** alpha_hat * (2.0 * self.sup_norm) ** (1.0 - alpha_hat)
        return self.sup_norm + semi

    def __call__(self, values: np.ndarray,
                 geom: maps.ProductGeometry) -> np.ndarray:
        x = values[:, self.slot]
        if self.form == "cos":
            return np.cos(2.0 * np.pi * self.freq * x)
        if self.form == "sin":
            return np.sin(2.0 * np.pi * self.freq * x)
        if self.form == "sawtooth":
            return x - 0.5
        if self.form == "const":
            return np.full(values.shape[0], self.value)
        from .evt import _distances_to_target
        d = _distances_to_target(values, np.asarray(self.center), geom)
        return np.maximum(0.0, 1.0 - d / self.radius)


def estimate_correlation_decay(system: maps.SystemDescriptor,
                               upsilon: TestFunction, psi: TestFunction,
                               j_list: Sequence[int], samples: int, seed: int,
                               alpha_hat: float = 1.0,
                               fit_range: Optional[Tuple[float, float]] = None,
                               burn_in: Optional[int] = None,
                               params: Optional[HypothesisParams] = None) -> DecayReport:
    """Monte Carlo time-j correlations |E[Psi o f^j * Upsilon] - E[Psi] E[Upsilon]|.

    One invariant-measure ensemble is evaluated at time 0 (Upsilon) and pushed
    forward incrementally to every j (Psi). The standard error is that of the
    empirical covariance (influence-function form). The exponent fit runs on
    the magnitudes; a verdict against the explicit threshold is attached when
    params are supplied.
    """
    j_list = sorted(int(j) for j in j_list)
    if not j_list or j_list[0] < 1:
        raise ValueError("j_list must contain positive integers")
    geom = system.geometry
    state = _mu_samples(system, samples, seed, orbit.STREAM_CORR, burn_in)
    packed = engine.pack(system)
    vals0 = state.values()
    a = upsilon(vals0, geom)
    alive = state.status < 0
    values = np.empty(len(j_list))
    stderrs = np.empty(len(j_list))
    done = 0
    for idx, j in enumerate(j_list):
        engine.advance(*packed.runner_args(), state.iu, state.fx, state.status,
                       j - done, state.steps_done, packed.inv_p)
        state.steps_done += j - done
        done = j
        alive &= state.status < 0
        b = psi(state.values(), geom)
        aa = a[alive]
        bb = b[alive]
        m = aa.size
        # centered form: exactly zero for constant observables
        infl = (aa - aa.mean()) * (bb - bb.mean())
        values[idx] = abs(float(infl.mean()))
        stderrs[idx] = float(infl.std(ddof=1) / math.sqrt(m))
    exponent, intercept, r2, mask = loglog_fit(j_list, values, fit_range)
    series = DecaySeries(np.asarray(j_list, dtype=float), values, stderrs,
                         exponent, intercept, r2,
                         fit_range or (float(j_list[0]), float(j_list[-1])),
                         mask)
    verdict = None
    if params is not None:
        verdict = check_exponent_condition(params, system.dim)
        verdict["alpha_fitted"] = exponent
        verdict["fitted_satisfies"] = bool(exponent > verdict["threshold"])
    return DecayReport(series=series, sup_norm_psi=psi.sup_norm,
                       holder_norm_upsilon=upsilon.holder_norm(alpha_hat),
                       alpha_hat=alpha_hat, samples=samples, verdict=verdict)
