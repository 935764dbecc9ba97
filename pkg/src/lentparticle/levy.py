"""Poisson random measures, jump configurations and cadlag paths.

A jump configuration is one realization of a Poisson random measure on
[0, T] x X: a finite list of (time, mark) points.  Infinite-activity jump
measures are handled by truncation below a cut radius, with the compensator
of the removed compensated integral carried explicitly as a drift, so that
every downstream per-jump sum is exact for the truncated process.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad

from .errors import ConfigurationError, DomainError, SamplerError, SpecViolationError
from .rng import stream
from .csvio import write_csv

__all__ = [
    "LevyMeasureSpec",
    "JumpConfiguration",
    "CadlagPath",
    "sample_configuration",
    "build_path",
    "stochastic_integral",
    "configurations_equal",
    "write_configuration_csv",
    "write_path_csv",
]

#: absolute tolerance of the between-jump drift quadrature
QUAD_ABS_TOL = 1e-12


@dataclass(frozen=True)
class LevyMeasureSpec:
    """Jump-size measure nu = k dx together with the bottom-structure data.

    Fields
    ------
    dim:
        dimension r of the mark space X, a subset of R^r.
    density_k:
        the jump-size density k (per unit mark volume), R^r -> R>=0.
    domain_O:
        predicate for the open set O on which the quadratic form lives.
    psi:
        dominated weight, continuous on O and zero outside; must satisfy
        psi <= k on O.
    xi:
        symmetric r x r coefficient field of the quadratic form.
    total_mass:
        nu(X); may be math.inf for infinite-activity measures.
    truncation_cut:
        marks with |u| <= cut are dropped from simulation (must be > 0
        when total_mass is infinite).
    sampler:
        procedure (rng, n) -> (n, dim) array of marks drawn from the
        normalized restriction of nu to {|u| > cut}.
    truncated_mass:
        nu({|u| > cut}); defaults to total_mass when no truncation applies.
        Sampling requires this to be finite.
    compensator_mean:
        integral of u over {|u| > cut} against nu; used as per-unit-time
        drift when the driver is the compensated integral.  None means the
        raw (uncompensated) jump sum.
    """

    dim: int
    density_k: Callable[[np.ndarray], float]
    domain_O: Callable[[np.ndarray], bool]
    psi: Callable[[np.ndarray], float]
    xi: Callable[[np.ndarray], np.ndarray]
    total_mass: float
    truncation_cut: float = 0.0
    sampler: Optional[Callable[[np.random.Generator, int], np.ndarray]] = None
    truncated_mass: Optional[float] = None
    compensator_mean: Optional[np.ndarray] = None
    name: str = ""

    def __post_init__(self):
        if self.dim < 1:
            raise ConfigurationError("mark dimension must be >= 1")
        if self.truncation_cut < 0:
            raise ConfigurationError("truncation_cut must be nonnegative")
        if math.isinf(self.total_mass) and self.truncation_cut == 0.0 and self.sampler is not None:
            raise ConfigurationError(
                "infinite total mass requires a positive truncation_cut for sampling"
            )

    def effective_mass(self) -> float:
        """Mass of the sampled restriction nu|{|u| > cut}; must be finite."""
        mass = self.truncated_mass if self.truncated_mass is not None else self.total_mass
        if not math.isfinite(mass):
            raise ConfigurationError(
                "truncated mass is not finite; supply truncated_mass or a positive cut"
            )
        if mass < 0:
            raise ConfigurationError("jump measure mass must be nonnegative")
        return float(mass)

    def drift_vector(self) -> np.ndarray:
        """Per-unit-time compensator drift (zero when the driver is uncompensated)."""
        if self.compensator_mean is None:
            return np.zeros(self.dim)
        drift = np.asarray(self.compensator_mean, dtype=float)
        if drift.shape != (self.dim,):
            raise ConfigurationError("compensator_mean has wrong dimension")
        return drift


def _as_marks(arr, dim: int) -> np.ndarray:
    marks = np.asarray(arr, dtype=float)
    if marks.ndim == 1:
        marks = marks.reshape(-1, 1) if dim == 1 else marks.reshape(1, -1)
    if marks.ndim != 2 or marks.shape[1] != dim:
        raise SamplerError(f"marks must have shape (n, {dim}), got {marks.shape}")
    return marks


@dataclass(frozen=True)
class JumpConfiguration:
    """A finite marked point set {(T_i, U_i)} on (0, T] x R^r.

    Immutable after construction; times are strictly increasing, no mark is
    the zero vector.  ``compensator_drift`` is the per-unit-time drift
    subtracted by paths built from this configuration (zero for an
    uncompensated driver).
    """

    horizon: float
    times: np.ndarray
    marks: np.ndarray
    compensator_drift: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float).reshape(-1)
        if self.horizon <= 0:
            raise DomainError("horizon must be positive")
        marks = np.asarray(self.marks, dtype=float)
        if marks.ndim == 1:
            marks = marks.reshape(-1, 1)
        if marks.ndim != 2:
            raise DomainError("marks must be a (n, r) array")
        if marks.shape[0] == 0:
            r = marks.shape[1] if marks.shape[1] > 0 else (
                len(self.compensator_drift) if self.compensator_drift is not None else 1
            )
            marks = marks.reshape(0, r)
        if marks.shape[0] != times.size:
            raise DomainError("times and marks must have the same length")
        if times.size:
            if np.any(times <= 0.0) or np.any(times > self.horizon):
                raise DomainError("jump times must lie in (0, horizon]")
            if np.any(np.diff(times) <= 0.0):
                raise DomainError("jump times must be strictly increasing")
            if np.any(np.all(marks == 0.0, axis=1)):
                raise DomainError("marks must not be the zero vector")
            if not np.all(np.isfinite(marks)):
                raise DomainError("marks must be finite")
        drift = self.compensator_drift
        drift = np.zeros(marks.shape[1]) if drift is None else np.asarray(drift, dtype=float)
        if drift.shape != (marks.shape[1],):
            raise DomainError("compensator_drift dimension does not match marks")
        for arr in (times, marks, drift):
            arr.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "marks", marks)
        object.__setattr__(self, "compensator_drift", drift)

    @property
    def n_jumps(self) -> int:
        return self.times.size

    @property
    def mark_dim(self) -> int:
        return self.marks.shape[1]

    def with_mark(self, j: int, new_mark: np.ndarray) -> "JumpConfiguration":
        """Copy of the configuration with the j-th mark replaced (revalidated)."""
        marks = self.marks.copy()
        marks[j] = new_mark
        return replace(self, marks=marks)


def configurations_equal(a: JumpConfiguration, b: JumpConfiguration) -> bool:
    """Exact (bitwise on floats) equality of two configurations."""
    return (
        a.horizon == b.horizon
        and a.times.shape == b.times.shape
        and a.marks.shape == b.marks.shape
        and np.array_equal(a.times, b.times)
        and np.array_equal(a.marks, b.marks)
        and np.array_equal(a.compensator_drift, b.compensator_drift)
    )


def sample_configuration(
    spec: LevyMeasureSpec,
    horizon: float,
    seed: int,
    path_index: int = 0,
) -> JumpConfiguration:
    """Draw one realization of the Poisson measure with intensity dt x nu|{|u|>cut}.

    The jump count is Poisson(horizon * truncated mass), times are sorted
    uniforms on (0, horizon], marks are iid from the spec's sampler.  The
    draw order is fixed (count, times, marks) so results are reproducible
    from (spec, horizon, seed, path_index) alone.  Exact time ties (measure
    zero, but possible in floats) are resolved by redrawing the later time.
    """
    if horizon <= 0:
        raise DomainError("horizon must be positive")
    lam = spec.effective_mass()
    rng = stream(seed, path_index)
    if lam == 0.0:
        return JumpConfiguration(
            horizon=horizon,
            times=np.empty(0),
            marks=np.empty((0, spec.dim)),
            compensator_drift=spec.drift_vector(),
        )
    if spec.sampler is None:
        raise SamplerError("spec has no mark sampler")
    n = int(rng.poisson(lam * horizon))
    times = np.sort(horizon - rng.uniform(0.0, horizon, size=n))
    # ties are a.s. impossible; deterministically resample the later time
    while n > 1 and np.any(np.diff(times) == 0.0):
        dup = np.where(np.diff(times) == 0.0)[0] + 1
        times[dup] = horizon - rng.uniform(0.0, horizon, size=dup.size)
        times = np.sort(times)
    marks = _as_marks(spec.sampler(rng, n), spec.dim) if n else np.empty((0, spec.dim))
    if marks.shape[0] != n:
        raise SamplerError(f"sampler returned {marks.shape[0]} marks, expected {n}")
    if not np.all(np.isfinite(marks)):
        raise SamplerError("sampler returned non-finite marks")
    # a mark exactly at the origin cannot happen under a diffuse nu; redraw
    zero_rows = np.where(np.all(marks == 0.0, axis=1))[0]
    while zero_rows.size:
        marks[zero_rows] = _as_marks(spec.sampler(rng, zero_rows.size), spec.dim)
        zero_rows = np.where(np.all(marks == 0.0, axis=1))[0]
    _check_domination(spec, marks)
    return JumpConfiguration(
        horizon=horizon,
        times=times,
        marks=marks,
        compensator_drift=spec.drift_vector(),
    )


def _check_domination(spec: LevyMeasureSpec, marks: np.ndarray) -> None:
    """Spot-check psi <= k at the sampled marks (hypothesis 3 of the bottom form)."""
    for u in marks:
        if not spec.domain_O(u):
            continue
        k = float(spec.density_k(u))
        p = float(spec.psi(u))
        if p > k * (1.0 + 1e-12):
            raise SpecViolationError(
                f"psi({u.tolist()}) = {p} exceeds k = {k}: domination hypothesis broken"
            )


@dataclass(frozen=True)
class CadlagPath:
    """Right-continuous pure-jump-plus-linear-drift path Y in R^d.

    Y_t = initial + sum_{T_i <= t} U_i - t * drift.  ``value`` returns the
    right-continuous value, ``left_limit`` the limit from the left (the
    value at 0- is the initial value).
    """

    horizon: float
    initial: np.ndarray
    times: np.ndarray
    jumps: np.ndarray
    drift: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "initial", np.asarray(self.initial, dtype=float).reshape(-1))
        cum = np.cumsum(self.jumps, axis=0) if self.times.size else np.empty((0, self.dim))
        cum.setflags(write=False)
        object.__setattr__(self, "_cumsum", cum)

    @property
    def dim(self) -> int:
        return self.initial.size

    def _sum_upto(self, idx: int) -> np.ndarray:
        if idx <= 0:
            return np.zeros(self.dim)
        return self._cumsum[idx - 1]

    def value(self, t: float) -> np.ndarray:
        """Y_t (right-continuous)."""
        idx = int(np.searchsorted(self.times, t, side="right"))
        return self.initial + self._sum_upto(idx) - t * self.drift

    def left_limit(self, t: float) -> np.ndarray:
        """Y_{t-}; at t = 0 this is the initial value."""
        if t <= 0.0:
            return self.initial.copy()
        idx = int(np.searchsorted(self.times, t, side="left"))
        return self.initial + self._sum_upto(idx) - t * self.drift

    def jump_at(self, t: float) -> np.ndarray:
        idx = np.searchsorted(self.times, t, side="left")
        if idx < self.times.size and self.times[idx] == t:
            return self.jumps[idx].copy()
        return np.zeros(self.dim)


def build_path(config: JumpConfiguration, initial=0.0) -> CadlagPath:
    """Assemble the cadlag driver path from a configuration."""
    init = np.asarray(initial, dtype=float).reshape(-1)
    if init.size == 1 and config.mark_dim > 1:
        init = np.full(config.mark_dim, float(init[0]))
    if init.size != config.mark_dim:
        raise DomainError("initial value dimension does not match the marks")
    return CadlagPath(
        horizon=config.horizon,
        initial=init,
        times=config.times,
        jumps=config.marks,
        drift=config.compensator_drift,
    )


def stochastic_integral(
    integrand: Callable[[np.ndarray], float],
    driver: CadlagPath,
    t: float,
    t_open: float = 0.0,
) -> np.ndarray:
    """Integral of a scalar predictable functional against the driver over (t_open, t].

    Returns sum_{t_open < a <= t} integrand(Y_{a-}) * dY_a minus the drift
    part integral_{t_open}^{t} integrand(Y_{s-}) * drift ds.  Between jumps
    the integrand is smooth in s, so the drift part is computed by adaptive
    quadrature (absolute tolerance 1e-12) on each inter-jump interval; it
    vanishes identically for zero-drift drivers.
    """
    if t < t_open:
        raise DomainError("integration endpoint precedes the interval start")
    result = np.zeros(driver.dim)
    lo = int(np.searchsorted(driver.times, t_open, side="right"))
    hi = int(np.searchsorted(driver.times, t, side="right"))
    for idx in range(lo, hi):
        a = driver.times[idx]
        result += float(integrand(driver.left_limit(a))) * driver.jumps[idx]
    if np.any(driver.drift != 0.0) and t > t_open:
        knots = [t_open] + [float(a) for a in driver.times[lo:hi]] + [t]
        total = 0.0
        for left, right in zip(knots[:-1], knots[1:]):
            if right <= left:
                continue
            # Y_{s-} = Y(left) - (s - left) * drift on (left, right]
            base = driver.value(left)
            seg, _ = quad(
                lambda s: float(integrand(base - (s - left) * driver.drift)),
                left,
                right,
                epsabs=QUAD_ABS_TOL,
                limit=200,
            )
            total += seg
        result -= total * driver.drift
    return result


def write_configuration_csv(config: JumpConfiguration, path: str) -> None:
    """Dump a configuration as CSV with columns time, mark_1..mark_r."""
    header = ["time"] + [f"mark_{i + 1}" for i in range(config.mark_dim)]
    rows = [[config.times[i]] + list(config.marks[i]) for i in range(config.n_jumps)]
    write_csv(path, header, rows)


def write_path_csv(path_obj: CadlagPath, grid: np.ndarray, path: str) -> None:
    """Dump path values sampled on a time grid as CSV (t, value_1..value_d)."""
    header = ["t"] + [f"value_{i + 1}" for i in range(path_obj.dim)]
    rows = [[float(t)] + list(path_obj.value(float(t))) for t in grid]
    write_csv(path, header, rows)
