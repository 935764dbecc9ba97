"""Built-in jump-measure families used by the CLI and the test suite.

Two regimes are covered: finite activity (compound Poisson with uniform
marks) and truncated infinite activity (power-law density |x|^(-1-beta)
near the origin).  Both come equipped with the quadratic-form data
(xi, psi, k) arranged so that psi/k = 1 on the carrier O, matching the
standard choice gamma[f] = x^2 f'(x)^2 in one dimension.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ConfigurationError
from .levy import LevyMeasureSpec

__all__ = [
    "compound_poisson_uniform",
    "truncated_power",
    "truncated_power_axes_2d",
    "unit_ratio_spec",
    "SPEC_FAMILIES",
]


def _xi_square_scalar(u: np.ndarray) -> np.ndarray:
    return np.array([[float(u[0]) ** 2]])


def _xi_diag_squares(u: np.ndarray) -> np.ndarray:
    return np.diag(np.asarray(u, dtype=float) ** 2)


def unit_ratio_spec(dim: int = 1, xi=None) -> LevyMeasureSpec:
    """Evaluation-only measure data with psi/k = 1 on all of R^r minus the origin.

    Useful for computing matrices of hand-built configurations where the
    per-mark weight should be exactly xi(u) (default: the diagonal of
    squared coordinates).  Carries no sampler and cannot be simulated.
    """
    xi_fn = xi if xi is not None else (_xi_square_scalar if dim == 1 else _xi_diag_squares)

    def k_one(u: np.ndarray) -> float:
        return 1.0

    def off_origin(u: np.ndarray) -> bool:
        return bool(np.any(np.asarray(u) != 0.0))

    return LevyMeasureSpec(
        dim=dim,
        density_k=k_one,
        domain_O=off_origin,
        psi=k_one,
        xi=xi_fn,
        total_mass=math.inf,
        truncation_cut=0.0,
        sampler=None,
        name=f"unit-ratio({dim}d)",
    )


def compound_poisson_uniform(
    rate: float,
    low: float = -1.0,
    high: float = 1.0,
    gap: float = 0.0,
    compensated: bool = False,
) -> LevyMeasureSpec:
    """Compound Poisson with marks uniform on [low, high] minus (-gap, gap).

    ``rate`` is the total mass of nu.  With ``compensated=True`` the
    configuration carries the drift rate * E[mark] so that downstream paths
    realize the compensated integral.
    """
    if rate < 0:
        raise ConfigurationError("rate must be nonnegative")
    if high <= low:
        raise ConfigurationError("mark interval is empty")
    if gap < 0:
        raise ConfigurationError("gap must be nonnegative")
    width = high - low
    lo_cut = min(high, max(low, -gap))
    hi_cut = max(low, min(high, gap))
    kept = width - max(0.0, hi_cut - lo_cut)
    if kept <= 0:
        raise ConfigurationError("gap removes the whole mark interval")
    dens = rate / kept

    def density_k(u: np.ndarray) -> float:
        x = float(u[0])
        if low <= x <= high and abs(x) > gap:
            return dens
        return 0.0

    def domain_O(u: np.ndarray) -> bool:
        x = float(u[0])
        return low < x < high and abs(x) > gap

    def sampler(rng: np.random.Generator, n: int) -> np.ndarray:
        out = np.empty((n, 1))
        filled = 0
        while filled < n:
            draw = rng.uniform(low, high, size=n - filled)
            draw = draw[np.abs(draw) > gap]
            out[filled : filled + draw.size, 0] = draw
            filled += draw.size
        return out

    mean_mark = None
    if compensated:
        # mean of uniform on [low, high] \ (-gap, gap), times the rate
        lo2, hi2 = lo_cut, hi_cut
        mean = (high**2 - low**2) / 2.0
        if hi2 > lo2:
            mean -= (hi2**2 - lo2**2) / 2.0
        mean_mark = np.array([rate * mean / kept])

    return LevyMeasureSpec(
        dim=1,
        density_k=density_k,
        domain_O=domain_O,
        psi=density_k,
        xi=_xi_square_scalar,
        total_mass=rate,
        truncation_cut=0.0,
        sampler=sampler,
        truncated_mass=rate,
        compensator_mean=mean_mark,
        name=f"compound-poisson(rate={rate}, marks=U[{low},{high}]\\(-{gap},{gap}))",
    )


def _power_mass_one_sided(beta: float, cut: float) -> float:
    # integral of x^(-1-beta) over (cut, 1)
    if cut >= 1.0:
        return 0.0
    return (cut**-beta - 1.0) / beta


def truncated_power(beta: float, cut: float, symmetric: bool = True) -> LevyMeasureSpec:
    """Power-law density k(x) = |x|^(-1-beta) on O = {0 < |x| < 1}, beta in (0, 2).

    The measure has infinite total mass; simulation keeps marks with
    |x| > cut.  The symmetric version has zero compensator mean; the
    one-sided version (positive marks only) reports its truncated mean so
    compensated runs stay available.
    """
    if not (0.0 < beta < 2.0):
        raise ConfigurationError(f"beta must lie in (0, 2), got {beta}")
    if not (0.0 < cut < 1.0):
        raise ConfigurationError(f"truncation cut must lie in (0, 1), got {cut}")
    one_side = _power_mass_one_sided(beta, cut)
    mass = (2.0 if symmetric else 1.0) * one_side

    def density_k(u: np.ndarray) -> float:
        x = float(u[0])
        if x == 0.0 or abs(x) >= 1.0:
            return 0.0
        if not symmetric and x < 0.0:
            return 0.0
        return abs(x) ** (-1.0 - beta)

    def domain_O(u: np.ndarray) -> bool:
        x = float(u[0])
        if not symmetric and x <= 0.0:
            return False
        return 0.0 < abs(x) < 1.0

    def _inv_cdf(q: np.ndarray) -> np.ndarray:
        # inverse of P(|X| <= x | |X| > cut) on (cut, 1)
        return (cut**-beta - q * beta * one_side) ** (-1.0 / beta)

    def sampler(rng: np.random.Generator, n: int) -> np.ndarray:
        radii = _inv_cdf(rng.uniform(0.0, 1.0, size=n))
        if symmetric:
            signs = np.where(rng.uniform(0.0, 1.0, size=n) < 0.5, -1.0, 1.0)
            radii = radii * signs
        return radii.reshape(-1, 1)

    if symmetric:
        mean = None
    else:
        # integral of x * x^(-1-beta) over (cut, 1)
        mean = np.array([(1.0 - cut ** (1.0 - beta)) / (1.0 - beta)]) if beta != 1.0 else np.array(
            [-math.log(cut)]
        )

    return LevyMeasureSpec(
        dim=1,
        density_k=density_k,
        domain_O=domain_O,
        psi=density_k,
        xi=_xi_square_scalar,
        total_mass=math.inf,
        truncation_cut=cut,
        sampler=sampler,
        truncated_mass=mass,
        compensator_mean=mean,
        name=f"truncated-power(beta={beta}, cut={cut}, symmetric={symmetric})",
    )


def truncated_power_axes_2d(
    beta1: float,
    cut1: float,
    beta2: float | None = None,
    cut2: float | None = None,
) -> LevyMeasureSpec:
    """Two independent symmetric truncated-power components, embedded on the axes.

    Realizes the driver (Y1, Y2) of a pair of independent one-dimensional
    infinite-activity processes as a single marked measure on R^2: jumps of
    Y1 carry marks (y1, 0), jumps of Y2 carry (0, y2).  The measure is
    supported on the punctured axes; the density values below are the
    one-dimensional densities along each axis, which is all downstream
    computations use (only psi/k and the per-mark weight matrix enter).
    The quadratic form is xi = diag(u1^2, u2^2) with psi/k = 1.
    """
    beta2 = beta1 if beta2 is None else beta2
    cut2 = cut1 if cut2 is None else cut2
    comp1 = truncated_power(beta1, cut1)
    comp2 = truncated_power(beta2, cut2)
    m1 = comp1.effective_mass()
    m2 = comp2.effective_mass()
    mass = m1 + m2

    def density_k(u: np.ndarray) -> float:
        u1, u2 = float(u[0]), float(u[1])
        if u2 == 0.0 and u1 != 0.0:
            return comp1.density_k(np.array([u1]))
        if u1 == 0.0 and u2 != 0.0:
            return comp2.density_k(np.array([u2]))
        return 0.0

    def domain_O(u: np.ndarray) -> bool:
        return 0.0 < float(np.max(np.abs(u))) < 1.0

    def sampler(rng: np.random.Generator, n: int) -> np.ndarray:
        which = rng.uniform(0.0, 1.0, size=n) < m1 / mass
        out = np.zeros((n, 2))
        n1 = int(np.count_nonzero(which))
        if n1:
            out[which, 0] = comp1.sampler(rng, n1)[:, 0]
        if n - n1:
            out[~which, 1] = comp2.sampler(rng, n - n1)[:, 0]
        return out

    return LevyMeasureSpec(
        dim=2,
        density_k=density_k,
        domain_O=domain_O,
        psi=density_k,
        xi=_xi_diag_squares,
        total_mass=math.inf,
        truncation_cut=min(cut1, cut2),
        sampler=sampler,
        truncated_mass=mass,
        compensator_mean=None,
        name=f"truncated-power-axes-2d(beta=({beta1},{beta2}), cut=({cut1},{cut2}))",
    )


def _build_compound_poisson(params: dict) -> LevyMeasureSpec:
    return compound_poisson_uniform(
        rate=params.get("rate", 1.0),
        low=params.get("mark_low", -1.0),
        high=params.get("mark_high", 1.0),
        gap=params.get("mark_gap", 0.0),
        compensated=params.get("compensated", False),
    )


def _build_truncated_power(params: dict) -> LevyMeasureSpec:
    dim = int(params.get("dim", 1))
    beta = params.get("beta", 0.5)
    cut = params.get("cut", 0.01)
    if dim == 1:
        return truncated_power(beta, cut, symmetric=params.get("symmetric", True))
    if dim == 2:
        return truncated_power_axes_2d(
            beta, cut, params.get("beta2"), params.get("cut2")
        )
    raise ConfigurationError("truncated-power supports dim 1 or 2")


#: registry used by the CLI: family name -> (builder, allowed keys)
SPEC_FAMILIES = {
    "compound-poisson": (
        _build_compound_poisson,
        {"rate", "mark_low", "mark_high", "mark_gap", "compensated"},
    ),
    "truncated-power": (
        _build_truncated_power,
        {"beta", "cut", "dim", "symmetric", "beta2", "cut2"},
    ),
}
