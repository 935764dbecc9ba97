"""Density-existence diagnostics from sampled carre du champ matrices.

None of these prove absolute continuity; they aggregate the checkable
surrogates: determinant/nondegeneracy statistics, algebraic rank (span)
conditions verified on realized configurations, atom detection in sampled
laws, and kernel density summaries of the sampled values.  Positivity of
det Gamma plus the energy-image-density property (imported, not checked)
is what implies a density.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .csvio import write_csv
from .errors import InputError

__all__ = [
    "NondegeneracyReport",
    "nondegeneracy_stats",
    "span_dimension",
    "AtomReport",
    "atom_test",
    "KdeSummary",
    "kde_summary",
]

QUANTILES = (0.0, 0.25, 0.5, 0.75, 1.0)


@dataclass(frozen=True)
class NondegeneracyReport:
    """Summary of determinant and smallest-eigenvalue statistics."""

    sample_count: int
    dim: int
    tol_det: Optional[float]
    fraction_nondegenerate: float
    min_det: float
    median_det: float
    min_eig_quantiles: tuple
    rank_verdicts: tuple = ()

    def to_text(self) -> str:
        lines = [
            f"nondegeneracy report over {self.sample_count} matrices (dim {self.dim})",
            f"  det threshold: "
            + ("scale-aware 1e-12*(trace/d)^d" if self.tol_det is None else f"{self.tol_det:.17g}"),
            f"  fraction with det above threshold: {self.fraction_nondegenerate:.17g}",
            f"  min det: {self.min_det:.17g}",
            f"  median det: {self.median_det:.17g}",
            "  min-eigenvalue quantiles (0/25/50/75/100%): "
            + ", ".join(f"{q:.17g}" for q in self.min_eig_quantiles),
        ]
        for name, verdict, detail in self.rank_verdicts:
            lines.append(f"  rank condition '{name}': {'PASS' if verdict else 'FAIL'} ({detail})")
        lines.append(
            "  note: det Gamma > 0 together with the energy-image-density property "
            "(assumed, not checked here) implies existence of a density"
        )
        return "\n".join(lines) + "\n"

    def write_csv(self, path: str) -> None:
        rows = [
            ["sample_count", self.sample_count],
            ["dim", self.dim],
            ["tol_det", "scale-aware" if self.tol_det is None else self.tol_det],
            ["fraction_nondegenerate", self.fraction_nondegenerate],
            ["min_det", self.min_det],
            ["median_det", self.median_det],
        ]
        for q, v in zip(QUANTILES, self.min_eig_quantiles):
            rows.append([f"min_eig_q{int(100 * q)}", v])
        for name, verdict, detail in self.rank_verdicts:
            rows.append([f"rank_{name}", verdict, detail])
        write_csv(path, ["statistic", "value", "detail"], [r + [""] * (3 - len(r)) for r in rows])


def _det_threshold(matrix: np.ndarray) -> float:
    d = matrix.shape[0]
    mean_diag = float(np.trace(matrix)) / d
    return 1e-12 * mean_diag**d


def nondegeneracy_stats(
    gammas: Sequence,
    tol_det: Optional[float] = None,
    rank_verdicts: Sequence = (),
) -> NondegeneracyReport:
    """Aggregate determinant statistics over a sequence of GammaMatrix values.

    ``tol_det=None`` uses the scale-aware per-matrix threshold
    1e-12 * (trace/d)^d, so a global rescaling of the matrices does not
    change the verdict.
    """
    if len(gammas) == 0:
        raise InputError("empty matrix sample")
    dims = {g.matrix.shape[0] for g in gammas}
    if len(dims) != 1:
        raise InputError(f"inconsistent matrix dimensions: {sorted(dims)}")
    d = dims.pop()
    dets = np.array([g.det for g in gammas])
    eigs = np.array([g.min_eigenvalue for g in gammas])
    if tol_det is None:
        thresholds = np.array([_det_threshold(g.matrix) for g in gammas])
    else:
        thresholds = np.full(len(gammas), float(tol_det))
    frac = float(np.count_nonzero(dets > thresholds)) / len(gammas)
    return NondegeneracyReport(
        sample_count=len(gammas),
        dim=d,
        tol_det=tol_det,
        fraction_nondegenerate=frac,
        min_det=float(dets.min()),
        median_det=float(np.median(dets)),
        min_eig_quantiles=tuple(float(np.quantile(eigs, q)) for q in QUANTILES),
        rank_verdicts=tuple(rank_verdicts),
    )


def span_dimension(vectors: Sequence[np.ndarray], tol: float = 1e-10) -> int:
    """Numerical rank of the linear span via singular values above tol * largest.

    Permutation- and scaling-invariant: each vector is normalized before
    the decomposition so rescaling any of them cannot change the result.
    """
    if len(vectors) == 0:
        raise InputError("empty vector list")
    if tol <= 0:
        raise InputError("tolerance must be positive")
    arr = np.array([np.asarray(v, dtype=float).reshape(-1) for v in vectors])
    norms = np.linalg.norm(arr, axis=1)
    nonzero = norms > 0.0
    if not np.any(nonzero):
        return 0
    arr = arr[nonzero] / norms[nonzero, None]
    svals = np.linalg.svd(arr, compute_uv=False)
    return int(np.count_nonzero(svals > tol * svals[0]))


@dataclass(frozen=True)
class AtomReport:
    """Detected point masses in a sampled law."""

    sample_count: int
    resolution: float
    threshold: float
    atoms: tuple  # (location tuple, frequency)

    @property
    def has_atom(self) -> bool:
        return len(self.atoms) > 0

    def to_text(self) -> str:
        lines = [
            f"atom report over {self.sample_count} samples "
            f"(resolution {self.resolution:.17g}, frequency threshold {self.threshold:.17g})"
        ]
        if not self.atoms:
            lines.append("  no atom detected")
        for loc, freq in self.atoms:
            lines.append(
                "  atom near (" + ", ".join(f"{x:.17g}" for x in loc) + f") frequency {freq:.17g}"
            )
        return "\n".join(lines) + "\n"


def atom_test(samples: np.ndarray, resolution: float) -> AtomReport:
    """Flag values whose within-resolution duplicate frequency exceeds 3/sqrt(n).

    Samples are binned on a grid of the given resolution; a bin whose
    relative frequency exceeds the threshold is reported with the mean of
    its members as the atom location.  Needs at least 1000 samples.
    """
    arr = np.asarray(samples, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    n = arr.shape[0]
    if n < 1000:
        raise InputError(f"atom detection needs at least 1000 samples, got {n}")
    if resolution <= 0:
        raise InputError("resolution must be positive")
    keys = np.round(arr / resolution).astype(np.int64)
    uniq, inverse, counts = np.unique(keys, axis=0, return_inverse=True, return_counts=True)
    threshold = 3.0 / np.sqrt(n)
    atoms = []
    for idx in np.argsort(-counts, kind="stable"):
        freq = counts[idx] / n
        if freq <= threshold:
            break
        members = arr[inverse == idx]
        atoms.append((tuple(float(x) for x in members.mean(axis=0)), float(freq)))
    return AtomReport(
        sample_count=n,
        resolution=float(resolution),
        threshold=float(threshold),
        atoms=tuple(atoms),
    )


@dataclass(frozen=True)
class KdeSummary:
    """Gaussian-kernel density estimate on a regular grid (1- or 2-dim)."""

    grid: np.ndarray  # (m,) or (m1, m2, 2)
    density: np.ndarray
    bandwidth: np.ndarray
    rule: str
    degenerate: bool

    def write_csv(self, path: str) -> None:
        if self.grid.ndim == 1:
            write_csv(path, ["x", "density"], zip(self.grid, self.density))
        else:
            rows = []
            m1, m2 = self.density.shape
            for i in range(m1):
                for j in range(m2):
                    rows.append(
                        [self.grid[i, j, 0], self.grid[i, j, 1], self.density[i, j]]
                    )
            write_csv(path, ["x", "y", "density"], rows)


def _scott_bandwidth(arr: np.ndarray, rule: str) -> np.ndarray:
    n, d = arr.shape
    std = arr.std(axis=0, ddof=1)
    if rule == "scott":
        factor = n ** (-1.0 / (d + 4))
    elif rule == "silverman":
        factor = (n * (d + 2) / 4.0) ** (-1.0 / (d + 4))
    else:
        raise InputError(f"unknown bandwidth rule '{rule}' (use scott or silverman)")
    return factor * std


def kde_summary(
    samples: np.ndarray,
    bandwidth_rule: str = "scott",
    grid_size: int = 256,
) -> KdeSummary:
    """Gaussian KDE on an automatic grid, plug-in bandwidth per coordinate.

    The bandwidth is Scott's rule h_i = std_i * n^(-1/(d+4)) (or the
    Silverman variant).  Degenerate variance in any coordinate produces a
    warning and an (arbitrary) unit bandwidth there rather than an error.
    """
    arr = np.asarray(samples, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    n, d = arr.shape
    if n < 1000:
        raise InputError(f"kde_summary needs at least 1000 samples, got {n}")
    if d not in (1, 2):
        raise InputError("kde_summary supports scalar or 2-dimensional samples")
    bw = _scott_bandwidth(arr, bandwidth_rule)
    degenerate = bool(np.any(bw == 0.0))
    if degenerate:
        warnings.warn("degenerate sample variance; density estimate is unreliable")
        bw = np.where(bw == 0.0, 1.0, bw)
    pad = 3.0 * bw
    lo = arr.min(axis=0) - pad
    hi = arr.max(axis=0) + pad
    if d == 1:
        grid = np.linspace(lo[0], hi[0], grid_size)
        z = (grid[:, None] - arr[None, :, 0]) / bw[0]
        density = np.exp(-0.5 * z * z).sum(axis=1) / (n * bw[0] * np.sqrt(2.0 * np.pi))
        return KdeSummary(grid=grid, density=density, bandwidth=bw, rule=bandwidth_rule,
                          degenerate=degenerate)
    m = int(np.sqrt(grid_size)) * 2
    gx = np.linspace(lo[0], hi[0], m)
    gy = np.linspace(lo[1], hi[1], m)
    zx = np.exp(-0.5 * ((gx[:, None] - arr[None, :, 0]) / bw[0]) ** 2)
    zy = np.exp(-0.5 * ((gy[:, None] - arr[None, :, 1]) / bw[1]) ** 2)
    density = np.einsum("in,jn->ij", zx, zy) / (n * bw[0] * bw[1] * 2.0 * np.pi)
    grid = np.stack(np.meshgrid(gx, gy, indexing="ij"), axis=-1)
    return KdeSummary(grid=grid, density=density, bandwidth=bw, rule=bandwidth_rule,
                      degenerate=degenerate)
