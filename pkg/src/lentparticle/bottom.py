"""Per-mark quadratic form of the jump-size space.

The squared-gradient (carre du champ) form on mark space is
``gamma(f, g)(u) = grad f(u)^T W(u) grad g(u)`` with weight matrix
``W(u) = xi(u) * psi(u) / k(u)`` on the carrier O and zero outside.
Everything downstream (per-jump contributions to the matrix of a Poisson
functional) reduces to evaluations of W at realized marks.

The auxiliary Hilbert-space representation of the mark gradient is never
materialized: all computed quantities depend on it only through the
quadratic form, so the module works directly with mark-space gradients.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .csvio import write_csv
from .errors import SpecViolationError
from .levy import LevyMeasureSpec

__all__ = [
    "gamma_weight",
    "gamma_weights",
    "gamma_of",
    "ProbeCheck",
    "BottomDiagnostics",
    "validate_spec",
]


def gamma_weight(spec: LevyMeasureSpec, u: np.ndarray) -> np.ndarray:
    """Weight matrix W(u) = xi(u) psi(u) / k(u); zero off the carrier O.

    Raises SpecViolationError when k(u) = 0 while psi(u) > 0 (the
    domination hypothesis is broken at u).
    """
    u = np.asarray(u, dtype=float).reshape(-1)
    if u.size != spec.dim:
        raise SpecViolationError(f"mark has dimension {u.size}, spec expects {spec.dim}")
    if not spec.domain_O(u):
        return np.zeros((spec.dim, spec.dim))
    k = float(spec.density_k(u))
    p = float(spec.psi(u))
    if k == 0.0:
        if p > 0.0:
            raise SpecViolationError(
                f"k({u.tolist()}) = 0 but psi = {p} > 0: domination hypothesis broken"
            )
        return np.zeros((spec.dim, spec.dim))
    xi = np.asarray(spec.xi(u), dtype=float)
    if xi.shape != (spec.dim, spec.dim):
        raise SpecViolationError(f"xi({u.tolist()}) has shape {xi.shape}")
    return xi * (p / k)


def gamma_weights(spec: LevyMeasureSpec, marks: np.ndarray) -> np.ndarray:
    """Stack of weight matrices, one per mark row; shape (n, r, r)."""
    marks = np.asarray(marks, dtype=float)
    out = np.empty((marks.shape[0], spec.dim, spec.dim))
    for i, u in enumerate(marks):
        out[i] = gamma_weight(spec, u)
    return out


def gamma_of(spec: LevyMeasureSpec, grad_f: np.ndarray, grad_g: np.ndarray, u: np.ndarray) -> float:
    """Bilinear form grad_f^T W(u) grad_g (symmetric in the two gradients)."""
    gf = np.asarray(grad_f, dtype=float).reshape(-1)
    gg = np.asarray(grad_g, dtype=float).reshape(-1)
    if not (np.all(np.isfinite(gf)) and np.all(np.isfinite(gg))):
        raise SpecViolationError("gradients must be finite")
    return float(gf @ gamma_weight(spec, u) @ gg)


@dataclass(frozen=True)
class ProbeCheck:
    probe: tuple
    check: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class BottomDiagnostics:
    """Result of the hypothesis checks of validate_spec."""

    checks: tuple
    passed: bool
    first_failure: ProbeCheck | None

    def to_text(self) -> str:
        lines = [f"bottom-structure diagnostics: {'PASS' if self.passed else 'FAIL'}"]
        if self.first_failure is not None:
            f = self.first_failure
            lines.append(f"first failure: probe {list(f.probe)} check '{f.check}': {f.detail}")
        for c in self.checks:
            status = "ok" if c.passed else "FAIL"
            lines.append(f"  probe {list(c.probe)} {c.check}: {status} ({c.detail})")
        return "\n".join(lines) + "\n"

    def write_csv(self, path: str) -> None:
        rows = [
            [" ".join(f"{x:.17g}" for x in c.probe), c.check, c.passed, c.detail]
            for c in self.checks
        ]
        write_csv(path, ["probe", "check", "pass", "detail"], rows)


def validate_spec(spec: LevyMeasureSpec, probes: Sequence[np.ndarray]) -> BottomDiagnostics:
    """Check the structural hypotheses at a list of probe marks.

    Per probe inside O: k > 0, psi <= k, xi symmetric with positive
    smallest eigenvalue.  Per probe outside O: psi = 0.  Failures are
    collected, never raised; the report carries the first offending probe.
    """
    if len(probes) == 0:
        raise SpecViolationError("probe list must be nonempty")
    checks: list[ProbeCheck] = []

    def record(probe, name, ok, detail):
        checks.append(ProbeCheck(tuple(float(x) for x in probe), name, bool(ok), detail))

    for probe in probes:
        u = np.asarray(probe, dtype=float).reshape(-1)
        inside = bool(spec.domain_O(u))
        k = float(spec.density_k(u))
        p = float(spec.psi(u))
        if inside:
            record(u, "k-positive", k > 0.0, f"k={k:.6g}")
            record(u, "domination", p <= k * (1.0 + 1e-12), f"psi={p:.6g} k={k:.6g}")
            xi = np.asarray(spec.xi(u), dtype=float)
            sym = np.allclose(xi, xi.T, rtol=0.0, atol=1e-12 * (1.0 + np.abs(xi).max()))
            record(u, "xi-symmetric", sym, f"max-asym={np.abs(xi - xi.T).max():.3g}")
            eigmin = float(np.linalg.eigvalsh(0.5 * (xi + xi.T)).min()) if sym else float("nan")
            record(u, "xi-positive-definite", sym and eigmin > 0.0, f"min-eig={eigmin:.6g}")
        else:
            record(u, "psi-vanishes-off-domain", p == 0.0, f"psi={p:.6g}")
    failures = [c for c in checks if not c.passed]
    return BottomDiagnostics(
        checks=tuple(checks),
        passed=not failures,
        first_failure=failures[0] if failures else None,
    )
