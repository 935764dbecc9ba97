"""Add/remove-a-jump operators, the per-jump carre du champ engine and its oracle.

The carre du champ matrix of a Poisson functional F reduces, on a finite
configuration, to a sum over the configuration's own jumps:

    Gamma[F] = sum_j D_j W(U_j) D_j^T,

where D_j is the derivative of F with respect to the mark U_j holding the
rest of the configuration fixed, and W is the per-mark weight matrix of the
bottom quadratic form.  That "differentiate in the mark of an existing
jump" rule is the operational content of adding a particle, differentiating
in the new argument, and taking the particle back: removing the added point
does not erase the new argument, and integrating the result against the
point measure lands exactly on the realized jumps.  It is the single
semantic pivot of this module.

Engine and oracle are deliberately kept on separate code paths: the engine
uses a functional's analytic mark derivative when the catalog provides one
(finite differences with Richardson refinement otherwise), while the oracle
always re-evaluates the full functional under mark perturbations with plain
central differences.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .bottom import gamma_weights
from .csvio import write_csv
from .errors import DomainError, NumericError, SingularJumpError
from .levy import (
    CadlagPath,
    JumpConfiguration,
    LevyMeasureSpec,
    build_path,
    stochastic_integral,
)

__all__ = [
    "FunctionalDef",
    "GammaMatrix",
    "add_particle",
    "remove_particle",
    "lent_particle_gamma",
    "oracle_gamma",
    "fd_mark_derivative",
    "terminal_value",
    "stochastic_integral_phi",
    "doleans_pair",
    "running_sup",
    "degenerate_sde_z",
    "compose",
    "linear_functional",
    "PHI_LIBRARY",
    "FUNCTIONAL_CATALOG",
    "build_catalog_functional",
    "write_gamma_csv",
    "write_contribution_csv",
]

#: relative PSD slack allowed for an assembled matrix (on the trace scale)
PSD_TOL = 1e-10


# ---------------------------------------------------------------------------
# configuration operators
# ---------------------------------------------------------------------------

def add_particle(config: JumpConfiguration, t: float, u) -> JumpConfiguration:
    """Insert the point (t, u); identity when the point is already present."""
    if not (0.0 < t <= config.horizon):
        raise DomainError(f"time {t} outside (0, {config.horizon}]")
    u = np.asarray(u, dtype=float).reshape(-1)
    idx = int(np.searchsorted(config.times, t, side="left"))
    if idx < config.n_jumps and config.times[idx] == t:
        if np.array_equal(config.marks[idx], u):
            return config
        raise DomainError(f"a different mark already sits at time {t}")
    times = np.insert(config.times, idx, t)
    marks = np.insert(config.marks, idx, u, axis=0)
    return JumpConfiguration(
        horizon=config.horizon,
        times=times,
        marks=marks,
        compensator_drift=config.compensator_drift,
    )


def remove_particle(config: JumpConfiguration, t: float, u) -> JumpConfiguration:
    """Remove the point (t, u) if present; identity otherwise."""
    u = np.asarray(u, dtype=float).reshape(-1)
    idx = int(np.searchsorted(config.times, t, side="left"))
    if idx >= config.n_jumps or config.times[idx] != t or not np.array_equal(config.marks[idx], u):
        return config
    times = np.delete(config.times, idx)
    marks = np.delete(config.marks, idx, axis=0)
    return JumpConfiguration(
        horizon=config.horizon,
        times=times,
        marks=marks,
        compensator_drift=config.compensator_drift,
    )


# ---------------------------------------------------------------------------
# functional definitions and the assembled matrix
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FunctionalDef:
    """A Poisson functional together with optional analytic mark derivatives.

    ``evaluate`` maps a configuration to a vector in R^d and must be
    deterministic.  ``mark_derivative(config, j)`` returns the (d, r)
    derivative of F in the mark of jump j, evaluated on the configuration
    with the jump present.  ``mark_derivative_all`` is an optional batch
    variant returning the (n, d, r) stack in one call; the engine prefers
    it when present.
    """

    name: str
    output_dim: int
    evaluate: Callable[[JumpConfiguration], np.ndarray]
    mark_derivative: Optional[Callable[[JumpConfiguration, int], np.ndarray]] = None
    mark_derivative_all: Optional[Callable[[JumpConfiguration], np.ndarray]] = None


@dataclass(frozen=True)
class GammaMatrix:
    """Symmetric PSD d x d carre du champ matrix with its per-jump pieces.

    ``contributions[j]`` is the rank <= r term of jump j; the matrix equals
    their sum exactly.  ``provenance`` records which route produced it.
    """

    matrix: np.ndarray
    provenance: str
    contributions: np.ndarray
    jump_times: np.ndarray

    @classmethod
    def assemble(cls, contributions: np.ndarray, jump_times: np.ndarray, provenance: str):
        contribs = 0.5 * (contributions + np.transpose(contributions, (0, 2, 1)))
        matrix = contribs.sum(axis=0) if contribs.shape[0] else np.zeros(contribs.shape[1:])
        if not np.all(np.isfinite(matrix)):
            raise NumericError(f"{provenance} produced a non-finite matrix")
        tr = float(np.trace(matrix))
        eigmin = float(np.linalg.eigvalsh(matrix).min()) if matrix.size else 0.0
        if eigmin < -PSD_TOL * max(tr, 1e-300):
            raise NumericError(
                f"{provenance} matrix is not positive semidefinite "
                f"(min eigenvalue {eigmin:.3e}, trace {tr:.3e})"
            )
        for arr in (matrix, contribs):
            arr.setflags(write=False)
        return cls(
            matrix=matrix,
            provenance=provenance,
            contributions=contribs,
            jump_times=np.asarray(jump_times, dtype=float),
        )

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.matrix))

    @property
    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix).min())


# ---------------------------------------------------------------------------
# finite differences in a mark
# ---------------------------------------------------------------------------

def _central_difference(
    evaluate: Callable[[JumpConfiguration], np.ndarray],
    config: JumpConfiguration,
    j: int,
    h: float,
    output_dim: int,
) -> np.ndarray:
    """Plain central-difference (d, r) derivative in the mark of jump j."""
    u = config.marks[j]
    cols = []
    for i in range(u.size):
        hi = h
        # a perturbed mark must not land exactly on the origin
        while True:
            up = u.copy()
            up[i] += hi
            dn = u.copy()
            dn[i] -= hi
            if np.any(up != 0.0) and np.any(dn != 0.0):
                break
            hi *= 0.5
        f_up = np.asarray(evaluate(config.with_mark(j, up)), dtype=float).reshape(-1)
        f_dn = np.asarray(evaluate(config.with_mark(j, dn)), dtype=float).reshape(-1)
        cols.append((f_up - f_dn) / (2.0 * hi))
    out = np.column_stack(cols) if cols else np.zeros((output_dim, 0))
    if out.shape[0] != output_dim:
        raise NumericError(
            f"functional returned dimension {out.shape[0]}, declared {output_dim}"
        )
    return out


def fd_mark_derivative(
    evaluate: Callable[[JumpConfiguration], np.ndarray],
    config: JumpConfiguration,
    j: int,
    output_dim: int,
    step: float | None = None,
) -> np.ndarray:
    """Engine fallback derivative: central differences with step scaled to the
    mark size and a Richardson (h, h/2) refinement when the two estimates
    disagree by more than 1e-4 relative."""
    u = config.marks[j]
    h = step if step is not None else 1e-5 * max(1.0, float(np.linalg.norm(u)))
    d1 = _central_difference(evaluate, config, j, h, output_dim)
    d2 = _central_difference(evaluate, config, j, h / 2.0, output_dim)
    scale = float(np.abs(d2).max()) if d2.size else 0.0
    if float(np.abs(d1 - d2).max()) > 1e-4 * (1.0 + scale):
        return (4.0 * d2 - d1) / 3.0
    return d2


# ---------------------------------------------------------------------------
# engine and oracle
# ---------------------------------------------------------------------------

def _derivative_stack(
    F: FunctionalDef,
    config: JumpConfiguration,
    fd_step: float | None,
) -> np.ndarray:
    n, d, r = config.n_jumps, F.output_dim, config.mark_dim
    if n == 0:
        return np.zeros((0, d, r))
    if F.mark_derivative_all is not None:
        stack = np.asarray(F.mark_derivative_all(config), dtype=float)
        if stack.shape != (n, d, r):
            raise NumericError(
                f"{F.name}: batch derivative has shape {stack.shape}, expected {(n, d, r)}"
            )
        return stack
    rows = []
    for j in range(n):
        if F.mark_derivative is not None:
            dj = np.asarray(F.mark_derivative(config, j), dtype=float).reshape(d, r)
        else:
            dj = fd_mark_derivative(F.evaluate, config, j, d, fd_step)
        rows.append(dj)
    return np.stack(rows)


def lent_particle_gamma(
    F: FunctionalDef,
    config: JumpConfiguration,
    spec: LevyMeasureSpec,
    fd_step: float | None = None,
) -> GammaMatrix:
    """Carre du champ matrix of F on a realized configuration (engine route).

    Per jump j the contribution is D_j W(U_j) D_j^T with D_j the analytic
    mark derivative when available, else a refined finite difference; the
    matrix is the exact sum of the retained per-jump terms.
    """
    D = _derivative_stack(F, config, fd_step)
    bad = np.where(~np.all(np.isfinite(D), axis=(1, 2)))[0]
    if bad.size:
        raise NumericError(f"{F.name}: non-finite derivative at jump index {int(bad[0])}")
    W = gamma_weights(spec, config.marks)
    contribs = np.einsum("jdr,jrs,jes->jde", D, W, D)
    return GammaMatrix.assemble(contribs, config.times, provenance="engine")


def oracle_gamma(
    F: FunctionalDef,
    config: JumpConfiguration,
    spec: LevyMeasureSpec,
    h: float = 1e-5,
) -> GammaMatrix:
    """Independent verification route: same per-jump sum, but every D_j is a
    plain central difference at step h with full functional re-evaluation,
    ignoring any analytic derivative the catalog provides."""
    if h <= 0:
        raise DomainError("oracle step must be positive")
    n, d = config.n_jumps, F.output_dim
    D = np.zeros((n, d, config.mark_dim))
    for j in range(n):
        D[j] = _central_difference(F.evaluate, config, j, h, d)
        if not np.all(np.isfinite(D[j])):
            raise NumericError(f"{F.name}: non-finite oracle derivative at jump index {j}")
    W = gamma_weights(spec, config.marks)
    contribs = np.einsum("jdr,jrs,jes->jde", D, W, D)
    return GammaMatrix.assemble(contribs, config.times, provenance="oracle")


# ---------------------------------------------------------------------------
# functional catalog
# ---------------------------------------------------------------------------

def _terminal(config: JumpConfiguration, t: float | None) -> float:
    return config.horizon if t is None else t


def terminal_value(t: float | None = None, initial: float = 0.0, dim: int = 1) -> FunctionalDef:
    """F = Y_t, the driver value at t (default: the horizon)."""

    def evaluate(config: JumpConfiguration) -> np.ndarray:
        return build_path(config, initial).value(_terminal(config, t))

    def derivative_all(config: JumpConfiguration) -> np.ndarray:
        tt = _terminal(config, t)
        n, r = config.n_jumps, config.mark_dim
        out = np.zeros((n, r, r))
        out[config.times <= tt] = np.eye(r)
        return out

    def derivative(config: JumpConfiguration, j: int) -> np.ndarray:
        return derivative_all(config)[j]

    return FunctionalDef(
        name="terminal_value",
        output_dim=dim,
        evaluate=evaluate,
        mark_derivative=derivative,
        mark_derivative_all=derivative_all,
    )


def stochastic_integral_phi(
    phi: Callable[[float], float],
    phi_prime: Callable[[float], float],
    t: float | None = None,
    initial: float = 0.0,
    name: str = "stochastic_integral_phi",
) -> FunctionalDef:
    """F = integral of phi(Y_{s-}) dY_s over (0, t], scalar driver.

    The mark derivative at a jump at time a is the closed form
    phi(Y_{a-}) + integral over (a, t] of phi'(Y_{s-}) dY_s.
    """

    def evaluate(config: JumpConfiguration) -> np.ndarray:
        path = build_path(config, initial)
        return stochastic_integral(lambda y: phi(float(y[0])), path, _terminal(config, t))

    def derivative_all(config: JumpConfiguration) -> np.ndarray:
        tt = _terminal(config, t)
        n = config.n_jumps
        out = np.zeros((n, 1, 1))
        if n == 0:
            return out
        if np.all(config.compensator_drift == 0.0):
            # zero drift: suffix sums of phi'(Y_{b-}) dY_b, all vectorized
            m = int(np.searchsorted(config.times, tt, side="right"))
            jumps = config.marks[:m, 0]
            before = initial + np.concatenate(([0.0], np.cumsum(jumps)[:-1]))
            terms = np.array([phi_prime(float(y)) for y in before]) * jumps
            suffix = np.concatenate((np.cumsum(terms[::-1])[::-1][1:], [0.0])) if m else terms
            for j in range(m):
                out[j, 0, 0] = phi(float(before[j])) + suffix[j]
            return out
        path = build_path(config, initial)
        for j in range(n):
            if config.times[j] > tt:
                continue
            tail = stochastic_integral(
                lambda y: phi_prime(float(y[0])), path, tt, t_open=float(config.times[j])
            )
            out[j, 0, 0] = phi(float(path.left_limit(config.times[j])[0])) + float(tail[0])
        return out

    def derivative(config: JumpConfiguration, j: int) -> np.ndarray:
        return derivative_all(config)[j]

    return FunctionalDef(
        name=name,
        output_dim=1,
        evaluate=evaluate,
        mark_derivative=derivative,
        mark_derivative_all=derivative_all,
    )


def _doleans_terms(config: JumpConfiguration, t: float | None, initial: float):
    tt = _terminal(config, t)
    m = int(np.searchsorted(config.times, tt, side="right"))
    jumps = config.marks[:m, 0]
    one_plus = 1.0 + jumps
    if np.any(np.abs(one_plus) < 1e-12):
        bad = int(np.where(np.abs(one_plus) < 1e-12)[0][0])
        raise SingularJumpError(
            f"jump of size {jumps[bad]} at index {bad} makes 1 + dY vanish"
        )
    y_t = initial + float(jumps.sum()) - tt * float(config.compensator_drift[0])
    exp_t = float(np.exp(y_t - jumps.sum()) * np.prod(one_plus))
    return tt, m, y_t, exp_t, one_plus


def doleans_pair(t: float | None = None, initial: float = 0.0) -> FunctionalDef:
    """F = (Y_t, stochastic exponential of Y at t) for a scalar driver.

    The stochastic exponential is exp(Y_t) * prod (1 + dY_s) exp(-dY_s);
    its mark derivative at jump j is the exponential divided by (1 + dY_j).
    Jumps with 1 + dY within 1e-12 of zero raise SingularJumpError.
    """

    def evaluate(config: JumpConfiguration) -> np.ndarray:
        _, _, y_t, exp_t, _ = _doleans_terms(config, t, initial)
        return np.array([y_t, exp_t])

    def derivative_all(config: JumpConfiguration) -> np.ndarray:
        _, m, _, exp_t, one_plus = _doleans_terms(config, t, initial)
        out = np.zeros((config.n_jumps, 2, 1))
        out[:m, 0, 0] = 1.0
        out[:m, 1, 0] = exp_t / one_plus
        return out

    def derivative(config: JumpConfiguration, j: int) -> np.ndarray:
        return derivative_all(config)[j]

    return FunctionalDef(
        name="doleans_pair",
        output_dim=2,
        evaluate=evaluate,
        mark_derivative=derivative,
        mark_derivative_all=derivative_all,
    )


def _sup_candidates(config: JumpConfiguration, t: float, aux: CadlagPath | None, initial: float):
    """Piecewise-linear sup candidates: (time, is_left_limit, value)."""
    path = build_path(config, initial)
    breaks = set(float(a) for a in config.times if a <= t)
    slope = -float(config.compensator_drift[0])
    aux_slope = 0.0
    if aux is not None:
        breaks.update(float(a) for a in aux.times if a <= t)
        aux_slope = -float(aux.drift[0])
    knots = [0.0] + sorted(breaks) + [t]
    total_slope = slope + aux_slope

    def h_right(s: float) -> float:
        v = float(path.value(s)[0])
        if aux is not None:
            v += float(aux.value(s)[0])
        return v

    cands = []
    for a, b in zip(knots[:-1], knots[1:]):
        va = h_right(a)
        cands.append((a, False, va))
        if b > a:
            cands.append((b, True, va + (b - a) * total_slope))
    cands.append((t, False, h_right(t)))
    return cands


def running_sup(
    t: float | None = None,
    aux: CadlagPath | None = None,
    initial: float = 0.0,
) -> FunctionalDef:
    """F = sup over s <= t of (Y_s + K_s) with K an independent cadlag path.

    The path is piecewise linear, so the sup is attained at an interval
    endpoint; the mark derivative at jump j is 1 exactly when the last
    attaining point includes the jump at T_j (a left limit at T_j does
    not), else 0.  Ties pick the last attaining point.
    """

    def _solve(config: JumpConfiguration):
        tt = _terminal(config, t)
        cands = _sup_candidates(config, tt, aux, initial)
        best = max(v for (_, _, v) in cands)
        # last attaining point; a right value at time s dominates the left limit at s
        arg = max(
            ((s, not left) for (s, left, v) in cands if v == best),
            key=lambda p: (p[0], p[1]),
        )
        return best, arg

    def evaluate(config: JumpConfiguration) -> np.ndarray:
        best, _ = _solve(config)
        return np.array([best])

    def derivative_all(config: JumpConfiguration) -> np.ndarray:
        tt = _terminal(config, t)
        _, (s_star, includes_right) = _solve(config)
        out = np.zeros((config.n_jumps, 1, 1))
        for j in range(config.n_jumps):
            tj = float(config.times[j])
            if tj > tt:
                continue
            if tj < s_star or (tj == s_star and includes_right):
                out[j, 0, 0] = 1.0
        return out

    def derivative(config: JumpConfiguration, j: int) -> np.ndarray:
        return derivative_all(config)[j]

    return FunctionalDef(
        name="running_sup",
        output_dim=1,
        evaluate=evaluate,
        mark_derivative=derivative,
        mark_derivative_all=derivative_all,
    )


def degenerate_sde_z(t: float | None = None, origin=(0.0, 0.0, 0.0)) -> FunctionalDef:
    """Three-dimensional degenerate system driven by a pair (Y1, Y2):

        Z1 = z1 + Y1_t
        Z2 = z2 + 2 * integral of Z1_{s-} dY1_s + Y2_t
        Z3 = z3 +     integral of Z1_{s-} dY1_s + 2 * Y2_t

    Marks are two-dimensional; the mark derivative at a jump is the 3 x 2
    matrix with columns (1, 2(Z1_t - dY1), (Z1_t - dY1)) and (0, 1, 2).
    """
    z1, z2, z3 = (float(x) for x in origin)

    def _pieces(config: JumpConfiguration):
        tt = _terminal(config, t)
        m = int(np.searchsorted(config.times, tt, side="right"))
        if np.all(config.compensator_drift == 0.0):
            y = config.marks[:m]
            y1_before = z1 + np.concatenate(([0.0], np.cumsum(y[:, 0])[:-1]))
            i1 = float(np.dot(y1_before, y[:, 0]))
            y1_t = float(y[:, 0].sum())
            y2_t = float(y[:, 1].sum())
        else:
            path = build_path(config, np.zeros(2))
            i1 = float(stochastic_integral(lambda v: z1 + float(v[0]), path, tt)[0])
            y1_t, y2_t = (float(x) for x in path.value(tt))
        return tt, m, i1, y1_t, y2_t

    def evaluate(config: JumpConfiguration) -> np.ndarray:
        _, _, i1, y1_t, y2_t = _pieces(config)
        return np.array([z1 + y1_t, z2 + 2.0 * i1 + y2_t, z3 + i1 + 2.0 * y2_t])

    def derivative_all(config: JumpConfiguration) -> np.ndarray:
        _, m, _, y1_t, _ = _pieces(config)
        n = config.n_jumps
        out = np.zeros((n, 3, 2))
        rest = (z1 + y1_t) - config.marks[:m, 0]  # Z1_t minus this jump's first component
        out[:m, 0, 0] = 1.0
        out[:m, 1, 0] = 2.0 * rest
        out[:m, 2, 0] = rest
        out[:m, 1, 1] = 1.0
        out[:m, 2, 1] = 2.0
        return out

    def derivative(config: JumpConfiguration, j: int) -> np.ndarray:
        return derivative_all(config)[j]

    return FunctionalDef(
        name="degenerate_sde_z",
        output_dim=3,
        evaluate=evaluate,
        mark_derivative=derivative,
        mark_derivative_all=derivative_all,
    )


def compose(
    phi: Callable[[np.ndarray], np.ndarray],
    grad_phi: Callable[[np.ndarray], np.ndarray],
    inner: FunctionalDef,
    output_dim: int = 1,
    name: str | None = None,
) -> FunctionalDef:
    """H = phi(F) with the chain-rule derivative grad_phi(F) @ D_j."""

    def evaluate(config: JumpConfiguration) -> np.ndarray:
        return np.atleast_1d(np.asarray(phi(inner.evaluate(config)), dtype=float))

    def derivative_all(config: JumpConfiguration) -> np.ndarray:
        base = _derivative_stack(inner, config, None)
        g = np.asarray(grad_phi(inner.evaluate(config)), dtype=float).reshape(
            output_dim, inner.output_dim
        )
        return np.einsum("md,jdr->jmr", g, base)

    def derivative(config: JumpConfiguration, j: int) -> np.ndarray:
        return derivative_all(config)[j]

    return FunctionalDef(
        name=name or f"compose({inner.name})",
        output_dim=output_dim,
        evaluate=evaluate,
        mark_derivative=derivative,
        mark_derivative_all=derivative_all,
    )


def linear_functional(coeff: np.ndarray, t: float | None = None) -> FunctionalDef:
    """F = sum over jumps with T_j <= t of C @ U_j (C is d x r)."""
    C = np.asarray(coeff, dtype=float)
    if C.ndim == 1:
        C = C.reshape(1, -1)

    def evaluate(config: JumpConfiguration) -> np.ndarray:
        tt = _terminal(config, t)
        m = int(np.searchsorted(config.times, tt, side="right"))
        return C @ config.marks[:m].sum(axis=0) if m else np.zeros(C.shape[0])

    def derivative_all(config: JumpConfiguration) -> np.ndarray:
        tt = _terminal(config, t)
        out = np.zeros((config.n_jumps, C.shape[0], C.shape[1]))
        out[config.times <= tt] = C
        return out

    def derivative(config: JumpConfiguration, j: int) -> np.ndarray:
        return derivative_all(config)[j]

    return FunctionalDef(
        name="linear_functional",
        output_dim=C.shape[0],
        evaluate=evaluate,
        mark_derivative=derivative,
        mark_derivative_all=derivative_all,
    )


# ---------------------------------------------------------------------------
# named-entry registry for the CLI
# ---------------------------------------------------------------------------

PHI_LIBRARY = {
    "identity": (lambda y: y, lambda y: 1.0),
    "sin": (np.sin, np.cos),
}


def _phi_from_params(params: dict):
    kind = params.get("phi", "identity")
    if kind == "affine":
        a = float(params.get("phi_a", 1.0))
        b = float(params.get("phi_b", 0.0))
        return (lambda y: a * y + b), (lambda y: a)
    if kind not in PHI_LIBRARY:
        raise DomainError(f"unknown phi '{kind}' (use identity, sin or affine)")
    return PHI_LIBRARY[kind]


def _build_running_sup(params: dict, horizon: float) -> FunctionalDef:
    aux = None
    drift = float(params.get("aux_drift", 0.0))
    if drift != 0.0:
        # deterministic auxiliary path K_s = drift * s
        aux = CadlagPath(
            horizon=horizon,
            initial=np.zeros(1),
            times=np.empty(0),
            jumps=np.empty((0, 1)),
            drift=np.array([-drift]),
        )
    return running_sup(aux=aux)


#: name -> (builder(params, horizon), required mark dim, allowed parameter keys)
FUNCTIONAL_CATALOG = {
    "terminal_value": (lambda p, h: terminal_value(), 1, set()),
    "stochastic_integral_phi": (
        lambda p, h: stochastic_integral_phi(*_phi_from_params(p)),
        1,
        {"phi", "phi_a", "phi_b"},
    ),
    "doleans_pair": (lambda p, h: doleans_pair(), 1, set()),
    "running_sup": (_build_running_sup, 1, {"aux_drift"}),
    "degenerate_sde_z": (
        lambda p, h: degenerate_sde_z(
            origin=(p.get("z1", 0.0), p.get("z2", 0.0), p.get("z3", 0.0))
        ),
        2,
        {"z1", "z2", "z3"},
    ),
}


def build_catalog_functional(name: str, params: dict, horizon: float) -> FunctionalDef:
    if name not in FUNCTIONAL_CATALOG:
        raise DomainError(f"unknown functional '{name}'")
    builder, _, allowed = FUNCTIONAL_CATALOG[name]
    unknown = set(params) - allowed
    if unknown:
        raise DomainError(f"functional '{name}' does not accept {sorted(unknown)}")
    return builder(params, horizon)


# ---------------------------------------------------------------------------
# CSV emission
# ---------------------------------------------------------------------------

def write_gamma_csv(gammas, path: str) -> None:
    """One row per path: path_id, matrix entries row-major, det, min eigenvalue."""
    if not gammas:
        raise DomainError("no matrices to write")
    d = gammas[0].dim
    header = (
        ["path_id"]
        + [f"gamma_{i + 1}_{k + 1}" for i in range(d) for k in range(d)]
        + ["det", "min_eigenvalue"]
    )
    rows = []
    for pid, g in enumerate(gammas):
        rows.append([pid] + [float(x) for x in g.matrix.ravel()] + [g.det, g.min_eigenvalue])
    write_csv(path, header, rows)


def write_contribution_csv(gamma: GammaMatrix, path_id: int, path: str) -> None:
    """Per-jump contribution trace of a single matrix."""
    d = gamma.dim
    header = (
        ["path_id", "jump_index", "jump_time"]
        + [f"contrib_{i + 1}_{k + 1}" for i in range(d) for k in range(d)]
    )
    rows = []
    for j in range(gamma.contributions.shape[0]):
        rows.append(
            [path_id, j, float(gamma.jump_times[j])]
            + [float(x) for x in gamma.contributions[j].ravel()]
        )
    write_csv(path, header, rows)
