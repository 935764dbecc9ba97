"""Jump SDEs driven by a Poisson measure plus an auxiliary semimartingale.

The state equation is

    X_t = x + int c(s, X_{s-}, u) dJ(ds, du) + int sigma(s, X_{s-}) dZ_s,

where J is the (possibly compensated) jump measure realized by a
configuration and Z is an auxiliary driver restricted here to a pure-jump
part plus a deterministic absolutely continuous part.  Compensation is
carried as an explicit state drift callable; between events the state (and
the flow matrices) advance by an explicit midpoint scheme with step
halving until two refinements agree, and pure-jump problems bypass
stepping entirely, making them exact.

The derivative of the flow K and its inverse Kbar evolve on the same event
grid; Kbar follows its own recursion (multiplicative inverse factors at
jumps, its own linear drift between events) and the product Kbar K = I is
checked rather than assumed.  The carre du champ of the solution is

    Gamma[X_t] = K_t [ sum over jumps  Kbar_a G W(u) G^T Kbar_a^T ] K_t^T

with G the mark gradient of the jump coefficient and Kbar_a the inverse
flow evaluated just after the jump at a; the re-solve oracle perturbs one
mark coordinate at a time and differentiates the terminal state directly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .bottom import gamma_weight
from .csvio import write_csv
from .errors import (
    DomainError,
    HypothesisViolationError,
    NumericError,
    StiffnessError,
)
from .functionals import GammaMatrix
from .levy import JumpConfiguration, LevyMeasureSpec

__all__ = [
    "SdeModel",
    "ZPath",
    "Event",
    "Trajectory",
    "FlowState",
    "solve_sde",
    "flow_derivative",
    "inverse_flow",
    "sde_gamma",
    "sde_gamma_oracle",
    "validate_model",
    "zero_z",
    "MODEL_REGISTRY",
    "build_registry_model",
    "write_trajectory_csv",
    "linear_scalar_model",
    "linear_multid_model",
    "degenerate_3d_model",
]

#: two-refinement agreement target of the inter-event integrator
STEP_AGREEMENT = 1e-9
#: condition-number ceiling for jump Jacobian factors I + D_x c
COND_LIMIT = 1e12


@dataclass(frozen=True)
class SdeModel:
    """Coefficients of the state equation with their state Jacobians.

    ``c`` and ``c_jac_x`` are mandatory; ``c_grad_u`` (mark gradient of c)
    is optional and falls back to finite differences.  ``drift`` is the
    inter-event state drift (the compensator of the jump integral when the
    driver is compensated); None means the raw jump sum.  ``sigma`` /
    ``sigma_jac_x`` describe the coupling to the auxiliary driver:
    sigma_jac_x(t, x)[j] is the state Jacobian of the j-th column of sigma.
    """

    state_dim: int
    mark_dim: int
    initial: np.ndarray
    c: Callable[[float, np.ndarray, np.ndarray], np.ndarray]
    c_jac_x: Callable[[float, np.ndarray, np.ndarray], np.ndarray]
    c_grad_u: Optional[Callable[[float, np.ndarray, np.ndarray], np.ndarray]] = None
    sigma: Optional[Callable[[float, np.ndarray], np.ndarray]] = None
    sigma_jac_x: Optional[Callable[[float, np.ndarray], np.ndarray]] = None
    aux_dim: int = 0
    drift: Optional[Callable[[float, np.ndarray], np.ndarray]] = None
    drift_jac_x: Optional[Callable[[float, np.ndarray], np.ndarray]] = None
    name: str = ""

    def __post_init__(self):
        object.__setattr__(
            self, "initial", np.asarray(self.initial, dtype=float).reshape(self.state_dim)
        )


@dataclass(frozen=True)
class ZPath:
    """Realized auxiliary driver: listed jumps plus a deterministic rate."""

    dim: int
    horizon: float
    jump_times: np.ndarray
    jump_sizes: np.ndarray
    slope: Optional[Callable[[float], np.ndarray]] = None

    def __post_init__(self):
        times = np.asarray(self.jump_times, dtype=float).reshape(-1)
        sizes = np.asarray(self.jump_sizes, dtype=float).reshape(times.size, self.dim)
        if times.size and (np.any(times <= 0.0) or np.any(times > self.horizon)):
            raise DomainError("auxiliary jump times must lie in (0, horizon]")
        if times.size > 1 and np.any(np.diff(times) <= 0.0):
            raise DomainError("auxiliary jump times must be strictly increasing")
        object.__setattr__(self, "jump_times", times)
        object.__setattr__(self, "jump_sizes", sizes)


def zero_z(horizon: float, dim: int = 1) -> ZPath:
    return ZPath(dim=dim, horizon=horizon, jump_times=np.empty(0), jump_sizes=np.empty((0, dim)))


@dataclass(frozen=True)
class Event:
    time: float
    kind: str  # "N" or "Z"
    index: int
    payload: np.ndarray  # mark u for N, increment dZ for Z
    x_before: np.ndarray
    x_after: np.ndarray


@dataclass(frozen=True)
class Trajectory:
    horizon: float
    initial: np.ndarray
    events: tuple
    final_state: np.ndarray
    drift_handling: str


@dataclass(frozen=True)
class FlowState:
    """Flow matrices along the event grid.

    ``k_after[i]`` / ``kbar_after[i]`` are the values just after event i
    (``*_before`` the left limits); the ``*_final`` entries are the values
    at the horizon.  ``identity_gap`` is the largest observed value of
    ||Kbar K - I||_inf / cond(K), recorded by the inverse-flow check.
    """

    times: np.ndarray
    k_before: Optional[np.ndarray]
    k_after: Optional[np.ndarray]
    k_final: Optional[np.ndarray]
    kbar_before: Optional[np.ndarray] = None
    kbar_after: Optional[np.ndarray] = None
    kbar_final: Optional[np.ndarray] = None
    identity_gap: Optional[float] = None


# ---------------------------------------------------------------------------
# event-grid integration
# ---------------------------------------------------------------------------

def _merged_events(config: JumpConfiguration, z_path: Optional[ZPath]):
    events = [("N", i, float(t)) for i, t in enumerate(config.times)]
    if z_path is not None:
        events += [("Z", i, float(t)) for i, t in enumerate(z_path.jump_times)]
    # stable sort by time; simultaneous N and Z events process N first
    events.sort(key=lambda e: (e[2], 0 if e[0] == "N" else 1))
    return events


def _drift_rate(model: SdeModel, z_path: Optional[ZPath], s: float, x: np.ndarray) -> np.ndarray:
    rate = np.zeros(model.state_dim)
    if model.drift is not None:
        rate = rate + np.asarray(model.drift(s, x), dtype=float)
    if z_path is not None and z_path.slope is not None and model.sigma is not None:
        rate = rate + np.asarray(model.sigma(s, x), dtype=float) @ np.asarray(
            z_path.slope(s), dtype=float
        )
    return rate


def _drift_jacobian(model: SdeModel, z_path: Optional[ZPath], s: float, x: np.ndarray) -> np.ndarray:
    d = model.state_dim
    jac = np.zeros((d, d))
    if model.drift is not None:
        if model.drift_jac_x is None:
            raise DomainError("model has a drift but no drift_jac_x for the flow")
        jac = jac + np.asarray(model.drift_jac_x(s, x), dtype=float)
    if z_path is not None and z_path.slope is not None and model.sigma_jac_x is not None:
        sj = np.asarray(model.sigma_jac_x(s, x), dtype=float)
        jac = jac + np.einsum("j,jde->de", np.asarray(z_path.slope(s), dtype=float), sj)
    return jac


def _has_continuous_part(model: SdeModel, z_path: Optional[ZPath]) -> bool:
    return model.drift is not None or (
        z_path is not None and z_path.slope is not None and model.sigma is not None
    )


def _advance(model, z_path, t0, t1, x0, k0, kbar0, want_k, want_kbar, max_step):
    """Advance (x, K, Kbar) from t0 to t1 across a jump-free stretch.

    Explicit midpoint steps of size at most max_step, count doubling until
    two consecutive refinements agree within STEP_AGREEMENT; exact (no
    stepping) when the problem has no continuous part.
    """
    if t1 <= t0 or not _has_continuous_part(model, z_path):
        return x0, k0, kbar0

    def run(nsteps: int):
        x = x0.copy()
        k = k0.copy() if want_k else None
        kbar = kbar0.copy() if want_kbar else None
        h = (t1 - t0) / nsteps
        for i in range(nsteps):
            s = t0 + i * h
            s_half = s + 0.5 * h
            r1 = _drift_rate(model, z_path, s, x)
            x_half = x + 0.5 * h * r1
            r2 = _drift_rate(model, z_path, s_half, x_half)
            if want_k or want_kbar:
                a1 = _drift_jacobian(model, z_path, s, x)
                a2 = _drift_jacobian(model, z_path, s_half, x_half)
                if want_k:
                    k_half = k + 0.5 * h * (a1 @ k)
                    k = k + h * (a2 @ k_half)
                if want_kbar:
                    kb_half = kbar - 0.5 * h * (kbar @ a1)
                    kbar = kbar - h * (kb_half @ a2)
            x = x + h * r2
        return x, k, kbar

    n = 4
    if max_step is not None and max_step > 0:
        n = max(n, int(np.ceil((t1 - t0) / max_step)))
    prev = run(n)
    for _ in range(16):
        n *= 2
        cur = run(n)
        gap = max(
            float(np.abs(cur[0] - prev[0]).max()),
            float(np.abs(cur[1] - prev[1]).max()) if want_k else 0.0,
            float(np.abs(cur[2] - prev[2]).max()) if want_kbar else 0.0,
        )
        if gap <= STEP_AGREEMENT * (1.0 + float(np.abs(cur[0]).max())):
            return cur
        prev = cur
    raise StiffnessError(
        f"inter-event integrator failed to converge on [{t0}, {t1}] after {n} steps"
    )


def _jump_jacobian(model, z_path, ev_kind, ev_index, t, x_before, payload):
    """I + D_x c at an N-jump, I + dU at a Z-jump, with conditioning guard."""
    d = model.state_dim
    if ev_kind == "N":
        jac = np.asarray(model.c_jac_x(t, x_before, payload), dtype=float)
    else:
        if model.sigma_jac_x is None:
            return np.eye(d)
        sj = np.asarray(model.sigma_jac_x(t, x_before), dtype=float)
        jac = np.einsum("j,jde->de", payload, sj)
    factor = np.eye(d) + jac
    cond = float(np.linalg.cond(factor))
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise HypothesisViolationError(
            f"I + jump Jacobian at {ev_kind}-jump index {ev_index} (t={t}) has "
            f"condition number {cond:.3e}"
        )
    return factor


def _integrate(model, config, z_path, want_k, want_kbar, max_step=None):
    d = model.state_dim
    if config.mark_dim != model.mark_dim:
        raise DomainError("configuration mark dimension does not match the model")
    if z_path is not None and z_path.horizon != config.horizon:
        raise DomainError("configuration and auxiliary path have different horizons")
    x = model.initial.copy()
    k = np.eye(d)
    kbar = np.eye(d)
    t_cur = 0.0
    events = []
    k_before, k_after, kbar_before, kbar_after = [], [], [], []
    for kind, idx, t_ev in _merged_events(config, z_path):
        x, k, kbar = _advance(
            model, z_path, t_cur, t_ev, x, k, kbar, want_k, want_kbar, max_step
        )
        t_cur = t_ev
        payload = config.marks[idx] if kind == "N" else z_path.jump_sizes[idx]
        x_before = x.copy()
        if kind == "N":
            x = x + np.asarray(model.c(t_ev, x_before, payload), dtype=float)
        else:
            if model.sigma is not None:
                x = x + np.asarray(model.sigma(t_ev, x_before), dtype=float) @ payload
        if not np.all(np.isfinite(x)):
            raise NumericError(f"state became non-finite at {kind}-event index {idx} (t={t_ev})")
        if want_k or want_kbar:
            factor = _jump_jacobian(model, z_path, kind, idx, t_ev, x_before, payload)
            if want_k:
                k_before.append(k.copy())
                k = factor @ k
                k_after.append(k.copy())
            if want_kbar:
                kbar_before.append(kbar.copy())
                kbar = kbar @ np.linalg.inv(factor)
                kbar_after.append(kbar.copy())
        events.append(
            Event(time=t_ev, kind=kind, index=idx, payload=payload.copy(),
                  x_before=x_before, x_after=x.copy())
        )
    x, k, kbar = _advance(
        model, z_path, t_cur, config.horizon, x, k, kbar, want_k, want_kbar, max_step
    )
    handling = "drift-callable" if model.drift is not None else "none"
    if z_path is not None and z_path.slope is not None:
        handling += "+sigma-slope"
    traj = Trajectory(
        horizon=config.horizon,
        initial=model.initial.copy(),
        events=tuple(events),
        final_state=x,
        drift_handling=handling,
    )
    times = np.array([e.time for e in events])
    flow = FlowState(
        times=times,
        k_before=np.array(k_before).reshape(len(events), d, d) if want_k else None,
        k_after=np.array(k_after).reshape(len(events), d, d) if want_k else None,
        k_final=k if want_k else None,
        kbar_before=np.array(kbar_before).reshape(len(events), d, d) if want_kbar else None,
        kbar_after=np.array(kbar_after).reshape(len(events), d, d) if want_kbar else None,
        kbar_final=kbar if want_kbar else None,
    )
    return traj, flow


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

def solve_sde(
    model: SdeModel,
    config: JumpConfiguration,
    z_path: Optional[ZPath] = None,
    max_step: Optional[float] = None,
) -> Trajectory:
    """Solve the state equation along the realized event grid.

    ``max_step`` caps the inter-event step size before the agreement-driven
    halving starts; None lets the halving loop choose alone.
    """
    traj, _ = _integrate(model, config, z_path, want_k=False, want_kbar=False,
                         max_step=max_step)
    return traj


def _check_same_run(trajectory: Trajectory, traj2: Trajectory):
    if len(trajectory.events) != len(traj2.events) or not np.array_equal(
        trajectory.final_state, traj2.final_state
    ):
        raise DomainError("trajectory was not produced by solve_sde on the same inputs")


def flow_derivative(
    model: SdeModel,
    trajectory: Trajectory,
    config: JumpConfiguration,
    z_path: Optional[ZPath] = None,
    max_step: Optional[float] = None,
) -> FlowState:
    """Derivative of the flow: K jumps by (I + D_x c) factors and follows the
    linearized drift between events."""
    traj2, flow = _integrate(model, config, z_path, want_k=True, want_kbar=False,
                             max_step=max_step)
    _check_same_run(trajectory, traj2)
    return flow


def inverse_flow(
    model: SdeModel,
    trajectory: Trajectory,
    config: JumpConfiguration,
    z_path: Optional[ZPath] = None,
    identity_tol: Optional[float] = None,
    max_step: Optional[float] = None,
) -> FlowState:
    """Inverse flow Kbar via its own recursion, with the product check.

    Kbar multiplies by (I + D_x c)^{-1} at jumps and integrates its own
    linear drift between events.  ||Kbar K - I||_inf is checked at every
    event and at the horizon against identity_tol * cond(K); the default
    tolerance is 1e-10 for exact (pure-jump) grids and 1e-6 when the
    inter-event integrator ran (its agreement target is 1e-9).
    """
    traj2, flow = _integrate(model, config, z_path, want_k=True, want_kbar=True,
                             max_step=max_step)
    _check_same_run(trajectory, traj2)
    if identity_tol is None:
        identity_tol = 1e-6 if _has_continuous_part(model, z_path) else 1e-10
    gap = 0.0
    d = model.state_dim
    pairs = list(zip(flow.kbar_after, flow.k_after)) + [(flow.kbar_final, flow.k_final)]
    for kbar, k in pairs:
        err = float(np.abs(kbar @ k - np.eye(d)).max())
        cond = float(np.linalg.cond(k))
        gap = max(gap, err / cond)
        if err > identity_tol * cond:
            raise NumericError(
                f"inverse-flow identity violated: ||Kbar K - I|| = {err:.3e} "
                f"with cond(K) = {cond:.3e}"
            )
    return FlowState(
        times=flow.times,
        k_before=flow.k_before,
        k_after=flow.k_after,
        k_final=flow.k_final,
        kbar_before=flow.kbar_before,
        kbar_after=flow.kbar_after,
        kbar_final=flow.kbar_final,
        identity_gap=gap,
    )


def _mark_gradient(model: SdeModel, t: float, x: np.ndarray, u: np.ndarray) -> np.ndarray:
    if model.c_grad_u is not None:
        return np.asarray(model.c_grad_u(t, x, u), dtype=float).reshape(
            model.state_dim, model.mark_dim
        )
    h0 = 1e-5 * max(1.0, float(np.linalg.norm(u)))
    cols = []
    for i in range(model.mark_dim):
        e = np.zeros(model.mark_dim)
        e[i] = h0
        up = np.asarray(model.c(t, x, u + e), dtype=float)
        dn = np.asarray(model.c(t, x, u - e), dtype=float)
        cols.append((up - dn) / (2.0 * h0))
    return np.column_stack(cols)


def sde_gamma(
    model: SdeModel,
    trajectory: Trajectory,
    flow: FlowState,
    config: JumpConfiguration,
    spec: LevyMeasureSpec,
) -> GammaMatrix:
    """Carre du champ of the terminal state by the flow-decomposition formula."""
    if flow.k_final is None or flow.kbar_after is None:
        raise DomainError("sde_gamma needs a FlowState with both K and Kbar parts")
    contribs = []
    times = []
    k_t = flow.k_final
    for i, ev in enumerate(trajectory.events):
        if ev.kind != "N":
            continue
        g = _mark_gradient(model, ev.time, ev.x_before, ev.payload)
        w = gamma_weight(spec, ev.payload)
        kbar = flow.kbar_after[i]
        core = kbar @ g @ w @ g.T @ kbar.T
        contribs.append(k_t @ core @ k_t.T)
        times.append(ev.time)
    d = model.state_dim
    stack = np.array(contribs).reshape(len(contribs), d, d)
    return GammaMatrix.assemble(stack, np.array(times), provenance="engine")


def sde_gamma_oracle(
    model: SdeModel,
    config: JumpConfiguration,
    z_path: Optional[ZPath],
    spec: LevyMeasureSpec,
    h: float = 1e-5,
) -> GammaMatrix:
    """Re-solve oracle: D_j = dX_t/dU_j by central differences with a full
    solve per perturbation, then sum D_j W(U_j) D_j^T."""
    if h <= 0:
        raise DomainError("oracle step must be positive")
    d, r = model.state_dim, config.mark_dim
    contribs = []
    for j in range(config.n_jumps):
        cols = []
        for i in range(r):
            hi = h
            while True:
                up = config.marks[j].copy()
                up[i] += hi
                dn = config.marks[j].copy()
                dn[i] -= hi
                if np.any(up != 0.0) and np.any(dn != 0.0):
                    break
                hi *= 0.5
            x_up = solve_sde(model, config.with_mark(j, up), z_path).final_state
            x_dn = solve_sde(model, config.with_mark(j, dn), z_path).final_state
            cols.append((x_up - x_dn) / (2.0 * hi))
        dj = np.column_stack(cols)
        if not np.all(np.isfinite(dj)):
            raise NumericError(f"oracle derivative non-finite at jump index {j}")
        w = gamma_weight(spec, config.marks[j])
        contribs.append(dj @ w @ dj.T)
    stack = np.array(contribs).reshape(config.n_jumps, d, d)
    return GammaMatrix.assemble(stack, config.times, provenance="oracle")


def validate_model(model: SdeModel, probes) -> list[str]:
    """Finite-difference spot checks of the supplied Jacobians.

    ``probes`` is an iterable of (t, x, u) triples; returns a list of
    human-readable failure strings (empty = pass) using a 1e-5 relative
    tolerance.
    """
    failures = []
    for (t, x, u) in probes:
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        jac = np.asarray(model.c_jac_x(t, x, u), dtype=float)
        fd = np.zeros_like(jac)
        for i in range(model.state_dim):
            e = np.zeros(model.state_dim)
            e[i] = 1e-6 * max(1.0, abs(float(x[i])))
            fd[:, i] = (
                np.asarray(model.c(t, x + e, u), dtype=float)
                - np.asarray(model.c(t, x - e, u), dtype=float)
            ) / (2.0 * e[i])
        scale = 1.0 + float(np.abs(jac).max())
        if float(np.abs(jac - fd).max()) > 1e-5 * scale:
            failures.append(f"c_jac_x mismatch at t={t}, x={x.tolist()}, u={u.tolist()}")
        if model.c_grad_u is not None:
            gu = np.asarray(model.c_grad_u(t, x, u), dtype=float)
            fdu = _mark_gradient(
                SdeModel(
                    state_dim=model.state_dim,
                    mark_dim=model.mark_dim,
                    initial=model.initial,
                    c=model.c,
                    c_jac_x=model.c_jac_x,
                ),
                t,
                x,
                u,
            )
            if float(np.abs(gu - fdu).max()) > 1e-5 * (1.0 + float(np.abs(gu).max())):
                failures.append(f"c_grad_u mismatch at t={t}, x={x.tolist()}, u={u.tolist()}")
    return failures


# ---------------------------------------------------------------------------
# built-in models
# ---------------------------------------------------------------------------

def linear_scalar_model(a: float = 1.0, x0: float = 1.0) -> SdeModel:
    """Scalar multiplicative model c(t, x, u) = a * x * u."""
    return SdeModel(
        state_dim=1,
        mark_dim=1,
        initial=np.array([x0]),
        c=lambda t, x, u: np.array([a * x[0] * u[0]]),
        c_jac_x=lambda t, x, u: np.array([[a * u[0]]]),
        c_grad_u=lambda t, x, u: np.array([[a * x[0]]]),
        name=f"linear-scalar(a={a}, x0={x0})",
    )


def linear_multid_model(matrix: np.ndarray, x0: np.ndarray) -> SdeModel:
    """c(t, x, u) = u * (A x) for scalar marks and a fixed square matrix A."""
    A = np.asarray(matrix, dtype=float)
    d = A.shape[0]
    x0 = np.asarray(x0, dtype=float).reshape(d)
    return SdeModel(
        state_dim=d,
        mark_dim=1,
        initial=x0,
        c=lambda t, x, u: u[0] * (A @ x),
        c_jac_x=lambda t, x, u: u[0] * A,
        c_grad_u=lambda t, x, u: (A @ x).reshape(d, 1),
        name=f"linear-{d}d",
    )


def degenerate_3d_model(origin=(0.0, 0.0, 0.0)) -> SdeModel:
    """The three-dimensional degenerate system driven by two-dimensional marks."""
    z = np.asarray(origin, dtype=float).reshape(3)

    def c(t, x, u):
        return np.array([u[0], 2.0 * x[0] * u[0] + u[1], x[0] * u[0] + 2.0 * u[1]])

    def c_jac_x(t, x, u):
        return np.array([[0.0, 0.0, 0.0], [2.0 * u[0], 0.0, 0.0], [u[0], 0.0, 0.0]])

    def c_grad_u(t, x, u):
        return np.array([[1.0, 0.0], [2.0 * x[0], 1.0], [x[0], 2.0]])

    return SdeModel(
        state_dim=3,
        mark_dim=2,
        initial=z,
        c=c,
        c_jac_x=c_jac_x,
        c_grad_u=c_grad_u,
        name="degenerate-3d",
    )


def _build_linear_scalar(params: dict) -> SdeModel:
    return linear_scalar_model(a=params.get("a", 1.0), x0=params.get("x0", 1.0))


def _build_linear_2d(params: dict) -> SdeModel:
    A = np.array(
        [
            [params.get("a11", 0.5), params.get("a12", 0.1)],
            [params.get("a21", -0.2), params.get("a22", 0.4)],
        ]
    )
    x0 = np.array([params.get("x0_1", 1.0), params.get("x0_2", 1.0)])
    return linear_multid_model(A, x0)


def _build_degenerate_3d(params: dict) -> SdeModel:
    return degenerate_3d_model(
        origin=(params.get("z1", 0.0), params.get("z2", 0.0), params.get("z3", 0.0))
    )


#: name -> (builder, mark_dim, allowed parameter keys)
MODEL_REGISTRY = {
    "linear-scalar": (_build_linear_scalar, 1, {"a", "x0"}),
    "linear-2d": (_build_linear_2d, 1, {"a11", "a12", "a21", "a22", "x0_1", "x0_2"}),
    "degenerate-3d": (_build_degenerate_3d, 2, {"z1", "z2", "z3"}),
}


def build_registry_model(name: str, params: dict) -> SdeModel:
    if name not in MODEL_REGISTRY:
        raise DomainError(f"unknown model '{name}'")
    builder, _, allowed = MODEL_REGISTRY[name]
    unknown = set(params) - allowed
    if unknown:
        raise DomainError(f"model '{name}' does not accept {sorted(unknown)}")
    return builder(params)


def write_trajectory_csv(trajectory: Trajectory, flow: Optional[FlowState], path: str) -> None:
    """Event grid with states and (when available) flow matrices, row-major."""
    d = trajectory.initial.size
    header = ["event_time", "kind"] + [f"x_{i + 1}" for i in range(d)]
    if flow is not None and flow.k_after is not None:
        header += [f"k_{i + 1}_{j + 1}" for i in range(d) for j in range(d)]
    if flow is not None and flow.kbar_after is not None:
        header += [f"kbar_{i + 1}_{j + 1}" for i in range(d) for j in range(d)]
    rows = []
    for i, ev in enumerate(trajectory.events):
        row = [ev.time, ev.kind] + [float(v) for v in ev.x_after]
        if flow is not None and flow.k_after is not None:
            row += [float(v) for v in flow.k_after[i].ravel()]
        if flow is not None and flow.kbar_after is not None:
            row += [float(v) for v in flow.kbar_after[i].ravel()]
        rows.append(row)
    write_csv(path, header, rows)
