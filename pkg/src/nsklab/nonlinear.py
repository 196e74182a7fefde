"""Time integration of the momentum-form nonlinear system.

The linear part is propagated exactly by the Fourier-multiplier semigroup;
the divergence-form nonlinearity g(theta, m) = -Div H(theta, m) enters
through the Duhamel integral, approximated by an exponential trapezoid
predictor-corrector (order 2):

    U*      = S(dt) U_n + dt S(dt) N(U_n)
    U_{n+1} = S(dt) U_n + dt/2 [ S(dt) N(U_n) + N(U*) ]

Both stages reuse the oracle-verified propagator, so the only scheme error
is the Duhamel quadrature.  Every pointwise product in H is truncated by the
2/3 rule, including the rational factor 1/(rho* + theta); the zero mode of g
vanishes identically (pure divergence), so the means of theta and m are
conserved bit for bit.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .analysis import NormSeries, lp_norm, multi_indices
from .errors import NumericsWarning, RangeViolation, StepRejected
from .model import FluidParams, Grid, SpectralState, State
from .spectral import dealias_mask, fftn, ifftn, to_real, to_spectral

GL_NODES, GL_WEIGHTS = np.polynomial.legendre.leggauss(8)
GL_TAU = 0.5 * (GL_NODES + 1.0)
GL_W = 0.5 * GL_WEIGHTS


def viscous_tensor(u: np.ndarray, params: FluidParams, grid: Grid) -> np.ndarray:
    """S(u) = mu* (grad u + grad u^T) + (nu* - mu*) div u I, derivatives spectral."""
    dim = grid.dim
    xis = grid.wavevectors()
    u_hat = [fftn(u[j]) for j in range(dim)]
    grad = np.empty((dim, dim) + grid.shape)
    for j in range(dim):
        for k in range(dim):
            grad[j, k] = ifftn(1j * xis[k] * u_hat[j]).real
    div_u = np.zeros(grid.shape)
    for j in range(dim):
        div_u += grad[j, j]
    out = np.empty((dim, dim) + grid.shape)
    for j in range(dim):
        for k in range(dim):
            out[j, k] = params.mu_star * (grad[j, k] + grad[k, j])
            if j == k:
                out[j, k] += (params.nu_star - params.mu_star) * div_u
    return out


def korteweg_tensor(rho: np.ndarray, params: FluidParams, grid: Grid, mask: np.ndarray | None = None) -> np.ndarray:
    """K(rho) = kappa*/2 (Lap(rho^2) - |grad rho|^2) I - kappa* grad rho x grad rho."""
    dim = grid.dim
    if mask is None:
        mask = dealias_mask(grid)
    xis = grid.wavevectors()
    rho_hat = fftn(rho)
    grad_rho = [ifftn(1j * xis[j] * rho_hat).real for j in range(dim)]
    rho_sq_hat = mask * fftn(rho * rho)
    lap_rho_sq = ifftn(-grid.xi_sq * rho_sq_hat).real
    grad_sq = np.zeros(grid.shape)
    gg = np.empty((dim, dim) + grid.shape)
    for j in range(dim):
        for k in range(j, dim):
            prod = ifftn(mask * fftn(grad_rho[j] * grad_rho[k])).real
            gg[j, k] = prod
            gg[k, j] = prod
            if j == k:
                grad_sq += prod
    out = np.empty((dim, dim) + grid.shape)
    for j in range(dim):
        for k in range(dim):
            out[j, k] = -params.kappa_star * gg[j, k]
            if j == k:
                out[j, k] += 0.5 * params.kappa_star * (lap_rho_sq - grad_sq)
    return out


def pressure_remainder(theta: np.ndarray, params: FluidParams) -> np.ndarray:
    """Taylor-remainder pressure term: (int_0^1 P''(rho* + tau theta)(1-tau) dtau) theta^2.

    Pointwise 8-node Gauss-Legendre quadrature in tau; exact for pressure
    laws polynomial up to degree 17.
    """
    params.pressure.check_density(params.rho_star + theta)
    acc = np.zeros_like(theta)
    for tau, w in zip(GL_TAU, GL_W):
        acc += w * (1.0 - tau) * params.pressure.d2(params.rho_star + tau * theta)
    return acc * theta**2


def nonlinearity_tensor(state: State, params: FluidParams, mask: np.ndarray | None = None) -> np.ndarray:
    """The bracket tensor H with g = -Div H.

    H = (1/(rho*+theta) - 1/rho*) m x m + (1/rho*) m x m
        - S((1/(rho*+theta) - 1/rho*) m) - K(theta) + pressure_remainder I,
    assembled pseudospectrally with 2/3-rule truncation after every product.
    """
    grid = state.grid
    dim = grid.dim
    if mask is None:
        mask = dealias_mask(grid)
    rho = params.rho_star + state.theta
    if rho.min() < params.rho_star / 4.0 or rho.max() > 4.0 * params.rho_star:
        raise RangeViolation(
            f"density range [{rho.min():.6g}, {rho.max():.6g}] outside "
            f"[{params.rho_star / 4.0:.6g}, {4.0 * params.rho_star:.6g}]"
        )
    recip = ifftn(mask * fftn(1.0 / rho - 1.0 / params.rho_star)).real

    H = np.empty((dim, dim) + grid.shape)
    # momentum flux (w + 1/rho*) m x m, products truncated at each stage
    for j in range(dim):
        for k in range(j, dim):
            mm = ifftn(mask * fftn(state.m[j] * state.m[k])).real
            flux = mm / params.rho_star + ifftn(mask * fftn(recip * mm)).real
            H[j, k] = flux
            H[k, j] = flux
    # viscous part of the momentum correction
    v = np.stack([ifftn(mask * fftn(recip * state.m[j])).real for j in range(dim)])
    H -= viscous_tensor(v, params, grid)
    H -= korteweg_tensor(state.theta, params, grid, mask)
    pr = ifftn(mask * fftn(pressure_remainder(state.theta, params))).real
    for j in range(dim):
        H[j, j] += pr
    return H


def nonlinearity_g_hat(state: State, params: FluidParams, mask: np.ndarray | None = None) -> np.ndarray:
    """Spectral coefficients of g = -Div H; the zero mode vanishes identically."""
    grid = state.grid
    H = nonlinearity_tensor(state, params, mask)
    xis = grid.wavevectors()
    g_hat = np.empty((grid.dim,) + grid.shape, dtype=complex)
    for j in range(grid.dim):
        acc = np.zeros(grid.shape, dtype=complex)
        for k in range(grid.dim):
            acc += 1j * xis[k] * fftn(H[j, k])
        g_hat[j] = -acc
    return g_hat


def nonlinearity_g(state: State, params: FluidParams, mask: np.ndarray | None = None) -> np.ndarray:
    """g(theta, m) as a real vector field."""
    g_hat = nonlinearity_g_hat(state, params, mask)
    return np.stack([ifftn(g_hat[j]).real for j in range(state.grid.dim)])


@dataclass
class StepState:
    """Solver state carrying spectral and real representations together."""

    spectral: SpectralState
    real: State
    t: float

    @classmethod
    def from_state(cls, state: State, t: float = 0.0):
        return cls(spectral=to_spectral(state), real=state, t=t)


class Etd2Stepper:
    """Exponential time differencing Runge-Kutta order 2 with cached multipliers.

    One step of size h:

        a       = S(h) U_n + h phi_1(hA) N(U_n)
        U_{n+1} = a + h phi_2(hA) (N(a) - N(U_n))

    S(h) and the phi_k(hA) multiplier fields are precomputed once per (params,
    grid, h); the phi weights integrate the stiff linear part exactly, so the
    third-order capillary term costs no step-size restriction and the scheme
    holds second order uniformly in the stiffness.
    """

    def __init__(self, params: FluidParams, grid: Grid, dt: float):
        if dt <= 0:
            raise ValueError("dt > 0 required")
        self.params = params
        self.grid = grid
        self.dt = dt
        self.mask = dealias_mask(grid)
        from .symbols import phi_multiplier_tables, propagator_kernels

        self._exp = propagator_kernels(params, grid.xi_sq, dt)
        tabs = phi_multiplier_tables(params, grid.xi_sq, dt)
        self._phi1 = tabs["phi1"]
        self._phi2 = tabs["phi2"]
        self._xis = grid.wavevectors()
        self._xi_sq_safe = np.where(grid.xi_sq > 0.0, grid.xi_sq, 1.0)
        self._nonzero = grid.xi_sq > 0.0

    def propagate(self, spec: SpectralState) -> SpectralState:
        """S(dt) via the cached propagator kernels."""
        sig_tf, sig_d, sig_mg, heat = self._exp
        xi_dot_m = np.zeros(self.grid.shape, dtype=complex)
        for j in range(self.grid.dim):
            xi_dot_m += self._xis[j] * spec.m_hat[j]
        theta_hat = sig_tf * spec.theta_hat - 1j * sig_d * xi_dot_m
        long_coef = np.where(self._nonzero, (sig_mg - heat) * xi_dot_m / self._xi_sq_safe, 0.0)
        cap = self.params.kappa_star * self.params.rho_star
        m_hat = np.empty_like(spec.m_hat)
        for j in range(self.grid.dim):
            m_hat[j] = (
                heat * spec.m_hat[j]
                + self._xis[j] * long_coef
                - 1j * cap * sig_d * self.grid.xi_sq * self._xis[j] * spec.theta_hat
            )
        return SpectralState(grid=self.grid, theta_hat=theta_hat, m_hat=m_hat)

    def _forcing(self, table, g_hat):
        """h * phi_k(hA) applied to (0, g)."""
        D, B, T = table
        h = self.dt
        xi_dot_g = np.zeros(self.grid.shape, dtype=complex)
        for j in range(self.grid.dim):
            xi_dot_g += self._xis[j] * g_hat[j]
        theta_add = -1j * h * h * D * xi_dot_g
        long_coef = np.where(self._nonzero, (B - T) * xi_dot_g / self._xi_sq_safe, 0.0)
        m_add = np.empty_like(g_hat)
        for j in range(self.grid.dim):
            m_add[j] = h * (T * g_hat[j] + self._xis[j] * long_coef)
        return theta_add, m_add

    def step(self, state: StepState, nonlinear: bool = True) -> StepState:
        grid = self.grid
        if not nonlinear:
            nxt = self.propagate(state.spectral)
            return StepState(spectral=nxt, real=to_real(nxt), t=state.t + self.dt)

        g0_hat = nonlinearity_g_hat(state.real, self.params, self.mask)
        base = self.propagate(state.spectral)
        th1, m1 = self._forcing(self._phi1, g0_hat)
        stage = SpectralState(grid=grid, theta_hat=base.theta_hat + th1, m_hat=base.m_hat + m1)
        stage_real = to_real(stage)
        try:
            gp_hat = nonlinearity_g_hat(stage_real, self.params, self.mask)
        except RangeViolation as exc:
            raise StepRejected(f"stage inadmissible at t={state.t + self.dt:.6g}: {exc}", t=state.t + self.dt) from exc

        th2, m2 = self._forcing(self._phi2, gp_hat - g0_hat)
        nxt = SpectralState(grid=grid, theta_hat=stage.theta_hat + th2, m_hat=stage.m_hat + m2)
        nxt_real = to_real(nxt)
        if not nxt_real.is_admissible(self.params):
            rho = self.params.rho_star + nxt_real.theta
            raise StepRejected(
                f"state at t={state.t + self.dt:.6g} violates the range condition "
                f"(density range [{rho.min():.6g}, {rho.max():.6g}])",
                t=state.t + self.dt,
            )
        return StepState(spectral=nxt, real=nxt_real, t=state.t + self.dt)


def step(state: StepState, params: FluidParams, dt: float, *, mask: np.ndarray | None = None, nonlinear: bool = True, stepper: Etd2Stepper | None = None) -> StepState:
    """One ETD2RK step; raises StepRejected on inadmissible stages.

    Builds a throwaway stepper unless one is supplied; loops should construct
    an Etd2Stepper once and reuse it.
    """
    if stepper is None:
        stepper = Etd2Stepper(params, state.spectral.grid, dt)
    return stepper.step(state, nonlinear=nonlinear)


@dataclass(frozen=True)
class NonlinearScenario:
    """Nonlinear run configuration with the exponent bookkeeping of the theory.

    Violated exponent constraints produce 'outside theorem scope' warnings,
    never errors: the solver is happy to integrate any admissible data.
    """

    params: FluidParams
    grid: Grid
    amplitude: float
    t_end: float
    dt: float
    seed: int
    p: float = 4.0
    q1: float = 2.5
    q2: float = 15.0
    tau: float = 0.35
    theta_width: float = 2.0
    m_envelope_width: float = 2.0
    m_smooth_width: float = 1.0
    m_relative_amplitude: float = 1.0
    sample_every: int = 1
    nonlinear: bool = True

    def scope_warnings(self) -> list:
        out = []
        n, p, q1, q2, tau = self.grid.dim, self.p, self.q1, self.q2, self.tau
        if not (3 <= n <= 7):
            out.append(f"dimension N={n} outside theorem scope 3 <= N <= 7")
        if not (2.0 < p < np.inf):
            out.append(f"p={p} violates 2 < p < inf")
        if not (q1 < n < q2):
            out.append(f"(q1, q2)=({q1}, {q2}) violates q1 < N < q2")
        if not (2.0 < q1 <= 4.0):
            out.append(f"q1={q1} violates 2 < q1 <= 4")
        if abs(1.0 / q1 - (1.0 / q2 + 1.0 / n)) > 1e-9:
            out.append(f"1/q1 = 1/q2 + 1/N violated (1/{q1} vs 1/{q2} + 1/{n})")
        if not (2.0 / p + n / q2 < 1.0):
            out.append(f"2/p + N/q2 = {2.0 / p + n / q2:.3f} not < 1")
        if not (1.0 / p < tau < n / q2 + 1.0 / p):
            out.append(f"tau={tau} outside (1/p, N/q2 + 1/p)")
        return out


@dataclass
class RunResult:
    final: StepState
    bundle: dict
    aggregate: NormSeries
    events: list
    mass_drift: float
    momentum_drift: float
    symmetry_defect: float
    rejected: bool
    admissible_throughout: bool

    @property
    def success(self) -> bool:
        return (not self.rejected) and self.admissible_throughout and np.all(np.isfinite(self.aggregate.values))


_BUNDLE_KEYS = (
    "pair_linf_j0",
    "pair_linf_j1",
    "pair_q1_j0",
    "pair_q1_j1",
    "pair_q2_j0",
    "pair_q2_j1",
    "pair_w32_q1",
    "pair_w32_q2",
    "dt_pair_w10_q1",
    "dt_pair_w10_q2",
)


def _sample_norms(st: StepState, params: FluidParams, scn: NonlinearScenario, mask) -> dict:
    """All norm constituents of the aggregate at one state."""
    grid = st.spectral.grid
    dim = grid.dim
    theta, m = st.real.theta, st.real.m
    xis = grid.wavevectors()
    th_hat = st.spectral.theta_hat
    m_hat = st.spectral.m_hat

    grad_theta = np.stack([ifftn(1j * xis[a] * th_hat).real for a in range(dim)])
    grad_m = np.concatenate([[ifftn(1j * xis[a] * m_hat[c]).real for a in range(dim)] for c in range(dim)])

    out = {}
    for label, q in (("linf", np.inf), ("q1", scn.q1), ("q2", scn.q2)):
        out[f"pair_{label}_j0"] = lp_norm(theta, grid, q) + lp_norm(m, grid, q)
        out[f"pair_{label}_j1"] = lp_norm(grad_theta, grid, q) + lp_norm(grad_m, grid, q)

    # W^{3,2}_q of the pair, reusing one spectral representation per field
    derivs_theta = {}
    for order in range(0, 4):
        for alpha in multi_indices(dim, order):
            mult = np.ones((1,) * dim, dtype=complex)
            for ax, a_ in enumerate(alpha):
                if a_:
                    mult = mult * (1j * xis[ax]) ** a_
            derivs_theta[alpha] = ifftn(mult * th_hat).real if order else theta
    derivs_m = {}
    for order in range(0, 3):
        for alpha in multi_indices(dim, order):
            mult = np.ones((1,) * dim, dtype=complex)
            for ax, a_ in enumerate(alpha):
                if a_:
                    mult = mult * (1j * xis[ax]) ** a_
            derivs_m[alpha] = (
                np.stack([ifftn(mult * m_hat[c]).real for c in range(dim)]) if order else m
            )
    for label, q in (("q1", scn.q1), ("q2", scn.q2)):
        w3 = sum(lp_norm(f, grid, q) for f in derivs_theta.values())
        w2 = sum(lp_norm(f, grid, q) for f in derivs_m.values())
        out[f"pair_w32_{label}"] = w3 + w2

    # time derivatives from the equations of motion
    xi_dot_m = np.zeros(grid.shape, dtype=complex)
    for a in range(dim):
        xi_dot_m += xis[a] * m_hat[a]
    dtheta_hat = -1j * xi_dot_m
    xi_sq = grid.xi_sq
    g_hat = nonlinearity_g_hat(st.real, params, mask) if scn.nonlinear else 0.0
    dm_hat = np.empty_like(m_hat)
    for a in range(dim):
        dm_hat[a] = (
            -params.alpha_star * xi_sq * m_hat[a]
            - params.beta_star * xis[a] * xi_dot_m
            - 1j * params.kappa_star * params.rho_star * xi_sq * xis[a] * th_hat
        )
        if scn.nonlinear:
            dm_hat[a] += g_hat[a]
    dtheta = ifftn(dtheta_hat).real
    dm = np.stack([ifftn(dm_hat[a]).real for a in range(dim)])
    grad_dtheta = np.stack([ifftn(1j * xis[a] * dtheta_hat).real for a in range(dim)])
    for label, q in (("q1", scn.q1), ("q2", scn.q2)):
        out[f"dt_pair_w10_{label}"] = lp_norm(dtheta, grid, q) + lp_norm(grad_dtheta, grid, q) + lp_norm(dm, grid, q)
    return out


def run(scn: NonlinearScenario, initial: State | None = None) -> RunResult:
    """Integrate to t_end, sampling every constituent of the weighted aggregate.

    Partial results are retained up to the failure time if a step is
    rejected.  Mass and mean momentum are tracked against their initial
    values; conjugate symmetry is monitored on the final state.
    """
    from .analysis import aggregate_N
    from .fields import nonlinear_initial_state
    from .spectral import conjugate_symmetry_defect

    events = []
    for msg in scn.scope_warnings():
        warnings.warn(msg + " (outside theorem scope)", NumericsWarning, stacklevel=2)
        events.append({"t": 0.0, "kind": "scope", "message": msg})

    if initial is None:
        rng = np.random.default_rng(scn.seed)
        initial, _ = nonlinear_initial_state(
            scn.grid,
            theta_amplitude=scn.amplitude,
            theta_width=scn.theta_width,
            m_amplitude=scn.amplitude * scn.m_relative_amplitude,
            m_envelope_width=scn.m_envelope_width,
            m_smooth_width=scn.m_smooth_width,
            rng=rng,
        )
    stepper = Etd2Stepper(scn.params, scn.grid, scn.dt)
    mask = stepper.mask
    st = StepState.from_state(initial)
    mass0 = complex(st.spectral.theta_hat[(0,) * scn.grid.dim])
    mom0 = np.array([complex(st.spectral.m_hat[(c,) + (0,) * scn.grid.dim]) for c in range(scn.grid.dim)])

    n_steps = int(round(scn.t_end / scn.dt))
    times = [0.0]
    samples = [_sample_norms(st, scn.params, scn, mask)]
    admissible = st.real.is_admissible(scn.params)
    rejected = False

    for k in range(1, n_steps + 1):
        try:
            st = stepper.step(st, nonlinear=scn.nonlinear)
        except StepRejected as exc:
            events.append({"t": exc.t, "kind": "step_rejected", "message": str(exc)})
            rejected = True
            break
        if k % scn.sample_every == 0 or k == n_steps:
            times.append(st.t)
            samples.append(_sample_norms(st, scn.params, scn, mask))
            admissible = admissible and st.real.is_admissible(scn.params)

    times = np.asarray(times)
    bundle = {
        key: NormSeries(times=times, values=np.array([s[key] for s in samples]), descriptor={"name": key})
        for key in _BUNDLE_KEYS
    }
    agg_vals = np.array(
        [
            aggregate_N(bundle, scn.grid.dim, scn.p, scn.q1, scn.q2, scn.tau, t) if t > 0 else 0.0
            for t in times
        ]
    )
    aggregate = NormSeries(times=times, values=agg_vals, descriptor={"name": "aggregate_N"})

    mass1 = complex(st.spectral.theta_hat[(0,) * scn.grid.dim])
    mom1 = np.array([complex(st.spectral.m_hat[(c,) + (0,) * scn.grid.dim]) for c in range(scn.grid.dim)])
    mass_scale = max(abs(mass0), scn.grid.mode_count * 1e-3)
    mass_drift = abs(mass1 - mass0) / mass_scale
    mom_drift = float(np.max(np.abs(mom1 - mom0))) / max(float(np.max(np.abs(mom0))), mass_scale)
    sym = conjugate_symmetry_defect(st.spectral)

    return RunResult(
        final=st,
        bundle=bundle,
        aggregate=aggregate,
        events=events,
        mass_drift=float(mass_drift),
        momentum_drift=float(mom_drift),
        symmetry_defect=float(sym),
        rejected=rejected,
        admissible_throughout=admissible,
    )
