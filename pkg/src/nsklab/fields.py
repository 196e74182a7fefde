"""Initial-data generators for decay scenarios and nonlinear runs.

Decay-rate verification needs data that actually realizes the sharp
L_q -> L_p operator rate over a finite time window; a single Gaussian decays
at its own (faster) point-mass rate.  Two constructions provide the needed
``~ |xi|^-gamma`` spectral envelopes:

* truncated Matern/Riesz kernels: ``(|x-c|^2 + a^2)^(-(dim-gamma)/2)``
  windowed to a support radius, with the core's exact Bessel-K spectral
  envelope divided out again so the power-law band stays undeformed --
  localized by construction, so the wrap-around trust guards stay honest;
* Gaussian scale mixtures over a dyadic ladder of widths (spectrally
  assembled, used as curl potentials for exactly divergence-free data).

``gamma = dim/2`` is the L_2-critical profile the acceptance scenarios use.
Radial real spectral coefficients (times constant tensors or curl factors)
keep every generated field exactly conjugate-symmetric.
"""

from __future__ import annotations

import numpy as np

from .model import Grid, SpectralState, State, gaussian_bump
from .spectral import divergence_form_momentum, fftn


def _center_phase(grid: Grid, center) -> np.ndarray:
    """Translation multiplier e^{-i xi . center}."""
    if center is None:
        center = np.full(grid.dim, grid.box_len / 2.0)
    center = np.asarray(center, dtype=float)
    phase = np.zeros(grid.shape)
    for ax, xi in enumerate(grid.wavevectors()):
        phase = phase + xi * center[ax]
    return np.exp(-1j * phase)


def scale_mixture_hat(grid: Grid, gamma: float, rho_min: float, rho_max: float, per_octave: int = 2, amplitude: float = 1.0) -> np.ndarray:
    """Spectral envelope ~ amplitude * |xi|^-gamma realized by a Gaussian scale mixture.

    Returns the real nonnegative radial DFT coefficients
    ``sum_k rho_k^gamma exp(-rho_k^2 |xi|^2 / 2)`` over a dyadic ladder of
    widths rho_k in [rho_min, rho_max]; the zero mode is cleared so the field
    has zero mean.
    """
    if not (0 < rho_min < rho_max):
        raise ValueError("0 < rho_min < rho_max required")
    n_scales = max(2, int(np.ceil(per_octave * np.log2(rho_max / rho_min))) + 1)
    rhos = np.geomspace(rho_min, rho_max, n_scales)
    xi_sq = grid.xi_sq
    out = np.zeros(grid.shape)
    for rho in rhos:
        out += rho**gamma * np.exp(-0.5 * rho**2 * xi_sq)
    out *= amplitude
    out[(0,) * grid.dim] = 0.0
    return out


def _quintic01(r):
    r = np.clip(r, 0.0, 1.0)
    return r**3 * (10.0 + r * (-15.0 + 6.0 * r))


def _matern_envelope(z: np.ndarray, nu: float) -> np.ndarray:
    """Normalized UV envelope K_nu(z) z^nu / (2^(nu-1) Gamma(nu)), -> 1 as z -> 0."""
    from scipy.special import gamma as _gamma
    from scipy.special import kv

    z = np.asarray(z, dtype=float)
    out = np.ones_like(z)
    pos = z > 1e-8
    out[pos] = kv(nu, z[pos]) * z[pos] ** nu / (2.0 ** (nu - 1.0) * _gamma(nu))
    return out


def riesz_kernel_hat(grid: Grid, gamma: float, support_radius: float, *, core: float = 0.75, center=None) -> np.ndarray:
    """DFT of a compactly supported kernel with spectrum ~ |xi|^-gamma.

    Real space: (|x - c|^2 + a^2)^(-(dim-gamma)/2) with a = core*h, ramped to
    zero over the outer 55% of support_radius, so the field vanishes
    identically outside support_radius.  The core regularization is a Matern
    kernel whose exact Bessel-K spectral envelope is divided out again, so the
    |xi|^-gamma band stays undeformed up to where the grid resolves it; the
    envelope division is floored to avoid amplifying near-Nyquist content.
    The mean mode is cleared.
    """
    if center is None:
        center = np.full(grid.dim, grid.box_len / 2.0)
    center = np.asarray(center, dtype=float)
    if support_radius > grid.box_len / 2.0:
        raise ValueError("support radius exceeds half the box")
    if not (0.0 < gamma < grid.dim):
        raise ValueError("0 < gamma < dim required")
    r_sq = np.zeros(grid.shape)
    for ax, x in enumerate(grid.mesh()):
        d = np.abs(x - center[ax])
        d = np.minimum(d, grid.box_len - d)
        r_sq = r_sq + d**2
    r = np.sqrt(r_sq)
    a = core * grid.spacing
    kernel = (r_sq + a**2) ** (-(grid.dim - gamma) / 2.0)
    kernel *= 1.0 - _quintic01((r - 0.45 * support_radius) / (0.55 * support_radius))
    k_hat = fftn(kernel)
    env = _matern_envelope(a * np.sqrt(grid.xi_sq), gamma / 2.0)
    k_hat /= np.maximum(env, 0.02)
    k_hat[(0,) * grid.dim] = 0.0
    return k_hat


def riesz_momentum_pair(grid: Grid, gamma: float, support_radius: float, *, rng: np.random.Generator, amplitude: float = 1.0, center=None) -> tuple[SpectralState, SpectralState]:
    """Localized momentum pair for the divergence-form ablation.

    Divergence-form member: m = Div(T * kernel) with T a seeded constant
    symmetric tensor; generic member: m = d * kernel.  Both share the same
    scalar kernel (spectrum ~ |xi|^-gamma, support within support_radius) and
    are scaled to the same total spectral energy.
    """
    k_hat = riesz_kernel_hat(grid, gamma, support_radius, center=center) * amplitude
    T = seeded_symmetric_tensor(grid.dim, rng)
    d = rng.standard_normal(grid.dim)
    d /= np.linalg.norm(d)
    xis = grid.wavevectors()

    m_div = np.empty((grid.dim,) + grid.shape, dtype=complex)
    for j in range(grid.dim):
        acc = np.zeros(grid.shape, dtype=complex)
        for k in range(grid.dim):
            acc += 1j * xis[k] * (T[j, k] * k_hat)
        m_div[j] = acc

    m_gen = np.stack([d[j] * k_hat for j in range(grid.dim)])
    e_div = np.sqrt(np.sum(np.abs(m_div) ** 2))
    e_gen = np.sqrt(np.sum(np.abs(m_gen) ** 2))
    if e_gen > 0:
        m_gen *= e_div / e_gen

    zero = np.zeros(grid.shape, dtype=complex)
    return (
        SpectralState(grid=grid, theta_hat=zero, m_hat=m_div),
        SpectralState(grid=grid, theta_hat=zero.copy(), m_hat=m_gen),
    )


def riesz_divergence_momentum_state(grid: Grid, gamma: float, support_radius: float, *, rng: np.random.Generator, amplitude: float = 1.0, center=None) -> SpectralState:
    """Localized divergence-form momentum data (theta = 0, m = Div(T * kernel))."""
    return riesz_momentum_pair(grid, gamma, support_radius, rng=rng, amplitude=amplitude, center=center)[0]


def riesz_plain_momentum_state(grid: Grid, gamma: float, support_radius: float, *, rng: np.random.Generator, amplitude: float = 1.0, center=None) -> SpectralState:
    """Localized generic (non-divergence-form) momentum data."""
    return riesz_momentum_pair(grid, gamma, support_radius, rng=rng, amplitude=amplitude, center=center)[1]


def seeded_symmetric_tensor(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Random symmetric constant tensor with unit Frobenius norm."""
    T = rng.standard_normal((dim, dim))
    T = 0.5 * (T + T.T)
    return T / np.linalg.norm(T)



def curl_mixture_momentum_state(grid: Grid, gamma_potential: float, rho_min: float, rho_max: float, *, per_octave: int = 2, direction=None, amplitude: float = 1.0, center=None) -> SpectralState:
    """Divergence-free momentum from the curl of a Gaussian scale-mixture potential.

    |m_hat| ~ |xi|^(1 - gamma_potential) over the mixture band, assembled
    entirely in spectral space (no sampling aliasing); real-space mass stays
    within ~3.2 * rho_max of the center.  theta is identically zero under the
    linear flow of this data.
    """
    if grid.dim not in (2, 3):
        raise ValueError("curl construction implemented for dim 2 and 3")
    a_hat_prof = scale_mixture_hat(grid, gamma_potential, rho_min, rho_max, per_octave, amplitude)
    a_hat_prof = a_hat_prof * _center_phase(grid, center)
    xis = grid.wavevectors()
    m_hat = np.empty((grid.dim,) + grid.shape, dtype=complex)
    if grid.dim == 2:
        m_hat[0] = 1j * xis[1] * a_hat_prof
        m_hat[1] = -1j * xis[0] * a_hat_prof
    else:
        if direction is None:
            direction = np.array([0.36, 0.48, 0.8])
        d = np.asarray(direction, dtype=float)
        d /= np.linalg.norm(d)
        m_hat[0] = 1j * (xis[1] * d[2] - xis[2] * d[1]) * a_hat_prof
        m_hat[1] = 1j * (xis[2] * d[0] - xis[0] * d[2]) * a_hat_prof
        m_hat[2] = 1j * (xis[0] * d[1] - xis[1] * d[0]) * a_hat_prof
    return SpectralState(grid=grid, theta_hat=np.zeros(grid.shape, dtype=complex), m_hat=m_hat)


def transverse_packet(grid: Grid, width: float, direction=None, *, amplitude: float = 1.0, center=None) -> SpectralState:
    """Divergence-free momentum packet for the heat-block anchor.

    m_hat(xi) = amplitude * (I - xi xi^T/|xi|^2) v * exp(-width^2 |xi|^2 / 2),
    zero at the mean mode.  The transverse projection makes the linear flow
    of this data an exact scalar heat semigroup.
    """
    if grid.dim < 2:
        raise ValueError("transverse data needs dim >= 2")
    if direction is None:
        direction = np.zeros(grid.dim)
        direction[0] = 1.0
    v = np.asarray(direction, dtype=float)
    v = v / np.linalg.norm(v)
    xi_sq = grid.xi_sq
    prof = amplitude * np.exp(-0.5 * width**2 * xi_sq)
    xis = grid.wavevectors()
    xi_dot_v = np.zeros(grid.shape)
    for ax in range(grid.dim):
        xi_dot_v = xi_dot_v + xis[ax] * v[ax]
    phase = _center_phase(grid, center)
    safe = np.where(xi_sq > 0.0, xi_sq, 1.0)
    m_hat = np.empty((grid.dim,) + grid.shape, dtype=complex)
    for j in range(grid.dim):
        comp = prof * (v[j] - xis[j] * xi_dot_v / safe)
        comp[(0,) * grid.dim] = 0.0
        m_hat[j] = comp * phase
    return SpectralState(grid=grid, theta_hat=np.zeros(grid.shape, dtype=complex), m_hat=m_hat)


def smooth_random_field(grid: Grid, rng: np.random.Generator, smooth_width: float) -> np.ndarray:
    """Unit-scale smooth random field: white noise mollified by a spectral Gaussian."""
    noise = rng.standard_normal(grid.shape)
    filt = np.exp(-0.5 * smooth_width**2 * grid.xi_sq)
    out = np.fft.ifftn(filt * fftn(noise)).real
    peak = np.max(np.abs(out))
    return out / peak if peak > 0 else out


def enveloped_random_tensor(grid: Grid, rng: np.random.Generator, *, envelope_width: float, smooth_width: float, amplitude: float, center=None) -> np.ndarray:
    """Gaussian-enveloped random smooth symmetric tensor field (nonlinear M0 data)."""
    if center is None:
        center = np.full(grid.dim, grid.box_len / 2.0)
    env = gaussian_bump(grid, center, envelope_width, 1.0)
    M0 = np.empty((grid.dim, grid.dim) + grid.shape)
    for j in range(grid.dim):
        for k in range(j, grid.dim):
            comp = amplitude * env * smooth_random_field(grid, rng, smooth_width)
            M0[j, k] = comp
            M0[k, j] = comp
    return M0


def nonlinear_initial_state(grid: Grid, *, theta_amplitude: float, theta_width: float, m_amplitude: float, m_envelope_width: float, m_smooth_width: float, rng: np.random.Generator, center=None) -> tuple[State, np.ndarray]:
    """Initial (theta, m) with m = Div M0; returns the state and M0."""
    if center is None:
        center = np.full(grid.dim, grid.box_len / 2.0)
    theta = gaussian_bump(grid, center, theta_width, theta_amplitude)
    M0 = enveloped_random_tensor(
        grid,
        rng,
        envelope_width=m_envelope_width,
        smooth_width=m_smooth_width,
        amplitude=m_amplitude,
        center=center,
    )
    m = divergence_form_momentum(M0, grid)
    return State(grid=grid, theta=theta, m=m), M0


