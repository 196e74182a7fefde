"""Physical parameters, pressure laws, grid geometry and field containers.

Conventions used throughout the toolkit:

* the periodic box is ``[0, L)^dim`` with ``n`` points per axis,
  so the grid spacing is ``h = L/n``;
* the wavevector of index ``k`` along one axis is ``(2*pi/L) * k'`` where
  ``k'`` is the signed alias of ``k`` in ``[-n/2, n/2)``;
* spectral coefficients are raw unnormalized DFT values (forward transform
  carries no scale, the inverse carries ``1/n^dim``); all norms carry
  explicit quadrature weights so that Parseval holds exactly on the grid.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from .errors import ConstraintViolation, CriticalityViolation, GridMismatch, NumericsWarning

CRITICALITY_RTOL = 1e-12
DEGENERACY_RTOL = 1e-9


@dataclass(frozen=True)
class PressureLaw:
    """A pressure law given as the triple (P, P', P'') on a validity interval.

    The callables must accept and return numpy arrays (or floats).  The two
    derivatives are checked against centered finite differences of
    ``evaluate`` when the law is attached to parameters; supplying an
    inconsistent triple is rejected there.
    """

    evaluate: Callable
    d1: Callable
    d2: Callable
    validity: tuple[float, float]

    def __post_init__(self):
        lo, hi = self.validity
        if not (0.0 < lo < hi):
            raise ConstraintViolation("pressure validity interval requires 0 < rho_min < rho_max")

    def check_density(self, rho):
        """Raise ValidityExceeded if any density leaves the validity interval."""
        from .errors import ValidityExceeded

        lo, hi = self.validity
        rmin = float(np.min(rho))
        rmax = float(np.max(rho))
        if rmin < lo or rmax > hi:
            raise ValidityExceeded(
                f"density range [{rmin:.6g}, {rmax:.6g}] leaves pressure validity "
                f"interval ({lo:.6g}, {hi:.6g})"
            )


def critical_quadratic(k: float, rho_star: float, validity=None) -> PressureLaw:
    """Built-in family P(rho) = k * (rho - rho_star)^2, critical at rho_star exactly."""
    if validity is None:
        validity = (rho_star / 10.0, 10.0 * rho_star)
    return PressureLaw(
        evaluate=lambda rho: k * (rho - rho_star) ** 2,
        d1=lambda rho: 2.0 * k * (rho - rho_star),
        d2=lambda rho: 2.0 * k * np.ones_like(np.asarray(rho, dtype=float)),
        validity=validity,
    )


def _check_derivative_consistency(pressure: PressureLaw, rho_star: float):
    """Gate: d1/d2 must agree with centered differences of evaluate to O(h^2).

    Compares errors at h and h/2: a consistent derivative shrinks by ~4x
    (or sits at rounding level); an inconsistent one stalls at its offset.
    """
    lo, hi = pressure.validity
    span = hi - lo
    pts = lo + span * np.array([0.15, 0.35, 0.5, 0.65, 0.85])
    if lo < rho_star < hi:
        pts = np.append(pts, rho_star)
    scale = max(1.0, float(np.max(np.abs(pressure.evaluate(pts)))))
    for name, deriv, base in (("P'", pressure.d1, pressure.evaluate), ("P''", pressure.d2, pressure.d1)):
        h1 = 1e-4 * span
        for rho in pts:
            if not (lo + 2 * h1 < rho < hi - 2 * h1):
                continue
            claimed = float(deriv(rho))
            fd1 = (float(base(rho + h1)) - float(base(rho - h1))) / (2 * h1)
            fd2 = (float(base(rho + h1 / 2)) - float(base(rho - h1 / 2))) / h1
            e1 = abs(claimed - fd1)
            e2 = abs(claimed - fd2)
            floor = 1e-7 * scale / span + 1e-10 * abs(claimed)
            if e2 > max(0.5 * e1, floor):
                raise ConstraintViolation(
                    f"pressure law {name} disagrees with finite differences of its "
                    f"antiderivative at rho={rho:.6g} (err {e2:.3g} at h={h1 / 2:.3g})"
                )


@dataclass(frozen=True)
class FluidParams:
    """Validated fluid constants with derived per-density coefficients cached.

    mu_star, nu_star are the viscosities, kappa_star the capillarity and
    rho_star the reference density; alpha_star = mu*/rho*, beta_star =
    nu*/rho* and delta_star = (alpha*+beta*)^2/4 - rho* kappa* are derived.
    Construct through :func:`make_params`.
    """

    mu_star: float
    nu_star: float
    kappa_star: float
    rho_star: float
    pressure: PressureLaw
    alpha_star: float = field(init=False)
    beta_star: float = field(init=False)
    delta_star: float = field(init=False)

    def __post_init__(self):
        if not (self.mu_star > 0.0):
            raise ConstraintViolation("mu_star > 0")
        if not (self.mu_star + self.nu_star > 0.0):
            raise ConstraintViolation("mu_star + nu_star > 0")
        if not (self.kappa_star > 0.0):
            raise ConstraintViolation("kappa_star > 0")
        if not (self.rho_star > 0.0):
            raise ConstraintViolation("rho_star > 0")
        _check_derivative_consistency(self.pressure, self.rho_star)
        p1 = float(self.pressure.d1(self.rho_star))
        p2 = float(self.pressure.d2(self.rho_star))
        if abs(p1) > CRITICALITY_RTOL * max(1.0, abs(p2)):
            raise CriticalityViolation(
                f"P'(rho_star) = {p1:.6g} is not zero (tolerance "
                f"{CRITICALITY_RTOL:g} * max(1, |P''(rho_star)|))"
            )
        alpha = self.mu_star / self.rho_star
        beta = self.nu_star / self.rho_star
        if not (np.isfinite(alpha) and np.isfinite(beta)):
            raise ConstraintViolation("alpha_star, beta_star must be finite")
        object.__setattr__(self, "alpha_star", alpha)
        object.__setattr__(self, "beta_star", beta)
        object.__setattr__(self, "delta_star", (alpha + beta) ** 2 / 4.0 - self.rho_star * self.kappa_star)


def make_params(mu, nu, kappa, rho_ref, pressure: PressureLaw) -> FluidParams:
    """Validate the constants and return FluidParams with derived values cached."""
    return FluidParams(
        mu_star=float(mu),
        nu_star=float(nu),
        kappa_star=float(kappa),
        rho_star=float(rho_ref),
        pressure=pressure,
    )


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on [0, L)^dim with n (a power of two) points per axis."""

    dim: int
    box_len: float
    n: int

    def __post_init__(self):
        if not (1 <= self.dim <= 4):
            raise ConstraintViolation("1 <= dim <= 4")
        if self.n < 2 or (self.n & (self.n - 1)) != 0:
            raise ConstraintViolation("n must be a power of two >= 2")
        if not (self.box_len > 0.0):
            raise ConstraintViolation("box_len > 0")

    @property
    def spacing(self) -> float:
        return self.box_len / self.n

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.dim

    @property
    def mode_count(self) -> int:
        return self.n**self.dim

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    @property
    def volume(self) -> float:
        return self.box_len**self.dim

    @property
    def xi_max(self) -> float:
        """Largest resolved |xi| along one axis (the Nyquist magnitude pi*n/L)."""
        return np.pi * self.n / self.box_len

    def axis_coords(self) -> np.ndarray:
        return np.arange(self.n) * self.spacing

    def mesh(self) -> list:
        """Real-space coordinate arrays, open-meshgrid (broadcastable)."""
        x = self.axis_coords()
        return list(np.ix_(*([x] * self.dim)))

    def axis_aliases(self) -> np.ndarray:
        """Signed integer aliases k' in [-n/2, n/2) in DFT storage order."""
        return np.fft.fftfreq(self.n, d=1.0 / self.n).astype(np.int64)

    @cached_property
    def _axis_wavenumbers(self) -> np.ndarray:
        return (2.0 * np.pi / self.box_len) * self.axis_aliases().astype(float)

    def wavevectors(self) -> list:
        """Per-axis wavevector arrays, broadcastable to the full spectral shape."""
        k = self._axis_wavenumbers
        out = []
        for ax in range(self.dim):
            shape = [1] * self.dim
            shape[ax] = self.n
            out.append(k.reshape(shape))
        return out

    @cached_property
    def xi_sq(self) -> np.ndarray:
        """|xi|^2 on the full spectral grid."""
        xs = self.wavevectors()
        out = np.zeros(self.shape)
        for x in xs:
            out = out + x**2
        return out

    def wavevector_of_index(self, idx) -> np.ndarray:
        """Wavevector of a multi-index (bijective with the mode set)."""
        k = self._axis_wavenumbers
        return np.array([k[i] for i in idx])


def _as_field(grid: Grid, arr, name: str) -> np.ndarray:
    arr = np.asarray(arr)
    if arr.shape != grid.shape:
        raise GridMismatch(f"{name} has shape {arr.shape}, expected {grid.shape}")
    return arr


def _as_vector_field(grid: Grid, arr, name: str) -> np.ndarray:
    arr = np.asarray(arr)
    if arr.shape != (grid.dim,) + grid.shape:
        raise GridMismatch(f"{name} has shape {arr.shape}, expected {(grid.dim,) + grid.shape}")
    return arr


@dataclass(frozen=True)
class State:
    """Real-space fields: scalar density perturbation theta and momentum m."""

    grid: Grid
    theta: np.ndarray
    m: np.ndarray

    def __post_init__(self):
        theta = _as_field(self.grid, self.theta, "theta").astype(float, copy=False)
        m = _as_vector_field(self.grid, self.m, "m").astype(float, copy=False)
        if not np.all(np.isfinite(theta)) or not np.all(np.isfinite(m)):
            raise ConstraintViolation("state entries must be finite")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "m", m)

    def density(self, params: FluidParams) -> np.ndarray:
        return params.rho_star + self.theta

    def is_admissible(self, params: FluidParams) -> bool:
        """Range condition rho*/4 <= rho* + theta <= 4 rho* at every point."""
        rho = self.density(params)
        return bool(rho.min() >= params.rho_star / 4.0 and rho.max() <= 4.0 * params.rho_star)


@dataclass(frozen=True)
class SpectralState:
    """Complex DFT coefficients of (theta, m); the representation the semigroup acts on."""

    grid: Grid
    theta_hat: np.ndarray
    m_hat: np.ndarray

    def __post_init__(self):
        th = _as_field(self.grid, self.theta_hat, "theta_hat").astype(complex, copy=False)
        mh = _as_vector_field(self.grid, self.m_hat, "m_hat").astype(complex, copy=False)
        if not np.all(np.isfinite(th)) or not np.all(np.isfinite(mh)):
            raise ConstraintViolation("spectral entries must be finite")
        object.__setattr__(self, "theta_hat", th)
        object.__setattr__(self, "m_hat", mh)


def gaussian_bump(grid: Grid, center, width: float, amplitude: float) -> np.ndarray:
    """amplitude * exp(-|x - center|^2 / (2 width^2)), sampled periodically.

    The periodic distance uses the minimum image per axis, so the value at
    the center is exactly ``amplitude``.
    """
    if width <= 0:
        raise ConstraintViolation("width > 0")
    if width < 2.0 * grid.spacing:
        warnings.warn(
            f"gaussian width {width:g} is under 2 grid spacings ({grid.spacing:g}); "
            "the bump is marginally resolved",
            NumericsWarning,
            stacklevel=2,
        )
    if width > grid.box_len / 4.0:
        warnings.warn(
            f"gaussian width {width:g} exceeds a quarter of the box ({grid.box_len:g}); "
            "periodic images overlap",
            NumericsWarning,
            stacklevel=2,
        )
    center = np.asarray(center, dtype=float)
    if center.shape != (grid.dim,):
        raise GridMismatch(f"center has shape {center.shape}, expected ({grid.dim},)")
    L = grid.box_len
    r_sq = np.zeros(grid.shape)
    for ax, x in enumerate(grid.mesh()):
        d = np.abs(x - center[ax])
        d = np.minimum(d, L - d)
        r_sq = r_sq + d**2
    return amplitude * np.exp(-r_sq / (2.0 * width**2))
