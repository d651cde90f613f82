"""Viscous rotating shallow water with capillarity, in Hodge variables.

The unknowns are the height perturbation ``h`` (total depth ``hbar0 + h``)
and the velocity potentials ``c = Lambda^-1 div u``, ``d = Lambda^-1 div_perp u``.
Per Fourier mode with ``r = |xi|`` the linear part is

    dh/dt = -hbar0 r c
    dc/dt = (g r + beta r^3) h - 4 mu r^2 c + f d
    dd/dt = -f c - mu r^2 d

and the nonlinear part collects transport, ``-h div u`` and the quasilinear
viscous correction ``2 mu (D(u) grad h + grad h div u) / zeta(h + hbar0)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .spectral import (
    Grid,
    SpectralField,
    friedrichs_mask,
    from_padded,
    hodge_assemble_coeffs,
    hodge_split_coeffs,
    smooth_step,
    to_padded,
)

__all__ = [
    "SweParams",
    "SweState",
    "Tendency",
    "NonFiniteError",
    "zeta",
    "linear_symbol",
    "linear_symbols",
    "nonlinear_terms",
    "full_rhs",
]


class NonFiniteError(FloatingPointError):
    """Raised when a tendency evaluation produces NaN or Inf."""


@dataclass(frozen=True)
class SweParams:
    """Physical constants (dimensionless) and the Friedrichs index.

    ``n_fried = None`` switches the spectral truncation off.
    """

    hbar0: float = 1.0
    mu: float = 1.0
    f_cor: float = 1.0
    grav: float = 1.0
    beta: float = 1.0
    n_fried: int | None = None

    def __post_init__(self):
        for name in ("hbar0", "mu", "grav", "beta"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive, got {v!r}")
        if not (math.isfinite(self.f_cor) and self.f_cor >= 0):
            raise ValueError(f"f_cor must be nonnegative, got {self.f_cor!r}")
        if self.n_fried is not None and (int(self.n_fried) != self.n_fried or self.n_fried < 1):
            raise ValueError(f"n_fried must be a positive integer or None, got {self.n_fried!r}")

    def with_(self, **changes) -> "SweParams":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return {"hbar0": self.hbar0, "mu": self.mu, "f_cor": self.f_cor,
                "grav": self.grav, "beta": self.beta, "n_fried": self.n_fried}


@dataclass(frozen=True, eq=False)
class SweState:
    h: SpectralField
    c: SpectralField
    d: SpectralField
    u_mean: tuple[float, float] = (0.0, 0.0)
    time: float = 0.0

    @property
    def grid(self) -> Grid:
        return self.h.grid

    @classmethod
    def zeros(cls, grid: Grid) -> "SweState":
        z = SpectralField.zeros(grid)
        return cls(z, z, z)

    @classmethod
    def from_arrays(cls, grid: Grid, y: np.ndarray, h_mean: float = 0.0,
                    u_mean=(0.0, 0.0), time: float = 0.0) -> "SweState":
        return cls(SpectralField(grid, y[0], h_mean), SpectralField(grid, y[1]),
                   SpectralField(grid, y[2]), (float(u_mean[0]), float(u_mean[1])), float(time))

    @classmethod
    def from_velocity(cls, h: SpectralField, u1: SpectralField, u2: SpectralField,
                      time: float = 0.0) -> "SweState":
        """Hodge-split a physical velocity; its means go to ``u_mean``."""
        c, d = hodge_split_coeffs(h.grid, u1.coeffs, u2.coeffs)
        return cls(h, SpectralField(h.grid, c), SpectralField(h.grid, d),
                   (u1.mean, u2.mean), time)

    def arrays(self) -> np.ndarray:
        return np.stack([self.h.coeffs, self.c.coeffs, self.d.coeffs])

    def velocity(self) -> tuple[SpectralField, SpectralField]:
        u1, u2 = hodge_assemble_coeffs(self.grid, self.c.coeffs, self.d.coeffs)
        return (SpectralField(self.grid, u1, self.u_mean[0]),
                SpectralField(self.grid, u2, self.u_mean[1]))

    def scaled(self, a: float) -> "SweState":
        return SweState(self.h * a, self.c * a, self.d * a,
                        (a * self.u_mean[0], a * self.u_mean[1]), self.time)

    def project(self, n: int | None) -> "SweState":
        """Apply ``J_n`` to every component (no-op for ``n = None``)."""
        if n is None:
            return self
        mask = friedrichs_mask(self.grid, n)
        y = np.where(mask, self.arrays(), 0.0)
        return SweState.from_arrays(self.grid, y, 0.0, self.u_mean, self.time)


@dataclass(frozen=True, eq=False)
class Tendency:
    dh: SpectralField
    dc: SpectralField
    dd: SpectralField
    du_mean: tuple[float, float]

    def arrays(self) -> np.ndarray:
        return np.stack([self.dh.coeffs, self.dc.coeffs, self.dd.coeffs])


def zeta(x, hbar0: float):
    """Smooth positive floor/ceiling for the depth ``hbar0 + h``.

    Equals ``hbar0/4`` below ``hbar0/4``, the identity on
    ``[hbar0/2, 3 hbar0/2]`` and ``7 hbar0/4`` above ``7 hbar0/4``; monotone.
    """
    x = np.asarray(x, dtype=float)
    lo, hi = 0.25 * hbar0, 1.75 * hbar0
    w_lo = smooth_step((x - lo) / (0.25 * hbar0))
    w_hi = smooth_step((x - 1.5 * hbar0) / (0.25 * hbar0))
    out = (1.0 - w_lo) * lo + w_lo * x
    out = (1.0 - w_hi) * out + w_hi * hi
    return out if out.ndim else float(out)


def linear_symbol(xi_norm: float, params: SweParams) -> np.ndarray:
    """3x3 generator acting on ``(h, c, d)`` at frequency magnitude ``xi_norm``."""
    if xi_norm < 0:
        raise ValueError(f"xi_norm must be nonnegative, got {xi_norm}")
    return linear_symbols(np.array([xi_norm], dtype=float), params)[0]


def linear_symbols(radii: np.ndarray, params: SweParams) -> np.ndarray:
    r = np.asarray(radii, dtype=float)
    p = params
    A = np.zeros(r.shape + (3, 3))
    A[..., 0, 1] = -p.hbar0 * r
    A[..., 1, 0] = p.grav * r + p.beta * r**3
    A[..., 1, 1] = -4.0 * p.mu * r**2
    A[..., 1, 2] = p.f_cor
    A[..., 2, 1] = -p.f_cor
    A[..., 2, 2] = -p.mu * r**2
    return A


class _Pieces(NamedTuple):
    adv_h: np.ndarray
    adv_c: np.ndarray
    F: np.ndarray
    div_H: np.ndarray  # Lambda^-1 div H
    curl_H: np.ndarray  # Lambda^-1 div_perp H
    zeta_active: bool


def _output_mask(grid: Grid, params: SweParams) -> np.ndarray:
    return grid.active if params.n_fried is None else friedrichs_mask(grid, params.n_fried)


def _nonlinear_pieces(grid: Grid, y: np.ndarray, h_mean: float, u_mean, params: SweParams) -> _Pieces:
    kx, ky = grid.kx, grid.ky
    h_hat, c_hat, d_hat = y
    u1_hat, u2_hat = hodge_assemble_coeffs(grid, c_hat, d_hat)

    def phys(a, mean=0.0):
        return to_padded(grid, a, mean)

    h = phys(h_hat, h_mean)
    u1 = phys(u1_hat, u_mean[0])
    u2 = phys(u2_hat, u_mean[1])
    h1, h2 = phys(1j * kx * h_hat), phys(1j * ky * h_hat)
    c1, c2 = phys(1j * kx * c_hat), phys(1j * ky * c_hat)
    u11, u12 = phys(1j * kx * u1_hat), phys(1j * ky * u1_hat)
    u21, u22 = phys(1j * kx * u2_hat), phys(1j * ky * u2_hat)

    div_u = u11 + u22
    depth = h + params.hbar0
    zeta_active = bool(np.min(depth) < 0.5 * params.hbar0 or np.max(depth) > 1.5 * params.hbar0)
    inv_depth = 1.0 / zeta(depth, params.hbar0)

    # D(u) grad h with D_ij = (d_j u_i + d_i u_j) / 2
    s12 = 0.5 * (u12 + u21)
    visc1 = 2.0 * params.mu * (u11 * h1 + s12 * h2 + h1 * div_u) * inv_depth
    visc2 = 2.0 * params.mu * (s12 * h1 + u22 * h2 + h2 * div_u) * inv_depth
    H1 = -(u1 * u11 + u2 * u12) + visc1
    H2 = -(u1 * u21 + u2 * u22) + visc2

    def spec(a):
        return from_padded(grid, a)[0]

    H1_hat, H2_hat = spec(H1), spec(H2)
    div_H, curl_H = hodge_split_coeffs(grid, H1_hat, H2_hat)
    return _Pieces(
        adv_h=spec(u1 * h1 + u2 * h2),
        adv_c=spec(u1 * c1 + u2 * c2),
        F=spec(-h * div_u),
        div_H=div_H,
        curl_H=curl_H,
        zeta_active=zeta_active,
    )


def _check_finite(*arrays: np.ndarray) -> None:
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NonFiniteError("non-finite value in nonlinear terms")


def nonlinear_terms(state: SweState, params: SweParams) -> tuple[SpectralField, SpectralField, SpectralField]:
    """Return ``(F, G, P)`` with ``F = -h div u``, ``G = u.grad c + Lambda^-1 div H``
    and ``P = Lambda^-1 div_perp H``, projected by ``J_n`` when it is on."""
    grid = state.grid
    pc = _nonlinear_pieces(grid, state.arrays(), state.h.mean, state.u_mean, params)
    mask = _output_mask(grid, params)
    F = np.where(mask, pc.F, 0.0)
    G = np.where(mask, pc.adv_c + pc.div_H, 0.0)
    P = np.where(mask, pc.curl_H, 0.0)
    _check_finite(F, G, P)
    return SpectralField(grid, F), SpectralField(grid, G), SpectralField(grid, P)


def apply_linear(grid: Grid, y: np.ndarray, params: SweParams) -> np.ndarray:
    """Mode-wise action of the linear generator on stacked ``(h, c, d)``."""
    r = grid.kmag
    p = params
    h, c, d = y
    return np.stack([
        -p.hbar0 * r * c,
        (p.grav * r + p.beta * r**3) * h - 4.0 * p.mu * r**2 * c + p.f_cor * d,
        -p.f_cor * c - p.mu * r**2 * d,
    ])


def nonlinear_tendency(grid: Grid, y: np.ndarray, h_mean: float, u_mean,
                       params: SweParams) -> tuple[np.ndarray, bool]:
    """Nonlinear part of the right-hand side, stacked as ``(h, c, d)``.

    The transport term ``J_n(u.grad c)`` appears on both sides of the ``c``
    equation and cancels, leaving ``J_n Lambda^-1 div H``.
    """
    pc = _nonlinear_pieces(grid, y, h_mean, u_mean, params)
    mask = _output_mask(grid, params)
    out = np.where(mask, np.stack([pc.F - pc.adv_h, pc.div_H, pc.curl_H]), 0.0)
    _check_finite(out)
    return out, pc.zeta_active


def mean_velocity_tendency(u_mean, f_cor: float) -> tuple[float, float]:
    """Zero-mode Coriolis term ``-f u_perp`` with ``u_perp = (-u2, u1)``."""
    return (f_cor * u_mean[1], -f_cor * u_mean[0])


def full_rhs(state: SweState, params: SweParams, nonlinear: bool = True) -> Tendency:
    """Complete tendency of the (optionally Friedrichs-truncated) system."""
    grid = state.grid
    y = state.arrays()
    out = apply_linear(grid, y, params)
    if nonlinear:
        nl, _ = nonlinear_tendency(grid, y, state.h.mean, state.u_mean, params)
        out = out + nl
    out = np.where(_output_mask(grid, params), out, 0.0)
    return Tendency(SpectralField(grid, out[0]), SpectralField(grid, out[1]),
                    SpectralField(grid, out[2]), mean_velocity_tendency(state.u_mean, params.f_cor))
