"""Fourier machinery on the periodic square.

Fields are stored as complex Fourier coefficients on the full ``N x N``
lattice in numpy FFT ordering, normalised so that ``coeffs = fft2(f) / N**2``.
With that convention Parseval reads ``mean(|f|**2) = sum(|coeffs|**2)``, so every
L2 norm below is the mean-square norm on the torus and does not depend on N.

The zero mode never lives inside ``coeffs``; it is carried in the separate
``mean`` register.  Nyquist modes (index ``-N/2`` on either axis) are kept at
zero so that real fields have an exactly Hermitian spectrum.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
import scipy.fft as sfft

__all__ = [
    "PSI_PROFILE_ID",
    "Grid",
    "SpectralField",
    "build_grid",
    "psi",
    "phi",
    "smooth_step",
    "eval_cutoffs",
    "dyadic_block",
    "partition_residual",
    "friedrichs_mask",
    "friedrichs_project",
    "lambda_pow",
    "hodge_split",
    "hodge_assemble",
    "is_hermitian",
    "to_padded",
    "from_padded",
    "dealiased_product",
    "linf_norm",
]

PSI_LOW = 3.0 / 4.0
PSI_HIGH = 4.0 / 3.0

# Identifies the cutoff transition in output metadata.
PSI_PROFILE_ID = "expbump-ratio(3/4,4/3)"


def _bump(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1, monotone in between."""
    t = np.asarray(t, dtype=float)
    a = _bump(t)
    b = _bump(1.0 - t)
    return a / (a + b)


def psi(r):
    """Radial low-pass cutoff: 1 on [0, 3/4], 0 on [4/3, inf)."""
    r = np.asarray(r, dtype=float)
    return smooth_step((PSI_HIGH - r) / (PSI_HIGH - PSI_LOW))


def phi(r):
    """Annular cutoff ``psi(r/2) - psi(r)``, supported in [3/4, 8/3]."""
    r = np.asarray(r, dtype=float)
    return psi(0.5 * r) - psi(r)


def eval_cutoffs(xi_norm: float) -> tuple[float, float]:
    """Return ``(psi, phi)`` at the frequency magnitude ``xi_norm``."""
    if xi_norm < 0:
        raise ValueError(f"xi_norm must be nonnegative, got {xi_norm}")
    return float(psi(xi_norm)), float(phi(xi_norm))


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Periodic ``N x N`` lattice of side ``L``.

    Frequencies are ``xi = (2 pi / L) * (m1, m2)`` with ``m_i`` in ``[-N/2, N/2)``.
    ``k_min``/``k_max`` bracket the dyadic bands that meet the resolvable
    (nonzero, non-Nyquist) lattice.
    """

    N: int
    L: float

    def __post_init__(self):
        if not isinstance(self.N, (int, np.integer)) or not _is_power_of_two(int(self.N)):
            raise ValueError(f"N must be a power of two, got {self.N!r}")
        if self.N < 8:
            raise ValueError(f"N must be at least 8, got {self.N}")
        if not self.L > 0:
            raise ValueError(f"L must be positive, got {self.L!r}")

    @property
    def dk(self) -> float:
        return 2.0 * np.pi / self.L

    @cached_property
    def m(self) -> np.ndarray:
        return np.rint(np.fft.fftfreq(self.N) * self.N).astype(int)

    @cached_property
    def kx(self) -> np.ndarray:
        return (self.dk * self.m)[:, None] * np.ones((1, self.N))

    @cached_property
    def ky(self) -> np.ndarray:
        return np.ones((self.N, 1)) * (self.dk * self.m)[None, :]

    @cached_property
    def msq(self) -> np.ndarray:
        m = self.m
        return m[:, None] ** 2 + m[None, :] ** 2

    @cached_property
    def kmag(self) -> np.ndarray:
        return self.dk * np.sqrt(self.msq)

    @cached_property
    def active(self) -> np.ndarray:
        """Boolean mask of modes a field may occupy (no zero mode, no Nyquist)."""
        nyq = -(self.N // 2)
        keep = (self.m != nyq)[:, None] & (self.m != nyq)[None, :]
        keep[0, 0] = False
        return keep

    @cached_property
    def kmag_safe(self) -> np.ndarray:
        out = self.kmag.copy()
        out[0, 0] = 1.0
        return out

    @cached_property
    def radii(self) -> np.ndarray:
        return np.unique(self.kmag[self.active])

    @cached_property
    def k_min(self) -> int:
        return int(np.ceil(np.log2(3.0 * self.radii[0] / 8.0)))

    @cached_property
    def k_max(self) -> int:
        return int(np.floor(np.log2(4.0 * self.radii[-1] / 3.0)))

    @property
    def bands(self) -> range:
        return range(self.k_min, self.k_max + 1)

    @cached_property
    def band_filters(self) -> np.ndarray:
        """``phi(2^-k |xi|)`` for every band, shape ``(n_bands, N, N)``."""
        out = np.empty((len(self.bands), self.N, self.N))
        for i, k in enumerate(self.bands):
            out[i] = np.where(self.active, phi(self.kmag * 2.0 ** (-k)), 0.0)
        return out

    def band_filter(self, k: int) -> np.ndarray:
        if self.k_min <= k <= self.k_max:
            return self.band_filters[k - self.k_min]
        return np.where(self.active, phi(self.kmag * 2.0 ** (-k)), 0.0)

    @cached_property
    def shell_index(self) -> tuple[np.ndarray, np.ndarray]:
        """Distinct lattice radii and, per point, the index of its radius."""
        sq, inv = np.unique(self.msq, return_inverse=True)
        return self.dk * np.sqrt(sq), inv.reshape(self.N, self.N)

    @cached_property
    def _shell_band_weights(self) -> np.ndarray:
        # phi(2^-k r)^2 for every (band, distinct radius)
        radii, _ = self.shell_index
        return np.stack([phi(radii * 2.0 ** (-k)) ** 2 for k in self.bands])

    def band_power(self, coeffs: np.ndarray) -> np.ndarray:
        """``||Delta_k f||^2`` for every band, accumulated shell by shell."""
        _, inv = self.shell_index
        sq = self._shell_band_weights
        p = np.where(self.active, coeffs.real**2 + coeffs.imag**2, 0.0)
        return sq @ np.bincount(inv.ravel(), weights=p.ravel(), minlength=sq.shape[1])

    def band_support(self, k: int) -> np.ndarray:
        """Flat indices of the lattice points where ``phi(2^-k |xi|) > 0``."""
        cache = self.__dict__.setdefault("_support_cache", {})
        if k not in cache:
            cache[k] = np.flatnonzero(self.band_filter(k))
        return cache[k]

    @property
    def M(self) -> int:
        """Side of the 3/2-padded grid used for products."""
        return 3 * self.N // 2

    @cached_property
    def _pad_index(self) -> tuple[np.ndarray, np.ndarray]:
        keep = self.m != -(self.N // 2)
        src = np.nonzero(keep)[0]
        dst = self.m[keep] % self.M
        return src, dst

    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        """Physical collocation points, ``x1`` along axis 0."""
        x = np.arange(self.N) * self.L / self.N
        return np.meshgrid(x, x, indexing="ij")


def build_grid(N: int, L: float = 16.0 * np.pi) -> Grid:
    """Validate and build a :class:`Grid` (default side ``16 pi``)."""
    return Grid(int(N), float(L))


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Real scalar field held as Fourier coefficients plus a mean register."""

    grid: Grid
    coeffs: np.ndarray
    mean: float = 0.0

    @classmethod
    def zeros(cls, grid: Grid) -> "SpectralField":
        return cls(grid, np.zeros((grid.N, grid.N), dtype=complex), 0.0)

    @classmethod
    def from_physical(cls, grid: Grid, values: np.ndarray) -> "SpectralField":
        c = sfft.fft2(np.asarray(values, dtype=float)) / grid.N**2
        mean = float(c[0, 0].real)
        return cls(grid, np.where(grid.active, c, 0.0), mean)

    @classmethod
    def plane_wave(cls, grid: Grid, m1: int, m2: int, amplitude: float = 1.0,
                   phase: float = 0.0) -> "SpectralField":
        """``amplitude * cos(xi . x + phase)`` with ``xi = dk * (m1, m2)``."""
        c = np.zeros((grid.N, grid.N), dtype=complex)
        c[m1 % grid.N, m2 % grid.N] += 0.5 * amplitude * np.exp(1j * phase)
        c[-m1 % grid.N, -m2 % grid.N] += 0.5 * amplitude * np.exp(-1j * phase)
        return cls(grid, np.where(grid.active, c, 0.0))

    def to_physical(self) -> np.ndarray:
        return sfft.ifft2(self.coeffs).real * self.grid.N**2 + self.mean

    def norm(self) -> float:
        """L2 (mean-square) norm of the fluctuation; the mean is excluded."""
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2)))

    def inner(self, other: "SpectralField") -> float:
        _check_same_grid(self, other)
        return float(np.sum((np.conj(self.coeffs) * other.coeffs).real))

    def with_coeffs(self, coeffs: np.ndarray, mean: float | None = None) -> "SpectralField":
        return SpectralField(self.grid, coeffs, self.mean if mean is None else mean)

    def __add__(self, other: "SpectralField") -> "SpectralField":
        _check_same_grid(self, other)
        return SpectralField(self.grid, self.coeffs + other.coeffs, self.mean + other.mean)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        _check_same_grid(self, other)
        return SpectralField(self.grid, self.coeffs - other.coeffs, self.mean - other.mean)

    def __mul__(self, scalar: float) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs * scalar, self.mean * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField":
        return self * -1.0


def _check_same_grid(*fields: SpectralField) -> None:
    g = fields[0].grid
    for f in fields[1:]:
        if f.grid != g:
            raise ValueError(f"grid mismatch: {g} vs {f.grid}")


def is_hermitian(coeffs: np.ndarray, atol: float = 0.0) -> bool:
    """True when ``coeffs[-m] == conj(coeffs[m])`` for every lattice point."""
    flipped = np.roll(np.flip(coeffs, (0, 1)), 1, (0, 1))
    return bool(np.all(np.abs(flipped - np.conj(coeffs)) <= atol))


def dyadic_block(f: SpectralField, k: int) -> SpectralField:
    """Littlewood-Paley block: multiply by ``phi(2^-k |xi|)``; mean dropped."""
    return SpectralField(f.grid, f.coeffs * f.grid.band_filter(k), 0.0)


def partition_residual(grid: Grid, phi_fn: Callable | None = None) -> float:
    """Max over resolvable ``xi`` of ``|sum_k phi(2^-k xi) - 1|``.

    ``phi_fn`` substitutes the annular cutoff (used for negative controls); the
    sum then runs over the same band range as the grid's own.
    """
    r = grid.kmag[grid.active]
    if phi_fn is None:
        total = np.sum(grid.band_filters, axis=0)[grid.active]
    else:
        total = np.zeros_like(r)
        for k in grid.bands:
            total = total + phi_fn(r * 2.0 ** (-k))
    return float(np.max(np.abs(total - 1.0)))


def friedrichs_mask(grid: Grid, n: int) -> np.ndarray:
    """Indicator of ``1/n <= |xi| <= n`` restricted to active modes."""
    if n is None or int(n) != n or n < 1:
        raise ValueError(f"Friedrichs index must be a positive integer, got {n!r}")
    k = grid.kmag
    return grid.active & (k >= 1.0 / n) & (k <= n)


def friedrichs_project(f: SpectralField, n: int) -> SpectralField:
    """Sharp spectral truncation ``J_n``; idempotent, kills the mean."""
    return SpectralField(f.grid, np.where(friedrichs_mask(f.grid, n), f.coeffs, 0.0), 0.0)


def lambda_pow(f: SpectralField, s: float) -> SpectralField:
    """Fourier multiplier ``|xi|**s``.

    For ``s <= 0`` the field must be mean-free, since the multiplier is singular
    (or the identity, for ``s == 0``, which we still treat as homogeneous) at
    the origin. For ``s > 0`` the mean is annihilated.
    """
    if s <= 0 and f.mean != 0.0:
        raise ValueError("lambda_pow with s <= 0 needs a mean-free field")
    mult = np.where(f.grid.active, f.grid.kmag_safe ** s, 0.0)
    return SpectralField(f.grid, f.coeffs * mult, 0.0)


def hodge_split(u1: SpectralField, u2: SpectralField) -> tuple[SpectralField, SpectralField]:
    """Potentials ``c = Lambda^-1 div u`` and ``d = Lambda^-1 div_perp u``."""
    _check_same_grid(u1, u2)
    if u1.mean != 0.0 or u2.mean != 0.0:
        raise ValueError("hodge_split needs mean-free velocity components")
    c, d = hodge_split_coeffs(u1.grid, u1.coeffs, u2.coeffs)
    return SpectralField(u1.grid, c), SpectralField(u1.grid, d)


def hodge_assemble(c: SpectralField, d: SpectralField) -> tuple[SpectralField, SpectralField]:
    """Velocity ``u = -Lambda^-1 grad c - Lambda^-1 grad_perp d``."""
    _check_same_grid(c, d)
    if c.mean != 0.0 or d.mean != 0.0:
        raise ValueError("hodge_assemble needs mean-free potentials")
    u1, u2 = hodge_assemble_coeffs(c.grid, c.coeffs, d.coeffs)
    return SpectralField(c.grid, u1), SpectralField(c.grid, u2)


def hodge_split_coeffs(grid: Grid, u1: np.ndarray, u2: np.ndarray):
    kx, ky, r = grid.kx, grid.ky, grid.kmag_safe
    c = 1j * (kx * u1 + ky * u2) / r
    d = 1j * (-ky * u1 + kx * u2) / r
    c[0, 0] = 0.0
    d[0, 0] = 0.0
    return c, d


def hodge_assemble_coeffs(grid: Grid, c: np.ndarray, d: np.ndarray):
    kx, ky, r = grid.kx, grid.ky, grid.kmag_safe
    u1 = 1j * (-kx * c + ky * d) / r
    u2 = 1j * (-ky * c - kx * d) / r
    u1[0, 0] = 0.0
    u2[0, 0] = 0.0
    return u1, u2


def to_padded(grid: Grid, coeffs: np.ndarray, mean: float = 0.0) -> np.ndarray:
    """Physical values on the 3/2-padded collocation grid."""
    src, dst = grid._pad_index
    M = grid.M
    pad = np.zeros((M, M), dtype=complex)
    pad[np.ix_(dst, dst)] = coeffs[np.ix_(src, src)]
    pad[0, 0] = mean
    return sfft.ifft2(pad).real * M**2


def from_padded(grid: Grid, values: np.ndarray) -> tuple[np.ndarray, float]:
    """Back from the padded grid: truncated coefficients and the mean."""
    src, dst = grid._pad_index
    M = grid.M
    pad = sfft.fft2(values) / M**2
    out = np.zeros((grid.N, grid.N), dtype=complex)
    out[np.ix_(src, src)] = pad[np.ix_(dst, dst)]
    mean = float(out[0, 0].real)
    out[0, 0] = 0.0
    return out, mean


def dealiased_product(f: SpectralField, g: SpectralField) -> SpectralField:
    """Pointwise product evaluated with the 3/2 zero-padding rule."""
    _check_same_grid(f, g)
    grid = f.grid
    prod = to_padded(grid, f.coeffs, f.mean) * to_padded(grid, g.coeffs, g.mean)
    coeffs, mean = from_padded(grid, prod)
    return SpectralField(grid, coeffs, mean)


def linf_norm(f: SpectralField) -> float:
    """Max |f| sampled on the padded collocation grid."""
    return float(np.max(np.abs(to_padded(f.grid, f.coeffs, f.mean))))
