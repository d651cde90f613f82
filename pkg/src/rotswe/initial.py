"""Seeded initial-data generators.

Random coefficients are drawn per lattice mode ``(m1, m2)`` on a square box
whose size depends only on the frequency support and the period ``L``.  Two
grids with the same ``L`` therefore receive identical coefficients on the
modes they share, which is what grid-refinement comparisons need.
"""

from __future__ import annotations

import math

import numpy as np

from .model import SweState
from .spectral import Grid, SpectralField, phi, psi, to_padded

__all__ = [
    "RECIPES",
    "mode_noise",
    "single_band_state",
    "correlated_band_state",
    "single_shell_state",
    "shell_radius_for_band",
    "random_smooth_state",
    "gradient_only_state",
    "divergence_free_state",
    "make_initial",
]

RECIPES = ("single-band", "single-shell", "random-smooth", "gradient-only", "divergence-free-only")


def mode_noise(grid: Grid, rng: np.random.Generator, r_max: float) -> np.ndarray:
    """Hermitian complex Gaussian coefficients on active modes with ``|xi| <= r_max``.

    Exactly one ``(2B+1)^2`` complex draw is consumed from ``rng``, with
    ``B = ceil(r_max / dk)``, whatever ``N`` is.
    """
    B = int(math.ceil(r_max / grid.dk))
    z = rng.standard_normal((2 * B + 1, 2 * B + 1)) + 1j * rng.standard_normal((2 * B + 1, 2 * B + 1))
    z = 0.5 * (z + np.conj(z[::-1, ::-1]))
    m = grid.m
    inside = np.abs(m) <= B
    out = np.zeros((grid.N, grid.N), dtype=complex)
    rows = np.nonzero(inside)[0]
    out[np.ix_(rows, rows)] = z[np.ix_(m[rows] + B, m[rows] + B)]
    keep = grid.active & (grid.kmag <= r_max)
    return np.where(keep, out, 0.0)


def _field(grid: Grid, coeffs: np.ndarray) -> SpectralField:
    return SpectralField(grid, coeffs)


def single_band_state(grid: Grid, k: int, rng: np.random.Generator, amplitude: float = 1.0) -> SweState:
    """Random ``(h, c, d)`` whose spectrum is weighted by ``phi(2^-k |xi|)``.

    Each component is scaled to L2 norm ``amplitude`` (unless the band misses
    the lattice entirely).
    """
    w = grid.band_filter(k)
    r_max = 8.0 / 3.0 * 2.0**k
    comps = []
    for _ in range(3):
        a = mode_noise(grid, rng, r_max) * w
        n = np.sqrt(np.sum(np.abs(a) ** 2))
        comps.append(a * (amplitude / n) if n > 0 else a)
    return SweState(*(_field(grid, a) for a in comps))


def correlated_band_state(grid: Grid, k: int, rng: np.random.Generator, power: int,
                          amplitude: float = 1.0) -> SweState:
    """Single-band state whose ``c`` is partly aligned with ``Lambda^power h``.

    A random ``t`` in ``[-1, 1]`` sets ``c = |c| (t e + sqrt(1 - t^2) n)`` with
    ``e`` the unit vector along ``Lambda^power h`` and ``n`` random, so the
    cross term of the band energy is exercised with both signs.
    """
    base = single_band_state(grid, k, rng, amplitude)
    t = rng.uniform(-1.0, 1.0)
    lh = base.h.coeffs * grid.kmag**power
    nl = np.sqrt(np.sum(np.abs(lh) ** 2))
    if nl == 0:
        return base
    c = amplitude * (t * lh / nl + math.sqrt(1.0 - t * t) * base.c.coeffs / amplitude)
    return SweState(base.h, _field(grid, c), base.d)


def shell_radius_for_band(grid: Grid, k: int) -> float:
    """Lattice radius best inside band ``k``.

    Maximises ``phi(2^-k r)``; ties (the plateau where ``phi = 1``) go to the
    radius closest to ``1.4 * 2^k``.
    """
    r = grid.radii
    w = phi(r * 2.0 ** (-k))
    if not np.any(w > 0):
        raise ValueError(f"band {k} does not meet the lattice of {grid}")
    best = np.max(w)
    cand = r[w >= best - 1e-15]
    return float(cand[np.argmin(np.abs(cand - 1.4 * 2.0**k))])


def single_shell_state(grid: Grid, radius: float, rng: np.random.Generator,
                       amplitude: float = 1.0) -> SweState:
    """Random ``(h, c, d)`` living on the lattice points with ``|xi| = radius``."""
    on = grid.active & np.isclose(grid.kmag, radius, rtol=1e-12, atol=0.0)
    if not np.any(on):
        raise ValueError(f"no lattice point at |xi| = {radius}")
    comps = []
    for _ in range(3):
        a = np.where(on, mode_noise(grid, rng, radius * (1 + 1e-9)), 0.0)
        comps.append(a * (amplitude / np.sqrt(np.sum(np.abs(a) ** 2))))
    return SweState(*(_field(grid, a) for a in comps))


def _envelope(grid: Grid, slope: float, r0: float, r_cut: float) -> np.ndarray:
    r = grid.kmag
    env = (1.0 + (r / r0) ** 2) ** (-0.5 * slope) * psi(r / r_cut)
    return np.where(grid.active, env, 0.0)


def _sup_amplitude(state: SweState) -> float:
    g = state.grid
    u1, u2 = state.velocity()
    sup = [np.max(np.abs(to_padded(g, f.coeffs))) for f in (state.h, u1, u2)]
    return float(max(sup))


def _normalise(state: SweState, amplitude: float) -> SweState:
    a = _sup_amplitude(state)
    return state.scaled(amplitude / a) if a > 0 else state


def random_smooth_state(grid: Grid, rng: np.random.Generator, amplitude: float, slope: float = 2.0,
                        r0: float = 1.0, r_cut: float = 4.0, components=("h", "c", "d"),
                        axis: int | None = None) -> SweState:
    """Smooth random data with ``max(sup|h|, sup|u|) = amplitude``.

    The spectrum is ``(1 + (|xi|/r0)^2)^(-slope/2)`` times ``psi(|xi|/r_cut)``,
    so every field is band-limited to ``|xi| < 4 r_cut / 3`` independently of
    the grid.  ``axis`` restricts the data to depend on ``x1`` (0) or ``x2`` (1)
    only.  Components not listed in ``components`` are zero.
    """
    env = _envelope(grid, slope, r0, r_cut)
    if axis is not None:
        line = (grid.m == 0)
        env = env * (line[None, :] if axis == 0 else line[:, None])
    r_max = 4.0 / 3.0 * r_cut
    comps = {}
    for name in ("h", "c", "d"):
        a = mode_noise(grid, rng, r_max) * env
        comps[name] = a if name in components else np.zeros_like(a)
    state = SweState(*(_field(grid, comps[n]) for n in ("h", "c", "d")))
    return _normalise(state, amplitude)


def gradient_only_state(grid: Grid, rng: np.random.Generator, amplitude: float, **kw) -> SweState:
    """Curl-free velocity (``d = 0``) with random height."""
    return random_smooth_state(grid, rng, amplitude, components=("h", "c"), **kw)


def divergence_free_state(grid: Grid, rng: np.random.Generator, amplitude: float, **kw) -> SweState:
    """Divergence-free velocity (``c = 0``) over a flat surface (``h = 0``)."""
    return random_smooth_state(grid, rng, amplitude, components=("d",), **kw)


def make_initial(grid: Grid, recipe: str, rng: np.random.Generator, amplitude: float,
                 slope: float = 2.0, r0: float = 1.0, r_cut: float = 4.0,
                 band: int = 0, axis: int | None = None) -> SweState:
    """Dispatch on the recipe name used in run configurations."""
    smooth = dict(slope=slope, r0=r0, r_cut=r_cut, axis=axis)
    if recipe == "random-smooth":
        return random_smooth_state(grid, rng, amplitude, **smooth)
    if recipe == "gradient-only":
        return gradient_only_state(grid, rng, amplitude, **smooth)
    if recipe == "divergence-free-only":
        return divergence_free_state(grid, rng, amplitude, **smooth)
    if recipe == "single-band":
        return single_band_state(grid, band, rng, amplitude)
    if recipe == "single-shell":
        return single_shell_state(grid, shell_radius_for_band(grid, band), rng, amplitude)
    raise ValueError(f"unknown recipe {recipe!r}; expected one of {RECIPES}")
