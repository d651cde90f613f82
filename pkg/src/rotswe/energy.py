"""Per-band energy functionals, coercivity windows and decay-rate fits.

For a band ``k`` with blocks ``(h_k, c_k, d_k)`` the functional is

    alpha_k^2 = g/hbar0 |h_k|^2 + beta/hbar0 |Lambda h_k|^2 + |c_k|^2 + |d_k|^2
                - 2 K (Lambda^m h_k, c_k)

with ``m = 1`` and ``K = K1`` for ``k > 0`` and ``m = 3``, ``K = K2`` for
``k <= 0``.  Inner products are real L2 pairings evaluated by Parseval.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .model import SweParams, SweState, linear_symbols
from .spectral import Grid
from .trajectory import Trajectory

__all__ = [
    "EnergyWeights",
    "BandEnergyReport",
    "admissible_K",
    "default_weights",
    "alpha_k_energy",
    "theta_k_energy",
    "component_energy",
    "coercivity_constants",
    "alpha_series",
    "fit_rate",
    "fit_decay_rate",
    "shell_decay_rate",
    "rate_scale",
    "weight_V",
    "write_energy_csv",
]

HIGH, LOW = "high", "low"


def admissible_K(params: SweParams, regime: str) -> tuple[float, tuple[float, float, float]]:
    """Upper end of the coupling window and the Young constants at ``K = upper/2``.

    ``regime`` is ``"high"`` (bands ``k > 0``) or ``"low"`` (``k <= 0``).  With
    ``f_cor = 0`` the rotation-limited term is dropped and the middle Young
    constant is infinite.
    """
    p = params
    for name in ("hbar0", "mu", "grav", "beta"):
        if not getattr(p, name) > 0:
            raise ValueError(f"{name} must be positive")
    # divisions by f ordered so tiny f overflows to inf instead of dividing by zero
    root = math.sqrt(p.beta / p.hbar0)
    visc = 4.0 * p.mu * p.beta / (p.hbar0 * p.beta + 5.0 * p.mu**2)
    if regime == HIGH:
        terms = [visc, 2.0 / 3.0 * root]
        if p.f_cor > 0:
            terms.append(9.0 * p.mu * p.grav / (4.0 * p.f_cor) / p.f_cor)
        upper = min(terms)
        K = 0.5 * upper
        m2 = p.f_cor / (4 * p.grav) + 9 * p.mu / (16 * p.f_cor) / K if p.f_cor > 0 else math.inf
        return upper, (5.0 * p.mu / (2.0 * p.beta), m2, 2.0 / 3.0 * root)
    if regime == LOW:
        terms = [9.0 / 64.0 * visc, 9.0 / 64.0 * root]
        if p.f_cor > 0:
            terms.append(4.0 * p.mu * p.grav / p.f_cor / p.f_cor)
        upper = min(terms)
        K = 0.5 * upper
        m5 = p.f_cor / (4 * p.grav) + p.mu / p.f_cor / K if p.f_cor > 0 else math.inf
        return upper, (5.0 * p.mu / (2.0 * p.beta), m5, 9.0 / 64.0 * root)
    raise ValueError(f"regime must be 'high' or 'low', got {regime!r}")


@dataclass(frozen=True)
class EnergyWeights:
    regime: str
    K: float
    params: SweParams

    def __post_init__(self):
        upper, _ = admissible_K(self.params, self.regime)
        if not (0.0 <= self.K < upper):
            raise ValueError(f"K = {self.K} outside the admissible window [0, {upper})")

    @property
    def power(self) -> int:
        return 1 if self.regime == HIGH else 3


def default_weights(params: SweParams, k: int, fraction: float = 0.5) -> EnergyWeights:
    """Weights for band ``k`` with ``K`` at ``fraction`` of the admissible bound."""
    regime = HIGH if k > 0 else LOW
    upper, _ = admissible_K(params, regime)
    return EnergyWeights(regime, fraction * upper, params)


def _blocks(state: SweState, k: int):
    # restricted to the band support; returns blocks and |xi| there
    g = state.grid
    idx = g.band_support(k)
    w = g.band_filter(k).ravel()[idx]
    blocks = tuple(w * f.coeffs.ravel()[idx] for f in (state.h, state.c, state.d))
    return blocks, g.kmag.ravel()[idx]


def _pair(a: np.ndarray, b: np.ndarray, mult=1.0) -> float:
    return float(np.sum(mult * (a.real * b.real + a.imag * b.imag)))


def alpha_k_energy(state: SweState, k: int, w: EnergyWeights) -> float:
    """Value of ``alpha_k^2`` on the dyadic blocks of ``state``."""
    if w.K != 0.0 and (w.regime == HIGH) != (k > 0):
        raise ValueError(f"{w.regime}-frequency weights used on band k = {k}")
    p = w.params
    (h, c, d), r = _blocks(state, k)
    return (p.grav / p.hbar0 * _pair(h, h) + p.beta / p.hbar0 * _pair(h, h, r**2)
            + _pair(c, c) + _pair(d, d) - 2.0 * w.K * _pair(h, c, r**w.power))


def theta_k_energy(state: SweState, k: int, params: SweParams) -> float:
    """``g/hbar0 |h_k|^2 + |c_k|^2 + |d_k|^2``."""
    (h, c, d), _ = _blocks(state, k)
    return params.grav / params.hbar0 * _pair(h, h) + _pair(c, c) + _pair(d, d)


def component_energy(state: SweState, k: int) -> float:
    """Reference quadratic form ``|h_k|^2 + |Lambda h_k|^2 + |c_k|^2 + |d_k|^2``."""
    (h, c, d), r = _blocks(state, k)
    return _pair(h, h) + _pair(h, h, r**2) + _pair(c, c) + _pair(d, d)


def coercivity_constants(states: Iterable[SweState], k: int, w: EnergyWeights) -> tuple[float, float]:
    """Measured ``(c_lo, c_hi)`` with ``c_lo S <= alpha_k^2 <= c_hi S`` on ``states``."""
    ratios = []
    for st in states:
        s = component_energy(st, k)
        if s > 0:
            ratios.append(alpha_k_energy(st, k, w) / s)
    if not ratios:
        raise ValueError(f"band {k} is empty on every supplied state")
    return float(min(ratios)), float(max(ratios))


def alpha_series(traj: Trajectory, k: int, w: EnergyWeights) -> tuple[np.ndarray, np.ndarray]:
    times = np.array([t for t, _ in traj.snapshots])
    vals = np.array([alpha_k_energy(s, k, w) for _, s in traj.snapshots])
    return times, vals


def fit_rate(times, values, floor: float = 1e-20, discard: float = 0.1) -> float:
    """Least-squares exponential decay rate of a positive series.

    Samples from the first one at or below ``floor`` onwards are ignored, and
    the first ``discard`` fraction of the remaining prefix is treated as
    transient.
    """
    times = np.asarray(times, dtype=float)
    vals = np.asarray(values, dtype=float)
    if not np.any(vals > 0):
        raise ValueError("series carries no energy")
    below = np.nonzero(vals <= floor)[0]
    stop = below[0] if below.size else len(vals)
    t, v = times[:stop], vals[:stop]
    start = int(math.floor(discard * len(t)))
    t, v = t[start:], v[start:]
    if len(t) < 3:
        raise ValueError(f"too few usable samples ({len(t)})")
    return float(-np.polyfit(t, np.log(v), 1)[0])


def fit_decay_rate(traj: Trajectory, k: int, w: EnergyWeights, floor: float = 1e-20,
                   discard: float = 0.1) -> float:
    """Fitted decay rate of ``alpha_k^2`` over the trajectory snapshots."""
    times, vals = alpha_series(traj, k, w)
    if not np.any(vals > 0):
        raise ValueError(f"band {k} carries no energy")
    return fit_rate(times, vals, floor, discard)


def shell_decay_rate(r: float, params: SweParams) -> float:
    """Decay rate of a squared amplitude on shell ``r``: ``-2 max Re eig A(r)``."""
    ev = np.linalg.eigvals(linear_symbols(np.array([r]), params)[0])
    return float(-2.0 * np.max(ev.real))


def rate_scale(k: int) -> float:
    """``2^{2k} min(1, 2^{2k})``."""
    return 4.0**k * min(1.0, 4.0**k)


def weight_V(traj: Trajectory, t: float) -> float:
    """``int_0^t ||u||_{B^2} dtau`` by the left-endpoint rule on the step grid."""
    times = traj.time_array()
    if t < times[0] - 1e-12 or t > times[-1] + 1e-12:
        raise ValueError(f"t = {t} outside trajectory span")
    ks = traj.k_values
    norms = traj.table("u") @ (2.0 ** (2.0 * ks))
    total = 0.0
    for i in range(len(times) - 1):
        if times[i] >= t:
            break
        total += norms[i] * (min(times[i + 1], t) - times[i])
    return float(total)


@dataclass(frozen=True)
class BandEnergyReport:
    k: int
    regime: str
    K: float
    alpha_sq_initial: float
    decay_rate: float
    rate_over_scale: float
    c_lo: float
    c_hi: float
    theta_sq_initial: float = float("nan")


def write_energy_csv(path: str | Path, reports: Iterable[BandEnergyReport]) -> None:
    cols = ["k", "regime", "K", "alpha_sq_initial", "decay_rate", "rate_over_scale", "c_lo", "c_hi"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for r in reports:
            w.writerow([r.k, r.regime, repr(r.K), repr(r.alpha_sq_initial), repr(r.decay_rate),
                        repr(r.rate_over_scale), repr(r.c_lo), repr(r.c_hi)])


def band_grid_check(grid: Grid, k: int) -> None:
    if not grid.k_min <= k <= grid.k_max:
        raise ValueError(f"band {k} not resolvable on {grid}")
