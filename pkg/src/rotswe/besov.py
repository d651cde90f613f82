"""Homogeneous, hybrid and Chemin-Lerner norms built from dyadic blocks.

Only the ``(2, 1)`` Besov scale is implemented: each block is measured in L2
and the weighted blocks are summed.  Hybrid norms weight band ``k <= 0`` by
``2^{ks}`` and ``k > 0`` by ``2^{kt}``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .spectral import PSI_PROFILE_ID, Grid, SpectralField, dealiased_product, linf_norm
from .trajectory import Trajectory, band_norms

__all__ = [
    "HybridIndex",
    "CLAccumulator",
    "NormRow",
    "band_weights",
    "besov_norm",
    "hybrid_norm",
    "cl_accumulate",
    "cl_finalize",
    "es_norm",
    "es_history",
    "lp_of_norms",
    "cl_norm",
    "check_product_estimate",
    "check_interpolation",
    "write_norm_csv",
]


@dataclass(frozen=True)
class HybridIndex:
    """Low-frequency exponent ``s`` (bands ``k <= 0``), high-frequency ``t``."""

    s: float
    t: float

    def __post_init__(self):
        if not (math.isfinite(self.s) and math.isfinite(self.t)):
            raise ValueError(f"hybrid indices must be finite, got ({self.s}, {self.t})")


def band_weights(ks: np.ndarray, idx: HybridIndex) -> np.ndarray:
    ks = np.asarray(ks, dtype=float)
    return np.where(ks <= 0, 2.0 ** (ks * idx.s), 2.0 ** (ks * idx.t))


def _weighted_sum(grid: Grid, norms: np.ndarray, idx: HybridIndex) -> float:
    ks = np.arange(grid.k_min, grid.k_max + 1)
    # fixed left-to-right order keeps results reproducible
    return float(np.sum(band_weights(ks, idx) * norms))


def hybrid_norm(f: SpectralField, idx: HybridIndex) -> float:
    """``sum_{k<=0} 2^{ks}||Delta_k f|| + sum_{k>0} 2^{kt}||Delta_k f||``."""
    return _weighted_sum(f.grid, band_norms(f.grid, f.coeffs), idx)


def besov_norm(f: SpectralField, s: float) -> float:
    """Homogeneous ``B^s_{2,1}`` norm (the mean register is ignored)."""
    return hybrid_norm(f, HybridIndex(s, s))


@dataclass
class CLAccumulator:
    """Running per-band ``L^p``-in-time accumulator for Chemin-Lerner norms.

    For finite ``p`` each band holds ``sum ||Delta_k f(t_i)||^p dt_i`` (left
    endpoint rule); for ``p = inf`` it holds the running maximum.
    """

    grid: Grid
    p: float
    values: np.ndarray = field(init=False)
    T: float = field(default=0.0, init=False)
    n_snapshots: int = field(default=0, init=False)

    def __post_init__(self):
        if not (self.p >= 1):
            raise ValueError(f"time exponent must lie in [1, inf], got {self.p}")
        self.values = np.zeros(len(self.grid.bands))

    def accumulate_norms(self, norms: np.ndarray, dt: float) -> "CLAccumulator":
        if dt < 0:
            raise ValueError(f"dt must be nonnegative, got {dt}")
        norms = np.asarray(norms, dtype=float)
        if math.isinf(self.p):
            np.maximum(self.values, norms, out=self.values)
        else:
            self.values += norms**self.p * dt
        self.T += dt
        self.n_snapshots += 1
        return self

    def per_band(self) -> np.ndarray:
        if self.n_snapshots == 0:
            raise ValueError("empty accumulator")
        if math.isinf(self.p):
            return self.values.copy()
        return self.values ** (1.0 / self.p)


def cl_accumulate(acc: CLAccumulator, f_snapshot: SpectralField, dt: float) -> CLAccumulator:
    """Fold the snapshot ``f(t)`` held over ``[t, t + dt)`` into ``acc``."""
    if f_snapshot.grid != acc.grid:
        raise ValueError("snapshot grid does not match accumulator grid")
    return acc.accumulate_norms(band_norms(f_snapshot.grid, f_snapshot.coeffs), dt)


def cl_finalize(acc: CLAccumulator, idx: HybridIndex) -> float:
    return _weighted_sum(acc.grid, acc.per_band(), idx)


def _time_weights(times: np.ndarray) -> np.ndarray:
    # left rule: row i covers [t_i, t_{i+1}); the last row carries no weight
    dt = np.zeros_like(times)
    dt[:-1] = np.diff(times)
    return dt


def _upto(traj: Trajectory, t: float | None) -> int:
    times = traj.time_array()
    if t is None:
        return len(times)
    if t < times[0] - 1e-12 or t > times[-1] + 1e-12:
        raise ValueError(f"t = {t} outside trajectory span [{times[0]}, {times[-1]}]")
    return int(np.searchsorted(times, t + 1e-12 * max(1.0, abs(t)), side="right"))


def cl_norm(traj: Trajectory, name: str, idx: HybridIndex, p: float,
            t: float | None = None) -> float:
    """``||f||`` in the Chemin-Lerner space ``L~^p_T(B^{s,t})``, ``T = t``."""
    n = _upto(traj, t)
    if n == 0:
        raise ValueError("empty trajectory")
    table = traj.table(name)[:n]
    dts = _time_weights(traj.time_array()[:n])
    acc = CLAccumulator(traj.grid, p)
    for row, dt in zip(table, dts):
        acc.accumulate_norms(row, dt)
    return cl_finalize(acc, idx)


def lp_of_norms(traj: Trajectory, name: str, idx: HybridIndex, p: float,
                t: float | None = None) -> float:
    """``||f||_{L^p_T(B^{s,t})}``: time norm of the instantaneous hybrid norms."""
    n = _upto(traj, t)
    table = traj.table(name)[:n]
    ks = traj.k_values
    inst = table @ band_weights(ks, idx)
    if math.isinf(p):
        return float(np.max(inst))
    dts = _time_weights(traj.time_array()[:n])
    return float(np.sum(inst**p * dts) ** (1.0 / p))


def _es_terms(s: float):
    return (
        ("h", HybridIndex(s - 1.0, s), math.inf),
        ("u", HybridIndex(s - 1.0, s - 1.0), math.inf),
        ("h", HybridIndex(s + 3.0, s + 2.0), 1.0),
        ("u", HybridIndex(s + 1.0, s + 1.0), 1.0),
    )


def es_norm(traj: Trajectory, s: float, t: float | None = None) -> float:
    """Energy-space norm of ``(h, u)`` on ``[0, t]``.

    Sum of ``h`` in ``L~^inf(B^{s-1,s})``, ``u`` in ``L~^inf(B^{s-1})``, ``h`` in
    ``L^1(B^{s+3,s+2})`` and ``u`` in ``L^1(B^{s+1})``.
    """
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    return sum(cl_norm(traj, name, idx, p, t) for name, idx, p in _es_terms(s))


def es_history(traj: Trajectory, s: float) -> np.ndarray:
    """``es_norm(traj, s, t_i)`` for every recorded time, vectorised."""
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    times = traj.time_array()
    ks = traj.k_values
    out = np.zeros(len(times))
    for name, idx, p in _es_terms(s):
        table = traj.table(name)
        w = band_weights(ks, idx)
        if math.isinf(p):
            per_band = np.maximum.accumulate(table, axis=0)
        else:
            steps = np.diff(times)[:, None] * table[:-1]
            per_band = np.vstack([np.zeros((1, table.shape[1])), np.cumsum(steps, axis=0)])
        out += per_band @ w
    return out


def check_product_estimate(f: SpectralField, g: SpectralField, idx: HybridIndex) -> float:
    """Ratio ``||fg|| / (|f|_inf ||g|| + ||f|| |g|_inf)`` in ``B^{s1,s2}``.

    The estimate only asserts that this ratio is bounded; callers record the
    empirical maximum.  ``L^inf`` is sampled on the padded collocation grid.
    """
    if not (idx.s > 0 and idx.t > 0):
        raise ValueError("product estimate needs positive indices")
    fg = dealiased_product(f, g)
    denom = linf_norm(f) * hybrid_norm(g, idx) + hybrid_norm(f, idx) * linf_norm(g)
    if denom == 0.0:
        raise ZeroDivisionError("product estimate denominator vanishes")
    return hybrid_norm(fg, idx) / denom


def check_interpolation(traj: Trajectory, theta: float, idx: HybridIndex, p: float,
                        idx1: HybridIndex, p1: float, idx2: HybridIndex, p2: float,
                        name: str = "f") -> float:
    """Ratio ``||f||_{p,idx} / (||f||_{p1,idx1}^theta ||f||_{p2,idx2}^(1-theta))``.

    Norms are Chemin-Lerner norms over the whole trajectory.  Raises if the
    exponents are not related by convex combination.
    """
    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"theta must lie in [0, 1], got {theta}")
    inv = lambda q: 0.0 if math.isinf(q) else 1.0 / q  # noqa: E731
    checks = (
        (inv(p), theta * inv(p1) + (1 - theta) * inv(p2)),
        (idx.s, theta * idx1.s + (1 - theta) * idx2.s),
        (idx.t, theta * idx1.t + (1 - theta) * idx2.t),
    )
    for lhs, rhs in checks:
        if abs(lhs - rhs) > 1e-12 * max(1.0, abs(lhs)):
            raise ValueError("interpolation exponents are not a convex combination")
    num = cl_norm(traj, name, idx, p)
    n1 = cl_norm(traj, name, idx1, p1)
    n2 = cl_norm(traj, name, idx2, p2)
    if theta == 1.0:
        return num / n1
    if theta == 0.0:
        return num / n2
    return num / (n1**theta * n2 ** (1.0 - theta))


@dataclass(frozen=True)
class NormRow:
    quantity: str
    s: float
    t: float
    p: float
    T: float
    value: float
    grid_N: int
    grid_L: float
    psi_profile_id: str = PSI_PROFILE_ID


def write_norm_csv(path: str | Path, rows: Iterable[NormRow]) -> None:
    cols = ["quantity", "s", "t", "p", "T", "value", "grid_N", "grid_L", "psi_profile_id"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for r in rows:
            w.writerow([r.quantity, repr(r.s), repr(r.t), repr(r.p), repr(r.T),
                        repr(r.value), r.grid_N, repr(r.grid_L), r.psi_profile_id])
