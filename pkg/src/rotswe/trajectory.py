"""Time histories: per-step band norms plus full-state snapshots at probes."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .spectral import Grid, SpectralField


def band_norms(grid: Grid, coeffs: np.ndarray) -> np.ndarray:
    """``||Delta_k f||_L2`` for every band of the grid, via Parseval."""
    return np.sqrt(grid.band_power(coeffs))


@dataclass
class Trajectory:
    """Discrete trajectory on a fixed grid.

    ``times`` holds every integrator step (including ``t = 0``), and
    ``band_norms[name]`` the matching ``(len(times), n_bands)`` tables of
    ``||Delta_k .||_L2``.  The names used by the solver are ``h``, ``c``, ``d``
    and ``u`` (the velocity, with ``||Delta_k u||^2 = ||Delta_k c||^2 +
    ||Delta_k d||^2``).  ``snapshots`` keeps full states at probe times only;
    ``scalars`` holds optional per-step observables aligned with ``times``.
    """

    grid: Grid
    times: list[float] = field(default_factory=list)
    band_norms: dict[str, list[np.ndarray]] = field(default_factory=dict)
    snapshots: list[tuple[float, Any]] = field(default_factory=list)
    scalars: dict[str, list[float]] = field(default_factory=dict)
    status: str = "ok"
    info: dict[str, Any] = field(default_factory=dict)

    @property
    def k_values(self) -> np.ndarray:
        return np.arange(self.grid.k_min, self.grid.k_max + 1)

    def __len__(self) -> int:
        return len(self.times)

    def record(self, t: float, **norms: np.ndarray) -> None:
        self.times.append(float(t))
        for name, values in norms.items():
            self.band_norms.setdefault(name, []).append(np.asarray(values, dtype=float))

    def table(self, name: str) -> np.ndarray:
        return np.asarray(self.band_norms[name])

    def time_array(self) -> np.ndarray:
        return np.asarray(self.times)

    @property
    def final_state(self):
        return self.snapshots[-1][1] if self.snapshots else None

    @classmethod
    def from_fields(cls, fields: list[SpectralField], times, name: str = "f") -> "Trajectory":
        """Wrap a sequence of scalar snapshots as a single-quantity trajectory."""
        if not fields:
            raise ValueError("need at least one snapshot")
        traj = cls(fields[0].grid)
        for f, t in zip(fields, times, strict=True):
            traj.record(t, **{name: band_norms(f.grid, f.coeffs)})
            traj.snapshots.append((float(t), f))
        return traj
