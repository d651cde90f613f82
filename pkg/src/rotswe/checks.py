"""Fast built-in property suite behind the ``check`` command.

Each check returns ``(passed, measured_value)``; all run on small grids in a
few seconds.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .besov import HybridIndex, check_interpolation
from .energy import alpha_k_energy, default_weights
from .initial import random_smooth_state, single_band_state
from .integrator import StepControl, integrate
from .model import SweParams
from .spectral import (
    SpectralField,
    build_grid,
    friedrichs_project,
    hodge_assemble,
    hodge_split,
    lambda_pow,
    partition_residual,
)
from .trajectory import Trajectory

__all__ = ["CHECKS", "run_checks"]


def _partition():
    r = max(partition_residual(build_grid(n)) for n in (8, 64, 128))
    return r <= 1e-12, r


def _bernstein():
    g = build_grid(64)
    rng = np.random.default_rng(11)
    worst = 0.0
    for k in range(-3, 3):
        for _ in range(20):
            f = single_band_state(g, k, rng).h
            lf = lambda_pow(f, 1).norm()
            worst = max(worst, f.norm() / ((4 / 3) * 2.0**-k * lf), lf / ((8 / 3) * 2.0**k * f.norm()))
    return worst <= 1.0, worst


def _hodge():
    g = build_grid(64)
    rng = np.random.default_rng(12)
    u1 = SpectralField.from_physical(g, rng.standard_normal((64, 64)))
    u2 = SpectralField.from_physical(g, rng.standard_normal((64, 64)))
    u1, u2 = u1.with_coeffs(u1.coeffs, 0.0), u2.with_coeffs(u2.coeffs, 0.0)
    v1, v2 = hodge_assemble(*hodge_split(u1, u2))
    err = max((v1 - u1).norm(), (v2 - u2).norm()) / max(u1.norm(), u2.norm())
    return err <= 1e-12, err


def _friedrichs():
    g = build_grid(32)
    f = SpectralField.from_physical(g, np.random.default_rng(13).standard_normal((32, 32)))
    once = friedrichs_project(f, 2)
    twice = friedrichs_project(once, 2)
    same = bool(np.array_equal(once.coeffs, twice.coeffs))
    return same, 0.0 if same else 1.0


def _coercivity():
    p = SweParams()
    g = build_grid(64)
    rng = np.random.default_rng(14)
    worst = math.inf
    for k in g.bands:
        w = default_weights(p, k)
        for _ in range(10):
            worst = min(worst, alpha_k_energy(single_band_state(g, k, rng), k, w))
    return worst >= 0, worst


def _mass_and_support():
    g = build_grid(32)
    p = SweParams(n_fried=4)
    st = random_smooth_state(g, np.random.default_rng(15), 1e-3, r_cut=2.0).project(4)
    st = type(st)(st.h.with_coeffs(st.h.coeffs, 0.3), st.c, st.d, st.u_mean)
    traj = integrate(st, StepControl(0.05, 1.0), p)
    end = traj.final_state
    outside = np.abs(np.where(friedrichs_project(end.h, 4).coeffs != end.h.coeffs, 1.0, 0.0)).sum()
    drift = traj.info["mass_drift"]
    return drift <= 1e-12 and outside == 0, drift


def _interpolation():
    g = build_grid(32)
    rng = np.random.default_rng(16)
    fields = [random_smooth_state(g, rng, 1.0, r_cut=3.0).h for _ in range(12)]
    traj = Trajectory.from_fields(fields, np.cumsum(rng.uniform(0.1, 1.0, 12)) - 0.1)
    ratio = check_interpolation(traj, 0.5, HybridIndex(0.5, 1.0), 2.0, HybridIndex(0.0, 0.0), math.inf,
                                HybridIndex(1.0, 2.0), 1.0)
    return ratio <= 1 + 1e-9, ratio


CHECKS: dict[str, Callable[[], tuple[bool, float]]] = {
    "partition-of-unity": _partition,
    "bernstein": _bernstein,
    "hodge-round-trip": _hodge,
    "friedrichs-idempotent": _friedrichs,
    "coercivity-nonnegative": _coercivity,
    "mass-and-support": _mass_and_support,
    "interpolation": _interpolation,
}


def run_checks(echo: Callable[[str], None] = print) -> bool:
    ok = True
    for name, fn in CHECKS.items():
        passed, value = fn()
        ok &= passed
        echo(f"{'PASS' if passed else 'FAIL'}  {name:<24s} {value:.3e}")
    return ok
