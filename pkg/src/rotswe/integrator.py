"""Strang splitting with an exact per-shell linear propagator.

One step is: half a linear step, an explicit midpoint step on the nonlinear
terms, another half linear step.  The linear generator depends on ``|xi|``
only, so ``exp(tau A(r))`` is computed once per distinct lattice radius.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg

from .model import (
    NonFiniteError,
    SweParams,
    SweState,
    linear_symbols,
    nonlinear_tendency,
)
from .spectral import Grid, friedrichs_mask, to_padded
from .trajectory import Trajectory, band_norms

__all__ = [
    "Propagator",
    "StepControl",
    "BlowUpError",
    "linear_step",
    "step",
    "integrate",
    "state_band_norms",
    "integrate_lockstep",
]

logger = logging.getLogger(__name__)

BLOWUP_THRESHOLD = 1e12
EIG_COND_LIMIT = 1e8


class BlowUpError(RuntimeError):
    """Integration aborted; carries the last valid state and partial output."""

    def __init__(self, message: str, state: SweState, time: float, trajectory=None):
        super().__init__(f"{message} (t = {time:.6g})")
        self.reason = message
        self.state = state
        self.time = time
        self.trajectory = trajectory


def _expm_stack(A: np.ndarray, tau: float) -> tuple[np.ndarray, int]:
    """``exp(tau A)`` for a stack of 3x3 matrices; returns the number of fallbacks."""
    B = tau * A
    w, V = np.linalg.eig(B)
    cond = np.linalg.cond(V)
    out = np.empty_like(A)
    good = np.isfinite(cond) & (cond <= EIG_COND_LIMIT)
    if np.any(good):
        Vg = V[good]
        E = Vg * np.exp(w[good])[:, None, :]
        out[good] = np.real(E @ np.linalg.inv(Vg))
    bad = np.nonzero(~good)[0]
    for i in bad:
        out[i] = scipy.linalg.expm(B[i])
    return out, len(bad)


class Propagator:
    """Cached ``exp(tau A(|xi|))`` on the distinct radii of a grid.

    Matrices are keyed by ``tau``; the propagator is bound to one parameter set
    and must be rebuilt when the parameters change.
    """

    def __init__(self, grid: Grid, params: SweParams, dt: float, allow_rebuild: bool = True):
        self.grid = grid
        self.params = params
        self.dt = float(dt)
        self.allow_rebuild = allow_rebuild
        self.radii, self.shell = grid.shell_index
        self._symbols = linear_symbols(self.radii, params)
        self._cache: dict[float, np.ndarray] = {}
        self.fallbacks = 0
        for tau in (0.5 * self.dt, self.dt):
            self._pointwise(tau, build=True)

    def key(self) -> tuple:
        return (self.grid, self.params, self.dt)

    def matches(self, params: SweParams, dt: float | None = None) -> bool:
        return params == self.params and (dt is None or float(dt) == self.dt)

    def shell_matrices(self, tau: float) -> np.ndarray:
        mats, nfb = _expm_stack(self._symbols, tau)
        self.fallbacks += nfb
        return mats

    def _pointwise(self, tau: float, build: bool = False) -> np.ndarray:
        tau = float(tau)
        hit = self._cache.get(tau)
        if hit is None:
            if not (build or self.allow_rebuild):
                raise KeyError(f"no cached propagator for tau = {tau}")
            mats = self.shell_matrices(tau)
            # (3, 3, N, N) so each entry multiplies a full coefficient plane
            hit = np.moveaxis(mats[self.shell], (2, 3), (0, 1)).copy()
            self._cache[tau] = hit
        return hit

    def apply(self, y: np.ndarray, tau: float) -> np.ndarray:
        if tau == 0.0:
            return y.copy()
        M = self._pointwise(tau)
        out = np.empty_like(y)
        for i in range(3):
            out[i] = M[i, 0] * y[0] + M[i, 1] * y[1] + M[i, 2] * y[2]
        return out


@dataclass
class StepControl:
    dt: float
    t_end: float
    safety: float = 0.5
    max_steps: int = 1_000_000

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.t_end < 0:
            raise ValueError(f"t_end must be nonnegative, got {self.t_end}")

    def n_steps(self) -> int:
        n = int(math.ceil(self.t_end / self.dt - 1e-9))
        if n > self.max_steps:
            raise ValueError(f"{n} steps exceed max_steps = {self.max_steps}")
        return n


def _rotate_mean(u_mean, angle: float) -> tuple[float, float]:
    # solution of du/dt = (f u2, -f u1) after time angle / f
    ca, sa = math.cos(angle), math.sin(angle)
    return (ca * u_mean[0] + sa * u_mean[1], -sa * u_mean[0] + ca * u_mean[1])


def linear_step(state: SweState, dt: float, prop: Propagator) -> SweState:
    """Exact linear evolution over ``dt`` (no nonlinear terms)."""
    y = prop.apply(state.arrays(), dt)
    um = _rotate_mean(state.u_mean, prop.params.f_cor * dt)
    return SweState.from_arrays(state.grid, y, state.h.mean, um, state.time + dt)


def _max_speed(state: SweState) -> float:
    u1, u2 = state.velocity()
    a = to_padded(state.grid, u1.coeffs, u1.mean)
    b = to_padded(state.grid, u2.coeffs, u2.mean)
    return float(np.sqrt(np.max(a * a + b * b)))


def _strang(y, h_mean, u_mean, dt, prop: Propagator, params: SweParams, nonlinear: bool):
    grid = prop.grid
    zeta_hit = False
    if not nonlinear:
        # the two half steps compose exactly
        return prop.apply(y, dt), _rotate_mean(u_mean, params.f_cor * dt), False
    y = prop.apply(y, 0.5 * dt)
    u_mean = _rotate_mean(u_mean, params.f_cor * 0.5 * dt)
    if nonlinear:
        k1, z1 = nonlinear_tendency(grid, y, h_mean, u_mean, params)
        k2, z2 = nonlinear_tendency(grid, y + 0.5 * dt * k1, h_mean, u_mean, params)
        y = y + dt * k2
        zeta_hit = z1 or z2
    y = prop.apply(y, 0.5 * dt)
    u_mean = _rotate_mean(u_mean, params.f_cor * 0.5 * dt)
    return y, u_mean, zeta_hit


def step(state: SweState, ctrl: StepControl, prop: Propagator, params: SweParams | None = None,
         nonlinear: bool = True, dt: float | None = None) -> SweState:
    """Advance one Strang step of size ``dt`` (default ``ctrl.dt``)."""
    params = prop.params if params is None else params
    if not prop.matches(params):
        raise ValueError("propagator was built for different parameters")
    dt = ctrl.dt if dt is None else dt
    try:
        y, um, _ = _strang(state.arrays(), state.h.mean, state.u_mean, dt, prop, params, nonlinear)
    except NonFiniteError as exc:
        raise BlowUpError(str(exc), state, state.time) from exc
    _check_blowup(y, state)
    return SweState.from_arrays(state.grid, y, state.h.mean, um, state.time + dt)


def _check_blowup(y: np.ndarray, last: SweState) -> None:
    if not np.all(np.isfinite(y)):
        raise BlowUpError("non-finite coefficients", last, last.time)
    v = y.view(float)
    # cheap componentwise screen before the exact modulus
    if max(v.max(), -v.min()) > BLOWUP_THRESHOLD / math.sqrt(2.0) and np.max(np.abs(y)) > BLOWUP_THRESHOLD:
        raise BlowUpError("coefficient magnitude above blow-up threshold", last, last.time)


def state_band_norms(state: SweState) -> dict[str, np.ndarray]:
    g = state.grid
    nh = band_norms(g, state.h.coeffs)
    nc = band_norms(g, state.c.coeffs)
    nd = band_norms(g, state.d.coeffs)
    return {"h": nh, "c": nc, "d": nd, "u": np.sqrt(nc**2 + nd**2)}


def _probe_steps(probes, dt: float, n: int) -> set[int]:
    out = {0, n}
    for t in (() if probes is None else probes):
        out.add(min(n, max(0, int(round(t / dt)))))
    return out


def _observe(traj: Trajectory, observe, state: SweState) -> None:
    if observe is not None:
        for name, v in observe(state).items():
            traj.scalars.setdefault(name, []).append(float(v))


def integrate(initial: SweState, ctrl: StepControl, params: SweParams, probes=(),
              nonlinear: bool = True, prop: Propagator | None = None,
              observe: Callable[[SweState], dict[str, float]] | None = None) -> Trajectory:
    """Run to ``ctrl.t_end`` recording band norms every step.

    ``dt`` is shrunk (never enlarged) so that an integer number of steps lands
    on ``t_end``.  Snapshots are stored at the steps nearest to ``probes`` plus
    the first and last.  A step whose CFL number ``dt max|u| max|xi|`` exceeds
    ``ctrl.safety`` is split into equal substeps.  On blow-up a
    :class:`BlowUpError` carrying the partial trajectory is raised.
    ``observe`` maps each state to named scalars stored in ``traj.scalars``.
    """
    grid = initial.grid
    n = ctrl.n_steps()
    dt = ctrl.t_end / n if n else ctrl.dt
    if prop is None or not prop.matches(params, dt):
        prop = Propagator(grid, params, dt)
    keep = _probe_steps(probes, dt, n)

    traj = Trajectory(grid)
    traj.info.update(dt=dt, n_steps=n, substeps=[], zeta_triggered=False,
                     mass0=initial.h.mean, propagator_fallbacks=0)
    y = initial.arrays()
    if params.n_fried is not None:
        if np.any(np.where(friedrichs_mask(grid, params.n_fried), 0.0, y) != 0):
            raise ValueError("initial state is not invariant under J_n")
    h_mean, um = initial.h.mean, initial.u_mean
    state = initial
    traj.record(0.0, **state_band_norms(state))
    _observe(traj, observe, state)
    traj.snapshots.append((0.0, state))
    kmax = float(np.max(grid.kmag[grid.active]))

    for i in range(1, n + 1):
        t = i * dt
        sub = 1
        if nonlinear:
            cfl = dt * _max_speed(state) * kmax
            if cfl > ctrl.safety:
                sub = int(math.ceil(cfl / ctrl.safety))
                traj.info["substeps"].append((i, sub))
        try:
            for _ in range(sub):
                y_new, um, zhit = _strang(y, h_mean, um, dt / sub, prop, params, nonlinear)
                _check_blowup(y_new, state)
                y = y_new
                traj.info["zeta_triggered"] |= zhit
        except (BlowUpError, NonFiniteError) as exc:
            traj.status = "blowup"
            raise BlowUpError(getattr(exc, "reason", str(exc)), state, state.time, traj) from exc
        state = SweState.from_arrays(grid, y, h_mean, um, t)
        traj.record(t, **state_band_norms(state))
        _observe(traj, observe, state)
        if i in keep:
            traj.snapshots.append((t, state))
    if n == 0:
        traj.snapshots = traj.snapshots[:1]
    traj.info["propagator_fallbacks"] = prop.fallbacks
    traj.info["mass_drift"] = abs(state.h.mean - initial.h.mean)
    return traj


def integrate_lockstep(initials: list[SweState], ctrl: StepControl,
                       params_list: list[SweParams], pairs: list[tuple[int, int]],
                       nonlinear: bool = True) -> tuple[list[Trajectory], dict]:
    """Advance several runs on the same time grid, recording difference norms.

    Returns the member trajectories (band norms every step, snapshots at the
    ends only) and, for every ``(a, b)`` in ``pairs``, a trajectory of band
    norms of ``state_b - state_a``.  A member that blows up is frozen and its
    pairs are flagged in ``info['blowup']``.
    """
    grid = initials[0].grid
    n = ctrl.n_steps()
    dt = ctrl.t_end / n if n else ctrl.dt
    props = []
    for p in params_list:
        hit = next((q for q in props if q.matches(p, dt)), None)
        props.append(hit if hit is not None else Propagator(grid, p, dt))
    states = list(initials)
    alive = [True] * len(states)
    members = [Trajectory(grid) for _ in states]
    diffs = {pair: Trajectory(grid) for pair in pairs}

    def record(t):
        for m, s in zip(members, states):
            m.record(t, **state_band_norms(s))
        for (a, b), tr in diffs.items():
            tr.record(t, **_diff_norms(states[a], states[b]))

    record(0.0)
    for m, s in zip(members, states):
        m.snapshots.append((0.0, s))
    for i in range(1, n + 1):
        for j, s in enumerate(states):
            if not alive[j]:
                continue
            try:
                states[j] = step(s, ctrl, props[j], params_list[j], nonlinear, dt=dt)
            except BlowUpError:
                alive[j] = False
                members[j].status = "blowup"
        record(i * dt)
    for m, s in zip(members, states):
        m.snapshots.append((n * dt, s))
    for (a, b), tr in diffs.items():
        tr.status = "ok" if alive[a] and alive[b] else "blowup"
    return members, diffs


def _diff_norms(a: SweState, b: SweState) -> dict[str, np.ndarray]:
    g = a.grid
    nh = band_norms(g, b.h.coeffs - a.h.coeffs)
    nc = band_norms(g, b.c.coeffs - a.c.coeffs)
    nd = band_norms(g, b.d.coeffs - a.d.coeffs)
    return {"h": nh, "c": nc, "d": nd, "u": np.sqrt(nc**2 + nd**2)}
