"""Scenario orchestration and run-directory persistence.

A run directory holds ``manifest.json`` (config, config hash, cutoff profile,
code version, step history, check outcomes), ``norms.csv``, ``energy.csv``,
``timeseries.csv``, ``plot.gp`` and one ``snap_XXXX.npy`` per stored state
with shape ``(3, N, N)`` for ``(h, c, d)``.  Nothing time-of-day dependent is
written, so identical configs give bitwise-identical directories.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .besov import HybridIndex, NormRow, cl_norm, es_history, write_norm_csv
from .config import RunConfig
from .energy import (
    BandEnergyReport,
    alpha_k_energy,
    coercivity_constants,
    default_weights,
    fit_rate,
    rate_scale,
    shell_decay_rate,
    theta_k_energy,
    write_energy_csv,
)
from .initial import (
    correlated_band_state,
    make_initial,
    shell_radius_for_band,
    single_band_state,
    single_shell_state,
)
from .integrator import BlowUpError, StepControl, integrate, integrate_lockstep
from .model import SweState
from .spectral import PSI_PROFILE_ID
from .trajectory import Trajectory

__all__ = [
    "RunResult",
    "StudyRow",
    "run_scenario",
    "convergence_study",
    "spectroscopy_band",
    "coercivity_states",
    "smalldata_initial",
    "EXIT_OK",
    "EXIT_FAIL",
    "EXIT_CONFIG",
    "EXIT_BLOWUP",
]

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_BLOWUP = 0, 1, 2, 3

SPECTRO_HORIZON = 30.0  # e-folds of the slowest mode covered by a spectroscopy run
SPECTRO_SAMPLES = 200


@dataclass
class RunResult:
    out_dir: Path
    status: str = "ok"
    checks: dict[str, bool] = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        if self.status == "blowup":
            return EXIT_BLOWUP
        return EXIT_OK if all(self.checks.values()) else EXIT_FAIL


def _rng(cfg: RunConfig, *stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([cfg.seed, *stream]))


def _write_rows(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(x) if isinstance(x, float) else x for x in r])


def _manifest(cfg: RunConfig, result: RunResult, history: dict, outputs: list[str]) -> dict:
    return {
        "version": __version__,
        "config_hash": cfg.hash(),
        "psi_profile_id": PSI_PROFILE_ID,
        "config": cfg.as_dict(),
        "status": result.status,
        "checks": result.checks,
        "details": result.details,
        "step_history": history,
        "outputs": sorted(outputs),
    }


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else repr(v)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _save_snapshots(out: Path, traj: Trajectory) -> tuple[list[str], list[dict]]:
    names, meta = [], []
    for i, (t, st) in enumerate(traj.snapshots):
        name = f"snap_{i:04d}.npy"
        np.save(out / name, st.arrays())
        names.append(name)
        meta.append({"file": name, "t": t, "h_mean": st.h.mean, "u_mean": list(st.u_mean)})
    return names, meta


def _step_history(traj: Trajectory) -> dict:
    info = dict(traj.info)
    info["n_recorded"] = len(traj)
    return info


def spectroscopy_band(grid, params, k: int, rng: np.random.Generator, K_fraction: float = 0.5):
    """Source-free linear run on the lattice shell best inside band ``k``.

    Returns ``(report_fields, times, alpha_sq, oracle_rate)``.  The horizon is
    chosen so the slowest mode decays by ``SPECTRO_HORIZON`` e-folds.
    """
    p = params.with_(n_fried=None)
    r = shell_radius_for_band(grid, k)
    oracle = shell_decay_rate(r, p)
    st = single_shell_state(grid, r, rng)
    w = default_weights(p, k, K_fraction)
    t_end = SPECTRO_HORIZON / oracle
    ctrl = StepControl(t_end / SPECTRO_SAMPLES, t_end)
    traj = integrate(st, ctrl, p, nonlinear=False,
                     observe=lambda s: {"alpha_sq": alpha_k_energy(s, k, w)})
    times = traj.time_array()
    alpha = np.asarray(traj.scalars["alpha_sq"])
    rate = fit_rate(times, alpha)
    return dict(k=k, regime=w.regime, K=w.K, radius=r, alpha_sq_initial=float(alpha[0]),
                theta_sq_initial=theta_k_energy(st, k, p), decay_rate=rate,
                rate_over_scale=rate / rate_scale(k)), times, alpha, oracle


def _run_spectroscopy(cfg: RunConfig, out: Path, result: RunResult) -> tuple[dict, list[str]]:
    grid = cfg.grid()
    reports, series, oracles = [], [], {}
    for j, k in enumerate(cfg.bands):
        rep, times, alpha, oracle = spectroscopy_band(grid, cfg.params, k, _rng(cfg, 1, j), cfg.K_fraction)
        reports.append(BandEnergyReport(rep["k"], rep["regime"], rep["K"], rep["alpha_sq_initial"],
                                        rep["decay_rate"], rep["rate_over_scale"], math.nan, math.nan,
                                        rep["theta_sq_initial"]))
        oracles[k] = oracle
        series += [(k, float(t), float(a)) for t, a in zip(times, alpha)]
        result.details.setdefault("bands", {})[str(k)] = {
            "radius": rep["radius"], "rate": rep["decay_rate"], "oracle": oracle,
            "rel_err": abs(rep["decay_rate"] - oracle) / oracle,
            "nonincreasing": bool(np.all(np.diff(alpha) <= 1e-12 * alpha[:-1])),
        }
    write_energy_csv(out / "energy.csv", reports)
    _write_rows(out / "timeseries.csv", ["k", "t", "alpha_sq"], series)
    c_hat = min(r.rate_over_scale for r in reports)
    result.details["c_hat"] = c_hat
    bands = result.details["bands"].values()
    result.checks["rates_match_oracle"] = all(b["rel_err"] <= cfg.rate_tol for b in bands)
    result.checks["global_c_hat_positive"] = c_hat > 0
    result.checks["alpha_nonincreasing"] = all(b["nonincreasing"] for b in bands)
    return {"bands": list(cfg.bands)}, ["energy.csv", "timeseries.csv"]


def coercivity_states(grid, k: int, rng: np.random.Generator, trials: int, power: int) -> list[SweState]:
    """Alternating independent and ``c``/``Lambda^power h``-correlated band states."""
    return [single_band_state(grid, k, rng) if i % 2 == 0
            else correlated_band_state(grid, k, rng, power) for i in range(trials)]


def _run_coercivity(cfg: RunConfig, out: Path, result: RunResult) -> tuple[dict, list[str]]:
    grid = cfg.grid()
    reports = []
    min_alpha = math.inf
    for j, k in enumerate(cfg.bands):
        w = default_weights(cfg.params, k, cfg.K_fraction)
        rng = _rng(cfg, 2, j)
        states = coercivity_states(grid, k, rng, cfg.trials, w.power)
        alphas = [alpha_k_energy(s, k, w) for s in states]
        min_alpha = min(min_alpha, min(alphas))
        lo, hi = coercivity_constants(states, k, w)
        reports.append(BandEnergyReport(k, w.regime, w.K, alphas[0], math.nan, math.nan, lo, hi,
                                        theta_k_energy(states[0], k, cfg.params)))
        result.details.setdefault("bands", {})[str(k)] = {"c_lo": lo, "c_hi": hi}
    write_energy_csv(out / "energy.csv", reports)
    result.details["min_alpha_sq"] = min_alpha
    result.checks["alpha_nonnegative"] = min_alpha >= 0
    result.checks["constants_positive_finite"] = all(
        0 < r.c_lo <= r.c_hi < math.inf for r in reports)
    return {"bands": list(cfg.bands), "trials": cfg.trials}, ["energy.csv"]


def smalldata_initial(cfg: RunConfig, project: bool = True) -> SweState:
    """Initial state of the configured recipe, ``J_n``-projected when on."""
    ini = cfg.init
    st = make_initial(cfg.grid(), ini.recipe, _rng(cfg, 3), ini.amplitude, ini.slope, ini.r0,
                      ini.r_cut, ini.band, ini.axis)
    return st.project(cfg.params.n_fried) if project else st


def _cumulative_V(traj: Trajectory) -> np.ndarray:
    times = traj.time_array()
    b2 = traj.table("u") @ (4.0 ** traj.k_values.astype(float))
    return np.concatenate([[0.0], np.cumsum(np.diff(times) * b2[:-1])])


def _smalldata_outputs(cfg: RunConfig, traj: Trajectory, out: Path, result: RunResult) -> list[str]:
    grid = traj.grid
    s = cfg.es_s
    E = es_history(traj, s)
    V = _cumulative_V(traj)
    times = traj.time_array()
    ratio = E / E[0] if E[0] > 0 else np.full_like(E, math.nan)
    _write_rows(out / "timeseries.csv", ["t", "E", "E_over_E0", "V"],
                [(float(t), float(e), float(q), float(v)) for t, e, q, v in zip(times, E, ratio, V)])
    T = float(times[-1])
    rows = []
    for name, idx, p in (("h", HybridIndex(s - 1, s), math.inf), ("u", HybridIndex(s - 1, s - 1), math.inf),
                         ("h", HybridIndex(s + 3, s + 2), 1.0), ("u", HybridIndex(s + 1, s + 1), 1.0)):
        rows.append(NormRow(name, idx.s, idx.t, p, T, cl_norm(traj, name, idx, p), grid.N, grid.L))
    rows.append(NormRow("E", s, s, math.nan, T, float(E[-1]), grid.N, grid.L))
    write_norm_csv(out / "norms.csv", rows)

    p = cfg.params
    st0 = traj.snapshots[0][1]
    reports = []
    for k in grid.bands:
        w = default_weights(p, k, cfg.K_fraction)
        reports.append(BandEnergyReport(k, w.regime, w.K, alpha_k_energy(st0, k, w), math.nan,
                                        math.nan, math.nan, math.nan, theta_k_energy(st0, k, p)))
    write_energy_csv(out / "energy.csv", reports)
    result.details.update(E0=float(E[0]), E_final=float(E[-1]),
                          max_ratio=float(np.nanmax(ratio)), T=T)
    return ["timeseries.csv", "norms.csv", "energy.csv"]


def _run_smalldata(cfg: RunConfig, out: Path, result: RunResult) -> tuple[dict, list[str]]:
    init = smalldata_initial(cfg)
    ctrl = StepControl(cfg.dt, cfg.t_end, cfg.safety, cfg.max_steps)
    try:
        traj = integrate(init, ctrl, cfg.params, probes=cfg.probes, nonlinear=cfg.nonlinear)
    except BlowUpError as exc:
        result.status = "blowup"
        result.details["blowup"] = str(exc)
        traj = exc.trajectory
        traj.snapshots.append((exc.time, exc.state))
        files = _smalldata_outputs(cfg, traj, out, result) if len(traj) > 1 else []
        names, meta = _save_snapshots(out, traj)
        return {**_step_history(traj), "snapshots": meta}, files + names
    files = _smalldata_outputs(cfg, traj, out, result)
    names, meta = _save_snapshots(out, traj)
    result.checks["bounded_E"] = result.details["max_ratio"] <= cfg.ratio_max
    result.checks["mass_conserved"] = traj.info["mass_drift"] <= cfg.mass_tol
    result.details["zeta_triggered"] = traj.info["zeta_triggered"]
    return {**_step_history(traj), "snapshots": meta}, files + names


_PLOT = """set datafile separator ','
set key autotitle columnhead
set terminal pngcairo size 900,600
set output '{name}.png'
{body}
"""


def _plot_script(scenario: str) -> str:
    if scenario == "smalldata":
        body = ("set logscale y\nset xlabel 't'\n"
                "plot 'timeseries.csv' using 1:3 with lines title 'E(t)/E(0)'")
    elif scenario == "linear-spectroscopy":
        body = ("set logscale y\nset xlabel 'k'\n"
                "plot 'energy.csv' using 1:6 with linespoints title 'rate / scale'")
    else:
        body = ("set xlabel 'k'\nplot 'energy.csv' using 1:7 with linespoints title 'c_lo', "
                "'' using 1:8 with linespoints title 'c_hi'")
    return _PLOT.format(name=scenario, body=body)


_RUNNERS = {
    "linear-spectroscopy": _run_spectroscopy,
    "coercivity": _run_coercivity,
    "smalldata": _run_smalldata,
}


def run_scenario(cfg: RunConfig) -> RunResult:
    """Run the configured scenario and populate ``cfg.out``.

    Outputs are written even when a check fails or the run blows up; the
    returned :class:`RunResult` carries the exit code.
    """
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    result = RunResult(out)
    history, files = _RUNNERS[cfg.scenario](cfg, out, result)
    (out / "plot.gp").write_text(_plot_script(cfg.scenario))
    manifest = _manifest(cfg, result, history, files + ["plot.gp"])
    (out / "manifest.json").write_text(json.dumps(_jsonable(manifest), indent=2, sort_keys=True) + "\n")
    logger.info("%s finished with status %s, checks %s", cfg.scenario, result.status, result.checks)
    return result


@dataclass(frozen=True)
class StudyRow:
    n_a: int
    n_b: int
    distance: float
    status: str


def convergence_study(cfg: RunConfig, n_list, write: bool = True) -> tuple[list[StudyRow], RunResult]:
    """Distances between Friedrichs approximations for consecutive ``n``.

    Every member starts from the same unprojected data, projected by its own
    ``J_n``; all members advance on one time grid and the distance of a pair
    is the ``E^s`` norm (``s = cfg.es_s``) of their difference over
    ``[0, t_end]``.
    """
    n_list = [int(n) for n in n_list]
    if any(n < 1 for n in n_list):
        raise ValueError("Friedrichs indices must be positive")
    if any(b < a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n_list must be ascending")
    out = Path(cfg.out)
    result = RunResult(out)
    base = smalldata_initial(cfg, project=False)
    params = [cfg.params.with_(n_fried=n) for n in n_list]
    inits = [base.project(n) for n in n_list]
    pairs = [(i, i + 1) for i in range(len(n_list) - 1)]
    ctrl = StepControl(cfg.dt, cfg.t_end, cfg.safety, cfg.max_steps)
    rows: list[StudyRow] = []
    if pairs:
        members, diffs = integrate_lockstep(inits, ctrl, params, pairs, nonlinear=cfg.nonlinear)
        for (a, b) in pairs:
            tr = diffs[(a, b)]
            rows.append(StudyRow(n_list[a], n_list[b], es_history(tr, cfg.es_s)[-1], tr.status))
        if any(m.status == "blowup" for m in members):
            result.status = "blowup"
    d = [r.distance for r in rows]
    result.details["distances"] = d
    if len(d) >= 2:
        result.checks["nonincreasing"] = all(y <= x for x, y in zip(d, d[1:]))
        result.checks["last_le_first_over_4"] = d[-1] <= d[0] / 4
    if write:
        out.mkdir(parents=True, exist_ok=True)
        _write_rows(out / "convergence.csv", ["n_a", "n_b", "distance", "status"],
                    [(r.n_a, r.n_b, float(r.distance), r.status) for r in rows])
        manifest = _manifest(cfg, result, {"n_list": n_list, "dt": ctrl.t_end / max(ctrl.n_steps(), 1)},
                             ["convergence.csv"])
        (out / "manifest.json").write_text(json.dumps(_jsonable(manifest), indent=2, sort_keys=True) + "\n")
    return rows, result
