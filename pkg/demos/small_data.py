"""Small-data nonlinear run and Friedrichs convergence on a coarse grid.

Integrates random smooth data of amplitude ``1e-3`` with the full nonlinear
model, prints the energy-space functional relative to its initial value, then
runs the J_n ladder n = 2, 4, 8 from the same data and prints the distances
between consecutive approximations.

    python3 demos/small_data.py
"""

import math
import tempfile

from rotswe.besov import es_history
from rotswe.config import InitSpec, RunConfig
from rotswe.experiment import convergence_study, smalldata_initial
from rotswe.integrator import StepControl, integrate
from rotswe.model import SweParams


def main():
    cfg = RunConfig(scenario="smalldata", seed=1, out=tempfile.mkdtemp(), grid_N=64, grid_L=8 * math.pi,
                    params=SweParams(n_fried=8), init=InitSpec(amplitude=1e-3), dt=0.05, t_end=5.0)
    traj = integrate(smalldata_initial(cfg), StepControl(cfg.dt, cfg.t_end), cfg.params)
    E = es_history(traj, 1.0)
    for i in range(0, len(E), 20):
        print(f"t = {traj.times[i]:5.2f}   E/E0 = {E[i] / E[0]:.4f}")
    print(f"mass drift {traj.info['mass_drift']:.1e}, CFL substeps {len(traj.info['substeps'])}")

    rows, _ = convergence_study(cfg, [2, 4, 8], write=False)
    for r in rows:
        print(f"J_{r.n_a} vs J_{r.n_b}: distance {r.distance:.3e}")


if __name__ == "__main__":
    main()
