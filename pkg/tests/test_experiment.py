import csv
import json
import math
from pathlib import Path

import numpy as np
import pytest

from rotswe.config import ConfigError, InitSpec, RunConfig, load_config, parse_config
from rotswe.experiment import EXIT_BLOWUP, EXIT_OK, convergence_study, run_scenario, smalldata_initial
from rotswe.model import SweParams
from rotswe.spectral import friedrichs_mask

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def small(tmp_path, name="run", **kw):
    base = dict(scenario="smalldata", seed=5, out=str(tmp_path / name), grid_N=32, grid_L=4 * math.pi,
                dt=0.05, t_end=0.5, probes=(0.25,))
    base.update(kw)
    return RunConfig(**base)


class TestConfig:
    @pytest.mark.parametrize("name", ["smalldata", "spectroscopy", "coercivity"])
    def test_shipped_configs_load(self, name):
        cfg = load_config(CONFIGS / f"{name}.toml")
        assert cfg.grid_L == pytest.approx(16 * math.pi)

    def test_dotted_keys(self):
        cfg = parse_config({"scenario": "smalldata", "grid": {"N": 64, "L": "8pi"},
                            "params": {"mu": 0.5, "n_fried": "off"}, "step": {"dt": 0.1}})
        assert cfg.grid_N == 64 and cfg.grid_L == pytest.approx(8 * math.pi)
        assert cfg.params == SweParams(mu=0.5, n_fried=None) and cfg.dt == 0.1

    @pytest.mark.parametrize("data", [
        {"grid": {"N": 7}},
        {"grid": {"N": 64.5}},
        {"grid": {"L": "sixteen"}},
        {"grid": {"L": -1.0}},
        {"bogus": 1},
        {"grid": {"N": 64, "M": 3}},
        {"params": {"mu": -1.0}},
        {"params": {"viscosity": 1.0}},
        {"init": {"recipe": "tsunami"}},
        {"init": {"amplitude": 0.0}},
        {"step": {"dt": 0.0}},
        {"step": {"dt": "fast"}},
        {"scenario": "weather"},
        {"probes": [100.0]},
        {"scenario": "coercivity", "grid": {"N": 64}, "diagnostics": {"bands": [5]}},
        {"diagnostics": {"K_fraction": 1.0}},
        {"grid": 3},
    ])
    def test_invalid(self, data):
        with pytest.raises(ConfigError):
            parse_config(data)

    def test_file_errors(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "missing.toml")
        bad = tmp_path / "bad.toml"
        bad.write_text("grid.N = = 3\n")
        with pytest.raises(ConfigError):
            load_config(bad)

    def test_hash(self, tmp_path):
        a = load_config(CONFIGS / "smalldata.toml")
        b = load_config(CONFIGS / "smalldata.toml", out=str(tmp_path))
        assert a.hash() == b.hash() and len(a.hash()) == 64
        assert load_config(CONFIGS / "smalldata.toml", seed=99).hash() != a.hash()

    def test_overrides(self):
        cfg = load_config(CONFIGS / "smalldata.toml", seed=42, out="elsewhere")
        assert cfg.seed == 42 and cfg.out == "elsewhere"


class TestRuns:
    def test_spectroscopy(self, tmp_path):
        cfg = RunConfig(scenario="linear-spectroscopy", seed=1, out=str(tmp_path / "s"), grid_N=64,
                        bands=(-1, 0, 1))
        res = run_scenario(cfg)
        assert res.exit_code == EXIT_OK, res.checks
        rows = list(csv.DictReader(open(tmp_path / "s" / "energy.csv")))
        assert [int(r["k"]) for r in rows] == [-1, 0, 1]
        for b in res.details["bands"].values():
            assert b["rel_err"] <= 1e-3
        man = json.loads((tmp_path / "s" / "manifest.json").read_text())
        assert man["status"] == "ok" and man["config_hash"] == cfg.hash()
        assert man["psi_profile_id"] == "expbump-ratio(3/4,4/3)"

    def test_coercivity(self, tmp_path):
        cfg = RunConfig(scenario="coercivity", seed=1, out=str(tmp_path / "c"), grid_N=64, bands=(-2, 1),
                        trials=10)
        res = run_scenario(cfg)
        assert res.exit_code == EXIT_OK
        rows = list(csv.DictReader(open(tmp_path / "c" / "energy.csv")))
        assert all(0 < float(r["c_lo"]) <= float(r["c_hi"]) for r in rows)

    def test_smalldata(self, tmp_path):
        cfg = small(tmp_path, params=SweParams(n_fried=4))
        res = run_scenario(cfg)
        assert res.exit_code == EXIT_OK
        out = tmp_path / "run"
        for name in ("manifest.json", "norms.csv", "energy.csv", "timeseries.csv", "plot.gp"):
            assert (out / name).is_file()
        snaps = sorted(out.glob("snap_*.npy"))
        assert len(snaps) == 3 and np.load(snaps[0]).shape == (3, 32, 32)
        ts = list(csv.DictReader(open(out / "timeseries.csv")))
        assert len(ts) == 11 and float(ts[0]["E_over_E0"]) == 1.0
        man = json.loads((out / "manifest.json").read_text())
        assert man["step_history"]["n_steps"] == 10 and man["checks"]["mass_conserved"]

    def test_initial_projected(self, tmp_path):
        cfg = small(tmp_path, params=SweParams(n_fried=2))
        st = smalldata_initial(cfg)
        outside = ~friedrichs_mask(cfg.grid(), 2)
        assert not np.any(st.arrays()[:, outside])
        assert np.any(smalldata_initial(cfg, project=False).arrays()[:, outside])

    def test_reproducible_directories(self, tmp_path):
        cfg = small(tmp_path, "a")
        run_scenario(cfg)
        (tmp_path / "a").rename(tmp_path / "first")
        run_scenario(cfg)
        files = sorted(p.name for p in (tmp_path / "a").iterdir())
        assert files == sorted(p.name for p in (tmp_path / "first").iterdir())
        for f in files:
            assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "first" / f).read_bytes(), f

    def test_seed_changes_output(self, tmp_path):
        run_scenario(small(tmp_path, "a"))
        run_scenario(small(tmp_path, "b", seed=6))
        assert (tmp_path / "a" / "snap_0000.npy").read_bytes() != (tmp_path / "b" / "snap_0000.npy").read_bytes()

    def test_blowup(self, tmp_path):
        cfg = small(tmp_path, "boom", dt=0.5, t_end=50.0, safety=1e9, probes=())
        cfg = cfg.with_(init=InitSpec(amplitude=30.0))
        res = run_scenario(cfg)
        assert res.exit_code == EXIT_BLOWUP
        man = json.loads((tmp_path / "boom" / "manifest.json").read_text())
        assert man["status"] == "blowup"
        assert (tmp_path / "boom" / "snap_0000.npy").is_file()
        assert (tmp_path / "boom" / "timeseries.csv").is_file()


class TestStudy:
    def test_single_member(self, tmp_path):
        rows, res = convergence_study(small(tmp_path), [8])
        assert rows == [] and res.checks == {}
        assert (tmp_path / "run" / "convergence.csv").read_text().strip() == "n_a,n_b,distance,status"

    def test_identical_indices(self, tmp_path):
        rows, _ = convergence_study(small(tmp_path), [4, 4], write=False)
        assert rows[0].distance == 0.0

    @pytest.mark.parametrize("n_list", [[8, 4], [0, 4]])
    def test_invalid(self, tmp_path, n_list):
        with pytest.raises(ValueError):
            convergence_study(small(tmp_path), n_list)

    def test_small_study(self, tmp_path):
        cfg = small(tmp_path, init=InitSpec(amplitude=0.05))
        rows, res = convergence_study(cfg, [2, 4, 8])
        assert [(r.n_a, r.n_b) for r in rows] == [(2, 4), (4, 8)]
        assert all(r.status == "ok" and r.distance > 0 for r in rows)
        assert res.checks["nonincreasing"]
        table = list(csv.DictReader(open(tmp_path / "run" / "convergence.csv")))
        assert float(table[0]["distance"]) == rows[0].distance
