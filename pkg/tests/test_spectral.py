import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rotswe.initial import single_band_state
from rotswe.spectral import (
    PSI_PROFILE_ID,
    Grid,
    SpectralField,
    build_grid,
    dealiased_product,
    dyadic_block,
    eval_cutoffs,
    friedrichs_project,
    hodge_assemble,
    hodge_split,
    is_hermitian,
    lambda_pow,
    partition_residual,
    phi,
    psi,
)


def random_field(grid, rng, mean=0.0):
    f = SpectralField.from_physical(grid, rng.standard_normal((grid.N, grid.N)))
    return f.with_coeffs(f.coeffs, mean)


def psi_oracle(r):
    # the documented profile written out directly
    def e(t):
        return math.exp(-1.0 / t) if t > 0 else 0.0

    delta = 4 / 3 - 3 / 4
    a, b = e((4 / 3 - r) / delta), e((r - 3 / 4) / delta)
    return a / (a + b)


def enumerate_band_range(N, L):
    dk = 2 * math.pi / L
    radii = sorted({dk * math.hypot(i, j) for i in range(-N // 2 + 1, N // 2)
                    for j in range(-N // 2 + 1, N // 2) if (i, j) != (0, 0)})
    ks = [k for k in range(-20, 20)
          if any(0.75 * 2**k < r < 8 / 3 * 2**k for r in radii)]
    return min(ks), max(ks)


class TestGrid:
    def test_unit_torus_lattice(self):
        g = build_grid(8, 2 * math.pi)
        assert sorted(set(g.m)) == list(range(-4, 4))
        assert g.dk == pytest.approx(1.0)
        assert g.k_min <= 0 <= g.k_max

    def test_large_torus_band_range(self, grid128):
        assert grid128.dk == pytest.approx(1 / 8)
        assert grid128.k_min == -4
        assert (grid128.k_min, grid128.k_max) == enumerate_band_range(128, 16 * math.pi)

    @pytest.mark.parametrize("N, L", [(8, 2 * math.pi), (16, 4 * math.pi), (32, 16 * math.pi)])
    def test_band_range_matches_enumeration(self, N, L):
        g = build_grid(N, L)
        assert (g.k_min, g.k_max) == enumerate_band_range(N, L)

    @pytest.mark.parametrize("N, L", [(7, 1.0), (12, 1.0), (4, 1.0), (8, 0.0), (8, -1.0)])
    def test_invalid(self, N, L):
        with pytest.raises(ValueError):
            build_grid(N, L)

    @given(st.sampled_from([8, 16, 32, 64, 128]), st.floats(4 * math.pi, 64 * math.pi))
    def test_band_range_covers_lattice(self, N, L):
        g = build_grid(N, L)
        r = g.kmag[g.active]
        assert g.k_min <= 0
        # band 0 is reachable only once the lattice extends to |xi| = 3/4
        assert (g.k_max >= 0) == (r.max() >= 0.75)
        assert np.all(r >= 0.75 * 2.0**g.k_min) and np.all(r <= 8 / 3 * 2.0**g.k_max)


class TestCutoffs:
    @pytest.mark.parametrize("r, expected", [(0.5, (1.0, 0.0)), (1.4, (0.0, 1.0)), (3.0, (0.0, 0.0))])
    def test_examples(self, r, expected):
        assert eval_cutoffs(r) == pytest.approx(expected, abs=0.0)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            eval_cutoffs(-0.1)

    @given(st.floats(0.0, 4.0))
    def test_matches_profile_formula(self, r):
        assert psi(r) == pytest.approx(psi_oracle(r), rel=1e-14, abs=1e-300)

    @given(st.floats(0.0, 4.0), st.floats(0.0, 4.0))
    def test_psi_monotone_phi_bounded(self, a, b):
        lo, hi = sorted((a, b))
        assert psi(hi) <= psi(lo)
        assert 0.0 <= phi(a) <= 1.0

    def test_support_and_plateau(self):
        r = np.linspace(0, 4, 40001)
        p = phi(r)
        assert np.all(p[(r < 0.75) | (r > 8 / 3)] == 0.0)
        assert np.all(p[(r >= 4 / 3) & (r <= 1.5)] == 1.0)
        assert np.all(psi(r[r <= 0.75]) == 1.0) and np.all(psi(r[r >= 4 / 3]) == 0.0)

    def test_profile_id(self):
        assert PSI_PROFILE_ID == "expbump-ratio(3/4,4/3)"


class TestPartition:
    @pytest.mark.parametrize("N, L", [(8, 2 * math.pi), (64, 16 * math.pi), (128, 16 * math.pi),
                                      (256, 3.0)])
    def test_residual(self, N, L):
        assert partition_residual(build_grid(N, L)) <= 1e-12

    def test_corrupted_profile_detected(self, grid64):
        bad = partition_residual(grid64, lambda r: psi(r / 2.1) - psi(r))
        assert bad > 0.05


class TestDyadic:
    def test_constant_annihilated(self, grid64):
        f = SpectralField(grid64, np.zeros((64, 64), complex), 5.0)
        for k in grid64.bands:
            blk = dyadic_block(f, k)
            assert blk.mean == 0.0 and not np.any(blk.coeffs)

    def test_plateau_wave_unchanged(self, grid128):
        # |xi| = 1.4 * 2^k lies where phi == 1
        f = SpectralField.plane_wave(grid128, 0, 11)  # |xi| = 11/8 = 1.375
        blk = dyadic_block(f, 0)
        assert np.array_equal(blk.coeffs, f.coeffs)

    def test_blocks_sum_to_field(self, grid64, rng):
        f = random_field(grid64, rng, mean=2.0)
        total = sum((dyadic_block(f, k).coeffs for k in grid64.bands), np.zeros((64, 64), complex))
        assert np.max(np.abs(total - f.coeffs)) <= 1e-12

    def test_support_and_near_orthogonality(self, grid128, rng):
        f = random_field(grid128, rng)
        r = grid128.kmag
        for k in grid128.bands:
            blk = dyadic_block(f, k)
            outside = (r < 0.75 * 2.0**k) | (r > 8 / 3 * 2.0**k)
            assert not np.any(blk.coeffs[outside])
            for j in grid128.bands:
                if abs(j - k) >= 2:
                    assert not np.any(dyadic_block(blk, j).coeffs)

    def test_hermitian_preserved(self, grid64, rng):
        f = random_field(grid64, rng)
        assert is_hermitian(f.coeffs)
        for k in grid64.bands:
            assert is_hermitian(dyadic_block(f, k).coeffs)

    def test_grid_mismatch(self, grid64):
        f = SpectralField.zeros(grid64)
        g = SpectralField.zeros(build_grid(32))
        with pytest.raises(ValueError):
            f + g


class TestFriedrichs:
    def test_idempotent_bitwise(self, grid64, rng):
        f = random_field(grid64, rng, mean=1.0)
        once = friedrichs_project(f, 3)
        assert np.array_equal(friedrichs_project(once, 3).coeffs, once.coeffs)

    def test_covering_index_drops_mean_only(self, grid64, rng):
        f = random_field(grid64, rng, mean=1.0)
        out = friedrichs_project(f, 100)
        assert out.mean == 0.0 and np.array_equal(out.coeffs, f.coeffs)

    def test_plane_waves(self, grid128):
        n = 2
        inside = SpectralField.plane_wave(grid128, 8, 0)  # |xi| = 1 = n / 2
        outside = SpectralField.plane_wave(grid128, 32, 0)  # |xi| = 4 = 2 n
        assert np.array_equal(friedrichs_project(inside, n).coeffs, inside.coeffs)
        assert not np.any(friedrichs_project(outside, n).coeffs)

    @pytest.mark.parametrize("n", [0, -1, 1.5])
    def test_invalid_index(self, grid64, n):
        with pytest.raises(ValueError):
            friedrichs_project(SpectralField.zeros(grid64), n)

    def test_commutes(self, grid64, rng):
        f = random_field(grid64, rng)
        for k in (-1, 0, 2):
            a = friedrichs_project(dyadic_block(f, k), 2).coeffs
            b = dyadic_block(friedrichs_project(f, 2), k).coeffs
            assert np.max(np.abs(a - b)) <= 1e-15
        a = friedrichs_project(lambda_pow(f, 1.5), 2).coeffs
        b = lambda_pow(friedrichs_project(f, 2), 1.5).coeffs
        assert np.max(np.abs(a - b)) <= 1e-14


class TestLambda:
    def test_round_trip(self, grid64, rng):
        f = random_field(grid64, rng)
        back = lambda_pow(lambda_pow(f, 1), -1)
        assert np.max(np.abs(back.coeffs - f.coeffs)) <= 1e-13

    def test_square_on_wave(self, grid128):
        f = SpectralField.plane_wave(grid128, 16, 0, amplitude=1.0)  # |xi| = 2
        assert np.allclose(lambda_pow(f, 2).coeffs, 4 * f.coeffs, rtol=0, atol=1e-15)

    def test_cube_matches_composition(self, grid64, rng):
        f = random_field(grid64, rng)
        a = lambda_pow(f, 3).coeffs
        b = lambda_pow(lambda_pow(lambda_pow(f, 1), 1), 1).coeffs
        assert np.max(np.abs(a - b)) <= 1e-12 * np.max(np.abs(a))

    def test_mean_rules(self, grid64, rng):
        f = random_field(grid64, rng, mean=3.0)
        with pytest.raises(ValueError):
            lambda_pow(f, -1)
        with pytest.raises(ValueError):
            lambda_pow(f, 0)
        assert lambda_pow(f, 0.5).mean == 0.0


class TestHodge:
    def test_gradient_has_no_curl_part_exactly(self):
        # integer data on the unit lattice makes every product exact
        g = build_grid(16, 2 * math.pi)
        rng = np.random.default_rng(0)
        h = rng.integers(-50, 50, (16, 16)) + 1j * rng.integers(-50, 50, (16, 16))
        h = np.where(g.active, h + np.conj(np.roll(np.flip(h, (0, 1)), 1, (0, 1))), 0)
        u1 = SpectralField(g, 1j * g.kx * h)
        u2 = SpectralField(g, 1j * g.ky * h)
        c, d = hodge_split(u1, u2)
        assert not np.any(d.coeffs)
        c2, d2 = hodge_split(-u2, u1)  # grad_perp
        assert not np.any(c2.coeffs)

    def test_gradient_generic_roundoff(self, grid64, rng):
        h = random_field(grid64, rng)
        u1 = SpectralField(grid64, 1j * grid64.kx * h.coeffs)
        u2 = SpectralField(grid64, 1j * grid64.ky * h.coeffs)
        c, d = hodge_split(u1, u2)
        assert d.norm() <= 1e-15 * c.norm()

    @given(st.integers(0, 2**32 - 1))
    def test_round_trip(self, seed):
        g = build_grid(32)
        rng = np.random.default_rng(seed)
        u1, u2 = random_field(g, rng), random_field(g, rng)
        v1, v2 = hodge_assemble(*hodge_split(u1, u2))
        assert (v1 - u1).norm() <= 1e-12 * u1.norm() and (v2 - u2).norm() <= 1e-12 * u2.norm()
        c, d = random_field(g, rng), random_field(g, rng)
        c2, d2 = hodge_split(*hodge_assemble(c, d))
        assert (c2 - c).norm() <= 1e-12 * c.norm() and (d2 - d).norm() <= 1e-12 * d.norm()
        assert is_hermitian(c2.coeffs, 1e-15) and is_hermitian(v1.coeffs, 1e-15)

    def test_assemble_directions(self, grid64):
        w = SpectralField.plane_wave(grid64, 3, 5)
        z = SpectralField.zeros(grid64)
        u1, u2 = hodge_assemble(w, z)
        i, j = 3, 5
        # parallel to xi: u x xi = 0
        assert abs(u1.coeffs[i, j] * 5 - u2.coeffs[i, j] * 3) <= 1e-15
        u1, u2 = hodge_assemble(z, w)
        assert abs(u1.coeffs[i, j] * 3 + u2.coeffs[i, j] * 5) <= 1e-15

    def test_means_rejected(self, grid64, rng):
        u = random_field(grid64, rng, mean=1.0)
        with pytest.raises(ValueError):
            hodge_split(u, u)
        with pytest.raises(ValueError):
            hodge_assemble(u, u)


class TestFields:
    def test_physical_round_trip_and_parseval(self, grid64, rng):
        x = rng.standard_normal((64, 64))
        f = SpectralField.from_physical(grid64, x)
        # Nyquist content is discarded by construction
        y = f.to_physical()
        assert f.norm() ** 2 + f.mean**2 == pytest.approx(np.mean(y**2), rel=1e-12)
        g = SpectralField.from_physical(grid64, y)
        assert np.max(np.abs(g.coeffs - f.coeffs)) <= 1e-14

    def test_dealiased_product_exact_for_band_limited(self, grid64):
        a = SpectralField.plane_wave(grid64, 5, 2, 1.0)
        b = SpectralField.plane_wave(grid64, 3, -7, 2.0)
        prod = dealiased_product(a, b)
        x = a.to_physical() * b.to_physical()
        ref = SpectralField.from_physical(grid64, x)
        assert np.max(np.abs(prod.coeffs - ref.coeffs)) <= 1e-14

    @given(st.integers(-3, 3), st.integers(0, 2**32 - 1))
    def test_bernstein(self, k, seed):
        g = build_grid(128)
        f = single_band_state(g, k, np.random.default_rng(seed)).h
        lf = lambda_pow(f, 1).norm()
        assert f.norm() <= (4 / 3) * 2.0**-k * lf
        assert lf <= (8 / 3) * 2.0**k * f.norm()

    def test_grid_is_hashable_value(self):
        assert build_grid(16) == Grid(16, 16 * math.pi)
