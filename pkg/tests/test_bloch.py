"""Tests for the torus and line Bloch transforms and their identities."""

import math

import numpy as np
import pytest
import scipy.special

from conftest import gaussian_line, make_band_limited, make_random_periodic
from subharmonic.bloch import (BlochFamily, bloch_frequencies, bloch_line,
                               bloch_parseval_line, bloch_parseval_torus,
                               bloch_sup_bound, bloch_torus,
                               check_bloch_l2_continuity, check_blochs_equal,
                               inverse_bloch_line, inverse_bloch_torus,
                               quadrature_nodes)
from subharmonic.errors import (GridMismatch, HypothesisViolation,
                                MalformedFamily)
from subharmonic.grids import (LineFunction, LineGrid, PeriodicFunction,
                               PeriodicGrid, l2_distance, norms_line,
                               norms_periodic, periodize, zero_extend)

T = 2 * np.pi


class TestFrequencies:
    @pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 8, 16])
    def test_omega_structure(self, n):
        xi = bloch_frequencies(n, T)
        assert len(xi) == n
        assert np.all(xi >= -np.pi / T - 1e-15)
        assert np.all(xi < np.pi / T)
        # each frequency satisfies exp(i xi n T) = 1
        assert np.allclose(np.exp(1j * xi * n * T), 1.0, atol=1e-12)
        if n > 1:
            assert np.allclose(np.diff(xi), 2 * np.pi / (n * T))

    def test_midpoint_rule_matches_omega_for_odd_n(self):
        for n in (1, 3, 5, 9):
            nodes, w = quadrature_nodes(n, T, "midpoint")
            assert np.allclose(nodes, bloch_frequencies(n, T), atol=1e-15)
            assert np.allclose(w, 2 * np.pi / (n * T))

    def test_trapezoid_rule_matches_omega_for_even_n(self):
        for n in (2, 4, 8):
            nodes, w = quadrature_nodes(n, T, "trapezoid")
            assert np.allclose(nodes, bloch_frequencies(n, T), atol=1e-15)


class TestBlochTorus:
    def test_single_mode_n1(self):
        grid = PeriodicGrid(T=T, n=1, points_per_period=64)
        g = PeriodicFunction.from_callable(grid, lambda x: np.exp(1j * 2 * np.pi * x / T))
        fam = bloch_torus(g)
        assert np.allclose(fam.xi_values, [0.0])
        y = np.arange(64) * grid.dx
        assert np.allclose(fam.slices[0, 0], T * np.exp(1j * 2 * np.pi * y / T),
                           atol=1e-12)

    def test_constant_concentrates_at_zero(self):
        c = 0.7 - 0.2j
        grid = PeriodicGrid(T=T, n=4, points_per_period=16)
        g = PeriodicFunction(grid, np.full(grid.n_points, c))
        fam = bloch_torus(g)
        zero_idx = int(np.argmin(np.abs(fam.xi_values)))
        assert np.allclose(fam.slices[zero_idx, 0], 4 * T * c, atol=1e-11)
        others = np.delete(np.arange(4), zero_idx)
        assert np.max(np.abs(fam.slices[others])) <= 1e-11

    def test_against_direct_resampling_oracle(self, rng):
        # oracle: fhat at xi + 2 pi l / T by direct summation, then the l-sum,
        # enumerating each frequency's residue class independently
        n, M = 4, 16
        grid = PeriodicGrid(T=T, n=n, points_per_period=M)
        g, _ = make_band_limited(grid, 12, rng)
        fam = bloch_torus(g)
        x = grid.points()
        y = np.arange(M) * grid.dx
        H = n * M // 2
        for i, xi in enumerate(fam.xi_values):
            kappa = int(round(xi * n * T / (2 * np.pi)))
            ms = [m for m in range(-H, H) if (m - kappa) % n == 0]
            slice_oracle = np.zeros(M, dtype=complex)
            for m in ms:
                l = (m - kappa) // n
                s = xi + 2 * np.pi * l / T
                fhat = grid.dx * np.sum(np.exp(-1j * s * x) * g.values[0])
                slice_oracle += fhat * np.exp(2j * np.pi * l * y / T)
            assert np.allclose(fam.slices[i, 0], slice_oracle, atol=1e-10)


class TestInverseBlochTorus:
    def test_closed_form_round_trip_n1(self):
        grid = PeriodicGrid(T=T, n=1, points_per_period=32)
        g = PeriodicFunction.from_callable(grid, lambda x: np.exp(1j * 2 * np.pi * x / T))
        rec = inverse_bloch_torus(bloch_torus(g))
        assert np.allclose(rec.values, g.values, atol=1e-13)

    def test_band_limited_round_trip_n8(self, rng):
        grid = PeriodicGrid(T=T, n=8, points_per_period=32)
        g, _ = make_band_limited(grid, 40, rng)
        rec = inverse_bloch_torus(bloch_torus(g))
        err = norms_periodic(rec - g).l2 / norms_periodic(g).l2
        assert err <= 1e-10

    def test_zero_family(self):
        grid = PeriodicGrid(T=T, n=3, points_per_period=16)
        g = PeriodicFunction(grid, np.zeros(grid.n_points))
        rec = inverse_bloch_torus(bloch_torus(g))
        assert np.all(rec.values == 0)

    def test_malformed_xi_grid(self, rng):
        grid = PeriodicGrid(T=T, n=4, points_per_period=16)
        fam = bloch_torus(make_random_periodic(grid, rng))
        bad = BlochFamily(T=fam.T, xi_values=fam.xi_values + 0.01,
                          slices=fam.slices, kind="torus", n=4)
        with pytest.raises(MalformedFamily):
            inverse_bloch_torus(bad)


class TestBlochLine:
    def test_band_limited_in_brillouin_zone(self):
        # fhat supported inside (-pi/T, pi/T): only l = 0 survives, so the
        # slices are x-independent with value fhat(xi)
        b = 0.8 * np.pi / T
        dx = T / 16
        grid = LineGrid.covering(400.0, dx)
        x = grid.points()
        # Hann-profile transform: f(x) = (1/2pi) int c(s) e^{isx} ds, closed form
        c = lambda s: np.where(np.abs(s) < b, 0.5 * (1 + np.cos(np.pi * s / b)), 0.0)
        with np.errstate(invalid="ignore", divide="ignore"):
            f_vals = (b / (2 * np.pi)) * np.sinc(b * x / np.pi) * (
                np.pi ** 2 / (np.pi ** 2 - (b * x) ** 2))
        f_vals = np.where(np.abs(np.abs(b * x) - np.pi) < 1e-9, b / (4 * np.pi), f_vals)
        f = LineFunction(grid, f_vals)
        fam = bloch_line(f, 9, "midpoint", T)
        for q, xi in enumerate(fam.xi_values):
            sl = fam.slices[q, 0]
            assert np.max(np.abs(sl - sl.mean())) <= 1e-4 * (1 + abs(sl.mean()))
            assert abs(sl.mean() - c(xi)) <= 1e-3

    def test_zero(self):
        grid = LineGrid.covering(10.0, T / 16)
        f = LineFunction(grid, np.zeros(grid.n_points))
        fam = bloch_line(f, 8, "midpoint", T)
        assert np.all(fam.slices == 0)

    def test_gaussian_against_closed_form_oracle(self, rng):
        # oracle: B(f)(xi, y) = sum_{|l| <= 64} sqrt(pi) e^{-(xi+2 pi l/T)^2/4} e^{2 pi i l y/T}
        f = gaussian_line(12.0, T / 64)
        fam = bloch_line(f, 16, "midpoint", T)
        y = np.arange(fam.M) * (T / fam.M)
        ls = np.arange(-64, 65)
        picks = rng.integers(0, 16, size=5), rng.integers(0, fam.M, size=5)
        for q, p in zip(*picks):
            xi = fam.xi_values[q]
            s = xi + 2 * np.pi * ls / T
            oracle = np.sum(np.sqrt(np.pi) * np.exp(-s ** 2 / 4)
                            * np.exp(2j * np.pi * ls * y[p] / T))
            assert abs(fam.slices[q, 0, p] - oracle) <= 1e-8


class TestInverseBlochLine:
    def test_band_limited_recovery(self, rng):
        # periodic-in-window band-limited data reconstruct to quadrature accuracy
        f = gaussian_line(10.0, T / 64)
        fam = bloch_line(f, 64, "midpoint", T)
        rec = inverse_bloch_line(fam)
        assert l2_distance(rec, f) / norms_line(f).l2 <= 1e-8

    def test_zero(self):
        grid = LineGrid.covering(8.0, T / 16)
        f = LineFunction(grid, np.zeros(grid.n_points))
        rec = inverse_bloch_line(bloch_line(f, 8, "midpoint", T))
        assert np.all(rec.values == 0)

    def test_refinement_converges(self):
        # a wide Gaussian keeps every refinement level's aliasing images
        # (copies at spacing N_xi * T) overlapping the domain measurably
        f = gaussian_line(120.0, T / 32, width=30.0)
        errs = []
        for n_xi in (16, 32, 64):
            rec = inverse_bloch_line(bloch_line(f, n_xi, "midpoint", T))
            errs.append(l2_distance(rec, f))
        assert errs[0] > errs[1] > errs[2]

    @pytest.mark.parametrize("n,rule", [(5, "midpoint"), (4, "trapezoid")])
    def test_riemann_sum_matches_torus_on_window(self, n, rule):
        # at N_xi = n the rule's nodes are exactly Omega_n, and reconstructing
        # the embedded window data reproduces its periodization on the window
        f = gaussian_line(6 * n * T, T / 32, width=2.0)
        g_n = periodize(f, n, T)
        gt = zero_extend(g_n, f.grid)
        fam = bloch_line(gt, n, rule, T)
        assert np.allclose(fam.xi_values, bloch_frequencies(n, T), atol=1e-14)
        rec = inverse_bloch_line(fam)
        off = int(round((f.grid.X - g_n.grid.half_width) / f.grid.dx))
        window = rec.values[:, off:off + g_n.grid.n_points]
        scale = np.max(np.abs(g_n.values))
        assert np.max(np.abs(window - g_n.values)) <= 1e-11 * scale


class TestBlochsEqual:
    def test_single_mode_exact(self):
        grid = PeriodicGrid(T=T, n=3, points_per_period=16)
        g = PeriodicFunction.from_callable(grid, lambda x: np.exp(2j * np.pi * x / (3 * T)))
        rep = check_blochs_equal(g, LineGrid.covering(2 * grid.half_width, grid.dx))
        assert rep.max_rel <= 1e-13

    def test_band_limited_n4(self, rng):
        grid = PeriodicGrid(T=T, n=4, points_per_period=32)
        g, _ = make_band_limited(grid, 20, rng)
        rep = check_blochs_equal(g, LineGrid.covering(3 * grid.half_width, grid.dx))
        assert rep.max_rel <= 1e-10

    def test_zero(self):
        grid = PeriodicGrid(T=T, n=2, points_per_period=16)
        g = PeriodicFunction(grid, np.zeros(grid.n_points))
        rep = check_blochs_equal(g, LineGrid.covering(grid.half_width, grid.dx))
        assert rep.max_abs == 0.0


class TestSupBound:
    def test_gaussian_never_exceeds_bound(self):
        f = gaussian_line(12.0, T / 64)
        bound = bloch_sup_bound(f, s=3.0, L_max=64, T=T)   # raises BoundExceeded on failure
        assert bound.sup_bound == pytest.approx(
            bound.l_infty_fhat + bound.hs1_norm * bound.tail_constant, rel=1e-14)

    def test_tail_constant_matches_zeta(self):
        # the two one-sided sums collapse to 2 (T/pi)^s (1 - 2^-s) zeta(s)
        f = gaussian_line(12.0, T / 64)
        s = 3.0
        bound = bloch_sup_bound(f, s=s, L_max=64, T=T)
        exact = 2 * (T / np.pi) ** s * (1 - 2.0 ** (-s)) * scipy.special.zeta(s)
        assert bound.tail_constant == pytest.approx(exact, rel=1e-9)

    def test_zero_function(self):
        grid = LineGrid.covering(8.0, T / 16)
        b = bloch_sup_bound(LineFunction(grid, np.zeros(grid.n_points)), T=T)
        assert b.sup_bound == 0.0 and b.l_infty_fhat == 0.0 and b.hs1_norm == 0.0

    def test_homogeneity(self):
        f = gaussian_line(12.0, T / 64)
        b1 = bloch_sup_bound(f, T=T)
        b2 = bloch_sup_bound(2.0 * f, T=T)
        assert b2.l_infty_fhat == pytest.approx(2 * b1.l_infty_fhat, rel=1e-13)
        assert b2.hs1_norm == pytest.approx(2 * b1.hs1_norm, rel=1e-13)
        assert b2.tail_constant == pytest.approx(b1.tail_constant, rel=1e-14)

    def test_hypothesis_floor(self):
        f = gaussian_line(8.0, T / 16)
        with pytest.raises(HypothesisViolation):
            bloch_sup_bound(f, s=2.0, T=T)


class TestL2Continuity:
    def _bump(self, grid):
        x = grid.points()
        return np.where(np.abs(x) < 2.0, np.cos(np.pi * x / 4) ** 4, 0.0)

    def test_shrinking_perturbation_rate(self):
        f = gaussian_line(10.0, T / 64)
        bump = self._bump(f.grid)
        seq = [LineFunction(f.grid, f.values + bump / k) for k in (1, 2, 4, 8)]
        rep = check_bloch_l2_continuity(seq, f, T=T, N_xi=64)
        assert rep.max_relative_mismatch <= 1e-8
        # aggregated error scales like 1/k^2
        ratios = rep.aggregated[:-1] / rep.aggregated[1:]
        assert np.allclose(ratios, 4.0, rtol=1e-10)

    def test_identical_sequence_vanishes(self):
        f = gaussian_line(10.0, T / 32)
        rep = check_bloch_l2_continuity([f], f, T=T, N_xi=16)
        assert rep.aggregated[0] <= 1e-25

    def test_translates_decrease(self):
        grid = LineGrid.covering(10.0, T / 64)
        x = grid.points()
        f = LineFunction(grid, np.exp(-x ** 2))
        seq = [LineFunction(grid, np.exp(-(x - 1.0 / k) ** 2)) for k in (1, 2, 4, 8)]
        rep = check_bloch_l2_continuity(seq, f, T=T, N_xi=32)
        assert np.all(np.diff(rep.aggregated) < 0)
        assert rep.max_relative_mismatch <= 1e-8

    def test_grid_mismatch(self):
        f = gaussian_line(10.0, T / 32)
        other = gaussian_line(12.0, T / 32)
        with pytest.raises(GridMismatch):
            check_bloch_l2_continuity([other], f, T=T)


class TestInvariants:
    def test_parseval_torus_any_input(self, rng):
        for n in (1, 2, 5, 8):
            grid = PeriodicGrid(T=1.7, n=n, points_per_period=32)
            g = make_random_periodic(grid, rng)
            through, direct = bloch_parseval_torus(g)
            assert abs(through - direct) / direct <= 1e-10

    def test_parseval_line_gaussian(self):
        f = gaussian_line(10.0, T / 64)
        through, direct = bloch_parseval_line(f, 64, T)
        assert abs(through - direct) / direct <= 1e-8

    def test_linearity(self, rng):
        grid = LineGrid.covering(8.0, T / 32)
        x = grid.points()
        f = LineFunction(grid, np.exp(-x ** 2))
        g = LineFunction(grid, np.exp(-(x - 1) ** 2) * (1 + 1j))
        a, b = 1.3 - 0.4j, -0.8 + 0.1j
        fam = bloch_line(LineFunction(grid, a * f.values + b * g.values), 16, "midpoint", T)
        fam_f = bloch_line(f, 16, "midpoint", T)
        fam_g = bloch_line(g, 16, "midpoint", T)
        combined = a * fam_f.slices + b * fam_g.slices
        scale = np.max(np.abs(combined))
        assert np.max(np.abs(fam.slices - combined)) <= 1e-12 * scale

    def test_continuity_modulus_halves(self):
        # |B(f)(xi1, .) - B(f)(xi2, .)|_sup shrinks at least linearly in the gap
        f = gaussian_line(10.0, T / 64)
        x0 = 0.1 / T

        def modulus(h):
            vals = []
            for xi in (x0, x0 + h):
                ls = np.arange(-32, 33)
                s = xi + 2 * np.pi * ls / T
                y = np.linspace(0, T, 33)
                slc = (np.sqrt(np.pi) * np.exp(-s ** 2 / 4)[None, :]
                       * np.exp(2j * np.pi * np.outer(y, ls) / T)).sum(axis=1)
                vals.append(slc)
            return float(np.max(np.abs(vals[0] - vals[1])))

        h0 = 0.2 / T
        mods = [modulus(h0 * 2.0 ** (-j)) for j in range(5)]
        for a, b in zip(mods, mods[1:]):
            assert b <= 0.55 * a
