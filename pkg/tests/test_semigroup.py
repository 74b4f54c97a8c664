"""Tests for Bloch-block assembly and semigroup evolution."""

import numpy as np
import pytest
import scipy.linalg

from conftest import gaussian_line, make_band_limited, make_random_periodic
from subharmonic.bloch import bloch_frequencies, quadrature_nodes
from subharmonic.errors import NonFiniteEvolution, TruncationTooSmall
from subharmonic.grids import (LineFunction, LineGrid, PeriodicFunction,
                               PeriodicGrid, l2_distance, norms_line,
                               norms_periodic)
from subharmonic.semigroup import (OperatorSpec, PeriodicCoefficient,
                                   apply_operator_line,
                                   apply_operator_periodic,
                                   assemble_bloch_block, check_commutation,
                                   evolve_block, evolve_line, evolve_periodic,
                                   spectral_abscissa)

T = 2 * np.pi
HEAT = OperatorSpec.scalar([0.0, 0.0, 1.0])        # p(k) = (ik)^2
TRANSPORT = OperatorSpec.scalar([0.0, 1.0])        # p(k) = ik


def cos_potential(M=64, amplitude=1.0, t_period=T):
    y = np.arange(M) * t_period / M
    vals = (amplitude * np.cos(2 * np.pi * y / t_period))[:, None, None]
    return PeriodicCoefficient(t_period, vals.astype(complex))


class TestAssembleBlock:
    def test_heat_block_is_diagonal(self):
        block = assemble_bloch_block(HEAT, 0.0, L=2, T=T)
        expect = np.diag([-(2 * np.pi * l / T) ** 2 for l in range(-2, 3)])
        assert np.allclose(block.matrix, expect, atol=1e-14)
        assert block.uncoupled

    def test_transport_block(self):
        xi = np.pi / (2 * T)
        block = assemble_bloch_block(TRANSPORT, xi, L=1, T=T)
        expect = np.diag([1j * (xi + 2 * np.pi * l / T) for l in (-1, 0, 1)])
        assert np.allclose(block.matrix, expect, atol=1e-14)

    def test_cosine_potential_quadrature_oracle(self):
        # matrix entries against <e_l, A_xi e_l'> computed by quadrature,
        # applying the modulated operator to each basis mode pointwise
        A = OperatorSpec.scalar([0.0, 0.0, 1.0], coeff=cos_potential(M=64))
        xi = 0.37 / T
        L = 3
        block = assemble_bloch_block(A, xi, L=L)
        M = 256
        y = np.arange(M) * T / M
        V = np.cos(2 * np.pi * y / T)
        oracle = np.zeros((2 * L + 1, 2 * L + 1), dtype=complex)
        for j, lp in enumerate(range(-L, L + 1)):
            mode = np.exp(2j * np.pi * lp * y / T)
            image = -(xi + 2 * np.pi * lp / T) ** 2 * mode + V * mode
            for i, l in enumerate(range(-L, L + 1)):
                test_mode = np.exp(2j * np.pi * l * y / T)
                oracle[i, j] = np.mean(np.conj(test_mode) * image)
        assert np.allclose(block.matrix, oracle, atol=1e-12)
        off = block.matrix[np.arange(2 * L), np.arange(1, 2 * L + 1)]
        assert np.allclose(off, 0.5, atol=1e-13)

    def test_truncation_floor(self):
        with pytest.raises(TruncationTooSmall):
            assemble_bloch_block(HEAT, 0.0, L=0, T=T)


class TestEvolveBlock:
    def test_heat_single_mode_decay(self):
        block = assemble_bloch_block(HEAT, 0.0, L=2, T=T)
        c = np.zeros(5, dtype=complex)
        c[3] = 1.0                                  # mode l = 1, k = 2 pi / T = 1
        out = evolve_block(block, 1.0, c)
        assert out[3] == pytest.approx(np.exp(-1.0), rel=1e-13)

    def test_identity_at_t0(self, rng):
        A = OperatorSpec.scalar([0.0, 0.0, 1.0], coeff=cos_potential())
        block = assemble_bloch_block(A, 0.1, L=4)
        c = rng.standard_normal(9) + 1j * rng.standard_normal(9)
        assert np.allclose(evolve_block(block, 0.0, c), c, atol=1e-15)

    def test_upper_triangular_eigendecomposition_oracle(self, rng):
        # distinct diagonal makes the eigenbasis well conditioned
        from subharmonic.semigroup import BlochBlock
        n = 5
        mat = np.triu(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
        mat[np.arange(n), np.arange(n)] = -np.arange(1, n + 1) + 1j * rng.standard_normal(n)
        block = BlochBlock(xi=0.0, T=T, dim=1, modes=np.arange(n), matrix=mat,
                           uncoupled=False)
        c = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        t = 0.8
        w, V = np.linalg.eig(mat)
        oracle = V @ (np.exp(t * w) * np.linalg.solve(V, c))
        out = evolve_block(block, t, c)
        assert np.linalg.norm(out - oracle) / np.linalg.norm(c) <= 1e-10

    def test_semigroup_law(self, rng):
        A = OperatorSpec.scalar([0.0, 0.0, 1.0], coeff=cos_potential())
        block = assemble_bloch_block(A, 0.2, L=6)
        for _ in range(3):
            c = rng.standard_normal(13) + 1j * rng.standard_normal(13)
            t, s = rng.uniform(0, 2, size=2)
            one = evolve_block(block, t + s, c)
            two = evolve_block(block, t, evolve_block(block, s, c))
            assert np.linalg.norm(one - two) <= 1e-9 * np.linalg.norm(c)

    def test_nonfinite_detection(self):
        backward = OperatorSpec.scalar([0.0, 0.0, -1.0])    # p(k) = +k^2
        block = assemble_bloch_block(backward, 0.0, L=32, T=T)
        c = np.ones(65, dtype=complex)
        with pytest.raises(NonFiniteEvolution):
            evolve_block(block, 50.0, c)


class TestEvolvePeriodic:
    def test_single_mode_decay(self):
        n, M = 4, 64
        grid = PeriodicGrid(T=T, n=n, points_per_period=M)
        g = PeriodicFunction.from_callable(grid, lambda x: np.cos(2 * np.pi * x / (n * T)))
        out = evolve_periodic(HEAT, g, 1.0)
        expect = np.exp(-(2 * np.pi / (n * T)) ** 2) * g.values
        assert np.max(np.abs(out.values - expect)) <= 1e-13

    def test_transport_is_periodic_shift(self, rng):
        grid = PeriodicGrid(T=T, n=2, points_per_period=32)
        g = make_random_periodic(grid, rng)
        shift = 5
        out = evolve_periodic(TRANSPORT, g, shift * grid.dx)
        assert np.allclose(out.values, np.roll(g.values, -shift, axis=-1), atol=1e-12)

    def test_identity_at_t0_full_window(self, rng):
        grid = PeriodicGrid(T=T, n=3, points_per_period=16)
        g = make_random_periodic(grid, rng)
        out = evolve_periodic(HEAT, g, 0.0)
        err = norms_periodic(out - g).l2 / norms_periodic(g).l2
        assert err <= 1e-10

    def test_potential_against_rk4_oracle(self, rng):
        # method-of-lines RK4 on the full window grid, independent of blocks
        grid = PeriodicGrid(T=T, n=2, points_per_period=32)
        g, _ = make_band_limited(grid, 6, rng)
        A = OperatorSpec.scalar([0.0, 0.0, 1.0], coeff=cos_potential(M=32))
        t_end, nsteps = 0.1, 400
        dt = t_end / nsteps
        u = g.values.copy()
        for _ in range(nsteps):
            k1 = apply_operator_periodic(A, PeriodicFunction(grid, u)).values
            k2 = apply_operator_periodic(A, PeriodicFunction(grid, u + dt / 2 * k1)).values
            k3 = apply_operator_periodic(A, PeriodicFunction(grid, u + dt / 2 * k2)).values
            k4 = apply_operator_periodic(A, PeriodicFunction(grid, u + dt * k3)).values
            u = u + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        out = evolve_periodic(A, g, t_end)
        rel = (norms_periodic(out - PeriodicFunction(grid, u)).l2
               / norms_periodic(PeriodicFunction(grid, u)).l2)
        assert rel <= 1e-6

    def test_dissipative_norm_nonincreasing(self, rng):
        grid = PeriodicGrid(T=T, n=2, points_per_period=32)
        g, _ = make_band_limited(grid, 8, rng)
        norms = [norms_periodic(evolve_periodic(HEAT, g, t)).l2
                 for t in (0.0, 0.25, 0.5, 1.0, 2.0)]
        assert all(b <= a * (1 + 1e-12) for a, b in zip(norms, norms[1:]))

    def test_truncation_doubling_spectral_decay(self):
        # geometric coefficient decay: halving the discarded window shrinks
        # the change by at least the squared decay factor
        grid = PeriodicGrid(T=T, n=1, points_per_period=128)
        x = grid.points()
        q = 0.5
        vals = np.zeros(128, dtype=complex)
        for m in range(-40, 41):
            vals += q ** abs(m) * np.exp(2j * np.pi * m * x / T)
        g = PeriodicFunction(grid, vals)
        A = OperatorSpec.scalar([0.0, 0.0, 1.0], coeff=cos_potential(M=128))
        outs = {L: evolve_periodic(A, g, 0.3, L=L) for L in (4, 8, 16)}
        change_small = norms_periodic(outs[4] - outs[8]).l2
        change_big = norms_periodic(outs[8] - outs[16]).l2
        assert change_big * 4 <= change_small


class TestEvolveLine:
    def test_heat_kernel_closed_form(self):
        f = gaussian_line(40.0, T / 64)
        for t in (0.5, 1.0, 2.0):
            out = evolve_line(HEAT, f, t, L=32, N_xi=256, T=T)
            exact = LineFunction(f.grid, (1 + 4 * t) ** -0.5
                                 * np.exp(-f.grid.points() ** 2 / (1 + 4 * t)))
            assert l2_distance(out, exact) <= 1e-6

    def test_identity_at_t0(self):
        f = gaussian_line(12.0, T / 64)
        out = evolve_line(HEAT, f, 0.0, N_xi=64, T=T)
        assert l2_distance(out, f) / norms_line(f).l2 <= 1e-10

    def test_potential_against_line_rk4_oracle(self):
        f = gaussian_line(10.0, T / 32, width=1.0)
        A = OperatorSpec.scalar([0.0, 0.0, 1.0], coeff=cos_potential(M=32))
        t_end, nsteps = 0.1, 500
        dt = t_end / nsteps
        grid = f.grid
        u = f.values.copy()
        for _ in range(nsteps):
            k1 = apply_operator_line(A, LineFunction(grid, u)).values
            k2 = apply_operator_line(A, LineFunction(grid, u + dt / 2 * k1)).values
            k3 = apply_operator_line(A, LineFunction(grid, u + dt / 2 * k2)).values
            k4 = apply_operator_line(A, LineFunction(grid, u + dt * k3)).values
            u = u + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        out = evolve_line(A, f, t_end, N_xi=64)
        assert l2_distance(out, LineFunction(grid, u)) <= 1e-5


class TestCommutation:
    def test_heat_gaussian(self):
        f = gaussian_line(12.0, T / 64)
        assert check_commutation(HEAT, f, 0.5, T=T) <= 1e-8

    def test_t0(self):
        f = gaussian_line(12.0, T / 64)
        assert check_commutation(HEAT, f, 0.0, T=T) <= 1e-12

    def test_single_mode_constant_coefficient(self):
        # narrow-band datum fully inside the domain: both paths reduce to the
        # same scalar multipliers and agree to roundoff
        grid = LineGrid.covering(42.0, T / 16)
        x = grid.points()
        f = LineFunction(grid, np.exp(-(x / 6) ** 2) * np.exp(1j * 0.2 * x))
        res = check_commutation(TRANSPORT, f, 1.0, T=T, N_xi=32)
        assert res <= 1e-10


class TestRiemannSumConsistency:
    @pytest.mark.parametrize("n,rule", [(5, "midpoint"), (8, "trapezoid")])
    def test_window_frequencies_are_quadrature_nodes(self, n, rule):
        nodes, _ = quadrature_nodes(n, T, rule)
        assert np.allclose(nodes, bloch_frequencies(n, T), atol=1e-14)


class TestDiagnostics:
    def test_heat_abscissa_nonpositive(self):
        assert spectral_abscissa(HEAT, T=T, L=8) <= 1e-12

    def test_growing_operator_detected(self):
        unstable = OperatorSpec.scalar([1.0])
        assert spectral_abscissa(unstable, T=T, L=4) == pytest.approx(1.0)
