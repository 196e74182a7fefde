import numpy as np
import pytest

from nsklab.errors import EmptyLowBand
from nsklab.model import Grid, SpectralState, State, gaussian_bump
from nsklab.spectral import (
    CutoffSpec,
    apply_semigroup,
    conjugate_symmetry_defect,
    dealias,
    default_cutoff,
    divergence_form_momentum,
    frequency_split,
    gradient,
    spectral_derivative,
    to_real,
    to_spectral,
)
from nsklab.symbols import solution_symbol


def random_state(grid, rng, modes=4):
    """Smooth random band-limited real fields."""
    theta_hat = np.zeros(grid.shape, dtype=complex)
    m_hat = np.zeros((grid.dim,) + grid.shape, dtype=complex)
    idx = np.abs(grid.axis_aliases())
    mask = np.ones(grid.shape, dtype=bool)
    for ax in range(grid.dim):
        shape = [1] * grid.dim
        shape[ax] = grid.n
        mask &= (idx <= modes).reshape(shape)
    k = int(mask.sum())
    theta_hat[mask] = rng.standard_normal(k) + 1j * rng.standard_normal(k)
    for j in range(grid.dim):
        m_hat[j][mask] = rng.standard_normal(k) + 1j * rng.standard_normal(k)
    theta = np.fft.ifftn(theta_hat).real
    m = np.stack([np.fft.ifftn(m_hat[j]).real for j in range(grid.dim)])
    return State(grid=grid, theta=theta, m=m)


class TestTransforms:
    def test_constant_field_single_coefficient(self):
        g = Grid(dim=2, box_len=1.0, n=8)
        s = State(grid=g, theta=np.full(g.shape, 3.0), m=np.zeros((2,) + g.shape))
        sp = to_spectral(s)
        assert sp.theta_hat[0, 0] == pytest.approx(3.0 * g.mode_count)
        off = sp.theta_hat.copy()
        off[0, 0] = 0.0
        assert np.max(np.abs(off)) <= 1e-12 * g.mode_count

    def test_round_trip_identity(self):
        rng = np.random.default_rng(0)
        for dim in (1, 2, 3):
            g = Grid(dim=dim, box_len=2.5, n=16)
            s = random_state(g, rng)
            back = to_real(to_spectral(s))
            scale = max(np.max(np.abs(s.theta)), np.max(np.abs(s.m)))
            assert np.max(np.abs(back.theta - s.theta)) <= 1e-12 * scale
            assert np.max(np.abs(back.m - s.m)) <= 1e-12 * scale

    def test_plane_wave_two_conjugate_coefficients(self):
        g = Grid(dim=2, box_len=4.0, n=16)
        x = g.mesh()[0]
        theta = np.broadcast_to(np.cos(2 * np.pi * x / g.box_len), g.shape).copy()
        sp = to_spectral(State(grid=g, theta=theta, m=np.zeros((2,) + g.shape)))
        assert sp.theta_hat[1, 0] == pytest.approx(g.mode_count / 2)
        assert sp.theta_hat[-1, 0] == pytest.approx(g.mode_count / 2)
        assert sp.theta_hat[1, 0] == pytest.approx(np.conj(sp.theta_hat[-1, 0]))
        rest = sp.theta_hat.copy()
        rest[1, 0] = rest[-1, 0] = 0.0
        assert np.max(np.abs(rest)) <= 1e-10 * g.mode_count


class TestApplySemigroup:
    def test_time_zero_is_identity(self, oscillatory_params):
        g = Grid(dim=2, box_len=3.0, n=8)
        sp = to_spectral(random_state(g, np.random.default_rng(1)))
        out = apply_semigroup(sp, oscillatory_params, 0.0)
        assert np.allclose(out.theta_hat, sp.theta_hat, atol=1e-14)
        assert np.allclose(out.m_hat, sp.m_hat, atol=1e-14)

    def test_matches_per_mode_symbol(self, positive_params, oscillatory_params, unit_params):
        rng = np.random.default_rng(3)
        g = Grid(dim=2, box_len=3.0, n=8)
        sp = to_spectral(random_state(g, rng))
        for params in (positive_params, oscillatory_params, unit_params):
            t = 0.37
            out = apply_semigroup(sp, params, t)
            for idx in [(0, 0), (1, 2), (3, 5), (4, 4), (7, 1)]:
                xi = g.wavevector_of_index(idx)
                vec = np.concatenate([[sp.theta_hat[idx]], sp.m_hat[(slice(None),) + idx]])
                want = solution_symbol(params, xi, t) @ vec
                got = np.concatenate([[out.theta_hat[idx]], out.m_hat[(slice(None),) + idx]])
                assert np.allclose(got, want, rtol=1e-12, atol=1e-12)

    def test_transverse_data_decays_as_heat(self, positive_params):
        g = Grid(dim=2, box_len=2 * np.pi, n=16)
        # m = (sin(y), 0): divergence-free, theta = 0
        y = g.mesh()[1]
        m = np.zeros((2,) + g.shape)
        m[0] = np.broadcast_to(np.sin(y), g.shape)
        sp = to_spectral(State(grid=g, theta=np.zeros(g.shape), m=m))
        t = 0.9
        out = apply_semigroup(sp, positive_params, t)
        assert np.max(np.abs(out.theta_hat)) <= 1e-12 * g.mode_count
        decay = np.exp(-positive_params.alpha_star * t)  # |xi| = 1
        assert np.allclose(out.m_hat[0], decay * sp.m_hat[0], atol=1e-10 * g.mode_count)

    def test_semigroup_property_on_grid(self, oscillatory_params):
        g = Grid(dim=2, box_len=5.0, n=16)
        sp = to_spectral(random_state(g, np.random.default_rng(5)))
        one = apply_semigroup(sp, oscillatory_params, 1.1)
        two = apply_semigroup(apply_semigroup(sp, oscillatory_params, 0.4), oscillatory_params, 0.7)
        scale = np.max(np.abs(one.theta_hat))
        assert np.max(np.abs(one.theta_hat - two.theta_hat)) <= 1e-10 * scale
        assert np.max(np.abs(one.m_hat - two.m_hat)) <= 1e-10 * np.max(np.abs(one.m_hat))

    def test_mean_modes_conserved_exactly(self, unit_params):
        g = Grid(dim=3, box_len=4.0, n=8)
        rng = np.random.default_rng(9)
        s = random_state(g, rng)
        s = State(grid=g, theta=s.theta + 0.3, m=s.m + rng.standard_normal((3, 1, 1, 1)))
        sp = to_spectral(s)
        out = apply_semigroup(sp, unit_params, 2.3)
        assert out.theta_hat[0, 0, 0] == sp.theta_hat[0, 0, 0]
        for j in range(3):
            assert out.m_hat[j][0, 0, 0] == sp.m_hat[j][0, 0, 0]

    def test_realness_preserved(self, oscillatory_params):
        g = Grid(dim=2, box_len=3.0, n=32)
        sp = to_spectral(random_state(g, np.random.default_rng(13), modes=10))
        out = apply_semigroup(sp, oscillatory_params, 1.5)
        assert conjugate_symmetry_defect(out) <= 1e-13

    def test_commutes_with_frequency_split(self, positive_params):
        g = Grid(dim=2, box_len=3.0, n=16)
        sp = to_spectral(random_state(g, np.random.default_rng(21), modes=7))
        cut = default_cutoff(g)
        low1, high1 = frequency_split(apply_semigroup(sp, positive_params, 0.8), cut)
        low2 = apply_semigroup(frequency_split(sp, cut)[0], positive_params, 0.8)
        high2 = apply_semigroup(frequency_split(sp, cut)[1], positive_params, 0.8)
        scale = np.max(np.abs(sp.theta_hat))
        assert np.max(np.abs(low1.theta_hat - low2.theta_hat)) <= 1e-12 * scale
        assert np.max(np.abs(high1.m_hat - high2.m_hat)) <= 1e-12 * np.max(np.abs(sp.m_hat))


class TestFrequencySplit:
    def test_partition_of_unity(self):
        g = Grid(dim=2, box_len=2.0, n=16)
        sp = to_spectral(random_state(g, np.random.default_rng(2), modes=8))
        low, high = frequency_split(sp, default_cutoff(g))
        assert np.max(np.abs(low.theta_hat + high.theta_hat - sp.theta_hat)) <= 1e-15 * np.max(np.abs(sp.theta_hat))
        assert np.max(np.abs(low.m_hat + high.m_hat - sp.m_hat)) <= 1e-15 * np.max(np.abs(sp.m_hat))

    def test_band_supports(self):
        g = Grid(dim=2, box_len=2 * np.pi, n=32)
        sp = to_spectral(random_state(g, np.random.default_rng(4), modes=12))
        eps = 3.2
        low, high = frequency_split(sp, CutoffSpec(eps=eps))
        xi_abs = np.sqrt(g.xi_sq)
        assert np.all(np.abs(low.theta_hat[xi_abs > 2 * eps]) == 0.0)
        assert np.all(np.abs(high.theta_hat[xi_abs <= eps]) == 0.0)

    def test_wide_cutoff_keeps_everything_low(self):
        g = Grid(dim=1, box_len=2 * np.pi, n=16)
        sp = to_spectral(random_state(g, np.random.default_rng(6), modes=7))
        low, high = frequency_split(sp, CutoffSpec(eps=g.xi_max))
        assert np.all(high.theta_hat == 0.0)
        assert np.allclose(low.theta_hat, sp.theta_hat)

    def test_single_high_mode_goes_high(self):
        g = Grid(dim=1, box_len=2 * np.pi, n=32)
        eps = 1.0
        theta_hat = np.zeros(16, dtype=complex)
        theta = np.cos(3 * np.arange(32) * g.spacing)  # |xi| = 3 = 3 eps
        sp = to_spectral(State(grid=g, theta=theta, m=np.zeros((1, 32))))
        low, high = frequency_split(sp, CutoffSpec(eps=eps))
        assert np.max(np.abs(low.theta_hat)) <= 1e-13 * g.mode_count
        assert np.max(np.abs(high.theta_hat)) == pytest.approx(g.mode_count / 2)

    def test_empty_low_band_raises(self):
        g = Grid(dim=1, box_len=2 * np.pi, n=8)  # smallest nonzero |xi| = 1
        sp = to_spectral(random_state(g, np.random.default_rng(7), modes=3))
        with pytest.raises(EmptyLowBand):
            frequency_split(sp, CutoffSpec(eps=0.4))

    def test_profile_properties(self):
        cut = CutoffSpec(eps=2.0)
        r = np.linspace(0.0, 6.0, 400)
        phi = cut(r)
        assert np.all(phi[r <= 2.0] == 1.0)
        assert np.all(phi[r >= 4.0] == 0.0)
        assert np.all((phi >= 0.0) & (phi <= 1.0))
        assert np.all(np.diff(phi) <= 1e-15)


class TestSpectralDerivative:
    def test_order_zero_identity(self):
        g = Grid(dim=2, box_len=1.0, n=8)
        f = np.random.default_rng(0).standard_normal(g.shape)
        assert np.array_equal(spectral_derivative(f, g, (0, 0)), f)

    def test_sine_derivative(self):
        g = Grid(dim=2, box_len=5.0, n=32)
        x = g.mesh()[0]
        k = 2 * np.pi / g.box_len
        f = np.broadcast_to(np.sin(k * x), g.shape)
        df = spectral_derivative(f, g, (1, 0))
        assert np.allclose(df, k * np.broadcast_to(np.cos(k * x), g.shape), atol=1e-12)

    def test_gaussian_laplacian_closed_form(self):
        g = Grid(dim=2, box_len=20.0, n=128)
        w = 1.0
        f = gaussian_bump(g, center=(10.0, 10.0), width=w, amplitude=1.0)
        lap = spectral_derivative(f, g, (2, 0)) + spectral_derivative(f, g, (0, 2))
        r_sq = np.zeros(g.shape)
        for ax, x in enumerate(g.mesh()):
            d = np.abs(x - 10.0)
            d = np.minimum(d, g.box_len - d)
            r_sq = r_sq + d**2
        want = (r_sq / w**4 - g.dim / w**2) * f
        assert np.max(np.abs(lap - want)) <= 1e-8

    def test_order_cap(self):
        g = Grid(dim=1, box_len=1.0, n=8)
        with pytest.raises(ValueError, match="order"):
            spectral_derivative(np.zeros(8), g, (4,))

    def test_gradient_matches_componentwise(self):
        g = Grid(dim=3, box_len=3.0, n=8)
        f = np.random.default_rng(3).standard_normal(g.shape)
        grad = gradient(f, g)
        for ax in range(3):
            alpha = [0, 0, 0]
            alpha[ax] = 1
            assert np.allclose(grad[ax], spectral_derivative(f, g, alpha), atol=1e-12)


class TestDivergenceFormMomentum:
    def test_constant_tensor_gives_zero(self):
        g = Grid(dim=2, box_len=1.0, n=8)
        M0 = np.ones((2, 2) + g.shape)
        assert np.max(np.abs(divergence_form_momentum(M0, g))) <= 1e-13

    def test_analytic_diagonal_sine(self):
        g = Grid(dim=2, box_len=7.0, n=32)
        k = 2 * np.pi / g.box_len
        x = g.mesh()[0]
        M0 = np.zeros((2, 2) + g.shape)
        M0[0, 0] = np.broadcast_to(np.sin(k * x), g.shape)
        m0 = divergence_form_momentum(M0, g)
        assert np.allclose(m0[0], k * np.broadcast_to(np.cos(k * x), g.shape), atol=1e-12)
        assert np.max(np.abs(m0[1])) <= 1e-13

    def test_matches_fd4_oracle_at_fd_convergence_rate(self):
        """Spectral divergence treated as truth; FD4 error must shrink ~16x per halving."""

        def fd4(arr, axis, h):
            return (-np.roll(arr, -2, axis) + 8 * np.roll(arr, -1, axis) - 8 * np.roll(arr, 1, axis) + np.roll(arr, 2, axis)) / (12 * h)

        errs = []
        for n in (32, 64):
            g = Grid(dim=2, box_len=6.0, n=n)
            x, y = g.mesh()
            M0 = np.zeros((2, 2) + g.shape)
            k = 2 * np.pi / g.box_len
            M0[0, 0] = np.sin(k * x) * np.cos(2 * k * y)
            M0[0, 1] = np.cos(k * x) * np.sin(k * y)
            M0[1, 0] = np.sin(2 * k * x) * np.sin(k * y)
            M0[1, 1] = np.cos(2 * k * x) * np.cos(2 * k * y)
            spec = divergence_form_momentum(M0, g)
            fd = np.stack([sum(fd4(M0[j, k_], k_, g.spacing) for k_ in range(2)) for j in range(2)])
            errs.append(np.max(np.abs(spec - fd)))
        assert errs[0] / errs[1] == pytest.approx(16.0, rel=0.15)


class TestDealias:
    def test_removes_high_third(self):
        g = Grid(dim=1, box_len=2 * np.pi, n=32)
        f = np.cos(12 * np.arange(32) * g.spacing)  # alias 12 > 32/3
        assert np.max(np.abs(dealias(f, g))) <= 1e-13

    def test_keeps_low_modes(self):
        g = Grid(dim=1, box_len=2 * np.pi, n=32)
        f = np.cos(5 * np.arange(32) * g.spacing)
        assert np.allclose(dealias(f, g), f, atol=1e-13)
