import numpy as np
import pytest

from mdx.autodiff import MultCounter, Tensor, backward
from mdx.errors import NumericalError, ShapeError, SingularError
from mdx.phy import build_grid_layout, generate_dmrs, map_to_grid, qam, qam_modulate
from mdx.receiver import (
    estimate_noise_variance,
    gather_data,
    interpolate_to_grid,
    lmmse_equalize,
    lmmse_kernel,
    max_log_demap,
    pa_ls_estimate,
    prb_index,
    prb_lookup,
    run_baseline,
)
from mdx.sim import ChannelConfig, simulate_batch


def lmmse_formula(n, nr):
    return 2 * n**3 + 6 * nr * n**2 + 6 * nr * n - 2 * n + 2


def transmit(layout, pilots, H, n0=0.0, seed=0, B=2):
    """Slot grid through per-RE channel ``H (F, S, N_R, N_TX)``; returns ``(1, F, S, N_R)``."""
    rng = np.random.default_rng(seed)
    ntx = layout.n_layers
    bits = rng.integers(0, 2, (ntx, layout.num_data * B))
    grid = map_to_grid(qam_modulate(bits, qam(B)), pilots, layout)
    y = np.einsum("fsrt,fst->fsr", H, grid.values)
    noise = rng.standard_normal(y.shape) + 1j * rng.standard_normal(y.shape)
    return (y + np.sqrt(n0 / 2) * noise)[None]


class TestPaLs:
    @pytest.mark.parametrize("p,y,expect", [(1.0, 0.3 - 0.4j, 0.3 - 0.4j), (-1.0, 2j, -2j)])
    def test_single_layer_scalar(self, p, y, expect):
        lay = build_grid_layout(1, 1)
        pilots = [np.full(12, p, dtype=complex)]
        Y = np.full((1, 12, 14, 1), y)
        est = pa_ls_estimate(Y, pilots, lay)
        np.testing.assert_allclose(est, expect)

    def test_two_layers_match_direct_solve(self):
        lay = build_grid_layout(2, 2)
        pilots = [generate_dmrs(n, lay, 4) for n in range(2)]
        rng = np.random.default_rng(0)
        # channel constant over each 4-subcarrier span
        hp = rng.standard_normal((6, 2, 2)) + 1j * rng.standard_normal((6, 2, 2))
        H = np.repeat(hp, 4, axis=0)[:, None].repeat(14, axis=1)
        Y = transmit(lay, pilots, H)
        est = pa_ls_estimate(Y, pilots, lay)
        # oracle: solve [p0 p1] [h0 h1]^T = y per pair and antenna
        P = [p.reshape(-1, 2, 2) for p in pilots]
        for k in range(6):
            f = 4 * k + np.array([0, 2])
            for d, s in enumerate((2, 11)):
                M = np.stack([P[0][k, :, d], P[1][k, :, d]], axis=1)
                for r in range(2):
                    h = np.linalg.solve(M, Y[0, f, s, r])
                    np.testing.assert_allclose(est[0, 4 * k, d, r], h, atol=1e-12)
                    np.testing.assert_allclose(est[0, 4 * k + 3, d, r], h, atol=1e-12)

    def test_zero_pilot(self):
        lay = build_grid_layout(1, 1)
        with pytest.raises(NumericalError):
            pa_ls_estimate(np.ones((1, 12, 14, 1)), [np.zeros(12)], lay)

    def test_bad_shape(self):
        lay = build_grid_layout(1, 1)
        with pytest.raises(ShapeError):
            pa_ls_estimate(np.ones((12, 14, 1)), [np.ones(12)], lay)


class TestInterpolation:
    def test_constant(self):
        lay = build_grid_layout(1, 1)
        est = np.full((1, 12, 2, 1, 1), 0.5 + 0.1j)
        np.testing.assert_allclose(interpolate_to_grid(est, lay), 0.5 + 0.1j)

    def test_linear_between_and_nearest_outside(self):
        lay = build_grid_layout(1, 1)
        delta = 0.9 - 0.45j
        est = np.zeros((1, 12, 2, 1, 1), complex)
        est[:, :, 1] = delta
        out = interpolate_to_grid(est, lay)[0, 0, :, 0, 0]
        for k in range(10):
            np.testing.assert_allclose(out[2 + k], k * delta / 9)
        np.testing.assert_allclose(out[6], 4 * delta / 9)
        np.testing.assert_allclose(out[:3], 0.0)
        np.testing.assert_allclose(out[11:], delta)


class TestNoiseEstimate:
    def test_noiseless_flat_pairs(self):
        lay = build_grid_layout(2, 1)
        pilots = [generate_dmrs(0, lay, 0)]
        H = np.full((24, 14, 2, 1), 0.7 - 0.2j)
        assert estimate_noise_variance(transmit(lay, pilots, H), pilots, lay)[0] < 1e-20

    def test_genie(self):
        lay = build_grid_layout(1, 2)
        out = estimate_noise_variance(np.zeros((3, 12, 14, 1)), None, lay, genie_n0=0.25)
        np.testing.assert_array_equal(out, [0.25] * 3)

    @pytest.mark.parametrize("n_layers", [1, 2, 3, 4])
    def test_consistency(self, n_layers):
        b = simulate_batch(273 if n_layers == 1 else 8, n_layers, 2, 1, [10.0] * 100,
                           ChannelConfig(kind="block"), 11)
        est = estimate_noise_variance(b.Y, b.pilots, b.layout)
        assert np.all(np.abs(est - 0.1) < 0.01) if n_layers == 1 else abs(est.mean() - 0.1) < 0.01


class TestLmmse:
    def test_identity(self):
        y = np.array([0.3 + 1j, -2.0])
        out = lmmse_equalize(np.eye(2, dtype=complex), y, 0.0)
        np.testing.assert_allclose(out.x_hat.numpy(), y)
        np.testing.assert_allclose(out.sigma_res.value, [0, 0], atol=1e-15)

    def test_worked_example(self):
        out = lmmse_equalize(np.diag([1.0, 2.0]).astype(complex), np.array([1.0, 2.0]), 1.0)
        np.testing.assert_allclose(out.x_hat.numpy(), [1, 1])
        np.testing.assert_allclose(out.sigma_res.value, [1, 0.25])

    def test_zero_forcing_limit(self):
        rng = np.random.default_rng(5)
        H = rng.standard_normal((50, 3, 3)) + 1j * rng.standard_normal((50, 3, 3))
        y = rng.standard_normal((50, 3)) + 1j * rng.standard_normal((50, 3))
        out = lmmse_equalize(H, y, np.ones(50), psi=np.zeros(50))
        np.testing.assert_allclose(out.x_hat.numpy(), np.linalg.solve(H, y[..., None])[..., 0], atol=1e-8)

    def test_perfect_csi_recovers_symbols(self):
        rng = np.random.default_rng(6)
        H = rng.standard_normal((20, 4, 4)) + 1j * rng.standard_normal((20, 4, 4))
        x = qam(4).points[rng.integers(0, 16, (20, 4))]
        out = lmmse_equalize(H, np.einsum("nrt,nt->nr", H, x), 1e-14)
        np.testing.assert_allclose(out.x_hat.numpy(), x, atol=1e-8)

    def test_residual_nonnegative(self):
        rng = np.random.default_rng(7)
        H = rng.standard_normal((200, 4, 2)) + 1j * rng.standard_normal((200, 4, 2))
        out = lmmse_equalize(H, np.zeros((200, 4), complex), rng.uniform(0.01, 2, 200))
        assert np.all(out.sigma_res.value >= 0)

    def test_singular(self):
        H = np.array([[1.0, 1.0], [1.0, 1.0]], dtype=complex)
        with pytest.raises(SingularError):
            lmmse_equalize(H, np.ones(2), 0.0)

    def test_psi_gradient(self):
        rng = np.random.default_rng(8)
        H = rng.standard_normal((10, 2, 2)) + 1j * rng.standard_normal((10, 2, 2))
        y = rng.standard_normal((10, 2)) + 1j * rng.standard_normal((10, 2))
        psi = Tensor(np.ones(10), requires_grad=True)
        out = lmmse_equalize(H, y, 0.5, psi=psi)
        backward((out.x_hat.abs2() + out.sigma_res).sum())
        assert np.all(np.abs(psi.grad) > 0)

    def test_prb_shift_invariance(self):
        lay = build_grid_layout(2, 1)
        psi = np.arange(168, dtype=float).reshape(12, 14)
        idx = prb_index(lay)
        v = prb_lookup(psi, idx).value
        first = lay.data_res[:, 0] < 12
        np.testing.assert_array_equal(v[first], v[~first])


class TestKernelCount:
    @pytest.mark.parametrize("n,nr,expect", [(2, 4, 158), (4, 16, 2042), (1, 1, 14)])
    def test_reference_values(self, n, nr, expect):
        rng = np.random.default_rng(0)
        c = MultCounter()
        H = rng.standard_normal((nr, n)) + 1j * rng.standard_normal((nr, n))
        lmmse_kernel(H, np.ones(nr), 0.5, 1.0, c)
        assert c.count == expect == lmmse_formula(n, nr)

    def test_random_configs_agree_with_vectorized(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            n = int(rng.integers(1, 6))
            nr = int(rng.integers(n, 17))
            H = rng.standard_normal((nr, n)) + 1j * rng.standard_normal((nr, n))
            y = rng.standard_normal(nr) + 1j * rng.standard_normal(nr)
            std, psi = rng.uniform(0.1, 1), rng.uniform(0.5, 2)
            c = MultCounter()
            x, s = lmmse_kernel(H, y, std, psi, c)
            assert c.count == lmmse_formula(n, nr)
            ref = lmmse_equalize(H, y, std**2, psi=psi)
            np.testing.assert_allclose(x, ref.x_hat.numpy(), atol=1e-10)
            np.testing.assert_allclose(s, ref.sigma_res.value, atol=1e-10)


class TestDemap:
    def test_origin_qpsk(self):
        llr = max_log_demap(np.zeros(1, complex), np.ones(1), qam(2))
        np.testing.assert_array_equal(llr.value, 0.0)

    def test_on_point_both_ones(self):
        c = qam(2)
        i = int(np.flatnonzero((c.labels == 1).all(axis=1))[0])
        llr = max_log_demap(c.points[i:i + 1], np.ones(1), c)
        np.testing.assert_allclose(llr.value, [[2.0, 2.0]])

    @pytest.mark.parametrize("B", [2, 4, 6])
    def test_gamma_scaling(self, B):
        rng = np.random.default_rng(B)
        x = rng.standard_normal(50) + 1j * rng.standard_normal(50)
        s = rng.uniform(0.5, 1.5, 50)
        a = max_log_demap(x, s, qam(B), gamma=1.0, clip=None).value
        b = max_log_demap(x, s, qam(B), gamma=2.0, clip=None).value
        np.testing.assert_allclose(b, a / 2)
        np.testing.assert_array_equal(np.sign(a), np.sign(b))

    @pytest.mark.parametrize("B", [2, 4, 6])
    def test_sign_matches_hard_decision(self, B):
        from mdx.phy import hard_demap

        rng = np.random.default_rng(10 + B)
        x = (rng.standard_normal(1000) + 1j * rng.standard_normal(1000)) * 0.8
        llr = max_log_demap(x, np.full(1000, 0.3), qam(B), clip=None).value
        hard = hard_demap(x, qam(B))
        nz = llr != 0
        np.testing.assert_array_equal((llr > 0)[nz], (hard == 1)[nz])

    def test_inverse_scale(self):
        x = np.array([0.3 + 0.1j, -0.5 - 0.9j])
        a = max_log_demap(x, np.array([1.0, 1.0]), qam(4), clip=None).value
        b = max_log_demap(x, np.array([0.25, 0.25]), qam(4), clip=None).value
        np.testing.assert_allclose(b / np.where(a == 0, 1, a), np.where(a == 0, 1, 4.0))

    def test_floor_and_clip(self):
        llr = max_log_demap(np.array([0.7 + 0.7j]), np.zeros(1), qam(2))
        np.testing.assert_allclose(np.abs(llr.value), 20.0)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            max_log_demap(np.zeros(3, complex), np.ones(2), qam(2))


class TestBaseline:
    def test_perfect_csi_noiseless(self):
        b = simulate_batch(1, 2, 4, 4, [200.0], ChannelConfig(kind="block"), 2)
        r = run_baseline("PERFECT_CSI_LMMSE", b.Y, b.layout, b.pilots, b.noise_var, b.constellation, b.H)
        assert np.sum((r.llr > 0) != b.bits) == 0

    def test_ls_equals_perfect_on_flat_channel(self):
        lay = build_grid_layout(2, 2)
        pilots = [generate_dmrs(n, lay, 0) for n in range(2)]
        rng = np.random.default_rng(3)
        h = rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2))
        H = np.broadcast_to(h, (24, 14, 4, 2))
        Y = transmit(lay, pilots, H)
        ls = run_baseline("LS_LMMSE", Y, lay, pilots, 0.1, qam(2))
        pc = run_baseline("PERFECT_CSI_LMMSE", Y, lay, pilots, 0.1, qam(2), H[None])
        assert np.max(np.abs(ls.llr - pc.llr)) < 1e-6

    def test_empty_data_set(self):
        lay = build_grid_layout(1, 1, dmrs_symbols=tuple(range(14)))
        pilots = [generate_dmrs(0, lay, 0)]
        r = run_baseline("LS_LMMSE", np.ones((2, 12, 14, 2)), lay, pilots, 0.1, qam(2))
        assert r.llr.shape == (2, 0, 1, 2)

    def test_gather_order(self):
        lay = build_grid_layout(1, 1)
        g = np.arange(168).reshape(1, 12, 14)
        np.testing.assert_array_equal(gather_data(g, lay)[0], lay.data_indices)
