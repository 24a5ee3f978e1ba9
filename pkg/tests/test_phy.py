import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mdx.errors import ConfigError, ShapeError
from mdx.phy import build_grid_layout, generate_dmrs, hard_demap, map_to_grid, qam, qam_modulate


class TestLayout:
    def test_one_prb_two_layers_counts(self):
        lay = build_grid_layout(1, 2)
        assert lay.F == 12 and lay.S == 14
        for n in range(2):
            assert len(lay.pilot_res(n)) == 12
        assert lay.num_data == 144

    def test_pilots_on_dmrs_symbols(self):
        lay = build_grid_layout(3, 4)
        for n in range(4):
            assert set(lay.pilot_res(n)[:, 1]) == {2, 11}

    @pytest.mark.parametrize("bad", [0, -1])
    def test_no_prbs_rejected(self, bad):
        with pytest.raises(ConfigError):
            build_grid_layout(bad, 1)

    @pytest.mark.parametrize("layers", [0, 5])
    def test_layer_count_rejected(self, layers):
        with pytest.raises(ConfigError):
            build_grid_layout(1, layers)

    def test_group_size_rejected(self):
        with pytest.raises(ConfigError):
            build_grid_layout(1, 1, cdm_group_size=3)

    @pytest.mark.parametrize("n_layers", [1, 2, 3, 4])
    def test_partition(self, n_layers):
        lay = build_grid_layout(2, n_layers)
        for n in range(n_layers):
            data = lay.data_mask
            own = lay.pilot_mask(n)
            other = lay.reserved_mask(n)
            total = data.astype(int) + own.astype(int) + other.astype(int)
            assert np.all(total == 1)
            assert not np.any(data & own)

    def test_cdm_assignment(self):
        lay = build_grid_layout(1, 4)
        assert [lay.cdm_assignment(n) for n in range(4)] == [(0, 0), (0, 1), (1, 0), (1, 1)]
        with pytest.raises(ConfigError):
            lay.cdm_assignment(4)

    def test_json_dump(self):
        doc = json.loads(build_grid_layout(1, 2).to_json())
        assert len(doc["data"]) == 144
        assert doc["layers"][1]["occ"] == [1, -1]
        assert len(doc["layers"][0]["pilots"]) == 12


class TestDmrs:
    def test_unit_magnitude(self):
        lay = build_grid_layout(4, 4)
        for n in range(4):
            assert np.allclose(np.abs(generate_dmrs(n, lay, 3)), 1.0, atol=1e-12)

    def test_deterministic(self):
        lay = build_grid_layout(2, 2)
        np.testing.assert_array_equal(generate_dmrs(1, lay, 7), generate_dmrs(1, lay, 7))
        assert not np.array_equal(generate_dmrs(0, lay, 7), generate_dmrs(0, lay, 8))

    def test_occ_sign_pattern(self):
        lay = build_grid_layout(1, 2)
        p0 = generate_dmrs(0, lay, 0).reshape(-1, 2, 2)  # (pair, member, symbol)
        p1 = generate_dmrs(1, lay, 0).reshape(-1, 2, 2)
        ratio = p1 / p0
        np.testing.assert_allclose(ratio[:, 0], 1.0)
        np.testing.assert_allclose(ratio[:, 1], -1.0)

    def test_occ_orthogonal_over_pair(self):
        lay = build_grid_layout(3, 4)
        for a, b in [(0, 1), (2, 3)]:
            pa = generate_dmrs(a, lay, 5).reshape(-1, 2, 2)
            pb = generate_dmrs(b, lay, 5).reshape(-1, 2, 2)
            inner = np.sum(pa * pb.conj(), axis=1)
            np.testing.assert_allclose(inner, 0.0, atol=1e-12)


class TestQam:
    @pytest.mark.parametrize("B", [2, 4, 6])
    def test_unit_energy(self, B):
        assert abs(np.mean(np.abs(qam(B).points) ** 2) - 1.0) < 1e-12

    def test_qpsk_points(self):
        pts = qam(2).points
        np.testing.assert_allclose(np.abs(pts) ** 2, 1.0)
        np.testing.assert_allclose(sorted(pts.real), [-1 / np.sqrt(2)] * 2 + [1 / np.sqrt(2)] * 2)

    def test_16qam_reference_labels(self):
        # ((1-2b0)(2-(1-2b2)) + j(1-2b1)(2-(1-2b3))) / sqrt(10)
        c = qam(4)
        for bits in itertools.product([0, 1], repeat=4):
            b0, b1, b2, b3 = bits
            ref = ((1 - 2 * b0) * (2 - (1 - 2 * b2)) + 1j * (1 - 2 * b1) * (2 - (1 - 2 * b3))) / np.sqrt(10)
            assert abs(qam_modulate(np.array(bits), c)[0] - ref) < 1e-12

    @pytest.mark.parametrize("B", [2, 4, 6])
    def test_exhaustive_round_trip(self, B):
        c = qam(B)
        bits = c.labels.reshape(-1)
        back = hard_demap(qam_modulate(bits, c), c).reshape(-1)
        np.testing.assert_array_equal(back, bits)

    @pytest.mark.parametrize("B", [4, 6])
    def test_gray_neighbours(self, B):
        c = qam(B)
        step = np.min(np.abs(np.diff(np.unique(np.round(c.points.real, 12)))))
        for i, j in itertools.combinations(range(c.size), 2):
            d = c.points[i] - c.points[j]
            axis_neighbour = (abs(abs(d.real) - step) < 1e-9 and abs(d.imag) < 1e-9) or (
                abs(abs(d.imag) - step) < 1e-9 and abs(d.real) < 1e-9
            )
            if axis_neighbour:
                assert np.sum(c.labels[i] != c.labels[j]) == 1

    @pytest.mark.parametrize("B", [2, 4, 6])
    def test_bit_sets_balanced(self, B):
        c = qam(B)
        assert c.zero_sets.shape == c.one_sets.shape == (B, 2 ** (B - 1))

    def test_bad_bit_count(self):
        with pytest.raises(ShapeError):
            qam_modulate(np.zeros(5, dtype=int), qam(4))

    def test_unsupported_order(self):
        with pytest.raises(ConfigError):
            qam(3)

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.integers(0, 1), min_size=6, max_size=60).filter(lambda v: len(v) % 6 == 0))
    def test_round_trip_random(self, bits):
        c = qam(6)
        back = hard_demap(qam_modulate(np.array(bits), c), c).reshape(-1)
        assert back.tolist() == bits


class TestMapping:
    def _grid(self, n_layers=2):
        lay = build_grid_layout(1, n_layers)
        rng = np.random.default_rng(0)
        syms = qam_modulate(rng.integers(0, 2, (n_layers, lay.num_data * 2)), qam(2))
        pilots = [generate_dmrs(n, lay, 0) for n in range(n_layers)]
        return lay, syms, pilots, map_to_grid(syms, pilots, lay)

    def test_read_back_data(self):
        lay, syms, _, grid = self._grid()
        flat = grid.values.reshape(-1, lay.n_layers)
        np.testing.assert_array_equal(flat[lay.data_indices].T, syms)

    def test_re_counts_per_layer(self):
        lay, _, _, grid = self._grid()
        for n in range(lay.n_layers):
            v = grid.values[..., n]
            assert np.count_nonzero(v[lay.data_mask]) == 144
            assert np.count_nonzero(v[lay.pilot_mask(n)]) == 12
            assert np.count_nonzero(v[lay.reserved_mask(n)]) == 0
            assert lay.reserved_mask(n).sum() == 12

    def test_dmrs_energy_on_comb(self):
        lay, _, _, grid = self._grid(4)
        for n in range(4):
            col = grid.values[:, 2, n]
            group = n // 2
            assert np.all(col[np.arange(12) % 2 != group] == 0)
            assert np.all(np.abs(col[np.arange(12) % 2 == group]) > 0)

    def test_shape_mismatch(self):
        lay, syms, pilots, _ = self._grid()
        with pytest.raises(ShapeError):
            map_to_grid(syms[:, :-1], pilots, lay)
