"""Dataset parsing, normalization, caching, views, and synthetic blobs."""
from __future__ import annotations

import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ulbench import data
from ulbench.errors import ConfigError, DataFormatError, NumericalError


def parse(text, expected_dim=None):
    return data.parse_libsvm(io.StringIO(text), expected_dim)


class TestParseLibsvm:
    def test_single_line_exact(self):
        ds = parse("1 1:0.5 3:0.25\n", expected_dim=3)
        assert ds.features.tolist() == [[0.5, 0.0, 0.25]]
        assert ds.labels.tolist() == [0]
        assert ds.label_values == (1.0,)

    def test_signed_labels_map_ascending(self):
        ds = parse("-1 1:1.0\n+1 2:1.0\n")
        assert ds.label_values == (-1.0, 1.0)
        assert ds.labels.tolist() == [0, 1]
        assert ds.d == 2

    def test_dimension_from_max_index(self):
        ds = parse("2 5:1.0\n7 2:3.0\n")
        assert ds.d == 5
        assert ds.k == 2
        assert ds.features[1, 1] == 3.0

    def test_bad_token_reports_line_number(self):
        with pytest.raises(DataFormatError, match="line 2"):
            parse("1 1:1.0\n1 1:abc\n")

    def test_bad_label_reports_line_number(self):
        with pytest.raises(DataFormatError, match="line 1"):
            parse("one 1:1.0\n")

    def test_non_ascending_indices_rejected(self):
        with pytest.raises(DataFormatError, match="ascending"):
            parse("1 2:1.0 2:2.0\n")
        with pytest.raises(DataFormatError, match="ascending"):
            parse("1 3:1.0 2:2.0\n")

    def test_index_beyond_expected_dim_rejected(self):
        with pytest.raises(DataFormatError, match="exceeds"):
            parse("1 4:1.0\n", expected_dim=3)

    def test_zero_index_rejected(self):
        with pytest.raises(DataFormatError, match="1-based"):
            parse("1 0:1.0\n")

    def test_empty_input_rejected(self):
        with pytest.raises(DataFormatError, match="empty"):
            parse("")

    def test_blank_lines_skipped(self):
        ds = parse("\n1 1:1.0\n\n-1 1:2.0\n\n")
        assert ds.n == 2

    def test_roundtrip_identical(self):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((12, 5))
        X[rng.random((12, 5)) < 0.3] = 0.0  # keep genuine sparsity in play
        y = rng.integers(0, 3, size=12)
        ds = data.make_dataset(X, y, (-1.0, 2.5, 7.0))
        buf = io.StringIO()
        data.serialize_libsvm(ds, buf)
        back = data.parse_libsvm(io.StringIO(buf.getvalue()), expected_dim=5)
        assert np.array_equal(back.features, ds.features)
        assert np.array_equal(back.labels, ds.labels)
        assert back.label_values == ds.label_values


class TestFilterBinary:
    def test_pair_order_defines_mapping(self):
        text = "3 1:1.0\n8 1:2.0\n5 1:3.0\n8 1:4.0\n"
        ds = data.filter_binary(parse(text), (3, 8))
        assert ds.n == 3
        assert ds.label_values == (3.0, 8.0)
        assert ds.labels.tolist() == [0, 1, 1]

    def test_missing_label_rejected(self):
        with pytest.raises(ConfigError, match="not present"):
            data.filter_binary(parse("1 1:1.0\n2 1:1.0\n"), (1, 9))


class TestNormalize:
    def test_known_scale(self):
        ds = data.make_dataset(np.array([[3.0, 4.0], [0.0, 1.0]]), np.array([0, 1]))
        out, scale = data.max_l2_normalize(ds)
        assert scale == 5.0
        assert out.features.tolist() == [[0.6, 0.8], [0.0, 0.2]]

    def test_idempotent_exactly(self):
        rng = np.random.default_rng(3)
        ds = data.make_dataset(rng.standard_normal((50, 4)) * 7, np.zeros(50, dtype=int), (0.0,))
        once, s1 = data.max_l2_normalize(ds)
        twice, s2 = data.max_l2_normalize(once)
        assert s2 == 1.0
        assert np.array_equal(once.features, twice.features)

    def test_norm_bound_after_normalize(self):
        rng = np.random.default_rng(4)
        ds = data.make_dataset(rng.standard_normal((200, 6)) * 3, np.zeros(200, dtype=int), (0.0,))
        out, _ = data.max_l2_normalize(ds)
        assert out.row_norms().max() <= 1 + 1e-12

    def test_all_zero_rejected(self):
        ds = data.make_dataset(np.zeros((3, 2)), np.zeros(3, dtype=int), (0.0,))
        with pytest.raises(NumericalError, match="zero"):
            data.max_l2_normalize(ds)

    def test_test_split_shares_train_scale(self):
        train, test, scale = data.synthetic_split(100, 60, 4, seed=9)
        raw_test = data.synthetic_blobs(60, 4, seed=10)
        assert np.allclose(raw_test.features / scale, test.features)


class TestCache:
    def test_roundtrip_bitwise(self, tmp_path):
        rng = np.random.default_rng(5)
        ds = data.make_dataset(rng.standard_normal((20, 7)), rng.integers(0, 4, 20), (1.0, 2.0, 4.0, 9.0))
        p = tmp_path / "x.ulds"
        data.save_cache(ds, p, scale=2.5)
        back = data.load_cache(p)
        assert np.array_equal(back.features, ds.features)
        assert np.array_equal(back.labels, ds.labels)
        assert back.label_values == ds.label_values
        assert data.cache_scale(p) == 2.5

    def test_bad_magic_rejected(self, tmp_path):
        p = tmp_path / "x.ulds"
        p.write_bytes(b"NOPE" + b"\x00" * 60)
        with pytest.raises(DataFormatError, match="magic"):
            data.load_cache(p)

    def test_truncated_rejected(self, tmp_path):
        rng = np.random.default_rng(6)
        ds = data.make_dataset(rng.standard_normal((4, 3)), np.zeros(4, dtype=int), (0.0,))
        p = tmp_path / "x.ulds"
        data.save_cache(ds, p)
        p.write_bytes(p.read_bytes()[:-5])
        with pytest.raises(DataFormatError, match="bytes"):
            data.load_cache(p)


class TestViews:
    def test_delete_moves_ids(self):
        ds = data.make_dataset(np.ones((6, 2)), np.zeros(6, dtype=int), (0.0,))
        v = data.full_view(ds)
        v2 = data.delete_points(v, [4, 1])
        assert v2.remaining.tolist() == [0, 2, 3, 5]
        assert v2.deleted.tolist() == [1, 4]
        assert v.remaining.tolist() == list(range(6))  # original untouched

    def test_redelete_rejected(self):
        ds = data.make_dataset(np.ones((5, 2)), np.zeros(5, dtype=int), (0.0,))
        v = data.delete_points(data.full_view(ds), [2])
        with pytest.raises(ConfigError, match="remaining"):
            data.delete_points(v, [2])

    def test_duplicate_ids_rejected(self):
        ds = data.make_dataset(np.ones((5, 2)), np.zeros(5, dtype=int), (0.0,))
        with pytest.raises(ConfigError, match="unique"):
            data.delete_points(data.full_view(ds), [1, 1])

    def test_empty_request_rejected(self):
        ds = data.make_dataset(np.ones((5, 2)), np.zeros(5, dtype=int), (0.0,))
        with pytest.raises(ConfigError, match="at least one"):
            data.delete_points(data.full_view(ds), [])

    def test_delete_everything_allowed(self):
        ds = data.make_dataset(np.ones((3, 2)), np.zeros(3, dtype=int), (0.0,))
        v = data.delete_points(data.full_view(ds), [0, 1, 2])
        assert v.n_remaining == 0

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.sets(st.integers(min_value=0, max_value=19), min_size=1), max_size=5))
    def test_partition_invariant_under_any_sequence(self, batches):
        ds = data.make_dataset(np.ones((20, 2)), np.zeros(20, dtype=int), (0.0,))
        v = data.full_view(ds)
        for batch in batches:
            ids = sorted(batch & set(v.remaining.tolist()))
            if not ids:
                continue
            v = data.delete_points(v, ids)
            together = np.concatenate([v.remaining, v.deleted])
            assert sorted(together.tolist()) == list(range(20))
            assert len(np.intersect1d(v.remaining, v.deleted)) == 0


class TestSignedLabels:
    def test_mapping(self):
        ds = data.make_dataset(np.ones((4, 2)), np.array([0, 1, 1, 0]), (0.0, 1.0))
        assert data.signed_labels(ds).tolist() == [-1.0, 1.0, 1.0, -1.0]
        assert data.signed_labels(ds, positive_class=0).tolist() == [1.0, -1.0, -1.0, 1.0]

    def test_non_binary_needs_override(self):
        ds = data.make_dataset(np.ones((3, 2)), np.array([0, 1, 2]), (0.0, 1.0, 2.0))
        with pytest.raises(ConfigError, match="k=2"):
            data.binary_task(data.full_view(ds))
        X, y = data.binary_task(data.full_view(ds), y=np.array([1.0, -1.0, -1.0]))
        assert y.tolist() == [1.0, -1.0, -1.0]


class TestBlobs:
    def test_shapes_and_determinism(self):
        a = data.synthetic_blobs(80, 5, seed=2)
        b = data.synthetic_blobs(80, 5, seed=2)
        assert a.features.shape == (80, 5)
        assert np.array_equal(a.features, b.features)
        assert set(a.labels.tolist()) == {0, 1}

    def test_bias_column_constant_before_normalize(self):
        ds = data.synthetic_blobs(30, 4, seed=1, bias_column=True)
        assert np.all(ds.features[:, -1] == 1.0)

    def test_class_ratio(self):
        ds = data.synthetic_blobs(100, 4, class_ratio=0.3, seed=7)
        assert int(np.sum(ds.labels == 0)) == 30

    def test_separation_moves_first_coordinate(self):
        ds = data.synthetic_blobs(4000, 3, separation=6.0, noise=1.0, seed=3, bias_column=False)
        mean0 = ds.features[ds.labels == 0, 0].mean()
        mean1 = ds.features[ds.labels == 1, 0].mean()
        assert mean1 - mean0 == pytest.approx(6.0, abs=0.2)
