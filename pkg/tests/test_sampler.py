"""Tests for deletion-request sampling.

Informed selection is checked against a brute-force sort oracle and
uniform class choice against binomial confidence bands, so the sampler's
claims are validated without reusing its own selection code.
"""
import numpy as np
import pytest

from ulbench.data import delete_points, full_view, make_dataset
from ulbench.errors import ConfigError, DataFormatError
from ulbench.sampler import (
    DISTRIBUTIONS,
    DeletionSpec,
    deletion_count,
    load_deletion_list,
    sample_deletions,
    save_deletion_list,
)


def dataset_with_norms(norms, labels):
    """Rows whose feature L2 norms are exactly the given values."""
    feats = np.zeros((len(norms), 3))
    feats[:, 0] = norms
    return make_dataset(feats, np.asarray(labels, dtype=np.int64))


def random_view(rng, n=60, d=4, k=3, drop=0):
    feats = rng.standard_normal((n, d))
    labels = rng.integers(k, size=n)
    # force every class to be represented
    labels[:k] = np.arange(k)
    view = full_view(make_dataset(feats, labels.astype(np.int64)))
    if drop:
        gone = rng.choice(n, size=drop, replace=False)
        view = delete_points(view, gone)
    return view


def sorted_class_members(view, c):
    """Brute-force oracle: class members by norm descending, index ascending."""
    members = view.remaining[view.base.labels[view.remaining] == c]
    norms = np.linalg.norm(view.base.features[members], axis=1)
    order = sorted(range(len(members)), key=lambda i: (-norms[i], members[i]))
    return members[order]


class TestDeletionSpec:
    def test_distributions_enumerated(self):
        assert DISTRIBUTIONS == (
            "uniform-random",
            "uniform-informed",
            "targeted-random",
            "targeted-informed",
        )
        for dist in DISTRIBUTIONS:
            DeletionSpec(distribution=dist, fraction=0.5, seed=0)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"distribution": "targeted-top", "fraction": 0.5, "seed": 0},
            {"distribution": "uniform-random", "fraction": 0.0, "seed": 0},
            {"distribution": "uniform-random", "fraction": 1.5, "seed": 0},
            {"distribution": "uniform-random", "fraction": -0.1, "seed": 0},
            {"distribution": "uniform-random", "fraction": 0.5, "seed": -1},
            {"distribution": "targeted-random", "fraction": 0.5, "seed": 0, "target_class": -2},
        ],
    )
    def test_rejects_bad_fields(self, kwargs):
        with pytest.raises(ConfigError):
            DeletionSpec(**kwargs)


class TestDeletionCount:
    def test_published_deletion_volumes(self):
        # benchmark deletion volumes for the standard corpus sizes
        assert deletion_count(0.05, 522910) == 26145
        assert deletion_count(0.10, 522910) == 52291
        assert deletion_count(0.15, 522910) == 78436
        assert deletion_count(0.2, 11982) == 2396
        assert deletion_count(0.3, 11982) == 3594
        assert deletion_count(0.375, 11982) == 4493
        assert deletion_count(0.01, 60000) == 600

    def test_truncates_fractional_products(self):
        assert deletion_count(0.5, 5) == 2
        assert deletion_count(0.375, 11982) == 4493  # 4493.25 truncates down

    def test_binary_rounding_does_not_lose_integral_products(self):
        # 0.29 * 100 is 28.999999999999996 in binary floating point
        assert deletion_count(0.29, 100) == 29
        assert deletion_count(0.1, 30) == 3

    def test_full_fraction_takes_everything(self):
        assert deletion_count(1.0, 10) == 10

    def test_rejects_empty_selections(self):
        with pytest.raises(ConfigError):
            deletion_count(0.001, 100)
        with pytest.raises(ConfigError):
            deletion_count(0.5, 0)


class TestInformedSelection:
    def test_norm_descending_with_index_tie_break(self):
        # class-0 rows: idx 1 norm 2, idx 2 norm 3, idx 5 norm 3; the two
        # norm-3 rows tie and the lower index goes first
        ds = dataset_with_norms(
            norms=[9.0, 2.0, 3.0, 9.0, 9.0, 3.0],
            labels=[1, 0, 0, 1, 1, 0],
        )
        spec = DeletionSpec(
            distribution="targeted-informed", fraction=2 / 6, seed=0, target_class=0
        )
        out = sample_deletions(full_view(ds), spec)
        np.testing.assert_array_equal(out, [2, 5])

    def test_equal_norms_fall_back_to_ascending_index(self):
        ds = dataset_with_norms(norms=[1.0] * 6, labels=[0] * 6)
        spec = DeletionSpec(
            distribution="targeted-informed", fraction=0.5, seed=3, target_class=0
        )
        np.testing.assert_array_equal(sample_deletions(full_view(ds), spec), [0, 1, 2])

    def test_targeted_informed_equals_sort_oracle(self):
        rng = np.random.default_rng(77)
        for trial in range(40):
            view = random_view(rng, drop=int(rng.integers(0, 10)))
            c = int(rng.integers(3))
            pool = sorted_class_members(view, c)
            m = int(rng.integers(1, len(pool) + 1))
            spec = DeletionSpec(
                distribution="targeted-informed",
                fraction=m / view.base.n,
                seed=trial,
                target_class=c,
            )
            out = sample_deletions(view, spec)
            np.testing.assert_array_equal(out, pool[:m])

    def test_uniform_informed_takes_sorted_prefix_per_class(self):
        rng = np.random.default_rng(5)
        for trial in range(10):
            view = random_view(rng, n=80, drop=6)
            spec = DeletionSpec(distribution="uniform-informed", fraction=0.25, seed=trial)
            out = sample_deletions(view, spec)
            labels = view.base.labels[out]
            for c in range(view.base.k):
                chosen = out[labels == c]
                # within a class the draw order follows the norm ranking
                np.testing.assert_array_equal(chosen, sorted_class_members(view, c)[: len(chosen)])


class TestRandomSelection:
    def make_balanced(self, n, seed=0):
        rng = np.random.default_rng(seed)
        feats = rng.standard_normal((n, 2))
        labels = np.arange(n) % 2
        return full_view(make_dataset(feats, labels.astype(np.int64)))

    def test_uniform_class_counts_within_binomial_band(self):
        view = self.make_balanced(30000)
        spec = DeletionSpec(distribution="uniform-random", fraction=1 / 3, seed=4)
        out = sample_deletions(view, spec)
        assert len(out) == 10000
        count0 = int(np.sum(view.base.labels[out] == 0))
        # 3 sigma band around B(10^4, 1/2)
        assert abs(count0 - 5000) <= 3 * np.sqrt(10000 * 0.25)

    def test_ids_unique_and_within_remaining(self):
        rng = np.random.default_rng(8)
        view = random_view(rng, n=100, drop=20)
        for dist in DISTRIBUTIONS:
            spec = DeletionSpec(distribution=dist, fraction=0.3, seed=2, target_class=0)
            out = sample_deletions(view, spec)
            assert len(out) == 30
            assert len(np.unique(out)) == len(out)
            assert np.isin(out, view.remaining).all()

    def test_deterministic_and_seed_sensitive(self):
        view = self.make_balanced(200)
        for dist in DISTRIBUTIONS:
            spec = DeletionSpec(distribution=dist, fraction=0.2, seed=6, target_class=1)
            np.testing.assert_array_equal(
                sample_deletions(view, spec), sample_deletions(view, spec)
            )
        a = sample_deletions(
            view, DeletionSpec(distribution="uniform-random", fraction=0.2, seed=6)
        )
        b = sample_deletions(
            view, DeletionSpec(distribution="uniform-random", fraction=0.2, seed=7)
        )
        assert not np.array_equal(a, b)

    def test_targeted_random_stays_in_target_class(self):
        view = self.make_balanced(200)
        spec = DeletionSpec(
            distribution="targeted-random", fraction=0.25, seed=1, target_class=1
        )
        out = sample_deletions(view, spec)
        assert (view.base.labels[out] == 1).all()

    def test_targeted_without_explicit_class_is_predetermined(self):
        view = self.make_balanced(200)
        spec = DeletionSpec(distribution="targeted-random", fraction=0.25, seed=12)
        out = sample_deletions(view, spec)
        # one class is drawn once from the seed, then held fixed
        assert len(np.unique(view.base.labels[out])) == 1
        np.testing.assert_array_equal(out, sample_deletions(view, spec))


class TestSamplingErrors:
    def test_class_exhaustion(self):
        ds = dataset_with_norms(
            norms=np.arange(1.0, 11.0), labels=[0, 0, 0, 1, 1, 1, 1, 1, 1, 1]
        )
        spec = DeletionSpec(
            distribution="targeted-random", fraction=0.5, seed=0, target_class=0
        )
        with pytest.raises(ConfigError):
            sample_deletions(full_view(ds), spec)

    def test_target_class_out_of_range(self):
        ds = dataset_with_norms(norms=np.arange(1.0, 5.0), labels=[0, 1, 0, 1])
        spec = DeletionSpec(
            distribution="targeted-informed", fraction=0.5, seed=0, target_class=2
        )
        with pytest.raises(ConfigError):
            sample_deletions(full_view(ds), spec)

    def test_more_than_remaining(self):
        ds = dataset_with_norms(norms=np.arange(1.0, 11.0), labels=[0, 1] * 5)
        view = delete_points(full_view(ds), [0, 1, 2, 3])
        spec = DeletionSpec(distribution="uniform-random", fraction=1.0, seed=0)
        with pytest.raises(ConfigError):
            sample_deletions(view, spec)

    def test_count_uses_initial_volume_across_rounds(self):
        ds = dataset_with_norms(norms=np.arange(1.0, 21.0), labels=[0, 1] * 10)
        view = full_view(ds)
        spec = DeletionSpec(distribution="uniform-random", fraction=0.2, seed=3)
        first = sample_deletions(view, spec)
        later = sample_deletions(delete_points(view, first), spec)
        # both rounds delete 20% of the initial 20 rows, not of what is left
        assert len(first) == len(later) == 4


class TestDeletionListFiles:
    def test_roundtrip_preserves_order(self, tmp_path):
        ids = np.array([7, 3, 11, 0], dtype=np.int64)
        path = tmp_path / "deletions.txt"
        save_deletion_list(ids, path)
        np.testing.assert_array_equal(load_deletion_list(path), ids)

    def test_file_is_newline_delimited_integers(self, tmp_path):
        path = tmp_path / "deletions.txt"
        save_deletion_list(np.array([5, 2], dtype=np.int64), path)
        assert path.read_text() == "5\n2\n"

    def test_empty_file_loads_empty(self, tmp_path):
        path = tmp_path / "deletions.txt"
        path.write_text("")
        assert len(load_deletion_list(path)) == 0

    def test_non_integer_content_rejected(self, tmp_path):
        path = tmp_path / "deletions.txt"
        path.write_text("1\ntwo\n3\n")
        with pytest.raises(DataFormatError):
            load_deletion_list(path)
