import numpy as np
import pytest

from riskfusion import dataset
from riskfusion.dataset import (
    FetchError,
    FeatureSet,
    IntegrityError,
    MfeatParseError,
    SplitSpec,
    fetch,
    format_mfeat,
    import_directory,
    load,
    parse_mfeat,
    split,
    split_indices,
)


def morph_text(rows=2000, seed=0):
    rng = np.random.default_rng(seed)
    return "".join(" ".join(f"{v:.6f}" for v in row) + "\n" for row in rng.normal(size=(rows, 6)))


@pytest.fixture
def mirror(tmp_path):
    """A local directory laid out like the remote repository."""
    d = tmp_path / "remote"
    d.mkdir()
    (d / "mfeat-mor").write_text(morph_text())
    return d


class TestParse:
    def test_morph(self):
        fs = parse_mfeat("morph", morph_text())
        assert fs.dim == 6 and fs.matrix.shape == (2000, 6)
        assert not fs.matrix.flags.writeable

    def test_labels_follow_blocks(self):
        fs = parse_mfeat("morph", morph_text())
        assert np.all(fs.labels[:200] == 0) and np.all(fs.labels[1800:] == 9)
        np.testing.assert_array_equal(np.bincount(fs.labels), [200] * 10)

    def test_row_count(self):
        with pytest.raises(MfeatParseError, match="expected 2000 rows"):
            parse_mfeat("morph", morph_text(1999))

    def test_column_count_names_line(self):
        lines = morph_text().splitlines()
        lines[41] += " 1.0"
        with pytest.raises(MfeatParseError, match="line 42 has 7 columns"):
            parse_mfeat("morph", "\n".join(lines))

    def test_bad_token_names_line_and_column(self):
        lines = morph_text().splitlines()
        fields = lines[9].split()
        fields[3] = "x1.5"
        lines[9] = " ".join(fields)
        with pytest.raises(MfeatParseError, match="line 10, column 4"):
            parse_mfeat("morph", "\n".join(lines))

    def test_unknown_set(self):
        with pytest.raises(ValueError):
            parse_mfeat("colour", "")

    def test_round_trip(self):
        fs = parse_mfeat("morph", morph_text())
        again = parse_mfeat("morph", format_mfeat(fs))
        np.testing.assert_array_equal(again.matrix, fs.matrix)


class TestCache:
    def test_download_then_cache_hit(self, mirror, tmp_path):
        cache = tmp_path / "cache"
        url = mirror.as_uri()
        text = fetch("morph", cache, url)
        assert (cache / "mfeat-morph").read_text() == text
        assert "morph" in (cache / "index").read_text()
        (mirror / "mfeat-mor").unlink()
        assert fetch("morph", cache, url) == text
        assert load("morph", cache, "http://invalid.invalid").dim == 6

    def test_cold_cache_unreachable(self, tmp_path):
        cache = tmp_path / "cache"
        with pytest.raises(FetchError, match="mfeat-morph"):
            fetch("morph", cache, (tmp_path / "nowhere").as_uri())
        assert [p.name for p in cache.iterdir() if not p.name.endswith(".lock")] == []

    def test_invalid_download_not_cached(self, tmp_path, mirror):
        (mirror / "mfeat-mor").write_text(morph_text(10))
        cache = tmp_path / "cache"
        with pytest.raises(MfeatParseError):
            fetch("morph", cache, mirror.as_uri())
        assert not (cache / "mfeat-morph").exists()

    def test_tampered_cache(self, mirror, tmp_path):
        cache = tmp_path / "cache"
        fetch("morph", cache, mirror.as_uri())
        path = cache / "mfeat-morph"
        path.write_text(path.read_text().replace("0", "1", 1))
        with pytest.raises(IntegrityError):
            fetch("morph", cache, mirror.as_uri())

    def test_cache_without_record_is_replaced(self, mirror, tmp_path):
        cache = tmp_path / "cache"
        cache.mkdir()
        (cache / "mfeat-morph").write_text("stale")
        assert fetch("morph", cache, mirror.as_uri()) == (mirror / "mfeat-mor").read_text()

    def test_import_plain_directory(self, mirror, tmp_path):
        cache = tmp_path / "cache"
        assert import_directory(mirror, cache, ["morph"]) == ["morph"]
        assert load("morph", cache, "http://invalid.invalid").dim == 6

    def test_import_labelled_csv(self, tmp_path):
        src = tmp_path / "csv"
        src.mkdir()
        rows = morph_text().splitlines()
        body = "".join(",".join(r.split()) + f",{i // 200}.0\n" for i, r in enumerate(rows))
        (src / "mfeat-mor.csv").write_text("a,b,c,d,e,f,label\n" + body)
        cache = tmp_path / "cache"
        import_directory(src, cache, ["morph"])
        np.testing.assert_array_equal(
            load("morph", cache).matrix, parse_mfeat("morph", "\n".join(rows)).matrix
        )

    def test_import_csv_label_order_checked(self, tmp_path):
        src = tmp_path / "csv"
        src.mkdir()
        rows = morph_text().splitlines()
        body = "".join(",".join(r.split()) + ",3\n" for r in rows)
        (src / "mfeat-mor.csv").write_text("h\n" + body)
        with pytest.raises(MfeatParseError, match="label"):
            import_directory(src, tmp_path / "cache", ["morph"])

    def test_import_missing(self, tmp_path):
        with pytest.raises(FetchError):
            import_directory(tmp_path, tmp_path / "cache", ["morph"])


class TestSplit:
    def test_first_block(self):
        train, test = split_indices(SplitSpec())
        assert train.size == test.size == 1000
        np.testing.assert_array_equal(train[:100], np.arange(100))
        np.testing.assert_array_equal(test[:100], np.arange(100, 200))

    def test_per_class_counts(self):
        fs = parse_mfeat("morph", morph_text())
        for spec in (SplitSpec(), SplitSpec(seed=7)):
            train, test = split(fs, spec)
            np.testing.assert_array_equal(np.bincount(train.y), [100] * 10)
            np.testing.assert_array_equal(np.bincount(test.y), [100] * 10)
            assert set(train.indices).isdisjoint(test.indices)

    def test_seeded_alignment(self):
        a = parse_mfeat("morph", morph_text(seed=1))
        b = parse_mfeat("morph", morph_text(seed=2))
        (ta, sa), (tb, sb) = split(a, SplitSpec(seed=7)), split(b, SplitSpec(seed=7))
        np.testing.assert_array_equal(ta.indices, tb.indices)
        np.testing.assert_array_equal(sa.indices, sb.indices)

    def test_seeds_differ(self):
        assert not np.array_equal(split_indices(SplitSpec(seed=0))[0], split_indices(SplitSpec(seed=1))[0])

    @pytest.mark.parametrize("text, seed", [("first", None), ("seeded:3", 3), ("seeded:-1", -1)])
    def test_parse(self, text, seed):
        spec = SplitSpec.parse(text)
        assert spec.seed == seed and str(spec) == text

    @pytest.mark.parametrize("text", ["random", "seeded:", "seeded:x"])
    def test_parse_errors(self, text):
        with pytest.raises(ValueError):
            SplitSpec.parse(text)

    def test_train_size_range(self):
        with pytest.raises(ValueError):
            SplitSpec(200)


@pytest.mark.mfeat
class TestRealData:
    def test_shapes(self, feature_sets):
        assert {n: fs.dim for n, fs in feature_sets.items()} == {
            n: d for n, (_, d) in dataset.FEATURE_SETS.items()
        }
        assert all(fs.matrix.shape[0] == 2000 for fs in feature_sets.values())

    def test_pixel_values_are_small_integers(self, feature_sets):
        pix = feature_sets["pixel"].matrix
        assert pix.min() >= 0 and pix.max() <= 6 and np.all(pix == np.round(pix))

    def test_class_blocks_are_distinct(self, feature_sets):
        # class means of the pixel averages differ between neighbouring blocks
        pix = feature_sets["pixel"].matrix
        means = pix.reshape(10, 200, -1).mean(axis=1)
        assert np.min(np.linalg.norm(np.diff(means, axis=0), axis=1)) > 1.0

    def test_feature_set_type(self, feature_sets):
        assert all(isinstance(fs, FeatureSet) for fs in feature_sets.values())
