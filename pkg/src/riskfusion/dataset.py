"""UCI "Multiple Features" (mfeat) handwritten digits.

Six feature files describe the same 2000 digit images, 200 per class in
class order (rows 0-199 are zeros, 200-399 ones, ...).  Files are cached
under a local directory next to an ``index`` that records source URL, byte
length and SHA-256 of every cached file.
"""

import hashlib
import importlib.util
import logging
import os
import tempfile
import urllib.error
import urllib.request
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from filelock import FileLock

from .classifier import LabeledMatrix

__all__ = [
    "FEATURE_SETS",
    "N_ROWS",
    "N_CLASSES",
    "DEFAULT_BASE_URL",
    "DataError",
    "MfeatParseError",
    "FetchError",
    "IntegrityError",
    "FeatureSet",
    "SplitSpec",
    "parse_mfeat",
    "format_mfeat",
    "fetch",
    "load",
    "load_all",
    "install",
    "import_directory",
    "find_mvlearn_mirror",
    "split_indices",
    "split",
]

log = logging.getLogger(__name__)

# name -> (UCI file suffix, columns); order is the conventional set 1..6
FEATURE_SETS = {
    "fourier": ("fou", 76),
    "profiles": ("fac", 216),
    "kl": ("kar", 64),
    "pixel": ("pix", 240),
    "zernike": ("zer", 47),
    "morph": ("mor", 6),
}
N_ROWS = 2000
N_CLASSES = 10
ROWS_PER_CLASS = N_ROWS // N_CLASSES

DEFAULT_BASE_URL = "https://archive.ics.uci.edu/ml/machine-learning-databases/mfeat"
INDEX_NAME = "index"


class DataError(Exception):
    """Base class for dataset acquisition and parsing failures."""


class MfeatParseError(DataError):
    pass


class FetchError(DataError):
    pass


class IntegrityError(DataError):
    pass


def _check_name(name):
    if name not in FEATURE_SETS:
        raise ValueError(f"unknown feature set {name!r}; choose from {list(FEATURE_SETS)}")


@dataclass(frozen=True)
class FeatureSet:
    name: str
    matrix: np.ndarray

    @property
    def dim(self):
        return self.matrix.shape[1]

    @property
    def labels(self):
        return np.arange(self.matrix.shape[0]) // ROWS_PER_CLASS


@dataclass(frozen=True)
class SplitSpec:
    """Per-class train/test split.

    ``seed=None`` takes the first ``train_per_class`` rows of every class
    block; an integer seed draws them at random within each block.
    """

    train_per_class: int = 100
    seed: int | None = None

    def __post_init__(self):
        if not 0 < self.train_per_class < ROWS_PER_CLASS:
            raise ValueError(f"train_per_class must lie in (0, {ROWS_PER_CLASS})")

    @classmethod
    def parse(cls, text, train_per_class=100):
        """``"first"`` or ``"seeded:<n>"``."""
        if text == "first":
            return cls(train_per_class)
        kind, _, seed = text.partition(":")
        if kind == "seeded" and seed.lstrip("-").isdigit():
            return cls(train_per_class, int(seed))
        raise ValueError(f"split must be 'first' or 'seeded:<n>', got {text!r}")

    def __str__(self):
        return "first" if self.seed is None else f"seeded:{self.seed}"


def parse_mfeat(name, raw_text):
    """Parse one mfeat file (whitespace separated, one image per line)."""
    _check_name(name)
    dim = FEATURE_SETS[name][1]
    rows = []
    for lineno, line in enumerate(raw_text.splitlines(), start=1):
        fields = line.split()
        if not fields:
            continue
        if len(fields) != dim:
            raise MfeatParseError(
                f"{name}: line {lineno} has {len(fields)} columns, expected {dim}"
            )
        try:
            rows.append([float(f) for f in fields])
        except ValueError:
            col = next(i for i, f in enumerate(fields, 1) if not _is_float(f))
            raise MfeatParseError(
                f"{name}: line {lineno}, column {col}: cannot parse {fields[col - 1]!r}"
            ) from None
    if len(rows) != N_ROWS:
        raise MfeatParseError(f"{name}: expected {N_ROWS} rows, found {len(rows)}")
    matrix = np.array(rows)
    if not np.all(np.isfinite(matrix)):
        raise MfeatParseError(f"{name}: non-finite values present")
    matrix.setflags(write=False)
    return FeatureSet(name, matrix)


def _is_float(token):
    try:
        float(token)
    except ValueError:
        return False
    return True


def format_mfeat(fs):
    """Serialise a feature set in the whitespace-separated mfeat layout."""
    return "".join(" ".join(repr(float(v)) for v in row) + "\n" for row in fs.matrix)


# -- cache ------------------------------------------------------------------


def _sha256(data):
    return hashlib.sha256(data).hexdigest()


def _cache_path(cache_dir, name):
    return Path(cache_dir) / f"mfeat-{name}"


def _read_index(cache_dir):
    index = {}
    path = Path(cache_dir) / INDEX_NAME
    if path.exists():
        for line in path.read_text().splitlines():
            parts = line.split()
            if len(parts) == 4:
                name, url, length, digest = parts
                index[name] = (url, int(length), digest)
    return index


def _write_index_record(cache_dir, name, url, data):
    # callers hold the index lock
    index = _read_index(cache_dir)
    index[name] = (url, len(data), _sha256(data))
    lines = [f"{n} {u} {l} {d}\n" for n, (u, l, d) in sorted(index.items())]
    _atomic_write(Path(cache_dir) / INDEX_NAME, "".join(lines).encode())


def _atomic_write(path, data):
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".part")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _verify(cache_dir, name, data):
    record = _read_index(cache_dir).get(name)
    if record is None:
        return False
    _, length, digest = record
    if len(data) != length or _sha256(data) != digest:
        raise IntegrityError(
            f"cached file {_cache_path(cache_dir, name)} does not match its index record"
        )
    return True


def install(name, raw_text, cache_dir, source):
    """Validate ``raw_text`` and store it in the cache with an index record."""
    _check_name(name)
    parse_mfeat(name, raw_text)
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    data = raw_text.encode()
    with FileLock(str(cache_dir / f".mfeat-{name}.lock")):
        _atomic_write(_cache_path(cache_dir, name), data)
        with FileLock(str(cache_dir / ".index.lock")):
            _write_index_record(cache_dir, name, source, data)
    return _cache_path(cache_dir, name)


def fetch(name, cache_dir, base_url=DEFAULT_BASE_URL, timeout=60):
    """Return the raw text of one mfeat file, downloading it if not cached.

    A cached copy is checked against its index record.  ``base_url`` may be
    any URL urllib understands, including ``file://``.

    Raises
    ------
    FetchError
        Download failed and nothing usable is cached.
    IntegrityError
        The cached file does not match its recorded length and checksum.
    """
    _check_name(name)
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    path = _cache_path(cache_dir, name)
    with FileLock(str(cache_dir / f".mfeat-{name}.lock")):
        if path.exists():
            data = path.read_bytes()
            if _verify(cache_dir, name, data):
                return data.decode()
            log.info("%s has no index record; downloading again", path)
        url = f"{base_url.rstrip('/')}/mfeat-{FEATURE_SETS[name][0]}"
        log.info("downloading %s", url)
        try:
            with urllib.request.urlopen(url, timeout=timeout) as resp:
                data = resp.read()
        except (urllib.error.URLError, OSError, ValueError) as exc:
            raise FetchError(f"could not download mfeat-{name} from {url}: {exc}") from exc
        text = data.decode()
        parse_mfeat(name, text)
        _atomic_write(path, data)
        with FileLock(str(cache_dir / ".index.lock")):
            _write_index_record(cache_dir, name, url, data)
    return text


def load(name, cache_dir, base_url=DEFAULT_BASE_URL):
    return parse_mfeat(name, fetch(name, cache_dir, base_url))


def load_all(cache_dir, base_url=DEFAULT_BASE_URL, names=None):
    return {n: load(n, cache_dir, base_url) for n in (names or FEATURE_SETS)}


# -- local mirrors ----------------------------------------------------------


def _labelled_csv_to_mfeat(name, text):
    """Convert a CSV mirror (header row, trailing label column) to mfeat text.

    The numeric tokens are copied verbatim; labels must follow the 200-row
    class blocks.
    """
    lines = [l for l in text.splitlines() if l.strip()]
    out = []
    for i, line in enumerate(lines[1:]):
        fields = [f.strip() for f in line.split(",")]
        label = float(fields[-1])
        if label != i // ROWS_PER_CLASS:
            raise MfeatParseError(
                f"{name}: CSV row {i + 1} has label {fields[-1]}, expected {i // ROWS_PER_CLASS}"
            )
        out.append(" ".join(fields[:-1]))
    return "\n".join(out) + "\n"


def import_directory(directory, cache_dir, names=None):
    """Install mfeat files from a local directory into the cache.

    Accepts the original files (``mfeat-fou`` ...) or CSV copies with a
    header row and a trailing label column (``mfeat-fou.csv`` ...).
    Returns the list of installed names.
    """
    directory = Path(directory)
    installed = []
    for name in names or FEATURE_SETS:
        _check_name(name)
        suffix = FEATURE_SETS[name][0]
        plain = directory / f"mfeat-{suffix}"
        csv = directory / f"mfeat-{suffix}.csv"
        if plain.exists():
            text = plain.read_text()
            source = plain.resolve().as_uri()
        elif csv.exists():
            text = _labelled_csv_to_mfeat(name, csv.read_text())
            source = csv.resolve().as_uri()
        else:
            raise FetchError(f"no mfeat-{suffix} or mfeat-{suffix}.csv in {directory}")
        install(name, text, cache_dir, source)
        installed.append(name)
    return installed


def find_mvlearn_mirror():
    """Directory of the mfeat CSV copies bundled with ``mvlearn``, or None.

    The package is located without being imported.
    """
    spec = importlib.util.find_spec("mvlearn")
    if spec is None or not spec.submodule_search_locations:
        return None
    for base in spec.submodule_search_locations:
        d = Path(base) / "datasets" / "UCImultifeature"
        if d.is_dir():
            return d
    return None


# -- splitting --------------------------------------------------------------


def split_indices(spec):
    """Row indices ``(train, test)``; a function of ``spec`` alone.

    Because every feature set uses the same rows, the same spec selects the
    same images in all of them.
    """
    rng = None if spec.seed is None else np.random.default_rng(spec.seed)
    train, test = [], []
    for c in range(N_CLASSES):
        block = np.arange(c * ROWS_PER_CLASS, (c + 1) * ROWS_PER_CLASS)
        if rng is not None:
            block = rng.permutation(block)
        train.append(np.sort(block[: spec.train_per_class]))
        test.append(np.sort(block[spec.train_per_class :]))
    return np.concatenate(train), np.concatenate(test)


def split(fs, spec=SplitSpec()):
    train_idx, test_idx = split_indices(spec)
    labels = fs.labels
    return (
        LabeledMatrix(fs.matrix[train_idx], labels[train_idx], train_idx),
        LabeledMatrix(fs.matrix[test_idx], labels[test_idx], test_idx),
    )
