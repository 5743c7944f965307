"""Location and integrity checking of the pinned data files.

The directory defaults to the package's ``data/`` folder and can be moved
with the ``STYLO_DATA_DIR`` environment variable.  Whatever directory is
used must carry a ``SHA256SUMS`` file covering every file read from it.
"""

import functools
import os
from pathlib import Path

from ._util import sha256_file
from .errors import DataFileError

STOPWORD_COUNT = 125


def data_dir() -> Path:
    override = os.environ.get("STYLO_DATA_DIR")
    if override:
        return Path(override)
    return Path(__file__).resolve().parent / "data"


def _checksums(directory: Path) -> dict[str, str]:
    sums_path = directory / "SHA256SUMS"
    if not sums_path.is_file():
        raise DataFileError(f"no SHA256SUMS in data directory {directory}")
    sums = {}
    for line in sums_path.read_text().splitlines():
        if line.strip():
            digest, name = line.split(maxsplit=1)
            sums[name.strip()] = digest
    return sums


def data_path(name: str) -> Path:
    """Return the path of a verified data file."""
    directory = data_dir()
    path = directory / name
    if not path.is_file():
        raise DataFileError(f"missing data file {path}")
    expected = _checksums(directory).get(name)
    if expected is None:
        raise DataFileError(f"{name} is not listed in {directory / 'SHA256SUMS'}")
    actual = sha256_file(path)
    if actual != expected:
        raise DataFileError(f"checksum mismatch for {path}: {actual} != {expected}")
    return path


@functools.lru_cache(maxsize=None)
def _stopwords_from(directory: str) -> tuple[str, ...]:
    words = tuple(
        w.strip().lower()
        for w in data_path("stopwords.txt").read_text().splitlines()
        if w.strip()
    )
    if len(words) != STOPWORD_COUNT or len(set(words)) != STOPWORD_COUNT:
        raise DataFileError(
            f"stop-word list must hold exactly {STOPWORD_COUNT} distinct words, got {len(words)}"
        )
    return words


def load_stopwords() -> tuple[str, ...]:
    return _stopwords_from(str(data_dir()))


def load_tsv(name: str) -> list[tuple[str, str]]:
    rows = []
    for line in data_path(name).read_text(encoding="utf-8").splitlines():
        if line and not line.startswith("#"):
            key, value = line.split("\t")
            rows.append((key, value))
    return rows
