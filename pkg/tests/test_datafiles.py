import hashlib
import shutil

import pytest

from stylo import datafiles
from stylo._util import canonical_json, derive_seed
from stylo.errors import DataFileError
from stylo.textproc import pos_tag


def test_packaged_files_verify():
    for name in ("stopwords.txt", "lexicon.tsv", "suffixes.tsv"):
        assert datafiles.data_path(name).is_file()


def copy_data(tmp_path):
    target = tmp_path / "data"
    shutil.copytree(datafiles.data_dir(), target)
    return target


def test_env_override_is_used(tmp_path, monkeypatch):
    target = copy_data(tmp_path)
    # swap one stop word and re-pin the checksum
    words = (target / "stopwords.txt").read_text().splitlines()
    words[words.index("the")] = "thee"
    (target / "stopwords.txt").write_text("\n".join(words) + "\n")
    sums = [
        f"{hashlib.sha256((target / n).read_bytes()).hexdigest()}  {n}"
        for n in ("stopwords.txt", "lexicon.tsv", "suffixes.tsv")
    ]
    (target / "SHA256SUMS").write_text("\n".join(sums) + "\n")
    monkeypatch.setenv("STYLO_DATA_DIR", str(target))
    assert "thee" in datafiles.load_stopwords() and "the" not in datafiles.load_stopwords()


def test_checksum_mismatch_detected(tmp_path, monkeypatch):
    target = copy_data(tmp_path)
    with open(target / "lexicon.tsv", "a") as fh:
        fh.write("zzz\tNN\n")
    monkeypatch.setenv("STYLO_DATA_DIR", str(target))
    with pytest.raises(DataFileError, match="checksum"):
        datafiles.load_tsv("lexicon.tsv")


def test_missing_sums_file(tmp_path, monkeypatch):
    target = copy_data(tmp_path)
    (target / "SHA256SUMS").unlink()
    monkeypatch.setenv("STYLO_DATA_DIR", str(target))
    with pytest.raises(DataFileError):
        datafiles.data_path("suffixes.tsv")


def test_tagger_follows_data_dir(tmp_path, monkeypatch):
    target = copy_data(tmp_path)
    with open(target / "lexicon.tsv", "a") as fh:
        fh.write("florp\tVB\n")
    lines = [l for l in (target / "SHA256SUMS").read_text().splitlines() if not l.endswith("lexicon.tsv")]
    lines.append(f"{hashlib.sha256((target / 'lexicon.tsv').read_bytes()).hexdigest()}  lexicon.tsv")
    (target / "SHA256SUMS").write_text("\n".join(lines) + "\n")
    assert pos_tag(["florp"]) == ["NN"]
    monkeypatch.setenv("STYLO_DATA_DIR", str(target))
    assert pos_tag(["florp"]) == ["VB"]


def test_derive_seed_stable_and_distinct():
    assert derive_seed(7, "split") == derive_seed(7, "split")
    assert len({derive_seed(7, s) for s in ("split", "balance", "train", "curve")}) == 4
    assert derive_seed(7, "split") != derive_seed(8, "split")
    assert 0 <= derive_seed(123, "x") < 2**63


def test_canonical_json():
    assert canonical_json({"b": 1, "a": [1.5, "é"]}) == '{"a":[1.5,"\\u00e9"],"b":1}'
