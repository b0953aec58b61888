import json

import pytest

from mfgsim import library
from mfgsim.errors import CorruptManifest, HashMismatch, NotFound


def test_store_then_load_identity(tmp_path):
    item = library.store(tmp_path, "model", "pilot", "payload v1\n")
    assert item.version == 1
    loaded = library.load(tmp_path, "model", "pilot")
    assert loaded.payload == "payload v1\n"
    assert loaded.content_hash == item.content_hash


def test_identical_payload_deduplicates(tmp_path):
    first = library.store(tmp_path, "model", "pilot", "same\n")
    second = library.store(tmp_path, "model", "pilot", "same\n")
    assert second.version == first.version == 1
    assert len(library.catalog(tmp_path)) == 1


def test_edit_bumps_version_gapless(tmp_path):
    for i in range(1, 4):
        item = library.store(tmp_path, "model", "pilot", f"rev {i}\n")
        assert item.version == i
    versions = [e.version for e in library.catalog(tmp_path, "model")]
    assert versions == [1, 2, 3]
    assert library.load(tmp_path, "model", "pilot").version == 3
    assert library.load(tmp_path, "model", "pilot", version=2).payload == "rev 2\n"


def test_load_missing(tmp_path):
    with pytest.raises(NotFound):
        library.load(tmp_path, "model", "ghost")
    library.store(tmp_path, "model", "pilot", "x")
    with pytest.raises(NotFound):
        library.load(tmp_path, "model", "pilot", version=9)


def test_tampered_payload_detected(tmp_path):
    library.store(tmp_path, "result", "run42", "trace data\n")
    payload_file = tmp_path / "result" / "run42" / "1.payload"
    payload_file.write_text("tampered\n", encoding="utf-8")
    with pytest.raises(HashMismatch):
        library.load(tmp_path, "result", "run42")


def test_catalog_ordering_and_kind_filter(tmp_path):
    library.store(tmp_path, "model", "beta", "b")
    library.store(tmp_path, "conceptualization", "alpha", "a")
    library.store(tmp_path, "model", "alpha", "a")
    rows = library.catalog(tmp_path)
    assert [(r.kind, r.name) for r in rows] == [
        ("conceptualization", "alpha"), ("model", "alpha"), ("model", "beta")]
    only = library.catalog(tmp_path, "model")
    assert {r.kind for r in only} == {"model"}
    assert library.catalog(tmp_path / "nothing") == ()


def test_unknown_kind_rejected(tmp_path):
    with pytest.raises(ValueError):
        library.store(tmp_path, "blob", "x", "y")


def test_corrupt_manifest_reported(tmp_path):
    library.store(tmp_path, "model", "pilot", "x")
    (tmp_path / "manifest.json").write_text("{not json", encoding="utf-8")
    with pytest.raises(CorruptManifest):
        library.load(tmp_path, "model", "pilot")


def test_crash_between_payload_and_manifest_write(tmp_path, monkeypatch):
    # first store succeeds; the second dies after the payload hits disk but
    # before the manifest is replaced
    library.store(tmp_path, "model", "pilot", "v1")

    real_write = library._write_manifest

    def explode(root, data):
        raise KeyboardInterrupt("simulated crash")

    monkeypatch.setattr(library, "_write_manifest", explode)
    with pytest.raises(KeyboardInterrupt):
        library.store(tmp_path, "model", "pilot", "v2")
    monkeypatch.setattr(library, "_write_manifest", real_write)

    # orphan payload exists, but the library reads at the previous state
    assert (tmp_path / "model" / "pilot" / "2.payload").exists()
    assert library.load(tmp_path, "model", "pilot").payload == "v1"
    assert [e.version for e in library.catalog(tmp_path)] == [1]

    # the next store overwrites the orphan and lands cleanly as version 2
    item = library.store(tmp_path, "model", "pilot", "v2 final")
    assert item.version == 2
    assert library.load(tmp_path, "model", "pilot").payload == "v2 final"


def test_manifest_layout_documented_shape(tmp_path):
    library.store(tmp_path, "model", "pilot", "x")
    manifest = json.loads((tmp_path / "manifest.json").read_text(encoding="utf-8"))
    entry = manifest["items"][0]
    assert set(entry) == {"kind", "name", "version", "content_hash", "created_at"}
    assert (tmp_path / "model" / "pilot" / "1.payload").exists()
