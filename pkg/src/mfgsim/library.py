"""Versioned on-disk library for primitive sets, conceptualizations, models,
and simulation results.

Layout: ``<root>/<kind>/<name>/<version>.payload`` plus ``<root>/manifest.json``.
The manifest is the single source of truth; payload files are written and
fsynced before the manifest is atomically replaced, so a crash between the
two writes leaves the library readable at its previous state. Writers take
an advisory lock file; readers are lock-free.
"""

from __future__ import annotations

import fcntl
import hashlib
import json
import os
import time
from dataclasses import dataclass
from pathlib import Path

from .errors import CorruptManifest, HashMismatch, NotFound

KINDS = ("primitive-set", "conceptualization", "model", "result")

_MANIFEST = "manifest.json"
_LOCK = ".lock"


@dataclass(frozen=True)
class LibraryItem:
    kind: str
    name: str
    version: int
    content_hash: str
    payload: str
    created_at: float


def _digest(payload: str) -> str:
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def _payload_path(root: Path, kind: str, name: str, version: int) -> Path:
    return root / kind / name / f"{version}.payload"


def _read_manifest(root: Path) -> dict:
    path = root / _MANIFEST
    if not path.exists():
        return {"items": []}
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise CorruptManifest(f"cannot read manifest at {path}: {exc}") from None
    if not isinstance(data, dict) or not isinstance(data.get("items"), list):
        raise CorruptManifest(f"manifest at {path} has the wrong shape")
    return data


def _write_manifest(root: Path, data: dict) -> None:
    path = root / _MANIFEST
    tmp = root / (_MANIFEST + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def _check_kind(kind: str) -> None:
    if kind not in KINDS:
        raise ValueError(f"unknown library kind {kind!r}; expected one of {KINDS}")


def store(root: str | Path, kind: str, name: str, payload: str) -> LibraryItem:
    """File a payload under (kind, name). Versions are gapless from 1;
    storing bytes identical to the latest version returns that version
    instead of creating a new one."""
    _check_kind(kind)
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    with open(root / _LOCK, "w") as lock:
        fcntl.flock(lock, fcntl.LOCK_EX)
        try:
            manifest = _read_manifest(root)
            entries = [e for e in manifest["items"]
                       if e["kind"] == kind and e["name"] == name]
            digest = _digest(payload)
            if entries:
                latest = max(entries, key=lambda e: e["version"])
                if latest["content_hash"] == digest:
                    return LibraryItem(kind, name, latest["version"], digest,
                                       payload, latest["created_at"])
                version = latest["version"] + 1
            else:
                version = 1
            path = _payload_path(root, kind, name, version)
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(payload)
                fh.flush()
                os.fsync(fh.fileno())
            created = time.time()
            manifest["items"].append({
                "kind": kind,
                "name": name,
                "version": version,
                "content_hash": digest,
                "created_at": created,
            })
            _write_manifest(root, manifest)
            return LibraryItem(kind, name, version, digest, payload, created)
        finally:
            fcntl.flock(lock, fcntl.LOCK_UN)


def load(root: str | Path, kind: str, name: str,
         version: int | None = None) -> LibraryItem:
    """Fetch an item (latest version when none is given); the payload hash
    is re-verified on every read."""
    _check_kind(kind)
    root = Path(root)
    manifest = _read_manifest(root)
    entries = [e for e in manifest["items"]
               if e["kind"] == kind and e["name"] == name]
    if version is not None:
        entries = [e for e in entries if e["version"] == version]
    if not entries:
        suffix = f" version {version}" if version is not None else ""
        raise NotFound(f"no library item {kind}/{name}{suffix}")
    entry = max(entries, key=lambda e: e["version"])
    path = _payload_path(root, kind, name, entry["version"])
    try:
        payload = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise NotFound(f"payload missing for {kind}/{name} v{entry['version']}: {exc}") from None
    if _digest(payload) != entry["content_hash"]:
        raise HashMismatch(
            f"payload for {kind}/{name} v{entry['version']} does not match its "
            f"recorded hash; the file is corrupt"
        )
    return LibraryItem(kind, name, entry["version"], entry["content_hash"],
                       payload, entry["created_at"])


@dataclass(frozen=True)
class CatalogEntry:
    kind: str
    name: str
    version: int
    content_hash: str


def catalog(root: str | Path, kind: str | None = None) -> tuple[CatalogEntry, ...]:
    """Deterministic listing ordered by (kind, name, version)."""
    if kind is not None:
        _check_kind(kind)
    root = Path(root)
    manifest = _read_manifest(root)
    rows = [
        CatalogEntry(e["kind"], e["name"], e["version"], e["content_hash"])
        for e in manifest["items"]
        if kind is None or e["kind"] == kind
    ]
    rows.sort(key=lambda r: (r.kind, r.name, r.version))
    return tuple(rows)
