"""Persistent deduplicating result store.

File layout (UTF-8 text, one JSON document per line)::

    SRURGS-STORE 1
    {"meta": {...}}
    {"key": "...", "params": [...], "r2": ..., "seen": ...}
    ...

Writes append a full record line; the last line for a key wins on load.
:meth:`ResultStore.compact` rewrites the file with one line per key in sorted
order, so a compacted store is byte-identical for identical contents.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

from srurgs.errors import MergeError, StoreError

MAGIC = "SRURGS-STORE"
FORMAT_VERSION = 1


@dataclass
class ResultRecord:
    key: str
    params: list[float]
    r2: float
    times_seen: int = 1

    def to_json(self) -> str:
        return json.dumps({"key": self.key, "params": self.params, "r2": self.r2, "seen": self.times_seen})

    def beats(self, other: ResultRecord) -> bool:
        """Strict ordering used when two fits of one equation compete."""
        return (self.r2, self.params) > (other.r2, other.params)


@dataclass
class ResultStore:
    path: Path | None = None
    metadata: dict = field(default_factory=dict)
    records: dict[str, ResultRecord] = field(default_factory=dict)

    def __post_init__(self):
        self.metadata.setdefault("space_hash", None)
        self.metadata.setdefault("iterations", 0)
        self.metadata.setdefault("discarded", 0)
        self._handle = None

    # -- persistence -------------------------------------------------------
    @classmethod
    def open(cls, path, space_hash: str | None = None) -> ResultStore:
        """Open ``path``, creating an empty store when it does not exist."""
        path = Path(path)
        if not path.exists():
            store = cls(path=path, metadata={"space_hash": space_hash})
            store.compact()
            return store
        store = cls.load(path)
        if space_hash is not None:
            if store.metadata.get("space_hash") not in (None, space_hash):
                raise StoreError(f"{path}: store belongs to a different search space")
            store.metadata["space_hash"] = space_hash
        return store

    @classmethod
    def load(cls, path) -> ResultStore:
        path = Path(path)
        try:
            lines = path.read_text(encoding="utf-8").splitlines()
        except (OSError, UnicodeDecodeError) as exc:
            raise StoreError(f"{path}: unreadable store ({exc})") from None
        if not lines or lines[0].split() != [MAGIC, str(FORMAT_VERSION)]:
            raise StoreError(f"{path}: not a version {FORMAT_VERSION} result store")
        store = cls(path=path)
        for line_no, line in enumerate(lines[1:], start=2):
            if not line.strip():
                continue
            try:
                doc = json.loads(line)
                if "meta" in doc:
                    store.metadata.update(doc["meta"])
                else:
                    store.records[doc["key"]] = ResultRecord(
                        doc["key"], [float(v) for v in doc["params"]], float(doc["r2"]), int(doc["seen"])
                    )
            except (ValueError, KeyError, TypeError) as exc:
                raise StoreError(f"{path}: corrupt line {line_no} ({exc})") from None
        return store

    def _append(self, line: str):
        if self.path is None:
            return
        if self._handle is None:
            self._handle = self.path.open("a", encoding="utf-8")
        self._handle.write(line + "\n")

    def save_metadata(self):
        self._append(json.dumps({"meta": self.metadata}, sort_keys=True))

    def compact(self, path=None):
        """Rewrite the store (or write it to ``path``) with one sorted line per key."""
        if path is not None:
            self.path = Path(path)
        if self.path is None:
            return
        self.close()
        lines = [f"{MAGIC} {FORMAT_VERSION}", json.dumps({"meta": self.metadata}, sort_keys=True)]
        lines.extend(self.records[k].to_json() for k in sorted(self.records))
        tmp = self.path.with_name(self.path.name + ".tmp")
        tmp.write_text("\n".join(lines) + "\n", encoding="utf-8")
        os.replace(tmp, self.path)

    def close(self):
        if self._handle is not None:
            self._handle.close()
            self._handle = None

    # -- mapping ------------------------------------------------------------
    def __len__(self):
        return len(self.records)

    def __contains__(self, key):
        return key in self.records

    def __iter__(self):
        return iter(self.records.values())

    def get(self, key: str) -> ResultRecord | None:
        return self.records.get(key)

    def keys(self):
        return self.records.keys()

    def upsert(self, key: str, params, r2: float, seen: int = 1) -> ResultRecord:
        """Add a fit of ``key``; keeps the best R^2 and accumulates times_seen."""
        candidate = ResultRecord(key, [float(v) for v in params], float(r2), seen)
        current = self.records.get(key)
        if current is None:
            record = candidate
        else:
            record = candidate if candidate.beats(current) else current
            record = ResultRecord(record.key, record.params, record.r2, current.times_seen + seen)
        self.records[key] = record
        self._append(record.to_json())
        return record

    def bump(self, key: str) -> ResultRecord:
        record = self.records[key]
        record.times_seen += 1
        self._append(record.to_json())
        return record

    def best(self) -> ResultRecord | None:
        ranked = top_results(self, 1)
        return ranked[0] if ranked else None

    def best_r2(self) -> float:
        record = self.best()
        return record.r2 if record is not None else -math.inf

    def contents(self) -> tuple:
        """Hashable snapshot of the records (for equality checks)."""
        return tuple((k, tuple(r.params), r.r2, r.times_seen) for k, r in sorted(self.records.items()))


def merge_stores(a: ResultStore, b: ResultStore) -> ResultStore:
    """Union of keys; per key the better fit wins and times_seen adds up."""
    ha, hb = a.metadata.get("space_hash"), b.metadata.get("space_hash")
    if ha is not None and hb is not None and ha != hb:
        raise MergeError(f"cannot merge stores of different search spaces ({ha} vs {hb})")
    merged = ResultStore(
        metadata={
            "space_hash": ha if ha is not None else hb,
            "iterations": a.metadata.get("iterations", 0) + b.metadata.get("iterations", 0),
            "discarded": a.metadata.get("discarded", 0) + b.metadata.get("discarded", 0),
        }
    )
    for source in (a, b):
        for rec in source:
            merged.upsert(rec.key, rec.params, rec.r2, rec.times_seen)
    return merged


def _rank_key(record: ResultRecord):
    r2 = record.r2 if not math.isnan(record.r2) else -math.inf
    return (-r2, len(record.key), record.key)


def top_results(store: ResultStore, count: int | None = None) -> list[ResultRecord]:
    """Records by descending R^2; ties go to the shorter, then lexicographically smaller text."""
    ranked = sorted(store, key=_rank_key)
    return ranked if count is None else ranked[:count]
