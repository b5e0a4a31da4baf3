"""Load and write data-lake metadata snapshots (catalog-agnostic JSON format).

Format version 1::

    {"format_version": 1, "captured_at": <int>,
     "databases": [{"database_id": str, "used_quota": int, "total_quota": int,
       "tables": [{"database": str, "name": str, "created_at": int,
         "last_write_at": int, "is_partitioned": bool,
         "partitions": {"<key>": [{"file_id": str, "size_bytes": int,
                                   "created_at": int}]}}]}]}

Unpartitioned tables use the single partition key ``"__default"``.
"""

from __future__ import annotations

import io
import json
import os
from collections.abc import Iterable
from pathlib import Path
from typing import IO, Union

from lakecompact.errors import ParseError, UnsupportedVersion, ValidationError
from lakecompact.model import (
    DEFAULT_PARTITION,
    DatabaseState,
    FileRecord,
    SnapshotDocument,
    TableId,
    TableState,
    check_identifier,
)
from lakecompact.serde import Reader, canonical_dumps

__all__ = [
    "SUPPORTED_VERSIONS",
    "SnapshotDocument",
    "load_snapshot",
    "parse_snapshot",
    "snapshot_from_dict",
    "snapshot_to_dict",
    "write_snapshot",
]

SUPPORTED_VERSIONS = frozenset({1})

Source = Union[str, os.PathLike, bytes, IO]


def _read_source(source: Source) -> str:
    if isinstance(source, bytes):
        return source.decode("utf-8")
    if isinstance(source, (str, os.PathLike)):
        return Path(source).read_text(encoding="utf-8")
    data = source.read()
    return data.decode("utf-8") if isinstance(data, bytes) else data


def load_snapshot(source: Source, *, lenient: bool = False) -> SnapshotDocument:
    """Read a snapshot from a path, raw bytes, or an open stream and validate it."""
    return parse_snapshot(_read_source(source), lenient=lenient)


def parse_snapshot(text: str, *, lenient: bool = False) -> SnapshotDocument:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON: {exc.msg}", line=exc.lineno, column=exc.colno) from None
    return snapshot_from_dict(obj, lenient=lenient)


def _rebase(exc: ValidationError, prefix: str) -> ValidationError:
    path = f"{prefix}.{exc.path}" if exc.path else prefix
    return ValidationError(path, exc.message)


def _load_file(r: Reader, partition_key: str | None) -> FileRecord:
    rec = FileRecord(
        file_id=r.str("file_id"),
        size_bytes=r.int("size_bytes", minimum=0),
        created_at=r.int("created_at"),
        partition_key=partition_key,
    )
    if not rec.file_id:
        r.fail("file_id", "must be non-empty")
    r.finish()
    return rec


def _load_table(r: Reader, database_id: str) -> TableState:
    database = r.str("database")
    name = r.str("name")
    check_identifier(database, r._join("database"))
    check_identifier(name, r._join("name"))
    if database != database_id:
        r.fail("database", f"table lists database {database!r} but is nested under {database_id!r}")
    is_partitioned = r.bool("is_partitioned")
    parts_r = r.child("partitions", r.mapping("partitions"))
    partitions: dict[str, list[FileRecord]] = {}
    for key, files in parts_r.obj.items():
        parts_r.raw(key)
        if not isinstance(files, list):
            parts_r.fail(key, "expected an array of files")
        pkey = None if key == DEFAULT_PARTITION else key
        partitions[key] = [
            _load_file(parts_r.child(f"{key}[{i}]", f), pkey) for i, f in enumerate(files)
        ]
    created_at = r.int("created_at")
    last_write_at = r.int("last_write_at")
    r.finish()
    try:
        return TableState(
            table_id=TableId(database, name),
            created_at=created_at,
            is_partitioned=is_partitioned,
            partitions=partitions,
            last_write_at=last_write_at,
        )
    except ValidationError as exc:
        raise _rebase(exc, r.path) from None


def _load_database(r: Reader) -> DatabaseState:
    database_id = r.str("database_id")
    check_identifier(database_id, r._join("database_id"))
    used = r.int("used_quota", minimum=0)
    total = r.int("total_quota")
    if total <= 0:
        r.fail("total_quota", f"must be > 0, got {total}")
    tables = [
        _load_table(r.child(f"tables[{i}]", t), database_id) for i, t in enumerate(r.list("tables"))
    ]
    r.finish()
    try:
        return DatabaseState(database_id, tuple(tables), used, total)
    except ValidationError as exc:
        raise _rebase(exc, r.path) from None


def snapshot_from_dict(obj: object, *, lenient: bool = False) -> SnapshotDocument:
    r = Reader(obj, "", lenient=lenient)
    version = r.int("format_version")
    if version not in SUPPORTED_VERSIONS:
        raise UnsupportedVersion(f"format_version {version} not supported (supported: {sorted(SUPPORTED_VERSIONS)})")
    captured_at = r.int("captured_at")
    dbs = [_load_database(r.child(f"databases[{i}]", d)) for i, d in enumerate(r.list("databases"))]
    r.finish()
    return SnapshotDocument(version, captured_at, tuple(dbs))


def _table_to_dict(table: TableState) -> dict:
    return {
        "database": table.table_id.database,
        "name": table.table_id.name,
        "created_at": table.created_at,
        "last_write_at": table.last_write_at,
        "is_partitioned": table.is_partitioned,
        "partitions": {
            key: [
                {"file_id": f.file_id, "size_bytes": f.size_bytes, "created_at": f.created_at}
                for f in files
            ]
            for key, files in table.partitions.items()
        },
    }


def snapshot_to_dict(doc: SnapshotDocument) -> dict:
    return {
        "format_version": doc.format_version,
        "captured_at": doc.captured_at,
        "databases": [
            {
                "database_id": db.database_id,
                "used_quota": db.used_quota,
                "total_quota": db.total_quota,
                "tables": [_table_to_dict(t) for t in db.tables],
            }
            for db in doc.databases
        ],
    }


def write_snapshot(doc: SnapshotDocument, sink: str | os.PathLike | IO | None = None) -> bytes:
    """Serialize canonically; also write to ``sink`` (path or binary/text stream) if given."""
    data = canonical_dumps(snapshot_to_dict(doc))
    if sink is None:
        return data
    if isinstance(sink, (str, os.PathLike)):
        Path(sink).write_bytes(data)
    elif isinstance(sink, io.TextIOBase):
        sink.write(data.decode("utf-8"))
    else:
        sink.write(data)
    return data


def build_snapshot(captured_at: int, databases: Iterable[DatabaseState]) -> SnapshotDocument:
    return SnapshotDocument(1, captured_at, tuple(databases))
